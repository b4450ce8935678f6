//! Cross-currency fixtures.
//!
//! The single-currency model has six variables: a domestic rate `E`, a
//! foreign rate `A`, the exchange rate `X` and a volatility driver for each
//! (`nu_E`, `nu_A`, `nu_X`). Six correlations are known: the two
//! rate/volatility pairs from the separate rate calibrations and
//! `(E,A), (E,X), (A,X), (X,nu_X)` from the cross-currency calibration.
//! The remaining nine follow in closed form.
//!
//! The N-currency model repeats the foreign block once per currency, all
//! sharing `E` and `nu_E`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix, DEFAULT_PIVOT_TOL};
use crate::pattern::{DenseCorrMatrix, Label, PartialMatrix};

/// Variable names of the single-currency model, in matrix order.
pub const XCCY_LABELS: [&str; 6] = ["E", "nu_E", "A", "nu_A", "X", "nu_X"];

/// Reference coefficients in [`XccyParams::from_slice`] order.
pub const XCCY_FIXTURE: [f64; 6] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7];

const E: usize = 0;
const NU_E: usize = 1;
const A: usize = 2;
const NU_A: usize = 3;
const X: usize = 4;
const NU_X: usize = 5;

/// The six specified coefficients of the cross-currency model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XccyParams {
    /// `(E, nu_E)`
    pub e_nu_e: f64,
    /// `(A, nu_A)`
    pub a_nu_a: f64,
    /// `(E, A)`
    pub e_a: f64,
    /// `(E, X)`
    pub e_x: f64,
    /// `(A, X)`
    pub a_x: f64,
    /// `(X, nu_X)`
    pub x_nu_x: f64,
}

impl XccyParams {
    /// From the order `(E,nu_E), (A,nu_A), (E,A), (E,X), (A,X), (X,nu_X)`.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let [e_nu_e, a_nu_a, e_a, e_x, a_x, x_nu_x] = v else {
            return Err(Error::invalid(format!("expected 6 coefficients, got {}", v.len())));
        };
        let p = Self {
            e_nu_e: *e_nu_e,
            a_nu_a: *a_nu_a,
            e_a: *e_a,
            e_x: *e_x,
            a_x: *a_x,
            x_nu_x: *x_nu_x,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.e_nu_e, self.a_nu_a, self.e_a, self.e_x, self.a_x, self.x_nu_x]
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !v.is_finite() || v.abs() >= 1.0) {
            return Err(Error::invalid("cross-currency coefficients must lie in (-1, 1)"));
        }
        triangle_pd(self.e_a, self.e_x, self.a_x, "E, A, X")
    }
}

fn triangle_pd(ab: f64, ac: f64, bc: f64, what: &str) -> Result<()> {
    let block = SymMatrix::from_rows(&[
        vec![1.0, ab, ac],
        vec![ab, 1.0, bc],
        vec![ac, bc, 1.0],
    ])?;
    linalg::cholesky(&block, DEFAULT_PIVOT_TOL)
        .map(|_| ())
        .map_err(|_| Error::invalid(format!("the {{{what}}} block is not positive definite")))
}

fn labels_of(names: &[&str]) -> Vec<Label> {
    names.iter().map(|n| Label::new(*n).expect("static label")).collect()
}

/// Partial matrix of the single-currency model: six labels, six entries.
pub fn xccy_pattern(p: &XccyParams) -> Result<PartialMatrix> {
    p.validate()?;
    PartialMatrix::from_entries(
        labels_of(&XCCY_LABELS),
        [
            (E, NU_E, p.e_nu_e),
            (A, NU_A, p.a_nu_a),
            (E, A, p.e_a),
            (E, X, p.e_x),
            (A, X, p.a_x),
            (X, NU_X, p.x_nu_x),
        ],
    )
}

/// The completed 6x6 matrix from the nine product formulas.
pub fn xccy_closed_form(p: &XccyParams) -> Result<DenseCorrMatrix> {
    p.validate()?;
    let mut h = SymMatrix::identity(6);
    h.set(E, NU_E, p.e_nu_e);
    h.set(A, NU_A, p.a_nu_a);
    h.set(E, A, p.e_a);
    h.set(E, X, p.e_x);
    h.set(A, X, p.a_x);
    h.set(X, NU_X, p.x_nu_x);

    h.set(E, NU_X, p.x_nu_x * p.e_x);
    h.set(A, NU_X, p.x_nu_x * p.a_x);
    h.set(E, NU_A, p.a_nu_a * p.e_a);
    h.set(X, NU_A, p.a_nu_a * p.a_x);
    h.set(NU_X, NU_A, p.a_nu_a * p.x_nu_x * p.a_x);
    h.set(NU_E, A, p.e_nu_e * p.e_a);
    h.set(NU_E, NU_A, p.e_nu_e * p.a_nu_a * p.e_a);
    h.set(NU_E, X, p.e_nu_e * p.e_x);
    h.set(NU_E, NU_X, p.e_nu_e * p.x_nu_x * p.e_x);
    DenseCorrMatrix::new(labels_of(&XCCY_LABELS), h)
}

/// One foreign currency `K` of the N-currency model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignParams {
    /// Currency name, e.g. `"A"`. Generated when absent.
    #[serde(default)]
    pub name: Option<String>,
    /// `(K, nu_K)`
    pub k_nu_k: f64,
    /// `(E, K)`
    pub e_k: f64,
    /// `(E, X_E_K)`
    pub e_x: f64,
    /// `(K, X_E_K)`
    pub k_x: f64,
    /// `(X_E_K, nu_X_E_K)`
    pub x_nu_x: f64,
}

impl ForeignParams {
    /// The foreign block of a single-currency parameter set.
    pub fn from_xccy(name: Option<String>, p: &XccyParams) -> Self {
        Self {
            name,
            k_nu_k: p.a_nu_a,
            e_k: p.e_a,
            e_x: p.e_x,
            k_x: p.a_x,
            x_nu_x: p.x_nu_x,
        }
    }
}

/// Domestic currency plus any number of foreign currencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NCurrencyParams {
    #[serde(default = "default_domestic")]
    pub domestic: String,
    /// `(E, nu_E)`, shared by every currency block.
    pub e_nu_e: f64,
    pub foreign: Vec<ForeignParams>,
}

fn default_domestic() -> String {
    "E".to_owned()
}

/// `A, B, C, …, Z, AA, AB, …`, skipping `skip`.
pub fn currency_names(count: usize, skip: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        let mut name = String::new();
        let mut x = k;
        loop {
            name.insert(0, (b'A' + (x % 26) as u8) as char);
            if x < 26 {
                break;
            }
            x = x / 26 - 1;
        }
        if name != skip {
            out.push(name);
        }
        k += 1;
    }
    out
}

impl NCurrencyParams {
    /// `count` copies of one foreign block, named `A, B, C, …`.
    pub fn replicated(count: usize, e_nu_e: f64, template: &ForeignParams) -> Self {
        let domestic = default_domestic();
        let foreign = currency_names(count, &domestic)
            .into_iter()
            .map(|name| ForeignParams {
                name: Some(name),
                ..template.clone()
            })
            .collect();
        Self {
            domestic,
            e_nu_e,
            foreign,
        }
    }

    /// Foreign blocks sorted by name, with generated names filled in.
    fn named_foreign(&self) -> Result<Vec<(String, ForeignParams)>> {
        let generated = currency_names(self.foreign.len(), &self.domestic);
        let mut named: Vec<(String, ForeignParams)> = self
            .foreign
            .iter()
            .zip(generated)
            .map(|(f, g)| (f.name.clone().unwrap_or(g), f.clone()))
            .collect();
        named.sort_by(|a, b| a.0.cmp(&b.0));
        for w in named.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!("currency {} listed twice", w[0].0)));
            }
        }
        if named.iter().any(|(n, _)| *n == self.domestic) {
            return Err(Error::invalid("a foreign currency has the domestic name"));
        }
        Ok(named)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.e_nu_e.is_finite() || self.e_nu_e.abs() >= 1.0 {
            return Err(Error::invalid("(E, nu_E) must lie in (-1, 1)"));
        }
        for (name, f) in self.named_foreign()? {
            let vals = [f.k_nu_k, f.e_k, f.e_x, f.k_x, f.x_nu_x];
            if vals.iter().any(|v| !v.is_finite() || v.abs() >= 1.0) {
                return Err(Error::invalid(format!("coefficients for {name} must lie in (-1, 1)")));
            }
            triangle_pd(f.e_k, f.e_x, f.k_x, &format!("E, {name}, X_E_{name}"))?;
        }
        Ok(())
    }
}

/// Label names `K, nu_K, X_E_K, nu_X_E_K` for currency `k` against
/// domestic `e`.
pub fn currency_labels(e: &str, k: &str) -> [String; 4] {
    [
        k.to_owned(),
        format!("nu_{k}"),
        format!("X_{e}_{k}"),
        format!("nu_X_{e}_{k}"),
    ]
}

/// Partial matrix of the N-currency model: `E, nu_E`, then one group of
/// four variables per currency in alphabetical order.
pub fn n_currency_pattern(p: &NCurrencyParams) -> Result<PartialMatrix> {
    p.validate()?;
    let e = p.domestic.as_str();
    let named = p.named_foreign()?;
    let mut names = vec![e.to_owned(), format!("nu_{e}")];
    let mut entries = vec![(0, 1, p.e_nu_e)];
    for (g, (name, f)) in named.iter().enumerate() {
        let base = 2 + 4 * g;
        let (k, nu_k, x, nu_x) = (base, base + 1, base + 2, base + 3);
        names.extend(currency_labels(e, name));
        entries.extend([
            (k, nu_k, f.k_nu_k),
            (0, k, f.e_k),
            (0, x, f.e_x),
            (k, x, f.k_x),
            (x, nu_x, f.x_nu_x),
        ]);
    }
    let labels = names.into_iter().map(Label::new).collect::<Result<Vec<_>>>()?;
    PartialMatrix::from_entries(labels, entries)
}
