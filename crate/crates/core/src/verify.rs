//! Independent checks of a completion.
//!
//! A positive definite completion `H` of a chordal pattern has maximal
//! determinant exactly when
//!
//! * `H^-1` vanishes on every unspecified position,
//! * for every merge `(X̄, Z, Ȳ)` the Fischer bound is tight:
//!   `det H = det C · det(H_X / C) · det(H_Y / C)`,
//! * equivalently the off-diagonal block of `H / C` vanishes, i.e. `X̄` and
//!   `Ȳ` are conditionally independent given `Z`.
//!
//! [`oracle_max_det`] finds the maximizer numerically without looking at
//! cliques at all, which makes it a cross-check on the closed form.

use std::f64::consts::PI;

use serde::Serialize;

use crate::completion::MergeStep;
use crate::error::{Error, Result};
use crate::graph::PatternGraph;
use crate::linalg::{self, SymMatrix, DEFAULT_PIVOT_TOL};
use crate::pattern::{DenseCorrMatrix, PartialMatrix};

/// Residual threshold for the closed-form characterizations.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Summary of all checks on one matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationResult {
    pub pd: bool,
    /// Largest `|(H^-1)_ij|` over unspecified pairs.
    pub max_inverse_residual: f64,
    /// Largest Fischer residual over merge steps.
    pub fischer_residual: Option<f64>,
    /// Largest conditional-independence residual over merge steps.
    pub conditional_independence_residual: Option<f64>,
    /// Oracle log-det minus the checked matrix's log-det.
    pub oracle_gap: Option<f64>,
    pub log_det: Option<f64>,
    pub entropy: Option<f64>,
}

impl VerificationResult {
    /// Result for a matrix that failed the positive definiteness test.
    pub fn not_pd() -> Self {
        Self {
            pd: false,
            max_inverse_residual: f64::INFINITY,
            fischer_residual: None,
            conditional_independence_residual: None,
            oracle_gap: None,
            log_det: None,
            entropy: None,
        }
    }
}

/// `max |(H^-1)_ij|` over the non-edges of `pattern`; zero when the pattern
/// is complete.
pub fn check_inverse_zeros(h: &DenseCorrMatrix, pattern: &PatternGraph) -> Result<f64> {
    if pattern.n() != h.n() {
        return Err(Error::invalid("pattern and matrix sizes differ"));
    }
    let inv = linalg::inverse_spd(h.values())?;
    let mut worst = 0.0f64;
    for i in 0..h.n() {
        for j in (i + 1)..h.n() {
            if !pattern.has_edge(i, j) {
                worst = worst.max(inv.get(i, j).abs());
            }
        }
    }
    Ok(worst)
}

fn concat(parts: &[&[usize]]) -> Vec<usize> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn log_det_or_zero(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        Ok(0.0)
    } else {
        linalg::log_det(m)
    }
}

/// `|log det H_step - (log det C + log det H_X/C + log det H_Y/C)|` on the
/// principal block of the step's vertices.
pub fn check_fischer(h: &DenseCorrMatrix, step: &MergeStep) -> Result<f64> {
    let xbar = step.new_vertices();
    let z = &step.separator;
    let ybar = &step.absorbed;
    let values = h.values();

    let whole = log_det_or_zero(&values.principal(&concat(&[&xbar, z, ybar])))?;
    let ld_c = log_det_or_zero(&values.principal(z))?;
    let hx_c = linalg::schur_complement_on(values, &xbar, z)?;
    let hy_c = linalg::schur_complement_on(values, ybar, z)?;
    let split = ld_c + log_det_or_zero(&hx_c)? + log_det_or_zero(&hy_c)?;
    Ok((whole - split).abs())
}

/// Frobenius norm of the `X̄ × Ȳ` block of `H / C` for the step's
/// partition. Zero means `X̄` and `Ȳ` are independent given `Z`.
pub fn check_conditional_independence(h: &DenseCorrMatrix, step: &MergeStep) -> Result<f64> {
    let xbar = step.new_vertices();
    let keep = concat(&[&xbar, &step.absorbed]);
    let s = linalg::schur_complement_on(h.values(), &keep, &step.separator)?;
    let nx = xbar.len();
    let mut sum = 0.0;
    for a in 0..nx {
        for b in nx..keep.len() {
            sum += s.get(a, b) * s.get(a, b);
        }
    }
    Ok(sum.sqrt())
}

/// Differential entropy of `N(0, H)` given `log det H`:
/// `½ log det H + (n/2)(1 + log 2π)`.
pub fn entropy_from_log_det(log_det: f64, n: usize) -> f64 {
    0.5 * log_det + 0.5 * n as f64 * (1.0 + (2.0 * PI).ln())
}

pub fn entropy(h: &DenseCorrMatrix) -> Result<f64> {
    Ok(entropy_from_log_det(linalg::log_det(h.values())?, h.n()))
}

/// Settings for [`oracle_max_det_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Refuse problems with more free entries than this.
    pub max_free: usize,
    /// Stop once a full sweep moves no entry by more than this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_free: 6,
            tol: 1e-12,
            max_sweeps: 100_000,
        }
    }
}

/// Numeric maximizer of `log det` over the free entries, with default
/// options. See [`oracle_max_det_with`].
pub fn oracle_max_det(m: &PartialMatrix) -> Result<(DenseCorrMatrix, f64)> {
    oracle_max_det_with(m, &OracleOptions::default())
}

/// Coordinate ascent on the free entries.
///
/// Along one free entry `t = H_ij` the determinant is a concave quadratic;
/// with `P = H^-1` and step `δ`,
/// `det H(t + δ) / det H(t) = 1 + 2δ P_ij + δ²(P_ij² - P_ii P_jj)`,
/// maximized at `δ = P_ij / (P_ii P_jj - P_ij²)`, where `(H^-1)_ij = 0`.
///
/// The start is found by shrinking the zero-filled matrix's off-diagonals
/// by `λ ∈ {1, 0.9, …, 0}` until it is positive definite, then walking `λ`
/// back up to one while re-optimizing, so the specified entries end at
/// their true values.
pub fn oracle_max_det_with(m: &PartialMatrix, opts: &OracleOptions) -> Result<(DenseCorrMatrix, f64)> {
    let free = m.unspecified();
    if free.len() > opts.max_free {
        return Err(Error::invalid(format!(
            "oracle handles at most {} free entries, got {}",
            opts.max_free,
            free.len()
        )));
    }
    let n = m.n();
    let with_scale = |lambda: f64, free_vals: &[f64]| {
        let mut h = SymMatrix::identity(n);
        for ((i, j), v) in m.specified() {
            h.set(i, j, lambda * v);
        }
        for (&(i, j), &v) in free.iter().zip(free_vals) {
            h.set(i, j, v);
        }
        h
    };
    let is_pd = |h: &SymMatrix| linalg::cholesky(h, DEFAULT_PIVOT_TOL).is_ok();

    let free_vals = vec![0.0; free.len()];
    let mut lambda = (0..=10)
        .rev()
        .map(|k| k as f64 / 10.0)
        .find(|&l| is_pd(&with_scale(l, &free_vals)))
        .ok_or_else(|| Error::NoFeasiblePoint("zero-filled start never became PD".into()))?;

    let mut h = with_scale(lambda, &free_vals);
    ascend(&mut h, &free, opts.tol.max(1e-9), opts.max_sweeps)?;
    let mut step = 1.0 - lambda;
    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        let current: Vec<f64> = free.iter().map(|&(i, j)| h.get(i, j)).collect();
        let trial = with_scale(target, &current);
        if is_pd(&trial) {
            lambda = target;
            h = trial;
            ascend(&mut h, &free, opts.tol.max(1e-9), opts.max_sweeps)?;
            step *= 2.0;
        } else {
            step *= 0.5;
            if step < 1e-9 {
                return Err(Error::NoFeasiblePoint(format!(
                    "continuation stalled at lambda = {lambda}"
                )));
            }
        }
    }
    // specified values exactly, not lambda * v
    let current: Vec<f64> = free.iter().map(|&(i, j)| h.get(i, j)).collect();
    h = with_scale(1.0, &current);
    ascend(&mut h, &free, opts.tol, opts.max_sweeps)?;

    let log_det = linalg::log_det(&h)?;
    let dense = DenseCorrMatrix::new(m.labels().to_vec(), h)?;
    Ok((dense, log_det))
}

fn ascend(h: &mut SymMatrix, free: &[(usize, usize)], tol: f64, max_sweeps: usize) -> Result<()> {
    for _ in 0..max_sweeps {
        let mut moved = 0.0f64;
        for &(i, j) in free {
            let p = linalg::inverse_spd(h)?;
            let (pij, pii, pjj) = (p.get(i, j), p.get(i, i), p.get(j, j));
            let delta = pij / (pii * pjj - pij * pij);
            h.set(i, j, h.get(i, j) + delta);
            moved = moved.max(delta.abs());
        }
        if moved < tol {
            return Ok(());
        }
    }
    Ok(())
}

/// Runs every applicable check. `steps` come from the merge plan of the
/// pattern and may be empty; `with_oracle` also runs the numeric oracle
/// when the pattern matrix has few enough free entries.
pub fn verify_completion(
    h: &DenseCorrMatrix,
    pattern: &PartialMatrix,
    steps: &[MergeStep],
    with_oracle: bool,
) -> Result<VerificationResult> {
    let Ok(chol) = linalg::cholesky(h.values(), DEFAULT_PIVOT_TOL) else {
        return Ok(VerificationResult::not_pd());
    };
    let log_det = chol.log_det();
    let g = crate::graph::build_pattern_graph(pattern);
    let max_inverse_residual = check_inverse_zeros(h, &g)?;
    let (fischer, ci) = if steps.is_empty() {
        (None, None)
    } else {
        let mut f = 0.0f64;
        let mut c = 0.0f64;
        for s in steps {
            f = f.max(check_fischer(h, s)?);
            c = c.max(check_conditional_independence(h, s)?);
        }
        (Some(f), Some(c))
    };
    let oracle_gap = if with_oracle {
        match oracle_max_det(pattern) {
            Ok((_, best)) => Some(best - log_det),
            Err(Error::InvalidInput(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(VerificationResult {
        pd: true,
        max_inverse_residual,
        fischer_residual: fischer,
        conditional_independence_residual: ci,
        oracle_gap,
        log_det: Some(log_det),
        entropy: Some(entropy_from_log_det(log_det, h.n())),
    })
}
