//! Clique-tree completion.
//!
//! Cliques are absorbed one at a time in a running-intersection order. When
//! a clique `α` joins the already completed vertex set `U`, it splits into
//! the separator `Z = α ∩ U` and its new vertices `X̄ = α ∖ Z`; the rest of
//! the completed set is `Ȳ = U ∖ Z`. The unknown block between `X̄` and `Ȳ`
//! is set to
//!
//! ```text
//! W = B C^-1 D,   B = H[X̄, Z],  C = H[Z, Z],  D = H[Z, Ȳ]
//! ```
//!
//! which makes `X̄` and `Ȳ` conditionally independent given `Z`. An empty
//! separator gives `W = 0`. The result is the unique positive definite
//! completion of maximal determinant.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, Chordality, Clique, CliqueTree, PatternGraph};
use crate::linalg::{self, Matrix, SymMatrix, DEFAULT_PIVOT_TOL};
use crate::pattern::{pair, DenseCorrMatrix, Label, PartialMatrix};
use crate::verify;

/// Which clique the merge sequence starts from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RootPolicy {
    /// The largest clique, lowest index among ties.
    #[default]
    LargestClique,
    /// Clique index in the sorted clique list.
    Index(usize),
    /// The maximal clique with exactly these labels.
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionOptions {
    pub root: RootPolicy,
    /// Cholesky pivot threshold for the clique and separator blocks.
    pub pivot_tol: f64,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self {
            root: RootPolicy::default(),
            pivot_tol: DEFAULT_PIVOT_TOL,
        }
    }
}

/// One clique absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    /// Clique index in the clique tree.
    pub clique: usize,
    /// The absorbed clique (the `H_X` role).
    pub new_clique: Vec<usize>,
    /// Vertices shared with everything processed before (the `C` role).
    pub separator: Vec<usize>,
    /// Previously completed vertices outside the separator.
    pub absorbed: Vec<usize>,
    /// Entries produced by this step, keyed `(i, j)` with `i < j`.
    pub filled: Vec<((usize, usize), f64)>,
}

impl MergeStep {
    /// Vertices of the clique that were not seen before.
    pub fn new_vertices(&self) -> Vec<usize> {
        self.new_clique
            .iter()
            .copied()
            .filter(|v| !self.separator.contains(v))
            .collect()
    }
}

/// Everything `complete` learned along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionReport {
    pub labels: Vec<Label>,
    /// Filled entries `(i, j)`, `i < j`, row-major.
    pub fill_in: Vec<((usize, usize), f64)>,
    pub log_det: f64,
    pub entropy: f64,
    pub root: usize,
    pub order: Vec<usize>,
    pub steps: Vec<MergeStep>,
    pub tree: CliqueTree,
}

#[derive(Serialize)]
struct FillJson<'a> {
    row: &'a str,
    col: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct StepJson<'a> {
    clique: Vec<&'a str>,
    separator: Vec<&'a str>,
    absorbed: Vec<&'a str>,
    filled: Vec<FillJson<'a>>,
}

#[derive(Serialize)]
struct TreeEdgeJson<'a> {
    a: usize,
    b: usize,
    separator: Vec<&'a str>,
}

#[derive(Serialize)]
struct TreeJson<'a> {
    cliques: Vec<Vec<&'a str>>,
    edges: Vec<TreeEdgeJson<'a>>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    labels: Vec<&'a str>,
    fill_in: Vec<FillJson<'a>>,
    log_det: f64,
    entropy: f64,
    root: Vec<&'a str>,
    merge_order: &'a [usize],
    steps: Vec<StepJson<'a>>,
    clique_tree: TreeJson<'a>,
}

impl CompletionReport {
    fn names(&self, idx: &[usize]) -> Vec<&str> {
        idx.iter().map(|&i| self.labels[i].as_str()).collect()
    }

    fn fills<'a>(&'a self, list: &[((usize, usize), f64)]) -> Vec<FillJson<'a>> {
        list.iter()
            .map(|&((i, j), value)| FillJson {
                row: self.labels[i].as_str(),
                col: self.labels[j].as_str(),
                value,
            })
            .collect()
    }

    /// Fill-in keyed by label names.
    pub fn fill_in_by_label(&self) -> Vec<(String, String, f64)> {
        self.fill_in
            .iter()
            .map(|&((i, j), v)| (self.labels[i].to_string(), self.labels[j].to_string(), v))
            .collect()
    }

    /// Pretty-printed JSON with labels in place of indices.
    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            labels: self.labels.iter().map(Label::as_str).collect(),
            fill_in: self.fills(&self.fill_in),
            log_det: self.log_det,
            entropy: self.entropy,
            root: self.names(self.tree.cliques()[self.root].vertices()),
            merge_order: &self.order,
            steps: self
                .steps
                .iter()
                .map(|s| StepJson {
                    clique: self.names(&s.new_clique),
                    separator: self.names(&s.separator),
                    absorbed: self.names(&s.absorbed),
                    filled: self.fills(&s.filled),
                })
                .collect(),
            clique_tree: TreeJson {
                cliques: self
                    .tree
                    .cliques()
                    .iter()
                    .map(|c| self.names(c.vertices()))
                    .collect(),
                edges: self
                    .tree
                    .edges()
                    .iter()
                    .map(|e| TreeEdgeJson {
                        a: e.a,
                        b: e.b,
                        separator: self.names(&e.separator),
                    })
                    .collect(),
            },
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes to JSON");
        s.push('\n');
        s
    }
}

/// Clique visit order: breadth-first from `root` (neighbours by ascending
/// index), then each remaining component from its lowest clique index.
/// Every clique after the first of its component is adjacent in the tree
/// to an earlier one.
pub fn clique_order(t: &CliqueTree, root: usize) -> Vec<usize> {
    let k = t.cliques().len();
    let mut seen = vec![false; k];
    let mut order = Vec::with_capacity(k);
    let starts = std::iter::once(root).chain(0..k);
    for start in starts {
        if start >= k || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for &d in t.neighbors(c) {
                if !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    order
}

/// Separator, new and absorbed vertex sets for each clique in `order`,
/// with no values filled in.
pub fn plan_merges(t: &CliqueTree, order: &[usize]) -> Vec<MergeStep> {
    let n = t
        .cliques()
        .iter()
        .flat_map(|c| c.vertices().iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut done = vec![false; n];
    let mut completed: Vec<usize> = Vec::new();
    let mut steps = Vec::with_capacity(order.len());
    for &c in order {
        let clique = &t.cliques()[c];
        let separator: Vec<usize> = clique.vertices().iter().copied().filter(|&v| done[v]).collect();
        let absorbed: Vec<usize> = completed
            .iter()
            .copied()
            .filter(|v| !separator.contains(v))
            .collect();
        for &v in clique.vertices() {
            if !done[v] {
                done[v] = true;
                completed.push(v);
            }
        }
        steps.push(MergeStep {
            clique: c,
            new_clique: clique.vertices().to_vec(),
            separator,
            absorbed,
            filled: Vec::new(),
        });
    }
    steps
}

/// `W = B C^-1 D`.
fn conditional_fill(b: &Matrix, c: &SymMatrix, d: &Matrix, pivot_tol: f64) -> Result<Matrix> {
    let chol = linalg::cholesky(c, pivot_tol)?;
    Ok(b.matmul(&chol.solve(d)))
}

/// Index of the clique selected by `policy`.
pub fn resolve_root(m: &PartialMatrix, cliques: &[Clique], policy: &RootPolicy) -> Result<usize> {
    if cliques.is_empty() {
        return Err(Error::invalid("no cliques to root the tree at"));
    }
    match policy {
        RootPolicy::LargestClique => {
            let best = cliques.iter().map(Clique::len).max().unwrap_or(0);
            Ok(cliques.iter().position(|c| c.len() == best).unwrap_or(0))
        }
        RootPolicy::Index(i) if *i < cliques.len() => Ok(*i),
        RootPolicy::Index(i) => Err(Error::invalid(format!(
            "root index {i} out of range ({} cliques)",
            cliques.len()
        ))),
        RootPolicy::Explicit(names) => {
            let idx = names
                .iter()
                .map(|name| {
                    m.label_index(name.trim())
                        .ok_or_else(|| Error::invalid(format!("unknown root label {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let wanted = Clique::new(idx);
            cliques.iter().position(|c| *c == wanted).ok_or_else(|| {
                Error::invalid(format!(
                    "root {{{}}} is not a maximal clique of the pattern",
                    names.join(",")
                ))
            })
        }
    }
}

/// Completes with the default options and the given root policy.
pub fn complete(m: &PartialMatrix, root: RootPolicy) -> Result<(DenseCorrMatrix, CompletionReport)> {
    complete_with(
        m,
        &CompletionOptions {
            root,
            ..CompletionOptions::default()
        },
    )
}

/// Maximum-determinant completion of `m`.
///
/// Requires a chordal pattern and strictly positive definite clique
/// blocks. Specified entries are copied into the result unchanged.
pub fn complete_with(
    m: &PartialMatrix,
    opts: &CompletionOptions,
) -> Result<(DenseCorrMatrix, CompletionReport)> {
    let names = |idx: &[usize]| -> Vec<String> {
        idx.iter().map(|&i| m.labels()[i].to_string()).collect()
    };
    let g = graph::build_pattern_graph(m);
    let ord = match graph::is_chordal(&g) {
        Chordality::Chordal(ord) => ord,
        Chordality::NotChordal(cycle) => return Err(Error::NotChordal { cycle: names(&cycle) }),
    };
    let cliques = graph::maximal_cliques(&g, &ord)?;
    for c in &cliques {
        let block = m.block(c.vertices()).expect("maximal cliques are fully specified");
        if linalg::cholesky(&block, opts.pivot_tol).is_err() {
            return Err(Error::CliqueBlockNotPd {
                labels: names(c.vertices()),
            });
        }
    }
    let root = resolve_root(m, &cliques, &opts.root)?;
    let tree = graph::build_clique_tree(cliques);
    let order = clique_order(&tree, root);
    let mut steps = plan_merges(&tree, &order);

    let n = m.n();
    let mut h = SymMatrix::identity(n);
    for ((i, j), v) in m.specified() {
        h.set(i, j, v);
    }
    let mut fill_in = Vec::new();
    for step in &mut steps {
        let new = step.new_vertices();
        if step.separator.is_empty() || step.absorbed.is_empty() {
            // independent blocks: the coupling stays zero
            for &x in &new {
                for &y in &step.absorbed {
                    step.filled.push((pair(x, y), 0.0));
                }
            }
        } else {
            let b = h.block(&new, &step.separator);
            let c = h.principal(&step.separator);
            let d = h.block(&step.separator, &step.absorbed);
            let w = conditional_fill(&b, &c, &d, opts.pivot_tol)?;
            for (a, &x) in new.iter().enumerate() {
                for (bi, &y) in step.absorbed.iter().enumerate() {
                    debug_assert!(!m.is_specified(x, y));
                    h.set(x, y, w[(a, bi)]);
                    step.filled.push((pair(x, y), w[(a, bi)]));
                }
            }
        }
        fill_in.extend(step.filled.iter().copied());
    }
    fill_in.sort_by_key(|e| e.0);

    let dense = DenseCorrMatrix::new(m.labels().to_vec(), h)?;
    let log_det = linalg::cholesky(dense.values(), opts.pivot_tol)?.log_det();
    let report = CompletionReport {
        labels: m.labels().to_vec(),
        fill_in,
        log_det,
        entropy: verify::entropy_from_log_det(log_det, n),
        root,
        order,
        steps,
        tree,
    };
    Ok((dense, report))
}

/// Principal block of a matrix, identified by labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBlock {
    pub labels: Vec<Label>,
    pub values: SymMatrix,
}

impl LabeledBlock {
    pub fn new(labels: Vec<Label>, values: SymMatrix) -> Result<Self> {
        if labels.len() != values.dim() {
            return Err(Error::invalid("label count does not match block size"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!("duplicate label {l} in block")));
            }
        }
        Ok(Self { labels, values })
    }

    fn index_of(&self, l: &Label) -> Option<usize> {
        self.labels.iter().position(|x| x == l)
    }
}

/// Joins a completed block `acc` (over `U`) with a clique block (over `α`)
/// sharing the separator `sep = α ∩ U`.
///
/// The result is indexed by `U` followed by `α ∖ sep` in clique order. Its
/// `(α ∖ sep) × (U ∖ sep)` block is `W = B C^-1 D`; every other entry is
/// copied from the inputs. This is the building block for gluing two
/// separately calibrated models that share a sub-model.
pub fn merge_step(acc: &LabeledBlock, clique: &LabeledBlock, sep: &[Label]) -> Result<LabeledBlock> {
    let shared: Vec<&Label> = clique.labels.iter().filter(|l| acc.index_of(l).is_some()).collect();
    let sep_ok = shared.len() == sep.len() && sep.iter().all(|l| shared.contains(&l));
    if !sep_ok {
        return Err(Error::invalid("separator is not the intersection of the two blocks"));
    }
    let sep_acc: Vec<usize> = sep.iter().map(|l| acc.index_of(l).expect("checked")).collect();
    let sep_cl: Vec<usize> = sep.iter().map(|l| clique.index_of(l).expect("checked")).collect();
    for a in 0..sep.len() {
        for b in a..sep.len() {
            let left = acc.values.get(sep_acc[a], sep_acc[b]);
            let right = clique.values.get(sep_cl[a], sep_cl[b]);
            if left.to_bits() != right.to_bits() {
                return Err(Error::SeparatorMismatch {
                    row: sep[a].to_string(),
                    col: sep[b].to_string(),
                    left,
                    right,
                });
            }
        }
    }
    linalg::cholesky(&acc.values, DEFAULT_PIVOT_TOL)?;
    linalg::cholesky(&clique.values, DEFAULT_PIVOT_TOL)?;

    let new_cl: Vec<usize> = (0..clique.labels.len()).filter(|i| !sep_cl.contains(i)).collect();
    let rest_acc: Vec<usize> = (0..acc.labels.len()).filter(|i| !sep_acc.contains(i)).collect();
    let w = if sep.is_empty() {
        Matrix::zeros(new_cl.len(), rest_acc.len())
    } else {
        conditional_fill(
            &clique.values.block(&new_cl, &sep_cl),
            &clique.values.principal(&sep_cl),
            &acc.values.block(&sep_acc, &rest_acc),
            DEFAULT_PIVOT_TOL,
        )?
    };

    let nu = acc.labels.len();
    let total = nu + new_cl.len();
    let mut out = SymMatrix::identity(total);
    for i in 0..nu {
        for j in (i + 1)..nu {
            out.set(i, j, acc.values.get(i, j));
        }
    }
    // clique rows for the new vertices, against the clique itself
    let position_of_clique = |ci: usize| -> usize {
        match sep_cl.iter().position(|&s| s == ci) {
            Some(k) => sep_acc[k],
            None => nu + new_cl.iter().position(|&x| x == ci).expect("new vertex"),
        }
    };
    for (a, &ci) in new_cl.iter().enumerate() {
        for cj in 0..clique.labels.len() {
            if cj != ci {
                out.set(nu + a, position_of_clique(cj), clique.values.get(ci, cj));
            }
        }
        for (b, &r) in rest_acc.iter().enumerate() {
            out.set(nu + a, r, w[(a, b)]);
        }
    }
    let mut labels = acc.labels.clone();
    labels.extend(new_cl.iter().map(|&i| clique.labels[i].clone()));
    LabeledBlock::new(labels, out)
}

/// Completion of the pattern graph without values: handy for checks that
/// only need the merge structure.
pub fn merge_structure(g: &PatternGraph, root: RootPolicy) -> Result<(CliqueTree, Vec<MergeStep>)> {
    let (cliques, tree) = graph::analyse(g)?;
    let root = match root {
        RootPolicy::LargestClique => {
            let best = cliques.iter().map(Clique::len).max().unwrap_or(0);
            cliques.iter().position(|c| c.len() == best).unwrap_or(0)
        }
        RootPolicy::Index(i) if i < cliques.len() => i,
        _ => return Err(Error::invalid("merge_structure accepts LargestClique or a valid Index")),
    };
    let order = clique_order(&tree, root);
    let steps = plan_merges(&tree, &order);
    Ok((tree, steps))
}
