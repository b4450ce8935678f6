use std::io::{Read, Write};
use std::path::Path;

use corrcomplete::completion::{clique_order, complete_with, merge_structure, plan_merges, resolve_root};
use corrcomplete::graph::{self, build_clique_tree, build_pattern_graph, maximal_cliques, Chordality};
use corrcomplete::models::{
    currency_names, n_currency_pattern, xccy_pattern, ForeignParams, NCurrencyParams, XccyParams,
    XCCY_FIXTURE,
};
use corrcomplete::pattern::{pair, parse_dense, parse_partial, serialize_dense, serialize_partial};
use corrcomplete::sampling::seeded_instance;
use corrcomplete::verify::{verify_completion, RESIDUAL_TOL};
use corrcomplete::{
    CompletionOptions, DenseCorrMatrix, Error, Format, Label, PartialMatrix, RootPolicy,
    VerificationResult,
};
use serde::Serialize;

use crate::{dot, CheckArgs, CliError, Command, CompleteArgs, ExplainArgs, GenCommand, GenOutput, TOL_ENV};

type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    match cmd {
        Command::Complete(a) => complete(a, stdout),
        Command::Check(a) => check(a, stdout, stderr),
        Command::Explain(a) => explain(a, stdout),
        Command::Gen(g) => gen(g, stdout),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io_err(path))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn format_for(explicit: Option<&str>, path: &Path) -> CliResult<Format> {
    match explicit {
        Some(f) => Ok(f.parse()?),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Ok(Format::Csv),
            _ => Ok(Format::Json),
        },
    }
}

fn pivot_tol() -> CliResult<f64> {
    let default = CompletionOptions::default().pivot_tol;
    match std::env::var(TOL_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(default),
        Err(e) => Err(CliError::Usage(format!("{TOL_ENV}: {e}"))),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok(t),
            _ => Err(CliError::Usage(format!(
                "{TOL_ENV} must be a positive number, got {s:?}"
            ))),
        },
    }
}

fn root_policy(arg: &str) -> RootPolicy {
    if arg.trim().eq_ignore_ascii_case("auto") {
        RootPolicy::LargestClique
    } else {
        RootPolicy::Explicit(arg.split(',').map(|s| s.trim().to_owned()).collect())
    }
}

fn names(labels: &[Label], idx: &[usize]) -> String {
    let parts: Vec<&str> = idx.iter().map(|&i| labels[i].as_str()).collect();
    format!("{{{}}}", parts.join(", "))
}

fn complete(a: CompleteArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let in_format = format_for(a.input.format.as_deref(), &a.input.input)?;
    let out_format = match a.out_format.as_deref() {
        Some(f) => f.parse()?,
        None => in_format,
    };
    let m = parse_partial(&read_text(&a.input.input)?, in_format)?;
    let opts = CompletionOptions {
        root: root_policy(&a.root),
        pivot_tol: pivot_tol()?,
    };
    let (h, report) = complete_with(&m, &opts)?;
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_json()).map_err(io_err(p))?;
    }
    write_text(a.output.as_deref(), &serialize_dense(&h, out_format), stdout)?;
    Ok(0)
}

/// `check` output: the verification result plus how far the dense matrix
/// strays from the pattern's specified values.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    #[serde(flatten)]
    pub result: VerificationResult,
    /// Largest `|H_ij - m_ij|` over specified pairs; absent without a pattern.
    pub max_specified_deviation: Option<f64>,
}

/// Re-indexes `p` to the label order of `h`.
fn align(p: &PartialMatrix, h: &DenseCorrMatrix) -> CliResult<PartialMatrix> {
    if p.n() != h.n() || p.labels().iter().any(|l| h.label_index(l.as_str()).is_none()) {
        return Err(Error::InvalidInput("pattern and matrix have different labels".into()).into());
    }
    let pos: Vec<usize> = p
        .labels()
        .iter()
        .map(|l| h.label_index(l.as_str()).unwrap())
        .collect();
    let entries: Vec<(usize, usize, f64)> = p.specified().map(|((i, j), v)| (pos[i], pos[j], v)).collect();
    Ok(PartialMatrix::from_entries(h.labels().to_vec(), entries)?)
}

fn check(a: CheckArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let format = format_for(a.input.format.as_deref(), &a.input.input)?;
    let h = parse_dense(&read_text(&a.input.input)?, format)?;
    let (pattern, deviation) = match &a.pattern {
        Some(path) => {
            let pf = format_for(a.pattern_format.as_deref(), path)?;
            let p = align(&parse_partial(&read_text(path)?, pf)?, &h)?;
            let dev = p
                .specified()
                .map(|((i, j), v)| (h.get(i, j) - v).abs())
                .fold(0.0f64, f64::max);
            (p, Some(dev))
        }
        None => (h.to_partial()?, None),
    };
    let g = build_pattern_graph(&pattern);
    let steps = if graph::is_chordal(&g).is_chordal() {
        merge_structure(&g, RootPolicy::LargestClique)?.1
    } else {
        Vec::new()
    };
    let result = verify_completion(&h, &pattern, &steps, a.oracle)?;
    let report = CheckReport {
        result,
        max_specified_deviation: deviation,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    writeln!(stdout, "{json}").map_err(io_err(Path::new("<stdout>")))?;
    let r = &report.result;
    if !r.pd {
        let _ = writeln!(stderr, "error: matrix is not positive definite");
        return Ok(4);
    }
    if r.max_inverse_residual > RESIDUAL_TOL {
        let _ = writeln!(
            stderr,
            "error: inverse residual {:e} exceeds {:e}",
            r.max_inverse_residual, RESIDUAL_TOL
        );
        return Ok(1);
    }
    Ok(0)
}

fn explain(a: ExplainArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let format = format_for(a.input.format.as_deref(), &a.input.input)?;
    let m = parse_partial(&read_text(&a.input.input)?, format)?;
    let labels = m.labels();
    let n = m.n();
    let g = build_pattern_graph(&m);
    let mut out = String::new();
    out.push_str(&format!("variables: {n}\n"));
    out.push_str(&format!(
        "specified pairs: {} of {}\n",
        m.specified_count(),
        n * (n - 1) / 2
    ));
    let ord = match graph::is_chordal(&g) {
        Chordality::Chordal(ord) => ord,
        Chordality::NotChordal(cycle) => {
            out.push_str("chordal: no\n");
            let path: Vec<&str> = cycle.iter().map(|&v| labels[v].as_str()).collect();
            out.push_str(&format!("chordless cycle: {}\n", path.join(" - ")));
            write_text(None, &out, stdout)?;
            if let Some(p) = &a.dot {
                std::fs::write(p, dot::render(labels, &g, None)).map_err(io_err(p))?;
            }
            return Err(Error::NotChordal {
                cycle: path.iter().map(|s| s.to_string()).collect(),
            }
            .into());
        }
    };
    out.push_str("chordal: yes\n");
    let order: Vec<&str> = ord.order().iter().map(|&v| labels[v].as_str()).collect();
    out.push_str(&format!("elimination order: {}\n", order.join(", ")));
    let cliques = maximal_cliques(&g, &ord)?;
    let tree = build_clique_tree(cliques.clone());
    out.push_str("maximal cliques:\n");
    for (i, c) in cliques.iter().enumerate() {
        out.push_str(&format!("  C{i} {}\n", names(labels, c.vertices())));
    }
    out.push_str("clique tree:\n");
    if tree.edges().is_empty() {
        out.push_str("  (no edges)\n");
    }
    for e in tree.edges() {
        out.push_str(&format!(
            "  C{} -- C{}  separator {}\n",
            e.a,
            e.b,
            names(labels, &e.separator)
        ));
    }
    let root = resolve_root(&m, &cliques, &root_policy(&a.root))?;
    let steps = plan_merges(&tree, &clique_order(&tree, root));
    out.push_str(&format!("merge order (root C{root}):\n"));
    for (k, s) in steps.iter().enumerate() {
        let fill: Vec<String> = s
            .new_vertices()
            .iter()
            .flat_map(|&v| s.absorbed.iter().map(move |&u| pair(u, v)))
            .map(|(u, v)| format!("({}, {})", labels[u], labels[v]))
            .collect();
        out.push_str(&format!(
            "  {}. C{} {}  separator {}  fills {}\n",
            k + 1,
            s.clique,
            names(labels, &s.new_clique),
            names(labels, &s.separator),
            if fill.is_empty() { "nothing".to_owned() } else { fill.join(" ") }
        ));
    }
    write_text(None, &out, stdout)?;
    if let Some(p) = &a.dot {
        std::fs::write(p, dot::render(labels, &g, Some(&tree))).map_err(io_err(p))?;
    }
    Ok(0)
}

fn ncurrency_params(count: usize, file: Option<&Path>) -> CliResult<NCurrencyParams> {
    let Some(path) = file else {
        let x = XccyParams::from_slice(&XCCY_FIXTURE)?;
        return Ok(NCurrencyParams::replicated(
            count,
            x.e_nu_e,
            &ForeignParams::from_xccy(None, &x),
        ));
    };
    let mut p: NCurrencyParams = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    if p.foreign.len() == 1 && count != 1 {
        let template = p.foreign[0].clone();
        p.foreign = currency_names(count, &p.domestic)
            .into_iter()
            .map(|name| ForeignParams {
                name: Some(name),
                ..template.clone()
            })
            .collect();
    } else if p.foreign.len() != count {
        return Err(Error::InvalidInput(format!(
            "--count {count} but the params file lists {} currencies",
            p.foreign.len()
        ))
        .into());
    }
    Ok(p)
}

fn emit(m: &PartialMatrix, out: &GenOutput, stdout: &mut dyn Write) -> CliResult<i32> {
    let format: Format = out.format.parse()?;
    write_text(out.output.as_deref(), &serialize_partial(m, format), stdout)?;
    Ok(0)
}

fn gen(cmd: GenCommand, stdout: &mut dyn Write) -> CliResult<i32> {
    match cmd {
        GenCommand::Xccy { params, out } => {
            let p = XccyParams::from_slice(&params)?;
            emit(&xccy_pattern(&p)?, &out, stdout)
        }
        GenCommand::Ncurrency {
            count,
            params_file,
            out,
        } => {
            if count == 0 {
                return Err(CliError::Usage("--count must be at least 1".into()));
            }
            let p = ncurrency_params(count, params_file.as_deref())?;
            emit(&n_currency_pattern(&p)?, &out, stdout)
        }
        GenCommand::Random { n, seed, out } => {
            if n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            emit(&seeded_instance(n, seed).partial, &out, stdout)
        }
    }
}
