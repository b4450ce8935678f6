use std::fmt::Write;

use corrcomplete::{CliqueTree, Label, PatternGraph};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn set(labels: &[Label], idx: &[usize]) -> String {
    let parts: Vec<&str> = idx.iter().map(|&i| labels[i].as_str()).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Graphviz rendering: one cluster for the pattern graph and, for chordal
/// patterns, one for the clique tree with separators as edge labels.
pub(crate) fn render(labels: &[Label], g: &PatternGraph, tree: Option<&CliqueTree>) -> String {
    let mut s = String::from("graph corrcomplete {\n");
    s.push_str("  subgraph cluster_pattern {\n    label=\"pattern\";\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(s, "    v{i} [label={}];", quote(l.as_str()));
    }
    for (i, j) in g.edges() {
        let _ = writeln!(s, "    v{i} -- v{j};");
    }
    s.push_str("  }\n");
    if let Some(t) = tree {
        s.push_str("  subgraph cluster_cliques {\n    label=\"clique tree\";\n    node [shape=box];\n");
        for (i, c) in t.cliques().iter().enumerate() {
            let _ = writeln!(s, "    c{i} [label={}];", quote(&set(labels, c.vertices())));
        }
        for e in t.edges() {
            let _ = writeln!(s, "    c{} -- c{} [label={}];", e.a, e.b, quote(&set(labels, &e.separator)));
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}
