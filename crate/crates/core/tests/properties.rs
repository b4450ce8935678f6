use std::collections::BTreeSet;

use corrcomplete::completion::{complete, RootPolicy};
use corrcomplete::graph::build_pattern_graph;
use corrcomplete::linalg::{self, DEFAULT_PIVOT_TOL};
use corrcomplete::models::{
    n_currency_pattern, xccy_closed_form, xccy_pattern, ForeignParams, NCurrencyParams, XccyParams,
};
use corrcomplete::sampling::seeded_instance;
use corrcomplete::verify::{check_inverse_zeros, entropy_from_log_det, oracle_max_det_with, OracleOptions};
use proptest::prelude::*;

fn coefficient() -> impl Strategy<Value = f64> {
    -0.95f64..0.95
}

fn xccy_params() -> impl Strategy<Value = XccyParams> {
    prop::array::uniform6(coefficient())
        .prop_filter_map("EAX block must be PD", |v| XccyParams::from_slice(&v).ok())
}

fn log_det_block(m: &corrcomplete::PartialMatrix, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    linalg::log_det(&m.block(idx).expect("clique blocks are fully specified")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn completion_is_pd_and_keeps_specified_entries(n in 1usize..25, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (h, _) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        prop_assert!(linalg::cholesky(h.values(), DEFAULT_PIVOT_TOL).is_ok());
        for ((i, j), v) in inst.partial.specified() {
            prop_assert_eq!(h.get(i, j).to_bits(), v.to_bits());
        }
        for i in 0..n {
            prop_assert_eq!(h.get(i, i), 1.0);
        }
    }

    #[test]
    fn inverse_vanishes_off_pattern(n in 2usize..25, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (h, _) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        prop_assert!(check_inverse_zeros(&h, &inst.pattern).unwrap() <= 1e-10);
    }

    #[test]
    fn every_root_gives_the_same_matrix(n in 1usize..16, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (base, report) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        for r in 0..report.tree.cliques().len() {
            let (h, rep) = complete(&inst.partial, RootPolicy::Index(r)).unwrap();
            prop_assert_eq!(rep.root, r);
            prop_assert!(h.values().max_abs_diff(base.values()) <= 1e-10);
        }
    }

    #[test]
    fn fill_in_is_exactly_the_unspecified_pairs(n in 1usize..25, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (h, report) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        let keys: Vec<(usize, usize)> = report.fill_in.iter().map(|(k, _)| *k).collect();
        prop_assert_eq!(keys, inst.partial.unspecified());
        for ((i, j), v) in &report.fill_in {
            prop_assert_eq!(h.get(*i, *j).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn merge_steps_partition_the_vertices(n in 1usize..25, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (_, report) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        prop_assert_eq!(report.steps.len(), report.tree.cliques().len());
        let mut seen = BTreeSet::new();
        let mut filled = 0;
        for s in &report.steps {
            let clique: BTreeSet<usize> = s.new_clique.iter().copied().collect();
            let sep: BTreeSet<usize> = s.separator.iter().copied().collect();
            prop_assert!(sep.is_subset(&clique));
            prop_assert_eq!(&sep, &clique.intersection(&seen).copied().collect::<BTreeSet<_>>());
            let absorbed: BTreeSet<usize> = seen.difference(&sep).copied().collect();
            prop_assert_eq!(absorbed, s.absorbed.iter().copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(s.filled.len(), s.new_vertices().len() * s.absorbed.len());
            filled += s.filled.len();
            seen.extend(clique);
        }
        prop_assert_eq!(seen.len(), n);
        prop_assert_eq!(filled, report.fill_in.len());
    }

    // det H = prod det(clique blocks) / prod det(separator blocks) for the
    // max-determinant completion of a chordal pattern.
    #[test]
    fn log_det_factors_over_the_clique_tree(n in 1usize..25, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (h, report) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        let mut want = 0.0;
        for c in report.tree.cliques() {
            want += log_det_block(&inst.partial, c.vertices());
        }
        for e in report.tree.edges() {
            want -= log_det_block(&inst.partial, &e.separator);
        }
        let direct = linalg::log_det(h.values()).unwrap();
        prop_assert!((direct - want).abs() <= 1e-9 * (1.0 + want.abs()));
        prop_assert!((report.log_det - direct).abs() <= 1e-9 * (1.0 + want.abs()));
        prop_assert!((report.entropy - entropy_from_log_det(direct, n)).abs() <= 1e-9);
    }

    // Absorbing a clique multiplies the determinant built so far by the
    // determinant of the clique's Schur complement on its separator, which
    // is at most one for a correlation block: prefix log-dets never grow.
    #[test]
    fn prefix_log_dets_are_monotone(n in 2usize..20, seed in any::<u64>()) {
        let inst = seeded_instance(n, seed);
        let (h, report) = complete(&inst.partial, RootPolicy::LargestClique).unwrap();
        let mut seen: Vec<usize> = Vec::new();
        let mut previous = 0.0;
        let mut exact = 0.0;
        for s in &report.steps {
            for &v in &s.new_clique {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
            exact += log_det_block(&inst.partial, &s.new_clique)
                - log_det_block(&inst.partial, &s.separator);
            let prefix = linalg::log_det(&h.values().principal(&seen)).unwrap();
            prop_assert!(prefix <= previous + 1e-12);
            prop_assert!((prefix - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
            previous = prefix;
        }
    }

    #[test]
    fn xccy_matches_closed_form(p in xccy_params()) {
        let (h, report) = complete(&xccy_pattern(&p).unwrap(), RootPolicy::LargestClique).unwrap();
        let want = xccy_closed_form(&p).unwrap();
        prop_assert!(h.values().max_abs_diff(want.values()) <= 1e-12);
        prop_assert_eq!(report.fill_in.len(), 9);
    }

    // With the currency blocks joined only through E, any cross-block
    // correlation factors through E: corr(K, L) = corr(K, E) corr(E, L).
    #[test]
    fn n_currency_cross_terms_factor_through_domestic(
        count in 2usize..6,
        e_nu_e in coefficient(),
        blocks in prop::collection::vec(xccy_params(), 5),
    ) {
        let foreign: Vec<ForeignParams> = blocks[..count]
            .iter()
            .map(|p| ForeignParams::from_xccy(None, p))
            .collect();
        let params = NCurrencyParams { domestic: "E".into(), e_nu_e, foreign };
        let m = n_currency_pattern(&params).unwrap();
        let (h, _) = complete(&m, RootPolicy::LargestClique).unwrap();
        prop_assert_eq!(h.n(), 2 + 4 * count);
        let g = build_pattern_graph(&m);
        prop_assert!(check_inverse_zeros(&h, &g).unwrap() <= 1e-10);
        let e = h.label_index("E").unwrap();
        for i in 0..h.n() {
            for j in (i + 1)..h.n() {
                let (li, lj) = (h.labels()[i].as_str(), h.labels()[j].as_str());
                let block = |l: &str| l.rsplit('_').next().unwrap().to_owned();
                if i == e || j == e || li.starts_with("nu_E") || lj.starts_with("nu_E") {
                    continue;
                }
                if block(li) != block(lj) {
                    let want = h.get(i, e) * h.get(e, j);
                    prop_assert!((h.get(i, j) - want).abs() <= 1e-12, "{li} {lj}");
                }
            }
        }
    }
}

#[test]
fn single_currency_model_equals_xccy_model() {
    let p = XccyParams::from_slice(&[0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap();
    let n1 = NCurrencyParams::replicated(1, p.e_nu_e, &ForeignParams::from_xccy(None, &p));
    let (h, _) = complete(&n_currency_pattern(&n1).unwrap(), RootPolicy::LargestClique).unwrap();
    let want = xccy_closed_form(&p).unwrap();
    let map = [("E", "E"), ("nu_E", "nu_E"), ("A", "A"), ("nu_A", "nu_A"), ("X_E_A", "X"), ("nu_X_E_A", "nu_X")];
    for (a, wa) in map {
        for (b, wb) in map {
            let got = h.get_by_label(a, b).unwrap();
            assert!((got - want.get_by_label(wa, wb).unwrap()).abs() <= 1e-15);
        }
    }
}

#[test]
fn two_currency_model_agrees_with_numeric_oracle() {
    let p = XccyParams::from_slice(&[0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap();
    let params = NCurrencyParams::replicated(2, p.e_nu_e, &ForeignParams::from_xccy(None, &p));
    let m = n_currency_pattern(&params).unwrap();
    let (h, report) = complete(&m, RootPolicy::LargestClique).unwrap();
    let opts = OracleOptions {
        max_free: 64,
        ..OracleOptions::default()
    };
    let (best, best_ld) = oracle_max_det_with(&m, &opts).unwrap();
    assert!(h.values().max_abs_diff(best.values()) <= 1e-6);
    assert!((best_ld - report.log_det).abs() <= 1e-9);
}
