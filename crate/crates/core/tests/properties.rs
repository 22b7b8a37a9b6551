use ladder_dmrm::blocks::build_blocks;
use ladder_dmrm::cli_io::{config_from_text, parse_csv, parse_range, window_rho, write_csv, RunConfig, SweepRow};
use ladder_dmrm::entanglement::{ggm_from_window, negativity, state_subset_spectrum, werner_fit};
use ladder_dmrm::lattice::LadderSpec;
use ladder_dmrm::oracle::{parse_state_dump, rvb_literal_even, rvb_literal_odd, StateVector};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn small_spec() -> impl Strategy<Value = LadderSpec> {
    prop_oneof![
        (1usize..=4, 2usize..=4).prop_map(|(m, n)| LadderSpec::open(m, n)),
        prop::sample::select(vec![(1usize, 4usize), (1, 6), (1, 8), (2, 4), (2, 6), (3, 4), (4, 4)])
            .prop_map(|(m, n)| LadderSpec::periodic(m, n)),
    ]
    .prop_filter_map("valid ladder", |s| s.ok())
    // Odd-leg ladders with an odd number of rungs have no covering.
    .prop_filter("has a covering", |s| s.legs % 2 == 0 || s.rungs % 2 == 0)
}

fn oracle(spec: LadderSpec) -> StateVector {
    if spec.legs % 2 == 0 {
        rvb_literal_even(spec, 24).unwrap()
    } else {
        rvb_literal_odd(spec, 24).unwrap()
    }
}

fn window_spec() -> impl Strategy<Value = LadderSpec> {
    prop::sample::select(vec![
        (1usize, 4usize, true),
        (1, 6, false),
        (2, 3, false),
        (2, 6, true),
        (3, 4, true),
        (4, 3, false),
        (4, 6, true),
    ])
    .prop_map(|(m, n, p)| LadderSpec::new(m, n, p).unwrap())
}

fn werner(p: f64) -> DMatrix<f64> {
    let mut s = DMatrix::<f64>::zeros(4, 4);
    s[(1, 1)] = 0.5;
    s[(2, 2)] = 0.5;
    s[(1, 2)] = -0.5;
    s[(2, 1)] = -0.5;
    s * p + DMatrix::<f64>::identity(4, 4) * ((1.0 - p) / 4.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schmidt_spectra_agree_across_a_cut(spec in small_spec(), mask in any::<u64>()) {
        let psi = oracle(spec);
        let n = psi.sites().len();
        let keep: Vec<usize> = (0..n).filter(|b| (mask >> b) & 1 == 1).collect();
        let rest: Vec<usize> = (0..n).filter(|b| (mask >> b) & 1 == 0).collect();
        prop_assume!(!keep.is_empty() && !rest.is_empty());
        let mut a = state_subset_spectrum(&psi, &keep).unwrap();
        let mut b = state_subset_spectrum(&psi, &rest).unwrap();
        a.reverse();
        b.reverse();
        let len = a.len().max(b.len());
        a.resize(len, 0.0);
        b.resize(len, 0.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10, "{spec} keep {keep:?}: {x} vs {y}");
        }
    }

    #[test]
    fn window_subset_spectra_are_probabilities(spec in window_spec(), k in 1usize..=3) {
        let (rho, _) = window_rho(&build_blocks(spec.legs).unwrap(), spec).unwrap();
        let g = ggm_from_window(&rho, k.min(2 * spec.legs)).unwrap();
        prop_assert_eq!(g.ggm, 1.0 - g.lambda_sq_max);
        for (_, ev) in &g.subset_spectra {
            prop_assert!(ev.iter().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x)));
            prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn widening_the_subset_search_never_raises_ggm(spec in window_spec(), k in 1usize..=3) {
        let (rho, _) = window_rho(&build_blocks(spec.legs).unwrap(), spec).unwrap();
        let wide = 2 * spec.legs;
        let narrow = ggm_from_window(&rho, k.min(wide)).unwrap();
        let full = ggm_from_window(&rho, wide).unwrap();
        prop_assert!(full.ggm <= narrow.ggm + 1e-15);
    }

    #[test]
    fn windows_are_clean(spec in window_spec()) {
        let (rho, trace) = window_rho(&build_blocks(spec.legs).unwrap(), spec).unwrap();
        let h = rho.hygiene();
        prop_assert!(h.passes(), "{spec}: {h:?}");
        prop_assert_eq!(trace, oracle(spec).norm_sq());
    }

    #[test]
    fn negativity_grows_with_werner_p(p in 1.0f64 / 3.0..=1.0, q in 1.0f64 / 3.0..=1.0) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let (a, b) = (werner(lo), werner(hi));
        prop_assert!(negativity(&a).unwrap() <= negativity(&b).unwrap() + 1e-12);
        let fit = werner_fit(&a).unwrap();
        prop_assert!((fit.p - lo).abs() < 1e-12 && fit.residual < 1e-12);
        prop_assert!((negativity(&b).unwrap() - (3.0 * hi - 1.0) / 4.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn ranges_round_trip(start in 1usize..1000, len in 0usize..1000, step in 1usize..50) {
        let text = format!("{}:{}:{}", start, start + len, step);
        let r = parse_range(&text).unwrap();
        prop_assert_eq!(r.to_string(), text);
        prop_assert_eq!(parse_range(&r.to_string()).unwrap(), r);
        let v = r.values();
        prop_assert_eq!(v[0], start);
        prop_assert!(v.iter().all(|&x| x <= start + len));
        prop_assert_eq!(r.all_even(), v.iter().all(|x| x % 2 == 0));
    }

    #[test]
    fn config_text_round_trips(
        legs in prop::collection::vec(1usize..8, 1..4),
        start in 1usize..20,
        step in 1usize..4,
        periodic: bool,
        jobs in 1usize..16,
        max_subset in prop::option::of(1usize..8),
        tol_exp in -14i32..-2,
    ) {
        let legs_text: Vec<String> = legs.iter().map(ToString::to_string).collect();
        let mut text = format!(
            "legs = {}\nrungs = {start}:{}:{step}  # trailing comment\nperiodic = {periodic}\njobs={jobs}\ntol = 1e{tol_exp}\n",
            legs_text.join(","),
            start + 6
        );
        if let Some(k) = max_subset {
            text.push_str(&format!("max_subset = {k}\n"));
        }
        let cfg = config_from_text(&text).unwrap();
        let expected = RunConfig {
            legs,
            rungs: parse_range(&format!("{start}:{}:{step}", start + 6)).unwrap(),
            periodic,
            jobs,
            max_subset,
            tol: format!("1e{tol_exp}").parse().unwrap(),
            ..RunConfig::default()
        };
        prop_assert_eq!(cfg, expected);
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec(
        (1usize..9, 2usize..40, any::<bool>(), 0.0f64..1.0, -1.0f64..1.0, "[0-9@;]{1,20}", -1.0f64..1.0, 0.0f64..0.5, 0.0f64..500.0),
        0..6,
    )) {
        let rows: Vec<SweepRow> = rows
            .into_iter()
            .map(|(legs, rungs, periodic, ggm, werner_p, argmax_subset, lambda, negativity, log2_norm)| SweepRow {
                legs,
                rungs,
                periodic,
                ggm,
                lambda_sq_max: lambda,
                argmax_subset,
                werner_p,
                negativity,
                log2_norm,
            })
            .collect();
        prop_assert_eq!(parse_csv(&write_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn state_dumps_round_trip(spec in small_spec()) {
        let psi = oracle(spec);
        let back = parse_state_dump(&psi.dump(), psi.sites().to_vec()).unwrap();
        prop_assert_eq!(back.sorted_entries(), psi.sorted_entries());
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_range(&text);
        let _ = config_from_text(&text).map(|c| c.validate());
        let _ = parse_csv(&text);
        let _ = parse_state_dump(&text, LadderSpec::open(2, 2).unwrap().all_sites());
    }
}
