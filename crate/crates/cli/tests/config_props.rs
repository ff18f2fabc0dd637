use cavity_cli::config::{GridSpec, InitialState, RunConfig, Temperature};
use cavity_cli::output::{format_number, Table};
use proptest::prelude::*;

fn initial() -> impl Strategy<Value = InitialState> {
    prop_oneof![
        Just(InitialState::Vacuum),
        (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(alpha_re, alpha_im)| InitialState::Coherent { alpha_re, alpha_im }),
        (0.0..100.0f64).prop_map(|n0| InitialState::Thermal { n0 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn toml_round_trip(
        s in prop::collection::vec(0.1..4.0f64, 1..4),
        eta in prop::collection::vec(0.0..2.0f64, 1..5),
        theta in 0.0..50.0f64,
        t_end in 1.0..500.0f64,
        steps in 1usize..100_000,
        rows in prop::option::of(1usize..2000),
        init in initial(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.reservoir.s = s;
        cfg.reservoir.eta = eta;
        cfg.temperature = Temperature::Theta(theta);
        cfg.grid = GridSpec { t_end, steps, rows };
        cfg.initial = init;
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg.clone());
        prop_assert!(cfg.grid.stride() >= 1);
        prop_assert!(cfg.grid.steps.div_ceil(cfg.grid.stride()) <= rows.unwrap_or(500));
    }

    #[test]
    fn csv_numbers_are_exact(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..50)) {
        for &x in &values {
            prop_assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let mut t = Table::default();
        t.push("x", values);
        t.write_csv(&path).unwrap();
        prop_assert_eq!(Table::read_csv(&path).unwrap(), t);
    }
}
