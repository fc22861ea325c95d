use fronttrack::analysis::oracle_burgers_riemann;
use fronttrack::jumps::{enrichment_holds, trace_discontinuities};
use fronttrack::measures::{build_measures, measure_bounds_report};
use fronttrack::riemann::solve_riemann;
use fronttrack::{evolve, init_from_datum, run, FluxModel, Profile, SolverConfig, SourceModel, TrackingOptions};
use proptest::prelude::*;
use std::collections::HashMap;

fn datum() -> impl Strategy<Value = Profile> {
    (1usize..6, -1.0f64..1.0)
        .prop_flat_map(|(n, u0)| {
            (
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(-0.4f64..0.4, n),
                Just(u0),
            )
        })
        .prop_filter_map("distinct breakpoints", |(mut xs, ds, u0)| {
            xs.sort_by(f64::total_cmp);
            if xs.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                return None;
            }
            let mut values = vec![u0];
            for d in ds {
                values.push(values.last().unwrap() + d);
            }
            Profile::new(xs, values).ok()
        })
}

fn cfg(source: SourceModel) -> SolverConfig {
    let mut c = SolverConfig::new(FluxModel::burgers(), source, 0.1, 0.05, 1.0);
    c.delta_bar = 2.5;
    c.kappa = 0.02;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn riemann_fan_is_ordered_and_conservative(ul in -1.0f64..1.0, ur in -1.0f64..1.0, eps in 0.02f64..0.5) {
        let fan = solve_riemann(ul, ur, &FluxModel::burgers(), eps).unwrap();
        prop_assert!(fan.waves.windows(2).all(|w| w[0].speed < w[1].speed));
        prop_assert!((fan.total_size() - (ur - ul)).abs() < 1e-12);
        if ur > ul {
            prop_assert!(fan.waves.iter().all(|w| w.size() <= eps * (1.0 + 1e-12)));
        } else {
            prop_assert!(fan.len() <= 1);
        }
        for xi in [-1.5, -0.7, -0.2, 0.0, 0.3, 0.9, 1.5] {
            let v = fan.value_at(ul, xi);
            prop_assert!((v - oracle_burgers_riemann(ul, ur, 1.0, xi)).abs() <= eps + 1e-12);
        }
    }

    #[test]
    fn glimm_functional_never_increases(p in datum()) {
        let flux = FluxModel::burgers();
        let opts = TrackingOptions::new(0.05, 0.05, 2.0);
        prop_assume!(fronttrack::bv::total_variation(&p) <= 2.0);
        let (s0, _) = init_from_datum(&p, &flux, &opts, 0.0).unwrap();
        let (s1, recs) = evolve(&s0, 3.0, &flux, &opts).unwrap();
        for r in &recs {
            prop_assert!(r.upsilon_after <= r.upsilon_before + 1e-12);
            prop_assert!(r.tv_after <= r.tv_before + 1e-12);
            prop_assert!(r.t >= 0.0 && r.t <= 3.0);
        }
        prop_assert!(s1.readings(0.05).2 <= s0.readings(0.05).2 + 1e-12);
        let (a, b) = (s0.profile(), s1.profile());
        prop_assert_eq!(a.values().first(), b.values().first());
        prop_assert_eq!(a.values().last(), b.values().last());
    }

    #[test]
    fn cont_measure_is_the_atomwise_difference(p in datum(), damping in 0.0f64..1.0) {
        let c = cfg(SourceModel::damping(damping)).with_auto_parameters(&p);
        prop_assume!(c.validate().is_ok());
        let r = run(&c, &p).unwrap();
        let f = trace_discontinuities(&r, c.beta);
        let m = build_measures(&r, &f).unwrap();
        let key = |t: f64, x: f64| (t.to_bits(), x.to_bits());
        let mut diff: HashMap<(u64, u64), f64> = HashMap::new();
        for a in &m.mu.atoms {
            *diff.entry(key(a.t, a.x)).or_default() += a.weight;
        }
        for a in &m.mu_jump.atoms {
            *diff.entry(key(a.t, a.x)).or_default() -= a.weight;
        }
        for a in &m.mu_cont.atoms {
            *diff.entry(key(a.t, a.x)).or_default() -= a.weight;
        }
        prop_assert!(diff.values().all(|w| w.abs() <= 1e-12));
        prop_assert!(m.mu_cont.mass() <= m.mu.mass() + m.mu_jump.mass() + 1e-9);
        prop_assert!(m.mu_source.atoms.iter().all(|a| a.weight >= 0.0));
        let rep = measure_bounds_report(&m, &r, &f);
        prop_assert!(rep.all_pass(), "{:?}", rep.entries.iter().filter(|e| !e.pass).collect::<Vec<_>>());
    }

    #[test]
    fn jump_families_are_nested(p in datum(), k in 1.0f64..3.0) {
        let c = cfg(SourceModel::zero()).with_auto_parameters(&p);
        prop_assume!(c.validate().is_ok());
        let r = run(&c, &p).unwrap();
        let fine = trace_discontinuities(&r, c.beta);
        let coarse = trace_discontinuities(&r, k * c.beta);
        prop_assert!(enrichment_holds(&coarse, &fine));
        prop_assert!(coarse.m_count <= fine.m_count);
    }

    #[test]
    fn profile_csv_round_trip(p in datum()) {
        let back = Profile::from_csv(&p.to_csv()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn forced_source_growth_per_update() {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/forced_waves.json");
    let s = fronttrack::Scenario::load(&path).unwrap();
    let (c, datum) = s.config().unwrap();
    let r = run(&c, &datum).unwrap();
    let (l, alpha) = (c.source.lipschitz(), c.source.alpha_l1());
    assert!(alpha > 0.0);
    for u in &r.updates {
        let bound = c.tau * (l * u.tv_pre + 2.0 * alpha) * 1.01;
        assert!(u.tv_post - u.tv_pre <= bound + 1e-12, "update {}: {} > {bound}", u.n, u.tv_post - u.tv_pre);
    }
    assert!(r.trace.iter().all(|e| e.upsilon <= c.upsilon_bound() + 1e-12));
}
