//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use fronttrack::analysis::{
    damped_ramp_l1_error, damped_ramp_setup, oleinik_exact_burgers_rarefaction, oracle_burgers_riemann,
    region_balance_with, sample_regions, CharacteristicTracer,
};
use fronttrack::jumps::{count_bound_for_run, enrichment_holds, trace_discontinuities};
use fronttrack::measures::{build_measures, measure_bounds_report};
use fronttrack::scenario::{execute, run_sweep_scenario};
use fronttrack::tracking::NodeKind;
use fronttrack::{
    evolve, init_from_datum, run, riemann::solve_riemann, FluxModel, IntervalUnion, Profile, RunOptions, Scenario,
    SolverConfig, SourceModel, TrackingOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1.01;
const STANDARD: [&str; 6] = [
    "burgers_shock",
    "merging_shocks",
    "rarefaction",
    "damped_ramp",
    "forced_waves",
    "smooth_ramp",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Front-tracking fan of `(ul, ur)` from the origin, sampled at time `t`.
fn solve_riemann_profile(ul: f64, ur: f64, flux: &FluxModel, eps: f64, t: f64) -> fronttrack::Result<Profile> {
    let fan = solve_riemann(ul, ur, flux, eps)?;
    let xs = fan.waves.iter().map(|w| w.speed * t).collect();
    let mut values = vec![ul];
    values.extend(fan.waves.iter().map(|w| w.right));
    Profile::new(xs, values)
}

fn c1_riemann_oracle() -> Outcome {
    let start = Instant::now();
    let flux = FluxModel::burgers();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let ul = rng.random_range(-1.0..1.0);
        let ur = rng.random_range(-1.0..1.0);
        let eps = rng.random_range(0.01..0.5);
        let p = solve_riemann_profile(ul, ur, &flux, eps, 1.0).unwrap();
        let err = p.l1_distance_piecewise_linear(|x| oracle_burgers_riemann(ul, ur, 1.0, x), &[ul, ur], -3.0, 3.0);
        let bound = eps * (ur - ul).abs();
        worst = worst.max(if bound > 0.0 { err / bound } else { err });
        if err > bound + 1e-15 {
            failures += 1;
        }
    }
    let p = solve_riemann_profile(0.0, 1.0, &flux, 0.5, 1.0).unwrap();
    let unit = p.l1_distance_piecewise_linear(|x| oracle_burgers_riemann(0.0, 1.0, 1.0, x), &[0.0, 1.0], -1.0, 2.0);
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && (unit - 0.125).abs() <= 1e-12 && elapsed < 1.0,
        format!("{failures} violations, worst err/(eps|du|) = {worst:.4}, unit rarefaction err = {unit:.15}, {elapsed:.3}s"),
    )
}

fn random_datum(rng: &mut ChaCha8Rng) -> Profile {
    let n = rng.random_range(1..=8usize);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let raw: Vec<f64> = xs.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    let tv = rng.random_range(0.2..=2.0);
    let scale = tv / raw.iter().map(|d: &f64| d.abs()).sum::<f64>();
    let mut v = rng.random_range(-1.0..1.0);
    let mut values = vec![v];
    for d in raw {
        v += d * scale;
        values.push(v);
    }
    Profile::new(xs, values).unwrap()
}

fn c2_functional_monotonicity() -> Outcome {
    let flux = FluxModel::burgers();
    let (eps, kappa) = (0.05, 0.05);
    let opts = TrackingOptions::new(eps, kappa, 2.0 + 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut violations, mut events, mut merges) = (0usize, 0usize, 0usize);
    for _ in 0..50 {
        let datum = random_datum(&mut rng);
        let (s0, init) = init_from_datum(&datum, &flux, &opts, 0.0).unwrap();
        let (_, _, ups0) = s0.readings(kappa);
        let (_, recs) = evolve(&s0, 2.0, &flux, &opts).unwrap();
        let collisions = recs.len();
        for r in init.iter().chain(&recs) {
            events += 1;
            let tol = 1e-12 * (1.0 + r.upsilon_before.abs());
            if r.tv_after > r.tv_before + tol || r.upsilon_after > r.upsilon_before + tol {
                violations += 1;
            }
        }
        for r in recs.iter().filter(|r| r.is_merge()) {
            merges += 1;
            let s = &r.in_sizes;
            let mut pairs = 0.0;
            for i in 0..s.len() {
                for k in i + 1..s.len() {
                    pairs += (s[i] * s[k]).abs();
                }
            }
            if r.upsilon_drop < kappa * pairs * (1.0 - 1e-9) - 1e-14 {
                violations += 1;
            }
        }
        if collisions as f64 > ups0 / (kappa * eps * eps) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over {events} events ({merges} merges)"),
    )
}

fn c3_source_growth() -> Outcome {
    let (cfg, datum) = damped_ramp_setup(0.05, 0.05).unwrap();
    let r = run(&cfg, &datum).unwrap();
    let l = cfg.source.lipschitz();
    let alpha = cfg.source.alpha_l1();
    let mut violations = 0;
    let mut g_fit = 0.0f64;
    for u in &r.updates {
        let bound = cfg.tau * (l * u.tv_pre + 2.0 * alpha) * SLACK;
        if u.tv_post - u.tv_pre > bound + 1e-12 {
            violations += 1;
        }
        g_fit = g_fit.max((u.upsilon_post - u.upsilon_pre) / cfg.tau);
    }
    let final_ups = r.trace.last().map(|e| e.upsilon).unwrap();
    let t = cfg.t_final;
    if final_ups > cfg.delta_bar + g_fit * t + 1e-12 {
        violations += 1;
    }
    if final_ups > cfg.upsilon_bound() + 1e-12 {
        violations += 1;
    }
    outcome(
        violations == 0,
        format!(
            "{violations} violations over {} updates, fitted G = {g_fit:.4}, Y(T) = {final_ups:.4} <= {:.4}",
            r.updates.len(),
            cfg.delta_bar + g_fit * t
        ),
    )
}

fn c4_splitting_accuracy() -> Outcome {
    let mut cs = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let (cfg, datum) = damped_ramp_setup(eps, eps).unwrap();
        let r = run(&cfg, &datum).unwrap();
        let err = damped_ramp_l1_error(&r.final_profile, cfg.t_final, -3.0, 3.0);
        cs.push(err / (eps + eps));
    }
    let max = cs.iter().cloned().fold(0.0, f64::max);
    let min = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        min > 0.0 && max / min <= 2.0,
        format!("C = {:.4} {:.4} {:.4}, spread {:.3}", cs[0], cs[1], cs[2], max / min),
    )
}

fn zero_config(eps: f64, tau: f64, t: f64, delta_bar: f64, beta: f64) -> SolverConfig {
    let mut c = SolverConfig::new(FluxModel::burgers(), SourceModel::zero(), eps, tau, t);
    c.kappa = 0.02;
    c.delta_bar = delta_bar;
    c.beta = beta;
    c
}

fn c5_measure_identities() -> Outcome {
    let mut notes = Vec::new();
    // straight shock
    let r = run(&zero_config(0.05, 0.005, 2.0, 1.1, 0.5), &Profile::new(vec![0.0], vec![1.0, 0.0]).unwrap()).unwrap();
    let f = trace_discontinuities(&r, 0.5);
    let m = build_measures(&r, &f).unwrap();
    let shock = m.mu.positive_times().is_empty()
        && m.mu_jump.positive_times().is_empty()
        && m.xi.xi_jump.positive_times().is_empty()
        && f.m_count == 1;
    notes.push(format!("shock {}", if shock { "zero" } else { "nonzero" }));

    // two shocks merging at t = 1
    let r = run(
        &zero_config(0.05, 0.005, 2.0, 2.1, 0.5),
        &Profile::new(vec![0.0, 1.0], vec![2.0, 1.0, 0.0]).unwrap(),
    )
    .unwrap();
    let f = trace_discontinuities(&r, 0.5);
    let m = build_measures(&r, &f).unwrap();
    let merged = r.log.collisions().any(|c| c.is_merge() && (c.t - 1.0).abs() < 1e-9);
    let merge = merged && m.mu.positive_times().is_empty() && m.mu_jump.positive_times().is_empty();
    notes.push(format!("merge {}", if merge { "zero" } else { "nonzero" }));

    // shock cancelled by a step
    let mut c = zero_config(0.5, 0.01, 6.0, 1.6, 2.1);
    c.g_const = Some(0.0);
    let r = run(&c, &Profile::new(vec![0.0, 0.5], vec![1.0, 0.0, 0.5]).unwrap()).unwrap();
    let f = trace_discontinuities(&r, 0.9);
    let m = build_measures(&r, &f).unwrap();
    let traced = f.traced_segments();
    let h = &r.history;
    let mut exact = true;
    let mut seen = 0;
    for node in h.nodes.iter().filter(|n| n.kind == NodeKind::Collision) {
        let sum = |ids: &[usize]| -> f64 {
            ids.iter().filter(|s| traced.contains(s)).map(|&s| h.segments[s].size()).sum()
        };
        let q = sum(&node.outgoing) - sum(&node.incoming);
        let atom: f64 = m
            .mu_jump
            .atoms
            .iter()
            .filter(|a| a.t == node.t && a.x == node.x)
            .map(|a| a.weight)
            .sum();
        if q.abs() > 1e-12 {
            seen += 1;
        }
        if (atom - q).abs() > 4.0 * f64::EPSILON * (1.0 + q.abs()) {
            exact = false;
        }
    }
    let cancel = exact && seen >= 1;
    notes.push(format!("cancellation nodes {seen}, bookkeeping {}", if exact { "exact" } else { "off" }));
    outcome(shock && merge && cancel, notes.join(", "))
}

struct Nominal {
    name: &'static str,
    outcome: fronttrack::scenario::RunOutcome,
}

fn nominal_runs() -> Vec<Nominal> {
    STANDARD
        .iter()
        .map(|name| {
            let mut s = scenario(name);
            s.analyses.balances = None;
            let (cfg, datum) = s.config().unwrap();
            Nominal {
                name,
                outcome: execute(&s, &cfg, &datum, false).unwrap(),
            }
        })
        .collect()
}

fn c6_measure_bounds(runs: &[Nominal]) -> Outcome {
    let mut failing = Vec::new();
    let mut consts = Vec::new();
    for n in runs {
        let o = &n.outcome;
        let (m, f) = (o.measures.as_ref().unwrap(), o.family.as_ref().unwrap());
        let rep = measure_bounds_report(m, &o.run, f);
        for name in ["mu_batch_vs_source", "source_strip", "cont_triangle"] {
            let e = rep.get(name).unwrap();
            if !e.pass {
                failing.push(format!("{}:{name}", n.name));
            }
        }
        consts.push(format!("{} {:.3}", n.name, rep.get("source_strip").unwrap().constant));
    }
    outcome(
        failing.is_empty(),
        format!("failing [{}]; fitted strip constants: {}", failing.join(" "), consts.join(", ")),
    )
}

fn c7_jump_count(runs: &[Nominal]) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for n in runs {
        let r = &n.outcome.run;
        let beta = r.config.beta;
        let fams: Vec<_> = [4.0, 2.0, 1.0].iter().map(|k| trace_discontinuities(r, k * beta)).collect();
        let count = count_bound_for_run(&fams[2], r);
        let nested = enrichment_holds(&fams[0], &fams[1]) && enrichment_holds(&fams[1], &fams[2]);
        pass &= count.pass && nested;
        notes.push(format!("{} {}<={:.1}{}", n.name, count.m_count, count.bound, if nested { "" } else { " not nested" }));
    }
    outcome(pass, notes.join(", "))
}

fn c8_region_balances(runs: &[Nominal]) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut worst_phi = f64::NEG_INFINITY;
    for n in runs {
        let o = &n.outcome;
        let (m, f) = (o.measures.as_ref().unwrap(), o.family.as_ref().unwrap());
        let tracer = CharacteristicTracer::new(&o.run);
        let regions = sample_regions(&tracer, 8, 200).unwrap();
        let mut bad = 0;
        for region in &regions {
            let b = region_balance_with(&tracer, region, f, m).unwrap();
            worst_phi = worst_phi.max(b.phi_jump);
            if !b.pass {
                bad += 1;
            }
        }
        pass &= bad == 0 && regions.len() == 200;
        notes.push(format!("{} {bad}/{}", n.name, regions.len()));
    }
    outcome(pass, format!("failing regions: {}; max phi_jump = {worst_phi:.3e}", notes.join(", ")))
}

fn c9_oleinik(sweeps: &[(&str, fronttrack::scenario::SweepReport)]) -> Outcome {
    let exact = oleinik_exact_burgers_rarefaction(-1.0, 1.0, 1.0, 0.0, &IntervalUnion::interval(-0.5, 0.5));
    let mut pass = exact.constant == 1.0;
    let mut notes = vec![format!("exact C = {}", exact.constant)];
    let accept = 16.0 / FluxModel::burgers().convexity_const();
    for (name, rep) in sweeps {
        let cs: Vec<f64> = rep.levels.iter().filter_map(|l| l.oleinik_constant).collect();
        let mut ok = cs.len() == rep.levels.len() && cs.iter().all(|c| *c <= accept);
        let mut max_ratio = 0.0f64;
        for w in cs.windows(2) {
            if w[0] > 0.0 {
                max_ratio = max_ratio.max(w[1] / w[0]);
            } else if w[1] > 0.0 {
                max_ratio = f64::INFINITY;
            }
        }
        ok &= max_ratio <= 1.5;
        pass &= ok;
        notes.push(format!(
            "{name} [{}] ratio {max_ratio:.3}",
            cs.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(" ")
        ));
    }
    outcome(pass, notes.join(", "))
}

fn c10_sbv_trend(sweeps: &[(&str, fronttrack::scenario::SweepReport)]) -> Outcome {
    let get = |n: &str| sweeps.iter().find(|(k, _)| *k == n).and_then(|(_, r)| r.exceptional.clone());
    let (Some(merge), Some(smooth)) = (get("merging_shocks"), get("smooth_ramp")) else {
        return outcome(false, "missing exceptional-time reports".into());
    };
    let flags_merge = merge.flagged.len() == 1 && (merge.flagged[0] - 1.0).abs() <= merge.window;
    let decreasing = !smooth.trends.is_empty() && smooth.trends.iter().all(|t| t.decreasing && t.values.len() == 3);
    let trends: Vec<String> = smooth
        .trends
        .iter()
        .map(|t| format!("t={} [{}]", t.t, t.values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")))
        .collect();
    outcome(
        flags_merge && decreasing,
        format!("merge flags {:?}; smooth trends {}", merge.flagged, trends.join(", ")),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "Riemann oracle equivalence", c1_riemann_oracle()),
        (2, "functional monotonicity", c2_functional_monotonicity()),
        (3, "source-growth bound", c3_source_growth()),
        (4, "splitting accuracy", c4_splitting_accuracy()),
        (5, "measure identities", c5_measure_identities()),
    ];
    let runs = nominal_runs();
    results.push((6, "measure bounds", c6_measure_bounds(&runs)));
    results.push((7, "jump-count bound", c7_jump_count(&runs)));
    results.push((8, "region balances", c8_region_balances(&runs)));
    let sweeps: Vec<(&str, _)> = STANDARD
        .iter()
        .map(|name| (*name, run_sweep_scenario(&scenario(name), None, &RunOptions::default()).unwrap()))
        .collect();
    results.push((9, "Oleinik verifier", c9_oleinik(&sweeps)));
    results.push((10, "SBV trend", c10_sbv_trend(&sweeps)));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (k, name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!("{} {k:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass ({:.1}s)", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
