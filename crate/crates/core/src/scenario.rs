//! Scenario files, artifact directories and refinement sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    damped_ramp_l1_error, exceptional_times, oleinik_report, oracle_burgers_riemann,
    region_balance_with, sample_regions, BalanceReport, CharacteristicTracer, ExceptionalOptions,
    ExceptionalReport, OleinikReport,
};
use crate::bv::{total_variation, IntervalUnion, Profile};
use crate::error::{Error, Result};
use crate::jumps::{count_bound_for_run, trace_discontinuities, CountBoundReport, JumpFamily};
use crate::measures::{build_measures, measure_bounds_report, BoundsReport, RunMeasures};
use crate::riemann::FluxModel;
use crate::splitting::{discretize_datum, run, Forcing, RunArtifacts, SolverConfig, SourceModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluxSpec {
    Burgers {
        #[serde(default)]
        range: Option<(f64, f64)>,
    },
    Cubic {
        range: (f64, f64),
    },
    Quartic {
        range: (f64, f64),
    },
    /// Rows `(u, f(u))`, inline or from a two-column CSV file.
    Table {
        #[serde(default)]
        points: Option<Vec<(f64, f64)>>,
        #[serde(default)]
        csv: Option<String>,
    },
}

impl FluxSpec {
    pub fn build(&self, base: &Path) -> Result<FluxModel> {
        match self {
            FluxSpec::Burgers { range: None } => Ok(FluxModel::burgers()),
            FluxSpec::Burgers { range: Some(r) } => Ok(FluxModel::burgers_on(*r)),
            FluxSpec::Cubic { range } => FluxModel::cubic(*range),
            FluxSpec::Quartic { range } => FluxModel::quartic(*range),
            FluxSpec::Table { points: Some(p), .. } => FluxModel::from_table(p.clone()),
            FluxSpec::Table { csv: Some(path), .. } => {
                FluxModel::from_table_csv(&fs::read_to_string(base.join(path))?)
            }
            FluxSpec::Table { .. } => Err(Error::InvalidFlux("table flux needs points or csv".into())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// `g = -damping u + forcing(x)`
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub forcing: Forcing,
}

impl SourceSpec {
    pub fn build(&self) -> SourceModel {
        let s = if self.damping != 0.0 {
            SourceModel::damping(self.damping)
        } else {
            SourceModel::zero()
        };
        s.with_forcing(self.forcing.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatumSpec {
    Steps {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Riemann {
        left: f64,
        right: f64,
        #[serde(default)]
        at: f64,
    },
    /// Linear from `(x0, u0)` to `(x1, u1)`, constant outside; sampled on
    /// cells of width epsilon.
    Ramp {
        x0: f64,
        x1: f64,
        u0: f64,
        u1: f64,
    },
    /// `offset + amp sin(2 pi periods (x - x0) / (x1 - x0))` on `[x0, x1]`.
    Sine {
        x0: f64,
        x1: f64,
        amp: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        periods: f64,
    },
    /// Random steps on `[x0, x1]` with total variation `tv`.
    Random {
        count: usize,
        x0: f64,
        x1: f64,
        tv: f64,
        seed: u64,
    },
    /// `x_left,value` CSV relative to the scenario file.
    Csv {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

impl DatumSpec {
    pub fn build(&self, epsilon: f64, base: &Path) -> Result<Profile> {
        match self {
            DatumSpec::Steps { breakpoints, values } => Profile::new(breakpoints.clone(), values.clone()),
            DatumSpec::Riemann { left, right, at } => Profile::new(vec![*at], vec![*left, *right]),
            DatumSpec::Ramp { x0, x1, u0, u1 } => {
                let (x0, x1, u0, u1) = (*x0, *x1, *u0, *u1);
                discretize_datum(
                    move |x| u0 + (u1 - u0) * ((x - x0) / (x1 - x0)).clamp(0.0, 1.0),
                    x0,
                    x1,
                    epsilon,
                )
            }
            DatumSpec::Sine { x0, x1, amp, offset, periods } => {
                let (x0, x1, amp, offset, periods) = (*x0, *x1, *amp, *offset, *periods);
                discretize_datum(
                    move |x| {
                        let y = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                        offset + amp * (2.0 * std::f64::consts::PI * periods * y).sin()
                    },
                    x0,
                    x1,
                    epsilon,
                )
            }
            DatumSpec::Random { count, x0, x1, tv, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut bps: Vec<f64> = (0..*count).map(|_| rng.random_range(*x0..*x1)).collect();
                bps.sort_by(f64::total_cmp);
                bps.dedup();
                let raw: Vec<f64> = bps.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm: f64 = raw.iter().map(|v: &f64| v.abs()).sum::<f64>().max(1e-12);
                let mut values = vec![0.0];
                for r in raw {
                    let last = *values.last().expect("nonempty");
                    values.push(last + tv * r / norm);
                }
                Profile::new(bps, values)
            }
            DatumSpec::Csv { path } => Profile::from_csv(&fs::read_to_string(base.join(path))?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSpec {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OleinikQuery {
    pub t: f64,
    pub s: f64,
    pub set: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleSpec {
    BurgersRiemann {
        left: f64,
        right: f64,
        #[serde(default)]
        at: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    DampedRamp {
        #[serde(default)]
        tolerance: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    #[serde(default = "yes")]
    pub measures: bool,
    #[serde(default = "yes")]
    pub jumps: bool,
    #[serde(default)]
    pub balances: Option<BalanceSpec>,
    #[serde(default)]
    pub oleinik: Vec<OleinikQuery>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
}

fn yes() -> bool {
    true
}

impl Default for Analyses {
    fn default() -> Self {
        Self {
            measures: true,
            jumps: true,
            balances: None,
            oleinik: Vec::new(),
            oracle: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLevel {
    pub epsilon: f64,
    pub tau: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

/// Refinement levels with strictly decreasing epsilon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSchedule {
    pub levels: Vec<SweepLevel>,
    /// Times where the cantor proxy trend is reported.
    #[serde(default)]
    pub probe_times: Vec<f64>,
    #[serde(default)]
    pub exceptional_times: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub flux: FluxSpec,
    #[serde(default)]
    pub source: SourceSpec,
    pub datum: DatumSpec,
    pub epsilon: f64,
    pub tau: f64,
    pub t_final: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub delta_bar: Option<f64>,
    #[serde(default)]
    pub g_const: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub perturb_speeds: bool,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub sweep: Option<SweepSchedule>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut s = Self::from_json(&fs::read_to_string(path)?)?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn datum(&self, epsilon: f64) -> Result<Profile> {
        self.datum.build(epsilon, &self.base_dir)
    }

    /// Solver configuration at the given resolution, with missing
    /// parameters filled in and every invariant checked.
    pub fn config_at(&self, epsilon: f64, tau: f64, beta: Option<f64>) -> Result<(SolverConfig, Profile)> {
        let flux = self.flux.build(&self.base_dir)?;
        let datum = self.datum(epsilon)?;
        let mut cfg = SolverConfig::new(flux, self.source.build(), epsilon, tau, self.t_final);
        cfg.g_const = self.g_const;
        cfg.seed = self.seed;
        cfg.perturb_speeds = self.perturb_speeds;
        cfg.snapshot_times = self.snapshot_times.clone();
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        if let Some(d) = self.delta_bar {
            cfg.delta_bar = d;
        }
        if let Some(b) = beta {
            cfg.beta = b;
        }
        let cfg = cfg.with_auto_parameters(&datum);
        cfg.validate()?;
        let readings = crate::bv::glimm_functional(&datum, cfg.kappa, cfg.upsilon_bound())?;
        if readings.upsilon > cfg.delta_bar {
            return Err(Error::ConfigInvalid(format!(
                "Glimm functional of the datum {} exceeds delta_bar = {}",
                readings.upsilon, cfg.delta_bar
            )));
        }
        Ok((cfg, datum))
    }

    pub fn config(&self) -> Result<(SolverConfig, Profile)> {
        self.config_at(self.epsilon, self.tau, self.beta)
    }
}

/// Overrides coming from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub snapshot_times: Option<Vec<f64>>,
    /// Abort on the first failing check.
    pub strict: bool,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub t: f64,
    pub window: (f64, f64),
    pub l1_error: f64,
    pub tolerance: Option<f64>,
}

/// Everything computed for one run.
pub struct RunOutcome {
    pub run: RunArtifacts,
    pub family: Option<JumpFamily>,
    pub measures: Option<RunMeasures>,
    pub bounds: Option<BoundsReport>,
    pub count: Option<CountBoundReport>,
    pub balances: Vec<BalanceReport>,
    pub oleinik: Option<OleinikReport>,
    pub oracle: Option<OracleReport>,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn apply_overrides(s: &Scenario, opts: &RunOptions) -> Scenario {
    let mut s = s.clone();
    if opts.seed.is_some() {
        s.seed = opts.seed;
    }
    if let Some(t) = &opts.snapshot_times {
        s.snapshot_times = t.clone();
    }
    s
}

fn oracle_report(spec: &OracleSpec, run: &RunArtifacts) -> OracleReport {
    let t = run.config.t_final;
    let p = &run.final_profile;
    match *spec {
        OracleSpec::BurgersRiemann { left, right, at, tolerance } => {
            let lo = at + left.min(right).min(0.0) * t - 1.0;
            let hi = at + left.max(right).max(0.0) * t + 1.0;
            let breaks = if left > right {
                vec![at + 0.5 * (left + right) * t]
            } else {
                vec![at + left * t, at + right * t]
            };
            OracleReport {
                t,
                window: (lo, hi),
                l1_error: p.l1_distance_piecewise_linear(
                    |x| oracle_burgers_riemann(left, right, t, x - at),
                    &breaks,
                    lo,
                    hi,
                ),
                tolerance,
            }
        }
        OracleSpec::DampedRamp { tolerance } => OracleReport {
            t,
            window: (-3.0, 3.0),
            l1_error: damped_ramp_l1_error(p, t, -3.0, 3.0),
            tolerance,
        },
    }
}

fn check(checks: &mut Vec<Check>, strict: bool, name: &str, pass: bool, detail: String) -> Result<()> {
    if strict && !pass {
        return Err(Error::BoundViolation(format!("{name}: {detail}")));
    }
    checks.push(Check {
        name: name.into(),
        pass,
        detail,
    });
    Ok(())
}

/// Runs the scenario at the given resolution and every requested analysis.
pub fn execute(s: &Scenario, cfg: &SolverConfig, datum: &Profile, strict: bool) -> Result<RunOutcome> {
    let r = run(cfg, datum)?;
    let a = &s.analyses;
    let mut checks = Vec::new();
    let need_family = a.jumps || a.measures || a.balances.is_some() || !a.oleinik.is_empty();
    let family = need_family.then(|| trace_discontinuities(&r, cfg.beta));
    let mut count = None;
    if let (true, Some(f)) = (a.jumps, &family) {
        let c = count_bound_for_run(f, &r);
        check(
            &mut checks,
            strict,
            "jump_count",
            c.pass,
            format!("M = {} <= {:.6}", c.m_count, c.bound),
        )?;
        count = Some(c);
    }
    let measures = match &family {
        Some(f) if a.measures || a.balances.is_some() || !a.oleinik.is_empty() => Some(build_measures(&r, f)?),
        _ => None,
    };
    let mut bounds = None;
    if let (true, Some(m), Some(f)) = (a.measures, &measures, &family) {
        let rep = measure_bounds_report(m, &r, f);
        for e in &rep.entries {
            check(
                &mut checks,
                strict,
                &format!("measure:{}", e.name),
                e.pass,
                format!("{:.6e} <= {:.6e}", e.lhs, e.rhs),
            )?;
        }
        bounds = Some(rep);
    }
    let mut balances = Vec::new();
    if let (Some(spec), Some(m), Some(f)) = (&a.balances, &measures, &family) {
        let tracer = CharacteristicTracer::new(&r);
        for region in sample_regions(&tracer, spec.seed, spec.count)? {
            balances.push(region_balance_with(&tracer, &region, f, m)?);
        }
        let failing = balances.iter().filter(|b| !b.pass).count();
        check(
            &mut checks,
            strict,
            "region_balances",
            failing == 0,
            format!("{failing} of {} regions fail", balances.len()),
        )?;
    }
    let mut oleinik = None;
    if let (false, Some(m), Some(f)) = (a.oleinik.is_empty(), &measures, &family) {
        let queries: Vec<(f64, f64, IntervalUnion)> = a
            .oleinik
            .iter()
            .map(|q| (q.t, q.s, IntervalUnion::new(q.set.clone())))
            .collect();
        let rep = oleinik_report(&r, &queries, f, m)?;
        check(
            &mut checks,
            strict,
            "oleinik",
            rep.pass,
            format!("fitted C = {:.6} <= {:.6}", rep.fitted_constant, rep.c_accept),
        )?;
        oleinik = Some(rep);
    }
    let oracle = a.oracle.as_ref().map(|o| oracle_report(o, &r));
    if let Some(o) = &oracle {
        if let Some(tol) = o.tolerance {
            check(
                &mut checks,
                strict,
                "oracle_l1",
                o.l1_error <= tol,
                format!("{:.6e} <= {tol:.6e}", o.l1_error),
            )?;
        }
    }
    Ok(RunOutcome {
        run: r,
        family,
        measures,
        bounds,
        count,
        balances,
        oleinik,
        oracle,
        checks,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn time_label(t: f64) -> String {
    format!("t_{t:.6}")
}

#[derive(Serialize)]
struct ConfigFile<'a> {
    scenario: &'a Scenario,
    solver: &'a SolverConfig,
}

/// Writes the artifact directory of one run.
pub fn write_artifacts(dir: &Path, s: &Scenario, out: &RunOutcome) -> Result<()> {
    for sub in ["snapshots", "measures", "reports"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let r = &out.run;
    write_json(&dir.join("config.json"), &ConfigFile { scenario: s, solver: &r.config })?;
    fs::write(dir.join("snapshots").join("t_0.000000.csv"), r.datum.to_csv())?;
    for (t, p) in &r.snapshots {
        fs::write(dir.join("snapshots").join(format!("{}.csv", time_label(*t))), p.to_csv())?;
    }
    fs::write(dir.join("snapshots").join("final.csv"), r.final_profile.to_csv())?;
    fs::write(dir.join("events.jsonl"), r.log.to_jsonl()?)?;
    fs::write(dir.join("functionals.csv"), r.functionals_csv())?;
    if let Some(m) = &out.measures {
        let md = dir.join("measures");
        for (name, meas) in [
            ("mu", &m.mu),
            ("mu_jump", &m.mu_jump),
            ("mu_cont", &m.mu_cont),
            ("mu_source", &m.mu_source),
            ("xi", &m.xi.xi),
            ("xi_jump", &m.xi.xi_jump),
            ("xi_cont", &m.xi.xi_cont),
        ] {
            fs::write(md.join(format!("{name}.csv")), meas.to_csv())?;
        }
    }
    let rd = dir.join("reports");
    if let Some(f) = &out.family {
        fs::write(rd.join("jumps.json"), f.to_json()? + "\n")?;
    }
    if let Some(c) = &out.count {
        write_json(&rd.join("jump_count.json"), c)?;
    }
    if let Some(b) = &out.bounds {
        write_json(&rd.join("measure_bounds.json"), b)?;
    }
    if !out.balances.is_empty() {
        write_json(&rd.join("balances.json"), &out.balances)?;
    }
    if let Some(o) = &out.oleinik {
        write_json(&rd.join("oleinik.json"), o)?;
    }
    if let Some(o) = &out.oracle {
        write_json(&rd.join("oracle.json"), o)?;
        fs::write(rd.join("oracle.csv"), format!("t,l1_error\n{:?},{:?}\n", o.t, o.l1_error))?;
    }
    write_json(&rd.join("checks.json"), &out.checks)?;
    Ok(())
}

/// Loads, runs and writes one scenario; returns the outcome.
pub fn run_scenario(path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let s = apply_overrides(&Scenario::load(path)?, opts);
    let (cfg, datum) = s.config()?;
    let out = execute(&s, &cfg, &datum, opts.strict)?;
    write_artifacts(out_dir, &s, &out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub epsilon: f64,
    pub tau: f64,
    pub beta: f64,
    pub l1_error: Option<f64>,
    pub jump_mass: Option<f64>,
    pub curves: Option<usize>,
    pub oleinik_constant: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub levels: Vec<LevelReport>,
    /// `log(e_k / e_{k+1}) / log(eps_k / eps_{k+1})` between consecutive levels.
    pub observed_orders: Vec<f64>,
    pub exceptional: Option<ExceptionalReport>,
    pub pass: bool,
}

/// Validated `(config, datum)` for every level of the schedule.
pub fn sweep_configs(s: &Scenario, sched: &SweepSchedule) -> Result<Vec<(SolverConfig, Profile)>> {
    if sched.levels.is_empty() {
        return Err(Error::ScheduleViolation { level: 0 });
    }
    let mut out = Vec::with_capacity(sched.levels.len());
    for (k, l) in sched.levels.iter().enumerate() {
        if k > 0 && l.epsilon >= sched.levels[k - 1].epsilon {
            return Err(Error::ScheduleViolation { level: k });
        }
        let pair = s.config_at(l.epsilon, l.tau, l.beta.or(s.beta)).map_err(|e| match e {
            Error::ConfigInvalid(_) => Error::ScheduleViolation { level: k },
            other => other,
        })?;
        out.push(pair);
    }
    Ok(out)
}

/// Runs every level of the scenario's sweep, concurrently up to `jobs`.
pub fn run_sweep_scenario(s: &Scenario, out_dir: Option<&Path>, opts: &RunOptions) -> Result<SweepReport> {
    let s = apply_overrides(s, opts);
    let sched = s
        .sweep
        .clone()
        .ok_or_else(|| Error::ConfigInvalid("scenario has no sweep schedule".into()))?;
    let configs = sweep_configs(&s, &sched)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<RunOutcome>> = pool.install(|| {
        configs
            .par_iter()
            .map(|(cfg, datum)| execute(&s, cfg, datum, opts.strict))
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out_dir {
        for (k, o) in outcomes.iter().enumerate() {
            write_artifacts(&dir.join("levels").join(k.to_string()), &s, o)?;
        }
    }
    let levels: Vec<LevelReport> = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| LevelReport {
            level: k,
            epsilon: o.run.config.epsilon,
            tau: o.run.config.tau,
            beta: o.run.config.beta,
            l1_error: o.oracle.as_ref().map(|r| r.l1_error),
            jump_mass: o.measures.as_ref().map(|m| m.mu_jump.mass()),
            curves: o.family.as_ref().map(|f| f.m_count),
            oleinik_constant: o.oleinik.as_ref().map(|r| r.fitted_constant),
            pass: o.pass(),
        })
        .collect();
    let observed_orders = levels
        .windows(2)
        .filter_map(|w| match (w[0].l1_error, w[1].l1_error) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).ln() / (w[0].epsilon / w[1].epsilon).ln()),
            _ => None,
        })
        .collect();
    let exceptional = if sched.exceptional_times {
        let runs: Vec<RunArtifacts> = outcomes.iter().map(|o| o.run.clone()).collect();
        let betas: Vec<f64> = runs.iter().map(|r| r.config.beta).collect();
        let opts = ExceptionalOptions {
            probe_times: sched.probe_times.clone(),
            ..Default::default()
        };
        Some(exceptional_times(&runs, &betas, &opts)?)
    } else {
        None
    };
    let pass = levels.iter().all(|l| l.pass);
    let report = SweepReport {
        name: s.name.clone(),
        levels,
        observed_orders,
        exceptional,
        pass,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir.join("reports"))?;
        write_json(&dir.join("reports").join("sweep.json"), &report)?;
    }
    Ok(report)
}

pub fn run_sweep(path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<SweepReport> {
    run_sweep_scenario(&Scenario::load(path)?, Some(out_dir), opts)
}

/// Total variation of the scenario datum at its nominal resolution.
pub fn datum_tv(s: &Scenario) -> Result<f64> {
    Ok(total_variation(&s.datum(s.epsilon)?))
}
