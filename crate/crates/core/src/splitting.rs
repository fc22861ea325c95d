//! Operator splitting for the balance law: homogeneous front tracking on
//! `(n tau, (n+1) tau)` followed by an explicit, cellwise source correction.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::bv::{glimm_functional, total_variation, Profile};
use crate::error::{Error, Result};
use crate::riemann::{solve_riemann_with_samples, FluxModel, Front};
use crate::tracking::{
    evolve, init_from_datum, position_tol, EventLog, EventRecord, FrontState, RecordKind,
    TrackingOptions, WaveHistory,
};

/// x-dependent part of a built-in source.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Forcing {
    #[default]
    None,
    /// `amp` for `x > at`, 0 otherwise.
    Step { at: f64, amp: f64 },
    /// Linear from 0 at `from` to `amp` at `to`, constant outside.
    Ramp { from: f64, to: f64, amp: f64 },
    /// `amp * exp(-((x - center) / width)^2)`.
    Gaussian { center: f64, width: f64, amp: f64 },
}

impl Forcing {
    fn value(&self, x: f64) -> f64 {
        match *self {
            Forcing::None => 0.0,
            Forcing::Step { at, amp } => {
                if x > at {
                    amp
                } else {
                    0.0
                }
            }
            Forcing::Ramp { from, to, amp } => amp * ((x - from) / (to - from)).clamp(0.0, 1.0),
            Forcing::Gaussian { center, width, amp } => {
                let z = (x - center) / width;
                amp * (-z * z).exp()
            }
        }
    }

    fn window(&self) -> Option<(f64, f64)> {
        match *self {
            Forcing::None => None,
            Forcing::Step { at, .. } => Some((at, at)),
            Forcing::Ramp { from, to, .. } => Some((from, to)),
            Forcing::Gaussian { center, width, .. } => {
                Some((center - 8.0 * width, center + 8.0 * width))
            }
        }
    }

    /// Integral of the forcing over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            Forcing::None => 0.0,
            Forcing::Step { at, amp } => amp * (b - at.clamp(a, b)),
            Forcing::Ramp { from, to, amp } => {
                // antiderivative of amp * clamp((x - from) / (to - from), 0, 1)
                let w = to - from;
                let anti = |x: f64| {
                    if x <= from {
                        0.0
                    } else if x <= to {
                        amp * (x - from) * (x - from) / (2.0 * w)
                    } else {
                        amp * (0.5 * w + (x - to))
                    }
                };
                anti(b) - anti(a)
            }
            Forcing::Gaussian { .. } => gauss_legendre(|x| self.value(x), a, b),
        }
    }

    /// `int_a^b |forcing'(x)| dx`, counting jumps as atoms.
    fn alpha_mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            Forcing::None => 0.0,
            Forcing::Step { at, amp } => {
                if at >= a && at < b {
                    amp.abs()
                } else {
                    0.0
                }
            }
            Forcing::Ramp { from, to, amp } => {
                let lo = a.max(from);
                let hi = b.min(to);
                if hi > lo {
                    amp.abs() * (hi - lo) / (to - from)
                } else {
                    0.0
                }
            }
            Forcing::Gaussian { center, .. } => {
                if center > a && center < b {
                    (self.value(center) - self.value(a)).abs()
                        + (self.value(b) - self.value(center)).abs()
                } else {
                    (self.value(b) - self.value(a)).abs()
                }
            }
        }
    }

    fn alpha_l1(&self) -> f64 {
        match *self {
            Forcing::None => 0.0,
            Forcing::Step { amp, .. } | Forcing::Ramp { amp, .. } => amp.abs(),
            Forcing::Gaussian { amp, .. } => 2.0 * amp.abs(),
        }
    }
}

type SourceFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;
type AlphaFn = dyn Fn(f64) -> f64 + Send + Sync;

/// User-supplied source `g(t, x, u)` with its domination data.
#[derive(Clone)]
pub struct CustomSource {
    g: Arc<SourceFn>,
    alpha: Arc<AlphaFn>,
    lipschitz: f64,
    alpha_l1: f64,
    /// Interval outside of which `g` does not depend on `x`; `None` when `g`
    /// never depends on `x`.
    support: Option<(f64, f64)>,
}

impl fmt::Debug for CustomSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSource")
            .field("lipschitz", &self.lipschitz)
            .field("alpha_l1", &self.alpha_l1)
            .field("support", &self.support)
            .finish()
    }
}

/// Source term `g(t, x, u) = -damping * u + forcing(x) [+ custom(t, x, u)]`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SourceModel {
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub forcing: Forcing,
    #[serde(skip)]
    custom: Option<CustomSource>,
}

impl SourceModel {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn damping(rate: f64) -> Self {
        Self {
            damping: rate,
            ..Self::default()
        }
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = forcing;
        self
    }

    /// Adds an arbitrary source. `alpha` must dominate `|g_x|`, `alpha_l1` is
    /// its integral and `support` bounds the region where `g` depends on `x`.
    pub fn with_custom<G, A>(
        mut self,
        g: G,
        lipschitz: f64,
        alpha: A,
        alpha_l1: f64,
        support: Option<(f64, f64)>,
    ) -> Result<Self>
    where
        G: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        A: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0 && alpha_l1 >= 0.0 && alpha_l1.is_finite()) {
            return Err(Error::ConfigInvalid(
                "custom source needs finite nonnegative L and alpha mass".into(),
            ));
        }
        let custom = CustomSource {
            g: Arc::new(g),
            alpha: Arc::new(alpha),
            lipschitz,
            alpha_l1,
            support,
        };
        // spot-check the Lipschitz constant in u
        for i in 0..=8 {
            let x = support.map_or(0.0, |(a, b)| a + (b - a) * i as f64 / 8.0);
            for k in 0..8 {
                let u = -2.0 + 0.5 * k as f64;
                let d = ((custom.g)(0.0, x, u + 0.5) - (custom.g)(0.0, x, u)).abs();
                if d > lipschitz * 0.5 * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::ConfigInvalid(format!(
                        "custom source is not {lipschitz}-Lipschitz in u near x = {x}, u = {u}"
                    )));
                }
            }
        }
        self.custom = Some(custom);
        Ok(self)
    }

    pub fn g(&self, t: f64, x: f64, u: f64) -> f64 {
        let mut v = -self.damping * u + self.forcing.value(x);
        if let Some(c) = &self.custom {
            v += (c.g)(t, x, u);
        }
        v
    }

    pub fn alpha(&self, x: f64) -> f64 {
        let mut a = match self.forcing {
            Forcing::Ramp { from, to, amp } if x > from && x < to => amp.abs() / (to - from),
            Forcing::Gaussian { center, width, amp } => {
                let z = (x - center) / width;
                (amp * 2.0 * z / width * (-z * z).exp()).abs()
            }
            _ => 0.0,
        };
        if let Some(c) = &self.custom {
            a += (c.alpha)(x);
        }
        a
    }

    pub fn is_zero(&self) -> bool {
        self.damping == 0.0 && self.forcing == Forcing::None && self.custom.is_none()
    }

    pub fn lipschitz(&self) -> f64 {
        self.damping.abs() + self.custom.as_ref().map_or(0.0, |c| c.lipschitz)
    }

    pub fn alpha_l1(&self) -> f64 {
        self.forcing.alpha_l1() + self.custom.as_ref().map_or(0.0, |c| c.alpha_l1)
    }

    pub fn has_custom(&self) -> bool {
        self.custom.is_some()
    }

    /// Interval outside of which `g` does not depend on `x`.
    pub fn x_window(&self) -> Option<(f64, f64)> {
        let a = self.forcing.window();
        let b = self.custom.as_ref().and_then(|c| c.support);
        match (a, b) {
            (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
            (a, b) => a.or(b),
        }
    }

    /// `(1/(b-a)) int_a^b g(t, x, v) dx`.
    pub fn average(&self, t: f64, v: f64, a: f64, b: f64) -> Result<f64> {
        let mut s = -self.damping * v + self.forcing.integral(a, b) / (b - a);
        if let Some(c) = &self.custom {
            s += gauss_legendre(|x| (c.g)(t, x, v), a, b) / (b - a);
        }
        if !s.is_finite() {
            return Err(Error::QuadratureFailure { x: 0.5 * (a + b), u: v });
        }
        Ok(s)
    }

    /// `int_a^b alpha`, with closed forms for the built-in forcings.
    pub fn alpha_mass(&self, a: f64, b: f64) -> f64 {
        let mut m = self.forcing.alpha_mass(a, b);
        if let Some(c) = &self.custom {
            m += gauss_legendre(|x| (c.alpha)(x), a, b);
        }
        m
    }
}

/// 16-point Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_rule() -> &'static [(f64, f64); 16] {
    static RULE: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 16;
        let mut rule = [(0.0, 0.0); N];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_rule().iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Cell average `g_j(t, v)` over `[j eps, (j+1) eps]`.
pub fn discretize_source(source: &SourceModel, epsilon: f64, t: f64, v: f64, j: i64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::ConfigInvalid(format!("epsilon = {epsilon} must be > 0")));
    }
    let a = j as f64 * epsilon;
    source.average(t, v, a, a + epsilon)
}

/// Parameters of a splitting run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub tau: f64,
    pub beta: f64,
    pub kappa: f64,
    pub delta_bar: f64,
    /// Growth constant `G`; derived from the source when absent.
    #[serde(default)]
    pub g_const: Option<f64>,
    pub t_final: f64,
    pub flux: FluxModel,
    #[serde(default)]
    pub source: SourceModel,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub perturb_speeds: bool,
    #[serde(default = "default_samples")]
    pub envelope_samples: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_samples() -> usize {
    crate::riemann::DEFAULT_ENVELOPE_SAMPLES
}

impl SolverConfig {
    pub fn new(flux: FluxModel, source: SourceModel, epsilon: f64, tau: f64, t_final: f64) -> Self {
        Self {
            epsilon,
            tau,
            beta: f64::NAN,
            kappa: f64::NAN,
            delta_bar: f64::NAN,
            g_const: None,
            t_final,
            flux,
            source,
            seed: None,
            perturb_speeds: false,
            envelope_samples: default_samples(),
            snapshot_times: Vec::new(),
        }
    }

    /// `G = L (delta_bar + 1) + 2 |alpha|_1 + 1`, or 0 without a source.
    pub fn growth_constant(&self) -> f64 {
        self.g_const.unwrap_or_else(|| {
            if self.source.is_zero() {
                0.0
            } else {
                self.source.lipschitz() * (self.delta_bar + 1.0) + 2.0 * self.source.alpha_l1() + 1.0
            }
        })
    }

    /// `delta_bar + G T`.
    pub fn upsilon_bound(&self) -> f64 {
        self.delta_bar + self.growth_constant() * self.t_final
    }

    /// Smallest admissible `beta` is strictly above this value.
    pub fn beta_floor(&self) -> f64 {
        4.0 * (self.epsilon + self.upsilon_bound() * self.tau)
    }

    /// Largest admissible `kappa` is strictly below this value.
    pub fn kappa_ceiling(&self) -> f64 {
        1.0 / (8.0 * self.upsilon_bound())
    }

    /// Fills `delta_bar`, `kappa` and `beta` when they are not set:
    /// `delta_bar = 1.05 Upsilon(datum)` (found by fixed point since kappa
    /// depends on it), `kappa` at half its ceiling, `beta` at twice its floor.
    pub fn with_auto_parameters(mut self, datum: &Profile) -> Self {
        let tv = total_variation(datum);
        let q = crate::bv::interaction_potential(datum);
        if !self.delta_bar.is_finite() {
            self.delta_bar = tv.max(1e-3) * 1.05;
            for _ in 0..50 {
                let k = if self.kappa.is_finite() { self.kappa } else { 0.5 * self.kappa_ceiling() };
                self.delta_bar = (tv + k * q).max(1e-3) * 1.05;
            }
        }
        if !self.kappa.is_finite() {
            self.kappa = 0.5 * self.kappa_ceiling();
        }
        if !self.beta.is_finite() {
            self.beta = 2.0 * self.beta_floor();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("tau", self.tau),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("delta_bar", self.delta_bar),
            ("T", self.t_final),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be finite and positive"));
            }
        }
        if self.tau > self.epsilon {
            return bad(format!(
                "tau = {} must satisfy 0 < tau <= epsilon = {}",
                self.tau, self.epsilon
            ));
        }
        let g = self.growth_constant();
        if !(g >= 0.0 && g.is_finite()) {
            return bad(format!("growth constant G = {g} must be finite and nonnegative"));
        }
        if self.beta <= self.beta_floor() {
            return bad(format!(
                "beta = {} must exceed 4(epsilon + (delta_bar + G T) tau) = {}",
                self.beta,
                self.beta_floor()
            ));
        }
        if self.kappa >= self.kappa_ceiling() {
            return bad(format!(
                "kappa = {} must be below 1/(8(delta_bar + G T)) = {}",
                self.kappa,
                self.kappa_ceiling()
            ));
        }
        self.flux.check_convexity()?;
        Ok(())
    }

    pub fn tracking_options(&self) -> TrackingOptions {
        TrackingOptions {
            epsilon: self.epsilon,
            kappa: self.kappa,
            tv_bound: self.upsilon_bound(),
            envelope_samples: self.envelope_samples,
            seed: self.seed,
            perturb_speeds: self.perturb_speeds,
            event_limit: None,
        }
    }

    /// Update instants `n tau <= T`, `n >= 1`.
    pub fn update_times(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut n = 1u64;
        loop {
            let t = n as f64 * self.tau;
            if t > self.t_final * (1.0 + 1e-12) {
                break;
            }
            v.push(t.min(self.t_final));
            n += 1;
        }
        v
    }
}

/// Jump at one position across an update: `pre` is the size at `t-`, `post`
/// the size at `t+` (zero for jumps created at cell boundaries).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateJump {
    pub x: f64,
    pub pre_size: f64,
    pub post_size: f64,
    pub cell_boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub n: usize,
    pub t: f64,
    pub pre: Profile,
    pub post: Profile,
    pub jumps: Vec<UpdateJump>,
    pub tv_pre: f64,
    pub tv_post: f64,
    pub upsilon_pre: f64,
    pub upsilon_post: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLabel {
    Initial,
    Collision,
    PreUpdate,
    PostUpdate,
    Final,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: f64,
    pub tv: f64,
    pub q: f64,
    pub upsilon: f64,
    pub label: TraceLabel,
}

/// Everything a run produces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub config: SolverConfig,
    pub datum: Profile,
    pub log: EventLog,
    pub history: WaveHistory,
    pub updates: Vec<UpdateRecord>,
    pub trace: Vec<TraceEntry>,
    pub snapshots: Vec<(f64, Profile)>,
    pub final_profile: Profile,
}

impl RunArtifacts {
    pub fn profile_at(&self, t: f64) -> Profile {
        self.history.profile_at(t)
    }

    /// Total decrease of the Glimm functional over `(s, t]`, summing the
    /// decreases between consecutive trace entries.
    pub fn upsilon_negative_variation(&self, s: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for w in self.trace.windows(2) {
            if w[1].t > s && w[1].t <= t {
                acc += (w[0].upsilon - w[1].upsilon).max(0.0);
            }
        }
        acc
    }

    pub fn functionals_csv(&self) -> String {
        let mut s = String::from("t,tv,q,upsilon,label\n");
        for e in &self.trace {
            let label = serde_json::to_string(&e.label).unwrap_or_default();
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?},{}\n",
                e.t,
                e.tv,
                e.q,
                e.upsilon,
                label.trim_matches('"')
            ));
        }
        s
    }
}

struct Group {
    x: f64,
    lo: usize,
    hi: usize,
    left: f64,
    right: f64,
}

fn groups_of(s: &FrontState) -> Vec<Group> {
    let mut out: Vec<Group> = Vec::new();
    for (i, f) in s.fronts.iter().enumerate() {
        let x = f.position_at(s.time);
        match out.last_mut() {
            Some(g) if x <= g.x + position_tol(x) => {
                g.hi = i + 1;
                g.right = f.right_state;
            }
            _ => out.push(Group {
                x,
                lo: i,
                hi: i + 1,
                left: f.left_state,
                right: f.right_state,
            }),
        }
    }
    out
}

/// Post-update values of a constant region `(a, b)` with value `v`: the
/// first value and then `(boundary, value)` for every interior cell edge.
fn region_pieces(
    source: &SourceModel,
    t: f64,
    v: f64,
    a: f64,
    b: f64,
    eps: f64,
    tau: f64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let Some((wa, wb)) = source.x_window() else {
        let g = source.average(t, v, 0.0, eps)?;
        return Ok((v + tau * g, Vec::new()));
    };
    let j_lo = if a.is_finite() {
        ((a + position_tol(a)) / eps).floor() as i64
    } else {
        i64::MIN
    };
    let j_hi = if b.is_finite() {
        ((b - position_tol(b)) / eps).ceil() as i64 - 1
    } else {
        i64::MAX
    };
    let j_hi = j_hi.max(j_lo);
    let jw_lo = (wa / eps).floor() as i64 - 1;
    let jw_hi = (wb / eps).floor() as i64 + 1;
    let j_start = j_lo.max(jw_lo).min(j_hi);
    let j_end = j_hi.min(jw_hi).max(j_start);
    let cell = |j: i64| -> Result<f64> {
        let c0 = j as f64 * eps;
        Ok(v + tau * source.average(t, v, c0, c0 + eps)?)
    };
    let first = cell(j_start)?;
    let mut rest = Vec::new();
    for j in j_start + 1..=j_end {
        rest.push((j as f64 * eps, cell(j)?));
    }
    Ok((first, rest))
}

/// Result of one source correction.
pub struct SourceStep {
    pub state: FrontState,
    pub records: Vec<EventRecord>,
    pub update: UpdateRecord,
}

/// Applies `w(t+) = u(t-) + tau g_j(t, u(t-))` cellwise and re-solves every
/// jump whose states changed.
pub fn apply_source_step(
    s: &FrontState,
    source: &SourceModel,
    tau: f64,
    flux: &FluxModel,
    opts: &TrackingOptions,
    n: usize,
) -> Result<SourceStep> {
    let t = s.time;
    let eps = opts.epsilon;
    let groups = groups_of(s);
    let pre = s.profile();
    let (tv_pre, _, ups_pre) = s.readings(opts.kappa);

    let mut pieces = Vec::with_capacity(groups.len() + 1);
    for k in 0..=groups.len() {
        let a = if k == 0 { f64::NEG_INFINITY } else { groups[k - 1].x };
        let b = if k == groups.len() { f64::INFINITY } else { groups[k].x };
        let v = if k == 0 { s.far_left } else { groups[k - 1].right };
        pieces.push(region_pieces(source, t, v, a, b, eps, tau)?);
    }

    let mut next = s.clone();
    next.far_left = pieces[0].0;
    let mut fronts: Vec<Front> = Vec::with_capacity(s.fronts.len());
    let mut records = Vec::new();
    let mut jumps = Vec::new();
    let mut emit = |next: &mut FrontState,
                    fronts: &mut Vec<Front>,
                    x: f64,
                    l: f64,
                    r: f64,
                    old: &[Front]|
     -> Result<()> {
        let fan = solve_riemann_with_samples(l, r, flux, eps, opts.envelope_samples)?;
        let new = next.fronts_from_fan(&fan, t, x, eps);
        records.push(EventRecord {
            kind: RecordKind::SourceUpdate,
            t,
            x,
            in_ids: old.iter().map(|f| f.id).collect(),
            out_ids: new.iter().map(|f| f.id).collect(),
            in_sizes: old.iter().map(Front::size).collect(),
            out_sizes: new.iter().map(Front::size).collect(),
            tv_before: tv_pre,
            tv_after: f64::NAN,
            upsilon_before: ups_pre,
            upsilon_after: f64::NAN,
            tv_drop: old.iter().map(|f| f.size().abs()).sum::<f64>()
                - new.iter().map(|f| f.size().abs()).sum::<f64>(),
            upsilon_drop: f64::NAN,
            predicted_drop: 0.0,
            beta_involved: false,
            out_fronts: new.clone(),
        });
        fronts.extend(new);
        Ok(())
    };

    for k in 0..=groups.len() {
        if k > 0 {
            let g = &groups[k - 1];
            let left_new = pieces[k - 1].1.last().map_or(pieces[k - 1].0, |p| p.1);
            let right_new = pieces[k].0;
            let old = &s.fronts[g.lo..g.hi];
            jumps.push(UpdateJump {
                x: g.x,
                pre_size: g.right - g.left,
                post_size: right_new - left_new,
                cell_boundary: false,
            });
            if left_new == g.left && right_new == g.right {
                fronts.extend_from_slice(old);
            } else {
                emit(&mut next, &mut fronts, g.x, left_new, right_new, old)?;
            }
        }
        let mut prev = pieces[k].0;
        for &(x, v) in &pieces[k].1 {
            if v != prev {
                jumps.push(UpdateJump {
                    x,
                    pre_size: 0.0,
                    post_size: v - prev,
                    cell_boundary: true,
                });
                emit(&mut next, &mut fronts, x, prev, v, &[])?;
            }
            prev = v;
        }
    }
    next.fronts = fronts;
    let (tv_post, _, ups_post) = next.readings(opts.kappa);
    for r in &mut records {
        r.tv_after = tv_post;
        r.upsilon_after = ups_post;
        r.upsilon_drop = ups_pre - ups_post;
    }
    let update = UpdateRecord {
        n,
        t,
        pre,
        post: next.profile(),
        jumps,
        tv_pre,
        tv_post,
        upsilon_pre: ups_pre,
        upsilon_post: ups_post,
    };
    Ok(SourceStep {
        state: next,
        records,
        update,
    })
}

/// Runs the splitting scheme on `[0, T]` from the piecewise-constant datum.
pub fn run(config: &SolverConfig, datum: &Profile) -> Result<RunArtifacts> {
    config.validate()?;
    let m = config.upsilon_bound();
    let readings = glimm_functional(datum, config.kappa, m)?;
    if readings.upsilon > config.delta_bar * (1.0 + 1e-12) {
        return Err(Error::ConfigInvalid(format!(
            "Glimm functional of the datum {} exceeds delta_bar = {}",
            readings.upsilon, config.delta_bar
        )));
    }
    let opts = config.tracking_options();
    let flux = &config.flux;
    let kappa = config.kappa;
    let g_const = config.growth_constant();
    let slack = 1e-9 * (1.0 + config.delta_bar);
    let check = |t: f64, ups: f64| -> Result<()> {
        let bound = config.delta_bar + g_const * t;
        if ups > bound + slack {
            return Err(Error::TvBlowup { t, upsilon: ups, bound });
        }
        Ok(())
    };

    let (mut state, init) = init_from_datum(datum, flux, &opts, 0.0)?;
    let mut log = EventLog::default();
    let mut history = WaveHistory::new(0.0, state.far_left);
    for r in &init {
        history.record(r)?;
    }
    log.extend(init);
    let entry = |t: f64, s: &FrontState, label: TraceLabel| {
        let (tv, q, upsilon) = s.readings(kappa);
        TraceEntry { t, tv, q, upsilon, label }
    };
    let mut trace = vec![entry(0.0, &state, TraceLabel::Initial)];
    check(0.0, trace[0].upsilon)?;
    let mut updates = Vec::new();

    let advance = |state: &FrontState,
                       t: f64,
                       log: &mut EventLog,
                       history: &mut WaveHistory,
                       trace: &mut Vec<TraceEntry>|
     -> Result<FrontState> {
        let (next, recs) = evolve(state, t, flux, &opts)?;
        for r in &recs {
            history.record(r)?;
            let q = (r.upsilon_after - r.tv_after) / kappa;
            trace.push(TraceEntry {
                t: r.t,
                tv: r.tv_after,
                q,
                upsilon: r.upsilon_after,
                label: TraceLabel::Collision,
            });
            check(r.t, r.upsilon_after)?;
        }
        log.extend(recs);
        Ok(next)
    };

    for (i, t) in config.update_times().into_iter().enumerate() {
        state = advance(&state, t, &mut log, &mut history, &mut trace)?;
        trace.push(entry(t, &state, TraceLabel::PreUpdate));
        let step = apply_source_step(&state, &config.source, config.tau, flux, &opts, i + 1)?;
        for r in &step.records {
            history.record(r)?;
        }
        log.extend(step.records);
        history.set_background(t, step.state.far_left);
        state = step.state;
        trace.push(entry(t, &state, TraceLabel::PostUpdate));
        check(t, trace.last().unwrap().upsilon)?;
        updates.push(step.update);
    }
    state = advance(&state, config.t_final, &mut log, &mut history, &mut trace)?;
    trace.push(entry(config.t_final, &state, TraceLabel::Final));
    history.finish(config.t_final);

    let snapshots = config
        .snapshot_times
        .iter()
        .filter(|t| **t >= 0.0 && **t <= config.t_final)
        .map(|&t| (t, history.profile_at(t)))
        .collect();
    Ok(RunArtifacts {
        config: config.clone(),
        datum: datum.clone(),
        log,
        history,
        updates,
        trace,
        snapshots,
        final_profile: state.profile(),
    })
}

/// Piecewise-constant sampling of `u0` on the grid `x_k = x0 + k h`, using
/// the midpoint value on every cell of `[x0, x1]` and the far-field values
/// outside.
pub fn discretize_datum<F: Fn(f64) -> f64>(u0: F, x0: f64, x1: f64, h: f64) -> Result<Profile> {
    if !(h > 0.0 && x1 > x0) {
        return Err(Error::InvalidProfile(format!("bad grid [{x0}, {x1}] with step {h}")));
    }
    let n = ((x1 - x0) / h).round().max(1.0) as usize;
    let h = (x1 - x0) / n as f64;
    let mut bps = Vec::with_capacity(n + 1);
    let mut vals = vec![u0(x0 - h)];
    for k in 0..n {
        bps.push(x0 + k as f64 * h);
        vals.push(u0(x0 + (k as f64 + 0.5) * h));
    }
    bps.push(x1);
    vals.push(u0(x1 + h));
    Profile::with_tolerance(bps, vals, 0.0)
}
