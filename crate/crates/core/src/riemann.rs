//! Scalar Riemann problems: flux models, convex/concave envelopes and the
//! ε-discretized wave fans used as building blocks of front tracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of envelope samples over a jump interval when none is given.
pub const DEFAULT_ENVELOPE_SAMPLES: usize = 1024;

/// Named flux families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FluxKind {
    /// `u^2 / 2`
    Burgers,
    /// `u^3`
    Cubic,
    /// `u^4 / 4`
    Quartic,
    /// Cubic Hermite interpolation of `(u, f(u))` samples.
    CustomTable { points: Vec<(f64, f64)> },
}

/// A flux function together with the constants the estimates need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxModel {
    kind: FluxKind,
    f_second_bound: f64,
    convexity_const: f64,
    working_range: (f64, f64),
    declared_convex: bool,
    tol_u: f64,
    #[serde(skip)]
    table_slopes: Vec<f64>,
}

impl FluxModel {
    pub fn burgers() -> Self {
        Self::burgers_on((-1e6, 1e6))
    }

    pub fn burgers_on(range: (f64, f64)) -> Self {
        Self {
            kind: FluxKind::Burgers,
            f_second_bound: 1.0,
            convexity_const: 1.0,
            working_range: range,
            declared_convex: true,
            tol_u: default_tol(range),
            table_slopes: Vec::new(),
        }
    }

    pub fn cubic(range: (f64, f64)) -> Result<Self> {
        check_range(range)?;
        let m = range.0.abs().max(range.1.abs());
        Ok(Self {
            kind: FluxKind::Cubic,
            f_second_bound: 6.0 * m,
            convexity_const: 0.0,
            working_range: range,
            declared_convex: false,
            tol_u: default_tol(range),
            table_slopes: Vec::new(),
        })
    }

    /// `u^4/4`: convex but not uniformly (f'' vanishes at 0).
    pub fn quartic(range: (f64, f64)) -> Result<Self> {
        check_range(range)?;
        let m = range.0.abs().max(range.1.abs());
        let c = if range.0 > 0.0 || range.1 < 0.0 {
            let n = range.0.abs().min(range.1.abs());
            3.0 * n * n
        } else {
            0.0
        };
        Ok(Self {
            kind: FluxKind::Quartic,
            f_second_bound: 3.0 * m * m,
            convexity_const: c,
            working_range: range,
            declared_convex: true,
            tol_u: default_tol(range),
            table_slopes: Vec::new(),
        })
    }

    /// Flux from a table of `(u, f(u))` pairs with strictly increasing `u`.
    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidFlux("table needs at least 3 rows".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidFlux("table abscissae must increase".into()));
        }
        let range = (points[0].0, points[points.len() - 1].0);
        let slopes = hermite_slopes(&points);
        let mut model = Self {
            kind: FluxKind::CustomTable { points },
            f_second_bound: 0.0,
            convexity_const: 0.0,
            working_range: range,
            declared_convex: false,
            tol_u: default_tol(range),
            table_slopes: slopes,
        };
        let n = 4096;
        let (a, b) = range;
        let mut max2: f64 = 0.0;
        let mut min2 = f64::INFINITY;
        for i in 0..=n {
            let u = a + (b - a) * i as f64 / n as f64;
            let s = model.f_second(u);
            max2 = max2.max(s.abs());
            min2 = min2.min(s);
        }
        model.f_second_bound = max2;
        if min2 > 0.0 {
            model.convexity_const = min2;
            model.declared_convex = true;
        }
        Ok(model)
    }

    /// Reads a two-column `u,f` CSV (an optional header line is skipped).
    pub fn from_table_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or(Error::Csv {
                line: i + 1,
                msg: "expected two columns".into(),
            })?;
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(u), Ok(f)) => points.push((u, f)),
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::Csv {
                        line: i + 1,
                        msg: format!("cannot parse `{line}`"),
                    })
                }
            }
        }
        Self::from_table(points)
    }

    /// Overrides the working range (and the derived tolerance/bounds).
    pub fn with_range(self, range: (f64, f64)) -> Result<Self> {
        check_range(range)?;
        match self.kind {
            FluxKind::Burgers => Ok(Self::burgers_on(range)),
            FluxKind::Cubic => Self::cubic(range),
            FluxKind::Quartic => Self::quartic(range),
            FluxKind::CustomTable { .. } => Ok(Self {
                working_range: range,
                tol_u: default_tol(range),
                ..self
            }),
        }
    }

    /// Reports whether `f'(z+h) - f'(z) >= c h` holds on a sample grid.
    pub fn check_convexity(&self) -> Result<()> {
        let c = self.convexity_const;
        if c <= 0.0 {
            return Ok(());
        }
        let (a, b) = finite_range(self.working_range);
        let n = 64;
        let step = (b - a) / n as f64;
        for i in 0..n {
            let z = a + step * i as f64;
            for k in 1..=(n - i) {
                let h = step * k as f64;
                if self.f_prime(z + h) - self.f_prime(z) < c * h * (1.0 - 1e-9) - 1e-12 {
                    return Err(Error::InvalidFlux(format!(
                        "convexity constant {c} fails at z = {z}, h = {h}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FluxKind::Burgers => "burgers",
            FluxKind::Cubic => "cubic",
            FluxKind::Quartic => "quartic",
            FluxKind::CustomTable { .. } => "custom-table",
        }
    }

    pub fn f_second_bound(&self) -> f64 {
        self.f_second_bound
    }

    pub fn convexity_const(&self) -> f64 {
        self.convexity_const
    }

    pub fn working_range(&self) -> (f64, f64) {
        self.working_range
    }

    pub fn is_convex(&self) -> bool {
        self.declared_convex
    }

    pub fn tol_u(&self) -> f64 {
        self.tol_u
    }

    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => 0.5 * u * u,
            FluxKind::Cubic => u * u * u,
            FluxKind::Quartic => 0.25 * (u * u) * (u * u),
            FluxKind::CustomTable { points } => self.hermite(points, u).0,
        }
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => u,
            FluxKind::Cubic => 3.0 * u * u,
            FluxKind::Quartic => u * u * u,
            FluxKind::CustomTable { points } => self.hermite(points, u).1,
        }
    }

    pub fn f_second(&self, u: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => 1.0,
            FluxKind::Cubic => 6.0 * u,
            FluxKind::Quartic => 3.0 * u * u,
            FluxKind::CustomTable { points } => self.hermite(points, u).2,
        }
    }

    /// Divided difference `(f(b) - f(a)) / (b - a)`, in closed form for the
    /// polynomial fluxes.
    pub fn chord_slope(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            FluxKind::Burgers => 0.5 * (a + b),
            FluxKind::Cubic => a * a + a * b + b * b,
            FluxKind::Quartic => 0.25 * (a + b) * (a * a + b * b),
            FluxKind::CustomTable { .. } => {
                if a == b {
                    self.f_prime(a)
                } else {
                    (self.f(b) - self.f(a)) / (b - a)
                }
            }
        }
    }

    fn check_state(&self, u: f64) -> Result<()> {
        let (lo, hi) = self.working_range;
        let slack = 1e-9 * (hi - lo).min(1e6);
        if !u.is_finite() || u < lo - slack || u > hi + slack {
            return Err(Error::StateOutOfRange {
                state: u,
                min: lo,
                max: hi,
            });
        }
        Ok(())
    }

    fn hermite(&self, points: &[(f64, f64)], u: f64) -> (f64, f64, f64) {
        let n = points.len();
        let i = points
            .partition_point(|p| p.0 <= u)
            .clamp(1, n - 1)
            - 1;
        let (x0, y0) = points[i];
        let (x1, y1) = points[i + 1];
        let (m0, m1) = (self.table_slopes[i], self.table_slopes[i + 1]);
        let h = x1 - x0;
        let t = (u - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let f = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let df = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * h * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * h * m1)
            / h;
        let d2f = ((12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * h * m0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * h * m1)
            / (h * h);
        (f, df, d2f)
    }
}

fn hermite_slopes(points: &[(f64, f64)]) -> Vec<f64> {
    let n = points.len();
    let secant = |i: usize| (points[i + 1].1 - points[i].1) / (points[i + 1].0 - points[i].0);
    (0..n)
        .map(|i| {
            let h = |k: usize| points[k + 1].0 - points[k].0;
            if i == 0 {
                secant(0) - h(0) * (secant(1) - secant(0)) / (h(0) + h(1))
            } else if i == n - 1 {
                secant(n - 2) + h(n - 2) * (secant(n - 2) - secant(n - 3)) / (h(n - 3) + h(n - 2))
            } else {
                let (h0, h1) = (points[i].0 - points[i - 1].0, points[i + 1].0 - points[i].0);
                (secant(i - 1) * h1 + secant(i) * h0) / (h0 + h1)
            }
        })
        .collect()
}

fn check_range(range: (f64, f64)) -> Result<()> {
    if !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(Error::InvalidFlux(format!(
            "invalid working range [{}, {}]",
            range.0, range.1
        )));
    }
    Ok(())
}

fn finite_range(range: (f64, f64)) -> (f64, f64) {
    (range.0.max(-1e3), range.1.min(1e3))
}

fn default_tol(range: (f64, f64)) -> f64 {
    let (a, b) = finite_range(range);
    1e-12 * (b - a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveKind {
    Shock,
    RarefactionStep,
}

/// One discontinuity of a self-similar fan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub left: f64,
    pub right: f64,
    pub speed: f64,
    pub kind: WaveKind,
}

impl Wave {
    pub fn size(&self) -> f64 {
        self.right - self.left
    }
}

/// Fronts sharing one origin, ordered by strictly increasing speed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveFan {
    pub waves: Vec<Wave>,
}

impl WaveFan {
    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn total_size(&self) -> f64 {
        self.waves.iter().map(Wave::size).sum()
    }

    /// Value of the self-similar fan at `xi = (x - x0) / t`.
    pub fn value_at(&self, left: f64, xi: f64) -> f64 {
        let mut v = left;
        for w in &self.waves {
            if xi >= w.speed {
                v = w.right;
            }
        }
        v
    }
}

/// Moving discontinuity of a front-tracking state.
///
/// The front sits at `origin_x` at time `origin_t` and travels with
/// constant `speed` until it is removed by an interaction or update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub id: usize,
    pub origin_t: f64,
    pub origin_x: f64,
    pub speed: f64,
    pub left_state: f64,
    pub right_state: f64,
    pub kind: WaveKind,
    pub beta_flag: bool,
}

impl Front {
    pub fn from_wave(id: usize, wave: &Wave, t: f64, x: f64) -> Self {
        Self {
            id,
            origin_t: t,
            origin_x: x,
            speed: wave.speed,
            left_state: wave.left,
            right_state: wave.right,
            kind: wave.kind,
            beta_flag: false,
        }
    }

    pub fn size(&self) -> f64 {
        self.right_state - self.left_state
    }

    pub fn position_at(&self, t: f64) -> f64 {
        self.origin_x + self.speed * (t - self.origin_t)
    }
}

pub fn rankine_hugoniot_speed(u_l: f64, u_r: f64, flux: &FluxModel) -> Result<f64> {
    flux.check_state(u_l)?;
    flux.check_state(u_r)?;
    if (u_r - u_l).abs() <= flux.tol_u {
        return Err(Error::DegenerateJump {
            left: u_l,
            right: u_r,
        });
    }
    Ok(flux.chord_slope(u_l, u_r))
}

/// Lower convex hull of points with increasing abscissae.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Hull vertices, a subset of the input samples.
    pub vertices: Vec<(f64, f64)>,
    /// Index of each vertex in the input sample list.
    pub indices: Vec<usize>,
}

impl Envelope {
    pub fn eval(&self, u: f64) -> f64 {
        let v = &self.vertices;
        let i = v.partition_point(|p| p.0 <= u).clamp(1, v.len() - 1) - 1;
        let (x0, y0) = v[i];
        let (x1, y1) = v[i + 1];
        y0 + (y1 - y0) * (u - x0) / (x1 - x0)
    }
}

/// Monotone-chain lower hull. Collinear interior points are dropped. The
/// concave envelope of `f` is `-lower_convex_envelope(-f)`.
pub fn lower_convex_envelope(samples: &[(f64, f64)]) -> Result<Envelope> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(samples.len()));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidFlux(
            "envelope samples must have strictly increasing abscissae".into(),
        ));
    }
    let mut hull: Vec<usize> = Vec::with_capacity(samples.len());
    for (i, p) in samples.iter().enumerate() {
        while hull.len() >= 2 {
            let a = samples[hull[hull.len() - 2]];
            let b = samples[hull[hull.len() - 1]];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    Ok(Envelope {
        vertices: hull.iter().map(|&i| samples[i]).collect(),
        indices: hull,
    })
}

/// Solves the Riemann problem `(u_l, u_r)` and discretizes rarefactions into
/// steps of size at most `epsilon`.
pub fn solve_riemann(u_l: f64, u_r: f64, flux: &FluxModel, epsilon: f64) -> Result<WaveFan> {
    solve_riemann_with_samples(u_l, u_r, flux, epsilon, DEFAULT_ENVELOPE_SAMPLES)
}

pub fn solve_riemann_with_samples(
    u_l: f64,
    u_r: f64,
    flux: &FluxModel,
    epsilon: f64,
    samples: usize,
) -> Result<WaveFan> {
    if !(epsilon > 0.0) {
        return Err(Error::ConfigInvalid(format!("epsilon = {epsilon} must be > 0")));
    }
    flux.check_state(u_l)?;
    flux.check_state(u_r)?;
    if (u_r - u_l).abs() <= flux.tol_u {
        return Ok(WaveFan::default());
    }
    let waves = if flux.is_convex() {
        if u_l > u_r {
            vec![Wave {
                left: u_l,
                right: u_r,
                speed: flux.chord_slope(u_l, u_r),
                kind: WaveKind::Shock,
            }]
        } else {
            rarefaction_steps(u_l, u_r, flux, epsilon)
        }
    } else {
        envelope_waves(u_l, u_r, flux, epsilon, samples.max(2))?
    };
    Ok(WaveFan {
        waves: enforce_increasing_speeds(waves, flux),
    })
}

/// Uniform partition of `[from, to]` into `ceil(|to-from|/eps)` steps; every
/// step travels with the Rankine-Hugoniot speed of its own jump.
fn rarefaction_steps(from: f64, to: f64, flux: &FluxModel, epsilon: f64) -> Vec<Wave> {
    let delta = to - from;
    let n = ((delta.abs() / epsilon) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = delta / n as f64;
    let mut waves = Vec::with_capacity(n);
    let mut left = from;
    for k in 1..=n {
        let right = if k == n { to } else { from + h * k as f64 };
        waves.push(Wave {
            left,
            right,
            speed: flux.chord_slope(left, right),
            kind: WaveKind::RarefactionStep,
        });
        left = right;
    }
    waves
}

fn envelope_waves(
    u_l: f64,
    u_r: f64,
    flux: &FluxModel,
    epsilon: f64,
    samples: usize,
) -> Result<Vec<Wave>> {
    let upward = u_l < u_r;
    let (lo, hi) = if upward { (u_l, u_r) } else { (u_r, u_l) };
    let sign = if upward { 1.0 } else { -1.0 };
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let u = if i + 1 == samples {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (samples - 1) as f64
            };
            (u, sign * flux.f(u))
        })
        .collect();
    let env = lower_convex_envelope(&pts)?;

    // Pieces in increasing u: shocks span several samples, runs of
    // single-sample edges form rarefaction intervals.
    enum Piece {
        Shock(f64, f64),
        Fan(f64, f64),
    }
    let mut pieces: Vec<Piece> = Vec::new();
    for w in env.indices.windows(2) {
        let (a, b) = (pts[w[0]].0, pts[w[1]].0);
        if w[1] - w[0] > 1 {
            pieces.push(Piece::Shock(a, b));
        } else if let Some(Piece::Fan(_, end)) = pieces.last_mut() {
            *end = b;
        } else {
            pieces.push(Piece::Fan(a, b));
        }
    }
    if !upward {
        pieces.reverse();
    }
    let mut waves = Vec::new();
    for piece in pieces {
        match piece {
            Piece::Shock(a, b) => {
                let (l, r) = if upward { (a, b) } else { (b, a) };
                waves.push(Wave {
                    left: l,
                    right: r,
                    speed: flux.chord_slope(l, r),
                    kind: WaveKind::Shock,
                });
            }
            Piece::Fan(a, b) => {
                let (l, r) = if upward { (a, b) } else { (b, a) };
                waves.extend(rarefaction_steps(l, r, flux, epsilon));
            }
        }
    }
    Ok(waves)
}

/// Merges neighbouring waves until speeds strictly increase.
fn enforce_increasing_speeds(waves: Vec<Wave>, flux: &FluxModel) -> Vec<Wave> {
    let mut out: Vec<Wave> = Vec::with_capacity(waves.len());
    for w in waves {
        out.push(w);
        while out.len() >= 2 {
            let n = out.len();
            if out[n - 1].speed > out[n - 2].speed {
                break;
            }
            let b = out.pop().unwrap();
            let a = out.pop().unwrap();
            out.push(Wave {
                left: a.left,
                right: b.right,
                speed: flux.chord_slope(a.left, b.right),
                kind: WaveKind::Shock,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rh_speed_examples() {
        let b = FluxModel::burgers();
        assert_eq!(rankine_hugoniot_speed(1.0, 0.0, &b).unwrap(), 0.5);
        assert_eq!(rankine_hugoniot_speed(2.0, 0.0, &b).unwrap(), 1.0);
        assert_abs_diff_eq!(rankine_hugoniot_speed(0.3, 0.7, &b).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(
            rankine_hugoniot_speed(0.3, 0.3, &b),
            Err(Error::DegenerateJump { .. })
        ));
    }

    #[test]
    fn chord_slope_matches_quotient() {
        let c = FluxModel::cubic((-2.0, 2.0)).unwrap();
        let q = FluxModel::quartic((-2.0, 2.0)).unwrap();
        for (a, b) in [(0.3, -1.1), (1.5, 0.25), (-0.7, 1.9)] {
            for m in [&c, &q] {
                let direct = (m.f(b) - m.f(a)) / (b - a);
                assert_abs_diff_eq!(m.chord_slope(a, b), direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn envelope_of_convex_samples_is_identity() {
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let u = i as f64 / 20.0;
                (u, 0.5 * u * u)
            })
            .collect();
        let env = lower_convex_envelope(&pts).unwrap();
        assert_eq!(env.vertices, pts);
    }

    #[test]
    fn envelope_of_tent_is_chord() {
        let env = lower_convex_envelope(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert_eq!(env.vertices, vec![(0.0, 0.0), (2.0, 0.0)]);
        assert!(matches!(
            lower_convex_envelope(&[(0.0, 0.0)]),
            Err(Error::InsufficientSamples(1))
        ));
    }

    /// A sample is a lower-hull vertex iff it lies strictly below every
    /// chord joining a sample on its left to one on its right.
    fn brute_hull(pts: &[(f64, f64)]) -> Vec<usize> {
        let n = pts.len();
        (0..n)
            .filter(|&i| {
                (0..i).all(|j| {
                    (i + 1..n).all(|k| {
                        let (a, b, p) = (pts[j], pts[k], pts[i]);
                        let chord = a.1 + (b.1 - a.1) * (p.0 - a.0) / (b.0 - a.0);
                        p.1 < chord
                    })
                })
            })
            .collect()
    }

    #[test]
    fn cubic_envelope_matches_brute_force() {
        let pts: Vec<(f64, f64)> = (0..=8)
            .map(|i| {
                let u = -1.0 + 0.25 * i as f64;
                (u, u * u * u)
            })
            .collect();
        let env = lower_convex_envelope(&pts).unwrap();
        let brute = brute_hull(&pts);
        assert_eq!(env.indices, brute);
        // chord from (-1,-1) to the tangency sample u = 0.5, then f itself
        assert_eq!(brute, vec![0, 6, 7, 8]);
        assert_eq!(env.vertices[0], (-1.0, -1.0));
        assert_eq!(env.vertices[1], (0.5, 0.125));
    }

    #[test]
    fn burgers_shock_fan() {
        let fan = solve_riemann(1.0, 0.0, &FluxModel::burgers(), 0.25).unwrap();
        assert_eq!(fan.len(), 1);
        assert_eq!(fan.waves[0].kind, WaveKind::Shock);
        assert_eq!(fan.waves[0].speed, 0.5);
    }

    #[test]
    fn burgers_rarefaction_fan() {
        let fan = solve_riemann(0.0, 1.0, &FluxModel::burgers(), 0.5).unwrap();
        let states: Vec<_> = fan.waves.iter().map(|w| (w.left, w.right, w.speed)).collect();
        assert_eq!(states, vec![(0.0, 0.5, 0.25), (0.5, 1.0, 0.75)]);
        assert!(fan.waves.iter().all(|w| w.kind == WaveKind::RarefactionStep));
    }

    #[test]
    fn trivial_riemann_is_empty() {
        for m in [FluxModel::burgers(), FluxModel::cubic((-2.0, 2.0)).unwrap()] {
            assert!(solve_riemann(0.3, 0.3, &m, 0.1).unwrap().is_empty());
        }
    }

    #[test]
    fn out_of_range_state_rejected() {
        let m = FluxModel::cubic((-1.0, 1.0)).unwrap();
        assert!(matches!(
            solve_riemann(0.0, 3.0, &m, 0.1),
            Err(Error::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn cubic_upward_jump_has_shock_then_fan() {
        // lower envelope of u^3 on [-1, 1]: chord to the tangency 0.5, then fan
        let m = FluxModel::cubic((-1.0, 1.0)).unwrap();
        let fan = solve_riemann(-1.0, 1.0, &m, 0.1).unwrap();
        let first = fan.waves[0];
        assert_eq!(first.kind, WaveKind::Shock);
        assert_eq!(first.left, -1.0);
        assert!((first.right - 0.5).abs() < 4.0 / 1023.0);
        assert!(fan.waves[1..].iter().all(|w| w.kind == WaveKind::RarefactionStep));
        assert_abs_diff_eq!(fan.total_size(), 2.0, epsilon = 1e-12);
        assert!(fan.waves.windows(2).all(|w| w[0].speed < w[1].speed));
    }

    #[test]
    fn cubic_downward_jump_in_convex_region_is_shock() {
        let m = FluxModel::cubic((-1.0, 1.0)).unwrap();
        let fan = solve_riemann(1.0, 0.2, &m, 0.1).unwrap();
        assert_eq!(fan.len(), 1);
        assert_eq!(fan.waves[0].kind, WaveKind::Shock);
        // upward in the concave region u < 0: shock (chord lies below f)
        let fan = solve_riemann(-1.0, -0.2, &m, 0.1).unwrap();
        assert_eq!(fan.len(), 1);
    }

    #[test]
    fn table_flux_reproduces_burgers() {
        let pts: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let u = -2.0 + 0.1 * i as f64;
                (u, 0.5 * u * u)
            })
            .collect();
        let m = FluxModel::from_table(pts).unwrap();
        assert!(m.is_convex());
        assert_abs_diff_eq!(m.f_prime(0.37), 0.37, epsilon = 1e-9);
        assert_abs_diff_eq!(m.f_second_bound(), 1.0, epsilon = 1e-6);
        m.check_convexity().unwrap();
        let csv = "u,f\n0,0\n0.5,0.125\n1,0.5\n";
        let t = FluxModel::from_table_csv(csv).unwrap();
        assert_abs_diff_eq!(t.f(0.25), 0.03125, epsilon = 1e-12);
    }

    #[test]
    fn burgers_convexity_check_passes() {
        FluxModel::burgers_on((-3.0, 3.0)).check_convexity().unwrap();
    }

    proptest! {
        #[test]
        fn fan_invariants(ul in -1.0f64..1.0, ur in -1.0f64..1.0, eps in 0.01f64..0.5) {
            let m = FluxModel::burgers();
            let fan = solve_riemann(ul, ur, &m, eps).unwrap();
            prop_assert!(fan.waves.windows(2).all(|w| w[0].speed < w[1].speed));
            if let (Some(first), Some(last)) = (fan.waves.first(), fan.waves.last()) {
                prop_assert_eq!(first.left, ul);
                prop_assert_eq!(last.right, ur);
            }
            prop_assert!(fan.waves.windows(2).all(|w| w[0].right == w[1].left));
            prop_assert!((fan.total_size() - (ur - ul)).abs() < 1e-12);
            for w in &fan.waves {
                match w.kind {
                    WaveKind::Shock => prop_assert!(w.left > w.right),
                    WaveKind::RarefactionStep => {
                        prop_assert!(w.size() > 0.0 && w.size() <= eps * (1.0 + 1e-9));
                    }
                }
            }
            let back = solve_riemann(ur, ul, &m, eps).unwrap();
            prop_assert!((back.total_size() + fan.total_size()).abs() < 1e-12);
        }

        #[test]
        fn cubic_fans_chain(ul in -1.0f64..1.0, ur in -1.0f64..1.0) {
            let m = FluxModel::cubic((-1.0, 1.0)).unwrap();
            let fan = solve_riemann_with_samples(ul, ur, &m, 0.05, 257).unwrap();
            prop_assert!(fan.waves.windows(2).all(|w| w[0].speed < w[1].speed));
            prop_assert!(fan.waves.windows(2).all(|w| w[0].right == w[1].left));
            prop_assert!((fan.total_size() - (ur - ul)).abs() < 1e-12);
        }
    }
}
