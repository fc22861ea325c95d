//! Generalized characteristics, balances on characteristic regions,
//! two-sided Oleinik checks, exceptional-time diagnostics and exact
//! solutions used as oracles.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bv::{cantor_proxy, IntervalUnion, Profile};
use crate::error::{Error, Result};
use crate::jumps::{trace_discontinuities, JumpFamily};
use crate::measures::{build_measures, split_at, Atom2D, AtomicMeasure2D, BoundEntry, RunMeasures, Weight};
use crate::riemann::FluxModel;
use crate::splitting::{discretize_datum, RunArtifacts, SolverConfig, SourceModel};
use crate::tracking::position_tol;

fn time_tol(t: f64) -> f64 {
    1e-12 * (1.0 + t.abs())
}

/// Membership tolerance for points on region boundaries.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Polyline `t -> y(t)`. `fronts[i]` is the segment followed on the piece
/// `samples[i]..samples[i + 1]`, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCurve {
    pub samples: Vec<(f64, f64)>,
    pub direction: Direction,
    pub anchor: (f64, f64),
    pub fronts: Vec<Option<usize>>,
}

impl CharacteristicCurve {
    pub fn t_start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Linear interpolation, clamped to the sampled time range.
    pub fn x_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        let i = s.partition_point(|p| p.0 <= t);
        if i >= s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, x0) = s[i - 1];
        let (t1, x1) = s[i];
        if t1 <= t0 {
            return x1;
        }
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .map(|w| if w[1].0 > w[0].0 { (w[1].1 - w[0].1) / (w[1].0 - w[0].0) } else { 0.0 })
            .collect()
    }

    pub fn lipschitz(&self) -> f64 {
        self.slopes().into_iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x\n");
        for (t, x) in &self.samples {
            s.push_str(&format!("{t:?},{x:?}\n"));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Mode {
    Free(f64),
    Front(usize),
}

/// Time-sliced index over the wave history of a run. Build once and reuse
/// for many characteristics.
pub struct CharacteristicTracer<'a> {
    run: &'a RunArtifacts,
    times: Vec<f64>,
    alive: Vec<Vec<usize>>,
}

impl<'a> CharacteristicTracer<'a> {
    pub fn new(run: &'a RunArtifacts) -> Self {
        let h = &run.history;
        let mut order: Vec<usize> = (0..h.nodes.len()).collect();
        order.sort_by(|&a, &b| h.nodes[a].t.total_cmp(&h.nodes[b].t).then(a.cmp(&b)));
        let mut times: Vec<f64> = order
            .iter()
            .map(|&i| h.nodes[i].t)
            .chain(run.updates.iter().map(|u| u.t))
            .chain([0.0])
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut set = BTreeSet::new();
        let mut alive = Vec::with_capacity(times.len());
        let mut p = 0;
        for &t in &times {
            while p < order.len() && h.nodes[order[p]].t <= t {
                let n = &h.nodes[order[p]];
                for s in &n.incoming {
                    set.remove(s);
                }
                set.extend(n.outgoing.iter().copied());
                p += 1;
            }
            let mut v: Vec<usize> = set
                .iter()
                .copied()
                .filter(|&s| h.segments[s].alive_at(t))
                .collect();
            v.sort_by(|&a, &b| {
                let (sa, sb) = (&h.segments[a], &h.segments[b]);
                sa.x_at(t).total_cmp(&sb.x_at(t)).then(sa.speed.total_cmp(&sb.speed))
            });
            alive.push(v);
        }
        Self { run, times, alive }
    }

    pub fn run(&self) -> &RunArtifacts {
        self.run
    }

    fn slot(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t).saturating_sub(1)
    }

    fn next_time(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        self.times.get(k).copied().unwrap_or(f64::INFINITY)
    }

    /// Fronts at `x` (within tolerance), and the nearest ones to the left
    /// and to the right.
    fn around(&self, t: f64, x: f64) -> (&[usize], Option<usize>, Option<usize>) {
        let segs = &self.run.history.segments;
        let list = &self.alive[self.slot(t)];
        let tol = position_tol(x);
        let lo = list.partition_point(|&s| segs[s].x_at(t) < x - tol);
        let hi = list.partition_point(|&s| segs[s].x_at(t) <= x + tol);
        let left = lo.checked_sub(1).map(|i| list[i]);
        let right = list.get(hi).copied();
        (&list[lo..hi], left, right)
    }

    /// `(u(t, x-), u(t, x+))` of the right-continuous approximate solution.
    pub fn states(&self, t: f64, x: f64) -> (f64, f64) {
        let segs = &self.run.history.segments;
        let (at, left, right) = self.around(t, x);
        if let (Some(&f), Some(&l)) = (at.first(), at.last()) {
            return (segs[f].left, segs[l].right);
        }
        let u = match (left, right) {
            (Some(l), _) => segs[l].right,
            (None, Some(r)) => segs[r].left,
            (None, None) => self.run.history.far_left_at(t),
        };
        (u, u)
    }

    fn decide(&self, t: f64, x: f64) -> Mode {
        let segs = &self.run.history.segments;
        let flux = &self.run.config.flux;
        let (at, _, _) = self.around(t, x);
        let (u0, _) = self.states(t, x);
        let c = flux.f_prime(u0);
        match at.first() {
            Some(&f) if c > segs[f].speed => Mode::Front(f),
            _ => Mode::Free(c),
        }
    }

    /// Minimal forward generalized characteristic from `anchor` up to
    /// `t_end`. It moves with `f'(u)` inside constant regions and sticks to
    /// the fronts it meets.
    pub fn trace(&self, anchor: (f64, f64), t_end: f64) -> Result<CharacteristicCurve> {
        let (t0, x0) = anchor;
        let tf = self.run.history.t_final.max(self.run.config.t_final);
        if !(t0.is_finite() && x0.is_finite() && t0 >= 0.0 && t_end >= t0 && t_end <= tf + time_tol(tf)) {
            return Err(Error::OutOfWindow { t: t0, x: x0 });
        }
        let segs = &self.run.history.segments;
        let mut curve = CharacteristicCurve {
            samples: vec![(t0, x0)],
            direction: Direction::Forward,
            anchor,
            fronts: Vec::new(),
        };
        let push = |curve: &mut CharacteristicCurve, t: f64, x: f64, m: Mode| {
            let on = match m {
                Mode::Front(s) => Some(s),
                Mode::Free(_) => None,
            };
            let n = curve.samples.len();
            if let Some(&last) = curve.fronts.last() {
                let (tp, xp) = curve.samples[n - 2];
                let (tl, xl) = curve.samples[n - 1];
                let same = match (last, on) {
                    (Some(a), Some(b)) => a == b,
                    (None, None) => {
                        let s1 = (xl - xp) / (tl - tp);
                        let s2 = (x - xl) / (t - tl);
                        (s1 - s2).abs() <= 1e-14 * (1.0 + s1.abs())
                    }
                    _ => false,
                };
                if same {
                    curve.samples[n - 1] = (t, x);
                    return;
                }
            }
            curve.samples.push((t, x));
            curve.fronts.push(on);
        };
        let (mut t, mut x) = (t0, x0);
        let mut mode = self.decide(t, x);
        let limit = 4 * (self.times.len() + segs.len()) + 16;
        for _ in 0..limit {
            if t >= t_end - time_tol(t_end) {
                return Ok(curve);
            }
            let t_next = self.next_time(t).min(t_end);
            match mode {
                Mode::Front(i) => {
                    let s = &segs[i];
                    let stop = t_next.min(s.t_end);
                    let xs = s.x_at(stop);
                    if stop > t {
                        push(&mut curve, stop, xs, mode);
                    }
                    t = stop;
                    x = xs;
                    if t >= t_end - time_tol(t_end) {
                        return Ok(curve);
                    }
                    if !s.alive_at(t) || t >= t_next {
                        mode = if s.alive_at(t) { Mode::Front(i) } else { self.decide(t, x) };
                    }
                }
                Mode::Free(c) => {
                    let (_, left, right) = self.around(t, x);
                    let mut hit: Option<(f64, usize)> = None;
                    if let Some(l) = left {
                        let sl = &segs[l];
                        if sl.speed > c {
                            let tau = t + (x - sl.x_at(t)) / (sl.speed - c);
                            hit = Some((tau, l));
                        }
                    }
                    if let Some(r) = right {
                        let sr = &segs[r];
                        if sr.speed < c {
                            let tau = t + (sr.x_at(t) - x) / (c - sr.speed);
                            if hit.is_none_or(|h| tau < h.0) {
                                hit = Some((tau, r));
                            }
                        }
                    }
                    match hit {
                        Some((tau, seg)) if tau < t_next - time_tol(t_next) => {
                            let tau = tau.max(t);
                            let xs = segs[seg].x_at(tau);
                            if tau > t {
                                push(&mut curve, tau, xs, mode);
                            }
                            t = tau;
                            x = xs;
                            mode = Mode::Front(seg);
                        }
                        _ => {
                            let xs = x + c * (t_next - t);
                            push(&mut curve, t_next, xs, mode);
                            t = t_next;
                            x = xs;
                            if t < t_end - time_tol(t_end) {
                                mode = self.decide(t, x);
                            }
                        }
                    }
                }
            }
        }
        Err(Error::InconsistentEvent(format!(
            "characteristic from ({t0}, {x0}) did not reach t = {t_end}"
        )))
    }

    /// Checks `f'(u(y-)) <= y' <= f'(u(y+))` (in either order) on every
    /// piece, at the midpoint of each history slot the piece crosses.
    pub fn check_slopes(&self, curve: &CharacteristicCurve) -> Result<f64> {
        let flux = &self.run.config.flux;
        let mut worst: f64 = 0.0;
        for w in curve.samples.windows(2) {
            let (ta, xa) = w[0];
            let (tb, xb) = w[1];
            if tb - ta <= time_tol(tb) {
                continue;
            }
            let slope = (xb - xa) / (tb - ta);
            let mut cuts = vec![ta];
            let k0 = self.times.partition_point(|&x| x <= ta);
            let k1 = self.times.partition_point(|&x| x < tb);
            cuts.extend(self.times[k0..k1].iter().copied());
            cuts.push(tb);
            for c in cuts.windows(2) {
                if c[1] - c[0] <= time_tol(c[1]) {
                    continue;
                }
                let tm = 0.5 * (c[0] + c[1]);
                let y = xa + slope * (tm - ta);
                let (ul, ur) = self.states(tm, y);
                let (p, q) = (flux.f_prime(ul), flux.f_prime(ur));
                let (lo, hi) = (p.min(q), p.max(q));
                let tol = 1e-9 * (1.0 + slope.abs());
                let err = (lo - slope).max(slope - hi).max(0.0);
                if err > tol {
                    return Err(Error::InvalidBoundary(format!(
                        "slope {slope} at t = {tm}, x = {y} is outside [{lo}, {hi}]"
                    )));
                }
                worst = worst.max(err);
            }
        }
        Ok(worst)
    }

    /// Largest `|y' - f'(u)|` on the outer side of a boundary, a proxy of
    /// the boundary error.
    fn boundary_error(&self, curve: &CharacteristicCurve, outer_left: bool) -> f64 {
        let flux = &self.run.config.flux;
        let mut worst: f64 = 0.0;
        for w in curve.samples.windows(2) {
            let (ta, xa) = w[0];
            let (tb, xb) = w[1];
            if tb - ta <= time_tol(tb) {
                continue;
            }
            let slope = (xb - xa) / (tb - ta);
            let tm = 0.5 * (ta + tb);
            let (ul, ur) = self.states(tm, xa + slope * (tm - ta));
            let u = if outer_left { ul } else { ur };
            worst = worst.max((slope - flux.f_prime(u)).abs());
        }
        worst
    }
}

pub fn generalized_characteristic(
    run: &RunArtifacts,
    anchor: (f64, f64),
    t_end: f64,
) -> Result<CharacteristicCurve> {
    CharacteristicTracer::new(run).trace(anchor, t_end)
}

/// `A = {(r, y) : s < r <= t, y in J(r)}` with `J(r)` the union of the
/// intervals `[a_i(r), b_i(r)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRegion {
    pub s: f64,
    pub t: f64,
    pub boundaries: Vec<(CharacteristicCurve, CharacteristicCurve)>,
}

impl CharacteristicRegion {
    /// Traces both endpoints of each interval of `J(s)` forward to `t`.
    pub fn trace(tracer: &CharacteristicTracer, s: f64, t: f64, intervals: &[(f64, f64)]) -> Result<Self> {
        if intervals.is_empty() || !(s < t) {
            return Err(Error::InvalidBoundary(format!("empty region on [{s}, {t}]")));
        }
        let mut boundaries = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals {
            if !(a <= b) {
                return Err(Error::InvalidBoundary(format!("interval [{a}, {b}] is reversed")));
            }
            boundaries.push((tracer.trace((s, a), t)?, tracer.trace((s, b), t)?));
        }
        Ok(Self { s, t, boundaries })
    }

    pub fn intervals_at(&self, r: f64) -> IntervalUnion {
        IntervalUnion::new(
            self.boundaries
                .iter()
                .map(|(a, b)| {
                    let (xa, xb) = (a.x_at(r), b.x_at(r));
                    (xa.min(xb), xb.max(xa))
                })
                .collect(),
        )
    }

    pub fn contains(&self, r: f64, x: f64) -> bool {
        r > self.s && r <= self.t && self.intervals_at(r).contains(x, REGION_TOL)
    }

    /// `|m|(A)` and `m(A)`.
    pub fn measure(&self, m: &AtomicMeasure2D) -> (f64, f64) {
        let lo = m.atoms.partition_point(|a| a.t <= self.s);
        let hi = m.atoms.partition_point(|a| a.t <= self.t);
        m.atoms[lo..hi]
            .iter()
            .filter(|a: &&Atom2D| self.intervals_at(a.t).contains(a.x, REGION_TOL))
            .fold((0.0, 0.0), |(abs, sig), a| (abs + a.weight.abs(), sig + a.weight))
    }

    /// Checks ordering and the slope condition of every boundary.
    pub fn validate(&self, tracer: &CharacteristicTracer) -> Result<()> {
        for (a, b) in &self.boundaries {
            for c in [a, b] {
                if c.t_start() > self.s + time_tol(self.s) || c.t_end() < self.t - time_tol(self.t) {
                    return Err(Error::InvalidBoundary("boundary does not span the region".into()));
                }
                tracer.check_slopes(c)?;
            }
            for &(r, _) in a.samples.iter().chain(&b.samples) {
                if a.x_at(r) > b.x_at(r) + REGION_TOL {
                    return Err(Error::InvalidBoundary(format!("a(t) > b(t) at t = {r}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub s: f64,
    pub t: f64,
    pub intervals_s: Vec<(f64, f64)>,
    pub intervals_t: Vec<(f64, f64)>,
    /// `cont_balance`, `jump_balance`, `cont_fprime_balance`, `jump_fprime_balance`, `total_fprime_balance`.
    pub entries: Vec<BoundEntry>,
    pub phi_cont: f64,
    pub phi_jump: f64,
    pub upsilon_drop: f64,
    pub boundary_error: f64,
    pub pass: bool,
}

pub fn region_balance(
    run: &RunArtifacts,
    region: &CharacteristicRegion,
    family: &JumpFamily,
    measures: &RunMeasures,
) -> Result<BalanceReport> {
    region_balance_with(&CharacteristicTracer::new(run), region, family, measures)
}

/// Both sides of the five balance inequalities on `region`.
pub fn region_balance_with(
    tracer: &CharacteristicTracer,
    region: &CharacteristicRegion,
    family: &JumpFamily,
    measures: &RunMeasures,
) -> Result<BalanceReport> {
    region.validate(tracer)?;
    let run = tracer.run();
    let (s, t) = (region.s, region.t);
    let (js, jt) = (region.intervals_at(s), region.intervals_at(t));
    let us = split_at(run, family, s, Weight::Size);
    let ut = split_at(run, family, t, Weight::Size);
    let es = split_at(run, family, s, Weight::FPrime);
    let et = split_at(run, family, t, Weight::FPrime);
    let d_cont = ut.cont_part.on(&jt, REGION_TOL) - us.cont_part.on(&js, REGION_TOL);
    let d_jump = ut.jump_part.on(&jt, REGION_TOL) - us.jump_part.on(&js, REGION_TOL);
    let de_cont = et.cont_part.on(&jt, REGION_TOL) - es.cont_part.on(&js, REGION_TOL);
    let de_jump = et.jump_part.on(&jt, REGION_TOL) - es.jump_part.on(&js, REGION_TOL);
    let (mc_abs, mc) = region.measure(&measures.mu_cont);
    let (mj_abs, mj) = region.measure(&measures.mu_jump);
    let (xc_abs, _) = region.measure(&measures.xi.xi_cont);
    let (xj_abs, _) = region.measure(&measures.xi.xi_jump);
    let (x_abs, _) = region.measure(&measures.xi.xi);
    let ups = run.upsilon_negative_variation(s, t);
    let fpp = run.config.flux.f_second_bound();
    let tol = |a: f64, b: f64| 1e-9 * (1.0 + a.abs() + b.abs());
    let entry = |name: &str, lhs: f64, rhs: f64| {
        BoundEntry::with_tolerance(name, lhs, rhs, tol(lhs, rhs))
    };
    let entries = vec![
        entry("cont_balance", d_cont, mc_abs + ups),
        entry("jump_balance", d_jump, mj_abs),
        entry("cont_fprime_balance", de_cont, xc_abs + fpp * ups),
        entry("jump_fprime_balance", de_jump, xj_abs),
        entry("total_fprime_balance", de_cont + de_jump, x_abs + fpp * ups),
    ];
    let phi_jump = d_jump - mj;
    let pass = entries.iter().all(|e| e.pass) && phi_jump <= tol(d_jump, mj);
    let boundary_error = region
        .boundaries
        .iter()
        .map(|(a, b)| tracer.boundary_error(a, true).max(tracer.boundary_error(b, false)))
        .fold(0.0, f64::max);
    Ok(BalanceReport {
        s,
        t,
        intervals_s: js.intervals().to_vec(),
        intervals_t: jt.intervals().to_vec(),
        entries,
        phi_cont: d_cont - mc,
        phi_jump,
        upsilon_drop: ups,
        boundary_error,
        pass,
    })
}

/// `count` random regions with one to three intervals inside the support
/// of the solution at a random time `s`.
pub fn sample_regions(
    tracer: &CharacteristicTracer,
    seed: u64,
    count: usize,
) -> Result<Vec<CharacteristicRegion>> {
    let run = tracer.run();
    let tf = run.config.t_final;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let s = rng.random_range(0.0..0.8 * tf);
        let t = rng.random_range(s + 0.05 * tf..=tf);
        let p = run.profile_at(s);
        let bps = p.breakpoints();
        let (lo, hi) = match (bps.first(), bps.last()) {
            (Some(&a), Some(&b)) => (a - 0.5, b + 0.5),
            _ => (-1.0, 1.0),
        };
        let k = rng.random_range(1..=3usize);
        let mut cuts: Vec<f64> = (0..2 * k).map(|_| rng.random_range(lo..hi)).collect();
        // anchor some endpoints exactly on fronts
        for c in cuts.iter_mut() {
            if !bps.is_empty() && rng.random_bool(0.25) {
                *c = bps[rng.random_range(0..bps.len())];
            }
        }
        cuts.sort_by(f64::total_cmp);
        let intervals: Vec<(f64, f64)> = cuts.chunks(2).map(|c| (c[0], c[1])).collect();
        out.push(CharacteristicRegion::trace(tracer, s, t, &intervals)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OleinikSide {
    /// `[D^cont u(t)]^+(B)` against an earlier time `s < t`.
    Positive,
    /// `[D^cont u(t)]^-(B)` against a later time `s > t`.
    Negative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OleinikEntry {
    pub t: f64,
    pub s: f64,
    pub set: Vec<(f64, f64)>,
    pub side: OleinikSide,
    pub lhs_neg: f64,
    pub lhs_pos: f64,
    /// `L1(B) / |t - s|`
    pub l1_term: f64,
    /// `|f''| mu_source` for the positive side, `|xi_cont|` for the negative.
    pub measure_term: f64,
    /// `TotVar^-(Upsilon; (min, max])`
    pub upsilon_term: f64,
    pub rhs: f64,
    pub constant: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OleinikReport {
    pub c_accept: f64,
    pub entries: Vec<OleinikEntry>,
    pub fitted_constant: f64,
    pub pass: bool,
}

impl OleinikReport {
    pub fn from_entries(entries: Vec<OleinikEntry>, c_accept: f64) -> Self {
        let fitted_constant = entries.iter().map(|e| e.constant).fold(0.0, f64::max);
        let pass = entries.iter().all(|e| e.pass);
        Self {
            c_accept,
            entries,
            fitted_constant,
            pass,
        }
    }
}

/// `16 / c` where `f'' >= c`.
pub fn default_oleinik_accept(flux: &FluxModel) -> Result<f64> {
    let c = flux.convexity_const();
    if c > 0.0 {
        Ok(16.0 / c)
    } else {
        Err(Error::Degenerate)
    }
}

#[allow(clippy::too_many_arguments)]
fn oleinik_entry(
    t: f64,
    s: f64,
    set: &IntervalUnion,
    lhs_pos: f64,
    lhs_neg: f64,
    measure_term: f64,
    upsilon_term: f64,
    c_accept: f64,
) -> OleinikEntry {
    let side = if s < t { OleinikSide::Positive } else { OleinikSide::Negative };
    let l1_term = set.lebesgue() / (t - s).abs();
    let rhs = l1_term + measure_term + upsilon_term;
    let lhs = match side {
        OleinikSide::Positive => lhs_pos,
        OleinikSide::Negative => lhs_neg,
    };
    let constant = if lhs <= 1e-14 {
        0.0
    } else if rhs > 0.0 {
        lhs / rhs
    } else {
        f64::INFINITY
    };
    OleinikEntry {
        t,
        s,
        set: set.intervals().to_vec(),
        side,
        lhs_neg,
        lhs_pos,
        l1_term,
        measure_term,
        upsilon_term,
        rhs,
        constant,
        pass: constant <= c_accept,
    }
}

/// One-sided decay of the continuous part of `D_x u(t)` on `set`, compared
/// with time `s`: the positive part when `s < t`, the negative part when
/// `s > t`.
pub fn oleinik_two_sided(
    run: &RunArtifacts,
    t: f64,
    s: f64,
    set: &IntervalUnion,
    family: &JumpFamily,
    measures: &RunMeasures,
    flux: &FluxModel,
) -> Result<OleinikReport> {
    let c_accept = default_oleinik_accept(flux)?;
    let e = oleinik_entry_for_run(run, t, s, set, family, measures, flux, c_accept)?;
    Ok(OleinikReport::from_entries(vec![e], c_accept))
}

#[allow(clippy::too_many_arguments)]
pub fn oleinik_entry_for_run(
    run: &RunArtifacts,
    t: f64,
    s: f64,
    set: &IntervalUnion,
    family: &JumpFamily,
    measures: &RunMeasures,
    flux: &FluxModel,
    c_accept: f64,
) -> Result<OleinikEntry> {
    let tf = run.config.t_final;
    let slack = time_tol(tf);
    if !(s.min(t) >= 0.0 && s.max(t) <= tf + slack && s != t) {
        return Err(Error::OutOfWindow { t, x: s });
    }
    let (lo, hi) = (s.min(t), s.max(t));
    let cont = split_at(run, family, t, Weight::Size).cont_part;
    let lhs_pos = cont.positive_on(set, REGION_TOL);
    let lhs_neg = cont.negative_on(set, REGION_TOL);
    let measure_term = if s < t {
        flux.f_second_bound() * measures.mu_source.closed_strip_mass(lo, hi)
    } else {
        measures.xi.xi_cont.closed_strip_mass(lo, hi)
    };
    let ups = run.upsilon_negative_variation(lo, hi);
    Ok(oleinik_entry(t, s, set, lhs_pos, lhs_neg, measure_term, ups, c_accept))
}

/// Several `(t, s, B)` queries on one run.
pub fn oleinik_report(
    run: &RunArtifacts,
    queries: &[(f64, f64, IntervalUnion)],
    family: &JumpFamily,
    measures: &RunMeasures,
) -> Result<OleinikReport> {
    let flux = &run.config.flux;
    let c_accept = default_oleinik_accept(flux)?;
    let entries = queries
        .iter()
        .map(|(t, s, b)| oleinik_entry_for_run(run, *t, *s, b, family, measures, flux, c_accept))
        .collect::<Result<Vec<_>>>()?;
    Ok(OleinikReport::from_entries(entries, c_accept))
}

/// The same entry for the exact Burgers rarefaction `u = x / t` between
/// `u_l < u_r`, which has no source and no interaction.
pub fn oleinik_exact_burgers_rarefaction(ul: f64, ur: f64, t: f64, s: f64, set: &IntervalUnion) -> OleinikEntry {
    let pos = set.lebesgue_within(ul * t, ur * t) / t;
    oleinik_entry(t, s, set, pos, 0.0, 0.0, 0.0, 16.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorTrend {
    pub t: f64,
    pub values: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub window: f64,
    pub theta: f64,
    pub flagged: Vec<f64>,
    /// Finest level: `(window start, mass)`.
    pub window_masses: Vec<(f64, f64)>,
    pub trends: Vec<CantorTrend>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalOptions {
    pub theta_factor: f64,
    /// Fixed threshold overriding `theta_factor`.
    pub theta: Option<f64>,
    /// Times at which the cantor proxy is compared across levels.
    pub probe_times: Vec<f64>,
    /// Allowed relative increase between consecutive levels.
    pub noise: f64,
}

impl Default for ExceptionalOptions {
    fn default() -> Self {
        Self {
            theta_factor: 3.0,
            theta: None,
            probe_times: Vec::new(),
            noise: 0.1,
        }
    }
}

/// Atoms of `mu([s, t]) = |xi_cont| + |f''| mu_source + TotVar^-(Upsilon)`
/// projected on the time axis, for `t > 0`.
pub fn time_measure(run: &RunArtifacts, measures: &RunMeasures) -> Vec<(f64, f64)> {
    let fpp = run.config.flux.f_second_bound();
    let mut atoms: Vec<(f64, f64)> = measures
        .xi
        .xi_cont
        .atoms
        .iter()
        .filter(|a| a.t > 0.0)
        .map(|a| (a.t, a.weight.abs()))
        .chain(
            measures
                .mu_source
                .atoms
                .iter()
                .filter(|a| a.t > 0.0)
                .map(|a| (a.t, fpp * a.weight.abs())),
        )
        .chain(
            run.trace
                .windows(2)
                .map(|w| (w[1].t, (w[0].upsilon - w[1].upsilon).max(0.0)))
                .filter(|a| a.1 > 0.0 && a.0 > 0.0),
        )
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

/// Index of the window `(k w, (k + 1) w]` containing `t > 0`.
fn window_index(t: f64, w: f64) -> usize {
    ((t / w - 1e-9).ceil() as i64 - 1).max(0) as usize
}

fn window_masses(atoms: &[(f64, f64)], w: f64, t_final: f64) -> Vec<f64> {
    let n = window_index(t_final, w) + 1;
    let mut m = vec![0.0; n];
    for &(t, a) in atoms {
        let k = window_index(t, w).min(n - 1);
        m[k] += a;
    }
    m
}

/// Flags times where the time measure concentrates, across refinement
/// levels ordered from coarse to fine, and reports the cantor proxy trend
/// at the probe times.
pub fn exceptional_times(
    runs: &[RunArtifacts],
    schedule: &[f64],
    opts: &ExceptionalOptions,
) -> Result<ExceptionalReport> {
    if runs.is_empty() || runs.len() != schedule.len() {
        return Err(Error::ScheduleViolation { level: runs.len().min(schedule.len()) });
    }
    for (k, (r, &beta)) in runs.iter().zip(schedule).enumerate() {
        let c = &r.config;
        let refined = k == 0 || c.epsilon < runs[k - 1].config.epsilon;
        if !(refined && c.tau <= c.epsilon && beta > c.beta_floor()) {
            return Err(Error::ScheduleViolation { level: k });
        }
    }
    let mut levels = Vec::with_capacity(runs.len());
    for (r, &beta) in runs.iter().zip(schedule) {
        let fam = trace_discontinuities(r, beta);
        let m = build_measures(r, &fam)?;
        let atoms = time_measure(r, &m);
        let w = 2.0 * r.config.tau;
        let masses = window_masses(&atoms, w, r.config.t_final);
        levels.push((fam, atoms, w, masses));
    }
    let (_, fine_atoms, w_fine, fine_masses) = levels.last().expect("nonempty");
    let theta = opts.theta.unwrap_or_else(|| {
        let mut v = fine_masses.clone();
        v.sort_by(f64::total_cmp);
        let med = v[v.len() / 2];
        let base = if med > 0.0 { med } else { v.iter().sum::<f64>() / v.len() as f64 };
        opts.theta_factor * base
    });
    let mut flagged = Vec::new();
    if theta > 0.0 {
        for (k, &mass) in fine_masses.iter().enumerate() {
            if mass <= theta {
                continue;
            }
            let (lo, hi) = (k as f64 * w_fine, (k + 1) as f64 * w_fine);
            let peak = fine_atoms
                .iter()
                .filter(|a| window_index(a.0, *w_fine) == k)
                .fold(None::<(f64, f64)>, |best, a| match best {
                    Some(b) if b.1 >= a.1 => Some(b),
                    _ => Some(*a),
                })
                .map(|a| a.0)
                .unwrap_or(0.5 * (lo + hi));
            let persistent = levels.iter().all(|(_, _, w, m)| {
                let j = window_index(peak, *w).min(m.len() - 1);
                m[j] > theta
            });
            if persistent {
                flagged.push(peak);
            }
        }
    }
    let mut trends = Vec::new();
    for &t in &opts.probe_times {
        if flagged.iter().any(|&f| (f - t).abs() <= *w_fine) {
            continue;
        }
        let values: Vec<f64> = runs
            .iter()
            .zip(&levels)
            .zip(schedule)
            .map(|((r, (fam, _, _, _)), &beta)| {
                let cont = split_at(r, fam, t, Weight::Size).cont_part;
                let m = (1.0 / r.config.epsilon.sqrt()).ceil() as usize;
                cantor_proxy(&cont, beta, m)
            })
            .collect();
        let decreasing = values.windows(2).all(|v| v[1] <= (1.0 + opts.noise) * v[0]);
        trends.push(CantorTrend { t, values, decreasing });
    }
    Ok(ExceptionalReport {
        window: *w_fine,
        theta,
        flagged,
        window_masses: fine_masses
            .iter()
            .enumerate()
            .map(|(k, &m)| (k as f64 * w_fine, m))
            .collect(),
        trends,
    })
}

/// Exact entropy solution of the Burgers Riemann problem.
pub fn oracle_burgers_riemann(ul: f64, ur: f64, t: f64, x: f64) -> f64 {
    if t <= 0.0 {
        return if x < 0.0 { ul } else { ur };
    }
    let xi = x / t;
    if ul > ur {
        if xi < 0.5 * (ul + ur) {
            ul
        } else {
            ur
        }
    } else {
        xi.clamp(ul, ur)
    }
}

/// Damped Burgers `u_t + (u^2/2)_x = -u` from `u0(x) = clamp(x, -1, 1)`,
/// valid on the ramp image `|x| <= 2 - e^{-t}`.
pub fn oracle_damped_burgers_ramp(x: f64, t: f64) -> Result<f64> {
    let e = (-t).exp();
    let half = 2.0 - e;
    if !(t >= 0.0) || x.abs() > half * (1.0 + 1e-12) {
        return Err(Error::OutOfRampRegion { t, x });
    }
    Ok(x * e / half)
}

/// Same solution extended by the constant states `±e^{-t}` outside the ramp.
pub fn damped_ramp_exact(x: f64, t: f64) -> f64 {
    let e = (-t).exp();
    let half = 2.0 - e;
    if x.abs() <= half {
        x * e / half
    } else {
        x.signum() * e
    }
}

/// `L1(a, b)` distance between `p` and the exact damped ramp at time `t`.
pub fn damped_ramp_l1_error(p: &Profile, t: f64, a: f64, b: f64) -> f64 {
    let half = 2.0 - (-t).exp();
    p.l1_distance_piecewise_linear(|x| damped_ramp_exact(x, t), &[-half, half], a, b)
}

/// Run configuration of the damped ramp at `T = ln 2` with automatic
/// `delta_bar`, `kappa` and `beta`.
pub fn damped_ramp_setup(epsilon: f64, tau: f64) -> Result<(SolverConfig, Profile)> {
    let datum = discretize_datum(|x| x.clamp(-1.0, 1.0), -1.0, 1.0, epsilon)?;
    let cfg = SolverConfig::new(
        FluxModel::burgers(),
        SourceModel::damping(1.0),
        epsilon,
        tau,
        std::f64::consts::LN_2,
    )
    .with_auto_parameters(&datum);
    Ok((cfg, datum))
}
