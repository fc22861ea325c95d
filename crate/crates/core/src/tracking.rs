//! Event-driven front tracking for the homogeneous equation, the event log,
//! and the space-time wave history reconstructed from it.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bv::{total_variation, Profile};
use crate::error::{Error, Result};
use crate::riemann::{solve_riemann_with_samples, FluxModel, Front, WaveFan, WaveKind};

/// Parameters shared by all tracking operations of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingOptions {
    pub epsilon: f64,
    pub kappa: f64,
    /// Bound `M` on the total variation used for the `kappa` constraint.
    pub tv_bound: f64,
    pub envelope_samples: usize,
    /// Randomizes the processing order of simultaneous events.
    pub seed: Option<u64>,
    /// Adds a perturbation smaller than `epsilon^3` to every new speed.
    pub perturb_speeds: bool,
    pub event_limit: Option<usize>,
}

impl TrackingOptions {
    pub fn new(epsilon: f64, kappa: f64, tv_bound: f64) -> Self {
        Self {
            epsilon,
            kappa,
            tv_bound,
            envelope_samples: crate::riemann::DEFAULT_ENVELOPE_SAMPLES,
            seed: None,
            perturb_speeds: false,
            event_limit: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::ConfigInvalid(format!("epsilon = {} must be > 0", self.epsilon)));
        }
        if !(self.kappa > 0.0 && 8.0 * self.kappa * self.tv_bound < 1.0) {
            return Err(Error::KappaOutOfRange {
                kappa: self.kappa,
                tv_bound: self.tv_bound,
            });
        }
        Ok(())
    }
}

/// Fronts at one time, ordered left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontState {
    pub time: f64,
    pub fronts: Vec<Front>,
    /// State to the left of every front.
    pub far_left: f64,
    next_id: usize,
    seed: Option<u64>,
    perturb: bool,
    events: u64,
}

impl FrontState {
    pub fn far_right(&self) -> f64 {
        self.fronts.last().map_or(self.far_left, |f| f.right_state)
    }

    pub fn next_id(&self) -> usize {
        self.next_id
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn positions(&self) -> Vec<f64> {
        self.fronts.iter().map(|f| f.position_at(self.time)).collect()
    }

    /// Total variation, interaction potential and Glimm functional computed
    /// from the front sizes.
    pub fn readings(&self, kappa: f64) -> (f64, f64, f64) {
        let (tv, s2) = self
            .fronts
            .iter()
            .fold((0.0, 0.0), |(a, b), f| (a + f.size().abs(), b + f.size() * f.size()));
        let q = (0.5 * (tv * tv - s2)).max(0.0);
        (tv, q, tv + kappa * q)
    }

    pub fn total_variation(&self) -> f64 {
        self.fronts.iter().map(|f| f.size().abs()).sum()
    }

    /// Profile at the state time; coinciding fronts form a single jump.
    pub fn profile(&self) -> Profile {
        self.profile_at(self.time)
    }

    /// Profile obtained by moving all fronts linearly to time `t`.
    pub fn profile_at(&self, t: f64) -> Profile {
        let items: Vec<(f64, f64)> = self
            .fronts
            .iter()
            .map(|f| (f.position_at(t), f.right_state))
            .collect();
        profile_from_sorted(self.far_left, &items)
    }

    fn take_id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id - 1
    }

    pub(crate) fn fronts_from_fan(&mut self, fan: &WaveFan, t: f64, x: f64, eps: f64) -> Vec<Front> {
        let mut out = Vec::with_capacity(fan.len());
        for w in &fan.waves {
            let id = self.take_id();
            let mut f = Front::from_wave(id, w, t, x);
            if self.perturb {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0) ^ (id as u64).rotate_left(17));
                f.speed += rng.random_range(-0.45..0.45) * eps * eps * eps;
            }
            out.push(f);
        }
        if self.perturb {
            for i in 1..out.len() {
                if out[i].speed <= out[i - 1].speed {
                    out[i].speed = fan.waves[i].speed;
                    out[i - 1].speed = fan.waves[i - 1].speed;
                }
            }
        }
        out
    }
}

/// Builds a profile from `(position, right state)` pairs sorted by position,
/// merging positions that agree up to rounding.
pub(crate) fn profile_from_sorted(far_left: f64, items: &[(f64, f64)]) -> Profile {
    let mut bps: Vec<f64> = Vec::with_capacity(items.len());
    let mut vals = vec![far_left];
    for &(x, r) in items {
        match bps.last() {
            Some(&last) if x <= last + position_tol(x) => {
                *vals.last_mut().unwrap() = r;
            }
            _ => {
                bps.push(x);
                vals.push(r);
            }
        }
    }
    Profile::with_tolerance(bps, vals, 0.0).expect("sorted finite front positions")
}

pub(crate) fn position_tol(x: f64) -> f64 {
    1e-10 * (1.0 + x.abs())
}

fn time_tol(t: f64) -> f64 {
    1e-12 * (1.0 + t.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    InitialDatum,
    Collision,
    SourceUpdate,
}

/// One logged event. Drops are local (`before - after`) and exact up to
/// rounding; `upsilon_before/after` are global readings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    #[serde(rename = "type")]
    pub kind: RecordKind,
    pub t: f64,
    pub x: f64,
    pub in_ids: Vec<usize>,
    pub out_ids: Vec<usize>,
    pub in_sizes: Vec<f64>,
    pub out_sizes: Vec<f64>,
    pub tv_before: f64,
    pub tv_after: f64,
    pub upsilon_before: f64,
    pub upsilon_after: f64,
    pub tv_drop: f64,
    pub upsilon_drop: f64,
    /// Lower bound on the drop of the Glimm functional from the interaction
    /// estimates (collisions only).
    pub predicted_drop: f64,
    pub beta_involved: bool,
    #[serde(skip)]
    pub out_fronts: Vec<Front>,
}

impl EventRecord {
    /// True when all incoming waves have the same sign.
    pub fn is_merge(&self) -> bool {
        self.in_sizes.iter().all(|s| *s > 0.0) || self.in_sizes.iter().all(|s| *s < 0.0)
    }

    /// Amount of wave strength cancelled at the event.
    pub fn cancelled(&self) -> f64 {
        let abs: f64 = self.in_sizes.iter().map(|s| s.abs()).sum();
        let net: f64 = self.in_sizes.iter().sum();
        0.5 * (abs - net.abs())
    }
}

/// Time-ordered list of events.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, r: EventRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = EventRecord>) {
        self.records.extend(rs);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn collisions(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(|r| r.kind == RecordKind::Collision)
    }

    pub fn of_kind(&self, kind: RecordKind) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(s)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }
}

/// A pending interaction of adjacent fronts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub position: f64,
    pub incoming_front_ids: Vec<usize>,
    pub incoming_sizes: Vec<f64>,
    pub outgoing_sizes: Vec<f64>,
    pub tv_before: f64,
    pub upsilon_before: f64,
    pub tv_after: f64,
    pub upsilon_after: f64,
}

/// Places one Riemann fan at each jump of `datum`.
pub fn init_from_datum(
    datum: &Profile,
    flux: &FluxModel,
    opts: &TrackingOptions,
    t0: f64,
) -> Result<(FrontState, Vec<EventRecord>)> {
    opts.validate()?;
    let tv = total_variation(datum);
    if tv > opts.tv_bound * (1.0 + 1e-12) {
        return Err(Error::TvBoundExceeded {
            tv,
            bound: opts.tv_bound,
        });
    }
    let mut s = FrontState {
        time: t0,
        fronts: Vec::new(),
        far_left: datum.values()[0],
        next_id: 0,
        seed: opts.seed,
        perturb: opts.perturb_speeds,
        events: 0,
    };
    let mut records = Vec::new();
    for (x, l, r) in datum.jumps() {
        let fan = solve_riemann_with_samples(l, r, flux, opts.epsilon, opts.envelope_samples)?;
        let new = s.fronts_from_fan(&fan, t0, x, opts.epsilon);
        records.push(EventRecord {
            kind: RecordKind::InitialDatum,
            t: t0,
            x,
            in_ids: Vec::new(),
            out_ids: new.iter().map(|f| f.id).collect(),
            in_sizes: Vec::new(),
            out_sizes: new.iter().map(Front::size).collect(),
            tv_before: 0.0,
            tv_after: 0.0,
            upsilon_before: 0.0,
            upsilon_after: 0.0,
            tv_drop: 0.0,
            upsilon_drop: 0.0,
            predicted_drop: 0.0,
            beta_involved: false,
            out_fronts: new.clone(),
        });
        s.fronts.extend(new);
    }
    let (tv, _, ups) = s.readings(opts.kappa);
    for r in &mut records {
        r.tv_after = tv;
        r.upsilon_after = ups;
        r.tv_before = tv;
        r.upsilon_before = ups;
    }
    Ok((s, records))
}

/// Meeting time of adjacent fronts, computed from their anchors only so the
/// result does not depend on when it is evaluated.
fn meeting_time(a: &Front, b: &Front) -> Option<f64> {
    if a.speed <= b.speed {
        return None;
    }
    let t = (b.origin_x - a.origin_x + a.speed * a.origin_t - b.speed * b.origin_t)
        / (a.speed - b.speed);
    t.is_finite().then_some(t)
}

/// Earliest interaction no later than `horizon`, if any.
pub fn next_collision(s: &FrontState, horizon: f64) -> Option<CollisionEvent> {
    let mut cands: Vec<(f64, f64, usize)> = Vec::new();
    let mut best = f64::INFINITY;
    for i in 0..s.fronts.len().saturating_sub(1) {
        if let Some(t) = meeting_time(&s.fronts[i], &s.fronts[i + 1]) {
            let t = t.max(s.time);
            if t <= horizon && t <= best + time_tol(best.min(t)) {
                best = best.min(t);
                cands.push((t, s.fronts[i].position_at(t), i));
            }
        }
    }
    if cands.is_empty() {
        return None;
    }
    cands.retain(|c| c.0 <= best + time_tol(best));
    let (t, x, i) = match s.seed {
        Some(seed) if cands.len() > 1 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s.events));
            cands[rng.random_range(0..cands.len())]
        }
        _ => cands[0],
    };
    // the earliest-time pair fixes the meeting point; gather every front there
    let tol = position_tol(x);
    let mut lo = i;
    while lo > 0 && (s.fronts[lo - 1].position_at(t) - x).abs() <= tol {
        lo -= 1;
    }
    let mut hi = i + 1;
    while hi + 1 < s.fronts.len() && (s.fronts[hi + 1].position_at(t) - x).abs() <= tol {
        hi += 1;
    }
    let incoming = &s.fronts[lo..=hi];
    let tv = s.total_variation();
    Some(CollisionEvent {
        time: t,
        position: x,
        incoming_front_ids: incoming.iter().map(|f| f.id).collect(),
        incoming_sizes: incoming.iter().map(Front::size).collect(),
        outgoing_sizes: Vec::new(),
        tv_before: tv,
        upsilon_before: f64::NAN,
        tv_after: f64::NAN,
        upsilon_after: f64::NAN,
    })
}

/// Exact local change `(dTV, dQ)` when waves `ins` are replaced by `outs` in
/// a state whose total variation is `tv_before`.
pub fn local_drops(ins: &[f64], outs: &[f64], tv_before: f64) -> (f64, f64) {
    let abs = |v: &[f64]| v.iter().map(|s| s.abs()).sum::<f64>();
    let sq = |v: &[f64]| v.iter().map(|s| s * s).sum::<f64>();
    let dtv = abs(ins) - abs(outs);
    let ds2 = sq(ins) - sq(outs);
    let dq = 0.5 * (dtv * (2.0 * tv_before - dtv) - ds2);
    (dtv, dq)
}

/// Replaces the incoming fronts of `e` by the fan of the combined jump.
pub fn resolve_collision(
    s: &FrontState,
    e: &CollisionEvent,
    flux: &FluxModel,
    opts: &TrackingOptions,
) -> Result<(FrontState, EventRecord)> {
    if e.time < s.time - time_tol(s.time) {
        return Err(Error::InconsistentEvent(format!(
            "event at t = {} precedes state time {}",
            e.time, s.time
        )));
    }
    if e.incoming_front_ids.len() < 2 {
        return Err(Error::InconsistentEvent("fewer than two incoming fronts".into()));
    }
    let first = s
        .fronts
        .iter()
        .position(|f| f.id == e.incoming_front_ids[0])
        .ok_or_else(|| Error::InconsistentEvent(format!("unknown front {}", e.incoming_front_ids[0])))?;
    let n = e.incoming_front_ids.len();
    if first + n > s.fronts.len()
        || s.fronts[first..first + n]
            .iter()
            .zip(&e.incoming_front_ids)
            .any(|(f, id)| f.id != *id)
    {
        return Err(Error::InconsistentEvent(
            "incoming fronts are not adjacent in the state".into(),
        ));
    }
    let incoming = &s.fronts[first..first + n];
    if flux.is_convex() && incoming.iter().all(|f| f.kind == WaveKind::RarefactionStep) {
        return Err(Error::InconsistentEvent(
            "rarefaction steps cannot interact under a convex flux".into(),
        ));
    }
    let ul = incoming[0].left_state;
    let ur = incoming[n - 1].right_state;
    let fan = solve_riemann_with_samples(ul, ur, flux, opts.epsilon, opts.envelope_samples)?;
    let (tv_b, _, ups_b) = s.readings(opts.kappa);

    let mut next = s.clone();
    next.time = e.time;
    next.events += 1;
    let out = next.fronts_from_fan(&fan, e.time, e.position, opts.epsilon);
    let in_sizes: Vec<f64> = incoming.iter().map(Front::size).collect();
    let in_ids: Vec<usize> = incoming.iter().map(|f| f.id).collect();
    let out_sizes: Vec<f64> = out.iter().map(Front::size).collect();
    next.fronts.splice(first..first + n, out.iter().copied());

    let (dtv, dq) = local_drops(&in_sizes, &out_sizes, tv_b);
    let dups = dtv + opts.kappa * dq;
    let all_same_sign =
        in_sizes.iter().all(|v| *v > 0.0) || in_sizes.iter().all(|v| *v < 0.0);
    let predicted = if all_same_sign {
        let mut acc = 0.0;
        for i in 0..n {
            for k in i + 1..n {
                acc += (in_sizes[i] * in_sizes[k]).abs();
            }
        }
        opts.kappa * acc
    } else {
        let abs: f64 = in_sizes.iter().map(|v| v.abs()).sum();
        0.5 * (abs - in_sizes.iter().sum::<f64>().abs())
    };
    let record = EventRecord {
        kind: RecordKind::Collision,
        t: e.time,
        x: e.position,
        in_ids,
        out_ids: out.iter().map(|f| f.id).collect(),
        in_sizes,
        out_sizes,
        tv_before: tv_b,
        tv_after: tv_b - dtv,
        upsilon_before: ups_b,
        upsilon_after: ups_b - dups,
        tv_drop: dtv,
        upsilon_drop: dups,
        predicted_drop: predicted,
        beta_involved: false,
        out_fronts: out,
    };
    Ok((next, record))
}

/// Resolves every interaction up to `t_end` and moves the state there.
pub fn evolve(
    s: &FrontState,
    t_end: f64,
    flux: &FluxModel,
    opts: &TrackingOptions,
) -> Result<(FrontState, Vec<EventRecord>)> {
    if t_end < s.time - time_tol(s.time) {
        return Err(Error::InconsistentEvent(format!(
            "cannot evolve backwards from {} to {t_end}",
            s.time
        )));
    }
    let (_, _, ups0) = s.readings(opts.kappa);
    let n0 = s.fronts.len();
    let limit = opts.event_limit.unwrap_or_else(|| {
        let eps = opts.epsilon;
        (ups0 / (opts.kappa * eps * eps)).ceil() as usize + n0 * n0 + 64
    });
    let mut state = s.clone();
    let mut records = Vec::new();
    while let Some(e) = next_collision(&state, t_end) {
        let (next, rec) = resolve_collision(&state, &e, flux, opts)?;
        state = next;
        records.push(rec);
        if records.len() > limit {
            return Err(Error::EventCountExceeded {
                count: records.len(),
                limit,
            });
        }
    }
    state.time = state.time.max(t_end);
    Ok((state, records))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Initial,
    Collision,
    Update,
}

/// Point of the space-time plane where fronts end and/or start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub t: f64,
    pub x: f64,
    pub kind: NodeKind,
    /// Segment indices, left to right.
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

/// Straight piece of the space-time trajectory of one front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    pub t_start: f64,
    pub x_start: f64,
    pub t_end: f64,
    pub speed: f64,
    pub left: f64,
    pub right: f64,
    pub kind: WaveKind,
    pub birth: usize,
    pub death: Option<usize>,
}

impl Segment {
    pub fn size(&self) -> f64 {
        self.right - self.left
    }

    pub fn x_at(&self, t: f64) -> f64 {
        self.x_start + self.speed * (t - self.t_start)
    }

    pub fn x_end(&self) -> f64 {
        self.x_at(self.t_end)
    }

    /// Alive on `[t_start, t_end)`, or up to `t_end` included when the
    /// segment survives to the end of the run.
    pub fn alive_at(&self, t: f64) -> bool {
        t >= self.t_start && (t < self.t_end || (self.death.is_none() && t <= self.t_end))
    }
}

/// Every front of a run as a space-time segment, plus the nodes joining them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveHistory {
    pub segments: Vec<Segment>,
    pub nodes: Vec<Node>,
    /// Far-left state as a right-continuous step function of time.
    pub background: Vec<(f64, f64)>,
    pub t_final: f64,
    #[serde(skip)]
    by_id: HashMap<usize, usize>,
}

impl WaveHistory {
    pub fn new(t0: f64, far_left: f64) -> Self {
        Self {
            background: vec![(t0, far_left)],
            t_final: t0,
            ..Default::default()
        }
    }

    pub fn segment_of(&self, id: usize) -> Option<&Segment> {
        self.by_id.get(&id).map(|&i| &self.segments[i])
    }

    pub fn segment_index(&self, id: usize) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn record(&mut self, r: &EventRecord) -> Result<()> {
        let kind = match r.kind {
            RecordKind::InitialDatum => NodeKind::Initial,
            RecordKind::Collision => NodeKind::Collision,
            RecordKind::SourceUpdate => NodeKind::Update,
        };
        let node = self.nodes.len();
        let mut incoming = Vec::with_capacity(r.in_ids.len());
        for id in &r.in_ids {
            let idx = *self
                .by_id
                .get(id)
                .ok_or_else(|| Error::InconsistentEvent(format!("front {id} was never created")))?;
            let seg = &mut self.segments[idx];
            seg.t_end = r.t;
            seg.death = Some(node);
            incoming.push(idx);
        }
        let mut outgoing = Vec::with_capacity(r.out_fronts.len());
        for f in &r.out_fronts {
            let idx = self.segments.len();
            self.segments.push(Segment {
                id: f.id,
                t_start: f.origin_t,
                x_start: f.origin_x,
                t_end: f64::INFINITY,
                speed: f.speed,
                left: f.left_state,
                right: f.right_state,
                kind: f.kind,
                birth: node,
                death: None,
            });
            self.by_id.insert(f.id, idx);
            outgoing.push(idx);
        }
        self.nodes.push(Node {
            t: r.t,
            x: r.x,
            kind,
            incoming,
            outgoing,
        });
        Ok(())
    }

    pub fn set_background(&mut self, t: f64, v: f64) {
        if self.background.last().map(|b| b.1) != Some(v) {
            self.background.push((t, v));
        }
    }

    /// Closes all surviving segments at `t_end`.
    pub fn finish(&mut self, t_end: f64) {
        self.t_final = t_end;
        for s in &mut self.segments {
            if s.death.is_none() {
                s.t_end = t_end;
            }
        }
    }

    pub fn far_left_at(&self, t: f64) -> f64 {
        let i = self.background.partition_point(|b| b.0 <= t);
        self.background[i.max(1) - 1].1
    }

    /// Segments alive at `t`, sorted by position.
    pub fn alive_at(&self, t: f64) -> Vec<&Segment> {
        let mut v: Vec<&Segment> = self.segments.iter().filter(|s| s.alive_at(t)).collect();
        v.sort_by(|a, b| a.x_at(t).total_cmp(&b.x_at(t)).then(a.id.cmp(&b.id)));
        v
    }

    /// Right-continuous profile at time `t`.
    pub fn profile_at(&self, t: f64) -> Profile {
        let items: Vec<(f64, f64)> = self
            .alive_at(t)
            .iter()
            .map(|s| (s.x_at(t), s.right))
            .collect();
        profile_from_sorted(self.far_left_at(t), &items)
    }

    pub fn from_log(log: &EventLog, t0: f64, far_left: f64, t_end: f64) -> Result<Self> {
        let mut h = Self::new(t0, far_left);
        for r in &log.records {
            h.record(r)?;
        }
        h.finish(t_end);
        Ok(h)
    }

    /// Rebuilds the id index after deserialization.
    pub fn reindex(&mut self) {
        self.by_id = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id, i))
            .collect();
    }
}
