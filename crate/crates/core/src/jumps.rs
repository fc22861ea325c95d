//! Maximal, leftmost β-approximate discontinuities: polygonal chains of
//! fronts that never drop below β/4 in strength and reach β at least once.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bv::total_variation;
use crate::error::{Error, Result};
use crate::splitting::{RunArtifacts, SolverConfig};
use crate::tracking::{EventLog, WaveHistory};

/// Maximum number of relinking passes of the leftmost rule.
const MAX_PASSES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonalDiscontinuity {
    /// `(t, x)` vertices; consecutive vertices bound one segment.
    pub nodes: Vec<(f64, f64)>,
    #[serde(rename = "sizes")]
    pub segment_sizes: Vec<f64>,
    pub peak_size: f64,
    /// Indices into the run's segment list.
    pub segments: Vec<usize>,
    /// Front ids, one per segment.
    pub front_ids: Vec<usize>,
    /// History node where the curve starts.
    pub start_node: usize,
    /// History node where the curve ends, if it ends before the final time.
    pub end_node: Option<usize>,
}

impl PolygonalDiscontinuity {
    pub fn t_start(&self) -> f64 {
        self.nodes[0].0
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].0
    }

    /// Position at time `t` inside the curve's lifespan.
    pub fn x_at(&self, t: f64) -> Option<f64> {
        if t < self.t_start() || t > self.t_end() {
            return None;
        }
        for w in self.nodes.windows(2) {
            let ((t0, x0), (t1, x1)) = (w[0], w[1]);
            if t <= t1 {
                if t1 == t0 {
                    return Some(x1);
                }
                return Some(x0 + (x1 - x0) * (t - t0) / (t1 - t0));
            }
        }
        self.nodes.last().map(|n| n.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpFamily {
    pub beta: f64,
    pub curves: Vec<PolygonalDiscontinuity>,
    pub m_count: usize,
    /// Number of segments in the history the family was traced from.
    pub source_segments: usize,
}

impl JumpFamily {
    /// Segment index -> curve index.
    pub fn membership(&self) -> HashMap<usize, usize> {
        let mut m = HashMap::new();
        for (c, curve) in self.curves.iter().enumerate() {
            for &s in &curve.segments {
                m.insert(s, c);
            }
        }
        m
    }

    pub fn traced_segments(&self) -> HashSet<usize> {
        self.curves.iter().flat_map(|c| c.segments.iter().copied()).collect()
    }

    /// Checks that the family was traced from `history`.
    pub fn check_run(&self, history: &WaveHistory) -> Result<()> {
        if self.source_segments != history.segments.len() {
            return Err(Error::FamilyRunMismatch(format!(
                "family built on {} segments, run has {}",
                self.source_segments,
                history.segments.len()
            )));
        }
        for c in &self.curves {
            for (&s, &id) in c.segments.iter().zip(&c.front_ids) {
                if history.segments.get(s).map(|g| g.id) != Some(id) {
                    return Err(Error::FamilyRunMismatch(format!(
                        "segment {s} does not carry front {id}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Links every eligible outgoing segment of a node to one eligible incoming
/// segment of the same sign, preferring the leftmost incoming one for which
/// `prefer` holds and falling back to the leftmost one.
fn link(
    history: &WaveHistory,
    eligible: &[bool],
    prefer: &dyn Fn(usize) -> bool,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = history.segments.len();
    let mut pred = vec![None; n];
    let mut succ = vec![None; n];
    for node in &history.nodes {
        let ins: Vec<usize> = node.incoming.iter().copied().filter(|&s| eligible[s]).collect();
        let mut used = vec![false; ins.len()];
        for &o in node.outgoing.iter().filter(|&&s| eligible[s]) {
            let sg = sign(history.segments[o].size());
            let cands: Vec<usize> = (0..ins.len())
                .filter(|&k| !used[k] && sign(history.segments[ins[k]].size()) == sg)
                .collect();
            let pick = cands
                .iter()
                .copied()
                .find(|&k| prefer(ins[k]))
                .or_else(|| cands.first().copied());
            if let Some(k) = pick {
                used[k] = true;
                pred[o] = Some(ins[k]);
                succ[ins[k]] = Some(o);
            }
        }
    }
    (pred, succ)
}

fn chains(eligible: &[bool], pred: &[Option<usize>], succ: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for s in 0..eligible.len() {
        if eligible[s] && pred[s].is_none() {
            let mut c = vec![s];
            let mut cur = s;
            while let Some(nx) = succ[cur] {
                c.push(nx);
                cur = nx;
            }
            out.push(c);
        }
    }
    out
}

/// Traces the family of β-approximate discontinuities of a run.
pub fn trace_discontinuities(run: &RunArtifacts, beta: f64) -> JumpFamily {
    trace_history(&run.history, beta)
}

pub fn trace_history(history: &WaveHistory, beta: f64) -> JumpFamily {
    let floor = 0.25 * beta * (1.0 - 1e-12);
    let peak_floor = beta * (1.0 - 1e-12);
    let eligible: Vec<bool> = history
        .segments
        .iter()
        .map(|s| s.size().abs() >= floor)
        .collect();
    let qualifies = |c: &[usize]| {
        c.iter()
            .any(|&s| history.segments[s].size().abs() >= peak_floor)
    };

    let mut qualified: HashSet<usize> = HashSet::new();
    let mut result = chains(&eligible, &vec![None; eligible.len()], &vec![None; eligible.len()]);
    for _ in 0..MAX_PASSES {
        let prefer = |s: usize| qualified.contains(&s);
        let (pred, succ) = link(history, &eligible, &prefer);
        let cs = chains(&eligible, &pred, &succ);
        let next: HashSet<usize> = cs
            .iter()
            .filter(|c| qualifies(c))
            .flat_map(|c| c.iter().copied())
            .collect();
        result = cs;
        if next == qualified {
            break;
        }
        qualified = next;
    }

    let mut curves: Vec<PolygonalDiscontinuity> = result
        .into_iter()
        .filter(|c| qualifies(c))
        .map(|c| {
            let segs: Vec<_> = c.iter().map(|&s| &history.segments[s]).collect();
            let mut nodes = vec![(segs[0].t_start, segs[0].x_start)];
            nodes.extend(segs.iter().map(|s| (s.t_end, s.x_end())));
            let sizes: Vec<f64> = segs.iter().map(|s| s.size()).collect();
            PolygonalDiscontinuity {
                nodes,
                peak_size: sizes.iter().fold(0.0, |m, s| m.max(s.abs())),
                segment_sizes: sizes,
                front_ids: segs.iter().map(|s| s.id).collect(),
                start_node: segs[0].birth,
                end_node: segs[segs.len() - 1].death,
                segments: c,
            }
        })
        .collect();
    curves.sort_by(|a, b| {
        a.nodes[0]
            .0
            .total_cmp(&b.nodes[0].0)
            .then(a.nodes[0].1.total_cmp(&b.nodes[0].1))
    });
    JumpFamily {
        beta,
        m_count: curves.len(),
        curves,
        source_segments: history.segments.len(),
    }
}

/// Marks log records touching a traced front.
pub fn mark_beta_involved(log: &mut EventLog, family: &JumpFamily) {
    let ids: HashSet<usize> = family
        .curves
        .iter()
        .flat_map(|c| c.front_ids.iter().copied())
        .collect();
    for r in &mut log.records {
        r.beta_involved = r.in_ids.iter().chain(&r.out_ids).any(|id| ids.contains(id));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountBoundReport {
    pub m_count: usize,
    pub bound: f64,
    pub pass: bool,
}

/// `M_beta <= 8 kappa^-1 (delta_bar + G T) beta^-2 + TV(datum) / beta`.
pub fn count_bound(kappa: f64, upsilon_bound: f64, beta: f64, tv_datum: f64) -> f64 {
    8.0 / kappa * upsilon_bound / (beta * beta) + tv_datum / beta
}

pub fn count_bound_report(family: &JumpFamily, config: &SolverConfig, tv_datum: f64) -> CountBoundReport {
    let bound = count_bound(config.kappa, config.upsilon_bound(), family.beta, tv_datum);
    CountBoundReport {
        m_count: family.m_count,
        bound,
        pass: (family.m_count as f64) <= bound,
    }
}

pub fn count_bound_for_run(family: &JumpFamily, run: &RunArtifacts) -> CountBoundReport {
    count_bound_report(family, &run.config, total_variation(&run.datum))
}

/// Every segment traced at the coarse threshold is traced at the fine one.
pub fn enrichment_holds(coarse: &JumpFamily, fine: &JumpFamily) -> bool {
    let fine_set = fine.traced_segments();
    coarse.traced_segments().is_subset(&fine_set)
}
