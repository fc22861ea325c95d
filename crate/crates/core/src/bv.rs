//! Piecewise-constant profiles, their derivative measures and the BV
//! functionals (total variation, interaction potential, Glimm functional)
//! that drive the interaction estimates of the tracking scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A right-continuous piecewise-constant function of `x`.
///
/// `values[0]` holds on `(-inf, breakpoints[0])`, `values[i]` on
/// `[breakpoints[i-1], breakpoints[i])` and the last value up to `+inf`.
/// Adjacent values always differ: equal neighbours are merged on
/// construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(breakpoints, values, 0.0)
    }

    /// Builds a profile, merging adjacent values closer than `tol_u`.
    /// The left value of a merged pair is kept.
    pub fn with_tolerance(breakpoints: Vec<f64>, values: Vec<f64>, tol_u: f64) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidProfile(format!(
                "{} values for {} breakpoints",
                values.len(),
                breakpoints.len()
            )));
        }
        if let Some(bad) = values.iter().chain(&breakpoints).find(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile(format!("non-finite entry {bad}")));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProfile(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let mut bp = Vec::with_capacity(breakpoints.len());
        let mut vals = Vec::with_capacity(values.len());
        vals.push(values[0]);
        for (x, &v) in breakpoints.iter().zip(&values[1..]) {
            let last = *vals.last().unwrap();
            if (v - last).abs() > tol_u {
                bp.push(*x);
                vals.push(v);
            }
        }
        Ok(Self {
            breakpoints: bp,
            values: vals,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![value],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jump_count(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_constant(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Iterates over `(position, left value, right value)`.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .map(move |(i, &x)| (x, self.values[i], self.values[i + 1]))
    }

    /// Right-continuous evaluation.
    pub fn value_at(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        self.values[idx]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn translated(&self, dx: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|b| b + dx).collect(),
            values: self.values.clone(),
        }
    }

    /// Exact L1 distance between two profiles. Infinite if the far-field
    /// values differ.
    pub fn l1_distance(&self, other: &Profile) -> f64 {
        if self.values[0] != other.values[0]
            || self.values.last() != other.values.last()
        {
            return f64::INFINITY;
        }
        let mut xs: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (self.value_at(mid) - other.value_at(mid)).abs() * (w[1] - w[0])
            })
            .sum()
    }

    /// L1 distance on `[a, b]` to a function that is affine between
    /// consecutive entries of `breaks`. Exact (up to rounding) for such
    /// functions; discontinuities of `f` are allowed at the breaks.
    pub fn l1_distance_piecewise_linear<F>(&self, f: F, breaks: &[f64], a: f64, b: f64) -> f64
    where
        F: Fn(f64) -> f64,
    {
        if b <= a {
            return 0.0;
        }
        let mut xs: Vec<f64> = vec![a, b];
        xs.extend(
            self.breakpoints
                .iter()
                .chain(breaks)
                .copied()
                .filter(|&x| x > a && x < b),
        );
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut total = 0.0;
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let h = x1 - x0;
            if h <= 0.0 {
                continue;
            }
            let c = self.value_at(0.5 * (x0 + x1));
            // affine reconstruction from two interior samples
            let y1 = f(x0 + 0.25 * h) - c;
            let y3 = f(x0 + 0.75 * h) - c;
            let d0 = 1.5 * y1 - 0.5 * y3;
            let d1 = 1.5 * y3 - 0.5 * y1;
            total += abs_linear_integral(d0, d1, h);
        }
        total
    }

    /// CSV with header `x_left,value`; the first row uses `-inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_left,value\n");
        out.push_str(&format!("-inf,{}\n", fmt_f64(self.values[0])));
        for (x, v) in self.breakpoints.iter().zip(&self.values[1..]) {
            out.push_str(&format!("{},{}\n", fmt_f64(*x), fmt_f64(*v)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, header)) if header.replace(' ', "") == "x_left,value" => {}
            Some((line, _)) => {
                return Err(Error::Csv {
                    line,
                    msg: "expected header `x_left,value`".into(),
                })
            }
            None => {
                return Err(Error::Csv {
                    line: 0,
                    msg: "empty profile file".into(),
                })
            }
        }
        let mut bps = Vec::new();
        let mut vals = Vec::new();
        for (idx, (line, row)) in lines.enumerate() {
            let (x, v) = row.split_once(',').ok_or_else(|| Error::Csv {
                line,
                msg: "expected two columns".into(),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Csv {
                    line,
                    msg: e.to_string(),
                })
            };
            let v = parse(v)?;
            if idx == 0 {
                if x.trim() != "-inf" {
                    return Err(Error::Csv {
                        line,
                        msg: "first row must start at -inf".into(),
                    });
                }
            } else {
                bps.push(parse(x)?);
            }
            vals.push(v);
        }
        if vals.is_empty() {
            return Err(Error::Csv {
                line: 1,
                msg: "no data rows".into(),
            });
        }
        Profile::new(bps, vals)
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// `int_0^h |d(x)| dx` for `d` affine with `d(0) = d0`, `d(h) = d1`.
fn abs_linear_integral(d0: f64, d1: f64, h: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * (d0.abs() + d1.abs()) * h
    } else {
        let root = d0.abs() / (d0.abs() + d1.abs()) * h;
        0.5 * d0.abs() * root + 0.5 * d1.abs() * (h - root)
    }
}

/// Finite union of closed intervals on the real line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Sorts and merges overlapping intervals. Degenerate intervals
    /// `[a, a]` are kept.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(a, b)| a <= b);
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { intervals: merged }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self::new(vec![(a, b)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(a, b)| x >= a - tol && x <= b + tol)
    }

    pub fn lebesgue(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Lebesgue measure of the intersection with `[lo, hi]`.
    pub fn lebesgue_within(&self, lo: f64, hi: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }
}

/// Purely atomic signed measure on the line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignedAtomicMeasure1D {
    atoms: Vec<(f64, f64)>,
}

impl SignedAtomicMeasure1D {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidProfile(
                "atom positions must be strictly increasing".into(),
            ));
        }
        if atoms.iter().any(|(x, w)| !x.is_finite() || !w.is_finite()) {
            return Err(Error::InvalidProfile("non-finite atom".into()));
        }
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total variation of the measure, `sum |w|`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.abs()).sum()
    }

    /// Signed value on a set.
    pub fn on(&self, set: &IntervalUnion, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(x, _)| set.contains(*x, tol))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn positive_on(&self, set: &IntervalUnion, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(x, w)| *w > 0.0 && set.contains(*x, tol))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn negative_on(&self, set: &IntervalUnion, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(x, w)| *w < 0.0 && set.contains(*x, tol))
            .map(|(_, w)| -w)
            .sum()
    }
}

/// Readings of the BV functionals on one profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReadings {
    pub tv: f64,
    pub q: f64,
    pub upsilon: f64,
    pub tv_neg: f64,
    pub kappa: f64,
}

/// Split of a derivative measure into the part carried by traced jumps
/// and the remainder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BVDecomposition {
    pub jump_part: SignedAtomicMeasure1D,
    pub cont_part: SignedAtomicMeasure1D,
    pub cantor_proxy: f64,
    pub threshold: f64,
}

impl BVDecomposition {
    /// Fills in the Cantor proxy of the continuous part at threshold `beta`.
    pub fn with_cantor_proxy(mut self, beta: f64, m_atoms: usize) -> Self {
        self.cantor_proxy = cantor_proxy(&self.cont_part, beta, m_atoms);
        self.threshold = beta;
        self
    }
}

pub fn total_variation(p: &Profile) -> f64 {
    p.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Sum over unordered pairs of distinct jumps of the product of their sizes.
pub fn interaction_potential(p: &Profile) -> f64 {
    let (sum, sum_sq) = p
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold((0.0, 0.0), |(s, s2), a| (s + a, s2 + a * a));
    (0.5 * (sum * sum - sum_sq)).max(0.0)
}

/// Variation carried by upward jumps.
pub fn negative_variation(p: &Profile) -> f64 {
    p.values
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| w[1] - w[0])
        .sum()
}

pub fn glimm_functional(p: &Profile, kappa: f64, tv_bound: f64) -> Result<FunctionalReadings> {
    if !(kappa > 0.0 && kappa * 8.0 * tv_bound < 1.0) {
        return Err(Error::KappaOutOfRange { kappa, tv_bound });
    }
    let tv = total_variation(p);
    let q = interaction_potential(p);
    Ok(FunctionalReadings {
        tv,
        q,
        upsilon: tv + kappa * q,
        tv_neg: negative_variation(p),
        kappa,
    })
}

pub fn derivative_measure(p: &Profile) -> SignedAtomicMeasure1D {
    SignedAtomicMeasure1D {
        atoms: p.jumps().map(|(x, l, r)| (x, r - l)).collect(),
    }
}

/// Restricts `m` to `jump_positions`; the rest forms the continuous part.
pub fn split_measure(
    m: &SignedAtomicMeasure1D,
    jump_positions: &[f64],
    tol: f64,
) -> Result<BVDecomposition> {
    let mut is_jump = vec![false; m.atoms.len()];
    for &pos in jump_positions {
        let idx = m.atoms.partition_point(|(x, _)| *x < pos - tol);
        match m.atoms.get(idx) {
            Some((x, _)) if (x - pos).abs() <= tol => is_jump[idx] = true,
            _ => return Err(Error::PositionNotFound { position: pos, tol }),
        }
    }
    let (jump, cont): (Vec<_>, Vec<_>) = m
        .atoms
        .iter()
        .zip(&is_jump)
        .partition(|(_, &flag)| flag);
    Ok(BVDecomposition {
        jump_part: SignedAtomicMeasure1D {
            atoms: jump.into_iter().map(|(a, _)| *a).collect(),
        },
        cont_part: SignedAtomicMeasure1D {
            atoms: cont.into_iter().map(|(a, _)| *a).collect(),
        },
        cantor_proxy: 0.0,
        threshold: 0.0,
    })
}

/// Sum of the `m_atoms` largest `|w|` among atoms lighter than `beta`.
///
/// At a fixed resolution this is the mass of sub-threshold variation that
/// can be concentrated on a few points. For an SBV slice it vanishes as
/// `beta -> 0` with `m_atoms` growing slower than `1/beta`.
pub fn cantor_proxy(m: &SignedAtomicMeasure1D, beta: f64, m_atoms: usize) -> f64 {
    let mut small: Vec<f64> = m
        .atoms
        .iter()
        .map(|(_, w)| w.abs())
        .filter(|w| *w < beta)
        .collect();
    small.sort_by(|a, b| b.total_cmp(a));
    small.iter().take(m_atoms).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn steps(values: &[f64]) -> Profile {
        let bps = (0..values.len().saturating_sub(1)).map(|i| i as f64).collect();
        Profile::new(bps, values.to_vec()).unwrap()
    }

    fn brute_q(p: &Profile) -> f64 {
        let sizes: Vec<f64> = p.jumps().map(|(_, l, r)| (r - l).abs()).collect();
        let mut q = 0.0;
        for i in 0..sizes.len() {
            for k in i + 1..sizes.len() {
                q += sizes[i] * sizes[k];
            }
        }
        q
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&steps(&[0.0, 1.0, 0.0])), 2.0);
        assert_eq!(total_variation(&Profile::constant(5.0)), 0.0);
        assert_eq!(total_variation(&steps(&[0.0, 0.25, 0.5, 0.75, 1.0])), 1.0);
    }

    #[test]
    fn interaction_potential_examples() {
        assert_eq!(interaction_potential(&steps(&[0.0, 1.0, 0.0])), 1.0);
        assert_eq!(interaction_potential(&steps(&[0.0, 1.0, 2.0])), 1.0);
        let p = steps(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(brute_q(&p), 3.0);
        assert_eq!(interaction_potential(&p), 3.0);
    }

    #[test]
    fn glimm_functional_examples() {
        let r = glimm_functional(&steps(&[0.0, 1.0, 0.0]), 0.05, 2.0).unwrap();
        assert_eq!((r.tv, r.q, r.tv_neg), (2.0, 1.0, 1.0));
        assert_abs_diff_eq!(r.upsilon, 2.05, epsilon = 1e-15);

        let r = glimm_functional(&steps(&[2.0, 1.0, 0.0]), 0.05, 2.0).unwrap();
        assert_eq!((r.tv, r.q, r.tv_neg), (2.0, 1.0, 0.0));
        assert_abs_diff_eq!(r.upsilon, 2.05, epsilon = 1e-15);

        let r = glimm_functional(&Profile::constant(3.0), 0.01, 2.0).unwrap();
        assert_eq!((r.tv, r.q, r.upsilon, r.tv_neg), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn kappa_out_of_range() {
        let p = steps(&[0.0, 1.0]);
        assert!(matches!(
            glimm_functional(&p, 0.0625, 2.0),
            Err(Error::KappaOutOfRange { .. })
        ));
        assert!(glimm_functional(&p, -0.01, 2.0).is_err());
        assert!(glimm_functional(&p, 0.06, 2.0).is_ok());
    }

    #[test]
    fn derivative_measure_examples() {
        let p = Profile::new(vec![1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(derivative_measure(&p).atoms(), &[(1.0, 1.0), (2.0, -1.0)]);
        assert!(derivative_measure(&Profile::constant(1.0)).is_empty());
        let p = Profile::new(vec![0.0, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        let m = derivative_measure(&p);
        assert_eq!(m.atoms(), &[(0.0, 0.5), (1.0, 0.5)]);
        assert_eq!(m.mass(), 1.0);
    }

    #[test]
    fn split_measure_examples() {
        let m = SignedAtomicMeasure1D::new(vec![(1.0, 1.0), (2.0, -1.0)]).unwrap();
        let d = split_measure(&m, &[2.0], 1e-12).unwrap();
        assert_eq!(d.jump_part.atoms(), &[(2.0, -1.0)]);
        assert_eq!(d.cont_part.atoms(), &[(1.0, 1.0)]);

        let d = split_measure(&m, &[], 1e-12).unwrap();
        assert!(d.jump_part.is_empty());
        assert_eq!(d.cont_part, m);

        let d = split_measure(&m, &[1.0, 2.0], 1e-12).unwrap();
        assert!(d.cont_part.is_empty());

        assert!(matches!(
            split_measure(&m, &[1.5], 1e-12),
            Err(Error::PositionNotFound { .. })
        ));
    }

    #[test]
    fn cantor_proxy_examples() {
        let m = SignedAtomicMeasure1D::new(vec![(1.0, 1.0), (2.0, -0.1), (3.0, 0.05)]).unwrap();
        assert_abs_diff_eq!(cantor_proxy(&m, 0.5, 2), 0.15, epsilon = 1e-15);
        assert_eq!(cantor_proxy(&m, 0.5, 0), 0.0);
        assert_eq!(cantor_proxy(&m, 0.01, 3), 0.0);
        let d = split_measure(&m, &[1.0], 1e-12)
            .unwrap()
            .with_cantor_proxy(0.5, 1);
        assert_abs_diff_eq!(d.cantor_proxy, 0.1, epsilon = 1e-15);
        assert!(d.cantor_proxy <= d.cont_part.mass());
    }

    #[test]
    fn profile_rejects_bad_input() {
        assert!(Profile::new(vec![1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(Profile::new(vec![1.0], vec![0.0]).is_err());
        assert!(Profile::new(vec![f64::NAN], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn profile_merges_equal_neighbours() {
        let p = Profile::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(p.breakpoints(), &[1.0]);
        assert_eq!(p.values(), &[1.0, 2.0]);
        assert_eq!(p.value_at(1.0), 2.0);
        assert_eq!(p.value_at(0.999), 1.0);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let p = Profile::new(vec![-0.5, 1.25], vec![1.0, -2.0, 0.125]).unwrap();
        let text = p.to_csv();
        assert!(text.starts_with("x_left,value\n-inf,1.0\n"));
        assert_eq!(Profile::from_csv(&text).unwrap(), p);
        assert!(Profile::from_csv("x,value\n-inf,1\n").is_err());
        assert!(Profile::from_csv("x_left,value\n0,1\n").is_err());
        assert!(Profile::from_csv("x_left,value\n-inf,1\n2,abc\n").is_err());
    }

    #[test]
    fn l1_to_piecewise_linear_ramp() {
        // staircase 0 -> 0.5 at x=0.25, -> 1 at x=0.75 against the ramp x on [0,1]
        let p = Profile::new(vec![0.25, 0.75], vec![0.0, 0.5, 1.0]).unwrap();
        let ramp = |x: f64| x.clamp(0.0, 1.0);
        let err = p.l1_distance_piecewise_linear(ramp, &[0.0, 1.0], -1.0, 2.0);
        // three triangles of legs 0.25: 4 * (0.25^2 / 2) = 0.125
        assert_abs_diff_eq!(err, 0.125, epsilon = 1e-15);
    }

    #[test]
    fn interval_union_merges() {
        let u = IntervalUnion::new(vec![(2.0, 3.0), (0.0, 1.0), (0.5, 1.5)]);
        assert_eq!(u.intervals(), &[(0.0, 1.5), (2.0, 3.0)]);
        assert_eq!(u.lebesgue(), 2.5);
        assert_eq!(u.lebesgue_within(1.0, 2.5), 1.0);
        assert!(u.contains(1.5, 0.0));
        assert!(!u.contains(1.75, 0.0));
    }

    fn arb_profile() -> impl Strategy<Value = Profile> {
        prop::collection::vec((-2.0f64..2.0, 0.01f64..1.0), 1..12).prop_map(|cells| {
            let mut x = 0.0;
            let mut bps = Vec::new();
            let mut vals = Vec::new();
            for (i, (v, w)) in cells.iter().enumerate() {
                if i > 0 {
                    bps.push(x);
                }
                vals.push(*v);
                x += w;
            }
            Profile::new(bps, vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn derivative_mass_is_total_variation(p in arb_profile()) {
            let m = derivative_measure(&p);
            prop_assert!((m.mass() - total_variation(&p)).abs() < 1e-12);
        }

        #[test]
        fn q_matches_double_sum_and_is_bounded(p in arb_profile()) {
            let q = interaction_potential(&p);
            let tv = total_variation(&p);
            prop_assert!((q - brute_q(&p)).abs() < 1e-9);
            prop_assert!(q <= tv * tv / 2.0 + 1e-12);
        }

        #[test]
        fn upsilon_identity(p in arb_profile(), kappa in 1e-4f64..0.01) {
            let r = glimm_functional(&p, kappa, 10.0).unwrap();
            prop_assert!((r.upsilon - (r.tv + kappa * r.q)).abs() < 1e-12);
            prop_assert!(r.tv_neg <= r.tv + 1e-15);
        }

        #[test]
        fn tv_invariant_under_translation_and_refinement(p in arb_profile(), dx in -5.0f64..5.0) {
            let tv = total_variation(&p);
            prop_assert!((total_variation(&p.translated(dx)) - tv).abs() < 1e-12);
            // insert a duplicate cell: merging restores the same profile
            let mut bps = p.breakpoints().to_vec();
            let mut vals = p.values().to_vec();
            bps.insert(0, bps.first().copied().unwrap_or(0.0) - 1.0);
            vals.insert(0, vals[0]);
            let refined = Profile::new(bps, vals).unwrap();
            prop_assert_eq!(&refined, &p);
        }

        #[test]
        fn split_partitions_mass(p in arb_profile(), mask in prop::collection::vec(any::<bool>(), 12)) {
            let m = derivative_measure(&p);
            let chosen: Vec<f64> = m.atoms().iter().zip(&mask).filter(|(_, k)| **k).map(|(a, _)| a.0).collect();
            let d = split_measure(&m, &chosen, 1e-12).unwrap();
            prop_assert!((d.jump_part.mass() + d.cont_part.mass() - m.mass()).abs() < 1e-12);
            prop_assert_eq!(d.jump_part.len() + d.cont_part.len(), m.len());
        }
    }
}
