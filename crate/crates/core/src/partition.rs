//! Interval partitions of basis positions, their lexicographic order,
//! Property P measurements and the explicit termination bounds.
//!
//! Positions are 1-based over the full basis order: dictionary position `i`
//! (0-based) is partition position `i + 1`, see [`partition_position`].

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::greedy::{GreedyTrace, TraceStatus};
use crate::haar::{haar_as_dyadic, HaarCoefficients, HaarDictionary, IndexSet};
use crate::lp;
use crate::numeric::sample_rng;

/// Largest value returned by the bound formulas.
pub const BOUND_LIMIT: u64 = 1 << 62;

/// Relative guard band around threshold comparisons.
pub const GUARD_BAND: f64 = 1e-9;

/// Smallest `zeta` used when the empirical constant is (numerically) zero.
pub const ZETA_FLOOR: f64 = 1e-3;

/// Slack allowed when checking the `h_1` inequality for `p > 2`.
pub const PROP42_SLACK: f64 = 1e-10;

#[inline]
pub fn partition_position(dictionary_position: usize) -> usize {
    dictionary_position + 1
}

/// `(I_1, ..., I_k)` with `I_k < ... < I_1` tiling `[1, m]`. Stored as
/// inclusive `(min, max)` pairs, `I_1` first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalPartition {
    m: usize,
    intervals: Vec<(usize, usize)>,
}

impl IntervalPartition {
    /// Builds a partition from block cardinalities, `card I_1` first.
    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(Error::InvalidParameter("lengths must be positive and nonempty".into()));
        }
        let m: usize = lengths.iter().sum();
        let mut top = m;
        let intervals = lengths
            .iter()
            .map(|&l| {
                let iv = (top + 1 - l, top);
                top -= l;
                iv
            })
            .collect();
        Ok(IntervalPartition { m, intervals })
    }

    /// The one-block partition `([1, m])`.
    pub fn whole(m: usize) -> Self {
        IntervalPartition { m, intervals: vec![(1, m)] }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.intervals.iter().map(|(a, b)| b - a + 1).collect()
    }

    /// `{max I_j : j >= from}` with `from` 1-based.
    pub fn max_endpoints_from(&self, from: usize) -> Vec<usize> {
        self.intervals.iter().skip(from.saturating_sub(1)).map(|iv| iv.1).collect()
    }

    pub fn max_endpoints(&self) -> Vec<usize> {
        self.max_endpoints_from(1)
    }

    /// Every interval partition of `[1, m]`; there are `2^(m-1)` of them.
    pub fn enumerate(m: usize) -> Vec<IntervalPartition> {
        assert!(m >= 1);
        (0u64..1 << (m - 1))
            .map(|mask| {
                // Bit b set: a block boundary between positions b+1 and b+2.
                let mut lengths = Vec::new();
                let mut run = 1;
                for b in (0..m - 1).rev() {
                    if mask >> b & 1 == 1 {
                        lengths.push(run);
                        run = 1;
                    } else {
                        run += 1;
                    }
                }
                lengths.push(run);
                IntervalPartition::from_lengths(&lengths).expect("valid lengths")
            })
            .collect()
    }

    fn tiles(&self) -> bool {
        let mut expect = self.m;
        for &(lo, hi) in &self.intervals {
            if hi != expect || lo > hi || lo == 0 {
                return false;
            }
            expect = lo - 1;
        }
        expect == 0
    }
}

impl fmt::Display for IntervalPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.lengths().iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Lexicographic comparison of block cardinalities, starting from `I_1`.
pub fn lex_compare(a: &IntervalPartition, b: &IntervalPartition) -> Result<Ordering> {
    if a.m != b.m {
        return Err(Error::LengthMismatch { expected: a.m, got: b.m });
    }
    Ok(a.lengths().cmp(&b.lengths()))
}

/// Backward-induction partition `P(y)` of coefficients over positions `[1, m]`.
pub fn interval_partition(a: &[f64], zeta: f64) -> Result<IntervalPartition> {
    interval_partition_guarded(a, zeta).map(|(p, _)| p)
}

/// Like [`interval_partition`], also reporting whether any threshold
/// comparison fell within [`GUARD_BAND`] (relative) of equality.
pub fn interval_partition_guarded(a: &[f64], zeta: f64) -> Result<(IntervalPartition, bool)> {
    let m = a.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty coefficient vector".into()));
    }
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidParameter(format!("zeta = {zeta} must be positive")));
    }
    let mut intervals = vec![(m, m)];
    let mut endpoint_sum = a[m - 1].abs();
    let mut near_tie = false;
    for i in (1..m).rev() {
        let ai = a[i - 1].abs();
        let threshold = (1.0 + zeta).powi((m - i) as i32) * endpoint_sum;
        let gap = (ai - threshold).abs();
        if gap <= GUARD_BAND * ai.max(threshold) && ai.max(threshold) > 0.0 {
            near_tie = true;
        }
        if ai <= threshold {
            intervals.last_mut().expect("nonempty").0 = i;
        } else {
            intervals.push((i, i));
            endpoint_sum += ai;
        }
    }
    let p = IntervalPartition { m, intervals };
    debug_assert!(p.tiles());
    Ok((p, near_tie))
}

/// `(||y||_p, m (1+zeta)^m / zeta * max_j |a_{max I_j}|)`.
pub fn norm_upper_bound_check(c: &HaarCoefficients, zeta: f64, p: Exponent) -> Result<(f64, f64)> {
    let a = c.coeffs();
    let part = interval_partition(a, zeta)?;
    let m = a.len() as f64;
    let top = part
        .max_endpoints()
        .iter()
        .map(|&j| a[j - 1].abs())
        .fold(0.0, f64::max);
    let bound = m * (1.0 + zeta).powf(m) / zeta * top;
    let dict = HaarDictionary::new(c.index_set().clone(), p);
    Ok((dict.norm_of(a), bound))
}

/// `1 + floor(ln(2m (1+zeta)^m / zeta) / ln(1/gamma))`.
pub fn n0_bound(m: usize, gamma: f64, zeta: f64) -> Result<u64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 1)")));
    }
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidParameter(format!("zeta = {zeta} must be positive")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let m = m as f64;
    let numerator = (2.0 * m / zeta).ln() + m * zeta.ln_1p();
    let quotient = numerator / (1.0 / gamma).ln();
    if !quotient.is_finite() || quotient >= BOUND_LIMIT as f64 {
        return Err(Error::Overflow);
    }
    Ok(1 + quotient.floor() as u64)
}

/// `(2^m - 1) n0`.
pub fn total_bound(m: usize, n0: u64) -> Result<u64> {
    if m == 0 || n0 == 0 {
        return Err(Error::InvalidParameter("m and n0 must be at least 1".into()));
    }
    if m >= 63 {
        return Err(Error::Overflow);
    }
    let blocks = (1u64 << m) - 1;
    blocks
        .checked_mul(n0)
        .filter(|&v| v <= BOUND_LIMIT)
        .ok_or(Error::Overflow)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyPReport {
    /// Dictionary position tested (0-based).
    pub i0: usize,
    pub t0: f64,
    pub tail_sum: f64,
    pub ratio: f64,
    pub zeta_used: Option<f64>,
}

impl PropertyPReport {
    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta_used = Some(zeta);
        self
    }

    /// True when `ratio > zeta + tol`.
    pub fn violates(&self, tol: f64) -> bool {
        self.zeta_used.is_some_and(|z| self.ratio > z + tol)
    }
}

/// Minimizer `t0` of `t -> ||sum_{i != i0} a_i e_i + t e_{i0}||` and its
/// ratio to the tail `sum_{i > i0} |a_i|`.
pub fn property_p_minimizer(a: &HaarCoefficients, i0: usize, p: Exponent) -> Result<PropertyPReport> {
    let dict = HaarDictionary::new(a.index_set().clone(), p);
    property_p_in(&dict, a.coeffs(), i0)
}

pub(crate) fn property_p_in(dict: &HaarDictionary, a: &[f64], i0: usize) -> Result<PropertyPReport> {
    if i0 + 1 >= a.len() {
        return Err(Error::InvalidParameter(format!(
            "position {i0} must precede the last position {}",
            a.len() - 1
        )));
    }
    let mut frozen = a.to_vec();
    frozen[i0] = 0.0;
    let z = dict.synthesize(&frozen);
    let ls = lp::line_minimize_values(z.values(), dict.element(i0).values(), dict.p())?;
    let t0 = -ls.lambda;
    let tail_sum: f64 = a[i0 + 1..].iter().map(|x| x.abs()).sum();
    let ratio = if tail_sum == 0.0 {
        let scale = z.lp_norm(dict.p());
        if t0.abs() > 1e-10 * scale {
            return Err(Error::PropertyPAnomaly { position: i0, t0 });
        }
        0.0
    } else {
        t0.abs() / tail_sum
    };
    Ok(PropertyPReport { i0, t0, tail_sum, ratio, zeta_used: None })
}

/// `max(4, 2^((p-3)/2) sqrt(p(p-1)))`, defined for `p > 2`.
pub fn zeta_formula(p: Exponent) -> Result<f64> {
    let p = p.get();
    if p <= 2.0 {
        return Err(Error::InvalidParameter(format!("zeta formula needs p > 2, got {p}")));
    }
    Ok(4f64.max(((p - 3.0) / 2.0).exp2() * (p * (p - 1.0)).sqrt()))
}

/// Random coefficient vector used by the Property P sweeps: standard normal
/// entries, each multiplied by an independent log-uniform scale in
/// `[10^-3, 10^3]` so that heads dominating tails (and vice versa) occur.
pub fn property_p_sample<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * 10f64.powf(rng.gen_range(-3.0..=3.0))
        })
        .collect()
}

/// Largest sampled Property P ratio over the initial segment `h_0..h_m`.
pub fn estimate_zeta(m: usize, p: Exponent, sample_count: usize, seed: u64) -> Result<f64> {
    Ok(property_p_sweep(m, p, sample_count, seed, None)?.max_ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyPSweep {
    pub m: usize,
    pub samples: usize,
    pub positions_checked: usize,
    pub max_ratio: f64,
    pub violations: usize,
}

/// Evaluates every position of `sample_count` random vectors; counts ratios
/// above `zeta + 1e-9` when `zeta` is given.
pub fn property_p_sweep(
    m: usize,
    p: Exponent,
    sample_count: usize,
    seed: u64,
    zeta: Option<f64>,
) -> Result<PropertyPSweep> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let dict = HaarDictionary::initial_segment(m, p);
    let len = dict.len();
    let per_sample = (0..sample_count as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = sample_rng(seed, s);
            let a = property_p_sample(&mut rng, len);
            let mut worst = 0.0f64;
            let mut bad = 0usize;
            for i0 in 0..len - 1 {
                let r = property_p_in(&dict, &a, i0)?;
                worst = worst.max(r.ratio);
                if zeta.is_some_and(|z| r.ratio > z + 1e-9) {
                    bad += 1;
                }
            }
            Ok((worst, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyPSweep {
        m,
        samples: sample_count,
        positions_checked: sample_count * (len - 1),
        max_ratio: per_sample.iter().map(|r| r.0).fold(0.0, f64::max),
        violations: per_sample.iter().map(|r| r.1).sum(),
    })
}

/// Where the `zeta` used for a partition came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "camelCase")]
pub enum ZetaChoice {
    Formula { value: f64 },
    Empirical { value: f64, estimate: f64 },
}

impl ZetaChoice {
    pub fn value(&self) -> f64 {
        match *self {
            ZetaChoice::Formula { value } | ZetaChoice::Empirical { value, .. } => value,
        }
    }
}

/// The closed-form constant for `p > 2`, otherwise the sampled estimate
/// (floored at [`ZETA_FLOOR`]).
pub fn choose_zeta(m: usize, p: Exponent, sample_count: usize, seed: u64) -> Result<ZetaChoice> {
    if p.get() > 2.0 {
        return Ok(ZetaChoice::Formula { value: zeta_formula(p)? });
    }
    let estimate = estimate_zeta(m, p, sample_count, seed)?;
    Ok(ZetaChoice::Empirical { value: estimate.max(ZETA_FLOOR), estimate })
}

/// `(||1 + t ||y|| h_1 + y||_p, ||1 + y||_p)` for `y` in the span of `h_i`, `i >= 2`.
pub fn prop42_sides(y: &HaarCoefficients, t: f64, p: Exponent) -> Result<(f64, f64)> {
    if p.get() <= 2.0 {
        return Err(Error::InvalidParameter("inequality is stated for p > 2".into()));
    }
    if y.index_set().indices()[0] < 2 {
        return Err(Error::InvalidParameter("y must lie in the span of h_i, i >= 2".into()));
    }
    let dict = HaarDictionary::new(y.index_set().clone(), p);
    let level = dict.level().max(1);
    let fy = dict.synthesize(y.coeffs()).refine(level)?;
    let y_norm = fy.lp_norm(p);
    let mut one_plus_y = fy.clone();
    one_plus_y.shift(1.0);
    let rhs = one_plus_y.lp_norm(p);
    let mut lhs_f = one_plus_y;
    lhs_f.axpy(t * y_norm, &haar_as_dyadic(1, level)?);
    Ok((lhs_f.lp_norm(p), rhs))
}

/// Whether `||1 + t ||y|| h_1 + y|| >= ||1 + y||` holds up to [`PROP42_SLACK`].
pub fn prop42_check(y: &HaarCoefficients, t: f64, p: Exponent) -> Result<bool> {
    let (lhs, rhs) = prop42_sides(y, t, p)?;
    Ok(lhs >= rhs - PROP42_SLACK * rhs.max(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LexViolation {
    pub step: usize,
    pub selected: usize,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
    pub expected: LexExpectation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LexExpectation {
    StrictIncrease,
    Unchanged,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LexLemmaReport {
    pub steps: usize,
    pub checked: usize,
    pub exempt_last: usize,
    pub guard_band_skips: usize,
    /// Steps where snapping changed coefficients other than the selected one.
    pub snap_skips: usize,
    pub violations: Vec<LexViolation>,
}

impl LexLemmaReport {
    pub fn merge(&mut self, other: &LexLemmaReport) {
        self.steps += other.steps;
        self.checked += other.checked;
        self.exempt_last += other.exempt_last;
        self.guard_band_skips += other.guard_band_skips;
        self.snap_skips += other.snap_skips;
        self.violations.extend(other.violations.iter().cloned());
    }
}

/// Replays each step of `trace`: selecting `max I_j` for some `j >= 2` must
/// strictly increase the partition, any other non-final position must leave
/// it unchanged.
pub fn verify_lex_lemma(trace: &GreedyTrace, zeta: f64) -> Result<LexLemmaReport> {
    let m = trace.initial.m();
    let mut report = LexLemmaReport { steps: trace.steps.len(), ..Default::default() };
    for (k, step) in trace.steps.iter().enumerate() {
        let selected = partition_position(step.selected_index);
        if selected == m {
            report.exempt_last += 1;
            continue;
        }
        if step.snapped_indices.iter().any(|&i| i != step.selected_index) {
            report.snap_skips += 1;
            continue;
        }
        let before = trace.residual(k).expect("recorded");
        let after = trace.residual(k + 1).expect("recorded");
        let (pb, near_b) = interval_partition_guarded(before, zeta)?;
        let (pa, near_a) = interval_partition_guarded(after, zeta)?;
        if near_b || near_a {
            report.guard_band_skips += 1;
            continue;
        }
        report.checked += 1;
        let expected = if pb.max_endpoints_from(2).contains(&selected) {
            LexExpectation::StrictIncrease
        } else {
            LexExpectation::Unchanged
        };
        let wanted = match expected {
            LexExpectation::StrictIncrease => Ordering::Less,
            LexExpectation::Unchanged => Ordering::Equal,
        };
        if lex_compare(&pb, &pa)? != wanted {
            report.violations.push(LexViolation {
                step: step.step,
                selected,
                before: pb.lengths(),
                after: pa.lengths(),
                expected,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct N0LemmaReport {
    pub n0: u64,
    pub checked: usize,
    /// Windows cut short by a step cap or failure.
    pub inconclusive: usize,
    /// Step numbers whose residual saw no block endpoint selected in time.
    pub violations: Vec<usize>,
}

impl N0LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: &N0LemmaReport) {
        self.n0 = self.n0.max(other.n0);
        self.checked += other.checked;
        self.inconclusive += other.inconclusive;
        self.violations.extend(other.violations.iter().copied());
    }
}

/// From every nonzero recorded residual, some `max I_j` of its partition must
/// be selected within `n0_bound(m, gamma_hat, zeta)` steps.
pub fn verify_n0_lemma(trace: &GreedyTrace, zeta: f64, gamma_hat: f64) -> Result<N0LemmaReport> {
    let m = trace.initial.m();
    let n0 = n0_bound(m, gamma_hat, zeta)?;
    let mut report = N0LemmaReport { n0, ..Default::default() };
    let complete = matches!(trace.status, TraceStatus::Terminated { .. });
    for k in 0..trace.steps.len() {
        let residual = trace.residual(k).expect("recorded");
        if residual.iter().all(|&a| a == 0.0) {
            continue;
        }
        let endpoints = interval_partition(residual, zeta)?.max_endpoints();
        let window_end = (k as u64).saturating_add(n0).min(trace.steps.len() as u64) as usize;
        let hit = trace.steps[k..window_end]
            .iter()
            .any(|s| endpoints.contains(&partition_position(s.selected_index)));
        if hit {
            report.checked += 1;
        } else if window_end - k < n0 as usize && !complete {
            report.inconclusive += 1;
        } else {
            report.checked += 1;
            report.violations.push(trace.steps[k].step);
        }
    }
    Ok(report)
}

/// Index set of `span(h_i)_{lo <= i <= hi}`.
pub fn index_range(lo: usize, hi: usize) -> Result<IndexSet> {
    IndexSet::from_indices((lo..=hi).collect())
}
