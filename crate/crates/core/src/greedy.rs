//! The greedy state machine: XGA / DGA selection (and their weak variants),
//! the residual update with snapping, termination detection, and traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::haar::{HaarCoefficients, HaarDictionary, IndexSet};
use crate::lp::{self, LineSearchResult};

/// Slack used when comparing a candidate against `tau` times the best score.
pub const SELECTION_SLACK: f64 = 1e-14;

/// Default relative snapping threshold.
pub const DEFAULT_SNAP_EPSILON: f64 = 1e-10;

/// Tolerance on the coefficient left behind when the last nonzero position is
/// selected, relative to the residual norm before the step.
pub const LAST_ZEROING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Xga,
    Dga,
    Wxga,
    Wdga,
}

impl AlgorithmKind {
    pub fn is_dual(self) -> bool {
        matches!(self, AlgorithmKind::Dga | AlgorithmKind::Wdga)
    }

    pub fn is_weak(self) -> bool {
        matches!(self, AlgorithmKind::Wxga | AlgorithmKind::Wdga)
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Xga => "xga",
            AlgorithmKind::Dga => "dga",
            AlgorithmKind::Wxga => "wxga",
            AlgorithmKind::Wdga => "wdga",
        }
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xga" => Ok(AlgorithmKind::Xga),
            "dga" => Ok(AlgorithmKind::Dga),
            "wxga" => Ok(AlgorithmKind::Wxga),
            "wdga" => Ok(AlgorithmKind::Wdga),
            other => Err(Error::InvalidParameter(format!("unknown algorithm kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    pub p: Exponent,
    pub tau: f64,
    pub snap_epsilon: f64,
    pub max_steps: usize,
    pub tie_rule: TieRule,
    pub seed: u64,
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind, p: Exponent) -> Self {
        AlgorithmConfig {
            kind,
            p,
            tau: 1.0,
            snap_epsilon: DEFAULT_SNAP_EPSILON,
            max_steps: 100_000,
            tie_rule: TieRule::LowestIndex,
            seed: 0,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_snap_epsilon(mut self, eps: f64) -> Self {
        self.snap_epsilon = eps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidParameter(format!("tau = {} outside (0, 1]", self.tau)));
        }
        if !self.kind.is_weak() && self.tau != 1.0 {
            return Err(Error::InvalidParameter(format!("{} requires tau = 1", self.kind)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
        }
        if !(self.snap_epsilon > 0.0 && self.snap_epsilon <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "snap epsilon {} outside (0, 1e-6]",
                self.snap_epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GreedyStepRecord {
    /// 1-based step number `n`.
    pub step: usize,
    /// Dictionary position of `phi_n`.
    pub selected_index: usize,
    pub lambda: f64,
    pub norm_before: f64,
    pub norm_after: f64,
    /// Positions set to exact zero by snapping during this step.
    pub snapped_indices: Vec<usize>,
    /// Residual coefficients `x_{n-1}`.
    pub residual_before: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TraceStatus {
    Terminated { steps: usize },
    StepCapReached,
    NumericalFailure { step: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GreedyTrace {
    pub initial: HaarCoefficients,
    pub config: AlgorithmConfig,
    pub steps: Vec<GreedyStepRecord>,
    pub status: TraceStatus,
    pub final_residual: HaarCoefficients,
}

impl GreedyTrace {
    pub fn terminated_steps(&self) -> Option<usize> {
        match self.status {
            TraceStatus::Terminated { steps } => Some(steps),
            _ => None,
        }
    }

    /// Residual `x_n`, `0 <= n <= steps.len()`.
    pub fn residual(&self, n: usize) -> Option<&[f64]> {
        match n.cmp(&self.steps.len()) {
            std::cmp::Ordering::Less => Some(&self.steps[n].residual_before),
            std::cmp::Ordering::Equal => Some(self.final_residual.coeffs()),
            std::cmp::Ordering::Greater => None,
        }
    }
}

/// Selects a dictionary position for the residual `y` (grid values) and
/// returns it with the line search along that element.
pub(crate) fn select_in(
    dictionary: &HaarDictionary,
    y: &[f64],
    kind: AlgorithmKind,
    tau: f64,
) -> Result<(usize, LineSearchResult)> {
    if kind.is_dual() {
        let pos = select_dual_in(dictionary, y, tau)?;
        let ls = lp::line_minimize_values(y, dictionary.element(pos).values(), dictionary.p())?;
        Ok((pos, ls))
    } else {
        select_x_in(dictionary, y, tau)
    }
}

/// `|F_y(e_i)|` for every dictionary position.
pub(crate) fn dual_scores(dictionary: &HaarDictionary, y: &[f64]) -> Result<Vec<f64>> {
    let p = dictionary.p();
    let norm = crate::haar::lp_norm_values(y, p);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let g = lp::norming_density(y, norm, p);
    Ok(dictionary
        .elements()
        .iter()
        .map(|e| lp::pairing_values(&g, e.values()).abs())
        .collect())
}

pub(crate) fn select_dual_in(dictionary: &HaarDictionary, y: &[f64], tau: f64) -> Result<usize> {
    let scores = dual_scores(dictionary, y)?;
    let best = scores.iter().cloned().fold(0.0, f64::max);
    let threshold = tau * best - SELECTION_SLACK;
    Ok(scores.iter().position(|&s| s >= threshold).expect("the maximum qualifies"))
}

pub(crate) fn select_x_in(
    dictionary: &HaarDictionary,
    y: &[f64],
    tau: f64,
) -> Result<(usize, LineSearchResult)> {
    let p = dictionary.p();
    let norm = crate::haar::lp_norm_values(y, p);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let searches = dictionary
        .elements()
        .iter()
        .map(|e| lp::line_minimize_values(y, e.values(), p))
        .collect::<Result<Vec<_>>>()?;
    let best = searches
        .iter()
        .map(|s| norm - s.residual_norm)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = tau * best - SELECTION_SLACK * norm;
    let pos = searches
        .iter()
        .position(|s| norm - s.residual_norm >= threshold)
        .expect("the best reduction qualifies");
    Ok((pos, searches[pos]))
}

fn check_nonzero(y: &HaarCoefficients) -> Result<()> {
    if y.is_zero() {
        Err(Error::ZeroVector)
    } else {
        Ok(())
    }
}

/// Dual-greedy selection: lowest position with `|F_y(e_i)| >= tau * max`.
pub fn select_dual(y: &HaarCoefficients, p: Exponent, tau: f64) -> Result<usize> {
    check_nonzero(y)?;
    let dict = HaarDictionary::new(y.index_set().clone(), p);
    select_dual_in(&dict, dict.synthesize(y.coeffs()).values(), tau)
}

/// X-greedy selection: lowest position whose best one-term reduction is at
/// least `tau` times the best over the dictionary.
pub fn select_x(y: &HaarCoefficients, p: Exponent, tau: f64) -> Result<(usize, LineSearchResult)> {
    check_nonzero(y)?;
    let dict = HaarDictionary::new(y.index_set().clone(), p);
    select_x_in(&dict, dict.synthesize(y.coeffs()).values(), tau)
}

/// A configured algorithm bound to one dictionary.
#[derive(Debug, Clone)]
pub struct GreedyEngine {
    dictionary: HaarDictionary,
    config: AlgorithmConfig,
}

impl GreedyEngine {
    pub fn new(index_set: IndexSet, config: AlgorithmConfig) -> Result<Self> {
        config.validate()?;
        Ok(GreedyEngine { dictionary: HaarDictionary::new(index_set, config.p), config })
    }

    pub fn dictionary(&self) -> &HaarDictionary {
        &self.dictionary
    }

    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    /// One greedy step from `y`. `snap_scale` is the magnitude against which
    /// `snap_epsilon` is measured (the initial max coefficient in a run).
    pub fn step(
        &self,
        y: &HaarCoefficients,
        snap_scale: f64,
        step_number: usize,
    ) -> Result<(GreedyStepRecord, HaarCoefficients)> {
        if y.index_set() != self.dictionary.index_set() {
            return Err(Error::InvalidParameter("coefficients belong to another dictionary".into()));
        }
        check_nonzero(y)?;
        let f = self.dictionary.synthesize(y.coeffs());
        let norm_before = f.lp_norm(self.config.p);
        let (pos, ls) = select_in(&self.dictionary, f.values(), self.config.kind, self.config.tau)?;

        let mut next = y.clone();
        let coeffs = next.coeffs_mut();
        coeffs[pos] -= ls.lambda;
        if y.last_nonzero() == Some(pos) {
            // Strict monotonicity forces lambda = a_pos here.
            if coeffs[pos].abs() > LAST_ZEROING_TOL * norm_before {
                return Err(Error::ZeroingMissed { position: pos, value: coeffs[pos] });
            }
            coeffs[pos] = 0.0;
        }
        let threshold = self.config.snap_epsilon * snap_scale;
        let mut snapped = Vec::new();
        for (i, a) in coeffs.iter_mut().enumerate() {
            if *a != 0.0 && a.abs() < threshold {
                *a = 0.0;
                snapped.push(i);
            }
        }
        let norm_after = self.dictionary.norm_of(next.coeffs());
        let record = GreedyStepRecord {
            step: step_number,
            selected_index: pos,
            lambda: ls.lambda,
            norm_before,
            norm_after,
            snapped_indices: snapped,
            residual_before: y.coeffs().to_vec(),
        };
        Ok((record, next))
    }

    pub fn run(&self, x0: &HaarCoefficients) -> Result<GreedyTrace> {
        if x0.index_set() != self.dictionary.index_set() {
            return Err(Error::InvalidParameter("initial vector belongs to another dictionary".into()));
        }
        let snap_scale = x0.max_abs();
        let mut y = x0.clone();
        let mut steps = Vec::new();
        let status = loop {
            if y.is_zero() {
                break TraceStatus::Terminated { steps: steps.len() };
            }
            if steps.len() >= self.config.max_steps {
                break TraceStatus::StepCapReached;
            }
            let n = steps.len() + 1;
            match self.step(&y, snap_scale, n) {
                Ok((record, next)) => {
                    steps.push(record);
                    y = next;
                }
                Err(e) => break TraceStatus::NumericalFailure { step: n, message: e.to_string() },
            }
        };
        Ok(GreedyTrace {
            initial: x0.clone(),
            config: self.config.clone(),
            steps,
            status,
            final_residual: y,
        })
    }
}

/// One step with snapping measured against `y` itself.
pub fn greedy_step(y: &HaarCoefficients, config: &AlgorithmConfig) -> Result<(GreedyStepRecord, HaarCoefficients)> {
    let engine = GreedyEngine::new(y.index_set().clone(), config.clone())?;
    engine.step(y, y.max_abs(), 1)
}

pub fn run(x0: &HaarCoefficients, config: &AlgorithmConfig) -> Result<GreedyTrace> {
    GreedyEngine::new(x0.index_set().clone(), config.clone())?.run(x0)
}

/// `G_n = sum_{k <= n} lambda_k phi_k` in coefficient space.
pub fn greedy_approximant(trace: &GreedyTrace, n: usize) -> Result<HaarCoefficients> {
    if n > trace.steps.len() {
        return Err(Error::OutOfRange { index: n, len: trace.steps.len() });
    }
    let mut g = HaarCoefficients::zeros(trace.initial.index_set().clone());
    for s in &trace.steps[..n] {
        g.coeffs_mut()[s.selected_index] += s.lambda;
    }
    Ok(g)
}
