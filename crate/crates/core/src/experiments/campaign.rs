//! Seeded experiment campaigns over `(p, m, kind, tau)` cells.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::greedy::{AlgorithmConfig, AlgorithmKind, GreedyEngine, GreedyTrace, TraceStatus};
use crate::haar::{HaarCoefficients, HaarDictionary, IndexSet};
use crate::lp::estimate_gamma;
use crate::numeric::{derive_seed, sample_rng};
use crate::partition::{
    choose_zeta, n0_bound, total_bound, verify_lex_lemma, verify_n0_lemma, LexLemmaReport,
    N0LemmaReport, ZetaChoice,
};

use super::schema::OutputFormat;

/// Default sample count for the sampled constants.
pub const DEFAULT_CONSTANT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignSpec {
    pub p_grid: Vec<f64>,
    pub m_grid: Vec<usize>,
    pub kinds: Vec<AlgorithmKind>,
    pub tau_grid: Vec<f64>,
    pub runs_per_cell: usize,
    pub seed: u64,
    pub output_path: Option<String>,
    pub format: OutputFormat,
    pub gamma_samples: usize,
    pub zeta_samples: usize,
    /// Overrides the default cap of `10 (2^m - 1) n0` steps per run.
    pub max_steps: Option<usize>,
    pub snap_epsilon: f64,
    pub include_presets: bool,
}

impl CampaignSpec {
    pub fn new(p_grid: Vec<f64>, m_grid: Vec<usize>, kinds: Vec<AlgorithmKind>) -> Self {
        CampaignSpec {
            p_grid,
            m_grid,
            kinds,
            tau_grid: vec![1.0],
            runs_per_cell: 200,
            seed: 0,
            output_path: None,
            format: OutputFormat::Json,
            gamma_samples: DEFAULT_CONSTANT_SAMPLES,
            zeta_samples: DEFAULT_CONSTANT_SAMPLES,
            max_steps: None,
            snap_epsilon: crate::greedy::DEFAULT_SNAP_EPSILON,
            include_presets: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() || self.m_grid.is_empty() || self.kinds.is_empty() || self.tau_grid.is_empty() {
            return Err(Error::InvalidParameter("campaign grids must be nonempty".into()));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::InvalidParameter("runs per cell must be positive".into()));
        }
        for &p in &self.p_grid {
            Exponent::new(p)?;
        }
        if self.m_grid.contains(&0) {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        Ok(())
    }

    /// Cells in canonical order: p, then m, then kind, then tau. Strong
    /// kinds only pair with `tau = 1`.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        let mut cells = Vec::new();
        for &p in &self.p_grid {
            for &m in &self.m_grid {
                for &kind in &self.kinds {
                    let taus: Vec<f64> = if kind.is_weak() { self.tau_grid.clone() } else { vec![1.0] };
                    for tau in taus {
                        if !cells.iter().any(|c: &Cell| c.p.get() == p && c.m == m && c.kind == kind && c.tau == tau) {
                            cells.push(Cell { p: Exponent::new(p)?, m, kind, tau });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One `(p, m, kind, tau)` combination; the dictionary is `h_0, ..., h_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub p: Exponent,
    pub m: usize,
    pub kind: AlgorithmKind,
    pub tau: f64,
}

impl Cell {
    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[self.p.get().to_bits(), self.m as u64, self.kind as u64, self.tau.to_bits()],
        )
    }

    /// Seed shared by every kind of a `(p, m)` pair, so all kinds use the
    /// same `zeta` and the same initial vectors.
    pub fn shared_seed(&self, master: u64) -> u64 {
        derive_seed(master, &[self.p.get().to_bits(), self.m as u64])
    }

    pub fn config(&self) -> AlgorithmConfig {
        AlgorithmConfig::new(self.kind, self.p).with_tau(self.tau)
    }
}

/// Sampled and derived constants of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellConstants {
    pub gamma_hat: f64,
    pub zeta: ZetaChoice,
    /// `n0_bound(m + 1, gamma_hat, zeta)` over all `m + 1` basis positions.
    pub n0: u64,
    /// `(2^m - 1) n0`.
    pub bound: u64,
}

pub fn cell_constants(cell: &Cell, master_seed: u64, gamma_samples: usize, zeta_samples: usize) -> Result<CellConstants> {
    let dict = HaarDictionary::initial_segment(cell.m, cell.p);
    let gamma_hat = estimate_gamma(&dict, cell.kind, cell.tau, gamma_samples, cell.seed(master_seed))?;
    let zeta = choose_zeta(cell.m, cell.p, zeta_samples, cell.shared_seed(master_seed))?;
    let n0 = n0_bound(cell.m + 1, gamma_hat, zeta.value())?;
    let bound = total_bound(cell.m, n0)?;
    Ok(CellConstants { gamma_hat, zeta, n0, bound })
}

/// Standard normal coefficients rescaled to unit `L_p` norm.
pub fn random_unit_vector<R: Rng>(rng: &mut R, dict: &HaarDictionary) -> Vec<f64> {
    loop {
        let a: Vec<f64> = (0..dict.len()).map(|_| rng.sample(StandardNormal)).collect();
        let n = dict.norm_of(&a);
        if n > 0.0 {
            return a.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Deterministic initial vectors that produce many partition blocks:
/// geometric ramps in both directions, single spikes and alternating signs.
pub fn adversarial_presets(dict: &HaarDictionary) -> Vec<(String, Vec<f64>)> {
    let len = dict.len();
    let mut out = Vec::new();
    for r in [3.0f64, 10.0] {
        out.push((format!("ramp-up-{r}"), (0..len).map(|i| r.powi(i as i32)).collect()));
        out.push((format!("ramp-down-{r}"), (0..len).map(|i| r.powi(-(i as i32))).collect()));
        out.push((
            format!("alternating-ramp-down-{r}"),
            (0..len).map(|i| (-r).powi(-(i as i32))).collect(),
        ));
    }
    let mut spikes = vec![0, len / 2, len - 1];
    spikes.dedup();
    for s in spikes {
        let mut a = vec![0.0; len];
        a[s] = 1.0;
        out.push((format!("spike-{s}"), a));
    }
    out.push(("alternating".into(), (0..len).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()));
    out.into_iter()
        .map(|(label, a)| {
            let n = dict.norm_of(&a);
            (label, a.into_iter().map(|x| x / n).collect())
        })
        .collect()
}

/// Labelled initial vectors of a cell: `runs` seeded random vectors followed
/// by the presets when requested.
pub fn initial_vectors(cell: &Cell, spec: &CampaignSpec) -> Vec<(String, Vec<f64>)> {
    let dict = HaarDictionary::initial_segment(cell.m, cell.p);
    let seed = cell.shared_seed(spec.seed);
    let mut out: Vec<(String, Vec<f64>)> = (0..spec.runs_per_cell as u64)
        .map(|r| {
            let mut rng = sample_rng(seed ^ 0x005E_ED0F_1217, r);
            (format!("random-{r}"), random_unit_vector(&mut rng, &dict))
        })
        .collect();
    if spec.include_presets {
        out.extend(adversarial_presets(&dict));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabelledTrace {
    pub label: String,
    pub trace: GreedyTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellOutcome {
    pub cell: Cell,
    pub constants: CellConstants,
    pub traces: Vec<LabelledTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSummary {
    pub p: f64,
    pub m: usize,
    pub kind: AlgorithmKind,
    pub tau: f64,
    pub runs: usize,
    pub terminated: usize,
    pub step_cap_reached: usize,
    pub numerical_failures: usize,
    pub max_steps_observed: usize,
    pub gamma_hat: f64,
    pub max_step_ratio: f64,
    pub zeta: f64,
    pub zeta_source: String,
    pub n0: u64,
    pub bound: u64,
    pub bound_violations: usize,
}

impl CellSummary {
    pub fn passed(&self) -> bool {
        self.terminated == self.runs && self.bound_violations == 0
    }
}

impl CellOutcome {
    pub fn summary(&self) -> CellSummary {
        let mut s = CellSummary {
            p: self.cell.p.get(),
            m: self.cell.m,
            kind: self.cell.kind,
            tau: self.cell.tau,
            runs: self.traces.len(),
            terminated: 0,
            step_cap_reached: 0,
            numerical_failures: 0,
            max_steps_observed: 0,
            gamma_hat: self.constants.gamma_hat,
            max_step_ratio: 0.0,
            zeta: self.constants.zeta.value(),
            zeta_source: match self.constants.zeta {
                ZetaChoice::Formula { .. } => "formula".into(),
                ZetaChoice::Empirical { .. } => "empirical".into(),
            },
            n0: self.constants.n0,
            bound: self.constants.bound,
            bound_violations: 0,
        };
        for t in &self.traces {
            let t = &t.trace;
            match t.status {
                TraceStatus::Terminated { steps } => {
                    s.terminated += 1;
                    s.max_steps_observed = s.max_steps_observed.max(steps);
                    if steps as u64 > self.constants.bound {
                        s.bound_violations += 1;
                    }
                }
                TraceStatus::StepCapReached => {
                    s.step_cap_reached += 1;
                    s.bound_violations += 1;
                }
                TraceStatus::NumericalFailure { .. } => s.numerical_failures += 1,
            }
            for st in &t.steps {
                if st.norm_before > 0.0 {
                    s.max_step_ratio = s.max_step_ratio.max(st.norm_after / st.norm_before);
                }
            }
        }
        s
    }

    pub fn lex_report(&self) -> Result<LexLemmaReport> {
        let mut total = LexLemmaReport::default();
        for t in &self.traces {
            total.merge(&verify_lex_lemma(&t.trace, self.constants.zeta.value())?);
        }
        Ok(total)
    }

    pub fn n0_report(&self) -> Result<N0LemmaReport> {
        let mut total = N0LemmaReport::default();
        for t in &self.traces {
            total.merge(&verify_n0_lemma(&t.trace, self.constants.zeta.value(), self.constants.gamma_hat)?);
        }
        Ok(total)
    }
}

pub fn run_cell(cell: &Cell, spec: &CampaignSpec) -> Result<CellOutcome> {
    let constants = cell_constants(cell, spec.seed, spec.gamma_samples, spec.zeta_samples)?;
    let default_cap = constants.bound.saturating_mul(10).min(usize::MAX as u64) as usize;
    let config = cell
        .config()
        .with_max_steps(spec.max_steps.unwrap_or(default_cap))
        .with_snap_epsilon(spec.snap_epsilon)
        .with_seed(cell.seed(spec.seed));
    let engine = GreedyEngine::new(IndexSet::initial_segment(cell.m), config)?;
    let traces = initial_vectors(cell, spec)
        .into_par_iter()
        .map(|(label, a)| {
            let x0 = HaarCoefficients::new(IndexSet::initial_segment(cell.m), a)?;
            Ok(LabelledTrace { label, trace: engine.run(&x0)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellOutcome { cell: *cell, constants, traces })
}

/// Runs every cell; outcomes come back in canonical cell order.
pub fn run_campaign(spec: &CampaignSpec) -> Result<Vec<CellOutcome>> {
    spec.cells()?.par_iter().map(|c| run_cell(c, spec)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaSummary {
    pub p: f64,
    pub m: usize,
    pub kind: AlgorithmKind,
    pub tau: f64,
    pub zeta: f64,
    pub gamma_hat: f64,
    pub steps: usize,
    pub lex_checked: usize,
    pub lex_exempt_last: usize,
    pub lex_guard_band_skips: usize,
    pub lex_snap_skips: usize,
    pub lex_violations: usize,
    pub n0: u64,
    pub n0_checked: usize,
    pub n0_inconclusive: usize,
    pub n0_violations: usize,
}

impl LemmaSummary {
    pub fn from_outcome(o: &CellOutcome) -> Result<Self> {
        let lex = o.lex_report()?;
        let n0 = o.n0_report()?;
        Ok(LemmaSummary {
            p: o.cell.p.get(),
            m: o.cell.m,
            kind: o.cell.kind,
            tau: o.cell.tau,
            zeta: o.constants.zeta.value(),
            gamma_hat: o.constants.gamma_hat,
            steps: lex.steps,
            lex_checked: lex.checked,
            lex_exempt_last: lex.exempt_last,
            lex_guard_band_skips: lex.guard_band_skips,
            lex_snap_skips: lex.snap_skips,
            lex_violations: lex.violations.len(),
            n0: n0.n0,
            n0_checked: n0.checked,
            n0_inconclusive: n0.inconclusive,
            n0_violations: n0.violations.len(),
        })
    }

    pub fn passed(&self) -> bool {
        self.lex_violations == 0 && self.n0_violations == 0
    }
}
