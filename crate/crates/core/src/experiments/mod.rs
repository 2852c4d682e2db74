//! Seeded experiment drivers and their output formats.

pub mod campaign;
pub mod counterexample;
pub mod schema;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exponent::Exponent;
use crate::numeric::derive_seed;
use crate::partition::{property_p_sweep, zeta_formula};

pub use campaign::{run_campaign, run_cell, CampaignSpec, Cell, CellConstants, CellOutcome, CellSummary, LemmaSummary};
pub use counterexample::{run_counterexample, CounterexampleReport, EuclideanPairState};
pub use schema::{OutputFormat, TraceDocument};

/// One row of the Property P report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyPRow {
    pub p: f64,
    pub m: usize,
    pub samples: usize,
    pub positions_checked: usize,
    pub max_ratio: f64,
    /// Closed-form constant for `p > 2`; violations are counted against it.
    pub zeta: Option<f64>,
    pub violations: usize,
}

impl PropertyPRow {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Property P sweep for each `m`, seeded per `(p, m)`.
pub fn property_p_report(p: Exponent, m_grid: &[usize], samples: usize, seed: u64) -> Result<Vec<PropertyPRow>> {
    let zeta = if p.get() > 2.0 { Some(zeta_formula(p)?) } else { None };
    m_grid
        .iter()
        .map(|&m| {
            let s = property_p_sweep(m, p, samples, derive_seed(seed, &[p.get().to_bits(), m as u64]), zeta)?;
            Ok(PropertyPRow {
                p: p.get(),
                m,
                samples: s.samples,
                positions_checked: s.positions_checked,
                max_ratio: s.max_ratio,
                zeta,
                violations: s.violations,
            })
        })
        .collect()
}
