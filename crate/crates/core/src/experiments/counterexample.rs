//! A two-element dictionary of the Euclidean plane on which the X-greedy
//! algorithm never terminates.
//!
//! The dictionary is `e_1 = (1, 0)` and `d = (1/sqrt 2, 1/sqrt 2)`. Starting
//! from `(0, 1)` the residual is projected alternately onto the orthogonal
//! complement of each element, shrinking by `2^{-1/2}` per step without ever
//! vanishing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAIR_DICTIONARY: [[f64; 2]; 2] = [[1.0, 0.0], [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2]];

/// Tolerance on the per-step ratio against `2^{-1/2}`.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanPairState {
    pub x: [f64; 2],
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

impl EuclideanPairState {
    pub fn new(x: [f64; 2]) -> Result<Self> {
        if !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(EuclideanPairState { x })
    }

    pub fn norm(&self) -> f64 {
        norm(self.x)
    }

    /// Index of the element with the larger `|<x, d>|`; ties go to the
    /// lower index.
    pub fn select(&self) -> usize {
        let s0 = dot(self.x, PAIR_DICTIONARY[0]).abs();
        let s1 = dot(self.x, PAIR_DICTIONARY[1]).abs();
        if s1 > s0 {
            1
        } else {
            0
        }
    }

    /// One X-greedy step: the optimal line search is the orthogonal
    /// projection. Components below `snap_eps` times the pre-step norm are
    /// set to zero.
    pub fn step(&self, snap_eps: f64) -> (usize, EuclideanPairState) {
        let i = self.select();
        let d = PAIR_DICTIONARY[i];
        let c = dot(self.x, d);
        let scale = self.norm();
        let mut next = [self.x[0] - c * d[0], self.x[1] - c * d[1]];
        for v in &mut next {
            if v.abs() < snap_eps * scale {
                *v = 0.0;
            }
        }
        (i, EuclideanPairState { x: next })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CounterexampleStep {
    pub step: usize,
    pub selected: usize,
    pub residual: [f64; 2],
    pub norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CounterexampleReport {
    pub initial: [f64; 2],
    pub requested_steps: usize,
    pub steps: Vec<CounterexampleStep>,
    /// Step at which the residual became zero, if it did.
    pub terminated_at: Option<usize>,
    pub max_ratio_error: f64,
}

impl CounterexampleReport {
    /// `true` when the residual stayed nonzero for every requested step and
    /// every ratio matched `2^{-1/2}`.
    pub fn non_terminating(&self) -> bool {
        self.terminated_at.is_none() && self.steps.len() == self.requested_steps && self.max_ratio_error <= RATIO_TOL
    }
}

pub fn run_counterexample(x0: [f64; 2], steps: usize, snap_eps: f64) -> Result<CounterexampleReport> {
    let mut state = EuclideanPairState::new(x0)?;
    if state.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut out = Vec::with_capacity(steps);
    let mut terminated_at = None;
    let mut max_err: f64 = 0.0;
    for n in 1..=steps {
        let before = state.norm();
        let (selected, next) = state.step(snap_eps);
        let after = next.norm();
        let ratio = after / before;
        if after > 0.0 {
            max_err = max_err.max((ratio - std::f64::consts::FRAC_1_SQRT_2).abs());
        }
        out.push(CounterexampleStep { step: n, selected, residual: next.x, norm: after, ratio });
        state = next;
        if after == 0.0 {
            terminated_at = Some(n);
            break;
        }
    }
    Ok(CounterexampleReport { initial: x0, requested_steps: steps, steps: out, terminated_at, max_ratio_error: max_err })
}
