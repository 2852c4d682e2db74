//! Haar functions and their finite spans, represented exactly as
//! piecewise-constant functions on a dyadic grid of `[0, 1)`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::numeric::compensated_sum;

/// Linear Haar index. `0` is the constant function; `i = 2^n + k` with
/// `0 <= k < 2^n` is the function supported on `[k 2^-n, (k+1) 2^-n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HaarIndex(pub usize);

impl HaarIndex {
    /// Level `n` and offset `k` with `i = 2^n + k`.
    pub fn level_offset(self) -> Result<(u32, usize)> {
        haar_index_decompose(self.0)
    }

    /// Coarsest grid level on which the function is exactly representable.
    pub fn required_level(self) -> u32 {
        match self.0 {
            0 => 0,
            i => i.ilog2() + 1,
        }
    }

    /// Support as a half-open interval `[a, b)`.
    pub fn support(self) -> (f64, f64) {
        match self.level_offset() {
            Err(_) => (0.0, 1.0),
            Ok((n, k)) => {
                let w = (-(n as f64)).exp2();
                (k as f64 * w, (k + 1) as f64 * w)
            }
        }
    }
}

pub fn haar_index_decompose(i: usize) -> Result<(u32, usize)> {
    if i == 0 {
        return Err(Error::ConstantHasNoLevel);
    }
    let n = i.ilog2();
    Ok((n, i - (1usize << n)))
}

/// `||h_i||_p`, which is `2^(-n/p)` for `i >= 1` and `1` for the constant.
pub fn haar_norm(i: usize, p: Exponent) -> f64 {
    match haar_index_decompose(i) {
        Err(_) => 1.0,
        Ok((n, _)) => (-(n as f64) / p.get()).exp2(),
    }
}

/// The unnormalized `h_i` sampled on `2^level` cells.
pub fn haar_as_dyadic(i: usize, level: u32) -> Result<DyadicFunction> {
    let required = HaarIndex(i).required_level();
    if level < required {
        return Err(Error::InsufficientLevel { given: level, required });
    }
    let cells = 1usize << level;
    if i == 0 {
        return Ok(DyadicFunction::constant(level, 1.0));
    }
    let (n, k) = haar_index_decompose(i)?;
    let span = cells >> n;
    let half = span / 2;
    let start = k * span;
    let mut values = vec![0.0; cells];
    values[start..start + half].fill(1.0);
    values[start + half..start + span].fill(-1.0);
    Ok(DyadicFunction { level, values })
}

/// Piecewise-constant function on `2^level` equal cells of `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicFunction {
    level: u32,
    values: Vec<f64>,
}

impl DyadicFunction {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        let expected = 1usize << level;
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, got: values.len() });
        }
        Ok(DyadicFunction { level, values })
    }

    pub fn zeros(level: u32) -> Self {
        DyadicFunction { level, values: vec![0.0; 1usize << level] }
    }

    pub fn constant(level: u32, c: f64) -> Self {
        DyadicFunction { level, values: vec![c; 1usize << level] }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn cell_width(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn integral(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.cell_width()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Repeats each value `2^(level - self.level)` times.
    pub fn refine(&self, level: u32) -> Result<DyadicFunction> {
        if level < self.level {
            return Err(Error::InsufficientLevel { given: level, required: self.level });
        }
        let rep = 1usize << (level - self.level);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, rep))
            .collect();
        Ok(DyadicFunction { level, values })
    }

    /// View of `self` at `level`, borrowing when no refinement is needed.
    pub fn at_level(&self, level: u32) -> Result<Cow<'_, DyadicFunction>> {
        if level == self.level {
            Ok(Cow::Borrowed(self))
        } else {
            self.refine(level).map(Cow::Owned)
        }
    }

    pub fn lp_norm(&self, p: Exponent) -> f64 {
        lp_norm_values(&self.values, p)
    }

    pub fn scaled(&self, a: f64) -> DyadicFunction {
        DyadicFunction {
            level: self.level,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Adds a constant to every cell.
    pub fn shift(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v += c);
    }

    /// `self += a * other`, refining `self` if `other` is finer.
    pub fn axpy(&mut self, a: f64, other: &DyadicFunction) {
        if other.level > self.level {
            *self = self.refine(other.level).expect("finer level");
        }
        let other = other.at_level(self.level).expect("coarser level");
        for (s, o) in self.values.iter_mut().zip(other.values.iter()) {
            *s += a * o;
        }
    }
}

/// `(mean |v|^p)^(1/p)` over equally weighted cells.
pub(crate) fn lp_norm_values(values: &[f64], p: Exponent) -> f64 {
    let p = p.get();
    let mean = compensated_sum(values.iter().map(|v| v.abs().powf(p))) / values.len() as f64;
    mean.powf(1.0 / p)
}

pub fn lp_norm(f: &DyadicFunction, p: Exponent) -> f64 {
    f.lp_norm(p)
}

/// Strictly increasing list of Haar linear indices; its order is the basis order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// `{0, 1, ..., m}`, the initial segment `h_0, ..., h_m`.
    pub fn initial_segment(m: usize) -> Self {
        IndexSet((0..=m).collect())
    }

    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet);
        }
        Ok(IndexSet(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, position: usize) -> Option<usize> {
        self.0.get(position).copied()
    }

    pub fn position_of(&self, index: usize) -> Option<usize> {
        self.0.binary_search(&index).ok()
    }

    /// Common grid level: one past the finest Haar level present.
    pub fn grid_level(&self) -> u32 {
        self.0
            .iter()
            .map(|&i| HaarIndex(i).required_level())
            .max()
            .unwrap_or(0)
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        IndexSet::from_indices(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Vec<usize> {
        s.0
    }
}

/// Coefficients in the normalized basis `h_i / ||h_i||_p`, one per entry of
/// the index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarCoefficients {
    index_set: IndexSet,
    coeffs: Vec<f64>,
}

impl HaarCoefficients {
    pub fn new(index_set: IndexSet, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != index_set.len() {
            return Err(Error::LengthMismatch { expected: index_set.len(), got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(HaarCoefficients { index_set, coeffs })
    }

    pub fn zeros(index_set: IndexSet) -> Self {
        let coeffs = vec![0.0; index_set.len()];
        HaarCoefficients { index_set, coeffs }
    }

    /// Unit coefficient at basis position `position`.
    pub fn unit(index_set: IndexSet, position: usize) -> Result<Self> {
        let len = index_set.len();
        if position >= len {
            return Err(Error::OutOfRange { index: position, len });
        }
        let mut c = HaarCoefficients::zeros(index_set);
        c.coeffs[position] = 1.0;
        Ok(c)
    }

    /// Dictionary length.
    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Position of the last nonzero coefficient in basis order.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&a| a != 0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.coeffs.iter().filter(|&&a| a != 0.0).count()
    }
}

/// `sum a_i h_i^(p)` on a grid of level `level`.
pub fn synthesize(c: &HaarCoefficients, p: Exponent, level: u32) -> Result<DyadicFunction> {
    let required = c.index_set.grid_level();
    if level < required {
        return Err(Error::InsufficientLevel { given: level, required });
    }
    let mut f = DyadicFunction::zeros(level);
    for (&i, &a) in c.index_set.indices().iter().zip(&c.coeffs) {
        if a != 0.0 {
            f.axpy(a / haar_norm(i, p), &haar_as_dyadic(i, level)?);
        }
    }
    Ok(f)
}

/// Biorthogonal coefficients `a_i = 2^(n/q) * integral(f * h_i)`.
pub fn analyze(f: &DyadicFunction, index_set: &IndexSet, p: Exponent) -> Result<HaarCoefficients> {
    let level = f.level().max(index_set.grid_level());
    let f = f.at_level(level)?;
    let q = p.conjugate();
    let coeffs = index_set
        .indices()
        .iter()
        .map(|&i| {
            let h = haar_as_dyadic(i, level)?;
            let dot = compensated_sum(f.values().iter().zip(h.values()).map(|(a, b)| a * b))
                * f.cell_width();
            let n = haar_index_decompose(i).map(|(n, _)| n).unwrap_or(0);
            Ok((n as f64 / q).exp2() * dot)
        })
        .collect::<Result<Vec<f64>>>()?;
    HaarCoefficients::new(index_set.clone(), coeffs)
}

/// Norms of the first `keep` positions and of the full expansion.
pub fn truncation_norm_check(c: &HaarCoefficients, keep: usize, p: Exponent) -> Result<(f64, f64)> {
    if keep == 0 || keep >= c.m() {
        return Err(Error::InvalidParameter(format!(
            "truncation point {keep} must lie in [1, {})",
            c.m()
        )));
    }
    let level = c.index_set.grid_level();
    let mut truncated = c.clone();
    truncated.coeffs[keep..].fill(0.0);
    let t = synthesize(&truncated, p, level)?.lp_norm(p);
    let f = synthesize(c, p, level)?.lp_norm(p);
    Ok((t, f))
}

/// Normalized Haar elements of an index set, precomputed on the common grid.
#[derive(Debug, Clone)]
pub struct HaarDictionary {
    index_set: IndexSet,
    p: Exponent,
    level: u32,
    elements: Vec<DyadicFunction>,
}

impl HaarDictionary {
    pub fn new(index_set: IndexSet, p: Exponent) -> Self {
        let level = index_set.grid_level();
        let elements = index_set
            .indices()
            .iter()
            .map(|&i| {
                haar_as_dyadic(i, level)
                    .expect("grid level covers every index")
                    .scaled(1.0 / haar_norm(i, p))
            })
            .collect();
        HaarDictionary { index_set, p, level, elements }
    }

    pub fn initial_segment(m: usize, p: Exponent) -> Self {
        HaarDictionary::new(IndexSet::initial_segment(m), p)
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, position: usize) -> &DyadicFunction {
        &self.elements[position]
    }

    pub fn elements(&self) -> &[DyadicFunction] {
        &self.elements
    }

    /// Synthesizes raw coefficients (basis order) on the dictionary grid.
    pub fn synthesize(&self, coeffs: &[f64]) -> DyadicFunction {
        let mut f = DyadicFunction::zeros(self.level);
        for (e, &a) in self.elements.iter().zip(coeffs) {
            if a != 0.0 {
                f.axpy(a, e);
            }
        }
        f
    }

    pub fn norm_of(&self, coeffs: &[f64]) -> f64 {
        self.synthesize(coeffs).lp_norm(self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Exponent {
        Exponent::new(x).unwrap()
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(haar_index_decompose(1).unwrap(), (0, 0));
        assert_eq!(haar_index_decompose(5).unwrap(), (2, 1));
        assert_eq!(haar_index_decompose(12).unwrap(), (3, 4));
        assert_eq!(haar_index_decompose(0), Err(Error::ConstantHasNoLevel));
    }

    #[test]
    fn supports_are_dyadic() {
        assert_eq!(HaarIndex(0).support(), (0.0, 1.0));
        assert_eq!(HaarIndex(3).support(), (0.5, 1.0));
        assert_eq!(HaarIndex(5).support(), (0.25, 0.5));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(haar_norm(0, p(3.7)), 1.0);
        assert_eq!(haar_norm(1, p(2.0)), 1.0);
        assert!((haar_norm(2, p(3.0)) - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((haar_norm(2, p(3.0)) - 0.79370).abs() < 1e-5);
    }

    #[test]
    fn dyadic_patterns() {
        assert_eq!(haar_as_dyadic(0, 1).unwrap().values(), &[1.0, 1.0]);
        assert_eq!(haar_as_dyadic(1, 1).unwrap().values(), &[1.0, -1.0]);
        assert_eq!(haar_as_dyadic(3, 2).unwrap().values(), &[0.0, 0.0, 1.0, -1.0]);
        assert_eq!(
            haar_as_dyadic(3, 1),
            Err(Error::InsufficientLevel { given: 1, required: 2 })
        );
        assert_eq!(
            haar_as_dyadic(1, 0),
            Err(Error::InsufficientLevel { given: 0, required: 1 })
        );
    }

    #[test]
    fn synthesize_examples() {
        let set = IndexSet::initial_segment(1);
        let zero = HaarCoefficients::zeros(set.clone());
        assert!(synthesize(&zero, p(3.0), 1).unwrap().is_zero());

        let unit0 = HaarCoefficients::unit(set.clone(), 0).unwrap();
        assert_eq!(synthesize(&unit0, p(3.0), 2).unwrap().values(), &[1.0; 4]);

        let c = HaarCoefficients::new(set.clone(), vec![1.0, 1.0]).unwrap();
        assert_eq!(synthesize(&c, p(2.0), 1).unwrap().values(), &[2.0, 0.0]);
        assert!(synthesize(&c, p(2.0), 0).is_err());
    }

    #[test]
    fn analyze_examples() {
        let set = IndexSet::initial_segment(6);
        let zero = analyze(&DyadicFunction::zeros(3), &set, p(3.0)).unwrap();
        assert!(zero.is_zero());

        let five = analyze(&DyadicFunction::constant(3, 5.0), &set, p(2.5)).unwrap();
        assert!((five.coeffs()[0] - 5.0).abs() < 1e-15);
        assert!(five.coeffs()[1..].iter().all(|&a| a.abs() < 1e-15));
    }

    #[test]
    fn lp_norm_examples() {
        assert!((DyadicFunction::constant(2, -3.0).lp_norm(p(1.5)) - 3.0).abs() < 1e-15);
        let h2 = haar_as_dyadic(2, 2).unwrap();
        assert!((h2.lp_norm(p(3.0)) - haar_norm(2, p(3.0))).abs() < 1e-15);
        for i in 0..16 {
            let set = IndexSet::initial_segment(15);
            let u = HaarCoefficients::unit(set, i).unwrap();
            let f = synthesize(&u, p(3.0), 4).unwrap();
            assert!((f.lp_norm(p(3.0)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn truncation_examples() {
        let set = IndexSet::initial_segment(3);
        let c = HaarCoefficients::new(set.clone(), vec![1.0, -0.5, 0.0, 0.0]).unwrap();
        let (t, f) = truncation_norm_check(&c, 2, p(3.0)).unwrap();
        assert_eq!(t, f);

        let c = HaarCoefficients::new(set.clone(), vec![1.0, -0.5, 0.2, 0.7]).unwrap();
        let (t, f) = truncation_norm_check(&c, 2, p(3.0)).unwrap();
        assert!(t < f);

        let (t, f) = truncation_norm_check(&c, 1, p(2.0)).unwrap();
        let tail: f64 = c.coeffs()[1..].iter().map(|a| a * a).sum();
        assert!((t * t + tail - f * f).abs() < 1e-14);

        assert!(truncation_norm_check(&c, 0, p(2.0)).is_err());
        assert!(truncation_norm_check(&c, 4, p(2.0)).is_err());
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::from_indices(vec![]).is_err());
        assert!(IndexSet::from_indices(vec![2, 2]).is_err());
        assert!(IndexSet::from_indices(vec![3, 1]).is_err());
        let s = IndexSet::from_indices(vec![1, 5, 9]).unwrap();
        assert_eq!(s.grid_level(), 4);
        assert_eq!(IndexSet::initial_segment(0).grid_level(), 0);
        assert_eq!(IndexSet::initial_segment(1).grid_level(), 1);
        assert_eq!(IndexSet::initial_segment(10).grid_level(), 4);
    }

    #[test]
    fn refinement_preserves_integral() {
        let f = DyadicFunction::new(2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let g = f.refine(5).unwrap();
        assert!((f.integral() - g.integral()).abs() < 1e-15);
        assert!((f.lp_norm(p(1.5)) - g.lp_norm(p(1.5))).abs() < 1e-14);
        assert!(f.refine(1).is_err());
    }
}
