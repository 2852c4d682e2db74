//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerics.

#![allow(dead_code)]

/// Value of the unnormalized Haar function `h_i` at `x` in `[0, 1)`.
pub fn haar_value(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let n = usize::BITS - 1 - i.leading_zeros();
    let k = i - (1usize << n);
    let w = 1.0 / (1u64 << n) as f64;
    let lo = k as f64 * w;
    if x < lo || x >= lo + w {
        0.0
    } else if x < lo + w / 2.0 {
        1.0
    } else {
        -1.0
    }
}

/// `||h_i||_p` by direct quadrature: `h_i` has support of measure `2^{-n}`.
pub fn haar_norm_oracle(i: usize, p: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let n = usize::BITS - 1 - i.leading_zeros();
    (1.0 / (1u64 << n) as f64).powf(1.0 / p)
}

/// Midpoint samples of `sum_j a_j h_{idx_j} / ||h_{idx_j}||_p` on `2^level` cells.
pub fn grid_values(indices: &[usize], a: &[f64], p: f64, level: u32) -> Vec<f64> {
    let cells = 1usize << level;
    (0..cells)
        .map(|c| {
            let x = (c as f64 + 0.5) / cells as f64;
            indices.iter().zip(a).map(|(&i, &ai)| ai * haar_value(i, x) / haar_norm_oracle(i, p)).sum()
        })
        .collect()
}

pub fn norm(values: &[f64], p: f64) -> f64 {
    let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (s / values.len() as f64).powf(1.0 / p)
}

pub fn integral(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `d/dlambda ||y - lambda phi||_p^p / p`.
pub fn derivative(y: &[f64], phi: &[f64], lambda: f64, p: f64) -> f64 {
    let s: f64 = y
        .iter()
        .zip(phi)
        .map(|(&a, &b)| {
            let r = a - lambda * b;
            -r.signum() * r.abs().powf(p - 1.0) * b
        })
        .sum();
    s / y.len() as f64
}

pub const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if hi - lo <= f64::EPSILON * (lo.abs() + hi.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of `lambda -> ||y - lambda phi||_p`.
///
/// A first golden-section pass on the norm brackets the minimizer; since the
/// norm is flat there, a second pass minimizes `|d/dlambda|` on that bracket,
/// which has a sharp V-shaped minimum at the same point.
pub fn line_search_oracle(y: &[f64], phi: &[f64], p: f64) -> f64 {
    let ny = norm(y, p);
    let nphi = norm(phi, p);
    let b = 4.0 * ny / nphi + 1.0;
    let coarse = golden_section(
        |l| {
            let r: Vec<f64> = y.iter().zip(phi).map(|(a, c)| a - l * c).collect();
            norm(&r, p)
        },
        -b,
        b,
        400,
    );
    let w = 1e-4 * b;
    golden_section(|l| derivative(y, phi, l, p).abs(), coarse - w, coarse + w, 400)
}
