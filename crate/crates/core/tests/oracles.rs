mod common;

use common::*;
use haar_greedy::greedy::{select_dual, select_x};
use haar_greedy::haar::{analyze, haar_as_dyadic, haar_norm, synthesize, truncation_norm_check};
use haar_greedy::lp::{estimate_gamma, estimate_modulus, line_minimize, norming_functional, pairing};
use haar_greedy::numeric::sample_rng;
use haar_greedy::partition::{prop42_sides, property_p_minimizer};
use haar_greedy::{AlgorithmKind, DyadicFunction, Exponent, HaarCoefficients, HaarDictionary, IndexSet};
use rand::Rng;
use rand_distr::StandardNormal;

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn synthesis_matches_pointwise_evaluation() {
    for (s, p) in [1.5, 2.0, 3.0, 4.0].into_iter().enumerate() {
        let mut rng = sample_rng(91, s as u64);
        let m = 13;
        let idx: Vec<usize> = (0..=m).collect();
        let a = gaussian(&mut rng, m + 1);
        let c = HaarCoefficients::new(IndexSet::initial_segment(m), a.clone()).unwrap();
        let level = IndexSet::initial_segment(m).grid_level();
        let f = synthesize(&c, exp(p), level).unwrap();
        let oracle = grid_values(&idx, &a, p, level);
        for (x, y) in f.values().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
}

#[test]
fn haar_norms_match_quadrature() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        for i in 0..64 {
            let cells = 128;
            let vals: Vec<f64> = (0..cells).map(|c| haar_value(i, (c as f64 + 0.5) / cells as f64)).collect();
            let raw = norm(&vals, p);
            assert!((haar_norm(i, exp(p)) - raw).abs() < 1e-14, "i={i} p={p}");
        }
    }
}

#[test]
fn normalization_sweep() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        let m = 63;
        let set = IndexSet::initial_segment(m);
        for i in 0..=m {
            let c = HaarCoefficients::unit(set.clone(), i).unwrap();
            let f = synthesize(&c, exp(p), set.grid_level()).unwrap();
            assert!((f.lp_norm(exp(p)) - 1.0).abs() < 1e-12, "i={i} p={p}");
        }
    }
}

#[test]
fn analysis_round_trip_1000() {
    for s in 0..1000u64 {
        let mut rng = sample_rng(5, s);
        let m = rng.gen_range(1..=15);
        let p = [1.5, 2.0, 3.0, 4.0][(s % 4) as usize];
        let set = IndexSet::initial_segment(m);
        let c = HaarCoefficients::new(set.clone(), gaussian(&mut rng, m + 1)).unwrap();
        let f = synthesize(&c, exp(p), set.grid_level()).unwrap();
        let back = analyze(&f, &set, exp(p)).unwrap();
        for (a, b) in c.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).abs() < 1e-12, "s={s}");
        }
    }
}

#[test]
fn resolution_independence() {
    for s in 0..200u64 {
        let mut rng = sample_rng(17, s);
        let level = rng.gen_range(0..=6);
        let f = DyadicFunction::new(level, gaussian(&mut rng, 1 << level)).unwrap();
        for p in [1.5, 2.0, 3.0, 4.0] {
            let base = f.lp_norm(exp(p));
            for extra in 1..=4 {
                let g = f.refine(level + extra).unwrap();
                assert!((g.lp_norm(exp(p)) - base).abs() <= 1e-13 * base.max(1.0));
            }
        }
    }
}

#[test]
fn parseval_at_two() {
    for s in 0..200u64 {
        let mut rng = sample_rng(23, s);
        let m = rng.gen_range(1..=31);
        let a = gaussian(&mut rng, m + 1);
        let dict = HaarDictionary::initial_segment(m, exp(2.0));
        let n = dict.norm_of(&a);
        let sum: f64 = a.iter().map(|x| x * x).sum();
        assert!((n * n - sum).abs() < 1e-12 * sum.max(1.0));
    }
}

#[test]
fn truncation_monotone_and_parseval() {
    for s in 0..300u64 {
        let mut rng = sample_rng(29, s);
        let m = rng.gen_range(2..=12);
        let keep = rng.gen_range(1..=m);
        let a = gaussian(&mut rng, m + 1);
        let c = HaarCoefficients::new(IndexSet::initial_segment(m), a.clone()).unwrap();
        let (t, f) = truncation_norm_check(&c, keep, exp(3.0)).unwrap();
        assert!(t < f);
        let (t2, f2) = truncation_norm_check(&c, keep, exp(2.0)).unwrap();
        let tail: f64 = a[keep..].iter().map(|x| x * x).sum();
        assert!((t2 * t2 + tail - f2 * f2).abs() < 1e-12 * f2 * f2);
    }
}

#[test]
fn line_search_fourth_power_example() {
    let p = exp(4.0);
    let dict = HaarDictionary::initial_segment(1, p);
    let phi = dict.element(1).clone();
    let y = dict.synthesize(&[1.0, 1.0]);
    let res = line_minimize(&y, &phi, p).unwrap();
    let oracle = line_search_oracle(y.values(), phi.values(), 4.0);
    assert!((res.lambda - oracle).abs() < 1e-9, "{} vs {oracle}", res.lambda);
    // ((2 - l)^4 + l^4) / 2 is symmetric about 1.
    assert!((oracle - 1.0).abs() < 1e-12);
}

#[test]
fn line_search_random_against_oracle() {
    for s in 0..100u64 {
        let mut rng = sample_rng(31, s);
        let p = rng.gen_range(1.2..5.0);
        let level = 4;
        let y = gaussian(&mut rng, 1 << level);
        let i = rng.gen_range(0..16);
        let phi = grid_values(&[i], &[1.0], p, level);
        let res = line_minimize(
            &DyadicFunction::new(level, y.clone()).unwrap(),
            &DyadicFunction::new(level, phi.clone()).unwrap(),
            exp(p),
        )
        .unwrap();
        let oracle = line_search_oracle(&y, &phi, p);
        let scale = oracle.abs().max(norm(&y, p) / norm(&phi, p));
        assert!((res.lambda - oracle).abs() <= 1e-9 * scale, "s={s} p={p}: {} vs {oracle}", res.lambda);
        let r = |l: f64| norm(&y.iter().zip(&phi).map(|(a, b)| a - l * b).collect::<Vec<_>>(), p);
        let d = 1e-6 * scale;
        assert!(r(res.lambda + d) >= r(res.lambda) - 1e-15 && r(res.lambda - d) >= r(res.lambda) - 1e-15);
    }
}

#[test]
fn property_p_example_against_oracle() {
    let p = 3.0;
    let a = [1.0, 0.0, 0.3, -0.2, 0.1];
    let c = HaarCoefficients::new(IndexSet::initial_segment(4), a.to_vec()).unwrap();
    let report = property_p_minimizer(&c, 1, exp(p)).unwrap();
    let level = 3;
    let idx = [0, 1, 2, 3, 4];
    let frozen = grid_values(&idx, &[1.0, 0.0, 0.3, -0.2, 0.1], p, level);
    let minus_e1 = grid_values(&[1], &[-1.0], p, level);
    // min_t ||frozen + t e_1|| = min_l ||frozen - l (-e_1)||
    let t0 = line_search_oracle(&frozen, &minus_e1, p);
    assert!((report.t0 - t0).abs() < 1e-9, "{} vs {t0}", report.t0);
    assert!((report.tail_sum - 0.6).abs() < 1e-15);
    assert!((report.ratio - t0.abs() / 0.6).abs() < 1e-8);
}

#[test]
fn norming_functional_contract() {
    for s in 0..200u64 {
        let mut rng = sample_rng(37, s);
        let p = [1.5, 2.0, 3.0, 4.0][(s % 4) as usize];
        let level = rng.gen_range(0..=6);
        let y = gaussian(&mut rng, 1 << level);
        let f = norming_functional(&DyadicFunction::new(level, y.clone()).unwrap(), exp(p)).unwrap();
        let g = f.density.values();
        let pair: f64 = integral(&g.iter().zip(&y).map(|(a, b)| a * b).collect::<Vec<_>>());
        let ny = norm(&y, p);
        assert!((pair - ny).abs() < 1e-10 * ny.max(1.0));
        let q = p / (p - 1.0);
        assert!((norm(g, q) - 1.0).abs() < 1e-10);
        if p == 2.0 {
            for (gv, yv) in g.iter().zip(&y) {
                assert!((gv - yv / ny).abs() < 1e-12);
            }
        }
    }
    let c = norming_functional(&DyadicFunction::constant(3, 2.5), exp(3.0)).unwrap();
    assert!(c.density.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
}

#[test]
fn pairing_examples() {
    let l = 3;
    let one = DyadicFunction::constant(l, 1.0);
    for i in 1..8 {
        assert!(pairing(&one, &haar_as_dyadic(i, l).unwrap()).abs() < 1e-15);
    }
    let h1 = haar_as_dyadic(1, l).unwrap();
    assert!((pairing(&h1, &h1) - 1.0).abs() < 1e-15);
    assert_eq!(pairing(&haar_as_dyadic(2, l).unwrap(), &haar_as_dyadic(3, l).unwrap()), 0.0);
}

#[test]
fn frechet_expansion() {
    for s in 0..50u64 {
        let mut rng = sample_rng(41, s);
        let p = [1.5, 3.0, 4.0][(s % 3) as usize];
        let level = 5;
        let x0 = gaussian(&mut rng, 1 << level);
        let nx = norm(&x0, p);
        let x: Vec<f64> = x0.iter().map(|v| v / nx).collect();
        let z0 = gaussian(&mut rng, 1 << level);
        let nz = norm(&z0, p);
        let f = norming_functional(&DyadicFunction::new(level, x.clone()).unwrap(), exp(p)).unwrap();
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| {
                let z: Vec<f64> = z0.iter().map(|v| v * t / nz).collect();
                let xz: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
                let fz = f.apply(&DyadicFunction::new(level, z).unwrap());
                (norm(&xz, p) - 1.0 - fz).abs() / t
            })
            .collect();
        assert!(ratios[2] < ratios[0], "s={s} p={p}: {ratios:?}");
        assert!(ratios[2] < 1e-2);
    }
}

#[test]
fn modulus_estimates() {
    let r = estimate_modulus(exp(2.0), 0.1, 2000, 3).unwrap();
    assert!(r.rho_hat <= (1.01f64).sqrt() - 1.0 + 1e-15);
    let small = estimate_modulus(exp(3.0), 1e-6, 500, 3).unwrap();
    assert!(small.rho_hat < 1e-10);
    let ts = [0.2, 0.1, 0.05];
    let rho: Vec<f64> = ts.iter().map(|&t| estimate_modulus(exp(3.0), t, 2000, 3).unwrap().rho_hat).collect();
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let mx = lx.iter().sum::<f64>() / 3.0;
    let my = ly.iter().sum::<f64>() / 3.0;
    let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / lx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    assert!(slope >= 1.9, "slope {slope}, rho {rho:?}");
}

#[test]
fn gamma_orthonormal_pair() {
    let dict = HaarDictionary::initial_segment(1, exp(2.0));
    for kind in [AlgorithmKind::Xga, AlgorithmKind::Dga] {
        let g = estimate_gamma(&dict, kind, 1.0, 5000, 1).unwrap();
        assert!(g <= std::f64::consts::FRAC_1_SQRT_2 + 1e-9, "{g}");
        assert!(g > 0.7);
    }
}

#[test]
fn gamma_strictly_below_one() {
    let dict = HaarDictionary::initial_segment(7, exp(3.0));
    for kind in [AlgorithmKind::Xga, AlgorithmKind::Dga] {
        let g = estimate_gamma(&dict, kind, 1.0, 10_000, 2).unwrap();
        assert!(g < 1.0 && g > 0.5, "{kind}: {g}");
    }
}

fn oracle_density(y: &[f64], p: f64) -> Vec<f64> {
    let n = norm(y, p);
    y.iter().map(|v| v.signum() * (v.abs() / n).powf(p - 1.0)).collect()
}

#[test]
fn dual_selection_brute_force() {
    let p = 3.0;
    let a = [1.0, 1.0, 0.5];
    let c = HaarCoefficients::new(IndexSet::initial_segment(2), a.to_vec()).unwrap();
    let level = 2;
    let y = grid_values(&[0, 1, 2], &a, p, level);
    let g = oracle_density(&y, p);
    let scores: Vec<f64> = (0..3)
        .map(|i| {
            let e = grid_values(&[i], &[1.0], p, level);
            integral(&g.iter().zip(&e).map(|(a, b)| a * b).collect::<Vec<_>>()).abs()
        })
        .collect();
    let best = (0..3).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    assert_eq!(select_dual(&c, exp(p), 1.0).unwrap(), best);
}

#[test]
fn x_selection_exhaustive() {
    for s in 0..100u64 {
        let mut rng = sample_rng(43, s);
        let p = 3.0;
        let m = rng.gen_range(1..=7);
        let idx: Vec<usize> = (0..=m).collect();
        let a = gaussian(&mut rng, m + 1);
        let c = HaarCoefficients::new(IndexSet::initial_segment(m), a.clone()).unwrap();
        let level = IndexSet::initial_segment(m).grid_level();
        let y = grid_values(&idx, &a, p, level);
        let (pos, res) = select_x(&c, exp(p), 1.0).unwrap();
        for i in 0..=m {
            let e = grid_values(&[i], &[1.0], p, level);
            let l = line_search_oracle(&y, &e, p);
            let r = norm(&y.iter().zip(&e).map(|(a, b)| a - l * b).collect::<Vec<_>>(), p);
            assert!(res.residual_norm <= r + 1e-12, "s={s}: pos {pos} gives {} but {i} gives {r}", res.residual_norm);
        }
    }
}

#[test]
fn smoothness_inequality_edge_cases() {
    let p = exp(3.0);
    let set = IndexSet::from_indices((2..=7).collect()).unwrap();
    let zero = HaarCoefficients::zeros(set.clone());
    let (l, r) = prop42_sides(&zero, 4.0, p).unwrap();
    assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
    let h2 = HaarCoefficients::unit(set, 0).unwrap();
    let (l, r) = prop42_sides(&h2, 0.0, p).unwrap();
    // t = 0 makes both sides the same function.
    assert_eq!(l, r);
}
