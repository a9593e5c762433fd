#![allow(dead_code)]

use std::f64::consts::PI;

use hopf_core::linalg::Matrix;
use hopf_core::normal_form::linearize;
use hopf_core::series::{MonomialIndex, TruncatedMapGerm, TruncatedSeries};
use hopf_core::spectral::{eigen, scan_matrix_resonances};
use hopf_core::C;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C<f64> {
    C::new(re, 0.0)
}

/// Complex number with modulus in `[lo, hi]` and uniform argument.
pub fn polar(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> C<f64> {
    C::from_polar(rng.gen_range(lo..=hi), rng.gen_range(-PI..PI))
}

/// Random contraction spectrum; half the draws are real.
pub fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<C<f64>> {
    let real = rng.gen_bool(0.5);
    (0..n)
        .map(|_| {
            let z = polar(rng, lo, hi);
            if real {
                c(z.norm() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            } else {
                z
            }
        })
        .collect()
}

/// `P (D + N) P⁻¹` with `D = diag(α)`, `N` strictly upper triangular and
/// `P = I + E` a mild random change of basis.
pub fn random_linear_part(rng: &mut ChaCha8Rng, alpha: &[C<f64>]) -> Matrix<f64> {
    let n = alpha.len();
    let mut t = Matrix::from_diagonal(alpha);
    for i in 0..n {
        for j in (i + 1)..n {
            t[(i, j)] = polar(rng, 0.0, 0.3);
        }
    }
    let mut p = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[(i, j)] = polar(rng, 0.0, 0.25);
            }
        }
    }
    p.mul(&t).mul(&p.inverse().unwrap())
}

/// Random nonlinear terms of degrees `2..=max_degree` with moduli at most `coeff_max`.
pub fn random_nonlinear(
    rng: &mut ChaCha8Rng,
    n: usize,
    cap: usize,
    terms: usize,
    max_degree: usize,
    coeff_max: f64,
) -> Vec<TruncatedSeries<f64>> {
    (0..n)
        .map(|_| {
            let list: Vec<(MonomialIndex, C<f64>)> = (0..terms)
                .map(|_| {
                    let d = rng.gen_range(2..=max_degree);
                    let mut e = vec![0u32; n];
                    for _ in 0..d {
                        e[rng.gen_range(0..n)] += 1;
                    }
                    (MonomialIndex::new(e), polar(rng, 0.0, coeff_max))
                })
                .collect();
            TruncatedSeries::from_terms(n, cap, list).unwrap()
        })
        .collect()
}

pub fn germ_from(a: &Matrix<f64>, nonlinear: Vec<TruncatedSeries<f64>>) -> TruncatedMapGerm<f64> {
    let n = a.rows();
    let components = nonlinear
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut s = f.clone();
            for j in 0..n {
                let e = MonomialIndex::unit(n, j);
                s.set_coeff(&e, s.coeff(&e) + a[(i, j)]);
            }
            s
        })
        .collect();
    TruncatedMapGerm::new(components).unwrap()
}

/// A random non-resonant contraction germ whose normal-form sweep solves
/// no divisor `|α_i − α^m|` smaller than `min_divisor`.
pub fn random_non_resonant_germ(
    rng: &mut ChaCha8Rng,
    n: usize,
    cap: usize,
    coeff_max: f64,
    min_divisor: f64,
) -> TruncatedMapGerm<f64> {
    loop {
        let alpha = random_spectrum(rng, n, 0.3, 0.9);
        let a = random_linear_part(rng, &alpha);
        let s = eigen(&a).unwrap();
        let scan = scan_matrix_resonances(&s, 1e-9).unwrap();
        if !scan.relations.is_empty() || scan.small_divisor < min_divisor {
            continue;
        }
        let terms = rng.gen_range(1..=4);
        let nonlinear = random_nonlinear(rng, n, cap, terms, 3.min(cap).max(2), coeff_max);
        let g = germ_from(&a, nonlinear);
        match linearize(&g, 1e-9) {
            Ok(r) if r.small_divisor >= min_divisor => return g,
            _ => continue,
        }
    }
}

/// Naive multiplication of sparse polynomials, truncated at `cap`.
pub fn naive_mul(
    a: &std::collections::BTreeMap<Vec<u32>, C<f64>>,
    b: &std::collections::BTreeMap<Vec<u32>, C<f64>>,
    cap: usize,
) -> std::collections::BTreeMap<Vec<u32>, C<f64>> {
    let mut out = std::collections::BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            if m.iter().sum::<u32>() as usize <= cap {
                *out.entry(m).or_insert(C::new(0.0, 0.0)) += ca * cb;
            }
        }
    }
    out
}

pub fn to_map(s: &TruncatedSeries<f64>) -> std::collections::BTreeMap<Vec<u32>, C<f64>> {
    s.terms().map(|(m, c)| (m.exponents().to_vec(), c)).collect()
}

/// Full-box count of invariant basis tensors `z^m e_I ⊗ dz_J` of
/// `TH^p ⊗ (Ω¹)^q ⊗ K^k ⊗ L_λ` for `γ = diag(α)`, with no pruning: every
/// `m` with `m_i <= B` is tested, `B` the largest degree at which the
/// relation can still balance.
pub fn brute_force_sections(alpha: &[C<f64>], p: usize, q: usize, k: i32, lambda: C<f64>, tol: f64) -> usize {
    let n = alpha.len();
    let max = alpha.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let total: C<f64> = alpha.iter().product();
    let tuples = |len: usize| -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out.into_iter().flat_map(|t| (0..n).map(move |i| [t.clone(), vec![i]].concat())).collect();
        }
        out
    };
    let mut count = 0;
    for contra in tuples(p) {
        let right = contra.iter().fold(lambda * total.powi((-k).max(0)), |acc, &i| acc * alpha[i]);
        for cov in tuples(q) {
            let left = cov.iter().fold(total.powi(k.max(0)), |acc, &j| acc * alpha[j]);
            let need = (right.norm() - tol) / left.norm();
            if need > 1.0 + 1e-9 {
                continue;
            }
            let bound = if need >= 1.0 { 1 } else { (need.ln() / max.ln()).ceil() as usize + 1 };
            let mut m = vec![0u32; n];
            loop {
                let am = m.iter().zip(alpha).fold(C::new(1.0, 0.0), |acc, (&e, a)| acc * a.powu(e));
                if (left * am - right).norm() <= tol {
                    count += 1;
                }
                let mut i = 0;
                while i < n {
                    m[i] += 1;
                    if m[i] as usize <= bound {
                        break;
                    }
                    m[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
    }
    count
}

/// Exhaustive nested-loop resonance search over the full exponent box:
/// `(target, exponents)` with `|α_i − α^k| <= tol`, `|k| >= 2`, targets
/// deduplicated onto the first of equal eigenvalues.
pub fn brute_force_resonances(alpha: &[C<f64>], tol: f64) -> std::collections::BTreeSet<(usize, Vec<u32>)> {
    let n = alpha.len();
    let max = alpha.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let min = alpha.iter().map(|a| a.norm()).fold(f64::INFINITY, f64::min);
    let bound = ((min - tol).ln() / max.ln()).floor() as usize + 1;
    let targets: Vec<usize> = (0..n).filter(|&i| (0..i).all(|j| (alpha[j] - alpha[i]).norm() > tol)).collect();
    let mut out = std::collections::BTreeSet::new();
    let mut k = vec![0u32; n];
    loop {
        let total: u32 = k.iter().sum();
        if total >= 2 {
            let prod = k.iter().zip(alpha).fold(C::new(1.0, 0.0), |acc, (&e, a)| acc * a.powu(e));
            for &i in &targets {
                if (alpha[i] - prod).norm() <= tol {
                    out.insert((i, k.clone()));
                }
            }
        }
        let mut i = 0;
        while i < n {
            k[i] += 1;
            if k[i] as usize <= bound {
                break;
            }
            k[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    out
}
