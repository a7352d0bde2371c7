//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use polylane::classify::ExistenceReason;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Radial Laplacian of `Σ a_j ρ^j · exp(-ρ²/R²)`, returned in the same form.
pub fn laplacian_gauss(poly: &BTreeMap<i32, f64>, n: u32, r: f64) -> BTreeMap<i32, f64> {
    let k = -2.0 / (r * r);
    let d = |p: &BTreeMap<i32, f64>| {
        let mut out = BTreeMap::new();
        for (&j, &a) in p {
            if j != 0 {
                *out.entry(j - 1).or_insert(0.0) += j as f64 * a;
            }
            *out.entry(j + 1).or_insert(0.0) += k * a;
        }
        out
    };
    let first = d(poly);
    let mut out = d(&first);
    for (&j, &a) in &first {
        *out.entry(j - 1).or_insert(0.0) += f64::from(n - 1) * a;
    }
    out
}

pub fn eval_gauss(poly: &BTreeMap<i32, f64>, rho: f64, r: f64) -> f64 {
    poly.iter().map(|(&j, &a)| a * rho.powi(j)).sum::<f64>() * (-(rho * rho) / (r * r)).exp()
}

/// `h^{(i)}(x)` for `h = exp(-x²)` via Hermite polynomials.
pub fn gauss_derivs(order: usize, x: f64) -> Vec<f64> {
    let mut herm = vec![1.0, 2.0 * x];
    for k in 1..order {
        let next = 2.0 * x * herm[k] - 2.0 * k as f64 * herm[k - 1];
        herm.push(next);
    }
    (0..=order)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * herm[i] * (-x * x).exp())
        .collect()
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Direct integer evaluation of the existence conditions, `p = a/b`,
/// `q = c/d`.
pub fn oracle_reasons(n: i64, al: i64, be: i64, a: i64, b: i64, c: i64, d: i64) -> Option<Vec<ExistenceReason>> {
    let standing = n > 2 * al && n > 2 * be;
    let p_gt1 = a > b && c > d;
    let ci1 = 2 * be * c * b + n * b * d + 2 * al * a * c - n * a * c >= 0;
    let ci2 = 2 * al * a * d + n * b * d + 2 * be * a * c - n * a * c >= 0;
    // p < (N+2α)/(N-2β) and p < (N+2β)/(N-2α), same for q
    let below_bound = |x: i64, y: i64| {
        standing && x * (n - 2 * be) < y * (n + 2 * al) && x * (n - 2 * al) < y * (n + 2 * be)
    };
    let cii = below_bound(a, b) && below_bound(c, d);
    let ge1 = a >= b && c >= d && !(a == b && c == d);
    // b/(a+b) + d/(c+d) > (N-2α)/N
    let below = al == be && n * (b * (c + d) + d * (a + b)) > (n - 2 * al) * (a + b) * (c + d);
    let mut reasons = Vec::new();
    if p_gt1 && (ci1 || ci2) {
        reasons.push(ExistenceReason::SupersolutionLiouville);
    }
    if p_gt1 && cii {
        reasons.push(ExistenceReason::ClassicalLiouville);
    }
    if ge1 && below {
        reasons.push(ExistenceReason::BelowCriticalHyperbola);
    }
    (standing && !reasons.is_empty()).then_some(reasons)
}

/// `(-Δ)^α (1 - r²)^α` as a constant, by expanding in powers of `r²` and
/// applying `Δ r^{2k} = 2k(2k + N - 2) r^{2k-2}`.
pub fn polyharmonic_constant(alpha: usize, n: u32) -> f64 {
    let mut poly: Vec<f64> = vec![0.0; alpha + 1];
    let mut binom = 1.0;
    for (k, c) in poly.iter_mut().enumerate() {
        *c = binom * if k % 2 == 0 { 1.0 } else { -1.0 };
        binom = binom * (alpha - k) as f64 / (k + 1) as f64;
    }
    for _ in 0..alpha {
        let mut next = vec![0.0; poly.len() - 1];
        for k in 1..poly.len() {
            let kk = k as f64;
            next[k - 1] = -poly[k] * 2.0 * kk * (2.0 * kk + f64::from(n) - 2.0);
        }
        poly = next;
    }
    poly[0]
}
