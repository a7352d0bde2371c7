//! Test-function capacities behind the whole-space Liouville theorem for
//! supersolutions.
//!
//! The test function is `φ(x) = h(|x|/R)` with `h = ψ^γ` and `ψ` a smooth
//! cutoff equal to one on `[0, 1]` and vanishing on `[2, ∞)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::classify::{Exact, RationalTuple};
use crate::error::{Error, Result};
use crate::grid::RadialFunction;
use crate::io::fmt_f64;
use crate::params::ProblemParams;
use crate::quadrature::composite;

/// Highest derivative of `h` available from the cutoff.
pub const DERIVATIVE_BUDGET: usize = 8;

/// Coefficients of `Δ^s h(ρ/R) = Σ_{i=1}^{2s} c_i h^{(i)}(ρ/R) / (R^i ρ^{2s-i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub s: usize,
    pub n: u32,
    /// `coeffs[i-1] = c_i`
    pub coeffs: Vec<BigRational>,
}

impl CoeffTable {
    pub fn c(&self, i: usize) -> &BigRational {
        &self.coeffs[i - 1]
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap()).collect()
    }

    /// `Δ^s h(ρ/R)` from `derivs[i] = h^{(i)}(ρ/R)`.
    pub fn apply(&self, derivs: &[f64], rho: f64, r: f64) -> f64 {
        self.as_f64()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let i = k + 1;
                c * derivs[i] / (r.powi(i as i32) * rho.powi((2 * self.s - i) as i32))
            })
            .sum()
    }
}

/// Coefficients for `Δ^s`, built one Laplacian at a time.
///
/// Terms are tracked as `h^{(i)}(ρ/R) R^{-i} ρ^{i-m}`; differentiation in
/// `ρ` maps this to the `(i+1, m+1)` term plus `(i-m)` times the `(i, m+1)`
/// term, and `1/ρ` raises `m` by one.
pub fn coeff_recursion(s: usize, n: u32) -> Result<CoeffTable> {
    if s == 0 {
        return Err(Error::InvalidArgument("s must be at least 1".into()));
    }
    let nm1 = BigRational::from_integer(BigInt::from(i64::from(n) - 1));
    // coefficient of h^{(i)} at the current level m = 2·level
    let mut cur: BTreeMap<usize, BigRational> = BTreeMap::from([(0, BigRational::one())]);
    let mut m = 0i64;
    let d = |terms: &BTreeMap<usize, BigRational>, m: i64| {
        let mut out: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (&i, c) in terms {
            *out.entry(i + 1).or_insert_with(BigRational::zero) += c;
            let f = BigRational::from_integer(BigInt::from(i as i64 - m));
            if !f.is_zero() {
                *out.entry(i).or_insert_with(BigRational::zero) += c * f;
            }
        }
        out
    };
    for _ in 0..s {
        let first = d(&cur, m);
        let second = d(&first, m + 1);
        let mut next = second;
        for (i, c) in first {
            *next.entry(i).or_insert_with(BigRational::zero) += c * &nm1;
        }
        next.retain(|_, c| !c.is_zero());
        cur = next;
        m += 2;
    }
    let coeffs = (1..=2 * s)
        .map(|i| cur.get(&i).cloned().unwrap_or_else(BigRational::zero))
        .collect();
    Ok(CoeffTable { s, n, coeffs })
}

/// `h = ψ^γ` with derivative budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub gamma: f64,
    pub budget: usize,
}

impl CutoffSpec {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive (got {gamma})")));
        }
        Ok(Self {
            gamma,
            budget: DERIVATIVE_BUDGET,
        })
    }
}

/// Smallest integer above `max(2α p', 2β q')`, plus one.
pub fn default_gamma(params: &ProblemParams) -> Result<f64> {
    let (pc, qc) = (conjugate(params.p)?, conjugate(params.q)?);
    let m = (2.0 * params.alpha as f64 * pc).max(2.0 * params.beta as f64 * qc);
    Ok(m.ceil() + 1.0)
}

/// `p/(p-1)` for `p > 1`.
pub fn conjugate(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("conjugate exponent needs p > 1 (got {p})")));
    }
    Ok(p / (p - 1.0))
}

// Truncated Taylor series arithmetic.

fn jet_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|n| (0..=n).map(|k| a[k] * b[n - k]).sum())
        .collect()
}

fn jet_recip(a: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; a.len()];
    b[0] = 1.0 / a[0];
    for n in 1..a.len() {
        b[n] = -(1..=n).map(|k| a[k] * b[n - k]).sum::<f64>() / a[0];
    }
    b
}

fn jet_exp(a: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; a.len()];
    b[0] = a[0].exp();
    for n in 1..a.len() {
        b[n] = (1..=n).map(|k| k as f64 * a[k] * b[n - k]).sum::<f64>() / n as f64;
    }
    b
}

/// `a^γ` for `a_0 > 0`.
fn jet_pow(a: &[f64], gamma: f64) -> Vec<f64> {
    let mut b = vec![0.0; a.len()];
    b[0] = a[0].powf(gamma);
    for n in 1..a.len() {
        b[n] = (1..=n)
            .map(|k| ((gamma + 1.0) * k as f64 - n as f64) * a[k] * b[n - k])
            .sum::<f64>()
            / (n as f64 * a[0]);
    }
    b
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// `ψ, ψ', …, ψ^{(order)}` at `x`.
pub fn bump_derivatives(order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if x <= 1.0 {
        out[0] = 1.0;
        return out;
    }
    if x >= 2.0 {
        return out;
    }
    let len = order + 1;
    let lin = |c0: f64, c1: f64| {
        let mut j = vec![0.0; len];
        j[0] = c0;
        if len > 1 {
            j[1] = c1;
        }
        j
    };
    // exp(-1/y) and all its derivatives vanish to double precision below
    // this argument
    let g = |y: Vec<f64>| {
        if y[0] < 1.0 / 700.0 {
            return vec![0.0; len];
        }
        jet_exp(&jet_recip(&y).iter().map(|v| -v).collect::<Vec<_>>())
    };
    let g1 = g(lin(2.0 - x, -1.0));
    let g2 = g(lin(x - 1.0, 1.0));
    let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
    let psi = jet_mul(&g1, &jet_recip(&sum));
    psi.iter().enumerate().map(|(k, c)| c * factorial(k)).collect()
}

/// How [`cutoff_derivatives`] differentiates `ψ^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffPath {
    /// Power-series recurrence for `ψ^γ`.
    Direct,
    /// Sum over products `ψ^{(k_1)} ⋯ ψ^{(k_i)} ψ^{γ-i}`.
    Compositions,
}

/// `h, h', …, h^{(order)}` at `x` for `h = ψ^γ`.
pub fn cutoff_derivatives(spec: &CutoffSpec, order: usize, x: f64) -> Result<Vec<f64>> {
    cutoff_derivatives_with(spec, order, x, CutoffPath::Compositions)
}

pub fn cutoff_derivatives_with(spec: &CutoffSpec, order: usize, x: f64, path: CutoffPath) -> Result<Vec<f64>> {
    if order > spec.budget {
        return Err(Error::InvalidArgument(format!(
            "derivative order {order} exceeds budget {}",
            spec.budget
        )));
    }
    let mut out = vec![0.0; order + 1];
    if x <= 1.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    if x >= 2.0 {
        return Ok(out);
    }
    let psi = bump_derivatives(order, x);
    match path {
        CutoffPath::Direct if psi[0] == 0.0 => {}
        CutoffPath::Direct => {
            let taylor: Vec<f64> = psi.iter().enumerate().map(|(k, d)| d / factorial(k)).collect();
            let h = jet_pow(&taylor, spec.gamma);
            for (k, c) in h.iter().enumerate() {
                out[k] = c * factorial(k);
            }
        }
        CutoffPath::Compositions => {
            out[0] = psi[0].powf(spec.gamma);
            for i in 1..=order {
                out[i] = composition_terms(i)
                    .iter()
                    .map(|(ks, poly)| {
                        let zeros = ks.iter().filter(|&&k| k == 0).count();
                        let prod: f64 = ks.iter().filter(|&&k| k > 0).map(|&k| psi[k]).product();
                        eval_poly(poly, spec.gamma) * prod * psi[0].powf(spec.gamma - i as f64 + zeros as f64)
                    })
                    .sum();
            }
        }
    }
    Ok(out)
}

fn eval_poly(coeffs: &[i64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + *c as f64)
}

/// Terms of `h^{(i)}` as sorted multi-indices `(k_1, …, k_i)` with
/// coefficients that are integer polynomials in `γ` (ascending powers).
pub fn composition_terms(i: usize) -> Vec<(Vec<usize>, Vec<i64>)> {
    let mut terms: BTreeMap<Vec<usize>, Vec<i64>> = BTreeMap::from([(vec![1], vec![0, 1])]);
    for level in 1..i {
        let mut next: BTreeMap<Vec<usize>, Vec<i64>> = BTreeMap::new();
        let mut add = |mut ks: Vec<usize>, poly: Vec<i64>| {
            ks.sort_unstable();
            let slot = next.entry(ks).or_default();
            if slot.len() < poly.len() {
                slot.resize(poly.len(), 0);
            }
            for (a, b) in slot.iter_mut().zip(&poly) {
                *a += b;
            }
        };
        for (ks, poly) in &terms {
            for j in 0..ks.len() {
                let mut k2 = ks.clone();
                k2[j] += 1;
                k2.push(0);
                add(k2, poly.clone());
            }
            // (γ - level) ψ'
            let mut shifted = vec![0i64; poly.len() + 1];
            for (d, c) in poly.iter().enumerate() {
                shifted[d + 1] += c;
                shifted[d] -= c * level as i64;
            }
            let mut k2 = ks.clone();
            k2.push(1);
            add(k2, shifted);
        }
        terms = next;
    }
    terms
        .into_iter()
        .filter(|(_, p)| p.iter().any(|&c| c != 0))
        .collect()
}

/// Surface measure of the unit sphere in `R^N`, `2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let k = n / 2;
    if n % 2 == 0 {
        // Γ(k) = (k-1)!
        2.0 * PI.powi(k as i32) / factorial(k as usize - 1)
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        let gamma_half = factorial(2 * k as usize) * PI.sqrt() / (4f64.powi(k as i32) * factorial(k as usize));
        2.0 * PI.powf(f64::from(n) / 2.0) / gamma_half
    }
}

/// Quadrature panels on `[R, 2R]`.
pub const CAP_PANELS: usize = 64;

/// `ω_{N-1} ∫_R^{2R} |Δ^{order/2} φ|^{r} φ^{1-r} ρ^{N-1} dρ`, with `order`
/// the (even) differential order.
pub fn capacity_integral(spec: &CutoffSpec, order: usize, r_exp: f64, radius: f64, n: u32) -> Result<f64> {
    capacity_integral_panels(spec, order, r_exp, radius, n, CAP_PANELS)
}

pub fn capacity_integral_panels(
    spec: &CutoffSpec,
    order: usize,
    r_exp: f64,
    radius: f64,
    n: u32,
    panels: usize,
) -> Result<f64> {
    if order == 0 || order % 2 != 0 || order > spec.budget {
        return Err(Error::InvalidArgument(format!(
            "order must be even, positive and within the budget (got {order})"
        )));
    }
    if !(r_exp >= 1.0) || !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need r >= 1 and R > 0 (got r={r_exp}, R={radius})"
        )));
    }
    if !(spec.gamma > order as f64 * r_exp) {
        return Err(Error::InvalidArgument(format!(
            "gamma = {} must exceed order * r = {}",
            spec.gamma,
            order as f64 * r_exp
        )));
    }
    let s = order / 2;
    let table = coeff_recursion(s, n)?.as_f64();
    let terms: Vec<_> = (1..=order).map(composition_terms).collect();
    let gamma = spec.gamma;
    // Δ^s φ / ψ^{γ - order}
    let ratio = |rho: f64, psi: &[f64]| -> f64 {
        (1..=order)
            .map(|i| {
                let hi: f64 = terms[i - 1]
                    .iter()
                    .map(|(ks, poly)| {
                        let zeros = ks.iter().filter(|&&k| k == 0).count();
                        let prod: f64 = ks.iter().filter(|&&k| k > 0).map(|&k| psi[k]).product();
                        eval_poly(poly, gamma) * prod * psi[0].powi((order - i + zeros) as i32)
                    })
                    .sum();
                table[i - 1] * hi / (radius.powi(i as i32) * rho.powi((order - i) as i32))
            })
            .sum()
    };
    let q_at = |rho: f64| ratio(rho, &bump_derivatives(order, rho / radius));

    // |Q|^r is not smooth where Q changes sign: split there and grade the
    // nodes towards every breakpoint.
    let probes = 4 * panels;
    let mut breaks = vec![radius];
    let mut prev = (radius, q_at(radius * (1.0 + 1e-12)));
    for k in 1..probes {
        let rho = radius * (1.0 + k as f64 / probes as f64);
        let q = q_at(rho);
        if q != 0.0 && prev.1 != 0.0 && (q > 0.0) != (prev.1 > 0.0) {
            let (mut lo, mut hi) = (prev.0, rho);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (q_at(mid) > 0.0) == (prev.1 > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            breaks.push(0.5 * (lo + hi));
        }
        if q != 0.0 {
            prev = (rho, q);
        }
    }
    breaks.push(2.0 * radius);

    let mut bad = false;
    let mut integrand = |rho: f64| {
        let x = rho / radius;
        if x <= 1.0 || x >= 2.0 {
            return 0.0;
        }
        let psi = bump_derivatives(order, x);
        let f = ratio(rho, &psi).abs().powf(r_exp)
            * psi[0].powf(gamma - order as f64 * r_exp)
            * rho.powi(n as i32 - 1);
        if !f.is_finite() {
            bad = true;
        }
        f
    };
    let mut val = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let count = ((panels as f64 * (b - a) / radius).ceil() as usize).max(4);
        val += composite(0.0, 1.0, count, |t| {
            let rho = a + (b - a) * t * t * (3.0 - 2.0 * t);
            integrand(rho) * (b - a) * 6.0 * t * (1.0 - t)
        });
    }
    if bad || !val.is_finite() {
        return Err(Error::Integrability("non-finite capacity integrand".into()));
    }
    Ok(sphere_area(n) * val)
}

/// Fit of `log cap` against `log R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    #[serde(rename = "R_values")]
    pub r_values: Vec<f64>,
    pub cap_values: Vec<f64>,
    pub fitted_slope: f64,
    pub theoretical_slope: f64,
    pub max_relative_fit_residual: f64,
}

impl CapacityReport {
    /// `R,cap` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,cap\n");
        for (r, c) in self.r_values.iter().zip(&self.cap_values) {
            out.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*c)));
        }
        out
    }

    pub fn relative_slope_error(&self) -> f64 {
        ((self.fitted_slope - self.theoretical_slope) / self.theoretical_slope).abs()
    }
}

/// Least-squares slope of `log cap` on `log R`; needs at least four points
/// over two decades.
pub fn decay_slope(r_values: &[f64], cap_values: &[f64], theoretical_slope: f64) -> Result<CapacityReport> {
    if r_values.len() != cap_values.len() {
        return Err(Error::DegenerateFit("length mismatch".into()));
    }
    if r_values.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} points, need at least 4", r_values.len())));
    }
    if r_values.iter().chain(cap_values).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::DegenerateFit("values must be positive and finite".into()));
    }
    let lo = r_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = r_values.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::DegenerateFit(format!("R spans {:.3} decades, need 2", (hi / lo).log10())));
    }
    let xs: Vec<f64> = r_values.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = cap_values.iter().map(|c| c.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let resid = xs
        .iter()
        .zip(cap_values)
        .map(|(x, c)| ((icept + slope * x).exp() - c).abs() / c)
        .fold(0.0, f64::max);
    Ok(CapacityReport {
        r_values: r_values.to_vec(),
        cap_values: cap_values.to_vec(),
        fitted_slope: slope,
        theoretical_slope,
        max_relative_fit_residual: resid,
    })
}

/// Capacity over an `R` sweep with the theoretical slope `N − order·r`.
pub fn capacity_sweep(spec: &CutoffSpec, order: usize, r_exp: f64, n: u32, r_values: &[f64]) -> Result<CapacityReport> {
    use rayon::prelude::*;
    let caps = r_values
        .par_iter()
        .map(|&r| capacity_integral(spec, order, r_exp, r, n))
        .collect::<Result<Vec<_>>>()?;
    decay_slope(r_values, &caps, f64::from(n) - order as f64 * r_exp)
}

/// `((2βq + N + 2αpq − Npq)/(pq−1), (2αp + N + 2βpq − Npq)/(pq−1))`, exact.
pub fn nonexistence_exponents(t: &RationalTuple) -> Result<(Exact, Exact)> {
    let one = BigRational::one();
    let two = BigRational::from_integer(2.into());
    let int = |x: u32| BigRational::from_integer(BigInt::from(x));
    let pq = &t.p * &t.q;
    let d = &pq - &one;
    if d <= BigRational::zero() {
        return Err(Error::InvalidParams("decay exponents need pq > 1".into()));
    }
    let (n, a, b) = (int(t.n), int(t.alpha), int(t.beta));
    let first = &two * &b * &t.q + &n + &two * &a * &pq - &n * &pq;
    let second = &two * &a * &t.p + &n + &two * &b * &pq - &n * &pq;
    Ok((Exact(first / &d), Exact(second / &d)))
}

/// Floating version of [`nonexistence_exponents`].
pub fn nonexistence_exponent(params: &ProblemParams) -> Result<(f64, f64)> {
    let (a, b) = nonexistence_exponents(&RationalTuple::from_params(params)?)?;
    Ok((a.to_f64(), b.to_f64()))
}

/// `{cap_β(φ, q')^{q-1} cap_α(φ, p')^{q(p-1)}}^{1/(pq-1)}`, the bound on
/// `∫|v|^q φ`; it scales like `R` to minus the first decay exponent and is
/// constant in `R` on the critical curve.
pub fn capacity_product(params: &ProblemParams, spec: &CutoffSpec, radius: f64) -> Result<f64> {
    let (p, q) = (params.p, params.q);
    let cap_a = capacity_integral(spec, 2 * params.alpha, conjugate(p)?, radius, params.n)?;
    let cap_b = capacity_integral(spec, 2 * params.beta, conjugate(q)?, radius, params.n)?;
    Ok((cap_b.powf(q - 1.0) * cap_a.powf(q * (p - 1.0))).powf(1.0 / (p * q - 1.0)))
}

/// The five members of the Hölder chain
/// `∫|v|^q φ ≤ ∫u(-Δ)^α φ ≤ (∫|u|^p φ)^{1/p} cap_α^{1/p'} ≤ (∫v(-Δ)^β φ)^{1/p} cap_α^{1/p'}
///  ≤ (∫|v|^q φ)^{1/pq} cap_β^{1/(pq')} cap_α^{1/p'}`
/// and whether each link holds. The first and third links need `(u, v)` to
/// be a supersolution; the others are Hölder's inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderChainReport {
    pub radius: f64,
    pub gamma: f64,
    pub expressions: [f64; 5],
    pub holds: [bool; 4],
    pub tolerance: f64,
}

impl HolderChainReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|h| *h)
    }
}

/// Relative slack allowed in each link of the chain.
pub const CHAIN_TOL: f64 = 1e-8;

pub fn holder_chain_check(
    u: &RadialFunction,
    v: &RadialFunction,
    params: &ProblemParams,
    radius: f64,
    spec: &CutoffSpec,
) -> Result<HolderChainReport> {
    params.validate()?;
    let (p, q) = (params.p, params.q);
    let (pc, qc) = (conjugate(p)?, conjugate(q)?);
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("R must be positive (got {radius})")));
    }
    for (name, f) in [("u", u), ("v", v)] {
        if f.grid.r_max() < 2.0 * radius * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "{name} is sampled up to {} but the cutoff reaches {}",
                f.grid.r_max(),
                2.0 * radius
            )));
        }
    }
    let n = params.n;
    let omega = sphere_area(n);
    let panels = 64;
    let phi = |rho: f64| -> f64 {
        cutoff_derivatives(spec, 0, rho / radius).map(|d| d[0]).unwrap_or(f64::NAN)
    };
    let weight = |rho: f64| rho.powi(n as i32 - 1);
    let integral = |f: &dyn Fn(f64) -> f64| -> f64 {
        omega
            * (composite(0.0, radius, panels, |r| f(r) * weight(r))
                + composite(radius, 2.0 * radius, panels, |r| f(r) * weight(r)))
    };
    let neg_lap_pow = |k: usize| -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
        let table = coeff_recursion(k, n)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Ok(Box::new(move |rho: f64| {
            let x = rho / radius;
            if x <= 1.0 || x >= 2.0 {
                return 0.0;
            }
            match cutoff_derivatives(spec, 2 * k, x) {
                Ok(d) => sign * table.apply(&d, rho, radius),
                Err(_) => f64::NAN,
            }
        }))
    };
    let lap_a = neg_lap_pow(params.alpha)?;
    let lap_b = neg_lap_pow(params.beta)?;

    let vq = integral(&|r| v.interpolate(r).abs().powf(q) * phi(r));
    let up = integral(&|r| u.interpolate(r).abs().powf(p) * phi(r));
    let ua = omega * composite(radius, 2.0 * radius, panels, |r| u.interpolate(r) * lap_a(r) * weight(r));
    let vb = omega * composite(radius, 2.0 * radius, panels, |r| v.interpolate(r) * lap_b(r) * weight(r));
    let cap_a = capacity_integral(spec, 2 * params.alpha, pc, radius, n)?;
    let cap_b = capacity_integral(spec, 2 * params.beta, qc, radius, n)?;

    let ca = cap_a.powf(1.0 / pc);
    let e = [
        vq,
        ua,
        up.powf(1.0 / p) * ca,
        vb.max(0.0).powf(1.0 / p) * ca,
        vq.powf(1.0 / (p * q)) * cap_b.powf(1.0 / (p * qc)) * ca,
    ];
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::Integrability(format!("non-finite chain member in {e:?}")));
    }
    let le = |a: f64, b: f64| a <= b + CHAIN_TOL * a.abs().max(b.abs()) + f64::MIN_POSITIVE;
    Ok(HolderChainReport {
        radius,
        gamma: spec.gamma,
        expressions: e,
        holds: [le(e[0], e[1]), le(e[1], e[2]), le(e[2], e[3]), le(e[3], e[4])],
        tolerance: CHAIN_TOL,
    })
}
