//! Uniqueness apparatus for `(α, β) = (2, 1)`: the kernel fixed point of the
//! triple `U = (u, -Δu, v)`, scaling normalization of a second solution,
//! the sign-pattern tracker for the differences, and the multistart scan.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{lagrange6, RadialFunction, RadialGrid};
use crate::params::{ChainSystem, Forcing, ProblemParams};
use crate::quadrature::GaussLegendre;
use crate::radial::{integrate_chain, IvpOptions};
use crate::shooting::{dedup_sorted, multistart_converged, SearchBox, Shooter, SolutionRecord, SolutionSummary};

/// Successive-iterate tolerance of the Picard iteration.
pub const PICARD_TOL: f64 = 1e-10;

/// Under-relaxation used once plain iteration stops contracting.
pub const RELAXATION: f64 = 0.5;

/// Grid intervals per Picard window.
pub const PICARD_WINDOW: usize = 8;

/// Relative sup-difference under which two profiles are the same.
pub const IDENTICAL_TOL: f64 = 1e-8;

fn require_21(params: &ProblemParams) -> Result<()> {
    params.validate()?;
    if (params.alpha, params.beta) != (2, 1) {
        return Err(Error::InvalidParams(format!(
            "uniqueness apparatus needs (alpha, beta) = (2, 1), got ({}, {})",
            params.alpha, params.beta
        )));
    }
    if !(params.p > 1.0 && params.q > 1.0) {
        return Err(Error::InvalidParams(format!(
            "need p, q > 1 (got p={}, q={})",
            params.p, params.q
        )));
    }
    if params.n < 3 {
        return Err(Error::InvalidParams(format!("need N >= 3, got {}", params.n)));
    }
    Ok(())
}

fn require_unforced(params: &ProblemParams) -> Result<()> {
    if params.t != 0.0 {
        return Err(Error::InvalidParams(format!("scaling needs t = 0 (got {})", params.t)));
    }
    Ok(())
}

/// `U(r) = (u(r), -Δu(r), v(r))` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleProfile {
    pub grid: RadialGrid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl TripleProfile {
    pub fn components(&self) -> [&[f64]; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn center(&self) -> [f64; 3] {
        [self.x[0], self.y[0], self.z[0]]
    }

    pub fn component(&self, k: usize) -> RadialFunction {
        RadialFunction {
            grid: self.grid.clone(),
            values: self.components()[k].to_vec(),
        }
    }

    /// Six-node Lagrange interpolation of all three components.
    pub fn at(&self, r: f64) -> [f64; 3] {
        let nodes = self.grid.nodes();
        self.components().map(|c| lagrange6(nodes, c, r))
    }

    /// `F(x, y, z) = (y, z^q, x^p)` (with the forcing shifts of `params`).
    pub fn forcing_at(&self, i: usize, system: &ChainSystem) -> [f64; 3] {
        let (top_u, top_v) = system.closures(self.x[i], self.z[i]);
        [self.y[i], top_u, top_v]
    }

    /// Max over components of `|-Δ_h c - F_c| / max(1, sup |F_c|)` at
    /// interior nodes, with the fourth-order five-point Laplacian. Needs a
    /// uniform grid.
    pub fn fixed_point_residual(&self, params: &ProblemParams) -> Result<f64> {
        let r = self.grid.nodes();
        let m = r.len();
        let h = r[1] - r[0];
        if r.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
            return Err(Error::InvalidGrid("fixed-point residual needs a uniform grid".into()));
        }
        let system = ChainSystem::new(*params);
        let forcing: Vec<[f64; 3]> = (0..m).map(|i| self.forcing_at(i, &system)).collect();
        let n1 = params.nf() - 1.0;
        let mut worst: f64 = 0.0;
        for (k, c) in self.components().iter().enumerate() {
            let scale = forcing.iter().fold(1.0f64, |s, f| s.max(f[k].abs()));
            for i in 2..m - 2 {
                let d1 = (-c[i + 2] + 8.0 * c[i + 1] - 8.0 * c[i - 1] + c[i - 2]) / (12.0 * h);
                let d2 = (-c[i + 2] + 16.0 * c[i + 1] - 30.0 * c[i] + 16.0 * c[i - 1] - c[i - 2])
                    / (12.0 * h * h);
                let lap = -(d2 + n1 / r[i] * d1);
                worst = worst.max((lap - forcing[i][k]).abs() / scale);
            }
        }
        Ok(worst)
    }

    /// Relative sup distance to another profile on the same grid.
    pub fn relative_distance(&self, other: &TripleProfile) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| {
                let scale = a.iter().fold(f64::MIN_POSITIVE, |s, v| s.max(v.abs()));
                a.iter().zip(b).fold(0.0f64, |d, (x, y)| d.max((x - y).abs())) / scale
            })
            .fold(0.0, f64::max)
    }

    /// `r,u,neg_lap_u,v` rows.
    pub fn to_csv(&self) -> String {
        use crate::io::fmt_f64;
        let mut out = String::from("r,u,neg_lap_u,v\n");
        for (i, r) in self.grid.nodes().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(*r),
                fmt_f64(self.x[i]),
                fmt_f64(self.y[i]),
                fmt_f64(self.z[i])
            ));
        }
        out
    }
}

/// Fixed point of `U(r) = U(0) - ∫_0^r K(r, s) F(U(s)) ds` on `grid`,
/// marching over short windows so that the integral map contracts.
pub fn picard_fixed_point(
    center: [f64; 3],
    params: &ProblemParams,
    grid: &RadialGrid,
    max_iter: usize,
) -> Result<TripleProfile> {
    require_21(params)?;
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite center value".into()));
    }
    let system = ChainSystem::new(*params);
    let x = grid.nodes();
    let m = x.len();
    let n = params.n as i32;
    let nm2 = params.nf() - 2.0;
    let rule = GaussLegendre::new(4);

    let mut vals: [Vec<f64>; 3] = [vec![center[0]; m], vec![center[1]; m], vec![center[2]; m]];
    let mut forcing: [Vec<f64>; 3] = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    // cumulative ∫ s f and ∫ s^{N-1} f
    let mut low: [Vec<f64>; 3] = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let mut top: [Vec<f64>; 3] = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];

    let eval_forcing = |vals: &[Vec<f64>; 3], forcing: &mut [Vec<f64>; 3], lo: usize, hi: usize| {
        for i in lo..=hi {
            let (tu, tv) = system.closures(vals[0][i], vals[2][i]);
            forcing[0][i] = vals[1][i];
            forcing[1][i] = tu;
            forcing[2][i] = tv;
        }
    };
    let moments = |forcing: &[Vec<f64>; 3], low: &mut [Vec<f64>; 3], top: &mut [Vec<f64>; 3], a: usize, b: usize| {
        for j in a..b {
            let st = j.saturating_sub(1).min(b.saturating_sub(3));
            let nodes = &x[st..st + 4];
            for k in 0..3 {
                let f = &forcing[k][st..st + 4];
                let (mut p1, mut pn) = (0.0, 0.0);
                for (s, w) in rule.points(x[j], x[j + 1]) {
                    let fs = lagrange6(nodes, f, s);
                    p1 += w * s * fs;
                    pn += w * s.powi(n - 1) * fs;
                }
                low[k][j + 1] = low[k][j] + p1;
                top[k][j + 1] = top[k][j] + pn;
            }
        }
    };

    if center == [0.0; 3] && system.closures(0.0, 0.0) == (0.0, 0.0) {
        return Ok(TripleProfile {
            grid: grid.clone(),
            x: vals[0].clone(),
            y: vals[1].clone(),
            z: vals[2].clone(),
        });
    }

    eval_forcing(&vals, &mut forcing, 0, 0);
    let mut a = 0;
    while a < m - 1 {
        let b = (a + PICARD_WINDOW).min(m - 1);
        for k in 0..3 {
            let last = vals[k][a];
            vals[k][a + 1..=b].iter_mut().for_each(|v| *v = last);
        }
        let mut omega = 1.0;
        let mut prev = f64::INFINITY;
        let mut converged = false;
        for _ in 0..max_iter.max(1) {
            eval_forcing(&vals, &mut forcing, a + 1, b);
            moments(&forcing, &mut low, &mut top, a, b);
            let mut diff: f64 = 0.0;
            let mut next: [Vec<f64>; 3] = [vec![0.0; b - a], vec![0.0; b - a], vec![0.0; b - a]];
            for k in 0..3 {
                let scale = vals[k][..=b].iter().fold(1.0f64, |s, v| s.max(v.abs()));
                for i in a + 1..=b {
                    let r = x[i];
                    let new = center[k] - (low[k][i] - r.powi(2 - n) * top[k][i]) / nm2;
                    diff = diff.max((new - vals[k][i]).abs() / scale);
                    next[k][i - a - 1] = new;
                }
            }
            if !diff.is_finite() {
                return Err(Error::Divergence { radius: x[b] });
            }
            if diff > prev {
                omega = RELAXATION;
            }
            prev = diff;
            for k in 0..3 {
                for i in a + 1..=b {
                    vals[k][i] += omega * (next[k][i - a - 1] - vals[k][i]);
                }
            }
            if diff < PICARD_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonContraction {
                iterations: max_iter,
                update: prev,
            });
        }
        eval_forcing(&vals, &mut forcing, a + 1, b);
        moments(&forcing, &mut low, &mut top, a, b);
        a = b;
    }
    let [x0, y0, z0] = vals;
    Ok(TripleProfile {
        grid: grid.clone(),
        x: x0,
        y: y0,
        z: z0,
    })
}

/// `(u, -Δu, v)` of a `(2, 1)` record at radius `r`.
fn record_triple(rec: &SolutionRecord, r: f64) -> [f64; 3] {
    let r = r.clamp(0.0, rec.profile.grid.r_max());
    let st = rec.profile.state_interp(r);
    [st.values[0], st.values[1], st.values[2]]
}

/// Outcome of [`scale_match`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMatch {
    pub lambda: f64,
    /// Exponents `(s, t)` of the scaling `w̃ = λ^s w(λ·)`, `z̃ = λ^t z(λ·)`.
    pub exponents: (f64, f64),
    pub profile: TripleProfile,
    /// Relative sup distance to a fresh integration from the rescaled center.
    pub reintegration_residual: f64,
}

/// Rescale `w` so that `w̃(0) = target_u0`, on `[0, min(1, 1/λ)]`.
pub fn scale_match(w: &SolutionRecord, target_u0: f64, params: &ProblemParams) -> Result<ScaleMatch> {
    require_21(params)?;
    require_unforced(params)?;
    let w0 = w.profile.u()[0];
    if !(w0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need w(0) > 0 (got {w0})")));
    }
    if !(target_u0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need a positive target (got {target_u0})")));
    }
    let (s, t) = params
        .scaling_exponents()
        .ok_or_else(|| Error::InvalidParams("scaling needs pq > 1".into()))?;
    let lambda = if target_u0 == w0 { 1.0 } else { (target_u0 / w0).powf(1.0 / s) };
    let end = (1.0f64).min(1.0 / lambda);
    let grid = RadialGrid::uniform(w.profile.grid.len(), end)?;
    let (fx, fy, fz) = (lambda.powf(s), lambda.powf(s + 2.0), lambda.powf(t));
    let mut prof = TripleProfile {
        grid: grid.clone(),
        x: Vec::with_capacity(grid.len()),
        y: Vec::with_capacity(grid.len()),
        z: Vec::with_capacity(grid.len()),
    };
    for &r in grid.nodes() {
        let [a, b, c] = record_triple(w, lambda * r);
        prof.x.push(fx * a);
        prof.y.push(fy * b);
        prof.z.push(fz * c);
    }
    prof.x[0] = target_u0;

    let system = ChainSystem::with_forcing(*params, Forcing::Power { shift_u: 0.0, shift_v: 0.0 });
    let fresh = integrate_chain(&prof.center(), &system, &grid, &IvpOptions::default())?;
    let fresh = TripleProfile {
        grid,
        x: fresh.chain_u[0].clone(),
        y: fresh.chain_u[1].clone(),
        z: fresh.chain_v[0].clone(),
    };
    let reintegration_residual = fresh.relative_distance(&prof);
    Ok(ScaleMatch {
        lambda,
        exponents: (s, t),
        profile: prof,
        reintegration_residual,
    })
}

/// One of the three tracked differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Difference {
    /// `u - w̃`
    U,
    /// `v - z̃`
    V,
    /// `Δ(u - w̃)`
    LaplacianU,
}

impl Difference {
    const ALL: [Difference; 3] = [Difference::U, Difference::V, Difference::LaplacianU];

    /// Crossing order after `R_0 = 0`.
    const SCHEDULE: [Difference; 3] = [Difference::V, Difference::LaplacianU, Difference::U];
}

/// Zero crossings of `(u - w̃, v - z̃, Δ(u - w̃))` on `[0, window]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPattern {
    pub lambda: f64,
    pub window: f64,
    /// `R_1 < R_2 < …`
    pub radii: Vec<f64>,
    pub crossings: Vec<Difference>,
    /// Signs on `(R_k, R_{k+1})`, `0` when below the noise level.
    pub interval_signs: Vec<[i8; 3]>,
    /// Relative sup norms of the three differences.
    pub sup_differences: [f64; 3],
    pub identical: bool,
    pub in_schedule: bool,
}

impl SignPattern {
    pub fn summary(&self) -> String {
        if self.identical {
            "profiles identical".into()
        } else if self.in_schedule {
            format!("{} crossings in schedule", self.radii.len())
        } else {
            format!("{} crossings out of schedule", self.radii.len())
        }
    }
}

/// Samples used to bracket crossings.
const TRACE_SAMPLES: usize = 2048;

/// Like [`sign_pattern_trace`] but reports schedule violations in the
/// pattern instead of failing.
pub fn trace_pattern(u_rec: &SolutionRecord, w_rec: &SolutionRecord, params: &ProblemParams) -> Result<SignPattern> {
    for rec in [u_rec, w_rec] {
        if !rec.is_nontrivial() {
            return Err(Error::TrivialSolution);
        }
    }
    let matched = scale_match(w_rec, u_rec.profile.u()[0], params)?;
    let lambda = matched.lambda;
    let (s, t) = matched.exponents;
    let window = (1.0f64).min(1.0 / lambda);
    let (fx, fy, fz) = (lambda.powf(s), lambda.powf(s + 2.0), lambda.powf(t));
    let diff = |r: f64| -> [f64; 3] {
        let a = record_triple(u_rec, r);
        let b = record_triple(w_rec, lambda * r);
        [a[0] - fx * b[0], a[2] - fz * b[2], -(a[1] - fy * b[1])]
    };
    let scales = {
        let p = &u_rec.profile;
        let sup = |v: &[f64]| v.iter().fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()));
        [sup(p.u()), sup(p.v()), sup(&p.chain_u[1])]
    };
    let residual = u_rec.residual_norm.max(w_rec.residual_norm);
    let noise: Vec<f64> = scales.iter().map(|s| (10.0 * residual).max(1e-12 * s)).collect();

    let radii_s: Vec<f64> = (0..=TRACE_SAMPLES)
        .map(|i| window * i as f64 / TRACE_SAMPLES as f64)
        .collect();
    let samples: Vec<[f64; 3]> = radii_s.iter().map(|&r| diff(r)).collect();
    let mut sup = [0.0f64; 3];
    for d in &samples {
        for k in 0..3 {
            sup[k] = sup[k].max(d[k].abs() / scales[k]);
        }
    }
    let identical = sup.iter().all(|s| *s <= IDENTICAL_TOL);

    let sign = |v: f64, k: usize| -> i8 {
        if v.abs() <= noise[k] {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let mut found: Vec<(f64, Difference)> = Vec::new();
    if !identical {
        for (k, which) in Difference::ALL.iter().enumerate() {
            let mut last: Option<(f64, i8)> = None;
            for (r, d) in radii_s.iter().zip(&samples) {
                let sg = sign(d[k], k);
                if sg == 0 {
                    continue;
                }
                if let Some((r0, s0)) = last {
                    if s0 != sg {
                        let (mut lo, mut hi) = (r0, *r);
                        for _ in 0..80 {
                            let mid = 0.5 * (lo + hi);
                            if (diff(mid)[k] > 0.0) == (s0 > 0) {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        found.push((0.5 * (lo + hi), *which));
                    }
                }
                last = Some((*r, sg));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let in_schedule = found
        .iter()
        .enumerate()
        .all(|(j, (_, d))| *d == Difference::SCHEDULE[j % 3]);
    let radii: Vec<f64> = found.iter().map(|f| f.0).collect();
    let mut bounds = vec![0.0];
    bounds.extend(&radii);
    bounds.push(window);
    let interval_signs = bounds
        .windows(2)
        .map(|w| {
            let d = diff(0.5 * (w[0] + w[1]));
            [sign(d[0], 0), sign(d[1], 1), sign(d[2], 2)]
        })
        .collect();
    Ok(SignPattern {
        lambda,
        window,
        radii,
        crossings: found.into_iter().map(|f| f.1).collect(),
        interval_signs,
        sup_differences: sup,
        identical,
        in_schedule,
    })
}

/// Rescale `w_rec` onto `u_rec(0)` and track the crossings of the three
/// differences; fails when they leave the cyclic schedule.
pub fn sign_pattern_trace(u_rec: &SolutionRecord, w_rec: &SolutionRecord, params: &ProblemParams) -> Result<SignPattern> {
    let pattern = trace_pattern(u_rec, w_rec, params)?;
    if !pattern.in_schedule {
        let order: Vec<String> = pattern
            .crossings
            .iter()
            .zip(&pattern.radii)
            .map(|(d, r)| format!("{d:?}@{r:.6}"))
            .collect();
        return Err(Error::ScheduleViolation(order.join(", ")));
    }
    Ok(pattern)
}

/// Outcome of [`uniqueness_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub params: ProblemParams,
    pub search_box: SearchBox,
    pub n_starts: usize,
    pub seed: u64,
    /// Converged nontrivial starts before deduplication.
    pub converged: usize,
    pub count: usize,
    pub solutions: Vec<SolutionSummary>,
    /// Trace between the first two converged starts (or a solution and
    /// itself when only one converged).
    pub pattern: Option<SignPattern>,
}

impl ScanReport {
    pub fn check(&self) -> Result<()> {
        if self.count > 1 {
            return Err(Error::UniquenessViolated { count: self.count });
        }
        Ok(())
    }
}

/// Multistart over `search`, deduplicated; a count above one contradicts
/// uniqueness and is flagged by [`ScanReport::check`].
pub fn uniqueness_scan(params: &ProblemParams, search: &SearchBox, n_starts: usize, seed: u64) -> Result<ScanReport> {
    uniqueness_scan_with(&Shooter::new(*params), search, n_starts, seed)
}

/// [`uniqueness_scan`] with a configured shooter.
pub fn uniqueness_scan_with(shooter: &Shooter, search: &SearchBox, n_starts: usize, seed: u64) -> Result<ScanReport> {
    let params = &shooter.system.params;
    require_21(params)?;
    let converged = multistart_converged(shooter, search, n_starts, seed)?;
    let pattern = match converged.as_slice() {
        [] => None,
        [only] => Some(trace_pattern(only, only, params)?),
        [first, second, ..] => Some(trace_pattern(first, second, params)?),
    };
    let n_converged = converged.len();
    let distinct = dedup_sorted(converged);
    Ok(ScanReport {
        params: *params,
        search_box: search.clone(),
        n_starts,
        seed,
        converged: n_converged,
        count: distinct.len(),
        solutions: distinct.iter().map(|r| r.summary(None)).collect(),
        pattern,
    })
}
