//! Continuation in the homotopy parameter `t` and blow-up rescaling.
//!
//! The branch starts at the trivial solution of `t = 0` and is followed by
//! pseudo-arclength continuation in `(t, c)`, with `c` the shooting vector.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialProfile;
use crate::io::fmt_f64;
use crate::linalg;
use crate::params::{ChainSystem, Forcing, ProblemParams};
use crate::radial::integrate_chain;
use crate::shooting::{Shooter, SolutionRecord};

/// `sup K_α(1) = 1 / (2^α α! ∏_{j<α} (N + 2j))`, the center value of the
/// Dirichlet solution of `(-Δ)^α w = 1` on the unit ball.
pub fn kalpha_constant(alpha: usize, n: u32) -> Result<f64> {
    if alpha == 0 || n as usize <= 2 * alpha {
        return Err(Error::InvalidParams(format!(
            "requires alpha >= 1 and N > 2*alpha (got alpha={alpha}, N={n})"
        )));
    }
    let mut denom = 1.0;
    for j in 0..alpha {
        denom *= 2.0 * (j + 1) as f64 * (f64::from(n) + 2.0 * j as f64);
    }
    Ok(1.0 / denom)
}

/// Lower bounds on the sup-norms of any nontrivial solution at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBound {
    /// `(C₁ C₂^q)^{-1/(pq-1)}`
    pub u: f64,
    /// `(C₂ C₁^p)^{-1/(pq-1)}`
    pub v: f64,
}

pub fn norm_lower_bound(params: &ProblemParams) -> Result<NormBound> {
    params.validate()?;
    let d = params.p * params.q - 1.0;
    if !(d > 0.0) {
        return Err(Error::InvalidParams(format!(
            "norm bound requires pq > 1 (got pq={})",
            params.p * params.q
        )));
    }
    let c1 = kalpha_constant(params.alpha, params.n)?;
    let c2 = kalpha_constant(params.beta, params.n)?;
    Ok(NormBound {
        u: (c1 * c2.powf(params.q)).powf(-1.0 / d),
        v: (c2 * c1.powf(params.p)).powf(-1.0 / d),
    })
}

/// One converged point on the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub t: f64,
    pub record: SolutionRecord,
    pub arclength: f64,
}

/// Why [`trace_branch`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ReachedTMax,
    NormCeiling,
    /// The branch came back to `t = 0`; the last point is a solution of the
    /// unperturbed system.
    ReturnedToZero,
    SolverFailure,
    StepCollapse,
    MaxPoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub norm_ceiling: f64,
    pub max_points: usize,
    pub corrector_iter: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            ds0: 0.05,
            ds_min: 1e-8,
            ds_max: 0.5,
            norm_ceiling: 1e6,
            max_points: 2000,
            corrector_iter: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub stop: StopReason,
}

impl Branch {
    /// `arclength,t,sup_u,sup_v,residual`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arclength,t,sup_u,sup_v,residual\n");
        for pt in &self.points {
            let row = [
                pt.arclength,
                pt.t,
                pt.record.sup_u,
                pt.record.sup_v,
                pt.record.residual_norm,
            ];
            out.push_str(&row.map(fmt_f64).join(","));
            out.push('\n');
        }
        out
    }

    /// Largest sup-norm over the first nontrivial one.
    pub fn growth_factor(&self) -> f64 {
        let sup = |pt: &BranchPoint| pt.record.sup_u.max(pt.record.sup_v);
        let Some(first) = self.points.iter().find(|pt| pt.record.is_nontrivial()) else {
            return 1.0;
        };
        let top = self.points.iter().map(sup).fold(0.0, f64::max);
        top / sup(first)
    }
}

/// Follow the branch of the `t`-homotopy from `(0, 0)`.
pub fn trace_branch(shooter: &Shooter, t_max: f64, opts: &BranchOptions) -> Result<Branch> {
    let params = shooter.system.params;
    params.validate_homotopy()?;
    if !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be >= 0 (got {t_max})")));
    }
    let tracer = Tracer { base: shooter, params };
    let dim = params.dim();
    let origin = tracer.record(0.0, &vec![0.0; dim])?;
    let mut points = vec![BranchPoint {
        t: 0.0,
        record: origin,
        arclength: 0.0,
    }];
    if t_max == 0.0 {
        return Ok(Branch {
            points,
            stop: StopReason::ReachedTMax,
        });
    }

    // natural-parameter first step
    let mut ds = opts.ds0.min(t_max);
    let first = loop {
        match tracer.at(ds).solve(&vec![0.0; dim]) {
            Ok(rec) => break rec,
            Err(_) => {
                ds *= 0.5;
                if ds < opts.ds_min {
                    return Ok(Branch {
                        points,
                        stop: StopReason::StepCollapse,
                    });
                }
            }
        }
    };
    points.push(BranchPoint {
        t: ds,
        arclength: ds,
        record: first,
    });
    if ds >= t_max {
        return Ok(Branch {
            points,
            stop: StopReason::ReachedTMax,
        });
    }

    let stop = loop {
        if points.len() >= opts.max_points {
            break StopReason::MaxPoints;
        }
        let n = points.len();
        let prev = tracer.state(&points[n - 2]);
        let cur = tracer.state(&points[n - 1]);
        let w = weights(&cur);
        let mut tangent: Vec<f64> = cur
            .iter()
            .zip(&prev)
            .zip(&w)
            .map(|((a, b), w)| (a - b) * w)
            .collect();
        let len = tangent.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(len > 0.0) {
            break StopReason::SolverFailure;
        }
        tangent.iter_mut().for_each(|x| *x /= len);

        let mut step = None;
        while ds >= opts.ds_min {
            let pred: Vec<f64> = cur
                .iter()
                .zip(&tangent)
                .zip(&w)
                .map(|((y, d), w)| y + ds * d / w)
                .collect();
            if pred[0] < 0.0 {
                step = Some(Step::Landing(pred));
                break;
            }
            match tracer.correct(&pred, &cur, &tangent, &w, ds, opts.corrector_iter) {
                Some((y, iters)) if y[0] >= 0.0 => {
                    step = Some(Step::Point(y, iters));
                    break;
                }
                Some((y, _)) => {
                    step = Some(Step::Landing(y));
                    break;
                }
                None => ds *= 0.5,
            }
        }
        let arc = points[n - 1].arclength;
        match step {
            None => break StopReason::StepCollapse,
            Some(Step::Landing(y)) => {
                // interpolate the crossing of t = 0 and solve there
                let f = cur[0] / (cur[0] - y[0]);
                let guess: Vec<f64> = cur[1..]
                    .iter()
                    .zip(&y[1..])
                    .map(|(a, b)| a + f * (b - a))
                    .collect();
                match tracer.at(0.0).solve(&guess) {
                    Ok(rec) => {
                        points.push(BranchPoint {
                            t: 0.0,
                            arclength: arc + f * ds,
                            record: rec,
                        });
                        break StopReason::ReturnedToZero;
                    }
                    Err(_) => break StopReason::SolverFailure,
                }
            }
            Some(Step::Point(y, iters)) => {
                let rec = match tracer.record(y[0], &y[1..]) {
                    Ok(rec) => rec,
                    Err(_) => break StopReason::SolverFailure,
                };
                let (t, big) = (y[0], rec.sup_u.max(rec.sup_v));
                points.push(BranchPoint {
                    t,
                    arclength: arc + ds,
                    record: rec,
                });
                if t >= t_max {
                    break StopReason::ReachedTMax;
                }
                if big >= opts.norm_ceiling {
                    break StopReason::NormCeiling;
                }
                if iters <= 3 {
                    ds = (ds * 1.5).min(opts.ds_max);
                } else if iters > 6 {
                    ds *= 0.7;
                }
            }
        }
    };
    Ok(Branch { points, stop })
}

enum Step {
    Point(Vec<f64>, usize),
    Landing(Vec<f64>),
}

/// Relative metric on `(t, c)`.
fn weights(y: &[f64]) -> Vec<f64> {
    y.iter().map(|x| 1.0 / x.abs().max(1.0)).collect()
}

struct Tracer<'a> {
    base: &'a Shooter,
    params: ProblemParams,
}

impl Tracer<'_> {
    fn at(&self, t: f64) -> Shooter {
        Shooter {
            system: ChainSystem::new(self.params.with_t(t)),
            grid: self.base.grid.clone(),
            opts: self.base.opts,
        }
    }

    fn state(&self, pt: &BranchPoint) -> Vec<f64> {
        let mut y = vec![pt.t];
        y.extend_from_slice(&pt.record.shooting.0);
        y
    }

    fn record(&self, t: f64, c: &[f64]) -> Result<SolutionRecord> {
        let sh = self.at(t);
        let prof = sh.integrate(c)?;
        Ok(SolutionRecord::from_profile(sh.system.params, prof))
    }

    /// Boundary residual plus the arclength condition.
    fn augmented(&self, y: &[f64], cur: &[f64], tangent: &[f64], w: &[f64], ds: f64) -> Result<Vec<f64>> {
        if !(y[0] >= 0.0) {
            return Err(Error::InvalidArgument("negative t".into()));
        }
        let mut out = self.at(y[0]).residual(&y[1..])?;
        let arc: f64 = y
            .iter()
            .zip(cur)
            .zip(tangent.iter().zip(w))
            .map(|((a, b), (d, w))| (a - b) * w * d)
            .sum();
        out.push(arc - ds);
        Ok(out)
    }

    /// Newton on the augmented system; `None` on failure.
    fn correct(
        &self,
        pred: &[f64],
        cur: &[f64],
        tangent: &[f64],
        w: &[f64],
        ds: f64,
        max_iter: usize,
    ) -> Option<(Vec<f64>, usize)> {
        let opts = &self.base.opts;
        let m = pred.len();
        let eval = |y: &[f64]| self.augmented(y, cur, tangent, w, ds).ok();
        let mut y = pred.to_vec();
        let mut res = eval(&y)?;
        for iter in 0..=max_iter {
            let norm = res.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if norm <= opts.tol {
                return Some((y, iter));
            }
            if iter == max_iter {
                break;
            }
            let mut jac = vec![vec![0.0; m]; m];
            for j in 0..m {
                let h = opts.fd_step * (1.0 + y[j].abs());
                let mut yp = y.clone();
                yp[j] += h;
                let (col, step) = match eval(&yp) {
                    Some(c) => (c, h),
                    None => {
                        yp[j] = y[j] - h;
                        (eval(&yp)?, -h)
                    }
                };
                for i in 0..m {
                    jac[i][j] = (col[i] - res[i]) / step;
                }
            }
            let delta = linalg::solve(jac, res.iter().map(|x| -x).collect())?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = y.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
                if trial[0] < 0.0 {
                    // crossing t = 0 is handled by the caller
                    return Some((trial, iter + 1));
                }
                if let Some(r) = eval(&trial) {
                    if r.iter().fold(0.0f64, |a, x| a.max(x.abs())) < norm {
                        y = trial;
                        res = r;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        None
    }
}

/// Blow-up normalization of one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupScaling {
    pub tau: f64,
    pub sigma: f64,
    pub c_n: f64,
    pub a_n: f64,
    pub b_n: f64,
    /// `û(y) = u(y/C_n)/A_n`, `v̂(y) = v(y/C_n)/B_n` on `[0, C_n]`, with
    /// every chain entry scaled accordingly.
    pub rescaled: RadialProfile,
    /// Closure of the rescaled system, shifts `t/B_n` and `t^θ/A_n`.
    pub forcing: Forcing,
}

impl BlowupScaling {
    /// `max(û(0)^{1/τ}, v̂(0)^{1/σ})`
    pub fn normalization(&self) -> f64 {
        let u0 = self.rescaled.chain_u[0][0].max(0.0);
        let v0 = self.rescaled.chain_v[0][0].max(0.0);
        u0.powf(1.0 / self.tau).max(v0.powf(1.0 / self.sigma))
    }

    /// Largest relative deviation between the rescaled profile and a fresh
    /// integration of the rescaled system from its center values.
    pub fn reintegration_defect(&self, params: &ProblemParams) -> Result<f64> {
        let sys = ChainSystem::with_forcing(*params, self.forcing);
        let fresh = integrate_chain(
            &self.rescaled.center(),
            &sys,
            &self.rescaled.grid,
            &Default::default(),
        )?;
        let scale = self.rescaled.sup_u().max(self.rescaled.sup_v());
        let diff = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            a.iter()
                .zip(b)
                .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
                .fold(0.0, f64::max)
        };
        Ok(diff(&fresh.chain_u[..1], &self.rescaled.chain_u[..1])
            .max(diff(&fresh.chain_v[..1], &self.rescaled.chain_v[..1]))
            / scale)
    }
}

/// `C_n = sup_u^{1/τ} + sup_v^{1/σ}`, `A_n = C_n^τ`, `B_n = C_n^σ`.
pub fn rescale_blowup(rec: &SolutionRecord) -> Result<BlowupScaling> {
    let params = rec.params;
    let (tau, sigma) = params.scaling_exponents().ok_or_else(|| {
        Error::InvalidParams(format!(
            "blow-up exponents require pq > 1 (got pq={})",
            params.p * params.q
        ))
    })?;
    if !rec.is_nontrivial() {
        return Err(Error::TrivialSolution);
    }
    let c_n = rec.sup_u.powf(1.0 / tau) + rec.sup_v.powf(1.0 / sigma);
    let a_n = c_n.powf(tau);
    let b_n = c_n.powf(sigma);
    let prof = &rec.profile;
    let scale_chain = |chain: &[Vec<f64>], amp: f64, extra: i32| -> Vec<Vec<f64>> {
        chain
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let f = c_n.powi(-(2 * k as i32) - extra) / amp;
                row.iter().map(|x| x * f).collect()
            })
            .collect()
    };
    let rescaled = RadialProfile {
        grid: prof.grid.scaled(c_n),
        chain_u: scale_chain(&prof.chain_u, a_n, 0),
        chain_u_prime: scale_chain(&prof.chain_u_prime, a_n, 1),
        chain_v: scale_chain(&prof.chain_v, b_n, 0),
        chain_v_prime: scale_chain(&prof.chain_v_prime, b_n, 1),
    };
    let t = params.t;
    let forcing = Forcing::Power {
        shift_u: t / b_n,
        shift_v: if t == 0.0 { 0.0 } else { t.powf(params.theta) / a_n },
    };
    Ok(BlowupScaling {
        tau,
        sigma,
        c_n,
        a_n,
        b_n,
        rescaled,
        forcing,
    })
}

/// Rescaled tail of a branch with Cauchy defects between neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProfile {
    pub tail: Vec<BlowupScaling>,
    pub t: Vec<f64>,
    /// Sup-distance of consecutive rescaled `(û, v̂)` on `[0, min(window, C_n)]`.
    pub cauchy_defects: Vec<f64>,
    pub window: f64,
}

impl LimitProfile {
    pub fn profile(&self) -> &RadialProfile {
        &self.tail.last().unwrap().rescaled
    }

    pub fn to_report(&self) -> BlowupReport {
        let first = &self.tail[0];
        BlowupReport {
            tau: first.tau,
            sigma: first.sigma,
            window: self.window,
            t: self.t.clone(),
            c_n: self.tail.iter().map(|s| s.c_n).collect(),
            a_n: self.tail.iter().map(|s| s.a_n).collect(),
            b_n: self.tail.iter().map(|s| s.b_n).collect(),
            normalization: self.tail.iter().map(|s| s.normalization()).collect(),
            shift_u: self.tail.iter().map(|s| forcing_shifts(s).0).collect(),
            shift_v: self.tail.iter().map(|s| forcing_shifts(s).1).collect(),
            cauchy_defects: self.cauchy_defects.clone(),
        }
    }
}

fn forcing_shifts(s: &BlowupScaling) -> (f64, f64) {
    match s.forcing {
        Forcing::Power { shift_u, shift_v } => (shift_u, shift_v),
        Forcing::Constant { u, v } => (u, v),
    }
}

/// Serializable summary of a [`LimitProfile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub tau: f64,
    pub sigma: f64,
    pub window: f64,
    pub t: Vec<f64>,
    pub c_n: Vec<f64>,
    pub a_n: Vec<f64>,
    pub b_n: Vec<f64>,
    pub normalization: Vec<f64>,
    /// `t/B_n`
    pub shift_u: Vec<f64>,
    /// `t^θ/A_n`
    pub shift_v: Vec<f64>,
    pub cauchy_defects: Vec<f64>,
}

/// Rescale the last `tail` points of `branch` and compare them on
/// `[0, window]`. Requires the sup-norm to have grown by `min_growth`.
pub fn limit_profile(branch: &Branch, tail: usize, window: f64, min_growth: f64) -> Result<LimitProfile> {
    if tail < 2 || !(window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need tail >= 2 and window > 0 (got {tail}, {window})"
        )));
    }
    let factor = branch.growth_factor();
    if !(factor >= min_growth) {
        return Err(Error::InsufficientGrowth {
            factor,
            required: min_growth,
        });
    }
    let pts: Vec<&BranchPoint> = branch
        .points
        .iter()
        .filter(|pt| pt.record.is_nontrivial())
        .collect();
    if pts.len() < tail {
        return Err(Error::InsufficientGrowth {
            factor,
            required: min_growth,
        });
    }
    let chosen = &pts[pts.len() - tail..];
    let scaled = chosen
        .iter()
        .map(|pt| rescale_blowup(&pt.record))
        .collect::<Result<Vec<_>>>()?;
    let mut defects = Vec::with_capacity(tail - 1);
    for pair in scaled.windows(2) {
        let reach = window.min(pair[0].c_n).min(pair[1].c_n);
        let samples = 400;
        let mut worst = 0.0f64;
        for i in 0..=samples {
            let y = reach * i as f64 / samples as f64;
            let a = pair[0].rescaled.state_interp(y);
            let b = pair[1].rescaled.state_interp(y);
            let alpha = pair[0].rescaled.alpha();
            worst = worst
                .max((a.values[0] - b.values[0]).abs())
                .max((a.values[alpha] - b.values[alpha]).abs());
        }
        defects.push(worst);
    }
    Ok(LimitProfile {
        tail: scaled,
        t: chosen.iter().map(|pt| pt.t).collect(),
        cauchy_defects: defects,
        window,
    })
}
