//! Shooting on the center values of the radial chain.
//!
//! The full chain of both equations is integrated jointly from the origin;
//! Newton then matches the `α + β` Dirichlet conditions at the outer radius.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ChainState, RadialGrid, RadialProfile};
use crate::linalg;
use crate::params::{ChainSystem, ProblemParams};
use crate::radial::{integrate_chain, integrate_chain_to, IvpOptions};

/// Center values below this magnitude count as the trivial solution.
pub const TRIVIAL_TOL: f64 = 1e-6;

/// Relative distance under which two shooting vectors are the same solution.
pub const DEDUP_TOL: f64 = 1e-5;

/// `(u_0(0), …, u_{α-1}(0), v_0(0), …, v_{β-1}(0))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingVector(pub Vec<f64>);

impl ShootingVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn is_trivial(&self) -> bool {
        self.max_abs() <= TRIVIAL_TOL
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Same solution up to [`DEDUP_TOL`] relative.
    pub fn same_as(&self, other: &Self) -> bool {
        let scale = self.max_abs().max(other.max_abs()).max(f64::MIN_POSITIVE);
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| (a - b).abs() <= DEDUP_TOL * scale)
    }
}

/// Pure radial derivatives at the outer radius,
/// `(u, u', …, u^{(α-1)}, v, v', …, v^{(β-1)})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryResidual {
    pub res: Vec<f64>,
}

impl BoundaryResidual {
    pub fn max_norm(&self) -> f64 {
        self.res.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Derivatives `y^{(j)}(r)`, `j = 0..=order`, of the base entry of one chain
/// from its values and slopes, by exact recursion on
/// `y_k'' = -y_{k+1} - (N-1)/r · y_k'`.
///
/// Each derivative is a linear form in the chain slots with Laurent
/// coefficients in `r`; `order` may not exceed `2·len - 1`.
pub fn radial_derivatives(values: &[f64], derivs: &[f64], r: f64, n: u32, order: usize) -> Vec<f64> {
    let len = values.len();
    assert!(order < 2 * len, "derivative order {order} needs the closure");
    let damp = f64::from(n) - 1.0;
    // key: (slot, power of r); slot 2k = value k, 2k+1 = slope k
    let mut form: BTreeMap<(usize, i32), f64> = BTreeMap::new();
    form.insert((0, 0), 1.0);
    let mut out = Vec::with_capacity(order + 1);
    for j in 0..=order {
        out.push(
            form.iter()
                .map(|(&(slot, pw), c)| {
                    let x = if slot % 2 == 0 {
                        values[slot / 2]
                    } else {
                        derivs[slot / 2]
                    };
                    c * r.powi(pw) * x
                })
                .sum(),
        );
        if j == order {
            break;
        }
        let mut next: BTreeMap<(usize, i32), f64> = BTreeMap::new();
        let mut add = |key: (usize, i32), c: f64| *next.entry(key).or_insert(0.0) += c;
        for (&(slot, pw), &c) in &form {
            if pw != 0 {
                add((slot, pw - 1), c * f64::from(pw));
            }
            if slot % 2 == 0 {
                add((slot + 1, pw), c);
            } else {
                let k = slot / 2;
                add((2 * (k + 1), pw), -c);
                add((slot, pw - 1), -c * damp);
            }
        }
        next.retain(|_, c| *c != 0.0);
        form = next;
    }
    out
}

fn boundary_from_state(st: &ChainState, params: &ProblemParams) -> BoundaryResidual {
    let a = params.alpha;
    let b = params.beta;
    let mut res = radial_derivatives(&st.values[..a], &st.derivs[..a], st.radius, params.n, a - 1);
    res.extend(radial_derivatives(
        &st.values[a..],
        &st.derivs[a..],
        st.radius,
        params.n,
        b - 1,
    ));
    BoundaryResidual { res }
}

/// Dirichlet residual at the last grid node (`r = 1` for the ball).
pub fn boundary_residual(profile: &RadialProfile, params: &ProblemParams) -> BoundaryResidual {
    boundary_from_state(&profile.state_at(profile.grid.len() - 1), params)
}

/// `α`-th (resp. `β`-th) derivative along the inward normal at the outer
/// radius, `(-1)^α u^{(α)}(1)`.
pub fn inward_boundary_derivatives(profile: &RadialProfile, params: &ProblemParams) -> (f64, f64) {
    let st = profile.state_at(profile.grid.len() - 1);
    let a = params.alpha;
    let b = params.beta;
    let du = radial_derivatives(&st.values[..a], &st.derivs[..a], st.radius, params.n, a)[a];
    let dv = radial_derivatives(&st.values[a..], &st.derivs[a..], st.radius, params.n, b)[b];
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    (sign(a) * du, sign(b) * dv)
}

/// One converged solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub params: ProblemParams,
    pub shooting: ShootingVector,
    pub profile: RadialProfile,
    pub residual_norm: f64,
    pub sup_u: f64,
    pub sup_v: f64,
}

impl SolutionRecord {
    pub fn from_profile(params: ProblemParams, profile: RadialProfile) -> Self {
        let residual_norm = boundary_residual(&profile, &params).max_norm();
        Self {
            params,
            shooting: ShootingVector(profile.center()),
            sup_u: profile.sup_u(),
            sup_v: profile.sup_v(),
            residual_norm,
            profile,
        }
    }

    pub fn is_nontrivial(&self) -> bool {
        !self.shooting.is_trivial()
    }
}

/// JSON form of a [`SolutionRecord`]; the profile itself goes to CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub params: ProblemParams,
    pub shooting: ShootingVector,
    pub residual_norm: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub profile_csv_path: Option<String>,
    pub shape_report: ShapeReport,
}

impl SolutionRecord {
    pub fn summary(&self, profile_csv_path: Option<String>) -> SolutionSummary {
        SolutionSummary {
            params: self.params,
            shooting: self.shooting.clone(),
            residual_norm: self.residual_norm,
            sup_u: self.sup_u,
            sup_v: self.sup_v,
            profile_csv_path,
            shape_report: check_solution_shape(self),
        }
    }
}

/// Damped Newton controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub max_halvings: usize,
    pub ivp: IvpOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 60,
            fd_step: 1e-6,
            max_halvings: 20,
            ivp: IvpOptions::default(),
        }
    }
}

/// A configured shooting problem: closure, report grid and Newton controls.
#[derive(Debug, Clone)]
pub struct Shooter {
    pub system: ChainSystem,
    pub grid: RadialGrid,
    pub opts: NewtonOptions,
}

impl Shooter {
    pub fn new(params: ProblemParams) -> Self {
        Self::with_system(ChainSystem::new(params))
    }

    pub fn with_system(system: ChainSystem) -> Self {
        Self {
            system,
            grid: RadialGrid::unit(),
            opts: NewtonOptions::default(),
        }
    }

    pub fn grid(mut self, grid: RadialGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn options(mut self, opts: NewtonOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Boundary residual of the IVP started at `c`.
    pub fn residual(&self, c: &[f64]) -> Result<Vec<f64>> {
        let st = integrate_chain_to(c, &self.system, self.grid.r_max(), &self.opts.ivp)?;
        Ok(boundary_from_state(&st, &self.system.params).res)
    }

    pub fn integrate(&self, c: &[f64]) -> Result<RadialProfile> {
        integrate_chain(c, &self.system, &self.grid, &self.opts.ivp)
    }

    /// `c` moved along the scaling orbit `u_k(0) ↦ λ^{τ+2k} u_k(0)`,
    /// `v_k(0) ↦ λ^{σ+2k} v_k(0)`; `None` unless `pq > 1`.
    pub fn scale_center(&self, c: &[f64], lambda: f64) -> Option<Vec<f64>> {
        let params = &self.system.params;
        let (tau, sigma) = params.scaling_exponents()?;
        let a = params.alpha;
        Some(
            c.iter()
                .enumerate()
                .map(|(i, &x)| {
                    let e = if i < a {
                        tau + 2.0 * i as f64
                    } else {
                        sigma + 2.0 * (i - a) as f64
                    };
                    x * lambda.powf(e)
                })
                .collect(),
        )
    }

    /// Move `c` along the scaling orbit so that the first zero of `u` or `v`
    /// sits at the outer radius; without a zero, so that blow-up happens at
    /// twice the outer radius. Returns `c` unchanged when `pq ≤ 1` or the
    /// IVP neither vanishes nor blows up within `64` outer radii.
    pub fn normalize_start(&self, c: &[f64]) -> Vec<f64> {
        self.landmark_radius(c)
            .and_then(|z| self.scale_center(c, z / self.grid.r_max()))
            .unwrap_or_else(|| c.to_vec())
    }

    /// First sign change of `u` or `v`, else half the blow-up radius.
    fn landmark_radius(&self, c: &[f64]) -> Option<f64> {
        let mut reach = 64.0 * self.grid.r_max();
        let mut blowup = None;
        for _ in 0..4 {
            let grid = RadialGrid::uniform(1025, reach).ok()?;
            match integrate_chain(c, &self.system, &grid, &self.opts.ivp) {
                Ok(prof) => {
                    let r = grid.nodes();
                    let (u, v) = (prof.u(), prof.v());
                    let zero = (1..r.len()).find_map(|i| {
                        [(u[i - 1], u[i]), (v[i - 1], v[i])]
                            .into_iter()
                            .filter(|&(y0, y1)| y0 > 0.0 && y1 <= 0.0)
                            .map(|(y0, y1)| r[i - 1] + (r[i] - r[i - 1]) * y0 / (y0 - y1))
                            .reduce(f64::min)
                    });
                    return zero.or(blowup.map(|b: f64| 0.5 * b));
                }
                Err(Error::Divergence { radius }) if radius > 0.0 => {
                    blowup = Some(radius);
                    reach = 0.999 * radius;
                }
                Err(_) => return None,
            }
        }
        None
    }

    /// Damped Newton with forward-difference Jacobian.
    pub fn solve(&self, c0: &[f64]) -> Result<SolutionRecord> {
        self.newton(c0, false)
    }

    /// Newton on the residual divided componentwise by powers of the scale
    /// `μ(c) = (Σ |c_i|^{2/e_i})^{1/2}` matching the scaling orbit, so that
    /// the trivial solution is no longer a root. Convergence is still
    /// judged on the plain residual.
    pub fn solve_deflated(&self, c0: &[f64]) -> Result<SolutionRecord> {
        self.newton(c0, true)
    }

    /// Start for a positive solution: normalize `c0`, run the deflated
    /// iteration and fall back to plain Newton from the normalized start.
    pub fn solve_nontrivial(&self, c0: &[f64]) -> Result<SolutionRecord> {
        let start = self.normalize_start(c0);
        match self.solve_deflated(&start) {
            Ok(rec) if rec.is_nontrivial() => Ok(rec),
            _ => self.solve(&start),
        }
    }

    fn newton(&self, c0: &[f64], deflate: bool) -> Result<SolutionRecord> {
        let dim = self.system.params.dim();
        if c0.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{} center values, expected {dim}",
                c0.len()
            )));
        }
        let mut x = c0.to_vec();
        let (mut raw, mut merit) = self.merit(&x, deflate)?;
        let mut iter = 0;
        while max_abs(&raw) > self.opts.tol {
            if iter >= self.opts.max_iter {
                return Err(Error::NewtonStalled {
                    iterations: iter,
                    residual: max_abs(&raw),
                });
            }
            iter += 1;
            let jac = self.jacobian(&x, &merit, deflate)?;
            let rhs: Vec<f64> = merit.iter().map(|v| -v).collect();
            let step = linalg::solve(jac, rhs).ok_or(Error::SingularJacobian { iteration: iter })?;
            let norm = max_abs(&merit);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=self.opts.max_halvings {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
                if let Ok((r, m)) = self.merit(&trial, deflate) {
                    let n = max_abs(&m);
                    if n.is_finite() && n < norm {
                        x = trial;
                        raw = r;
                        merit = m;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(Error::NewtonStalled {
                    iterations: iter,
                    residual: max_abs(&raw),
                });
            }
        }
        let c = x;
        let profile = self.integrate(&c)?;
        Ok(SolutionRecord {
            params: self.system.params,
            shooting: ShootingVector(c),
            sup_u: profile.sup_u(),
            sup_v: profile.sup_v(),
            residual_norm: max_abs(&raw),
            profile,
        })
    }

    /// Raw residual and the residual Newton actually drives to zero.
    fn merit(&self, c: &[f64], deflate: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let raw = self.residual(c)?;
        let merit = if deflate {
            let params = &self.system.params;
            let (tau, sigma) = params.scaling_exponents().unwrap_or((2.0, 2.0));
            let a = params.alpha;
            let ce = |i: usize| if i < a { tau + 2.0 * i as f64 } else { sigma + 2.0 * (i - a) as f64 };
            let re = |i: usize| if i < a { tau + i as f64 } else { sigma + (i - a) as f64 };
            let mu = c
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powf(2.0 / ce(i)))
                .sum::<f64>()
                .sqrt();
            raw.iter().enumerate().map(|(i, v)| v / mu.powf(re(i))).collect()
        } else {
            raw.clone()
        };
        Ok((raw, merit))
    }

    fn jacobian(&self, x: &[f64], base: &[f64], deflate: bool) -> Result<Vec<Vec<f64>>> {
        let dim = x.len();
        let mut jac = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let h = self.opts.fd_step * (1.0 + x[j].abs());
            let mut xp = x.to_vec();
            xp[j] += h;
            let (col, step) = match self.merit(&xp, deflate) {
                Ok((_, m)) => (m, h),
                Err(_) => {
                    xp[j] = x[j] - h;
                    (self.merit(&xp, deflate)?.1, -h)
                }
            };
            for i in 0..dim {
                jac[i][j] = (col[i] - base[i]) / step;
            }
        }
        Ok(jac)
    }
}
fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| {
        if x.is_nan() {
            f64::INFINITY
        } else {
            m.max(x.abs())
        }
    })
}

/// Profile of the IVP started at `c` on `grid`.
pub fn integrate_ivp(c: &ShootingVector, params: &ProblemParams, grid: &RadialGrid) -> Result<RadialProfile> {
    integrate_chain(&c.0, &ChainSystem::new(*params), grid, &IvpOptions::default())
}

/// Newton solve of the Dirichlet problem from `c0` with default controls.
pub fn newton_solve(c0: &ShootingVector, params: &ProblemParams) -> Result<SolutionRecord> {
    params.validate()?;
    Shooter::new(*params).solve(&c0.0)
}

/// Per-coordinate sampling ranges for multistart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchBox {
    pub ranges: Vec<(f64, f64)>,
}

impl SearchBox {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("bad range [{lo}, {hi}]")));
            }
        }
        Ok(Self { ranges })
    }

    /// The same `[lo, hi]` on every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    /// Log-uniform on strictly positive ranges, uniform otherwise.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.ranges
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else if lo > 0.0 {
                    (rng.gen_range(lo.ln()..hi.ln())).exp()
                } else {
                    rng.gen_range(lo..hi)
                }
            })
            .collect()
    }
}

/// Deterministic sequence of start points for `seed`.
pub fn start_points(search: &SearchBox, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_starts).map(|_| search.sample(&mut rng)).collect()
}

/// [`Shooter::solve_nontrivial`] from `n_starts` seeded starts; returns the
/// distinct nontrivial solutions sorted by shooting vector.
pub fn multistart_search(
    shooter: &Shooter,
    search: &SearchBox,
    n_starts: usize,
    seed: u64,
) -> Result<Vec<SolutionRecord>> {
    Ok(dedup_sorted(multistart_converged(shooter, search, n_starts, seed)?))
}

/// Every converged nontrivial multistart result, in start order.
pub fn multistart_converged(
    shooter: &Shooter,
    search: &SearchBox,
    n_starts: usize,
    seed: u64,
) -> Result<Vec<SolutionRecord>> {
    let dim = shooter.system.params.dim();
    if n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be at least 1".into()));
    }
    if search.ranges.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "search box has {} ranges, expected {dim}",
            search.ranges.len()
        )));
    }
    let starts = start_points(search, n_starts, seed);
    let outcomes: Vec<Option<SolutionRecord>> = starts
        .par_iter()
        .map(|c0| {
            shooter
                .solve_nontrivial(c0)
                .ok()
                .filter(|rec| rec.is_nontrivial() && rec.residual_norm <= shooter.opts.tol)
        })
        .collect();
    Ok(outcomes.into_iter().flatten().collect())
}

/// Keep the first record of every cluster, then sort by shooting vector.
pub fn dedup_sorted(records: impl IntoIterator<Item = SolutionRecord>) -> Vec<SolutionRecord> {
    let mut kept: Vec<SolutionRecord> = Vec::new();
    for rec in records {
        if !kept.iter().any(|k| k.shooting.same_as(&rec.shooting)) {
            kept.push(rec);
        }
    }
    kept.sort_by(|a, b| {
        a.shooting
            .0
            .iter()
            .zip(&b.shooting.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    kept
}

/// A failed shape invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeViolation {
    NotNontrivial,
    NonPositive { component: String, radius: f64 },
    NotDecreasing { component: String, radius: f64 },
    MaxNotAtOrigin { component: String },
    BoundaryDerivativeSign { component: String, value: f64 },
}

/// Outcome of [`check_solution_shape`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub violations: Vec<ShapeViolation>,
    /// `(-1)^α u^{(α)}(1)`, positive by the boundary-point lemma.
    pub inward_derivative_u: f64,
    pub inward_derivative_v: f64,
}

impl ShapeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Positivity on `[0,1)`, strict decrease on `(0,1)`, maxima at the origin,
/// and the sign of the highest normal derivatives at the boundary.
pub fn check_solution_shape(rec: &SolutionRecord) -> ShapeReport {
    let (du, dv) = inward_boundary_derivatives(&rec.profile, &rec.params);
    let mut report = ShapeReport {
        violations: Vec::new(),
        inward_derivative_u: du,
        inward_derivative_v: dv,
    };
    if !rec.is_nontrivial() {
        report.violations.push(ShapeViolation::NotNontrivial);
        return report;
    }
    let prof = &rec.profile;
    let r = prof.grid.nodes();
    let last = r.len() - 1;
    for (name, vals, slopes) in [
        ("u", prof.u(), &prof.chain_u_prime[0]),
        ("v", prof.v(), &prof.chain_v_prime[0]),
    ] {
        if let Some(i) = (0..last).find(|&i| !(vals[i] > 0.0)) {
            report.violations.push(ShapeViolation::NonPositive {
                component: name.into(),
                radius: r[i],
            });
        }
        if let Some(i) = (1..last).find(|&i| !(slopes[i] < 0.0)) {
            report.violations.push(ShapeViolation::NotDecreasing {
                component: name.into(),
                radius: r[i],
            });
        }
        if vals.iter().skip(1).any(|x| *x > vals[0]) {
            report.violations.push(ShapeViolation::MaxNotAtOrigin {
                component: name.into(),
            });
        }
    }
    for (name, value) in [("u", du), ("v", dv)] {
        if !(value > 0.0) {
            report.violations.push(ShapeViolation::BoundaryDerivativeSign {
                component: name.into(),
                value,
            });
        }
    }
    report
}
