//! Radial calculus for polyharmonic chains.
//!
//! A radial solution of `(-Δ)^α u = f` is carried as the chain
//! `u_k = (-Δ)^k u`, `k < α`, each entry obeying the second-order radial
//! equation `u_k'' + (N-1)/r · u_k' = -u_{k+1}`, closed at the top by the
//! nonlinearity. Regularity at the origin forces every `u_k'(0) = 0`.

use crate::error::{Error, Result};
use crate::grid::{lagrange6, ChainState, RadialFunction, RadialGrid, RadialProfile};
use crate::ode::{self, StepperOptions};
use crate::params::{ChainSystem, ProblemParams};
use crate::quadrature::GaussLegendre;

/// Default start radius of the IVP (origin series below it).
pub const ORIGIN_RADIUS: f64 = 1e-4;

/// Options for marching the chain IVP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpOptions {
    pub stepper: StepperOptions,
    pub r0: f64,
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self {
            stepper: StepperOptions::default(),
            r0: ORIGIN_RADIUS,
        }
    }
}

impl IvpOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.stepper.rtol = tol;
        self.stepper.atol = tol;
        self
    }
}

/// `d/dr` of every slot of `state` for the Lane-Emden chain of `params`.
pub fn chain_rhs(state: &ChainState, params: &ProblemParams) -> Result<ChainState> {
    chain_rhs_with(state, &ChainSystem::new(*params))
}

/// As [`chain_rhs`] for an arbitrary closure.
pub fn chain_rhs_with(state: &ChainState, sys: &ChainSystem) -> Result<ChainState> {
    if !(state.radius > 0.0) {
        return Err(Error::OriginRadius(state.radius));
    }
    let dim = sys.params.dim();
    if state.values.len() != dim || state.derivs.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "chain state has {} entries, expected {dim}",
            state.values.len()
        )));
    }
    let mut dy = vec![0.0; 2 * dim];
    flat_rhs(sys, state.radius, &state.to_flat(), &mut dy);
    Ok(ChainState::from_flat(state.radius, &dy))
}

/// Right-hand side in the interleaved layout `[y_0, y_0', y_1, y_1', …]`.
#[inline]
pub(crate) fn flat_rhs(sys: &ChainSystem, r: f64, y: &[f64], dy: &mut [f64]) {
    let a = sys.params.alpha;
    let b = sys.params.beta;
    let damp = (sys.params.nf() - 1.0) / r;
    let (top_u, top_v) = sys.closures(y[0], y[2 * a]);
    for k in 0..a + b {
        let next = if k + 1 == a {
            top_u
        } else if k + 1 == a + b {
            top_v
        } else {
            y[2 * (k + 1)]
        };
        let d = y[2 * k + 1];
        dy[2 * k] = d;
        dy[2 * k + 1] = -next - damp * d;
    }
}

/// Second-order even series start at `r0`:
/// `u_k(r0) = u_k(0) - u_{k+1}(0) r0²/(2N)`, `u_k'(r0) = -u_{k+1}(0) r0/N`.
pub fn taylor_origin(center: &[f64], r0: f64, params: &ProblemParams) -> Result<ChainState> {
    taylor_origin_with(center, r0, &ChainSystem::new(*params))
}

pub fn taylor_origin_with(center: &[f64], r0: f64, sys: &ChainSystem) -> Result<ChainState> {
    if !(r0 > 0.0) {
        return Err(Error::OriginRadius(r0));
    }
    let dim = sys.params.dim();
    if center.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "{} center values, expected {dim}",
            center.len()
        )));
    }
    Ok(series_state(center, r0, sys))
}

fn series_state(center: &[f64], r: f64, sys: &ChainSystem) -> ChainState {
    let n = sys.params.nf();
    let dim = center.len();
    let mut st = ChainState::zeros(r, dim);
    for k in 0..dim {
        let next = sys.next_center(center, k);
        st.values[k] = center[k] - next * r * r / (2.0 * n);
        st.derivs[k] = -next * r / n;
    }
    st
}

/// Radial kernel of `-Δ` with prescribed center value:
/// `K(r, s) = s/(N-2) · (1 - (s/r)^{N-2})`, for `0 ≤ s ≤ r`.
pub fn kernel_eval(r: f64, s: f64, n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("kernel needs N >= 3, got {n}")));
    }
    if !(s >= 0.0) || s > r {
        return Err(Error::InvalidArgument(format!(
            "kernel needs 0 <= s <= r (got s={s}, r={r})"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let m = (n - 2) as i32;
    Ok(s / f64::from(n - 2) * (1.0 - (s / r).powi(m)))
}

/// Cumulative `∫_0^{r_i} s^{e} f(s) ds` at every node, 8-point rule per
/// interval with six-node Lagrange interpolation of `f`.
fn cumulative_moment(f: &RadialFunction, exponent: i32) -> Vec<f64> {
    let rule = GaussLegendre::eight();
    let x = f.grid.nodes();
    let mut acc = vec![0.0; x.len()];
    for i in 1..x.len() {
        let piece: f64 = rule
            .points(x[i - 1], x[i])
            .map(|(s, w)| w * s.powi(exponent) * lagrange6(x, &f.values, s))
            .sum();
        acc[i] = acc[i - 1] + piece;
    }
    acc
}

/// Radial solution of `-Δu = f` with `u(0) = u_center`:
/// `u(r) = u_center - ∫_0^r K(r, s) f(s) ds`.
pub fn inverse_laplacian_ivp(f: &RadialFunction, u_center: f64, n: u32) -> Result<RadialFunction> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("kernel needs N >= 3, got {n}")));
    }
    let first = cumulative_moment(f, 1);
    let top = cumulative_moment(f, n as i32 - 1);
    let nm2 = f64::from(n - 2);
    let x = f.grid.nodes();
    let values = x
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if i == 0 {
                u_center
            } else {
                u_center - (first[i] - r.powi(2 - n as i32) * top[i]) / nm2
            }
        })
        .collect();
    RadialFunction::new(f.grid.clone(), values)
}

/// `r^{1-N} ∫_0^r s^{N-1} f(s) ds`: the radial derivative of a chain entry
/// whose Laplacian is `f`.
pub fn volterra_derivative(f_next: &RadialFunction, r: f64, n: u32) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::OriginRadius(r));
    }
    let x = f_next.grid.nodes();
    if r > f_next.grid.r_max() * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "radius {r} outside grid [0, {}]",
            f_next.grid.r_max()
        )));
    }
    let rule = GaussLegendre::eight();
    let e = n as i32 - 1;
    let mut acc = 0.0;
    for w in x.windows(2) {
        if w[0] >= r {
            break;
        }
        let hi = w[1].min(r);
        acc += rule
            .points(w[0], hi)
            .map(|(s, wt)| wt * (s / r).powi(e) * lagrange6(x, &f_next.values, s))
            .sum::<f64>();
    }
    Ok(acc)
}

/// March the chain IVP from the center values `c` over `grid`.
///
/// Node 0 carries the center values; nodes inside `(0, r0]` use the origin
/// series; the remaining nodes are dense output of the stepper.
pub fn integrate_chain(
    c: &[f64],
    sys: &ChainSystem,
    grid: &RadialGrid,
    opts: &IvpOptions,
) -> Result<RadialProfile> {
    let dim = sys.params.dim();
    check_center(c, dim)?;
    let nodes = grid.nodes();
    let r0 = opts.r0.min(grid.r_max());
    let split = nodes.partition_point(|&r| r <= r0);
    let mut states = Vec::with_capacity(nodes.len());
    states.push(ChainState {
        radius: 0.0,
        values: c.to_vec(),
        derivs: vec![0.0; dim],
    });
    for &r in &nodes[1..split] {
        states.push(series_state(c, r, sys));
    }
    if split < nodes.len() {
        let start = series_state(c, r0, sys);
        let sol = ode::integrate(
            |r, y, dy| flat_rhs(sys, r, y, dy),
            r0,
            &start.to_flat(),
            grid.r_max(),
            &nodes[split..],
            &opts.stepper,
        )?;
        for (&r, y) in nodes[split..].iter().zip(&sol.outputs) {
            states.push(ChainState::from_flat(r, y));
        }
    }
    Ok(RadialProfile::from_states(
        grid.clone(),
        sys.params.alpha,
        sys.params.beta,
        &states,
    ))
}

/// Chain state at `r_end` only.
pub fn integrate_chain_to(
    c: &[f64],
    sys: &ChainSystem,
    r_end: f64,
    opts: &IvpOptions,
) -> Result<ChainState> {
    check_center(c, sys.params.dim())?;
    let r0 = opts.r0.min(r_end);
    let start = series_state(c, r0, sys);
    if r_end <= r0 {
        return Ok(series_state(c, r_end, sys));
    }
    let sol = ode::integrate(
        |r, y, dy| flat_rhs(sys, r, y, dy),
        r0,
        &start.to_flat(),
        r_end,
        &[],
        &opts.stepper,
    )?;
    Ok(ChainState::from_flat(r_end, &sol.end))
}

fn check_center(c: &[f64], dim: usize) -> Result<()> {
    if c.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "{} center values, expected {dim}",
            c.len()
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite center value".into()));
    }
    Ok(())
}

/// Discrete `-Δ` by central differences at interior nodes of a uniform grid;
/// endpoints are reported as NaN.
pub fn discrete_neg_laplacian(u: &RadialFunction, n: u32) -> Vec<f64> {
    let x = u.grid.nodes();
    let m = x.len();
    let mut out = vec![f64::NAN; m];
    for i in 1..m - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let d1 = (u.values[i + 1] * h0 * h0 - u.values[i - 1] * h1 * h1
            + u.values[i] * (h1 * h1 - h0 * h0))
            / (h0 * h1 * (h0 + h1));
        let d2 = 2.0 * (h0 * u.values[i + 1] - (h0 + h1) * u.values[i] + h1 * u.values[i - 1])
            / (h0 * h1 * (h0 + h1));
        out[i] = -(d2 + f64::from(n - 1) / x[i] * d1);
    }
    out
}
