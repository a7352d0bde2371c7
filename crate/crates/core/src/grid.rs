//! Radial grids, single radial functions and chain profiles.

use crate::error::{Error, Result};

/// Minimum number of intervals on a grid.
pub const MIN_INTERVALS: usize = 16;

/// Default report grid size (nodes).
pub const DEFAULT_NODES: usize = 512;

/// Strictly increasing radii starting at exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be exactly 0".into()));
        }
        if nodes.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// `count` equispaced nodes on `[0, r_max]`.
    pub fn uniform(count: usize, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if count < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        let h = r_max / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| i as f64 * h).collect();
        nodes[count - 1] = r_max;
        Self::new(nodes)
    }

    /// Default 512-node grid on the unit interval.
    pub fn unit() -> Self {
        Self::uniform(DEFAULT_NODES, 1.0).expect("default grid is valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Multiply every node by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut nodes: Vec<f64> = self.nodes.iter().map(|r| r * factor).collect();
        nodes[0] = 0.0;
        Self { nodes }
    }

    /// Index `i` with `nodes[i] <= r < nodes[i+1]`, clamped to the last interval.
    pub fn locate(&self, r: f64) -> usize {
        let n = self.nodes.len();
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }
}

/// One radial function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    /// Local Lagrange interpolation through the six nearest nodes.
    pub fn interpolate(&self, r: f64) -> f64 {
        lagrange6(self.grid.nodes(), &self.values, r)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn lagrange6(x: &[f64], y: &[f64], r: f64) -> f64 {
    const WIDTH: usize = 6;
    let n = x.len();
    let i = {
        let idx = match x.binary_search_by(|v| v.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => return y[i],
            Err(i) => i,
        };
        idx.saturating_sub(WIDTH / 2).min(n.saturating_sub(WIDTH))
    };
    let hi = (i + WIDTH).min(n);
    let mut acc = 0.0;
    for j in i..hi {
        let mut w = 1.0;
        for k in i..hi {
            if k != j {
                w *= (r - x[k]) / (x[j] - x[k]);
            }
        }
        acc += w * y[j];
    }
    acc
}

/// Cubic Hermite interpolation on `[x0, x1]` from values and slopes.
#[inline]
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, r: f64) -> f64 {
    let h = x1 - x0;
    let s = (r - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

/// Derivative of [`hermite`] with respect to `r`.
#[inline]
pub(crate) fn hermite_slope(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, r: f64) -> f64 {
    let h = x1 - x0;
    let s = (r - x0) / h;
    let s2 = s * s;
    ((6.0 * s2 - 6.0 * s) * y0 + (-6.0 * s2 + 6.0 * s) * y1) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * d0
        + (3.0 * s2 - 2.0 * s) * d1
}

/// Values and radial derivatives of every chain entry at one radius.
///
/// Entry layout is `u_0, …, u_{α-1}, v_0, …, v_{β-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub radius: f64,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl ChainState {
    pub fn zeros(radius: f64, dim: usize) -> Self {
        Self {
            radius,
            values: vec![0.0; dim],
            derivs: vec![0.0; dim],
        }
    }

    /// Interleaved `[y_0, y_0', y_1, y_1', …]` layout used by the stepper.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.derivs)
            .flat_map(|(v, d)| [*v, *d])
            .collect()
    }

    pub fn from_flat(radius: f64, flat: &[f64]) -> Self {
        let values = flat.iter().step_by(2).copied().collect();
        let derivs = flat.iter().skip(1).step_by(2).copied().collect();
        Self {
            radius,
            values,
            derivs,
        }
    }
}

/// Discretized chain `u_k = (-Δ)^k u`, `v_k = (-Δ)^k v` with first radial
/// derivatives, on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    /// `chain_u[k][i] = u_k(r_i)`
    pub chain_u: Vec<Vec<f64>>,
    pub chain_u_prime: Vec<Vec<f64>>,
    pub chain_v: Vec<Vec<f64>>,
    pub chain_v_prime: Vec<Vec<f64>>,
}

impl RadialProfile {
    pub fn zeros(grid: RadialGrid, alpha: usize, beta: usize) -> Self {
        let m = grid.len();
        Self {
            chain_u: vec![vec![0.0; m]; alpha],
            chain_u_prime: vec![vec![0.0; m]; alpha],
            chain_v: vec![vec![0.0; m]; beta],
            chain_v_prime: vec![vec![0.0; m]; beta],
            grid,
        }
    }

    /// Assemble a profile from per-node chain states (one per grid node).
    pub fn from_states(grid: RadialGrid, alpha: usize, beta: usize, states: &[ChainState]) -> Self {
        let mut out = Self::zeros(grid, alpha, beta);
        for (i, st) in states.iter().enumerate() {
            for k in 0..alpha {
                out.chain_u[k][i] = st.values[k];
                out.chain_u_prime[k][i] = st.derivs[k];
            }
            for k in 0..beta {
                out.chain_v[k][i] = st.values[alpha + k];
                out.chain_v_prime[k][i] = st.derivs[alpha + k];
            }
        }
        out
    }

    pub fn alpha(&self) -> usize {
        self.chain_u.len()
    }

    pub fn beta(&self) -> usize {
        self.chain_v.len()
    }

    pub fn u(&self) -> &[f64] {
        &self.chain_u[0]
    }

    pub fn v(&self) -> &[f64] {
        &self.chain_v[0]
    }

    pub fn sup_u(&self) -> f64 {
        self.u().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sup_v(&self) -> f64 {
        self.v().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Chain state at node `i`.
    pub fn state_at(&self, i: usize) -> ChainState {
        let values = self
            .chain_u
            .iter()
            .chain(&self.chain_v)
            .map(|c| c[i])
            .collect();
        let derivs = self
            .chain_u_prime
            .iter()
            .chain(&self.chain_v_prime)
            .map(|c| c[i])
            .collect();
        ChainState {
            radius: self.grid.nodes()[i],
            values,
            derivs,
        }
    }

    /// Center values `(u_0(0), …, v_{β-1}(0))`.
    pub fn center(&self) -> Vec<f64> {
        self.state_at(0).values
    }

    /// Chain state at an arbitrary radius by cubic Hermite interpolation.
    pub fn state_interp(&self, r: f64) -> ChainState {
        let x = self.grid.nodes();
        let i = self.grid.locate(r);
        let interp = |vals: &Vec<f64>, ders: &Vec<f64>| {
            (
                hermite(x[i], x[i + 1], vals[i], vals[i + 1], ders[i], ders[i + 1], r),
                hermite_slope(x[i], x[i + 1], vals[i], vals[i + 1], ders[i], ders[i + 1], r),
            )
        };
        let mut values = Vec::with_capacity(self.alpha() + self.beta());
        let mut derivs = Vec::with_capacity(self.alpha() + self.beta());
        for (vals, ders) in self
            .chain_u
            .iter()
            .zip(&self.chain_u_prime)
            .chain(self.chain_v.iter().zip(&self.chain_v_prime))
        {
            let (v, d) = interp(vals, ders);
            values.push(v);
            derivs.push(d);
        }
        ChainState {
            radius: r,
            values,
            derivs,
        }
    }

    /// CSV header `r,u0,du0,…,v0,dv0,…`.
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["r".to_string()];
        for k in 0..self.alpha() {
            cols.push(format!("u{k}"));
            cols.push(format!("du{k}"));
        }
        for k in 0..self.beta() {
            cols.push(format!("v{k}"));
            cols.push(format!("dv{k}"));
        }
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for (i, r) in self.grid.nodes().iter().enumerate() {
            let mut row = vec![crate::io::fmt_f64(*r)];
            for k in 0..self.alpha() {
                row.push(crate::io::fmt_f64(self.chain_u[k][i]));
                row.push(crate::io::fmt_f64(self.chain_u_prime[k][i]));
            }
            for k in 0..self.beta() {
                row.push(crate::io::fmt_f64(self.chain_v[k][i]));
                row.push(crate::io::fmt_f64(self.chain_v_prime[k][i]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty profile CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"r") {
            return Err(Error::Parse("profile CSV must start with column r".into()));
        }
        let alpha = cols.iter().filter(|c| c.starts_with('u')).count();
        let beta = cols.iter().filter(|c| c.starts_with('v')).count();
        if alpha == 0 || beta == 0 || cols.len() != 1 + 2 * (alpha + beta) {
            return Err(Error::Parse(format!("unexpected profile header: {header}")));
        }
        let mut nodes = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in lines.enumerate() {
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse(format!("row {}: {e}", ln + 2)))?;
            if vals.len() != cols.len() {
                return Err(Error::Parse(format!("row {} has {} fields", ln + 2, vals.len())));
            }
            nodes.push(vals[0]);
            rows.push(vals);
        }
        let grid = RadialGrid::new(nodes)?;
        let mut out = Self::zeros(grid, alpha, beta);
        for (i, row) in rows.iter().enumerate() {
            for k in 0..alpha {
                out.chain_u[k][i] = row[1 + 2 * k];
                out.chain_u_prime[k][i] = row[2 + 2 * k];
            }
            for k in 0..beta {
                out.chain_v[k][i] = row[1 + 2 * (alpha + k)];
                out.chain_v_prime[k][i] = row[2 + 2 * (alpha + k)];
            }
        }
        Ok(out)
    }
}
