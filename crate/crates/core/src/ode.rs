//! Dormand-Prince 5(4) stepper with step-size control and continuous
//! (dense) output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Values above this magnitude are treated as blow-up.
    pub blowup: f64,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 200_000,
            blowup: 1e150,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of a dense integration.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    /// One state per requested output abscissa.
    pub outputs: Vec<Vec<f64>>,
    /// State at the final abscissa.
    pub end: Vec<f64>,
    pub steps: usize,
}

/// Integrate `y' = f(x, y)` from `(x0, y0)` to `x_end`, sampling the
/// continuous extension at every abscissa in `outputs` (sorted, inside
/// `[x0, x_end]`).
pub fn integrate<F>(
    mut f: F,
    x0: f64,
    y0: &[f64],
    x_end: f64,
    outputs: &[f64],
    opts: &StepperOptions,
) -> Result<DenseSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(outputs.len());
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= x0 {
        out.push(y.clone());
        next_out += 1;
    }
    if x_end <= x0 {
        return Ok(DenseSolution {
            outputs: out,
            end: y,
            steps: 0,
        });
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut cont = vec![[0.0f64; 5]; n];

    f(x, &y, &mut k1);
    let span = x_end - x0;
    let mut h = initial_step(&mut f, x, &y, &k1, span, opts);
    let mut steps = 0;
    let mut reject_streak = 0;

    while x < x_end {
        if steps >= opts.max_steps {
            return Err(Error::Divergence { radius: x });
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }
        if h <= 1e-15 * x.abs().max(span) {
            return Err(Error::Divergence { radius: x });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(x + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(x + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(x + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(x + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let xph = if last { x_end } else { x + h };
        f(xph, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(xph, &ynew, &mut k7);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
            if !ynew[i].is_finite() || ynew[i].abs() > opts.blowup {
                finite = false;
            }
        }
        err = (err / n as f64).sqrt();
        steps += 1;

        if !finite || !err.is_finite() {
            reject_streak += 1;
            if reject_streak > 60 {
                return Err(Error::Divergence { radius: x });
            }
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            reject_streak = 0;
            if next_out < outputs.len() && outputs[next_out] <= xph {
                for i in 0..n {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[i] = [
                        y[i],
                        ydiff,
                        bspl,
                        ydiff - h * k7[i] - bspl,
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]),
                    ];
                }
                while next_out < outputs.len() && outputs[next_out] <= xph {
                    let theta = (outputs[next_out] - x) / h;
                    let theta1 = 1.0 - theta;
                    let sample = cont
                        .iter()
                        .map(|c| {
                            c[0] + theta * (c[1] + theta1 * (c[2] + theta * (c[3] + theta1 * c[4])))
                        })
                        .collect();
                    out.push(sample);
                    next_out += 1;
                }
            }
            x = xph;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            reject_streak += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
        }
    }

    while next_out < outputs.len() {
        out.push(y.clone());
        next_out += 1;
    }
    Ok(DenseSolution {
        outputs: out,
        end: y,
        steps,
    })
}

fn initial_step<F>(f: &mut F, x: f64, y: &[f64], f0: &[f64], span: f64, opts: &StepperOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let norm = |v: &[f64]| {
        (v.iter()
            .zip(&sc)
            .map(|(a, s)| (a / s) * (a / s))
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    f(x + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = StepperOptions::default();
        let outs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &outs,
            &opts,
        )
        .unwrap();
        for (x, y) in outs.iter().zip(&sol.outputs) {
            assert!((y[0] - x.sin()).abs() < 1e-8, "x={x}");
            assert!((y[1] - x.cos()).abs() < 1e-8);
        }
        assert!((sol.end[0] - 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn blowup_is_reported() {
        // y' = y^2, y(0) = 1 blows up at x = 1.
        let err = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &[],
            &StepperOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Divergence { radius } => assert!(radius > 0.99 && radius <= 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
