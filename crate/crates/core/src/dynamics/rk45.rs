//! Dormand–Prince 5(4) with PI step-size control and the free
//! fourth-order continuous extension.
//!
//! The system is autonomous, `y' = f(y)`, with a fixed-size state. Time may
//! run in either direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

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

// b − b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const SHRINK_LIMIT: f64 = 5.0; // h shrinks by at most 5×
const GROW_LIMIT: f64 = 10.0; // h grows by at most 10×

/// Hard cap on the number of attempted steps per integration.
pub const MAX_STEPS: usize = 10_000_000;

/// Tolerances and limits shared by all trajectory integrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub t_max_cap: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            t_max_cap: 1e4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.rtol, self.atol, self.max_step, self.t_max_cap]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(Error::InvalidArgument(format!(
                "integrator settings must be finite and positive: {self:?}"
            )));
        }
        if self.rtol < 1e-14 {
            return Err(Error::InvalidArgument(format!(
                "rtol {} is below 1e-14",
                self.rtol
            )));
        }
        Ok(())
    }

    pub(crate) fn check_horizon(&self, t: f64) -> Result<()> {
        if t.abs() > self.t_max_cap {
            Err(Error::InvalidArgument(format!(
                "|t| = {} exceeds the cap {}",
                t.abs(),
                self.t_max_cap
            )))
        } else {
            Ok(())
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let s = h * c;
        for i in 0..N {
            out[i] += s * k[i];
        }
    }
    out
}

/// One adaptive integration in a fixed time direction.
pub struct Dopri5<F, const N: usize>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    f: F,
    cfg: IntegratorConfig,
    dir: f64,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    facold: f64,
    attempts: usize,
    // continuous extension of the last accepted step
    t_old: f64,
    h_last: f64,
    rcont: [[f64; N]; 5],
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    /// Starts at `(t0, y0)`; `dir` is the sign of the time direction.
    pub fn new(f: F, t0: f64, y0: [f64; N], dir: f64, cfg: IntegratorConfig) -> Self {
        let dir = if dir < 0.0 { -1.0 } else { 1.0 };
        let k1 = f(&y0);
        let mut s = Self {
            f,
            cfg,
            dir,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            facold: 1e-4,
            attempts: 0,
            t_old: t0,
            h_last: 0.0,
            rcont: [y0, [0.0; N], [0.0; N], [0.0; N], [0.0; N]],
        };
        s.h = s.initial_step();
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Interval `[t_old, t]` (in time order of integration) covered by the last step.
    pub fn last_step(&self) -> (f64, f64) {
        (self.t_old, self.t)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.cfg.atol + self.cfg.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&self) -> f64 {
        let n = N as f64;
        let sk: Vec<f64> = self.y.iter().map(|v| self.scale(*v, *v)).collect();
        let d0 = (self
            .y
            .iter()
            .zip(&sk)
            .map(|(v, s)| (v / s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let d1 = (self
            .k1
            .iter()
            .zip(&sk)
            .map(|(v, s)| (v / s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.cfg.max_step);
        let y1 = axpy(&self.y, self.dir * h0, &[(1.0, &self.k1)]);
        let f1 = (self.f)(&y1);
        let d2 = (f1
            .iter()
            .zip(&self.k1)
            .zip(&sk)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.cfg.max_step)
    }

    /// Takes one accepted step without passing `t_end`.
    pub fn step_towards(&mut self, t_end: f64) -> Result<()> {
        let remaining = (t_end - self.t) * self.dir;
        if remaining <= 0.0 {
            return Ok(());
        }
        let f = &self.f;
        let mut h = self.h.min(self.cfg.max_step);
        loop {
            self.attempts += 1;
            if self.attempts > MAX_STEPS {
                return Err(Error::StepFailure {
                    t: self.t,
                    reason: format!("more than {MAX_STEPS} steps"),
                });
            }
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 1e-15 * self.t.abs().max(1.0) && !last {
                return Err(Error::StepFailure {
                    t: self.t,
                    reason: format!("step size underflow (h = {h:.3e})"),
                });
            }
            let hs = self.dir * h;
            let y = &self.y;
            let k1 = &self.k1;
            let k2 = f(&axpy(y, hs, &[(A21, k1)]));
            let k3 = f(&axpy(y, hs, &[(A31, k1), (A32, &k2)]));
            let k4 = f(&axpy(y, hs, &[(A41, k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(&axpy(
                y,
                hs,
                &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            ));
            let k6 = f(&axpy(
                y,
                hs,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y_new = axpy(
                y,
                hs,
                &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(&y_new);

            let mut err = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = self.scale(y[i], y_new[i]);
                err += (e / sk).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.25;
                continue;
            }

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac =
                    (fac11 / self.facold.powf(BETA) / SAFETY).clamp(1.0 / GROW_LIMIT, SHRINK_LIMIT);
                self.facold = err.max(1e-4);

                let mut rc = [*y, [0.0; N], [0.0; N], [0.0; N], [0.0; N]];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = hs * k1[i] - dy;
                    rc[1][i] = dy;
                    rc[2][i] = bspl;
                    rc[3][i] = dy - hs * k7[i] - bspl;
                    rc[4][i] = hs
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                self.rcont = rc;
                self.t_old = self.t;
                self.h_last = hs;
                self.t = if last { t_end } else { self.t + hs };
                self.y = y_new;
                self.k1 = k7;
                // keep the controller's proposal; a clipped final step says nothing about h
                let proposal = (h / fac).min(self.cfg.max_step);
                if !last || proposal > self.h {
                    self.h = proposal;
                }
                return Ok(());
            }
            h /= (fac11 / SAFETY).min(SHRINK_LIMIT);
        }
    }

    /// Continuous extension on the last accepted step.
    pub fn dense(&self, t: f64) -> [f64; N] {
        if self.h_last == 0.0 {
            return self.y;
        }
        let th = (t - self.t_old) / self.h_last;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    /// Integrates up to `t_end`, reporting each requested sample time on the way.
    ///
    /// `times` must be monotone in the integration direction and lie between
    /// the current time and `t_end`.
    pub fn run_sampled(
        &mut self,
        t_end: f64,
        times: &[f64],
        out: &mut Vec<[f64; N]>,
    ) -> Result<()> {
        let mut next = 0;
        while next < times.len() && (times[next] - self.t) * self.dir <= 0.0 {
            out.push(self.y);
            next += 1;
        }
        while (t_end - self.t) * self.dir > 0.0 {
            self.step_towards(t_end)?;
            while next < times.len() && (times[next] - self.t) * self.dir <= 0.0 {
                out.push(if times[next] == self.t {
                    self.y
                } else {
                    self.dense(times[next])
                });
                next += 1;
            }
        }
        while next < times.len() {
            out.push(self.y);
            next += 1;
        }
        Ok(())
    }
}

/// State at `t` of the solution with `y(0) = y0`.
pub fn integrate<F, const N: usize>(
    f: F,
    y0: [f64; N],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    if t == 0.0 {
        return Ok(y0);
    }
    let mut s = Dopri5::new(f, 0.0, y0, t.signum(), *cfg);
    while s.t() != t {
        s.step_towards(t)?;
    }
    Ok(*s.y())
}

/// Solution values at ascending `times`, which may straddle `t = 0` where `y(0) = y0`.
pub fn sample<F, const N: usize>(
    f: F,
    y0: [f64; N],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
    let split = times.partition_point(|t| *t < 0.0);
    let (neg, pos) = times.split_at(split);
    let mut out = Vec::with_capacity(times.len());

    if !neg.is_empty() {
        let back: Vec<f64> = neg.iter().rev().copied().collect();
        let mut s = Dopri5::new(&f, 0.0, y0, -1.0, *cfg);
        let mut vals = Vec::with_capacity(back.len());
        s.run_sampled(back[back.len() - 1], &back, &mut vals)?;
        out.extend(vals.into_iter().rev());
    }
    if !pos.is_empty() {
        let mut s = Dopri5::new(&f, 0.0, y0, 1.0, *cfg);
        s.run_sampled(pos[pos.len() - 1], pos, &mut out)?;
    }
    Ok(out)
}
