//! Rayleigh-quotient upper bounds for `‖L + α‖_•` along separatrix orbits.
//!
//! For a base point `x0` and a cutoff `γ` the quotient
//!
//! ```text
//!   ∫ |u∘φ_t(x0)|² e^{2λt} γ′(t)² dt  /  ∫ |u∘φ_t(x0)|² e^{2λt} γ(t)² dt
//! ```
//!
//! bounds `‖L + α‖²_•` for every `α` with `Re α = λ`. Only `λ` enters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{self, StagnationPoint, SEPARATRIX_EPS};
use crate::dynamics::{self, IntegratorConfig, PrimePeriod, Trajectory};
use crate::error::{Error, Result};
use crate::flowbox::CutoffGamma;
use crate::flowfield::{FourierStream, TorusPoint};

/// Minimum samples per unit time over the cutoff support.
pub const MIN_SAMPLES_PER_UNIT: f64 = 50.0;

/// Integrand level at which improper integrals are truncated.
pub const INTEGRAND_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub bound: f64,
    pub quadrature_n: usize,
    pub base_speed: f64,
}

fn cutoff_lengths(g: &CutoffGamma) -> (f64, f64) {
    match *g {
        CutoffGamma::Plus { k, m } | CutoffGamma::Minus { k, m } => (k, m),
        CutoffGamma::Triangle { n } => (n, 0.0),
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|x| *x <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    let w = (t - t0) / (t1 - t0);
    values[i - 1] * (1.0 - w) + values[i] * w
}

/// Composite trapezoid for the quotient on the profile's samples, with the
/// kinks of `γ` inserted as nodes so that `γ′` is never averaged across a jump.
pub fn rayleigh_bound(profile: &Trajectory, lambda: f64, g: &CutoffGamma) -> Result<BoundResult> {
    let (a, b) = g.support();
    let times = &profile.times;
    if times.len() < 2 || times[0] > a || times[times.len() - 1] < b {
        return Err(Error::InsufficientSampling(format!(
            "profile does not cover the cutoff support [{a}, {b}]"
        )));
    }
    let inside = times.iter().filter(|t| **t >= a && **t <= b).count();
    if (inside as f64) < MIN_SAMPLES_PER_UNIT * (b - a) {
        return Err(Error::InsufficientSampling(format!(
            "{inside} samples on an interval of length {}",
            b - a
        )));
    }
    if profile.speeds.iter().any(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::InvalidArgument("speeds must be nonnegative".into()));
    }
    let base_speed = profile.base_speed().unwrap_or_else(|| {
        interp(
            times,
            &profile.speeds,
            0.0_f64.clamp(times[0], times[times.len() - 1]),
        )
    });
    if base_speed <= 0.0 {
        return Err(Error::PreconditionViolated(
            "base point is a stagnation point".into(),
        ));
    }

    let mut nodes: Vec<f64> = times
        .iter()
        .copied()
        .filter(|t| *t >= a && *t <= b)
        .collect();
    nodes.extend(g.breakpoints().into_iter().filter(|t| *t >= a && *t <= b));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let speeds: Vec<f64> = nodes
        .iter()
        .map(|t| interp(times, &profile.speeds, *t))
        .collect();

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..nodes.len() - 1 {
        let (t0, t1) = (nodes[i], nodes[i + 1]);
        let w0 = speeds[i].powi(2) * (2.0 * lambda * t0).exp();
        let w1 = speeds[i + 1].powi(2) * (2.0 * lambda * t1).exp();
        let half = 0.5 * (t1 - t0);
        num += half * (w0 * g.deriv(t0).powi(2) + w1 * g.deriv_left(t1).powi(2));
        den += half * (w0 * g.eval(t0).powi(2) + w1 * g.eval(t1).powi(2));
    }
    if den <= 1e-300 {
        return Err(Error::EmptyDenominator(den));
    }
    let (k, m) = cutoff_lengths(g);
    Ok(BoundResult {
        lambda,
        k,
        m,
        numerator: num,
        denominator: den,
        bound: num / den,
        quadrature_n: nodes.len(),
        base_speed,
    })
}

/// How `M` follows `K` in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    EqualK,
    Fixed(f64),
}

impl MRule {
    pub fn m_for(&self, k: f64) -> f64 {
        match *self {
            MRule::EqualK => k,
            MRule::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub samples_per_unit: f64,
    /// Distance of the separatrix point from its saddle.
    pub eps: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples_per_unit: 200.0,
            eps: SEPARATRIX_EPS,
        }
    }
}

/// Uniform times on `[a, b]` with at least `density` per unit, plus `extra` nodes.
fn profile_times(a: f64, b: f64, density: f64, extra: &[f64]) -> Vec<f64> {
    let n = ((b - a) * density).ceil() as usize + 1;
    let mut times = dynamics::uniform_times(a, b, n.max(2));
    times.extend(extra.iter().copied().filter(|t| *t > a && *t < b));
    if a < 0.0 && b > 0.0 {
        times.push(0.0);
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Bound for one `(λ, K, M)` along the separatrix construction.
pub fn bound_at(
    psi: &FourierStream,
    census: &[StagnationPoint],
    lambda: f64,
    k: f64,
    m: f64,
    opts: &SweepOptions,
    cfg: &IntegratorConfig,
) -> Result<BoundResult> {
    let base = critical::separatrix_base(psi, census, lambda, k, opts.eps, cfg)?;
    let g = CutoffGamma::for_lambda(lambda, k, m)?;
    let half_length = k + 2.0 * m + 1.0;
    let period_cfg = IntegratorConfig {
        t_max_cap: 2.0 * half_length * 1.01,
        ..*cfg
    };
    // period and profile are orbit properties; x_sep is far better conditioned than x0,
    // which for large K sits within rounding distance of the upstream saddle
    if let PrimePeriod::Finite(p) = dynamics::prime_period(psi, base.x_sep, 1e-3, &period_cfg)? {
        if !PrimePeriod::Finite(p).admits_half_length(half_length) {
            return Err(Error::PeriodTooShort {
                period: p,
                required: 2.0 * half_length,
            });
        }
    }
    let shift = match base.branch {
        critical::Branch::Stable => -k,
        critical::Branch::Unstable => k,
    };
    let (a, b) = g.support();
    let times = profile_times(a, b, opts.samples_per_unit, &g.breakpoints());
    let shifted: Vec<f64> = times.iter().map(|t| t + shift).collect();
    let mut profile = dynamics::sample_orbit(psi, base.x_sep, &shifted, false, cfg)?;
    profile.times = times;
    rayleigh_bound(&profile, lambda, &g)
}

/// Bounds for `K` in `ks` (ascending) and `M` from `m_rule`, in input order.
pub fn bound_sweep(
    psi: &FourierStream,
    lambda: f64,
    ks: &[f64],
    m_rule: MRule,
    opts: &SweepOptions,
    cfg: &IntegratorConfig,
) -> Result<Vec<BoundResult>> {
    psi.ensure_steady()?;
    if !ks.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "K list must be strictly ascending".into(),
        ));
    }
    let census = critical::find_stagnation_points(psi, critical::default_seed_grid(psi), 1e-12)?;
    let big_lambda = critical::lyapunov_from_census(&census).value;
    if big_lambda <= 0.0 {
        return Err(Error::NoHyperbolicPoint);
    }
    if lambda.abs() >= big_lambda {
        return Err(Error::PreconditionViolated(format!(
            "|lambda| = {} is not below Lambda = {big_lambda}",
            lambda.abs()
        )));
    }
    ks.par_iter()
        .map(|&k| bound_at(psi, &census, lambda, k, m_rule.m_for(k), opts, cfg))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticBound {
    pub value: f64,
    /// `∫₀^∞ |u∘φ_t(x1)|² e^{2λt} dt`.
    pub tail_integral: f64,
    pub u_inf: f64,
    /// Time at which the integrand drops below [`INTEGRAND_FLOOR`].
    pub truncation_t: f64,
}

/// `(‖u‖_∞/K²) · (1/(2λ)) / ∫₀^∞ |u∘φ_t(x1)|² e^{2λt} dt` for `x1` on a stable separatrix.
///
/// The orbit is integrated until it is within `1e−3` of the saddle it
/// approaches; beyond that the linearized envelope `|u| ∝ e^{−λ_y t}` of the
/// saddle is summed in closed form, since the computed orbit would otherwise
/// drift off the separatrix along the unstable direction.
pub fn asymptotic_bound(
    psi: &FourierStream,
    census: &[StagnationPoint],
    x1: TorusPoint,
    lambda: f64,
    k: f64,
    cfg: &IntegratorConfig,
) -> Result<AsymptoticBound> {
    let big_lambda = critical::lyapunov_from_census(census).value;
    if !(lambda > 0.0 && lambda < big_lambda) {
        return Err(Error::PreconditionViolated(format!(
            "lambda = {lambda} outside (0, {big_lambda})"
        )));
    }
    if k <= 0.0 {
        return Err(Error::InvalidArgument("K must be positive".into()));
    }
    let u_inf = psi.max_speed(256);
    let near = 1e-3;
    let chunk = 10.0;
    let density = 200.0;
    let mut integral = 0.0;
    let mut start = x1;
    let mut t_offset = 0.0;
    while t_offset < 500.0 {
        let times = profile_times(0.0, chunk, density, &[]);
        let tr = dynamics::sample_orbit(psi, start, &times, false, cfg)?;
        for i in 0..times.len() {
            let t = t_offset + times[i];
            let p = tr.points[i];
            let saddle = census
                .iter()
                .filter_map(|s| s.lambda().map(|l| (s, l)))
                .find(|(s, _)| s.location.dist(&p) <= near);
            if let Some((_, rate)) = saddle {
                if rate <= lambda {
                    return Err(Error::DivergentIntegral(format!(
                        "saddle rate {rate} does not exceed lambda = {lambda}"
                    )));
                }
                let w = tr.speeds[i].powi(2) * (2.0 * lambda * t).exp();
                // ∫_t^∞ w e^{−2(rate−λ)(s−t)} ds, and where it falls below the floor
                integral += w / (2.0 * (rate - lambda));
                let truncation_t = if w > INTEGRAND_FLOOR {
                    t + (w / INTEGRAND_FLOOR).ln() / (2.0 * (rate - lambda))
                } else {
                    t
                };
                let value = u_inf / (k * k) / (2.0 * lambda) / integral;
                return Ok(AsymptoticBound {
                    value,
                    tail_integral: integral,
                    u_inf,
                    truncation_t,
                });
            }
            if i + 1 < times.len() {
                let dt = times[i + 1] - times[i];
                let w0 = tr.speeds[i].powi(2) * (2.0 * lambda * t).exp();
                let w1 = tr.speeds[i + 1].powi(2) * (2.0 * lambda * (t + dt)).exp();
                integral += 0.5 * dt * (w0 + w1);
            }
        }
        start = tr.points[times.len() - 1];
        t_offset += chunk;
    }
    Err(Error::DivergentIntegral(format!(
        "orbit of {x1:?} does not reach a saddle within t = {t_offset}"
    )))
}
