//! Flow `φ_t` of `u`, its derivative `Dφ_t`, the transverse flow of `u⊥`,
//! sampled trajectories and prime periods.
//!
//! States are integrated in the covering plane and reduced modulo `2π` only
//! when emitted as [`TorusPoint`]s.

pub mod rk45;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfield::{FourierStream, Mat2, TorusPoint, Vec2};

use rk45::Dopri5;
pub use rk45::IntegratorConfig;

/// Speeds below this count as a stagnation point.
pub const STAGNATION_SPEED: f64 = 1e-10;

pub(crate) fn velocity_rhs(psi: &FourierStream) -> impl Fn(&[f64; 2]) -> [f64; 2] + '_ {
    move |y| psi.velocity(*y)
}

pub(crate) fn variational_rhs(psi: &FourierStream) -> impl Fn(&[f64; 6]) -> [f64; 6] + '_ {
    move |y| {
        let d = psi.derivs([y[0], y[1]]);
        let [u1, u2] = d.velocity();
        let j = d.jacobian().0;
        // V row-major in y[2..6]; dV/dt = Du · V
        [
            u1,
            u2,
            j[0][0] * y[2] + j[0][1] * y[4],
            j[0][0] * y[3] + j[0][1] * y[5],
            j[1][0] * y[2] + j[1][1] * y[4],
            j[1][0] * y[3] + j[1][1] * y[5],
        ]
    }
}

/// Generator of the transverse flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransverseField {
    /// `u⊥ = (−u₂, u₁) = −∇ψ`.
    Perp,
    /// `u⊥ / |u|²`: moves across streamlines at unit rate in `ψ`, which makes
    /// the flow-box chart area preserving.
    AreaNormalized,
}

pub(crate) fn transverse_rhs(
    psi: &FourierStream,
    field: TransverseField,
) -> impl Fn(&[f64; 2]) -> [f64; 2] + '_ {
    move |y| {
        let p = psi.velocity_perp(*y);
        match field {
            TransverseField::Perp => p,
            TransverseField::AreaNormalized => {
                let s2 = p[0] * p[0] + p[1] * p[1];
                if s2 == 0.0 {
                    [0.0, 0.0]
                } else {
                    [p[0] / s2, p[1] / s2]
                }
            }
        }
    }
}

fn mat_from_state(y: &[f64; 6]) -> Mat2 {
    Mat2::new(y[2], y[3], y[4], y[5])
}

fn variational_start(x0: Vec2) -> [f64; 6] {
    [x0[0], x0[1], 1.0, 0.0, 0.0, 1.0]
}

/// `φ_t(x0)`.
pub fn flow(
    psi: &FourierStream,
    x0: TorusPoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<TorusPoint> {
    flow_plane(psi, x0.coords(), t, cfg).map(TorusPoint::from)
}

/// `φ_t(x0)` in covering-plane coordinates.
pub fn flow_plane(psi: &FourierStream, x0: Vec2, t: f64, cfg: &IntegratorConfig) -> Result<Vec2> {
    cfg.check_horizon(t)?;
    rk45::integrate(velocity_rhs(psi), x0, t, cfg)
}

/// `(φ_t(x0), Dφ_t(x0))`.
pub fn variational_flow(
    psi: &FourierStream,
    x0: TorusPoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(TorusPoint, Mat2)> {
    cfg.check_horizon(t)?;
    let y = rk45::integrate(variational_rhs(psi), variational_start(x0.coords()), t, cfg)?;
    Ok((TorusPoint::new(y[0], y[1]), mat_from_state(&y)))
}

/// `ψ_τ(x0)` for the plain perpendicular field `u⊥`.
pub fn orthogonal_flow(
    psi: &FourierStream,
    x0: TorusPoint,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<TorusPoint> {
    transverse_flow(psi, x0, tau, TransverseField::Perp, cfg)
}

pub fn transverse_flow(
    psi: &FourierStream,
    x0: TorusPoint,
    tau: f64,
    field: TransverseField,
    cfg: &IntegratorConfig,
) -> Result<TorusPoint> {
    cfg.check_horizon(tau)?;
    if psi.speed(x0) <= STAGNATION_SPEED {
        return Ok(x0);
    }
    rk45::integrate(transverse_rhs(psi, field), x0.coords(), tau, cfg).map(TorusPoint::from)
}

/// Samples of one orbit `t ↦ φ_t(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<TorusPoint>,
    /// Covering-plane positions, unreduced.
    pub lifted: Vec<Vec2>,
    pub dphi: Option<Vec<Mat2>>,
    /// `|u(points[i])|`, recomputed from the field.
    pub speeds: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn base_speed(&self) -> Option<f64> {
        self.times
            .iter()
            .position(|t| *t == 0.0)
            .map(|i| self.speeds[i])
    }
}

pub(crate) fn uniform_times(t_begin: f64, t_end: f64, n: usize) -> Vec<f64> {
    let dt = (t_end - t_begin) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                t_end
            } else {
                t_begin + dt * i as f64
            }
        })
        .collect()
}

fn check_times(times: &[f64], cfg: &IntegratorConfig) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no sample times".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "sample times must be strictly increasing".into(),
        ));
    }
    cfg.check_horizon(times[0])?;
    cfg.check_horizon(times[times.len() - 1])
}

/// Orbit samples at ascending `times` (which may straddle 0, the time of `x0`).
pub fn sample_orbit(
    psi: &FourierStream,
    x0: TorusPoint,
    times: &[f64],
    with_dphi: bool,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_times(times, cfg)?;
    let (lifted, dphi) = if with_dphi {
        let states = rk45::sample(
            variational_rhs(psi),
            variational_start(x0.coords()),
            times,
            cfg,
        )?;
        (
            states.iter().map(|y| [y[0], y[1]]).collect::<Vec<_>>(),
            Some(states.iter().map(mat_from_state).collect()),
        )
    } else {
        (
            rk45::sample(velocity_rhs(psi), x0.coords(), times, cfg)?,
            None,
        )
    };
    let speeds = lifted.iter().map(|p| psi.speed(*p)).collect();
    Ok(Trajectory {
        times: times.to_vec(),
        points: lifted.iter().map(|p| TorusPoint::from(*p)).collect(),
        lifted,
        dphi,
        speeds,
    })
}

/// `|u∘φ_t(x0)|` at `n_samples` uniform times in `[t_begin, t_end]`.
pub fn speed_profile(
    psi: &FourierStream,
    x0: TorusPoint,
    t_begin: f64,
    t_end: f64,
    n_samples: usize,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if t_begin.partial_cmp(&t_end) != Some(std::cmp::Ordering::Less) || n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need t_begin < t_end and at least two samples (got [{t_begin}, {t_end}], n = {n_samples})"
        )));
    }
    sample_orbit(
        psi,
        x0,
        &uniform_times(t_begin, t_end, n_samples),
        false,
        cfg,
    )
}

/// Prime period of a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PrimePeriod {
    /// Smallest positive return time; `0` at stagnation points.
    Finite(f64),
    /// No return before the integration cap.
    NonPeriodic,
}

impl PrimePeriod {
    /// Whether an orbit segment of half-length `n` fits inside one period (`N < p/2`).
    pub fn admits_half_length(&self, n: f64) -> bool {
        match *self {
            PrimePeriod::NonPeriodic => true,
            PrimePeriod::Finite(p) => n < p / 2.0,
        }
    }
}

/// Return time of `x0` to itself.
///
/// The orbit is followed until it re-enters the `delta`-ball of `x0` moving
/// in the direction of `u(x0)`; the return is then located on the section
/// through `x0` orthogonal to `u(x0)` by bisection on the dense output.
pub fn prime_period(
    psi: &FourierStream,
    x0: TorusPoint,
    delta: f64,
    cfg: &IntegratorConfig,
) -> Result<PrimePeriod> {
    if !(delta > 1e-8 && delta < 0.1) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (1e-8, 0.1)"
        )));
    }
    let u0 = psi.velocity(x0);
    if u0[0].hypot(u0[1]) <= STAGNATION_SPEED {
        return Ok(PrimePeriod::Finite(0.0));
    }
    let section = |y: &[f64; 2]| {
        let d = TorusPoint::from(*y).displacement(&x0);
        d[0] * u0[0] + d[1] * u0[1]
    };
    let mut solver = Dopri5::new(velocity_rhs(psi), 0.0, x0.coords(), 1.0, *cfg);
    let cap = cfg.t_max_cap;
    let mut exited = false;
    let mut g_prev = 0.0;
    while solver.t() < cap {
        solver.step_towards(cap)?;
        let y = *solver.y();
        let g = section(&y);
        if exited && g_prev < 0.0 && g >= 0.0 {
            let (mut lo, mut hi) = solver.last_step();
            while hi - lo > 1e-13 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if section(&solver.dense(mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_star = 0.5 * (lo + hi);
            let p = solver.dense(t_star);
            let u = psi.velocity(p);
            let close = TorusPoint::from(p).dist(&x0) <= delta;
            if close && u[0] * u0[0] + u[1] * u0[1] > 0.0 {
                return Ok(PrimePeriod::Finite(t_star));
            }
        }
        if TorusPoint::from(y).dist(&x0) > delta {
            exited = true;
        }
        g_prev = g;
    }
    Ok(PrimePeriod::NonPeriodic)
}
