//! Stagnation points, the maximal Lyapunov exponent, separatrix base
//! points and the exponential decay estimates along separatrices.
//!
//! For a divergence-free field the Jacobian at a zero is trace-free, so its
//! eigenvalues are `±√(−det Du)`. A negative determinant gives a saddle with
//! rate `λ = √(−det)`; the maximal exponent `Λ` is taken as the largest such
//! rate. The direct definition `t⁻¹ log ‖Dφ_t(x)‖` is evaluated separately as
//! a cross-check.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, IntegratorConfig, STAGNATION_SPEED};
use crate::error::{Error, Result};
use crate::flowfield::{FourierStream, Mat2, TorusPoint};

/// Determinant threshold separating hyperbolic / elliptic from degenerate zeros.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Roots closer than this (torus distance) are merged.
pub const DEDUP_RADIUS: f64 = 1e-6;

const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointKind {
    Hyperbolic { lambda: f64 },
    Elliptic { omega: f64 },
    Degenerate,
}

impl PointKind {
    pub fn label(&self) -> &'static str {
        match self {
            PointKind::Hyperbolic { .. } => "hyperbolic",
            PointKind::Elliptic { .. } => "elliptic",
            PointKind::Degenerate => "degenerate",
        }
    }

    /// `λ` for saddles, `ω` for centers, 0 otherwise.
    pub fn rate(&self) -> f64 {
        match *self {
            PointKind::Hyperbolic { lambda } => lambda,
            PointKind::Elliptic { omega } => omega,
            PointKind::Degenerate => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagnationPoint {
    pub location: TorusPoint,
    pub jac: Mat2,
    pub kind: PointKind,
}

impl StagnationPoint {
    pub fn lambda(&self) -> Option<f64> {
        match self.kind {
            PointKind::Hyperbolic { lambda } => Some(lambda),
            _ => None,
        }
    }
}

/// Classifies a trace-free Jacobian by the sign of its determinant.
pub fn classify(jac: &Mat2, tol: f64) -> Result<PointKind> {
    let tr = jac.trace();
    if tr.abs() > 1e-8 {
        return Err(Error::NotTraceFree(tr));
    }
    let det = jac.det();
    Ok(if det < -tol {
        PointKind::Hyperbolic {
            lambda: (-det).sqrt(),
        }
    } else if det > tol {
        PointKind::Elliptic { omega: det.sqrt() }
    } else {
        PointKind::Degenerate
    })
}

/// Damped Gauss–Newton on `u = 0`; the damping only matters where `Du` is
/// singular (non-isolated zero sets), where it yields the minimum-norm step.
fn newton(psi: &FourierStream, seed: [f64; 2], tol: f64) -> Option<[f64; 2]> {
    let mut x = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let u = psi.velocity(x);
        if u[0].hypot(u[1]) <= tol {
            return Some(x);
        }
        let j = psi.jacobian(x);
        let jt = j.transpose();
        let mut normal = jt * j;
        let mu = 1e-14 * (1.0 + normal.trace());
        normal.0[0][0] += mu;
        normal.0[1][1] += mu;
        let rhs = jt.apply(u);
        let step = normal.inverse()?.apply(rhs);
        let len = step[0].hypot(step[1]);
        let damp = if len > 0.5 { 0.5 / len } else { 1.0 };
        x = [x[0] - damp * step[0], x[1] - damp * step[1]];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
    }
    let u = psi.velocity(x);
    (u[0].hypot(u[1]) <= tol).then_some(x)
}

/// All zeros of `u` reachable by Newton from a uniform seed grid, merged and classified.
pub fn find_stagnation_points(
    psi: &FourierStream,
    seed_grid_n: usize,
    newton_tol: f64,
) -> Result<Vec<StagnationPoint>> {
    if seed_grid_n < 16 {
        return Err(Error::InvalidArgument(format!(
            "seed grid {seed_grid_n} < 16"
        )));
    }
    if !(newton_tol > 0.0 && newton_tol <= 1e-10) {
        return Err(Error::InvalidArgument(format!(
            "newton_tol {newton_tol} must be in (0, 1e-10]"
        )));
    }
    let h = TAU / seed_grid_n as f64;
    let mut roots: Vec<TorusPoint> = (0..seed_grid_n * seed_grid_n)
        .into_par_iter()
        .filter_map(|idx| {
            let seed = [
                (idx % seed_grid_n) as f64 * h,
                (idx / seed_grid_n) as f64 * h,
            ];
            newton(psi, seed, newton_tol).map(TorusPoint::from)
        })
        .collect();
    roots.sort_by(|a, b| a.x1().total_cmp(&b.x1()).then(a.x2().total_cmp(&b.x2())));

    let mut kept: Vec<TorusPoint> = Vec::new();
    for r in roots {
        if kept.iter().all(|k| k.dist(&r) > DEDUP_RADIUS) {
            kept.push(r);
        }
    }
    kept.into_iter()
        .filter(|p| psi.speed(*p) <= STAGNATION_SPEED)
        .map(|location| {
            let jac = psi.jacobian(location);
            Ok(StagnationPoint {
                location,
                jac,
                kind: classify(&jac, CLASSIFY_TOL)?,
            })
        })
        .collect()
}

/// Seed grid size adequate for the stream's highest wavenumber.
pub fn default_seed_grid(psi: &FourierStream) -> usize {
    64.max(16 * psi.max_wavenumber() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    StagnationRoute,
    DirectGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: TorusPoint,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub method: LyapunovMethod,
    pub witnesses: Vec<Witness>,
}

/// `Λ` as the largest saddle rate; 0 when no saddle exists.
pub fn max_lyapunov_stagnation(psi: &FourierStream) -> Result<LyapunovEstimate> {
    psi.ensure_steady()?;
    let census = find_stagnation_points(psi, default_seed_grid(psi), 1e-12)?;
    Ok(lyapunov_from_census(&census))
}

pub fn lyapunov_from_census(census: &[StagnationPoint]) -> LyapunovEstimate {
    let value = census
        .iter()
        .filter_map(StagnationPoint::lambda)
        .fold(0.0, f64::max);
    let witnesses = census
        .iter()
        .filter_map(|p| {
            p.lambda().map(|rate| Witness {
                point: p.location,
                rate,
            })
        })
        .filter(|w| value > 0.0 && (w.rate - value).abs() <= 1e-9 * value)
        .collect();
    LyapunovEstimate {
        value,
        method: LyapunovMethod::StagnationRoute,
        witnesses,
    }
}

/// Uniform 16² lattice plus four points offset by `1e−3` around every saddle.
pub fn default_direct_seeds(psi: &FourierStream, census: &[StagnationPoint]) -> Vec<TorusPoint> {
    let n = 16;
    let h = TAU / n as f64;
    let mut seeds: Vec<TorusPoint> = (0..n * n)
        .map(|i| TorusPoint::new((i % n) as f64 * h, (i / n) as f64 * h))
        .collect();
    let off = 1e-3;
    for p in census.iter().filter(|p| p.lambda().is_some()) {
        let [a, b] = p.location.coords();
        seeds.extend([
            TorusPoint::new(a + off, b),
            TorusPoint::new(a - off, b),
            TorusPoint::new(a, b + off),
            TorusPoint::new(a, b - off),
        ]);
    }
    let _ = psi;
    seeds
}

/// `t⁻¹ log ‖Dφ_t(x)‖₂` with the product of unit-time propagators renormalized as it grows.
pub fn finite_time_exponent(
    psi: &FourierStream,
    x: TorusPoint,
    horizon_t: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let mut point = x;
    let mut prod = Mat2::IDENTITY;
    let mut log_acc = 0.0;
    let mut elapsed = 0.0;
    while elapsed < horizon_t {
        let dt = (horizon_t - elapsed).min(1.0);
        let (next, step) = dynamics::variational_flow(psi, point, dt, cfg)?;
        prod = step * prod;
        let s = prod.frobenius();
        log_acc += s.ln();
        prod = prod.scale(1.0 / s);
        point = next;
        elapsed += dt;
    }
    Ok((log_acc + prod.norm2().ln()) / horizon_t)
}

/// `max over seeds of t⁻¹ log ‖Dφ_t(x)‖₂` at `t = horizon_t`.
pub fn max_lyapunov_direct(
    psi: &FourierStream,
    horizon_t: f64,
    seeds: &[TorusPoint],
    cfg: &IntegratorConfig,
) -> Result<LyapunovEstimate> {
    if horizon_t < 10.0 {
        return Err(Error::InvalidArgument(format!("horizon {horizon_t} < 10")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    let rates: Vec<f64> = seeds
        .par_iter()
        .map(|x| finite_time_exponent(psi, *x, horizon_t, cfg))
        .collect::<Result<_>>()?;
    let (best, value) = rates
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| {
            if *r > acc.1 {
                (i, *r)
            } else {
                acc
            }
        });
    Ok(LyapunovEstimate {
        value: value.max(0.0),
        method: LyapunovMethod::DirectGrowth,
        witnesses: vec![Witness {
            point: seeds[best],
            rate: value,
        }],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Orbit attracted to the saddle as `t → +∞`.
    Stable,
    /// Orbit repelled from the saddle, i.e. attracted as `t → −∞`.
    Unstable,
}

/// Unit eigenvector of a trace-free `jac` for eigenvalue `mu`, sign-normalized.
fn eigenvector(jac: &Mat2, mu: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = jac.0;
    let r1 = [b, mu - a];
    let r2 = [mu - d, c];
    let v = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) {
        r1
    } else {
        r2
    };
    let n = v[0].hypot(v[1]);
    let mut v = [v[0] / n, v[1] / n];
    let lead = if v[0].abs() > 1e-12 { v[0] } else { v[1] };
    if lead < 0.0 {
        v = [-v[0], -v[1]];
    }
    v
}

/// `y + eps·v` with `v` the stable (eigenvalue `−λ`) or unstable (`+λ`) direction at `y`.
///
/// The offset lies on the linearized separatrix; its distance to the true
/// invariant manifold is `O(eps²)`.
pub fn separatrix_point(
    psi: &FourierStream,
    y: &StagnationPoint,
    branch: Branch,
    eps: f64,
) -> Result<TorusPoint> {
    let PointKind::Hyperbolic { lambda } = y.kind else {
        return Err(Error::NotHyperbolic);
    };
    if !(eps > 1e-6 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside (1e-6, 0.5)"
        )));
    }
    let mu = match branch {
        Branch::Stable => -lambda,
        Branch::Unstable => lambda,
    };
    let v = eigenvector(&y.jac, mu);
    let [a, b] = y.location.coords();
    let x = TorusPoint::new(a + eps * v[0], b + eps * v[1]);
    if psi.speed(x) <= STAGNATION_SPEED {
        return Err(Error::PreconditionViolated(format!(
            "separatrix offset {eps} lands on another stagnation point"
        )));
    }
    Ok(x)
}

/// Offset of the separatrix point from its saddle used by the box constructions.
pub const SEPARATRIX_EPS: f64 = 0.05;

/// Base point of a flow box on a separatrix of a saddle attaining `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixBase {
    pub saddle: StagnationPoint,
    pub branch: Branch,
    /// Point on the separatrix at distance `eps` from the saddle.
    pub x_sep: TorusPoint,
    /// `φ_{−K}(x_sep)` on the stable branch, `φ_K(x_sep)` on the unstable one.
    pub x0: TorusPoint,
}

/// Stable branch for `λ ≥ 0`, unstable for `λ < 0`, anchored at the first saddle attaining `Λ`.
pub fn separatrix_base(
    psi: &FourierStream,
    census: &[StagnationPoint],
    lambda: f64,
    k: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<SeparatrixBase> {
    let est = lyapunov_from_census(census);
    let Some(w) = est.witnesses.first() else {
        return Err(Error::NoHyperbolicPoint);
    };
    let saddle = *census
        .iter()
        .find(|p| p.location == w.point)
        .ok_or(Error::NoHyperbolicPoint)?;
    let branch = if lambda >= 0.0 {
        Branch::Stable
    } else {
        Branch::Unstable
    };
    let x_sep = separatrix_point(psi, &saddle, branch, eps)?;
    let shift = match branch {
        Branch::Stable => -k,
        Branch::Unstable => k,
    };
    let x0 = dynamics::flow(psi, x_sep, shift, cfg)?;
    Ok(SeparatrixBase {
        saddle,
        branch,
        x_sep,
        x0,
    })
}

/// Fastest point on the separatrix through `base.x_sep` within `span` time
/// units away from the saddle (upstream on the stable branch, downstream on
/// the unstable one), sampled at 1000 points per unit time.
pub fn separatrix_peak(
    psi: &FourierStream,
    base: &SeparatrixBase,
    span: f64,
    cfg: &IntegratorConfig,
) -> Result<TorusPoint> {
    if span.is_nan() || span <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "span {span} must be positive"
        )));
    }
    let (a, b) = match base.branch {
        Branch::Stable => (-span, 0.0),
        Branch::Unstable => (0.0, span),
    };
    let n = (1000.0 * span).ceil() as usize + 1;
    let tr = dynamics::speed_profile(psi, base.x_sep, a, b, n, cfg)?;
    let best = tr
        .speeds
        .iter()
        .enumerate()
        .fold(0, |acc, (i, v)| if *v > tr.speeds[acc] { i } else { acc });
    Ok(tr.points[best])
}

/// Parameters of one exponential-decay check along a separatrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    /// Signed `λ = Re α`; nonnegative on the stable branch, nonpositive on the unstable one.
    pub lambda: f64,
    pub eps: f64,
    pub horizon: f64,
    pub n_samples: usize,
    pub branch: Branch,
    /// The maximal exponent `Λ` of the flow.
    pub max_exponent: f64,
    /// Skip the `ε` precondition (used to exhibit unbounded growth).
    pub allow_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOutcome {
    pub sup_value: f64,
    pub argmax_t: f64,
    pub bounded: bool,
}

/// Largest `ε` admitted by the decay estimate for this branch.
pub fn max_decay_eps(lambda: f64, max_exponent: f64, branch: Branch) -> f64 {
    match branch {
        Branch::Stable => (max_exponent - lambda) / 2.0,
        Branch::Unstable => (lambda + max_exponent) / 2.0,
    }
}

/// Samples `e^{(λ+ε)t}|u∘φ_t(x)|` on `[0, T]` (stable) or `e^{(λ−ε)t}|u∘φ_t(x)|`
/// on `[−T, 0]` (unstable) and reports its maximum.
///
/// `bounded` is a finite-horizon certificate: the maximum over the last
/// quarter of the window must stay strictly below the maximum over the rest.
pub fn decay_check(
    psi: &FourierStream,
    x: TorusPoint,
    spec: &DecaySpec,
    cfg: &IntegratorConfig,
) -> Result<DecayOutcome> {
    let limit = max_decay_eps(spec.lambda, spec.max_exponent, spec.branch);
    if !spec.allow_violation && !(spec.eps > 0.0 && spec.eps < limit) {
        return Err(Error::PreconditionViolated(format!(
            "eps = {} must lie in (0, {limit}) for lambda = {} and Lambda = {}",
            spec.eps, spec.lambda, spec.max_exponent
        )));
    }
    if spec.horizon <= 0.0 || spec.n_samples < 8 {
        return Err(Error::InvalidArgument(
            "decay check needs a positive horizon and ≥ 8 samples".into(),
        ));
    }
    let (t0, t1, rate) = match spec.branch {
        Branch::Stable => (0.0, spec.horizon, spec.lambda + spec.eps),
        Branch::Unstable => (-spec.horizon, 0.0, spec.lambda - spec.eps),
    };
    let tr = dynamics::speed_profile(psi, x, t0, t1, spec.n_samples, cfg)?;
    let weighted: Vec<f64> = tr
        .times
        .iter()
        .zip(&tr.speeds)
        .map(|(t, s)| (rate * t).exp() * s)
        .collect();
    let (imax, sup_value) =
        weighted
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                if *v > acc.1 {
                    (i, *v)
                } else {
                    acc
                }
            });

    let tail_start = 0.75 * spec.horizon;
    let (mut head, mut tail) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (t, v) in tr.times.iter().zip(&weighted) {
        if t.abs() >= tail_start {
            tail = tail.max(*v);
        } else {
            head = head.max(*v);
        }
    }
    Ok(DecayOutcome {
        sup_value,
        argmax_t: tr.times[imax],
        bounded: tail < head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn near(p: &TorusPoint, a: f64, b: f64) -> bool {
        p.dist(&TorusPoint::new(a, b)) < 1e-9
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&Mat2::new(-1.0, 0.0, 0.0, 1.0), CLASSIFY_TOL).unwrap(),
            PointKind::Hyperbolic { lambda: 1.0 }
        );
        assert_eq!(
            classify(&Mat2::new(0.0, 1.0, -1.0, 0.0), CLASSIFY_TOL).unwrap(),
            PointKind::Elliptic { omega: 1.0 }
        );
        assert_eq!(
            classify(&Mat2::new(0.0, 1.0, 0.0, 0.0), CLASSIFY_TOL).unwrap(),
            PointKind::Degenerate
        );
        assert!(matches!(
            classify(&Mat2::new(1.0, 0.0, 0.0, 1.0), CLASSIFY_TOL),
            Err(Error::NotTraceFree(_))
        ));
    }

    #[test]
    fn cellular_census() {
        let psi = FourierStream::cellular();
        let pts = find_stagnation_points(&psi, 64, 1e-12).unwrap();
        assert_eq!(pts.len(), 8);
        for p in &pts {
            assert!(psi.speed(p.location) <= 1e-10);
            assert!(p.jac.trace().abs() <= 1e-10);
            let on = |v: f64, set: &[f64]| {
                set.iter()
                    .any(|s| (v - s).abs() < 1e-9 || (v - s - TAU).abs() < 1e-9)
            };
            match p.kind {
                PointKind::Hyperbolic { lambda } => {
                    assert!((lambda - 1.0).abs() <= 1e-8);
                    assert!(on(p.location.x1(), &[0.0, PI]) && on(p.location.x2(), &[0.0, PI]));
                }
                PointKind::Elliptic { .. } => {
                    let c = [FRAC_PI_2, 3.0 * FRAC_PI_2];
                    assert!(on(p.location.x1(), &c) && on(p.location.x2(), &c));
                }
                PointKind::Degenerate => panic!("no degenerate zeros expected"),
            }
        }
        assert_eq!(pts.iter().filter(|p| p.lambda().is_some()).count(), 4);
        let origin = pts.iter().find(|p| near(&p.location, 0.0, 0.0)).unwrap();
        assert!(
            matches!(origin.kind, PointKind::Hyperbolic { lambda } if (lambda - 1.0).abs() <= 1e-8)
        );
    }

    #[test]
    fn shear_zeros_are_degenerate() {
        let psi = FourierStream::shear();
        let pts = find_stagnation_points(&psi, 32, 1e-12).unwrap();
        assert!(!pts.is_empty());
        for p in &pts {
            assert_eq!(p.kind, PointKind::Degenerate);
            let x2 = p.location.x2();
            assert!(x2.sin().abs() < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn stagnation_route_values() {
        let cell = max_lyapunov_stagnation(&FourierStream::cellular()).unwrap();
        assert!((cell.value - 1.0).abs() <= 1e-8);
        assert_eq!(cell.witnesses.len(), 4);
        assert_eq!(
            max_lyapunov_stagnation(&FourierStream::shear())
                .unwrap()
                .value,
            0.0
        );
        let scaled = max_lyapunov_stagnation(&FourierStream::scaled_cellular(2.5)).unwrap();
        assert!((scaled.value - 2.5).abs() <= 1e-8);
    }

    #[test]
    fn direct_route_at_saddle_is_exact() {
        let psi = FourierStream::cellular();
        let cfg = IntegratorConfig::default();
        let est = max_lyapunov_direct(&psi, 12.5, &[TorusPoint::new(0.0, 0.0)], &cfg).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn separatrix_points_of_cellular_saddle() {
        let psi = FourierStream::cellular();
        let pts = find_stagnation_points(&psi, 64, 1e-12).unwrap();
        let y = pts.iter().find(|p| near(&p.location, 0.0, 0.0)).unwrap();
        let xs = separatrix_point(&psi, y, Branch::Stable, 0.3).unwrap();
        assert!(near(&xs, 0.3, 0.0), "{xs:?}");
        let xu = separatrix_point(&psi, y, Branch::Unstable, 0.3).unwrap();
        assert!(near(&xu, 0.0, 0.3), "{xu:?}");
        let cfg = IntegratorConfig::default();
        let later = dynamics::flow(&psi, xs, 10.0, &cfg).unwrap();
        assert!(later.dist(&y.location) <= 2.0 * 0.3 * (-9.0f64).exp());

        for p in pts.iter().filter(|p| p.lambda().is_some()) {
            for branch in [Branch::Stable, Branch::Unstable] {
                for eps in [1e-4, 0.01, 0.1] {
                    let x = separatrix_point(&psi, p, branch, eps).unwrap();
                    assert!(psi.speed(x) >= eps * p.lambda().unwrap() / 2.0);
                }
            }
        }
        let center = pts.iter().find(|p| p.lambda().is_none()).unwrap();
        assert_eq!(
            separatrix_point(&psi, center, Branch::Stable, 0.1),
            Err(Error::NotHyperbolic)
        );
    }

    fn stable_spec(lambda: f64, eps: f64, allow: bool) -> DecaySpec {
        DecaySpec {
            lambda,
            eps,
            horizon: 20.0,
            n_samples: 4001,
            branch: Branch::Stable,
            max_exponent: 1.0,
            allow_violation: allow,
        }
    }

    #[test]
    fn decay_check_examples() {
        let psi = FourierStream::cellular();
        let cfg = IntegratorConfig::default();
        let x = TorusPoint::new(FRAC_PI_2, 0.0);

        let out = decay_check(&psi, x, &stable_spec(0.5, 0.2, false), &cfg).unwrap();
        // max of e^{0.7t} sech t sits at t = atanh 0.7
        let ts = 0.7f64.atanh();
        let exact = (0.7 * ts).exp() / ts.cosh();
        assert!(
            (out.sup_value - exact).abs() < 1e-4,
            "{} vs {exact}",
            out.sup_value
        );
        assert!((out.sup_value - 1.31).abs() < 0.05 && out.bounded);

        // e^{0.4t} sech t still rises at t = 0; its maximum is at atanh 0.4
        let out = decay_check(&psi, x, &stable_spec(0.0, 0.4, false), &cfg).unwrap();
        let ts = 0.4f64.atanh();
        let exact = (0.4 * ts).exp() / ts.cosh();
        assert!(
            (out.sup_value - exact).abs() < 1e-4 && out.bounded,
            "{out:?}"
        );

        assert!(matches!(
            decay_check(&psi, x, &stable_spec(0.9, 0.2, false), &cfg),
            Err(Error::PreconditionViolated(_))
        ));
        let out = decay_check(&psi, x, &stable_spec(0.9, 0.2, true), &cfg).unwrap();
        assert!(!out.bounded);
    }

    #[test]
    fn unstable_branch_mirrors_stable() {
        let psi = FourierStream::cellular();
        let cfg = IntegratorConfig::default();
        let stable = decay_check(
            &psi,
            TorusPoint::new(FRAC_PI_2, 0.0),
            &stable_spec(0.5, 0.2, false),
            &cfg,
        )
        .unwrap();
        let spec = DecaySpec {
            lambda: -0.5,
            branch: Branch::Unstable,
            ..stable_spec(0.5, 0.2, false)
        };
        let unstable = decay_check(&psi, TorusPoint::new(0.0, FRAC_PI_2), &spec, &cfg).unwrap();
        assert!((stable.sup_value - unstable.sup_value).abs() <= 1e-4);
        assert!(unstable.bounded);
    }

    #[test]
    fn separatrix_peak_is_the_cell_edge_midpoint() {
        let psi = FourierStream::cellular();
        let cfg = IntegratorConfig::default();
        let census = find_stagnation_points(&psi, 64, 1e-12).unwrap();
        for lambda in [0.5, -0.5] {
            let base = separatrix_base(&psi, &census, lambda, 0.0, SEPARATRIX_EPS, &cfg).unwrap();
            let x = separatrix_peak(&psi, &base, 20.0, &cfg).unwrap();
            // speed is sech t along the edge, so the peak is at distance π/2 from both saddles
            assert!((psi.speed(x) - 1.0).abs() < 1e-5, "speed {}", psi.speed(x));
        }
    }
}
