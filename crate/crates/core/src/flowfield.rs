//! Steady states on the flat torus `[0, 2π)²`.
//!
//! A steady state is carried by a finite, real, zero-mean Fourier stream
//! function `ψ`. Velocity is `u = (−∂₂ψ, ∂₁ψ)` so that the scalar curl
//! `−∂₂u₁ + ∂₁u₂` equals `Δψ`. All derivatives are evaluated analytically
//! from the series by direct summation over the (small) support.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plane coordinates in the covering space `ℝ²`.
pub type Vec2 = [f64; 2];

/// Integer wavevector `(k₁, k₂)`.
pub type Wave = [i32; 2];

/// Default cap on the number of stored Fourier modes (both `±k` counted).
pub const DEFAULT_MAX_MODES: usize = 64;

/// Residual above which a stream function is rejected as non-steady.
pub const STEADINESS_LIMIT: f64 = 1e-8;

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to 2π itself
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed shortest angular difference `a − b` in `(−π, π]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// A point of the torus with both coordinates reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    x1: f64,
    x2: f64,
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self {
            x1: wrap_angle(x1),
            x2: wrap_angle(x2),
        }
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn coords(&self) -> Vec2 {
        [self.x1, self.x2]
    }

    /// Shortest displacement `self − other` on the torus, componentwise in `(−π, π]`.
    pub fn displacement(&self, other: &TorusPoint) -> Vec2 {
        [angle_diff(self.x1, other.x1), angle_diff(self.x2, other.x2)]
    }

    /// Flat torus distance; never exceeds `π√2`.
    pub fn dist(&self, other: &TorusPoint) -> f64 {
        let [d1, d2] = self.displacement(other);
        d1.hypot(d2)
    }
}

impl From<Vec2> for TorusPoint {
    fn from(v: Vec2) -> Self {
        TorusPoint::new(v[0], v[1])
    }
}

impl From<TorusPoint> for Vec2 {
    fn from(p: TorusPoint) -> Self {
        p.coords()
    }
}

/// Real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, a| acc.max(a.abs()))
    }

    /// Largest singular value.
    pub fn norm2(&self) -> f64 {
        // σ_max² is the larger eigenvalue of MᵀM: (f² + √(f⁴ − 4det²)) / 2
        let f2 = self.0.iter().flatten().map(|a| a * a).sum::<f64>();
        let d = self.det();
        let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
        (0.5 * (f2 + disc)).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    /// Inverse, or `None` when `|det|` underflows.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.abs() < f64::MIN_POSITIVE {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + (-rhs)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

/// One coefficient of a custom stream function as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub k: Wave,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Values and derivatives of `ψ` at a point, up to `∇Δψ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamDerivs {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
    pub lap: f64,
    pub lap_d1: f64,
    pub lap_d2: f64,
}

impl StreamDerivs {
    pub fn velocity(&self) -> Vec2 {
        [-self.d2, self.d1]
    }

    pub fn jacobian(&self) -> Mat2 {
        // trace is −d12 + d12, exactly zero
        Mat2([[-self.d12, -self.d22], [self.d11, self.d12]])
    }
}

/// Finite real zero-mean Fourier stream function.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierStream {
    name: String,
    coeffs: BTreeMap<Wave, Complex64>,
    // one representative per ±k pair, evaluated as 2 Re(c e^{ik·x})
    half: Vec<(Wave, Complex64)>,
}

fn is_canonical(k: Wave) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

fn neg(k: Wave) -> Wave {
    [-k[0], -k[1]]
}

impl FourierStream {
    /// Builds a stream function from coefficients, enforcing reality.
    ///
    /// A wavevector given without its partner `−k` defines the pair
    /// `ψ̂(−k) = conj ψ̂(k)`. When both are given the Hermitian part is kept,
    /// `ψ̂(k) = (c_k + conj c_{−k}) / 2`.
    pub fn from_modes<I>(name: impl Into<String>, modes: I, max_modes: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (Wave, Complex64)>,
    {
        let mut given: BTreeMap<Wave, Complex64> = BTreeMap::new();
        for (k, c) in modes {
            if k == [0, 0] {
                return Err(Error::InvalidFlow(
                    "wavevector (0,0) is not allowed: the stream function has zero mean".into(),
                ));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidFlow(format!(
                    "non-finite amplitude at k = {k:?}"
                )));
            }
            if given.insert(k, c).is_some() {
                return Err(Error::InvalidFlow(format!("duplicate wavevector {k:?}")));
            }
        }

        let mut coeffs = BTreeMap::new();
        for (&k, &c) in &given {
            let v = match given.get(&neg(k)) {
                Some(&partner) => 0.5 * (c + partner.conj()),
                None => c,
            };
            coeffs.insert(k, v);
            coeffs.insert(neg(k), v.conj());
        }
        coeffs.retain(|_, c| c.norm() > 0.0);
        if coeffs.len() > max_modes {
            return Err(Error::InvalidFlow(format!(
                "{} modes exceed the limit of {max_modes}",
                coeffs.len()
            )));
        }
        let half = coeffs
            .iter()
            .filter(|(k, _)| is_canonical(**k))
            .map(|(k, c)| (*k, *c))
            .collect();
        Ok(Self {
            name: name.into(),
            coeffs,
            half,
        })
    }

    pub fn from_specs(name: impl Into<String>, specs: &[ModeSpec]) -> Result<Self> {
        Self::from_modes(
            name,
            specs.iter().map(|m| (m.k, Complex64::new(m.re, m.im))),
            DEFAULT_MAX_MODES,
        )
    }

    /// `ψ = sin x₁ sin x₂`: four saddles with rate 1 and four centers.
    pub fn cellular() -> Self {
        Self::scaled_cellular(1.0)
    }

    /// `ψ = c · sin x₁ sin x₂`.
    pub fn scaled_cellular(c: f64) -> Self {
        let q = 0.25 * c;
        Self::from_modes(
            "cellular",
            [
                ([1, 1], Complex64::new(-q, 0.0)),
                ([1, -1], Complex64::new(q, 0.0)),
            ],
            DEFAULT_MAX_MODES,
        )
        .expect("valid built-in")
    }

    /// `ψ = −cos x₂`: the parallel shear `u = (−sin x₂, 0)`.
    pub fn shear() -> Self {
        Self::from_modes(
            "shear",
            [([0, 1], Complex64::new(-0.5, 0.0))],
            DEFAULT_MAX_MODES,
        )
        .expect("valid built-in")
    }

    pub const BUILTINS: [&'static str; 2] = ["cellular", "shear"];

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "cellular" => Some(Self::cellular()),
            "shear" => Some(Self::shear()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// All stored coefficients, both members of each `±k` pair.
    pub fn coeffs(&self) -> &BTreeMap<Wave, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: Wave) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    /// Largest `|k|∞` in the support.
    pub fn max_wavenumber(&self) -> i32 {
        self.coeffs
            .keys()
            .map(|k| k[0].abs().max(k[1].abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn derivs(&self, x: impl Into<Vec2>) -> StreamDerivs {
        let [x1, x2] = x.into();
        let mut d = StreamDerivs::default();
        for &([k1, k2], c) in &self.half {
            let (k1, k2) = (f64::from(k1), f64::from(k2));
            let (s, co) = (k1 * x1 + k2 * x2).sin_cos();
            // 2 Re(c e^{iθ}) = 2a, 2 Re(i c e^{iθ}) = −2b
            let a = 2.0 * (c.re * co - c.im * s);
            let b = 2.0 * (c.re * s + c.im * co);
            let kk = k1 * k1 + k2 * k2;
            d.psi += a;
            d.d1 -= k1 * b;
            d.d2 -= k2 * b;
            d.d11 -= k1 * k1 * a;
            d.d12 -= k1 * k2 * a;
            d.d22 -= k2 * k2 * a;
            d.lap -= kk * a;
            d.lap_d1 += kk * k1 * b;
            d.lap_d2 += kk * k2 * b;
        }
        d
    }

    pub fn value(&self, x: impl Into<Vec2>) -> f64 {
        let [x1, x2] = x.into();
        self.half
            .iter()
            .map(|&([k1, k2], c)| {
                let (s, co) = (f64::from(k1) * x1 + f64::from(k2) * x2).sin_cos();
                2.0 * (c.re * co - c.im * s)
            })
            .sum()
    }

    /// `u(x) = (−∂₂ψ, ∂₁ψ)`.
    pub fn velocity(&self, x: impl Into<Vec2>) -> Vec2 {
        let [x1, x2] = x.into();
        let (mut g1, mut g2) = (0.0, 0.0);
        for &([k1, k2], c) in &self.half {
            let (k1, k2) = (f64::from(k1), f64::from(k2));
            let (s, co) = (k1 * x1 + k2 * x2).sin_cos();
            let b = 2.0 * (c.re * s + c.im * co);
            g1 -= k1 * b;
            g2 -= k2 * b;
        }
        [-g2, g1]
    }

    /// `u⊥ = (−u₂, u₁) = −∇ψ`.
    pub fn velocity_perp(&self, x: impl Into<Vec2>) -> Vec2 {
        let [u1, u2] = self.velocity(x);
        [-u2, u1]
    }

    pub fn speed(&self, x: impl Into<Vec2>) -> f64 {
        let [u1, u2] = self.velocity(x);
        u1.hypot(u2)
    }

    /// `Du(x)`, trace-free by construction.
    pub fn jacobian(&self, x: impl Into<Vec2>) -> Mat2 {
        self.derivs(x).jacobian()
    }

    /// `curl u = Δψ`.
    pub fn vorticity(&self, x: impl Into<Vec2>) -> f64 {
        let [x1, x2] = x.into();
        self.half
            .iter()
            .map(|&([k1, k2], c)| {
                let (k1, k2) = (f64::from(k1), f64::from(k2));
                let (s, co) = (k1 * x1 + k2 * x2).sin_cos();
                -2.0 * (k1 * k1 + k2 * k2) * (c.re * co - c.im * s)
            })
            .sum()
    }

    /// Max over a uniform `grid_n × grid_n` grid of the bracket
    /// `|∂₁ψ ∂₂Δψ − ∂₂ψ ∂₁Δψ|`, which vanishes iff `u·∇(curl u) = 0`.
    pub fn steadiness_residual(&self, grid_n: usize) -> f64 {
        let h = TAU / grid_n as f64;
        let mut worst = 0.0_f64;
        for i in 0..grid_n {
            for j in 0..grid_n {
                let d = self.derivs([j as f64 * h, i as f64 * h]);
                worst = worst.max((d.d1 * d.lap_d2 - d.d2 * d.lap_d1).abs());
            }
        }
        worst
    }

    /// Rejects flows whose residual on a 64² grid exceeds [`STEADINESS_LIMIT`].
    pub fn ensure_steady(&self) -> Result<()> {
        let residual = self.steadiness_residual(64);
        if residual > STEADINESS_LIMIT {
            Err(Error::NotSteady {
                residual,
                limit: STEADINESS_LIMIT,
            })
        } else {
            Ok(())
        }
    }

    /// `‖u‖∞` estimated on a uniform `grid_n²` grid.
    pub fn max_speed(&self, grid_n: usize) -> f64 {
        let h = TAU / grid_n as f64;
        (0..grid_n * grid_n)
            .map(|idx| self.speed([(idx % grid_n) as f64 * h, (idx / grid_n) as f64 * h]))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = PI / 2.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cellular_velocity_examples() {
        let psi = FourierStream::cellular();
        let u = psi.velocity([H, H]);
        assert!(close(u[0], 0.0, 1e-15) && close(u[1], 0.0, 1e-15));
        let u = psi.velocity([H, 0.0]);
        assert!(close(u[0], -1.0, 1e-15) && close(u[1], 0.0, 1e-15));
    }

    #[test]
    fn shear_velocity_example() {
        let u = FourierStream::shear().velocity([0.0, H]);
        assert!(close(u[0], -1.0, 1e-15) && close(u[1], 0.0, 1e-15));
    }

    #[test]
    fn cellular_jacobians() {
        let psi = FourierStream::cellular();
        let j0 = psi.jacobian([0.0, 0.0]);
        let want = Mat2::new(-1.0, 0.0, 0.0, 1.0);
        assert!((j0 - want).max_abs() < 1e-15, "{j0:?}");
        let j1 = psi.jacobian([H, H]);
        let want = Mat2::new(0.0, 1.0, -1.0, 0.0);
        assert!((j1 - want).max_abs() < 1e-15, "{j1:?}");
    }

    #[test]
    fn vorticity_examples() {
        assert!(close(
            FourierStream::cellular().vorticity([H, H]),
            -2.0,
            1e-14
        ));
        assert!(close(
            FourierStream::shear().vorticity([0.0, 0.0]),
            1.0,
            1e-14
        ));
    }

    #[test]
    fn vorticity_has_zero_grid_mean() {
        let psi = FourierStream::from_modes(
            "mixed",
            [
                ([1, 2], Complex64::new(0.3, -0.2)),
                ([3, -1], Complex64::new(-0.1, 0.4)),
            ],
            DEFAULT_MAX_MODES,
        )
        .unwrap();
        let n = 64;
        let h = TAU / n as f64;
        let mean: f64 = (0..n * n)
            .map(|i| psi.vorticity([(i % n) as f64 * h, (i / n) as f64 * h]))
            .sum::<f64>()
            / (n * n) as f64;
        assert!(mean.abs() < 1e-12, "{mean}");
    }

    #[test]
    fn steadiness_residuals() {
        assert!(FourierStream::cellular().steadiness_residual(64) <= 1e-12);
        assert!(FourierStream::shear().steadiness_residual(64) <= 1e-12);
        let mixed = FourierStream::from_modes(
            "mixed",
            [
                ([1, 1], Complex64::new(-0.25, 0.0)),
                ([1, -1], Complex64::new(0.25, 0.0)),
                ([2, 0], Complex64::new(0.15, 0.0)),
            ],
            DEFAULT_MAX_MODES,
        )
        .unwrap();
        assert!(mixed.steadiness_residual(64) > 0.1);
        assert!(matches!(
            mixed.ensure_steady(),
            Err(Error::NotSteady { .. })
        ));
    }

    #[test]
    fn cellular_sup_speed_is_one() {
        let s = FourierStream::cellular().max_speed(256);
        assert!(close(s, 1.0, 1e-4), "{s}");
    }

    #[test]
    fn rejects_zero_mode_and_duplicates() {
        let z = FourierStream::from_modes("z", [([0, 0], Complex64::new(1.0, 0.0))], 64);
        assert!(matches!(z, Err(Error::InvalidFlow(_))));
        let d = FourierStream::from_modes(
            "d",
            [
                ([1, 0], Complex64::new(1.0, 0.0)),
                ([1, 0], Complex64::new(2.0, 0.0)),
            ],
            64,
        );
        assert!(matches!(d, Err(Error::InvalidFlow(_))));
    }

    #[test]
    fn one_sided_mode_gets_conjugate_partner() {
        let psi =
            FourierStream::from_modes("p", [([2, 1], Complex64::new(0.5, 0.25))], 64).unwrap();
        assert_eq!(psi.coeff([-2, -1]), Complex64::new(0.5, -0.25));
        assert_eq!(psi.coeffs().len(), 2);
    }

    #[test]
    fn mode_limit_enforced() {
        let modes = (1..=40).map(|k| ([k, 0], Complex64::new(1.0, 0.0)));
        assert!(FourierStream::from_modes("big", modes, DEFAULT_MAX_MODES).is_err());
    }

    #[test]
    fn torus_point_reduction_and_distance() {
        let p = TorusPoint::new(-1e-300, 7.0);
        assert!(p.x1() >= 0.0 && p.x1() < TAU);
        assert!(close(p.x2(), 7.0 - TAU, 1e-15));
        let a = TorusPoint::new(0.1, 0.1);
        let b = TorusPoint::new(TAU - 0.1, TAU - 0.1);
        assert!(close(a.dist(&b), 0.2 * 2f64.sqrt(), 1e-12));
        let far = TorusPoint::new(PI, PI).dist(&TorusPoint::new(0.0, 0.0));
        assert!(far <= PI * 2f64.sqrt() + 1e-12);
    }

    fn random_stream(rng: &mut ChaCha8Rng) -> FourierStream {
        let modes: Vec<_> = (0..4)
            .map(|_| {
                let k = [rng.gen_range(-3..=3), rng.gen_range(1..=3)];
                (
                    k,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect::<BTreeMap<_, _>>()
            .into_iter()
            .collect();
        FourierStream::from_modes("random", modes, 64).unwrap()
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = random_stream(&mut rng);
        let h = 1e-5;
        for _ in 0..100 {
            let x = [rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)];
            let jac = psi.jacobian(x);
            let mut fd = Mat2::ZERO;
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let (up, um) = (psi.velocity(xp), psi.velocity(xm));
                for i in 0..2 {
                    fd.0[i][j] = (up[i] - um[i]) / (2.0 * h);
                }
            }
            let scale = jac.max_abs().max(1.0);
            assert!((jac - fd).max_abs() / scale <= 1e-5, "{jac:?} vs {fd:?}");
            assert_eq!(jac.trace(), 0.0);
            let div = fd.trace();
            assert!(div.abs() <= 1e-6, "fd divergence {div}");
        }
    }

    #[test]
    fn velocity_is_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random_stream(&mut rng);
        for _ in 0..50 {
            let x = [rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)];
            let (a, b) = (psi.velocity(x), psi.velocity([x[0] + TAU, x[1]]));
            let scale = 1.0 + a[0].abs().max(a[1].abs());
            assert!((a[0] - b[0]).abs() <= 1e-14 * scale * 10.0);
            assert!((a[1] - b[1]).abs() <= 1e-14 * scale * 10.0);
        }
    }

    #[test]
    fn mat2_norm2_matches_definition() {
        let m = Mat2::new(3.0, 1.0, -2.0, 0.5);
        // largest eigenvalue of MᵀM, computed directly
        let mtm = m.transpose() * m;
        let tr = mtm.trace();
        let det = mtm.det();
        let lmax = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        assert!(close(m.norm2(), lmax.sqrt(), 1e-14));
    }
}
