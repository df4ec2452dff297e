//! Flow-box charts `H(t, τ) = φ_t ∘ ψ̃_τ(x0)` around an orbit and the
//! rasterization of `F(t, τ) = e^{αt} γ(t) β(τ)` and
//! `F̃(t, τ) = e^{αt} γ′(t) β(τ)` onto the torus grid.
//!
//! `ψ̃` is the flow of `u⊥/|u|²`, so `det DH = 1` and the pushforward of the
//! `(t, τ)` lattice measure is the Lebesgue measure on the box. `H` is never
//! inverted: lattice samples are deposited into grid cells instead.

pub mod cutoff;
pub mod grid;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, rk45, IntegratorConfig, TransverseField, STAGNATION_SPEED};
use crate::error::{Error, Result};
use crate::flowfield::{FourierStream, Mat2, TorusPoint, Vec2};

pub use cutoff::{CutoffBeta, CutoffGamma};
pub use grid::GridField;

/// Transverse half-width used when none is given.
pub const DEFAULT_S: f64 = 0.05;

/// Rails cached along the transverse segment at construction.
const CACHED_RAILS: usize = 17;

const MAX_RAILS: usize = 200_000;
const MAX_REFINE_DEPTH: usize = 48;
const MAX_TIME_SAMPLES: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct FlowBoxChart {
    psi: FourierStream,
    x0: TorusPoint,
    half_length: f64,
    s: f64,
    cfg: IntegratorConfig,
    rail_taus: Vec<f64>,
    rail_bases: Vec<Vec2>,
}

impl FlowBoxChart {
    /// Chart on `{|t| ≤ half_length, |τ| ≤ s}` based at `x0`.
    pub fn new(
        psi: &FourierStream,
        x0: TorusPoint,
        half_length: f64,
        s: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Self> {
        if psi.speed(x0) <= STAGNATION_SPEED {
            return Err(Error::PreconditionViolated(
                "chart base point is a stagnation point".into(),
            ));
        }
        if !(half_length > 0.0 && s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "chart needs positive N and s (got {half_length}, {s})"
            )));
        }
        cfg.validate()?;
        cfg.check_horizon(half_length)?;
        let rail_taus: Vec<f64> = (0..CACHED_RAILS)
            .map(|i| -s + 2.0 * s * i as f64 / (CACHED_RAILS - 1) as f64)
            .collect();
        let rhs = dynamics::transverse_rhs(psi, TransverseField::AreaNormalized);
        let rail_bases = rk45::sample(rhs, x0.coords(), &rail_taus, cfg)?;
        Ok(Self {
            psi: psi.clone(),
            x0,
            half_length,
            s,
            cfg: *cfg,
            rail_taus,
            rail_bases,
        })
    }

    pub fn x0(&self) -> TorusPoint {
        self.x0
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn stream(&self) -> &FourierStream {
        &self.psi
    }

    fn check_strip(&self, t: f64, tau: f64) -> Result<()> {
        let slack = 1e-12;
        if t.abs() > self.half_length * (1.0 + slack) || tau.abs() > self.s * (1.0 + slack) {
            return Err(Error::InvalidArgument(format!(
                "({t}, {tau}) outside the strip |t| ≤ {}, |τ| ≤ {}",
                self.half_length, self.s
            )));
        }
        Ok(())
    }

    /// `ψ̃_τ(x0)` in covering-plane coordinates.
    pub fn transverse_base(&self, tau: f64) -> Result<Vec2> {
        if let Some(i) = self.rail_taus.iter().position(|r| *r == tau) {
            return Ok(self.rail_bases[i]);
        }
        let rhs = dynamics::transverse_rhs(&self.psi, TransverseField::AreaNormalized);
        rk45::integrate(rhs, self.x0.coords(), tau, &self.cfg)
    }

    /// `H(t, τ)` in covering-plane coordinates.
    pub fn map_plane(&self, t: f64, tau: f64) -> Result<Vec2> {
        self.check_strip(t, tau)?;
        let base = self.transverse_base(tau)?;
        dynamics::flow_plane(&self.psi, base, t, &self.cfg)
    }

    /// `H(t, τ) = φ_t(ψ̃_τ(x0))`.
    pub fn chart_map(&self, t: f64, tau: f64) -> Result<TorusPoint> {
        self.map_plane(t, tau).map(TorusPoint::from)
    }

    /// `DH(t, τ)` by central differences with step `h`.
    pub fn jacobian_fd(&self, t: f64, tau: f64, h: f64) -> Result<Mat2> {
        let tp = self.map_plane(t + h, tau)?;
        let tm = self.map_plane(t - h, tau)?;
        let sp = self.map_plane(t, tau + h)?;
        let sm = self.map_plane(t, tau - h)?;
        let c = 0.5 / h;
        Ok(Mat2::new(
            (tp[0] - tm[0]) * c,
            (sp[0] - sm[0]) * c,
            (tp[1] - tm[1]) * c,
            (sp[1] - sm[1]) * c,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `F = e^{αt} γ β`.
    F,
    /// `F̃ = e^{αt} γ′ β`.
    FTilde,
}

/// What to rasterize through a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub lambda: f64,
    pub xi: f64,
    pub gamma: CutoffGamma,
    pub beta: CutoffBeta,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterStats {
    pub rails: usize,
    pub time_samples: usize,
    pub dt: f64,
    /// Largest distance between neighboring lattice images, in grid spacings.
    pub max_gap_cells: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterPair {
    pub f: GridField,
    pub f_tilde: GridField,
    pub stats: RasterStats,
}

struct Rail {
    tau: f64,
    points: Vec<Vec2>,
}

struct Lattice<'a> {
    chart: &'a FlowBoxChart,
    times: Vec<f64>,
    /// `e^{αt}γ(t)·dt` and `e^{αt}γ′(t)·dt` per time sample.
    weight_f: Vec<Complex64>,
    weight_ft: Vec<Complex64>,
    beta: CutoffBeta,
    gap: f64,
}

impl Lattice<'_> {
    fn rail(&self, tau: f64) -> Result<Rail> {
        let base = self.chart.transverse_base(tau)?;
        let rhs = dynamics::velocity_rhs(&self.chart.psi);
        let points = rk45::sample(rhs, base, &self.times, &self.chart.cfg)?;
        Ok(Rail { tau, points })
    }

    fn separation(a: &Rail, b: &Rail) -> f64 {
        a.points
            .iter()
            .zip(&b.points)
            .map(|(p, q)| TorusPoint::from(*p).dist(&TorusPoint::from(*q)))
            .fold(0.0, f64::max)
    }

    fn deposit(&self, rail: &Rail, w_tau: f64, f: &mut GridField, ft: &mut GridField) {
        let b = self.beta.eval(rail.tau) * w_tau;
        if b == 0.0 {
            return;
        }
        for ((p, wf), wt) in rail.points.iter().zip(&self.weight_f).zip(&self.weight_ft) {
            if *wf != Complex64::new(0.0, 0.0) {
                f.deposit(*p, wf * b);
            }
            if *wt != Complex64::new(0.0, 0.0) {
                ft.deposit(*p, wt * b);
            }
        }
    }

    /// Bisects `[a, b]` until neighboring rail images are within `gap`, depositing leaves.
    fn refine(
        &self,
        a: Rail,
        b: Rail,
        f: &mut GridField,
        ft: &mut GridField,
        count: &mut usize,
        worst: &mut f64,
    ) -> Result<()> {
        let mut stack = vec![(a, b, 0usize)];
        while let Some((a, b, depth)) = stack.pop() {
            let sep = Self::separation(&a, &b);
            if sep > self.gap {
                if depth >= MAX_REFINE_DEPTH || *count >= MAX_RAILS {
                    return Err(Error::ResolutionTooCoarse(format!(
                        "neighboring rails at τ = {:.3e} stay {sep:.3e} apart after {depth} bisections",
                        a.tau
                    )));
                }
                let mid = self.rail(0.5 * (a.tau + b.tau))?;
                *count += 1;
                let mid_copy = Rail {
                    tau: mid.tau,
                    points: mid.points.clone(),
                };
                stack.push((mid, b, depth + 1));
                stack.push((a, mid_copy, depth + 1));
            } else {
                *worst = worst.max(sep);
                let w = 0.5 * (b.tau - a.tau);
                self.deposit(&a, w, f, ft);
                self.deposit(&b, w, f, ft);
            }
        }
        Ok(())
    }
}

/// Rasterizes both `F` and `F̃` from one shared `(t, τ)` lattice.
///
/// The time step keeps consecutive images within half a grid cell; the
/// transverse lattice is bisected wherever neighboring rails drift more than
/// half a cell apart, so every fully covered cell receives at least four
/// lattice points.
pub fn rasterize_pair(chart: &FlowBoxChart, spec: &RasterSpec) -> Result<RasterPair> {
    let (a, b) = spec.gamma.support();
    let n_half = chart.half_length;
    if a < -n_half || b > n_half {
        return Err(Error::PreconditionViolated(format!(
            "cutoff support [{a}, {b}] exceeds the chart half-length {n_half}"
        )));
    }
    if (spec.beta.s - chart.s).abs() > 1e-15 * chart.s {
        return Err(Error::PreconditionViolated(
            "β half-width differs from the chart's".into(),
        ));
    }
    if spec.n < 8 {
        return Err(Error::InvalidArgument(format!("grid {} < 8", spec.n)));
    }
    let h = TAU / spec.n as f64;
    let umax = chart.psi.max_speed(128) * 1.05;
    if 2.0 * chart.s / umax < h {
        return Err(Error::ResolutionTooCoarse(format!(
            "box width {:.3e} is below the grid spacing {h:.3e}",
            2.0 * chart.s / umax
        )));
    }
    let gap = 0.5 * h;
    let n_t = ((b - a) * umax / gap).ceil() as usize + 1;
    if n_t > MAX_TIME_SAMPLES {
        return Err(Error::ResolutionTooCoarse(format!(
            "{n_t} time samples per rail"
        )));
    }
    let times = dynamics::uniform_times(a, b, n_t.max(2));
    let dt = (b - a) / (times.len() - 1) as f64;
    let alpha = Complex64::new(spec.lambda, spec.xi);
    let (mut weight_f, mut weight_ft) = (Vec::new(), Vec::new());
    for (i, t) in times.iter().enumerate() {
        let w = if i == 0 || i == times.len() - 1 {
            0.5 * dt
        } else {
            dt
        };
        let e = (alpha * t).exp() * w;
        weight_f.push(e * spec.gamma.eval(*t));
        weight_ft.push(e * spec.gamma.deriv(*t));
    }
    let lattice = Lattice {
        chart,
        times,
        weight_f,
        weight_ft,
        beta: spec.beta,
        gap,
    };

    let taus = chart.rail_taus.clone();
    let parts: Vec<(GridField, GridField, usize, f64)> = taus
        .par_windows(2)
        .map(|w| {
            let mut f = GridField::zeros(spec.n);
            let mut ft = GridField::zeros(spec.n);
            let mut count = 2;
            let mut worst = 0.0;
            lattice.refine(
                lattice.rail(w[0])?,
                lattice.rail(w[1])?,
                &mut f,
                &mut ft,
                &mut count,
                &mut worst,
            )?;
            Ok((f, ft, count, worst))
        })
        .collect::<Result<_>>()?;

    let mut f = GridField::zeros(spec.n);
    let mut ft = GridField::zeros(spec.n);
    let mut rails = 1;
    let mut worst = 0.0f64;
    let one = Complex64::new(1.0, 0.0);
    for (pf, pft, count, w) in &parts {
        f.axpy(one, pf);
        ft.axpy(one, pft);
        rails += count - 1;
        worst = worst.max(*w);
    }
    Ok(RasterPair {
        f,
        f_tilde: ft,
        stats: RasterStats {
            rails,
            time_samples: lattice.times.len(),
            dt,
            max_gap_cells: worst / h,
        },
    })
}

/// `F ∘ H⁻¹` or `F̃ ∘ H⁻¹` on the `n × n` grid.
pub fn rasterize(chart: &FlowBoxChart, spec: &RasterSpec, which: FieldKind) -> Result<GridField> {
    let pair = rasterize_pair(chart, spec)?;
    Ok(match which {
        FieldKind::F => pair.f,
        FieldKind::FTilde => pair.f_tilde,
    })
}

/// `f − c·f̄` with `c = mean(f)/mean(f̄)`; requires disjoint supports.
pub fn mean_zero_pair(f: &GridField, fbar: &GridField) -> Result<GridField> {
    if f.n() != fbar.n() {
        return Err(Error::InvalidArgument("grids differ in size".into()));
    }
    let overlap = f
        .support()
        .iter()
        .zip(fbar.support())
        .filter(|(a, b)| **a && *b)
        .count();
    if overlap > 0 {
        return Err(Error::OverlappingSupports(overlap));
    }
    let mbar = fbar.mean();
    if mbar.norm() == 0.0 {
        return Err(Error::EmptyDenominator(0.0));
    }
    let c = f.mean() / mbar;
    let mut out = f.clone();
    out.axpy(-c, fbar);
    // remove the rounding residue of the mean on the partner's support
    let residue = out.mean();
    if residue != Complex64::new(0.0, 0.0) {
        let cells = fbar.support();
        let count = cells.iter().filter(|b| **b).count() as f64;
        let shift = residue * (f.n() * f.n()) as f64 / count;
        for (v, inside) in out.values_mut().iter_mut().zip(cells) {
            if inside {
                *v -= shift;
            }
        }
    }
    Ok(out)
}

/// Partner box for [`mean_zero_pair`]: `β(τ)·Triangle(t)` with `α = 0`, based at
/// the first point of a fixed 16² lattice whose box misses `f` by at least one cell.
pub fn partner_field(
    psi: &FourierStream,
    f: &GridField,
    s: f64,
    half_length: f64,
    cfg: &IntegratorConfig,
) -> Result<GridField> {
    let n = f.n();
    let occupied = dilate(&f.support(), n);
    let umax = psi.max_speed(64);
    let lattice = 16;
    let h = TAU / lattice as f64;
    for idx in 0..lattice * lattice {
        let x0 = TorusPoint::new(
            (idx % lattice) as f64 * h + 0.5 * h,
            (idx / lattice) as f64 * h + 0.5 * h,
        );
        let speed = psi.speed(x0);
        if speed < 0.5 * umax {
            continue;
        }
        if occupied[cell_of(x0.coords(), n)] {
            continue;
        }
        let chart = FlowBoxChart::new(psi, x0, half_length, s, cfg)?;
        let spec = RasterSpec {
            lambda: 0.0,
            xi: 0.0,
            gamma: CutoffGamma::triangle(half_length)?,
            beta: CutoffBeta::new(s)?,
            n,
        };
        let candidate = rasterize(&chart, &spec, FieldKind::F)?;
        let clash = candidate
            .support()
            .iter()
            .zip(&occupied)
            .any(|(a, b)| *a && *b);
        if !clash {
            return Ok(candidate);
        }
    }
    Err(Error::OverlappingSupports(usize::MAX))
}

fn cell_of(x: Vec2, n: usize) -> usize {
    let h = TAU / n as f64;
    let i1 = (x[0].rem_euclid(TAU) / h).round() as usize % n;
    let i2 = (x[1].rem_euclid(TAU) / h).round() as usize % n;
    i2 * n + i1
}

fn dilate(mask: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i2 in 0..n {
        for i1 in 0..n {
            if mask[i2 * n + i1] {
                for d2 in [n - 1, 0, 1] {
                    for d1 in [n - 1, 0, 1] {
                        out[((i2 + d2) % n) * n + (i1 + d1) % n] = true;
                    }
                }
            }
        }
    }
    out
}

/// Smooth fields against which weak convergence is probed.
pub fn test_fields(n: usize) -> Vec<GridField> {
    let c = |v: f64| Complex64::new(v, 0.0);
    vec![
        GridField::from_fn(n, |x1, _| c(x1.sin())),
        GridField::from_fn(n, |_, x2| c(x2.cos())),
        GridField::from_fn(n, |x1, x2| c((x1 + x2).sin())),
        GridField::from_fn(n, |x1, x2| c((2.0 * x1 - x2).cos())),
        GridField::from_fn(n, |x1, x2| c(x1.sin() * (2.0 * x2).cos())),
    ]
}

/// `|⟨f/‖f‖_{H¹}, g⟩|` for each of the [`test_fields`].
pub fn weak_pairings(f: &GridField) -> Result<Vec<f64>> {
    let norm = f.h1_seminorm();
    if norm == 0.0 {
        return Err(Error::EmptyDenominator(0.0));
    }
    Ok(test_fields(f.n())
        .iter()
        .map(|g| f.inner(g).norm() / norm)
        .collect())
}
