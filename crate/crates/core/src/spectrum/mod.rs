//! Fourier–Galerkin truncation of `L w = −⟨u, ∇⟩w − ⟨curl⁻¹w, ∇⟩ curl u` on
//! zero-mean fields, resolvent norms, band profiles across truncation orders
//! and semigroup diagnostics.
//!
//! Coefficient vectors are taken in the weighted basis `|k|·ŵ(k)`, in which
//! the Euclidean norm is the homogeneous H¹ norm `(Σ |k|² |ŵ(k)|²)^{1/2}`.

mod expm;
mod oracle;

use std::collections::HashMap;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowbox::{GridField, RasterPair};
use crate::flowfield::FourierStream;

pub use expm::{expm, semigroup_annulus, AnnulusDiagnostics};
pub use oracle::{apply_l_grid, apply_t_grid};

/// Largest pseudospectrum grid accepted.
pub const MAX_GRID_POINTS: usize = 40_000;

/// Resolvent growth factor across orders that marks a probe as inside the band.
pub const GROWTH_THRESHOLD: f64 = 1.5;

/// Relative variation across orders below which a probe counts as stable.
pub const STABILITY_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveIndex {
    pub k1: i32,
    pub k2: i32,
}

impl WaveIndex {
    pub fn new(k1: i32, k2: i32) -> Self {
        Self { k1, k2 }
    }

    pub fn norm_sq(&self) -> f64 {
        (self.k1 * self.k1 + self.k2 * self.k2) as f64
    }

    pub fn sup_norm(&self) -> i32 {
        self.k1.abs().max(self.k2.abs())
    }
}

/// `(2n+1)² − 1` nonzero wavevectors with `|k|∞ ≤ n`, lexicographic.
pub fn index_map(n_max: i32) -> Vec<WaveIndex> {
    let mut out = Vec::with_capacity(((2 * n_max + 1) * (2 * n_max + 1) - 1) as usize);
    for k1 in -n_max..=n_max {
        for k2 in -n_max..=n_max {
            if (k1, k2) != (0, 0) {
                out.push(WaveIndex::new(k1, k2));
            }
        }
    }
    out
}

/// Unweighted advection and stretching parts on the index map.
struct Parts {
    a: Vec<(usize, usize, Complex64)>,
    t: Vec<(usize, usize, Complex64)>,
}

#[derive(Debug, Clone)]
pub struct GalerkinOperator {
    n_max: i32,
    index: Vec<WaveIndex>,
    position: HashMap<WaveIndex, usize>,
    /// `L_N` in the weighted basis.
    matrix: Mat<Complex64>,
    /// Unweighted advection part `A` (with `L = −A + T`).
    advection: Mat<Complex64>,
}

fn coupling(
    psi: &FourierStream,
    index: &[WaveIndex],
    position: &HashMap<WaveIndex, usize>,
) -> Parts {
    let i = Complex64::new(0.0, 1.0);
    let mut parts = Parts {
        a: Vec::new(),
        t: Vec::new(),
    };
    for (row, k) in index.iter().enumerate() {
        for (m, coeff) in psi.coeffs() {
            let j = WaveIndex::new(k.k1 - m[0], k.k2 - m[1]);
            let Some(&col) = position.get(&j) else {
                continue;
            };
            // û(m) = i m⊥ ψ̂(m), m⊥ = (−m₂, m₁)
            let uhat = [i * coeff * (-m[1] as f64), i * coeff * (m[0] as f64)];
            let a = i * (uhat[0] * j.k1 as f64 + uhat[1] * j.k2 as f64);
            // ω̂₀(m) = −|m|² ψ̂(m); ⟨j⊥, k⟩ = −j₂k₁ + j₁k₂
            let omega = -coeff * ((m[0] * m[0] + m[1] * m[1]) as f64);
            let jperp_k = (-j.k2 * k.k1 + j.k1 * k.k2) as f64;
            let t = -omega * (jperp_k / j.norm_sq());
            if a != Complex64::new(0.0, 0.0) {
                parts.a.push((row, col, a));
            }
            if t != Complex64::new(0.0, 0.0) {
                parts.t.push((row, col, t));
            }
        }
    }
    parts
}

impl GalerkinOperator {
    pub fn assemble(psi: &FourierStream, n_max: i32) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidArgument(format!("n_max = {n_max} < 2")));
        }
        let support = psi.max_wavenumber();
        if support > n_max {
            return Err(Error::SupportExceedsTruncation { support, n_max });
        }
        let index = index_map(n_max);
        let position: HashMap<WaveIndex, usize> =
            index.iter().enumerate().map(|(p, k)| (*k, p)).collect();
        let dim = index.len();
        let parts = coupling(psi, &index, &position);
        let mut advection = Mat::<Complex64>::zeros(dim, dim);
        let mut matrix = Mat::<Complex64>::zeros(dim, dim);
        let weight = |p: usize| index[p].norm_sq().sqrt();
        for &(r, c, a) in &parts.a {
            advection[(r, c)] += a;
            matrix[(r, c)] -= a * (weight(r) / weight(c));
        }
        for &(r, c, t) in &parts.t {
            matrix[(r, c)] += t * (weight(r) / weight(c));
        }
        Ok(Self {
            n_max,
            index,
            position,
            matrix,
            advection,
        })
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn index(&self) -> &[WaveIndex] {
        &self.index
    }

    pub fn position(&self, k: WaveIndex) -> Option<usize> {
        self.position.get(&k).copied()
    }

    /// `L_N` in the weighted basis.
    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    /// Unweighted advection part.
    pub fn advection(&self) -> &Mat<Complex64> {
        &self.advection
    }

    /// `L_N` in plain Fourier coefficients.
    pub fn unweighted(&self) -> Mat<Complex64> {
        let w: Vec<f64> = self.index.iter().map(|k| k.norm_sq().sqrt()).collect();
        Mat::from_fn(self.dim(), self.dim(), |r, c| {
            self.matrix[(r, c)] * (w[c] / w[r])
        })
    }

    /// Weighted coordinates `|k| ŵ(k)` from plain coefficients.
    pub fn weigh(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        coeffs
            .iter()
            .zip(&self.index)
            .map(|(c, k)| c * k.norm_sq().sqrt())
            .collect()
    }

    pub fn unweigh(&self, weighted: &[Complex64]) -> Vec<Complex64> {
        weighted
            .iter()
            .zip(&self.index)
            .map(|(c, k)| c / k.norm_sq().sqrt())
            .collect()
    }

    /// `L_N` applied to plain coefficients.
    pub fn apply(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let x = self.weigh(coeffs);
        let y: Vec<Complex64> = (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.matrix[(r, c)] * x[c]).sum())
            .collect();
        self.unweigh(&y)
    }

    /// Grid field of `n × n` samples with the given plain coefficients.
    pub fn field_from_coeffs(&self, coeffs: &[Complex64], n: usize) -> Result<GridField> {
        if n <= 2 * self.n_max as usize {
            return Err(Error::ResolutionTooCoarse(format!(
                "grid {n} cannot hold |k|∞ ≤ {}",
                self.n_max
            )));
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
        for (c, k) in coeffs.iter().zip(&self.index) {
            let m1 = k.k1.rem_euclid(n as i32) as usize;
            let m2 = k.k2.rem_euclid(n as i32) as usize;
            spec[m2 * n + m1] = *c;
        }
        GridField::from_fourier(n, &spec)
    }

    /// Plain coefficients of a grid field on the index map; modes outside are dropped.
    pub fn coeffs_from_field(&self, f: &GridField) -> Result<Vec<Complex64>> {
        let n = f.n();
        if n <= 2 * self.n_max as usize {
            return Err(Error::ResolutionTooCoarse(format!(
                "grid {n} cannot hold |k|∞ ≤ {}",
                self.n_max
            )));
        }
        let spec = f.fourier();
        Ok(self
            .index
            .iter()
            .map(|k| {
                spec[k.k2.rem_euclid(n as i32) as usize * n + k.k1.rem_euclid(n as i32) as usize]
            })
            .collect())
    }

    /// `max |A + A*|` over entries of the unweighted advection part.
    pub fn advection_skew_defect(&self) -> f64 {
        let a = &self.advection;
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                worst = worst.max((a[(r, c)] + a[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `max |M[−k,−j] − conj M[k,j]|`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, k) in self.index.iter().enumerate() {
            let rr = self.position[&WaveIndex::new(-k.k1, -k.k2)];
            for (c, j) in self.index.iter().enumerate() {
                let cc = self.position[&WaveIndex::new(-j.k1, -j.k2)];
                worst = worst.max((self.matrix[(rr, cc)] - self.matrix[(r, c)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        self.matrix
            .eigenvalues()
            .map_err(|e| Error::Linalg(format!("eigenvalues: {e:?}")))
    }
}

/// Smallest singular value of `L_N − α I` in the weighted basis.
pub fn sigma_min(op: &GalerkinOperator, alpha: Complex64) -> Result<f64> {
    let dim = op.dim();
    let shifted = Mat::from_fn(dim, dim, |r, c| {
        if r == c {
            op.matrix[(r, c)] - alpha
        } else {
            op.matrix[(r, c)]
        }
    });
    let sv = singular_values(&shifted)?;
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Singular values of a square matrix, nonincreasing.
///
/// The SVD occasionally fails to converge on near-degenerate shifts. In that case
/// fall back to the Hermitian dilation `[[0, A], [Aᴴ, 0]]`, whose eigenvalues are `±σᵢ`.
pub(crate) fn singular_values(a: &Mat<Complex64>) -> Result<Vec<f64>> {
    if let Ok(sv) = a.singular_values() {
        return Ok(sv);
    }
    let n = a.nrows();
    let dilation = Mat::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, false) => a[(r, c - n)],
        (false, true) => a[(c, r - n)].conj(),
        _ => Complex64::new(0.0, 0.0),
    });
    let eig = dilation
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("svd: {e:?}")))?;
    Ok(eig[n..].iter().rev().map(|s| s.max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoPoint {
    pub re: f64,
    pub im: f64,
    pub sigma_min: f64,
    pub resolvent_norm: f64,
}

/// Inclusive axis `lo, lo + step, …, ≤ hi`.
pub fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || hi.is_nan() || lo.is_nan() || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "bad range {lo}:{hi}:{step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

/// `σ_min(L_N − α)` on a rectangular grid given as `(lo, hi, step)` per axis,
/// ordered by `im` then `re`.
pub fn pseudospectrum_grid(
    op: &GalerkinOperator,
    re_range: (f64, f64, f64),
    im_range: (f64, f64, f64),
) -> Result<Vec<PseudoPoint>> {
    let res = axis(re_range.0, re_range.1, re_range.2)?;
    let ims = axis(im_range.0, im_range.1, im_range.2)?;
    let points = res.len() * ims.len();
    if points > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge {
            points,
            limit: MAX_GRID_POINTS,
        });
    }
    let alphas: Vec<(f64, f64)> = ims
        .iter()
        .flat_map(|im| res.iter().map(move |re| (*re, *im)))
        .collect();
    alphas
        .par_iter()
        .map(|&(re, im)| {
            let s = sigma_min(op, Complex64::new(re, im))?;
            Ok(PseudoPoint {
                re,
                im,
                sigma_min: s,
                resolvent_norm: 1.0 / s,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandVerdict {
    InteriorGrowing,
    ExteriorStable,
    Inconclusive,
}

impl BandVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            BandVerdict::InteriorGrowing => "InteriorGrowing",
            BandVerdict::ExteriorStable => "ExteriorStable",
            BandVerdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub probe_re: f64,
    pub probe_im: f64,
    pub n_max: i32,
    pub resolvent_norm: f64,
    pub verdict: BandVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub probe_re: f64,
    pub probe_im: f64,
    pub growth: f64,
    pub variation: f64,
    pub verdict: BandVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    pub rows: Vec<BandRow>,
    pub probes: Vec<ProbeSummary>,
}

/// Classifies resolvent norms listed by ascending truncation order.
pub fn classify_profile(norms: &[f64]) -> (f64, f64, BandVerdict) {
    let growth = norms[norms.len() - 1] / norms[0];
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().copied().fold(0.0, f64::max);
    let variation = (hi - lo) / lo;
    let verdict = if growth >= GROWTH_THRESHOLD {
        BandVerdict::InteriorGrowing
    } else if variation <= STABILITY_THRESHOLD {
        BandVerdict::ExteriorStable
    } else {
        BandVerdict::Inconclusive
    };
    (growth, variation, verdict)
}

/// Resolvent norms `1/σ_min(L_N − α)` for every probe and order, with a verdict per probe.
pub fn band_profile(
    psi: &FourierStream,
    n_max_list: &[i32],
    probes: &[Complex64],
) -> Result<BandProfile> {
    if n_max_list.is_empty() || !n_max_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "n_max list must be nonempty and ascending".into(),
        ));
    }
    let ops: Vec<GalerkinOperator> = n_max_list
        .iter()
        .map(|n| GalerkinOperator::assemble(psi, *n))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..probes.len())
        .flat_map(|p| (0..ops.len()).map(move |o| (p, o)))
        .collect();
    let norms: Vec<f64> = cells
        .par_iter()
        .map(|&(p, o)| sigma_min(&ops[o], probes[p]).map(|s| 1.0 / s))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (p, alpha) in probes.iter().enumerate() {
        let series = &norms[p * ops.len()..(p + 1) * ops.len()];
        let (growth, variation, verdict) = classify_profile(series);
        for (o, n) in n_max_list.iter().enumerate() {
            rows.push(BandRow {
                probe_re: alpha.re,
                probe_im: alpha.im,
                n_max: *n,
                resolvent_norm: series[o],
                verdict,
            });
        }
        summaries.push(ProbeSummary {
            probe_re: alpha.re,
            probe_im: alpha.im,
            growth,
            variation,
            verdict,
        });
    }
    Ok(BandProfile {
        rows,
        probes: summaries,
    })
}

/// H¹ quotients of a rasterized flow box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualQuotient {
    /// `‖(L + α) f‖ / ‖f‖` with `(L + α) f = −F̃∘H⁻¹ + T f`.
    pub full: f64,
    /// `‖F̃∘H⁻¹‖ / ‖f‖`, the advective part alone.
    pub advective: f64,
    /// `‖T f‖ / ‖f‖`.
    pub compact: f64,
}

pub fn residual_quotient(psi: &FourierStream, pair: &RasterPair) -> Result<ResidualQuotient> {
    let norm_f = pair.f.h1_seminorm();
    if norm_f == 0.0 {
        return Err(Error::EmptyDenominator(0.0));
    }
    let tf = apply_t_grid(psi, &pair.f)?;
    let mut residual = tf.clone();
    residual.axpy(Complex64::new(-1.0, 0.0), &pair.f_tilde);
    Ok(ResidualQuotient {
        full: residual.h1_seminorm() / norm_f,
        advective: pair.f_tilde.h1_seminorm() / norm_f,
        compact: tf.h1_seminorm() / norm_f,
    })
}
