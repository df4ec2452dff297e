//! Pseudo-spectral evaluation of `L` on grid samples, independent of the
//! Galerkin assembly: derivatives and `curl⁻¹` in Fourier space, products on
//! the grid, 2/3-rule dealiasing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flowbox::grid::wavenumber;
use crate::flowbox::GridField;
use crate::flowfield::FourierStream;

fn dealias(spec: &mut [Complex64], n: usize) {
    let cut = (n / 3) as i64;
    for m2 in 0..n {
        for m1 in 0..n {
            if wavenumber(m1, n).abs() > cut || wavenumber(m2, n).abs() > cut {
                spec[m2 * n + m1] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// `L w` on the grid of `w`.
pub fn apply_l_grid(psi: &FourierStream, w: &GridField) -> Result<GridField> {
    let n = w.n();
    let mut what = w.fourier();
    let scale = what.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if what[0].norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::PreconditionViolated(format!(
            "field has nonzero mean {:.3e}",
            what[0].norm()
        )));
    }
    let mut band = 0i64;
    for m2 in 0..n {
        for m1 in 0..n {
            if what[m2 * n + m1].norm() > 1e-13 * scale {
                band = band
                    .max(wavenumber(m1, n).abs())
                    .max(wavenumber(m2, n).abs());
            }
        }
    }
    let needed = 4 * band.max(psi.max_wavenumber() as i64);
    if (n as i64) < needed {
        return Err(Error::ResolutionTooCoarse(format!(
            "grid {n} below {needed}"
        )));
    }
    what[0] = Complex64::new(0.0, 0.0);
    dealias(&mut what, n);

    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut d1 = vec![zero; n * n];
    let mut d2 = vec![zero; n * n];
    let mut v1 = vec![zero; n * n];
    let mut v2 = vec![zero; n * n];
    for m2 in 0..n {
        let k2 = wavenumber(m2, n) as f64;
        for m1 in 0..n {
            let k1 = wavenumber(m1, n) as f64;
            let idx = m2 * n + m1;
            let c = what[idx];
            d1[idx] = i * k1 * c;
            d2[idx] = i * k2 * c;
            let ksq = k1 * k1 + k2 * k2;
            if ksq > 0.0 {
                // Δφ = w, v = (−∂₂φ, ∂₁φ)
                let phi = -c / ksq;
                v1[idx] = -i * k2 * phi;
                v2[idx] = i * k1 * phi;
            }
        }
    }
    let to_grid = |spec: &[Complex64]| GridField::from_fourier(n, spec);
    let (d1, d2, v1, v2) = (to_grid(&d1)?, to_grid(&d2)?, to_grid(&v1)?, to_grid(&v2)?);

    let h = std::f64::consts::TAU / n as f64;
    let mut out = GridField::zeros(n);
    for (idx, slot) in out.values_mut().iter_mut().enumerate() {
        let x = [(idx % n) as f64 * h, (idx / n) as f64 * h];
        let d = psi.derivs(x);
        let [u1, u2] = d.velocity();
        let adv = d1.values()[idx] * u1 + d2.values()[idx] * u2;
        let stretch = v1.values()[idx] * d.lap_d1 + v2.values()[idx] * d.lap_d2;
        *slot = -adv - stretch;
    }
    let mut spec = out.fourier();
    dealias(&mut spec, n);
    GridField::from_fourier(n, &spec)
}

/// `T w = −⟨curl⁻¹w, ∇⟩ curl u` for any grid field; the top third of the
/// input spectrum is dropped so the product with `∇ curl u` stays unaliased.
pub fn apply_t_grid(psi: &FourierStream, w: &GridField) -> Result<GridField> {
    let n = w.n();
    if (n as i64) < 4 * psi.max_wavenumber() as i64 {
        return Err(Error::ResolutionTooCoarse(format!(
            "grid {n} too coarse for the stream"
        )));
    }
    let mut what = w.fourier();
    dealias(&mut what, n);
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut v1 = vec![zero; n * n];
    let mut v2 = vec![zero; n * n];
    for m2 in 0..n {
        let k2 = wavenumber(m2, n) as f64;
        for m1 in 0..n {
            let k1 = wavenumber(m1, n) as f64;
            let ksq = k1 * k1 + k2 * k2;
            if ksq > 0.0 {
                let idx = m2 * n + m1;
                let phi = -what[idx] / ksq;
                v1[idx] = -i * k2 * phi;
                v2[idx] = i * k1 * phi;
            }
        }
    }
    let v1 = GridField::from_fourier(n, &v1)?;
    let v2 = GridField::from_fourier(n, &v2)?;
    let h = std::f64::consts::TAU / n as f64;
    let mut out = GridField::zeros(n);
    for (idx, slot) in out.values_mut().iter_mut().enumerate() {
        let d = psi.derivs([(idx % n) as f64 * h, (idx / n) as f64 * h]);
        *slot = -(v1.values()[idx] * d.lap_d1 + v2.values()[idx] * d.lap_d2);
    }
    Ok(out)
}
