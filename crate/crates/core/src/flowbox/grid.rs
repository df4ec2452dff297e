//! Complex samples on the uniform `n × n` torus grid.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::flowfield::Vec2;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Signed wavenumber of FFT bin `m` on an `n`-point axis.
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Values at `x = (2π i₁/n, 2π i₂/n)`, stored row-major by `x₂` then `x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let h = TAU / n as f64;
        let values = (0..n * n)
            .map(|idx| f((idx % n) as f64 * h, (idx / n) as f64 * h))
            .collect();
        Self { n, values }
    }

    pub fn from_values(n: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} values for an {n}×{n} grid",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(2)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i2 * self.n + i1
    }

    pub fn get(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[self.index(i1, i2)]
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / (self.n * self.n) as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(∫ |f|² dx)^{1/2}` by the rectangle rule.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()).sqrt()
    }

    /// `∫ f ḡ dx` by the rectangle rule.
    pub fn inner(&self, other: &GridField) -> Complex64 {
        assert_eq!(self.n, other.n);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.cell_area()
    }

    pub fn support(&self) -> Vec<bool> {
        self.values
            .iter()
            .map(|v| *v != Complex64::new(0.0, 0.0))
            .collect()
    }

    pub fn support_count(&self) -> usize {
        self.support().iter().filter(|b| **b).count()
    }

    pub fn scaled(&self, a: Complex64) -> GridField {
        GridField {
            n: self.n,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: Complex64, other: &GridField) {
        assert_eq!(self.n, other.n);
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
    }

    /// Bilinear (cloud-in-cell) deposit of `mass` at `x`; values are densities.
    pub fn deposit(&mut self, x: Vec2, mass: Complex64) {
        let n = self.n;
        let h = self.spacing();
        let g1 = x[0].rem_euclid(TAU) / h;
        let g2 = x[1].rem_euclid(TAU) / h;
        let (f1, f2) = (g1.floor(), g2.floor());
        let (w1, w2) = (g1 - f1, g2 - f2);
        let i1 = f1 as usize % n;
        let i2 = f2 as usize % n;
        let j1 = (i1 + 1) % n;
        let j2 = (i2 + 1) % n;
        let m = mass / self.cell_area();
        self.values[i2 * n + i1] += m * ((1.0 - w1) * (1.0 - w2));
        self.values[i2 * n + j1] += m * (w1 * (1.0 - w2));
        self.values[j2 * n + i1] += m * ((1.0 - w1) * w2);
        self.values[j2 * n + j1] += m * (w1 * w2);
    }

    /// Fourier coefficients `f̂(k) = n⁻² Σ f(x) e^{−ik·x}` in the same layout.
    pub fn fourier(&self) -> Vec<Complex64> {
        let mut data = self.values.clone();
        fft2(&mut data, self.n, false);
        let norm = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= norm);
        data
    }

    pub fn from_fourier(n: usize, coeffs: &[Complex64]) -> Result<Self> {
        let mut data = coeffs.to_vec();
        if data.len() != n * n {
            return Err(Error::InvalidArgument(
                "coefficient array size mismatch".into(),
            ));
        }
        fft2(&mut data, n, true);
        Ok(Self { n, values: data })
    }

    /// Homogeneous H¹ norm `(Σ |k|² |f̂(k)|²)^{1/2}` in the coefficient convention.
    pub fn h1_seminorm(&self) -> f64 {
        let n = self.n;
        let c = self.fourier();
        let mut acc = 0.0;
        for m2 in 0..n {
            let k2 = wavenumber(m2, n) as f64;
            for m1 in 0..n {
                let k1 = wavenumber(m1, n) as f64;
                acc += (k1 * k1 + k2 * k2) * c[m2 * n + m1].norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// In-place 2-D FFT, rows then columns; unnormalized in both directions.
pub(crate) fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(data);
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i1 in 0..n {
        for i2 in 0..n {
            col[i2] = data[i2 * n + i1];
        }
        fft.process(&mut col);
        for i2 in 0..n {
            data[i2 * n + i1] = col[i2];
        }
    }
}
