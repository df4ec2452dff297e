//! Matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant, and the semigroup annulus diagnostics built on it.

use faer::prelude::Solve;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GalerkinOperator;
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Mat<Complex64>) -> f64 {
    (0..a.ncols())
        .map(|c| (0..a.nrows()).map(|r| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `Σ cᵢ Aᵢ + c_I · I`.
fn combo(terms: &[(f64, &Mat<Complex64>)], identity: f64) -> Mat<Complex64> {
    let n = terms[0].1.nrows();
    Mat::from_fn(n, n, |r, c| {
        let mut v: Complex64 = terms.iter().map(|(w, m)| m[(r, c)] * *w).sum();
        if r == c {
            v += identity;
        }
        v
    })
}

/// `exp(A)`.
pub fn expm(a: &Mat<Complex64>) -> Result<Mat<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument("expm needs a square matrix".into()));
    }
    let norm = norm1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = Mat::from_fn(n, n, |r, c| a[(r, c)] * scale);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = combo(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], 0.0);
    let u_poly = &a6 * &inner_u;
    let u_poly = combo(
        &[(1.0, &u_poly), (b[7], &a6), (b[5], &a4), (b[3], &a2)],
        b[1],
    );
    let u = &a * &u_poly;
    let inner_v = combo(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], 0.0);
    let v_poly = &a6 * &inner_v;
    let v = combo(
        &[(1.0, &v_poly), (b[6], &a6), (b[4], &a4), (b[2], &a2)],
        b[0],
    );
    let p = combo(&[(1.0, &v), (1.0, &u)], 0.0);
    let q = combo(&[(1.0, &v), (-1.0, &u)], 0.0);
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if r.col_iter()
        .any(|c| c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        return Err(Error::Linalg("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// Spectral quantities of `exp(t L_N)` set against the predicted annulus
/// `e^{−|t|Λ} ≤ |z| ≤ e^{|t|Λ}`. Truncations need not fill the annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDiagnostics {
    pub t: f64,
    pub n_max: i32,
    pub modulus_max: f64,
    pub modulus_min: f64,
    pub predicted_outer: f64,
    pub predicted_inner: f64,
    /// `max | |eig exp(tL_N)| − exp(t Re eig L_N) |`, moduli sorted, relative to `max(1, ·)`.
    pub mapping_error: f64,
    /// `‖exp(t L_N)‖` in the weighted norm.
    pub norm: f64,
    /// `t⁻¹ log ‖exp(t L_N)‖` (0 at `t = 0`).
    pub rate: f64,
}

pub fn semigroup_annulus(
    op: &GalerkinOperator,
    t: f64,
    big_lambda: f64,
) -> Result<AnnulusDiagnostics> {
    if t.abs() > 5.0 {
        return Err(Error::InvalidArgument(format!(
            "|t| = {} exceeds 5",
            t.abs()
        )));
    }
    if op.dim() > 2000 {
        return Err(Error::InvalidArgument(format!(
            "dimension {} exceeds 2000",
            op.dim()
        )));
    }
    let m = op.matrix();
    let scaled = Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * t);
    let e = expm(&scaled)?;
    let eig_e = e
        .eigenvalues()
        .map_err(|err| Error::Linalg(format!("eigenvalues: {err:?}")))?;
    let eig_l = op.eigenvalues()?;
    let mut lhs: Vec<f64> = eig_e.iter().map(|z| z.norm()).collect();
    let mut rhs: Vec<f64> = eig_l.iter().map(|z| (t * z.re).exp()).collect();
    lhs.sort_by(f64::total_cmp);
    rhs.sort_by(f64::total_cmp);
    let mapping_error = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs() / b.max(1.0))
        .fold(0.0, f64::max);
    let norm = super::singular_values(&e)?.into_iter().fold(0.0, f64::max);
    Ok(AnnulusDiagnostics {
        t,
        n_max: op.n_max(),
        modulus_max: lhs[lhs.len() - 1],
        modulus_min: lhs[0],
        predicted_outer: (t.abs() * big_lambda).exp(),
        predicted_inner: (-t.abs() * big_lambda).exp(),
        mapping_error,
        norm,
        rate: if t == 0.0 { 0.0 } else { norm.ln() / t },
    })
}
