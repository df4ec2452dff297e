//! Piecewise cutoff profiles `γ` in time and the transverse tent `β`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_E: f64 = 0.367_879_441_171_442_33;

/// One smooth piece, written in the reduced variable `r = (t − t0)/scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Zero,
    /// `c0 + c1·r`
    Affine {
        c0: f64,
        c1: f64,
    },
    /// `exp(−r)`
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    a: f64,
    b: f64,
    t0: f64,
    scale: f64,
    shape: Shape,
    ends: (f64, f64),
}

impl Piece {
    fn value(&self, t: f64) -> f64 {
        // pinned endpoint values keep γ exactly continuous at breakpoints
        if t == self.a {
            return self.ends.0;
        }
        if t == self.b {
            return self.ends.1;
        }
        self.formula(t)
    }

    fn formula(&self, t: f64) -> f64 {
        let r = (t - self.t0) / self.scale;
        match self.shape {
            Shape::Zero => 0.0,
            Shape::Affine { c0, c1 } => c0 + c1 * r,
            Shape::Decay => (-r).exp(),
        }
    }

    fn deriv(&self, t: f64) -> f64 {
        let r = (t - self.t0) / self.scale;
        match self.shape {
            Shape::Zero => 0.0,
            Shape::Affine { c1, .. } => c1 / self.scale,
            Shape::Decay => -(-r).exp() / self.scale,
        }
    }
}

/// Time cutoff `γ`.
///
/// `Plus` ramps up linearly on `[0, K]`, decays like `e^{−(t−K)/M}` on
/// `[K, K+M]` and returns linearly to zero on `[K+M, K+2M]`. `Minus` is its
/// mirror image `t ↦ −t`. `Triangle` is `1 − |t|/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CutoffGamma {
    Plus { k: f64, m: f64 },
    Minus { k: f64, m: f64 },
    Triangle { n: f64 },
}

impl CutoffGamma {
    pub fn plus(k: f64, m: f64) -> Result<Self> {
        check_positive(&[k, m])?;
        Ok(Self::Plus { k, m })
    }

    pub fn minus(k: f64, m: f64) -> Result<Self> {
        check_positive(&[k, m])?;
        Ok(Self::Minus { k, m })
    }

    pub fn triangle(n: f64) -> Result<Self> {
        check_positive(&[n])?;
        Ok(Self::Triangle { n })
    }

    /// `Plus` for `λ ≥ 0`, `Minus` for `λ < 0`.
    pub fn for_lambda(lambda: f64, k: f64, m: f64) -> Result<Self> {
        if lambda >= 0.0 {
            Self::plus(k, m)
        } else {
            Self::minus(k, m)
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        let inf = f64::INFINITY;
        let piece = |a, b, t0, scale, shape, ends| Piece {
            a,
            b,
            t0,
            scale,
            shape,
            ends,
        };
        let zero = |a, b| piece(a, b, 0.0, 1.0, Shape::Zero, (0.0, 0.0));
        let ramp = Shape::Affine { c0: 0.0, c1: 1.0 };
        let tail = Shape::Affine {
            c0: 2.0 * INV_E,
            c1: -INV_E,
        };
        match *self {
            CutoffGamma::Plus { k, m } => vec![
                zero(-inf, 0.0),
                piece(0.0, k, 0.0, k, ramp, (0.0, 1.0)),
                piece(k, k + m, k, m, Shape::Decay, (1.0, INV_E)),
                piece(k + m, k + 2.0 * m, k, m, tail, (INV_E, 0.0)),
                zero(k + 2.0 * m, inf),
            ],
            CutoffGamma::Minus { k, m } => vec![
                zero(-inf, -k - 2.0 * m),
                piece(-k - 2.0 * m, -k - m, -k, -m, tail, (0.0, INV_E)),
                piece(-k - m, -k, -k, -m, Shape::Decay, (INV_E, 1.0)),
                piece(-k, 0.0, 0.0, -k, ramp, (1.0, 0.0)),
                zero(0.0, inf),
            ],
            CutoffGamma::Triangle { n } => vec![
                zero(-inf, -n),
                piece(-n, 0.0, -n, n, ramp, (0.0, 1.0)),
                piece(
                    0.0,
                    n,
                    0.0,
                    n,
                    Shape::Affine { c0: 1.0, c1: -1.0 },
                    (1.0, 0.0),
                ),
                zero(n, inf),
            ],
        }
    }

    /// Piece containing `t`, with intervals closed on the left.
    fn piece_right(&self, t: f64) -> Piece {
        let p = self.pieces();
        *p.iter()
            .find(|q| q.a <= t && t < q.b)
            .unwrap_or(&p[p.len() - 1])
    }

    /// Piece containing `t`, with intervals closed on the right.
    fn piece_left(&self, t: f64) -> Piece {
        let p = self.pieces();
        *p.iter().find(|q| q.a < t && t <= q.b).unwrap_or(&p[0])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.piece_right(t).value(t)
    }

    /// `γ′(t)`, right-hand limit at breakpoints.
    pub fn deriv(&self, t: f64) -> f64 {
        self.piece_right(t).deriv(t)
    }

    /// `γ′(t)`, left-hand limit at breakpoints.
    pub fn deriv_left(&self, t: f64) -> f64 {
        self.piece_left(t).deriv(t)
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            CutoffGamma::Plus { k, m } => (0.0, k + 2.0 * m),
            CutoffGamma::Minus { k, m } => (-k - 2.0 * m, 0.0),
            CutoffGamma::Triangle { n } => (-n, n),
        }
    }

    /// Kinks of `γ`, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces().windows(2).map(|w| w[0].b).collect()
    }

    /// `max(1/K, 1/M)` or `1/N`.
    pub fn deriv_bound(&self) -> f64 {
        match *self {
            CutoffGamma::Plus { k, m } | CutoffGamma::Minus { k, m } => (1.0 / k).max(1.0 / m),
            CutoffGamma::Triangle { n } => 1.0 / n,
        }
    }
}

fn check_positive(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite() && *x > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "cutoff lengths must be positive: {xs:?}"
        )))
    }
}

/// Transverse tent `β(τ) = (s − |τ|)` on `[−s, s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffBeta {
    pub s: f64,
}

impl CutoffBeta {
    pub fn new(s: f64) -> Result<Self> {
        check_positive(&[s])?;
        Ok(Self { s })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        (self.s - tau.abs()).max(0.0)
    }
}
