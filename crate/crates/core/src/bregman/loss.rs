use crate::error::{Error, Result};
use crate::geometry::io::{LossKind, LossSpec};
use crate::numerics::Vector;

/// Clamp margin for the logistic conjugate's domain `(0, 1)`.
pub const LOGISTIC_EPS: f64 = 1e-12;

/// Smooth, strictly convex, coordinate-separable loss `f(z)`.
///
/// The dual potential is `g(v) = f*(−v)`, so `∇g(v) = −∇f*(−v)`,
/// `∇g*(x) = −∇f(−x)`, and the anchor is `b = −∇f(0)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SmoothLoss {
    /// `½‖y − z‖²`
    Quadratic { y: Vector },
    /// `−yᵀz + Σ log(1 + e^{z_j})`, `y ∈ {0,1}ⁿ`
    Logistic { y: Vector },
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

impl SmoothLoss {
    pub fn quadratic(y: Vector) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite response".into()));
        }
        Ok(SmoothLoss::Quadratic { y })
    }

    pub fn logistic(y: Vector) -> Result<Self> {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Data("logistic labels must be 0 or 1".into()));
        }
        Ok(SmoothLoss::Logistic { y })
    }

    pub fn from_spec(spec: &LossSpec) -> Result<Self> {
        let y = Vector::from_column_slice(&spec.y);
        match spec.kind {
            LossKind::Quadratic => Self::quadratic(y),
            LossKind::Logistic => Self::logistic(y),
        }
    }

    pub fn y(&self) -> &Vector {
        match self {
            SmoothLoss::Quadratic { y } | SmoothLoss::Logistic { y } => y,
        }
    }

    pub fn dim(&self) -> usize {
        self.y().len()
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, SmoothLoss::Quadratic { .. })
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            SmoothLoss::Quadratic { y } => {
                0.5 * y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            SmoothLoss::Logistic { y } => y.iter().zip(z).map(|(yj, &zj)| softplus(zj) - yj * zj).sum(),
        }
    }

    /// `f'_j(z_j)`
    #[inline]
    pub fn grad_j(&self, j: usize, zj: f64) -> f64 {
        match self {
            SmoothLoss::Quadratic { y } => zj - y[j],
            SmoothLoss::Logistic { y } => sigmoid(zj) - y[j],
        }
    }

    /// `f''_j(z_j)`
    #[inline]
    pub fn hess_j(&self, _j: usize, zj: f64) -> f64 {
        match self {
            SmoothLoss::Quadratic { .. } => 1.0,
            SmoothLoss::Logistic { .. } => {
                let s = sigmoid(zj);
                s * (1.0 - s)
            }
        }
    }

    pub fn gradient(&self, z: &[f64]) -> Vector {
        Vector::from_iterator(z.len(), z.iter().enumerate().map(|(j, &zj)| self.grad_j(j, zj)))
    }

    /// Upper bound on every `f''_j`.
    pub fn curvature_bound(&self) -> f64 {
        match self {
            SmoothLoss::Quadratic { .. } => 1.0,
            SmoothLoss::Logistic { .. } => 0.25,
        }
    }

    /// `∇f*(v)`; for the logistic loss `v + y` is clamped into `[ε, 1 − ε]`.
    /// The flag reports whether any coordinate was clamped.
    pub fn conjugate_gradient(&self, v: &[f64]) -> (Vector, bool) {
        match self {
            SmoothLoss::Quadratic { y } => (Vector::from_iterator(v.len(), y.iter().zip(v).map(|(a, b)| a + b)), false),
            SmoothLoss::Logistic { y } => {
                let mut clamped = false;
                let out = y.iter().zip(v).map(|(yj, vj)| {
                    let mu = yj + vj;
                    let m = mu.clamp(LOGISTIC_EPS, 1.0 - LOGISTIC_EPS);
                    clamped |= m != mu;
                    m.ln() - (-m).ln_1p()
                });
                (Vector::from_iterator(v.len(), out), clamped)
            }
        }
    }

    /// `f*(v)`; errors outside the domain.
    pub fn conjugate_value(&self, v: &[f64]) -> Result<f64> {
        match self {
            SmoothLoss::Quadratic { y } => Ok(y.iter().zip(v).map(|(a, b)| a * b + 0.5 * b * b).sum()),
            SmoothLoss::Logistic { y } => {
                let mut s = 0.0;
                for (yj, vj) in y.iter().zip(v) {
                    let mu = yj + vj;
                    if !(0.0..=1.0).contains(&mu) {
                        return Err(Error::Domain(format!("logistic conjugate undefined at mean {mu}")));
                    }
                    s += xlogx(mu) + xlogx(1.0 - mu);
                }
                Ok(s)
            }
        }
    }

    /// `g(v) = f*(−v)`
    pub fn g(&self, v: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        self.conjugate_value(&neg)
    }

    /// `∇g(v) = −∇f*(−v)`, with the clamp flag of [`SmoothLoss::conjugate_gradient`].
    pub fn grad_g(&self, v: &[f64]) -> (Vector, bool) {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let (g, c) = self.conjugate_gradient(&neg);
        (-g, c)
    }

    /// `∇g*(θ) = −∇f(−θ)`
    pub fn grad_g_star(&self, theta: &[f64]) -> Vector {
        Vector::from_iterator(theta.len(), theta.iter().enumerate().map(|(j, &t)| -self.grad_j(j, -t)))
    }

    /// Diagonal of `∇²g*(θ)`, i.e. `f''_j(−θ_j)`.
    pub fn hess_g_star(&self, theta: &[f64]) -> Vector {
        Vector::from_iterator(theta.len(), theta.iter().enumerate().map(|(j, &t)| self.hess_j(j, -t)))
    }

    /// `b = −∇f(0)`
    pub fn anchor(&self) -> Vector {
        -self.gradient(&vec![0.0; self.dim()])
    }

    /// True when `v` lies in the open domain of `g`.
    pub fn in_domain(&self, v: &[f64]) -> bool {
        match self {
            SmoothLoss::Quadratic { .. } => v.iter().all(|x| x.is_finite()),
            SmoothLoss::Logistic { y } => y.iter().zip(v).all(|(yj, vj)| {
                let mu = yj - vj;
                mu > 0.0 && mu < 1.0
            }),
        }
    }
}

/// `D_g(u, b) = g(u) − g(b) − <∇g(b), u − b>`.
pub fn bregman_divergence(loss: &SmoothLoss, u: &[f64], b: &[f64]) -> Result<f64> {
    if u.len() != loss.dim() || b.len() != loss.dim() {
        return Err(Error::shape("divergence arguments differ from the loss dimension"));
    }
    match loss {
        SmoothLoss::Quadratic { .. } => Ok(0.5 * u.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()),
        SmoothLoss::Logistic { .. } => {
            if !loss.in_domain(b) {
                return Err(Error::Domain("divergence base point is outside the domain".into()));
            }
            let gu = loss.g(u)?;
            let gb = loss.g(b)?;
            let (db, _) = loss.grad_g(b);
            let lin: f64 = db.iter().zip(u.iter().zip(b)).map(|(d, (x, y))| d * (x - y)).sum();
            Ok((gu - gb - lin).max(0.0))
        }
    }
}
