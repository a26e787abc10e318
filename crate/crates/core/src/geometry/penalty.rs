use serde::{Deserialize, Serialize};

use crate::io_fmt;

/// Separable penalty `h(v) = max_{d in D} <d, v>` identified with its dual set `D`.
///
/// | variant   | `h(v)`        | `D`                          |
/// |-----------|---------------|------------------------------|
/// | `L1`      | `λ‖v‖₁`       | box `[-λ, λ]^k`              |
/// | `GroupL2` | `λ‖v‖₂`       | ball of radius `λ`           |
/// | `Linf`    | `λ‖v‖∞`       | `λ`-scaled cross-polytope    |
/// | `Zero`    | `0`           | `{0}`                        |
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Penalty {
    #[serde(rename = "l1")]
    L1 {
        #[serde(serialize_with = "io_fmt::f64_17")]
        lambda: f64,
    },
    #[serde(rename = "group_l2")]
    GroupL2 {
        #[serde(serialize_with = "io_fmt::f64_17")]
        lambda: f64,
    },
    #[serde(rename = "linf")]
    Linf {
        #[serde(serialize_with = "io_fmt::f64_17")]
        lambda: f64,
    },
    #[serde(rename = "zero")]
    Zero,
}

pub(crate) fn soft_threshold(c: f64, t: f64) -> f64 {
    // ties at the kink go to exactly zero
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Euclidean projection onto `{x : ‖x‖₁ ≤ r}` by the sort-and-threshold rule.
pub(crate) fn project_l1_ball(v: &[f64], r: f64) -> Vec<f64> {
    if l1(v) <= r {
        return v.to_vec();
    }
    if r <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - r) / (j + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}

impl Penalty {
    pub fn l1(lambda: f64) -> Self {
        Penalty::L1 { lambda }
    }

    pub fn group_l2(lambda: f64) -> Self {
        Penalty::GroupL2 { lambda }
    }

    pub fn linf(lambda: f64) -> Self {
        Penalty::Linf { lambda }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Penalty::L1 { lambda } | Penalty::GroupL2 { lambda } | Penalty::Linf { lambda } => lambda,
            Penalty::Zero => 0.0,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let l = self.lambda();
        if !(l.is_finite() && l >= 0.0) {
            return Err(crate::Error::Parameter(format!(
                "penalty level must be finite and nonnegative, got {l}"
            )));
        }
        Ok(())
    }

    /// Norm whose `λ`-sublevel set is `D` (∞ for `Zero` unless `v = 0`).
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            Penalty::L1 { .. } => linf(v),
            Penalty::GroupL2 { .. } => l2(v),
            Penalty::Linf { .. } => l1(v),
            Penalty::Zero => {
                if v.iter().all(|&x| x == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Largest `s ∈ [0, 1]` with `s·v ∈ D`.
    pub fn dual_scaling(&self, v: &[f64]) -> f64 {
        let nrm = self.dual_norm(v);
        let lam = self.lambda();
        if nrm <= lam {
            1.0
        } else if nrm.is_infinite() {
            0.0
        } else {
            lam / nrm
        }
    }

    /// `h(v)`
    pub fn value(&self, v: &[f64]) -> f64 {
        let lam = self.lambda();
        match self {
            Penalty::L1 { .. } => lam * l1(v),
            Penalty::GroupL2 { .. } => lam * l2(v),
            Penalty::Linf { .. } => lam * linf(v),
            Penalty::Zero => 0.0,
        }
    }

    /// Euclidean projection onto `t·D`.
    pub fn project_dual(&self, v: &[f64], t: f64) -> Vec<f64> {
        let r = t * self.lambda();
        match self {
            Penalty::L1 { .. } => v.iter().map(|x| x.clamp(-r, r)).collect(),
            Penalty::GroupL2 { .. } => {
                let nrm = l2(v);
                if nrm <= r {
                    v.to_vec()
                } else {
                    v.iter().map(|x| x * (r / nrm)).collect()
                }
            }
            Penalty::Linf { .. } => project_l1_ball(v, r),
            Penalty::Zero => vec![0.0; v.len()],
        }
    }

    pub fn dual_contains(&self, v: &[f64], tol: f64) -> bool {
        match self {
            Penalty::Zero => linf(v) <= tol,
            _ => self.dual_norm(v) <= self.lambda() + tol,
        }
    }

    /// `prox_{t h}(v) = v − P_{tD}(v)`
    pub fn prox(&self, v: &[f64], t: f64) -> Vec<f64> {
        match self {
            Penalty::L1 { lambda } => v.iter().map(|&x| soft_threshold(x, t * lambda)).collect(),
            _ => {
                let p = self.project_dual(v, t);
                v.iter().zip(&p).map(|(a, b)| a - b).collect()
            }
        }
    }
}

/// Support-function value `h(v)`; free-function form of [`Penalty::value`].
pub fn support_value(penalty: &Penalty, v: &[f64]) -> f64 {
    penalty.value(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_values() {
        assert_eq!(support_value(&Penalty::l1(2.0), &[1.0, -3.0]), 8.0);
        assert_eq!(support_value(&Penalty::group_l2(1.0), &[3.0, 4.0]), 5.0);
        for p in [Penalty::l1(1.0), Penalty::group_l2(2.0), Penalty::linf(3.0), Penalty::Zero] {
            assert_eq!(support_value(&p, &[0.0, 0.0]), 0.0);
        }
        assert_eq!(support_value(&Penalty::linf(2.0), &[1.0, -3.0]), 6.0);
    }

    #[test]
    fn soft_threshold_tie_is_zero() {
        assert_eq!(soft_threshold(1.0, 1.0), 0.0);
        assert_eq!(soft_threshold(-1.0, 1.0), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
    }

    #[test]
    fn l1_ball_projection() {
        let p = project_l1_ball(&[3.0, 1.0], 2.0);
        assert!((p[0] - 2.0).abs() < 1e-15 && p[1] == 0.0);
        let p = project_l1_ball(&[1.0, 1.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(project_l1_ball(&[0.1, -0.2], 1.0), vec![0.1, -0.2]);
    }

    #[test]
    fn moreau_decomposition() {
        let v = [0.3, -2.0, 1.5];
        for p in [Penalty::l1(1.0), Penalty::group_l2(1.0), Penalty::linf(1.0), Penalty::Zero] {
            let pr = p.prox(&v, 0.7);
            let pd = p.project_dual(&v, 0.7);
            for j in 0..3 {
                assert!((pr[j] + pd[j] - v[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&Penalty::group_l2(0.5)).unwrap();
        assert!(s.contains("\"type\":\"group_l2\""));
        let back: Penalty = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Penalty::group_l2(0.5));
        let z: Penalty = serde_json::from_str(r#"{"type":"zero"}"#).unwrap();
        assert_eq!(z, Penalty::Zero);
    }
}
