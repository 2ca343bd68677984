//! The manifold of determinant-1 positive forms: real forms, tangent
//! directions, the exponential chart `H ↦ Q·exp(Q⁻¹H)` and the orthogonal
//! projection onto the tangent space `{H : Tr(Q⁻¹H) = 0}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gram::{normalized_f64, GramMatrix};

/// A real symmetric positive definite form.
#[derive(Clone, Debug, PartialEq)]
pub struct RealForm {
    m: DMatrix<f64>,
}

impl RealForm {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Domain("real form must be a non-empty square matrix".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let scale = m[(i, j)].abs().max(m[(j, i)].abs()).max(1.0);
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { index: 0, minor: "float Cholesky failed".into() });
        }
        Ok(RealForm { m: sym })
    }

    /// The exact form as floats, without rescaling.
    pub fn from_gram(q: &GramMatrix) -> Self {
        RealForm { m: q.to_f64() }
    }

    /// `Q / det(Q)^{1/n}`.
    pub fn normalized(q: &GramMatrix) -> Self {
        RealForm { m: normalized_f64(q) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn inverse(&self) -> RealForm {
        let chol = self.m.clone().cholesky().expect("positive definite");
        let inv = chol.inverse();
        RealForm { m: (&inv + inv.transpose()) * 0.5 }
    }

    /// Rescales to determinant 1.
    pub fn normalize(&self) -> RealForm {
        let c = self.determinant().powf(1.0 / self.dim() as f64);
        RealForm { m: &self.m / c }
    }

    pub fn norm(&self, x: &[i64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..n {
                row += self.m[(i, j)] * x[j] as f64;
            }
            acc += row * x[i] as f64;
        }
        acc
    }
}

/// A symmetric direction `H` at a base point.
#[derive(Clone, Debug)]
pub struct TangentDirection {
    pub base: RealForm,
    pub h: DMatrix<f64>,
}

impl TangentDirection {
    /// Wraps `h` after checking `|Tr(Q₀⁻¹H)| ≤ 1e-12·‖Q₀⁻¹‖‖H‖`.
    pub fn new(base: RealForm, h: DMatrix<f64>) -> Result<Self> {
        let inv = base.inverse();
        let tr = trace_product(inv.matrix(), &h);
        let scale = inv.matrix().norm() * h.norm();
        if tr.abs() > 1e-12 * scale.max(1e-300) && tr.abs() > 1e-300 {
            return Err(Error::Domain(format!("direction is not tangent: Tr(Q0^-1 H) = {tr:e}")));
        }
        Ok(TangentDirection { base, h })
    }

    /// `Tr(Q₀⁻¹H)`.
    pub fn trace_defect(&self) -> f64 {
        trace_product(self.base.inverse().matrix(), &self.h)
    }
}

/// `⟨A, B⟩ = Tr(AB)`.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// Orthogonal projection of `s` onto `{H : ⟨Q₀⁻¹, H⟩ = 0}`.
pub fn tangent_project(base: &RealForm, s: &DMatrix<f64>) -> TangentDirection {
    let inv = base.inverse();
    let p = inv.matrix();
    let lambda = trace_product(p, s) / trace_product(p, p);
    TangentDirection { base: base.clone(), h: s - p * lambda }
}

/// `Q₀·exp(t·Q₀⁻¹H)`, evaluated as `L·exp(t·L⁻¹HL⁻ᵗ)·Lᵗ` with `Q₀ = LLᵗ`
/// so that the symmetric eigendecomposition applies and the result is
/// symmetric by construction.
pub fn exp_map(dir: &TangentDirection, t: f64) -> Result<RealForm> {
    let q0 = dir.base.matrix();
    let chol = q0.clone().cholesky().expect("positive definite base");
    let l = chol.l();
    let linv = l.clone().try_inverse().expect("triangular factor is invertible");
    let m = &linv * &dir.h * linv.transpose() * t;
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if !max.is_finite() || max > 700.0 {
        return Err(Error::NoConvergence(format!("matrix exponential argument too large: spectral radius {max:e}")));
    }
    let exp_d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
    let e = &eig.eigenvectors * exp_d * eig.eigenvectors.transpose();
    let out = &l * e * l.transpose();
    RealForm::new((&out + out.transpose()) * 0.5)
}
