//! Bivectors in su(n) ∧ su(n) and membership tests against 𝔥 ∧ 𝔤.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie_core::{AlgebraElement, GroupElement, SuBasis, SubalgebraSpec};
use crate::scalar::Scalar;

/// Default pass threshold for [`membership_h_wedge_g`] style checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// An element of su(n) ∧ su(n).
///
/// `coeffs[(a, b)]` is the coefficient of `basis_a ∧ basis_b`, and the matrix
/// is kept antisymmetric by construction. As a 2-tensor the bivector equals
/// `Σ_{a,b} coeffs[(a, b)] basis_a ⊗ basis_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bivector<T: Scalar = f64> {
    n: usize,
    coeffs: DMatrix<T>,
}

impl<T: Scalar> Bivector<T> {
    pub fn zero(n: usize) -> Self {
        let d = n * n - 1;
        Self {
            n,
            coeffs: DMatrix::from_element(d, d, T::zero()),
        }
    }

    /// Wraps an exactly antisymmetric coefficient matrix.
    pub fn from_antisymmetric(n: usize, coeffs: DMatrix<T>) -> Result<Self> {
        let d = n * n - 1;
        if coeffs.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: coeffs.nrows(),
            });
        }
        let mut worst: Option<f64> = None;
        for a in 0..d {
            for b in a..d {
                let s = coeffs[(a, b)].clone() + coeffs[(b, a)].clone();
                if s != T::zero() {
                    worst = Some(worst.unwrap_or(0.0).max(s.abs_f64()));
                }
            }
        }
        if let Some(residual) = worst {
            return Err(Error::NotAntisymmetric { residual });
        }
        Ok(Self { n, coeffs })
    }

    /// `basis_a ∧ basis_b`.
    pub fn basis_pair(n: usize, a: usize, b: usize) -> Self {
        let mut out = Self::zero(n);
        out.add_pair(a, b, T::one());
        out
    }

    /// Adds `value · basis_a ∧ basis_b`.
    pub fn add_pair(&mut self, a: usize, b: usize, value: T) {
        if a == b {
            return;
        }
        self.coeffs[(a, b)] += value.clone();
        self.coeffs[(b, a)] -= value;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &DMatrix<T> {
        &self.coeffs
    }

    pub fn coeff(&self, a: usize, b: usize) -> T {
        self.coeffs[(a, b)].clone()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|x| *x == T::zero())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            n: self.n,
            coeffs: self.coeffs.map(|x| x * s.clone()),
        }
    }

    /// `(L ⊗ L)` applied to the tensor: coefficients `L C Lᵀ`.
    pub fn transformed(&self, l: &DMatrix<T>) -> Self {
        Self {
            n: self.n,
            coeffs: mirror_upper(l * &self.coeffs * l.transpose()),
        }
    }

    /// Number of unordered basis pairs with a nonzero coefficient.
    pub fn support_size(&self) -> usize {
        let d = self.coeffs.nrows();
        (0..d)
            .flat_map(|a| ((a + 1)..d).map(move |b| (a, b)))
            .filter(|&(a, b)| self.coeffs[(a, b)] != T::zero())
            .count()
    }
}

impl Bivector<f64> {
    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.coeffs)
    }

    /// Norm induced by the Frobenius inner product on su(n): a wedge of two
    /// Frobenius-orthonormal algebra elements has norm 1.
    pub fn frobenius_norm(&self) -> f64 {
        let basis = SuBasis::shared(self.n).expect("bivector dimension is valid");
        self.norm_with(&basis)
    }

    pub(crate) fn norm_with(&self, basis: &SuBasis<f64>) -> f64 {
        let l = basis
            .gram()
            .clone()
            .cholesky()
            .expect("Gram matrix is positive definite")
            .unpack();
        (l.transpose() * &self.coeffs * l).norm() / std::f64::consts::SQRT_2
    }
}

impl<T: Scalar> std::ops::Add for Bivector<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n, "bivector dimension mismatch");
        Self {
            n: self.n,
            coeffs: self.coeffs + rhs.coeffs,
        }
    }
}

impl<T: Scalar> std::ops::Sub for Bivector<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n, "bivector dimension mismatch");
        Self {
            n: self.n,
            coeffs: self.coeffs - rhs.coeffs,
        }
    }
}

impl<T: Scalar> std::ops::Neg for Bivector<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            n: self.n,
            coeffs: -self.coeffs,
        }
    }
}

impl<T: Scalar> SuBasis<T> {
    /// `x ∧ y` in this basis.
    pub fn wedge(&self, x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<Bivector<T>> {
        if x.n() != y.n() {
            return Err(Error::DimensionMismatch {
                left: x.n(),
                right: y.n(),
            });
        }
        let cx = self.coordinates(x)?;
        let cy = self.coordinates(y)?;
        Ok(wedge_coords(self.n(), &cx, &cy))
    }

    /// The derivation `ad_h` extended to bivectors:
    /// `ad_h(X ∧ Y) = [h, X] ∧ Y + X ∧ [h, Y]`.
    pub fn ad_bivector(&self, h: &AlgebraElement<T>, lambda: &Bivector<T>) -> Result<Bivector<T>> {
        if lambda.n != self.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: lambda.n,
            });
        }
        let a = self.ad_matrix(h)?;
        let c = &lambda.coeffs;
        Ok(Bivector {
            n: lambda.n,
            coeffs: mirror_upper(&a * c + c * a.transpose()),
        })
    }

    /// `Ad_g` extended to bivectors.
    pub fn adjoint_bivector(&self, g: &GroupElement<T>, lambda: &Bivector<T>) -> Result<Bivector<T>> {
        if lambda.n != self.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: lambda.n,
            });
        }
        let m = self.adjoint_matrix(g)?;
        Ok(lambda.transformed(&m))
    }
}

/// Rebuilds the lower triangle from the upper one, so rounding cannot break antisymmetry.
fn mirror_upper<T: Scalar>(mut m: DMatrix<T>) -> DMatrix<T> {
    let d = m.nrows();
    for a in 0..d {
        m[(a, a)] = T::zero();
        for b in a + 1..d {
            m[(b, a)] = -m[(a, b)].clone();
        }
    }
    m
}

pub(crate) fn wedge_coords<T: Scalar>(n: usize, x: &DVector<T>, y: &DVector<T>) -> Bivector<T> {
    Bivector {
        n,
        coeffs: x * y.transpose() - y * x.transpose(),
    }
}

/// `x ∧ y` over the float basis of su(n).
pub fn wedge(x: &AlgebraElement<f64>, y: &AlgebraElement<f64>) -> Result<Bivector<f64>> {
    SuBasis::shared(x.n())?.wedge(x, y)
}

/// `ad_h(Λ)` over the float basis of su(n).
pub fn ad_bivector(h: &AlgebraElement<f64>, lambda: &Bivector<f64>) -> Result<Bivector<f64>> {
    SuBasis::shared(h.n())?.ad_bivector(h, lambda)
}

/// Result of projecting a bivector onto 𝔪 ∧ 𝔪, the complement of 𝔥 ∧ 𝔤.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    /// Norm of `witness`.
    pub residual: f64,
    /// The 𝔪 ∧ 𝔪 component, zero iff the input lies in 𝔥 ∧ 𝔤.
    pub witness: Bivector<f64>,
}

impl MembershipReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Frobenius-orthogonal projector onto 𝔪 = 𝔥^⊥, acting on basis coordinates.
pub(crate) fn complement_projector(basis: &SuBasis<f64>, h: &SubalgebraSpec<f64>) -> Result<DMatrix<f64>> {
    let d = basis.dim();
    let g = basis.gram();
    // Gram-Schmidt in the Frobenius inner product
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for x in h.basis() {
        let mut v = basis.coordinates(x)?;
        for _ in 0..2 {
            for q in &ortho {
                let p = (q.transpose() * g * &v)[(0, 0)];
                v -= q * p;
            }
        }
        let norm = (v.transpose() * g * &v)[(0, 0)].max(0.0).sqrt();
        if norm > 1e-12 {
            ortho.push(v / norm);
        }
    }
    let mut p_h = DMatrix::<f64>::zeros(d, d);
    for q in &ortho {
        p_h += q * (q.transpose() * g);
    }
    Ok(DMatrix::identity(d, d) - p_h)
}

/// Decides whether `lambda ∈ 𝔥 ∧ 𝔤` via the splitting su(n) = 𝔥 ⊕ 𝔪: the
/// obstruction is exactly the 𝔪 ∧ 𝔪 block.
pub fn membership_h_wedge_g(lambda: &Bivector<f64>, h: &SubalgebraSpec<f64>) -> Result<MembershipReport> {
    if lambda.n != h.n() {
        return Err(Error::DimensionMismatch {
            left: lambda.n,
            right: h.n(),
        });
    }
    let basis = SuBasis::shared(h.n())?;
    let p_m = complement_projector(&basis, h)?;
    let witness = lambda.transformed(&p_m);
    Ok(MembershipReport {
        residual: witness.norm_with(&basis),
        witness,
    })
}
