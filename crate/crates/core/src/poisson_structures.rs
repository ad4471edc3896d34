//! The standard multiplicative Poisson structure on SU(n) given by its
//! r-matrix, the affine family obtained by right translation by `σ_c`, and the
//! infinitesimal coisotropy test for block subgroups.
//!
//! Every tensor living at a group point `g` is stored left-trivialized: the
//! bivector `Λ(g)` with `π(g) = L_g Λ(g)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lie_core::{AlgebraElement, GroupElement, SuBasis, SubalgebraSpec};
use crate::scalar::Scalar;
use crate::tensor_algebra::{membership_h_wedge_g, Bivector, MembershipReport, MEMBERSHIP_TOL};

/// Failures above this level are structural rather than numerical noise.
pub const STRUCTURAL_FAILURE: f64 = 1e-3;

impl<T: Scalar> SuBasis<T> {
    /// `r = Σ_{i<j} X_ij^+ ∧ X_ij^-`.
    pub fn r_matrix(&self) -> Bivector<T> {
        let n = self.n();
        let mut r = Bivector::zero(n);
        for i in 0..n {
            for j in (i + 1)..n {
                r.add_pair(self.plus_index(i, j), self.minus_index(i, j), T::one());
            }
        }
        r
    }

    /// `Λ(u) = r - Ad_{u^{-1}}(r)`, the left trivialization of
    /// `π(u) = L_u r - R_u r`.
    pub fn left_trivialized_pi(&self, u: &GroupElement<T>) -> Result<Bivector<T>> {
        let r = self.r_matrix();
        let moved = self.adjoint_bivector(&u.inverse(), &r)?;
        Ok(r - moved)
    }

    /// `X_σ = Ad_{σ^{-1}}(r) - r`, the value at the identity of the right
    /// translate of `π` by `σ`.
    pub fn x_sigma(&self, sigma: &GroupElement<T>) -> Result<Bivector<T>> {
        let r = self.r_matrix();
        Ok(self.adjoint_bivector(&sigma.inverse(), &r)? - r)
    }

    /// Closed form of `Ad_{σ_c^{-1}}(r)` in terms of `s = √c`, `t = √(1-c)`:
    ///
    /// ```text
    /// (2c-1) r + 2(1-c) Σ_{0<i<j<n-1} X_ij^+ ∧ X_ij^-
    ///   + 2st [X_{0,n-1}^+ ∧ i(e_00 - e_{n-1,n-1})
    ///          + Σ_{0<i<n-1} (X_{i,n-1}^+ ∧ X_{0i}^- - X_{0i}^+ ∧ X_{i,n-1}^-)]
    /// ```
    pub fn adjoint_r_closed_form(&self, s: &T, t: &T) -> Result<Bivector<T>> {
        let n = self.n();
        let c = s.clone() * s.clone();
        let two = T::from_i64(2);
        let last = n - 1;
        let mut out = self.r_matrix().scale(two.clone() * c.clone() - T::one());
        let inner = two.clone() * (T::one() - c);
        for i in 1..last {
            for j in (i + 1)..last {
                out.add_pair(self.plus_index(i, j), self.minus_index(i, j), inner.clone());
            }
        }
        let mixed = two * s.clone() * t.clone();
        let torus = AlgebraElement::<T>::diag_pair(n, 0, last);
        let corner = self.wedge(&AlgebraElement::x_plus(n, 0, last), &torus)?;
        out = out + corner.scale(mixed.clone());
        for i in 1..last {
            out.add_pair(self.plus_index(i, last), self.minus_index(0, i), mixed.clone());
            out.add_pair(self.plus_index(0, i), self.minus_index(i, last), -mixed.clone());
        }
        Ok(out)
    }
}

/// `σ_c` built from `s = √c` and `t = √(1-c)`:
/// `s e_00 + t e_{n-1,0} - t e_{0,n-1} + s e_{n-1,n-1} + Σ_{0<i<n-1} e_ii`.
pub fn sigma_from_roots<T: Scalar>(n: usize, s: T, t: T) -> Result<GroupElement<T>> {
    if n < 2 {
        return Err(Error::InvalidDimension { n, min: 2 });
    }
    let mut g = GroupElement::<T>::identity(n).matrix().clone();
    let last = n - 1;
    g[(0, 0)] = Complex::new(s.clone(), T::zero());
    g[(last, last)] = Complex::new(s, T::zero());
    g[(last, 0)] = Complex::new(t.clone(), T::zero());
    g[(0, last)] = Complex::new(-t, T::zero());
    Ok(GroupElement::from_matrix_unchecked(g))
}

fn check_c(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "c",
            value: c,
            range: "[0, 1]",
        })
    }
}

/// `σ_c ∈ SU(n)` for `c ∈ [0, 1]`.
pub fn sigma_c(n: usize, c: f64) -> Result<GroupElement<f64>> {
    check_c(c)?;
    sigma_from_roots(n, c.sqrt(), (1.0 - c).sqrt())
}

/// The r-matrix of the standard Poisson structure on SU(n).
pub fn r_matrix(n: usize) -> Result<Bivector<f64>> {
    Ok(SuBasis::shared(n)?.r_matrix())
}

/// Left-trivialized standard Poisson tensor `Λ(u) = r - Ad_{u^{-1}}(r)`.
pub fn left_trivialized_pi(u: &GroupElement<f64>) -> Result<Bivector<f64>> {
    SuBasis::shared(u.n())?.left_trivialized_pi(u)
}

/// `X_σ = Ad_{σ^{-1}}(r) - r`.
pub fn x_sigma(sigma: &GroupElement<f64>) -> Result<Bivector<f64>> {
    SuBasis::shared(sigma.n())?.x_sigma(sigma)
}

/// The affine Poisson structure `π_σ(g) = R_σ π(g σ^{-1})` for `σ = σ_c`.
#[derive(Debug, Clone)]
pub struct AffinePoissonStructure {
    n: usize,
    c: f64,
    sigma: GroupElement<f64>,
    r: Bivector<f64>,
    x_sigma: Bivector<f64>,
}

impl AffinePoissonStructure {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        let sigma = sigma_c(n, c)?;
        Self::with_sigma(c, sigma)
    }

    /// Right translate by an arbitrary `σ`; `c` is recorded for reporting only.
    pub fn with_sigma(c: f64, sigma: GroupElement<f64>) -> Result<Self> {
        let n = sigma.n();
        let basis = SuBasis::shared(n)?;
        let r = basis.r_matrix();
        let x_sigma = basis.x_sigma(&sigma)?;
        Ok(Self {
            n,
            c,
            sigma,
            r,
            x_sigma,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma(&self) -> &GroupElement<f64> {
        &self.sigma
    }

    pub fn r(&self) -> &Bivector<f64> {
        &self.r
    }

    pub fn x_sigma(&self) -> &Bivector<f64> {
        &self.x_sigma
    }

    fn check(&self, g: &GroupElement<f64>) -> Result<()> {
        if g.n() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.n,
                right: g.n(),
            })
        }
    }

    /// `Λ_σ(g) = r - Ad_{g^{-1}}(r) + X_σ`, so `π_σ(g) = L_g Λ_σ(g)`.
    pub fn affine_tensor(&self, g: &GroupElement<f64>) -> Result<Bivector<f64>> {
        self.check(g)?;
        Ok(left_trivialized_pi(g)? + self.x_sigma.clone())
    }

    /// `π_l(g) = π_σ(g) - L_g π_σ(e)`, left-trivialized.
    pub fn left_part(&self, g: &GroupElement<f64>) -> Result<Bivector<f64>> {
        Ok(self.affine_tensor(g)? - self.x_sigma.clone())
    }

    /// `Ad_{σ^{-1}}(r)`, the bivector whose ad-stability decides coisotropy.
    pub fn adjoint_r(&self) -> Bivector<f64> {
        self.x_sigma.clone() + self.r.clone()
    }
}

/// Outcome of [`coisotropy_check`].
#[derive(Debug, Clone)]
pub struct CoisotropyReport {
    /// The worst generator's membership report.
    pub worst: MembershipReport,
    /// Index into the subalgebra basis of the worst generator.
    pub generator: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

impl CoisotropyReport {
    pub fn residual(&self) -> f64 {
        self.worst.residual
    }
}

/// Tests `ad_𝔥(Λ0) ⊂ 𝔥 ∧ 𝔤` generator by generator.
pub fn coisotropy_check(h: &SubalgebraSpec<f64>, lambda0: &Bivector<f64>) -> Result<CoisotropyReport> {
    coisotropy_check_with_tol(h, lambda0, MEMBERSHIP_TOL)
}

pub fn coisotropy_check_with_tol(
    h: &SubalgebraSpec<f64>,
    lambda0: &Bivector<f64>,
    tol: f64,
) -> Result<CoisotropyReport> {
    let basis = SuBasis::shared(h.n())?;
    let mut worst = MembershipReport {
        residual: 0.0,
        witness: Bivector::zero(h.n()),
    };
    let mut generator = None;
    for (k, gen) in h.basis().iter().enumerate() {
        let moved = basis.ad_bivector(gen, lambda0)?;
        let rep = membership_h_wedge_g(&moved, h)?;
        if generator.is_none() || rep.residual > worst.residual {
            worst = rep;
            generator = Some(k);
        }
    }
    Ok(CoisotropyReport {
        pass: worst.residual < tol,
        worst,
        generator,
        tolerance: tol,
    })
}
