//! Homogeneous spaces of SU(n): the sphere `S^{2n-1}` (first or last column),
//! the projective space `CP^{n-1}` (sphere modulo the diagonal circle), and
//! the tensors pushed down to them from left-trivialized group tensors.
//!
//! Ambient coordinates on `C^n ≅ R^{2n}` are interleaved
//! `(Re v_1, Im v_1, ..., Re v_n, Im v_n)`. A point of `CP^{n-1}` is described
//! in an affine chart `k` by `w_j = v_j / v_k` (`j ≠ k`, increasing `j`), and
//! chart tensors use the realified coordinates of `w` in the same interleaved
//! order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lie_core::{AlgebraElement, GroupElement, SuBasis};
use crate::linalg::{orthonormalize_columns, realify_vec};
use crate::poisson_structures::{sigma_from_roots, AffinePoissonStructure};
use crate::tensor_algebra::Bivector;

/// Unit-norm tolerance for [`SpherePoint`].
pub const SPHERE_TOL: f64 = 1e-12;
/// Tangency tolerance for [`AmbientBivector`].
pub const TANGENCY_TOL: f64 = 1e-10;
/// Smallest `|v_k|` accepted for chart `k`.
pub const CHART_MARGIN: f64 = 0.1;
/// Default relative tolerance for [`rank`].
pub const RANK_TOL: f64 = 1e-7;

/// A point of the unit sphere in `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    v: DVector<Complex64>,
}

impl SpherePoint {
    pub fn new(v: DVector<Complex64>) -> Result<Self> {
        let off = (v.norm() - 1.0).abs();
        if off > SPHERE_TOL || v.is_empty() {
            return Err(Error::InvariantViolation {
                what: "unit sphere",
                residual: off,
            });
        }
        Ok(Self { v })
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn normalized(v: DVector<Complex64>) -> Self {
        let norm = v.norm();
        assert!(norm > 0.0, "cannot normalize the zero vector");
        Self {
            v: v / Complex64::new(norm, 0.0),
        }
    }

    /// Standard basis vector `e_k` (zero-based).
    pub fn basis_vector(n: usize, k: usize) -> Self {
        let mut v = DVector::from_element(n, Complex64::new(0.0, 0.0));
        v[k] = Complex64::new(1.0, 0.0);
        Self { v }
    }

    /// Uniform random point (normalized complex Gaussian).
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand_distr::StandardNormal;
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::normalized(v)
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.v
    }

    pub fn realified(&self) -> DVector<f64> {
        realify_vec(&self.v)
    }

    /// The diagonal circle action `v ↦ e^{iθ} v`.
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            v: &self.v * Complex64::from_polar(1.0, theta),
        }
    }

    /// Image under a unitary matrix.
    pub fn mapped(&self, u: &DMatrix<Complex64>) -> Self {
        Self { v: u * &self.v }
    }

    /// Index of the coordinate of largest modulus (first one on ties).
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for k in 1..self.v.len() {
            if self.v[k].norm() > self.v[best].norm() {
                best = k;
            }
        }
        best
    }

    /// Membership in `S_+ = {v_1 > 0}` (real and positive first coordinate).
    pub fn in_s_plus(&self, tol: f64) -> bool {
        self.v[0].im.abs() <= tol && self.v[0].re > 0.0
    }

    /// Membership in `S_c = {v_1 = √c}`.
    pub fn in_s_c(&self, c: f64, tol: f64) -> bool {
        (self.v[0] - Complex64::new(c.sqrt(), 0.0)).norm() <= tol
    }
}

/// A point of `CP^{n-1}` with a chosen affine chart.
#[derive(Debug, Clone, PartialEq)]
pub struct CpPoint {
    chart: usize,
    w: DVector<Complex64>,
    rep: SpherePoint,
}

impl CpPoint {
    /// The class `[v]`, in the chart where `|v_k|` is maximal, with the
    /// representative rotated so that `v_k > 0`.
    pub fn from_sphere(v: &SpherePoint) -> Self {
        let k = v.dominant_index();
        Self::build(v, k)
    }

    /// The class `[v]` described in an explicitly chosen chart `k`.
    pub fn from_sphere_in_chart(v: &SpherePoint, k: usize) -> Result<Self> {
        let modulus = v.v[k].norm();
        if modulus < CHART_MARGIN {
            return Err(Error::DegenerateChart { chart: k, modulus });
        }
        Ok(Self::build(v, k))
    }

    /// The point with chart-`k` coordinates `w` (length `n - 1`).
    pub fn in_chart(k: usize, w: DVector<Complex64>) -> Result<Self> {
        let n = w.len() + 1;
        assert!(k < n, "chart index out of range");
        let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
        let mut it = w.iter();
        for j in 0..n {
            if j != k {
                v[j] = *it.next().expect("length checked");
            }
        }
        Self::from_sphere_in_chart(&SpherePoint::normalized(v), k)
    }

    /// Chart-`k` point from interleaved real coordinates.
    pub fn in_chart_real(k: usize, x: &DVector<f64>) -> Result<Self> {
        Self::in_chart(k, crate::linalg::complexify_vec(x))
    }

    fn build(v: &SpherePoint, k: usize) -> Self {
        let vk = v.v[k];
        let phase = vk.conj() / vk.norm();
        let rep = SpherePoint { v: &v.v * phase };
        let w = chart_coordinates(&v.v, k);
        Self { chart: k, w, rep }
    }

    pub fn n(&self) -> usize {
        self.rep.n()
    }

    pub fn chart(&self) -> usize {
        self.chart
    }

    pub fn coordinates(&self) -> &DVector<Complex64> {
        &self.w
    }

    pub fn real_coordinates(&self) -> DVector<f64> {
        realify_vec(&self.w)
    }

    pub fn representative(&self) -> &SpherePoint {
        &self.rep
    }
}

/// `w_j = v_j / v_k` for `j ≠ k`.
pub fn chart_coordinates(v: &DVector<Complex64>, k: usize) -> DVector<Complex64> {
    let vk = v[k];
    DVector::from_iterator(
        v.len() - 1,
        (0..v.len()).filter(|&j| j != k).map(|j| v[j] / vk),
    )
}

/// Real Jacobian (`2(n-1) x 2n`) of `v ↦ (v_j / v_k)_{j≠k}` at `v`.
pub fn chart_jacobian(v: &DVector<Complex64>, k: usize) -> DMatrix<f64> {
    let n = v.len();
    let vk = v[k];
    let inv = Complex64::new(1.0, 0.0) / vk;
    let mut jac = DMatrix::zeros(2 * (n - 1), 2 * n);
    let put = |jac: &mut DMatrix<f64>, row: usize, col: usize, z: Complex64| {
        jac[(2 * row, 2 * col)] = z.re;
        jac[(2 * row, 2 * col + 1)] = -z.im;
        jac[(2 * row + 1, 2 * col)] = z.im;
        jac[(2 * row + 1, 2 * col + 1)] = z.re;
    };
    for (row, j) in (0..n).filter(|&j| j != k).enumerate() {
        put(&mut jac, row, j, inv);
        put(&mut jac, row, k, -v[j] * inv * inv);
    }
    jac
}

/// An antisymmetric 2-tensor at a point of the sphere, in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientBivector {
    base: SpherePoint,
    m: DMatrix<f64>,
}

impl AmbientBivector {
    /// Wraps `m` after antisymmetrizing it; rejects tensors that are not
    /// tangent to the sphere.
    pub fn new(base: SpherePoint, m: DMatrix<f64>) -> Result<Self> {
        let n = base.n();
        if m.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch {
                left: 2 * n,
                right: m.nrows(),
            });
        }
        let out = Self::from_raw(base, m);
        let res = out.tangency_residual();
        if res > TANGENCY_TOL * crate::linalg::max_abs(&out.m).max(1.0) {
            return Err(Error::InvariantViolation {
                what: "tangent to the sphere",
                residual: res,
            });
        }
        Ok(out)
    }

    pub(crate) fn from_raw(base: SpherePoint, m: DMatrix<f64>) -> Self {
        let m = (&m - m.transpose()) * 0.5;
        Self { base, m }
    }

    pub fn zero(base: SpherePoint) -> Self {
        let d = 2 * base.n();
        Self {
            base,
            m: DMatrix::zeros(d, d),
        }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `‖M x‖` for the outward normal `x`.
    pub fn tangency_residual(&self) -> f64 {
        (&self.m * self.base.realified()).norm()
    }

    /// Contraction `M·ξ` with a covector given by its ambient vector.
    pub fn contract(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.m * xi
    }

    /// Pushforward under a unitary map of `C^n`.
    pub fn mapped(&self, u: &DMatrix<Complex64>) -> Self {
        let r = crate::linalg::realify_mat(u);
        Self {
            base: self.base.mapped(u),
            m: &r * &self.m * r.transpose(),
        }
    }
}

/// An antisymmetric 2-tensor at a point of `CP^{n-1}`, in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBivector {
    base: CpPoint,
    t: DMatrix<f64>,
}

impl ChartBivector {
    pub fn new(base: CpPoint, t: DMatrix<f64>) -> Result<Self> {
        let d = 2 * (base.n() - 1);
        if t.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: t.nrows(),
            });
        }
        let asym = crate::linalg::max_abs(&(&t + t.transpose()));
        if asym != 0.0 {
            return Err(Error::NotAntisymmetric { residual: asym });
        }
        Ok(Self { base, t })
    }

    fn from_raw(base: CpPoint, t: DMatrix<f64>) -> Self {
        let t = (&t - t.transpose()) * 0.5;
        Self { base, t }
    }

    pub fn base(&self) -> &CpPoint {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.t
    }
}

/// First column of `u`.
pub fn phi1(u: &GroupElement<f64>) -> SpherePoint {
    SpherePoint { v: u.column(0) }
}

/// Last column of `u`.
pub fn psi(u: &GroupElement<f64>) -> SpherePoint {
    SpherePoint {
        v: u.column(u.n() - 1),
    }
}

/// The class `[v] ∈ CP^{n-1}`.
pub fn phi2(v: &SpherePoint) -> CpPoint {
    CpPoint::from_sphere(v)
}

/// `v ↦ (v_2, ..., v_n) / √(1-c)` on the slice `v_1 = √c`.
pub fn phi3(v: &SpherePoint, c: f64, tol: f64) -> Result<SpherePoint> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::OutOfRange {
            name: "c",
            value: c,
            range: "[0, 1)",
        });
    }
    let offset = (v.v[0] - Complex64::new(c.sqrt(), 0.0)).norm();
    if offset > tol {
        return Err(Error::NotOnSlice { offset });
    }
    let scale = Complex64::new(1.0 / (1.0 - c).sqrt(), 0.0);
    let tail = v.v.rows(1, v.n() - 1).into_owned() * scale;
    Ok(SpherePoint::normalized(tail))
}

/// Deterministic `u ∈ SU(n)` with first column `v`.
///
/// The columns after the first come from Gram-Schmidt on the standard basis
/// vectors other than `e_k`, where `k` is the dominant coordinate of `v`; the
/// last column absorbs the determinant. `lift(e_1)` is the identity.
pub fn lift(v: &SpherePoint) -> GroupElement<f64> {
    let n = v.n();
    let k = v.dominant_index();
    let mut cols = vec![v.v.clone()];
    for j in (0..n).filter(|&j| j != k) {
        cols.push(SpherePoint::basis_vector(n, j).v);
    }
    let q = orthonormalize_columns(&cols, 1e-8);
    debug_assert_eq!(q.len(), n);
    let mut m = DMatrix::from_columns(&q);
    // the first column is exactly v up to rounding; keep it exact
    m.set_column(0, &v.v);
    let det = m.determinant();
    let fix = (det / det.norm()).conj();
    let mut last = m.column_mut(n - 1);
    last *= fix;
    GroupElement::from_matrix_unchecked(m)
}

/// Deterministic `u ∈ SU(n)` with last column `v`.
pub fn lift_last(v: &SpherePoint) -> GroupElement<f64> {
    let n = v.n();
    let swap = sigma_from_roots(n, 0.0, 1.0).expect("n >= 2");
    lift(v).compose(&swap.inverse()).expect("same dimension")
}

/// Pushes the left-trivialized tensor `Λ` at `u` through `u ↦ u e_col`.
pub fn push_through_column(u: &GroupElement<f64>, lambda: &Bivector<f64>, col: usize) -> Result<AmbientBivector> {
    let n = u.n();
    if lambda.n() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: lambda.n(),
        });
    }
    let basis = SuBasis::shared(n)?;
    let d = basis.dim();
    let mut xi = DMatrix::zeros(2 * n, d);
    for (a, b) in basis.elements().iter().enumerate() {
        let moved = u.matrix() * b.matrix().column(col);
        xi.set_column(a, &realify_vec(&moved));
    }
    let m = &xi * lambda.coeffs() * xi.transpose();
    Ok(AmbientBivector::from_raw(
        SpherePoint { v: u.column(col) },
        m,
    ))
}

/// `(Dφ₁)_u (L_u Λ)`: push to the sphere through the first column.
pub fn push_to_sphere(u: &GroupElement<f64>, lambda: &Bivector<f64>) -> Result<AmbientBivector> {
    push_through_column(u, lambda, 0)
}

/// Which block copy of SU(n-1) is used as the isotropy group of the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    /// `{1} ⊕ SU(n-1)`; the sphere coordinate is the first column.
    Bottom,
    /// `SU(n-1) ⊕ {1}`; the sphere coordinate is the last column.
    Top,
}

/// The standard covariant Poisson tensor on `S^{2n-1}` (`n = v.n()`), zero
/// for `n = 1`.
pub fn rho_sphere(v: &SpherePoint, embedding: Embedding) -> Result<AmbientBivector> {
    if v.n() == 1 {
        return Ok(AmbientBivector::zero(v.clone()));
    }
    let (u, col) = match embedding {
        Embedding::Bottom => (lift(v), 0),
        Embedding::Top => (lift_last(v), v.n() - 1),
    };
    rho_sphere_with_lift(&u, col)
}

/// [`rho_sphere`] computed from an explicit group element.
pub fn rho_sphere_with_lift(u: &GroupElement<f64>, col: usize) -> Result<AmbientBivector> {
    let lambda = SuBasis::shared(u.n())?.left_trivialized_pi(u)?;
    push_through_column(u, &lambda, col)
}

/// Chart pushforward `T = J M Jᵀ` in the dominant chart of the base point.
pub fn chart_pushforward(b: &AmbientBivector) -> Result<ChartBivector> {
    chart_pushforward_in(b, b.base.dominant_index())
}

/// Chart pushforward in an explicit chart `k`.
pub fn chart_pushforward_in(b: &AmbientBivector, k: usize) -> Result<ChartBivector> {
    let base = CpPoint::from_sphere_in_chart(&b.base, k)?;
    let jac = chart_jacobian(&b.base.v, k);
    let t = &jac * &b.m * jac.transpose();
    Ok(ChartBivector::from_raw(base, t))
}

/// The covariant tensor `τ_c` on `CP^{n-1}` induced by `π_{σ_c}` through the
/// coisotropic subgroup `U(n-1)`.
#[derive(Debug, Clone)]
pub struct TauField {
    structure: AffinePoissonStructure,
}

impl TauField {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        Ok(Self {
            structure: AffinePoissonStructure::new(n, c)?,
        })
    }

    pub fn from_structure(structure: AffinePoissonStructure) -> Self {
        Self { structure }
    }

    pub fn structure(&self) -> &AffinePoissonStructure {
        &self.structure
    }

    pub fn n(&self) -> usize {
        self.structure.n()
    }

    pub fn c(&self) -> f64 {
        self.structure.c()
    }

    /// Sphere-level tensor `(Dφ₁)_u π_σ(u)` for a chosen lift `u`.
    pub fn sphere_tensor(&self, u: &GroupElement<f64>) -> Result<AmbientBivector> {
        push_to_sphere(u, &self.structure.affine_tensor(u)?)
    }

    /// `τ_c(p)` in `p`'s chart, using the deterministic lift.
    pub fn at(&self, p: &CpPoint) -> Result<ChartBivector> {
        self.at_with_lift(&lift(p.representative()), p.chart())
    }

    /// `τ_c([u e_1])` in chart `k`, using the given lift `u`.
    pub fn at_with_lift(&self, u: &GroupElement<f64>, k: usize) -> Result<ChartBivector> {
        chart_pushforward_in(&self.sphere_tensor(u)?, k)
    }

    /// Chart matrix of `τ_c` at chart-`k` real coordinates `x`.
    pub fn chart_matrix(&self, k: usize, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.at(&CpPoint::in_chart_real(k, x)?)?.into_matrix())
    }
}

/// `τ_c(p)` in `p`'s chart.
pub fn tau_c(n: usize, c: f64, p: &CpPoint) -> Result<ChartBivector> {
    TauField::new(n, c)?.at(p)
}

/// Number of nonzero singular-value pairs of an antisymmetric matrix, above
/// `tol · max(σ_max, 1)`. Always even.
pub fn rank_of(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let threshold = tol * sv[0].max(1.0);
    sv.chunks_exact(2)
        .take_while(|pair| 0.5 * (pair[0] + pair[1]) > threshold)
        .count()
        * 2
}

/// Rank of a chart tensor (symplectic leaf dimension at its base point).
pub fn rank(t: &ChartBivector, tol: f64) -> usize {
    rank_of(&t.t, tol)
}

/// Embeds an algebra element of su(n-1) as `0 ⊕ x` in su(n).
pub fn embed_bottom_algebra(x: &AlgebraElement<f64>) -> AlgebraElement<f64> {
    let n = x.n() + 1;
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    m.view_mut((1, 1), (n - 1, n - 1)).copy_from(x.matrix());
    AlgebraElement::from_matrix_unchecked(m)
}
