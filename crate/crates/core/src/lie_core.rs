//! The Lie algebra su(n), its ordered basis, brackets, adjoint actions and
//! random sampling of SU(n).
//!
//! Matrix indices are zero-based throughout: `x_plus(n, 0, 1)` is the
//! generator usually written `X_12^+ = e_12 - e_21`.
//!
//! The basis order is fixed: every `X_ij^+` (i < j, lexicographic), then every
//! `X_ij^- = i(e_ij + e_ji)` in the same order, then the Cartan generators
//! `H_k = i(e_kk - e_{k+1,k+1})`. All bivector coefficient layouts refer to it.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{conj_transpose, invert, CMat};
use crate::scalar::Scalar;

/// Tolerance for the anti-hermitian / traceless / unitary invariants.
pub const INVARIANT_TOL: f64 = 1e-12;

fn czero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn cre<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn cim<T: Scalar>(y: T) -> Complex<T> {
    Complex::new(T::zero(), y)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension { n, min: 2 })
    } else {
        Ok(())
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

/// An element of su(n): a traceless anti-hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement<T: Scalar = f64> {
    entries: CMat<T>,
}

impl<T: Scalar> AlgebraElement<T> {
    /// Wraps a matrix, checking the su(n) invariants to [`INVARIANT_TOL`].
    pub fn from_matrix(entries: CMat<T>) -> Result<Self> {
        let n = entries.nrows();
        same_dim(n, entries.ncols())?;
        let herm = &entries + conj_transpose(&entries);
        let herm_res = herm.iter().fold(0.0_f64, |acc, z| {
            acc.max(z.re.abs_f64()).max(z.im.abs_f64())
        });
        if herm_res > INVARIANT_TOL {
            return Err(Error::InvariantViolation {
                what: "anti-hermitian",
                residual: herm_res,
            });
        }
        let tr = entries.trace();
        let tr_res = tr.re.abs_f64().hypot(tr.im.abs_f64());
        if tr_res > INVARIANT_TOL {
            return Err(Error::InvariantViolation {
                what: "traceless",
                residual: tr_res,
            });
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_matrix_unchecked(entries: CMat<T>) -> Self {
        Self { entries }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            entries: DMatrix::from_element(n, n, czero()),
        }
    }

    /// `X_ij^+ = e_ij - e_ji`.
    pub fn x_plus(n: usize, i: usize, j: usize) -> Self {
        assert!(i < j && j < n, "x_plus needs i < j < n");
        let mut m = DMatrix::from_element(n, n, czero());
        m[(i, j)] = cre(T::one());
        m[(j, i)] = cre(-T::one());
        Self { entries: m }
    }

    /// `X_ij^- = i(e_ij + e_ji)`.
    pub fn x_minus(n: usize, i: usize, j: usize) -> Self {
        assert!(i < j && j < n, "x_minus needs i < j < n");
        let mut m = DMatrix::from_element(n, n, czero());
        m[(i, j)] = cim(T::one());
        m[(j, i)] = cim(T::one());
        Self { entries: m }
    }

    /// `i(e_aa - e_bb)`; `diag_pair(n, k, k + 1)` is the Cartan generator `H_k`.
    pub fn diag_pair(n: usize, a: usize, b: usize) -> Self {
        assert!(a != b && a < n && b < n);
        let mut m = DMatrix::from_element(n, n, czero());
        m[(a, a)] = cim(T::one());
        m[(b, b)] = cim(-T::one());
        Self { entries: m }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.entries
    }

    pub fn scale(&self, s: T) -> Self {
        let c = cre(s);
        Self {
            entries: self.entries.map(|z| z * c.clone()),
        }
    }

    /// Frobenius inner product `Re tr(A* B)`.
    pub fn inner(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .fold(T::zero(), |acc, (a, b)| {
                acc + a.re.clone() * b.re.clone() + a.im.clone() * b.im.clone()
            })
    }

    /// The commutator `XY - YX`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        same_dim(self.n(), other.n())?;
        let xy = &self.entries * &other.entries;
        let yx = &other.entries * &self.entries;
        Ok(Self { entries: xy - yx })
    }
}

impl AlgebraElement<f64> {
    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

impl<T: Scalar> std::ops::Add for AlgebraElement<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            entries: self.entries + rhs.entries,
        }
    }
}

impl<T: Scalar> std::ops::Sub for AlgebraElement<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            entries: self.entries - rhs.entries,
        }
    }
}

impl<T: Scalar> std::ops::Neg for AlgebraElement<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            entries: self.entries.map(|z| -z),
        }
    }
}

/// Free-function form of [`AlgebraElement::bracket`].
pub fn bracket<T: Scalar>(x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
    x.bracket(y)
}

/// An element of SU(n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement<T: Scalar = f64> {
    entries: CMat<T>,
}

impl<T: Scalar> GroupElement<T> {
    pub(crate) fn from_matrix_unchecked(entries: CMat<T>) -> Self {
        Self { entries }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| if i == j { cre(T::one()) } else { czero() }),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.entries
    }

    /// Inverse, computed as the conjugate transpose.
    pub fn inverse(&self) -> Self {
        Self {
            entries: conj_transpose(&self.entries),
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        same_dim(self.n(), other.n())?;
        Ok(Self {
            entries: &self.entries * &other.entries,
        })
    }

    /// `g X g^{-1}`.
    pub fn adjoint(&self, x: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        same_dim(self.n(), x.n())?;
        let m = &self.entries * &x.entries * conj_transpose(&self.entries);
        Ok(AlgebraElement::from_matrix_unchecked(m))
    }

    /// Block embedding `1 ⊕ g` into SU(n + 1).
    pub fn embed_bottom(&self) -> Self {
        let n = self.n() + 1;
        let mut m = DMatrix::from_element(n, n, czero());
        m[(0, 0)] = cre(T::one());
        m.view_mut((1, 1), (n - 1, n - 1)).copy_from(&self.entries);
        Self { entries: m }
    }

    /// Block embedding `g ⊕ 1` into SU(n + 1).
    pub fn embed_top(&self) -> Self {
        let n = self.n() + 1;
        let mut m = DMatrix::from_element(n, n, czero());
        m[(n - 1, n - 1)] = cre(T::one());
        m.view_mut((0, 0), (n - 1, n - 1)).copy_from(&self.entries);
        Self { entries: m }
    }
}

impl GroupElement<f64> {
    /// Wraps a matrix, checking unitarity and `det = 1` to [`INVARIANT_TOL`].
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        let n = entries.nrows();
        same_dim(n, entries.ncols())?;
        let g = Self { entries };
        let u = g.unitarity_residual();
        if u > INVARIANT_TOL {
            return Err(Error::InvariantViolation {
                what: "unitary",
                residual: u,
            });
        }
        let d = (g.entries.determinant() - Complex64::new(1.0, 0.0)).norm();
        if d > INVARIANT_TOL {
            return Err(Error::InvariantViolation {
                what: "det = 1",
                residual: d,
            });
        }
        Ok(g)
    }

    /// `max |(U U* - I)_ij|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.n();
        let p = &self.entries * conj_transpose(&self.entries) - DMatrix::<Complex64>::identity(n, n);
        p.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn determinant(&self) -> Complex64 {
        self.entries.determinant()
    }

    pub fn column(&self, k: usize) -> DVector<Complex64> {
        self.entries.column(k).into_owned()
    }

    /// Diagonal torus element `diag(e^{iθ_1}, ..., e^{iθ_n})`; the last angle
    /// is overwritten so the determinant is 1.
    pub fn torus(angles: &[f64]) -> Self {
        let n = angles.len();
        let mut a = angles.to_vec();
        let partial: f64 = a[..n - 1].iter().sum();
        a[n - 1] = -partial;
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::from_polar(1.0, a[i])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }
}

/// Free-function form of [`GroupElement::adjoint`].
pub fn adjoint<T: Scalar>(g: &GroupElement<T>, x: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
    g.adjoint(x)
}

/// The ordered basis of su(n) together with the inverse of its Frobenius Gram
/// matrix.
///
/// The off-diagonal generators are mutually orthogonal with squared norm 2,
/// but neighbouring Cartan generators are not orthogonal
/// (`<H_k, H_{k+1}> = -1`), so coordinates are obtained by a genuine Gram
/// solve rather than by projection.
#[derive(Debug, Clone)]
pub struct SuBasis<T: Scalar = f64> {
    n: usize,
    pairs: Vec<(usize, usize)>,
    elements: Vec<AlgebraElement<T>>,
    gram: DMatrix<T>,
    gram_inv: DMatrix<T>,
}

impl<T: Scalar> SuBasis<T> {
    pub fn new(n: usize) -> Result<Self> {
        check_dim(n)?;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut elements = Vec::with_capacity(n * n - 1);
        elements.extend(pairs.iter().map(|&(i, j)| AlgebraElement::x_plus(n, i, j)));
        elements.extend(pairs.iter().map(|&(i, j)| AlgebraElement::x_minus(n, i, j)));
        elements.extend((0..n - 1).map(|k| AlgebraElement::diag_pair(n, k, k + 1)));
        let d = elements.len();
        let gram = DMatrix::from_fn(d, d, |a, b| elements[a].inner(&elements[b]));
        let gram_inv = invert(&gram).expect("su(n) basis Gram matrix is nonsingular");
        Ok(Self {
            n,
            pairs,
            elements,
            gram,
            gram_inv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n^2 - 1`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[AlgebraElement<T>] {
        &self.elements
    }

    pub fn element(&self, a: usize) -> &AlgebraElement<T> {
        &self.elements[a]
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        assert!(i < j && j < self.n);
        self.pairs
            .iter()
            .position(|&p| p == (i, j))
            .expect("pair in range")
    }

    /// Basis index of `X_ij^+`.
    pub fn plus_index(&self, i: usize, j: usize) -> usize {
        self.pair_index(i, j)
    }

    /// Basis index of `X_ij^-`.
    pub fn minus_index(&self, i: usize, j: usize) -> usize {
        self.pairs.len() + self.pair_index(i, j)
    }

    /// Basis index of `H_k`.
    pub fn cartan_index(&self, k: usize) -> usize {
        assert!(k + 1 < self.n);
        2 * self.pairs.len() + k
    }

    /// Coordinates of `x` in this basis (solves against the Gram matrix).
    pub fn coordinates(&self, x: &AlgebraElement<T>) -> Result<DVector<T>> {
        same_dim(self.n, x.n())?;
        let rhs = DVector::from_iterator(self.dim(), self.elements.iter().map(|b| b.inner(x)));
        Ok(&self.gram_inv * rhs)
    }

    pub fn from_coordinates(&self, coords: &DVector<T>) -> AlgebraElement<T> {
        let mut m = DMatrix::from_element(self.n, self.n, czero());
        for (b, c) in self.elements.iter().zip(coords.iter()) {
            if *c == T::zero() {
                continue;
            }
            let s = cre(c.clone());
            m += b.entries.map(|z| z * s.clone());
        }
        AlgebraElement::from_matrix_unchecked(m)
    }

    /// Matrix of `ad_x` acting on coordinates.
    pub fn ad_matrix(&self, x: &AlgebraElement<T>) -> Result<DMatrix<T>> {
        same_dim(self.n, x.n())?;
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, T::zero());
        for (a, b) in self.elements.iter().enumerate() {
            let col = self.coordinates(&x.bracket(b)?)?;
            m.set_column(a, &col);
        }
        Ok(m)
    }

    /// Matrix of `Ad_g` acting on coordinates.
    pub fn adjoint_matrix(&self, g: &GroupElement<T>) -> Result<DMatrix<T>> {
        same_dim(self.n, g.n())?;
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, T::zero());
        for (a, b) in self.elements.iter().enumerate() {
            let col = self.coordinates(&g.adjoint(b)?)?;
            m.set_column(a, &col);
        }
        Ok(m)
    }
}

impl SuBasis<f64> {
    /// Process-wide cached float basis for dimension `n`.
    pub fn shared(n: usize) -> Result<Arc<SuBasis<f64>>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SuBasis<f64>>>>> = OnceLock::new();
        check_dim(n)?;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&n) {
            return Ok(Arc::clone(b));
        }
        let b = Arc::new(SuBasis::new(n)?);
        cache
            .lock()
            .expect("basis cache poisoned")
            .entry(n)
            .or_insert_with(|| Arc::clone(&b));
        Ok(b)
    }

    /// Residual `‖x - Σ coords_a B_a‖_F` of the basis expansion.
    pub fn expansion_residual(&self, x: &AlgebraElement<f64>) -> Result<f64> {
        let c = self.coordinates(x)?;
        Ok((x.clone() - self.from_coordinates(&c)).frobenius_norm())
    }
}

/// The ordered basis of su(n), see [`SuBasis`].
pub fn basis(n: usize) -> Result<SuBasis<f64>> {
    SuBasis::new(n)
}

/// Haar-random element of SU(n), deterministic in `seed`.
pub fn haar_sample(n: usize, seed: u64) -> Result<GroupElement<f64>> {
    check_dim(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(haar_sample_with(n, &mut rng))
}

/// Haar-random element of U(n): QR of a complex Gaussian matrix with the
/// column phases fixed by the diagonal of R.
pub fn haar_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Haar-random element of SU(n) drawn from `rng`. The determinant is removed
/// by rescaling the first column, which preserves left invariance.
pub fn haar_sample_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement<f64> {
    let mut q = haar_unitary_with(n, rng);
    let det = q.determinant();
    let fix = (det / det.norm()).conj();
    let mut col = q.column_mut(0);
    col *= fix;
    GroupElement::from_matrix_unchecked(q)
}

/// Random su(n) element with standard Gaussian basis coordinates.
pub fn random_algebra_element<R: Rng + ?Sized>(basis: &SuBasis<f64>, rng: &mut R) -> AlgebraElement<f64> {
    let c = DVector::from_fn(basis.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    basis.from_coordinates(&c)
}

/// Which block subgroup of SU(n) a [`SubalgebraSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubalgebraKind {
    /// `U(n-1) = {det(u)^{-1} ⊕ u}`, the isotropy group of a point of CP^{n-1}.
    UBottom,
    /// `{1} ⊕ SU(n-1)`.
    SuBottom,
    /// `SU(n-1) ⊕ {1}`.
    SuTop,
}

impl SubalgebraKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubalgebraKind::UBottom => "u",
            SubalgebraKind::SuBottom => "su-bottom",
            SubalgebraKind::SuTop => "su-top",
        }
    }
}

impl FromStr for SubalgebraKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "u-bottom" => Ok(SubalgebraKind::UBottom),
            "su-bottom" => Ok(SubalgebraKind::SuBottom),
            "su-top" => Ok(SubalgebraKind::SuTop),
            other => Err(Error::InvalidKind(other.to_string())),
        }
    }
}

/// A block subalgebra of su(n) given by a spanning list of elements.
#[derive(Debug, Clone)]
pub struct SubalgebraSpec<T: Scalar = f64> {
    n: usize,
    kind: SubalgebraKind,
    basis: Vec<AlgebraElement<T>>,
}

impl<T: Scalar> SubalgebraSpec<T> {
    pub fn new(n: usize, kind: SubalgebraKind) -> Result<Self> {
        check_dim(n)?;
        let (lo, hi) = match kind {
            SubalgebraKind::UBottom | SubalgebraKind::SuBottom => (1, n),
            SubalgebraKind::SuTop => (0, n - 1),
        };
        let mut basis = Vec::new();
        for i in lo..hi {
            for j in (i + 1)..hi {
                basis.push(AlgebraElement::x_plus(n, i, j));
            }
        }
        for i in lo..hi {
            for j in (i + 1)..hi {
                basis.push(AlgebraElement::x_minus(n, i, j));
            }
        }
        for k in lo..hi.saturating_sub(1) {
            basis.push(AlgebraElement::diag_pair(n, k, k + 1));
        }
        if kind == SubalgebraKind::UBottom {
            basis.push(AlgebraElement::diag_pair(n, 0, n - 1));
        }
        Ok(Self { n, kind, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SubalgebraKind {
        self.kind
    }

    pub fn basis(&self) -> &[AlgebraElement<T>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

impl SubalgebraSpec<f64> {
    /// Same subalgebra with basis `mix^T · basis`; `mix` must be invertible.
    pub fn rebased(&self, mix: &DMatrix<f64>) -> Self {
        let k = self.basis.len();
        assert_eq!(mix.shape(), (k, k));
        let basis = (0..k)
            .map(|col| {
                let mut acc = AlgebraElement::zero(self.n);
                for (row, b) in self.basis.iter().enumerate() {
                    acc = acc + b.scale(mix[(row, col)]);
                }
                acc
            })
            .collect();
        Self {
            n: self.n,
            kind: self.kind,
            basis,
        }
    }
}

/// The embedded block subalgebra of the given kind.
pub fn subalgebra(n: usize, kind: SubalgebraKind) -> Result<SubalgebraSpec<f64>> {
    SubalgebraSpec::new(n, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Exact};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_sizes_and_order() {
        assert!(matches!(basis(1), Err(Error::InvalidDimension { n: 1, .. })));
        let b2 = basis(2).unwrap();
        assert_eq!(b2.dim(), 3);
        assert_eq!(b2.element(0), &AlgebraElement::x_plus(2, 0, 1));
        assert_eq!(b2.element(1), &AlgebraElement::x_minus(2, 0, 1));
        assert_eq!(b2.element(2), &AlgebraElement::diag_pair(2, 0, 1));
        assert_eq!(basis(3).unwrap().dim(), 8);
        let b4 = basis(4).unwrap();
        let first = b4.element(0).matrix();
        assert_eq!(first[(0, 1)], c(1.0, 0.0));
        assert_eq!(first[(1, 0)], c(-1.0, 0.0));
        assert_eq!(b4.plus_index(2, 3), 5);
        assert_eq!(b4.minus_index(0, 1), 6);
        assert_eq!(b4.cartan_index(0), 12);
    }

    #[test]
    fn gram_matrix_structure() {
        let b = basis(4).unwrap();
        let g = b.gram();
        for a in 0..12 {
            assert_eq!(g[(a, a)], 2.0);
        }
        assert_eq!(g[(12, 13)], -1.0);
        assert_eq!(g[(12, 14)], 0.0);
        assert_eq!(g[(0, 6)], 0.0);
    }

    #[test]
    fn bracket_examples() {
        let xp = AlgebraElement::<f64>::x_plus(2, 0, 1);
        let xm = AlgebraElement::<f64>::x_minus(2, 0, 1);
        let h = AlgebraElement::<f64>::diag_pair(2, 0, 1);
        // direct 2x2 products: X+ X- = i diag(1, -1), X- X+ = i diag(-1, 1)
        let expected = AlgebraElement::diag_pair(2, 0, 1).scale(2.0);
        assert_eq!(xp.bracket(&xm).unwrap(), expected);
        assert_eq!(xp.bracket(&xp).unwrap(), AlgebraElement::zero(2));
        // H X+ = [[0, i], [i, 0]], X+ H = [[0, -i], [-i, 0]]
        assert_eq!(h.bracket(&xp).unwrap(), xm.scale(2.0));
        let x3 = AlgebraElement::<f64>::x_plus(3, 0, 1);
        assert!(matches!(
            xp.bracket(&x3),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn from_matrix_rejects_non_algebra() {
        let m = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(AlgebraElement::from_matrix(m).is_err());
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 1.0)]));
        assert!(matches!(
            AlgebraElement::from_matrix(t),
            Err(Error::InvariantViolation { what: "traceless", .. })
        ));
        let ok = AlgebraElement::<f64>::x_minus(3, 1, 2).into_matrix();
        assert!(AlgebraElement::from_matrix(ok).is_ok());
    }

    #[test]
    fn identity_adjoint_is_trivial() {
        let b = basis(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_algebra_element(&b, &mut rng);
        assert_eq!(GroupElement::identity(3).adjoint(&x).unwrap(), x);
    }

    #[test]
    fn coordinates_round_trip_exactly() {
        let b = SuBasis::<Exact>::new(4).unwrap();
        let x = AlgebraElement::<Exact>::diag_pair(4, 0, 3);
        let coords = b.coordinates(&x).unwrap();
        // i(e11 - e44) = H_1 + H_2 + H_3
        for k in 0..3 {
            assert_eq!(coords[b.cartan_index(k)], ratio(1, 1));
        }
        assert_eq!(b.from_coordinates(&coords), x);
    }

    #[test]
    fn haar_is_deterministic_and_special_unitary() {
        let a = haar_sample(3, 7).unwrap();
        let b = haar_sample(3, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.unitarity_residual() < 1e-12);
        assert!((a.determinant() - c(1.0, 0.0)).norm() < 1e-12);
        assert!(GroupElement::from_matrix(a.matrix().clone()).is_ok());
        assert_ne!(a, haar_sample(3, 8).unwrap());
    }

    #[test]
    fn haar_first_moment() {
        // E|U_11|^2 = 1/n under Haar measure
        for n in [2usize, 3, 4] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let samples = 10_000;
            let mean: f64 = (0..samples)
                .map(|_| haar_sample_with(n, &mut rng).matrix()[(0, 0)].norm_sqr())
                .sum::<f64>()
                / samples as f64;
            assert!((mean - 1.0 / n as f64).abs() < 0.02, "n={n} mean={mean}");
        }
    }

    #[test]
    fn subalgebra_dimensions_and_kinds() {
        for n in 2..=5 {
            assert_eq!(subalgebra(n, SubalgebraKind::UBottom).unwrap().dim(), (n - 1) * (n - 1));
            assert_eq!(subalgebra(n, SubalgebraKind::SuBottom).unwrap().dim(), (n - 1) * (n - 1) - 1);
            assert_eq!(subalgebra(n, SubalgebraKind::SuTop).unwrap().dim(), (n - 1) * (n - 1) - 1);
        }
        assert!(subalgebra(2, SubalgebraKind::SuBottom).unwrap().basis().is_empty());
        assert!(matches!("su".parse::<SubalgebraKind>(), Err(Error::InvalidKind(_))));
        assert_eq!("su-top".parse::<SubalgebraKind>().unwrap(), SubalgebraKind::SuTop);
    }

    fn span_residual(spec: &SubalgebraSpec<f64>, x: &AlgebraElement<f64>) -> f64 {
        // least squares in the Frobenius inner product
        let k = spec.dim();
        if k == 0 {
            return x.frobenius_norm();
        }
        let g = DMatrix::from_fn(k, k, |a, b| spec.basis()[a].inner(&spec.basis()[b]));
        let rhs = DVector::from_fn(k, |a, _| spec.basis()[a].inner(x));
        let coef = g.lu().solve(&rhs).unwrap();
        let mut proj = AlgebraElement::zero(spec.n());
        for (b, s) in spec.basis().iter().zip(coef.iter()) {
            proj = proj + b.scale(*s);
        }
        (x.clone() - proj).frobenius_norm()
    }

    #[test]
    fn subalgebras_are_closed_and_contain_the_right_torus_direction() {
        for n in 2..=5 {
            let probe = AlgebraElement::diag_pair(n, 0, n - 1);
            for kind in [SubalgebraKind::UBottom, SubalgebraKind::SuBottom, SubalgebraKind::SuTop] {
                let spec = subalgebra(n, kind).unwrap();
                for a in spec.basis() {
                    for b in spec.basis() {
                        assert!(span_residual(&spec, &a.bracket(b).unwrap()) < 1e-10);
                    }
                }
                let contains = span_residual(&spec, &probe) < 1e-10;
                assert_eq!(contains, kind == SubalgebraKind::UBottom, "n={n} {kind:?}");
            }
        }
    }

    #[test]
    fn u_bottom_exponentiates_into_det_inverse_block() {
        // every element has the form -tr(Y) ⊕ Y
        let spec = subalgebra(4, SubalgebraKind::UBottom).unwrap();
        for b in spec.basis() {
            let m = b.matrix();
            for j in 1..4 {
                assert_eq!(m[(0, j)], c(0.0, 0.0));
                assert_eq!(m[(j, 0)], c(0.0, 0.0));
            }
            let tail: Complex64 = (1..4).map(|j| m[(j, j)]).sum();
            assert!((m[(0, 0)] + tail).norm() < 1e-15);
        }
    }
}
