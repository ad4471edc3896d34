//! Invariant 2-tensors on `S^{2n-1}` and `CP^{n-1}`.
//!
//! The contact distribution `E_p = {p, ip}^⊥` carries the canonical tensor
//! `π̃ = Σ_k f_k ∧ i f_k` for any unitary frame `(f_k)` of `E_p`. An invariant
//! tensor evaluated at `e_1` reduces to a skew block `B` on `E_{e_1} ≅ C^{n-1}`,
//! which [`classify_block`] compares against the standard block `J_std`.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie_core::{haar_sample_with, haar_unitary_with};
use crate::linalg::{j_std, max_abs, realify_mat, realify_vec};
use crate::quotient_geometry::{
    chart_jacobian, lift, AmbientBivector, ChartBivector, SpherePoint,
};

/// Default relative tolerance for the classification chain.
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Default number of random subgroup elements used by [`classify_block`].
pub const CLASSIFY_SAMPLES: usize = 64;

/// The contact frame at a point `p` of the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactFrame {
    base: SpherePoint,
    reeb: DVector<f64>,
    e_basis: Vec<DVector<f64>>,
}

impl ContactFrame {
    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    /// The Reeb direction `ip`.
    pub fn reeb(&self) -> &DVector<f64> {
        &self.reeb
    }

    /// Orthonormal basis of `E_p`, ordered `(f_1, i f_1, f_2, i f_2, ...)`.
    pub fn e_basis(&self) -> &[DVector<f64>] {
        &self.e_basis
    }

    /// The basis as the columns of a `2n x 2(n-1)` matrix.
    pub fn e_matrix(&self) -> DMatrix<f64> {
        let n = self.base.n();
        if self.e_basis.is_empty() {
            return DMatrix::zeros(2 * n, 0);
        }
        DMatrix::from_columns(&self.e_basis)
    }

    /// The contact form: `ω_p(x) = ⟨ip, x⟩`, so `ω_p(ip) = 1` and `ω_p(E_p) = 0`.
    pub fn omega(&self, x: &DVector<f64>) -> f64 {
        self.reeb.dot(x)
    }
}

/// Builds the contact frame at `v` from the columns `2..n` of [`lift`].
pub fn contact_frame(v: &SpherePoint) -> ContactFrame {
    let n = v.n();
    let u = lift(v);
    let i = Complex64::new(0.0, 1.0);
    let reeb = realify_vec(&(v.vector() * i));
    let mut e_basis = Vec::with_capacity(2 * (n - 1));
    for k in 1..n {
        let f = u.column(k);
        e_basis.push(realify_vec(&f));
        e_basis.push(realify_vec(&(f * i)));
    }
    ContactFrame {
        base: v.clone(),
        reeb,
        e_basis,
    }
}

/// The canonical invariant tensor `π̃_v = Σ_k f_k ∧ i f_k`.
pub fn canonical_tensor(v: &SpherePoint) -> AmbientBivector {
    let frame = contact_frame(v);
    let e = frame.e_matrix();
    let m = &e * j_std(v.n() - 1) * e.transpose();
    AmbientBivector::from_raw(v.clone(), m)
}

/// The unique `E`-supported ambient tensor at the representative of `t`'s
/// base point whose chart pushforward is `t`.
pub fn pullback_cp_tensor(t: &ChartBivector) -> Result<AmbientBivector> {
    let p = t.base().representative().clone();
    let frame = contact_frame(&p);
    let xi = frame.e_matrix();
    let a = chart_jacobian(p.vector(), t.base().chart()) * &xi;
    let a_inv = a.try_inverse().ok_or(Error::InvariantViolation {
        what: "chart frame invertible",
        residual: 0.0,
    })?;
    let k = &a_inv * t.matrix() * a_inv.transpose();
    Ok(AmbientBivector::from_raw(p, &xi * k * xi.transpose()))
}

/// The skew block `B` of an invariant tensor at `e_1`, on `E_{e_1} ≅ C^{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantBlock {
    n: usize,
    #[serde(serialize_with = "serialize_matrix")]
    b: DMatrix<f64>,
    kernel_residual: f64,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

impl InvariantBlock {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() || !b.nrows().is_multiple_of(2) || b.nrows() == 0 {
            return Err(Error::InvalidDimension {
                n: b.nrows(),
                min: 2,
            });
        }
        let asym = max_abs(&(&b + b.transpose()));
        if asym != 0.0 {
            return Err(Error::NotAntisymmetric { residual: asym });
        }
        Ok(Self {
            n: b.nrows() / 2 + 1,
            b,
            kernel_residual: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Largest entry of the `e_1, ie_1` rows and columns of the source tensor.
    pub fn kernel_residual(&self) -> f64 {
        self.kernel_residual
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            b: &self.b * alpha,
            kernel_residual: self.kernel_residual * alpha.abs(),
        }
    }
}

/// Extracts `B` from an ambient tensor at `e_1`. Fails when the `e_1, ie_1`
/// rows do not vanish to `tol`, which rules out invariance.
pub fn block_at_basepoint(t: &AmbientBivector, tol: f64) -> Result<InvariantBlock> {
    let n = t.base().n();
    let off = (t.base().vector() - SpherePoint::basis_vector(n, 0).vector()).norm();
    if off > 1e-12 {
        return Err(Error::InvariantViolation {
            what: "base point is e_1",
            residual: off,
        });
    }
    let m = t.matrix();
    let kernel = m.rows(0, 2).amax().max(m.columns(0, 2).amax());
    if kernel > tol {
        return Err(Error::InvariantViolation {
            what: "ie_1 in the kernel",
            residual: kernel,
        });
    }
    let d = 2 * (n - 1);
    let b = m.view((2, 2), (d, d)).into_owned();
    let b = (&b - b.transpose()) * 0.5;
    Ok(InvariantBlock {
        n,
        b,
        kernel_residual: kernel,
    })
}

/// [`block_at_basepoint`] for a chart tensor at `[e_1]`.
pub fn block_from_chart(t: &ChartBivector, tol: f64) -> Result<InvariantBlock> {
    block_at_basepoint(&pullback_cp_tensor(t)?, tol)
}

/// Which isotropy group the block is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationMode {
    /// Invariance under `SU(n-1)` (tensors on the sphere).
    SuInvariant,
    /// Invariance under `U(n-1)` (tensors on `CP^{n-1}`).
    UInvariant,
}

impl FromStr for ClassificationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "su" => Ok(Self::SuInvariant),
            "u" => Ok(Self::UInvariant),
            other => Err(Error::InvalidKind(other.to_string())),
        }
    }
}

/// Outcome of [`classify_block`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Proportional { lambda: f64 },
    NotInvariant { step: &'static str, residual: f64 },
    Inconclusive { reason: &'static str },
}

/// Residuals of each step; `None` marks a step that was not run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassificationDetails {
    pub kernel: f64,
    pub commutation: Option<f64>,
    pub conformality: Option<f64>,
    pub complex_linearity: Option<f64>,
    pub square: Option<f64>,
    pub proportionality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub details: ClassificationDetails,
}

impl ClassificationResult {
    pub fn lambda(&self) -> Option<f64> {
        match self.verdict {
            Verdict::Proportional { lambda } => Some(lambda),
            _ => None,
        }
    }
}

fn conjugation_residual(r: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) -> f64 {
    max_abs(&(r * b * r.transpose() - b)) / scale
}

fn diagonal_unitary(phases: &[f64]) -> DMatrix<f64> {
    let d = DVector::from_iterator(phases.len(), phases.iter().map(|&t| Complex64::from_polar(1.0, t)));
    realify_mat(&DMatrix::from_diagonal(&d))
}

/// Runs the commutation, conformality, complex-linearity and square tests
/// on `B` and compares it with `λ J_std`.
pub fn classify_block(
    block: &InvariantBlock,
    mode: ClassificationMode,
    samples: usize,
    seed: u64,
    tol: f64,
) -> ClassificationResult {
    let b = &block.b;
    let m = block.n - 1;
    let mut details = ClassificationDetails {
        kernel: block.kernel_residual,
        ..Default::default()
    };
    let done = |verdict, details| ClassificationResult { verdict, details };

    let svd = b.clone().svd(false, false);
    let s_max = svd.singular_values.max();
    if s_max == 0.0 {
        return done(
            Verdict::Inconclusive {
                reason: "zero block",
            },
            details,
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // (i) commutation with random isotropy elements
    let mut commutation: f64 = 0.0;
    let random_group = mode == ClassificationMode::UInvariant || m >= 2;
    if random_group {
        for _ in 0..samples {
            let u = match mode {
                ClassificationMode::SuInvariant => haar_sample_with(m, &mut rng).matrix().clone(),
                ClassificationMode::UInvariant => haar_unitary_with(m, &mut rng),
            };
            commutation = commutation.max(conjugation_residual(&realify_mat(&u), b, s_max));
        }
    }
    details.commutation = Some(commutation);
    if commutation > tol {
        return done(
            Verdict::NotInvariant {
                step: "commutation",
                residual: commutation,
            },
            details,
        );
    }

    // (ii) conformality: ‖Bv‖ constant on unit vectors
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..samples.max(1) {
        let v = SpherePoint::random(m, &mut rng).realified();
        let len = (b * v).norm();
        lo = lo.min(len);
        hi = hi.max(len);
    }
    let conformality = (hi - lo) / s_max;
    details.conformality = Some(conformality);
    if conformality > tol {
        return done(
            Verdict::NotInvariant {
                step: "conformality",
                residual: conformality,
            },
            details,
        );
    }

    // (iii) complex-linearity through the torus witnesses
    let su_gap = mode == ClassificationMode::SuInvariant && m == 2;
    if !su_gap {
        let mut linearity: f64 = 0.0;
        let angles = [0.5 * std::f64::consts::PI, 0.7, 2.1];
        for &theta in &angles {
            match mode {
                ClassificationMode::UInvariant => {
                    for k in 0..m {
                        let mut phases = vec![0.0; m];
                        phases[k] = theta;
                        linearity = linearity.max(conjugation_residual(&diagonal_unitary(&phases), b, s_max));
                    }
                }
                // t_{jkθ}: e^{iθ} at j, e^{-iθ} at k; needs a third fixed slot
                ClassificationMode::SuInvariant => {
                    for j in 0..m {
                        for k in 0..m {
                            if j != k && m >= 3 {
                                let mut phases = vec![0.0; m];
                                phases[j] = theta;
                                phases[k] = -theta;
                                linearity =
                                    linearity.max(conjugation_residual(&diagonal_unitary(&phases), b, s_max));
                            }
                        }
                    }
                }
            }
        }
        details.complex_linearity = Some(linearity);
        if linearity > tol {
            return done(
                Verdict::NotInvariant {
                    step: "complex_linearity",
                    residual: linearity,
                },
                details,
            );
        }
    }

    // (iv) (B/‖B‖)² = -I
    let unit = b / s_max;
    let square = max_abs(&(&unit * &unit + DMatrix::identity(2 * m, 2 * m)));
    details.square = Some(square);
    if square > tol {
        let verdict = if su_gap {
            Verdict::Inconclusive {
                reason: "su mode at n = 3 without complex-linearity",
            }
        } else {
            Verdict::NotInvariant {
                step: "square",
                residual: square,
            }
        };
        return done(verdict, details);
    }

    let j = j_std(m);
    let sign = if b.dot(&j) < 0.0 { -1.0 } else { 1.0 };
    let lambda = sign * s_max;
    let proportionality = max_abs(&(b - &j * lambda)) / s_max;
    details.proportionality = Some(proportionality);
    if proportionality > tol {
        return done(
            Verdict::Inconclusive {
                reason: "complex structure other than the standard one",
            },
            details,
        );
    }
    done(Verdict::Proportional { lambda }, details)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient_geometry::{chart_pushforward, chart_pushforward_in, phi2, TauField};
    use rand::Rng;

    fn random_skew(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &a - a.transpose()
    }

    #[test]
    fn frame_at_e1_and_random_points() {
        let e1 = SpherePoint::basis_vector(3, 0);
        let frame = contact_frame(&e1);
        let e = frame.e_matrix();
        assert_eq!(e.rows(0, 2).amax(), 0.0);
        assert!((e.rows(2, 4).into_owned() - DMatrix::<f64>::identity(4, 4)).norm() < 1e-15);
        assert_eq!(frame.omega(frame.reeb()), 1.0);

        let rotated = contact_frame(&e1.rotated(0.9));
        let proj = |m: &DMatrix<f64>| m * m.transpose();
        assert!((proj(&rotated.e_matrix()) - proj(&e)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v = SpherePoint::random(4, &mut rng);
            let f = contact_frame(&v);
            let e = f.e_matrix();
            assert!((e.transpose() * &e - DMatrix::<f64>::identity(6, 6)).norm() < 1e-12);
            assert!((e.transpose() * v.realified()).norm() < 1e-12);
            assert!((e.transpose() * f.reeb()).norm() < 1e-12);
            for x in f.e_basis() {
                assert!(f.omega(x).abs() < 1e-12);
            }
            // J maps f_k to i f_k
            let jmul = realify_mat(&DMatrix::from_diagonal_element(4, 4, Complex64::new(0.0, 1.0)));
            for k in 0..3 {
                assert!((&jmul * &f.e_basis()[2 * k] - &f.e_basis()[2 * k + 1]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_tensor_properties() {
        let at_e1 = canonical_tensor(&SpherePoint::basis_vector(3, 0));
        let mut expected = DMatrix::zeros(6, 6);
        expected.view_mut((2, 2), (4, 4)).copy_from(&j_std(2));
        assert_eq!(at_e1.matrix(), &expected);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let v = SpherePoint::random(3, &mut rng);
            let pi = canonical_tensor(&v);
            assert!((pi.matrix() * canonical_reeb(&v)).norm() < 1e-12);
            let u = haar_unitary_with(3, &mut rng);
            let moved = pi.mapped(&u);
            let direct = canonical_tensor(&v.mapped(&u));
            assert!((moved.matrix() - direct.matrix()).norm() < 1e-10);

            // oracle: the Hermitian symplectic form minus its (v, iv) part
            let x = v.realified();
            let y = canonical_reeb(&v);
            let oracle = j_std(3) - (&x * y.transpose() - &y * x.transpose());
            assert!((pi.matrix() - oracle).norm() < 1e-12);
        }
    }

    fn canonical_reeb(v: &SpherePoint) -> DVector<f64> {
        realify_vec(&(v.vector() * Complex64::new(0.0, 1.0)))
    }

    #[test]
    fn pullback_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..5 {
            let e1 = SpherePoint::basis_vector(n, 0);
            let pi = canonical_tensor(&e1);
            let t = chart_pushforward(&pi).unwrap();
            let back = pullback_cp_tensor(&t).unwrap();
            assert!((back.matrix() - pi.matrix()).norm() < 1e-10);

            let v = SpherePoint::random(n, &mut rng);
            let pi = canonical_tensor(&v);
            let t = chart_pushforward(&pi).unwrap();
            let back = pullback_cp_tensor(&t).unwrap();
            let again = chart_pushforward_in(&back, t.base().chart()).unwrap();
            assert!((again.matrix() - t.matrix()).norm() < 1e-10);
        }
        let zero = chart_pushforward(&AmbientBivector::zero(SpherePoint::basis_vector(3, 0))).unwrap();
        assert_eq!(max_abs(pullback_cp_tensor(&zero).unwrap().matrix()), 0.0);
    }

    #[test]
    fn blocks_at_basepoint() {
        let e1 = SpherePoint::basis_vector(4, 0);
        let b = block_at_basepoint(&canonical_tensor(&e1), 1e-12).unwrap();
        assert_eq!(b.matrix(), &j_std(3));
        let z = block_at_basepoint(&AmbientBivector::zero(e1.clone()), 1e-12).unwrap();
        assert_eq!(max_abs(z.matrix()), 0.0);

        let mut bad = DMatrix::zeros(8, 8);
        bad[(1, 4)] = 1.0;
        bad[(4, 1)] = -1.0;
        let bad = AmbientBivector::from_raw(e1, bad);
        assert!(matches!(
            block_at_basepoint(&bad, 1e-9),
            Err(Error::InvariantViolation { .. })
        ));
    }

    #[test]
    fn difference_block_is_a_multiple_of_j() {
        for &c in &[0.25, 0.5, 0.8] {
            let p = phi2(&SpherePoint::basis_vector(3, 0));
            let d = TauField::new(3, 1.0).unwrap().at(&p).unwrap().matrix()
                - TauField::new(3, c).unwrap().at(&p).unwrap().matrix();
            let t = ChartBivector::new(p, (&d - d.transpose()) * 0.5).unwrap();
            let block = block_from_chart(&t, 1e-9).unwrap();
            let res = classify_block(&block, ClassificationMode::UInvariant, 16, 1, CLASSIFY_TOL);
            let lambda = res.lambda().expect("proportional");
            assert!((lambda - 2.0 * (c - 1.0)).abs() < 1e-10, "c={c} λ={lambda}");
        }
    }

    #[test]
    fn classification_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for mode in [ClassificationMode::SuInvariant, ClassificationMode::UInvariant] {
            let block = InvariantBlock::new(j_std(3) * 2.5).unwrap();
            let res = classify_block(&block, mode, CLASSIFY_SAMPLES, 1, CLASSIFY_TOL);
            assert!((res.lambda().unwrap() - 2.5).abs() < 1e-12);

            let skew = InvariantBlock::new(random_skew(6, &mut rng)).unwrap();
            let res = classify_block(&skew, mode, CLASSIFY_SAMPLES, 1, CLASSIFY_TOL);
            assert!(matches!(res.verdict, Verdict::NotInvariant { .. }));

            let two = InvariantBlock::new(random_skew(2, &mut rng)).unwrap();
            let res = classify_block(&two, mode, CLASSIFY_SAMPLES, 1, CLASSIFY_TOL);
            assert!(res.lambda().is_some());
        }
        let zero = InvariantBlock::new(DMatrix::zeros(4, 4)).unwrap();
        assert!(matches!(
            classify_block(&zero, ClassificationMode::UInvariant, 4, 1, CLASSIFY_TOL).verdict,
            Verdict::Inconclusive { .. }
        ));
        assert!(matches!(
            InvariantBlock::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])),
            Err(Error::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn non_conformal_block_reports_conformality() {
        // commutes with the torus but scales the two factors differently
        let mut b = DMatrix::zeros(6, 6);
        b.view_mut((0, 0), (2, 2)).copy_from(&j_std(1));
        b.view_mut((2, 2), (4, 4)).copy_from(&(j_std(2) * 3.0));
        let res = classify_block(
            &InvariantBlock::new(b).unwrap(),
            ClassificationMode::UInvariant,
            CLASSIFY_SAMPLES,
            2,
            CLASSIFY_TOL,
        );
        assert!(matches!(res.verdict, Verdict::NotInvariant { .. }));
    }

    #[test]
    fn su_gap_at_n3() {
        // J_anti(z) = ε z̄ commutes with SU(2) but is not complex-linear
        let j_anti = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
        );
        let j = j_std(2);
        let (a, b, c) = (0.48, 0.6, 0.64);
        let candidate = &j * a + &j_anti * b + &j * &j_anti * c;
        let block = InvariantBlock::new((&candidate - candidate.transpose()) * 0.5).unwrap();
        let su = classify_block(&block, ClassificationMode::SuInvariant, CLASSIFY_SAMPLES, 4, CLASSIFY_TOL);
        assert!(matches!(su.verdict, Verdict::Inconclusive { .. }), "{su:?}");
        assert!(su.details.complex_linearity.is_none());
        let u = classify_block(&block, ClassificationMode::UInvariant, CLASSIFY_SAMPLES, 4, CLASSIFY_TOL);
        assert!(matches!(u.verdict, Verdict::NotInvariant { .. }), "{u:?}");
    }

    #[test]
    fn scale_equivariance() {
        for mode in [ClassificationMode::SuInvariant, ClassificationMode::UInvariant] {
            let block = InvariantBlock::new(j_std(3) * -0.7).unwrap();
            let base = classify_block(&block, mode, 16, 3, CLASSIFY_TOL).lambda().unwrap();
            for alpha in [-2.0, 0.5, 10.0] {
                let l = classify_block(&block.scaled(alpha), mode, 16, 3, CLASSIFY_TOL)
                    .lambda()
                    .unwrap();
                assert!((l - alpha * base).abs() < 1e-12);
            }
        }
    }
}
