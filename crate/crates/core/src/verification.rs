//! Theorem-level checks packaged as [`VerificationReport`]s.
//!
//! Every sampled check draws point `i` from its own ChaCha8 stream
//! `(seed, i)`, so results do not depend on thread count or evaluation order.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::invariants::canonical_tensor;
use crate::lie_core::{
    haar_sample_with, haar_unitary_with, subalgebra, AlgebraElement, GroupElement, SuBasis,
    SubalgebraKind,
};
use crate::linalg::{max_abs, realify_vec};
use crate::poisson_structures::{coisotropy_check_with_tol, sigma_from_roots, AffinePoissonStructure};
use crate::quotient_geometry::{
    chart_coordinates, chart_pushforward_in, lift, phi2, phi3, rank_of, rho_sphere, CpPoint,
    Embedding, SpherePoint, TauField,
};
use crate::scalar::Scalar;
use crate::tensor_algebra::Bivector;

/// Number of worst points kept in a report.
pub const MAX_WITNESSES: usize = 5;
/// Default central-difference step for the Jacobi check.
pub const JACOBI_STEP: f64 = 1e-5;
/// Default tolerance for the Jacobi check.
pub const JACOBI_TOL: f64 = 1e-5;
/// Step of the finite-difference action Jacobian in the covariance check.
pub const COVARIANCE_STEP: f64 = 1e-6;
pub const COVARIANCE_TOL: f64 = 1e-5;
pub const EMBEDDING_TOL: f64 = 1e-8;
/// Tolerance for the `n = 2` case, where `τ_c` must vanish on the slice.
pub const EMBEDDING_ZERO_TOL: f64 = 1e-10;
pub const AFFINE_TOL: f64 = 1e-10;
pub const PROPORTIONALITY_TOL: f64 = 1e-6;
pub const WELL_DEFINED_TOL: f64 = 1e-8;
pub const CANONICAL_INVARIANCE_TOL: f64 = 1e-8;
pub const COISOTROPY_TOL: f64 = 1e-9;
/// Band around the circle `|v_1| = √c` used by the leaf census.
pub const CENSUS_BAND: f64 = 1e-4;
/// Chart-1 grid used for the connectivity count on `CP^1`.
pub const CENSUS_GRID_SIDE: usize = 201;
pub const CENSUS_GRID_RADIUS: f64 = 4.0;
/// Points placed exactly on the circle `|v_1| = √c`.
pub const CENSUS_PROBES: usize = 64;

/// The RNG for sample `index` of a run seeded with `seed`.
pub fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A sample that contributed a large residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub index: usize,
    pub point: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub max_residual: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub measured: BTreeMap<String, Value>,
}

impl VerificationReport {
    /// Aggregates per-sample residuals; `pass ⟺ max_residual < tol` and NaN fails.
    pub fn from_samples(check: &str, mut params: BTreeMap<String, Value>, tol: f64, samples: Vec<Witness>) -> Self {
        params.insert("tolerance".into(), json!(tol));
        let mut max_residual: f64 = 0.0;
        let mut nan = false;
        for w in &samples {
            nan |= w.residual.is_nan();
            max_residual = max_residual.max(w.residual);
        }
        if nan {
            max_residual = f64::NAN;
        }
        let mut witnesses = samples;
        witnesses.sort_by(|a, b| {
            b.residual
                .partial_cmp(&a.residual)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.index.cmp(&b.index))
        });
        witnesses.truncate(MAX_WITNESSES);
        Self {
            check: check.to_string(),
            params,
            max_residual,
            pass: !nan && max_residual < tol,
            witnesses,
            measured: BTreeMap::new(),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.params["tolerance"].as_f64().unwrap_or(f64::NAN)
    }
}

fn params(entries: &[(&str, Value)]) -> BTreeMap<String, Value> {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn collect<F>(count: usize, f: F) -> Result<Vec<Witness>>
where
    F: Fn(usize) -> Result<Witness> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

fn random_cp_point(n: usize, rng: &mut ChaCha8Rng) -> CpPoint {
    phi2(&SpherePoint::random(n, rng))
}

// ---------------------------------------------------------------- Jacobi

/// Largest component of the Jacobiator of a chart tensor field at `x`,
/// with central differences of width `step`.
pub fn jacobiator<F>(field: &F, x: &DVector<f64>, step: f64) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let d = x.len();
    let t = field(x)?;
    let mut grads = Vec::with_capacity(d);
    for l in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[l] += step;
        xm[l] -= step;
        grads.push((field(&xp)? - field(&xm)?) / (2.0 * step));
    }
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for (l, g) in grads.iter().enumerate() {
                    s += t[(l, i)] * g[(j, k)] + t[(l, j)] * g[(k, i)] + t[(l, k)] * g[(i, j)];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// Jacobi residual of `τ_c` at `points` random points.
pub fn jacobi_residual(n: usize, c: f64, points: usize, step: f64, seed: u64) -> Result<VerificationReport> {
    jacobi_with_perturbation(n, c, points, step, seed, 0.0)
}

/// Jacobi residual of the corrupted field `τ_c + ε·x_1·J_std`, where `x_1` is
/// the first real chart coordinate. A negative control for `n ≥ 3`.
pub fn jacobi_residual_corrupted(
    n: usize,
    c: f64,
    points: usize,
    step: f64,
    seed: u64,
    eps: f64,
) -> Result<VerificationReport> {
    jacobi_with_perturbation(n, c, points, step, seed, eps)
}

fn jacobi_with_perturbation(
    n: usize,
    c: f64,
    points: usize,
    step: f64,
    seed: u64,
    eps: f64,
) -> Result<VerificationReport> {
    if step <= 0.0 || step.is_nan() {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            range: "(0, inf)",
        });
    }
    let field = TauField::new(n, c)?;
    let j = crate::linalg::j_std(n - 1);
    let samples = collect(points, |i| {
        let p = random_cp_point(n, &mut point_rng(seed, i as u64));
        let k = p.chart();
        let eval = |x: &DVector<f64>| -> Result<DMatrix<f64>> {
            let t = field.chart_matrix(k, x)?;
            Ok(if eps == 0.0 { t } else { t + &j * (eps * x[0]) })
        };
        let x = p.real_coordinates();
        let residual = jacobiator(&eval, &x, step)?;
        Ok(Witness {
            index: i,
            point: p.representative().realified().iter().copied().collect(),
            residual,
        })
    })?;
    let name = if eps == 0.0 { "jacobi" } else { "jacobi_corrupted" };
    let mut p = params(&[
        ("n", json!(n)),
        ("c", json!(c)),
        ("points", json!(points)),
        ("step", json!(step)),
        ("seed", json!(seed)),
    ]);
    if eps != 0.0 {
        p.insert("perturbation".into(), json!(eps));
    }
    Ok(VerificationReport::from_samples(name, p, JACOBI_TOL, samples))
}

// ------------------------------------------------------------- embedding

/// A point of `S_c` built from a point of `S^{2n-3}`.
pub fn slice_point(c: f64, tail: &SpherePoint) -> SpherePoint {
    let n = tail.n() + 1;
    let mut v = DVector::from_element(n, Complex64::new(c.sqrt(), 0.0));
    v.rows_mut(1, n - 1)
        .copy_from(&(tail.vector() * Complex64::new((1.0 - c).sqrt(), 0.0)));
    SpherePoint::normalized(v)
}

/// Deviation at `v ∈ S_c` between `τ_c` in chart 1 and the transported
/// `ρ^{(n-1)}(φ₃(v))` (`n ≥ 3`), or `‖τ_c‖` itself (`n = 2`).
///
/// On `S_c` the chart coordinates are `w = √((1-c)/c) φ₃(v)`, a linear map,
/// so the transport multiplies `ρ` by `(1-c)/c`.
pub fn embedding_residual(field: &TauField, v: &SpherePoint) -> Result<f64> {
    let c = field.c();
    let p = CpPoint::from_sphere_in_chart(v, 0)?;
    let t = field.at(&p)?;
    if v.n() == 2 {
        return Ok(max_abs(t.matrix()));
    }
    let y = phi3(v, c, 1e-10)?;
    let rho = rho_sphere(&y, Embedding::Top)?;
    Ok(max_abs(&(t.matrix() - rho.matrix() * ((1.0 - c) / c))))
}

/// The embedded standard sphere inside `(CP^{n-1}, τ_c)`.
pub fn embedding_check(n: usize, c: f64, points: usize, seed: u64) -> Result<VerificationReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::OutOfRange {
            name: "c",
            value: c,
            range: "(0, 1)",
        });
    }
    let field = TauField::new(n, c)?;
    let samples = collect(points, |i| {
        let tail = SpherePoint::random(n - 1, &mut point_rng(seed, i as u64));
        let v = slice_point(c, &tail);
        Ok(Witness {
            index: i,
            point: v.realified().iter().copied().collect(),
            residual: embedding_residual(&field, &v)?,
        })
    })?;
    let tol = if n == 2 { EMBEDDING_ZERO_TOL } else { EMBEDDING_TOL };
    let p = params(&[
        ("n", json!(n)),
        ("c", json!(c)),
        ("points", json!(points)),
        ("seed", json!(seed)),
    ]);
    Ok(VerificationReport::from_samples("embedding", p, tol, samples))
}

/// Largest `∂/∂(Re v_1)` component of the sphere-level tensor at `v ∈ S_c`,
/// using a lift of the form `(1 ⊕ u'') σ_c` adapted to the slice. Needs `n ≥ 3`.
pub fn slice_tangency_residual(field: &TauField, v: &SpherePoint) -> Result<f64> {
    let n = v.n();
    let c = field.c();
    if n < 3 {
        // SU(1) is trivial, so σ_c is the only adapted lift and it reaches
        // just one point of the slice
        return Err(Error::InvalidDimension { n, min: 3 });
    }
    let y = phi3(v, c, 1e-10)?;
    let u = crate::quotient_geometry::lift_last(&y)
        .embed_bottom()
        .compose(field.structure().sigma())?;
    let off = (crate::quotient_geometry::phi1(&u).vector() - v.vector()).norm();
    if off > 1e-10 {
        return Err(Error::InvariantViolation {
            what: "slice lift",
            residual: off,
        });
    }
    let m = field.sphere_tensor(&u)?;
    Ok(m.matrix().row(0).amax())
}

// ------------------------------------------------------------ leaf census

/// Rank of `τ_c` at one sampled point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSample {
    pub index: usize,
    /// Real coordinates in chart 1 (`w_j = v_j / v_1`).
    pub chart1: Vec<f64>,
    pub rank: usize,
    /// `||v_1| - √c|`.
    pub offset: f64,
}

/// Ranks of `τ_c` at `samples` random points.
pub fn rank_map(n: usize, c: f64, samples: usize, tol: f64, seed: u64) -> Result<Vec<RankSample>> {
    let field = TauField::new(n, c)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let v = SpherePoint::random(n, &mut point_rng(seed, i as u64));
            let t = field.at(&phi2(&v))?;
            Ok(RankSample {
                index: i,
                chart1: realify_vec(&chart_coordinates(v.vector(), 0)).iter().copied().collect(),
                rank: rank_of(t.matrix(), tol),
                offset: (v.vector()[0].norm() - c.sqrt()).abs(),
            })
        })
        .collect()
}

/// Zero-locus summary on `CP^1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroLocus {
    pub band: f64,
    pub rank0_samples: usize,
    /// Rank-0 samples with `||v_1| - √c| ≥ band`; must be empty.
    pub rank0_outside_band: usize,
    pub max_rank0_offset: Option<f64>,
    /// Points exactly on `|v_1| = √c`.
    pub probes: usize,
    /// Largest rank found at the probes; must be 0.
    pub probe_max_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafCensus {
    pub n: usize,
    pub c: f64,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub histogram: BTreeMap<usize, usize>,
    pub ranks_even: bool,
    pub zero_locus: Option<ZeroLocus>,
    /// Connected components of the rank-2 region on the chart-1 grid.
    pub components: Option<usize>,
}

impl LeafCensus {
    /// Internal consistency: even ranks and, on `CP^1`, a rank-0 set that
    /// agrees with the circle.
    pub fn consistent(&self) -> bool {
        let zero_ok = self
            .zero_locus
            .as_ref()
            .is_none_or(|z| z.rank0_outside_band == 0 && z.probe_max_rank == 0);
        self.ranks_even && zero_ok
    }
}

/// Rank histogram of `τ_c`; for `n = 2` also the zero locus and the number
/// of rank-2 components.
pub fn leaf_census(n: usize, c: f64, samples: usize, tol: f64, seed: u64) -> Result<LeafCensus> {
    let map = rank_map(n, c, samples, tol, seed)?;
    let mut histogram = BTreeMap::new();
    for s in &map {
        *histogram.entry(s.rank).or_insert(0) += 1;
    }
    let ranks_even = map.iter().all(|s| s.rank % 2 == 0);
    let (zero_locus, components) = if n == 2 {
        let field = TauField::new(2, c)?;
        let rank0: Vec<&RankSample> = map.iter().filter(|s| s.rank == 0).collect();
        let probe_max_rank = (0..CENSUS_PROBES)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / CENSUS_PROBES as f64;
                let v = DVector::from_vec(vec![
                    Complex64::new(c.sqrt(), 0.0),
                    Complex64::from_polar((1.0 - c).sqrt(), theta),
                ]);
                let t = field.at(&phi2(&SpherePoint::normalized(v)))?;
                Ok(rank_of(t.matrix(), tol))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let zero = ZeroLocus {
            band: CENSUS_BAND,
            rank0_samples: rank0.len(),
            rank0_outside_band: rank0.iter().filter(|s| s.offset >= CENSUS_BAND).count(),
            max_rank0_offset: rank0.iter().map(|s| s.offset).reduce(f64::max),
            probes: CENSUS_PROBES,
            probe_max_rank,
        };
        let comps = rank2_components(&field, CENSUS_GRID_SIDE, CENSUS_GRID_RADIUS, tol)?;
        (Some(zero), Some(comps))
    } else {
        (None, None)
    };
    Ok(LeafCensus {
        n,
        c,
        samples,
        tol,
        seed,
        histogram,
        ranks_even,
        zero_locus,
        components,
    })
}

/// Flood fill of the rank-2 cells of `τ_c` on a `side x side` grid over
/// `[-radius, radius]²` in chart 1 of `CP^1`. Neighbouring cells are joined
/// only when the Pfaffian `T_12` has the same sign at both, since a sign
/// change forces a zero of the tensor between them.
pub fn rank2_components(field: &TauField, side: usize, radius: f64, tol: f64) -> Result<usize> {
    if field.n() != 2 {
        return Err(Error::InvalidDimension { n: field.n(), min: 2 });
    }
    let coord = |i: usize| -radius + 2.0 * radius * i as f64 / (side - 1) as f64;
    let cells: Vec<Option<bool>> = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / side, idx % side);
            let x = DVector::from_vec(vec![coord(i), coord(j)]);
            let t = field.chart_matrix(0, &x)?;
            Ok((rank_of(&t, tol) == 2).then_some(t[(0, 1)] > 0.0))
        })
        .collect::<Result<_>>()?;
    let mut seen = vec![false; cells.len()];
    let mut components = 0;
    for start in 0..cells.len() {
        if seen[start] || cells[start].is_none() {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(idx) = queue.pop_front() {
            let (i, j) = (idx / side, idx % side);
            let sign = cells[idx];
            let mut visit = |ni: usize, nj: usize| {
                let nidx = ni * side + nj;
                if !seen[nidx] && cells[nidx] == sign {
                    seen[nidx] = true;
                    queue.push_back(nidx);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < side {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < side {
                visit(i, j + 1);
            }
        }
    }
    Ok(components)
}

// ------------------------------------------------------------- covariance

/// Central-difference Jacobian of `x ↦ chart_{k'}(u · v(x))`, where `v(x)`
/// is the chart-`k` point with real coordinates `x`.
pub fn action_jacobian(
    u: &GroupElement<f64>,
    k: usize,
    x: &DVector<f64>,
    k_target: usize,
    step: f64,
) -> DMatrix<f64> {
    let n = u.n();
    let image = |x: &DVector<f64>| {
        let w = crate::linalg::complexify_vec(x);
        let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
        let mut it = w.iter();
        for j in (0..n).filter(|&j| j != k) {
            v[j] = *it.next().expect("chart length");
        }
        realify_vec(&chart_coordinates(&(u.matrix() * v), k_target))
    };
    let d = x.len();
    let mut jac = DMatrix::zeros(d, d);
    for l in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[l] += step;
        xm[l] -= step;
        jac.set_column(l, &((image(&xp) - image(&xm)) / (2.0 * step)));
    }
    jac
}

/// Residual of `τ_c(u·p) = u_* τ_c(p) + (g ↦ g·p)_* π(u)` at one pair.
///
/// The second term is the Poisson-action correction: with `g` a lift of `p`,
/// it is the chart pushforward of `L_{ug} Ad_{g^{-1}} Λ(u)`.
pub fn covariance_residual(field: &TauField, u: &GroupElement<f64>, p: &CpPoint, step: f64) -> Result<f64> {
    let g = lift(p.representative());
    let moved = phi2(&p.representative().mapped(u.matrix()));
    let k_target = moved.chart();
    let lhs = field.at(&moved)?;
    let jac = action_jacobian(u, p.chart(), &p.real_coordinates(), k_target, step);
    let transported = &jac * field.at(p)?.matrix() * jac.transpose();
    let basis = SuBasis::shared(u.n())?;
    let lambda_u = basis.left_trivialized_pi(u)?;
    let correction_lt = basis.adjoint_bivector(&g.inverse(), &lambda_u)?;
    let ug = u.compose(&g)?;
    let correction = chart_pushforward_in(&crate::quotient_geometry::push_to_sphere(&ug, &correction_lt)?, k_target)?;
    Ok(max_abs(&(lhs.matrix() - transported - correction.matrix())))
}

/// Residual of the bare invariance statement `τ_c(u·p) = u_* τ_c(p)`, which
/// omits the Poisson-action term and is not expected to hold.
pub fn invariance_residual(field: &TauField, u: &GroupElement<f64>, p: &CpPoint, step: f64) -> Result<f64> {
    let moved = phi2(&p.representative().mapped(u.matrix()));
    let jac = action_jacobian(u, p.chart(), &p.real_coordinates(), moved.chart(), step);
    let transported = &jac * field.at(p)?.matrix() * jac.transpose();
    Ok(max_abs(&(field.at(&moved)?.matrix() - transported)))
}

/// Covariance over `group_samples x point_samples` pairs. Group element `a`
/// uses stream `a`; point `b` uses stream `group_samples + b`.
pub fn covariance_check(
    n: usize,
    c: f64,
    group_samples: usize,
    point_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let field = TauField::new(n, c)?;
    let groups: Vec<GroupElement<f64>> = (0..group_samples)
        .map(|a| haar_sample_with(n, &mut point_rng(seed, a as u64)))
        .collect();
    let points: Vec<CpPoint> = (0..point_samples)
        .map(|b| random_cp_point(n, &mut point_rng(seed, (group_samples + b) as u64)))
        .collect();
    let samples = collect(group_samples * point_samples, |idx| {
        let (a, b) = (idx / point_samples, idx % point_samples);
        Ok(Witness {
            index: idx,
            point: points[b].representative().realified().iter().copied().collect(),
            residual: covariance_residual(&field, &groups[a], &points[b], COVARIANCE_STEP)?,
        })
    })?;
    let p = params(&[
        ("n", json!(n)),
        ("c", json!(c)),
        ("group_samples", json!(group_samples)),
        ("point_samples", json!(point_samples)),
        ("step", json!(COVARIANCE_STEP)),
        ("seed", json!(seed)),
    ]);
    Ok(VerificationReport::from_samples("covariance", p, COVARIANCE_TOL, samples))
}

// -------------------------------------------------------- affine identity

/// Ambient realization of `Σ C_ab (A_a) ∧ (A_b)` where the tangent vectors
/// `A_a = left · X_a · right` are realified as vectors in `R^{2n²}`.
fn ambient(left: &DMatrix<Complex64>, right: &DMatrix<Complex64>, coeffs: &Bivector<f64>) -> Result<DMatrix<f64>> {
    let n = left.nrows();
    let basis = SuBasis::shared(n)?;
    let cols: Vec<DVector<f64>> = basis
        .elements()
        .iter()
        .map(|x| {
            let m = left * x.matrix() * right;
            realify_vec(&DVector::from_column_slice(m.as_slice()))
        })
        .collect();
    let v = DMatrix::from_columns(&cols);
    Ok(&v * coeffs.coeffs() * v.transpose())
}

/// Residuals of the affine identity
/// `π_σ(gh) = L_g π_σ(h) + R_h π_σ(g) - L_g R_h π_σ(e)` and of
/// multiplicativity `π(gh) = L_g π(h) + R_h π(g)`, as ambient tensors at `gh`.
pub fn affine_residuals(
    structure: &AffinePoissonStructure,
    g: &GroupElement<f64>,
    h: &GroupElement<f64>,
) -> Result<(f64, f64)> {
    let n = g.n();
    let id = GroupElement::<f64>::identity(n);
    let e = id.matrix();
    let gh = g.compose(h)?;
    let (gm, hm, ghm) = (g.matrix(), h.matrix(), gh.matrix());

    let lhs = ambient(ghm, e, &structure.affine_tensor(&gh)?)?;
    let rhs = ambient(ghm, e, &structure.affine_tensor(h)?)? + ambient(gm, hm, &structure.affine_tensor(g)?)?
        - ambient(gm, hm, structure.x_sigma())?;
    let affine = max_abs(&(lhs - rhs));

    let basis = SuBasis::shared(n)?;
    let lhs = ambient(ghm, e, &basis.left_trivialized_pi(&gh)?)?;
    let rhs = ambient(ghm, e, &basis.left_trivialized_pi(h)?)? + ambient(gm, hm, &basis.left_trivialized_pi(g)?)?;
    let multiplicative = max_abs(&(lhs - rhs));
    Ok((affine, multiplicative))
}

/// Affine identity and multiplicativity over `pairs` random `(g, h)`.
pub fn affine_identity_check(n: usize, c: f64, pairs: usize, seed: u64) -> Result<VerificationReport> {
    let structure = AffinePoissonStructure::new(n, c)?;
    let samples = collect(pairs, |i| {
        let mut rng = point_rng(seed, i as u64);
        let g = haar_sample_with(n, &mut rng);
        let h = haar_sample_with(n, &mut rng);
        let (a, m) = affine_residuals(&structure, &g, &h)?;
        Ok(Witness {
            index: i,
            point: vec![a, m],
            residual: a.max(m),
        })
    })?;
    let p = params(&[
        ("n", json!(n)),
        ("c", json!(c)),
        ("pairs", json!(pairs)),
        ("seed", json!(seed)),
    ]);
    let mut report = VerificationReport::from_samples("affine", p, AFFINE_TOL, samples);
    report.params.insert("witness_point".into(), json!("[affine residual, multiplicativity residual]"));
    Ok(report)
}

// -------------------------------------------------------- proportionality

/// `λ(p) = ⟨D, C⟩ / ⟨C, C⟩` and `‖D - λC‖ / ‖C‖` for `D = τ_1 - τ_c` and
/// `C` the pushforward of `π̃`, at `p` in its chart.
pub fn proportionality_at(tau1: &TauField, tau_c: &TauField, p: &CpPoint) -> Result<(f64, f64)> {
    let d = tau1.at(p)?.into_matrix() - tau_c.at(p)?.into_matrix();
    let cmat = chart_pushforward_in(&canonical_tensor(p.representative()), p.chart())?.into_matrix();
    let cc = cmat.dot(&cmat);
    let lambda = d.dot(&cmat) / cc;
    Ok((lambda, (&d - &cmat * lambda).norm() / cc.sqrt()))
}

/// Proportionality of `τ_1 - τ_c` to the canonical tensor; the report's
/// residual is the larger of the pointwise misfit and the spread of `λ`.
pub fn proportionality_check(n: usize, c: f64, points: usize, seed: u64) -> Result<VerificationReport> {
    let tau1 = TauField::new(n, 1.0)?;
    let tau_c = TauField::new(n, c)?;
    let values: Vec<(f64, f64, Vec<f64>)> = (0..points)
        .into_par_iter()
        .map(|i| {
            let p = random_cp_point(n, &mut point_rng(seed, i as u64));
            let (l, r) = proportionality_at(&tau1, &tau_c, &p)?;
            Ok((l, r, p.representative().realified().iter().copied().collect()))
        })
        .collect::<Result<_>>()?;
    let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let spread = if values.is_empty() { 0.0 } else { hi - lo };
    let mean = values.iter().map(|v| v.0).sum::<f64>() / values.len().max(1) as f64;
    let mut samples: Vec<Witness> = values
        .into_iter()
        .enumerate()
        .map(|(i, (_, r, point))| Witness {
            index: i,
            point,
            residual: r,
        })
        .collect();
    // the spread enters as a pseudo-sample so that it bounds max_residual
    samples.push(Witness {
        index: points,
        point: vec![lo, hi],
        residual: spread,
    });
    let p = params(&[
        ("n", json!(n)),
        ("c", json!(c)),
        ("points", json!(points)),
        ("seed", json!(seed)),
    ]);
    let mut report = VerificationReport::from_samples("proportionality", p, PROPORTIONALITY_TOL, samples);
    report.measured.insert("lambda_mean".into(), json!(mean));
    report.measured.insert("lambda_spread".into(), json!(spread));
    Ok(report)
}

// --------------------------------------------------- well-definedness etc.

/// A second lift of `[v]`: `lift(v)·(e^{iθ} ⊕ e^{-iθ/(n-1)} h)` with
/// `h ∈ SU(n-1)` random.
pub fn alternative_lift(v: &SpherePoint, rng: &mut ChaCha8Rng) -> Result<GroupElement<f64>> {
    use rand::Rng;
    let n = v.n();
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let h = if n > 2 {
        haar_sample_with(n - 1, rng).matrix().clone()
    } else {
        DMatrix::identity(1, 1)
    };
    let mut block = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    block[(0, 0)] = Complex64::from_polar(1.0, theta);
    let scale = Complex64::from_polar(1.0, -theta / (n - 1) as f64);
    block.view_mut((1, 1), (n - 1, n - 1)).copy_from(&(h * scale));
    lift(v).compose(&GroupElement::from_matrix(block)?)
}

/// `τ_c` computed from two independent lifts of each sampled point.
pub fn well_definedness_check(n: usize, c: f64, points: usize, seed: u64) -> Result<VerificationReport> {
    let field = TauField::new(n, c)?;
    let samples = collect(points, |i| {
        let mut rng = point_rng(seed, i as u64);
        let v = SpherePoint::random(n, &mut rng);
        let p = phi2(&v);
        let a = field.at_with_lift(&alternative_lift(&v, &mut rng)?, p.chart())?;
        let b = field.at_with_lift(&alternative_lift(&v, &mut rng)?, p.chart())?;
        Ok(Witness {
            index: i,
            point: v.realified().iter().copied().collect(),
            residual: max_abs(&(a.matrix() - b.matrix())),
        })
    })?;
    let p = params(&[
        ("n", json!(n)),
        ("c", json!(c)),
        ("points", json!(points)),
        ("seed", json!(seed)),
    ]);
    Ok(VerificationReport::from_samples("well_definedness", p, WELL_DEFINED_TOL, samples))
}

/// `u_* π̃(v) = π̃(u v)` for random `u ∈ U(n)` and `v`.
pub fn canonical_invariance_check(n: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    if n < 2 {
        return Err(Error::InvalidDimension { n, min: 2 });
    }
    let out = collect(samples, |i| {
        let mut rng = point_rng(seed, i as u64);
        let v = SpherePoint::random(n, &mut rng);
        let u = haar_unitary_with(n, &mut rng);
        let moved = canonical_tensor(&v).mapped(&u);
        let direct = canonical_tensor(&v.mapped(&u));
        Ok(Witness {
            index: i,
            point: v.realified().iter().copied().collect(),
            residual: max_abs(&(moved.matrix() - direct.matrix())),
        })
    })?;
    let p = params(&[("n", json!(n)), ("samples", json!(samples)), ("seed", json!(seed))]);
    Ok(VerificationReport::from_samples("canonical_invariance", p, CANONICAL_INVARIANCE_TOL, out))
}

/// Coisotropy of the subgroup `kind` for `π_{σ_c}`, as a report. The witness
/// index is the worst generator of the subalgebra.
pub fn coisotropy_report(n: usize, c: f64, kind: SubalgebraKind, tol: f64) -> Result<VerificationReport> {
    let structure = AffinePoissonStructure::new(n, c)?;
    let h = subalgebra(n, kind)?;
    let rep = coisotropy_check_with_tol(&h, &structure.adjoint_r(), tol)?;
    let p = params(&[("n", json!(n)), ("c", json!(c)), ("subgroup", json!(kind.as_str()))]);
    let witness = Witness {
        index: rep.generator.unwrap_or(0),
        point: vec![],
        residual: rep.residual(),
    };
    Ok(VerificationReport::from_samples("coisotropy", p, tol, vec![witness]))
}

// ---------------------------------------------------------- Ad table

/// One family of the `Ad_{σ_c^{-1}}` table, checked on all its instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdTableRow {
    pub row: usize,
    pub label: &'static str,
    pub instances: usize,
    /// Largest entry of `Ad_{σ^{-1}}(X) - (table value)` over the instances.
    pub max_remainder: f64,
    /// Every remainder is exactly zero in the scalar type used.
    pub zero: bool,
}

/// Evaluates the eight rows of the `Ad_{σ_c^{-1}}` table with `s = √c`,
/// `t = √(1-c)` in the scalar type `T` (exact for rationals).
pub fn adjoint_table<T: Scalar>(n: usize, s: T, t: T) -> Result<Vec<AdTableRow>> {
    let sigma_inv = sigma_from_roots(n, s.clone(), t.clone())?.inverse();
    let last = n - 1;
    let xp = |i: usize, j: usize| AlgebraElement::<T>::x_plus(n, i, j);
    let xm = |i: usize, j: usize| AlgebraElement::<T>::x_minus(n, i, j);
    let c = s.clone() * s.clone();
    let two = T::from_i64(2);

    type Case<T> = (AlgebraElement<T>, AlgebraElement<T>);
    let mut rows: Vec<(&'static str, Vec<Case<T>>)> = vec![
        ("X_ij^+ -> X_ij^+ (1<i<j<n)", vec![]),
        ("X_1j^+ -> sqrt(c) X_1j^+ + sqrt(1-c) X_jn^+ (1<j<n)", vec![]),
        ("X_in^+ -> -sqrt(1-c) X_1i^+ + sqrt(c) X_in^+ (1<i<n)", vec![]),
        ("X_1n^+ -> X_1n^+", vec![]),
        ("X_ij^- -> X_ij^- (1<i<j<n)", vec![]),
        ("X_1j^- -> sqrt(c) X_1j^- - sqrt(1-c) X_jn^- (1<j<n)", vec![]),
        ("X_in^- -> sqrt(1-c) X_1i^- + sqrt(c) X_in^- (1<i<n)", vec![]),
        ("X_1n^- -> (2c-1) X_1n^- + 2i sqrt(c(1-c)) (e_11 - e_nn)", vec![]),
    ];
    for i in 1..last {
        for j in (i + 1)..last {
            rows[0].1.push((xp(i, j), xp(i, j)));
            rows[4].1.push((xm(i, j), xm(i, j)));
        }
    }
    for j in 1..last {
        rows[1].1.push((xp(0, j), xp(0, j).scale(s.clone()) + xp(j, last).scale(t.clone())));
        rows[2].1.push((xp(j, last), xp(0, j).scale(-t.clone()) + xp(j, last).scale(s.clone())));
        rows[5].1.push((xm(0, j), xm(0, j).scale(s.clone()) - xm(j, last).scale(t.clone())));
        rows[6].1.push((xm(j, last), xm(0, j).scale(t.clone()) + xm(j, last).scale(s.clone())));
    }
    rows[3].1.push((xp(0, last), xp(0, last)));
    rows[7].1.push((
        xm(0, last),
        xm(0, last).scale(two.clone() * c - T::one())
            + AlgebraElement::diag_pair(n, 0, last).scale(two * s.clone() * t.clone()),
    ));

    rows.into_iter()
        .enumerate()
        .map(|(k, (label, cases))| {
            let mut max_remainder: f64 = 0.0;
            let mut zero = true;
            for (x, expected) in &cases {
                let rem = sigma_inv.adjoint(x)? - expected.clone();
                for z in rem.matrix().iter() {
                    zero &= z.re == T::zero() && z.im == T::zero();
                    max_remainder = max_remainder.max(z.re.abs_f64()).max(z.im.abs_f64());
                }
            }
            Ok(AdTableRow {
                row: k + 1,
                label,
                instances: cases.len(),
                max_remainder,
                zero,
            })
        })
        .collect()
}

/// `Ad_{σ_c^{-1}}(r)` minus its closed-form expansion, in the scalar type `T`.
pub fn expansion_remainder<T: Scalar>(n: usize, s: T, t: T) -> Result<Bivector<T>> {
    let basis = SuBasis::<T>::new(n)?;
    let sigma_inv = sigma_from_roots(n, s.clone(), t.clone())?.inverse();
    let lhs = basis.adjoint_bivector(&sigma_inv, &basis.r_matrix())?;
    Ok(lhs - basis.adjoint_r_closed_form(&s, &t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Exact};

    #[test]
    fn report_aggregation() {
        let w = |i, r| Witness {
            index: i,
            point: vec![],
            residual: r,
        };
        let rep = VerificationReport::from_samples("x", BTreeMap::new(), 1e-3, (0..8).map(|i| w(i, i as f64 * 1e-4)).collect());
        assert!(rep.pass);
        assert_eq!(rep.witnesses.len(), MAX_WITNESSES);
        assert_eq!(rep.witnesses[0].index, 7);
        assert_eq!(rep.tolerance(), 1e-3);
        let bad = VerificationReport::from_samples("x", BTreeMap::new(), 1e-3, vec![w(0, 1e-3)]);
        assert!(!bad.pass);
        let nan = VerificationReport::from_samples("x", BTreeMap::new(), 1e-3, vec![w(0, f64::NAN)]);
        assert!(!nan.pass);
    }

    #[test]
    fn constant_field_has_no_jacobiator() {
        let j = crate::linalg::j_std(2) * 3.0;
        let field = |_: &DVector<f64>| -> Result<DMatrix<f64>> { Ok(j.clone()) };
        let r = jacobiator(&field, &DVector::from_vec(vec![0.3, -0.2, 0.1, 0.5]), 1e-5).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn jacobi_examples() {
        let rep = jacobi_residual(2, 0.5, 100, JACOBI_STEP, 42).unwrap();
        assert!(rep.pass, "{rep:?}");
        let bad = jacobi_residual_corrupted(3, 0.5, 10, JACOBI_STEP, 42, 0.1).unwrap();
        assert!(bad.max_residual > 1e-3);
        assert!(jacobi_residual(2, 0.5, 1, 0.0, 1).is_err());
    }

    #[test]
    fn embedding_examples() {
        assert!(embedding_check(3, 0.25, 100, 1).unwrap().pass);
        assert!(embedding_check(2, 0.5, 100, 1).unwrap().pass);
        let field = TauField::new(3, 0.25).unwrap();
        // both sides agree at (√c, √(1-c), 0) ...
        let v = slice_point(0.25, &SpherePoint::basis_vector(2, 0));
        assert!(embedding_residual(&field, &v).unwrap() < 1e-12);
        // ... and vanish where φ₃(v) is the base point e_{n-1} of the top embedding
        let v = slice_point(0.25, &SpherePoint::basis_vector(2, 1));
        assert!(embedding_residual(&field, &v).unwrap() < 1e-12);
        let t = field.at(&CpPoint::from_sphere_in_chart(&v, 0).unwrap()).unwrap();
        assert!(max_abs(t.matrix()) < 1e-12);
        assert!(matches!(embedding_check(3, 1.0, 1, 1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn slice_tangency() {
        let two = TauField::new(2, 0.3).unwrap();
        let v = slice_point(0.3, &SpherePoint::basis_vector(1, 0));
        assert!(matches!(slice_tangency_residual(&two, &v), Err(Error::InvalidDimension { .. })));
        for n in 3..6 {
            let field = TauField::new(n, 0.3).unwrap();
            let mut rng = point_rng(5, n as u64);
            for _ in 0..10 {
                let v = slice_point(0.3, &SpherePoint::random(n - 1, &mut rng));
                assert!(slice_tangency_residual(&field, &v).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn census_small() {
        let census = leaf_census(2, 0.5, 500, crate::quotient_geometry::RANK_TOL, 3).unwrap();
        assert!(census.consistent());
        assert_eq!(census.components, Some(2));
        assert!(census.histogram.keys().all(|r| *r == 0 || *r == 2));
        let one = leaf_census(2, 1.0, 200, crate::quotient_geometry::RANK_TOL, 3).unwrap();
        assert!(one.consistent());
        assert_eq!(one.components, Some(1));
        let three = leaf_census(3, 0.5, 50, crate::quotient_geometry::RANK_TOL, 3).unwrap();
        assert!(three.ranks_even && three.zero_locus.is_none());
    }

    #[test]
    fn covariance_examples() {
        let field = TauField::new(3, 0.5).unwrap();
        let p = phi2(&SpherePoint::random(3, &mut point_rng(1, 0)));
        let id = GroupElement::identity(3);
        assert!(covariance_residual(&field, &id, &p, COVARIANCE_STEP).unwrap() < 1e-8);
        assert!(covariance_check(3, 0.5, 4, 4, 7).unwrap().pass);
        assert!(covariance_check(3, 1.0, 4, 4, 7).unwrap().pass);
        // the bare invariance statement fails away from the identity
        let u = haar_sample_with(3, &mut point_rng(1, 1));
        assert!(invariance_residual(&field, &u, &p, COVARIANCE_STEP).unwrap() > 1e-3);
    }

    #[test]
    fn affine_examples() {
        assert!(affine_identity_check(3, 0.3, 20, 1).unwrap().pass);
        assert!(affine_identity_check(3, 1.0, 20, 1).unwrap().pass);
        let s = AffinePoissonStructure::new(3, 0.3).unwrap();
        let e = GroupElement::identity(3);
        let (a, m) = affine_residuals(&s, &e, &e).unwrap();
        assert_eq!((a, m), (0.0, 0.0));
    }

    #[test]
    fn proportionality_examples() {
        let rep = proportionality_check(3, 0.5, 30, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        let lambda = rep.measured["lambda_mean"].as_f64().unwrap();
        assert!((lambda + 1.0).abs() < 1e-8);
        let one = proportionality_check(2, 1.0, 5, 1).unwrap();
        assert!(one.pass);
        assert_eq!(one.measured["lambda_mean"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn well_definedness_and_invariance() {
        for n in 2..5 {
            assert!(well_definedness_check(n, 0.5, 20, 2).unwrap().pass);
            assert!(canonical_invariance_check(n, 20, 2).unwrap().pass);
        }
    }

    #[test]
    fn coisotropy_reports() {
        assert!(coisotropy_report(4, 0.36, SubalgebraKind::UBottom, COISOTROPY_TOL).unwrap().pass);
        let bad = coisotropy_report(3, 0.5, SubalgebraKind::SuBottom, COISOTROPY_TOL).unwrap();
        assert!(!bad.pass && bad.max_residual > 1e-3);
    }

    #[test]
    fn exact_table_and_expansion() {
        for n in 2..6 {
            let rows = adjoint_table::<Exact>(n, ratio(3, 5), ratio(4, 5)).unwrap();
            assert_eq!(rows.len(), 8);
            assert!(rows.iter().all(|r| r.zero), "{rows:?}");
            assert!(expansion_remainder::<Exact>(n, ratio(3, 5), ratio(4, 5)).unwrap().is_zero());
        }
        let rows = adjoint_table(4, 0.5f64.sqrt(), 0.5f64.sqrt()).unwrap();
        assert!(rows.iter().all(|r| r.max_remainder < 1e-12));
        // a wrong value of c is caught
        let rows = adjoint_table::<Exact>(3, ratio(3, 5), ratio(3, 5)).unwrap();
        assert!(!rows.iter().all(|r| r.zero));
    }
}
