//! Density operators, POMs and the Born rule.
//!
//! Also hosts the two reference state generators used throughout: "prior I"
//! (uniform simplex spectrum in a Haar-random eigenbasis) and the Ginibre
//! construction `AA†/tr{AA†}`, which coincides with the primitive prior for
//! informationally complete POMs.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    self, bloch_operator, c, dagger, haar_unitary, hermitian_basis, hermitian_eigenvalues,
    hermitian_from_coords, identity, kron, CMatrix,
};
use crate::samplers::simplex::sample_simplex_exponential;
use crate::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still counted as nonnegative.
pub const PSD_TOL: f64 = 1e-10;
pub const POM_SUM_TOL: f64 = 1e-10;
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidState("matrix must be square and non-empty".into()));
        }
        if !linalg::is_hermitian(&matrix, HERMITIAN_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Normalizes a positive-semidefinite matrix by its trace.
    pub fn from_positive(matrix: CMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Self::new(linalg::hermitian_part(&matrix).unscale(tr))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: identity(d).unscale(d as f64) }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) ket.
    pub fn pure(psi: &[linalg::C64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let m = &v * v.adjoint();
        Self::from_positive(m)
    }

    /// Qubit state `(1 + r·σ)/2`; requires `|r| ≤ 1`.
    pub fn qubit(bloch: [f64; 3]) -> Result<Self> {
        Self::new(bloch_operator(0.5, bloch))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { matrix: kron(&self.matrix, &other.matrix) }
    }
}

/// Outcome probabilities on the unit-sum simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbabilities("empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidProbabilities(format!("entry {bad} is not in [0, 1]")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbabilities(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Rescales nonnegative entries to unit sum.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        if !(sum > 0.0) || values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidProbabilities(format!("cannot normalize {values:?}")));
        }
        values.iter_mut().for_each(|v| *v /= sum);
        Ok(Self(values))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.0.iter().map(|p| p * p).sum()
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Vec<f64> {
        p.0
    }
}

/// `tr{ρ²}`, between `1/d` and 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Purity(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PomKind {
    Trine,
    Antitrine,
    Tetrahedron,
    TetrahedronPair,
    /// Trine on the first qubit, antitrine on the second.
    TrineAntitrine,
    Custom,
}

/// Probability-operator measurement: nonnegative effects summing to 1.
#[derive(Debug, Clone)]
pub struct Pom {
    name: String,
    kind: PomKind,
    dim: usize,
    effects: Vec<CMatrix>,
    ic: OnceLock<std::result::Result<IcReconstructor, usize>>,
}

impl Pom {
    pub fn new(name: impl Into<String>, effects: Vec<CMatrix>) -> Result<Self> {
        Self::with_kind(name, PomKind::Custom, effects)
    }

    fn with_kind(name: impl Into<String>, kind: PomKind, effects: Vec<CMatrix>) -> Result<Self> {
        let name = name.into();
        let dim = effects
            .first()
            .ok_or_else(|| Error::InvalidPom("no outcomes".into()))?
            .nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::InvalidPom(format!("effect {k} has wrong shape")));
            }
            if !linalg::is_hermitian(e, HERMITIAN_TOL) {
                return Err(Error::InvalidPom(format!("effect {k} is not Hermitian")));
            }
            if linalg::min_eigenvalue(e) < -PSD_TOL {
                return Err(Error::InvalidPom(format!("effect {k} is not nonnegative")));
            }
            sum += e;
        }
        let dev = (sum - identity(dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > POM_SUM_TOL {
            return Err(Error::InvalidPom(format!("effects sum to identity only within {dev:e}")));
        }
        Ok(Self { name, kind, dim, effects, ic: OnceLock::new() })
    }

    /// Looks up one of the built-in POMs: `trine`, `antitrine`, `tetra`,
    /// `tetra2` (tetrahedron pair) or `tat` (trine ⊗ antitrine).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "trine" => Ok(make_trine()),
            "antitrine" => Ok(make_antitrine()),
            "tetra" => Ok(make_tetrahedron()),
            "tetra2" => Ok(make_tetrahedron_pair()),
            "tat" => Ok(make_tat()),
            other => Err(Error::InvalidInput(format!("unknown POM `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PomKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    /// Linear reconstruction map, built on first use and cached.
    pub fn ic_reconstructor(&self) -> Result<&IcReconstructor> {
        match self.ic.get_or_init(|| IcReconstructor::build(self)) {
            Ok(r) => Ok(r),
            Err(rank) => Err(Error::NotInformationallyComplete {
                name: self.name.clone(),
                rank: *rank,
                needed: self.dim * self.dim,
            }),
        }
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.ic_reconstructor().is_ok()
    }
}

impl fmt::Display for Pom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} outcomes, d = {})", self.name, self.effects.len(), self.dim)
    }
}

/// Unit Bloch vectors of the trine, 120° apart in the x-y plane.
pub fn trine_axes() -> [[f64; 3]; 3] {
    let h = 3f64.sqrt() / 2.0;
    [[1.0, 0.0, 0.0], [-0.5, h, 0.0], [-0.5, -h, 0.0]]
}

/// Tetrahedron axes; any rigid rotation of this set would do.
pub fn tetrahedron_axes() -> [[f64; 3]; 4] {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

pub fn make_trine() -> Pom {
    let effects = trine_axes().iter().map(|a| bloch_operator(1.0 / 3.0, *a)).collect();
    Pom::with_kind("trine", PomKind::Trine, effects).expect("trine is a valid POM")
}

pub fn make_antitrine() -> Pom {
    let effects = trine_axes()
        .iter()
        .map(|a| bloch_operator(1.0 / 3.0, [-a[0], -a[1], -a[2]]))
        .collect();
    Pom::with_kind("antitrine", PomKind::Antitrine, effects).expect("antitrine is a valid POM")
}

pub fn make_tetrahedron() -> Pom {
    let effects = tetrahedron_axes().iter().map(|a| bloch_operator(0.25, *a)).collect();
    Pom::with_kind("tetra", PomKind::Tetrahedron, effects).expect("tetrahedron is a valid POM")
}

/// Product POM with outcome index `j * b.num_outcomes() + k`.
pub fn product_pom(a: &Pom, b: &Pom) -> Pom {
    let mut effects = Vec::with_capacity(a.num_outcomes() * b.num_outcomes());
    for ea in a.effects() {
        for eb in b.effects() {
            effects.push(kron(ea, eb));
        }
    }
    let (name, kind) = match (a.kind, b.kind) {
        (PomKind::Trine, PomKind::Antitrine) => ("tat".to_string(), PomKind::TrineAntitrine),
        (PomKind::Tetrahedron, PomKind::Tetrahedron) => {
            ("tetra2".to_string(), PomKind::TetrahedronPair)
        }
        _ => (format!("{}*{}", a.name, b.name), PomKind::Custom),
    };
    Pom::with_kind(name, kind, effects).expect("product of POMs is a POM")
}

pub fn make_tat() -> Pom {
    product_pom(&make_trine(), &make_antitrine())
}

pub fn make_tetrahedron_pair() -> Pom {
    let t = make_tetrahedron();
    product_pom(&t, &t)
}

/// Born rule without validation; entries may carry round-off.
pub(crate) fn born_raw(rho: &CMatrix, pom: &Pom) -> Vec<f64> {
    pom.effects().iter().map(|e| linalg::trace_product_re(e, rho)).collect()
}

/// `p_k = tr{Π_k ρ}`.
pub fn born_probabilities(rho: &DensityOperator, pom: &Pom) -> Result<ProbVector> {
    if rho.dim() != pom.dim() {
        return Err(Error::DimensionMismatch { expected: pom.dim(), got: rho.dim() });
    }
    let raw = born_raw(rho.matrix(), pom);
    let clean: Vec<f64> = raw.into_iter().map(|p| p.max(0.0)).collect();
    ProbVector::normalized(clean)
}

pub fn purity(rho: &DensityOperator) -> Purity {
    // tr{ρ²} = Σ|ρ_ij|² for Hermitian ρ.
    Purity(linalg::frobenius_norm_sq(rho.matrix()))
}

/// Partial transpose on the second qubit of a 4×4 matrix.
pub fn partial_transpose_second(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[(2 * a + i, 2 * b + j)] = m[(2 * a + j, 2 * b + i)];
                }
            }
        }
    }
    out
}

/// Smallest eigenvalue of the partial transpose of a two-qubit state.
pub fn ppt_min_eigenvalue(rho: &DensityOperator) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    Ok(linalg::min_eigenvalue(&partial_transpose_second(rho.matrix())))
}

/// Peres-Horodecki test; exact for two qubits.
pub fn is_ppt_separable(rho: &DensityOperator) -> Result<bool> {
    Ok(ppt_min_eigenvalue(rho)? >= -PSD_TOL)
}

/// "Prior I": spectrum uniform on the simplex, Haar-random eigenbasis.
pub fn sample_prior_one<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityOperator {
    assert!(d >= 2, "dimension must be at least 2");
    let r = sample_simplex_exponential(d, rng);
    let u = haar_unitary(d, rng);
    let mut scaled = u.clone();
    for j in 0..d {
        for i in 0..d {
            scaled[(i, j)] *= r[j];
        }
    }
    let m = linalg::hermitian_part(&(scaled * dagger(&u)));
    DensityOperator { matrix: m.unscale(m.trace().re) }
}

/// `AA†/tr{AA†}` with `A` a complex Ginibre matrix.
pub fn sample_ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityOperator {
    assert!(d >= 2, "dimension must be at least 2");
    let a = linalg::ginibre_matrix(d, rng);
    let m = linalg::hermitian_part(&(&a * dagger(&a)));
    DensityOperator { matrix: m.unscale(m.trace().re) }
}

/// Pseudo-inverse of the Born map in a fixed Hermitian basis.
#[derive(Debug, Clone)]
pub struct IcReconstructor {
    dim: usize,
    /// d² × K
    pinv: DMatrix<f64>,
}

impl IcReconstructor {
    fn build(pom: &Pom) -> std::result::Result<Self, usize> {
        let d = pom.dim();
        let basis = hermitian_basis(d);
        let forward = DMatrix::from_fn(pom.num_outcomes(), basis.len(), |k, m| {
            linalg::trace_product_re(&pom.effects()[k], &basis[m])
        });
        let svd = forward.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax).count();
        if rank < d * d {
            return Err(rank);
        }
        let pinv = svd.pseudo_inverse(1e-10 * smax).map_err(|_| rank)?;
        Ok(Self { dim: d, pinv })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The Hermitian unit-trace `M` with `tr{Π_k M} = p_k`.
    pub fn reconstruct(&self, p: &[f64]) -> Result<CMatrix> {
        if p.len() != self.pinv.ncols() {
            return Err(Error::DimensionMismatch { expected: self.pinv.ncols(), got: p.len() });
        }
        let coords = &self.pinv * nalgebra::DVector::from_column_slice(p);
        Ok(hermitian_from_coords(self.dim, coords.as_slice()))
    }
}

/// Linear reconstruction for an informationally complete POM. The result is
/// a valid state iff `p` is physical.
pub fn reconstruct_ic(p: &ProbVector, pom: &Pom) -> Result<CMatrix> {
    pom.ic_reconstructor()?.reconstruct(p.as_slice())
}

/// `|Φ+⟩⟨Φ+|` mixed with white noise: `q Φ+ + (1−q) 1/4`.
pub fn werner_state(q: f64) -> DensityOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = DensityOperator::pure(&[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]).expect("valid");
    let m = bell.matrix().scale(q) + identity(4).scale((1.0 - q) / 4.0);
    DensityOperator { matrix: m }
}
