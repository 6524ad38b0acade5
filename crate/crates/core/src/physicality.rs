//! Deciding whether a probability vector is the Born image of some state.
//!
//! The general check maximizes a figure of merit `Q(p; p̂)` over physical
//! `p̂`, parameterized as `ρ̂ = A†A / tr{A†A}` so that every iterate is a
//! valid state. `Q ≤ 0` with equality only at `p̂ = p`, so `p` is physical
//! iff the maximum is zero. The ascent follows either the direct gradient
//! `G = A(R - ⟨R⟩)` or a Polak-Ribière conjugate direction.
//!
//! Two faster checks exist for special POMs: linear reconstruction for
//! informationally complete POMs, and a one-parameter search for the
//! trine-antitrine pair.

use std::sync::OnceLock;

use nalgebra::{Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use crate::densities::Dataset;
use crate::linalg::{self, identity, CMatrix, C64};
use crate::quantum::{born_raw, DensityOperator, Pom, PomKind, ProbVector, PSD_TOL};
use crate::{Error, Result};

/// Figure of merit comparing a candidate `p` with a physical `p̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QFunctional {
    /// `Σ p_k ln(p̂_k / p_k)`
    #[default]
    Kl,
    /// `Σ √(p_k p̂_k) - 1`
    Bhattacharyya,
}

// Keeps ln and 1/x finite when an iterate has an exactly vanishing p̂_k.
const P_HAT_FLOOR: f64 = 1e-300;

impl QFunctional {
    pub fn value(self, p: &[f64], p_hat: &[f64]) -> f64 {
        match self {
            Self::Kl => p
                .iter()
                .zip(p_hat)
                .filter(|(pk, _)| **pk > 0.0)
                .map(|(pk, qk)| pk * (qk.max(P_HAT_FLOOR) / pk).ln())
                .sum(),
            Self::Bhattacharyya => {
                p.iter().zip(p_hat).map(|(pk, qk)| (pk * qk.max(0.0)).sqrt()).sum::<f64>() - 1.0
            }
        }
    }

    /// `∂Q/∂p̂_k`.
    pub fn derivative(self, p: &[f64], p_hat: &[f64], out: &mut [f64]) {
        for ((o, pk), qk) in out.iter_mut().zip(p).zip(p_hat) {
            let qk = qk.max(P_HAT_FLOOR);
            *o = match self {
                Self::Kl => pk / qk,
                Self::Bhattacharyya => 0.5 * (pk / qk).sqrt(),
            };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AscentMethod {
    /// Direct gradient.
    Dg,
    /// Conjugate gradient with the Polak-Ribière update.
    Cg,
}

impl std::str::FromStr for AscentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dg" => Ok(Self::Dg),
            "cg" => Ok(Self::Cg),
            other => Err(Error::InvalidInput(format!("unknown ascent method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    /// Step size for `A ← A + ε H`; halved whenever Q would decrease.
    pub epsilon_step: f64,
    /// Stop once `tr{|(R - ⟨R⟩)ρ̂|}` falls to this value.
    pub precision: f64,
    /// χ in the Polak-Ribière update, `0 ≤ χ < 1`.
    pub chi: f64,
    pub max_iterations: usize,
    pub method: AscentMethod,
    pub q_kind: QFunctional,
    /// Points with `max Q ≥ -q_tolerance` are declared physical.
    pub q_tolerance: f64,
    /// Record Q after every accepted step.
    pub record_trajectory: bool,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            epsilon_step: 0.05,
            precision: 1e-8,
            chi: 0.0,
            max_iterations: 20_000,
            method: AscentMethod::Cg,
            q_kind: QFunctional::Kl,
            q_tolerance: 1e-10,
            record_trajectory: false,
        }
    }
}

impl AscentConfig {
    pub fn with_method(mut self, method: AscentMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_q(mut self, q: QFunctional) -> Self {
        self.q_kind = q;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Stationarity reached.
    Converged,
    /// Q climbed above `-q_tolerance`.
    ReachedZero,
    /// The concavity bound fell below `-q_tolerance`.
    CertifiedNegative,
    /// Iterations or working precision ran out with neither of the above.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct AscentOutcome {
    pub q_max: f64,
    pub rho_hat: DensityOperator,
    pub p_hat: Vec<f64>,
    pub iterations: usize,
    pub stationarity: f64,
    /// `Q + λ_max(R) - ⟨R⟩`: no state beats this, since Q is concave in ρ̂.
    pub upper_bound: f64,
    pub stop: StopReason,
    pub trajectory: Vec<f64>,
}

/// One evaluation of the ascent at a given `A`.
struct Point {
    a: CMatrix,
    rho: CMatrix,
    p_hat: Vec<f64>,
    q: f64,
    /// `R - ⟨R⟩`
    centered: CMatrix,
    r_mean: f64,
    g: CMatrix,
}

struct Ascent<'a> {
    pom: &'a Pom,
    p: &'a [f64],
    q: QFunctional,
    deriv: Vec<f64>,
}

impl<'a> Ascent<'a> {
    fn new(pom: &'a Pom, p: &'a [f64], q: QFunctional) -> Self {
        Self { pom, p, q, deriv: vec![0.0; p.len()] }
    }

    fn eval(&mut self, a: CMatrix) -> Point {
        let aa = a.adjoint() * &a;
        let rho = linalg::hermitian_part(&aa).unscale(aa.trace().re);
        let p_hat = born_raw(&rho, self.pom);
        let q = self.q.value(self.p, &p_hat);
        self.q.derivative(self.p, &p_hat, &mut self.deriv);
        let d = self.pom.dim();
        let mut r = CMatrix::zeros(d, d);
        for (e, w) in self.pom.effects().iter().zip(&self.deriv) {
            r += e.scale(*w);
        }
        let r_mean = linalg::trace_product_re(&r, &rho);
        let centered = r - identity(d).scale(r_mean);
        let g = &a * &centered;
        Point { a, rho, p_hat, q, centered, r_mean, g }
    }
}

fn stationarity(pt: &Point, precision: f64) -> f64 {
    let m = &pt.centered * &pt.rho;
    let fro = linalg::frobenius_norm_sq(&m).sqrt();
    // ‖M‖_F ≤ ‖M‖_1 ≤ √d ‖M‖_F; only pay for the SVD when it matters.
    if fro > precision || fro * (m.nrows() as f64).sqrt() <= precision {
        fro
    } else {
        linalg::trace_norm(&m)
    }
}

fn upper_bound(pt: &Point) -> f64 {
    let r = &pt.centered + identity(pt.centered.nrows()).scale(pt.r_mean);
    pt.q + linalg::max_eigenvalue(&r) - pt.r_mean
}

fn run_ascent(
    pom: &Pom,
    p: &[f64],
    cfg: &AscentConfig,
    verdict_tolerance: Option<f64>,
) -> Result<AscentOutcome> {
    if p.len() != pom.num_outcomes() {
        return Err(Error::DimensionMismatch { expected: pom.num_outcomes(), got: p.len() });
    }
    let d = pom.dim();
    let mut asc = Ascent::new(pom, p, cfg.q_kind);
    let mut cur = asc.eval(identity(d));
    let mut h = cur.g.clone();
    let mut eps = cfg.epsilon_step;
    let mut streak = 0usize;
    let mut trajectory = Vec::new();
    if cfg.record_trajectory {
        trajectory.push(cur.q);
    }
    let mut iterations = 0usize;

    let finish = |pt: Point, iterations, stat, stop, trajectory| -> Result<AscentOutcome> {
        let ub = upper_bound(&pt);
        Ok(AscentOutcome {
            q_max: pt.q,
            rho_hat: DensityOperator::new(pt.rho)?,
            p_hat: pt.p_hat,
            iterations,
            stationarity: stat,
            upper_bound: ub,
            stop,
            trajectory,
        })
    };

    loop {
        let stat = stationarity(&cur, cfg.precision);
        if stat <= cfg.precision {
            return finish(cur, iterations, stat, StopReason::Converged, trajectory);
        }
        if let Some(tol) = verdict_tolerance {
            if cur.q >= -tol {
                return finish(cur, iterations, stat, StopReason::ReachedZero, trajectory);
            }
            if iterations % 8 == 0 && upper_bound(&cur) < -tol {
                return finish(cur, iterations, stat, StopReason::CertifiedNegative, trajectory);
            }
        }
        if iterations >= cfg.max_iterations {
            if verdict_tolerance.is_some() {
                return finish(cur, iterations, stat, StopReason::Undecided, trajectory);
            }
            return Err(Error::NonConvergence { iterations, best_q: cur.q });
        }

        let mut restarted = cfg.method == AscentMethod::Dg;
        let next = loop {
            let cand = asc.eval(&cur.a + h.scale(eps));
            if cand.q.is_finite() && cand.q >= cur.q - 1e-14 {
                break Some(cand);
            }
            streak = 0;
            if !restarted {
                h = cur.g.clone();
                restarted = true;
                continue;
            }
            eps *= 0.5;
            if eps < 1e-14 {
                break None;
            }
        };
        let Some(mut next) = next else {
            // No ascent direction left at working precision.
            let stop = match verdict_tolerance {
                Some(tol) if cur.q >= -tol => StopReason::ReachedZero,
                Some(tol) if upper_bound(&cur) < -tol => StopReason::CertifiedNegative,
                Some(_) => StopReason::Undecided,
                None => StopReason::Converged,
            };
            return finish(cur, iterations, stat, stop, trajectory);
        };

        streak += 1;
        if streak >= 5 && eps < cfg.epsilon_step {
            eps = (eps * 2.0).min(cfg.epsilon_step);
            streak = 0;
        }

        // Keep tr{A†A} = d; ρ̂ is unchanged and G scales with A.
        let s = (d as f64 / linalg::frobenius_norm_sq(&next.a)).sqrt();
        next.a.scale_mut(s);
        next.g.scale_mut(s);
        let g_old = cur.g.scale(s);
        h.scale_mut(s);

        let gamma = match cfg.method {
            AscentMethod::Dg => 0.0,
            AscentMethod::Cg => {
                let denom = linalg::frobenius_norm_sq(&g_old);
                if denom > 0.0 {
                    let num = linalg::frobenius_inner_re(&next.g, &(&next.g - g_old.scale(cfg.chi)));
                    (num / denom).max(0.0)
                } else {
                    0.0
                }
            }
        };
        h = &next.g + h.scale(gamma);
        cur = next;
        iterations += 1;
        if cfg.record_trajectory {
            trajectory.push(cur.q);
        }
    }
}

/// Maximizes `Q(p; p̂)` over physical `p̂`, starting from the maximally
/// mixed state, until the stationarity measure drops to `cfg.precision`.
pub fn maximize_q(p: &ProbVector, pom: &Pom, cfg: &AscentConfig) -> Result<AscentOutcome> {
    run_ascent(pom, p.as_slice(), cfg, None)
}

/// Value, gradient `G = A(R - ⟨R⟩)` and `tr{A†A}` at an arbitrary `A`.
/// `δQ = 2 Re tr{G† δA} / tr{A†A}` to first order.
pub fn q_gradient(a: &CMatrix, p: &[f64], pom: &Pom, q: QFunctional) -> (f64, CMatrix, f64) {
    let mut asc = Ascent::new(pom, p, q);
    let pt = asc.eval(a.clone());
    (pt.q, pt.g, linalg::frobenius_norm_sq(a))
}

/// Maximum-likelihood estimate over all states and the attained `ln L`.
///
/// `Σ n_k ln p̂_k` and the KL figure of merit at `p = n/N` differ by a
/// positive factor and a constant, so the same ascent serves both.
pub fn maximize_likelihood(
    data: &Dataset,
    pom: &Pom,
    cfg: &AscentConfig,
) -> Result<(ProbVector, f64)> {
    if data.len() != pom.num_outcomes() {
        return Err(Error::DimensionMismatch { expected: pom.num_outcomes(), got: data.len() });
    }
    let freq = data.frequencies()?;
    // L_max is the reference for likelihood thresholds, so push past the
    // default stopping point.
    let cfg = AscentConfig {
        q_kind: QFunctional::Kl,
        precision: cfg.precision.min(1e-12),
        max_iterations: cfg.max_iterations.max(200_000),
        ..*cfg
    };
    let out = maximize_q(&freq, pom, &cfg)?;
    let p_ml = ProbVector::normalized(out.p_hat.iter().map(|x| x.max(0.0)).collect())?;
    let ll = crate::densities::log_likelihood(&p_ml, data)?;
    Ok((p_ml, ll))
}

/// Linear reconstruction followed by an eigenvalue test.
pub fn is_physical_ic(p: &ProbVector, pom: &Pom) -> Result<bool> {
    let m = pom.ic_reconstructor()?.reconstruct(p.as_slice())?;
    Ok(linalg::is_psd(&m, PSD_TOL))
}

type M4 = Matrix4<C64>;

/// Parameter search for the trine-antitrine POM.
///
/// The nine probabilities fix the eight Pauli coefficients without a σ_z
/// factor. Reflecting z on both qubits is a transpose followed by a local
/// unitary, so it preserves positivity; averaging any compatible state with
/// its reflection leaves only the `σ_z⊗σ_z` coefficient `t ∈ [-1, 1]` free.
/// The smallest eigenvalue is concave in `t`.
#[derive(Debug, Clone)]
pub struct TatSearch {
    /// 9×9 map from probabilities to the z-free Pauli coefficients.
    inverse: SMatrix<f64, 9, 9>,
    basis: [M4; 9],
    zz: M4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TatVerdict {
    pub physical: bool,
    pub best_t: f64,
    pub best_min_eigenvalue: f64,
    pub evaluations: usize,
}

fn to_m4(m: &CMatrix) -> M4 {
    M4::from_fn(|i, j| m[(i, j)])
}

fn min_eig4(m: &M4) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().min()
}

impl TatSearch {
    pub fn new() -> Self {
        let tat = crate::quantum::make_tat();
        let paulis = [identity(2), linalg::pauli_x(), linalg::pauli_y()];
        let mut basis_c = Vec::with_capacity(9);
        for a in &paulis {
            for b in &paulis {
                basis_c.push(linalg::kron(a, b).scale(0.5));
            }
        }
        let forward = SMatrix::<f64, 9, 9>::from_fn(|k, m| {
            linalg::trace_product_re(&tat.effects()[k], &basis_c[m])
        });
        let inverse = forward.try_inverse().expect("trine-antitrine map is invertible");
        let basis: [M4; 9] = std::array::from_fn(|m| to_m4(&basis_c[m]));
        let zz = to_m4(&linalg::kron(&linalg::pauli_z(), &linalg::pauli_z()).scale(0.25));
        Self { inverse, basis, zz }
    }

    /// Shared instance; the precomputation is small but not free.
    pub fn shared() -> &'static Self {
        static INSTANCE: OnceLock<TatSearch> = OnceLock::new();
        INSTANCE.get_or_init(Self::new)
    }

    /// The z-free part of any state with these probabilities.
    pub fn base_operator(&self, p: &[f64]) -> Result<M4> {
        if p.len() != 9 {
            return Err(Error::DimensionMismatch { expected: 9, got: p.len() });
        }
        let coords = self.inverse * nalgebra::SVector::<f64, 9>::from_column_slice(p);
        let mut m = M4::zeros();
        for (b, x) in self.basis.iter().zip(coords.iter()) {
            m += b.scale(*x);
        }
        Ok(m)
    }

    pub fn check(&self, p: &[f64]) -> Result<TatVerdict> {
        let base = self.base_operator(p)?;
        let tol = PSD_TOL;
        let zz = self.zz;
        let mut evaluations = 0usize;
        let mut f = |t: f64| {
            evaluations += 1;
            min_eig4(&(base + zz.scale(t)))
        };

        // 2×2 principal minors of M(t) + tol·1 give a t-interval outside
        // which no value can work. Diagonals are 1/4 ± t/4.
        let slack = 1e-9;
        let d = |i: usize| base[(i, i)].re + tol;
        let off = |i: usize, j: usize| base[(i, j)].norm();
        // |00>,|11> carry +t/4, |01>,|10> carry -t/4.
        let mut lo = -1.0f64;
        let mut hi = 1.0f64;
        lo = lo.max(4.0 * (off(0, 3) - d(0).min(d(3))) - slack);
        hi = hi.min(4.0 * (d(1).min(d(2)) - off(1, 2)) + slack);
        let cross = [(0, 1), (0, 2), (1, 3), (2, 3)]
            .iter()
            .map(|&(i, j)| off(i, j))
            .fold(0.0, f64::max);
        let dmin = (0..4).map(d).fold(f64::INFINITY, f64::min);
        // (1/4 + tol)² - t²/16 ≥ |m|² bounds |t| jointly.
        let rad2 = 16.0 * (dmin * dmin - cross * cross);
        if rad2 < -slack {
            return Ok(TatVerdict { physical: false, best_t: 0.0, best_min_eigenvalue: f64::NAN, evaluations });
        }
        let rad = rad2.max(0.0).sqrt() + slack;
        lo = lo.max(-rad);
        hi = hi.min(rad);
        if lo > hi {
            return Ok(TatVerdict { physical: false, best_t: 0.0, best_min_eigenvalue: f64::NAN, evaluations });
        }

        let mut evals: Vec<(f64, f64)> = Vec::with_capacity(40);
        let record = |t: f64, f: &mut dyn FnMut(f64) -> f64, evals: &mut Vec<(f64, f64)>| {
            let v = f(t);
            evals.push((t, v));
            v
        };

        let invphi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - invphi * (b - a);
        let mut x2 = a + invphi * (b - a);
        let mut f1 = record(x1, &mut f, &mut evals);
        if f1 >= -tol {
            return Ok(TatVerdict { physical: true, best_t: x1, best_min_eigenvalue: f1, evaluations: evals.len() });
        }
        let mut f2 = record(x2, &mut f, &mut evals);
        if f2 >= -tol {
            return Ok(TatVerdict { physical: true, best_t: x2, best_min_eigenvalue: f2, evaluations: evals.len() });
        }
        while b - a > 1e-6 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + invphi * (b - a);
                f2 = record(x2, &mut f, &mut evals);
                if f2 >= -tol {
                    return Ok(TatVerdict { physical: true, best_t: x2, best_min_eigenvalue: f2, evaluations: evals.len() });
                }
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - invphi * (b - a);
                f1 = record(x1, &mut f, &mut evals);
                if f1 >= -tol {
                    return Ok(TatVerdict { physical: true, best_t: x1, best_min_eigenvalue: f1, evaluations: evals.len() });
                }
            }
        }
        for t in [lo, hi] {
            if record(t, &mut f, &mut evals) >= -tol {
                return Ok(TatVerdict { physical: true, best_t: t, best_min_eigenvalue: f(t), evaluations: evals.len() });
            }
        }

        if !looks_concave(&mut evals) {
            let n = 2001;
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 0..n {
                let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let v = f(t);
                if v > best.1 {
                    best = (t, v);
                }
            }
            return Ok(TatVerdict {
                physical: best.1 >= -tol,
                best_t: best.0,
                best_min_eigenvalue: best.1,
                evaluations: evaluations + evals.len(),
            });
        }
        let (bt, bv) = evals.iter().copied().fold((0.0, f64::NEG_INFINITY), |acc, e| if e.1 > acc.1 { e } else { acc });
        Ok(TatVerdict { physical: false, best_t: bt, best_min_eigenvalue: bv, evaluations: evals.len() })
    }
}

impl Default for TatSearch {
    fn default() -> Self {
        Self::new()
    }
}

fn looks_concave(evals: &mut [(f64, f64)]) -> bool {
    evals.sort_by(|a, b| a.0.total_cmp(&b.0));
    evals.windows(3).all(|w| {
        let (t0, f0) = w[0];
        let (t1, f1) = w[1];
        let (t2, f2) = w[2];
        if t2 - t0 <= 0.0 {
            return true;
        }
        let chord = f0 + (f2 - f0) * (t1 - t0) / (t2 - t0);
        f1 >= chord - 1e-9
    })
}

/// Physicality test for the nine-outcome trine-antitrine POM.
pub fn is_physical_tat(p: &ProbVector) -> Result<bool> {
    Ok(TatSearch::shared().check(p.as_slice())?.physical)
}

/// Which check a [`PhysicalityChecker`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStrategy {
    /// Linear reconstruction; informationally complete POMs only.
    Linear,
    /// One-parameter search; trine-antitrine only.
    ParameterSearch,
    /// Gradient ascent on Q; any POM.
    Ascent,
}

impl std::str::FromStr for CheckStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "parameter-search" => Ok(Self::ParameterSearch),
            "ascent" => Ok(Self::Ascent),
            other => Err(Error::InvalidInput(format!("unknown check `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub physical: bool,
    /// Attained Q for the ascent; `None` for the direct checks.
    pub q_max: Option<f64>,
    /// Ascent iterations or eigenvalue evaluations.
    pub work: usize,
}

/// A POM paired with its physicality check, prepared once and shared.
#[derive(Debug, Clone)]
pub struct PhysicalityChecker {
    pom: Pom,
    strategy: CheckStrategy,
    cfg: AscentConfig,
}

impl PhysicalityChecker {
    /// Picks the fastest applicable strategy.
    pub fn new(pom: Pom, cfg: AscentConfig) -> Self {
        let strategy = if pom.is_informationally_complete() {
            CheckStrategy::Linear
        } else if pom.kind() == PomKind::TrineAntitrine {
            CheckStrategy::ParameterSearch
        } else {
            CheckStrategy::Ascent
        };
        Self { pom, strategy, cfg }
    }

    pub fn with_strategy(pom: Pom, cfg: AscentConfig, strategy: CheckStrategy) -> Result<Self> {
        match strategy {
            CheckStrategy::Linear => {
                pom.ic_reconstructor()?;
            }
            CheckStrategy::ParameterSearch if pom.kind() != PomKind::TrineAntitrine => {
                return Err(Error::Unsupported(format!(
                    "parameter search is only available for the trine-antitrine POM, not {}",
                    pom.name()
                )));
            }
            _ => {}
        }
        Ok(Self { pom, strategy, cfg })
    }

    pub fn pom(&self) -> &Pom {
        &self.pom
    }

    pub fn strategy(&self) -> CheckStrategy {
        self.strategy
    }

    pub fn config(&self) -> &AscentConfig {
        &self.cfg
    }

    pub fn check(&self, p: &[f64]) -> Result<Verdict> {
        if p.len() != self.pom.num_outcomes() {
            return Err(Error::DimensionMismatch { expected: self.pom.num_outcomes(), got: p.len() });
        }
        match self.strategy {
            CheckStrategy::Linear => {
                let m = self.pom.ic_reconstructor()?.reconstruct(p)?;
                Ok(Verdict { physical: linalg::is_psd(&m, PSD_TOL), q_max: None, work: 1 })
            }
            CheckStrategy::ParameterSearch => {
                let v = TatSearch::shared().check(p)?;
                Ok(Verdict { physical: v.physical, q_max: None, work: v.evaluations })
            }
            CheckStrategy::Ascent => {
                let out = run_ascent(&self.pom, p, &self.cfg, Some(self.cfg.q_tolerance))?;
                let physical = match out.stop {
                    StopReason::ReachedZero => true,
                    StopReason::CertifiedNegative => false,
                    // short of zero without a certificate: not rejected
                    StopReason::Converged | StopReason::Undecided => {
                        out.q_max >= -self.cfg.q_tolerance || out.upper_bound >= -self.cfg.q_tolerance
                    }
                };
                Ok(Verdict { physical, q_max: Some(out.q_max), work: out.iterations })
            }
        }
    }

    pub fn is_physical(&self, p: &[f64]) -> Result<bool> {
        Ok(self.check(p)?.physical)
    }
}

/// Physicality of `p` under `pom`, by the fastest applicable check.
pub fn is_physical(p: &ProbVector, pom: &Pom, cfg: &AscentConfig) -> Result<bool> {
    PhysicalityChecker::new(pom.clone(), *cfg).is_physical(p.as_slice())
}

/// Ascent-only verdict with its attained Q, regardless of POM structure.
pub fn check_by_ascent(p: &ProbVector, pom: &Pom, cfg: &AscentConfig) -> Result<Verdict> {
    PhysicalityChecker::with_strategy(pom.clone(), *cfg, CheckStrategy::Ascent)?.check(p.as_slice())
}
