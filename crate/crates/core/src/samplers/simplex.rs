//! Uniform sampling over the basic probability simplex.

use rand::Rng;
use rand_distr::Open01;

use crate::quantum::ProbVector;

/// Normalized exponentials: `p_k = y_k / Σ y`, `y_k = -ln u_k`.
pub fn sample_simplex_exponential<R: Rng + ?Sized>(k: usize, rng: &mut R) -> ProbVector {
    assert!(k >= 2, "simplex needs at least two outcomes");
    let y: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            -u.ln()
        })
        .collect();
    ProbVector::normalized(y).expect("exponential draws are positive")
}

/// Spacings of `K - 1` sorted uniforms on `(0, 1)`.
pub fn sample_simplex_spacings<R: Rng + ?Sized>(k: usize, rng: &mut R) -> ProbVector {
    assert!(k >= 2, "simplex needs at least two outcomes");
    let mut x = Vec::with_capacity(k + 1);
    x.push(0.0);
    for _ in 0..k - 1 {
        x.push(rng.sample::<f64, _>(Open01));
    }
    x.push(1.0);
    x.sort_by(f64::total_cmp);
    spacings(&x)
}

/// `p_k = x_k - x_{k-1}` for a sorted list running from 0 to 1.
pub fn spacings(sorted: &[f64]) -> ProbVector {
    let p: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    ProbVector::normalized(p).expect("sorted list from 0 to 1")
}
