//! Histogram (grid) Bayes filter over a scalar state.
//!
//! The belief is a density sampled on a uniform grid of `N` nodes spanning
//! `[lo, hi]`; all integrals use trapezoidal quadrature. The filter
//! mechanizes the belief recursion directly — prediction is a numerical
//! convolution with the motion kernel, correction a pointwise product with
//! the likelihood followed by renormalization — so it agrees with the
//! closed-form Gaussian filters only if their algebra is right, which is
//! exactly what makes it useful as a cross-check.

use nalgebra::RealField;
use rayon::prelude::*;

use crate::gaussian::Gaussian1D;
use crate::{Error, Result};

/// Fraction of probability mass allowed to leak past the grid bounds in a
/// prediction before the result is rejected as untrustworthy.
pub const MASS_LEAK_LIMIT: f64 = 1e-4;

/// Normalization slack accepted after every renormalization.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// A normalized density on a uniform grid of nodes over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBelief<T: RealField + Copy> {
    lo: T,
    hi: T,
    values: Vec<T>,
}

impl<T: RealField + Copy + Send + Sync> GridBelief<T> {
    /// Builds a belief by sampling `density` on `n` nodes and normalizing.
    pub fn from_fn(lo: T, hi: T, n: usize, density: impl Fn(T) -> T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig {
                field: "grid nodes".to_string(),
                detail: "need at least 2".to_string(),
            });
        }
        if !(hi > lo) {
            return Err(Error::InvalidConfig {
                field: "grid bounds".to_string(),
                detail: "hi must exceed lo".to_string(),
            });
        }
        let mut b = Self { lo, hi, values: Vec::with_capacity(n) };
        for i in 0..n {
            b.values.push(density(b.node_at(i, n)));
        }
        b.check_values("density")?;
        b.normalize()?;
        Ok(b)
    }

    /// Gaussian-shaped initial belief.
    pub fn gaussian(lo: T, hi: T, n: usize, mean: T, var: T) -> Result<Self> {
        Self::from_fn(lo, hi, n, |x| gaussian_density(x, mean, var))
    }

    fn node_at(&self, i: usize, n: usize) -> T {
        let frac: T = nalgebra::convert(i as f64 / (n - 1) as f64);
        self.lo + (self.hi - self.lo) * frac
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> T {
        self.node_at(i, self.values.len())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn spacing(&self) -> T {
        (self.hi - self.lo) / nalgebra::convert((self.values.len() - 1) as f64)
    }

    /// Trapezoidal integral of the stored values.
    pub fn integral(&self) -> T {
        trapezoid(&self.values, self.spacing())
    }

    fn check_values(&self, what: &str) -> Result<()> {
        for v in &self.values {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: format!("grid {what}") });
            }
            if *v < T::zero() {
                return Err(Error::InvalidConfig {
                    field: format!("grid {what}"),
                    detail: "negative density".to_string(),
                });
            }
        }
        Ok(())
    }

    fn normalize(&mut self) -> Result<()> {
        let total = self.integral();
        if !(total > T::zero()) {
            return Err(Error::GridAllZero);
        }
        for v in &mut self.values {
            *v /= total;
        }
        Ok(())
    }

    /// Trapezoidal mean and variance of the density.
    pub fn moments(&self) -> Gaussian1D<T> {
        let h = self.spacing();
        let weighted: Vec<T> =
            (0..self.values.len()).map(|i| self.values[i] * self.node(i)).collect();
        let mean = trapezoid(&weighted, h);
        let centered: Vec<T> = (0..self.values.len())
            .map(|i| {
                let d = self.node(i) - mean;
                self.values[i] * d * d
            })
            .collect();
        let var = trapezoid(&centered, h).max(T::zero());
        Gaussian1D { mean, var }
    }
}

fn trapezoid<T: RealField + Copy>(values: &[T], h: T) -> T {
    let half: T = nalgebra::convert(0.5);
    let n = values.len();
    let mut sum = (values[0] + values[n - 1]) * half;
    for v in &values[1..n - 1] {
        sum += *v;
    }
    sum * h
}

/// Scalar Gaussian density; a zero-variance input degenerates to a
/// grid-spacing-agnostic spike handled by the caller.
pub fn gaussian_density<T: RealField + Copy>(x: T, mean: T, var: T) -> T {
    let d = x - mean;
    let two: T = nalgebra::convert(2.0);
    (-(d * d) / (two * var)).exp() / (two * T::pi() * var).sqrt()
}

/// Prediction: `bel̄(x) = ∫ kernel(x | x_prev, u) · bel(x_prev) dx_prev`
/// by trapezoidal quadrature over the grid, then renormalization.
///
/// `kernel(x_next, x_prev, u)` must be a normalized transition density in
/// its first argument. If more than [`MASS_LEAK_LIMIT`] of the predicted
/// mass falls outside `[lo, hi]` the prediction fails, advising wider
/// bounds. Output cells are independent, so the convolution is evaluated
/// in parallel with a fixed per-cell summation order — results are
/// deterministic.
pub fn grid_predict<T>(
    b: &GridBelief<T>,
    kernel: impl Fn(T, T, T) -> T + Sync,
    u: T,
) -> Result<GridBelief<T>>
where
    T: RealField + Copy + Send + Sync,
{
    let n = b.len();
    let h = b.spacing();
    let half: T = nalgebra::convert(0.5);
    let nodes: Vec<T> = (0..n).map(|i| b.node(i)).collect();
    // Prior values pre-scaled by their quadrature weights; nodes whose
    // relative mass is below 1e-20 cannot move the 1e-6 normalization or
    // the downstream comparison tolerances and are skipped.
    let peak = b.values.iter().fold(T::zero(), |acc, v| acc.max(*v));
    let cutoff = peak * nalgebra::convert(1e-20);
    let weighted: Vec<(T, T)> = (0..n)
        .filter(|&j| b.values[j] > cutoff)
        .map(|j| {
            let w = if j == 0 || j == n - 1 { h * half } else { h };
            (nodes[j], b.values[j] * w)
        })
        .collect();
    let values: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x_i = nodes[i];
            let mut acc = T::zero();
            for (x_j, mass) in &weighted {
                acc += kernel(x_i, *x_j, u) * *mass;
            }
            acc
        })
        .collect();
    let out = GridBelief { lo: b.lo, hi: b.hi, values };
    out.check_values("motion kernel output")?;
    let mass = out.integral();
    let leaked = nalgebra::convert::<f64, T>(1.0) - mass;
    if leaked > nalgebra::convert(MASS_LEAK_LIMIT) {
        return Err(Error::GridMassLeak {
            leaked: nalgebra::try_convert(leaked).unwrap_or(f64::NAN),
            limit: MASS_LEAK_LIMIT,
        });
    }
    let mut out = out;
    out.normalize()?;
    Ok(out)
}

/// Correction: pointwise product with `likelihood(z, x)` followed by
/// renormalization (the normalizer is computed numerically).
pub fn grid_correct<T>(
    b: &GridBelief<T>,
    likelihood: impl Fn(T, T) -> T,
    z: T,
) -> Result<GridBelief<T>>
where
    T: RealField + Copy + Send + Sync,
{
    let values: Vec<T> =
        (0..b.len()).map(|i| b.values[i] * likelihood(z, b.node(i))).collect();
    let mut out = GridBelief { lo: b.lo, hi: b.hi, values };
    out.check_values("likelihood output")?;
    out.normalize()?;
    Ok(out)
}

/// Moment extraction for comparison against the closed-form filters.
pub fn grid_moments<T: RealField + Copy + Send + Sync>(b: &GridBelief<T>) -> Gaussian1D<T> {
    b.moments()
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 2001;

    #[test]
    fn moments_of_symmetric_and_uniform_densities() {
        let b = GridBelief::<f64>::gaussian(-6.0, 8.0, 4001, 1.0, 0.25).unwrap();
        let g = grid_moments(&b);
        assert!((g.mean - 1.0).abs() < 1e-9);
        assert!((g.var - 0.25).abs() < 1e-4);

        // uniform on [0,1] → mean 0.5, var 1/12
        let u = GridBelief::<f64>::from_fn(0.0, 1.0, 4001, |_| 1.0).unwrap();
        let g = grid_moments(&u);
        assert!((g.mean - 0.5).abs() < 1e-9);
        assert!((g.var - 1.0 / 12.0).abs() < 1e-4);
    }

    #[test]
    fn predict_translates_dirac_like_prior() {
        // Narrow prior + near-deterministic shift kernel: argmax moves by u.
        let b = GridBelief::gaussian(-5.0, 5.0, N, -1.0, 1e-4).unwrap();
        let shift = |x: f64, xp: f64, u: f64| gaussian_density(x, xp + u, 1e-4);
        let out = grid_predict(&b, shift, 2.0).unwrap();
        let argmax = (0..out.len()).max_by(|&a, &b2| {
            out.values()[a].partial_cmp(&out.values()[b2]).unwrap()
        });
        let peak = out.node(argmax.unwrap());
        assert!((peak - 1.0).abs() <= out.spacing() + 1e-12);
    }

    #[test]
    fn predict_matches_scalar_kf() {
        // N(0,1) prior, kernel var 0.5, u=2 → N(2, 1.5)
        let b = GridBelief::gaussian(-8.0, 12.0, 4001, 0.0, 1.0).unwrap();
        let kernel = |x: f64, xp: f64, u: f64| gaussian_density(x, xp + u, 0.5);
        let out = grid_predict(&b, kernel, 2.0).unwrap();
        let g = grid_moments(&out);
        assert!((g.mean - 2.0).abs() < 1e-3);
        assert!((g.var - 1.5).abs() < 1e-3);
    }

    #[test]
    fn predict_keeps_uniform_interior_flat() {
        // Uniform on [−5, 5] inside a wider grid so no mass reaches the
        // domain bounds; the interior must stay flat under a symmetric
        // kernel (translation invariance).
        let b = GridBelief::from_fn(-10.0, 10.0, N, |x: f64| if x.abs() <= 5.0 { 1.0 } else { 0.0 })
            .unwrap();
        let kernel = |x: f64, xp: f64, _u: f64| gaussian_density(x, xp, 0.04);
        let out = grid_predict(&b, kernel, 0.0).unwrap();
        let mid = out.values()[N / 2];
        for i in 0..N {
            if out.node(i).abs() < 3.0 {
                assert!((out.values()[i] - mid).abs() < 1e-6 * mid);
            }
        }
    }

    #[test]
    fn predict_rejects_leaking_mass() {
        let b = GridBelief::gaussian(-2.0, 2.0, N, 1.5, 0.25).unwrap();
        let kernel = |x: f64, xp: f64, u: f64| gaussian_density(x, xp + u, 1.0);
        let err = grid_predict(&b, kernel, 2.0).unwrap_err();
        assert!(matches!(err, Error::GridMassLeak { .. }), "{err:?}");
    }

    #[test]
    fn correct_flat_likelihood_is_identity() {
        let b = GridBelief::gaussian(-6.0, 6.0, N, 0.3, 0.8).unwrap();
        let out = grid_correct(&b, |_z, _x| 0.7f64, 0.0).unwrap();
        for i in 0..b.len() {
            assert!((out.values()[i] - b.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn correct_matches_scalar_kf() {
        // N(0,1) prior, Gaussian likelihood var 1 at z=2 → N(1, 0.5)
        let b = GridBelief::gaussian(-8.0, 10.0, 4001, 0.0, 1.0).unwrap();
        let like = |z: f64, x: f64| gaussian_density(z, x, 1.0);
        let out = grid_correct(&b, like, 2.0).unwrap();
        let g = grid_moments(&out);
        assert!((g.mean - 1.0).abs() < 1e-3);
        assert!((g.var - 0.5).abs() < 1e-3);
    }

    #[test]
    fn correct_mirror_likelihood_gives_symmetric_posterior() {
        // prior N(-1, 0.5) and a likelihood that is its mirror about 0:
        // the posterior must be symmetric about the midpoint.
        let b = GridBelief::gaussian(-6.0, 6.0, N, -1.0, 0.5).unwrap();
        let like = |_z: f64, x: f64| gaussian_density(x, 1.0, 0.5);
        let out = grid_correct(&b, like, 0.0).unwrap();
        let n = out.len();
        for i in 0..n {
            let mirrored = out.values()[n - 1 - i];
            assert!((out.values()[i] - mirrored).abs() < 1e-9);
        }
    }

    #[test]
    fn correct_rejects_incompatible_observation() {
        let b = GridBelief::gaussian(-2.0, 2.0, N, 0.0, 0.1).unwrap();
        let err = grid_correct(&b, |_z, _x| 0.0, 5.0).unwrap_err();
        assert_eq!(err, Error::GridAllZero);
    }

    #[test]
    fn normalization_preserved_across_steps() {
        let mut b = GridBelief::gaussian(-10.0, 10.0, N, 0.0, 1.0).unwrap();
        let kernel = |x: f64, xp: f64, u: f64| gaussian_density(x, xp + u, 0.3);
        let like = |z: f64, x: f64| gaussian_density(z, x, 0.5);
        for t in 0..5 {
            b = grid_predict(&b, kernel, 0.1).unwrap();
            assert!((b.integral() - 1.0).abs() < NORMALIZATION_TOL);
            b = grid_correct(&b, like, 0.1 * t as f64).unwrap();
            assert!((b.integral() - 1.0).abs() < NORMALIZATION_TOL);
            assert!(b.values().iter().all(|v| *v >= 0.0));
        }
    }
}
