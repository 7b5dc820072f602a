//! Gaussian belief primitives and the quadratic-form utilities built on them.

use nalgebra::{DMatrix, DVector, RealField};

use crate::linalg::{check_psd, checked_inverse, symmetrize};
use crate::{Error, Result};

/// A multivariate Gaussian `N(mean, cov)`.
///
/// Construction validates the invariants: `cov` square and matching the
/// mean length, symmetric and positive semidefinite within the shared
/// relative tolerance ([`crate::linalg::PSD_REL_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T: RealField + Copy> {
    mean: DVector<T>,
    cov: DMatrix<T>,
}

impl<T: RealField + Copy> Gaussian<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::dims(
                "Gaussian covariance",
                format!("{0}x{0}", mean.len()),
                format!("{}x{}", cov.nrows(), cov.ncols()),
            ));
        }
        check_psd(&cov, "Gaussian covariance")?;
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<T> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// A scalar Gaussian `N(mean, var)` with `var ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D<T: RealField + Copy> {
    pub mean: T,
    pub var: T,
}

impl<T: RealField + Copy> Gaussian1D<T> {
    pub fn new(mean: T, var: T) -> Result<Self> {
        if var < T::zero() {
            return Err(Error::InvalidCovariance {
                what: "Gaussian1D variance".to_string(),
                detail: "negative".to_string(),
            });
        }
        Ok(Self { mean, var })
    }
}

/// The quadratic form `aᵀ B a`.
pub fn mahalanobis_sq<T: RealField + Copy>(a: &DVector<T>, b: &DMatrix<T>) -> Result<T> {
    if b.nrows() != a.len() || b.ncols() != a.len() {
        return Err(Error::dims(
            "mahalanobis_sq",
            format!("{0}x{0} metric", a.len()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok((a.transpose() * b * a)[(0, 0)])
}

/// Conditions a jointly Gaussian `(x, z)` pair on an observed `z`:
/// mean `E(x) + Cxz·Czz⁻¹·(z − E(z))`, covariance `Cxx − Cxz·Czz⁻¹·Cxzᵀ`.
pub fn conditional_gaussian<T: RealField + Copy>(
    mean_x: &DVector<T>,
    mean_z: &DVector<T>,
    cxx: &DMatrix<T>,
    cxz: &DMatrix<T>,
    czz: &DMatrix<T>,
    z: &DVector<T>,
) -> Result<Gaussian<T>> {
    let (n, k) = (mean_x.len(), mean_z.len());
    if cxx.nrows() != n || cxx.ncols() != n || cxz.nrows() != n || cxz.ncols() != k {
        return Err(Error::dims(
            "conditional_gaussian",
            format!("Cxx {n}x{n}, Cxz {n}x{k}"),
            format!("Cxx {}x{}, Cxz {}x{}", cxx.nrows(), cxx.ncols(), cxz.nrows(), cxz.ncols()),
        ));
    }
    if czz.nrows() != k || czz.ncols() != k || z.len() != k {
        return Err(Error::dims(
            "conditional_gaussian",
            format!("Czz {k}x{k}, z len {k}"),
            format!("Czz {}x{}, z len {}", czz.nrows(), czz.ncols(), z.len()),
        ));
    }
    let czz_inv = checked_inverse(czz, "Czz")?.inverse;
    let gain = cxz * czz_inv;
    let mean = mean_x + &gain * (z - mean_z);
    let cov = symmetrize(&(cxx - gain * cxz.transpose()));
    Gaussian::new(mean, cov)
}

/// Product of two scalar Gaussian densities, renormalized:
/// mean `(b.mean·a.var + a.mean·b.var)/(a.var + b.var)`,
/// variance `a.var·b.var/(a.var + b.var)`.
pub fn gaussian_product_1d<T: RealField + Copy>(
    a: Gaussian1D<T>,
    b: Gaussian1D<T>,
) -> Result<Gaussian1D<T>> {
    let denom = a.var + b.var;
    if denom <= T::zero() {
        return Err(Error::DegenerateProduct);
    }
    Ok(Gaussian1D {
        mean: (b.mean * a.var + a.mean * b.var) / denom,
        var: a.var * b.var / denom,
    })
}
