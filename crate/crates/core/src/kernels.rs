//! Numerical kernels behind the solver and the diagnostics: SVD, the polar
//! projection onto the unitary manifold, and numerical rank with explicit
//! thresholds and gap reporting.

use nalgebra::DMatrix;

use crate::{first_non_finite, CMatrix, Complex, Error, RMatrix, Real, Result};

const SVD_MAX_ITERATIONS: usize = 65536;

/// `M = U · diag(σ) · V†` with σ sorted descending.
#[derive(Clone, Debug)]
pub struct SvdResult<T: Real> {
    pub u: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub v_adjoint: CMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn reconstruct(&self) -> CMatrix<T> {
        let k = self.singular_values.len();
        let mut scaled = self.u.clone_owned();
        for (idx, &sigma) in self.singular_values.iter().enumerate().take(k) {
            let mut col = scaled.column_mut(idx);
            col *= Complex::new(sigma, T::zero());
        }
        scaled * &self.v_adjoint
    }
}

/// Full SVD of a complex matrix. Factors are thin for rectangular inputs.
pub fn svd<T: Real>(m: &CMatrix<T>) -> Result<SvdResult<T>> {
    if let Some((row, col)) = first_non_finite(m) {
        return Err(Error::NonFinite { row, col });
    }
    let svd = m
        .clone()
        .try_svd(true, true, T::default_epsilon(), SVD_MAX_ITERATIONS)
        .ok_or(Error::SvdNoConvergence {
            iterations: SVD_MAX_ITERATIONS,
        })?;
    let mut u = svd.u.expect("left factor requested");
    let mut v_t = svd.v_t.expect("right factor requested");
    let mut singular_values: Vec<T> = svd.singular_values.iter().copied().collect();

    // enforce descending order
    let mut order: Vec<usize> = (0..singular_values.len()).collect();
    order.sort_by(|&a, &b| singular_values[b].partial_cmp(&singular_values[a]).unwrap());
    if order.windows(2).any(|w| w[0] > w[1]) {
        let permuted_u = CMatrix::<T>::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, order[c])]);
        let permuted_vt =
            CMatrix::<T>::from_fn(v_t.nrows(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
        singular_values = order.iter().map(|&i| singular_values[i]).collect();
        u = permuted_u;
        v_t = permuted_vt;
    }
    Ok(SvdResult {
        u,
        singular_values,
        v_adjoint: v_t,
    })
}

/// Singular values only, for a real matrix, sorted descending.
pub fn singular_values_real<T: Real>(m: &RMatrix<T>) -> Result<Vec<T>> {
    let svd = m
        .clone()
        .try_svd(false, false, T::default_epsilon(), SVD_MAX_ITERATIONS)
        .ok_or(Error::SvdNoConvergence {
            iterations: SVD_MAX_ITERATIONS,
        })?;
    let mut values: Vec<T> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(values)
}

/// Output of the polar projection Π.
#[derive(Clone, Debug)]
pub struct PolarProjection<T: Real> {
    /// `W·V†`, the closest unitary in Frobenius distance.
    pub unitary: CMatrix<T>,
    /// Smallest singular value of the input.
    pub min_singular_value: T,
    /// Set when the input is rank deficient at the default threshold, in
    /// which case the projection is not unique (a valid one is still
    /// returned).
    pub rank_deficient: bool,
}

/// Polar projection onto the unitary manifold via SVD: `Π(X) = W·V†`.
pub fn polar_project<T: Real>(x: &CMatrix<T>) -> Result<PolarProjection<T>> {
    if x.nrows() != x.ncols() {
        return Err(Error::ShapeMismatch {
            rows: x.nrows(),
            cols: x.ncols(),
            n: x.nrows(),
        });
    }
    let decomposition = svd(x)?;
    let unitary = &decomposition.u * &decomposition.v_adjoint;
    let sigma_max = decomposition
        .singular_values
        .first()
        .copied()
        .unwrap_or_else(T::zero);
    let min_singular_value = decomposition
        .singular_values
        .last()
        .copied()
        .unwrap_or_else(T::zero);
    let threshold = default_threshold(sigma_max, x.nrows(), x.ncols());
    Ok(PolarProjection {
        unitary,
        min_singular_value,
        rank_deficient: min_singular_value <= threshold,
    })
}

/// How the rank cut-off is chosen from the singular spectrum.
#[derive(Clone, Copy, Debug)]
pub enum ThresholdPolicy<T> {
    /// `σ_max · max(rows, cols) · ε · 64`.
    Default,
    /// Fixed absolute cut-off.
    Absolute(T),
    /// `σ_max` times the given factor.
    RelativeToMax(T),
}

/// Sentinel for an unbounded spectral gap.
fn huge<T: Real>() -> T {
    T::max_value().expect("real scalars are bounded")
}

fn default_threshold<T: Real>(sigma_max: T, rows: usize, cols: usize) -> T {
    sigma_max
        * T::from_usize(rows.max(cols)).unwrap()
        * T::default_epsilon()
        * T::from_u32(64).unwrap()
}

/// Numerical rank report with the spectrum and threshold that produced it.
#[derive(Clone, Debug)]
pub struct RankReport<T> {
    pub singular_values: Vec<T>,
    pub threshold: T,
    pub rank: usize,
    /// `n_cols − rank`; includes the implicit null directions of a wide
    /// matrix whose spectrum has fewer entries than columns.
    pub nullity: usize,
    /// `σ_rank−1 / σ_rank`, the spectral gap at the cut. `T::max_value()`
    /// when nothing is cut or the first dropped value is exactly zero.
    pub gap_ratio: T,
}

pub fn rank_from_singular_values<T: Real>(
    singular_values: Vec<T>,
    n_rows: usize,
    n_cols: usize,
    policy: ThresholdPolicy<T>,
) -> RankReport<T> {
    let sigma_max = singular_values.first().copied().unwrap_or_else(T::zero);
    let threshold = match policy {
        ThresholdPolicy::Default => default_threshold(sigma_max, n_rows, n_cols),
        ThresholdPolicy::Absolute(t) => t,
        ThresholdPolicy::RelativeToMax(f) => sigma_max * f,
    };
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    let nullity = n_cols - rank;
    let gap_ratio = if rank == 0 || rank == singular_values.len() {
        huge::<T>()
    } else {
        let kept = singular_values[rank - 1];
        let dropped = singular_values[rank];
        if dropped <= T::zero() {
            huge::<T>()
        } else {
            kept / dropped
        }
    };
    RankReport {
        singular_values,
        threshold,
        rank,
        nullity,
        gap_ratio,
    }
}

/// Numerical rank of a complex matrix.
pub fn numeric_rank<T: Real>(m: &CMatrix<T>, policy: ThresholdPolicy<T>) -> Result<RankReport<T>> {
    let decomposition = svd(m)?;
    Ok(rank_from_singular_values(
        decomposition.singular_values,
        m.nrows(),
        m.ncols(),
        policy,
    ))
}

/// Numerical rank of a real matrix.
pub fn numeric_rank_real<T: Real>(
    m: &RMatrix<T>,
    policy: ThresholdPolicy<T>,
) -> Result<RankReport<T>> {
    let values = singular_values_real(m)?;
    Ok(rank_from_singular_values(
        values,
        m.nrows(),
        m.ncols(),
        policy,
    ))
}

/// Real matrix from a closure, convenience mirror of `DMatrix::from_fn`.
pub fn real_from_fn<T: Real>(
    rows: usize,
    cols: usize,
    f: impl FnMut(usize, usize) -> T,
) -> RMatrix<T> {
    DMatrix::from_fn(rows, cols, f)
}
