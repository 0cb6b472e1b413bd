//! Explicit ambiguous pairs for too few measurements.
//!
//! For `N < 2K` and `K >= 2` the constructors below produce a permutation `Π`
//! and signals `x != x̂` with `B x = Π B x̂`, so no decoder can tell them apart
//! from the unordered entries of `y`. Indices are 0-based throughout.
//!
//! Both constructors reduce to a base case on the first `K'` columns of `B`
//! (the remaining coordinates of `x` and `x̂` are zero) and use the
//! single-cycle shift for `Π`.

use serde::{Deserialize, Serialize};

use crate::densela::{self, dist_inf, norm2, norm_inf, Mat};
use crate::error::{Error, Result};
use crate::model::{apply_selection, Selection};

/// Tolerance, relative to `1 + |Bx|`, for accepting a constructed pair.
pub const PAIR_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguousPair {
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub pi: Selection,
    /// `|B x - Π B x̂|`.
    pub residual: f64,
    /// `|x - x̂|_inf`.
    pub separation: f64,
}

/// Cyclic shift of size `n`: row `i` of `Π B` is row `(i + 1) mod n` of `B`.
pub fn single_cycle_permutation(n: usize) -> Result<Selection> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "a cycle needs at least 2 rows, got {n}"
        )));
    }
    Selection::new(n, (0..n).map(|i| (i + 1) % n).collect())
}

/// `[B, Π B]` with `Π` the single-cycle shift.
pub fn augmented_cycle_matrix(b: &Mat) -> Result<Mat> {
    let pi = single_cycle_permutation(b.rows())?;
    b.hcat(&apply_selection(&pi, b)?)
}

fn check_regime(b: &Mat, odd: bool) -> Result<()> {
    let (n, k) = (b.rows(), b.cols());
    if k < 2 {
        return Err(Error::Precondition(format!("need K >= 2, got K = {k}")));
    }
    if n >= 2 * k {
        return Err(Error::Precondition(format!(
            "N = {n} >= 2K = {}: recovery is unique there",
            2 * k
        )));
    }
    if (n % 2 == 1) != odd {
        return Err(Error::Precondition(format!(
            "N = {n} has the wrong parity for this construction"
        )));
    }
    if n < 2 {
        return Err(Error::Precondition("need at least two measurements".into()));
    }
    Ok(())
}

fn pad(v: Vec<f64>, k: usize) -> Vec<f64> {
    let mut v = v;
    v.resize(k, 0.0);
    v
}

fn finish(b: &Mat, x: Vec<f64>, x_hat: Vec<f64>) -> Result<AmbiguousPair> {
    let pi = single_cycle_permutation(b.rows())?;
    let bx = b.matvec(&x)?;
    let pbx_hat = apply_selection(&pi, b)?.matvec(&x_hat)?;
    let diff: Vec<f64> = bx.iter().zip(&pbx_hat).map(|(p, q)| p - q).collect();
    let residual = norm2(&diff);
    if residual.is_nan() || residual > PAIR_RESIDUAL_TOL * (1.0 + norm2(&bx)) {
        return Err(Error::Degenerate(format!(
            "constructed pair has residual {residual:e}"
        )));
    }
    Ok(AmbiguousPair {
        separation: dist_inf(&x, &x_hat),
        x,
        x_hat,
        pi,
        residual,
    })
}

/// Ambiguous pair for even `N < 2K`.
///
/// Base case `K' = N/2 + 1`: with `G = [B', Π B']`, drop the two columns that
/// carry the last coordinate of `x` and `x̂`, fix `x_K' = 0`, `x̂_K' = 1`, and
/// solve the remaining square system so that `G (-x; x̂) = 0`.
pub fn construct_even(b: &Mat) -> Result<AmbiguousPair> {
    check_regime(b, false)?;
    let k = b.cols();
    let kp = b.rows() / 2 + 1;
    let g = augmented_cycle_matrix(&b.select_cols(&(0..kp).collect::<Vec<_>>())?)?;

    let keep: Vec<usize> = (0..2 * kp)
        .filter(|&j| j != kp - 1 && j != 2 * kp - 1)
        .collect();
    let g_tilde = g.select_cols(&keep)?;
    let rhs: Vec<f64> = g.col_vec(2 * kp - 1).iter().map(|v| -v).collect();
    if norm_inf(&rhs) == 0.0 {
        return Err(Error::Degenerate("shifted last column vanishes".into()));
    }
    let z = densela::solve(&g_tilde, &rhs)?;
    if norm_inf(&z) == 0.0 {
        return Err(Error::Degenerate(
            "reduced system has only the zero solution".into(),
        ));
    }

    // z = (-x_under; x̂_under)
    let mut x: Vec<f64> = z[..kp - 1].iter().map(|v| -v).collect();
    x.push(0.0);
    let mut x_hat = z[kp - 1..].to_vec();
    x_hat.push(1.0);
    finish(b, pad(x, k), pad(x_hat, k))
}

/// Gap `|t_K' - 1|` below which the odd construction is declared degenerate.
pub const ODD_GAP_TOL: f64 = 1e-10;

/// Ambiguous pair for odd `3 <= N < 2K`.
///
/// Base case `K' = (N + 1)/2`: with `G = [B', Π B'] = [G̃, g]` and
/// `t = G̃⁻¹ g`, take `x = t[..K']` and `x̂ = (-t[K'..], 1)`. Their last
/// coordinates differ by `Δ = t_K' - 1`; both signals are divided by `|Δ|` so
/// that gap is exactly 1.
pub fn construct_odd(b: &Mat) -> Result<AmbiguousPair> {
    check_regime(b, true)?;
    if b.rows() < 3 {
        return Err(Error::Precondition(
            "a single measurement has no permutation to exploit".into(),
        ));
    }
    let k = b.cols();
    let kp = b.rows().div_ceil(2);
    let g = augmented_cycle_matrix(&b.select_cols(&(0..kp).collect::<Vec<_>>())?)?;
    let g_tilde = g.select_cols(&(0..2 * kp - 1).collect::<Vec<_>>())?;
    let t = densela::solve(&g_tilde, &g.col_vec(2 * kp - 1))?;

    let delta = t[kp - 1] - 1.0;
    if delta.is_nan() || delta.abs() <= ODD_GAP_TOL {
        return Err(Error::Degenerate(format!(
            "coordinate gap {delta:e} vanishes"
        )));
    }
    let scale = 1.0 / delta.abs();
    let x: Vec<f64> = t[..kp].iter().map(|v| v * scale).collect();
    let mut x_hat: Vec<f64> = t[kp..].iter().map(|v| -v * scale).collect();
    x_hat.push(scale);
    finish(b, pad(x, k), pad(x_hat, k))
}

/// Dispatches on the parity of `N`.
pub fn construct(b: &Mat) -> Result<AmbiguousPair> {
    if b.rows().is_multiple_of(2) {
        construct_even(b)
    } else {
        construct_odd(b)
    }
}

/// The `(2k-1) x k` matrix whose shifted concatenation, minus its last
/// column, is a permutation matrix.
///
/// Row 0 is `e_(k-1)`; for `i >= 1`, row `i` is zero when `i` is odd and
/// `e_(i/2 - 1)` when `i` is even.
pub fn rank_witness_assignment(k: usize) -> Result<Mat> {
    if k < 2 {
        return Err(Error::invalid(format!("need k >= 2, got {k}")));
    }
    let n = 2 * k - 1;
    let mut rows = vec![vec![0.0; k]; n];
    rows[0][k - 1] = 1.0;
    for (i, row) in rows.iter_mut().enumerate().skip(1) {
        if i % 2 == 0 {
            row[i / 2 - 1] = 1.0;
        }
    }
    Mat::from_rows(&rows)
}

/// `G̃` for the odd construction: `[B, Π B]` without its last column.
pub fn odd_reduced_matrix(b: &Mat) -> Result<Mat> {
    let g = augmented_cycle_matrix(b)?;
    g.select_cols(&(0..g.cols() - 1).collect::<Vec<_>>())
}
