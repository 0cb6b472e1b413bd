//! Small dense linear-algebra kernel.
//!
//! Everything here works on [`Mat`], a row-major `f64` matrix that is always
//! non-empty and finite. Least squares, rank and null-space decisions go
//! through a singular value decomposition; determinants and square solves go
//! through LU with partial pivoting. Rank decisions are relative: a singular
//! value counts as zero when it is at most `rank_tol` times the largest one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Mat::new(rows.len(), cols, data)
    }

    /// Single-column matrix holding `v`.
    pub fn column(v: &[f64]) -> Result<Self> {
        Mat::new(v.len(), 1, v.to_vec())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Mat::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Mat::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Mat::new(self.rows, other.cols, data)
    }

    pub fn transpose(&self) -> Mat {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Mat {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows {
            return Err(Error::dim(format!(
                "cannot concatenate {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    /// Rows `idx[0], idx[1], ...` stacked in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Mat> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    bound: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Mat::new(idx.len(), self.cols, data)
    }

    pub fn select_cols(&self, idx: &[usize]) -> Result<Mat> {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            for &j in idx {
                if j >= self.cols {
                    return Err(Error::invalid(format!(
                        "column {j} out of range for {} columns",
                        self.cols
                    )));
                }
                data.push(self.get(i, j));
            }
        }
        Mat::new(self.rows, idx.len(), data)
    }

    pub fn scaled(&self, c: f64) -> Result<Mat> {
        Mat::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Result<Mat> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Mat::new(m.nrows(), m.ncols(), data)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Mat::from_rows(&rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.row_vecs()
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Default relative rank tolerance for an `rows x cols` matrix.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    1e-10 * rows.max(cols) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqResult {
    pub solution: Vec<f64>,
    pub residual_norm: f64,
    pub rank: usize,
}

struct Svd {
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl Svd {
    fn of(m: &DMatrix<f64>) -> Svd {
        let svd = m.clone().svd(true, true);
        Svd {
            u: svd.u.expect("requested U"),
            sigma: svd.singular_values,
            v_t: svd.v_t.expect("requested V^T"),
        }
    }

    fn cutoff(&self, rank_tol: f64) -> f64 {
        self.sigma.max() * rank_tol
    }

    fn rank(&self, rank_tol: f64) -> usize {
        let cut = self.cutoff(rank_tol);
        self.sigma.iter().filter(|&&s| s > cut && s > 0.0).count()
    }
}

fn check_tol(rank_tol: f64) -> Result<()> {
    if rank_tol > 0.0 && rank_tol.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "rank_tol must be positive, got {rank_tol}"
        )))
    }
}

/// Minimum-norm least-squares solution of `m * x ~ b` with the default rank
/// tolerance.
pub fn lstsq(m: &Mat, b: &[f64]) -> Result<LsqResult> {
    lstsq_with_tol(m, b, default_rank_tol(m.rows, m.cols))
}

pub fn lstsq_with_tol(m: &Mat, b: &[f64], rank_tol: f64) -> Result<LsqResult> {
    check_tol(rank_tol)?;
    if b.len() != m.rows {
        return Err(Error::dim(format!(
            "right-hand side has {} entries for {} rows",
            b.len(),
            m.rows
        )));
    }
    check_finite(b, "right-hand side")?;

    let svd = Svd::of(&m.to_dmatrix());
    let cut = svd.cutoff(rank_tol);
    let rhs = DVector::from_column_slice(b);
    let utb = svd.u.transpose() * &rhs;
    let mut coeff = DVector::zeros(svd.sigma.len());
    let mut rank = 0;
    for (i, &s) in svd.sigma.iter().enumerate() {
        if s > cut && s > 0.0 {
            coeff[i] = utb[i] / s;
            rank += 1;
        }
    }
    let x = svd.v_t.transpose() * coeff;
    let solution: Vec<f64> = x.iter().copied().collect();
    let fitted = m.matvec(&solution)?;
    let residual_norm = norm2(&fitted.iter().zip(b).map(|(f, y)| f - y).collect::<Vec<_>>());
    Ok(LsqResult {
        solution,
        residual_norm,
        rank,
    })
}

/// Orthonormal basis of the numerical null space of `m`.
pub fn nullspace(m: &Mat, rank_tol: f64) -> Result<Vec<Vec<f64>>> {
    check_tol(rank_tol)?;
    // Thin SVD of a wide matrix drops part of the row space of V^T; pad with
    // zero rows so V^T is square.
    let mut dm = m.to_dmatrix();
    if m.rows < m.cols {
        dm = dm.resize_vertically(m.cols, 0.0);
    }
    let svd = Svd::of(&dm);
    let cut = svd.cutoff(rank_tol);
    let basis = svd
        .sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| !(s > cut && s > 0.0))
        .map(|(i, _)| svd.v_t.row(i).iter().copied().collect())
        .collect();
    Ok(basis)
}

pub fn rank(m: &Mat, rank_tol: f64) -> Result<usize> {
    check_tol(rank_tol)?;
    Ok(Svd::of(&m.to_dmatrix()).rank(rank_tol))
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = m.to_dmatrix().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn column_basis(m: &Mat, rank_tol: f64) -> Result<Option<Mat>> {
    check_tol(rank_tol)?;
    let svd = Svd::of(&m.to_dmatrix());
    let cut = svd.cutoff(rank_tol);
    let keep: Vec<usize> = svd
        .sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cut && s > 0.0)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let u = Mat::from_dmatrix(&svd.u)?;
    u.select_cols(&keep).map(Some)
}

pub fn det(m: &Mat) -> Result<f64> {
    if m.rows != m.cols {
        return Err(Error::dim(format!(
            "determinant of non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    Ok(m.to_dmatrix().lu().determinant())
}

/// Solves the square system `m * x = b`, failing when `m` is numerically
/// singular under the default rank tolerance.
pub fn solve(m: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if m.rows != m.cols {
        return Err(Error::dim(format!(
            "square solve on {}x{} matrix",
            m.rows, m.cols
        )));
    }
    if b.len() != m.rows {
        return Err(Error::dim(format!(
            "right-hand side has {} entries for {} rows",
            b.len(),
            m.rows
        )));
    }
    check_finite(b, "right-hand side")?;
    let r = rank(m, default_rank_tol(m.rows, m.cols))?;
    if r < m.rows {
        return Err(Error::Degenerate(format!(
            "{}x{} system has numerical rank {r}",
            m.rows, m.cols
        )));
    }
    let x = m
        .to_dmatrix()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::Degenerate("LU factor is singular".into()))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_4x2() -> Mat {
        Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0], [1.0, -1.0]]).unwrap()
    }

    #[test]
    fn mat_rejects_bad_shapes_and_values() {
        assert!(Mat::new(0, 2, vec![]).is_err());
        assert!(Mat::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            Mat::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(Mat::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn lstsq_identity() {
        let r = lstsq(&Mat::identity(2).unwrap(), &[3.0, -1.0]).unwrap();
        assert_eq!(r.rank, 2);
        assert!(dist_inf(&r.solution, &[3.0, -1.0]) < 1e-14);
        assert!(r.residual_norm < 1e-14);
    }

    #[test]
    fn lstsq_consistent_overdetermined() {
        let r = lstsq(&golden_4x2(), &[1.0, -3.0, -5.0, 4.0]).unwrap();
        assert_eq!(r.rank, 2);
        assert!(dist_inf(&r.solution, &[1.0, -3.0]) < 1e-12);
        assert!(r.residual_norm < 1e-12);
    }

    #[test]
    fn lstsq_two_equations_one_unknown() {
        let m = Mat::from_rows(&[[1.0], [1.0]]).unwrap();
        let r = lstsq(&m, &[0.0, 1.0]).unwrap();
        assert!((r.solution[0] - 0.5).abs() < 1e-15);
        assert!((r.residual_norm - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn lstsq_minimum_norm_on_rank_deficient() {
        let m = Mat::from_rows(&[[1.0, 1.0]]).unwrap();
        let r = lstsq(&m, &[2.0]).unwrap();
        assert_eq!(r.rank, 1);
        assert!(dist_inf(&r.solution, &[1.0, 1.0]) < 1e-14);
    }

    #[test]
    fn lstsq_errors() {
        let m = Mat::identity(2).unwrap();
        assert!(matches!(lstsq(&m, &[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(
            lstsq(&m, &[1.0, f64::INFINITY]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn nullspace_examples() {
        assert!(nullspace(&Mat::identity(2).unwrap(), 1e-10)
            .unwrap()
            .is_empty());

        let ns = nullspace(&Mat::from_rows(&[[1.0, 1.0]]).unwrap(), 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        let h = 0.5f64.sqrt();
        let v = &ns[0];
        let s = v[0].signum();
        assert!(dist_inf(&[s * v[0], s * v[1]], &[h, -h]) < 1e-14);

        assert!(nullspace(&Mat::identity(2).unwrap(), 0.0).is_err());
    }

    #[test]
    fn nullspace_of_ambiguous_pair_matrix() {
        // A = [[1,0],[0,1],[1,2]]; Pi A takes rows (1, 2, 0) so that
        // A (1,-3) = Pi A (-5, 1) entrywise.
        let a = Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0]]).unwrap();
        let pa = a.select_rows(&[1, 2, 0]).unwrap();
        let c = a.hcat(&pa).unwrap();
        let exhibited = [-1.0, 3.0, -5.0, 1.0];
        assert!(norm_inf(&c.matvec(&exhibited).unwrap()) < 1e-15);

        let ns = nullspace(&c, 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        let scale = exhibited[0] / v[0];
        let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
        assert!(dist_inf(&scaled, &exhibited) < 1e-12);
        assert_eq!(rank(&c, 1e-10).unwrap(), 3);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&golden_4x2(), 1e-10).unwrap(), 2);
        assert_eq!(rank(&Mat::zeros(3, 3).unwrap(), 1e-10).unwrap(), 0);
        assert_eq!(
            nullspace(&Mat::zeros(3, 3).unwrap(), 1e-10).unwrap().len(),
            3
        );
    }

    #[test]
    fn det_examples() {
        assert!((det(&Mat::identity(3).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        let m = Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert!((det(&m).unwrap() + 2.0).abs() < 1e-14);
        let p = Mat::identity(4)
            .unwrap()
            .select_rows(&[1, 2, 3, 0])
            .unwrap();
        assert!((det(&p).unwrap().abs() - 1.0).abs() < 1e-15);
        assert!(matches!(
            det(&Mat::zeros(2, 3).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn solve_square_and_singular() {
        let m = Mat::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!(dist_inf(&solve(&m, &[2.0, 2.0]).unwrap(), &[1.0, 0.5]) < 1e-15);
        let s = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&s, &[1.0, 1.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn column_basis_is_orthonormal() {
        let q = column_basis(&golden_4x2(), 1e-10).unwrap().unwrap();
        assert_eq!(q.cols(), 2);
        let g = q.transpose().matmul(&q).unwrap();
        assert!(dist_inf(g.data(), Mat::identity(2).unwrap().data()) < 1e-14);
        assert!(column_basis(&Mat::zeros(3, 2).unwrap(), 1e-10)
            .unwrap()
            .is_none());
    }
}
