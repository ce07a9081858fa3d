//! Dense linear algebra: row-major matrices, index sets, partial-pivoting LU and
//! symmetric eigenvalues by cyclic Jacobi rotations.
//!
//! Everything here works at desk scale (a few dozen rows). Index sets are 0-based.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{invalid, Result};

/// Relative pivot threshold used by [`LuFactors`]: a pivot below
/// `PIVOT_RELATIVE_TOL * max|a_ij|` marks the matrix singular.
pub const PIVOT_RELATIVE_TOL: f64 = 1e-10;

/// Default tolerance on the smallest eigenvalue of the symmetric part in [`is_psd`].
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries. All entries must be finite.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "matrix entry ({}, {}) is not finite",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("rows have differing lengths"));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    /// Column vector (n x 1).
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product. Panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product. Panics on dimension mismatch.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "elementwise dimension mismatch"
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// (A + Aᵀ) / 2.
    pub fn symmetric_part(&self) -> Matrix {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise absolute difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.sub(other).max_abs()
    }

    /// `A[rows, cols]` with rows and columns in index-set order.
    pub fn submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<Matrix> {
        if let Some(&i) = rows.as_slice().last() {
            if i >= self.rows {
                return Err(invalid(format!("row index {i} out of range for {} rows", self.rows)));
            }
        }
        if let Some(&j) = cols.as_slice().last() {
            if j >= self.cols {
                return Err(invalid(format!(
                    "column index {j} out of range for {} columns",
                    self.cols
                )));
            }
        }
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        Ok(out)
    }

    /// Appends a row. Panics if the length differs from `cols` (unless the matrix is empty).
    pub fn push_row(&mut self, row: &[f64]) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols, "push_row length mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Principal submatrix `A_J`.
    pub fn principal(&self, set: &IndexSet) -> Result<Matrix> {
        self.submatrix(set, set)
    }

    /// Writes `block` into the positions `rows x cols`.
    pub fn set_block(&mut self, rows: &IndexSet, cols: &IndexSet, block: &Matrix) {
        assert_eq!((rows.len(), cols.len()), (block.rows, block.cols));
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                self[(i, j)] = block[(a, b)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(invalid(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

/// Strictly increasing list of 0-based indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Validates that `indices` are strictly increasing and below `n`.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("index set must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(invalid(format!("index {last} out of range for dimension {n}")));
            }
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates, then validates the range.
    pub fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, n)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// `{start, ..., end-1}`.
    pub fn range(start: usize, end: usize) -> Self {
        Self((start..end).collect())
    }

    pub fn from_predicate(n: usize, pred: impl Fn(usize) -> bool) -> Self {
        Self((0..n).filter(|&i| pred(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Position of `i` within the set, if present.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }

    pub fn complement(&self, n: usize) -> Self {
        Self::from_predicate(n, |i| !self.contains(i))
    }

    pub fn intersection(&self, other: &IndexSet) -> Self {
        Self(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn difference(&self, other: &IndexSet) -> Self {
        Self(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    pub fn union(&self, other: &IndexSet) -> Self {
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// `self[inner]`: picks the elements of `self` at the positions listed in `inner`.
    pub fn compose(&self, inner: &IndexSet) -> Result<IndexSet> {
        inner
            .iter()
            .map(|&p| {
                self.0
                    .get(p)
                    .copied()
                    .ok_or_else(|| invalid(format!("position {p} out of range for set of size {}", self.len())))
            })
            .collect::<Result<Vec<_>>>()
            .map(IndexSet)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// Gathers `v[i]` for `i` in the set.
    pub fn gather(&self, v: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| v[i]).collect()
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for IndexSet {
    /// Prints the set 1-based, e.g. `{1, 3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// All subsets of `universe`, by increasing cardinality and lexicographically within
/// each cardinality.
pub fn subsets_by_cardinality(universe: &IndexSet) -> Subsets {
    Subsets {
        universe: universe.0.clone(),
        size: 0,
        positions: Some(Vec::new()),
    }
}

pub struct Subsets {
    universe: Vec<usize>,
    size: usize,
    positions: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        let pos = self.positions.as_mut()?;
        let out = IndexSet(pos.iter().map(|&p| self.universe[p]).collect());
        let n = self.universe.len();
        let k = self.size;
        // advance to the next combination of the same size, else the next size
        let mut i = k;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if pos[i] < n - k + i {
                pos[i] += 1;
                for j in i + 1..k {
                    pos[j] = pos[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            if k == n {
                self.positions = None;
            } else {
                self.size += 1;
                self.positions = Some((0..self.size).collect());
            }
        }
        Some(out)
    }
}

/// Partial-pivoting LU factorization `PA = LU` of a square matrix.
#[derive(Clone, Debug)]
pub struct LuFactors {
    n: usize,
    lu: Matrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl LuFactors {
    /// Returns `Ok(None)` when some pivot falls below the singularity threshold.
    pub fn factor(a: &Matrix) -> Result<Option<Self>> {
        if !a.is_square() {
            return Err(invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = PIVOT_RELATIVE_TOL * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold || pivot == 0.0 {
                return Ok(None);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Some(Self { n, lu, perm, swaps }))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ w = y, x = Pᵀ w
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(j, i)] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(j, i)] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let d: f64 = (0..self.n).map(|i| self.lu[(i, i)]).product();
        if self.swaps % 2 == 1 {
            -d
        } else {
            d
        }
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        inv
    }
}

/// Solves `A x = b`; `Ok(None)` flags a singular `A`.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Option<Vec<f64>>> {
    if b.len() != a.rows() {
        return Err(invalid(format!(
            "rhs has length {}, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    Ok(LuFactors::factor(a)?.map(|lu| lu.solve(b)))
}

/// `A⁻¹`, or `Ok(None)` for a singular `A`.
pub fn invert(a: &Matrix) -> Result<Option<Matrix>> {
    Ok(LuFactors::factor(a)?.map(|lu| lu.inverse()))
}

/// Determinant; exactly zero when the LU pivot test flags singularity.
pub fn determinant(a: &Matrix) -> Result<f64> {
    Ok(LuFactors::factor(a)?.map_or(0.0, |lu| lu.determinant()))
}

/// Eigenvalues of the symmetric part `(A + Aᵀ)/2`, ascending, via cyclic Jacobi.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(invalid(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut s = a.symmetric_part();
    let scale = s.max_abs();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)] * s[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| s[(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig)
}

pub fn min_symmetric_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.first().copied().unwrap_or(0.0))
}

/// `xᵀAx ≥ -tol‖x‖²` for all x, i.e. the symmetric part has no eigenvalue below `-tol`.
pub fn is_psd(a: &Matrix, tol: f64) -> Result<bool> {
    Ok(min_symmetric_eigenvalue(a)? >= -tol)
}

/// Largest dimension accepted by [`is_p_matrix`] (it visits all 2ⁿ principal minors).
pub const P_MATRIX_MAX_DIM: usize = 16;

/// All principal minors strictly positive.
pub fn is_p_matrix(a: &Matrix) -> Result<bool> {
    if !a.is_square() {
        return Err(invalid("P-matrix test needs a square matrix"));
    }
    if a.rows() > P_MATRIX_MAX_DIM {
        return Err(crate::Error::SizeLimit {
            what: "P-matrix dimension",
            actual: a.rows(),
            limit: P_MATRIX_MAX_DIM,
        });
    }
    for set in subsets_by_cardinality(&IndexSet::full(a.rows())).skip(1) {
        let minor = determinant(&a.principal(&set)?)?;
        if minor <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}
