use std::fmt;

use rand::Rng as _;

use super::field::Field;
use crate::error::{Error, Result};
use crate::seed;

/// Dense row-major matrix over a prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

/// Row vector over a prime field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FVector {
    field: Field,
    data: Vec<u64>,
}

impl FVector {
    pub fn new(field: Field, data: Vec<u64>) -> Self {
        let data = data.into_iter().map(|x| field.reduce(x)).collect();
        Self { field, data }
    }

    pub fn from_signed(field: Field, data: &[i64]) -> Self {
        Self {
            field,
            data: data.iter().map(|&x| field.from_i64(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// `self · m`.
    pub fn mul_matrix(&self, m: &FMatrix) -> Result<FVector> {
        if self.len() != m.rows {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} times {}x{} matrix",
                self.len(),
                m.rows,
                m.cols
            )));
        }
        let mut out = vec![0u64; m.cols];
        for (i, &c) in self.data.iter().enumerate() {
            if c != 0 {
                axpy(&self.field, &mut out, c, m.row(i));
            }
        }
        Ok(FVector {
            field: self.field,
            data: out,
        })
    }

    pub fn into_matrix(self) -> FMatrix {
        FMatrix {
            field: self.field,
            rows: 1,
            cols: self.data.len(),
            data: self.data,
        }
    }
}

/// `dst += c * src`, entrywise.
#[inline]
pub(crate) fn axpy(f: &Field, dst: &mut [u64], c: u64, src: &[u64]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = f.mul_add(*d, c, s);
    }
}

/// Gauss-Jordan elimination in place, pivoting only in columns `< pivot_cols`.
/// Pivot rows are normalized to 1 and cleared above and below. Returns the
/// pivot columns, which are the lexicographically smallest possible set.
///
/// Elimination is division-free; the pivot rows are scaled once at the end
/// with a single batched inversion.
pub(crate) fn rref_in_place(
    f: &Field,
    data: &mut [u64],
    rows: usize,
    cols: usize,
    pivot_cols: usize,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| data[i * cols + c] != 0) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                data.swap(p * cols + j, r * cols + j);
            }
        }
        let (before, rest) = data.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        let pivot = pivot_row[c];
        for row in before
            .chunks_exact_mut(cols)
            .chain(after.chunks_exact_mut(cols))
        {
            let factor = row[c];
            if factor != 0 {
                let neg = f.neg(factor);
                for (d, &s) in row.iter_mut().zip(pivot_row.iter()) {
                    *d = f.dot2(pivot, *d, neg, s);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let lead: Vec<u64> = pivots
        .iter()
        .enumerate()
        .map(|(i, &c)| data[i * cols + c])
        .collect();
    let inv = f.inv_all(&lead);
    for (i, &s) in inv.iter().enumerate() {
        if s != 1 {
            for x in &mut data[i * cols..(i + 1) * cols] {
                *x = f.mul(*x, s);
            }
        }
    }
    pivots
}

/// Rank by division-free forward elimination (`row = p * row - c * pivot_row`);
/// destroys `data`.
pub(crate) fn rank_in_place(f: &Field, data: &mut [u64], rows: usize, cols: usize) -> usize {
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| data[i * cols + c] != 0) else {
            continue;
        };
        if p != r {
            for j in c..cols {
                data.swap(p * cols + j, r * cols + j);
            }
        }
        let (head, tail) = data.split_at_mut((r + 1) * cols);
        let pivot_row = &head[r * cols..];
        let pivot = pivot_row[c];
        for row in tail.chunks_exact_mut(cols) {
            let factor = row[c];
            if factor != 0 {
                let neg = f.neg(factor);
                for (d, &s) in row[c + 1..].iter_mut().zip(&pivot_row[c + 1..]) {
                    *d = f.dot2(pivot, *d, neg, s);
                }
                row[c] = 0;
            }
        }
        r += 1;
    }
    r
}

impl FMatrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_vec(field: Field, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let data = data.into_iter().map(|x| field.reduce(x)).collect();
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn from_rows(field: Field, rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::from_vec(field, rows.len(), cols, rows.concat())
    }

    /// Builds a matrix from signed integers, mapping negatives to `q - |x|`.
    pub fn from_signed(field: Field, rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|&x| field.from_i64(x)).collect();
        Ok(Self {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Entries drawn uniformly from `[0, q)` by the crate RNG seeded with `seed`.
    pub fn random(field: Field, rows: usize, cols: usize, seed: u64) -> Self {
        Self::random_from(field, rows, cols, &mut seed::rng(seed))
    }

    pub fn random_from(field: Field, rows: usize, cols: usize, rng: &mut seed::Rng) -> Self {
        let q = field.modulus();
        let data = (0..rows * cols).map(|_| rng.gen_range(0..q)).collect();
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    /// Entries drawn uniformly from `[1, q)`.
    pub fn random_nonzero_from(
        field: Field,
        rows: usize,
        cols: usize,
        rng: &mut seed::Rng,
    ) -> Self {
        let q = field.modulus();
        let data = (0..rows * cols).map(|_| rng.gen_range(1..q)).collect();
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    #[inline]
    pub fn field(&self) -> Field {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = self.field.reduce(v);
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Rows printed as signed representatives, convenient for comparing against small integers.
    pub fn to_signed_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|&x| self.field.to_signed(x))
                    .collect()
            })
            .collect()
    }

    pub fn row_vector(&self, i: usize) -> FVector {
        FVector {
            field: self.field,
            data: self.row(i).to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn check_field(&self, other: &FMatrix) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(
                self.field.modulus(),
                other.field.modulus(),
            ));
        }
        Ok(())
    }

    pub fn mul(&self, other: &FMatrix) -> Result<FMatrix> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = FMatrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0 {
                    axpy(&f, dst, a, other.row(k));
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &FMatrix) -> Result<FMatrix> {
        self.check_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch(
                "addition of differently shaped matrices".into(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.field.add(a, b))
            .collect();
        Ok(FMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: u64) -> FMatrix {
        let c = self.field.reduce(c);
        FMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| self.field.mul(x, c)).collect(),
        }
    }

    pub fn transpose(&self) -> FMatrix {
        let mut out = FMatrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Sub-matrix made of the given 0-based columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FMatrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        FMatrix {
            field: self.field,
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Sub-matrix made of the given 0-based rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        FMatrix {
            field: self.field,
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Stacks matrices vertically. All parts must share column count and field.
    pub fn vstack(field: Field, cols: usize, parts: &[&FMatrix]) -> Result<FMatrix> {
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols || p.field != field {
                return Err(Error::ShapeMismatch(format!(
                    "cannot stack a {}x{} block under {cols} columns",
                    p.rows, p.cols
                )));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(FMatrix {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (FMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = rref_in_place(&self.field, &mut m.data, m.rows, m.cols, m.cols);
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        let mut data = self.data.clone();
        rank_in_place(&self.field, &mut data, self.rows, self.cols)
    }

    pub fn inverse(&self) -> Result<FMatrix> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "inverse of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let w = 2 * n;
        let mut aug = vec![0u64; n * w];
        for i in 0..n {
            aug[i * w..i * w + n].copy_from_slice(self.row(i));
            aug[i * w + n + i] = 1;
        }
        let pivots = rref_in_place(&self.field, &mut aug, n, w, n);
        if pivots.len() < n {
            return Err(Error::SingularMatrix);
        }
        let mut out = FMatrix::zeros(self.field, n, n);
        for i in 0..n {
            out.row_mut(i).copy_from_slice(&aug[i * w + n..(i + 1) * w]);
        }
        Ok(out)
    }

    pub fn determinant(&self) -> Result<u64> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch(
                "determinant of non-square matrix".into(),
            ));
        }
        let f = self.field;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1u64;
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| a[i * n + c] != 0) else {
                return Ok(0);
            };
            if p != c {
                for j in 0..n {
                    a.swap(p * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let pivot = a[c * n + c];
            det = f.mul(det, pivot);
            let inv = f.inv(pivot)?;
            for i in c + 1..n {
                let factor = a[i * n + c];
                if factor != 0 {
                    let scale = f.neg(f.mul(factor, inv));
                    let (head, tail) = a.split_at_mut(i * n);
                    axpy(&f, &mut tail[c..n], scale, &head[c * n + c..(c + 1) * n]);
                }
            }
        }
        Ok(det)
    }

    /// Canonical basis of `{u : u · self = 0}`.
    ///
    /// Computed from the RREF of `selfᵀ`: each free column `f` yields the
    /// vector with `u[f] = 1`, zero on the other free columns and `-rref[i][f]`
    /// at pivot `i`. Vectors come out ordered by free column. A matrix with no
    /// columns has every vector in its left null space, so the unit vectors
    /// are returned.
    pub fn left_null_space(&self) -> Vec<FVector> {
        let f = self.field;
        let n = self.rows;
        let (r, pivots) = self.transpose().rref();
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..n)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut u = vec![0u64; n];
                u[free] = 1;
                for (i, &p) in pivots.iter().enumerate() {
                    u[p] = f.neg(r.get(i, free));
                }
                FVector { field: f, data: u }
            })
            .collect()
    }

    /// The left null space as the rows of a matrix.
    pub fn left_null_matrix(&self) -> FMatrix {
        let basis = self.left_null_space();
        let mut data = Vec::with_capacity(basis.len() * self.rows);
        for u in &basis {
            data.extend_from_slice(&u.data);
        }
        FMatrix {
            field: self.field,
            rows: basis.len(),
            cols: self.rows,
            data,
        }
    }

    /// Finds `D` with `D · self = target`, or `None` when some row of `target`
    /// lies outside the row space of `self`. When `self` has dependent rows
    /// the solution puts zero weight on non-pivot rows.
    pub fn solve_left(&self, target: &FMatrix) -> Result<Option<FMatrix>> {
        self.check_field(target)?;
        if self.cols != target.cols {
            return Err(Error::ShapeMismatch(format!(
                "row space of width {} cannot contain rows of width {}",
                self.cols, target.cols
            )));
        }
        // Solve selfᵀ · Dᵀ = targetᵀ via the augmented matrix [selfᵀ | targetᵀ].
        let (m, k, t) = (self.rows, self.cols, target.rows);
        let w = m + t;
        let mut aug = vec![0u64; k * w];
        for i in 0..m {
            for j in 0..k {
                aug[j * w + i] = self.get(i, j);
            }
        }
        for i in 0..t {
            for j in 0..k {
                aug[j * w + m + i] = target.get(i, j);
            }
        }
        let pivots = rref_in_place(&self.field, &mut aug, k, w, m);
        let rank = pivots.len();
        if (rank..k).any(|row| aug[row * w + m..(row + 1) * w].iter().any(|&x| x != 0)) {
            return Ok(None);
        }
        let mut d = FMatrix::zeros(self.field, t, m);
        for (row, &p) in pivots.iter().enumerate() {
            for i in 0..t {
                d.data[i * m + p] = aug[row * w + m + i];
            }
        }
        Ok(Some(d))
    }
}

impl fmt::Debug for FMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "FMatrix {}x{} over F_{} [",
            self.rows,
            self.cols,
            self.field.modulus()
        )?;
        for row in self.to_signed_rows() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

impl FMatrix {
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(u64::to_string).collect())
            .collect()
    }

    /// Parses decimal strings; negatives are mapped into the field.
    pub fn from_string_rows(
        field: Field,
        rows: &[Vec<String>],
        cols_hint: Option<usize>,
    ) -> Result<Self> {
        let cols = rows.first().map(Vec::len).or(cols_hint).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::ShapeMismatch("ragged rows".into()));
            }
            for s in row {
                data.push(parse_element(&field, s)?);
            }
        }
        Ok(Self {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }
}

/// Parses a decimal integer (possibly negative, possibly larger than q) into the field.
pub fn parse_element(field: &Field, s: &str) -> Result<u64> {
    let t = s.trim();
    let v: i128 = t
        .parse()
        .map_err(|_| Error::Parse(format!("not a decimal integer: {s:?}")))?;
    Ok(v.rem_euclid(field.modulus() as i128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f7() -> Field {
        Field::new(7).unwrap()
    }

    fn big() -> Field {
        Field::default()
    }

    #[test]
    fn identity_has_trivial_null_space() {
        assert!(FMatrix::identity(f7(), 2).left_null_space().is_empty());
    }

    #[test]
    fn zero_matrix_null_space_is_everything() {
        let z = FMatrix::zeros(big(), 3, 2);
        let basis = z.left_null_space();
        assert_eq!(basis.len(), 3);
        assert_eq!(z.left_null_matrix().rank(), 3);
    }

    #[test]
    fn no_columns_gives_unit_vectors() {
        let m = FMatrix::zeros(big(), 3, 0);
        let basis = m.left_null_matrix();
        assert_eq!(basis, FMatrix::identity(big(), 3));
    }

    #[test]
    fn worker_one_null_space_spans_printed_vectors() {
        let f = big();
        let demand = FMatrix::from_signed(
            f,
            &[
                vec![1, 1, 1, 1, 1, 1],
                vec![1, 2, 3, 4, 5, 6],
                vec![1, 0, 2, 3, 5, 4],
                vec![1, 2, 1, 4, 4, 0],
            ],
        )
        .unwrap();
        let sub = demand.select_columns(&[2, 5]);
        assert_eq!(
            sub.to_signed_rows(),
            vec![vec![1, 1], vec![3, 6], vec![2, 4], vec![1, 0]]
        );
        let basis = sub.left_null_matrix();
        assert_eq!(basis.rows(), 2);
        for v in [[-6i64, 1, 0, 3], [0, -2, 3, 0]] {
            let target = FMatrix::from_signed(f, &[v.to_vec()]).unwrap();
            assert!(
                basis.solve_left(&target).unwrap().is_some(),
                "{v:?} not in span"
            );
        }
    }

    #[test]
    fn rank_examples() {
        let f = big();
        assert_eq!(FMatrix::identity(f, 4).rank(), 4);
        let m = FMatrix::from_signed(f, &[vec![1, -1], vec![1, -1]]).unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(FMatrix::zeros(f, 2, 3).rank(), 0);
    }

    #[test]
    fn inverse_examples() {
        let f = big();
        assert_eq!(
            FMatrix::identity(f, 3).inverse().unwrap(),
            FMatrix::identity(f, 3)
        );
        let c = FMatrix::from_signed(
            f,
            &[
                vec![-6, 1, 0, 3],
                vec![0, -2, 3, 0],
                vec![0, -1, 0, 1],
                vec![-1, -2, 3, 0],
            ],
        )
        .unwrap();
        let inv = c.inverse().unwrap();
        assert_eq!(c.mul(&inv).unwrap(), FMatrix::identity(f, 4));
        let ones = FMatrix::from_signed(f, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert!(matches!(ones.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let f = big();
        let m = FMatrix::from_signed(f, &[vec![2, -3, 1], vec![2, 0, -1], vec![1, 4, 5]]).unwrap();
        // 2(0+4) + 3(10+1) + 1(8-0) = 49
        assert_eq!(m.determinant().unwrap(), 49);
        let s = FMatrix::from_signed(f, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(s.determinant().unwrap(), f.from_i64(-1));
    }

    #[test]
    fn random_is_deterministic() {
        let f = big();
        let a = FMatrix::random(f, 2, 3, 11);
        assert_eq!(a, FMatrix::random(f, 2, 3, 11));
        assert_eq!((a.rows(), a.cols()), (2, 3));
        assert_ne!(a, FMatrix::random(f, 2, 3, 12));
    }

    #[test]
    fn random_entries_look_uniform() {
        let f = big();
        let q = f.modulus() as f64;
        let m = FMatrix::random(f, 1000, 100, 3);
        let mean = m.data().iter().map(|&x| x as f64).sum::<f64>() / 1e5;
        let expected = (q - 1.0) / 2.0;
        assert!((mean - expected).abs() / expected < 0.01, "mean {mean}");
        // chi-square over 16 equal-width bins, 15 dof; 99.9% quantile is about 37.7
        let bins = 16usize;
        let mut counts = vec![0f64; bins];
        for &x in m.data() {
            counts[(x as u128 * bins as u128 / f.modulus() as u128) as usize] += 1.0;
        }
        let e = 1e5 / bins as f64;
        let chi: f64 = counts.iter().map(|c| (c - e) * (c - e) / e).sum();
        assert!(chi < 37.7, "chi-square {chi}");
    }

    #[test]
    fn solve_left_reports_missing_rows() {
        let f = big();
        let r = FMatrix::from_signed(f, &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap();
        let inside = FMatrix::from_signed(f, &[vec![3, -2, 0]]).unwrap();
        let d = r.solve_left(&inside).unwrap().unwrap();
        assert_eq!(d.mul(&r).unwrap(), inside);
        let outside = FMatrix::from_signed(f, &[vec![0, 0, 1]]).unwrap();
        assert!(r.solve_left(&outside).unwrap().is_none());
    }

    #[test]
    fn string_round_trip_maps_negatives() {
        let f = f7();
        let rows = vec![vec!["-1".to_string(), "9".to_string()]];
        let m = FMatrix::from_string_rows(f, &rows, None).unwrap();
        assert_eq!(m.to_rows(), vec![vec![6, 2]]);
        assert!(FMatrix::from_string_rows(f, &[vec!["x".into()]], None).is_err());
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = FMatrix> {
        (1..=max, 1..=max, any::<u64>(), 0u32..3).prop_map(|(r, c, seed, sparsity)| {
            let f = Field::new(101).unwrap();
            let mut m = FMatrix::random(f, r, c, seed);
            // force some rank deficiency by zeroing or duplicating rows
            if sparsity == 1 && r > 1 {
                let first = m.row(0).to_vec();
                m.row_mut(r - 1).copy_from_slice(&first);
            } else if sparsity == 2 {
                for j in 0..c {
                    m.set(0, j, 0);
                }
            }
            m
        })
    }

    proptest! {
        #[test]
        fn rank_plus_nullity_is_rows(m in arb_matrix(7)) {
            prop_assert_eq!(m.rank() + m.left_null_space().len(), m.rows());
        }

        #[test]
        fn null_vectors_annihilate(m in arb_matrix(7)) {
            for u in m.left_null_space() {
                prop_assert!(u.mul_matrix(&m).unwrap().is_zero());
            }
        }

        #[test]
        fn null_space_is_stable(m in arb_matrix(6)) {
            prop_assert_eq!(m.left_null_space(), m.left_null_space());
        }

        #[test]
        fn inverse_is_two_sided(n in 1usize..7, seed in any::<u64>()) {
            let f = big();
            let m = FMatrix::random(f, n, n, seed);
            if let Ok(inv) = m.inverse() {
                prop_assert_eq!(m.mul(&inv).unwrap(), FMatrix::identity(f, n));
                prop_assert_eq!(inv.mul(&m).unwrap(), FMatrix::identity(f, n));
                prop_assert_ne!(m.determinant().unwrap(), 0);
            } else {
                prop_assert_eq!(m.determinant().unwrap(), 0);
            }
        }

        #[test]
        fn rank_agrees_with_rref(m in arb_matrix(7)) {
            prop_assert_eq!(m.rank(), m.rref().1.len());
        }

        #[test]
        fn solve_left_round_trips(m in arb_matrix(6), seed in any::<u64>()) {
            let coeff = FMatrix::random(m.field(), 2, m.rows(), seed);
            let target = coeff.mul(&m).unwrap();
            let d = m.solve_left(&target).unwrap().expect("target is in the row space");
            prop_assert_eq!(d.mul(&m).unwrap(), target);
        }
    }
}
