//! Exact linear algebra over prime fields `Z_d`.
//!
//! Vectors in `Z_d^n` are `&[u32]` slices read as column vectors; the first
//! entry is the most significant digit when a vector is used as a basis index.

use std::fmt;

use crate::config::TOL;
use crate::error::{validation, Error, Result};

pub fn is_prime(d: u32) -> bool {
    if d < 2 {
        return false;
    }
    let mut k = 2u32;
    while (k as u64) * (k as u64) <= d as u64 {
        if d.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

pub(crate) fn check_prime(d: u32) -> Result<()> {
    if !is_prime(d) {
        return validation(format!("field modulus {d} is not prime"));
    }
    Ok(())
}

fn inv_mod(a: u32, d: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(d));
    // Fermat: a^(d-2) mod d.
    let (mut base, mut exp, mut acc) = (a as u64 % d as u64, d as u64 - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % d as u64;
        }
        base = base * base % d as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Matrix over `Z_d` with `d` prime.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    d: u32,
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldMatrix(Z_{}, {:?})", self.d, self.to_rows())
    }
}

impl FieldMatrix {
    /// Entries are reduced mod `d`; negative inputs wrap.
    pub fn from_rows(d: u32, rows: &[Vec<i64>]) -> Result<Self> {
        check_prime(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return validation("rows of a field matrix must have equal length");
        }
        let entries = rows.iter().flatten().map(|&x| x.rem_euclid(d as i64) as u32).collect();
        Ok(FieldMatrix { d, rows: rows.len(), cols, entries })
    }

    pub fn zeros(d: u32, rows: usize, cols: usize) -> Result<Self> {
        check_prime(d)?;
        Ok(FieldMatrix { d, rows, cols, entries: vec![0; rows * cols] })
    }

    pub fn identity(d: u32, n: usize) -> Result<Self> {
        let mut m = Self::zeros(d, n, n)?;
        for i in 0..n {
            m.set(i, i, 1);
        }
        Ok(m)
    }

    pub fn modulus(&self) -> u32 {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.entries[i * self.cols + j] = v % self.d;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut t = FieldMatrix { d: self.d, rows: self.cols, cols: self.rows, entries: vec![0; self.entries.len()] };
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.entries[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.d != other.d || self.cols != other.rows {
            return validation(format!(
                "cannot multiply {}x{} over Z_{} by {}x{} over Z_{}",
                self.rows, self.cols, self.d, other.rows, other.cols, other.d
            ));
        }
        let d = self.d as u64;
        let mut out =
            FieldMatrix { d: self.d, rows: self.rows, cols: other.cols, entries: vec![0; self.rows * other.cols] };
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc += self.get(i, k) as u64 * other.get(k, j) as u64;
                }
                out.entries[i * other.cols + j] = (acc % d) as u32;
            }
        }
        Ok(out)
    }

    /// `A z` for a column vector `z`.
    pub fn mul_vec(&self, z: &[u32]) -> Vec<u32> {
        assert_eq!(z.len(), self.cols, "vector length must equal column count");
        let d = self.d as u64;
        (0..self.rows)
            .map(|i| {
                let acc: u64 = self.row(i).iter().zip(z).map(|(&a, &b)| a as u64 * b as u64).sum();
                (acc % d) as u32
            })
            .collect()
    }

    /// Rows `range` as a new matrix.
    pub fn select_rows(&self, range: std::ops::Range<usize>) -> FieldMatrix {
        FieldMatrix {
            d: self.d,
            rows: range.len(),
            cols: self.cols,
            entries: self.entries[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }

    /// `self` stacked on top of `other`.
    pub fn vstack(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.d != other.d || self.cols != other.cols {
            return validation("stacked matrices must share modulus and column count");
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(FieldMatrix { d: self.d, rows: self.rows + other.rows, cols: self.cols, entries })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    pub fn rank(&self) -> usize {
        row_reduce(self).rank
    }

    pub fn is_full_row_rank(&self) -> bool {
        self.rank() == self.rows
    }
}

/// Reduced row echelon form with its rank and pivot columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowEchelon {
    pub reduced: FieldMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

/// Gauss-Jordan elimination mod `d`. Pivots are the first nonzero entry
/// scanning columns left to right.
pub fn row_reduce(a: &FieldMatrix) -> RowEchelon {
    let d = a.d as u64;
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
            continue;
        };
        if p != r {
            for j in 0..m.cols {
                m.entries.swap(p * m.cols + j, r * m.cols + j);
            }
        }
        let inv = inv_mod(m.get(r, c), a.d) as u64;
        for j in 0..m.cols {
            let v = m.get(r, j) as u64 * inv % d;
            m.entries[r * m.cols + j] = v as u32;
        }
        for i in 0..m.rows {
            let f = m.get(i, c) as u64;
            if i == r || f == 0 {
                continue;
            }
            for j in 0..m.cols {
                let v = (m.get(i, j) as u64 + d * d - f * m.get(r, j) as u64 % d) % d;
                m.entries[i * m.cols + j] = v as u32;
            }
        }
        pivots.push(c);
        r += 1;
    }
    RowEchelon { reduced: m, rank: r, pivots }
}

/// A Toeplitz matrix with a flag recording whether it has full row rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toeplitz {
    pub matrix: FieldMatrix,
    pub full_rank: bool,
}

/// `T[i][j] = seed[i - j + n - 1]` for an `m x n` matrix, `m <= n`.
pub fn toeplitz(d: u32, seed: &[u32], m: usize, n: usize) -> Result<Toeplitz> {
    check_prime(d)?;
    if m > n || n == 0 {
        return validation(format!("Toeplitz shape {m}x{n} must satisfy m <= n, n >= 1"));
    }
    if seed.len() != m + n - 1 {
        return validation(format!("Toeplitz seed has length {}, expected m + n - 1 = {}", seed.len(), m + n - 1));
    }
    let mut t = FieldMatrix::zeros(d, m, n)?;
    for i in 0..m {
        for j in 0..n {
            t.set(i, j, seed[i + n - 1 - j] % d);
        }
    }
    let full_rank = t.rank() == m;
    Ok(Toeplitz { matrix: t, full_rank })
}

/// A surjective check map stacked over a complement into an invertible map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFunctionPair {
    pub check: FieldMatrix,
    pub hat: FieldMatrix,
    pub combined: FieldMatrix,
}

impl LinearFunctionPair {
    /// `(ǧ, ĝ)`: the split of `(M^{-1})^T` into its first `m` and last `n - m` rows.
    pub fn dual(&self) -> Result<(FieldMatrix, FieldMatrix)> {
        dual_map(&self.combined, self.check.rows())
    }
}

fn require_full_row_rank(h: &FieldMatrix) -> Result<RowEchelon> {
    let rr = row_reduce(h);
    if rr.rank != h.rows {
        return validation(format!(
            "check matrix has rank {} but {} rows; a full-row-rank matrix is required",
            rr.rank, h.rows
        ));
    }
    Ok(rr)
}

/// Completes `H` with standard basis rows on its non-pivot columns.
pub fn complete_invertible(h: &FieldMatrix) -> Result<LinearFunctionPair> {
    let rr = require_full_row_rank(h)?;
    let free: Vec<usize> = (0..h.cols).filter(|c| !rr.pivots.contains(c)).collect();
    let mut hat = FieldMatrix::zeros(h.d, free.len(), h.cols)?;
    for (i, &c) in free.iter().enumerate() {
        hat.set(i, c, 1);
    }
    let combined = h.vstack(&hat)?;
    debug_assert_eq!(combined.rank(), h.cols);
    Ok(LinearFunctionPair { check: h.clone(), hat, combined })
}

/// Exact inverse mod `d`.
pub fn invert(m: &FieldMatrix) -> Result<FieldMatrix> {
    if m.rows != m.cols {
        return validation(format!("cannot invert a {}x{} matrix", m.rows, m.cols));
    }
    let n = m.rows;
    let mut aug = FieldMatrix::zeros(m.d, n, 2 * n)?;
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, m.get(i, j));
        }
        aug.set(i, n + i, 1);
    }
    let rr = row_reduce(&aug);
    if rr.pivots.len() < n || rr.pivots[n - 1] != n - 1 {
        return validation("matrix is singular over the field");
    }
    let mut inv = FieldMatrix::zeros(m.d, n, n)?;
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, rr.reduced.get(i, n + j));
        }
    }
    Ok(inv)
}

/// Splits `(M^{-1})^T` into the first `m` rows (`ǧ`) and the remaining
/// `n - m` rows (`ĝ`).
pub fn dual_map(m_mat: &FieldMatrix, m: usize) -> Result<(FieldMatrix, FieldMatrix)> {
    if m > m_mat.rows {
        return validation(format!("split point {m} exceeds dimension {}", m_mat.rows));
    }
    let g = invert(m_mat)?.transpose();
    Ok((g.select_rows(0..m), g.select_rows(m..g.rows)))
}

/// Rows spanning the null space of `H`, so that `H G^T = 0`.
pub fn generator_from_check(h: &FieldMatrix) -> Result<FieldMatrix> {
    let rr = require_full_row_rank(h)?;
    let d = h.d;
    let free: Vec<usize> = (0..h.cols).filter(|c| !rr.pivots.contains(c)).collect();
    let mut g = FieldMatrix::zeros(d, free.len(), h.cols)?;
    for (k, &f) in free.iter().enumerate() {
        g.set(k, f, 1);
        for (i, &p) in rr.pivots.iter().enumerate() {
            let v = rr.reduced.get(i, f);
            g.set(k, p, (d - v) % d);
        }
    }
    Ok(g)
}

/// Digits of `index` in base `d`, most significant first.
pub fn index_to_vector(mut index: usize, d: u32, n: usize) -> Vec<u32> {
    let mut v = vec![0u32; n];
    for k in (0..n).rev() {
        v[k] = (index % d as usize) as u32;
        index /= d as usize;
    }
    v
}

pub fn vector_to_index(v: &[u32], d: u32) -> usize {
    v.iter().fold(0usize, |acc, &x| acc * d as usize + x as usize)
}

pub(crate) fn checked_power(d: u32, n: usize, limit: usize) -> Result<usize> {
    let mut acc = 1usize;
    for _ in 0..n {
        acc = acc
            .checked_mul(d as usize)
            .filter(|&a| a <= limit)
            .ok_or_else(|| Error::Resource(format!("{d}^{n} exceeds the enumeration limit {limit}")))?;
    }
    Ok(acc)
}

/// All `z` with `H z = syndrome`, in increasing lexicographic order.
pub fn coset_enumerate(h: &FieldMatrix, syndrome: &[u32]) -> Result<Vec<Vec<u32>>> {
    let rr = require_full_row_rank(h)?;
    if syndrome.len() != h.rows {
        return validation(format!("syndrome has length {}, check matrix has {} rows", syndrome.len(), h.rows));
    }
    let d = h.d;
    let n = h.cols;
    let free: Vec<usize> = (0..n).filter(|c| !rr.pivots.contains(c)).collect();
    let count = checked_power(d, free.len(), TOL.max_enumeration)?;
    // Particular solution from the reduced system: transform the syndrome by
    // the same row operations via the augmented matrix.
    let mut aug = FieldMatrix::zeros(d, h.rows, n + 1)?;
    for (i, &si) in syndrome.iter().enumerate() {
        for j in 0..n {
            aug.set(i, j, h.get(i, j));
        }
        aug.set(i, n, si % d);
    }
    let red = row_reduce(&aug).reduced;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let free_vals = index_to_vector(k, d, free.len());
        let mut z = vec![0u32; n];
        for (&f, &v) in free.iter().zip(&free_vals) {
            z[f] = v;
        }
        for (i, &p) in rr.pivots.iter().enumerate() {
            let mut acc = red.get(i, n) as u64;
            for &f in &free {
                acc += (d - red.get(i, f)) as u64 * z[f] as u64;
            }
            z[p] = (acc % d as u64) as u32;
        }
        out.push(z);
    }
    out.sort();
    Ok(out)
}
