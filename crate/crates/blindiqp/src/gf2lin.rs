//! Dense linear algebra over GF(2).
//!
//! Rows are packed into `u64` words. Addition is XOR and multiplication is AND,
//! so a row operation is a word-wise XOR over the row slice.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{guard, Error, Result};

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A bit vector of fixed length.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinVector {
    len: usize,
    words: Vec<u64>,
}

impl BinVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    /// Build from a slice of 0/1 values. Any nonzero entry counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Entry `i` is bit `i` of `index`.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "from_index supports at most 64 bits");
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = index & mask;
        }
        v
    }

    /// Parse a string of '0'/'1' characters, first character is entry 0.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.trim().chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(Error::Invalid(format!("not a bit string: {s:?}"))),
            }
        }
        Ok(Self::from_bits(&bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones % 2 == 1
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Inverse of [`BinVector::from_index`]; only for vectors of at most 64 bits.
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "to_index supports at most 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn ones_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

impl fmt::Display for BinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinVector({self})")
    }
}

impl Serialize for BinVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_bits().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BinVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(d)?;
        if bits.iter().any(|&b| b > 1) {
            return Err(serde::de::Error::custom("vector entries must be 0 or 1"));
        }
        Ok(Self::from_bits(&bits))
    }
}

/// A dense binary matrix, bit-packed row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BinMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from rows of 0/1 values. All rows must have the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(i, j, true),
                    _ => return Err(Error::Invalid(format!("entry ({i},{j}) is {b}, not 0/1"))),
                }
            }
        }
        Ok(m)
    }

    pub fn from_row_vectors(cols: usize, rows: &[BinVector]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!("row {i} has length {}, expected {cols}", r.len())));
            }
            m.row_words_mut(i).copy_from_slice(&r.words);
        }
        Ok(m)
    }

    pub fn from_columns(rows: usize, cols: &[BinVector]) -> Result<Self> {
        Ok(Self::from_row_vectors(rows, cols)?.transpose())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "({i},{j}) outside {}x{}", self.rows, self.cols);
        (self.words[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "({i},{j}) outside {}x{}", self.rows, self.cols);
        let w = &mut self.words[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.stride..(i + 1) * self.stride]
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        if src == dst {
            return;
        }
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.words.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.words.split_at_mut(src * s);
            (&hi[..s] as &[u64], &mut lo[dst * s..(dst + 1) * s])
        };
        for (d, x) in b.iter_mut().zip(a) {
            *d ^= x;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.words.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn row(&self, i: usize) -> BinVector {
        BinVector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
    }

    pub fn column(&self, j: usize) -> BinVector {
        let mut v = BinVector::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|i| self.row(i).to_bits()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    pub fn has_zero_row(&self) -> bool {
        (0..self.rows).any(|i| self.row_words(i).iter().all(|&w| w == 0))
    }

    pub fn is_zero_column(&self, j: usize) -> bool {
        (0..self.rows).all(|i| !self.get(i, j))
    }

    /// `self * v` over GF(2).
    pub fn mat_vec_mul(&self, v: &BinVector) -> Result<BinVector> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = BinVector::zeros(self.rows);
        for i in 0..self.rows {
            let ones: u32 = self
                .row_words(i)
                .iter()
                .zip(&v.words)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            if ones % 2 == 1 {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    let (src, dst) = (other.row_words(k), i * out.stride);
                    for (w, x) in src.iter().enumerate() {
                        out.words[dst + w] ^= x;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    pub fn row_echelon(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c)) else {
                continue;
            };
            m.swap_rows(r, p);
            for i in 0..m.rows {
                if i != r && m.get(i, c) {
                    m.xor_row_into(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    /// Reduced column echelon form: the transpose of the reduced row echelon
    /// form of the transpose. It is unique and spans the same column space.
    pub fn column_echelon(&self) -> Self {
        self.transpose().row_echelon().0.transpose()
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().1.len()
    }

    /// Gauss-Jordan inverse. Errors on non-square or singular input.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("inverse of {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j) {
                    aug.set(i, j, true);
                }
            }
            aug.set(i, n + i, true);
        }
        let (red, pivots) = aug.row_echelon();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if red.get(i, n + j) {
                    inv.set(i, j, true);
                }
            }
        }
        Ok(inv)
    }

    pub fn delete_zero_columns(&self) -> Self {
        let keep: Vec<usize> = (0..self.cols).filter(|&j| !self.is_zero_column(j)).collect();
        self.select_columns(&keep)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (nj, &j) in cols.iter().enumerate() {
                if self.get(i, j) {
                    out.set(i, nj, true);
                }
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), self.cols);
        for (ni, &i) in rows.iter().enumerate() {
            out.row_words_mut(ni).copy_from_slice(self.row_words(i));
        }
        out
    }

    /// Row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows, "permutation length");
        self.select_rows(perm)
    }

    /// Append `v` as a new last column.
    pub fn append_column(&self, v: &BinVector) -> Result<Self> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "column of length {} appended to {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    out.set(i, j, true);
                }
            }
            if v.get(i) {
                out.set(i, self.cols, true);
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinMatrix{:?}", self.to_rows())
    }
}

impl fmt::Display for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            writeln!(f, "{}", self.row(i))?;
        }
        Ok(())
    }
}

impl Serialize for BinMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BinMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<u8>>::deserialize(d)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Largest row count accepted by [`matroid_equivalent`].
pub const MATROID_MAX_ROWS: usize = 8;
/// Largest code dimension accepted by [`enumerate_code`].
pub const CODE_MAX_RANK: usize = 24;

/// True when some row permutation `R` gives
/// `nz(col_echelon(m1)) == nz(col_echelon(R * m2))`, where `nz` deletes zero columns.
pub fn matroid_equivalent(m1: &BinMatrix, m2: &BinMatrix) -> Result<bool> {
    if m1.rows() != m2.rows() {
        return Ok(false);
    }
    guard("row count for matroid equivalence", m1.rows(), MATROID_MAX_ROWS)?;
    let target = m1.column_echelon().delete_zero_columns();
    let mut perm: Vec<usize> = (0..m2.rows()).collect();
    let mut found = false;
    for_each_permutation(&mut perm, &mut |p| {
        if !found && m2.permute_rows(p).column_echelon().delete_zero_columns() == target {
            found = true;
        }
    });
    Ok(found)
}

fn for_each_permutation(items: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    // Heap's algorithm.
    let n = items.len();
    let mut c = vec![0usize; n];
    f(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Which span of a generator matrix to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Span {
    Rows,
    Columns,
}

/// All distinct codewords of the row or column span of `g`, in Gray-code order
/// starting from the zero word.
pub fn enumerate_code(g: &BinMatrix, span: Span) -> Result<Vec<BinVector>> {
    let basis = span_basis(g, span);
    guard("code dimension", basis.len(), CODE_MAX_RANK)?;
    let len = match span {
        Span::Rows => g.cols(),
        Span::Columns => g.rows(),
    };
    let mut out = Vec::with_capacity(1 << basis.len());
    let mut word = BinVector::zeros(len);
    out.push(word.clone());
    for k in 1u64..(1u64 << basis.len()) {
        word.xor_assign(&basis[k.trailing_zeros() as usize]);
        out.push(word.clone());
    }
    Ok(out)
}

/// A basis of the row or column span of `g`.
pub fn span_basis(g: &BinMatrix, span: Span) -> Vec<BinVector> {
    let m = match span {
        Span::Rows => g.clone(),
        Span::Columns => g.transpose(),
    };
    let (red, pivots) = m.row_echelon();
    (0..pivots.len()).map(|i| red.row(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u8]]) -> BinMatrix {
        BinMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn column_echelon_small() {
        assert_eq!(m(&[&[1, 1], &[0, 0]]).column_echelon(), m(&[&[1, 0], &[0, 0]]));
    }

    #[test]
    fn mat_vec_picks_column() {
        let q = m(&[&[1, 0, 1], &[0, 1, 0]]);
        let x = q.mat_vec_mul(&BinVector::from_bits(&[1, 0, 0])).unwrap();
        assert_eq!(x.to_bits(), vec![1, 0]);
    }

    #[test]
    fn row_code_of_two_rows() {
        let g = m(&[&[1, 1, 0], &[0, 1, 1]]);
        let code = enumerate_code(&g, Span::Rows).unwrap();
        assert_eq!(code.len(), 4);
        assert!(code.contains(&BinVector::from_bits(&[1, 0, 1])));
    }

    #[test]
    fn singular_inverse_fails() {
        assert!(matches!(m(&[&[1, 1], &[1, 1]]).inverse(), Err(Error::Singular)));
        assert!(matches!(m(&[&[1, 1, 0]]).inverse(), Err(Error::Dimension(_))));
    }

    #[test]
    fn inverse_of_upper_triangular() {
        let a = m(&[&[1, 1, 1], &[0, 1, 1], &[0, 0, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, m(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]));
        assert_eq!(a.mul(&inv).unwrap(), BinMatrix::identity(3));
    }

    #[test]
    fn matroid_examples() {
        assert!(!matroid_equivalent(&BinMatrix::identity(2), &m(&[&[1, 1], &[1, 1]])).unwrap());
        let a = m(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert!(matroid_equivalent(&a, &a.permute_rows(&[2, 0, 1])).unwrap());
        assert!(matroid_equivalent(&a, &m(&[&[1, 1], &[0, 1], &[1, 0]])).unwrap());
    }

    #[test]
    fn matroid_guard() {
        let big = BinMatrix::identity(9);
        assert!(matches!(matroid_equivalent(&big, &big), Err(Error::Guard { .. })));
    }

    #[test]
    fn from_rows_rejects_ragged_and_non_binary() {
        assert!(BinMatrix::from_rows(&[vec![1, 0], vec![1]]).is_err());
        assert!(BinMatrix::from_rows(&[vec![2u8]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = m(&[&[1, 0, 1], &[0, 1, 0]]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[1,0,1],[0,1,0]]");
        let b: BinMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<BinMatrix>("[[1,3]]").is_err());
    }

    #[test]
    fn wide_rows_cross_word_boundary() {
        let mut a = BinMatrix::zeros(3, 130);
        a.set(0, 129, true);
        a.set(1, 64, true);
        a.set(2, 0, true);
        a.set(2, 129, true);
        let v = BinVector::unit(130, 129);
        assert_eq!(a.mat_vec_mul(&v).unwrap().to_bits(), vec![1, 0, 1]);
        assert_eq!(a.rank(), 3);
        assert_eq!(a.transpose().transpose(), a);
    }
}
