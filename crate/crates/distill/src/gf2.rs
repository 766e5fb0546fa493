//! Bit-packed linear algebra over GF(2).
//!
//! Every vector in this crate fits in one machine word: tile supports live in
//! dimension at most 16 and measurement outcome vectors in dimension at most
//! 64. A [`BitVec`] is therefore a single `u64` plus an explicit length, and
//! reduction against an [`ImageBasis`] is a handful of word XORs.
//!
//! Pivoting is always lowest-index-first so that ranks, residues, and
//! solutions are reproducible across platforms and row orderings.

use std::fmt;

/// Dense GF(2) vector of explicit length `len <= 64`. Bits past `len` are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVec {
    bits: u64,
    len: u32,
}

impl BitVec {
    pub const MAX_LEN: usize = 64;

    pub fn zeros(len: usize) -> Self {
        assert!(len <= Self::MAX_LEN, "BitVec length {len} exceeds 64");
        BitVec {
            bits: 0,
            len: len as u32,
        }
    }

    /// Builds a vector from raw bits, masking off anything past `len`.
    pub fn from_bits(len: usize, bits: u64) -> Self {
        let mut v = Self::zeros(len);
        v.bits = bits & mask(len);
        v
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len(),
            "bit index {i} out of range for length {}",
            self.len
        );
        self.bits >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len(),
            "bit index {i} out of range for length {}",
            self.len
        );
        if value {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len(),
            "bit index {i} out of range for length {}",
            self.len
        );
        self.bits ^= 1 << i;
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        self.bits ^= other.bits;
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut v = *self;
        v.xor_assign(other);
        v
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "length mismatch in and");
        BitVec {
            bits: self.bits & other.bits,
            len: self.len,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Parity of the overlap with `other`; `true` means odd overlap
    /// (the corresponding Pauli products anticommute).
    pub fn overlap_parity(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in overlap");
        (self.bits & other.bits).count_ones() & 1 == 1
    }

    pub fn parity(&self) -> bool {
        self.bits.count_ones() & 1 == 1
    }

    pub fn disjoint_with(&self, other: &BitVec) -> bool {
        self.bits & other.bits == 0
    }

    /// Index of the lowest set bit, if any.
    pub fn lowest_set(&self) -> Option<usize> {
        if self.bits == 0 {
            None
        } else {
            Some(self.bits.trailing_zeros() as usize)
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        let mut bits = self.bits;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn as_u64(&self) -> u64 {
        self.bits
    }

    /// Restriction to the first `new_len` coordinates.
    pub fn truncate(&self, new_len: usize) -> BitVec {
        BitVec::from_bits(new_len, self.bits)
    }
}

fn mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec{{")?;
        for (n, i) in self.iter_ones().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.len)
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// Row-major GF(2) matrix. All rows share `n_cols`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: Vec<BitVec>,
    n_cols: usize,
}

impl Gf2Matrix {
    pub fn new(n_cols: usize) -> Self {
        assert!(n_cols <= BitVec::MAX_LEN);
        Gf2Matrix {
            rows: Vec::new(),
            n_cols,
        }
    }

    pub fn from_rows(n_cols: usize, rows: Vec<BitVec>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), n_cols, "row length differs from n_cols");
        }
        Gf2Matrix { rows, n_cols }
    }

    pub fn push_row(&mut self, row: BitVec) {
        assert_eq!(row.len(), self.n_cols, "row length differs from n_cols");
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// Column `j` as a vector over the row index space (requires `n_rows <= 64`).
    pub fn column(&self, j: usize) -> BitVec {
        assert!(j < self.n_cols);
        let mut c = BitVec::zeros(self.n_rows());
        for (i, r) in self.rows.iter().enumerate() {
            if r.get(j) {
                c.set(i, true);
            }
        }
        c
    }

    pub fn columns(&self) -> impl Iterator<Item = BitVec> + '_ {
        (0..self.n_cols).map(|j| self.column(j))
    }

    /// GF(2) rank, invariant under row permutation.
    pub fn rank(&self) -> usize {
        let mut basis = ImageBasis::new(self.n_cols);
        for r in &self.rows {
            basis.insert(*r);
        }
        basis.rank()
    }

    /// Any `x` with `self * x = rhs`, if the system is consistent.
    ///
    /// Free variables are set to zero and pivots are chosen lowest-index
    /// first, so the returned solution is deterministic for a given row
    /// order and in fact for any row order (the reduced system is unique).
    pub fn solve(&self, rhs: &BitVec) -> Option<BitVec> {
        assert_eq!(rhs.len(), self.n_rows(), "rhs length must equal row count");
        // Augmented reduction: carry the rhs bit alongside each row.
        let mut echelon: Vec<(BitVec, bool)> = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let mut r = *row;
            let mut b = rhs.get(i);
            for (er, eb) in &echelon {
                if let Some(p) = er.lowest_set() {
                    if r.get(p) {
                        r.xor_assign(er);
                        b ^= eb;
                    }
                }
            }
            if r.is_zero() {
                if b {
                    return None;
                }
            } else {
                // Back-eliminate to keep the basis fully reduced.
                let p = r.lowest_set().unwrap();
                for (er, eb) in echelon.iter_mut() {
                    if er.get(p) {
                        er.xor_assign(&r);
                        *eb ^= b;
                    }
                }
                echelon.push((r, b));
                echelon.sort_by_key(|(er, _)| er.lowest_set());
            }
        }
        let mut x = BitVec::zeros(self.n_cols);
        for (er, eb) in &echelon {
            if *eb {
                x.set(er.lowest_set().unwrap(), true);
            }
        }
        Some(x)
    }
}

/// Reduced row-echelon basis for the span of a set of vectors.
///
/// Supports O(rank) membership queries and residue computation. Rows are kept
/// fully reduced (each pivot column is zero in every other row), so
/// [`ImageBasis::reduce`] is a linear map.
#[derive(Clone, Debug)]
pub struct ImageBasis {
    rows: Vec<BitVec>,
    pivots: Vec<usize>,
    ambient_len: usize,
}

impl ImageBasis {
    pub fn new(ambient_len: usize) -> Self {
        assert!(ambient_len <= BitVec::MAX_LEN);
        ImageBasis {
            rows: Vec::new(),
            pivots: Vec::new(),
            ambient_len,
        }
    }

    pub fn from_spanning<I: IntoIterator<Item = BitVec>>(ambient_len: usize, vectors: I) -> Self {
        let mut basis = Self::new(ambient_len);
        for v in vectors {
            basis.insert(v);
        }
        basis
    }

    /// Inserts `v` into the span. Returns `true` if the rank grew.
    pub fn insert(&mut self, v: BitVec) -> bool {
        let r = self.reduce(&v);
        match r.lowest_set() {
            None => false,
            Some(p) => {
                for row in self.rows.iter_mut() {
                    if row.get(p) {
                        row.xor_assign(&r);
                    }
                }
                let at = self
                    .pivots
                    .iter()
                    .position(|&q| q > p)
                    .unwrap_or(self.pivots.len());
                self.rows.insert(at, r);
                self.pivots.insert(at, p);
                true
            }
        }
    }

    /// Residue of `v` modulo the span; zero iff `v` is in the span.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.ambient_len, "length mismatch in reduce");
        let mut r = *v;
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_assign(row);
            }
        }
        r
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_len(&self) -> usize {
        self.ambient_len
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
}
