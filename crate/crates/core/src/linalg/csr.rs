//! Compressed sparse row matrices.
//!
//! The assembly pipeline produces symmetric operators (M, K, C, K_P) as
//! CSR matrices built from element triplets. Only the operations the
//! engine needs are provided: triplet construction with duplicate
//! summation, matrix-vector products, linear combinations over a merged
//! sparsity pattern, and entry iteration for conversion into banded
//! storage.

use crate::scalar::Scalar;

/// Sparse matrix in compressed sparse row format.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Build from (row, col, value) triplets; duplicates are summed.
    ///
    /// Panics if an index is out of bounds — triplets come from internal
    /// assembly loops, so an out-of-range index is a programming error.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, T)]) -> Self {
        for &(i, j, _) in triplets {
            assert!(
                i < n_rows && j < n_cols,
                "triplet index ({i},{j}) outside {n_rows}x{n_cols} matrix"
            );
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&t| (triplets[t].0, triplets[t].1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &t in &order {
            let (i, j, v) = triplets[t];
            if last == Some((i, j)) {
                *values.last_mut().expect("value exists for repeated key") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Zero matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Csr {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        Csr {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::from_real(<T::R as num_traits::One>::one()); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored value at (i, j), or zero.
    pub fn get(&self, i: usize, j: usize) -> T {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => T::zero(),
        }
    }

    /// Iterate stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// y = A x.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// y = A x, into a caller-provided buffer.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.n_rows, "matvec output dimension mismatch");
        for i in 0..self.n_rows {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// Multiply every stored value by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Linear combination Σ cᵢ Aᵢ over the merged sparsity pattern.
    ///
    /// Panics on dimension mismatch between the terms.
    pub fn linear_combination(terms: &[(T, &Csr<T>)]) -> Self {
        assert!(!terms.is_empty(), "linear combination of zero terms");
        let (n_rows, n_cols) = (terms[0].1.n_rows, terms[0].1.n_cols);
        let mut triplets = Vec::new();
        for &(c, a) in terms {
            assert_eq!((a.n_rows, a.n_cols), (n_rows, n_cols), "shape mismatch");
            for (i, j, v) in a.iter() {
                triplets.push((i, j, c * v));
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    /// Map stored values, keeping the pattern.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Csr<U> {
        Csr {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Largest |i − j| over stored entries (0 for diagonal/empty matrices).
    pub fn bandwidth(&self) -> usize {
        self.iter()
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    /// Maximum entry modulus (0 for an empty matrix).
    pub fn max_abs(&self) -> T::R {
        self.values
            .iter()
            .map(|v| v.modulus())
            .fold(<T::R as num_traits::Zero>::zero(), |a, b| if b > a { b } else { a })
    }

    /// Symmetry defect max|A − Aᵀ| relative to max|A|; 0 for empty matrices.
    pub fn symmetry_defect(&self) -> T::R {
        use num_traits::Zero;
        let scale = self.max_abs();
        if scale.is_zero() {
            return T::R::zero();
        }
        let mut worst = T::R::zero();
        for (i, j, v) in self.iter() {
            let d = (v - self.get(j, i)).modulus();
            if d > worst {
                worst = d;
            }
        }
        worst / scale
    }
}
