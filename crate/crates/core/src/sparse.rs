//! Compressed-sparse-row complex matrices.
//!
//! Each matrix carries its conjugate-transpose companion so that both the
//! forward and the adjoint action are row-major sweeps; Lanczos on Gram
//! operators needs both directions at equal cost.

use crate::dense::{C64, CMat};

/// CSR matrix with an explicitly stored conjugate-transpose companion.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    // CSR of the conjugate transpose (ncols rows).
    adj_row_ptr: Vec<usize>,
    adj_col_idx: Vec<usize>,
    adj_values: Vec<C64>,
}

impl CsrMatrix {
    /// Build from unsorted triplets; duplicate entries are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, C64)],
    ) -> CsrMatrix {
        let mut entries: Vec<(usize, usize, C64)> = triplets.to_vec();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "triplet index out of bounds");
            match merged.last_mut() {
                Some((pi, pj, pv)) if *pi == i && *pj == j => *pv += v,
                _ => merged.push((i, j, v)),
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for (i, j, v) in merged {
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] = col_idx.len();
        }
        for i in 1..=nrows {
            if row_ptr[i] < row_ptr[i - 1] {
                row_ptr[i] = row_ptr[i - 1];
            }
        }
        let (adj_row_ptr, adj_col_idx, adj_values) =
            transpose_conj(nrows, ncols, &row_ptr, &col_idx, &values);
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            adj_row_ptr,
            adj_col_idx,
            adj_values,
        }
    }

    pub fn from_dense(a: &CMat, drop_tol: f64) -> CsrMatrix {
        let mut trip = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v.norm() > drop_tol {
                    trip.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(a.nrows(), a.ncols(), &trip)
    }

    pub fn identity(n: usize) -> CsrMatrix {
        let trip: Vec<(usize, usize, C64)> =
            (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        CsrMatrix::from_triplets(n, n, &trip)
    }

    pub fn scale(&self, a: C64) -> CsrMatrix {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= a;
        }
        for v in out.adj_values.iter_mut() {
            *v *= a.conj();
        }
        out
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// y = A x
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    /// y = A* x, using the stored companion.
    pub fn matvec_adj(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for i in 0..self.ncols {
            let mut s = C64::new(0.0, 0.0);
            for k in self.adj_row_ptr[i]..self.adj_row_ptr[i + 1] {
                s += self.adj_values[k] * x[self.adj_col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter_entries() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A - A*| entrywise (square matrices).
    pub fn hermitian_deviation(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut dev: f64 = 0.0;
        for i in 0..self.nrows {
            let mut ka = self.row_ptr[i];
            let mut kb = self.adj_row_ptr[i];
            let ea = self.row_ptr[i + 1];
            let eb = self.adj_row_ptr[i + 1];
            // Merge the two sorted rows of A and A*.
            while ka < ea || kb < eb {
                let ja = if ka < ea { self.col_idx[ka] } else { usize::MAX };
                let jb = if kb < eb {
                    self.adj_col_idx[kb]
                } else {
                    usize::MAX
                };
                if ja == jb {
                    dev = dev.max((self.values[ka] - self.adj_values[kb]).norm());
                    ka += 1;
                    kb += 1;
                } else if ja < jb {
                    dev = dev.max(self.values[ka].norm());
                    ka += 1;
                } else {
                    dev = dev.max(self.adj_values[kb].norm());
                    kb += 1;
                }
            }
        }
        dev
    }

    /// (A + A*)/2.
    pub fn hermitized(&self) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut trip = Vec::with_capacity(2 * self.nnz());
        for (i, j, v) in self.iter_entries() {
            trip.push((i, j, 0.5 * v));
            trip.push((j, i, 0.5 * v.conj()));
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }

    /// Lower and upper bandwidths (kl, ku).
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0usize;
        let mut ku = 0usize;
        for (i, j, _) in self.iter_entries() {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        (kl, ku)
    }

    /// A·B for sparse operands (used by generators, not by solvers).
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut trip = Vec::new();
        let mut acc: Vec<C64> = vec![C64::new(0.0, 0.0); other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let kk = self.col_idx[k];
                for l in other.row_ptr[kk]..other.row_ptr[kk + 1] {
                    let j = other.col_idx[l];
                    if acc[j] == C64::new(0.0, 0.0) {
                        touched.push(j);
                    }
                    acc[j] += a * other.values[l];
                }
            }
            for &j in &touched {
                trip.push((i, j, acc[j]));
                acc[j] = C64::new(0.0, 0.0);
            }
            touched.clear();
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, &trip)
    }

    /// A + c·B entrywise.
    pub fn add_scaled(&self, c: C64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut trip: Vec<(usize, usize, C64)> = self.iter_entries().collect();
        trip.extend(other.iter_entries().map(|(i, j, v)| (i, j, c * v)));
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }
}

fn transpose_conj(
    nrows: usize,
    ncols: usize,
    row_ptr: &[usize],
    col_idx: &[usize],
    values: &[C64],
) -> (Vec<usize>, Vec<usize>, Vec<C64>) {
    let nnz = values.len();
    let mut counts = vec![0usize; ncols + 1];
    for &j in col_idx {
        counts[j + 1] += 1;
    }
    for j in 0..ncols {
        counts[j + 1] += counts[j];
    }
    let adj_row_ptr = counts.clone();
    let mut pos = counts;
    let mut adj_col_idx = vec![0usize; nnz];
    let mut adj_values = vec![C64::new(0.0, 0.0); nnz];
    for i in 0..nrows {
        for k in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[k];
            let p = pos[j];
            adj_col_idx[p] = i;
            adj_values[p] = values[k].conj();
            pos[j] += 1;
        }
    }
    (adj_row_ptr, adj_col_idx, adj_values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, C64::new(1.0, 0.0)),
                (0, 2, C64::new(0.0, 2.0)),
                (1, 1, C64::new(-3.0, 0.0)),
                (2, 0, C64::new(0.0, -2.0)),
                (2, 2, C64::new(5.0, 0.0)),
            ],
        )
    }

    #[test]
    fn matvec_matches_dense() {
        let a = sample();
        let d = a.to_dense();
        let x = vec![C64::new(1.0, 1.0), C64::new(-2.0, 0.5), C64::new(0.0, 3.0)];
        let mut y1 = vec![C64::new(0.0, 0.0); 3];
        let mut y2 = vec![C64::new(0.0, 0.0); 3];
        a.matvec(&x, &mut y1);
        d.matvec(&x, &mut y2);
        for (u, v) in y1.iter().zip(y2.iter()) {
            assert!((u - v).norm() < 1e-14);
        }
        a.matvec_adj(&x, &mut y1);
        d.matvec_adj(&x, &mut y2);
        for (u, v) in y1.iter().zip(y2.iter()) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_deviation_detects() {
        let a = sample();
        // The sample is Hermitian by construction.
        assert!(a.hermitian_deviation() < 1e-15);
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, C64::new(1.0, 0.0))]);
        assert!((b.hermitian_deviation() - 1.0).abs() < 1e-15);
        let h = b.hermitized();
        assert!(h.hermitian_deviation() < 1e-15);
        assert!((h.to_dense()[(0, 1)] - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn duplicate_triplets_sum() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, C64::new(1.0, 0.0)), (0, 0, C64::new(2.0, 1.0))],
        );
        assert_eq!(a.nnz(), 1);
        assert!((a.to_dense()[(0, 0)] - C64::new(3.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn bandwidths_of_tridiag() {
        let t = CsrMatrix::from_triplets(
            4,
            4,
            &[
                (0, 0, C64::new(2.0, 0.0)),
                (0, 1, C64::new(1.0, 0.0)),
                (1, 0, C64::new(1.0, 0.0)),
                (3, 2, C64::new(1.0, 0.0)),
            ],
        );
        assert_eq!(t.bandwidths(), (1, 1));
    }
}
