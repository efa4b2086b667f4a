//! Dense complex matrices in column-major storage.
//!
//! This is the working currency of the reduced problems: everything here is
//! sized for matrices "on the scale of tens", with the occasional few-thousand
//! dense factorization. No BLAS is linked; the kernels are plain loops.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Column-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{}", self.nrows, self.ncols)?;
        let rmax = self.nrows.min(8);
        let cmax = self.ncols.min(8);
        for i in 0..rmax {
            for j in 0..cmax {
                let z = self[(i, j)];
                write!(f, " {:>+10.3e}{:>+10.3e}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows > 0 { rows[0].len() } else { 0 };
        CMat::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let d: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        CMat::diag(&d)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        self.col_mut(j).copy_from_slice(v);
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Columns `0..k` as a new matrix.
    pub fn take_cols(&self, k: usize) -> CMat {
        CMat {
            nrows: self.nrows,
            ncols: k,
            data: self.data[..k * self.nrows].to_vec(),
        }
    }

    pub fn push_col(&mut self, v: &[C64]) {
        assert_eq!(v.len(), self.nrows);
        self.data.extend_from_slice(v);
        self.ncols += 1;
    }

    pub fn hstack(blocks: &[&CMat]) -> CMat {
        assert!(!blocks.is_empty());
        let nrows = blocks[0].nrows;
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut data = Vec::with_capacity(nrows * ncols);
        for b in blocks {
            assert_eq!(b.nrows, nrows);
            data.extend_from_slice(&b.data);
        }
        CMat { nrows, ncols, data }
    }

    pub fn conj_transpose(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    /// y = A x
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.fill(C64::new(0.0, 0.0));
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.col(j);
            for i in 0..self.nrows {
                y[i] += col[i] * xj;
            }
        }
    }

    /// y = A* x
    pub fn matvec_adj(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let col = self.col(j);
            let mut s = C64::new(0.0, 0.0);
            for i in 0..self.nrows {
                s += col[i].conj() * x[i];
            }
            y[j] = s;
        }
    }

    /// A · B
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.ncols, other.nrows);
        let mut out = CMat::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let bcol = other.col(j);
            let ocol = out.col_mut(j);
            for k in 0..self.ncols {
                let b = bcol[k];
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                let acol = self.col(k);
                for i in 0..acol.len() {
                    ocol[i] += acol[i] * b;
                }
            }
        }
        out
    }

    /// A* · B
    pub fn adj_matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.nrows, other.nrows);
        let mut out = CMat::zeros(self.ncols, other.ncols);
        for j in 0..other.ncols {
            let bcol = other.col(j);
            for i in 0..self.ncols {
                let acol = self.col(i);
                let mut s = C64::new(0.0, 0.0);
                for k in 0..self.nrows {
                    s += acol[k].conj() * bcol[k];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    pub fn scale(&self, a: C64) -> CMat {
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    pub fn add_scaled(&mut self, a: C64, other: &CMat) {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * y;
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |A - A*| entrywise, as an absolute deviation.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for j in 0..self.ncols {
            for i in 0..=j {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// (A + A*)/2 in place.
    pub fn hermitize(&mut self) {
        assert!(self.is_square());
        for j in 0..self.ncols {
            for i in 0..j {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
            let d = self[(j, j)];
            self[(j, j)] = C64::new(d.re, 0.0);
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

#[inline]
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.len() {
        s += a[i].conj() * b[i];
    }
    s
}

#[inline]
pub fn vec_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[inline]
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += a * x[i];
    }
}

pub fn scale_in_place(a: f64, x: &mut [C64]) {
    for z in x.iter_mut() {
        *z *= a;
    }
}

/// Thin Householder QR of a tall matrix; returns (Q, R) with Q n×k
/// column-orthonormal and R k×k upper triangular, k = min(nrows, ncols).
pub fn thin_qr(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let m = a.ncols();
    let k = n.min(m);
    let mut r = a.clone();
    // Householder vectors stored per step.
    let mut vs: Vec<Vec<C64>> = Vec::with_capacity(k);
    for j in 0..k {
        // Build reflector for column j below the diagonal.
        let mut v: Vec<C64> = (j..n).map(|i| r[(i, j)]).collect();
        let norm = vec_norm(&v);
        if norm == 0.0 {
            vs.push(Vec::new());
            continue;
        }
        let phase = if v[0].norm() > 0.0 {
            v[0] / v[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm < f64::EPSILON * norm {
            vs.push(Vec::new());
            continue;
        }
        scale_in_place(1.0 / vnorm, &mut v);
        // Apply H = I - 2 v v* to the trailing columns of R.
        for c in j..m {
            let mut dot = C64::new(0.0, 0.0);
            for i in j..n {
                dot += v[i - j].conj() * r[(i, c)];
            }
            let f = 2.0 * dot;
            for i in j..n {
                let sub = f * v[i - j];
                r[(i, c)] -= sub;
            }
        }
        vs.push(v);
    }
    // Accumulate Q = H_0 H_1 ... applied to the first k columns of I.
    let mut q = CMat::zeros(n, k);
    for j in 0..k {
        q[(j, j)] = C64::new(1.0, 0.0);
    }
    for j in (0..k).rev() {
        let v = &vs[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..k {
            let mut dot = C64::new(0.0, 0.0);
            for i in j..n {
                dot += v[i - j].conj() * q[(i, c)];
            }
            let f = 2.0 * dot;
            for i in j..n {
                let sub = f * v[i - j];
                q[(i, c)] -= sub;
            }
        }
    }
    let mut rr = CMat::zeros(k, m);
    for j in 0..m {
        for i in 0..k.min(j + 1) {
            rr[(i, j)] = r[(i, j)];
        }
    }
    (q, rr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = CMat::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, j as f64));
        let id = CMat::eye(3);
        assert_eq!(a.matmul(&id), a);
        assert_eq!(id.matmul(&a), a);
    }

    #[test]
    fn adjoint_consistency() {
        let a = CMat::from_fn(4, 3, |i, j| C64::new(i as f64 - j as f64, (i * j) as f64));
        let x: Vec<C64> = (0..4).map(|i| C64::new(1.0 + i as f64, -0.5)).collect();
        let mut y1 = vec![C64::new(0.0, 0.0); 3];
        a.matvec_adj(&x, &mut y1);
        let at = a.conj_transpose();
        let mut y2 = vec![C64::new(0.0, 0.0); 3];
        at.matvec(&x, &mut y2);
        for (u, v) in y1.iter().zip(y2.iter()) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn qr_reconstructs() {
        let a = CMat::from_fn(8, 3, |i, j| {
            C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + j) % 3) as f64)
        });
        let (q, r) = thin_qr(&a);
        let qtq = q.adj_matmul(&q);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-13);
            }
        }
        let back = q.matmul(&r);
        for j in 0..3 {
            for i in 0..8 {
                assert!((back[(i, j)] - a[(i, j)]).norm() < 1e-12);
            }
        }
    }
}
