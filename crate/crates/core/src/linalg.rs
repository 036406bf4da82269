//! Banded LU with partial pivoting for the sparse systems built on grids.
//!
//! Rows are stored as dense windows `[start, start + len)` that grow with
//! fill-in, so matrices whose nonzeros cluster near the diagonal factor in
//! `O(n b²)` time for bandwidth `b`.

use crate::error::{Error, Result};

/// Sparse matrix given row by row as `(column, value)` pairs.
pub type SparseRows = Vec<Vec<(usize, f64)>>;

#[derive(Debug, Clone)]
struct Row {
    start: usize,
    vals: Vec<f64>,
}

impl Row {
    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    fn get(&self, c: usize) -> f64 {
        if c >= self.start && c < self.end() {
            self.vals[c - self.start]
        } else {
            0.0
        }
    }

    fn widen(&mut self, lo: usize, hi: usize) {
        if lo < self.start {
            let mut v = vec![0.0; self.start - lo];
            v.extend_from_slice(&self.vals);
            self.vals = v;
            self.start = lo;
        }
        if hi > self.end() {
            self.vals.resize(hi - self.start, 0.0);
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    rows: Vec<Row>,
    /// `perm[position] = original row`.
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &SparseRows) -> Result<Self> {
        let n = a.len();
        let mut kl = 0;
        let mut rows = Vec::with_capacity(n);
        for (i, r) in a.iter().enumerate() {
            let lo = r.iter().map(|e| e.0).min().unwrap_or(i).min(i);
            let hi = r.iter().map(|e| e.0).max().unwrap_or(i).max(i) + 1;
            if hi > n {
                return Err(Error::invalid("matrix column out of range"));
            }
            kl = kl.max(i - lo);
            let mut row = Row { start: lo, vals: vec![0.0; hi - lo] };
            for &(c, v) in r {
                row.vals[c - lo] += v;
            }
            rows.push(row);
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = rows.iter().flat_map(|r| r.vals.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = rows[j].get(j).abs();
            for r in j + 1..=last {
                let v = rows[r].get(j).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 1e-14 * scale) {
                return Err(Error::Singular { column: j });
            }
            if p != j {
                rows.swap(p, j);
                perm.swap(p, j);
            }
            let (head, tail) = rows.split_at_mut(j + 1);
            let pivot_row = &mut head[j];
            pivot_row.widen(j, j + 1);
            let piv = pivot_row.get(j);
            let pend = pivot_row.end();
            for row in tail.iter_mut().take(last - j) {
                let v = row.get(j);
                if v == 0.0 {
                    continue;
                }
                let m = v / piv;
                row.widen(j, pend);
                row.vals[j - row.start] = m;
                let off_r = row.start;
                let off_p = pivot_row.start;
                let dst = &mut row.vals[j + 1 - off_r..pend - off_r];
                let src = &pivot_row.vals[j + 1 - off_p..pend - off_p];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= m * s;
                }
            }
        }
        Ok(Self { n, rows, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::invalid("right-hand side length does not match matrix"));
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..self.n {
            let row = &self.rows[i];
            let mut s = y[i];
            for c in row.start..i.min(row.end()) {
                s -= row.vals[c - row.start] * y[c];
            }
            y[i] = s;
        }
        for i in (0..self.n).rev() {
            let row = &self.rows[i];
            let mut s = y[i];
            for c in i + 1..row.end() {
                s -= row.vals[c - row.start] * y[c];
            }
            y[i] = s / row.get(i);
        }
        Ok(y)
    }
}

/// `A x` for a sparse row matrix.
pub fn mat_vec(a: &SparseRows, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().map(|&(c, v)| v * x[c]).sum()).collect()
}
