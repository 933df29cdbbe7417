//! Compressed sparse row storage and a direct LDLᵀ factorization for the
//! symmetric systems produced by the finite element assembly.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("system is singular: zero pivot at unknown {index} (pivot {pivot:e})")]
    Singular { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Square sparse matrix in CSR layout. Column indices are sorted within
/// each row and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets, summing
    /// duplicates in the order given.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps accumulation order deterministic
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseOperator {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored `(col, value)` pairs of a row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length must match the operator");
        (0..self.n)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `x · (A y)`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let triplets = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.n, triplets)
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| j == i || v == 0.0))
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &SparseOperator, scale: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            triplets.extend(self.row(i).map(|(j, v)| (i, j, v)));
            triplets.extend(other.row(i).map(|(j, v)| (i, j, scale * v)));
        }
        Self::from_triplets(self.n, triplets)
    }

    /// Principal submatrix on the unknowns in `keep`, in the given order.
    pub(crate) fn restrict(&self, keep: &[usize]) -> SparseOperator {
        let mut local = vec![usize::MAX; self.n];
        for (k, &g) in keep.iter().enumerate() {
            local[g] = k;
        }
        let triplets = keep
            .iter()
            .enumerate()
            .flat_map(|(k, &g)| {
                let local = &local;
                self.row(g)
                    .filter(move |&(j, _)| local[j] != usize::MAX)
                    .map(move |(j, v)| (k, local[j], v))
            })
            .collect();
        Self::from_triplets(keep.len(), triplets)
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseOperator) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited vertex remains");
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut next: Vec<usize> = a
                .row(i)
                .map(|(j, _)| j)
                .filter(|&j| !visited[j])
                .collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// LDLᵀ factorization in profile (envelope) storage under a fill-reducing
/// symmetric permutation. Only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl LdlFactor {
    pub fn new(a: &SparseOperator) -> Result<Self, LinalgError> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut row_start = vec![0; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; row_start[n]];
        let mut diag = vec![0.0; n];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn < new {
                    lower[row_start[new] + (jn - first[new])] = v;
                } else if jn == new {
                    diag[new] = v;
                }
            }
        }

        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = first[i];
            let ri = row_start[i];
            for j in fi..i {
                let fj = first[j];
                let rj = row_start[j];
                let lo = fi.max(fj);
                let mut s = lower[ri + (j - fi)];
                for k in lo..j {
                    s -= lower[ri + (k - fi)] * diag[k] * lower[rj + (k - fj)];
                }
                lower[ri + (j - fi)] = s / diag[j];
            }
            let mut d = diag[i];
            for k in fi..i {
                let l = lower[ri + (k - fi)];
                d -= l * l * diag[k];
            }
            if !(d.abs() > 1e-13 * scale) || !d.is_finite() {
                return Err(LinalgError::Singular {
                    index: perm[i],
                    pivot: d,
                });
            }
            diag[i] = d;
        }
        Ok(LdlFactor {
            n,
            perm,
            first,
            row_start,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let ri = self.row_start[i];
            let row = &self.lower[ri..ri + (i - fi)];
            y[i] = row.iter().zip(&y[fi..i]).fold(y[i], |s, (l, yk)| s - l * yk);
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= d;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let ri = self.row_start[i];
            let yi = y[i];
            let row = &self.lower[ri..ri + (i - fi)];
            for (yk, l) in y[fi..i].iter_mut().zip(row) {
                *yk -= l * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            // `+ 0.0` maps a signed zero to +0
            x[old] = y[new] + 0.0;
        }
        Ok(x)
    }
}

/// `‖b - A x‖₂ / max(‖b‖₂, tiny)`; zero when both vanish.
pub fn relative_residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        0.0
    } else {
        r / nb.max(f64::MIN_POSITIVE)
    }
}
