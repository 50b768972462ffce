//! Compressed sparse rows, reverse Cuthill–McKee ordering and an envelope
//! (skyline) LDLᵀ factorization for symmetric matrices.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Triplet accumulator; duplicates are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    pub fn into_csr(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j as usize);
                values.push(v);
                row_ptr[i as usize + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// `self + s·other` for matrices on the same index set.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + other.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                b.add(i, j, v);
            }
            for (j, v) in other.row(i) {
                b.add(i, j, s * v);
            }
        }
        b.into_csr()
    }

    /// Largest `|A_ij − A_ji|` relative to the largest entry.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    // lowest-degree unvisited node seeds the next component
    while let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
        let start = pseudo_peripheral(a, seed, &degree, &mut level);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &CsrMatrix, root: usize, level: &mut [usize]) -> (usize, Vec<usize>) {
    let mut touched = Vec::new();
    let mut queue = VecDeque::from([root]);
    level[root] = 0;
    touched.push(root);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for (j, _) in a.row(v) {
            if level[j] == usize::MAX {
                level[j] = level[v] + 1;
                touched.push(j);
                queue.push_back(j);
            }
        }
    }
    (depth, touched)
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, degree: &[usize], level: &mut [usize]) -> usize {
    let mut root = seed;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (depth, touched) = bfs_levels(a, root, level);
        let candidate =
            touched.iter().copied().filter(|&v| level[v] == depth).min_by_key(|&v| (degree[v], v)).unwrap_or(root);
        for &v in &touched {
            level[v] = usize::MAX;
        }
        if depth <= best_depth && root != seed {
            break;
        }
        best_depth = depth;
        if candidate == root {
            break;
        }
        root = candidate;
    }
    root
}

/// Envelope LDLᵀ factorization of a symmetric matrix under a fill-reducing
/// permutation.
#[derive(Debug, Clone)]
pub struct SkylineLdlt {
    n: usize,
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineLdlt {
    /// Factors `A`, which must be symmetric and nonsingular in every
    /// leading block (SPD matrices always qualify).
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_permutation(a, perm)
    }

    pub fn factor_with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let mut inv_perm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv_perm[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv_perm[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; start[n]];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = inv_perm[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv_perm[old_j];
                if j < i {
                    lower[start[i] + j - first[i]] = v;
                } else if j == i {
                    diag[i] = v;
                }
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = first[i];
            let (done, row_i) = lower.split_at_mut(start[i]);
            // row_i[j - fi] currently holds A_ij; turn it into g_j = L_ij D_j
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let lj = &done[start[j] + k0 - fj..start[j] + j - fj];
                    let gi = &row_i[k0 - fi..j - fi];
                    let dot: f64 = lj.iter().zip(gi).map(|(a, b)| a * b).sum();
                    row_i[j - fi] -= dot;
                }
            }
            let mut d = diag[i];
            for j in fi..i {
                let g = row_i[j - fi];
                let l = g / diag[j];
                d -= g * l;
                row_i[j - fi] = l;
            }
            if !(d.abs() > 1e-14 * scale) || !d.is_finite() {
                return Err(Error::FactorizationFailure { pivot: perm[i] });
            }
            diag[i] = d;
        }
        Ok(Self { n, perm, inv_perm, first, start, lower, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    /// Number of negative pivots, equal to the number of negative
    /// eigenvalues of `A` (Sylvester's law of inertia).
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (l, v) in row.iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        for i in 0..n {
            out[i] = y[self.inv_perm[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn laplacian_grid(m: usize, shift: f64) -> CsrMatrix {
        let n = m * m;
        let mut b = TripletBuilder::new(n);
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                b.add(k, k, 4.0 + shift);
                if i + 1 < m {
                    b.add(k, k + m, -1.0);
                    b.add(k + m, k, -1.0);
                }
                if j + 1 < m {
                    b.add(k, k + 1, -1.0);
                    b.add(k + 1, k, -1.0);
                }
            }
        }
        b.into_csr()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 1, 1.0);
        b.add(0, 1, 2.0);
        b.add(1, 0, 3.0);
        let a = b.into_csr();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.relative_asymmetry(), 0.0);
    }

    #[test]
    fn rcm_is_a_permutation_and_narrows_the_profile() {
        let a = laplacian_grid(12, 0.0);
        let perm = reverse_cuthill_mckee(&a);
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..a.n).collect::<Vec<_>>());
        // scramble, then check RCM recovers a narrow envelope
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut shuffled: Vec<usize> = (0..a.n).collect();
        for i in (1..a.n).rev() {
            shuffled.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
        }
        let scrambled = SkylineLdlt::factor_with_permutation(&laplacian_grid(12, 0.1), shuffled).unwrap();
        let ordered = SkylineLdlt::factor(&laplacian_grid(12, 0.1)).unwrap();
        assert!(ordered.envelope_size() * 3 < scrambled.envelope_size());
    }

    #[test]
    fn solves_grid_system() {
        let a = laplacian_grid(15, 0.01);
        let f = SkylineLdlt::factor(&a).unwrap();
        let b: Vec<f64> = (0..a.n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        let err = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11);
        assert_eq!(f.negative_pivots(), 0);
    }

    #[test]
    fn inertia_counts_negative_eigenvalues() {
        // eigenvalues of the grid Laplacian are 4 - 2cos(iπ/(m+1)) - 2cos(jπ/(m+1))
        let m = 6;
        let shift = -1.0;
        let f = SkylineLdlt::factor(&laplacian_grid(m, shift)).unwrap();
        let mut expected = 0;
        for i in 1..=m {
            for j in 1..=m {
                let t = core::f64::consts::PI / (m + 1) as f64;
                if 4.0 - 2.0 * (i as f64 * t).cos() - 2.0 * (j as f64 * t).cos() + shift < 0.0 {
                    expected += 1;
                }
            }
        }
        assert_eq!(f.negative_pivots(), expected);
    }

    #[test]
    fn singular_matrix_fails() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        b.add(1, 1, 1.0);
        assert!(matches!(SkylineLdlt::factor(&b.into_csr()), Err(Error::FactorizationFailure { .. })));
    }

    proptest! {
        #[test]
        fn random_spd_solves(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 30;
            let mut b = TripletBuilder::new(n);
            let mut diag = vec![1.0; n];
            for _ in 0..60 {
                let i = (rng.next_u32() as usize) % n;
                let j = (rng.next_u32() as usize) % n;
                if i == j { continue; }
                let v = (rng.next_u32() as f64 / u32::MAX as f64) - 0.5;
                b.add(i, j, v);
                b.add(j, i, v);
                diag[i] += v.abs();
                diag[j] += v.abs();
            }
            for (i, d) in diag.iter().enumerate() {
                b.add(i, i, *d);
            }
            let a = b.into_csr();
            let f = SkylineLdlt::factor(&a).unwrap();
            let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 7.0).collect();
            let x = f.solve(&rhs);
            let r = a.mul_vec(&x);
            for (p, q) in r.iter().zip(&rhs) {
                prop_assert!((p - q).abs() < 1e-10);
            }
        }
    }
}
