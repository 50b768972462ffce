//! Smallest eigenpairs of `K x = λ M x` (K symmetric positive semidefinite,
//! M symmetric positive definite) by block shift-invert Lanczos with full
//! M-reorthogonalization and thick restarts, plus a dense path for small
//! systems.

use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dense::{generalized_sym_eigen, inverse_sqrt_spd, sym_eigen, DMat};
use crate::sparse::{CsrMatrix, SkylineLdlt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Number of eigenpairs wanted.
    pub k: usize,
    /// Shift; must lie below the spectrum and not be an eigenvalue.
    pub sigma: f64,
    pub seed: u64,
    /// Relative residual target for every returned pair.
    pub tol: f64,
    /// Largest relative residual accepted when the iteration budget runs out.
    pub accept: f64,
    pub block_size: usize,
    /// Systems up to this size are solved densely.
    pub dense_threshold: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            k: 6,
            sigma: -0.1,
            seed: 0x5eed,
            tol: 1e-12,
            accept: 1e-8,
            block_size: 4,
            dense_threshold: 400,
            max_basis: 96,
            max_restarts: 60,
        }
    }
}

/// Ascending eigenvalues with M-orthonormal eigenvectors and relative residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// Backward error of each pair, see [`relative_residual`].
    pub residuals: Vec<f64>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn inf_norm(a: &CsrMatrix) -> f64 {
    (0..a.n).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Normwise backward error `‖Kx − λMx‖ / ((‖K‖ + |λ|‖M‖)‖x‖)` of an
/// approximate eigenpair, with ∞-norms for the matrices.
pub fn relative_residual(k: &CsrMatrix, m: &CsrMatrix, lambda: f64, x: &[f64]) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    let denom = (inf_norm(k) + lambda.abs() * inf_norm(m)) * norm(x);
    if denom > 0.0 {
        r / denom
    } else {
        r
    }
}

/// Flips the sign so the entry of largest magnitude (first on ties) is positive.
pub fn normalize_sign(x: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &v in x.iter() {
        if v.abs() > best * (1.0 + 1e-9) {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// The `k` smallest eigenpairs of `K x = λ M x`.
pub fn solve_generalized(k: &CsrMatrix, m: &CsrMatrix, opts: &EigenOptions) -> Result<SpectralResult> {
    let n = k.n;
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidArgument("requested eigenpair count must be in 1..=n"));
    }
    let mut result = if n <= opts.dense_threshold {
        solve_dense(k, m, opts)?
    } else {
        let shifted = k.add_scaled(m, -opts.sigma);
        let factor = SkylineLdlt::factor(&shifted)?;
        if factor.negative_pivots() > 0 {
            return Err(Error::InvalidArgument("shift lies above the lowest eigenvalue"));
        }
        lanczos(k, m, &factor, opts)?
    };
    for x in &mut result.eigenvectors {
        normalize_sign(x);
    }
    Ok(result)
}

fn to_dense(a: &CsrMatrix) -> DMat {
    let mut d = DMat::zeros(a.n, a.n);
    for i in 0..a.n {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

fn solve_dense(k: &CsrMatrix, m: &CsrMatrix, opts: &EigenOptions) -> Result<SpectralResult> {
    let (vals, vecs) = generalized_sym_eigen(&to_dense(k), &to_dense(m))?;
    let mut out = SpectralResult { eigenvalues: Vec::new(), eigenvectors: Vec::new(), residuals: Vec::new() };
    for j in 0..opts.k {
        let x = vecs.col(j);
        out.residuals.push(relative_residual(k, m, vals[j], &x));
        out.eigenvalues.push(vals[j]);
        out.eigenvectors.push(x);
    }
    if out.max_residual() > opts.accept {
        return Err(Error::ConvergenceFailure { residual: out.max_residual() });
    }
    Ok(out)
}

struct Basis {
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    sv: Vec<Vec<f64>>,
    // projected operator Vᵀ M S V, stored row-major with stride `cap`
    h: Vec<f64>,
    cap: usize,
}

impl Basis {
    fn len(&self) -> usize {
        self.v.len()
    }

    fn h_at(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.cap + j]
    }
}

fn lanczos(k: &CsrMatrix, m: &CsrMatrix, factor: &SkylineLdlt, opts: &EigenOptions) -> Result<SpectralResult> {
    let n = k.n;
    let want = opts.k;
    let b = opts.block_size.max(1);
    let cap = opts.max_basis.max(want + 3 * b).min(n);
    let keep = (want + b + 2).min(cap.saturating_sub(b)).max(want);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect()
    };
    let apply_s = |x: &[f64]| -> Vec<f64> { factor.solve(&m.mul_vec(x)) };

    let mut basis = Basis { v: Vec::new(), mv: Vec::new(), sv: Vec::new(), h: vec![0.0; cap * cap], cap };
    // the first block is S applied to random vectors, which damps the upper spectrum
    let mut candidates: Vec<Vec<f64>> = (0..b).map(|_| apply_s(&random_vec(&mut rng))).collect();
    let mut best: Option<SpectralResult> = None;
    let mut restarts = 0;

    loop {
        let mut added = 0;
        for c in candidates.drain(..) {
            if basis.len() >= cap {
                break;
            }
            if let Some((v, mv)) = orthonormalize(&basis, c, m) {
                let sv = apply_s(&v);
                let idx = basis.len();
                basis.v.push(v);
                basis.mv.push(mv);
                basis.sv.push(sv);
                for i in 0..=idx {
                    let hij = dot(&basis.mv[i], &basis.sv[idx]);
                    basis.h[i * cap + idx] = hij;
                    basis.h[idx * cap + i] = hij;
                }
                added += 1;
            }
        }
        if added == 0 {
            // invariant subspace reached; extend with fresh directions
            if basis.len() >= n {
                break;
            }
            candidates = (0..b).map(|_| random_vec(&mut rng)).collect();
            continue;
        }
        let mlen = basis.len();
        if mlen >= want {
            let (theta, s) = ritz(&basis);
            let res = ritz_pairs(&basis, &theta, &s, want, k, m, opts.sigma);
            let converged = res.residuals.iter().all(|&r| r <= opts.tol);
            let better = best.as_ref().is_none_or(|b| res.max_residual() < b.max_residual());
            if better {
                best = Some(res);
            }
            if converged || mlen >= n {
                break;
            }
            if mlen + b > cap {
                if restarts >= opts.max_restarts {
                    break;
                }
                restarts += 1;
                thick_restart(&mut basis, &theta, &s, keep);
                // S applied to the wanted Ritz vectors spans the next Krylov block
                candidates = basis.sv.iter().take(want.max(b)).cloned().collect();
                continue;
            }
        }
        candidates = basis.sv[mlen - added..].to_vec();
    }
    let best = best.ok_or(Error::ConvergenceFailure { residual: f64::INFINITY })?;
    if best.max_residual() > opts.accept {
        return Err(Error::ConvergenceFailure { residual: best.max_residual() });
    }
    Ok(best)
}

/// Two-pass classical Gram–Schmidt in the M-inner product.
fn orthonormalize(basis: &Basis, mut c: Vec<f64>, m: &CsrMatrix) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut mc = m.mul_vec(&c);
    let initial = dot(&c, &mc).max(0.0).sqrt();
    if !(initial > 0.0) || !initial.is_finite() {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.mv.iter().map(|mv| dot(mv, &c)).collect();
        for (i, a) in coeffs.iter().enumerate() {
            axpy(&mut c, -a, &basis.v[i]);
        }
        mc = m.mul_vec(&c);
    }
    let nrm = dot(&c, &mc).max(0.0).sqrt();
    if nrm < 1e-8 * initial {
        return None;
    }
    let inv = 1.0 / nrm;
    c.iter_mut().for_each(|x| *x *= inv);
    mc.iter_mut().for_each(|x| *x *= inv);
    Some((c, mc))
}

/// Ritz values of the projected operator, descending, with their vectors.
fn ritz(basis: &Basis) -> (Vec<f64>, DMat) {
    let mlen = basis.len();
    let h = DMat::from_fn(mlen, mlen, |i, j| basis.h_at(i, j));
    let (vals, vecs) = sym_eigen(&h);
    let theta: Vec<f64> = vals.iter().rev().copied().collect();
    let s = DMat::from_fn(mlen, mlen, |i, j| vecs[(i, mlen - 1 - j)]);
    (theta, s)
}

fn combine(vs: &[Vec<f64>], s: &DMat, j: usize) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for (i, v) in vs.iter().enumerate() {
        let c = s[(i, j)];
        if c != 0.0 {
            axpy(&mut out, c, v);
        }
    }
    out
}

fn ritz_pairs(
    basis: &Basis,
    theta: &[f64],
    s: &DMat,
    want: usize,
    k: &CsrMatrix,
    m: &CsrMatrix,
    sigma: f64,
) -> SpectralResult {
    let mut out = SpectralResult { eigenvalues: Vec::new(), eigenvectors: Vec::new(), residuals: Vec::new() };
    for j in 0..want {
        let lambda = sigma + 1.0 / theta[j];
        let x = combine(&basis.v, s, j);
        out.residuals.push(relative_residual(k, m, lambda, &x));
        out.eigenvalues.push(lambda);
        out.eigenvectors.push(x);
    }
    out
}

fn thick_restart(basis: &mut Basis, theta: &[f64], s: &DMat, keep: usize) {
    let keep = keep.min(basis.len());
    let v: Vec<Vec<f64>> = (0..keep).map(|j| combine(&basis.v, s, j)).collect();
    let mv: Vec<Vec<f64>> = (0..keep).map(|j| combine(&basis.mv, s, j)).collect();
    let sv: Vec<Vec<f64>> = (0..keep).map(|j| combine(&basis.sv, s, j)).collect();
    basis.v = v;
    basis.mv = mv;
    basis.sv = sv;
    basis.h.iter_mut().for_each(|x| *x = 0.0);
    for j in 0..keep {
        basis.h[j * basis.cap + j] = theta[j];
    }
}

/// Groups ascending eigenvalues into clusters: consecutive values belong
/// together when their gap is not larger than `factor` times the typical
/// spread `abs_tol + rel_tol·|λ|`.
pub fn group_clusters(eigenvalues: &[f64], rel_tol: f64, abs_tol: f64) -> Vec<core::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        let split =
            i == eigenvalues.len() || eigenvalues[i] - eigenvalues[i - 1] > abs_tol + rel_tol * eigenvalues[i].abs();
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Rotates `vectors` (an M-orthonormal basis of one cluster) so that
/// vector `j` has maximal M-overlap with `reference[j]`: the rotation is
/// the orthogonal polar factor of the overlap matrix.
pub fn align_cluster(vectors: &[Vec<f64>], reference: &[Vec<f64>], m: &CsrMatrix) -> Result<Vec<Vec<f64>>> {
    let c = vectors.len();
    if reference.len() != c {
        return Err(Error::InvalidArgument("reference basis size differs from cluster size"));
    }
    let mr: Vec<Vec<f64>> = reference.iter().map(|r| m.mul_vec(r)).collect();
    let o = DMat::from_fn(c, c, |i, j| dot(&vectors[i], &mr[j]));
    let oto = o.transpose().matmul(&o);
    let q = o.matmul(&inverse_sqrt_spd(&oto)?);
    Ok((0..c).map(|j| combine(vectors, &q, j)).collect())
}
