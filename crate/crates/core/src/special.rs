//! Bessel functions: modified I₀, I₁, K₀, K₁ for the half-ellipse oracle and
//! integer-order J_m with the zeros of J_m′ for the disk Neumann spectrum.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;
const SERIES_EPS: f64 = 1e-17;
// Above this argument I₀, I₁ switch from the power series to the Hankel expansion.
const I_ASYMPTOTIC_FROM: f64 = 40.0;

/// Values of I₀, I₁, K₀, K₁ at a single positive argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub t: f64,
    pub i0: f64,
    pub i1: f64,
    pub k0: f64,
    pub k1: f64,
}

impl BesselEval {
    /// `t (I₀K₁ + I₁K₀)`, identically 1.
    pub fn wronskian(&self) -> f64 {
        self.t * (self.i0 * self.k1 + self.i1 * self.k0)
    }
}

/// Evaluates I₀, I₁, K₀, K₁ at `t > 0`.
///
/// K is taken from its logarithmic power series for `t ≤ 2` and from
/// Steed's evaluation of the second continued fraction above; I comes
/// from the (all-positive) power series, switching to the Hankel
/// expansion for large arguments.
pub fn bessel_ik(t: f64) -> Result<BesselEval> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::DomainError(t));
    }
    let (i0, i1) = if t <= I_ASYMPTOTIC_FROM { i_series(t) } else { i_asymptotic(t) };
    let (k0, k1) = if t <= 2.0 { k_series(t, i0, i1) } else { k_continued_fraction(t) };
    Ok(BesselEval { t, i0, i1, k0, k1 })
}

fn i_series(t: f64) -> (f64, f64) {
    let q = 0.25 * t * t;
    let mut term0 = 1.0;
    let mut term1 = 0.5 * t;
    let mut s0 = term0;
    let mut s1 = term1;
    let mut k = 1.0;
    loop {
        term0 *= q / (k * k);
        term1 *= q / (k * (k + 1.0));
        s0 += term0;
        s1 += term1;
        if term0 < SERIES_EPS * s0 && term1 < SERIES_EPS * s1 {
            break;
        }
        k += 1.0;
    }
    (s0, s1)
}

fn i_asymptotic(t: f64) -> (f64, f64) {
    // I_ν(t) ~ e^t / sqrt(2πt) Σ (-1)^k a_k(ν) / t^k, a_k = Π (4ν² - (2j-1)²) / (k! 8^k)
    let series = |mu: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= -(mu - odd * odd) / (kf * 8.0 * t);
            sum += term;
            if term.abs() < SERIES_EPS * sum.abs() {
                break;
            }
        }
        sum
    };
    let pre = t.exp() / (2.0 * PI * t).sqrt();
    (pre * series(0.0), pre * series(4.0))
}

fn k_series(t: f64, i0: f64, i1: f64) -> (f64, f64) {
    let q = 0.25 * t * t;
    let log_half = (0.5 * t).ln();
    // K₀ = -(ln(t/2) + γ) I₀ + Σ_{k≥1} H_k q^k / (k!)²
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut s0 = 0.0;
    // K₁ = 1/t + ln(t/2) I₁ - (t/4) Σ_{k≥0} (ψ(k+1) + ψ(k+2)) q^k / (k!(k+1)!)
    let mut term1 = 1.0;
    let mut s1 = 0.0;
    let mut k = 0.0;
    loop {
        let psi_a = harmonic - EULER_GAMMA;
        let psi_b = harmonic + 1.0 / (k + 1.0) - EULER_GAMMA;
        let c1 = (psi_a + psi_b) * term1;
        s1 += c1;
        if k > 0.0 {
            s0 += harmonic * term;
        }
        k += 1.0;
        harmonic += 1.0 / k;
        term *= q / (k * k);
        term1 *= q / (k * (k + 1.0));
        if k > 3.0 && term * harmonic < SERIES_EPS && term1 * harmonic < SERIES_EPS {
            break;
        }
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / t + log_half * i1 - 0.25 * t * s1;
    (k0, k1)
}

fn k_continued_fraction(x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-17;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..100_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `J_m(t)` for integer `m ≥ 0`, `t ≥ 0`, by Miller's downward recurrence
/// normalized with `J₀ + 2 Σ J_{2k} = 1`.
pub fn bessel_j(m: usize, t: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let top = m.max(t as usize) as f64;
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut value = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / t * cur - next;
        next = cur;
        cur = prev;
        // cur now holds the unnormalized J_{k-1}
        let idx = k - 1;
        if idx == m {
            value = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            value *= 1e-250;
        }
    }
    norm += cur;
    if m == start {
        value = 1e-30;
    }
    value / norm
}

/// `J_m′(t) = (J_{m-1}(t) - J_{m+1}(t)) / 2`, with `J₀′ = -J₁`.
pub fn bessel_j_prime(m: usize, t: f64) -> f64 {
    if m == 0 {
        -bessel_j(1, t)
    } else {
        0.5 * (bessel_j(m - 1, t) - bessel_j(m + 1, t))
    }
}

/// The k-th non-negative zero of `J_m′` (`k ≥ 1`).
///
/// For `m = 0` the trivial zero at the origin counts as the first one, so
/// `jprime_zero(0, 1) = 0` corresponds to the constant Neumann mode.
pub fn jprime_zero(m: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("zero index starts at 1"));
    }
    let mut remaining = k;
    if m == 0 {
        if k == 1 {
            return Ok(0.0);
        }
        remaining -= 1;
    }
    const STEP: f64 = 0.05;
    let mut lo = STEP;
    let mut flo = bessel_j_prime(m, lo);
    loop {
        let hi = lo + STEP;
        let fhi = bessel_j_prime(m, hi);
        if flo == 0.0 || flo.signum() != fhi.signum() {
            remaining -= 1;
            if remaining == 0 {
                return Ok(bisect(|t| bessel_j_prime(m, t), lo, hi, flo));
            }
        }
        lo = hi;
        flo = fhi;
        if lo > 1e4 {
            return Err(Error::InvalidArgument("zero index too large"));
        }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    if flo == 0.0 {
        return lo;
    }
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One eigenvalue cluster of the unit-disk Neumann Laplacian with unit weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskMode {
    pub lambda: f64,
    pub multiplicity: usize,
    /// Angular order `m` and radial index `k` of `J_m(j′_{m,k} r) e^{imθ}`.
    pub m: usize,
    pub k: usize,
}

/// The first `count` distinct Neumann eigenvalues of the unit disk,
/// `λ = (j′_{m,k})²`, with multiplicity 2 for `m ≥ 1`.
pub fn disk_neumann_spectrum(count: usize) -> Result<Vec<DiskMode>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1"));
    }
    let reach = count + 2;
    let mut modes = Vec::new();
    for m in 0..reach {
        for k in 1..=reach {
            let z = jprime_zero(m, k)?;
            modes.push(DiskMode { lambda: z * z, multiplicity: if m == 0 { 1 } else { 2 }, m, k });
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.m.cmp(&b.m)));
    modes.truncate(count);
    Ok(modes)
}

/// The first `n` disk eigenvalues repeated according to multiplicity.
pub fn disk_neumann_eigenvalues(n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for mode in disk_neumann_spectrum(n)? {
        for _ in 0..mode.multiplicity {
            out.push(mode.lambda);
        }
    }
    out.truncate(n);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn reference_values() {
        // values from the standard tables (A&S 9.8)
        let b = bessel_ik(1.0).unwrap();
        assert!(rel(b.i0, 1.266_065_877_752_008_4) < 1e-14);
        assert!(rel(b.i1, 0.565_159_103_992_485_0) < 1e-14);
        assert!(rel(b.k0, 0.421_024_438_240_708_3) < 1e-13);
        assert!(rel(b.k1, 0.601_907_230_197_234_6) < 1e-13);
        let b = bessel_ik(2.5).unwrap();
        assert!(rel(b.k0, 0.062_347_553_200_366_2) < 1e-12);
        assert!(rel(b.k1, 0.073_890_816_347_747_07) < 1e-12);
    }

    #[test]
    fn wronskian_at_one() {
        let b = bessel_ik(1.0).unwrap();
        assert!((b.wronskian() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_argument_behaviour() {
        for &t in &[1e-4, 1e-6, 1e-8] {
            let b = bessel_ik(t).unwrap();
            // K₀(t) = |log t| + O(1), I₀(t) = 1 + O(t²)
            assert!((b.k0 - t.ln().abs()).abs() < 0.2);
            assert!((b.i0 - 1.0).abs() < t);
            // K₁(t) = 1/t + (t/2) log t + O(t)
            assert!((b.k1 - 1.0 / t - 0.5 * t * t.ln()).abs() < t);
            // the log term is negative, so K₁ sits just below 1/t
            assert!(b.k1 < 1.0 / t);
            assert!((b.i1 / b.i0 - 0.5 * t).abs() < t * t);
        }
    }

    #[test]
    fn rejects_non_positive_arguments() {
        assert_eq!(bessel_ik(0.0), Err(Error::DomainError(0.0)));
        assert!(bessel_ik(-1.0).is_err());
    }

    #[test]
    fn bessel_j_reference() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j(2, 5.0) - 0.046_565_116_277_752_2).abs() < 1e-13);
        assert!((bessel_j(0, 10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-13);
    }

    #[test]
    fn derivative_zeros() {
        assert!((jprime_zero(1, 1).unwrap() - 1.841_183_781_340_659).abs() < 1e-11);
        assert!((jprime_zero(2, 1).unwrap() - 3.054_236_928_227_140).abs() < 1e-11);
        assert!((jprime_zero(0, 2).unwrap() - 3.831_705_970_207_512).abs() < 1e-11);
        assert_eq!(jprime_zero(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn disk_spectrum_layout() {
        let s = disk_neumann_spectrum(6).unwrap();
        assert_eq!((s[0].lambda, s[0].multiplicity), (0.0, 1));
        assert_eq!(s[1].multiplicity, 2);
        assert!((s[1].lambda - 3.389_957).abs() < 1e-5);
        assert!((s[2].lambda - 9.328_363).abs() < 1e-5);
        assert_eq!(s[3].multiplicity, 1);
        assert!((s[3].lambda - 14.681_971).abs() < 1e-5);
        let ev = disk_neumann_eigenvalues(6).unwrap();
        assert_eq!(ev.len(), 6);
        for w in s.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
    }
}
