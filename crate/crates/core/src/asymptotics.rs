//! Pole sweeps toward the boundary and the logarithmic laws they follow.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dense::{solve_spd, DMat};
use crate::energy::{cluster_gap_ratio, reduced_system, CrackSetup, EnergyReport, CLUSTER_GAP_RATIO};
use crate::fem::{assemble, solve_generalized_eigs};
use crate::geometry::{project_to_boundary, Domain, Point, PoleConfig, WeightSpec};
use crate::mesh::{build_plain_mesh, EdgeTag, MeshOptions, SlitMesh};
use crate::{Error, Result};

/// Mesh size as a function of the pole distance: `h = min(h₀, d/ratio)`
/// with tip grading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPolicy {
    pub h0: f64,
    pub ratio: f64,
    pub grading: f64,
    pub h_far: f64,
}

impl Default for HPolicy {
    fn default() -> Self {
        Self { h0: 0.05, ratio: 6.0, grading: 2.0, h_far: 0.05 }
    }
}

impl HPolicy {
    pub fn mesh_options(&self, d: f64) -> MeshOptions {
        let h = self.h0.min(d / self.ratio);
        MeshOptions::graded(h, self.grading, self.h_far.max(h))
    }
}

/// 1-based first index and size of an eigenvalue cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cluster {
    pub n: usize,
    pub m: usize,
}

/// The parts of an [`EnergyReport`] worth keeping per sweep step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySummary {
    pub e: f64,
    pub e_cross: f64,
    pub l2_v: f64,
    pub h1_v: f64,
    pub l_norm: f64,
    pub residual: f64,
}

impl From<&EnergyReport> for EnergySummary {
    fn from(r: &EnergyReport) -> Self {
        Self { e: r.e, e_cross: r.e_cross, l2_v: r.l2_v, h1_v: r.h1_v, l_norm: r.l_norm, residual: r.residual }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub d: f64,
    pub pole: PoleConfig,
    pub h: f64,
    pub n_dofs: usize,
    /// Plain eigenvalues on the companion mesh of this step.
    pub lambda_plain: Vec<f64>,
    /// `λ_k^a` in ascending (min-max) order.
    pub lambda_crack: Vec<f64>,
    /// `λ_k^a − λ_k` against the same-mesh plain values.
    pub delta: Vec<f64>,
    pub energies: Vec<EnergySummary>,
    pub mu: Vec<f64>,
    pub tau: f64,
    pub r_asymmetry: f64,
    pub r_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub a0: Point,
    pub direction: Point,
    pub k: usize,
    pub cluster: Option<Cluster>,
    /// Plain spectrum on a uniform mesh of size `h₀`.
    pub limit: Vec<f64>,
    pub steps: Vec<SweepStep>,
}

impl SweepResult {
    pub fn d_values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.d).collect()
    }

    /// `λ_k^a − λ_k` along the sweep, `k` 1-based.
    pub fn branch_delta(&self, k: usize) -> Vec<f64> {
        self.steps.iter().map(|s| s.delta[k - 1]).collect()
    }
}

/// Crack and plain spectra for one pole, plus the reduced system of the
/// cluster if one is given.
pub fn sweep_step(
    domain: &Domain,
    p: &WeightSpec,
    pole: &PoleConfig,
    k: usize,
    cluster: Option<Cluster>,
    opts: &MeshOptions,
) -> Result<SweepStep> {
    let setup = CrackSetup::new(domain, pole, p, opts, k)?;
    let crack = solve_generalized_eigs(&setup.slit, k, -0.1)?;
    let lambda_plain = setup.plain_spectrum.eigenvalues.clone();
    let lambda_crack = crack.eigenvalues;
    let delta = lambda_crack.iter().zip(&lambda_plain).map(|(a, b)| a - b).collect();
    let (energies, mu, tau, r_asymmetry, r_norm) = match cluster {
        Some(c) => {
            let red = reduced_system(&setup, c.n, c.m)?;
            (
                red.energies.iter().map(EnergySummary::from).collect(),
                red.mu.clone(),
                red.tau,
                red.r_asymmetry(),
                red.r.norm(),
            )
        }
        None => (Vec::new(), Vec::new(), 0.0, 0.0, 0.0),
    };
    Ok(SweepStep {
        d: pole.d_a,
        pole: *pole,
        h: opts.h,
        n_dofs: setup.mesh.n_dofs(),
        lambda_plain,
        lambda_crack,
        delta,
        energies,
        mu,
        tau,
        r_asymmetry,
        r_norm,
    })
}

/// Poles `a = a₀ + d·direction` for each `d`, checked against the domain.
pub fn sweep_poles(domain: &Domain, a0: Point, direction: Point, d_list: &[f64]) -> Result<Vec<PoleConfig>> {
    if domain.boundary_distance(a0) > 1e-9 {
        return Err(Error::InvalidArgument("a0 must lie on the boundary"));
    }
    let len = direction.norm();
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::InvalidArgument("direction must be non-zero"));
    }
    let dir = direction * (1.0 / len);
    if d_list.is_empty() || d_list.windows(2).any(|w| !(w[1] < w[0])) || d_list.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument("d list must be positive and strictly decreasing"));
    }
    d_list.iter().map(|&d| project_to_boundary(domain, a0 + dir * d)).collect()
}

/// Runs a sweep of `d_list` (strictly decreasing), tracking the first `k`
/// eigenvalues.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    domain: &Domain,
    p: &WeightSpec,
    a0: Point,
    direction: Point,
    d_list: &[f64],
    k: usize,
    cluster: Option<Cluster>,
    policy: &HPolicy,
) -> Result<SweepResult> {
    let poles = sweep_poles(domain, a0, direction, d_list)?;
    let mut steps = Vec::with_capacity(poles.len());
    for (pole, &d) in poles.iter().zip(d_list) {
        steps.push(sweep_step(domain, p, pole, k, cluster, &policy.mesh_options(d))?);
    }
    let limit = plain_spectrum(domain, p, k, policy.h0)?;
    Ok(SweepResult { a0, direction: direction * (1.0 / direction.norm()), k, cluster, limit, steps })
}

pub fn plain_spectrum(domain: &Domain, p: &WeightSpec, k: usize, h: f64) -> Result<Vec<f64>> {
    let mesh = build_plain_mesh(domain, &MeshOptions::uniform(h))?;
    Ok(solve_generalized_eigs(&assemble(&mesh, p)?, k, -0.1)?.eigenvalues)
}

/// Plain eigenvalues on a uniform mesh of size `h`, on its uniform
/// refinement, and extrapolated as `(4·fine − coarse)/3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonSpectrum {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub extrapolated: Vec<f64>,
}

pub fn richardson_spectrum(domain: &Domain, p: &WeightSpec, k: usize, h: f64) -> Result<RichardsonSpectrum> {
    let coarse_mesh = build_plain_mesh(domain, &MeshOptions::uniform(h))?;
    let fine_mesh = coarse_mesh.refine_uniform(domain)?;
    let coarse = solve_generalized_eigs(&assemble(&coarse_mesh, p)?, k, -0.1)?.eigenvalues;
    let fine = solve_generalized_eigs(&assemble(&fine_mesh, p)?, k, -0.1)?.eigenvalues;
    let extrapolated = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    Ok(RichardsonSpectrum { coarse, fine, extrapolated })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    /// Coefficient of `1/|log d|`.
    pub c1: f64,
    /// Coefficient of `1/|log d|²`.
    pub c2: f64,
    /// Root mean square of the fit residuals.
    pub residual: f64,
    /// Standard error of `c1`, zero for an exact fit.
    pub c1_stderr: f64,
    /// Smallest and largest `d` used.
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least squares `Δλ ≈ c₁x + c₂x²` in `x = 1/|log d|`.
pub fn fit_log_law(samples: &[(f64, f64)]) -> Result<LogFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: samples.len() });
    }
    if samples.iter().any(|&(d, y)| !(d > 0.0 && d < 1.0) || !y.is_finite()) {
        return Err(Error::InvalidArgument("fit needs 0 < d < 1 and finite values"));
    }
    let xs: Vec<f64> = samples.iter().map(|&(d, _)| 1.0 / d.ln().abs()).collect();
    let mut ata = DMat::zeros(2, 2);
    let mut atb = DMat::zeros(2, 1);
    for (x, &(_, y)) in xs.iter().zip(samples) {
        let row = [*x, x * x];
        for i in 0..2 {
            atb[(i, 0)] += row[i] * y;
            for j in 0..2 {
                ata[(i, j)] += row[i] * row[j];
            }
        }
    }
    let coef = solve_spd(&ata, &atb)?;
    let (c1, c2) = (coef[(0, 0)], coef[(1, 0)]);
    let rss: f64 = xs.iter().zip(samples).map(|(x, &(_, y))| (y - c1 * x - c2 * x * x).powi(2)).sum();
    let n = samples.len() as f64;
    let det = ata[(0, 0)] * ata[(1, 1)] - ata[(0, 1)] * ata[(1, 0)];
    let sigma2 = rss / (n - 2.0);
    let c1_stderr = (sigma2 * ata[(1, 1)] / det).max(0.0).sqrt();
    let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(d, _)| (lo.min(d), hi.max(d)));
    Ok(LogFit { c1, c2, residual: (rss / n).sqrt(), c1_stderr, window: (lo, hi), samples: samples.len() })
}

/// Value of a P1 function at a boundary point, read off the nearest
/// boundary edge.
pub fn boundary_trace(mesh: &SlitMesh, u: &[f64], x: Point) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for e in mesh.edges.iter().filter(|e| e.tag == EdgeTag::Outer) {
        let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let ab = b - a;
        let t = ((x - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
        let dist = a.lerp(b, t).dist(x);
        if best.is_none_or(|(bd, _)| dist < bd) {
            best = Some((dist, (1.0 - t) * u[e.v[0]] + t * u[e.v[1]]));
        }
    }
    best.map(|(_, v)| v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingPrediction {
    pub coarse: f64,
    pub fine: f64,
    /// `(4·fine − coarse)/3`.
    pub value: f64,
}

/// `π Σ u_i(a₀)²` over an `L²(Ω,p)`-orthonormal basis of the cluster,
/// from plain meshes of size `h` and `h/2`.
pub fn predict_splitting_constant(
    domain: &Domain,
    p: &WeightSpec,
    a0: Point,
    cluster: Cluster,
    h: f64,
) -> Result<SplittingPrediction> {
    if domain.boundary_distance(a0) > 1e-9 {
        return Err(Error::InvalidArgument("a0 must lie on the boundary"));
    }
    let coarse_mesh = build_plain_mesh(domain, &MeshOptions::uniform(h))?;
    let fine_mesh = coarse_mesh.refine_uniform(domain)?;
    let mut vals = [0.0; 2];
    for (i, mesh) in [&coarse_mesh, &fine_mesh].into_iter().enumerate() {
        let spec = solve_generalized_eigs(&assemble(mesh, p)?, cluster.n + cluster.m, -0.1)?;
        cluster_gap_ratio(&spec.eigenvalues, cluster.n, cluster.m)?;
        let mut s = 0.0;
        for u in &spec.eigenvectors[cluster.n - 1..cluster.n + cluster.m - 1] {
            s += boundary_trace(mesh, u, a0).ok_or(Error::MeshMismatch)?.powi(2);
        }
        vals[i] = PI * s;
    }
    Ok(SplittingPrediction { coarse: vals[0], fine: vals[1], value: (4.0 * vals[1] - vals[0]) / 3.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingReport {
    pub sweep: SweepResult,
    pub prediction: SplittingPrediction,
    pub top_fit: LogFit,
    /// `|c₁ − predicted|/predicted`.
    pub c1_rel_err: f64,
    /// `|Δλ|·|log d|` along the sweep for each lower branch.
    pub lower_products: Vec<Vec<f64>>,
    /// Every lower branch strictly decreasing over the last three points.
    pub lower_decreasing: bool,
    /// Gap-to-spread ratio of the top branch at the smallest `d`.
    pub top_gap_ratio: f64,
    pub top_simple: bool,
    /// `c1` with the largest-`d` sample dropped, when enough samples remain.
    pub c1_without_largest: Option<f64>,
}

/// Fits the top branch of the cluster and compares with the
/// predicted constant.
#[allow(clippy::too_many_arguments)]
pub fn verify_splitting(
    domain: &Domain,
    p: &WeightSpec,
    a0: Point,
    direction: Point,
    cluster: Cluster,
    d_list: &[f64],
    policy: &HPolicy,
    h_predict: f64,
) -> Result<SplittingReport> {
    if cluster.m < 2 {
        return Err(Error::InvalidArgument("splitting needs a cluster of multiplicity at least 2"));
    }
    let k = cluster.n + cluster.m;
    let sweep = run_sweep(domain, p, a0, direction, d_list, k, Some(cluster), policy)?;
    let prediction = predict_splitting_constant(domain, p, a0, cluster, h_predict)?;
    splitting_report(sweep, prediction)
}

/// The analysis half of [`verify_splitting`] for an existing sweep.
pub fn splitting_report(sweep: SweepResult, prediction: SplittingPrediction) -> Result<SplittingReport> {
    let cluster = sweep.cluster.ok_or(Error::InvalidArgument("sweep has no cluster"))?;
    let top = cluster.n + cluster.m - 1;
    let ds = sweep.d_values();
    let samples: Vec<(f64, f64)> = ds.iter().copied().zip(sweep.branch_delta(top)).collect();
    let top_fit = fit_log_law(&samples)?;
    let c1_without_largest = if samples.len() > 4 { Some(fit_log_law(&samples[1..])?.c1) } else { None };
    let lower_products: Vec<Vec<f64>> = (cluster.n..top)
        .map(|b| sweep.branch_delta(b).iter().zip(&ds).map(|(x, d)| x.abs() * d.ln().abs()).collect())
        .collect();
    let lower_decreasing = lower_products.iter().all(|v| strictly_decreasing_tail(v, 3));
    let last = sweep.steps.last().ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
    let top_gap_ratio = gap_ratio_single(&last.lambda_crack, top, cluster.n);
    Ok(SplittingReport {
        c1_rel_err: (top_fit.c1 - prediction.value).abs() / prediction.value.abs(),
        sweep,
        prediction,
        top_fit,
        lower_products,
        lower_decreasing,
        top_simple: top_gap_ratio > CLUSTER_GAP_RATIO,
        top_gap_ratio,
        c1_without_largest,
    })
}

/// Gap from eigenvalue `j` (1-based) to its neighbours over the spread of
/// the remaining cluster members `n..j−1`, floored as in [`cluster_gap_ratio`].
fn gap_ratio_single(eigs: &[f64], j: usize, n: usize) -> f64 {
    if j == 0 || j >= eigs.len() {
        return 0.0;
    }
    let lower = &eigs[n - 1..j - 1];
    let spread = lower.last().zip(lower.first()).map_or(0.0, |(a, b)| a - b);
    let scale = eigs[j - 1].abs().max(1.0);
    let gap = (eigs[j - 1] - eigs[j - 2]).min(eigs[j] - eigs[j - 1]);
    gap / spread.max(crate::energy::CLUSTER_SPREAD_FLOOR * scale)
}

pub fn strictly_decreasing_tail(v: &[f64], n: usize) -> bool {
    v.len() >= n && v[v.len() - n..].windows(2).all(|w| w[1] < w[0])
}

pub fn non_increasing_tail(v: &[f64], n: usize) -> bool {
    v.len() >= n && v[v.len() - n..].windows(2).all(|w| w[1] <= w[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchStability {
    pub k: usize,
    pub abs_delta: Vec<f64>,
    /// `|Δλ_k|·√|log d|`.
    pub products: Vec<f64>,
    pub monotone: bool,
    pub envelope_non_increasing: bool,
}

/// Per-branch shifts and rough-bound envelopes along a sweep, for `k = 1..=k_max`.
pub fn stability_report(sweep: &SweepResult, k_max: usize) -> Vec<BranchStability> {
    let ds = sweep.d_values();
    (1..=k_max.min(sweep.k))
        .map(|k| {
            let abs_delta: Vec<f64> = sweep.branch_delta(k).iter().map(|x| x.abs()).collect();
            let products: Vec<f64> = abs_delta.iter().zip(&ds).map(|(x, d)| x * d.ln().abs().sqrt()).collect();
            BranchStability {
                k,
                monotone: strictly_decreasing_tail(&abs_delta, abs_delta.len()),
                envelope_non_increasing: non_increasing_tail(&products, 3),
                abs_delta,
                products,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleExpansionRow {
    pub d: f64,
    pub delta: f64,
    pub two_e: f64,
    /// `|Δλ − 2E|/|2E|`.
    pub ratio: f64,
    pub l2_v_sq: f64,
}

/// `Δλ` against `2E` along a sweep whose cluster is a single eigenvalue.
pub fn simple_expansion_rows(sweep: &SweepResult) -> Result<Vec<SimpleExpansionRow>> {
    let c = sweep.cluster.filter(|c| c.m == 1).ok_or(Error::InvalidArgument("needs a simple eigenvalue"))?;
    Ok(sweep
        .steps
        .iter()
        .map(|s| {
            let delta = s.delta[c.n - 1];
            let two_e = 2.0 * s.energies[0].e;
            SimpleExpansionRow {
                d: s.d,
                delta,
                two_e,
                ratio: (delta - two_e).abs() / two_e.abs(),
                l2_v_sq: s.energies[0].l2_v.powi(2),
            }
        })
        .collect())
}

/// `(log-law samples)` helper: `(d, y)` pairs with `y = f(d)`.
pub fn samples_from(ds: &[f64], f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    ds.iter().map(|&d| (d, f(d))).collect()
}

/// Geometric grid `start, start·ratio, …` with `count` entries.
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    let mut out = vec![start; count];
    for i in 1..count {
        out[i] = out[i - 1] * ratio;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};
    use crate::special::{bessel_j, jprime_zero};
    use proptest::prelude::*;

    #[test]
    fn exact_models_are_recovered() {
        let ds = geometric_grid(0.2, 0.5, 5);
        let f = fit_log_law(&samples_from(&ds, |d| 2.0 / d.ln().abs())).unwrap();
        assert!((f.c1 - 2.0).abs() < 1e-12 && f.c2.abs() < 1e-11 && f.residual < 1e-12);
        let f = fit_log_law(&samples_from(&ds, |d| {
            let x = 1.0 / d.ln().abs();
            x + 3.0 * x * x
        }))
        .unwrap();
        assert!((f.c1 - 1.0).abs() < 1e-10 && (f.c2 - 3.0).abs() < 1e-9);
        assert_eq!(f.window, (0.2 * 0.5f64.powi(4), 0.2));
    }

    #[test]
    fn too_few_samples() {
        let s = [(0.1, 1.0), (0.05, 0.8), (0.02, 0.6)];
        assert_eq!(fit_log_law(&s), Err(Error::InsufficientSamples { needed: 4, got: 3 }));
        assert!(fit_log_law(&[(0.1, 1.0), (1.5, 0.8), (0.02, 0.6), (0.01, 0.5)]).is_err());
    }

    proptest! {
        #[test]
        fn dropping_a_sample_from_an_exact_fit(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, n in 5usize..8) {
            let ds = geometric_grid(0.3, 0.5, n);
            let s = samples_from(&ds, |d| { let x = 1.0 / d.ln().abs(); c1 * x + c2 * x * x });
            let all = fit_log_law(&s).unwrap();
            let part = fit_log_law(&s[1..]).unwrap();
            prop_assert!((all.c1 - part.c1).abs() <= 1e-8 + all.c1_stderr);
        }
    }

    fn disk_oracle() -> f64 {
        // c² = 1/(π∫₀¹J₁(j′r)²r dr), constant = π·c²J₁(j′)²
        let jp = jprime_zero(1, 1).unwrap();
        let int = integrate(|r| bessel_j(1, jp * r).powi(2) * r, 0.0, 1.0, QuadOptions::default()).unwrap();
        PI * bessel_j(1, jp).powi(2) / (PI * int)
    }

    #[test]
    fn disk_splitting_constant() {
        let oracle = disk_oracle();
        let jp = jprime_zero(1, 1).unwrap();
        assert!((oracle - 2.0 * jp * jp / (jp * jp - 1.0)).abs() < 1e-9);
        assert!((oracle - 2.837).abs() < 1e-3);
        let d = Domain::unit_disk();
        let p = WeightSpec::constant(1.0);
        let pred = predict_splitting_constant(&d, &p, Point::new(1.0, 0.0), Cluster { n: 2, m: 2 }, 0.08).unwrap();
        assert!((pred.fine - oracle).abs() < (pred.coarse - oracle).abs());
        assert!((pred.value - oracle).abs() < 2e-3 * oracle);
        let theta = 0.7f64;
        let rot =
            predict_splitting_constant(&d, &p, Point::new(theta.cos(), theta.sin()), Cluster { n: 2, m: 2 }, 0.08)
                .unwrap();
        assert!((rot.value - pred.value).abs() < 0.01 * oracle);
    }

    #[test]
    fn vanishing_cluster_gives_zero() {
        // on the unit square u₂ ∝ cos πx vanishes on x = ½
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let p = WeightSpec::constant(1.0);
        let v = predict_splitting_constant(&d, &p, Point::new(0.5, 0.0), Cluster { n: 4, m: 1 }, 0.1).unwrap();
        assert!(v.value.abs() < 1e-3, "{v:?}");
    }

    #[test]
    fn richardson_improves_the_disk_spectrum() {
        let d = Domain::unit_disk();
        let r = richardson_spectrum(&d, &WeightSpec::constant(1.0), 6, 0.1).unwrap();
        let exact = crate::special::disk_neumann_eigenvalues(6).unwrap();
        for i in 1..6 {
            assert!((r.extrapolated[i] - exact[i]).abs() < (r.fine[i] - exact[i]).abs());
            assert!((r.fine[i] - exact[i]).abs() < (r.coarse[i] - exact[i]).abs());
        }
    }

    #[test]
    fn poles_follow_the_direction() {
        let d = Domain::unit_disk();
        let poles = sweep_poles(&d, Point::new(1.0, 0.0), Point::new(-2.0, 0.0), &[0.2, 0.1]).unwrap();
        assert!((poles[0].d_a - 0.2).abs() < 1e-12 && (poles[1].a.x - 0.9).abs() < 1e-12);
        assert!(sweep_poles(&d, Point::new(1.0, 0.0), Point::new(-1.0, 0.0), &[0.1, 0.2]).is_err());
        assert!(sweep_poles(&d, Point::new(0.5, 0.0), Point::new(-1.0, 0.0), &[0.1]).is_err());
        assert!(sweep_poles(&d, Point::new(1.0, 0.0), Point::new(1.0, 0.0), &[0.1]).is_err());
    }

    #[test]
    fn short_disk_sweep() {
        let d = Domain::unit_disk();
        let p = WeightSpec::constant(1.0);
        let policy = HPolicy { h0: 0.1, ..HPolicy::default() };
        let s = run_sweep(
            &d,
            &p,
            Point::new(1.0, 0.0),
            Point::new(-1.0, 0.0),
            &[0.3, 0.15],
            4,
            Some(Cluster { n: 2, m: 2 }),
            &policy,
        )
        .unwrap();
        assert_eq!(s.steps.len(), 2);
        for st in &s.steps {
            assert_eq!(st.lambda_crack.len(), 4);
            assert!(st.lambda_crack[0] > 0.05);
            assert!(st.r_asymmetry <= 1e-6 * st.r_norm);
        }
        let top = s.branch_delta(3);
        assert!(top[1] < top[0]);
        assert!((s.limit[1] - 3.390).abs() < 0.05);
    }
}
