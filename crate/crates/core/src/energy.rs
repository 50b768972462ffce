//! The functional `L^{a,u}`, the potential `V^{a,u}`, the energy
//! `E^{a,u}`, and the small matrices `R`, `C`, `B = C⁻¹R` that predict how
//! a cluster of Neumann eigenvalues moves when the slit is cut.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{cholesky, sym_eigen, DMat};
use crate::eigen::SpectralResult;
use crate::fem::{assemble, solve_generalized_eigs, triangle_gradient, AssembledSystem};
use crate::geometry::{Domain, Point, PoleConfig, WeightSpec};
use crate::mesh::{build_slit_mesh, EdgeTag, MeshOptions, SlitMesh};
use crate::sparse::{CsrMatrix, SkylineLdlt};
use crate::{Error, Result};

/// Residual target of the potential solve.
pub const POTENTIAL_TOL: f64 = 1e-10;

/// Gap-to-spread ratio a cluster needs to count as numerically isolated.
pub const CLUSTER_GAP_RATIO: f64 = 10.0;

/// Smallest relative spread assumed for a cluster.
pub const CLUSTER_SPREAD_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `E = ½q(V,V) − L(V)`.
    pub e: f64,
    /// `−½q(V,V) + q(V,u) − L(u)`, equal to `e` at the minimizer.
    pub e_cross: f64,
    /// `V` on the slit mesh.
    pub v: Vec<f64>,
    pub l2_v: f64,
    pub h1_v: f64,
    /// `‖L‖` in the dual of `H¹(Ω ∖ S_a)`.
    pub l_norm: f64,
    pub q_vv: f64,
    /// Relative residual of the reduced solve.
    pub residual: f64,
}

impl EnergyReport {
    /// `E + ‖L‖²/min{1,c} − (min{1,c}/4)‖V‖²_{H¹}`, non-negative in exact arithmetic.
    pub fn positivity_margin(&self, c: f64) -> f64 {
        let k = c.min(1.0);
        self.e + self.l_norm * self.l_norm / k - 0.25 * k * self.h1_v * self.h1_v
    }
}

/// Copies a function on the plain companion mesh onto the slit mesh, both
/// sides of the slit taking the same value.
pub fn lift_to_slit(mesh: &SlitMesh, plain: &SlitMesh, u: &[f64]) -> Result<Vec<f64>> {
    if plain.vertices.len() != mesh.n_geometric
        || u.len() != mesh.n_geometric
        || plain.vertices[..] != mesh.vertices[..mesh.n_geometric]
    {
        return Err(Error::MeshMismatch);
    }
    Ok(mesh.geometric_map().iter().map(|&g| u[g]).collect())
}

/// `ℓ` with `ℓᵀv = −∫_{S_a}(∇u·ν_a)(v⁺ − v⁻) dS` for every P1 `v`, where
/// `u` is given on the plain companion mesh. `∇u` on each side is the
/// gradient on the adjacent triangle.
pub fn compute_l(u: &[f64], pole: &PoleConfig, mesh: &SlitMesh) -> Result<Vec<f64>> {
    if u.len() != mesh.n_geometric {
        return Err(Error::MeshMismatch);
    }
    let u_full: Vec<f64> = mesh.geometric_map().iter().map(|&g| u[g]).collect();
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owner.insert((a.min(b), a.max(b)), t);
        }
    }
    let nu = pole.nu();
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut l = vec![0.0; mesh.n_dofs()];
    for e in &mesh.edges {
        let sign = match e.tag {
            EdgeTag::Outer => continue,
            EdgeTag::CrackPlus => -1.0,
            EdgeTag::CrackMinus => 1.0,
        };
        let [a, b] = e.v;
        let t = owner[&(a.min(b), a.max(b))];
        let dn = triangle_gradient(mesh, t, &u_full).dot(nu);
        let len = mesh.vertices[a].dist(mesh.vertices[b]);
        for s in gauss {
            let w = 0.5 * len * sign * dn;
            l[a] += w * (1.0 - s);
            l[b] += w * s;
        }
    }
    Ok(l)
}

/// `ℓ = K u − λ Mp u`, i.e. `ℓᵀv = ∫∇u·∇v − λ∫p u v`, for `u` already on
/// the slit mesh.
pub fn volume_form_l(sys: &AssembledSystem, u_full: &[f64], lambda: f64) -> Vec<f64> {
    let ku = sys.k.mul_vec(u_full);
    let mu = sys.mp.mul_vec(u_full);
    ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Factorizations shared by every potential solve on one slit system.
pub struct PotentialSolver<'a> {
    sys: &'a AssembledSystem,
    q_red: CsrMatrix,
    q_factor: SkylineLdlt,
    /// `K + M1` on the full space, for dual norms.
    h1: CsrMatrix,
    h1_factor: SkylineLdlt,
}

impl<'a> PotentialSolver<'a> {
    pub fn new(sys: &'a AssembledSystem) -> Result<Self> {
        let q_red = sys.q_reduced();
        let q_factor = SkylineLdlt::factor(&q_red)?;
        let h1 = sys.k.add_scaled(&sys.m1, 1.0);
        let h1_factor = SkylineLdlt::factor(&h1)?;
        Ok(Self { sys, q_red, q_factor, h1, h1_factor })
    }

    fn spd_solve(a: &CsrMatrix, f: &SkylineLdlt, b: &[f64]) -> (Vec<f64>, f64) {
        let mut x = f.solve(b);
        let bn = norm(b).max(f64::MIN_POSITIVE);
        let mut res = 0.0;
        for _ in 0..3 {
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            res = norm(&r) / bn;
            if res <= 1e-14 {
                break;
            }
            let dx = f.solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
        }
        (x, res)
    }

    /// `‖ℓ‖` in the dual of `H¹(Ω ∖ S_a)` through the Riesz representative.
    pub fn dual_norm(&self, l: &[f64]) -> f64 {
        let (w, _) = Self::spd_solve(&self.h1, &self.h1_factor, l);
        dot(l, &w).max(0.0).sqrt()
    }

    /// Solves `q(V, v) = ℓᵀv` for all constrained `v`, with `V − u` constrained.
    pub fn solve(&self, l: &[f64], u_full: &[f64]) -> Result<EnergyReport> {
        let sys = self.sys;
        let qu = {
            let mut a = sys.k.mul_vec(u_full);
            for (ai, bi) in a.iter_mut().zip(sys.mp.mul_vec(u_full)) {
                *ai += bi;
            }
            a
        };
        let rhs_full: Vec<f64> = l.iter().zip(&qu).map(|(a, b)| a - b).collect();
        let rhs = sys.t.restrict(&rhs_full);
        let (z, residual) = Self::spd_solve(&self.q_red, &self.q_factor, &rhs);
        if !(residual <= POTENTIAL_TOL) && norm(&rhs) > 0.0 {
            return Err(Error::ConvergenceFailure { residual });
        }
        let tz = sys.t.expand(&z);
        let v: Vec<f64> = u_full.iter().zip(&tz).map(|(a, b)| a + b).collect();
        let q_vv = sys.q(&v, &v);
        let l_v = dot(l, &v);
        let e = 0.5 * q_vv - l_v;
        let e_cross = -0.5 * q_vv + sys.q(&v, u_full) - dot(l, u_full);
        Ok(EnergyReport {
            e,
            e_cross,
            l2_v: sys.l2_norm(&v),
            h1_v: sys.h1_norm(&v),
            l_norm: self.dual_norm(l),
            q_vv,
            residual,
            v,
        })
    }
}

/// One-shot potential solve.
pub fn solve_potential(sys: &AssembledSystem, l: &[f64], u_full: &[f64]) -> Result<EnergyReport> {
    PotentialSolver::new(sys)?.solve(l, u_full)
}

/// Checks that `λ_n, …, λ_{n+m−1}` (1-based) form an isolated cluster and
/// returns the gap-to-spread ratio.
pub fn cluster_gap_ratio(eigenvalues: &[f64], n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 || n + m - 1 > eigenvalues.len() {
        return Err(Error::InvalidArgument("cluster indices out of range"));
    }
    let cl = &eigenvalues[n - 1..n + m - 1];
    let spread = cl[m - 1] - cl[0];
    let mut gap = f64::INFINITY;
    if n > 1 {
        gap = gap.min(cl[0] - eigenvalues[n - 2]);
    }
    if n + m - 1 < eigenvalues.len() {
        gap = gap.min(eigenvalues[n + m - 1] - cl[m - 1]);
    } else {
        return Err(Error::ClusterAmbiguous { n, m });
    }
    let scale = cl[m - 1].abs().max(1.0);
    // eigenvalues closer than this are treated as one multiple eigenvalue
    let ratio = gap / spread.max(CLUSTER_SPREAD_FLOOR * scale);
    if ratio > CLUSTER_GAP_RATIO {
        Ok(ratio)
    } else {
        Err(Error::ClusterAmbiguous { n, m })
    }
}

/// Splits an ascending spectrum into runs whose consecutive gaps stay
/// below the spread floor.
pub fn detect_clusters(eigenvalues: &[f64]) -> Vec<core::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        if i == eigenvalues.len()
            || eigenvalues[i] - eigenvalues[i - 1] > CLUSTER_SPREAD_FLOOR * eigenvalues[i].abs().max(1.0)
        {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// A slit mesh, its plain companion, both systems and the plain spectrum.
#[derive(Debug, Clone)]
pub struct CrackSetup {
    pub pole: PoleConfig,
    pub weight: WeightSpec,
    pub p_sup: f64,
    pub mesh: SlitMesh,
    pub plain_mesh: SlitMesh,
    pub slit: AssembledSystem,
    pub plain: AssembledSystem,
    pub plain_spectrum: SpectralResult,
}

impl CrackSetup {
    /// Builds everything for the first `k` plain eigenpairs.
    pub fn new(domain: &Domain, pole: &PoleConfig, p: &WeightSpec, opts: &MeshOptions, k: usize) -> Result<Self> {
        p.validate(domain)?;
        let mesh = build_slit_mesh(domain, pole, opts)?;
        let plain_mesh = mesh.plain_companion();
        let slit = assemble(&mesh, p)?;
        let plain = assemble(&plain_mesh, p)?;
        let plain_spectrum = solve_generalized_eigs(&plain, k, -0.1)?;
        Ok(Self {
            pole: *pole,
            weight: p.clone(),
            p_sup: p.sup_norm(domain),
            mesh,
            plain_mesh,
            slit,
            plain,
            plain_spectrum,
        })
    }

    pub fn lift(&self, u: &[f64]) -> Result<Vec<f64>> {
        lift_to_slit(&self.mesh, &self.plain_mesh, u)
    }

    /// Potential and energy for `u` (on the plain mesh) with eigenvalue `lambda`.
    pub fn energy(&self, u: &[f64], lambda: f64) -> Result<EnergyReport> {
        let u_full = self.lift(u)?;
        let l = volume_form_l(&self.slit, &u_full, lambda);
        solve_potential(&self.slit, &l, &u_full)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// 1-based index of the first cluster eigenvalue and the cluster size.
    pub n: usize,
    pub m: usize,
    pub lambda_plain: Vec<f64>,
    pub lambda_mean: f64,
    pub gap_ratio: f64,
    pub r: DMat,
    pub c: DMat,
    pub b: DMat,
    /// Ascending eigenvalues of the symmetric part of `R`.
    pub mu: Vec<f64>,
    /// Ascending eigenvalues of `B`.
    pub xi: Vec<f64>,
    /// `‖p‖_∞^{1/2} Σ ‖V_j‖_{L²}`.
    pub tau: f64,
    /// `sup ‖Σ α_j V_j‖_{L²(p)}` over unit `α`, which `tau` bounds.
    pub tau_exact: f64,
    pub energies: Vec<EnergyReport>,
}

impl ReducedSystem {
    pub fn r_asymmetry(&self) -> f64 {
        self.r.asymmetry()
    }
}

/// `R`, `C`, `B` for the cluster `λ_n..λ_{n+m−1}` of a prepared setup.
pub fn reduced_system(setup: &CrackSetup, n: usize, m: usize) -> Result<ReducedSystem> {
    let eigs = &setup.plain_spectrum.eigenvalues;
    let gap_ratio = cluster_gap_ratio(eigs, n, m)?;
    let lambda_plain: Vec<f64> = eigs[n - 1..n + m - 1].to_vec();
    let lambda_mean = lambda_plain.iter().sum::<f64>() / m as f64;
    let solver = PotentialSolver::new(&setup.slit)?;
    let mut us = Vec::with_capacity(m);
    let mut energies = Vec::with_capacity(m);
    for j in 0..m {
        let u_full = setup.lift(&setup.plain_spectrum.eigenvectors[n - 1 + j])?;
        let l = volume_form_l(&setup.slit, &u_full, lambda_mean);
        energies.push(solver.solve(&l, &u_full)?);
        us.push(u_full);
    }
    let sys = &setup.slit;
    let diff: Vec<Vec<f64>> =
        us.iter().zip(&energies).map(|(u, e)| u.iter().zip(&e.v).map(|(a, b)| a - b).collect()).collect();
    let r = DMat::from_fn(m, m, |i, j| (lambda_mean + 1.0) * sys.mass_p(&energies[i].v, &diff[j]));
    let c = DMat::from_fn(m, m, |i, j| sys.mass_p(&diff[i], &diff[j]));
    let b = crate::dense::solve_spd(&c, &r)?;
    let rs = DMat::from_fn(m, m, |i, j| 0.5 * (r[(i, j)] + r[(j, i)]));
    let (mu, _) = sym_eigen(&rs);
    // B is similar to the symmetric L⁻¹ R_s L⁻ᵀ with C = LLᵀ
    let xi = {
        let l = cholesky(&c)?;
        let mut tmp = DMat::zeros(m, m);
        for j in 0..m {
            let mut col = rs.col(j);
            crate::dense::forward_solve(&l, &mut col);
            for i in 0..m {
                tmp[(i, j)] = col[i];
            }
        }
        let mut s = DMat::zeros(m, m);
        for i in 0..m {
            let mut row: Vec<f64> = (0..m).map(|j| tmp[(i, j)]).collect();
            crate::dense::forward_solve(&l, &mut row);
            for j in 0..m {
                s[(i, j)] = row[j];
            }
        }
        let s = DMat::from_fn(m, m, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
        sym_eigen(&s).0
    };
    let tau = setup.p_sup.sqrt() * energies.iter().map(|e| e.l2_v).sum::<f64>();
    let gram = DMat::from_fn(m, m, |i, j| sys.mass_p(&energies[i].v, &energies[j].v));
    let tau_exact = sym_eigen(&gram).0.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    Ok(ReducedSystem { n, m, lambda_plain, lambda_mean, gap_ratio, r, c, b, mu, xi, tau, tau_exact, energies })
}

/// Builds the setup and the reduced system in one go.
pub fn compute_reduced_system(
    domain: &Domain,
    pole: &PoleConfig,
    p: &WeightSpec,
    n: usize,
    m: usize,
    opts: &MeshOptions,
) -> Result<(CrackSetup, ReducedSystem)> {
    let setup = CrackSetup::new(domain, pole, p, opts, n + m)?;
    let red = reduced_system(&setup, n, m)?;
    Ok((setup, red))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub d_a: f64,
    pub lambda_plain: Vec<f64>,
    /// `λ^a_{n+j−1}`, ascending.
    pub lambda_branches: Vec<f64>,
    /// `λ^a_{n+j−1} − λ_{n+j−1}`.
    pub delta: Vec<f64>,
    pub mu: Vec<f64>,
    pub tau: f64,
    pub e: Vec<f64>,
    pub l2_v: Vec<f64>,
    /// `max_j |δ_j − μ_j| / τ²`.
    pub constant: f64,
    /// `max_j |δ_j| / τ`.
    pub first_order_constant: f64,
    pub violation: bool,
    /// `|⟨u_i, w_j⟩_p|²` summed over the cluster for each branch.
    pub branch_overlap: Vec<f64>,
}

/// Compares the crack eigenvalues of the cluster with `λ_n + μ_j`, flagging
/// a violation when the discrepancy exceeds `threshold · τ²`.
pub fn check_expansion(setup: &CrackSetup, red: &ReducedSystem, threshold: f64) -> Result<ExpansionReport> {
    let (n, m) = (red.n, red.m);
    let crack = solve_generalized_eigs(&setup.slit, n + m - 1, -0.1)?;
    let lambda_branches: Vec<f64> = crack.eigenvalues[n - 1..].to_vec();
    let delta: Vec<f64> = lambda_branches.iter().zip(&red.lambda_plain).map(|(a, b)| a - b).collect();
    let tau2 = red.tau * red.tau;
    let constant = delta.iter().zip(&red.mu).map(|(d, mu)| (d - mu).abs()).fold(0.0, f64::max) / tau2;
    let first_order_constant = delta.iter().map(|d| d.abs()).fold(0.0, f64::max) / red.tau;
    let us: Vec<Vec<f64>> =
        (0..m).map(|j| setup.lift(&setup.plain_spectrum.eigenvectors[n - 1 + j])).collect::<Result<_>>()?;
    let branch_overlap =
        crack.eigenvectors[n - 1..].iter().map(|w| us.iter().map(|u| setup.slit.mass_p(u, w).powi(2)).sum()).collect();
    Ok(ExpansionReport {
        d_a: setup.pole.d_a,
        lambda_plain: red.lambda_plain.clone(),
        lambda_branches,
        delta,
        mu: red.mu.clone(),
        tau: red.tau,
        e: red.energies.iter().map(|e| e.e).collect(),
        l2_v: red.energies.iter().map(|e| e.l2_v).collect(),
        constant,
        first_order_constant,
        violation: constant > threshold,
        branch_overlap,
    })
}

/// Greedy assignment of new eigenvectors to previous branches by largest
/// `|⟨x_i, y_j⟩_M|`; returns for each previous branch the index of the new vector.
pub fn match_branches(previous: &[Vec<f64>], current: &[Vec<f64>], m: &CsrMatrix) -> Vec<usize> {
    let mc: Vec<Vec<f64>> = current.iter().map(|c| m.mul_vec(c)).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in previous.iter().enumerate() {
        for (j, c) in mc.iter().enumerate() {
            pairs.push((dot(p, c).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![usize::MAX; previous.len()];
    let mut used = vec![false; current.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
        }
    }
    out
}

/// Value at `x` of a P1 function on a mesh without slit, by locating the
/// containing triangle.
pub fn point_value(mesh: &SlitMesh, u: &[f64], x: Point) -> Option<f64> {
    for t in &mesh.triangles {
        let [a, b, c] = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let det = (b - a).cross(c - a);
        let l1 = (x - a).cross(c - a) / det;
        let l2 = (b - a).cross(x - a) / det;
        let l0 = 1.0 - l1 - l2;
        let tol = -1e-12;
        if l0 >= tol && l1 >= tol && l2 >= tol {
            return Some(l0 * u[t[0]] + l1 * u[t[1]] + l2 * u[t[2]]);
        }
    }
    None
}
