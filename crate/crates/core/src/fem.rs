//! P1 assembly of `q(v,w) = ∫∇v·∇w + p v w` on a slit mesh, with the jump
//! condition `v⁺ + v⁻ = 0` imposed by eliminating the `−` copies.

use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{relative_residual, solve_generalized, EigenOptions, SpectralResult};
use crate::geometry::{eval_weight, Domain, Point, PoleConfig, WeightForm, WeightSpec};
use crate::mesh::{build_slit_mesh, MeshOptions, SlitMesh};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

/// Triangles smaller than this are rejected.
pub const MIN_ELEMENT_AREA: f64 = 1e-14;

/// Edge-midpoint rule, exact for quadratics.
const MIDPOINT_RULE: [([f64; 3], f64); 3] =
    [([0.5, 0.5, 0.0], 1.0 / 3.0), ([0.0, 0.5, 0.5], 1.0 / 3.0), ([0.5, 0.0, 0.5], 1.0 / 3.0)];

const D4A: f64 = 0.445_948_490_915_965;
const D4B: f64 = 0.091_576_213_509_771;
const D4WA: f64 = 0.223_381_589_678_011;
const D4WB: f64 = 0.109_951_743_655_322;

/// Six-point symmetric rule of degree 4.
const DEGREE4_RULE: [([f64; 3], f64); 6] = [
    ([D4A, D4A, 1.0 - 2.0 * D4A], D4WA),
    ([D4A, 1.0 - 2.0 * D4A, D4A], D4WA),
    ([1.0 - 2.0 * D4A, D4A, D4A], D4WA),
    ([D4B, D4B, 1.0 - 2.0 * D4B], D4WB),
    ([D4B, 1.0 - 2.0 * D4B, D4B], D4WB),
    ([1.0 - 2.0 * D4B, D4B, D4B], D4WB),
];

/// The map `T` from reduced to full DOFs: full DOF `i` equals
/// `sign[i] · z[reduced[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMap {
    pub reduced: Vec<usize>,
    pub sign: Vec<f64>,
    pub n_reduced: usize,
}

impl ConstraintMap {
    pub fn identity(n: usize) -> Self {
        Self { reduced: (0..n).collect(), sign: vec![1.0; n], n_reduced: n }
    }

    /// Eliminates the second DOF of every pair as the negative of the first.
    pub fn from_pairs(n_full: usize, pairs: &[(usize, usize)]) -> Self {
        let mut eliminated = vec![None; n_full];
        for &(p, m) in pairs {
            eliminated[m] = Some(p);
        }
        let mut reduced = vec![0; n_full];
        let mut next = 0;
        for i in 0..n_full {
            if eliminated[i].is_none() {
                reduced[i] = next;
                next += 1;
            }
        }
        let mut sign = vec![1.0; n_full];
        for i in 0..n_full {
            if let Some(p) = eliminated[i] {
                reduced[i] = reduced[p];
                sign[i] = -1.0;
            }
        }
        Self { reduced, sign, n_reduced: next }
    }

    pub fn n_full(&self) -> usize {
        self.reduced.len()
    }

    /// `T z`.
    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.reduced.iter().zip(&self.sign).map(|(&r, &s)| s * z[r]).collect()
    }

    /// `Tᵀ v`.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_reduced];
        for (i, &vi) in v.iter().enumerate() {
            out[self.reduced[i]] += self.sign[i] * vi;
        }
        out
    }

    /// `Tᵀ A T`.
    pub fn reduce(&self, a: &CsrMatrix) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.n_reduced, a.nnz());
        for i in 0..a.n {
            for (j, v) in a.row(i) {
                b.add(self.reduced[i], self.reduced[j], self.sign[i] * self.sign[j] * v);
            }
        }
        b.into_csr()
    }

    /// `T` as `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_full()).map(|i| (i, self.reduced[i], self.sign[i])).collect()
    }
}

/// Matrices of one mesh and weight.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    /// `∫∇φ_i·∇φ_j`.
    pub k: CsrMatrix,
    /// `∫p φ_i φ_j`.
    pub mp: CsrMatrix,
    /// `∫φ_i φ_j`.
    pub m1: CsrMatrix,
    pub t: ConstraintMap,
    pub k_red: CsrMatrix,
    pub mp_red: CsrMatrix,
    pub n_full: usize,
    pub n_reduced: usize,
}

impl AssembledSystem {
    /// `q(v,w)` for full vectors.
    pub fn q(&self, v: &[f64], w: &[f64]) -> f64 {
        self.k.bilinear(v, w) + self.mp.bilinear(v, w)
    }

    /// `∫p v w`.
    pub fn mass_p(&self, v: &[f64], w: &[f64]) -> f64 {
        self.mp.bilinear(v, w)
    }

    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        self.m1.bilinear(v, v).max(0.0).sqrt()
    }

    pub fn h1_norm(&self, v: &[f64]) -> f64 {
        (self.k.bilinear(v, v) + self.m1.bilinear(v, v)).max(0.0).sqrt()
    }

    /// `K_red + Mp_red`.
    pub fn q_reduced(&self) -> CsrMatrix {
        self.k_red.add_scaled(&self.mp_red, 1.0)
    }
}

/// Gradients of the three hat functions on a counter-clockwise triangle.
pub fn hat_gradients(p: [Point; 3]) -> ([Point; 3], f64) {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    let mut g = [Point::new(0.0, 0.0); 3];
    for i in 0..3 {
        let e = p[(i + 2) % 3] - p[(i + 1) % 3];
        g[i] = Point::new(-e.y, e.x) * (0.5 / area);
    }
    (g, area)
}

/// Element stiffness `∫∇φ_i·∇φ_j`.
pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let (g, area) = hat_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * g[i].dot(g[j]);
        }
    }
    k
}

/// Element mass `∫w φ_i φ_j` by the given rule.
fn element_mass(p: [Point; 3], area: f64, rule: &[([f64; 3], f64)], w: &dyn Fn(Point) -> f64) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for (bary, weight) in rule {
        let x = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
        let s = area * weight * w(x);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += s * bary[i] * bary[j];
            }
        }
    }
    m
}

/// Exact P1 mass matrix for `p ≡ 1`.
pub fn element_mass_exact(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

fn triangle_points(mesh: &SlitMesh, t: &[usize; 3]) -> [Point; 3] {
    [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]]
}

/// Assembles `K`, `Mp`, `M1` and the constraint map.
pub fn assemble(mesh: &SlitMesh, p: &WeightSpec) -> Result<AssembledSystem> {
    let n = mesh.vertices.len();
    let rule: &[([f64; 3], f64)] = if p.needs_high_order_quadrature() { &DEGREE4_RULE } else { &MIDPOINT_RULE };
    let weight = |x: Point| eval_weight(p, x);
    let cap = 9 * mesh.triangles.len();
    let mut kb = TripletBuilder::with_capacity(n, cap);
    let mut mb = TripletBuilder::with_capacity(n, cap);
    let mut m1b = TripletBuilder::with_capacity(n, cap);
    for (index, t) in mesh.triangles.iter().enumerate() {
        let pts = triangle_points(mesh, t);
        let area = 0.5 * (pts[1] - pts[0]).cross(pts[2] - pts[0]);
        if !(area >= MIN_ELEMENT_AREA) {
            return Err(Error::SingularElement { index, area });
        }
        let ke = element_stiffness(pts);
        let m1e = element_mass_exact(pts);
        let mpe = match p.form {
            WeightForm::Constant(c) => m1e.map(|row| row.map(|v| c * v)),
            _ => element_mass(pts, area, rule, &weight),
        };
        for i in 0..3 {
            for j in 0..3 {
                kb.add(t[i], t[j], ke[i][j]);
                mb.add(t[i], t[j], mpe[i][j]);
                m1b.add(t[i], t[j], m1e[i][j]);
            }
        }
    }
    let k = kb.into_csr();
    let mp = mb.into_csr();
    let m1 = m1b.into_csr();
    let t = if mesh.crack_pairs.is_empty() {
        ConstraintMap::identity(n)
    } else {
        ConstraintMap::from_pairs(n, &mesh.crack_pairs)
    };
    let k_red = t.reduce(&k);
    let mp_red = t.reduce(&mp);
    Ok(AssembledSystem { n_full: n, n_reduced: t.n_reduced, k, mp, m1, t, k_red, mp_red })
}

/// Smallest `k` eigenpairs of `K_red z = λ Mp_red z`. Eigenvectors are
/// returned as full vectors `T z`; residuals refer to the reduced problem.
pub fn solve_generalized_eigs(sys: &AssembledSystem, k: usize, sigma: f64) -> Result<SpectralResult> {
    let opts = EigenOptions { k, sigma, ..EigenOptions::default() };
    solve_generalized_eigs_with(sys, &opts)
}

pub fn solve_generalized_eigs_with(sys: &AssembledSystem, opts: &EigenOptions) -> Result<SpectralResult> {
    let reduced = solve_generalized(&sys.k_red, &sys.mp_red, opts)?;
    let eigenvectors = reduced.eigenvectors.iter().map(|z| sys.t.expand(z)).collect();
    Ok(SpectralResult { eigenvalues: reduced.eigenvalues, eigenvectors, residuals: reduced.residuals })
}

/// Residual of a full-vector eigenpair measured on the reduced problem.
pub fn reduced_residual(sys: &AssembledSystem, lambda: f64, v: &[f64]) -> f64 {
    let mut z = vec![0.0; sys.n_reduced];
    for i in 0..sys.n_full {
        if sys.t.sign[i] > 0.0 {
            z[sys.t.reduced[i]] = v[i];
        }
    }
    relative_residual(&sys.k_red, &sys.mp_red, lambda, &z)
}

/// Crack-problem eigenpairs with the mesh and matrices they came from.
#[derive(Debug, Clone)]
pub struct CrackSpectrum {
    pub mesh: SlitMesh,
    pub system: AssembledSystem,
    pub spectrum: SpectralResult,
}

/// Eigenvalues `λ_j^a` of the Neumann problem on `Ω ∖ S_a` with
/// antisymmetric jump across the slit.
pub fn solve_crack_eigs(
    domain: &Domain,
    pole: &PoleConfig,
    p: &WeightSpec,
    mesh_opts: &MeshOptions,
    k: usize,
) -> Result<CrackSpectrum> {
    p.validate(domain)?;
    let mesh = build_slit_mesh(domain, pole, mesh_opts)?;
    let system = assemble(&mesh, p)?;
    let spectrum = solve_generalized_eigs(&system, k, EigenOptions::default().sigma)?;
    Ok(CrackSpectrum { mesh, system, spectrum })
}

/// Nodal interpolant of `f`.
pub fn interpolate(mesh: &SlitMesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    mesh.vertices.iter().map(|&x| f(x)).collect()
}

/// Constant gradient of a P1 function on triangle `t`.
pub fn triangle_gradient(mesh: &SlitMesh, t: usize, u: &[f64]) -> Point {
    let tri = &mesh.triangles[t];
    let (g, _) = hat_gradients(triangle_points(mesh, tri));
    g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_to_boundary, Region};
    use crate::special::disk_neumann_eigenvalues;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn tri() -> [Point; 3] {
        [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]
    }

    #[test]
    fn reference_element() {
        let k = element_stiffness(tri());
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        let m = element_mass(tri(), 0.5, &MIDPOINT_RULE, &|_| 1.0);
        let m4 = element_mass(tri(), 0.5, &DEGREE4_RULE, &|_| 1.0);
        for i in 0..3 {
            for j in 0..3 {
                let e = 0.5 / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((m[i][j] - e).abs() < 1e-15);
                assert!((m4[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degree4_rule_integrates_quartics() {
        // ∫_T x⁴ = 1/30, ∫_T x²y² = 1/180 on the reference triangle
        let q =
            |f: &dyn Fn(f64, f64) -> f64| -> f64 { DEGREE4_RULE.iter().map(|(b, w)| 0.5 * w * f(b[1], b[2])).sum() };
        assert!((q(&|x, _| x.powi(4)) - 1.0 / 30.0).abs() < 1e-14);
        assert!((q(&|x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-14);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let d = Domain::unit_disk();
        let mesh = crate::mesh::build_plain_mesh(&d, &MeshOptions::uniform(0.1)).unwrap();
        let sys = assemble(&mesh, &WeightSpec::constant(1.0)).unwrap();
        let one = vec![1.0; sys.n_full];
        assert!(sys.k.bilinear(&one, &one).abs() < 1e-12);
        assert!((sys.m1.bilinear(&one, &one) - mesh.area()).abs() < 1e-12);
        assert!(sys.k.relative_asymmetry() < 1e-14);
        assert!(sys.mp.relative_asymmetry() < 1e-14);
    }

    #[test]
    fn disk_spectrum_converges() {
        let d = Domain::unit_disk();
        let exact = disk_neumann_eigenvalues(6).unwrap();
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.05] {
            let mesh = crate::mesh::build_plain_mesh(&d, &MeshOptions::uniform(h)).unwrap();
            let sys = assemble(&mesh, &WeightSpec::constant(1.0)).unwrap();
            let s = solve_generalized_eigs(&sys, 6, -0.1).unwrap();
            assert!(s.eigenvalues[0].abs() < 1e-9);
            let err = (1..6).map(|i| (s.eigenvalues[i] - exact[i]).abs() / exact[i]).fold(0.0, f64::max);
            assert!(err < 40.0 * h * h, "h = {h}: {err}");
            assert!(err < prev);
            prev = err;
            assert!(s.max_residual() < 1e-8);
        }
    }

    #[test]
    fn square_spectrum() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let mesh = crate::mesh::build_plain_mesh(&d, &MeshOptions::uniform(0.04)).unwrap();
        let sys = assemble(&mesh, &WeightSpec::constant(1.0)).unwrap();
        let s = solve_generalized_eigs(&sys, 3, -0.1).unwrap();
        for i in 1..3 {
            assert!((s.eigenvalues[i] - PI * PI).abs() < 0.02 * PI * PI);
        }
    }

    #[test]
    fn crack_spectrum_has_no_kernel() {
        let d = Domain::unit_disk();
        let pole = project_to_boundary(&d, Point::new(0.5, 0.0)).unwrap();
        let c =
            solve_crack_eigs(&d, &pole, &WeightSpec::constant(1.0), &MeshOptions::graded(0.05, 2.0, 0.1), 4).unwrap();
        assert!(c.spectrum.eigenvalues[0] > 0.1);
        for v in &c.spectrum.eigenvectors {
            for &(p, m) in &c.mesh.crack_pairs {
                assert_eq!(v[p] + v[m], 0.0);
            }
        }
        for (i, x) in c.spectrum.eigenvectors.iter().enumerate() {
            for (j, y) in c.spectrum.eigenvectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((c.system.mass_p(x, y) - target).abs() < 1e-8);
            }
            assert!(reduced_residual(&c.system, c.spectrum.eigenvalues[i], x) < 1e-8);
        }
    }

    #[test]
    fn crack_eigenvalues_approach_the_plain_ones() {
        let d = Domain::unit_disk();
        let lam2 = disk_neumann_eigenvalues(2).unwrap()[1];
        let mut prev = f64::INFINITY;
        for dist in [0.2, 0.1, 0.05] {
            let pole = project_to_boundary(&d, Point::new(1.0 - dist, 0.0)).unwrap();
            let h = 0.05f64.min(dist / 5.0);
            let opts = MeshOptions::graded(h, 2.0, 0.06);
            let c = solve_crack_eigs(&d, &pole, &WeightSpec::constant(1.0), &opts, 2).unwrap();
            let err = (c.spectrum.eigenvalues[1] - lam2).abs();
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn radial_weight_uses_high_order_rule() {
        let d = Domain::unit_disk();
        let mesh = crate::mesh::build_plain_mesh(&d, &MeshOptions::uniform(0.1)).unwrap();
        let p = WeightSpec::radial(vec![1.0, 1.0], 1.0);
        let sys = assemble(&mesh, &p).unwrap();
        let one = vec![1.0; sys.n_full];
        // ∫(1 + r²) over the polygonal disk ≈ 3π/2
        assert!((sys.mp.bilinear(&one, &one) - 1.5 * PI).abs() < 0.02);
    }

    #[test]
    fn singular_elements_are_rejected() {
        let mut mesh = crate::mesh::build_plain_mesh(&Domain::unit_disk(), &MeshOptions::uniform(0.2)).unwrap();
        let t = mesh.triangles[0];
        mesh.triangles[0] = [t[0], t[2], t[1]];
        assert!(matches!(assemble(&mesh, &WeightSpec::constant(1.0)), Err(Error::SingularElement { index: 0, .. })));
    }

    #[test]
    fn constraint_map_round_trip() {
        let t = ConstraintMap::from_pairs(5, &[(1, 3), (2, 4)]);
        assert_eq!(t.n_reduced, 3);
        let v = t.expand(&[1.0, 2.0, 3.0]);
        assert_eq!(v, vec![1.0, 2.0, 3.0, -2.0, -3.0]);
        assert_eq!(t.restrict(&v), vec![1.0, 4.0, 6.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn weight_monotonicity(scale in 1.0f64..3.0, cx in -0.3f64..0.3) {
            let d = Domain::unit_disk();
            let mesh = crate::mesh::build_plain_mesh(&d, &MeshOptions::uniform(0.12)).unwrap();
            let p1 = WeightSpec::constant(1.0);
            let region = Region::Disk { center: Point::new(cx, 0.0), radius: 0.4 };
            let p2 = WeightSpec::piecewise(vec![(region, scale)], 1.0, 1.0);
            let s1 = solve_generalized_eigs(&assemble(&mesh, &p1).unwrap(), 5, -0.1).unwrap();
            let s2 = solve_generalized_eigs(&assemble(&mesh, &p2).unwrap(), 5, -0.1).unwrap();
            for i in 1..5 {
                prop_assert!(s2.eigenvalues[i] <= s1.eigenvalues[i] * (1.0 + 1e-10));
            }
        }

        #[test]
        fn reduced_matrices_are_symmetric(x in 0.0f64..0.6, y in -0.5f64..0.5) {
            let d = Domain::unit_disk();
            let pole = project_to_boundary(&d, Point::new(x, y)).unwrap();
            let mesh = build_slit_mesh(&d, &pole, &MeshOptions::graded(0.06, 1.5, 0.12)).unwrap();
            let sys = assemble(&mesh, &WeightSpec::constant(2.0)).unwrap();
            prop_assert!(sys.k_red.relative_asymmetry() < 1e-14);
            prop_assert!(sys.mp_red.relative_asymmetry() < 1e-14);
            prop_assert_eq!(sys.n_reduced + mesh.crack_pairs.len(), sys.n_full);
        }
    }
}
