//! The half-ellipse model problem in closed form.
//!
//! On `E_ε(L) = {x₁ > 0, x₁²/(L²+ε²) + x₂²/L² < 1}` cut along
//! `s_ε = [0, ε] × {0}`, elliptic coordinates `x = ε(cosh ξ cos η, sinh ξ sin η)`
//! straighten the slit to `ξ = 0`. The minimizer `W_ε` of
//! `∫|∇w|² + ρ_ε w²` under the jump condition depends on `ξ` only and is
//! `½(c₁I₀(εe^ξ) + c₂K₀(εe^ξ))`.

use core::f64::consts::{FRAC_PI_2, PI};

use crate::energy::solve_potential;
use crate::fem::assemble;
use crate::geometry::{project_to_boundary, Domain, Point, WeightSpec};
use crate::mesh::{build_slit_mesh, MeshOptions};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::bessel_ik;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseProblem {
    pub length: f64,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl EllipseProblem {
    pub fn new(length: f64, eps: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || !(eps > 0.0 && eps < 0.5 * length) {
            return Err(Error::InvalidArgument("need 0 < eps < L/2"));
        }
        if alpha == 0.0 || !alpha.is_finite() || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument("need alpha != 0 and beta > 0"));
        }
        Ok(Self { length, eps, alpha, beta })
    }

    /// `ξ_ε = arcsinh(L/ε)`, the coordinate of the curved boundary.
    pub fn xi_eps(&self) -> f64 {
        (self.length / self.eps).asinh()
    }

    /// `T = εe^{ξ_ε} = L + √(L² + ε²)`.
    pub fn t_max(&self) -> f64 {
        self.length + self.length.hypot(self.eps)
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::half_ellipse(self.length, self.eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub eps: f64,
    pub xi_eps: f64,
    pub t_max: f64,
    pub c1: f64,
    pub c2: f64,
    /// `∫|∇W_ε|²`.
    pub grad_energy: f64,
    /// `∫ρ_ε W_ε²`.
    pub mass_rho: f64,
    /// `πα²/(2|log ε|)`.
    pub e_leading: f64,
    /// `(π/2)αε(c₂K₁(ε) − c₁I₁(ε))`, the slit flux, equal to
    /// `grad_energy + mass_rho` by Green's formula.
    pub flux: f64,
}

/// `F_ε(ξ, η)`.
pub fn elliptic_map(eps: f64, xi: f64, eta: f64) -> Result<Point> {
    if !(xi >= 0.0) || !(eta.abs() <= FRAC_PI_2) || !(eps > 0.0) {
        return Err(Error::DomainError(xi));
    }
    Ok(Point::new(eps * xi.cosh() * eta.cos(), eps * xi.sinh() * eta.sin()))
}

/// `F_ε⁻¹(x)` for `x₁ ≥ 0` off the slit.
pub fn inverse_elliptic_map(eps: f64, x: Point) -> Result<(f64, f64)> {
    if !(x.x >= 0.0) || !(eps > 0.0) {
        return Err(Error::DomainError(x.x));
    }
    // s = sinh²ξ solves ε²s² + (ε² − |x|²)s − x₂² = 0
    let b = eps * eps - x.dot(x);
    let disc = (b * b + 4.0 * eps * eps * x.y * x.y).sqrt();
    let s = if b >= 0.0 { 2.0 * x.y * x.y / (b + disc) } else { (disc - b) / (2.0 * eps * eps) };
    if s <= 0.0 {
        return Err(Error::DomainError(x.x));
    }
    let sh = s.sqrt();
    let xi = sh.asinh();
    let eta = (x.y * (1.0 + s).sqrt()).atan2(x.x * sh);
    Ok((xi, eta))
}

/// `ρ(ξ, η) = e^{2ξ}/(sinh²ξ + sin²η)`.
pub fn rho(xi: f64, eta: f64) -> f64 {
    let (a, b) = (xi.sinh(), eta.sin());
    (2.0 * xi).exp() / (a * a + b * b)
}

/// `ρ_ε(x)` for `x ∈ E_ε(L)` off the slit.
pub fn rho_weight(prob: &EllipseProblem, x: Point) -> Result<f64> {
    let (xi, eta) = inverse_elliptic_map(prob.eps, x)?;
    if xi >= prob.xi_eps() {
        return Err(Error::DomainError(x.x));
    }
    let floor = 1.0 / prob.xi_eps().cosh().powi(2);
    Ok(rho(xi, eta).max(floor))
}

fn quad_opts() -> QuadOptions {
    QuadOptions { rel_tol: 1e-10, abs_tol: 0.0, max_intervals: 20000 }
}

/// `W_ε` in closed form with its energy and weighted mass.
pub fn solve_w_closed_form(prob: &EllipseProblem) -> Result<OracleResult> {
    let (eps, alpha) = (prob.eps, prob.alpha);
    let xi_eps = prob.xi_eps();
    let t_max = prob.t_max();
    let at_t = bessel_ik(t_max)?;
    let at_e = bessel_ik(eps)?;
    let den = at_e.i0 * at_t.k1 + at_e.k0 * at_t.i1;
    let c1 = 2.0 * alpha * at_t.k1 / den;
    let c2 = 2.0 * alpha * at_t.i1 / den;
    // t = εe^ξ turns ∫ t f(t)² dt into ∫ t² f(t)² dξ, bounded near ξ = 0
    let breaks = [0.0, 0.25 * xi_eps, 0.5 * xi_eps, 0.75 * xi_eps, xi_eps];
    let mut fail = None;
    let mut grad_integrand = |xi: f64| match bessel_ik(eps * xi.exp()) {
        Ok(b) => (b.t * (c1 * b.i1 - c2 * b.k1)).powi(2),
        Err(e) => {
            fail = Some(e);
            0.0
        }
    };
    let grad = integrate_with_breaks(&mut grad_integrand, &breaks, quad_opts())?;
    let mut mass_integrand = |xi: f64| match bessel_ik(eps * xi.exp()) {
        Ok(b) => (b.t * (c1 * b.i0 + c2 * b.k0)).powi(2),
        Err(e) => {
            fail = Some(e);
            0.0
        }
    };
    let mass = integrate_with_breaks(&mut mass_integrand, &breaks, quad_opts())?;
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(OracleResult {
        eps,
        xi_eps,
        t_max,
        c1,
        c2,
        grad_energy: 0.25 * PI * grad,
        mass_rho: 0.25 * PI * mass,
        e_leading: PI * alpha * alpha / (2.0 * eps.ln().abs()),
        flux: 0.5 * PI * alpha * eps * (c2 * at_e.k1 - c1 * at_e.i1),
    })
}

/// `‖ρ_ε‖_{L^γ(E_ε(L))}`, integrated in elliptic coordinates.
pub fn rho_norm(prob: &EllipseProblem, gamma: f64) -> Result<f64> {
    if !(gamma >= 1.0) {
        return Err(Error::InvalidArgument("exponent must be at least 1"));
    }
    let (eps, xi_eps) = (prob.eps, prob.xi_eps());
    let opts = QuadOptions { rel_tol: 1e-8, abs_tol: 0.0, max_intervals: 4000 };
    let mut fail = None;
    // ρ^γ times the Jacobian ε²(sinh²ξ + sin²η), over η ∈ (0, π/2) and doubled
    let mut outer = |eta: f64| {
        let s2 = eta.sin().powi(2);
        let mut inner = |xi: f64| {
            let j = xi.sinh().powi(2) + s2;
            eps * eps * (2.0 * gamma * xi).exp() * j.powf(1.0 - gamma)
        };
        let knee = eta.min(0.5 * xi_eps);
        match integrate_with_breaks(&mut inner, &[0.0, knee, xi_eps], opts) {
            Ok(v) => v,
            Err(e) => {
                fail = Some(e);
                0.0
            }
        }
    };
    let mut breaks = alloc::vec::Vec::from([0.0]);
    breaks.extend((0..12).rev().map(|k| FRAC_PI_2 * 0.25f64.powi(k)));
    let total = 2.0 * integrate_with_breaks(&mut outer, &breaks, opts)?;
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(total.powf(1.0 / gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WzComparison {
    pub eps: f64,
    pub grad_w: f64,
    /// `∫|∇Z_ε|²` on the coarse and refined meshes and extrapolated.
    pub grad_z_coarse: f64,
    pub grad_z_fine: f64,
    pub grad_z: f64,
    /// `2E = ∫|∇Z|² + β∫Z²`, extrapolated.
    pub two_e: f64,
    pub ratio: f64,
    pub two_e_ratio: f64,
    /// `2E·|log ε|/(πα²)`.
    pub two_e_law: f64,
    pub n_dofs_fine: usize,
}

/// FEM potential `Z_ε` for `u ≡ α`, weight `β`, on the mesh `opts` and on
/// its uniform refinement, against the closed-form `W_ε`.
pub fn compare_w_z(prob: &EllipseProblem, opts: &MeshOptions) -> Result<WzComparison> {
    let oracle = solve_w_closed_form(prob)?;
    let domain = prob.domain()?;
    let pole = project_to_boundary(&domain, Point::new(prob.eps, 0.0))?;
    let coarse = build_slit_mesh(&domain, &pole, opts)?;
    let fine = coarse.refine_uniform(&domain)?;
    let weight = WeightSpec::constant(prob.beta);
    let mut grads = [0.0; 2];
    let mut twos = [0.0; 2];
    let mut n_dofs_fine = 0;
    for (i, mesh) in [&coarse, &fine].into_iter().enumerate() {
        let sys = assemble(mesh, &weight)?;
        let u = alloc::vec![prob.alpha; mesh.n_dofs()];
        let l = alloc::vec![0.0; mesh.n_dofs()];
        let rep = solve_potential(&sys, &l, &u)?;
        grads[i] = sys.k.bilinear(&rep.v, &rep.v);
        twos[i] = rep.q_vv;
        n_dofs_fine = mesh.n_dofs();
    }
    let grad_z = (4.0 * grads[1] - grads[0]) / 3.0;
    let two_e = (4.0 * twos[1] - twos[0]) / 3.0;
    Ok(WzComparison {
        eps: prob.eps,
        grad_w: oracle.grad_energy,
        grad_z_coarse: grads[0],
        grad_z_fine: grads[1],
        grad_z,
        two_e,
        ratio: grad_z / oracle.grad_energy,
        two_e_ratio: two_e / oracle.grad_energy,
        two_e_law: two_e * prob.eps.ln().abs() / (PI * prob.alpha * prob.alpha),
        n_dofs_fine,
    })
}
