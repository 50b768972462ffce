//! Domains, weights, poles and the logarithmic cut-off.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::ops::{Add, Mul, Neg, Sub};

use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::{Error, Result};

/// Number of stored boundary samples per domain.
pub const BOUNDARY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// The unit disk centered at the origin.
    UnitDisk,
    /// `[0, width] × [0, height]`.
    Rectangle { width: f64, height: f64 },
    /// `{x₁ > 0, x₁²/(L²+ε²) + x₂²/L² < 1}` with `L = length`, `ε = eps`.
    HalfEllipse { length: f64, eps: f64 },
    /// Simple polygon; vertices are reoriented counter-clockwise.
    Polygon(Vec<Point>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub t: f64,
    pub point: Point,
    pub normal: Point,
}

/// A bounded Lipschitz domain with a counter-clockwise boundary
/// parametrized over `[0, 1)`.
///
/// Parametrizations: the disk uses the polar angle `2πt`; rectangles and
/// polygons use normalized arclength starting at the first vertex
/// (`(0,0)` for rectangles); the half-ellipse runs along the curved arc
/// for `t ∈ [0, ½)` (angle `−π/2 + 2πt`) and down the flat side `x₁ = 0`
/// for `t ∈ [½, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    samples: Vec<BoundarySample>,
    // cumulative arclength at each vertex for polygonal kinds
    vertices: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Domain {
    pub fn new(kind: DomainKind) -> Result<Self> {
        let mut vertices = Vec::new();
        match &kind {
            DomainKind::UnitDisk => {}
            &DomainKind::Rectangle { width, height } => {
                if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
                    return Err(Error::InvalidDomain("rectangle sides must be positive"));
                }
                vertices = Vec::from([
                    Point::new(0.0, 0.0),
                    Point::new(width, 0.0),
                    Point::new(width, height),
                    Point::new(0.0, height),
                ]);
            }
            &DomainKind::HalfEllipse { length, eps } => {
                if !(length > 0.0 && eps > 0.0 && eps < 0.5 * length) {
                    return Err(Error::InvalidDomain("half-ellipse needs 0 < eps < length/2"));
                }
            }
            DomainKind::Polygon(v) => {
                if v.len() < 3 {
                    return Err(Error::InvalidDomain("polygon needs at least 3 vertices"));
                }
                let mut v = v.clone();
                if shoelace(&v) < 0.0 {
                    v.reverse();
                }
                if shoelace(&v) <= 0.0 {
                    return Err(Error::InvalidDomain("degenerate polygon"));
                }
                if !polygon_is_simple(&v) {
                    return Err(Error::InvalidDomain("polygon edges intersect"));
                }
                vertices = v;
            }
        }
        let kind = match kind {
            DomainKind::Polygon(_) => DomainKind::Polygon(vertices.clone()),
            k => k,
        };
        let mut cumulative = Vec::with_capacity(vertices.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..vertices.len() {
            acc += vertices[i].dist(vertices[(i + 1) % vertices.len()]);
            cumulative.push(acc);
        }
        let mut domain = Domain { kind, samples: Vec::new(), vertices, cumulative };
        domain.samples = (0..BOUNDARY_SAMPLES)
            .map(|i| {
                let t = i as f64 / BOUNDARY_SAMPLES as f64;
                BoundarySample { t, point: domain.point_at(t), normal: domain.normal_at(t) }
            })
            .collect();
        Ok(domain)
    }

    pub fn unit_disk() -> Self {
        Self::new(DomainKind::UnitDisk).expect("unit disk is valid")
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        Self::new(DomainKind::Rectangle { width, height })
    }

    pub fn half_ellipse(length: f64, eps: f64) -> Result<Self> {
        Self::new(DomainKind::HalfEllipse { length, eps })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Self::new(DomainKind::Polygon(vertices))
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    fn perimeter_polygonal(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn ellipse_axes(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::HalfEllipse { length, eps } => ((length * length + eps * eps).sqrt(), length),
            _ => unreachable!(),
        }
    }

    /// Boundary point at parameter `t` (taken modulo 1).
    pub fn point_at(&self, t: f64) -> Point {
        let t = t - t.floor();
        match self.kind {
            DomainKind::UnitDisk => Point::new((TAU * t).cos(), (TAU * t).sin()),
            DomainKind::HalfEllipse { length, .. } => {
                let (a, b) = self.ellipse_axes();
                if t < 0.5 {
                    let phi = -0.5 * PI + TAU * t;
                    Point::new(a * phi.cos(), b * phi.sin())
                } else {
                    Point::new(0.0, length - 4.0 * length * (t - 0.5))
                }
            }
            _ => {
                let s = t * self.perimeter_polygonal();
                let i = self.edge_at(s);
                let n = self.vertices.len();
                let len = self.cumulative[i + 1] - self.cumulative[i];
                self.vertices[i].lerp(self.vertices[(i + 1) % n], (s - self.cumulative[i]) / len)
            }
        }
    }

    fn edge_at(&self, s: f64) -> usize {
        let n = self.vertices.len();
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(n - 1)
    }

    /// Outward unit normal at parameter `t`. At corners the normal of the
    /// side starting at `t` is returned.
    pub fn normal_at(&self, t: f64) -> Point {
        let t = t - t.floor();
        match self.kind {
            DomainKind::UnitDisk => self.point_at(t),
            DomainKind::HalfEllipse { .. } => {
                let (a, b) = self.ellipse_axes();
                if t < 0.5 {
                    let phi = -0.5 * PI + TAU * t;
                    let n = Point::new(phi.cos() / a, phi.sin() / b);
                    n * (1.0 / n.norm())
                } else {
                    Point::new(-1.0, 0.0)
                }
            }
            _ => {
                let s = t * self.perimeter_polygonal();
                let i = self.edge_at(s);
                let e = self.vertices[(i + 1) % self.vertices.len()] - self.vertices[i];
                Point::new(e.y, -e.x) * (1.0 / e.norm())
            }
        }
    }

    /// Parameters of the non-smooth boundary points, ascending.
    pub fn corner_params(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::UnitDisk => Vec::new(),
            DomainKind::HalfEllipse { .. } => Vec::from([0.0, 0.5]),
            _ => {
                let p = self.perimeter_polygonal();
                self.cumulative[..self.vertices.len()].iter().map(|c| c / p).collect()
            }
        }
    }

    /// Boundary length.
    pub fn perimeter(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => TAU,
            DomainKind::HalfEllipse { length, .. } => {
                let (a, b) = self.ellipse_axes();
                // half of the ellipse circumference plus the flat side
                let arc = integrate_with_breaks(
                    &mut |phi: f64| (a * a * phi.sin().powi(2) + b * b * phi.cos().powi(2)).sqrt(),
                    &[-0.5 * PI, 0.0, 0.5 * PI],
                    QuadOptions { rel_tol: 1e-13, ..Default::default() },
                )
                .unwrap_or(f64::NAN);
                arc + 2.0 * length
            }
            _ => self.perimeter_polygonal(),
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => PI,
            DomainKind::HalfEllipse { .. } => {
                let (a, b) = self.ellipse_axes();
                0.5 * PI * a * b
            }
            _ => shoelace(&self.vertices),
        }
    }

    /// Largest `|x|` over the closed domain.
    pub fn max_radius(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => 1.0,
            DomainKind::HalfEllipse { .. } => {
                let (a, b) = self.ellipse_axes();
                a.max(b)
            }
            _ => self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self.kind {
            DomainKind::UnitDisk => (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            DomainKind::HalfEllipse { .. } => {
                let (a, b) = self.ellipse_axes();
                (Point::new(0.0, -b), Point::new(a, b))
            }
            _ => {
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = -lo;
                for v in &self.vertices {
                    lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: Point) -> bool {
        match self.kind {
            DomainKind::UnitDisk => p.x * p.x + p.y * p.y < 1.0,
            DomainKind::Rectangle { width, height } => p.x > 0.0 && p.x < width && p.y > 0.0 && p.y < height,
            DomainKind::HalfEllipse { .. } => {
                let (a, b) = self.ellipse_axes();
                p.x > 0.0 && (p.x / a).powi(2) + (p.y / b).powi(2) < 1.0
            }
            DomainKind::Polygon(_) => {
                let n = self.vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let (u, v) = (self.vertices[i], self.vertices[(i + 1) % n]);
                    if segment_distance(p, u, v).0 == 0.0 {
                        return false;
                    }
                    if (u.y > p.y) != (v.y > p.y) {
                        let x = u.x + (p.y - u.y) / (v.y - u.y) * (v.x - u.x);
                        if p.x < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Nearest boundary point as `(parameter, point, distance)`, ties going
    /// to the smallest parameter.
    pub fn nearest_boundary_point(&self, p: Point) -> (f64, Point, f64) {
        let mut cands: Vec<(f64, Point, f64)> = Vec::new();
        match self.kind {
            DomainKind::UnitDisk => {
                let r = p.norm();
                if r == 0.0 {
                    cands.push((0.0, Point::new(1.0, 0.0), 1.0));
                } else {
                    let mut t = p.y.atan2(p.x) / TAU;
                    if t < 0.0 {
                        t += 1.0;
                    }
                    if t >= 1.0 {
                        t = 0.0;
                    }
                    cands.push((t, p * (1.0 / r), (1.0 - r).abs()));
                }
            }
            DomainKind::HalfEllipse { length, .. } => {
                let y = p.y.clamp(-length, length);
                cands.push((0.5 + (length - y) / (4.0 * length), Point::new(0.0, y), p.dist(Point::new(0.0, y))));
                let (t, q) = self.nearest_on_arc(p);
                cands.push((t, q, p.dist(q)));
            }
            _ => {
                let n = self.vertices.len();
                let per = self.perimeter_polygonal();
                for i in 0..n {
                    let (u, v) = (self.vertices[i], self.vertices[(i + 1) % n]);
                    let (d, s) = segment_distance(p, u, v);
                    let mut t = (self.cumulative[i] + s * u.dist(v)) / per;
                    if t >= 1.0 {
                        t -= 1.0;
                    }
                    cands.push((t, u.lerp(v, s), d));
                }
            }
        }
        let best = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let tol = 1e-13 * best.max(1e-300) + 1e-15;
        *cands.iter().filter(|c| c.2 <= best + tol).min_by(|a, b| a.0.total_cmp(&b.0)).unwrap()
    }

    fn nearest_on_arc(&self, p: Point) -> (f64, Point) {
        let (a, b) = self.ellipse_axes();
        let g = |phi: f64| (a * phi.cos() - p.x).powi(2) + (b * phi.sin() - p.y).powi(2);
        let n = 512;
        let mut best = (-0.5 * PI, g(-0.5 * PI));
        for i in 1..=n {
            let phi = -0.5 * PI + PI * i as f64 / n as f64;
            let v = g(phi);
            if v < best.1 {
                best = (phi, v);
            }
        }
        // Newton on g′/2, kept inside the neighbourhood of the best sample
        let step = PI / n as f64;
        let (lo, hi) = ((best.0 - step).max(-0.5 * PI), (best.0 + step).min(0.5 * PI));
        let mut phi = best.0;
        for _ in 0..50 {
            let (s, c) = phi.sin_cos();
            let d1 = -(a * c - p.x) * a * s + (b * s - p.y) * b * c;
            let d2 = a * a * s * s - (a * c - p.x) * a * c + b * b * c * c - (b * s - p.y) * b * s;
            if d2 <= 0.0 {
                break;
            }
            let next = (phi - d1 / d2).clamp(lo, hi);
            if (next - phi).abs() < 1e-15 {
                phi = next;
                break;
            }
            phi = next;
        }
        if g(phi) > best.1 {
            phi = best.0;
        }
        let t = (phi + 0.5 * PI) / TAU;
        (t, Point::new(a * phi.cos(), b * phi.sin()))
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.nearest_boundary_point(p).2
    }
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Distance from `p` to segment `[u, v]` and the clamped segment parameter.
fn segment_distance(p: Point, u: Point, v: Point) -> (f64, f64) {
    let e = v - u;
    let s = ((p - u).dot(e) / e.dot(e)).clamp(0.0, 1.0);
    (p.dist(u.lerp(v, s)), s)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polygon_is_simple(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// True when no two non-adjacent edges of the closed polyline cross.
pub fn closed_polyline_is_simple(points: &[Point]) -> bool {
    polygon_is_simple(points)
}

/// Pole `a`, its boundary projection `P_a` and the slit `S_a = [a, P_a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleConfig {
    pub a: Point,
    pub p_a: Point,
    pub d_a: f64,
    /// Direction of `P_a − a`, in `[0, 2π)`.
    pub omega_a: f64,
    /// Boundary parameter of `P_a`.
    pub boundary_param: f64,
}

impl PoleConfig {
    /// Unit vector from `a` towards `P_a`.
    pub fn direction(&self) -> Point {
        Point::new(self.omega_a.cos(), self.omega_a.sin())
    }

    /// `ν_a = (−sin ω_a, cos ω_a)`; the `+` side of the slit is where
    /// `(x − a)·ν_a > 0`.
    pub fn nu(&self) -> Point {
        Point::new(-self.omega_a.sin(), self.omega_a.cos())
    }

    pub fn segment(&self) -> (Point, Point) {
        (self.a, self.p_a)
    }

    /// Signed side of `x` relative to the line through the slit.
    pub fn side(&self, x: Point) -> f64 {
        (x - self.a).dot(self.nu())
    }
}

/// Projects the pole onto the boundary.
pub fn project_to_boundary(domain: &Domain, a: Point) -> Result<PoleConfig> {
    if !a.x.is_finite() || !a.y.is_finite() || !domain.contains(a) {
        return Err(Error::PoleOutsideDomain { x: a.x, y: a.y });
    }
    let (t, p_a, d_a) = domain.nearest_boundary_point(a);
    if !(d_a > 0.0) {
        return Err(Error::PoleOutsideDomain { x: a.x, y: a.y });
    }
    let dir = p_a - a;
    let mut omega = dir.y.atan2(dir.x);
    if omega < 0.0 {
        omega += TAU;
    }
    if omega >= TAU {
        omega = 0.0;
    }
    Ok(PoleConfig { a, p_a, d_a, omega_a: omega, boundary_param: t })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Disk { center: Point, radius: f64 },
    Rect { min: Point, max: Point },
}

impl Region {
    pub fn contains(&self, x: Point) -> bool {
        match *self {
            Region::Disk { center, radius } => x.dist(center) < radius,
            Region::Rect { min, max } => x.x >= min.x && x.x <= max.x && x.y >= min.y && x.y <= max.y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightForm {
    Constant(f64),
    /// `p(x) = Σ c_k |x|^{2k}`.
    Radial(Vec<f64>),
    /// First matching region wins, `default` elsewhere.
    PiecewiseConstant {
        regions: Vec<(Region, f64)>,
        default: f64,
    },
}

/// A weight `p ∈ L^∞` with a declared essential lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub form: WeightForm,
    pub lower_bound: f64,
}

impl WeightSpec {
    pub fn constant(c: f64) -> Self {
        Self { form: WeightForm::Constant(c), lower_bound: c }
    }

    pub fn radial(coefficients: Vec<f64>, lower_bound: f64) -> Self {
        Self { form: WeightForm::Radial(coefficients), lower_bound }
    }

    pub fn piecewise(regions: Vec<(Region, f64)>, default: f64, lower_bound: f64) -> Self {
        Self { form: WeightForm::PiecewiseConstant { regions, default }, lower_bound }
    }

    /// Checks the lower bound over the domain (exactly for constant and
    /// piecewise forms, on a fine radial grid for polynomials).
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !(self.lower_bound > 0.0) || !self.lower_bound.is_finite() {
            return Err(Error::InvalidWeight("lower bound must be positive"));
        }
        let ok = match &self.form {
            WeightForm::Constant(c) => c.is_finite() && *c >= self.lower_bound,
            WeightForm::PiecewiseConstant { regions, default } => regions
                .iter()
                .map(|r| r.1)
                .chain(core::iter::once(*default))
                .all(|v| v.is_finite() && v >= self.lower_bound),
            WeightForm::Radial(c) => {
                let r2 = domain.max_radius().powi(2);
                !c.is_empty()
                    && c.iter().all(|v| v.is_finite())
                    && (0..=2000).all(|i| poly(c, r2 * i as f64 / 2000.0) >= self.lower_bound)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidWeight("weight falls below its declared lower bound"))
        }
    }

    /// `‖p‖_∞` over the domain.
    pub fn sup_norm(&self, domain: &Domain) -> f64 {
        match &self.form {
            WeightForm::Constant(c) => *c,
            WeightForm::PiecewiseConstant { regions, default } => regions.iter().map(|r| r.1).fold(*default, f64::max),
            WeightForm::Radial(c) => {
                let r2 = domain.max_radius().powi(2);
                (0..=4000).map(|i| poly(c, r2 * i as f64 / 4000.0)).fold(0.0, f64::max)
            }
        }
    }

    /// True when the weight is a polynomial of degree ≥ 2 in `x`.
    pub fn needs_high_order_quadrature(&self) -> bool {
        matches!(&self.form, WeightForm::Radial(c) if c.len() > 1)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.form, WeightForm::Constant(_))
    }
}

fn poly(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
}

/// `p(x)`, evaluated in closed form.
pub fn eval_weight(w: &WeightSpec, x: Point) -> f64 {
    match &w.form {
        WeightForm::Constant(c) => *c,
        WeightForm::Radial(c) => poly(c, x.dot(x)),
        WeightForm::PiecewiseConstant { regions, default } => {
            regions.iter().find(|r| r.0.contains(x)).map_or(*default, |r| r.1)
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}

/// Logarithmic cut-off `η_r`, equal to 1 on `|x| < r`, 0 on `|x| > √r`.
pub fn cutoff_eta(r: f64, x: Point) -> Result<f64> {
    check_radius(r)?;
    let rho = x.norm();
    Ok(if rho < r {
        1.0
    } else if rho > r.sqrt() {
        0.0
    } else {
        ((2.0 * rho.ln() - r.ln()) / r.ln()).clamp(0.0, 1.0)
    })
}

/// `∫|∇η_r|² = 4π/|log r|`.
pub fn cutoff_energy(r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(4.0 * PI / r.ln().abs())
}

/// `∫|∇η_r|²` by radial quadrature of `2πρ (∂_ρ η_r)²` over `[r, √r]`.
pub fn cutoff_energy_quadrature(r: f64) -> Result<f64> {
    check_radius(r)?;
    let log_r = r.ln();
    let mut integrand = |rho: f64| {
        let d_eta = 2.0 / (rho * log_r);
        TAU * rho * d_eta * d_eta
    };
    // geometric breakpoints keep each panel's dynamic range small
    let hi = r.sqrt();
    let panels = 16;
    let breaks: Vec<f64> = (0..=panels).map(|i| r * (hi / r).powf(i as f64 / panels as f64)).collect();
    integrate_with_breaks(&mut integrand, &breaks, QuadOptions { rel_tol: 1e-13, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn disk_projection_examples() {
        let d = Domain::unit_disk();
        let p = project_to_boundary(&d, Point::new(0.5, 0.0)).unwrap();
        assert!(close(p.p_a.x, 1.0, 1e-15) && close(p.p_a.y, 0.0, 1e-15));
        assert!(close(p.d_a, 0.5, 1e-15) && close(p.omega_a, 0.0, 1e-15));
        let p = project_to_boundary(&d, Point::new(0.0, -0.25)).unwrap();
        assert!(close(p.p_a.y, -1.0, 1e-15) && close(p.p_a.x, 0.0, 1e-15));
        assert!(close(p.d_a, 0.75, 1e-15));
        assert!(close(p.omega_a, 1.5 * PI, 1e-14));
    }

    #[test]
    fn disk_center_ties_to_parameter_zero() {
        let p = project_to_boundary(&Domain::unit_disk(), Point::new(0.0, 0.0)).unwrap();
        assert_eq!(p.boundary_param, 0.0);
        assert_eq!(p.p_a, Point::new(1.0, 0.0));
    }

    #[test]
    fn rectangle_projection() {
        let d = Domain::rectangle(2.0, 1.0).unwrap();
        let p = project_to_boundary(&d, Point::new(0.3, 0.5)).unwrap();
        assert!(close(p.d_a, 0.3, 1e-15));
        assert!(close(p.p_a.x, 0.0, 1e-15) && close(p.p_a.y, 0.5, 1e-15));
        // equidistant from bottom and left: bottom side has the smaller parameter
        let p = project_to_boundary(&d, Point::new(0.25, 0.25)).unwrap();
        assert_eq!(p.p_a, Point::new(0.25, 0.0));
    }

    #[test]
    fn half_ellipse_slit_pole() {
        let eps = 0.1;
        let d = Domain::half_ellipse(1.0, eps).unwrap();
        let p = project_to_boundary(&d, Point::new(eps, 0.0)).unwrap();
        assert!(close(p.p_a.x, 0.0, 1e-15) && close(p.p_a.y, 0.0, 1e-15));
        assert!(close(p.d_a, eps, 1e-15));
        assert!(close(p.omega_a, PI, 1e-15));
        assert!(close(p.boundary_param, 0.75, 1e-15));
    }

    #[test]
    fn poles_outside_are_rejected() {
        let d = Domain::unit_disk();
        assert!(matches!(project_to_boundary(&d, Point::new(1.0, 0.0)), Err(Error::PoleOutsideDomain { .. })));
        assert!(project_to_boundary(&d, Point::new(2.0, 0.0)).is_err());
        let r = Domain::rectangle(1.0, 1.0).unwrap();
        assert!(project_to_boundary(&r, Point::new(0.0, 0.5)).is_err());
    }

    #[test]
    fn polygon_is_reoriented_and_checked() {
        let cw = Vec::from([Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)]);
        let d = Domain::polygon(cw).unwrap();
        assert!(close(d.area(), 0.5, 1e-15));
        assert!(d.contains(Point::new(0.2, 0.2)));
        assert!(!d.contains(Point::new(0.6, 0.6)));
        let bow = Vec::from([Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        assert!(Domain::polygon(bow).is_err());
    }

    #[test]
    fn sampled_normals_are_unit_and_outward() {
        for d in [Domain::unit_disk(), Domain::rectangle(2.0, 1.0).unwrap(), Domain::half_ellipse(1.0, 0.1).unwrap()] {
            for s in d.samples() {
                assert!((s.normal.norm() - 1.0).abs() <= 1e-12);
                let inward = s.point - s.normal * 1e-6;
                let outward = s.point + s.normal * 1e-6;
                assert!(!d.contains(outward));
                if !d.corner_params().iter().any(|&c| (c - s.t).abs() < 1e-9) {
                    assert!(d.contains(inward), "{:?} at t={}", d.kind(), s.t);
                }
            }
            let pts: Vec<Point> = d.samples().iter().step_by(16).map(|s| s.point).collect();
            assert!(closed_polyline_is_simple(&pts));
        }
    }

    #[test]
    fn half_ellipse_perimeter_and_area() {
        let d = Domain::half_ellipse(1.0, 0.1).unwrap();
        let a = (1.01f64).sqrt();
        assert!(close(d.area(), 0.5 * PI * a, 1e-14));
        let poly: f64 =
            (0..BOUNDARY_SAMPLES).map(|i| d.samples[i].point.dist(d.samples[(i + 1) % BOUNDARY_SAMPLES].point)).sum();
        assert!((d.perimeter() - poly).abs() < 1e-5);
    }

    #[test]
    fn weights() {
        let x = Point::new(0.9, 0.0);
        assert_eq!(eval_weight(&WeightSpec::constant(1.0), x), 1.0);
        let w = WeightSpec::radial(Vec::from([1.0, 1.0]), 1.0);
        assert_eq!(eval_weight(&w, Point::new(0.0, 0.0)), 1.0);
        assert!(close(eval_weight(&w, x), 1.81, 1e-15));
        let pw = WeightSpec::piecewise(
            Vec::from([(Region::Disk { center: Point::new(0.0, 0.0), radius: 0.5 }, 2.0)]),
            1.0,
            1.0,
        );
        assert_eq!(eval_weight(&pw, x), 1.0);
        assert_eq!(eval_weight(&pw, Point::new(0.1, 0.1)), 2.0);
        let disk = Domain::unit_disk();
        assert!(w.validate(&disk).is_ok() && pw.validate(&disk).is_ok());
        assert!(close(w.sup_norm(&disk), 2.0, 1e-15));
        assert!(WeightSpec::radial(Vec::from([1.0, -2.0]), 0.5).validate(&disk).is_err());
        assert!(WeightSpec::constant(0.0).validate(&disk).is_err());
    }

    #[test]
    fn cutoff_values() {
        let r = 0.01;
        assert_eq!(cutoff_eta(r, Point::new(0.005, 0.0)).unwrap(), 1.0);
        assert_eq!(cutoff_eta(r, Point::new(0.2, 0.0)).unwrap(), 0.0);
        let mid = cutoff_eta(r, Point::new(r.powf(0.75), 0.0)).unwrap();
        assert!(close(mid, 0.5, 1e-14));
        assert!(matches!(cutoff_eta(1.0, Point::default()), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn cutoff_energy_values() {
        assert!(close(cutoff_energy((-4.0 * PI).exp()).unwrap(), 1.0, 1e-14));
        assert!(close(cutoff_energy((-4.0f64).exp()).unwrap(), PI, 1e-14));
        let q = cutoff_energy_quadrature(1e-3).unwrap();
        assert!(close(q, 4.0 * PI / (3.0 * 10f64.ln()), 1e-10 * q));
        assert!(cutoff_energy(0.0).is_err() && cutoff_energy_quadrature(1.5).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_stable_along_the_segment(x in -0.95f64..0.95, y in -0.95f64..0.95, t in 0.01f64..0.99) {
            prop_assume!(x * x + y * y < 0.9 && x * x + y * y > 1e-4);
            let d = Domain::unit_disk();
            let p = project_to_boundary(&d, Point::new(x, y)).unwrap();
            prop_assert!((p.a.dist(p.p_a) - p.d_a).abs() <= 1e-12);
            let q = p.a + p.direction() * p.d_a;
            prop_assert!(q.dist(p.p_a) <= 1e-12);
            let b = p.a.lerp(p.p_a, t);
            prop_assert!(d.contains(b));
            let p2 = project_to_boundary(&d, b).unwrap();
            prop_assert!(p2.p_a.dist(p.p_a) <= 1e-12);
        }

        #[test]
        fn rectangle_projection_invariants(x in 0.01f64..1.99, y in 0.01f64..0.99, t in 0.01f64..0.99) {
            let d = Domain::rectangle(2.0, 1.0).unwrap();
            let p = project_to_boundary(&d, Point::new(x, y)).unwrap();
            prop_assert!((p.a.dist(p.p_a) - p.d_a).abs() <= 1e-12);
            prop_assert!((p.a + p.direction() * p.d_a).dist(p.p_a) <= 1e-12);
            prop_assert!(d.contains(p.a.lerp(p.p_a, t)));
            let p2 = project_to_boundary(&d, p.a.lerp(p.p_a, t)).unwrap();
            prop_assert!(p2.p_a.dist(p.p_a) <= 1e-12);
        }

        #[test]
        fn half_ellipse_projection_is_a_minimizer(x in 0.01f64..0.9, y in -0.9f64..0.9) {
            let d = Domain::half_ellipse(1.0, 0.1).unwrap();
            prop_assume!(d.contains(Point::new(x, y)));
            let p = project_to_boundary(&d, Point::new(x, y)).unwrap();
            let brute = d.samples().iter().map(|s| s.point.dist(p.a)).fold(f64::INFINITY, f64::min);
            prop_assert!(p.d_a <= brute + 1e-12);
            prop_assert!((p.a + p.direction() * p.d_a).dist(p.p_a) <= 1e-12);
        }

        #[test]
        fn cutoff_is_monotone(r in 1e-8f64..0.9, s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            let e1 = cutoff_eta(r, Point::new(lo, 0.0)).unwrap();
            let e2 = cutoff_eta(r, Point::new(hi, 0.0)).unwrap();
            prop_assert!((0.0..=1.0).contains(&e1) && (0.0..=1.0).contains(&e2));
            prop_assert!(e2 <= e1);
            let r2 = r * 0.5;
            prop_assert!(cutoff_energy(r2).unwrap() < cutoff_energy(r).unwrap());
        }
    }
}
