//! Triangulations of `Ω` and of the slit domain `Ω ∖ S_a`.
//!
//! Points are laid out on circles centred at the pole (or at a domain
//! centre for plain meshes). Inside the slit length the radii follow
//! `r_k = d (k/K)^g`, so the spacing near the tip behaves like
//! `h (r/d)^{1−1/g}`; beyond it the spacing grows geometrically up to
//! `h_far`. Every circle inside the slit length has a point on the slit
//! itself. The boundary is sampled with the same spacing function, the
//! slit and boundary go in as constraint edges, and spade's constrained
//! Delaunay triangulation connects everything. Cutting duplicates each
//! slit node except the tip; triangles on the `ν_a < 0` side take the copy.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::geometry::{Domain, DomainKind, Point, PoleConfig};
use crate::{Error, Result};

/// Spacing controls for mesh generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Spacing along the slit near `P_a`, and everywhere for plain meshes.
    pub h: f64,
    /// Tip grading exponent `g ≥ 1`.
    pub grading: f64,
    /// Spacing far from the slit (`≥ h`).
    pub h_far: f64,
    /// Geometric growth rate of the spacing beyond the slit length.
    pub growth: f64,
    /// Structured grid for plain rectangle meshes.
    pub structured: bool,
}

impl MeshOptions {
    pub fn uniform(h: f64) -> Self {
        Self { h, grading: 1.0, h_far: h, growth: 0.0, structured: false }
    }

    pub fn graded(h: f64, grading: f64, h_far: f64) -> Self {
        Self { h, grading, h_far: h_far.max(h), growth: 0.2, structured: false }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument("mesh size h must be positive"));
        }
        if !(self.grading >= 1.0 && self.grading <= 8.0) {
            return Err(Error::InvalidArgument("grading must lie in [1, 8]"));
        }
        if !(self.h_far >= self.h && self.h_far.is_finite()) || !(self.growth >= 0.0) {
            return Err(Error::InvalidArgument("h_far must be at least h and growth non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeTag {
    Outer,
    CrackPlus,
    CrackMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TaggedEdge {
    pub v: [usize; 2],
    pub tag: EdgeTag,
}

/// P1 triangulation with duplicated crack DOFs.
///
/// The first `n_geometric` vertices are the geometric nodes; duplicates
/// for the `−` side of the slit are appended after them.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise index triples.
    pub triangles: Vec<[usize; 3]>,
    /// `(plus, minus)` DOFs for slit nodes strictly between `a` and `P_a`
    /// and at `P_a`, ordered from the tip outwards.
    pub crack_pairs: Vec<(usize, usize)>,
    pub tip_dof: Option<usize>,
    /// Boundary edges of the cut domain with their tags.
    pub edges: Vec<TaggedEdge>,
    /// Boundary parameter of each vertex on `∂Ω`.
    pub boundary_params: Vec<Option<f64>>,
    pub n_geometric: usize,
    pub h: f64,
    pub grading: f64,
    pub pole: Option<PoleConfig>,
}

impl SlitMesh {
    pub fn n_dofs(&self) -> usize {
        self.vertices.len()
    }

    /// Geometric node of every DOF (duplicates map to their `+` node).
    pub fn geometric_map(&self) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.vertices.len()).collect();
        for &(p, m) in &self.crack_pairs {
            map[m] = p;
        }
        map
    }

    /// The same triangulation with duplicates merged: the plain mesh on
    /// identical geometric nodes.
    pub fn plain_companion(&self) -> SlitMesh {
        let map = self.geometric_map();
        let n = self.n_geometric;
        let triangles: Vec<[usize; 3]> = self.triangles.iter().map(|t| [map[t[0]], map[t[1]], map[t[2]]]).collect();
        let edges = boundary_edges(&triangles, &self.vertices[..n], None, &[]);
        SlitMesh {
            vertices: self.vertices[..n].to_vec(),
            triangles,
            crack_pairs: Vec::new(),
            tip_dof: None,
            edges,
            boundary_params: self.boundary_params[..n].to_vec(),
            n_geometric: n,
            h: self.h,
            grading: self.grading,
            pole: None,
        }
    }

    /// Geometric slit edges, from the tip outwards.
    pub fn slit_edges(&self) -> Vec<(usize, usize)> {
        let map = self.geometric_map();
        let mut out: Vec<(usize, usize)> =
            self.edges.iter().filter(|e| e.tag == EdgeTag::CrackPlus).map(|e| (map[e.v[0]], map[e.v[1]])).collect();
        if let Some(pole) = self.pole {
            let key = |e: &(usize, usize)| {
                let m = self.vertices[e.0].lerp(self.vertices[e.1], 0.5);
                m.dist(pole.a)
            };
            out.sort_by(|x, y| key(x).total_cmp(&key(y)));
        }
        out
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * (self.vertices[b] - self.vertices[a]).cross(self.vertices[c] - self.vertices[a])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Number of distinct triangle edges.
    pub fn edge_count(&self) -> usize {
        let mut e: Vec<(usize, usize)> = Vec::with_capacity(3 * self.triangles.len());
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                e.push((a.min(b), a.max(b)));
            }
        }
        e.sort_unstable();
        e.dedup();
        e.len()
    }

    /// `V − E + F` counting triangles only.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Longest triangle edge.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| self.vertices[a].dist(self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Red refinement: every triangle splits into four, boundary midpoints
    /// are moved onto `∂Ω`, and the slit is cut again.
    pub fn refine_uniform(&self, domain: &Domain) -> Result<SlitMesh> {
        let plain = self.plain_companion();
        let slit = self.slit_edges();
        let n = plain.vertices.len();
        let mut vertices = plain.vertices.clone();
        let mut params = plain.boundary_params.clone();
        let mut outer: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for e in &plain.edges {
            outer.insert((e.v[0].min(e.v[1]), e.v[0].max(e.v[1])), ());
        }
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>, params: &mut Vec<Option<f64>>| {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = mid.get(&key) {
                return m;
            }
            let (p, t) = match (outer.contains_key(&key), params[a], params[b]) {
                (true, Some(ta), Some(tb)) => {
                    let mut dt = tb - ta;
                    if dt > 0.5 {
                        dt -= 1.0;
                    } else if dt <= -0.5 {
                        dt += 1.0;
                    }
                    let mut t = ta + 0.5 * dt;
                    t -= t.floor();
                    (domain.point_at(t), Some(t))
                }
                _ => (vertices[a].lerp(vertices[b], 0.5), None),
            };
            let id = vertices.len();
            vertices.push(p);
            params.push(t);
            mid.insert(key, id);
            id
        };
        let mut triangles = Vec::with_capacity(4 * plain.triangles.len());
        for t in &plain.triangles {
            let [a, b, c] = *t;
            let ab = midpoint(a, b, &mut vertices, &mut params);
            let bc = midpoint(b, c, &mut vertices, &mut params);
            let ca = midpoint(c, a, &mut vertices, &mut params);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut new_slit = Vec::with_capacity(2 * slit.len());
        for &(a, b) in &slit {
            let m = mid[&(a.min(b), a.max(b))];
            new_slit.push((a, m));
            new_slit.push((m, b));
        }
        debug_assert!(vertices.len() > n);
        let geo = GeoMesh { vertices, triangles, params };
        let mut out = match self.pole {
            Some(pole) => cut(geo, &new_slit, pole)?,
            None => uncut(geo),
        };
        out.h = 0.5 * self.h;
        out.grading = self.grading;
        Ok(out)
    }
}

struct GeoMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    params: Vec<Option<f64>>,
}

/// Radii of the point circles and the local spacing function.
#[derive(Debug, Clone)]
struct Rings {
    radii: Vec<f64>,
    tail: f64,
}

impl Rings {
    fn new(inner: f64, opts: &MeshOptions, r_max: f64) -> Self {
        let mut radii = Vec::new();
        let mut delta;
        if inner > 0.0 {
            let k = (opts.grading * inner / opts.h).ceil().max(2.0) as usize;
            for i in 1..=k {
                radii.push(inner * (i as f64 / k as f64).powf(opts.grading));
            }
            delta = radii[k - 1] - radii[k - 2];
        } else {
            radii.push(opts.h);
            delta = opts.h;
        }
        let mut r = *radii.last().unwrap();
        while r < r_max + delta {
            delta = (delta * (1.0 + opts.growth)).min(opts.h_far).max(delta.min(opts.h_far));
            r += delta;
            radii.push(r);
        }
        Rings { radii, tail: delta }
    }

    /// Local spacing at distance `r` from the centre.
    fn spacing(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|&x| x <= r);
        if k == 0 {
            self.radii[0]
        } else if k >= self.radii.len() {
            self.tail
        } else {
            self.radii[k] - self.radii[k - 1]
        }
    }
}

fn mesh_center(domain: &Domain) -> Point {
    match domain.kind() {
        DomainKind::UnitDisk => Point::new(0.0, 0.0),
        _ => {
            let (lo, hi) = domain.bounding_box();
            let c = lo.lerp(hi, 0.5);
            if domain.contains(c) {
                c
            } else {
                // first interior sample point inward from the boundary
                let s = domain.samples()[0];
                s.point - s.normal * (0.25 * lo.dist(hi))
            }
        }
    }
}

/// Boundary nodes `(parameter, point)` placed with the spacing function,
/// always including the given fixed parameters exactly.
fn boundary_nodes(domain: &Domain, fixed: &[(f64, Point)], spacing: &dyn Fn(Point) -> f64) -> Vec<(f64, Point)> {
    let mut out = Vec::new();
    for (i, &(t0, p0)) in fixed.iter().enumerate() {
        let t1 = if i + 1 < fixed.len() { fixed[i + 1].0 } else { fixed[0].0 + 1.0 };
        out.push((t0, p0));
        // sample finely enough that each step is a small fraction of the spacing
        let mut m = 4096usize;
        let (pts, density) = loop {
            let pts: Vec<Point> = (0..=m).map(|j| domain.point_at(t0 + (t1 - t0) * j as f64 / m as f64)).collect();
            let mut worst: f64 = 0.0;
            let mut density = Vec::with_capacity(m + 1);
            density.push(0.0);
            for j in 0..m {
                let len = pts[j].dist(pts[j + 1]);
                let s = spacing(pts[j].lerp(pts[j + 1], 0.5));
                worst = worst.max(len / s);
                density.push(density[j] + len / s);
            }
            if worst <= 0.125 || m >= 1 << 21 {
                break (pts, density);
            }
            m = ((m as f64) * worst * 8.0 + 1.0).min((1u64 << 21) as f64) as usize;
        };
        let _ = pts;
        let total = density[m];
        let segments = total.round().max(1.0) as usize;
        let mut j = 0;
        for s in 1..segments {
            let target = total * s as f64 / segments as f64;
            while density[j + 1] < target {
                j += 1;
            }
            let frac = (target - density[j]) / (density[j + 1] - density[j]);
            let t = t0 + (t1 - t0) * (j as f64 + frac) / m as f64;
            let t = t - t.floor();
            out.push((t, domain.point_at(t)));
        }
    }
    out
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (u, v) = (poly[i], poly[(i + 1) % n]);
        if (u.y > p.y) != (v.y > p.y) {
            let x = u.x + (p.y - u.y) / (v.y - u.y) * (v.x - u.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn triangulate(points: &[Point], constraints: Vec<[usize; 2]>, boundary: &[Point]) -> Result<Vec<[usize; 3]>> {
    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut conflicts = 0usize;
    let cdt =
        ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(verts, constraints, |_| conflicts += 1)
            .map_err(|_| Error::MeshingFailure("point set rejected by the triangulator"))?;
    if conflicts > 0 {
        return Err(Error::MeshingFailure("constraint edges intersect"));
    }
    if cdt.num_vertices() != points.len() {
        return Err(Error::MeshingFailure("coincident mesh points"));
    }
    let mut triangles = Vec::with_capacity(2 * points.len());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.index());
        let centroid = Point::new(
            (points[a].x + points[b].x + points[c].x) / 3.0,
            (points[a].y + points[b].y + points[c].y) / 3.0,
        );
        if !point_in_polygon(centroid, boundary) {
            continue;
        }
        let area = (points[b] - points[a]).cross(points[c] - points[a]);
        triangles.push(if area > 0.0 { [a, b, c] } else { [a, c, b] });
    }
    if triangles.is_empty() {
        return Err(Error::MeshingFailure("empty triangulation"));
    }
    Ok(triangles)
}

/// Boundary edges of a triangulation (edges used by exactly one triangle),
/// tagged against the slit when one is given.
fn boundary_edges(
    triangles: &[[usize; 3]],
    vertices: &[Point],
    pole: Option<&PoleConfig>,
    minus: &[bool],
) -> Vec<TaggedEdge> {
    let mut count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let e = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
            e.0 += 1;
        }
    }
    let mut out = Vec::new();
    for (_, (c, v)) in count {
        if c != 1 {
            continue;
        }
        let mut tag = EdgeTag::Outer;
        if let Some(pole) = pole {
            let m = vertices[v[0]].lerp(vertices[v[1]], 0.5);
            let along = (m - pole.a).dot(pole.direction());
            let across = (m - pole.a).dot(pole.nu());
            if across.abs() <= 1e-12 * (1.0 + pole.d_a) && along > 0.0 && along < pole.d_a {
                let is_minus = v.iter().any(|&i| minus.get(i).copied().unwrap_or(false));
                tag = if is_minus { EdgeTag::CrackMinus } else { EdgeTag::CrackPlus };
            }
        }
        out.push(TaggedEdge { v, tag });
    }
    out.sort();
    out
}

fn uncut(geo: GeoMesh) -> SlitMesh {
    let edges = boundary_edges(&geo.triangles, &geo.vertices, None, &[]);
    let n = geo.vertices.len();
    SlitMesh {
        vertices: geo.vertices,
        triangles: geo.triangles,
        crack_pairs: Vec::new(),
        tip_dof: None,
        edges,
        boundary_params: geo.params,
        n_geometric: n,
        h: 0.0,
        grading: 1.0,
        pole: None,
    }
}

/// Duplicates slit nodes (all but the tip) and reattaches `−` side triangles.
fn cut(geo: GeoMesh, slit: &[(usize, usize)], pole: PoleConfig) -> Result<SlitMesh> {
    let n = geo.vertices.len();
    let mut nodes: Vec<usize> = slit.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let dist_a = |i: usize| geo.vertices[i].dist(pole.a);
    nodes.sort_by(|&x, &y| dist_a(x).total_cmp(&dist_a(y)));
    let tip = *nodes.first().ok_or(Error::MeshingFailure("slit has no nodes"))?;
    if dist_a(tip) > 1e-12 * (1.0 + pole.d_a) {
        return Err(Error::MeshingFailure("no mesh node at the pole"));
    }
    let mut vertices = geo.vertices;
    let mut params = geo.params;
    let mut dup = vec![usize::MAX; n];
    let mut crack_pairs = Vec::with_capacity(nodes.len() - 1);
    for &s in &nodes[1..] {
        let id = vertices.len();
        vertices.push(vertices[s]);
        params.push(params[s]);
        dup[s] = id;
        crack_pairs.push((s, id));
    }
    let mut triangles = geo.triangles;
    for t in &mut triangles {
        let c = Point::new(
            (vertices[t[0]].x + vertices[t[1]].x + vertices[t[2]].x) / 3.0,
            (vertices[t[0]].y + vertices[t[1]].y + vertices[t[2]].y) / 3.0,
        );
        if pole.side(c) < 0.0 {
            for v in t.iter_mut() {
                if dup[*v] != usize::MAX {
                    *v = dup[*v];
                }
            }
        }
    }
    let mut minus = vec![false; vertices.len()];
    for &(_, m) in &crack_pairs {
        minus[m] = true;
    }
    let edges = boundary_edges(&triangles, &vertices, Some(&pole), &minus);
    Ok(SlitMesh {
        vertices,
        triangles,
        crack_pairs,
        tip_dof: Some(tip),
        edges,
        boundary_params: params,
        n_geometric: n,
        h: 0.0,
        grading: 1.0,
        pole: Some(pole),
    })
}

fn fixed_params(domain: &Domain, extra: Option<(f64, Point)>) -> Vec<(f64, Point)> {
    let mut fixed: Vec<(f64, Point)> = domain.corner_params().into_iter().map(|t| (t, domain.point_at(t))).collect();
    if let Some((t, p)) = extra {
        fixed.retain(|&(s, _)| (s - t).abs() > 1e-12 && (s - t).abs() < 1.0 - 1e-12);
        fixed.push((t, p));
    }
    if fixed.is_empty() {
        fixed.push((0.0, domain.point_at(0.0)));
    }
    fixed.sort_by(|a, b| a.0.total_cmp(&b.0));
    fixed
}

fn far_radius(domain: &Domain, c: Point) -> f64 {
    let (lo, hi) = domain.bounding_box();
    [lo, hi, Point::new(lo.x, hi.y), Point::new(hi.x, lo.y)].iter().map(|p| p.dist(c)).fold(0.0, f64::max)
}

/// Interior ring points that keep a spacing-proportional distance from `∂Ω`.
fn ring_points(
    domain: &Domain,
    center: Point,
    rings: &Rings,
    first_angle: f64,
    skip_angle_zero_below: f64,
) -> Vec<Point> {
    let mut out = Vec::new();
    for (k, &r) in rings.radii.iter().enumerate() {
        let s = if k == 0 { r } else { r - rings.radii[k - 1] };
        let count = ((TAU * r / s).ceil() as usize).max(6);
        // stagger circles outside the slit length for better triangles
        let offset = if r > skip_angle_zero_below && k % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..count {
            if offset == 0.0 && i == 0 && r < skip_angle_zero_below {
                continue;
            }
            let theta = first_angle + TAU * (i as f64 + offset) / count as f64;
            let p = Point::new(center.x + r * theta.cos(), center.y + r * theta.sin());
            if !domain.contains(p) {
                continue;
            }
            if domain.boundary_distance(p) < 0.55 * rings.spacing(r) {
                continue;
            }
            out.push(p);
        }
    }
    out
}

/// Mesh of `Ω ∖ S_a` with duplicated crack DOFs.
pub fn build_slit_mesh(domain: &Domain, pole: &PoleConfig, opts: &MeshOptions) -> Result<SlitMesh> {
    opts.validate()?;
    if pole.d_a < 4.0 * opts.h {
        return Err(Error::SlitTooShort { d_a: pole.d_a, h: opts.h });
    }
    let rings = Rings::new(pole.d_a, opts, far_radius(domain, pole.a));
    let spacing = |p: Point| rings.spacing(p.dist(pole.a));
    let fixed = fixed_params(domain, Some((pole.boundary_param, pole.p_a)));
    let bnodes = boundary_nodes(domain, &fixed, &spacing);

    let mut points = Vec::new();
    let mut params = Vec::new();
    // slit nodes: tip, circle crossings, then P_a as a boundary node
    points.push(pole.a);
    params.push(None);
    for &r in rings.radii.iter().take_while(|&&r| r < pole.d_a * (1.0 - 1e-9)) {
        points.push(pole.a.lerp(pole.p_a, r / pole.d_a));
        params.push(None);
    }
    let n_slit_interior = points.len();
    let b0 = points.len();
    let mut p_a_index = usize::MAX;
    for &(t, p) in &bnodes {
        if p == pole.p_a {
            p_a_index = points.len();
        }
        points.push(p);
        params.push(Some(t));
    }
    if p_a_index == usize::MAX {
        return Err(Error::MeshingFailure("P_a missing from the boundary nodes"));
    }
    let nb = points.len() - b0;
    for p in ring_points(domain, pole.a, &rings, pole.omega_a, pole.d_a * (1.0 - 1e-9)) {
        points.push(p);
        params.push(None);
    }
    let mut constraints: Vec<[usize; 2]> = (0..nb).map(|i| [b0 + i, b0 + (i + 1) % nb]).collect();
    let mut slit: Vec<(usize, usize)> = (0..n_slit_interior - 1).map(|i| (i, i + 1)).collect();
    slit.push((n_slit_interior - 1, p_a_index));
    constraints.extend(slit.iter().map(|&(a, b)| [a, b]));
    let boundary: Vec<Point> = bnodes.iter().map(|b| b.1).collect();
    let triangles = triangulate(&points, constraints, &boundary)?;
    let mut mesh = cut(GeoMesh { vertices: points, triangles, params }, &slit, *pole)?;
    mesh.h = opts.h;
    mesh.grading = opts.grading;
    Ok(mesh)
}

/// Mesh of `Ω` without a slit.
pub fn build_plain_mesh(domain: &Domain, opts: &MeshOptions) -> Result<SlitMesh> {
    opts.validate()?;
    if opts.structured {
        if let DomainKind::Rectangle { width, height } = *domain.kind() {
            let mut mesh = structured_rectangle(domain, width, height, opts.h)?;
            mesh.grading = opts.grading;
            return Ok(mesh);
        }
        return Err(Error::InvalidArgument("structured meshes exist only for rectangles"));
    }
    let center = mesh_center(domain);
    let rings = Rings::new(0.0, opts, far_radius(domain, center));
    let spacing = |p: Point| rings.spacing(p.dist(center));
    let fixed = fixed_params(domain, None);
    let bnodes = boundary_nodes(domain, &fixed, &spacing);
    let mut points = Vec::from([center]);
    let mut params = Vec::from([None]);
    for &(t, p) in &bnodes {
        points.push(p);
        params.push(Some(t));
    }
    let nb = bnodes.len();
    for p in ring_points(domain, center, &rings, 0.0, 0.0) {
        points.push(p);
        params.push(None);
    }
    let constraints: Vec<[usize; 2]> = (0..nb).map(|i| [1 + i, 1 + (i + 1) % nb]).collect();
    let boundary: Vec<Point> = bnodes.iter().map(|b| b.1).collect();
    let triangles = triangulate(&points, constraints, &boundary)?;
    let mut mesh = uncut(GeoMesh { vertices: points, triangles, params });
    mesh.h = opts.h;
    mesh.grading = opts.grading;
    Ok(mesh)
}

fn structured_rectangle(domain: &Domain, width: f64, height: f64, h: f64) -> Result<SlitMesh> {
    let nx = (width / h).round().max(1.0) as usize;
    let ny = (height / h).round().max(1.0) as usize;
    let perimeter = 2.0 * (width + height);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut params = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point::new(width * i as f64 / nx as f64, height * j as f64 / ny as f64);
            let t = if j == 0 {
                Some(p.x / perimeter)
            } else if i == nx {
                Some((width + p.y) / perimeter)
            } else if j == ny {
                Some((width + height + (width - p.x)) / perimeter)
            } else if i == 0 {
                Some((2.0 * width + height + (height - p.y)) / perimeter)
            } else {
                None
            };
            vertices.push(p);
            params.push(t);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let _ = domain;
    let mut mesh = uncut(GeoMesh { vertices, triangles, params });
    mesh.h = h;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project_to_boundary;

    fn disk_slit(a: Point, opts: MeshOptions) -> (Domain, SlitMesh) {
        let d = Domain::unit_disk();
        let pole = project_to_boundary(&d, a).unwrap();
        let m = build_slit_mesh(&d, &pole, &opts).unwrap();
        (d, m)
    }

    fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
        let o1 = (b - a).cross(c - a);
        let o2 = (b - a).cross(d - a);
        let o3 = (d - c).cross(a - c);
        let o4 = (d - c).cross(b - c);
        o1 * o2 < 0.0 && o3 * o4 < 0.0
    }

    fn check_slit_structure(m: &SlitMesh) {
        let pole = m.pole.unwrap();
        for t in 0..m.triangles.len() {
            assert!(m.triangle_area(t) > 0.0);
        }
        // every crack pair sits on the slit; minus copies are used only by minus-side triangles
        for &(p, q) in &m.crack_pairs {
            assert_eq!(m.vertices[p], m.vertices[q]);
            let along = (m.vertices[p] - pole.a).dot(pole.direction());
            assert!(along > 0.0 && along <= pole.d_a * (1.0 + 1e-12));
            for t in &m.triangles {
                let c = (m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) * (1.0 / 3.0);
                if t.contains(&p) {
                    assert!(pole.side(c) > 0.0);
                }
                if t.contains(&q) {
                    assert!(pole.side(c) < 0.0);
                }
            }
        }
        let tip = m.tip_dof.unwrap();
        assert!(m.vertices[tip].dist(pole.a) < 1e-15);
        assert!(m.crack_pairs.iter().all(|&(p, q)| p != tip && q != tip));
        // P_a is duplicated
        assert!(m.crack_pairs.iter().any(|&(p, _)| m.vertices[p].dist(pole.p_a) < 1e-15));
        // no triangle edge crosses the slit
        for t in &m.triangles {
            for k in 0..3 {
                let (u, v) = (m.vertices[t[k]], m.vertices[t[(k + 1) % 3]]);
                assert!(!segments_cross(u, v, pole.a, pole.p_a));
            }
        }
        let plus = m.edges.iter().filter(|e| e.tag == EdgeTag::CrackPlus).count();
        let minus = m.edges.iter().filter(|e| e.tag == EdgeTag::CrackMinus).count();
        assert_eq!(plus, m.crack_pairs.len());
        assert_eq!(minus, m.crack_pairs.len());
    }

    #[test]
    fn disk_slit_mesh_structure() {
        let (_, m) = disk_slit(Point::new(0.5, 0.0), MeshOptions::uniform(0.05));
        check_slit_structure(&m);
        assert!((m.area() - core::f64::consts::PI).abs() < 0.02);
        // the slit from (0.5, 0) to (1, 0) is covered by edges
        let pts: Vec<f64> = m.crack_pairs.iter().map(|&(p, _)| m.vertices[p].x).collect();
        assert!((pts.last().unwrap() - 1.0).abs() < 1e-15);
        assert!(pts.iter().all(|&x| x > 0.5 && x <= 1.0));
    }

    #[test]
    fn euler_characteristic_is_preserved_by_cutting() {
        let (_, m) = disk_slit(Point::new(0.3, 0.2), MeshOptions::graded(0.04, 2.0, 0.1));
        let plain = m.plain_companion();
        let c = m.crack_pairs.len();
        assert_eq!(m.vertices.len(), plain.vertices.len() + c);
        assert_eq!(m.edge_count(), plain.edge_count() + c);
        assert_eq!(m.triangles.len(), plain.triangles.len());
        assert_eq!(plain.euler_characteristic(), 1);
        assert_eq!(m.euler_characteristic(), plain.euler_characteristic());
    }

    #[test]
    fn half_ellipse_slit() {
        let eps = 0.1;
        let d = Domain::half_ellipse(1.0, eps).unwrap();
        let pole = project_to_boundary(&d, Point::new(eps, 0.0)).unwrap();
        let m = build_slit_mesh(&d, &pole, &MeshOptions::graded(0.02, 2.0, 0.08)).unwrap();
        check_slit_structure(&m);
        for &(p, _) in &m.crack_pairs {
            let v = m.vertices[p];
            assert!(v.y == 0.0 && v.x >= 0.0 && v.x < eps);
        }
        assert_eq!(m.vertices[m.tip_dof.unwrap()], Point::new(eps, 0.0));
    }

    #[test]
    fn rectangle_slit() {
        let d = Domain::rectangle(2.0, 1.0).unwrap();
        let pole = project_to_boundary(&d, Point::new(0.2, 0.5)).unwrap();
        let m = build_slit_mesh(&d, &pole, &MeshOptions::graded(0.04, 2.0, 0.1)).unwrap();
        check_slit_structure(&m);
        assert!((m.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grading_clusters_nodes_at_the_tip() {
        let (_, m) = disk_slit(Point::new(0.5, 0.0), MeshOptions::graded(0.05, 2.0, 0.1));
        let pole = m.pole.unwrap();
        let first = m.vertices[m.crack_pairs[0].0].dist(pole.a);
        // r_1 = d / K², K = ceil(2 d / h) = 20
        assert!((first - 0.5 / 400.0).abs() < 1e-12);
    }

    #[test]
    fn short_slits_are_rejected() {
        let d = Domain::unit_disk();
        let pole = project_to_boundary(&d, Point::new(0.95, 0.0)).unwrap();
        assert!(matches!(build_slit_mesh(&d, &pole, &MeshOptions::uniform(0.02)), Err(Error::SlitTooShort { .. })));
    }

    #[test]
    fn plain_meshes() {
        let disk = build_plain_mesh(&Domain::unit_disk(), &MeshOptions::uniform(0.05)).unwrap();
        assert!(disk.crack_pairs.is_empty() && disk.tip_dof.is_none());
        assert!(disk.edges.iter().all(|e| e.tag == EdgeTag::Outer));
        assert_eq!(disk.euler_characteristic(), 1);
        let sq = Domain::rectangle(1.0, 1.0).unwrap();
        let grid = build_plain_mesh(&sq, &MeshOptions { structured: true, ..MeshOptions::uniform(0.25) }).unwrap();
        assert_eq!(grid.vertices.len(), 25);
        assert!((grid.area() - 1.0).abs() < 1e-14);
        let he = build_plain_mesh(&Domain::half_ellipse(1.0, 0.1).unwrap(), &MeshOptions::uniform(0.02)).unwrap();
        assert!((he.area() - 0.5 * core::f64::consts::PI * 1.01f64.sqrt()).abs() < 2e-3);
    }

    #[test]
    fn boundary_area_error_is_second_order() {
        let d = Domain::unit_disk();
        let e1 = (build_plain_mesh(&d, &MeshOptions::uniform(0.1)).unwrap().area() - core::f64::consts::PI).abs();
        let e2 = (build_plain_mesh(&d, &MeshOptions::uniform(0.05)).unwrap().area() - core::f64::consts::PI).abs();
        assert!(e1 / e2 > 3.0);
    }

    #[test]
    fn refinement_keeps_the_slit() {
        let (d, m) = disk_slit(Point::new(0.5, 0.0), MeshOptions::graded(0.08, 2.0, 0.15));
        let r = m.refine_uniform(&d).unwrap();
        check_slit_structure(&r);
        assert_eq!(r.triangles.len(), 4 * m.triangles.len());
        assert_eq!(r.crack_pairs.len(), 2 * m.crack_pairs.len());
        for (i, p) in r.boundary_params.iter().enumerate() {
            if let Some(t) = p {
                assert!(r.vertices[i].dist(d.point_at(*t)) < 1e-14);
            }
        }
        assert_eq!(r.euler_characteristic(), m.euler_characteristic());
    }

    #[test]
    fn deterministic() {
        let (_, a) = disk_slit(Point::new(0.2, -0.4), MeshOptions::graded(0.03, 2.0, 0.08));
        let (_, b) = disk_slit(Point::new(0.2, -0.4), MeshOptions::graded(0.03, 2.0, 0.08));
        assert_eq!(a, b);
    }
}
