//! Planar convex bodies and the outer convex domain approximation.
//!
//! A [`ConvexBody`] is a counter-clockwise vertex polygon with a
//! distinguished interior point (the gauge pole). The gauge function is
//! evaluated exactly from the edge support form, so it is positively
//! 1-homogeneous about the center, equals 1 on the boundary and is
//! globally Lipschitz with constant `1/dist(center, ∂Ω)`.
//!
//! [`approximate_domain`] builds the outer body
//! `Ω_k = {ψ⁺_k + α_k > ψ⁻_k + |x-x₀|²/(2k diam²)}` from mollified
//! convex/concave extensions of the boundary datum and polygonizes its
//! boundary by radial bisection; the defining quadratic term records the
//! uniform convexity of the approximating sets.

use crate::mollify::{Kernel, MollifiableField};
use crate::vec2::{dist_point_segment, Vec2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertices closer than this are merged before validation.
pub const VERTEX_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid convex body: {0}")]
    InvalidBody(String),
    #[error("domain approximation does not contain the inner body (vertex {index} has gauge {gauge})")]
    FailsContainment { index: usize, gauge: f64 },
    #[error("level-set bracket not found along ray {ray}")]
    BracketNotFound { ray: usize },
}

/// One polygon edge in outward support form.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub from: Vec2,
    pub to: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    /// Support value `⟨normal, from - center⟩ > 0`.
    pub support: f64,
}

/// Bounded convex polygon with a strictly interior center point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "BodyJson", into = "BodyJson")]
pub struct ConvexBody {
    vertices: Vec<Vec2>,
    center: Vec2,
    edges: Vec<Edge>,
}

/// Wire format: `{"vertices": [[x,y],...], "center": [x,y]}`.
#[derive(Debug, Serialize, Deserialize)]
struct BodyJson {
    vertices: Vec<[f64; 2]>,
    center: Option<[f64; 2]>,
}

impl TryFrom<BodyJson> for ConvexBody {
    type Error = GeometryError;
    fn try_from(j: BodyJson) -> Result<Self, Self::Error> {
        let verts: Vec<Vec2> = j.vertices.iter().map(|&[x, y]| Vec2::new(x, y)).collect();
        match j.center {
            Some([x, y]) => ConvexBody::with_center(verts, Vec2::new(x, y)),
            None => ConvexBody::new(verts),
        }
    }
}

impl From<ConvexBody> for BodyJson {
    fn from(b: ConvexBody) -> BodyJson {
        BodyJson {
            vertices: b.vertices.iter().map(|v| [v.x, v.y]).collect(),
            center: Some([b.center.x, b.center.y]),
        }
    }
}

impl ConvexBody {
    /// Builds a body with the vertex centroid as center.
    pub fn new(vertices: Vec<Vec2>) -> Result<ConvexBody, GeometryError> {
        let cleaned = clean_vertices(vertices)?;
        let n = cleaned.len() as f64;
        let centroid = cleaned.iter().fold(Vec2::ZERO, |a, &v| a + v) * (1.0 / n);
        ConvexBody::with_center(cleaned, centroid)
    }

    /// Builds a body with an explicit interior center.
    pub fn with_center(vertices: Vec<Vec2>, center: Vec2) -> Result<ConvexBody, GeometryError> {
        let verts = clean_vertices(vertices)?;
        if !center.is_finite() {
            return Err(GeometryError::InvalidBody("non-finite center".into()));
        }
        let mut edges = Vec::with_capacity(verts.len());
        for i in 0..verts.len() {
            let from = verts[i];
            let to = verts[(i + 1) % verts.len()];
            let normal = -(to - from).perp().normalized();
            let support = normal.dot(from - center);
            if support <= 0.0 {
                return Err(GeometryError::InvalidBody(format!(
                    "center is not strictly interior (edge {i}, support {support})"
                )));
            }
            edges.push(Edge {
                from,
                to,
                normal,
                support,
            });
        }
        Ok(ConvexBody {
            vertices: verts,
            center,
            edges,
        })
    }

    /// Regular n-gon inscribed in the circle of given radius; the standard
    /// polygonal stand-in for a disc.
    pub fn regular_polygon(center: Vec2, radius: f64, n: usize) -> ConvexBody {
        let verts = (0..n)
            .map(|i| center + Vec2::from_polar(radius, std::f64::consts::TAU * i as f64 / n as f64))
            .collect();
        ConvexBody::with_center(verts, center).expect("regular polygon is valid")
    }

    /// Axis-aligned square `(-half, half)²`.
    pub fn square(half: f64) -> ConvexBody {
        ConvexBody::new(vec![
            Vec2::new(-half, -half),
            Vec2::new(half, -half),
            Vec2::new(half, half),
            Vec2::new(-half, half),
        ])
        .expect("square is valid")
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Minkowski gauge of the body about its center: 0 at the center, 1 on
    /// the boundary, positively 1-homogeneous.
    pub fn gauge(&self, x: Vec2) -> f64 {
        let d = x - self.center;
        let mut g: f64 = 0.0;
        for e in &self.edges {
            g = g.max(e.normal.dot(d) / e.support);
        }
        g
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.gauge(x) <= 1.0
    }

    /// Exact distance from the center to the boundary.
    pub fn inradius_about_center(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.support)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                d2 = d2.max((self.vertices[i] - self.vertices[j]).norm2());
            }
        }
        d2.sqrt()
    }

    pub fn area(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.vertices.len() {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % self.vertices.len()];
            s += a.cross(b);
        }
        0.5 * s
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| (e.to - e.from).norm()).sum()
    }

    /// Distance from `x` to the boundary polyline.
    pub fn dist_to_boundary(&self, x: Vec2) -> f64 {
        self.edges
            .iter()
            .map(|e| dist_point_segment(x, e.from, e.to))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `x` to the body as a set (0 inside).
    pub fn dist_to_set(&self, x: Vec2) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            self.dist_to_boundary(x)
        }
    }
}

fn clean_vertices(vertices: Vec<Vec2>) -> Result<Vec<Vec2>, GeometryError> {
    if vertices.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidBody("non-finite vertex".into()));
    }
    // Merge near-duplicates, then drop collinear middles.
    let mut merged: Vec<Vec2> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if merged.last().map_or(true, |&l| l.dist(v) > VERTEX_MERGE_TOL) {
            merged.push(v);
        }
    }
    while merged.len() > 1 && merged[0].dist(*merged.last().unwrap()) <= VERTEX_MERGE_TOL {
        merged.pop();
    }
    let mut out: Vec<Vec2> = Vec::with_capacity(merged.len());
    let n = merged.len();
    for i in 0..n {
        let prev = merged[(i + n - 1) % n];
        let cur = merged[i];
        let next = merged[(i + 1) % n];
        let cross = (cur - prev).cross(next - cur);
        let scale = (cur - prev).norm() * (next - cur).norm();
        if cross > 1e-14 * scale.max(1e-300) {
            out.push(cur);
        } else if cross < -1e-14 * scale {
            return Err(GeometryError::InvalidBody(format!(
                "vertices are not in strictly convex counter-clockwise order near index {i}"
            )));
        }
        // collinear middles are silently dropped
    }
    if out.len() < 3 {
        return Err(GeometryError::InvalidBody(format!(
            "fewer than 3 vertices survive merging ({} left)",
            out.len()
        )));
    }
    Ok(out)
}

/// Diameter, center-to-boundary inradius and the eccentricity constant
/// `β_Ω = (1/2)·max_{y∈∂Ω}|x₀-y| / min_{y∈∂Ω}|x₀-y|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BodyMetrics {
    pub diameter: f64,
    pub inradius: f64,
    pub beta: f64,
}

pub fn body_metrics(body: &ConvexBody) -> BodyMetrics {
    let c = body.center();
    let max_r = body
        .vertices()
        .iter()
        .map(|v| v.dist(c))
        .fold(0.0f64, f64::max);
    let min_r = body
        .edges()
        .iter()
        .map(|e| dist_point_segment(c, e.from, e.to))
        .fold(f64::INFINITY, f64::min);
    BodyMetrics {
        diameter: body.diameter(),
        inradius: min_r,
        beta: 0.5 * max_r / min_r,
    }
}

/// Hausdorff distance between two convex polygons.
///
/// For convex sets the sup of `dist(·, other)` over a body is attained at
/// a vertex (distance to a convex set is convex), so the computation is
/// exact.
pub fn hausdorff(a: &ConvexBody, b: &ConvexBody) -> f64 {
    let sup_a = a
        .vertices()
        .iter()
        .map(|&v| b.dist_to_set(v))
        .fold(0.0f64, f64::max);
    let sup_b = b
        .vertices()
        .iter()
        .map(|&v| a.dist_to_set(v))
        .fold(0.0f64, f64::max);
    sup_a.max(sup_b)
}

/// Outer uniformly-convex approximation `Ω_k ⊃ Ω` with its quality
/// metrics.
#[derive(Debug, Clone)]
pub struct DomainApproximation {
    pub body: ConvexBody,
    pub index: u32,
    pub hausdorff_to_inner: f64,
    pub area_excess: f64,
}

/// Number of polygonization rays.
const LEVEL_SET_RAYS: usize = 720;
/// Radial bisection tolerance.
const LEVEL_SET_TOL: f64 = 1e-10;

/// Builds `Ω_k` as the zero sublevel polygon of
/// `ψ⁻_k - ψ⁺_k + |x-x₀|²/(2k diam²) - α_k`, with `ψ∓_k` the mollified
/// convex/concave extensions shifted by `∓1/k` and `α_k = 1/(2k)`.
pub fn approximate_domain(
    inner: &ConvexBody,
    phi_minus: &dyn MollifiableField,
    phi_plus: &dyn MollifiableField,
    k: u32,
    mollification_radius: f64,
) -> Result<DomainApproximation, GeometryError> {
    assert!(k >= 1, "approximation index must be positive");
    assert!(mollification_radius > 0.0);
    let kernel = Kernel::shared();
    let x0 = inner.center();
    let diam = inner.diameter();
    let alpha_k = 0.5 / k as f64;
    let kf = k as f64;
    let level = |x: Vec2| -> f64 {
        let psi_m = phi_minus.eval_mollified(x, mollification_radius, kernel) - 1.0 / kf;
        let psi_p = phi_plus.eval_mollified(x, mollification_radius, kernel) + 1.0 / kf;
        psi_m - psi_p + (x - x0).norm2() / (2.0 * kf * diam * diam) - alpha_k
    };

    let mut verts = Vec::with_capacity(LEVEL_SET_RAYS);
    for ray in 0..LEVEL_SET_RAYS {
        let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * ray as f64 / LEVEL_SET_RAYS as f64);
        // Bracket the crossing: the level function is convex along rays and
        // negative on the inner body, so there is exactly one sign change.
        let mut lo = 0.0;
        let mut hi = 0.5 * diam;
        let mut expansions = 0;
        while level(x0 + dir * hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 40 {
                return Err(GeometryError::BracketNotFound { ray });
            }
        }
        while hi - lo > LEVEL_SET_TOL {
            let mid = 0.5 * (lo + hi);
            if level(x0 + dir * mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        verts.push(x0 + dir * (0.5 * (lo + hi)));
    }
    let body = ConvexBody::with_center(verts, x0)
        .map_err(|e| GeometryError::InvalidBody(format!("level-set polygon: {e}")))?;

    for (index, &v) in inner.vertices().iter().enumerate() {
        let gauge = body.gauge(v);
        if gauge > 1.0 + 1e-9 {
            return Err(GeometryError::FailsContainment { index, gauge });
        }
    }

    Ok(DomainApproximation {
        hausdorff_to_inner: hausdorff(&body, inner),
        area_excess: body.area() - inner.area(),
        body,
        index: k,
    })
}
