//! Bounded-slope-condition certification and constructive datum
//! extensions.
//!
//! A boundary datum `φ` on `∂Ω` has the bounded slope condition of rank
//! `K` when every boundary point `y` carries slopes `ζ⁻_y, ζ⁺_y` with
//! `|ζ±_y| ≤ K` and
//! `φ(y) + ⟨ζ⁻_y, x-y⟩ ≤ φ(x) ≤ φ(y) + ⟨ζ⁺_y, x-y⟩` on `∂Ω`.
//!
//! Certification is per-sample linear feasibility, solved exactly in the
//! plane: the support constraints and the `|ζ|∞ ≤ K` box are intersected
//! by polygon clipping, the minimal-Euclidean-norm point of the feasible
//! polygon breaks ties, and the Euclidean bound `|ζ| ≤ K` is checked on
//! that point (the min-norm point has minimal norm, so the check is
//! exact). The extensions follow the sup/inf-of-affine construction with
//! the gauge cone correction
//! `φ⁻ = φ⁻₀ + dist(x₀,∂Ω)(j - 1)`, `φ⁺ = φ⁺₀ + dist(x₀,∂Ω)(1 - j)`,
//! which are (K+1)-Lipschitz and separate exactly across `∂Ω`.

use crate::geometry::{body_metrics, ConvexBody};
use crate::mollify::{Kernel, MaxAffine, MollifiableField};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlopeSide {
    Lower,
    Upper,
}

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("datum fails the bounded slope condition of rank {rank} at sample {index} ({point:?}, {side:?} slope)")]
    Infeasible {
        index: usize,
        point: [f64; 2],
        side: SlopeSide,
        rank: f64,
    },
    #[error("need at least 3 boundary samples, got {0}")]
    TooFewSamples(usize),
    #[error("negative rank {0}")]
    NegativeRank(f64),
}

/// Certified boundary datum: values and per-sample support slopes.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    pub body: ConvexBody,
    pub samples: Vec<Vec2>,
    pub values: Vec<f64>,
    pub lower_slopes: Vec<Vec2>,
    pub upper_slopes: Vec<Vec2>,
    pub rank: f64,
}

/// Boundary sampling: all polygon vertices plus a uniform subdivision so
/// that at least `min_count` samples are produced, ordered along `∂Ω`.
pub fn sample_boundary(body: &ConvexBody, min_count: usize) -> Vec<Vec2> {
    let perimeter = body.perimeter();
    let target = perimeter / min_count.max(1) as f64;
    let mut samples = Vec::new();
    for e in body.edges() {
        samples.push(e.from);
        let len = (e.to - e.from).norm();
        let pieces = ((len / target - 1e-9).ceil().max(1.0)) as usize;
        for j in 1..pieces {
            samples.push(e.from + (e.to - e.from) * (j as f64 / pieces as f64));
        }
    }
    samples
}

/// Clip a convex polygon by the half-plane `⟨n, p⟩ ≤ c` (Sutherland-Hodgman).
fn clip_halfplane(poly: &[Vec2], n: Vec2, c: f64, tol: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let da = n.dot(a) - c;
        let db = n.dot(b) - c;
        let a_in = da <= tol;
        let b_in = db <= tol;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = da / (da - db);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Point of a convex polygon closest to the origin.
fn min_norm_point(poly: &[Vec2]) -> Vec2 {
    // Inside test via signed areas (polygon kept counter-clockwise).
    let m = poly.len();
    let mut inside = m >= 3;
    for i in 0..m {
        if (poly[(i + 1) % m] - poly[i]).cross(-poly[i]) < 0.0 {
            inside = false;
            break;
        }
    }
    if inside {
        return Vec2::ZERO;
    }
    let mut best = poly[0];
    let mut best_n = best.norm2();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let ab = b - a;
        let l2 = ab.norm2();
        let p = if l2 == 0.0 {
            a
        } else {
            let t = (-a.dot(ab) / l2).clamp(0.0, 1.0);
            a + ab * t
        };
        if p.norm2() < best_n {
            best_n = p.norm2();
            best = p;
        }
    }
    best
}

fn feasible_slope(
    sample: Vec2,
    value: f64,
    samples: &[Vec2],
    values: &[f64],
    rank: f64,
    side: SlopeSide,
) -> Option<Vec2> {
    let tol = 1e-12 * (1.0 + rank);
    // |ζ|∞ ≤ K box, slightly inflated so exactly-tight data survives
    // floating point clipping.
    let b = rank + tol;
    let mut poly = vec![
        Vec2::new(-b, -b),
        Vec2::new(b, -b),
        Vec2::new(b, b),
        Vec2::new(-b, b),
    ];
    for (x, &v) in samples.iter().zip(values) {
        let d = *x - sample;
        if d.norm2() == 0.0 {
            continue;
        }
        let rhs = v - value;
        // Lower: ⟨ζ, d⟩ ≤ rhs. Upper: ⟨ζ, d⟩ ≥ rhs, i.e. ⟨-ζ·d⟩ ≤ -rhs.
        let (n, c) = match side {
            SlopeSide::Lower => (d, rhs),
            SlopeSide::Upper => (-d, -rhs),
        };
        poly = clip_halfplane(&poly, n, c, tol);
        if poly.is_empty() {
            return None;
        }
    }
    let zeta = min_norm_point(&poly);
    if zeta.norm() <= rank + 1e-9 * (1.0 + rank) {
        Some(zeta)
    } else {
        None
    }
}

/// Certifies the bounded slope condition of rank `K` for boundary values
/// at the given samples, or reports the first infeasible sample.
pub fn certify_bsc(
    body: &ConvexBody,
    samples: &[Vec2],
    values: &[f64],
    rank: f64,
) -> Result<BoundaryDatum, BoundaryError> {
    if samples.len() < 3 {
        return Err(BoundaryError::TooFewSamples(samples.len()));
    }
    if rank < 0.0 {
        return Err(BoundaryError::NegativeRank(rank));
    }
    assert_eq!(samples.len(), values.len());
    let mut lower = Vec::with_capacity(samples.len());
    let mut upper = Vec::with_capacity(samples.len());
    for (i, (&y, &v)) in samples.iter().zip(values).enumerate() {
        for side in [SlopeSide::Lower, SlopeSide::Upper] {
            match feasible_slope(y, v, samples, values, rank, side) {
                Some(z) => {
                    if side == SlopeSide::Lower {
                        lower.push(z)
                    } else {
                        upper.push(z)
                    }
                }
                None => {
                    return Err(BoundaryError::Infeasible {
                        index: i,
                        point: [y.x, y.y],
                        side,
                        rank,
                    })
                }
            }
        }
    }
    Ok(BoundaryDatum {
        body: body.clone(),
        samples: samples.to_vec(),
        values: values.to_vec(),
        lower_slopes: lower,
        upper_slopes: upper,
        rank,
    })
}

impl BoundaryDatum {
    /// Largest violation of the two-sided support inequality over all
    /// sample pairs; a sound certificate keeps this at rounding level.
    pub fn max_support_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, (&y, &vy)) in self.samples.iter().zip(&self.values).enumerate() {
            for (&x, &vx) in self.samples.iter().zip(&self.values) {
                let d = x - y;
                worst = worst.max(vy + self.lower_slopes[i].dot(d) - vx);
                worst = worst.max(vx - (vy + self.upper_slopes[i].dot(d)));
            }
        }
        worst
    }
}

/// The convex/concave extensions `φ⁻ ≤ φ⁺` of a certified datum.
#[derive(Debug, Clone)]
pub struct DatumExtension {
    pub body: ConvexBody,
    /// `φ⁻₀ = sup_y [φ(y) + ⟨ζ⁻_y, ·-y⟩]`.
    lower0: MaxAffine,
    /// `-φ⁺₀`, stored as a max so the fast mollification path applies.
    neg_upper0: MaxAffine,
    /// Gauge of the body as a max of affine maps.
    gauge: MaxAffine,
    /// `dist(x₀, ∂Ω)`, the cone slope.
    pub dist_center: f64,
    /// `K + 1`.
    pub lipschitz_rank: f64,
}

/// Builds the extension pair from a certified datum.
pub fn extend_datum(datum: &BoundaryDatum) -> DatumExtension {
    let lower0 = MaxAffine::new(
        datum
            .samples
            .iter()
            .zip(&datum.values)
            .zip(&datum.lower_slopes)
            .map(|((&y, &v), &z)| (z, v - z.dot(y)))
            .collect(),
    );
    let neg_upper0 = MaxAffine::new(
        datum
            .samples
            .iter()
            .zip(&datum.values)
            .zip(&datum.upper_slopes)
            .map(|((&y, &v), &z)| (-z, -v + z.dot(y)))
            .collect(),
    );
    let c = datum.body.center();
    let gauge = MaxAffine::new(
        datum
            .body
            .edges()
            .iter()
            .map(|e| {
                let a = e.normal * (1.0 / e.support);
                (a, -a.dot(c))
            })
            .collect(),
    );
    let dist_center = datum.body.inradius_about_center();
    DatumExtension {
        body: datum.body.clone(),
        lower0,
        neg_upper0,
        gauge,
        dist_center,
        lipschitz_rank: datum.rank + 1.0,
    }
}

impl DatumExtension {
    pub fn eval_minus(&self, x: Vec2) -> f64 {
        self.lower0.eval(x) + self.dist_center * (self.gauge.eval(x) - 1.0)
    }

    pub fn eval_plus(&self, x: Vec2) -> f64 {
        -self.neg_upper0.eval(x) + self.dist_center * (1.0 - self.gauge.eval(x))
    }

    pub fn minus_field(&self) -> PhiMinus<'_> {
        PhiMinus { ext: self }
    }

    pub fn plus_field(&self) -> PhiPlus<'_> {
        PhiPlus { ext: self }
    }
}

/// `φ⁻` as a mollifiable field (convolution distributes over the affine
/// max and the cone term).
pub struct PhiMinus<'a> {
    ext: &'a DatumExtension,
}

impl MollifiableField for PhiMinus<'_> {
    fn eval(&self, x: Vec2) -> f64 {
        self.ext.eval_minus(x)
    }
    fn eval_mollified(&self, x: Vec2, eps: f64, kernel: &Kernel) -> f64 {
        self.ext.lower0.mollified(x, eps, kernel)
            + self.ext.dist_center * (self.ext.gauge.mollified(x, eps, kernel) - 1.0)
    }
}

/// `φ⁺` as a mollifiable field.
pub struct PhiPlus<'a> {
    ext: &'a DatumExtension,
}

impl MollifiableField for PhiPlus<'_> {
    fn eval(&self, x: Vec2) -> f64 {
        self.ext.eval_plus(x)
    }
    fn eval_mollified(&self, x: Vec2, eps: f64, kernel: &Kernel) -> f64 {
        -self.ext.neg_upper0.mollified(x, eps, kernel)
            + self.ext.dist_center * (1.0 - self.ext.gauge.mollified(x, eps, kernel))
    }
}

/// The approximated datum `φ_k = max{φ⁺, ψ⁻_k}` with
/// `ψ∓_k = φ∓ * ρ_ε ∓ 1/k` and `ε = 1/(2(K+1)k)`; `φ_k` equals `φ` on
/// `∂Ω` and restricts to the smooth `ψ⁻_k` on `∂Ω_k`.
pub struct ApproxDatum<'a> {
    pub ext: &'a DatumExtension,
    pub k: u32,
    pub eps: f64,
}

impl<'a> ApproxDatum<'a> {
    pub fn new(ext: &'a DatumExtension, k: u32) -> ApproxDatum<'a> {
        ApproxDatum {
            ext,
            k,
            eps: 1.0 / (2.0 * ext.lipschitz_rank * k as f64),
        }
    }

    pub fn psi_minus(&self, x: Vec2) -> f64 {
        self.ext
            .minus_field()
            .eval_mollified(x, self.eps, Kernel::shared())
            - 1.0 / self.k as f64
    }

    pub fn psi_plus(&self, x: Vec2) -> f64 {
        self.ext
            .plus_field()
            .eval_mollified(x, self.eps, Kernel::shared())
            + 1.0 / self.k as f64
    }

    pub fn phi_k(&self, x: Vec2) -> f64 {
        self.ext.eval_plus(x).max(self.psi_minus(x))
    }
}

/// Exterior sweep for the containment property: the largest
/// `dist(x, Ω)` among exterior grid points with `φ⁻(x) ≤ φ⁺(x) + s`.
/// The contract is `margin ≤ β_Ω · s`.
pub fn containment_margin(ext: &DatumExtension, s: f64) -> f64 {
    assert!(s > 0.0);
    let beta = body_metrics(&ext.body).beta;
    let pad = (2.0 * beta * s).max(0.25 * ext.body.diameter());
    let (mut lo, mut hi) = (
        Vec2::new(f64::INFINITY, f64::INFINITY),
        Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for v in ext.body.vertices() {
        lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    lo = lo - Vec2::new(pad, pad);
    hi = hi + Vec2::new(pad, pad);
    let n = 400;
    let mut margin = 0.0f64;
    for i in 0..=n {
        for j in 0..=n {
            let x = Vec2::new(
                lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                lo.y + (hi.y - lo.y) * j as f64 / n as f64,
            );
            if ext.body.contains(x) {
                continue;
            }
            if ext.eval_minus(x) <= ext.eval_plus(x) + s {
                margin = margin.max(ext.body.dist_to_boundary(x));
            }
        }
    }
    margin
}

/// Wire format for datum I/O: `{"samples": [[x, y, value], ...], "K": k}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct DatumJson {
    pub samples: Vec<[f64; 3]>,
    #[serde(rename = "K")]
    pub rank: f64,
}

/// Certificate export: samples with both slope families.
#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    pub samples: Vec<[f64; 3]>,
    pub zeta_minus: Vec<[f64; 2]>,
    pub zeta_plus: Vec<[f64; 2]>,
    #[serde(rename = "K")]
    pub rank: f64,
}

impl From<&BoundaryDatum> for CertificateJson {
    fn from(d: &BoundaryDatum) -> Self {
        CertificateJson {
            samples: d
                .samples
                .iter()
                .zip(&d.values)
                .map(|(p, &v)| [p.x, p.y, v])
                .collect(),
            zeta_minus: d.lower_slopes.iter().map(|z| [z.x, z.y]).collect(),
            zeta_plus: d.upper_slopes.iter().map(|z| [z.x, z.y]).collect(),
            rank: d.rank,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn datum_on(body: &ConvexBody, phi: impl Fn(Vec2) -> f64, rank: f64) -> BoundaryDatum {
        let samples = sample_boundary(body, 256);
        let values: Vec<f64> = samples.iter().map(|&p| phi(p)).collect();
        certify_bsc(body, &samples, &values, rank).expect("datum certifies")
    }

    #[test]
    fn affine_datum_certifies_at_its_slope_norm() {
        let a = Vec2::new(0.6, -0.3);
        let phi = |x: Vec2| a.dot(x) + 0.25;
        for body in [
            ConvexBody::square(1.0),
            ConvexBody::regular_polygon(Vec2::ZERO, 1.0, 64),
        ] {
            let datum = datum_on(&body, phi, a.norm());
            assert!(datum.max_support_violation() < 1e-10);
            let ext = extend_datum(&datum);
            for &y in &datum.samples {
                assert!((ext.eval_minus(y) - phi(y)).abs() < 1e-9);
                assert!((ext.eval_plus(y) - phi(y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn kinked_datum_on_flat_face_is_rejected_with_witness() {
        let body = ConvexBody::square(1.0);
        let samples = sample_boundary(&body, 256);
        let values: Vec<f64> = samples.iter().map(|p| p.x.abs()).collect();
        let err = certify_bsc(&body, &samples, &values, 50.0).unwrap_err();
        match err {
            BoundaryError::Infeasible { point, side, .. } => {
                // |x₁| is convex, so lower slopes exist everywhere; the
                // upper slope fails on the faces the kink line crosses.
                assert_eq!(side, SlopeSide::Upper);
                assert!((point[1].abs() - 1.0).abs() < 1e-12, "witness {point:?}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn quadratic_datum_on_disc_certifies_and_separates() {
        // Samples must lie on the circle itself: a 256-gon's vertices do.
        let disc = ConvexBody::regular_polygon(Vec2::ZERO, 1.0, 256);
        let datum = datum_on(&disc, |p| p.x * p.x, 2.0);
        assert!(datum.max_support_violation() < 1e-10);
        let ext = extend_datum(&datum);
        // strict separation inside
        assert!(ext.eval_minus(Vec2::ZERO) < 0.0);
        assert!(ext.eval_plus(Vec2::ZERO) > 0.0);
        // φ⁻ ≤ φ⁺ on 10³ interior samples
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = f64::NEG_INFINITY;
        let mut n = 0;
        while n < 1000 {
            let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if !disc.contains(x) {
                continue;
            }
            n += 1;
            worst = worst.max(ext.eval_minus(x) - ext.eval_plus(x));
        }
        assert!(worst <= 1e-12, "φ⁻-φ⁺ max {worst}");
    }

    #[test]
    fn extension_lipschitz_rank_holds_on_sampled_pairs() {
        let disc = ConvexBody::regular_polygon(Vec2::ZERO, 1.0, 256);
        let datum = datum_on(&disc, |p| p.x * p.x, 2.0);
        let ext = extend_datum(&datum);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bound = ext.lipschitz_rank + 1e-8;
        for _ in 0..10_000 {
            let x = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let y = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if x.dist(y) < 1e-9 {
                continue;
            }
            let qm = (ext.eval_minus(x) - ext.eval_minus(y)).abs() / x.dist(y);
            let qp = (ext.eval_plus(x) - ext.eval_plus(y)).abs() / x.dist(y);
            assert!(qm <= bound, "φ⁻ difference quotient {qm} > {bound}");
            assert!(qp <= bound, "φ⁺ difference quotient {qp} > {bound}");
        }
    }

    #[test]
    fn extension_restricts_to_a_bsc_datum_of_next_rank() {
        // Converse direction: φ⁻|∂Ω certifies at rank K+1.
        let disc = ConvexBody::regular_polygon(Vec2::ZERO, 1.0, 256);
        let datum = datum_on(&disc, |p| p.x * p.x, 2.0);
        let ext = extend_datum(&datum);
        let samples = sample_boundary(&disc, 256);
        let values: Vec<f64> = samples.iter().map(|&p| ext.eval_minus(p)).collect();
        certify_bsc(&disc, &samples, &values, datum.rank + 1.0)
            .expect("restriction certifies at rank K+1");
    }

    #[test]
    fn containment_margin_respects_beta_of_eq_2_2() {
        let disc = ConvexBody::regular_polygon(Vec2::ZERO, 1.0, 64);
        let square = ConvexBody::square(1.0);
        for body in [disc, square] {
            let beta = body_metrics(&body).beta;
            let datum = datum_on(&body, |p| 0.2 * p.x - 0.1 * p.y, 0.5);
            let ext = extend_datum(&datum);
            for s in [0.01, 0.1, 1.0] {
                let margin = containment_margin(&ext, s);
                assert!(
                    margin <= beta * s + 1e-9,
                    "margin {margin} exceeds β·s = {}",
                    beta * s
                );
            }
        }
    }
}
