//! Convex integrands that are Φ-uniformly convex outside a ball.
//!
//! A [`Lagrangian`] carries an exact evaluator, a minimal-norm subgradient
//! selector, the degeneracy radius `R` and a declared convexity modulus
//! `Φ`. The declared data is never trusted blindly: the sampled checkers
//! in this module audit the secant inequality
//! `F(θz+(1-θ)z') ≤ θF(z)+(1-θ)F(z') - ½θ(1-θ)Φ(|z|+|z'|)|z-z'|²`
//! on segments avoiding `B_R`, together with the derived inequalities the
//! regularity argument consumes (constants μ/4, μ/36, μ/18, μ/72 and the
//! 1/3 segment-length bound).
//!
//! [`truncate`] builds `F_Q = F + μ_Q (|z|-Q)₊²` with
//! `μ_Q = min{1, min_{[2R,4Q]} Φ}`, which agrees with `F` on `B_Q` and is
//! uniformly convex with the constant modulus `μ_Q` outside `B_R`.

use crate::vec2::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LagrangianError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("superlinearity bound F ≥ M|ξ| not attained below radius 1e6 in direction {0:?}")]
    NotFound([f64; 2]),
}

/// Convexity modulus `Φ: (0,∞) → (0,∞)`.
#[derive(Clone)]
pub enum Modulus {
    Const(f64),
    /// `coef · t^exponent`.
    Power { coef: f64, exponent: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modulus::Const(c) => write!(f, "Const({c})"),
            Modulus::Power { coef, exponent } => write!(f, "{coef}·t^{exponent}"),
            Modulus::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Modulus {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Modulus::Const(c) => *c,
            Modulus::Power { coef, exponent } => coef * t.powf(*exponent),
            Modulus::Custom(f) => f(t),
        }
    }

    /// `min_{t ∈ [lo, hi]} Φ(t)`; exact for constants and monotone powers,
    /// dense grid with endpoints otherwise.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(1e-9);
        let hi = hi.max(lo);
        match self {
            Modulus::Const(c) => *c,
            Modulus::Power { exponent, .. } => {
                if *exponent >= 0.0 {
                    self.eval(lo)
                } else {
                    self.eval(hi)
                }
            }
            Modulus::Custom(_) => {
                let n = 4096;
                let mut m = f64::INFINITY;
                for i in 0..=n {
                    let t = lo + (hi - lo) * i as f64 / n as f64;
                    m = m.min(self.eval(t));
                }
                m
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `|z|` inside the unit ball, `|z|²/2 + 1/2` outside.
    TorsionRod,
    /// `μ(|z|^p - δ)₊ + Σ|z_i|^{p_i}`.
    Power {
        mu: f64,
        p: f64,
        delta: f64,
        powers: Vec<f64>,
    },
    /// `(|z| - δ)₊ [log(1+|z|)]^p`.
    Log { delta: f64, p: f64 },
    /// `|z|²`.
    Quadratic,
}

/// Convex integrand with declared uniform-convexity data.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    kind: Kind,
    /// Degeneracy ball radius `R`.
    pub degeneracy_radius: f64,
    /// Declared modulus `Φ`.
    pub modulus: Modulus,
    /// Set when `Φ ≡ μ` is constant.
    pub mu: Option<f64>,
    /// Truncation term `μ_Q (|z|-Q)₊²` when this is an `F_Q`.
    truncation: Option<(f64, f64)>,
}

impl Lagrangian {
    pub fn torsion_rod() -> Lagrangian {
        Lagrangian {
            kind: Kind::TorsionRod,
            degeneracy_radius: 1.0,
            modulus: Modulus::Const(1.0),
            mu: Some(1.0),
            truncation: None,
        }
    }

    pub fn quadratic() -> Lagrangian {
        Lagrangian {
            kind: Kind::Quadratic,
            degeneracy_radius: 0.0,
            modulus: Modulus::Const(2.0),
            mu: Some(2.0),
            truncation: None,
        }
    }

    pub fn power_outside_ball(
        mu: f64,
        p: f64,
        delta: f64,
        powers: Vec<f64>,
    ) -> Result<Lagrangian, LagrangianError> {
        if mu <= 0.0 || delta < 0.0 {
            return Err(LagrangianError::BadParams(
                "need mu > 0 and delta ≥ 0".into(),
            ));
        }
        if p <= 1.0 {
            return Err(LagrangianError::BadParams(format!(
                "p = {p} ≤ 1 makes t·Φ(t) bounded"
            )));
        }
        if powers.iter().any(|&pi| pi <= 1.0) {
            return Err(LagrangianError::BadParams("every p_i must exceed 1".into()));
        }
        let r = delta.powf(1.0 / p);
        // Secant modulus of μ|z|^p along admissible segments: curvature is
        // increasing in |z| for p ≥ 2 (worst case is the symmetric chord,
        // constant 2^{3-p}) and decreasing for p < 2 (worst case at the far
        // endpoint, Hessian bound p(p-1)t^{p-2}).
        let modulus = if p >= 2.0 {
            Modulus::Power {
                coef: mu * (3.0 - p).exp2(),
                exponent: p - 2.0,
            }
        } else {
            Modulus::Power {
                coef: mu * p * (p - 1.0),
                exponent: p - 2.0,
            }
        };
        let mu_const = if p == 2.0 { Some(2.0 * mu) } else { None };
        Ok(Lagrangian {
            kind: Kind::Power {
                mu,
                p,
                delta,
                powers,
            },
            degeneracy_radius: r,
            modulus,
            mu: mu_const,
        truncation: None,
        })
    }

    pub fn log_family(delta: f64, p: f64) -> Result<Lagrangian, LagrangianError> {
        if p <= 1.0 {
            return Err(LagrangianError::BadParams(format!(
                "log family with p = {p} ≤ 1 is ruled out (t·Φ(t) must diverge)"
            )));
        }
        if delta < 0.0 {
            return Err(LagrangianError::BadParams("delta must be ≥ 0".into()));
        }
        // The radial profile h(t) = (t-δ)₊ log(1+t)^p has both Hessian
        // eigenvalues vanishing as t → δ⁺, so uniform convexity only holds
        // outside a strictly larger ball; R = δ+1 is declared and the
        // modulus is the sampled eigenvalue floor on [R, t] with a 10%
        // safety factor.
        let r = delta + 1.0;
        let modulus = {
            let (delta, p, r) = (delta, p, r);
            Modulus::Custom(Arc::new(move |t: f64| {
                let hi = t.max(r + 1e-6);
                let n = 64;
                let mut m = f64::INFINITY;
                for i in 0..=n {
                    let s = r + (hi - r) * i as f64 / n as f64;
                    m = m.min(log_profile_min_eig(s, delta, p));
                }
                0.9 * m
            }))
        };
        Ok(Lagrangian {
            kind: Kind::Log { delta, p },
            degeneracy_radius: r,
            modulus,
            mu: None,
            truncation: None,
        })
    }

    /// Overrides the declared uniform-convexity data; the sampled checkers
    /// exist to catch exactly the mis-declarations this enables.
    pub fn with_uc_declaration(mut self, r: f64, modulus: Modulus, mu: Option<f64>) -> Lagrangian {
        self.degeneracy_radius = r;
        self.modulus = modulus;
        self.mu = mu;
        self
    }

    pub fn evaluate(&self, z: Vec2) -> f64 {
        let t = z.norm();
        let base = match &self.kind {
            Kind::TorsionRod => {
                if t <= 1.0 {
                    t
                } else {
                    0.5 * t * t + 0.5
                }
            }
            Kind::Power {
                mu,
                p,
                delta,
                powers,
            } => {
                let outer = (t.powf(*p) - delta).max(0.0);
                let aniso: f64 = powers
                    .iter()
                    .zip([z.x, z.y])
                    .map(|(&pi, zi)| zi.abs().powf(pi))
                    .sum();
                mu * outer + aniso
            }
            Kind::Log { delta, p } => (t - delta).max(0.0) * (1.0 + t).ln().powf(*p),
            Kind::Quadratic => t * t,
        };
        match self.truncation {
            Some((q, mu_q)) => base + mu_q * (t - q).max(0.0).powi(2),
            None => base,
        }
    }

    /// A selector from `∂F`; at kinks it returns the minimal-norm element.
    pub fn subgradient(&self, z: Vec2) -> Vec2 {
        let t = z.norm();
        let dir = if t > 0.0 { z * (1.0 / t) } else { Vec2::ZERO };
        let mut g = match &self.kind {
            Kind::TorsionRod => {
                if t == 0.0 {
                    Vec2::ZERO
                } else if t <= 1.0 {
                    dir
                } else {
                    z
                }
            }
            Kind::Power {
                mu,
                p,
                delta,
                powers,
            } => {
                let mut g = Vec2::new(
                    powers[0] * z.x.abs().powf(powers[0] - 1.0) * z.x.signum(),
                    powers[1] * z.y.abs().powf(powers[1] - 1.0) * z.y.signum(),
                );
                if z.x == 0.0 {
                    g.x = 0.0;
                }
                if z.y == 0.0 {
                    g.y = 0.0;
                }
                if t > 0.0 && t.powf(*p) > *delta {
                    g += dir * (mu * p * t.powf(p - 1.0));
                }
                g
            }
            Kind::Log { delta, p } => {
                if t <= *delta || t == 0.0 {
                    Vec2::ZERO
                } else {
                    let l = (1.0 + t).ln();
                    dir * (l.powf(*p) + (t - delta) * p * l.powf(p - 1.0) / (1.0 + t))
                }
            }
            Kind::Quadratic => z * 2.0,
        };
        if let Some((q, mu_q)) = self.truncation {
            if t > q {
                g += dir * (2.0 * mu_q * (t - q));
            }
        }
        g
    }

    /// Spot check of the superlinearity condition `t·Φ(t) → ∞` at
    /// t ∈ {10³, 10⁶}.
    pub fn superlinear_flag_holds(&self) -> bool {
        let a = 1e3 * self.modulus.eval(1e3);
        let b = 1e6 * self.modulus.eval(1e6);
        b > a && b > 10.0 * a.min(1.0)
    }
}

fn log_profile_min_eig(t: f64, delta: f64, p: f64) -> f64 {
    if t <= delta {
        return 0.0;
    }
    let l = (1.0 + t).ln();
    let radial = 2.0 * p * l.powf(p - 1.0) / (1.0 + t)
        + (t - delta) * p * l.powf(p - 2.0) * (p - 1.0 - l) / ((1.0 + t) * (1.0 + t));
    let h1 = l.powf(p) + (t - delta) * p * l.powf(p - 1.0) / (1.0 + t);
    let tangential = h1 / t;
    radial.min(tangential).max(0.0)
}

/// Family selector used by config files:
/// `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Builds one of the built-in families by name.
pub fn builtin(spec: &FamilySpec) -> Result<Lagrangian, LagrangianError> {
    let p = &spec.params;
    let get = |key: &str, default: Option<f64>| -> Result<f64, LagrangianError> {
        match p.get(key) {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| LagrangianError::BadParams(format!("{key} must be a number"))),
            None => default.ok_or_else(|| LagrangianError::BadParams(format!("missing {key}"))),
        }
    };
    match spec.family.as_str() {
        "torsion_rod" => Ok(Lagrangian::torsion_rod()),
        "quadratic" => Ok(Lagrangian::quadratic()),
        "power_outside_ball" => {
            let powers = match p.get("powers") {
                Some(v) => serde_json::from_value::<Vec<f64>>(v.clone())
                    .map_err(|e| LagrangianError::BadParams(format!("powers: {e}")))?,
                None => vec![2.0, 2.0],
            };
            if powers.len() != 2 {
                return Err(LagrangianError::BadParams(
                    "powers must list one exponent per coordinate (2 here)".into(),
                ));
            }
            Lagrangian::power_outside_ball(
                get("mu", Some(1.0))?,
                get("p", Some(2.0))?,
                get("delta", Some(0.0))?,
                powers,
            )
        }
        "log_family" => Lagrangian::log_family(get("delta", Some(0.0))?, get("p", None)?),
        other => Err(LagrangianError::BadParams(format!(
            "unknown family '{other}'"
        ))),
    }
}

/// `μ_Q = min{1, min_{t∈[2R,4Q]} Φ(t)}`.
pub fn mu_q(f: &Lagrangian, q: f64) -> f64 {
    1.0f64.min(f.modulus.min_on(2.0 * f.degeneracy_radius, 4.0 * q))
}

/// `J_Q(x) = (|x|-Q)₊²`.
pub fn j_q(x: Vec2, q: f64) -> f64 {
    (x.norm() - q).max(0.0).powi(2)
}

/// Truncation `F_Q = F + μ_Q J_Q`: equal to `F` on `B_Q`, uniformly convex
/// outside `B_R` with the constant modulus `μ_Q ∈ (0, 1]`.
pub fn truncate(f: &Lagrangian, q: f64) -> Lagrangian {
    assert!(
        q > f.degeneracy_radius,
        "truncation radius must exceed the degeneracy radius"
    );
    assert!(
        f.truncation.is_none(),
        "truncating an already truncated integrand"
    );
    let mq = mu_q(f, q);
    let mut out = f.clone();
    out.truncation = Some((q, mq));
    out.modulus = Modulus::Const(mq);
    out.mu = Some(mq);
    out
}

/// Exact length of `[z, z'] ∖ B_R` by line-circle intersection.
pub fn segment_length_outside(z: Vec2, zp: Vec2, r: f64) -> f64 {
    let d = zp - z;
    let len = d.norm();
    if len == 0.0 {
        return 0.0;
    }
    if r <= 0.0 {
        return len;
    }
    let a = d.norm2();
    let b = 2.0 * z.dot(d);
    let c = z.norm2() - r * r;
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return len;
    }
    let sq = disc.sqrt();
    let t1 = (-b - sq) / (2.0 * a);
    let t2 = (-b + sq) / (2.0 * a);
    let inside = (t2.min(1.0) - t1.max(0.0)).max(0.0);
    len - inside * len
}

/// Witness data for a reported violation.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub xi: [f64; 2],
    pub xi_prime: [f64; 2],
    pub theta: Option<f64>,
    pub violation: f64,
}

/// Outcome of the direct Φ-uniform-convexity audit.
#[derive(Debug, Clone, Serialize)]
pub struct UcReport {
    pub trials: usize,
    /// Worst violation of the secant inequality on admissible segments.
    pub max_violation: f64,
    pub witness: Option<Witness>,
    /// Worst violation of the subgradient form of the same inequality.
    pub max_violation_subgradient: f64,
    pub witness_subgradient: Option<Witness>,
}

struct SegmentSampler {
    rng: ChaCha8Rng,
    r: f64,
    box_radius: f64,
}

impl SegmentSampler {
    fn new(f: &Lagrangian, seed: u64) -> SegmentSampler {
        SegmentSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            r: f.degeneracy_radius,
            box_radius: (3.0 * f.degeneracy_radius + 2.0).max(4.0),
        }
    }

    fn point(&mut self) -> Vec2 {
        let b = self.box_radius;
        Vec2::new(self.rng.gen_range(-b..b), self.rng.gen_range(-b..b))
    }

    /// One segment `[z, z']` avoiding `B_R`; violations concentrate near
    /// the ball, so one draw in three is anchored in the annulus
    /// `R ≤ |z| ≤ R+1`.
    fn segment(&mut self) -> Option<(Vec2, Vec2)> {
        for _ in 0..10_000 {
            let z = if self.rng.gen_range(0u8..3) == 0 {
                let rad = self.rng.gen_range(self.r.max(1e-6)..self.r + 1.0);
                Vec2::from_polar(rad, self.rng.gen_range(0.0..std::f64::consts::TAU))
            } else {
                self.point()
            };
            let zp = self.point();
            if crate::vec2::segment_dist_to_origin(z, zp) >= self.r {
                return Some((z, zp));
            }
        }
        None
    }
}

/// Samples the defining inequality of Φ-uniform convexity outside `B_R`
/// (and its subgradient form) and reports the worst violations.
pub fn check_phi_uniform_convexity(f: &Lagrangian, trials: usize, seed: u64) -> UcReport {
    let mut sampler = SegmentSampler::new(f, seed);
    let mut report = UcReport {
        trials,
        max_violation: 0.0,
        witness: None,
        max_violation_subgradient: 0.0,
        witness_subgradient: None,
    };
    for _ in 0..trials {
        let Some((z, zp)) = sampler.segment() else {
            continue;
        };
        let phi = f.modulus.eval(z.norm() + zp.norm());
        let d2 = (z - zp).norm2();
        let fz = f.evaluate(z);
        let fzp = f.evaluate(zp);
        for i in 1..=9 {
            let th = i as f64 / 10.0;
            let lhs = f.evaluate(z * th + zp * (1.0 - th));
            let viol = lhs - (th * fz + (1.0 - th) * fzp - 0.5 * th * (1.0 - th) * phi * d2);
            if viol > report.max_violation {
                report.max_violation = viol;
                report.witness = Some(Witness {
                    xi: [z.x, z.y],
                    xi_prime: [zp.x, zp.y],
                    theta: Some(th),
                    violation: viol,
                });
            }
        }
        let zeta = f.subgradient(z);
        let viol = fz + zeta.dot(zp - z) + 0.5 * phi * d2 - fzp;
        if viol > report.max_violation_subgradient {
            report.max_violation_subgradient = viol;
            report.witness_subgradient = Some(Witness {
                xi: [z.x, z.y],
                xi_prime: [zp.x, zp.y],
                theta: None,
                violation: viol,
            });
        }
    }
    report
}

/// One entry of the derived-inequality audit.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub trials: usize,
    pub max_violation: f64,
    pub witness: Option<Witness>,
}

impl InequalityReport {
    fn new(name: &str, trials: usize) -> InequalityReport {
        InequalityReport {
            name: name.into(),
            trials,
            max_violation: 0.0,
            witness: None,
        }
    }

    fn record(&mut self, viol: f64, xi: Vec2, xip: Vec2, theta: Option<f64>) {
        if viol > self.max_violation {
            self.max_violation = viol;
            self.witness = Some(Witness {
                xi: [xi.x, xi.y],
                xi_prime: [xip.x, xip.y],
                theta,
                violation: viol,
            });
        }
    }
}

/// Audits the quantitative consequences of constant-modulus uniform
/// convexity outside `B_R`: the Hausdorff-length lower bound (μ/4), the
/// one-sided strengthened subgradient inequality (μ/36), strengthened
/// monotonicity (μ/18), the convex-combination form (μ/36), the quadratic
/// growth bound (μ/72) and the 1/3 segment-length estimate.
pub fn uc_inequality_suite(f: &Lagrangian, trials: usize, seed: u64) -> Vec<InequalityReport> {
    let mu = f.mu.expect("suite needs a constant modulus");
    let r = f.degeneracy_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = (3.0 * r + 2.0).max(4.0);
    let mut pt = |rng: &mut ChaCha8Rng| Vec2::new(rng.gen_range(-b..b), rng.gen_range(-b..b));
    let outside = |rng: &mut ChaCha8Rng, pt: &mut dyn FnMut(&mut ChaCha8Rng) -> Vec2| loop {
        let z = pt(rng);
        if z.norm() >= 2.0 * r {
            break z;
        }
    };

    let f0 = f.evaluate(Vec2::ZERO);
    let g0 = f.subgradient(Vec2::ZERO);
    let offset = f0.abs() + 18.0 / mu * g0.norm2();

    let mut rep_a5 = InequalityReport::new("eq_A5_hausdorff_quarter_mu", trials);
    let mut rep_a8 = InequalityReport::new("eq_A8_subgradient_mu_36", trials);
    let mut rep_a9 = InequalityReport::new("eq_A9_monotonicity_mu_18", trials);
    let mut rep_a10 = InequalityReport::new("eq_A10_combination_mu_36", trials);
    let mut rep_a11 = InequalityReport::new("eq_A11_quadratic_growth", trials);
    let mut rep_a12 = InequalityReport::new("eq_A12_segment_third", trials);

    for _ in 0..trials {
        // (A.5): any pair.
        let (xi, xip) = (pt(&mut rng), pt(&mut rng));
        let h1 = segment_length_outside(xi, xip, r);
        let viol = f.evaluate(xi) + f.subgradient(xi).dot(xip - xi) + 0.25 * mu * h1 * h1
            - f.evaluate(xip);
        rep_a5.record(viol, xi, xip, None);

        // (A.8)/(A.9): one endpoint outside B_{2R}.
        let xo = outside(&mut rng, &mut pt);
        let xa = pt(&mut rng);
        let viol = f.evaluate(xo) + f.subgradient(xo).dot(xa - xo)
            + mu / 36.0 * (xa - xo).norm2()
            - f.evaluate(xa);
        rep_a8.record(viol, xo, xa, None);
        let viol = mu / 18.0 * (xo - xa).norm2()
            - (f.subgradient(xo) - f.subgradient(xa)).dot(xo - xa);
        rep_a9.record(viol, xo, xa, None);

        // (A.10): both endpoints outside B_{2R}.
        let (xo1, xo2) = (outside(&mut rng, &mut pt), outside(&mut rng, &mut pt));
        let th = rng.gen_range(0.05..0.95);
        let viol = f.evaluate(xo1 * th + xo2 * (1.0 - th))
            - (th * f.evaluate(xo1) + (1.0 - th) * f.evaluate(xo2)
                - mu / 36.0 * th * (1.0 - th) * (xo1 - xo2).norm2());
        rep_a10.record(viol, xo1, xo2, Some(th));

        // (A.11): quadratic growth from the minimal-norm subgradient at 0.
        let viol = mu / 72.0 * xi.norm2() - offset - f.evaluate(xi);
        rep_a11.record(viol, xi, Vec2::ZERO, None);

        // (A.12): geometric 1/3 bound, endpoint outside B_{2R}.
        let viol = (xa - xo).norm() / 3.0 - segment_length_outside(xa, xo, r);
        rep_a12.record(viol, xa, xo, None);
    }
    vec![rep_a5, rep_a8, rep_a9, rep_a10, rep_a11, rep_a12]
}

/// Smallest sampled radius `ρ` with `F(ξ) ≥ M|ξ|` whenever `|ξ| ≥ ρ`,
/// probed along 64 rays by convex bisection.
pub fn superlinearity_radius(f: &Lagrangian, m: f64) -> Result<f64, LagrangianError> {
    assert!(m > 0.0);
    let mut radius = 0.0f64;
    for i in 0..64 {
        let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * i as f64 / 64.0);
        let g = |t: f64| f.evaluate(dir * t) - m * t;
        // g is convex with g(t) → ∞; find an upper end where it is positive
        // and increasing.
        let mut hi = (2.0 * f.degeneracy_radius).max(1.0);
        while g(hi) <= 0.0 || g(hi) <= g(hi * 0.995) {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(LagrangianError::NotFound([dir.x, dir.y]));
            }
        }
        // Ternary search for the minimum, then bisect the upper zero.
        let (mut a, mut b) = (0.0, hi);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if g(m1) <= g(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let tmin = 0.5 * (a + b);
        if g(tmin) >= 0.0 {
            continue; // never dips below M|ξ| on this ray
        }
        let (mut lo, mut up) = (tmin, hi);
        while up - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + up);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        radius = radius.max(up);
    }
    Ok(radius)
}

/// Minimal eigenvalue of the finite-difference Hessian of `g` at `x`.
pub fn fd_hessian_min_eig(g: &dyn Fn(Vec2) -> f64, x: Vec2, h: f64) -> f64 {
    let e1 = Vec2::new(h, 0.0);
    let e2 = Vec2::new(0.0, h);
    let f0 = g(x);
    let h11 = (g(x + e1) - 2.0 * f0 + g(x - e1)) / (h * h);
    let h22 = (g(x + e2) - 2.0 * f0 + g(x - e2)) / (h * h);
    let h12 = (g(x + e1 + e2) - g(x + e1 - e2) - g(x - e1 + e2) + g(x - e1 - e2)) / (4.0 * h * h);
    let tr = 0.5 * (h11 + h22);
    let det = (0.25 * (h11 - h22) * (h11 - h22) + h12 * h12).sqrt();
    tr - det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values_match_closed_forms() {
        let tr = Lagrangian::torsion_rod();
        assert_eq!(tr.evaluate(Vec2::new(2.0, 0.0)), 2.5);
        assert_eq!(tr.evaluate(Vec2::new(0.5, 0.0)), 0.5);
        let pw = Lagrangian::power_outside_ball(1.0, 2.0, 0.0, vec![2.0, 2.0]).unwrap();
        assert!((pw.evaluate(Vec2::new(1.0, 1.0)) - 4.0).abs() < 1e-14);
        assert!(Lagrangian::log_family(0.0, 1.0).is_err());
        assert!(Lagrangian::power_outside_ball(1.0, 1.0, 0.0, vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn subgradient_supports_the_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fams = [
            Lagrangian::torsion_rod(),
            Lagrangian::quadratic(),
            Lagrangian::power_outside_ball(1.0, 3.0, 1.0, vec![2.0, 1.5]).unwrap(),
            Lagrangian::log_family(0.5, 2.0).unwrap(),
        ];
        for f in &fams {
            for _ in 0..2000 {
                let x = Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let y = Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let gap = f.evaluate(y) - f.evaluate(x) - f.subgradient(x).dot(y - x);
                assert!(gap > -1e-10, "subgradient inequality failed: {gap}");
                // monotonicity of the subdifferential
                let mono = (f.subgradient(x) - f.subgradient(y)).dot(x - y);
                assert!(mono > -1e-10);
            }
        }
    }

    #[test]
    fn midpoint_convexity_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = Lagrangian::log_family(0.0, 1.5).unwrap();
        for _ in 0..5000 {
            let x = Vec2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            let y = Vec2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            let mid = f.evaluate((x + y) * 0.5) - 0.5 * (f.evaluate(x) + f.evaluate(y));
            assert!(mid < 1e-10, "midpoint convexity failed: {mid}");
        }
    }

    #[test]
    fn phi_uc_check_accepts_correct_declarations() {
        let quad = Lagrangian::quadratic();
        let rep = check_phi_uniform_convexity(&quad, 20_000, 0);
        assert!(rep.max_violation <= 1e-9, "{:?}", rep.witness);
        assert!(rep.max_violation_subgradient <= 1e-9);

        let tr = Lagrangian::torsion_rod();
        let rep = check_phi_uniform_convexity(&tr, 20_000, 0);
        assert!(rep.max_violation <= 1e-9, "{:?}", rep.witness);
        assert!(rep.max_violation_subgradient <= 1e-9);

        let pw = Lagrangian::power_outside_ball(1.0, 3.0, 1.0, vec![2.0, 2.0]).unwrap();
        let rep = check_phi_uniform_convexity(&pw, 20_000, 0);
        assert!(rep.max_violation <= 1e-9, "{:?}", rep.witness);

        let lg = Lagrangian::log_family(0.5, 2.0).unwrap();
        let rep = check_phi_uniform_convexity(&lg, 20_000, 0);
        assert!(rep.max_violation <= 1e-9, "{:?}", rep.witness);
    }

    #[test]
    fn phi_uc_check_finds_shrunk_ball_violation() {
        // Declaring R = 0.5 pretends uniform convexity on 0.5 < |z| < 1
        // where the torsion-rod integrand is affine in the norm.
        let bad = Lagrangian::torsion_rod().with_uc_declaration(
            0.5,
            Modulus::Const(1.0),
            Some(1.0),
        );
        let rep = check_phi_uniform_convexity(&bad, 20_000, 0);
        assert!(
            rep.max_violation > 1e-4,
            "expected a violation, got {}",
            rep.max_violation
        );
    }

    #[test]
    fn segment_length_outside_cases() {
        let r = 1.0;
        assert!(
            (segment_length_outside(Vec2::new(-2.0, 0.0), Vec2::new(2.0, 0.0), r) - 2.0).abs()
                < 1e-14
        );
        assert!(
            (segment_length_outside(Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), r) - 2.0).abs()
                < 1e-14
        );
        let a = Vec2::new(2.0, 2.0);
        let b = Vec2::new(5.0, 2.0);
        assert!((segment_length_outside(a, b, r) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn inequality_suite_clean_for_torsion_and_quadratic() {
        for f in [Lagrangian::torsion_rod(), Lagrangian::quadratic()] {
            for rep in uc_inequality_suite(&f, 20_000, 0) {
                assert!(
                    rep.max_violation <= 1e-9,
                    "{}: {} {:?}",
                    rep.name,
                    rep.max_violation,
                    rep.witness
                );
            }
        }
    }

    #[test]
    fn inequality_suite_specific_values() {
        // ℋ¹ through the ball: 2 ≥ (1/3)·4.
        let h1 = segment_length_outside(Vec2::new(-2.0, 0.0), Vec2::new(2.0, 0.0), 1.0);
        assert!(h1 >= 4.0 / 3.0);
        // Quadratic growth for |z|²: F(ξ) ≥ (2/72)|ξ|² with slack.
        let q = Lagrangian::quadratic();
        let xi = Vec2::new(3.0, -4.0);
        assert!(q.evaluate(xi) >= 2.0 / 72.0 * xi.norm2());
    }

    #[test]
    fn adversarial_modulus_is_caught() {
        let bad =
            Lagrangian::quadratic().with_uc_declaration(0.0, Modulus::Const(3.0), Some(3.0));
        let rep = check_phi_uniform_convexity(&bad, 5_000, 0);
        assert!(rep.max_violation > 1e-3);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn truncation_matches_closed_forms() {
        // Φ(t) = t, R = 1, Q = 2: μ_Q = min{1, 2} = 1.
        let f = Lagrangian::quadratic().with_uc_declaration(
            1.0,
            Modulus::Power {
                coef: 1.0,
                exponent: 1.0,
            },
            None,
        );
        assert_eq!(mu_q(&f, 2.0), 1.0);
        // Φ(t) = t^{-1/2}, R = 1, Q = 2: min at t = 8.
        let f = Lagrangian::quadratic().with_uc_declaration(
            1.0,
            Modulus::Power {
                coef: 1.0,
                exponent: -0.5,
            },
            None,
        );
        assert!((mu_q(&f, 2.0) - 8.0f64.powf(-0.5)).abs() < 1e-15);
        // J_Q value and F_Q assembly at x = (3,0), Q = 2.
        let x = Vec2::new(3.0, 0.0);
        assert_eq!(j_q(x, 2.0), 1.0);
        let base = Lagrangian::torsion_rod();
        let fq = truncate(&base, 2.0);
        assert!((fq.evaluate(x) - (base.evaluate(x) + mu_q(&base, 2.0))).abs() < 1e-14);
        // identity on B_Q
        assert_eq!(fq.evaluate(Vec2::new(1.5, 0.5)), base.evaluate(Vec2::new(1.5, 0.5)));
    }

    #[test]
    fn j_q_hessian_lower_bound_outside_2q() {
        let q = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let rad = rng.gen_range(2.0 * q..4.0 * q);
            let x = Vec2::from_polar(rad, rng.gen_range(0.0..std::f64::consts::TAU));
            let lam = fd_hessian_min_eig(&|p| j_q(p, q), x, 1e-4);
            assert!(lam >= 1.0 - 1e-6, "λmin = {lam} at |x| = {rad}");
        }
    }

    #[test]
    fn superlinearity_radii() {
        let q = Lagrangian::quadratic();
        let r = superlinearity_radius(&q, 4.0).unwrap();
        assert!((r - 4.0).abs() < 1e-6);
        let tr = Lagrangian::torsion_rod();
        let r = superlinearity_radius(&tr, 1.0).unwrap();
        assert!(r <= 1.0, "torsion rod satisfies F ≥ |ξ| globally, r = {r}");
        let pw = Lagrangian::power_outside_ball(1.0, 2.0, 1.0, vec![2.0, 2.0]).unwrap();
        let r = superlinearity_radius(&pw, 10.0).unwrap();
        for i in 0..64 {
            let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * i as f64 / 64.0);
            for t in [r * 1.0001, r * 2.0, r * 10.0] {
                assert!(pw.evaluate(dir * t) >= 10.0 * t - 1e-9);
            }
        }
    }
}
