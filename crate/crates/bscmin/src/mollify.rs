//! Shared mollification kernel and fast convolution of piecewise-affine
//! convex functions.
//!
//! The kernel is the classical bump `ρ(r) = c·exp(-1/(1-r²))` on the unit
//! disc, normalized to unit mass, discretized by midpoint quadrature on a
//! 32×32 polar grid. Convolving a finite max of affine maps with `ρ_ε` is
//! exact wherever a single affine piece wins on the whole `ε`-ball, which
//! is everywhere except an `ε`-neighborhood of the kink set; the slow
//! quadrature path is only taken there.

use crate::vec2::Vec2;
use std::sync::OnceLock;

/// Number of radial × angular midpoint quadrature nodes.
const QUAD_N: usize = 32;

/// Quadrature discretization of the unit-radius bump kernel.
#[derive(Debug)]
pub struct Kernel {
    /// Offsets on the unit disc paired with positive weights summing to 1.
    pub nodes: Vec<(Vec2, f64)>,
    /// Second moment `∫ |q|² ρ(q) dq` of the discretized kernel.
    pub second_moment: f64,
}

impl Kernel {
    fn build() -> Kernel {
        let mut nodes = Vec::with_capacity(QUAD_N * QUAD_N);
        let dr = 1.0 / QUAD_N as f64;
        let dth = std::f64::consts::TAU / QUAD_N as f64;
        let mut mass = 0.0;
        for i in 0..QUAD_N {
            let r = (i as f64 + 0.5) * dr;
            let rho = (-1.0 / (1.0 - r * r)).exp();
            let w = rho * r * dr * dth;
            for j in 0..QUAD_N {
                let th = (j as f64 + 0.5) * dth;
                nodes.push((Vec2::from_polar(r, th), w));
                mass += w;
            }
        }
        for (_, w) in nodes.iter_mut() {
            *w /= mass;
        }
        let second_moment = nodes.iter().map(|(q, w)| w * q.norm2()).sum();
        Kernel {
            nodes,
            second_moment,
        }
    }

    /// Process-wide kernel instance.
    pub fn shared() -> &'static Kernel {
        static KERNEL: OnceLock<Kernel> = OnceLock::new();
        KERNEL.get_or_init(Kernel::build)
    }

    /// Mollified value `(g * ρ_ε)(x)` of an arbitrary field by quadrature.
    pub fn convolve(&self, g: &dyn Fn(Vec2) -> f64, x: Vec2, eps: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(q, w)| w * g(x - q * eps))
            .sum()
    }
}

/// A finite maximum of affine maps `x ↦ max_i ⟨a_i, x⟩ + b_i`.
#[derive(Debug, Clone)]
pub struct MaxAffine {
    pub gens: Vec<(Vec2, f64)>,
    /// Upper bound for the slopes `|a_i|`; Lipschitz constant of the max.
    pub lip: f64,
}

impl MaxAffine {
    pub fn new(gens: Vec<(Vec2, f64)>) -> MaxAffine {
        assert!(!gens.is_empty(), "max of an empty affine family");
        let lip = gens
            .iter()
            .map(|(a, _)| a.norm())
            .fold(0.0f64, f64::max);
        MaxAffine { gens, lip }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        self.gens
            .iter()
            .map(|(a, b)| a.dot(x) + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value together with the gap to the second-best affine piece.
    pub fn eval_with_gap(&self, x: Vec2) -> (f64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for (a, b) in &self.gens {
            let v = a.dot(x) + b;
            if v > best {
                second = best;
                best = v;
            } else if v > second {
                second = v;
            }
        }
        (best, best - second)
    }

    /// `(self * ρ_ε)(x)`. Exactly the affine value when one piece wins on
    /// the whole `ε`-ball; midpoint quadrature otherwise.
    pub fn mollified(&self, x: Vec2, eps: f64, kernel: &Kernel) -> f64 {
        if eps == 0.0 {
            return self.eval(x);
        }
        let (v, gap) = self.eval_with_gap(x);
        if gap > 2.0 * self.lip * eps {
            return v;
        }
        kernel.convolve(&|p| self.eval(p), x, eps)
    }
}

/// Scalar fields that know how to evaluate their own mollification.
///
/// Domain approximation only needs `ψ = φ * ρ_ε` at query points; letting
/// the field choose the evaluation strategy keeps the fast path available
/// for the piecewise-affine extensions built from BSC certificates.
pub trait MollifiableField {
    fn eval(&self, x: Vec2) -> f64;

    fn eval_mollified(&self, x: Vec2, eps: f64, kernel: &Kernel) -> f64 {
        if eps == 0.0 {
            self.eval(x)
        } else {
            kernel.convolve(&|p| self.eval(p), x, eps)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_has_unit_mass_and_zero_mean() {
        let k = Kernel::shared();
        let mass: f64 = k.nodes.iter().map(|(_, w)| w).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        let mean = k
            .nodes
            .iter()
            .fold(Vec2::ZERO, |acc, &(q, w)| acc + q * w);
        assert!(mean.norm() < 1e-12);
        assert!(k.second_moment > 0.0 && k.second_moment < 1.0);
    }

    #[test]
    fn mollified_affine_is_exact() {
        let k = Kernel::shared();
        let f = MaxAffine::new(vec![(Vec2::new(3.0, -1.0), 0.5)]);
        let x = Vec2::new(0.3, 2.0);
        let exact = f.eval(x);
        assert!((f.mollified(x, 0.1, k) - exact).abs() < 1e-12);
        // Quadrature path agrees with the fast path on the same input.
        let by_quad = k.convolve(&|p| f.eval(p), x, 0.1);
        assert!((by_quad - exact).abs() < 1e-12);
    }

    #[test]
    fn mollified_max_exceeds_max_at_kink() {
        // |x|-like kink: mollification strictly increases the value at 0.
        let k = Kernel::shared();
        let f = MaxAffine::new(vec![
            (Vec2::new(1.0, 0.0), 0.0),
            (Vec2::new(-1.0, 0.0), 0.0),
        ]);
        let v = f.mollified(Vec2::ZERO, 0.5, k);
        assert!(v > 0.0 && v < 0.5);
    }
}
