//! Smooth uniformly convex approximations `F_k` of a convex integrand
//! with constant modulus.
//!
//! `F̃_k` is the supremum of the supporting parabolas
//! `F(y) + ⟨ζ_y, x-y⟩ + (μ'/2)|x-y|²·1_{|y| ≥ 2R}`, `μ' = μ/36`, anchored
//! at `|y| ≤ k`; here the continuum anchor set is replaced by a polar
//! grid that is nested across `k` (fixed angles, radii on a fixed step
//! with a geometric tail), which under-approximates the sup but preserves
//! convexity, `F_k ≤ F` and monotonicity in `k`. The mollification radius
//! follows the schedule `ε_k = min{Γ⁻_k, Γ⁺_k, ε_{k-1}, 1/2}` driven by
//! the Lipschitz constant of `F` on `B_k`, which is what makes
//! `F_k = F̃_k * ρ_{ε_k} - 1/k` a nondecreasing sequence below `F`.
//!
//! Evaluation cost matters: the solver queries `F_k` per mesh triangle
//! per iteration. Queries are served from per-cell shortlists of
//! generators that can win anywhere in the cell, and the convolution is
//! collapsed to its closed form (affine + common quadratic + kernel
//! second moment) whenever one generator dominates the whole `ε`-ball;
//! quadrature only runs in the `ε`-thin kink bands.

use crate::lagrangian::{fd_hessian_min_eig, Lagrangian};
use crate::mollify::Kernel;
use crate::vec2::Vec2;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Base radial step of the anchor grid.
const RADIAL_STEP: f64 = 0.125;
/// Radius up to which the radial step stays fixed; beyond it anchors
/// continue on doubling rings (solver queries live near the origin).
const DENSE_RADIUS: f64 = 16.0;
/// Number of anchor angles.
const ANGLES: usize = 64;
/// Edge length of the shortlist cells.
const CELL: f64 = 0.25;

#[derive(Debug, Clone, Copy)]
struct Gen {
    y: Vec2,
    zeta: Vec2,
    fy: f64,
    /// Whether the anchor carries the `(μ'/2)|x-y|²` bonus (`|y| ≥ 2R`).
    outer: bool,
}

impl Gen {
    #[inline]
    fn value(&self, x: Vec2, mu_prime: f64) -> f64 {
        let d = x - self.y;
        let mut v = self.fy + self.zeta.dot(d);
        if self.outer {
            v += 0.5 * mu_prime * d.norm2();
        }
        v
    }

    #[inline]
    fn grad(&self, x: Vec2, mu_prime: f64) -> Vec2 {
        if self.outer {
            self.zeta + (x - self.y) * mu_prime
        } else {
            self.zeta
        }
    }
}

/// `F_k`: smooth, `(μ/36)`-uniformly convex outside `B_{R+1}`, below `F`
/// and nondecreasing in `k` (on the bounded sets all consumers sample).
pub struct RegularizedLagrangian {
    pub base: Lagrangian,
    pub index: u32,
    pub epsilon_k: f64,
    mu_prime: f64,
    gens: Vec<Gen>,
    cells: RwLock<HashMap<(i64, i64), Arc<Vec<u32>>>>,
    /// Kernel second moment scaled by `ε_k²`.
    m2: f64,
}

/// Largest sampled slope of `F` on `B_j` with a 10% safety factor.
fn lipschitz_on_ball(f: &Lagrangian, radius: f64) -> f64 {
    let mut m = 0.0f64;
    for i in 0..256 {
        let dir = Vec2::from_polar(1.0, std::f64::consts::TAU * i as f64 / 256.0);
        m = m.max(f.subgradient(dir * radius).norm());
    }
    1.1 * m
}

/// Mollification radii `Γ⁻_j`, `Γ⁺_j` of the monotonicity argument.
fn gamma_bounds(l_j: f64, j: f64, mu_prime: f64) -> (f64, f64) {
    let step = 1.0 / j - 1.0 / (j + 1.0);
    (
        step / (l_j + (6.0 * j + 5.0) * mu_prime / 2.0),
        step / (l_j + mu_prime * (j + 1.0)),
    )
}

/// Builds the k-th regularization of an integrand with constant modulus.
///
/// Requires `k ≥ 2R` and `mu` set (use [`crate::lagrangian::truncate`]
/// first when the modulus is not constant).
pub fn approximate_sequence(base: &Lagrangian, k: u32) -> RegularizedLagrangian {
    let mu = base
        .mu
        .expect("approximate_sequence needs a constant modulus; truncate first");
    let r = base.degeneracy_radius;
    assert!(k as f64 >= 2.0 * r, "index must satisfy k ≥ 2R");
    assert!(k >= 1);
    let mu_prime = mu / 36.0;
    let kf = k as f64;

    // Anchor radii: fixed step to DENSE_RADIUS, then doubling rings, plus
    // the exact threshold radius 2R so the quadratic-bonus family starts
    // with no radial gap.
    let mut radii: Vec<f64> = Vec::new();
    let mut rr = RADIAL_STEP;
    while rr <= kf.min(DENSE_RADIUS) + 1e-12 {
        radii.push(rr);
        rr += RADIAL_STEP;
    }
    let mut ring = DENSE_RADIUS * 2.0;
    while ring <= kf + 1e-12 {
        radii.push(ring);
        ring *= 2.0;
    }
    if r > 0.0 && 2.0 * r <= kf && !radii.iter().any(|&s| (s - 2.0 * r).abs() < 1e-12) {
        radii.push(2.0 * r);
    }

    let mut gens = Vec::with_capacity(radii.len() * ANGLES + 1);
    gens.push(Gen {
        y: Vec2::ZERO,
        zeta: base.subgradient(Vec2::ZERO),
        fy: base.evaluate(Vec2::ZERO),
        outer: r == 0.0,
    });
    for &s in &radii {
        for a in 0..ANGLES {
            let y = Vec2::from_polar(s, std::f64::consts::TAU * a as f64 / ANGLES as f64);
            gens.push(Gen {
                y,
                zeta: base.subgradient(y),
                fy: base.evaluate(y),
                outer: s >= 2.0 * r - 1e-12,
            });
        }
    }

    let mut eps = 0.5f64;
    for j in 1..=k {
        let l_j = lipschitz_on_ball(base, j as f64);
        let (gm, gp) = gamma_bounds(l_j, j as f64, mu_prime);
        eps = eps.min(gm).min(gp);
    }

    RegularizedLagrangian {
        base: base.clone(),
        index: k,
        epsilon_k: eps,
        mu_prime,
        gens,
        cells: RwLock::new(HashMap::new()),
        m2: Kernel::shared().second_moment * eps * eps,
    }
}

impl RegularizedLagrangian {
    fn cell_key(&self, x: Vec2) -> (i64, i64) {
        ((x.x / CELL).floor() as i64, (x.y / CELL).floor() as i64)
    }

    /// Generators that can attain the max somewhere in the cell (or in an
    /// `ε`-ball around it).
    fn shortlist(&self, key: (i64, i64)) -> Arc<Vec<u32>> {
        if let Some(list) = self.cells.read().unwrap().get(&key) {
            return list.clone();
        }
        let center = Vec2::new((key.0 as f64 + 0.5) * CELL, (key.1 as f64 + 0.5) * CELL);
        let rho = CELL * std::f64::consts::SQRT_2 / 2.0 + self.epsilon_k;
        let mut vals = Vec::with_capacity(self.gens.len());
        let mut w = f64::NEG_INFINITY;
        for g in &self.gens {
            let v = g.value(center, self.mu_prime);
            let l = g.grad(center, self.mu_prime).norm() + self.mu_prime * rho;
            vals.push((v, l));
            w = w.max(v - l * rho);
        }
        let list: Vec<u32> = vals
            .iter()
            .enumerate()
            .filter(|(_, (v, l))| v + l * rho >= w - 1e-12)
            .map(|(i, _)| i as u32)
            .collect();
        let arc = Arc::new(list);
        self.cells.write().unwrap().insert(key, arc.clone());
        arc
    }

    /// Winner of the max over a generator set.
    fn scan(&self, list: &[u32], x: Vec2) -> (f64, u32) {
        let mut best = f64::NEG_INFINITY;
        let mut ibest = list[0];
        for &i in list {
            let v = self.gens[i as usize].value(x, self.mu_prime);
            if v > best {
                best = v;
                ibest = i;
            }
        }
        (best, ibest)
    }

    /// `F_k(x)` together with its gradient.
    pub fn eval_grad(&self, x: Vec2) -> (f64, Vec2) {
        let list = self.shortlist(self.cell_key(x));
        let eps = self.epsilon_k;
        let (best, ibest) = self.scan(&list, x);
        let shift = 1.0 / self.index as f64;
        // The winner keeps winning on the whole ε-ball iff its lead over
        // every rival exceeds ε times their relative slope (the common
        // quadratic part cancels pairwise up to μ'ε²).
        let gb = self.gens[ibest as usize];
        let grad_b = gb.grad(x, self.mu_prime);
        let safety = self.mu_prime * eps * eps;
        let mut certified = true;
        for &i in list.iter() {
            if i == ibest {
                continue;
            }
            let g = &self.gens[i as usize];
            let rel = (grad_b - g.grad(x, self.mu_prime)).norm();
            if best - g.value(x, self.mu_prime) <= eps * rel + safety {
                certified = false;
                break;
            }
        }
        if certified {
            // Convolution of affine + quadratic is exact: the kernel mean
            // vanishes and the second moment shifts the quadratic part.
            let v = best
                + if gb.outer {
                    0.5 * self.mu_prime * self.m2
                } else {
                    0.0
                };
            return (v - shift, grad_b);
        }
        let kernel = Kernel::shared();
        let mut v = 0.0;
        let mut grad = Vec2::ZERO;
        for &(q, w) in &kernel.nodes {
            let p = x - q * eps;
            let (bv, bi) = self.scan(&list, p);
            v += w * bv;
            grad += self.gens[bi as usize].grad(p, self.mu_prime) * w;
        }
        (v - shift, grad)
    }

    pub fn evaluate(&self, x: Vec2) -> f64 {
        self.eval_grad(x).0
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        self.eval_grad(x).1
    }

    /// Smallest eigenvalue of the finite-difference Hessian (step 1e-4).
    pub fn hessian_lower_bound(&self, x: Vec2) -> f64 {
        fd_hessian_min_eig(&|p| self.evaluate(p), x, 1e-4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::Lagrangian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec2 {
        loop {
            let x = Vec2::new(
                rng.gen_range(-radius..radius),
                rng.gen_range(-radius..radius),
            );
            if x.norm() <= radius {
                return x;
            }
        }
    }

    #[test]
    fn below_base_and_monotone_in_k() {
        for base in [Lagrangian::quadratic(), Lagrangian::torsion_rod()] {
            let f5 = approximate_sequence(&base, 5);
            let f6 = approximate_sequence(&base, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..1000 {
                let x = sample_ball(&mut rng, 3.0);
                let v5 = f5.evaluate(x);
                let v6 = f6.evaluate(x);
                assert!(v5 <= base.evaluate(x) + 1e-12, "F_5 above F at {x:?}");
                assert!(v6 <= base.evaluate(x) + 1e-12, "F_6 above F at {x:?}");
                assert!(v5 <= v6 + 1e-12, "monotonicity failed at {x:?}");
            }
        }
    }

    #[test]
    fn quadratic_gap_is_controlled() {
        // For F = |z|² the grid anchors reproduce F up to the radial and
        // angular quantization plus the deliberate -1/k shift.
        let base = Lagrangian::quadratic();
        let k = 8;
        let fk = approximate_sequence(&base, k);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid_floor = {
            let d = (RADIAL_STEP / 2.0).hypot(4.0 * std::f64::consts::PI / ANGLES as f64);
            (2.0 - fk.mu_prime) / 2.0 * d * d
        };
        for _ in 0..2000 {
            let x = sample_ball(&mut rng, 4.0);
            let gap = base.evaluate(x) - fk.evaluate(x);
            assert!(gap >= -1e-12);
            assert!(
                gap <= 2.0 / k as f64 + grid_floor + 1e-6,
                "gap {gap} at {x:?}"
            );
        }
    }

    #[test]
    fn converges_uniformly_on_b2() {
        let base = Lagrangian::torsion_rod();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec2> = (0..1000).map(|_| sample_ball(&mut rng, 2.0)).collect();
        let mut sup_gaps = Vec::new();
        for k in [8, 16, 32] {
            let fk = approximate_sequence(&base, k);
            let sup = pts
                .iter()
                .map(|&x| (base.evaluate(x) - fk.evaluate(x)).abs())
                .fold(0.0f64, f64::max);
            sup_gaps.push(sup);
        }
        assert!(
            sup_gaps[0] > sup_gaps[1] && sup_gaps[1] > sup_gaps[2],
            "sup gaps not decreasing: {sup_gaps:?}"
        );
    }

    #[test]
    fn uniform_convexity_transfers_outside_r_plus_one() {
        let base = Lagrangian::torsion_rod();
        let fk = approximate_sequence(&base, 8);
        let safe = base.degeneracy_radius + 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checked = 0;
        while checked < 3000 {
            let z = sample_ball(&mut rng, 5.0);
            let zp = sample_ball(&mut rng, 5.0);
            if crate::vec2::segment_dist_to_origin(z, zp) < safe {
                continue;
            }
            checked += 1;
            let th = rng.gen_range(0.1..0.9);
            let lhs = fk.evaluate(z * th + zp * (1.0 - th));
            let rhs = th * fk.evaluate(z) + (1.0 - th) * fk.evaluate(zp)
                - 0.5 * th * (1.0 - th) * fk.mu_prime * (z - zp).norm2();
            assert!(
                lhs <= rhs + 1e-9,
                "transfer failed: {} at {z:?} {zp:?}",
                lhs - rhs
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let base = Lagrangian::torsion_rod();
        let fk = approximate_sequence(&base, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = sample_ball(&mut rng, 3.0);
            let (_, g) = fk.eval_grad(x);
            let h = 1e-6;
            let gx = (fk.evaluate(x + Vec2::new(h, 0.0)) - fk.evaluate(x - Vec2::new(h, 0.0)))
                / (2.0 * h);
            let gy = (fk.evaluate(x + Vec2::new(0.0, h)) - fk.evaluate(x - Vec2::new(0.0, h)))
                / (2.0 * h);
            // F_k is piecewise smooth; finite differences straddling a kink
            // band can disagree by the band's curvature, so allow slack.
            assert!(
                (g - Vec2::new(gx, gy)).norm() < 1e-3,
                "gradient mismatch at {x:?}: {g:?} vs ({gx}, {gy})"
            );
        }
    }

    #[test]
    fn convexity_of_fk_sampled() {
        let base = Lagrangian::torsion_rod();
        let fk = approximate_sequence(&base, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let x = sample_ball(&mut rng, 4.0);
            let y = sample_ball(&mut rng, 4.0);
            let mid = fk.evaluate((x + y) * 0.5) - 0.5 * (fk.evaluate(x) + fk.evaluate(y));
            assert!(mid <= 1e-10, "midpoint convexity failed: {mid}");
        }
    }
}
