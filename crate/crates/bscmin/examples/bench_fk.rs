use bscmin::lagrangian::Lagrangian;
use bscmin::regularize::approximate_sequence;
use bscmin::Vec2;
use std::time::Instant;

fn main() {
    let base = Lagrangian::torsion_rod();
    for k in [8u32, 128] {
        let t0 = Instant::now();
        let fk = approximate_sequence(&base, k);
        let build = t0.elapsed();
        let t0 = Instant::now();
        let mut acc = 0.0;
        let n = 1_000_000u64;
        for i in 0..n {
            let a = (i as f64) * 0.618;
            let r = 3.0 * ((i % 1000) as f64) / 1000.0;
            let (v, g) = fk.eval_grad(Vec2::from_polar(r, a));
            acc += v + g.x;
        }
        let per = t0.elapsed().as_secs_f64() / n as f64;
        eprintln!(
            "k={k}: build {:?}, eval {:.1} ns/call, eps={:.2e}, acc {acc:.3}",
            build,
            per * 1e9,
            fk.epsilon_k
        );
    }
}
