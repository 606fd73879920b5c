// Timing probe for the ascent hot path.
use lakevort::elliptic::assemble;
use lakevort::geometry::{build_disk_lake, ScalarField};

fn parabolic(t: f64) -> f64 { 2.0 - 4.0 * (t - 0.5).powi(2) }

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(256);
    let lake = build_disk_lake(n, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let zeta = ScalarField::from_fn(&lake, |x, y| ((x - 0.7) * 8.0).cos() * (y * 5.0).sin());
    let zr = op.restrict(&zeta);
    let h2 = lake.grid.h * lake.grid.h;
    let rhs: Vec<f64> = zr.iter().zip(op.mass()).map(|(z, m)| z * m / h2).collect();
    let mut x = vec![0.0; op.unknowns()];
    let t0 = std::time::Instant::now();
    let stats = op.pcg(&rhs, &mut x, 1e-12, op.default_max_iter).unwrap();
    println!("n={n}: iters = {}, rel res = {:.2e}, time {:.3?}", stats.iters, stats.rel_residual, t0.elapsed());
}
