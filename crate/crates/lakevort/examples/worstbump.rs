// Dissect the per-bump residual distribution for one converged state.
use lakevort::elliptic::{assemble, harmonic_basis};
use lakevort::geometry::{build_disk_lake, ScalarField};
use lakevort::rearrange::*;
use rand::{Rng, SeedableRng};

fn parabolic(t: f64) -> f64 { 2.0 - 4.0 * (t - 0.5).powi(2) }

fn main() {
    let lake = build_disk_lake(128, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let basis = harmonic_basis(&op, &lake).unwrap();
    let profile = VortexProfile::new(DistributionFamily::Linear, 1.0, 0.7, 0.2, 2.0, 8).unwrap();
    let psi0 = ScalarField::zeros(&lake);
    let opts = MaximizeOpts { max_iter: 1500, rel_tol: 1e-9, init: Init::Random(5), ..MaximizeOpts::default() };
    let state = maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap();
    let rep = lakevort::asymptotics::concentration_diagnostics(&lake, &state.zeta, 0.2).unwrap();
    let cp = rep.plus.unwrap().centroid;
    let cm = rep.minus.unwrap().centroid;
    println!("cores at ({:.3},{:.3}) and ({:.3},{:.3})", cp.0, cp.1, cm.0, cm.1);
    let (nx, ny, h) = (lake.grid.nx, lake.grid.ny, lake.grid.h);
    let dist = lake.boundary_distance_cells();
    let centers: Vec<(f64,f64)> = lake.interior_cells().filter(|&(idx,_)| dist[idx] >= 3).map(|(_,c)| c).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let grad = |f: &ScalarField, idx: usize| -> (f64, f64) {
        let (i, j) = (idx % nx, idx / nx);
        let right = if i + 1 < nx { f.data[idx + 1] } else { 0.0 };
        let left = if i > 0 { f.data[idx - 1] } else { 0.0 };
        let up = if j + 1 < ny { f.data[idx + nx] } else { 0.0 };
        let down = if j > 0 { f.data[idx - nx] } else { 0.0 };
        ((right - left) / (2.0 * h), (up - down) / (2.0 * h))
    };
    for t in 0..20 {
        let c = centers[rng.random_range(0..centers.len())];
        let sigma = rng.random_range(0.1..0.3);
        let phi = ScalarField::from_fn(&lake, |x, y| {
            (-((x - c.0).powi(2) + (y - c.1).powi(2)) / (2.0 * sigma * sigma)).exp()
        });
        let mut signed = 0.0;
        let mut absolute = 0.0;
        for (idx, _) in lake.interior_cells() {
            let z = state.zeta.data[idx];
            if z == 0.0 { continue; }
            let (px, py) = grad(&state.psi_total, idx);
            let (fx, fy) = grad(&phi, idx);
            signed += z * (-py * fx + px * fy) * h * h;
            absolute += (z * px.hypot(py) * fx.hypot(fy)).abs() * h * h;
        }
        let dp = ((c.0-cp.0).powi(2)+(c.1-cp.1).powi(2)).sqrt();
        let dm = ((c.0-cm.0).powi(2)+(c.1-cm.1).powi(2)).sqrt();
        println!("test {t:2}: center ({:+.2},{:+.2}) sigma {sigma:.3} ratio {:.4} dist_to_cores {dp:.2}/{dm:.2}", c.0, c.1, signed.abs()/absolute);
    }
}
