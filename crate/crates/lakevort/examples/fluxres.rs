// Compare the cell-based and face-based (conservative) steadiness residuals.
use lakevort::elliptic::{assemble, harmonic_basis};
use lakevort::geometry::{build_disk_lake, Lake, ScalarField};
use lakevort::rearrange::*;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

fn parabolic(t: f64) -> f64 { 2.0 - 4.0 * (t - 0.5).powi(2) }

/// Cauchy-Schwarz-normalized residual: |∫ζ⟨∇⊥ψ,∇φ⟩dm| / (‖ζ∇⊥ψ‖₂ ‖∇φ‖₂).
fn cs_residual(lake: &Lake, zeta: &ScalarField, psi: &ScalarField, n_tests: usize, seed: u64) -> f64 {
    let (nx, ny, h) = (lake.grid.nx, lake.grid.ny, lake.grid.h);
    let dist = lake.boundary_distance_cells();
    let centers: Vec<(f64, f64)> = lake.interior_cells()
        .filter(|&(idx, _)| dist[idx] >= 3)
        .map(|(_, c)| c).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let at = |f: &ScalarField, i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 { 0.0 }
        else { f.data[j as usize * nx + i as usize] }
    };
    for _ in 0..n_tests {
        let c = centers[rng.random_range(0..centers.len())];
        let sigma = rng.random_range(0.1..0.3);
        let phi = ScalarField::from_fn(lake, |x, y| {
            (-((x - c.0).powi(2) + (y - c.1).powi(2)) / (2.0 * sigma * sigma)).exp()
        });
        let mut signed = 0.0;
        let mut zu2 = 0.0;
        let mut gphi2 = 0.0;
        for (idx, _) in lake.interior_cells() {
            let (i, j) = ((idx % nx) as i64, (idx / nx) as i64);
            let px = (at(psi, i + 1, j) - at(psi, i - 1, j)) / (2.0 * h);
            let py = (at(psi, i, j + 1) - at(psi, i, j - 1)) / (2.0 * h);
            let fx = (at(&phi, i + 1, j) - at(&phi, i - 1, j)) / (2.0 * h);
            let fy = (at(&phi, i, j + 1) - at(&phi, i, j - 1)) / (2.0 * h);
            let z = zeta.data[idx];
            signed += z * (-py * fx + px * fy) * h * h;
            zu2 += (z * px.hypot(py)).powi(2) * h * h;
            gphi2 += (fx * fx + fy * fy) * h * h;
        }
        let denom = zu2.sqrt() * gphi2.sqrt();
        if denom > 0.0 {
            worst = worst.max(signed.abs() / denom);
        }
    }
    worst
}

fn main() {
    let lake = build_disk_lake(128, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let basis = harmonic_basis(&op, &lake).unwrap();
    let profile = VortexProfile::new(DistributionFamily::Linear, 1.0, 0.7, 0.2, 2.0, 8).unwrap();
    let psi0 = ScalarField::zeros(&lake);
    let seeds: Vec<u64> = vec![5, 10, 6, 43, 0];
    let rows: Vec<String> = seeds.par_iter().map(|&seed| {
        let opts = MaximizeOpts { max_iter: 1500, rel_tol: 1e-9, init: Init::Random(seed), ..MaximizeOpts::default() };
        let state = maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap();
        let cell = steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, 7).unwrap();
        let flux = cs_residual(&lake, &state.zeta, &state.psi_total, 20, 7);
        // scattered comparison
        let quotas = build_quotas(&profile, &lake).unwrap();
        use rand::seq::SliceRandom;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1000);
        let mut cells: Vec<usize> = lake.interior_cells().map(|(i, _)| i).collect();
        cells.shuffle(&mut rng);
        let mut scat = ScalarField::zeros(&lake);
        let mut it = cells.iter();
        for l in quotas.plus.iter() {
            let mut rem = l.quota;
            while rem > 0.0 { let &c = it.next().unwrap(); let mu = lake.cell_mu(c); if mu <= 0.0 { continue; } let take = rem.min(mu); scat.data[c] = l.value * take / mu; rem -= take; }
        }
        for l in quotas.minus.iter() {
            let mut rem = l.quota;
            while rem > 0.0 { let &c = it.next().unwrap(); let mu = lake.cell_mu(c); if mu <= 0.0 { continue; } let take = rem.min(mu); scat.data[c] = -l.value * take / mu; rem -= take; }
        }
        let k = lakevort::elliptic::solve_k(&op, &lake, &scat, 1e-10, op.default_max_iter).unwrap();
        let scat_flux = cs_residual(&lake, &scat, &k, 20, 7);
        format!("seed {seed}: cell {cell:.4} cs {flux:.4} scattered-cs {scat_flux:.4}")
    }).collect();
    for r in rows { println!("{r}"); }
}
