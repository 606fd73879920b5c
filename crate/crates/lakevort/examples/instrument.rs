// Scratch: per-seed residual vs pair separation for the ascent fixture.
use lakevort::asymptotics::concentration_diagnostics;
use lakevort::elliptic::{assemble, harmonic_basis};
use lakevort::geometry::{build_disk_lake, ScalarField};
use lakevort::rearrange::*;
use rayon::prelude::*;

fn parabolic(t: f64) -> f64 { 2.0 - 4.0 * (t - 0.5).powi(2) }

fn main() {
    let lake = build_disk_lake(128, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let basis = harmonic_basis(&op, &lake).unwrap();
    let profile = VortexProfile::new(DistributionFamily::Linear, 1.0, 0.7, 0.3, 2.0, 8).unwrap();
    let psi0 = ScalarField::zeros(&lake);
    let rows: Vec<String> = (0..50u64).into_par_iter().map(|seed| {
        let opts = MaximizeOpts { max_iter: 1500, rel_tol: 1e-9, init: Init::Random(seed), ..MaximizeOpts::default() };
        let state = maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap();
        let res = steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, seed).unwrap();
        let res7 = steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, 7).unwrap();
        let rep = concentration_diagnostics(&lake, &state.zeta, 0.3).unwrap();
        let p = rep.plus.unwrap().centroid;
        let m = rep.minus.unwrap().centroid;
        let sep = ((p.0 - m.0).powi(2) + (p.1 - m.1).powi(2)).sqrt();
        let rp = (p.0 * p.0 + p.1 * p.1).sqrt();
        let rm = (m.0 * m.0 + m.1 * m.1).sqrt();
        format!("seed {seed:2}: res {res:.4} res7 {res7:.4} sep {sep:.3} rp {rp:.3} rm {rm:.3} iters {} conv {}", state.iterations, state.converged)
    }).collect();
    for r in rows { println!("{r}"); }
}
