// Scratch: smoke-test of the tiny-lake exhaustive oracle fixture design.
use lakevort::elliptic::{assemble, harmonic_basis, CirculationSpec};
use lakevort::geometry::{GridSpec, Lake, LakeKind, ScalarField};
use lakevort::rearrange::*;

fn tiny_lake(cells: &[(usize, usize)], name: &str) -> Lake {
    let w = cells.iter().map(|c| c.0).max().unwrap() + 5;
    let h = cells.iter().map(|c| c.1).max().unwrap() + 5;
    let grid = GridSpec::new(w.max(6), h.max(6), 0.0, 0.0, 0.25).unwrap();
    let mut mask = vec![false; grid.len()];
    let mut depth = vec![0.0; grid.len()];
    for &(i, j) in cells {
        let idx = grid.index(i + 2, j + 2);
        mask[idx] = true;
        depth[idx] = 1.0;
    }
    let open = vec![true; grid.len()];
    Lake::from_parts(grid, mask, depth, open.clone(), open, name, LakeKind::Custom, 2.0).unwrap()
}

fn main() {
    let block9: Vec<(usize, usize)> = (0..3).flat_map(|j| (0..3).map(move |i| (i, j))).collect();
    let plus5 = vec![(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)];
    let plus9 = vec![(2,0),(2,1),(0,2),(1,2),(2,2),(3,2),(4,2),(2,3),(2,4)];
    let ring12: Vec<(usize, usize)> = (0..4).flat_map(|j| (0..4).map(move |i| (i, j)))
        .filter(|&(i, j)| !((1..3).contains(&i) && (1..3).contains(&j))).collect();
    let block12: Vec<(usize, usize)> = (0..3).flat_map(|j| (0..4).map(move |i| (i, j))).collect();
    // mask, stream-peak cell, quota cells, circulation weights (ring-12
    // encloses an island, so it carries two boundary components)
    type Fixture = (&'static str, Vec<(usize, usize)>, (usize, usize), usize, Vec<f64>);
    let fixtures: Vec<Fixture> = vec![
        ("block-9", block9.clone(), (1, 1), 1, vec![1.0]),
        ("block-9", block9, (1, 1), 2, vec![1.0]),
        ("plus-5", plus5, (1, 1), 1, vec![1.0]),
        ("plus-9", plus9.clone(), (2, 2), 1, vec![1.0]),
        ("plus-9", plus9, (2, 2), 2, vec![1.0]),
        ("ring-12", ring12, (0, 0), 1, vec![1.0, 0.0]),
        ("block-12", block12, (1, 1), 1, vec![1.0]),
    ];
    for (name, cells, peak, quota_cells, circ_bar) in fixtures {
        let lake = tiny_lake(&cells, name);
        let op = assemble(&lake).unwrap();
        let basis = harmonic_basis(&op, &lake).unwrap();
        let h2 = lake.grid.h * lake.grid.h;
        let eps = (quota_cells as f64 * h2).sqrt();
        let profile = VortexProfile::new(DistributionFamily::Uniform, 1.0, 1.0, eps, 2.0, 1).unwrap();
        let center = lake.grid.center(peak.0 + 2, peak.1 + 2);
        let sigma = 1.2 * lake.grid.h;
        let psi = ScalarField::from_fn(&lake, |x, y| {
            0.3 * (-((x - center.0).powi(2) + (y - center.1).powi(2)) / (2.0 * sigma * sigma)).exp()
        });
        let opts = MaximizeOpts { max_iter: 400, rel_tol: 1e-12, ..MaximizeOpts::default() };
        let state = maximize(&lake, &op, &basis, &profile, &psi, 1.0, &circ_bar, &opts).unwrap();
        let e_ascent = state.energy_trace.last().copied().unwrap();
        let quotas = build_quotas(&profile, &lake).unwrap();
        let value = quotas.plus[0].value;
        let interior: Vec<usize> = lake.interior_cells().map(|(idx, _)| idx).collect();
        let circ = CirculationSpec::new(circ_bar.iter().map(|c| c * quotas.strength_plus).collect());
        let mut best = f64::NEG_INFINITY;
        let n = interior.len();
        let mut eval = |combo: &[usize]| {
            let mut zeta = ScalarField::zeros(&lake);
            for &c in combo {
                zeta.data[interior[c]] =
                    value * quotas.plus[0].quota / (quota_cells as f64) / lake.cell_mu(interior[c]);
            }
            let e = energy(&lake, &op, &basis, &zeta, &psi, 1.0, &circ).unwrap();
            if e > best { best = e; }
        };
        if quota_cells == 1 {
            for a in 0..n { eval(&[a]); }
        } else {
            for a in 0..n { for b in a+1..n { eval(&[a, b]); } }
        }
        let gap = (e_ascent - best) / best.abs().max(1.0);
        println!("{name}/k={quota_cells}: ascent {e_ascent:.12e} brute {best:.12e} rel gap {gap:+.2e} iters {}", state.iterations);
    }
}
