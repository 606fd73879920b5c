//! Acceptance suite: every gate criterion runs at its stated tolerance and
//! prints one pass/fail line. The criteria run sequentially inside a single
//! test so the wall-clock caps are measured without interference.

use lakevort::asymptotics::concentration_diagnostics;
use lakevort::commands::{cmd_figure1, cmd_invariants};
use lakevort::config::ExperimentConfig;
use lakevort::elliptic::{assemble, harmonic_basis, solve_k, CirculationSpec};
use lakevort::geometry::{build_annulus_lake, build_disk_lake, GridSpec, Lake, LakeKind, ScalarField};
use lakevort::green::{gaussian_bump, verify_expansion};
use lakevort::rearrange::{
    build_quotas, energy, maximize, place_pair, steadiness_residual, DistributionFamily, Init,
    MaximizeOpts, VortexProfile,
};
use rayon::prelude::*;
use std::time::Instant;

fn parabolic(t: f64) -> f64 {
    2.0 - 4.0 * (t - 0.5).powi(2)
}

struct Gate {
    lines: Vec<(String, bool)>,
}

impl Gate {
    fn new() -> Self {
        Gate { lines: Vec::new() }
    }

    fn record(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!(
            "criterion {name}: {} ({detail})",
            if pass { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((line, pass));
    }

    fn finish(self) {
        let failed: Vec<&str> = self
            .lines
            .iter()
            .filter(|(_, p)| !p)
            .map(|(l, _)| l.as_str())
            .collect();
        assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
    }
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    criterion_1_figure1(&mut gate);
    criterion_2_predictor_agreement(&mut gate);
    criterion_3_concentration_trend(&mut gate);
    criterion_4_operator_invariants(&mut gate);
    criterion_5_analytic_solver_checks(&mut gate);
    criterion_6_green_expansion(&mut gate);
    criterion_7_energy_ascent(&mut gate);
    criterion_8_brute_force_oracle(&mut gate);
    criterion_9_strength_identities(&mut gate);
    gate.finish();
}

/// Figure-1 reproduction: τ = 0.7, P(t) = 2-4(t-1/2)², 20-point ν sweep on
/// [0, 0.3/4π): r±(0) = 0.7071 ± 1e-3, r⁺ non-decreasing, r⁻ non-increasing,
/// b(r⁺) non-increasing; under 10 s.
fn criterion_1_figure1(gate: &mut Gate) {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::parse(
        "geometry = disk\nprofile = parabolic\ntau = 0.7\nnu_points = 20\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_figure1(&cfg, dir.path()).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let r = 0.5f64.sqrt();
    let mut pass = out.rows.len() == 20;
    pass &= (out.rows[0].r_plus - r).abs() <= 1e-3;
    pass &= (out.rows[0].r_minus - r).abs() <= 1e-3;
    for w in out.rows.windows(2) {
        pass &= w[1].r_plus >= w[0].r_plus - 1e-12;
        pass &= w[1].r_minus <= w[0].r_minus + 1e-12;
        pass &= w[1].b_plus <= w[0].b_plus + 1e-12;
    }
    pass &= elapsed < 10.0;
    gate.record(
        "1 figure-1 reproduction",
        pass,
        format!(
            "r+(0) = {:.5}, r-(0) = {:.5}, {:.1} s",
            out.rows[0].r_plus, out.rows[0].r_minus, elapsed
        ),
    );
}

/// Predictor–maximizer agreement: disk n = 128, ε = 0.05, Ψ ≡ 0, τ = 0.7;
/// both centroid radii within 0.05 of √0.5; under 2 min.
fn criterion_2_predictor_agreement(gate: &mut Gate) {
    let t0 = Instant::now();
    let lake = build_disk_lake(128, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let basis = harmonic_basis(&op, &lake).unwrap();
    let profile =
        VortexProfile::new(DistributionFamily::Uniform, 1.0, 0.7, 0.05, 2.0, 1).unwrap();
    let psi0 = ScalarField::zeros(&lake);
    let opts = MaximizeOpts {
        max_iter: 700,
        rel_tol: 1e-9,
        ..MaximizeOpts::default()
    };
    let state = maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap();
    let report = concentration_diagnostics(&lake, &state.zeta, 0.05).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let target = 0.5f64.sqrt();
    let radius = |c: (f64, f64)| (c.0 * c.0 + c.1 * c.1).sqrt();
    let rp = report.plus.as_ref().map(|p| radius(p.centroid));
    let rm = report.minus.as_ref().map(|m| radius(m.centroid));
    let pass = state.converged
        && rp.is_some_and(|r| (r - target).abs() <= 0.05)
        && rm.is_some_and(|r| (r - target).abs() <= 0.05)
        && elapsed < 120.0;
    gate.record(
        "2 predictor-maximizer agreement",
        pass,
        format!(
            "centroid radii {:.4} / {:.4} vs {:.4}, {:.0} s",
            rp.unwrap_or(f64::NAN),
            rm.unwrap_or(f64::NAN),
            target,
            elapsed
        ),
    );
}

/// Concentration trend: ε ∈ {0.2, 0.1, 0.05}, support diameters of both
/// parts strictly decreasing and the 4ε mass fraction ≥ 0.99 throughout.
fn criterion_3_concentration_trend(gate: &mut Gate) {
    let lake = build_disk_lake(128, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let basis = harmonic_basis(&op, &lake).unwrap();
    let psi0 = ScalarField::zeros(&lake);
    let eps_list = [0.2, 0.1, 0.05];
    let runs: Vec<_> = eps_list
        .par_iter()
        .map(|&eps| {
            let profile =
                VortexProfile::new(DistributionFamily::Uniform, 1.0, 0.7, eps, 2.0, 1).unwrap();
            let opts = MaximizeOpts {
                max_iter: 700,
                rel_tol: 1e-9,
                ..MaximizeOpts::default()
            };
            let state =
                maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap();
            concentration_diagnostics(&lake, &state.zeta, eps).unwrap()
        })
        .collect();
    let mut pass = true;
    let mut detail = String::new();
    let mut prev: Option<(f64, f64)> = None;
    let target = 0.5f64.sqrt();
    for (eps, report) in eps_list.iter().zip(&runs) {
        let plus = report.plus.as_ref().unwrap();
        let minus = report.minus.as_ref().unwrap();
        pass &= plus.fraction_4eps >= 0.99 && minus.fraction_4eps >= 0.99;
        if let Some((dp, dm)) = prev {
            pass &= plus.diameter < dp && minus.diameter < dm;
        }
        // radial centroid error against the predictor stays inside 0.05
        let radius = |c: (f64, f64)| (c.0 * c.0 + c.1 * c.1).sqrt();
        let cerr = (radius(plus.centroid) - target).abs();
        pass &= cerr <= 0.05;
        detail.push_str(&format!(
            "eps {eps}: diam {:.3}/{:.3} frac {:.3}/{:.3} cerr {:.3}; ",
            plus.diameter, minus.diameter, plus.fraction_4eps, minus.fraction_4eps, cerr
        ));
        prev = Some((plus.diameter, minus.diameter));
    }
    gate.record("3 concentration trend", pass, detail);
}

/// Operator invariant suite on disk and annulus at n = 64, all bounds as
/// stated; under 30 s.
fn criterion_4_operator_invariants(gate: &mut Gate) {
    let t0 = Instant::now();
    let disk = ExperimentConfig::parse("geometry = disk\nprofile = parabolic\nn = 64\n").unwrap();
    let annulus = ExperimentConfig::parse(
        "geometry = annulus\nprofile = const\nn = 64\nr_inner = 0.4\ncirculations = 1.0, 0.0\n",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let disk_out = cmd_invariants(&disk, &dir.path().join("disk")).unwrap();
    let annulus_out = cmd_invariants(&annulus, &dir.path().join("annulus")).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let mut pass = disk_out.pass && annulus_out.pass && elapsed < 30.0;
    // the annulus run must include the circulation-matrix checks
    pass &= annulus_out
        .checks
        .iter()
        .any(|c| c.name.contains("kernel"));
    for line in disk_out.checks.iter().chain(&annulus_out.checks) {
        if !line.pass {
            println!("  failed invariant: {line}");
        }
    }
    gate.record(
        "4 operator invariant suite",
        pass,
        format!(
            "{} disk + {} annulus checks, {:.1} s",
            disk_out.checks.len(),
            annulus_out.checks.len(),
            elapsed
        ),
    );
}

/// Analytic solver checks: flat-disk Poisson solution within 1% of
/// (1-|x|²)/4 at n = 128; annulus harmonic basis within 2% of the log
/// profile.
fn criterion_5_analytic_solver_checks(gate: &mut Gate) {
    let lake = build_disk_lake(128, |_| 1.0).unwrap();
    let op = assemble(&lake).unwrap();
    let zeta = ScalarField::constant(&lake, 1.0);
    let psi = solve_k(&op, &lake, &zeta, 1e-10, op.default_max_iter).unwrap();
    let mut worst = 0.0f64;
    let mut sup = 0.0f64;
    for (idx, (x, y)) in lake.interior_cells() {
        let exact = (1.0 - x * x - y * y) / 4.0;
        worst = worst.max((psi.data[idx] - exact).abs());
        sup = sup.max(psi.data[idx].abs());
    }
    let poisson_rel = worst / sup;

    let annulus = build_annulus_lake(128, 0.4, |_| 1.0).unwrap();
    let op2 = assemble(&annulus).unwrap();
    let basis = harmonic_basis(&op2, &annulus).unwrap();
    let mut log_dev = 0.0f64;
    for (idx, (x, y)) in annulus.interior_cells() {
        let r = (x * x + y * y).sqrt();
        log_dev = log_dev.max((basis.fields[1].data[idx] - r.ln() / 0.4f64.ln()).abs());
    }
    let pass = poisson_rel <= 0.01 && log_dev <= 0.02;
    gate.record(
        "5 analytic solver checks",
        pass,
        format!("poisson rel err {poisson_rel:.4}, log-profile dev {log_dev:.4}"),
    );
}

/// Green expansion: disk, parabolic b, bump ζ; max relative error ≤ 5% at
/// n = 128 and strictly smaller at n = 256; under 5 min.
fn criterion_6_green_expansion(gate: &mut Gate) {
    let t0 = Instant::now();
    let err_at = |n: usize| -> f64 {
        let lake = build_disk_lake(n, parabolic).unwrap();
        let op = assemble(&lake).unwrap();
        let basis = harmonic_basis(&op, &lake).unwrap();
        let zeta = gaussian_bump(&lake, (0.5, 0.0), 0.06, 0.12);
        let total = lake.mu_integral(&zeta).unwrap();
        let circ = CirculationSpec::new(vec![total]);
        verify_expansion(&op, &lake, &basis, &zeta, &circ, &[])
            .unwrap()
            .max_rel_err
    };
    let e128 = err_at(128);
    let e256 = err_at(256);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = e128 <= 0.05 && e256 < e128 && elapsed < 300.0;
    gate.record(
        "6 green expansion",
        pass,
        format!("rel err {e128:.4} at n=128, {e256:.4} at n=256, {elapsed:.0} s"),
    );
}

/// Energy ascent: 50 randomized runs, every trace non-decreasing within
/// 1e-12 and every converged residual ≤ 5e-2 at n = 128; the fixed case
/// halves its residual at n = 256.
fn criterion_7_energy_ascent(gate: &mut Gate) {
    let lake = build_disk_lake(128, parabolic).unwrap();
    let op = assemble(&lake).unwrap();
    let basis = harmonic_basis(&op, &lake).unwrap();
    let profile = VortexProfile::new(DistributionFamily::Linear, 1.0, 0.7, 0.2, 2.0, 8).unwrap();
    let psi0 = ScalarField::zeros(&lake);
    let run = |init: Init| {
        let opts = MaximizeOpts {
            max_iter: 1500,
            rel_tol: 1e-9,
            init,
            ..MaximizeOpts::default()
        };
        maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap()
    };
    let results: Vec<(bool, bool, f64)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let state = run(Init::Random(seed));
            let monotone = state
                .energy_trace
                .windows(2)
                .all(|w| w[1] - w[0] >= -1e-12);
            let res =
                steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, seed).unwrap();
            (state.converged, monotone, res)
        })
        .collect();
    let all_converged = results.iter().all(|r| r.0);
    let all_monotone = results.iter().all(|r| r.1);
    let worst_res = results.iter().map(|r| r.2).fold(0.0f64, f64::max);

    // fixed case for the refinement check
    let res_128 = {
        let state = run(Init::WarmStart);
        steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, 7).unwrap()
    };
    let res_256 = {
        let lake = build_disk_lake(256, parabolic).unwrap();
        let op = assemble(&lake).unwrap();
        let basis = harmonic_basis(&op, &lake).unwrap();
        let psi0 = ScalarField::zeros(&lake);
        let opts = MaximizeOpts {
            max_iter: 1500,
            rel_tol: 1e-9,
            ..MaximizeOpts::default()
        };
        let state =
            maximize(&lake, &op, &basis, &profile, &psi0, 1.0, &[1.0], &opts).unwrap();
        steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, 7).unwrap()
    };
    let pass = all_converged
        && all_monotone
        && worst_res <= 5e-2
        && res_128 <= 5e-2
        && res_256 <= 0.5 * res_128;
    gate.record(
        "7 energy ascent",
        pass,
        format!(
            "50 runs: worst residual {worst_res:.4}, monotone {all_monotone}; fixed case \
             {res_128:.4} -> {res_256:.4}"
        ),
    );
}

/// Tiny lakes with flat depth for the exhaustive oracle.
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
    Lake::from_parts(
        grid,
        mask,
        depth,
        open.clone(),
        open,
        name,
        LakeKind::Custom,
        2.0,
    )
    .unwrap()
}

/// Brute-force oracle equivalence: on every fixture lake (≤ 12 interior
/// cells, flat depth) with a single-level quota of ≤ 3 cells, the ascent's
/// final energy matches the exhaustive placement maximum within 1e-10.
///
/// The fixtures carry an external stream peaked at the mask's symmetry
/// center: with a flat landscape every atomic placement is a fixed point of
/// the best response (the self-induced stream peaks on its own cell), so
/// the class needs a non-degenerate objective for the optimum to be
/// attainable; masks are 4-fold symmetric about the peak so tied neighbor
/// choices agree in energy to roundoff.
fn criterion_8_brute_force_oracle(gate: &mut Gate) {
    let block9: Vec<(usize, usize)> = (0..3).flat_map(|j| (0..3).map(move |i| (i, j))).collect();
    let plus5 = vec![(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)];
    let plus9 = vec![
        (2, 0),
        (2, 1),
        (0, 2),
        (1, 2),
        (2, 2),
        (3, 2),
        (4, 2),
        (2, 3),
        (2, 4),
    ];
    let ring12: Vec<(usize, usize)> = (0..4)
        .flat_map(|j| (0..4).map(move |i| (i, j)))
        .filter(|&(i, j)| !((1..3).contains(&i) && (1..3).contains(&j)))
        .collect();
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
    let mut pass = true;
    let mut detail = String::new();
    for (name, cells, peak, quota_cells, circ_bar) in fixtures {
        let lake = tiny_lake(&cells, name);
        let op = assemble(&lake).unwrap();
        let basis = harmonic_basis(&op, &lake).unwrap();
        // quota of exactly `quota_cells` cells: ε² = k h² (h = 1/4 keeps the
        // arithmetic exact in binary, so the smallest-cell check stays tight)
        let h2 = lake.grid.h * lake.grid.h;
        let eps = (quota_cells as f64 * h2).sqrt();
        let profile =
            VortexProfile::new(DistributionFamily::Uniform, 1.0, 1.0, eps, 2.0, 1).unwrap();
        let center = lake.grid.center(peak.0 + 2, peak.1 + 2);
        let sigma = 1.2 * lake.grid.h;
        let psi = ScalarField::from_fn(&lake, |x, y| {
            0.3 * (-((x - center.0).powi(2) + (y - center.1).powi(2)) / (2.0 * sigma * sigma))
                .exp()
        });
        let opts = MaximizeOpts {
            max_iter: 400,
            rel_tol: 1e-12,
            ..MaximizeOpts::default()
        };
        let state = maximize(&lake, &op, &basis, &profile, &psi, 1.0, &circ_bar, &opts).unwrap();
        let e_ascent = state.energy_trace.last().copied().unwrap();

        // exhaustive search over all placements of the level value
        let quotas = build_quotas(&profile, &lake).unwrap();
        let value = quotas.plus[0].value;
        let interior: Vec<usize> = lake.interior_cells().map(|(idx, _)| idx).collect();
        let circ = CirculationSpec::new(circ_bar.iter().map(|c| c * quotas.strength_plus).collect());
        let mut best = f64::NEG_INFINITY;
        let mut stack = vec![0usize; quota_cells];
        // enumerate combinations
        fn combos(
            n: usize,
            k: usize,
            start: usize,
            stack: &mut Vec<usize>,
            depth: usize,
            f: &mut impl FnMut(&[usize]),
        ) {
            if depth == k {
                f(&stack[..k]);
                return;
            }
            for i in start..n {
                stack[depth] = i;
                combos(n, k, i + 1, stack, depth + 1, f);
            }
        }
        let mut eval = |combo: &[usize]| {
            let mut zeta = ScalarField::zeros(&lake);
            for &c in combo {
                zeta.data[interior[c]] = value * quotas.plus[0].quota
                    / (quota_cells as f64)
                    / lake.cell_mu(interior[c]);
            }
            let e = energy(&lake, &op, &basis, &zeta, &psi, 1.0, &circ).unwrap();
            if e > best {
                best = e;
            }
        };
        combos(
            interior.len(),
            quota_cells,
            0,
            &mut stack,
            0,
            &mut eval,
        );
        let ok = e_ascent - best >= -1e-10 * best.abs().max(1.0);
        pass &= ok;
        detail.push_str(&format!(
            "{name}/k={quota_cells}: ascent {e_ascent:.10e} vs brute {best:.10e}; "
        ));
    }
    gate.record("8 brute-force oracle equivalence", pass, detail);
}

/// Strength identities: for every constructed profile the realized
/// strengths sit within 1e-9 relative of τ/log(1/ε) and (1-τ)/log(1/ε),
/// and the layer-cake re-measurement of the placed field matches the
/// quotas within one cell-measure per level.
fn criterion_9_strength_identities(gate: &mut Gate) {
    let lake = build_disk_lake(96, parabolic).unwrap();
    let mut pass = true;
    let mut worst_rel = 0.0f64;
    let mut worst_cells = 0.0f64;
    let max_cell = lake
        .interior_cells()
        .map(|(idx, _)| lake.cell_mu(idx))
        .fold(0.0, f64::max);
    for family in [DistributionFamily::Uniform, DistributionFamily::Linear] {
        for levels in [1usize, 4, 9] {
            for (tau, eps) in [(0.7, 0.1), (0.5, 0.2), (1.0, 0.15), (0.3, 0.05)] {
                let profile = VortexProfile::new(family, 1.3, tau, eps, 2.0, levels).unwrap();
                let quotas = build_quotas(&profile, &lake).unwrap();
                let lambda = profile.log_inv_eps();
                let (sp, sm) = quotas.strength_from_levels();
                if tau > 0.0 {
                    let rel = (sp - tau / lambda).abs() / (tau / lambda);
                    worst_rel = worst_rel.max(rel);
                    pass &= rel <= 1e-9;
                }
                if tau < 1.0 {
                    let rel = (sm - (1.0 - tau) / lambda).abs() / ((1.0 - tau) / lambda);
                    worst_rel = worst_rel.max(rel);
                    pass &= rel <= 1e-9;
                }
                // place and re-measure: realized strengths and the layer cake
                let z = place_pair(&lake, &quotas, (0.45, 0.1), (-0.45, -0.1)).unwrap();
                if tau > 0.0 {
                    let plus = ScalarField {
                        nx: z.nx,
                        ny: z.ny,
                        data: z.data.iter().map(|v| v.max(0.0)).collect(),
                    };
                    let got = lake.mu_integral(&plus).unwrap();
                    let rel = (got - tau / lambda).abs() / (tau / lambda);
                    worst_rel = worst_rel.max(rel);
                    pass &= rel <= 1e-9;
                }
                let mut cum = 0.0;
                for level in &quotas.plus {
                    cum += level.quota;
                    let measured: f64 = lake
                        .interior_cells()
                        .filter(|&(idx, _)| z.data[idx] >= level.value * (1.0 - 1e-12))
                        .map(|(idx, _)| lake.cell_mu(idx))
                        .sum();
                    let cells_off = (measured - cum).abs() / max_cell;
                    worst_cells = worst_cells.max(cells_off);
                    pass &= cells_off <= 1.0;
                }
            }
        }
    }
    gate.record(
        "9 strength identities",
        pass,
        format!("worst strength defect {worst_rel:.2e}, worst layer-cake off {worst_cells:.2} cells"),
    );
}
