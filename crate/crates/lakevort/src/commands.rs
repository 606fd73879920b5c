//! Config-driven experiment commands. Each command writes plot-ready,
//! headerless, space-separated tables under the output directory and also
//! returns what it computed, so callers (CLI and tests) can inspect results
//! without re-parsing files.

use crate::asymptotics::{
    concentration_diagnostics, nu_bound, rotating_radii, rotation_stream, ConcentrationReport,
    SignConvention,
};
use crate::config::{ExperimentConfig, Geometry, InitChoice, PsiChoice};
use crate::elliptic::{assemble, harmonic_basis, solve_k_warm, CirculationSpec};
use crate::error::{Error, Result};
use crate::geometry::{Lake, ScalarField};
use crate::green::{gaussian_bump, verify_expansion};
use crate::rearrange::{
    ascent_circulations, build_quotas, maximize, place_pair, AscentState, Init, MaximizeOpts,
    steadiness_residual,
};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// One line of a pass/fail report: measured value against its bound.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<42} measured {:>13.6e}  bound {:>10.3e}  {}",
            self.name,
            self.measured,
            self.bound,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

fn check(name: &str, measured: f64, bound: f64) -> CheckLine {
    CheckLine {
        name: name.to_string(),
        measured,
        bound,
        pass: measured <= bound,
    }
}

fn write_table(path: &Path, rows: &[String]) -> Result<()> {
    let mut text = rows.join("\n");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn external_stream(cfg: &ExperimentConfig, lake: &Lake) -> ScalarField {
    match cfg.psi {
        PsiChoice::None => ScalarField::zeros(lake),
        PsiChoice::Rotation => {
            let profile = cfg.profile.clone();
            rotation_stream(lake, &move |t| profile.eval(t), cfg.nu)
        }
    }
}

/// Result of a `maximize` run.
#[derive(Debug)]
pub struct MaximizeOutcome {
    pub state: AscentState,
    pub report: ConcentrationReport,
    pub residual: f64,
    pub files: Vec<PathBuf>,
}

/// Run the bathtub ascent for the configured experiment; writes the
/// converged-state table, the energy trace, and a summary report.
pub fn cmd_maximize(cfg: &ExperimentConfig, out_dir: &Path) -> Result<MaximizeOutcome> {
    cfg.check_rotation()?;
    fs::create_dir_all(out_dir)?;
    let lake = cfg.build_lake()?;
    let op = assemble(&lake)?;
    let basis = harmonic_basis(&op, &lake)?;
    let profile = cfg.vortex_profile()?;
    let psi_ext = external_stream(cfg, &lake);
    let opts = MaximizeOpts {
        max_iter: cfg.ascent_max_iter,
        rel_tol: cfg.rel_tol,
        init: match cfg.init {
            InitChoice::Warm => Init::WarmStart,
            InitChoice::Random => Init::Random(cfg.seed),
        },
        ..MaximizeOpts::default()
    };
    let state = maximize(
        &lake,
        &op,
        &basis,
        &profile,
        &psi_ext,
        cfg.lambda,
        &cfg.circulation_weights(),
        &opts,
    )?;
    let residual = steadiness_residual(&lake, &state.zeta, &state.psi_total, 20, cfg.seed)?;
    let report = concentration_diagnostics(&lake, &state.zeta, cfg.eps)?;

    let state_path = out_dir.join("state.txt");
    {
        let mut text = String::new();
        writeln!(
            text,
            "# tau={} eps={} energy={:.16e} iters={}",
            cfg.tau,
            cfg.eps,
            state.energy_trace.last().copied().unwrap_or(0.0),
            state.iterations
        )
        .unwrap();
        for (idx, (x, y)) in lake.interior_cells() {
            writeln!(
                text,
                "{x:.12e} {y:.12e} {:.12e} {:.12e}",
                state.zeta.data[idx], state.psi_total.data[idx]
            )
            .unwrap();
        }
        fs::write(&state_path, text)?;
    }
    let trace_path = out_dir.join("trace.txt");
    write_table(
        &trace_path,
        &state
            .energy_trace
            .iter()
            .enumerate()
            .map(|(k, e)| format!("{k} {e:.16e}"))
            .collect::<Vec<_>>(),
    )?;
    let report_path = out_dir.join("report.txt");
    {
        let mut lines = vec![
            format!("converged = {}", state.converged),
            format!("iterations = {}", state.iterations),
            format!(
                "energy = {:.16e}",
                state.energy_trace.last().copied().unwrap_or(0.0)
            ),
            format!("steadiness_residual = {residual:.6e}"),
        ];
        for (tag, part) in [("plus", &report.plus), ("minus", &report.minus)] {
            match part {
                Some(p) => {
                    lines.push(format!(
                        "centroid_{tag} = {:.10e} {:.10e}",
                        p.centroid.0, p.centroid.1
                    ));
                    lines.push(format!("diameter_{tag} = {:.10e}", p.diameter));
                    lines.push(format!("mass_{tag} = {:.10e}", p.mass));
                    lines.push(format!("fraction_4eps_{tag} = {:.10e}", p.fraction_4eps));
                }
                None => lines.push(format!("part_{tag} = absent")),
            }
        }
        write_table(&report_path, &lines)?;
    }
    Ok(MaximizeOutcome {
        state,
        report,
        residual,
        files: vec![state_path, trace_path, report_path],
    })
}

/// One sampled point of the rotating-pair sweep.
#[derive(Debug, Clone, Copy)]
pub struct Figure1Row {
    pub nu: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
}

#[derive(Debug)]
pub struct Figure1Outcome {
    pub rows: Vec<Figure1Row>,
    pub files: Vec<PathBuf>,
}

/// Sweep the admissible rotation speeds and tabulate the predicted radii:
/// `depth.txt` (r, b), `mtP.txt`/`mtN.txt` (ν, r±), and
/// `depth_mtP.txt`/`depth_mtN.txt` (ν, b(r±)).
pub fn cmd_figure1(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Figure1Outcome> {
    if cfg.geometry != Geometry::Disk {
        return Err(Error::Experiment(
            "the rotating-pair sweep needs a disk lake with a radial profile".into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let bound = nu_bound(cfg.tau);
    if bound <= 0.0 {
        return Err(Error::Admissibility {
            nu: cfg.nu,
            bound,
        });
    }
    let points = cfg.nu_points.max(2);
    let profile = cfg.profile.clone();
    let rows: Vec<Figure1Row> = (0..points)
        .into_par_iter()
        .map(|k| {
            let nu = bound * k as f64 / points as f64;
            let p = profile.clone();
            let pred = rotating_radii(
                &move |t| p.eval(t),
                cfg.tau,
                nu,
                SignConvention::Plus,
                10_000,
            )?;
            Ok(Figure1Row {
                nu,
                r_plus: pred.r_plus,
                r_minus: pred.r_minus,
                b_plus: profile.eval(pred.r_plus * pred.r_plus),
                b_minus: profile.eval(pred.r_minus * pred.r_minus),
            })
        })
        .collect::<Result<_>>()?;

    let depth_path = out_dir.join("depth.txt");
    let samples = 200;
    write_table(
        &depth_path,
        &(0..=samples)
            .map(|k| {
                let r = k as f64 / samples as f64;
                format!("{r:.8} {:.8}", cfg.profile.eval(r * r))
            })
            .collect::<Vec<_>>(),
    )?;
    let two_col = |f: &dyn Fn(&Figure1Row) -> f64| -> Vec<String> {
        rows.iter()
            .map(|row| format!("{:.8} {:.8}", row.nu, f(row)))
            .collect()
    };
    let mtp = out_dir.join("mtP.txt");
    let mtn = out_dir.join("mtN.txt");
    let dmtp = out_dir.join("depth_mtP.txt");
    let dmtn = out_dir.join("depth_mtN.txt");
    write_table(&mtp, &two_col(&|r| r.r_plus))?;
    write_table(&mtn, &two_col(&|r| r.r_minus))?;
    write_table(&dmtp, &two_col(&|r| r.b_plus))?;
    write_table(&dmtn, &two_col(&|r| r.b_minus))?;
    // combined prediction rows: nu r_plus r_minus b(r_plus) b(r_minus)
    let pred = out_dir.join("predictions.txt");
    write_table(
        &pred,
        &rows
            .iter()
            .map(|r| {
                format!(
                    "{:.8} {:.8} {:.8} {:.8} {:.8}",
                    r.nu, r.r_plus, r.r_minus, r.b_plus, r.b_minus
                )
            })
            .collect::<Vec<_>>(),
    )?;
    Ok(Figure1Outcome {
        rows,
        files: vec![depth_path, mtp, mtn, dmtp, dmtn, pred],
    })
}

/// One row of the ε-concentration sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    pub diam_plus: f64,
    pub centroid_err_plus: f64,
    pub fraction_4eps_plus: f64,
    /// Negative-part columns are absent when τ = 1.
    pub minus: Option<(f64, f64, f64)>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub minus_absent: bool,
    pub files: Vec<PathBuf>,
}

/// Maximize at each ε of a decreasing list and tabulate concentration
/// diagnostics against the analytic predictor. The centroid error is radial:
/// every configured geometry/stream pair here is rotation invariant, so the
/// predictor fixes the radius, not the angle.
pub fn cmd_epsilon_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepOutcome> {
    cfg.check_rotation()?;
    if cfg.eps_list.len() < 3 {
        return Err(Error::Parameter(
            "epsilon sweep needs at least 3 values".into(),
        ));
    }
    if cfg.eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter(
            "epsilon sweep values must be strictly decreasing".into(),
        ));
    }
    if cfg.geometry != Geometry::Disk {
        return Err(Error::Experiment(
            "the concentration sweep predictor needs a disk lake".into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let lake = cfg.build_lake()?;
    let op = assemble(&lake)?;
    let basis = harmonic_basis(&op, &lake)?;
    let profile_fn = cfg.profile.clone();
    let nu = if cfg.psi == PsiChoice::Rotation {
        cfg.nu
    } else {
        0.0
    };
    let pred = if nu == 0.0 && (cfg.tau <= 0.0 || cfg.tau >= 1.0) {
        // degenerate tau: both parts track the depth maximum
        let p = profile_fn.clone();
        let r = rotating_radii(&move |t| p.eval(t), 0.5, 0.0, SignConvention::Plus, 10_000)?;
        (r.r_plus, r.r_minus)
    } else {
        let p = profile_fn.clone();
        let r = rotating_radii(
            &move |t| p.eval(t),
            cfg.tau,
            nu,
            SignConvention::Plus,
            10_000,
        )?;
        (r.r_plus, r.r_minus)
    };
    let psi_ext = external_stream(cfg, &lake);

    let rows: Vec<SweepRow> = cfg
        .eps_list
        .par_iter()
        .map(|&eps| {
            let mut sub = cfg.clone();
            sub.eps = eps;
            let profile = sub.vortex_profile()?;
            let opts = MaximizeOpts {
                max_iter: cfg.ascent_max_iter,
                rel_tol: cfg.rel_tol,
                init: match cfg.init {
                    InitChoice::Warm => Init::WarmStart,
                    InitChoice::Random => Init::Random(cfg.seed),
                },
                ..MaximizeOpts::default()
            };
            let state = maximize(
                &lake,
                &op,
                &basis,
                &profile,
                &psi_ext,
                cfg.lambda,
                &cfg.circulation_weights(),
                &opts,
            )?;
            let report = concentration_diagnostics(&lake, &state.zeta, eps)?;
            let plus = report.plus.ok_or_else(|| {
                Error::Experiment("positive part vanished during the sweep".into())
            })?;
            let rad = |c: (f64, f64)| (c.0 * c.0 + c.1 * c.1).sqrt();
            Ok(SweepRow {
                eps,
                diam_plus: plus.diameter,
                centroid_err_plus: (rad(plus.centroid) - pred.0).abs(),
                fraction_4eps_plus: plus.fraction_4eps,
                minus: report.minus.map(|m| {
                    (
                        m.diameter,
                        (rad(m.centroid) - pred.1).abs(),
                        m.fraction_4eps,
                    )
                }),
            })
        })
        .collect::<Result<_>>()?;

    let minus_absent = rows.iter().any(|r| r.minus.is_none());
    let sweep_path = out_dir.join("sweep.txt");
    write_table(
        &sweep_path,
        &rows
            .iter()
            .map(|r| match r.minus {
                Some((dm, cm, _)) => format!(
                    "{:.6} {:.8e} {:.8e} {:.8e} {:.8e}",
                    r.eps, r.diam_plus, dm, r.centroid_err_plus, cm
                ),
                None => format!(
                    "{:.6} {:.8e} {:.8e}",
                    r.eps, r.diam_plus, r.centroid_err_plus
                ),
            })
            .collect::<Vec<_>>(),
    )?;
    Ok(SweepOutcome {
        rows,
        minus_absent,
        files: vec![sweep_path],
    })
}

#[derive(Debug)]
pub struct InvariantsOutcome {
    pub checks: Vec<CheckLine>,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

/// Run the operator and rearrangement invariant suite on the configured
/// lake: one line per invariant with the measured value and its bound.
pub fn cmd_invariants(cfg: &ExperimentConfig, out_dir: &Path) -> Result<InvariantsOutcome> {
    fs::create_dir_all(out_dir)?;
    let lake = cfg.build_lake()?;
    let op = assemble(&lake)?;
    let basis = harmonic_basis(&op, &lake)?;
    let mut checks = Vec::new();

    checks.push(check("assembly symmetry |A - At|", op.max_asymmetry(), 1e-12));

    // K symmetry over random pairs, relative to the L²(dμ) norms
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let random_field = |nonneg: bool, rng: &mut rand_chacha::ChaCha8Rng| {
        let lo = if nonneg { 0.0 } else { -1.0 };
        ScalarField::from_fn(&lake, |_, _| rng.random_range(lo..1.0))
    };
    let mut sym_defect = 0.0f64;
    for _ in 0..5 {
        let z1 = random_field(false, &mut rng);
        let z2 = random_field(false, &mut rng);
        let k1 = solve_k_warm(&op, &lake, &z1, None, op.default_tol, op.default_max_iter)?;
        let k2 = solve_k_warm(&op, &lake, &z2, None, op.default_tol, op.default_max_iter)?;
        let s12 = lake.mu_inner(&z1, &k2)?;
        let s21 = lake.mu_inner(&z2, &k1)?;
        let n1 = lake.mu_inner(&z1, &z1)?.sqrt();
        let n2 = lake.mu_inner(&z2, &z2)?.sqrt();
        sym_defect = sym_defect.max((s12 - s21).abs() / (n1 * n2).max(1e-300));
    }
    checks.push(check("K symmetry defect (relative)", sym_defect, 1e-8));

    let mut min_k = 0.0f64;
    for _ in 0..20 {
        let z = random_field(true, &mut rng);
        let k = solve_k_warm(&op, &lake, &z, None, op.default_tol, op.default_max_iter)?;
        min_k = min_k.min(k.data.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    checks.push(check("K positivity (-min over 20 runs)", -min_k, 1e-8));

    // linearity
    {
        let z1 = random_field(false, &mut rng);
        let z2 = random_field(false, &mut rng);
        let alpha = 0.7318;
        let k1 = solve_k_warm(&op, &lake, &z1, None, op.default_tol, op.default_max_iter)?;
        let k2 = solve_k_warm(&op, &lake, &z2, None, op.default_tol, op.default_max_iter)?;
        let kc = solve_k_warm(
            &op,
            &lake,
            &z1.add_scaled(&z2, alpha),
            None,
            op.default_tol,
            op.default_max_iter,
        )?;
        let lin = k1.add_scaled(&k2, alpha);
        let mut defect = 0.0f64;
        for (idx, _) in lake.interior_cells() {
            defect = defect.max((kc.data[idx] - lin.data[idx]).abs());
        }
        checks.push(check(
            "K linearity defect (relative)",
            defect / kc.max_abs().max(1e-300),
            1e-8,
        ));
    }

    // basis bounds and partition of unity
    let mut bound_defect = 0.0f64;
    for psi in &basis.fields {
        for (idx, _) in lake.interior_cells() {
            let v = psi.data[idx];
            bound_defect = bound_defect.max(-v).max(v - 1.0);
        }
    }
    checks.push(check("basis maximum principle defect", bound_defect, 1e-8));
    let mut unity = ScalarField::zeros(&lake);
    for psi in &basis.fields {
        unity = unity.add_scaled(psi, 1.0);
    }
    let mut unity_defect = 0.0f64;
    for (idx, _) in lake.interior_cells() {
        unity_defect = unity_defect.max((unity.data[idx] - 1.0).abs());
    }
    checks.push(check("partition of unity defect", unity_defect, 1e-6));

    // circulation matrix
    let m1 = basis.components();
    let mut a_sym = 0.0f64;
    for i in 0..m1 {
        for j in 0..m1 {
            a_sym = a_sym.max((basis.matrix[(i, j)] - basis.matrix[(j, i)]).abs());
        }
    }
    checks.push(check("circulation matrix symmetry", a_sym, 1e-8));
    let eig = basis.eigenvalues();
    checks.push(check("circulation matrix -min eigenvalue", -eig[0], 1e-8));
    checks.push(check(
        "circulation matrix kernel |A·1|",
        basis.kernel_defect(),
        1e-8,
    ));

    // configured circulations and quota identities
    let weights = cfg.circulation_weights();
    checks.push(check(
        "circulation weights |sum - 1|",
        (weights.iter().sum::<f64>() - 1.0).abs(),
        1e-9,
    ));
    if weights.len() != m1 {
        checks.push(CheckLine {
            name: format!("circulation count (want {m1})"),
            measured: weights.len() as f64,
            bound: m1 as f64,
            pass: false,
        });
    }
    let profile = cfg.vortex_profile()?;
    match build_quotas(&profile, &lake) {
        Ok(quotas) => {
            let lambda = profile.log_inv_eps();
            let (sp, sm) = quotas.strength_from_levels();
            let rel_p = (sp - cfg.tau / lambda).abs() / (cfg.tau / lambda).max(1e-300);
            checks.push(check("strength identity (positive)", rel_p, 1e-9));
            if cfg.tau < 1.0 {
                let rel_m =
                    (sm - (1.0 - cfg.tau) / lambda).abs() / ((1.0 - cfg.tau) / lambda).max(1e-300);
                checks.push(check("strength identity (negative)", rel_m, 1e-9));
            }
            // layer-cake re-measurement after placing the pair
            let quota_mass = quotas.mass_plus().max(quotas.mass_minus());
            if quota_mass > 0.0 {
                let z = place_pair(
                    &lake,
                    &quotas,
                    (0.4, 0.0),
                    (-0.4, 0.0),
                )?;
                let max_cell = lake
                    .interior_cells()
                    .map(|(idx, _)| lake.cell_mu(idx))
                    .fold(0.0, f64::max);
                let mut worst_cells = 0.0f64;
                let mut cum = 0.0;
                for level in &quotas.plus {
                    cum += level.quota;
                    let measured: f64 = lake
                        .interior_cells()
                        .filter(|&(idx, _)| z.data[idx] >= level.value * (1.0 - 1e-12))
                        .map(|(idx, _)| lake.cell_mu(idx))
                        .sum();
                    worst_cells = worst_cells.max((measured - cum).abs() / max_cell);
                }
                checks.push(check(
                    "layer-cake re-measurement (cell units)",
                    worst_cells,
                    1.0,
                ));
            }
            // consistency guard: the ascent circulations must match the net
            // vortex strength
            match ascent_circulations(&profile, &weights) {
                Ok(circ) => {
                    let z = place_pair(&lake, &quotas, (0.4, 0.0), (-0.4, 0.0))?;
                    let defect = (circ.sum() - lake.mu_integral(&z)?).abs();
                    checks.push(check("circulation consistency defect", defect, 1e-9));
                    let _ = CirculationSpec::new(circ.values);
                }
                Err(_) => checks.push(CheckLine {
                    name: "circulation consistency defect".into(),
                    measured: f64::INFINITY,
                    bound: 1e-9,
                    pass: false,
                }),
            }
        }
        Err(e) => checks.push(CheckLine {
            name: format!("quota construction ({e})"),
            measured: f64::INFINITY,
            bound: 0.0,
            pass: false,
        }),
    }

    let pass = checks.iter().all(|c| c.pass);
    let path = out_dir.join("invariants.txt");
    write_table(
        &path,
        &checks.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    )?;
    Ok(InvariantsOutcome {
        checks,
        pass,
        files: vec![path],
    })
}

#[derive(Debug)]
pub struct GreenOutcome {
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub max_rel_err: f64,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

/// Verify the Green's-function expansion on the configured disk lake with a
/// compact bump vortex; emits `y_x y_y sup_R rel_err` per probe.
pub fn cmd_green_check(cfg: &ExperimentConfig, out_dir: &Path) -> Result<GreenOutcome> {
    if cfg.geometry != Geometry::Disk {
        return Err(Error::Experiment(
            "the expansion check needs the disk geometry (no closed-form Green's function \
             otherwise)"
                .into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let lake = cfg.build_lake()?;
    let op = assemble(&lake)?;
    let basis = harmonic_basis(&op, &lake)?;
    let zeta = gaussian_bump(
        &lake,
        (0.5, 0.0),
        cfg.bump_radius / 2.0,
        cfg.bump_radius,
    );
    let total = lake.mu_integral(&zeta)?;
    let circ = CirculationSpec::new(vec![total]);
    let probes: Vec<(f64, f64)> = (0..cfg.green_probes.max(1))
        .map(|k| {
            let r = 0.8 * (k as f64 + 0.5) / cfg.green_probes.max(1) as f64;
            (r, 0.0)
        })
        .collect();
    let report = verify_expansion(&op, &lake, &basis, &zeta, &circ, &probes)?;
    let rows: Vec<(f64, f64, f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.y.0, r.y.1, r.sup_r, r.rel_err))
        .collect();
    let path = out_dir.join("green.txt");
    write_table(
        &path,
        &rows
            .iter()
            .map(|(x, y, s, e)| format!("{x:.8} {y:.8} {s:.8e} {e:.8e}"))
            .collect::<Vec<_>>(),
    )?;
    let summary = out_dir.join("green_summary.txt");
    write_table(
        &summary,
        &[format!(
            "max_rel_err = {:.8e}\nbound = {:.8e}",
            report.max_rel_err, cfg.green_max_rel_err
        )],
    )?;
    Ok(GreenOutcome {
        rows,
        max_rel_err: report.max_rel_err,
        pass: report.max_rel_err <= cfg.green_max_rel_err,
        files: vec![path, summary],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn figure1_rows_monotone_and_start_at_depth_maximum() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_figure1(
            &cfg("geometry = disk\nprofile = parabolic\ntau = 0.7\nnu_points = 8\n"),
            dir.path(),
        )
        .unwrap();
        let r = 0.5f64.sqrt();
        assert!((out.rows[0].r_plus - r).abs() < 1e-3);
        assert!((out.rows[0].r_minus - r).abs() < 1e-3);
        for w in out.rows.windows(2) {
            assert!(w[1].r_plus >= w[0].r_plus - 1e-9);
            assert!(w[1].r_minus <= w[0].r_minus + 1e-9);
            assert!(w[1].b_plus <= w[0].b_plus + 1e-9);
        }
        for f in &out.files {
            assert!(f.exists());
        }
        // depth.txt reproduces b(r) = P(r²): P(0) = 1, max over r is 2
        let depth = std::fs::read_to_string(dir.path().join("depth.txt")).unwrap();
        let first = depth.lines().next().unwrap();
        assert_eq!(first, "0.00000000 1.00000000");
        let best = depth
            .lines()
            .map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap())
            .fold(0.0f64, f64::max);
        assert!((best - 2.0).abs() < 1e-3);
    }

    #[test]
    fn figure1_needs_disk() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_figure1(&cfg("geometry = slit_square\nn = 32\n"), dir.path()).unwrap_err();
        assert!(matches!(err, Error::Experiment(_)));
    }

    /// Cross-check against the asymptotic predictor: the converged positive
    /// centroid sits within 2h of the depth-maximum radius √0.5.
    #[test]
    fn maximize_centroid_tracks_predictor() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_maximize(
            &cfg(
                "geometry = disk\nprofile = parabolic\ntau = 0.7\neps = 0.1\nn = 128\n\
                 ascent_max_iter = 500\nrel_tol = 1e-9\n",
            ),
            dir.path(),
        )
        .unwrap();
        let h = 2.0 / 128.0;
        let plus = out.report.plus.unwrap();
        let r = (plus.centroid.0.powi(2) + plus.centroid.1.powi(2)).sqrt();
        assert!(
            (r - 0.5f64.sqrt()).abs() <= 2.0 * h,
            "centroid radius {r} vs {}",
            0.5f64.sqrt()
        );
        assert!(out.state.converged);
    }

    #[test]
    fn maximize_guard_fires_before_solving() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_maximize(
            &cfg("psi = rotation\nnu = 0.5\ntau = 0.7\nn = 16\n"),
            dir.path(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Admissibility { .. }));
    }

    #[test]
    fn sweep_requires_three_decreasing_values() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_epsilon_sweep(&cfg("eps_list = 0.2, 0.1\n"), dir.path()).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        let err = cmd_epsilon_sweep(&cfg("eps_list = 0.05, 0.1, 0.2\n"), dir.path()).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn green_check_rejects_slit_square() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_green_check(&cfg("geometry = slit_square\nn = 32\n"), dir.path())
            .unwrap_err();
        assert!(matches!(err, Error::Experiment(_)));
    }

    #[test]
    fn invariants_pass_on_default_disk() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_invariants(&cfg("n = 32\neps = 0.2\n"), dir.path()).unwrap();
        for line in &out.checks {
            assert!(line.pass, "failed: {line}");
        }
        assert!(out.pass);
    }

    #[test]
    fn invariants_fail_on_inconsistent_circulations() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_invariants(
            &cfg("n = 32\neps = 0.2\ncirculations = 0.7, 0.7\ngeometry = annulus\n"),
            dir.path(),
        )
        .unwrap();
        assert!(!out.pass);
    }

    #[test]
    fn outputs_are_bit_identical_across_runs() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let c = cfg("geometry = disk\nprofile = parabolic\ntau = 0.7\nnu_points = 5\n");
        let a = cmd_figure1(&c, dir1.path()).unwrap();
        let b = cmd_figure1(&c, dir2.path()).unwrap();
        for (fa, fb) in a.files.iter().zip(&b.files) {
            assert_eq!(
                std::fs::read(fa).unwrap(),
                std::fs::read(fb).unwrap(),
                "{fa:?} differs"
            );
        }
    }
}
