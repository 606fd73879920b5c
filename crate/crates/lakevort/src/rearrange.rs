//! Rearrangement classes and the bathtub ascent to energy maximizers.
//!
//! The admissible vortices have every superlevel set's μ-measure pinned by a
//! distribution law: `dμ({ζ⁺ ≥ λ}) = (ε²/δ) D(ε²λ log(1/ε)/(δτ))` and the
//! mirrored law for the negative part, which forces the strengths
//! `∫ζ⁺dμ = τ/log(1/ε)` and `∫ζ⁻dμ = (1-τ)/log(1/ε)`. The law is
//! discretized into level quotas (value, μ-mass) per sign; rearrangements
//! place those quotas on cells, with at most one fractional cell per level
//! boundary so the masses stay exact in μ.
//!
//! The energy
//! `E(ζ) = ½∫ζ K(ζ) dμ + ½ αᵀ𝒜α + λ_ε∫Ψ ζ dμ` (α the circulation
//! coefficients of `H(ζ)`) is convex, and `K(ζ)+H(ζ)+λ_εΨ` is a subgradient,
//! so the best-response rearrangement against the current total stream never
//! decreases the energy; iterating it is the bathtub ascent.

use crate::asymptotics::concentration_cell;
use crate::elliptic::{
    solve_h_coeffs, solve_k_warm, CirculationSpec, HarmonicBasis, WeightedOperator,
};
use crate::error::{Error, Result};
use crate::geometry::{Lake, Point, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distribution-function family for the rearrangement constraint. `D` is
/// non-increasing on `[0, tmax]` with `∫D = 1` and `sup D = delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionFamily {
    /// `D(t) = delta` on `[0, 1/delta]`: a two-valued vortex profile.
    Uniform,
    /// `D(t) = delta (1 - t/tmax)` with `tmax = 2/delta`.
    Linear,
}

/// The data of constraint-class membership: distribution family, balance
/// `τ`, core scale `ε`, integrability exponent `p`, and the number of
/// discrete levels per sign.
#[derive(Debug, Clone)]
pub struct VortexProfile {
    pub family: DistributionFamily,
    pub delta: f64,
    pub tau: f64,
    pub eps: f64,
    pub p: f64,
    pub levels: usize,
}

impl VortexProfile {
    pub fn new(
        family: DistributionFamily,
        delta: f64,
        tau: f64,
        eps: f64,
        p: f64,
        levels: usize,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("sup D must be positive, got {delta}")));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Parameter(format!("tau must lie in [0,1], got {tau}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0,1), got {eps}")));
        }
        if !(p > 1.0) {
            return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
        }
        if levels == 0 {
            return Err(Error::Parameter("at least one level is required".into()));
        }
        let profile = VortexProfile {
            family,
            delta,
            tau,
            eps,
            p,
            levels,
        };
        // Normalization ∫D = 1 and the p-th moment, checked by quadrature.
        let m = 20_000;
        let step = profile.tmax() / m as f64;
        let mut total = 0.0;
        let mut moment = 0.0;
        for k in 0..m {
            let t = (k as f64 + 0.5) * step;
            total += profile.density(t) * step;
            moment += t.powf(p) * profile.density(t) * step;
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Parameter(format!(
                "distribution is not normalized: integral = {total}"
            )));
        }
        if !moment.is_finite() {
            return Err(Error::Parameter("p-th moment of D is not finite".into()));
        }
        Ok(profile)
    }

    /// End of the support of `D`.
    pub fn tmax(&self) -> f64 {
        match self.family {
            DistributionFamily::Uniform => 1.0 / self.delta,
            DistributionFamily::Linear => 2.0 / self.delta,
        }
    }

    /// `D(t)` (inclusive at the support end).
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.tmax() {
            return 0.0;
        }
        match self.family {
            DistributionFamily::Uniform => self.delta,
            DistributionFamily::Linear => self.delta * (1.0 - t / self.tmax()),
        }
    }

    pub fn log_inv_eps(&self) -> f64 {
        (1.0 / self.eps).ln()
    }
}

/// One discrete level: field value and μ-mass quota.
#[derive(Debug, Clone, Copy)]
pub struct Level {
    pub value: f64,
    pub quota: f64,
}

/// Discretized constraint: levels per sign in descending value order, with
/// the exact strengths they realize.
#[derive(Debug, Clone)]
pub struct LevelQuotas {
    pub plus: Vec<Level>,
    pub minus: Vec<Level>,
    /// `τ/log(1/ε)`.
    pub strength_plus: f64,
    /// `(1-τ)/log(1/ε)`.
    pub strength_minus: f64,
}

impl LevelQuotas {
    pub fn mass_plus(&self) -> f64 {
        self.plus.iter().map(|l| l.quota).sum()
    }

    pub fn mass_minus(&self) -> f64 {
        self.minus.iter().map(|l| l.quota).sum()
    }

    /// Cavalieri check: `Σ q_k λ_k` per sign.
    pub fn strength_from_levels(&self) -> (f64, f64) {
        (
            self.plus.iter().map(|l| l.value * l.quota).sum(),
            self.minus.iter().map(|l| l.value * l.quota).sum(),
        )
    }
}

/// Discretize the layer cake of the distribution constraint into level
/// quotas, then rescale the level values so the strengths are exact.
pub fn build_quotas(profile: &VortexProfile, lake: &Lake) -> Result<LevelQuotas> {
    let eps2 = profile.eps * profile.eps;
    let mu_total = lake.mu_total();
    if !(eps2 < mu_total / 4.0) {
        return Err(Error::Parameter(format!(
            "eps² = {eps2} must stay below a quarter of the lake measure {mu_total}"
        )));
    }
    let min_cell = lake
        .interior_cells()
        .map(|(idx, _)| lake.cell_mu(idx))
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    if eps2 < min_cell {
        return Err(Error::Resolution(format!(
            "eps² = {eps2} is below the smallest cell measure {min_cell}; refine the grid"
        )));
    }
    let lambda = profile.log_inv_eps();
    let side = |weight: f64| -> Vec<Level> {
        if weight <= 0.0 {
            return Vec::new();
        }
        // superlevel measure under the constraint law
        let measure = |lam: f64| -> f64 {
            (eps2 / profile.delta)
                * profile.density(eps2 * lam * lambda / (profile.delta * weight))
        };
        let lam_max = profile.delta * weight * profile.tmax() / (eps2 * lambda);
        let levels = profile.levels;
        let lam_k = |k: usize| (k as f64 - 0.5) * lam_max / levels as f64;
        let mut out = Vec::with_capacity(levels);
        for k in (1..=levels).rev() {
            let m_k = measure(lam_k(k));
            let m_next = if k == levels { 0.0 } else { measure(lam_k(k + 1)) };
            let quota = m_k - m_next;
            if quota > 0.0 {
                out.push(Level {
                    value: lam_k(k),
                    quota,
                });
            }
        }
        // exact strength normalization, preserving quotas
        let raw: f64 = out.iter().map(|l| l.value * l.quota).sum();
        let target = weight / lambda;
        let scale = target / raw;
        for l in &mut out {
            l.value *= scale;
        }
        out
    };
    Ok(LevelQuotas {
        plus: side(profile.tau),
        minus: side(1.0 - profile.tau),
        strength_plus: profile.tau / lambda,
        strength_minus: (1.0 - profile.tau) / lambda,
    })
}

/// Pour levels (descending values) into cells in the given order. Each cell
/// absorbs μ-mass up to its capacity; a cell straddling a level boundary
/// takes the mass-weighted value, so the poured ∫ζdμ is exact. Pouring onto
/// an already-occupied cell is a collision (positive and negative parts must
/// stay disjoint).
fn pour(
    lake: &Lake,
    levels: &[Level],
    order: &[usize],
    out: &mut ScalarField,
    sign: f64,
) -> Result<()> {
    if levels.is_empty() {
        return Ok(());
    }
    let mut li = 0usize;
    let mut rem = levels[0].quota;
    for &cell in order {
        if li >= levels.len() {
            return Ok(());
        }
        let mu = lake.cell_mu(cell);
        if mu <= 0.0 {
            continue;
        }
        if out.data[cell] != 0.0 {
            return Err(Error::Resolution(
                "positive and negative parts collide on a cell".into(),
            ));
        }
        let mut cap = mu;
        let mut value_mass = 0.0;
        while cap > 0.0 && li < levels.len() {
            let take = cap.min(rem);
            value_mass += levels[li].value * take;
            cap -= take;
            rem -= take;
            if rem <= 0.0 {
                li += 1;
                if li < levels.len() {
                    rem = levels[li].quota;
                }
            }
        }
        out.data[cell] = sign * value_mass / mu;
    }
    if li < levels.len() && rem > 1e-12 * levels[li].quota.max(1e-300) {
        return Err(Error::Resolution(
            "domain exhausted before all quotas were placed".into(),
        ));
    }
    Ok(())
}

/// μ-rearrangement of a nonnegative field whose superlevel sets are grid
/// balls `Ω ∩ B(x, r)`: cells sorted by distance to `x` are filled in
/// descending value order until each μ-quota is met.
pub fn symmetrize_at(lake: &Lake, field: &ScalarField, x: Point) -> Result<ScalarField> {
    field.aligned(lake)?;
    let mut mass_total = 0.0;
    let mut levels: Vec<Level> = Vec::new();
    let mut cells: Vec<(f64, usize)> = Vec::new();
    for (idx, _) in lake.interior_cells() {
        let v = field.data[idx];
        if v < 0.0 {
            return Err(Error::Parameter(
                "symmetrization requires a nonnegative field".into(),
            ));
        }
        if v > 0.0 {
            cells.push((v, idx));
            mass_total += lake.cell_mu(idx);
        }
    }
    if mass_total > lake.mu_total() {
        return Err(Error::Parameter(
            "field mass exceeds the lake measure".into(),
        ));
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (v, idx) in cells {
        levels.push(Level {
            value: v,
            quota: lake.cell_mu(idx),
        });
    }
    let order = cells_by_distance(lake, x);
    let mut out = ScalarField::zeros(lake);
    pour(lake, &levels, &order, &mut out, 1.0)?;
    Ok(out)
}

/// Interior cells sorted by distance to a point (ties by cell index).
fn cells_by_distance(lake: &Lake, x: Point) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = lake
        .interior_cells()
        .map(|(idx, c)| ((c.0 - x.0).powi(2) + (c.1 - x.1).powi(2), idx))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, idx)| idx).collect()
}

/// Best-response rearrangement against a stream `ψ`: positive levels fill
/// cells in descending `ψ`, negative levels in ascending `ψ`, one fractional
/// cell per quota boundary, ties broken by cell index.
pub fn bathtub_step(lake: &Lake, quotas: &LevelQuotas, psi: &ScalarField) -> Result<ScalarField> {
    psi.aligned(lake)?;
    let total = quotas.mass_plus() + quotas.mass_minus();
    if total > lake.mu_total() {
        return Err(Error::Resolution(
            "level quotas exceed the lake measure".into(),
        ));
    }
    let mut ranked: Vec<(f64, usize)> = lake
        .interior_cells()
        .map(|(idx, _)| (psi.data[idx], idx))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let desc: Vec<usize> = ranked.iter().map(|&(_, idx)| idx).collect();
    let mut asc_ranked: Vec<(f64, usize)> = ranked;
    asc_ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let asc: Vec<usize> = asc_ranked.into_iter().map(|(_, idx)| idx).collect();
    let mut out = ScalarField::zeros(lake);
    pour(lake, &quotas.plus, &desc, &mut out, 1.0)?;
    pour(lake, &quotas.minus, &asc, &mut out, -1.0)?;
    Ok(out)
}

/// Place the pair as symmetrized stacks around two centers.
pub fn place_pair(
    lake: &Lake,
    quotas: &LevelQuotas,
    x_plus: Point,
    x_minus: Point,
) -> Result<ScalarField> {
    let mut out = ScalarField::zeros(lake);
    pour(
        lake,
        &quotas.plus,
        &cells_by_distance(lake, x_plus),
        &mut out,
        1.0,
    )?;
    pour(
        lake,
        &quotas.minus,
        &cells_by_distance(lake, x_minus),
        &mut out,
        -1.0,
    )?;
    Ok(out)
}

/// `E(ζ) = ½∫ζKζ dμ + ½αᵀ𝒜α + λ_ε∫Ψζ dμ`. The circulation part is the
/// nonnegative quadratic form of the coefficient vector, which is what makes
/// the energy convex (the circulation matrix has nonnegative eigenvalues).
pub fn energy(
    lake: &Lake,
    op: &WeightedOperator,
    basis: &HarmonicBasis,
    zeta: &ScalarField,
    psi_ext: &ScalarField,
    lambda_eps: f64,
    circ: &CirculationSpec,
) -> Result<f64> {
    let k = solve_k_warm(op, lake, zeta, None, op.default_tol, op.default_max_iter)?;
    let (e, _) = energy_with_stream(lake, basis, zeta, &k, psi_ext, lambda_eps, circ)?;
    Ok(e)
}

/// Energy and total stream `ψ = Kζ + Hζ + λ_εΨ` given the already-solved
/// `Kζ`.
fn energy_with_stream(
    lake: &Lake,
    basis: &HarmonicBasis,
    zeta: &ScalarField,
    k_zeta: &ScalarField,
    psi_ext: &ScalarField,
    lambda_eps: f64,
    circ: &CirculationSpec,
) -> Result<(f64, ScalarField)> {
    let alpha = solve_h_coeffs(lake, basis, zeta, circ)?;
    let m1 = alpha.len();
    let mut e_h = 0.0;
    for i in 0..m1 {
        for j in 0..m1 {
            e_h += alpha[i] * basis.matrix[(i, j)] * alpha[j];
        }
    }
    let e_k = 0.5 * lake.mu_inner(zeta, k_zeta)?;
    let e_ext = lambda_eps * lake.mu_inner(psi_ext, zeta)?;
    let mut psi_total = k_zeta.add_scaled(psi_ext, lambda_eps);
    for (a, f) in alpha.iter().zip(&basis.fields) {
        if *a != 0.0 {
            psi_total = psi_total.add_scaled(f, *a);
        }
    }
    Ok((e_k + 0.5 * e_h + e_ext, psi_total))
}

/// Initialization of the ascent.
#[derive(Debug, Clone)]
pub enum Init {
    /// Symmetrized stacks at the predicted concentration points.
    WarmStart,
    /// Symmetrized stacks at random admissible centers.
    Random(u64),
    /// Start from a given admissible field.
    Field(ScalarField),
}

#[derive(Debug, Clone)]
pub struct MaximizeOpts {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub init: Init,
    /// Inner CG tolerance; tighter than the module default so the energy
    /// trace stays monotone at the 1e-12 scale.
    pub solver_tol: f64,
}

impl Default for MaximizeOpts {
    fn default() -> Self {
        MaximizeOpts {
            max_iter: 200,
            rel_tol: 1e-10,
            init: Init::WarmStart,
            solver_tol: 1e-12,
        }
    }
}

/// State of the bathtub ascent: current vortex, total stream, energy history.
#[derive(Debug, Clone)]
pub struct AscentState {
    pub zeta: ScalarField,
    pub psi_total: ScalarField,
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed circulations for the ascent: `c_i = c̄_i (2τ-1)/log(1/ε)` with the
/// reference weights summing to 1.
pub fn ascent_circulations(profile: &VortexProfile, circ_bar: &[f64]) -> Result<CirculationSpec> {
    let sum: f64 = circ_bar.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "reference circulations must sum to 1, got {sum}"
        )));
    }
    let net = (2.0 * profile.tau - 1.0) / profile.log_inv_eps();
    Ok(CirculationSpec::new(
        circ_bar.iter().map(|c| c * net).collect(),
    ))
}

/// Iterate `ζ ← bathtub(Kζ + Hζ + λ_εΨ)` until the energy gain drops below
/// the relative tolerance. The trace is non-decreasing; if the map cycles on
/// ties the stop criterion fires on the zero gain and the current (equal or
/// higher energy) iterate is reported.
pub fn maximize(
    lake: &Lake,
    op: &WeightedOperator,
    basis: &HarmonicBasis,
    profile: &VortexProfile,
    psi_ext: &ScalarField,
    lambda_eps: f64,
    circ_bar: &[f64],
    opts: &MaximizeOpts,
) -> Result<AscentState> {
    psi_ext.aligned(lake)?;
    let quotas = build_quotas(profile, lake)?;
    let circ = ascent_circulations(profile, circ_bar)?;
    let mut zeta = match &opts.init {
        Init::Field(z) => {
            z.aligned(lake)?;
            z.clone()
        }
        Init::WarmStart => {
            let (xp, xm) = warm_centers(lake, profile, psi_ext, lambda_eps, &quotas)?;
            place_pair(lake, &quotas, xp, xm)?
        }
        Init::Random(seed) => {
            let (xp, xm) = random_centers(lake, &quotas, *seed)?;
            place_pair(lake, &quotas, xp, xm)?
        }
    };
    let mut trace = Vec::new();
    let mut prev_stream: Option<ScalarField> = None;
    let mut state: Option<AscentState> = None;
    for iter in 0..opts.max_iter {
        let k = solve_k_warm(
            op,
            lake,
            &zeta,
            prev_stream.as_ref(),
            opts.solver_tol,
            op.default_max_iter,
        )?;
        let (e, psi_total) =
            energy_with_stream(lake, basis, &zeta, &k, psi_ext, lambda_eps, &circ)?;
        prev_stream = Some(k);
        let done = match trace.last() {
            Some(&prev) => e - prev <= opts.rel_tol * e.abs().max(1e-300),
            None => false,
        };
        trace.push(e);
        if done {
            state = Some(AscentState {
                zeta,
                psi_total,
                energy_trace: trace,
                iterations: iter,
                converged: true,
            });
            break;
        }
        let next = bathtub_step(lake, &quotas, &psi_total)?;
        if iter + 1 == opts.max_iter {
            state = Some(AscentState {
                zeta,
                psi_total,
                energy_trace: trace,
                iterations: iter + 1,
                converged: false,
            });
            break;
        }
        zeta = next;
    }
    Ok(state.expect("ascent loop always produces a state"))
}

/// Predicted centers for the warm start, kept apart when the predictors
/// coincide (the negative center then maximizes its functional outside a
/// separation ball around the positive one).
fn warm_centers(
    lake: &Lake,
    profile: &VortexProfile,
    psi_ext: &ScalarField,
    lambda_eps: f64,
    quotas: &LevelQuotas,
) -> Result<(Point, Point)> {
    let scaled = psi_ext.add_scaled(psi_ext, lambda_eps - 1.0); // λ_ε Ψ
    if quotas.plus.is_empty() {
        let (_, pm) =
            concentration_cell(lake, profile.tau, &scaled, crate::asymptotics::Part::Negative)?;
        return Ok((pm, pm));
    }
    let (pi, pp) =
        concentration_cell(lake, profile.tau, &scaled, crate::asymptotics::Part::Positive)?;
    if quotas.minus.is_empty() {
        return Ok((pp, pp));
    }
    let b_ref = lake.depth[pi].max(1e-6);
    let r_plus = (quotas.mass_plus() / (std::f64::consts::PI * b_ref)).sqrt();
    let r_minus = (quotas.mass_minus() / (std::f64::consts::PI * b_ref)).sqrt();
    let d_min = 2.5 * (r_plus + r_minus) + 4.0 * lake.grid.h;
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut best: Option<(f64, usize, Point)> = None;
    let mut fallback: Option<(f64, usize, Point)> = None;
    for (idx, c) in lake.interior_cells() {
        let val = (1.0 - profile.tau) * lake.depth[idx] / four_pi - scaled.data[idx];
        let dist = ((c.0 - pp.0).powi(2) + (c.1 - pp.1).powi(2)).sqrt();
        if dist >= d_min {
            if best.as_ref().map_or(true, |(v, _, _)| val > *v) {
                best = Some((val, idx, c));
            }
        } else if idx != pi && fallback.as_ref().map_or(true, |(v, _, _)| val > *v) {
            fallback = Some((val, idx, c));
        }
    }
    let pm = best
        .or(fallback)
        .map(|(_, _, c)| c)
        .ok_or_else(|| Error::Resolution("no admissible center for the negative part".into()))?;
    Ok((pp, pm))
}

/// Random admissible centers: interior cells away from the frontier, with
/// the cores kept apart.
fn random_centers(lake: &Lake, quotas: &LevelQuotas, seed: u64) -> Result<(Point, Point)> {
    let dist = lake.boundary_distance_cells();
    let candidates: Vec<(usize, Point)> = lake
        .interior_cells()
        .filter(|&(idx, _)| dist[idx] >= 3 && lake.cell_mu(idx) > 0.0)
        .collect();
    if candidates.is_empty() {
        return Err(Error::Resolution("no interior cells for initialization".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_mean = lake.mu_total() / (lake.interior_count() as f64 * lake.grid.h * lake.grid.h);
    let r_est = ((quotas.mass_plus() + quotas.mass_minus())
        / (std::f64::consts::PI * b_mean.max(1e-6)))
    .sqrt();
    let d_min = 2.5 * r_est + 4.0 * lake.grid.h;
    let pick = |rng: &mut ChaCha8Rng| candidates[rng.random_range(0..candidates.len())].1;
    let xp = pick(&mut rng);
    for _ in 0..200 {
        let xm = pick(&mut rng);
        let d = ((xm.0 - xp.0).powi(2) + (xm.1 - xp.1).powi(2)).sqrt();
        if quotas.minus.is_empty() || d >= d_min {
            return Ok((xp, xm));
        }
    }
    // crowded lake: accept any distinct pair
    for _ in 0..200 {
        let xm = pick(&mut rng);
        if xm != xp {
            return Ok((xp, xm));
        }
    }
    Err(Error::Resolution(
        "could not draw distinct initialization centers".into(),
    ))
}

/// Weak steadiness residual of a state: the transport term
/// `∫ζ⟨b⁻¹∇⊥ψ, ∇φ⟩ dμ = ∫ζ⟨∇⊥ψ, ∇φ⟩ dm` tested against Gaussian bumps at
/// random interior centers, normalized by the same integral with all
/// factors in absolute value. A steady state scores near 0, a generic
/// admissible field order one.
pub fn steadiness_residual(
    lake: &Lake,
    zeta: &ScalarField,
    psi_total: &ScalarField,
    n_tests: usize,
    seed: u64,
) -> Result<f64> {
    zeta.aligned(lake)?;
    psi_total.aligned(lake)?;
    let (nx, ny, h) = (lake.grid.nx, lake.grid.ny, lake.grid.h);
    let grad = |f: &ScalarField, idx: usize| -> (f64, f64) {
        let (i, j) = (idx % nx, idx / nx);
        let right = if i + 1 < nx { f.data[idx + 1] } else { 0.0 };
        let left = if i > 0 { f.data[idx - 1] } else { 0.0 };
        let up = if j + 1 < ny { f.data[idx + nx] } else { 0.0 };
        let down = if j > 0 { f.data[idx - nx] } else { 0.0 };
        ((right - left) / (2.0 * h), (up - down) / (2.0 * h))
    };
    let dist = lake.boundary_distance_cells();
    let centers: Vec<Point> = lake
        .interior_cells()
        .filter(|&(idx, _)| dist[idx] >= 3)
        .map(|(_, c)| c)
        .collect();
    if centers.is_empty() {
        return Err(Error::Resolution("no interior test centers".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_tests {
        let c = centers[rng.random_range(0..centers.len())];
        let sigma = rng.random_range(0.15..0.35);
        let phi = ScalarField::from_fn(lake, |x, y| {
            (-((x - c.0).powi(2) + (y - c.1).powi(2)) / (2.0 * sigma * sigma)).exp()
        });
        let mut signed = 0.0;
        let mut absolute = 0.0;
        for (idx, _) in lake.interior_cells() {
            let z = zeta.data[idx];
            if z == 0.0 {
                continue;
            }
            let (px, py) = grad(psi_total, idx);
            let (fx, fy) = grad(&phi, idx);
            // ∇⊥ψ = (−ψ_y, ψ_x) against ∇φ
            let term = z * (-py * fx + px * fy) * h * h;
            signed += term;
            absolute += (z * (px.hypot(py)) * fx.hypot(fy)).abs() * h * h;
        }
        if absolute > 0.0 {
            worst = worst.max(signed.abs() / absolute);
        }
    }
    Ok(worst)
}
