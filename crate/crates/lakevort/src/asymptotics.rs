//! Closed-form predictors for the vortex-pair limit and diagnostics for
//! computed maximizers.
//!
//! In the vanishing-vortex limit the positive part concentrates where
//! `τ b/4π + Ψ` is maximal and the negative part where `(1-τ) b/4π - Ψ` is
//! maximal. On a rotating radial lake `Ψ(x) = (ν/2)∫₀^{|x|²} b(s) ds`, which
//! turns the predictors into 1-D scans over the radius. Richardson's law
//! gives the leading drift of a concentrated vortex along `∇⊥b`.

use crate::error::{Error, Result};
use crate::geometry::{Lake, Point, ScalarField};

/// Which part of the signed vortex an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Positive,
    Negative,
}

/// Sign convention for the rotation term in the radii scan. `Plus` matches
/// the behavior of the worked rotating example (increasing ν pushes the
/// positive part outward); `Minus` is the alternate form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Plus,
    Minus,
}

/// Predicted radii of the rotating pair with the objective values attained.
#[derive(Debug, Clone)]
pub struct PairPrediction {
    pub r_plus: f64,
    pub r_minus: f64,
    pub value_plus: f64,
    pub value_minus: f64,
    pub convention: SignConvention,
}

/// Admissible rotation bound `ν₀ = min{τ, 1-τ}/(4π)`.
pub fn nu_bound(tau: f64) -> f64 {
    tau.min(1.0 - tau) / (4.0 * std::f64::consts::PI)
}

/// Grid argmax of the concentration functional: `τ b/4π + Ψ` for the
/// positive part, `(1-τ) b/4π - Ψ` for the negative. Ties break to the
/// smallest cell index.
pub fn concentration_point(lake: &Lake, tau: f64, psi: &ScalarField, part: Part) -> Result<Point> {
    Ok(concentration_cell(lake, tau, psi, part)?.1)
}

pub(crate) fn concentration_cell(
    lake: &Lake,
    tau: f64,
    psi: &ScalarField,
    part: Part,
) -> Result<(usize, Point)> {
    psi.aligned(lake)?;
    match part {
        Part::Positive if tau <= 0.0 => {
            return Err(Error::UndefinedPart(
                "positive part is empty when tau = 0".into(),
            ))
        }
        Part::Negative if tau >= 1.0 => {
            return Err(Error::UndefinedPart(
                "negative part is empty when tau = 1".into(),
            ))
        }
        _ => {}
    }
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut best: Option<(usize, f64)> = None;
    for (idx, _) in lake.interior_cells() {
        let value = match part {
            Part::Positive => tau * lake.depth[idx] / four_pi + psi.data[idx],
            Part::Negative => (1.0 - tau) * lake.depth[idx] / four_pi - psi.data[idx],
        };
        let better = match best {
            None => true,
            Some((_, v)) => value > v,
        };
        if better {
            best = Some((idx, value));
        }
    }
    let (idx, _) = best.ok_or(Error::EmptyDomain)?;
    let (i, j) = (idx % lake.grid.nx, idx / lake.grid.nx);
    Ok((idx, lake.grid.center(i, j)))
}

/// Cumulative integral of a radial profile by composite midpoint panels,
/// evaluated by linear interpolation.
pub struct CumulativeProfile {
    step: f64,
    values: Vec<f64>,
}

impl CumulativeProfile {
    pub fn new(profile: &dyn Fn(f64) -> f64, panels: usize) -> Self {
        let step = 1.0 / panels as f64;
        let mut values = Vec::with_capacity(panels + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for k in 0..panels {
            acc += profile((k as f64 + 0.5) * step) * step;
            values.push(acc);
        }
        CumulativeProfile { step, values }
    }

    /// `∫₀ᵘ profile(s) ds` for `u ∈ [0, 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let pos = u / self.step;
        let k = (pos as usize).min(self.values.len() - 2);
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }
}

/// External stream of a rigid rotation at angular speed ν on a radial lake:
/// `Ψ(x) = (ν/2)∫₀^{|x|²} b(s) ds`.
pub fn rotation_stream(lake: &Lake, profile: &dyn Fn(f64) -> f64, nu: f64) -> ScalarField {
    let cum = CumulativeProfile::new(profile, 10_000);
    ScalarField::from_fn(lake, |x, y| 0.5 * nu * cum.eval(x * x + y * y))
}

/// Predict the radii of the rotating pair by a 1-D scan of
/// `F⁺(r) = τ b(r²)/4π + s(ν/2)∫₀^{r²}b` and
/// `F⁻(r) = (1-τ) b(r²)/4π - s(ν/2)∫₀^{r²}b`
/// over `r ∈ [0, 1]`, with golden-section refinement in the winning bracket.
pub fn rotating_radii(
    depth_profile: &dyn Fn(f64) -> f64,
    tau: f64,
    nu: f64,
    convention: SignConvention,
    grid_m: usize,
) -> Result<PairPrediction> {
    if grid_m < 1_000 {
        return Err(Error::Parameter(format!(
            "radius scan needs at least 1000 samples, got {grid_m}"
        )));
    }
    let bound = nu_bound(tau);
    if !(nu.abs() < bound) {
        return Err(Error::Admissibility { nu, bound });
    }
    let s = match convention {
        SignConvention::Plus => 1.0,
        SignConvention::Minus => -1.0,
    };
    let four_pi = 4.0 * std::f64::consts::PI;
    let cum = CumulativeProfile::new(depth_profile, 10_000);
    let f_plus = |r: f64| tau * depth_profile(r * r) / four_pi + s * 0.5 * nu * cum.eval(r * r);
    let f_minus =
        |r: f64| (1.0 - tau) * depth_profile(r * r) / four_pi - s * 0.5 * nu * cum.eval(r * r);
    let (r_plus, value_plus) = scan_max(&f_plus, grid_m);
    let (r_minus, value_minus) = scan_max(&f_minus, grid_m);
    Ok(PairPrediction {
        r_plus,
        r_minus,
        value_plus,
        value_minus,
        convention,
    })
}

fn scan_max(f: &dyn Fn(f64) -> f64, m: usize) -> (f64, f64) {
    let step = 1.0 / (m - 1) as f64;
    let mut best = (0usize, f(0.0));
    for k in 1..m {
        let v = f(k as f64 * step);
        if v > best.1 {
            best = (k, v);
        }
    }
    let lo = (best.0.saturating_sub(1)) as f64 * step;
    let hi = ((best.0 + 1).min(m - 1)) as f64 * step;
    golden_max(f, lo, hi)
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Richardson's leading-order drift of a concentrated vortex:
/// `(1/2π) ∇⊥b(z) log(1/ε) S_ε`, with `∇b` by centered differences.
pub fn richardson_drift(lake: &Lake, z: Point, eps: f64, s_eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must be in (0,1), got {eps}")));
    }
    let (i, j) = lake
        .grid
        .cell_of(z)
        .ok_or(Error::DomainPoint { x: z.0, y: z.1 })?;
    let idx = lake.grid.index(i, j);
    let nx = lake.grid.nx;
    if !lake.mask[idx] {
        return Err(Error::DomainPoint { x: z.0, y: z.1 });
    }
    // centered stencil must not touch the mask frontier
    let ok = i > 0
        && j > 0
        && i + 1 < nx
        && j + 1 < lake.grid.ny
        && lake.mask[idx - 1]
        && lake.mask[idx + 1]
        && lake.mask[idx - nx]
        && lake.mask[idx + nx];
    if !ok {
        return Err(Error::Parameter(format!(
            "drift stencil at ({}, {}) reaches the boundary",
            z.0, z.1
        )));
    }
    let h = lake.grid.h;
    let gx = (lake.depth[idx + 1] - lake.depth[idx - 1]) / (2.0 * h);
    let gy = (lake.depth[idx + nx] - lake.depth[idx - nx]) / (2.0 * h);
    let factor = (1.0 / eps).ln() * s_eps / (2.0 * std::f64::consts::PI);
    Ok((-gy * factor, gx * factor))
}

/// Leading partial flow of one sign:
/// `Θ±(x) = (b(x)/4π) ∫ log(diam(Ω)/|x-y|) ζ±(y) dμ(y) ± λ_ε Ψ(x)`,
/// by direct quadrature with the desingularized self cell.
pub fn leading_partial_flow(
    lake: &Lake,
    zeta: &ScalarField,
    psi: &ScalarField,
    lambda_eps: f64,
    part: Part,
) -> Result<ScalarField> {
    zeta.aligned(lake)?;
    psi.aligned(lake)?;
    let nx = lake.grid.nx;
    let sign = match part {
        Part::Positive => 1.0,
        Part::Negative => -1.0,
    };
    let support: Vec<(Point, f64)> = lake
        .interior_cells()
        .filter_map(|(idx, c)| {
            let v = sign * zeta.data[idx];
            (v > 0.0).then(|| (c, v * lake.cell_mu(idx)))
        })
        .collect();
    let diam = lake.diameter;
    let h = lake.grid.h;
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut out = ScalarField::zeros(lake);
    for (idx, c) in lake.interior_cells() {
        let mut acc = 0.0;
        for &(y, w) in &support {
            let d = ((c.0 - y.0).powi(2) + (c.1 - y.1).powi(2)).sqrt();
            let log_term = if d < 0.5 * h {
                (diam / (crate::green::SELF_CELL_FACTOR * h)).ln()
            } else {
                (diam / d).ln()
            };
            acc += log_term * w;
        }
        out.data[idx] = lake.depth[idx] / four_pi * acc + sign * lambda_eps * psi.data[idx];
    }
    let _ = nx;
    Ok(out)
}

/// Concentration measurements of one sign of a vortex field.
#[derive(Debug, Clone)]
pub struct PartReport {
    /// μ-weighted centroid of the part.
    pub centroid: Point,
    /// Total μ-mass of the part.
    pub mass: f64,
    /// Max pairwise distance between support cells.
    pub diameter: f64,
    /// Mass fraction within 2ε of the centroid.
    pub fraction_2eps: f64,
    /// Mass fraction within 4ε of the centroid.
    pub fraction_4eps: f64,
}

/// Concentration report for both parts; a part with no mass is absent.
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub eps: f64,
    pub plus: Option<PartReport>,
    pub minus: Option<PartReport>,
}

/// Support threshold: cells with `|ζ|` above this count as support
/// (fractional cells included).
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// Centroid, support diameter, and near-centroid mass fractions of each part.
pub fn concentration_diagnostics(
    lake: &Lake,
    zeta: &ScalarField,
    eps: f64,
) -> Result<ConcentrationReport> {
    zeta.aligned(lake)?;
    let part = |sign: f64| -> Option<PartReport> {
        let cells: Vec<(Point, f64)> = lake
            .interior_cells()
            .filter_map(|(idx, c)| {
                let v = sign * zeta.data[idx];
                (v > SUPPORT_THRESHOLD).then(|| (c, v * lake.cell_mu(idx)))
            })
            .collect();
        let mass: f64 = cells.iter().map(|(_, w)| w).sum();
        if mass <= 0.0 {
            return None;
        }
        let cx = cells.iter().map(|((x, _), w)| x * w).sum::<f64>() / mass;
        let cy = cells.iter().map(|((_, y), w)| y * w).sum::<f64>() / mass;
        let mut diameter = 0.0f64;
        for a in 0..cells.len() {
            for b in a + 1..cells.len() {
                let (pa, pb) = (cells[a].0, cells[b].0);
                let d2 = (pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2);
                diameter = diameter.max(d2);
            }
        }
        let diameter = diameter.sqrt();
        let frac = |rho: f64| {
            cells
                .iter()
                .filter(|((x, y), _)| (x - cx).powi(2) + (y - cy).powi(2) <= rho * rho)
                .map(|(_, w)| w)
                .sum::<f64>()
                / mass
        };
        Some(PartReport {
            centroid: (cx, cy),
            mass,
            diameter,
            fraction_2eps: frac(2.0 * eps),
            fraction_4eps: frac(4.0 * eps),
        })
    };
    Ok(ConcentrationReport {
        eps,
        plus: part(1.0),
        minus: part(-1.0),
    })
}
