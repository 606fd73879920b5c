//! Green's-function expansion of the stream operators.
//!
//! On a continuous lake the combined flow splits as
//! `Kζ(x) + Hζ(x) = b(x)∫g(x,y)ζ(y)dμ(y) + ∫R(x,y)ζ(y)dμ(y)`,
//! where `g` is the Dirichlet Green's function of `-Δ` on Ω and the remainder
//! `R(·,y)` is the zero-trace solution of
//! `∫⟨∇R(·,y),∇φ⟩ dm/b = -∫⟨g(·,y)∇b,∇φ⟩ dm/b`.
//! This module evaluates `g` in closed form (method of images on the disk, a
//! modal series on the annulus), solves for `R`, and verifies the expansion
//! against the assembled solvers.

use crate::elliptic::{solve_h, solve_k, WeightedOperator};
use crate::error::{Error, Result};
use crate::geometry::{Lake, LakeKind, Point, ScalarField, B_FLOOR};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Mean of `log(1/|x-y|)` over a square cell sits at `log(1/(0.56 h))`;
/// quadrature cells with `|x-y| < h/2` use this desingularized value.
pub const SELF_CELL_FACTOR: f64 = 0.56;

fn dist(x: Point, y: Point) -> f64 {
    ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt()
}

fn norm(p: Point) -> f64 {
    (p.0 * p.0 + p.1 * p.1).sqrt()
}

/// Dirichlet Green's function of `-Δ` on the unit disk by the method of
/// images: `g(x,y) = (1/2π) log(|x-y*||y| / |x-y|)` with `y* = y/|y|²`,
/// and `g(x,0) = (1/2π) log(1/|x|)`.
pub fn disk_green(x: Point, y: Point) -> Result<f64> {
    if norm(x) >= 1.0 || norm(y) >= 1.0 {
        let p = if norm(x) >= 1.0 { x } else { y };
        return Err(Error::DomainPoint { x: p.0, y: p.1 });
    }
    if x == y {
        return Err(Error::Singularity { x: x.0, y: x.1 });
    }
    Ok((0.5 / PI) * (disk_green_smooth(x, y) - dist(x, y).ln()))
}

/// `log(|x-y*||y|)`: the smooth image part, with the `y → 0` limit 0.
fn disk_green_smooth(x: Point, y: Point) -> f64 {
    let ny = norm(y);
    if ny < 1e-300 {
        return 0.0;
    }
    let star = (y.0 / (ny * ny), y.1 / (ny * ny));
    (dist(x, star) * ny).ln()
}

/// Modal-series evaluation of the annulus Green's function on
/// `q < |x| < 1`. The free-space log carries the singularity; the harmonic
/// correction is summed per angular mode with geometric decay.
pub fn annulus_green(q: f64, x: Point, y: Point) -> Result<f64> {
    let (r, s) = (norm(x), norm(y));
    if r >= 1.0 || r <= q {
        return Err(Error::DomainPoint { x: x.0, y: x.1 });
    }
    if s >= 1.0 || s <= q {
        return Err(Error::DomainPoint { x: y.0, y: y.1 });
    }
    if x == y {
        return Err(Error::Singularity { x: x.0, y: x.1 });
    }
    let dtheta = (x.1.atan2(x.0) - y.1.atan2(y.0)).rem_euclid(2.0 * PI);
    Ok((0.5 / PI) * (1.0 / dist(x, y)).ln() + annulus_correction(q, r.min(s), r.max(s), dtheta))
}

/// Harmonic correction `g - (1/2π)log(1/|x-y|)` on the annulus.
fn annulus_correction(q: f64, rlo: f64, rhi: f64, dtheta: f64) -> f64 {
    let k0 = (0.5 / PI) * ((rlo / q).ln() * rhi.ln() / q.ln() + rhi.ln());
    // per-mode bases, all strictly below 1 on the open annulus
    let b1 = rlo * rhi;
    let b2 = q * q / (rlo * rhi);
    let b3 = q * q * rhi / rlo;
    let b4 = q * q * rlo / rhi;
    let qq = q * q;
    let rho = b1.max(b2).max(b3).max(b4);
    let cosd = dtheta.cos();
    let (mut t1, mut t2, mut t3, mut t4, mut qn) = (1.0, 1.0, 1.0, 1.0, 1.0);
    // cos(n dθ) recurrence
    let (mut c_prev, mut c_cur) = (1.0, cosd);
    let mut sum = 0.0;
    for n in 1..=1_000_000u64 {
        t1 *= b1;
        t2 *= b2;
        t3 *= b3;
        t4 *= b4;
        qn *= qq;
        let coeff = -(0.5 / PI) / n as f64 * (t1 + t2 - t3 - t4) / (1.0 - qn);
        sum += coeff * c_cur;
        let next = 2.0 * cosd * c_cur - c_prev;
        c_prev = c_cur;
        c_cur = next;
        // geometric tail bound
        let tail = (t1 + t2 + t3 + t4) * rho / ((1.0 - rho) * (1.0 - qq) * n as f64);
        if tail < 1e-15 {
            break;
        }
    }
    k0 + sum
}

/// Green's function for the lake's analytic geometry.
pub fn lake_green(lake: &Lake, x: Point, y: Point) -> Result<f64> {
    match lake.kind {
        LakeKind::Disk => disk_green(x, y),
        LakeKind::Annulus { r_inner } => annulus_green(r_inner, x, y),
        _ => Err(Error::Experiment(format!(
            "no closed-form Green's function for lake '{}'",
            lake.name
        ))),
    }
}

/// Desingularized diagonal value used for the quadrature cell containing the
/// source: the log kernel is replaced by its cell average.
pub fn lake_green_self_term(lake: &Lake, y: Point) -> f64 {
    let log_avg = (1.0 / (SELF_CELL_FACTOR * lake.grid.h)).ln();
    let smooth = match lake.kind {
        LakeKind::Disk => disk_green_smooth(y, y),
        LakeKind::Annulus { r_inner } => {
            let s = norm(y);
            2.0 * PI * annulus_correction(r_inner, s, s, 0.0)
        }
        _ => 0.0,
    };
    (0.5 / PI) * (log_avg + smooth)
}

/// Quadrature kernel: `g(x,y)` with the near-diagonal cells replaced by the
/// cell-averaged value.
pub fn green_quad(lake: &Lake, x: Point, y: Point) -> Result<f64> {
    if dist(x, y) < 0.5 * lake.grid.h {
        Ok(lake_green_self_term(lake, y))
    } else {
        lake_green(lake, x, y)
    }
}

/// Solve the remainder problem: `A_h R = rhs` with the face-assembled form of
/// `-∫⟨g(·,y)∇b,∇φ⟩ dm/b` (face-centered `g`, face differences of `b`).
pub fn remainder_solve(op: &WeightedOperator, lake: &Lake, y: Point) -> Result<ScalarField> {
    let (i, j) = lake
        .grid
        .cell_of(y)
        .ok_or(Error::DomainPoint { x: y.0, y: y.1 })?;
    let idx = lake.grid.index(i, j);
    if !lake.mask[idx] || lake.depth[idx] < B_FLOOR {
        return Err(Error::DomainPoint { x: y.0, y: y.1 });
    }
    let mut rhs = vec![0.0; op.unknowns()];
    let (nx, ny, h) = (lake.grid.nx, lake.grid.ny, lake.grid.h);
    let h2 = h * h;
    for jj in 0..ny {
        for ii in 0..nx {
            let c = lake.grid.index(ii, jj);
            let Some(uc) = op.unknown_of_cell(c) else {
                continue;
            };
            for (connected, d, mid) in [
                (
                    lake.connected_x(ii, jj),
                    c + 1,
                    (
                        lake.grid.center(ii, jj).0 + 0.5 * h,
                        lake.grid.center(ii, jj).1,
                    ),
                ),
                (
                    lake.connected_y(ii, jj),
                    c + nx,
                    (
                        lake.grid.center(ii, jj).0,
                        lake.grid.center(ii, jj).1 + 0.5 * h,
                    ),
                ),
            ] {
                if !connected {
                    continue;
                }
                let Some(ud) = op.unknown_of_cell(d) else {
                    continue;
                };
                let (bc, bd) = (lake.depth[c], lake.depth[d]);
                let w = (bc + bd) / (2.0 * bc * bd) / h2;
                let g = lake_green(lake, mid, y)?;
                let flux = w * g * (bd - bc);
                rhs[uc] += flux;
                rhs[ud] -= flux;
            }
        }
    }
    let mut x = vec![0.0; op.unknowns()];
    op.pcg(&rhs, &mut x, op.default_tol, op.default_max_iter)?;
    Ok(op.prolong(lake, &x))
}

/// Sampled decomposition at a set of probe sources: Green fields, regular
/// parts `H(x,y) = (1/2π)log(diam/|x-y|) - g(x,y)`, remainder fields, and the
/// sup-norm table of `R`.
pub struct GreenDecomposition {
    pub probes: Vec<Point>,
    pub green_fields: Vec<ScalarField>,
    pub regular_parts: Vec<ScalarField>,
    pub remainders: Vec<ScalarField>,
    pub sup_r: Vec<f64>,
}

pub fn green_decomposition(
    op: &WeightedOperator,
    lake: &Lake,
    probes: &[Point],
) -> Result<GreenDecomposition> {
    let mut green_fields = Vec::with_capacity(probes.len());
    let mut regular_parts = Vec::with_capacity(probes.len());
    let remainders: Vec<ScalarField> = probes
        .par_iter()
        .map(|&y| remainder_solve(op, lake, y))
        .collect::<Result<_>>()?;
    for &y in probes {
        let mut g = ScalarField::zeros(lake);
        let mut hreg = ScalarField::zeros(lake);
        for (idx, c) in lake.interior_cells() {
            let gv = green_quad(lake, c, y)?;
            g.data[idx] = gv;
            let d = dist(c, y).max(0.5 * SELF_CELL_FACTOR * lake.grid.h);
            hreg.data[idx] = (0.5 / PI) * (lake.diameter / d).ln() - gv;
        }
        green_fields.push(g);
        regular_parts.push(hreg);
    }
    let sup_r = remainders.iter().map(|r| r.max_abs()).collect();
    Ok(GreenDecomposition {
        probes: probes.to_vec(),
        green_fields,
        regular_parts,
        remainders,
        sup_r,
    })
}

/// One row of the expansion report.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub y: Point,
    pub sup_r: f64,
    /// Relative expansion error for a unit point mass at this probe.
    pub rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct ExpansionReport {
    /// Max relative error of the expansion for the given `ζ`, over interior
    /// cells at distance > 0.1 from the boundary, normalized by `sup |Kζ+Hζ|`.
    pub max_rel_err: f64,
    pub lhs_sup: f64,
    pub rows: Vec<ProbeRow>,
}

/// Verify `Kζ + Hζ = b∫gζdμ + ∫Rζdμ` on a disk lake: the left side by the
/// assembled solvers, the right side by cell quadrature over the support of
/// `ζ` with one remainder solve per support cell. Additional probe points
/// get a per-probe report row (sup `R` and the point-mass expansion error).
pub fn verify_expansion(
    op: &WeightedOperator,
    lake: &Lake,
    basis: &crate::elliptic::HarmonicBasis,
    zeta: &ScalarField,
    circ: &crate::elliptic::CirculationSpec,
    probes: &[Point],
) -> Result<ExpansionReport> {
    if lake.kind != LakeKind::Disk {
        return Err(Error::Experiment(
            "expansion verification needs the disk geometry".into(),
        ));
    }
    zeta.aligned(lake)?;
    let support: Vec<usize> = lake
        .interior_cells()
        .filter(|&(idx, _)| zeta.data[idx] != 0.0)
        .map(|(idx, _)| idx)
        .collect();
    for &idx in &support {
        let (i, j) = (idx % lake.grid.nx, idx / lake.grid.nx);
        let c = lake.grid.center(i, j);
        if lake.distance_to_rim(c) < 0.05 {
            return Err(Error::Experiment(
                "vortex support reaches the boundary; expansion check needs interior support"
                    .into(),
            ));
        }
    }

    let rhs_field = expansion_rhs(op, lake, zeta, &support)?;
    let lhs = {
        let k = solve_k(op, lake, zeta, op.default_tol, op.default_max_iter)?;
        let h = solve_h(lake, basis, zeta, circ)?;
        k.add_scaled(&h, 1.0)
    };
    let (max_rel_err, lhs_sup) = expansion_error(lake, &lhs, &rhs_field);

    let mut rows = Vec::with_capacity(probes.len());
    for &y in probes {
        let r_field = remainder_solve(op, lake, y)?;
        let (i, j) = lake
            .grid
            .cell_of(y)
            .ok_or(Error::DomainPoint { x: y.0, y: y.1 })?;
        let idx = lake.grid.index(i, j);
        let mu = lake.cell_mu(idx);
        if mu <= 0.0 {
            return Err(Error::DomainPoint { x: y.0, y: y.1 });
        }
        // unit point mass at the probe cell
        let mut pm = ScalarField::zeros(lake);
        pm.data[idx] = 1.0 / mu;
        let lhs_pm = solve_k(op, lake, &pm, op.default_tol, op.default_max_iter)?;
        let mut rhs_pm = ScalarField::zeros(lake);
        let yc = lake.grid.center(i, j);
        for (xidx, c) in lake.interior_cells() {
            rhs_pm.data[xidx] = lake.depth[xidx] * green_quad(lake, c, yc)? + r_field.data[xidx];
        }
        let (rel, _) = expansion_error(lake, &lhs_pm, &rhs_pm);
        rows.push(ProbeRow {
            y,
            sup_r: r_field.max_abs(),
            rel_err: rel,
        });
    }
    Ok(ExpansionReport {
        max_rel_err,
        lhs_sup,
        rows,
    })
}

/// Right side of the expansion for a compactly supported `ζ`:
/// `b(x) Σ_y g(x,y) ζ(y) μ_y + Σ_y R_y(x) ζ(y) μ_y`.
fn expansion_rhs(
    op: &WeightedOperator,
    lake: &Lake,
    zeta: &ScalarField,
    support: &[usize],
) -> Result<ScalarField> {
    let nx = lake.grid.nx;
    let centers: Vec<Point> = support
        .iter()
        .map(|&idx| lake.grid.center(idx % nx, idx / nx))
        .collect();
    let weights: Vec<f64> = support
        .iter()
        .map(|&idx| zeta.data[idx] * lake.cell_mu(idx))
        .collect();

    let mut rhs = ScalarField::zeros(lake);
    for (xidx, c) in lake.interior_cells() {
        let mut acc = 0.0;
        for (&y, &w) in centers.iter().zip(&weights) {
            acc += green_quad(lake, c, y)? * w;
        }
        rhs.data[xidx] = lake.depth[xidx] * acc;
    }
    // Remainder term: one solve per support cell, accumulated in fixed order;
    // solves in a chunk run in parallel (they are independent).
    const CHUNK: usize = 32;
    for (chunk_pts, chunk_w) in centers.chunks(CHUNK).zip(weights.chunks(CHUNK)) {
        let fields: Vec<ScalarField> = chunk_pts
            .par_iter()
            .map(|&y| remainder_solve(op, lake, y))
            .collect::<Result<_>>()?;
        for (f, &w) in fields.iter().zip(chunk_w) {
            for (r, v) in rhs.data.iter_mut().zip(&f.data) {
                *r += w * v;
            }
        }
    }
    Ok(rhs)
}

/// `(max |lhs-rhs| / sup |lhs|, sup |lhs|)` over interior cells at distance
/// > 0.1 from the boundary; 0 when `lhs` vanishes identically.
fn expansion_error(lake: &Lake, lhs: &ScalarField, rhs: &ScalarField) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut worst = 0.0f64;
    for (idx, c) in lake.interior_cells() {
        if lake.distance_to_rim(c) <= 0.1 {
            continue;
        }
        sup = sup.max(lhs.data[idx].abs());
        worst = worst.max((lhs.data[idx] - rhs.data[idx]).abs());
    }
    if sup == 0.0 {
        (if worst == 0.0 { 0.0 } else { f64::INFINITY }, 0.0)
    } else {
        (worst / sup, sup)
    }
}

/// Gaussian bump `amp·exp(-|x-c|²/(2σ²))` restricted to cells further than
/// `margin` from the rim; a convenient compactly-supported test vortex.
pub fn gaussian_bump(lake: &Lake, center: Point, sigma: f64, radius: f64) -> ScalarField {
    ScalarField::from_fn(lake, |x, y| {
        let d2 = (x - center.0).powi(2) + (y - center.1).powi(2);
        if d2 < radius * radius {
            (-d2 / (2.0 * sigma * sigma)).exp()
        } else {
            0.0
        }
    })
}
