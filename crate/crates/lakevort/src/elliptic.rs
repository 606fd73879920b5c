//! The discrete weighted elliptic problem `-div(b⁻¹∇ψ) = bζ`.
//!
//! The bilinear form `∫⟨∇φ,∇ψ⟩ dm/b` is assembled as a 5-point stencil over
//! interior cells, with face coefficients `1/b` taken as the inverse of the
//! harmonic mean of the adjacent cell depths (the conservative choice for
//! degenerate coefficients). Homogeneous Dirichlet data is imposed at the
//! mask frontier: faces between an interior and an exterior cell pin the
//! value 0 half a cell away, which contributes `2w` to the diagonal. Cells
//! with `b` below [`B_FLOOR`] are dried out and treated as exterior.
//!
//! The operator `K` maps a potential vortex `ζ` to the stream function in the
//! zero-trace space; the harmonic basis `ψ_0..ψ_m` (one per boundary
//! component, Kronecker boundary data) and its Gram matrix — the circulation
//! matrix — carry the circulation part `H`.

use crate::error::{Error, Result};
use crate::geometry::{Lake, ScalarField, VectorField, B_FLOOR};

/// Where a face ends: either another wet interior cell, or Dirichlet data at
/// the mask frontier (with the boundary-component label, if any).
enum FaceEnd {
    Interior(usize),
    Dirichlet { label: i16 },
}

/// Visit every face of the wet-cell graph exactly once. Interior-interior
/// faces are reported from the lower-index side; Dirichlet faces from their
/// wet cell. Severed faces are skipped. The weight `w` is the stencil
/// coefficient `(1/b)_face / h²`.
fn visit_faces(lake: &Lake, mut f: impl FnMut(usize, FaceEnd, f64)) {
    let (nx, ny) = (lake.grid.nx, lake.grid.ny);
    let h2 = lake.grid.h * lake.grid.h;
    let wet = |idx: usize| lake.mask[idx] && lake.depth[idx] >= B_FLOOR;
    for j in 0..ny {
        for i in 0..nx {
            let idx = lake.grid.index(i, j);
            if !wet(idx) {
                continue;
            }
            let b_c = lake.depth[idx];
            // (+x, +y): interior faces once per pair; all four directions for
            // Dirichlet ends.
            let neighbors = [
                (i + 1 < nx, idx as i64 + 1, lake.open_x[idx], true),
                (j + 1 < ny, idx as i64 + nx as i64, lake.open_y[idx], true),
                (i > 0, idx as i64 - 1, i > 0 && lake.open_x[idx - 1], false),
                (
                    j > 0,
                    idx as i64 - nx as i64,
                    j > 0 && lake.open_y[idx - nx],
                    false,
                ),
            ];
            for (in_grid, nidx, open, forward) in neighbors {
                if !in_grid {
                    // grid border acts as unlabeled Dirichlet
                    f(idx, FaceEnd::Dirichlet { label: -1 }, 2.0 / (b_c * h2));
                    continue;
                }
                if !open {
                    continue; // severed face: no flux
                }
                let nidx = nidx as usize;
                if wet(nidx) {
                    if forward {
                        let b_d = lake.depth[nidx];
                        let w = (b_c + b_d) / (2.0 * b_c * b_d) / h2;
                        f(idx, FaceEnd::Interior(nidx), w);
                    }
                } else {
                    // Dirichlet at the face, half a cell away.
                    let label = if lake.mask[nidx] {
                        -1 // dried cell, value 0
                    } else {
                        lake.boundary_label[nidx]
                    };
                    f(idx, FaceEnd::Dirichlet { label }, 2.0 / (b_c * h2));
                }
            }
        }
    }
}

/// Assembled SPD form of `-div(b⁻¹∇·)` with Dirichlet mask, plus the mass
/// diagonal `b h²` and a cached incomplete-Cholesky preconditioner.
pub struct WeightedOperator {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    mass: Vec<f64>,
    cell_of: Vec<u32>,
    unknown_of: Vec<i32>,
    /// Per boundary component: Dirichlet lift coefficients (unknown, 2w).
    lift: Vec<Vec<(u32, f64)>>,
    precond: Preconditioner,
    pub default_tol: f64,
    pub default_max_iter: usize,
}

enum Preconditioner {
    Jacobi(Vec<f64>),
    /// IC(0): lower factor in CSR plus its transpose for the back-solve.
    Ic {
        lo_ptr: Vec<usize>,
        lo_col: Vec<u32>,
        lo_val: Vec<f64>,
        up_ptr: Vec<usize>,
        up_col: Vec<u32>,
        up_val: Vec<f64>,
    },
}

/// Assemble the weighted operator for a lake.
pub fn assemble(lake: &Lake) -> Result<WeightedOperator> {
    let len = lake.grid.len();
    let mut unknown_of = vec![-1i32; len];
    let mut cell_of = Vec::new();
    for (idx, _) in lake.interior_cells() {
        if lake.depth[idx] >= B_FLOOR {
            unknown_of[idx] = cell_of.len() as i32;
            cell_of.push(idx as u32);
        }
    }
    let n = cell_of.len();
    if n == 0 {
        return Err(Error::EmptyDomain);
    }

    let mut diag = vec![0.0; n];
    let mut off: Vec<Vec<(u32, f64)>> = vec![Vec::with_capacity(4); n];
    let mut lift: Vec<Vec<(u32, f64)>> = vec![Vec::new(); lake.num_components];
    visit_faces(lake, |a, end, w| {
        let ua = unknown_of[a] as usize;
        match end {
            FaceEnd::Interior(b) => {
                let ub = unknown_of[b] as usize;
                diag[ua] += w;
                diag[ub] += w;
                off[ua].push((ub as u32, -w));
                off[ub].push((ua as u32, -w));
            }
            FaceEnd::Dirichlet { label } => {
                diag[ua] += w;
                if label >= 0 {
                    lift[label as usize].push((ua as u32, w));
                }
            }
        }
    });

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for (u, row) in off.iter_mut().enumerate() {
        row.push((u as u32, diag[u]));
        row.sort_unstable_by_key(|e| e.0);
        for &(c, v) in row.iter() {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }

    let h2 = lake.grid.h * lake.grid.h;
    let mass: Vec<f64> = cell_of
        .iter()
        .map(|&idx| lake.depth[idx as usize] * h2)
        .collect();

    let precond = build_ic(&row_ptr, &col_idx, &values, n)
        .unwrap_or_else(|| Preconditioner::Jacobi(diag.iter().map(|d| 1.0 / d).collect()));

    Ok(WeightedOperator {
        nx: lake.grid.nx,
        ny: lake.grid.ny,
        h: lake.grid.h,
        n,
        row_ptr,
        col_idx,
        values,
        mass,
        cell_of,
        unknown_of,
        lift,
        precond,
        default_tol: 1e-10,
        default_max_iter: 20 * (lake.grid.nx + lake.grid.ny),
    })
}

/// Zero-fill IC(0) factorization; `None` if a pivot fails (then the caller
/// falls back to Jacobi).
fn build_ic(
    row_ptr: &[usize],
    col_idx: &[u32],
    values: &[f64],
    n: usize,
) -> Option<Preconditioner> {
    let mut lo_ptr = Vec::with_capacity(n + 1);
    let mut lo_col: Vec<u32> = Vec::new();
    let mut lo_val: Vec<f64> = Vec::new();
    lo_ptr.push(0);
    for i in 0..n {
        for k in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[k] as usize;
            if j > i {
                continue;
            }
            let a_ij = values[k];
            let mut sum = a_ij;
            // subtract Σ_m L[i][m] L[j][m] over shared columns m < j
            let (mut pi, mut pj) = (lo_ptr[i], lo_ptr[j]);
            let ei = lo_col.len();
            let ej = if j < i { lo_ptr[j + 1] } else { lo_col.len() };
            while pi < ei && pj < ej {
                let (ci, cj) = (lo_col[pi], lo_col[pj]);
                if ci as usize >= j || cj as usize >= j {
                    break;
                }
                match ci.cmp(&cj) {
                    std::cmp::Ordering::Less => pi += 1,
                    std::cmp::Ordering::Greater => pj += 1,
                    std::cmp::Ordering::Equal => {
                        sum -= lo_val[pi] * lo_val[pj];
                        pi += 1;
                        pj += 1;
                    }
                }
            }
            if j < i {
                // L[j][j] is the last entry of row j
                let ljj = lo_val[lo_ptr[j + 1] - 1];
                lo_col.push(j as u32);
                lo_val.push(sum / ljj);
            } else {
                if sum <= 0.0 {
                    return None;
                }
                lo_col.push(i as u32);
                lo_val.push(sum.sqrt());
            }
        }
        lo_ptr.push(lo_col.len());
    }
    // transpose for the backward solve
    let mut counts = vec![0usize; n + 1];
    for &c in &lo_col {
        counts[c as usize + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let mut up_ptr = counts.clone();
    let mut up_col = vec![0u32; lo_col.len()];
    let mut up_val = vec![0.0; lo_val.len()];
    for i in 0..n {
        for k in lo_ptr[i]..lo_ptr[i + 1] {
            let c = lo_col[k] as usize;
            let slot = up_ptr[c];
            up_col[slot] = i as u32;
            up_val[slot] = lo_val[k];
            up_ptr[c] += 1;
        }
    }
    let mut up_ptr = vec![0usize; n + 1];
    up_ptr.copy_from_slice(&counts);
    Some(Preconditioner::Ic {
        lo_ptr,
        lo_col,
        lo_val,
        up_ptr,
        up_col,
        up_val,
    })
}

/// Iteration count and final relative residual of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iters: usize,
    pub rel_residual: f64,
}

impl WeightedOperator {
    pub fn unknowns(&self) -> usize {
        self.n
    }

    pub fn unknown_of_cell(&self, idx: usize) -> Option<usize> {
        let u = self.unknown_of[idx];
        (u >= 0).then(|| u as usize)
    }

    /// Matrix entry between two cells (0 when absent or either cell is dry).
    pub fn matrix_entry(&self, cell_a: usize, cell_b: usize) -> f64 {
        let (Some(ua), Some(ub)) = (self.unknown_of_cell(cell_a), self.unknown_of_cell(cell_b))
        else {
            return 0.0;
        };
        for k in self.row_ptr[ua]..self.row_ptr[ua + 1] {
            if self.col_idx[k] as usize == ub {
                return self.values[k];
            }
        }
        0.0
    }

    /// Row sum over a cell's matrix row (diagonal plus couplings).
    pub fn row_sum_of_cell(&self, cell: usize) -> f64 {
        match self.unknown_of_cell(cell) {
            Some(u) => (self.row_ptr[u]..self.row_ptr[u + 1])
                .map(|k| self.values[k])
                .sum(),
            None => 0.0,
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k] as usize;
                let mut a_ji = 0.0;
                for l in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.col_idx[l] as usize == i {
                        a_ji = self.values[l];
                        break;
                    }
                }
                worst = worst.max((self.values[k] - a_ji).abs());
            }
        }
        worst
    }

    fn spmv(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            y[i] = acc;
        }
    }

    fn apply_precond(&self, r: &[f64], z: &mut [f64]) {
        match &self.precond {
            Preconditioner::Jacobi(inv_diag) => {
                for i in 0..self.n {
                    z[i] = r[i] * inv_diag[i];
                }
            }
            Preconditioner::Ic {
                lo_ptr,
                lo_col,
                lo_val,
                up_ptr,
                up_col,
                up_val,
            } => {
                // forward: L t = r (diagonal is the last entry of each row)
                for i in 0..self.n {
                    let mut acc = r[i];
                    for k in lo_ptr[i]..lo_ptr[i + 1] - 1 {
                        acc -= lo_val[k] * z[lo_col[k] as usize];
                    }
                    z[i] = acc / lo_val[lo_ptr[i + 1] - 1];
                }
                // backward: Lᵀ z = t (diagonal is the first entry of each column row)
                for i in (0..self.n).rev() {
                    let mut acc = z[i];
                    for k in up_ptr[i] + 1..up_ptr[i + 1] {
                        acc -= up_val[k] * z[up_col[k] as usize];
                    }
                    z[i] = acc / up_val[up_ptr[i]];
                }
            }
        }
    }

    /// Preconditioned CG on the unknown vector. `x` carries the warm start
    /// and receives the solution.
    pub fn pcg(&self, rhs: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("solver tolerance must be positive, got {tol}")));
        }
        let n = self.n;
        let rhs_norm = norm2(rhs);
        if rhs_norm == 0.0 {
            x.fill(0.0);
            return Ok(SolveStats {
                iters: 0,
                rel_residual: 0.0,
            });
        }
        let mut r = vec![0.0; n];
        self.spmv(x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        let mut z = vec![0.0; n];
        self.apply_precond(&r, &mut z);
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut res = norm2(&r);
        for iter in 0..max_iter {
            if res <= tol * rhs_norm {
                return Ok(SolveStats {
                    iters: iter,
                    rel_residual: res / rhs_norm,
                });
            }
            self.spmv(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            res = norm2(&r);
            self.apply_precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if res <= tol * rhs_norm {
            return Ok(SolveStats {
                iters: max_iter,
                rel_residual: res / rhs_norm,
            });
        }
        Err(Error::Solver {
            iters: max_iter,
            residual: res / rhs_norm,
            target: tol,
        })
    }

    /// Gather a grid field into the unknown vector.
    pub fn restrict(&self, f: &ScalarField) -> Vec<f64> {
        self.cell_of
            .iter()
            .map(|&idx| f.data[idx as usize])
            .collect()
    }

    /// Scatter an unknown vector back to a grid field (0 elsewhere).
    pub fn prolong(&self, lake: &Lake, x: &[f64]) -> ScalarField {
        let mut f = ScalarField::zeros(lake);
        for (u, &idx) in self.cell_of.iter().enumerate() {
            f.data[idx as usize] = x[u];
        }
        f
    }

    /// Mass diagonal `b h²` by unknown.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn dirichlet_lift(&self, component: usize) -> &[(u32, f64)] {
        &self.lift[component]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `ψ = K(ζ)`: unique zero-trace solution of `A_h ψ = M ζ`, the minimizer of
/// `Φ(φ) = ½‖φ‖² − ∫φζ dμ`.
pub fn solve_k(
    op: &WeightedOperator,
    lake: &Lake,
    zeta: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField> {
    solve_k_warm(op, lake, zeta, None, tol, max_iter)
}

/// Same as [`solve_k`] with an optional warm start from a previous stream.
pub fn solve_k_warm(
    op: &WeightedOperator,
    lake: &Lake,
    zeta: &ScalarField,
    warm: Option<&ScalarField>,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField> {
    zeta.aligned(lake)?;
    // The stored matrix carries the 1/h² stencil scaling, so the mass side
    // is b ζ per row (the unscaled pair is A_h ψ = (b h²) ζ).
    let h2 = lake.grid.h * lake.grid.h;
    let zr = op.restrict(zeta);
    let rhs: Vec<f64> = zr
        .iter()
        .zip(op.mass())
        .map(|(z, m)| z * m / h2)
        .collect();
    let mut x = match warm {
        Some(w) => op.restrict(w),
        None => vec![0.0; op.unknowns()],
    };
    op.pcg(&rhs, &mut x, tol, max_iter)?;
    Ok(op.prolong(lake, &x))
}

/// The harmonic basis `ψ_0..ψ_m` (problem with Kronecker boundary data) and
/// the circulation matrix `𝒜_ij = ∫⟨∇ψ_i,∇ψ_j⟩ dm/b`.
pub struct HarmonicBasis {
    pub fields: Vec<ScalarField>,
    pub matrix: nalgebra::DMatrix<f64>,
}

impl HarmonicBasis {
    pub fn components(&self) -> usize {
        self.fields.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// `max |𝒜 · (1,…,1)|`.
    pub fn kernel_defect(&self) -> f64 {
        let m = self.matrix.nrows();
        (0..m)
            .map(|i| (0..m).map(|j| self.matrix[(i, j)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Solve the homogeneous problem for each boundary component and assemble
/// the circulation matrix from the discrete bilinear form.
pub fn harmonic_basis(op: &WeightedOperator, lake: &Lake) -> Result<HarmonicBasis> {
    let m1 = lake.num_components;
    if m1 == 0 {
        return Err(Error::Geometry("lake has no labeled boundary".into()));
    }
    let mut fields = Vec::with_capacity(m1);
    for comp in 0..m1 {
        let mut rhs = vec![0.0; op.unknowns()];
        for &(u, w) in op.dirichlet_lift(comp) {
            rhs[u as usize] += w;
        }
        let mut x = vec![0.0; op.unknowns()];
        op.pcg(&rhs, &mut x, op.default_tol, op.default_max_iter)?;
        fields.push(op.prolong(lake, &x));
    }
    // Gram matrix of the discrete gradients, boundary data included.
    let mut a = nalgebra::DMatrix::<f64>::zeros(m1, m1);
    let h2 = lake.grid.h * lake.grid.h;
    visit_faces(lake, |cell, end, w| {
        // Δψ_i across the face for every i, then rank-one accumulate.
        let mut deltas = vec![0.0; m1];
        match end {
            FaceEnd::Interior(other) => {
                for (i, psi) in fields.iter().enumerate() {
                    deltas[i] = psi.data[cell] - psi.data[other];
                }
            }
            FaceEnd::Dirichlet { label } => {
                for (i, psi) in fields.iter().enumerate() {
                    let bval = if label == i as i16 { 1.0 } else { 0.0 };
                    deltas[i] = psi.data[cell] - bval;
                }
            }
        }
        for i in 0..m1 {
            for j in 0..m1 {
                a[(i, j)] += w * h2 * deltas[i] * deltas[j];
            }
        }
    });
    Ok(HarmonicBasis { fields, matrix: a })
}

/// Prescribed circulations `c_0..c_m`, one per boundary component.
#[derive(Debug, Clone)]
pub struct CirculationSpec {
    pub values: Vec<f64>,
}

impl CirculationSpec {
    pub fn new(values: Vec<f64>) -> Self {
        CirculationSpec { values }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Consistency defect `|Σ c_i − ∫ζ dμ|`; errors when it exceeds the
    /// tolerance (relative to the scale of the data).
    pub fn check_consistency(&self, lake: &Lake, zeta: &ScalarField) -> Result<f64> {
        let total = lake.mu_integral(zeta)?;
        let defect = (self.sum() - total).abs();
        let scale = self
            .values
            .iter()
            .map(|c| c.abs())
            .sum::<f64>()
            .max(total.abs())
            .max(1e-3);
        let tol = 1e-8 * scale;
        if defect > tol {
            return Err(Error::Consistency { defect, tol });
        }
        Ok(defect)
    }
}

/// Coefficients `α_0..α_m` of `H(ζ) = Σ α_i ψ_i`, with `α_0 = 0` and the
/// reduced (kernel-removed) system `Σ_i α_i 𝒜_ij = -c_j + ∫ψ_j ζ dμ`.
pub fn solve_h_coeffs(
    lake: &Lake,
    basis: &HarmonicBasis,
    zeta: &ScalarField,
    circ: &CirculationSpec,
) -> Result<Vec<f64>> {
    let m1 = basis.components();
    if circ.values.len() != m1 {
        return Err(Error::Parameter(format!(
            "expected {m1} circulations, got {}",
            circ.values.len()
        )));
    }
    circ.check_consistency(lake, zeta)?;
    let mut alpha = vec![0.0; m1];
    let m = m1 - 1;
    if m == 0 {
        return Ok(alpha);
    }
    let mut reduced = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            reduced[(i, j)] = basis.matrix[(i + 1, j + 1)];
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(m);
    for j in 0..m {
        rhs[j] = -circ.values[j + 1] + lake.mu_inner(&basis.fields[j + 1], zeta)?;
    }
    let chol = nalgebra::Cholesky::new(reduced)
        .ok_or_else(|| Error::Geometry("reduced circulation matrix is not positive".into()))?;
    let sol = chol.solve(&rhs);
    for j in 0..m {
        alpha[j + 1] = sol[j];
    }
    Ok(alpha)
}

/// `H(ζ) = Σ_{i≥1} α_i ψ_i` as a field.
pub fn solve_h(
    lake: &Lake,
    basis: &HarmonicBasis,
    zeta: &ScalarField,
    circ: &CirculationSpec,
) -> Result<ScalarField> {
    let alpha = solve_h_coeffs(lake, basis, zeta, circ)?;
    let mut out = ScalarField::zeros(lake);
    for (a, psi) in alpha.iter().zip(&basis.fields) {
        if *a != 0.0 {
            out = out.add_scaled(psi, *a);
        }
    }
    Ok(out)
}

/// Velocity `v = b⁻¹∇⊥ψ` by centered differences, `b` clamped at the floor;
/// zero on exterior cells.
pub fn velocity(lake: &Lake, psi: &ScalarField) -> Result<VectorField> {
    psi.aligned(lake)?;
    let mut v = VectorField::zeros(lake);
    let (nx, ny) = (lake.grid.nx, lake.grid.ny);
    let h = lake.grid.h;
    for (idx, _) in lake.interior_cells() {
        let (i, j) = (idx % nx, idx / nx);
        let right = if i + 1 < nx { psi.data[idx + 1] } else { 0.0 };
        let left = if i > 0 { psi.data[idx - 1] } else { 0.0 };
        let up = if j + 1 < ny { psi.data[idx + nx] } else { 0.0 };
        let down = if j > 0 { psi.data[idx - nx] } else { 0.0 };
        let dpsi_dx = (right - left) / (2.0 * h);
        let dpsi_dy = (up - down) / (2.0 * h);
        let b = lake.depth[idx].max(B_FLOOR);
        v.vx[idx] = -dpsi_dy / b;
        v.vy[idx] = dpsi_dx / b;
    }
    Ok(v)
}
