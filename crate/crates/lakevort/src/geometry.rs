//! Lakes as masked uniform grids with a depth field.
//!
//! A lake is a pair `(Ω, b)`: an open planar domain and a nonnegative depth.
//! Here Ω is approximated by the set of cells of a uniform grid whose centers
//! fall inside the domain, and `b` is sampled at cell centers. The boundary is
//! the mask frontier: exterior cells adjacent to an interior cell, labeled by
//! the connected component of the exterior they belong to (label 0 is the
//! outer component, labels 1..m are islands). The invariant measure is
//! `dμ = b dm`, discretized cell-wise as `b h²`.

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = (f64, f64);

/// Cell-centered uniform grid. Cell `(i, j)` has center
/// `(x0 + (i + 1/2) h, y0 + (j + 1/2) h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, h: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Parameter(format!(
                "grid must be at least 4x4, got {nx}x{ny}"
            )));
        }
        if !(h > 0.0) {
            return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
        }
        Ok(GridSpec { nx, ny, x0, y0, h })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point {
        (
            self.x0 + (i as f64 + 0.5) * self.h,
            self.y0 + (j as f64 + 0.5) * self.h,
        )
    }

    /// Cell containing the point, if any.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fi = (p.0 - self.x0) / self.h;
        let fj = (p.1 - self.y0) / self.h;
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        if i < self.nx && j < self.ny {
            Some((i, j))
        } else {
            None
        }
    }
}

/// Per-cell scalar values aligned to a lake's grid; exterior cells carry 0.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(lake: &Lake) -> Self {
        ScalarField {
            nx: lake.grid.nx,
            ny: lake.grid.ny,
            data: vec![0.0; lake.grid.len()],
        }
    }

    /// Sample `f` at interior cell centers; exterior cells stay 0.
    pub fn from_fn(lake: &Lake, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(lake);
        for (idx, (x, y)) in lake.interior_cells() {
            field.data[idx] = f(x, y);
        }
        field
    }

    pub fn constant(lake: &Lake, value: f64) -> Self {
        Self::from_fn(lake, |_, _| value)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    pub fn aligned(&self, lake: &Lake) -> Result<()> {
        if self.nx != lake.grid.nx || self.ny != lake.grid.ny {
            return Err(Error::Shape {
                nx: lake.grid.nx,
                ny: lake.grid.ny,
                got_nx: self.nx,
                got_ny: self.ny,
            });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + alpha * other`, cell-wise.
    pub fn add_scaled(&self, other: &ScalarField, alpha: f64) -> ScalarField {
        assert_eq!(self.data.len(), other.data.len());
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }
}

/// Per-cell 2-vector values; zero on exterior cells.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VectorField {
    pub fn zeros(lake: &Lake) -> Self {
        VectorField {
            nx: lake.grid.nx,
            ny: lake.grid.ny,
            vx: vec![0.0; lake.grid.len()],
            vy: vec![0.0; lake.grid.len()],
        }
    }
}

/// Which analytic family the lake was built from. Used by operations that
/// need a closed-form Green's function or radial symmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LakeKind {
    Disk,
    Annulus { r_inner: f64 },
    SlitSquare,
    Custom,
}

/// Depth values below this floor are treated as dry: such cells become
/// exterior for the solver and are skipped by quadratures of `1/b`.
pub const B_FLOOR: f64 = 1e-12;

/// A lake `(Ω, b)` on a masked uniform grid.
///
/// `mask[idx]` marks interior cells. `depth` holds `b` at cell centers (0 on
/// exterior cells). `boundary_label[idx]` is `-1` except on exterior cells
/// adjacent to an interior cell, where it holds the index of the boundary
/// component. `open_x[idx]` is the connectivity of the face between cells
/// `(i, j)` and `(i+1, j)` (`open_y` likewise for the upper face); the slit
/// geometry severs faces without removing cells.
#[derive(Debug, Clone)]
pub struct Lake {
    pub grid: GridSpec,
    pub mask: Vec<bool>,
    pub depth: Vec<f64>,
    pub boundary_label: Vec<i16>,
    pub num_components: usize,
    pub open_x: Vec<bool>,
    pub open_y: Vec<bool>,
    pub name: String,
    pub kind: LakeKind,
    pub diameter: f64,
}

impl Lake {
    /// Assemble a lake from raw parts: labels the boundary, validates the
    /// depth field. `depth` must already be zero on exterior cells.
    pub fn from_parts(
        grid: GridSpec,
        mask: Vec<bool>,
        depth: Vec<f64>,
        open_x: Vec<bool>,
        open_y: Vec<bool>,
        name: impl Into<String>,
        kind: LakeKind,
        diameter: f64,
    ) -> Result<Lake> {
        let n = grid.len();
        assert_eq!(mask.len(), n);
        assert_eq!(depth.len(), n);
        assert_eq!(open_x.len(), n);
        assert_eq!(open_y.len(), n);
        let mut lake = Lake {
            grid,
            mask,
            depth,
            boundary_label: vec![-1; n],
            num_components: 0,
            open_x,
            open_y,
            name: name.into(),
            kind,
            diameter,
        };
        lake.label_boundary()?;
        lake.validate()?;
        Ok(lake)
    }

    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        self.mask[self.grid.index(i, j)]
    }

    /// Iterator over `(index, center)` of interior cells in row-major order.
    pub fn interior_cells(&self) -> impl Iterator<Item = (usize, Point)> + '_ {
        let nx = self.grid.nx;
        self.mask.iter().enumerate().filter_map(move |(idx, &m)| {
            if m {
                Some((idx, self.grid.center(idx % nx, idx / nx)))
            } else {
                None
            }
        })
    }

    pub fn interior_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// μ-measure of one cell: `b h²` (0 for exterior cells).
    #[inline]
    pub fn cell_mu(&self, idx: usize) -> f64 {
        self.depth[idx] * self.grid.h * self.grid.h
    }

    /// Total μ-measure of the lake.
    pub fn mu_total(&self) -> f64 {
        let h2 = self.grid.h * self.grid.h;
        self.mask
            .iter()
            .zip(&self.depth)
            .filter(|(&m, _)| m)
            .map(|(_, b)| b * h2)
            .sum()
    }

    /// `∫ f dμ = Σ f b h²` over interior cells.
    pub fn mu_integral(&self, f: &ScalarField) -> Result<f64> {
        f.aligned(self)?;
        let h2 = self.grid.h * self.grid.h;
        let mut sum = 0.0;
        for (idx, _) in self.interior_cells() {
            sum += f.data[idx] * self.depth[idx] * h2;
        }
        Ok(sum)
    }

    /// `∫ f g dμ`.
    pub fn mu_inner(&self, f: &ScalarField, g: &ScalarField) -> Result<f64> {
        f.aligned(self)?;
        g.aligned(self)?;
        let h2 = self.grid.h * self.grid.h;
        let mut sum = 0.0;
        for (idx, _) in self.interior_cells() {
            sum += f.data[idx] * g.data[idx] * self.depth[idx] * h2;
        }
        Ok(sum)
    }

    /// Whether the face between `(i, j)` and `(i+1, j)` connects two interior
    /// cells (severed faces do not connect).
    #[inline]
    pub fn connected_x(&self, i: usize, j: usize) -> bool {
        let idx = self.grid.index(i, j);
        i + 1 < self.grid.nx && self.mask[idx] && self.mask[idx + 1] && self.open_x[idx]
    }

    #[inline]
    pub fn connected_y(&self, i: usize, j: usize) -> bool {
        let idx = self.grid.index(i, j);
        j + 1 < self.grid.ny && self.mask[idx] && self.mask[idx + self.grid.nx] && self.open_y[idx]
    }

    /// Centered-difference gradient of `b` at an interior cell, falling back
    /// to one-sided differences where a neighbor is exterior (so mask edges
    /// do not produce spurious gradients) and to 0 when both are missing.
    pub fn grad_b(&self, i: usize, j: usize) -> (f64, f64) {
        let gx = self.directional_diff(i, j, true);
        let gy = self.directional_diff(i, j, false);
        (gx, gy)
    }

    fn directional_diff(&self, i: usize, j: usize, along_x: bool) -> f64 {
        let idx = self.grid.index(i, j);
        let (lo, hi) = if along_x {
            (
                (i > 0 && self.mask[idx - 1]).then(|| self.depth[idx - 1]),
                (i + 1 < self.grid.nx && self.mask[idx + 1]).then(|| self.depth[idx + 1]),
            )
        } else {
            (
                (j > 0 && self.mask[idx - self.grid.nx]).then(|| self.depth[idx - self.grid.nx]),
                (j + 1 < self.grid.ny && self.mask[idx + self.grid.nx])
                    .then(|| self.depth[idx + self.grid.nx]),
            )
        };
        let b = self.depth[idx];
        match (lo, hi) {
            (Some(lo), Some(hi)) => (hi - lo) / (2.0 * self.grid.h),
            (Some(lo), None) => (b - lo) / self.grid.h,
            (None, Some(hi)) => (hi - b) / self.grid.h,
            (None, None) => 0.0,
        }
    }

    /// Graph distance (in cells) to the boundary, where the boundary sources
    /// are exterior cells and severed faces. Interior cells only; exterior
    /// cells get 0.
    pub fn boundary_distance_cells(&self) -> Vec<u32> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut dist = vec![u32::MAX; self.grid.len()];
        let mut queue = std::collections::VecDeque::new();
        for j in 0..ny {
            for i in 0..nx {
                let idx = self.grid.index(i, j);
                if !self.mask[idx] {
                    dist[idx] = 0;
                    queue.push_back(idx);
                    continue;
                }
                // cells on a severed face or on the grid border are frontier cells
                let severed = (i + 1 < nx && self.mask[idx + 1] && !self.open_x[idx])
                    || (i > 0 && self.mask[idx - 1] && !self.open_x[idx - 1])
                    || (j + 1 < ny && self.mask[idx + nx] && !self.open_y[idx])
                    || (j > 0 && self.mask[idx - nx] && !self.open_y[idx - nx]);
                let border = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                if severed || border {
                    dist[idx] = 1;
                    queue.push_back(idx);
                }
            }
        }
        while let Some(idx) = queue.pop_front() {
            let (i, j) = (idx % nx, idx / nx);
            let d = dist[idx];
            let mut push = |nidx: usize| {
                if self.mask[nidx] && dist[nidx] > d + 1 {
                    dist[nidx] = d + 1;
                    queue.push_back(nidx);
                }
            };
            if i + 1 < nx && self.open_x[idx] {
                push(idx + 1);
            }
            if i > 0 && self.open_x[idx - 1] {
                push(idx - 1);
            }
            if j + 1 < ny && self.open_y[idx] {
                push(idx + nx);
            }
            if j > 0 && self.open_y[idx - nx] {
                push(idx - nx);
            }
        }
        dist
    }

    fn label_boundary(&mut self) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        // Flood-fill exterior components; the one touching the grid border is
        // the outer component 0.
        let mut comp = vec![-1i32; self.grid.len()];
        let mut components: Vec<Vec<usize>> = Vec::new();
        for start in 0..self.grid.len() {
            if self.mask[start] || comp[start] >= 0 {
                continue;
            }
            let id = components.len() as i32;
            let mut cells = Vec::new();
            let mut queue = std::collections::VecDeque::from([start]);
            comp[start] = id;
            while let Some(idx) = queue.pop_front() {
                cells.push(idx);
                let (i, j) = (idx % nx, idx / nx);
                for nidx in [
                    (i + 1 < nx).then(|| idx + 1),
                    (i > 0).then(|| idx - 1),
                    (j + 1 < ny).then(|| idx + nx),
                    (j > 0).then(|| idx - nx),
                ]
                .into_iter()
                .flatten()
                {
                    if !self.mask[nidx] && comp[nidx] < 0 {
                        comp[nidx] = id;
                        queue.push_back(nidx);
                    }
                }
            }
            components.push(cells);
        }
        if components.is_empty() {
            return Err(Error::Geometry(
                "lake has no exterior cells; the grid must include an exterior margin".into(),
            ));
        }
        // Outer component: the one containing a border cell.
        let mut outer = None;
        for (id, cells) in components.iter().enumerate() {
            if cells.iter().any(|&idx| {
                let (i, j) = (idx % nx, idx / nx);
                i == 0 || j == 0 || i == nx - 1 || j == ny - 1
            }) {
                outer = Some(id);
                break;
            }
        }
        let outer = outer.ok_or_else(|| {
            Error::Geometry("no exterior component touches the grid border".into())
        })?;
        // Relabel: outer -> 0, the rest in scan order.
        let mut label_of = vec![0u16; components.len()];
        let mut next = 1u16;
        for id in 0..components.len() {
            if id != outer {
                label_of[id] = next;
                next += 1;
            }
        }
        self.num_components = components.len();
        // Boundary cells: exterior cells adjacent to an interior cell.
        for j in 0..ny {
            for i in 0..nx {
                let idx = self.grid.index(i, j);
                if self.mask[idx] {
                    continue;
                }
                let touches = [
                    (i + 1 < nx).then(|| idx + 1),
                    (i > 0).then(|| idx - 1),
                    (j + 1 < ny).then(|| idx + nx),
                    (j > 0).then(|| idx - nx),
                ]
                .into_iter()
                .flatten()
                .any(|nidx| self.mask[nidx]);
                if touches {
                    self.boundary_label[idx] = label_of[comp[idx] as usize] as i16;
                }
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.interior_count() == 0 {
            return Err(Error::EmptyDomain);
        }
        for (idx, &b) in self.depth.iter().enumerate() {
            if self.mask[idx] && !(b >= 0.0) {
                let (i, j) = (idx % self.grid.nx, idx / self.grid.nx);
                let (x, y) = self.grid.center(i, j);
                return Err(Error::Geometry(format!(
                    "depth at cell ({x}, {y}) is {b}; must be nonnegative and finite"
                )));
            }
        }
        // Discrete form of inf_K b > 0 on compacts: cells further than 2h
        // from the boundary must be strictly wet.
        let dist = self.boundary_distance_cells();
        for (idx, _) in self.interior_cells() {
            if dist[idx] > 2 && self.depth[idx] <= 0.0 {
                let (i, j) = (idx % self.grid.nx, idx / self.grid.nx);
                let (x, y) = self.grid.center(i, j);
                return Err(Error::Geometry(format!(
                    "depth vanishes at interior cell ({x}, {y}) away from the boundary"
                )));
            }
        }
        Ok(())
    }

    /// Export as whitespace-delimited `x y value` triples, one interior cell
    /// per line, row-major order.
    pub fn write_field(&self, f: &ScalarField, mut w: impl std::io::Write) -> Result<()> {
        f.aligned(self)?;
        for (idx, (x, y)) in self.interior_cells() {
            writeln!(w, "{x:.12e} {y:.12e} {:.12e}", f.data[idx])?;
        }
        Ok(())
    }
}

const PAD: usize = 2;

fn radial_depth(t: f64, profile: &impl Fn(f64) -> f64) -> Result<f64> {
    let b = profile(t);
    if !(b >= 0.0) {
        return Err(Error::InvalidDepth { t, value: b });
    }
    Ok(b)
}

/// Unit-disk lake with `b(x) = depth_profile(|x|²)`, `n` cells across the
/// diameter (plus an exterior margin).
pub fn build_disk_lake(n: usize, depth_profile: impl Fn(f64) -> f64) -> Result<Lake> {
    if n < 16 {
        return Err(Error::Parameter(format!(
            "disk lake needs at least 16 cells per side, got {n}"
        )));
    }
    let h = 2.0 / n as f64;
    let m = n + 2 * PAD;
    let grid = GridSpec::new(m, m, -1.0 - PAD as f64 * h, -1.0 - PAD as f64 * h, h)?;
    let mut mask = vec![false; grid.len()];
    let mut depth = vec![0.0; grid.len()];
    for j in 0..m {
        for i in 0..m {
            let (x, y) = grid.center(i, j);
            let t = x * x + y * y;
            if t < 1.0 {
                let idx = grid.index(i, j);
                mask[idx] = true;
                depth[idx] = radial_depth(t, &depth_profile)?;
            }
        }
    }
    let open = vec![true; grid.len()];
    Lake::from_parts(
        grid,
        mask,
        depth,
        open.clone(),
        open,
        format!("disk-{n}"),
        LakeKind::Disk,
        2.0,
    )
}

/// Annulus lake `r_inner < |x| < 1` with two boundary components: label 0 on
/// the outer circle, label 1 on the inner one.
pub fn build_annulus_lake(
    n: usize,
    r_inner: f64,
    depth_profile: impl Fn(f64) -> f64,
) -> Result<Lake> {
    if n < 16 {
        return Err(Error::Parameter(format!(
            "annulus lake needs at least 16 cells per side, got {n}"
        )));
    }
    let h = 2.0 / n as f64;
    if !(r_inner > 0.0 && r_inner < 1.0 - 4.0 * h) {
        return Err(Error::Geometry(format!(
            "inner radius {r_inner} cannot be resolved: need 0 < r_inner < 1 - 4h = {}",
            1.0 - 4.0 * h
        )));
    }
    // The inner hole must contain at least one exterior cell to carry the label.
    if r_inner < h {
        return Err(Error::Geometry(format!(
            "inner radius {r_inner} is below the grid spacing {h}"
        )));
    }
    let m = n + 2 * PAD;
    let grid = GridSpec::new(m, m, -1.0 - PAD as f64 * h, -1.0 - PAD as f64 * h, h)?;
    let mut mask = vec![false; grid.len()];
    let mut depth = vec![0.0; grid.len()];
    for j in 0..m {
        for i in 0..m {
            let (x, y) = grid.center(i, j);
            let t = x * x + y * y;
            if t < 1.0 && t > r_inner * r_inner {
                let idx = grid.index(i, j);
                mask[idx] = true;
                depth[idx] = radial_depth(t, &depth_profile)?;
            }
        }
    }
    let open = vec![true; grid.len()];
    let lake = Lake::from_parts(
        grid,
        mask,
        depth,
        open.clone(),
        open,
        format!("annulus-{n}-{r_inner}"),
        LakeKind::Annulus { r_inner },
        2.0,
    )?;
    if lake.num_components != 2 {
        return Err(Error::Geometry(format!(
            "annulus mask produced {} boundary components instead of 2",
            lake.num_components
        )));
    }
    Ok(lake)
}

/// Square `[-1, 1]²` with a zero-width slit along `{(0, y) : y ≤ 0}`,
/// realized by severing cell faces, and `b(x₁, x₂) = |x₁| + x₂·χ(x₂ > 0)`.
pub fn build_slit_square_lake(n: usize) -> Result<Lake> {
    if n < 32 || n % 2 != 0 {
        return Err(Error::Parameter(format!(
            "slit square needs an even cell count of at least 32, got {n}"
        )));
    }
    let h = 2.0 / n as f64;
    let m = n + 2 * PAD;
    let grid = GridSpec::new(m, m, -1.0 - PAD as f64 * h, -1.0 - PAD as f64 * h, h)?;
    let mut mask = vec![false; grid.len()];
    let mut depth = vec![0.0; grid.len()];
    for j in 0..m {
        for i in 0..m {
            let (x, y) = grid.center(i, j);
            if x.abs() < 1.0 && y.abs() < 1.0 {
                let idx = grid.index(i, j);
                mask[idx] = true;
                depth[idx] = x.abs() + if y > 0.0 { y } else { 0.0 };
            }
        }
    }
    let mut open_x = vec![true; grid.len()];
    let open_y = vec![true; grid.len()];
    // Sever the faces crossing x = 0 below the midline. The slit sits between
    // the two central cell columns; rows with centers y < 0 are cut.
    let i_left = PAD + n / 2 - 1;
    for j in 0..m {
        let (_, y) = grid.center(i_left, j);
        if y < 0.0 {
            open_x[grid.index(i_left, j)] = false;
        }
    }
    Lake::from_parts(
        grid,
        mask,
        depth,
        open_x,
        open_y,
        format!("slit-square-{n}"),
        LakeKind::SlitSquare,
        2.0 * std::f64::consts::SQRT_2,
    )
}

/// One probe row of a continuity report.
#[derive(Debug, Clone)]
pub struct ContinuityProbe {
    pub point: Point,
    /// Quadrature of `g(·,y)^ℓ (|∇b|²/b)^{ℓ/2}` over wet cells.
    pub value: f64,
    /// Cells skipped because `b < B_FLOOR`.
    pub excluded_cells: usize,
}

/// Report of the continuous-lake proxy check.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub ell: f64,
    pub probes: Vec<ContinuityProbe>,
    /// Heuristic: set when probe values near the boundary dwarf interior ones.
    pub unbounded_hint: bool,
}

impl Lake {
    /// Numeric proxy for the continuous-lake condition: for each probe `y`,
    /// quadrature of `g(·,y)^ℓ (|∇b|²/b)^{ℓ/2} dm` on this grid. Finiteness
    /// here is evidence, not proof; the report flags growth as probes
    /// approach the boundary. Requires a disk or annulus lake (closed-form
    /// Green's function).
    pub fn continuity_check(&self, ell: f64, probe_points: &[Point]) -> Result<ContinuityReport> {
        if !(ell > 2.0) {
            return Err(Error::Parameter(format!(
                "continuity check requires an exponent above 2, got {ell}"
            )));
        }
        match self.kind {
            LakeKind::Disk | LakeKind::Annulus { .. } => {}
            _ => {
                return Err(Error::Experiment(
                    "continuity check needs a closed-form Green's function (disk or annulus)"
                        .into(),
                ))
            }
        }
        let h2 = self.grid.h * self.grid.h;
        let mut probes = Vec::with_capacity(probe_points.len());
        for &y in probe_points {
            let mut value = 0.0;
            let mut excluded = 0usize;
            for (idx, c) in self.interior_cells() {
                let b = self.depth[idx];
                if b < B_FLOOR {
                    excluded += 1;
                    continue;
                }
                let (i, j) = (idx % self.grid.nx, idx / self.grid.nx);
                let (gx, gy) = self.grad_b(i, j);
                let w = (gx * gx + gy * gy) / b;
                if w == 0.0 {
                    continue;
                }
                let dist2 = (c.0 - y.0).powi(2) + (c.1 - y.1).powi(2);
                let g = if dist2 < (0.5 * self.grid.h).powi(2) {
                    crate::green::lake_green_self_term(self, y)
                } else {
                    crate::green::lake_green(self, c, y)?
                };
                if g > 0.0 {
                    value += g.powf(ell) * w.powf(0.5 * ell) * h2;
                }
            }
            probes.push(ContinuityProbe {
                point: y,
                value,
                excluded_cells: excluded,
            });
        }
        // Growth heuristic: compare probes close to the boundary with the rest.
        let near: Vec<f64> = probes
            .iter()
            .filter(|p| self.distance_to_rim(p.point) < 0.1)
            .map(|p| p.value)
            .collect();
        let far: Vec<f64> = probes
            .iter()
            .filter(|p| self.distance_to_rim(p.point) >= 0.1)
            .map(|p| p.value)
            .collect();
        let unbounded_hint = match (near.iter().cloned().fold(0.0, f64::max), median(&far)) {
            (n, Some(f)) if f > 0.0 => n > 10.0 * f,
            (n, _) => n > 0.0 && far.is_empty() && n.is_infinite(),
        };
        Ok(ContinuityReport {
            ell,
            probes,
            unbounded_hint,
        })
    }

    /// Distance from a point to the analytic rim for disk/annulus lakes;
    /// for other kinds, distance to the nearest exterior cell center.
    pub fn distance_to_rim(&self, p: Point) -> f64 {
        let r = (p.0 * p.0 + p.1 * p.1).sqrt();
        match self.kind {
            LakeKind::Disk => 1.0 - r,
            LakeKind::Annulus { r_inner } => (1.0 - r).min(r - r_inner),
            _ => {
                let mut best = f64::INFINITY;
                for (idx, &m) in self.mask.iter().enumerate() {
                    if !m {
                        let (i, j) = (idx % self.grid.nx, idx / self.grid.nx);
                        let c = self.grid.center(i, j);
                        let d = ((c.0 - p.0).powi(2) + (c.1 - p.1).powi(2)).sqrt();
                        best = best.min(d);
                    }
                }
                best
            }
        }
    }
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Some(v[v.len() / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub fn parabolic(t: f64) -> f64 {
        2.0 - 4.0 * (t - 0.5).powi(2)
    }

    #[test]
    fn disk_parabolic_depth_values() {
        let lake = build_disk_lake(64, parabolic).unwrap();
        // cell closest to the center
        let (i, j) = lake.grid.cell_of((0.0, 0.0)).unwrap();
        let b0 = lake.depth[lake.grid.index(i, j)];
        assert!((b0 - 1.0).abs() < 5e-3, "b at center = {b0}");
        // cell closest to the depth maximum r² = 0.5
        let r = 0.5_f64.sqrt();
        let (i, j) = lake.grid.cell_of((r, 0.0)).unwrap();
        let bm = lake.depth[lake.grid.index(i, j)];
        assert!((bm - 2.0).abs() < 1e-2, "b at r²=0.5 = {bm}");
    }

    #[test]
    fn disk_constant_depth() {
        let lake = build_disk_lake(16, |_| 1.0).unwrap();
        for (idx, _) in lake.interior_cells() {
            assert_eq!(lake.depth[idx], 1.0);
        }
        assert_eq!(lake.num_components, 1);
    }

    #[test]
    fn disk_linear_shore_positive_inside() {
        let lake = build_disk_lake(32, |t| 1.0 - t).unwrap();
        for (idx, (x, y)) in lake.interior_cells() {
            let b = lake.depth[idx];
            assert!(b > 0.0, "b = {b} at ({x}, {y})");
            assert_relative_eq!(b, 1.0 - (x * x + y * y), epsilon = 1e-14);
        }
    }

    #[test]
    fn negative_profile_rejected() {
        let err = build_disk_lake(32, |t| 0.5 - t).unwrap_err();
        assert!(matches!(err, Error::InvalidDepth { .. }));
    }

    #[test]
    fn annulus_labels_and_area() {
        let lake = build_annulus_lake(64, 0.4, |_| 1.0).unwrap();
        assert_eq!(lake.num_components, 2);
        let labels: std::collections::BTreeSet<i16> = lake
            .boundary_label
            .iter()
            .copied()
            .filter(|&l| l >= 0)
            .collect();
        assert_eq!(labels.into_iter().collect::<Vec<_>>(), vec![0, 1]);
        let area = lake.mu_total();
        let exact = std::f64::consts::PI * (1.0 - 0.16);
        assert!(
            (area - exact).abs() / exact < 0.02,
            "area {area} vs {exact}"
        );
    }

    #[test]
    fn annulus_unresolvable_gap() {
        let err = build_annulus_lake(16, 0.9, |_| 1.0).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn slit_square_depth_formula() {
        let lake = build_slit_square_lake(64).unwrap();
        for (p, want) in [
            ((0.97, -0.97), 0.97),
            ((-0.97, -0.97), 0.97),
            ((0.02, 0.97), 0.99),
            ((0.5, -0.5), 0.5),
        ] {
            let (i, j) = lake.grid.cell_of(p).unwrap();
            let b = lake.depth[lake.grid.index(i, j)];
            let h = lake.grid.h;
            assert!(
                (b - want).abs() <= 1.5 * h,
                "b({p:?}) = {b}, expected about {want}"
            );
        }
        // b tends to 0 approaching the slit from the side
        let (i, j) = lake.grid.cell_of((lake.grid.h * 0.4, -0.5)).unwrap();
        let b = lake.depth[lake.grid.index(i, j)];
        assert!(b < lake.grid.h, "b near slit = {b}");
    }

    #[test]
    fn slit_square_severed_faces() {
        let n = 32;
        let lake = build_slit_square_lake(n).unwrap();
        let i_left = PAD + n / 2 - 1;
        for j in 0..lake.grid.ny {
            let (_, y) = lake.grid.center(i_left, j);
            let connected = lake.connected_x(i_left, j);
            if y < 0.0 && y > -1.0 {
                assert!(!connected, "face at y = {y} should be severed");
            } else if y > 0.0 && y < 1.0 {
                assert!(connected, "face at y = {y} should be open");
            }
        }
    }

    #[test]
    fn mu_integral_disk_area() {
        let lake = build_disk_lake(128, |_| 1.0).unwrap();
        let one = ScalarField::constant(&lake, 1.0);
        let area = lake.mu_integral(&one).unwrap();
        assert!(
            (area - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.01,
            "area {area}"
        );
    }

    #[test]
    fn mu_integral_zero_field() {
        let lake = build_disk_lake(16, |_| 1.0).unwrap();
        let zero = ScalarField::zeros(&lake);
        assert_eq!(lake.mu_integral(&zero).unwrap(), 0.0);
    }

    /// Oracle: μ(disk) = π ∫₀¹ P(t) dt by 1-D midpoint quadrature.
    #[test]
    fn mu_integral_parabolic_mass() {
        let lake = build_disk_lake(128, parabolic).unwrap();
        let one = ScalarField::constant(&lake, 1.0);
        let mass = lake.mu_integral(&one).unwrap();
        let m = 100_000;
        let int_p: f64 = (0..m)
            .map(|k| parabolic((k as f64 + 0.5) / m as f64) / m as f64)
            .sum();
        let exact = std::f64::consts::PI * int_p;
        assert_relative_eq!(int_p, 5.0 / 3.0, epsilon = 1e-9);
        assert!(
            (mass - exact).abs() / exact < 0.01,
            "mass {mass} vs {exact}"
        );
    }

    #[test]
    fn mu_integral_shape_mismatch() {
        let lake = build_disk_lake(16, |_| 1.0).unwrap();
        let other = build_disk_lake(32, |_| 1.0).unwrap();
        let f = ScalarField::constant(&other, 1.0);
        assert!(matches!(
            lake.mu_integral(&f),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn refinement_of_disk_area_is_first_order_or_better() {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let lake = build_disk_lake(n, |_| 1.0).unwrap();
                (lake.mu_total() - std::f64::consts::PI).abs()
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "errors {errs:?}");
        assert!(errs[0] / errs[1] > 1.8, "ratio {}", errs[0] / errs[1]);
    }

    #[test]
    fn continuity_check_flat_disk_is_zero() {
        let lake = build_disk_lake(32, |_| 1.0).unwrap();
        let probes = [(0.0, 0.0), (0.3, 0.2), (0.6, -0.1)];
        let report = lake.continuity_check(3.0, &probes).unwrap();
        for p in &report.probes {
            assert_eq!(p.value, 0.0);
        }
        assert!(!report.unbounded_hint);
    }

    #[test]
    fn continuity_check_parabolic_bounded() {
        let lake = build_disk_lake(48, parabolic).unwrap();
        let probes: Vec<Point> = (0..10).map(|k| (0.09 * k as f64, 0.0)).collect();
        let report = lake.continuity_check(3.0, &probes).unwrap();
        for p in &report.probes {
            assert!(p.value.is_finite() && p.value >= 0.0);
        }
        assert!(!report.unbounded_hint);
    }

    #[test]
    fn continuity_check_degenerate_shore_bounded_under_refinement() {
        // b = 1 - |x|² vanishes at the rim; the quadrature stays bounded as
        // the grid refines (Hardy-type integrand).
        let values: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let lake = build_disk_lake(n, |t| 1.0 - t).unwrap();
                let report = lake.continuity_check(3.0, &[(0.2, 0.1)]).unwrap();
                report.probes[0].value
            })
            .collect();
        assert!(values.iter().all(|v| v.is_finite()));
        assert!(
            values[1] < 2.0 * values[0] + 1.0,
            "refinement blow-up: {values:?}"
        );
    }

    #[test]
    fn continuity_check_rejects_small_exponent() {
        let lake = build_disk_lake(16, |_| 1.0).unwrap();
        assert!(matches!(
            lake.continuity_check(2.0, &[(0.0, 0.0)]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn field_export_is_xyv_triples() {
        let lake = build_disk_lake(16, |_| 1.0).unwrap();
        let f = ScalarField::from_fn(&lake, |x, y| x + 2.0 * y);
        let mut buf = Vec::new();
        lake.write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), lake.interior_count());
        for line in text.lines() {
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse().unwrap())
                .collect();
            assert_eq!(cols.len(), 3);
            assert!((cols[0] + 2.0 * cols[1] - cols[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_labels_partition_boundary() {
        for lake in [
            build_disk_lake(32, |_| 1.0).unwrap(),
            build_annulus_lake(32, 0.4, |_| 1.0).unwrap(),
        ] {
            for (idx, &label) in lake.boundary_label.iter().enumerate() {
                if label >= 0 {
                    assert!(!lake.mask[idx]);
                    assert!((label as usize) < lake.num_components);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// mu_integral is linear and monotone.
        #[test]
        fn mu_integral_linear_monotone(seed in 0u64..1000, alpha in -3.0f64..3.0) {
            use rand::{Rng, SeedableRng};
            let lake = build_disk_lake(16, |t| 1.0 + t).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_fn(&lake, |_, _| rng.random_range(-1.0..1.0));
            let g = ScalarField::from_fn(&lake, |_, _| rng.random_range(0.0..1.0));
            let lhs = lake.mu_integral(&f.add_scaled(&g, alpha)).unwrap();
            let rhs = lake.mu_integral(&f).unwrap() + alpha * lake.mu_integral(&g).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
            prop_assert!(lake.mu_integral(&g).unwrap() >= 0.0);
        }
    }
}
