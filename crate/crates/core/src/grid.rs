//! Uniform node-centred grids, nodal fields, boundary specifications and
//! second-order finite-difference stencils in two and three dimensions.
//!
//! Nodes are numbered x-fastest: `n = i + nx * (j + ny * k)`. Vector fields
//! store their components one after the other (`values[c * N + n]`).

use crate::parallel;
use crate::{Error, Real, Result};

/// Uniform node-centred lattice on `[0, L_x] x [0, L_y] (x [0, L_z])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    ndim: usize,
    dims: [usize; 3],
    lengths: [f64; 3],
    spacing: [f64; 3],
}

impl Grid {
    /// `dims` and `lengths` must both have two or three entries.
    pub fn new(dims: &[usize], lengths: &[f64]) -> Result<Self> {
        let ndim = dims.len();
        if !(2..=3).contains(&ndim) {
            return Err(Error::InvalidGrid(format!(
                "expected 2 or 3 axes, got {ndim}"
            )));
        }
        if lengths.len() != ndim {
            return Err(Error::InvalidGrid(format!(
                "{ndim} node counts but {} lengths",
                lengths.len()
            )));
        }
        let mut g = Grid {
            ndim,
            dims: [1; 3],
            lengths: [1.0; 3],
            spacing: [1.0; 3],
        };
        for a in 0..ndim {
            if dims[a] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} nodes; at least 3 are required",
                    dims[a]
                )));
            }
            if !(lengths[a].is_finite() && lengths[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} length must be positive, got {}",
                    lengths[a]
                )));
            }
            g.dims[a] = dims[a];
            g.lengths[a] = lengths[a];
            g.spacing[a] = lengths[a] / (dims[a] - 1) as f64;
        }
        Ok(g)
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn new_3d(dims: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        Self::new(&dims, &lengths)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    /// Node counts padded to three axes (unused axes have one node).
    pub fn dims3(&self) -> [usize; 3] {
        self.dims
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.ndim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacing[..self.ndim]
    }

    /// Smallest spacing over all axes; the reference length for time steps.
    pub fn min_spacing(&self) -> f64 {
        self.spacings().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.dims[..axis].iter().product()
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    #[inline]
    pub fn ijk(&self, n: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [n % nx, (n / nx) % ny, n / (nx * ny)]
    }

    pub fn coords(&self, n: usize) -> [f64; 3] {
        let ijk = self.ijk(n);
        let mut x = [0.0; 3];
        for a in 0..self.ndim {
            x[a] = ijk[a] as f64 * self.spacing[a];
        }
        x
    }

    /// Lumped control volume of a node: half cells on faces, quarter cells
    /// on 2D corners and so on. The volumes sum to the domain volume.
    pub fn cell_volume(&self, n: usize) -> f64 {
        let ijk = self.ijk(n);
        (0..self.ndim)
            .map(|a| {
                let edge = ijk[a] == 0 || ijk[a] + 1 == self.dims[a];
                if edge {
                    0.5 * self.spacing[a]
                } else {
                    self.spacing[a]
                }
            })
            .product()
    }

    pub fn cell_volumes(&self) -> Vec<f64> {
        (0..self.node_count()).map(|n| self.cell_volume(n)).collect()
    }

    pub fn domain_volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> {
        let ndim = self.ndim;
        (0..2 * ndim).map(Face::from_index)
    }

    pub fn on_face(&self, n: usize, face: Face) -> bool {
        let i = self.ijk(n)[face.axis];
        if face.upper {
            i + 1 == self.dims[face.axis]
        } else {
            i == 0
        }
    }

    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&n| self.on_face(n, face))
            .collect()
    }

    /// Node closest to a physical point (clamped into the domain).
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        let mut ijk = [0usize; 3];
        for a in 0..self.ndim {
            let x = point.get(a).copied().unwrap_or(0.0);
            let i = (x / self.spacing[a]).round();
            ijk[a] = i.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
        }
        self.index(ijk)
    }

    /// Nodes whose coordinates lie in the closed box `[lo, hi]`, with a small
    /// tolerance so that boxes drawn on grid lines include their edges.
    pub fn nodes_in_box(&self, lo: &[f64], hi: &[f64]) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&n| {
                let x = self.coords(n);
                (0..self.ndim).all(|a| {
                    let tol = 1e-9 * self.spacing[a];
                    x[a] >= lo[a] - tol && x[a] <= hi[a] + tol
                })
            })
            .collect()
    }
}

/// One face of the bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub upper: bool,
}

impl Face {
    pub const NAMES: [&'static str; 6] = ["x_min", "x_max", "y_min", "y_max", "z_min", "z_max"];

    pub fn from_index(i: usize) -> Self {
        Face {
            axis: i / 2,
            upper: i % 2 == 1,
        }
    }

    pub fn index(self) -> usize {
        2 * self.axis + self.upper as usize
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self.index()]
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::NAMES
            .iter()
            .position(|&s| s == name)
            .map(Face::from_index)
    }
}

/// Nodal values on a grid; scalar (one component) or vector (`ndim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<R> {
    grid: Grid,
    components: usize,
    values: Vec<R>,
}

impl<R: Real> Field<R> {
    pub fn constant(grid: Grid, components: usize, value: R) -> Self {
        Field {
            grid,
            components,
            values: vec![value; grid.node_count() * components],
        }
    }

    pub fn zeros(grid: Grid, components: usize) -> Self {
        Self::constant(grid, components, R::zero())
    }

    pub fn scalar(grid: Grid, value: R) -> Self {
        Self::constant(grid, 1, value)
    }

    /// Scalar field sampled from a function of the node coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|n| R::lit(f(grid.coords(n))))
            .collect();
        Field {
            grid,
            components: 1,
            values,
        }
    }

    /// Vector field sampled component by component.
    pub fn from_fn_vector(grid: Grid, components: usize, f: impl Fn([f64; 3], usize) -> f64) -> Self {
        let n = grid.node_count();
        let mut values = Vec::with_capacity(n * components);
        for c in 0..components {
            values.extend((0..n).map(|i| R::lit(f(grid.coords(i), c))));
        }
        Field {
            grid,
            components,
            values,
        }
    }

    pub fn from_values(grid: Grid, components: usize, values: Vec<R>) -> Result<Self> {
        let expected = grid.node_count() * components;
        if values.len() != expected {
            return Err(Error::CountMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Field {
            grid,
            components,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [R] {
        &mut self.values
    }

    pub(crate) fn storage_mut(&mut self) -> &mut Vec<R> {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<R> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[R] {
        let n = self.node_count();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [R] {
        let n = self.node_count();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> R {
        self.values
            .iter()
            .fold(R::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Field {
            grid: self.grid,
            components: self.components,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Max-norm of `self - other`.
    pub fn max_diff(&self, other: &Self) -> R {
        self.values
            .iter()
            .zip(&other.values)
            .fold(R::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn same_grid(&self, other: &Field<R>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn expect_components(&self, expected: usize) -> Result<()> {
        if self.components != expected {
            return Err(Error::ComponentMismatch {
                expected,
                actual: self.components,
            });
        }
        Ok(())
    }
}

/// Condition imposed on one face of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceCondition {
    /// Every component fixed to the value.
    Dirichlet(f64),
    /// Zero normal flux through mirrored ghost values (scalar fields).
    NeumannZero,
    /// Zero traction (vector fields).
    TractionFree,
    /// The given displacement component is fixed to zero; the rest are free.
    Roller(usize),
}

/// Constraint on one node, overriding the face conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConstraint {
    pub node: usize,
    /// `None` constrains every component.
    pub component: Option<usize>,
    pub value: f64,
}

/// Boundary conditions: one condition per face plus node-level overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    faces: Vec<FaceCondition>,
    overrides: Vec<NodeConstraint>,
}

impl BoundarySpec {
    /// Same condition on all `2 * ndim` faces.
    pub fn uniform(ndim: usize, condition: FaceCondition) -> Self {
        BoundarySpec {
            faces: vec![condition; 2 * ndim],
            overrides: Vec::new(),
        }
    }

    /// Faces in the order x_min, x_max, y_min, y_max[, z_min, z_max].
    pub fn new(faces: Vec<FaceCondition>, overrides: Vec<NodeConstraint>) -> Result<Self> {
        if faces.len() != 4 && faces.len() != 6 {
            return Err(Error::InvalidBoundary(format!(
                "need one condition per face (4 or 6), got {}",
                faces.len()
            )));
        }
        Ok(BoundarySpec { faces, overrides })
    }

    pub fn with_face(mut self, face: Face, condition: FaceCondition) -> Self {
        self.faces[face.index()] = condition;
        self
    }

    pub fn with_constraint(mut self, constraint: NodeConstraint) -> Self {
        self.overrides.push(constraint);
        self
    }

    pub fn face(&self, face: Face) -> FaceCondition {
        self.faces[face.index()]
    }

    pub fn faces(&self) -> &[FaceCondition] {
        &self.faces
    }

    pub fn overrides(&self) -> &[NodeConstraint] {
        &self.overrides
    }

    /// Resolves the specification into fixed entries of a field with the
    /// given number of components.
    pub fn constraints<R: Real>(&self, grid: &Grid, components: usize) -> Result<Constraints<R>> {
        if self.faces.len() != 2 * grid.ndim() {
            return Err(Error::InvalidBoundary(format!(
                "{} face conditions for a {}D grid",
                self.faces.len(),
                grid.ndim()
            )));
        }
        let n = grid.node_count();
        let mut fixed: Vec<Option<R>> = vec![None; n * components];
        for face in grid.faces() {
            let cond = self.face(face);
            match cond {
                FaceCondition::NeumannZero if components != 1 => {
                    return Err(Error::InvalidBoundary(format!(
                        "{}: NeumannZero applies to scalar fields",
                        face.name()
                    )))
                }
                FaceCondition::TractionFree | FaceCondition::Roller(_) if components == 1 => {
                    return Err(Error::InvalidBoundary(format!(
                        "{}: {cond:?} applies to vector fields",
                        face.name()
                    )))
                }
                FaceCondition::Roller(c) if c >= components => {
                    return Err(Error::InvalidBoundary(format!(
                        "{}: roller component {c} out of range",
                        face.name()
                    )))
                }
                _ => {}
            }
            for node in grid.face_nodes(face) {
                match cond {
                    FaceCondition::Dirichlet(v) => {
                        for c in 0..components {
                            fixed[c * n + node] = Some(R::lit(v));
                        }
                    }
                    FaceCondition::Roller(c) => fixed[c * n + node] = Some(R::zero()),
                    FaceCondition::NeumannZero | FaceCondition::TractionFree => {}
                }
            }
        }
        for oc in &self.overrides {
            if oc.node >= n {
                return Err(Error::InvalidBoundary(format!(
                    "node override {} outside grid of {n} nodes",
                    oc.node
                )));
            }
            match oc.component {
                Some(c) if c >= components => {
                    return Err(Error::InvalidBoundary(format!(
                        "node override component {c} out of range"
                    )))
                }
                Some(c) => fixed[c * n + oc.node] = Some(R::lit(oc.value)),
                None => {
                    for c in 0..components {
                        fixed[c * n + oc.node] = Some(R::lit(oc.value));
                    }
                }
            }
        }
        let entries = fixed
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect();
        Ok(Constraints {
            entries,
            mask: fixed.iter().map(Option::is_some).collect(),
        })
    }
}

/// Fixed entries of a field, resolved from a [`BoundarySpec`].
#[derive(Debug, Clone)]
pub struct Constraints<R> {
    entries: Vec<(usize, R)>,
    mask: Vec<bool>,
}

impl<R: Real> Constraints<R> {
    pub fn none(len: usize) -> Self {
        Constraints {
            entries: Vec::new(),
            mask: vec![false; len],
        }
    }

    pub fn entries(&self) -> &[(usize, R)] {
        &self.entries
    }

    pub fn is_fixed(&self, entry: usize) -> bool {
        self.mask[entry]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn apply(&self, values: &mut [R]) {
        for &(i, v) in &self.entries {
            values[i] = v;
        }
    }

    pub fn zero(&self, values: &mut [R]) {
        for &(i, _) in &self.entries {
            values[i] = R::zero();
        }
    }
}

/// Overwrites constrained entries with their prescribed values.
pub fn apply_dirichlet<R: Real>(f: &Field<R>, bc: &BoundarySpec) -> Result<Field<R>> {
    let cons = bc.constraints::<R>(f.grid(), f.components())?;
    let mut out = f.clone();
    cons.apply(out.values_mut());
    Ok(out)
}

/// Second-order derivative of `values` along one axis: central in the
/// interior, one-sided three-point at the two ends.
pub fn axis_derivative<R: Real>(grid: &Grid, values: &[R], axis: usize, out: &mut [R]) {
    let na = grid.dims3()[axis];
    let s = grid.stride(axis);
    let inv2h = R::lit(0.5 / grid.spacing(axis));
    let three = R::lit(3.0);
    let four = R::lit(4.0);
    parallel::fill_indexed(out, |n| {
        let i = (n / s) % na;
        if i == 0 {
            (-three * values[n] + four * values[n + s] - values[n + 2 * s]) * inv2h
        } else if i + 1 == na {
            (three * values[n] - four * values[n - s] + values[n - 2 * s]) * inv2h
        } else {
            (values[n + s] - values[n - s]) * inv2h
        }
    });
}

pub fn gradient<R: Real>(f: &Field<R>) -> Result<Field<R>> {
    f.expect_components(1)?;
    let grid = *f.grid();
    let mut out = Field::zeros(grid, grid.ndim());
    let n = grid.node_count();
    for a in 0..grid.ndim() {
        axis_derivative(&grid, f.values(), a, &mut out.values_mut()[a * n..(a + 1) * n]);
    }
    Ok(out)
}

pub fn divergence<R: Real>(v: &Field<R>) -> Result<Field<R>> {
    let grid = *v.grid();
    v.expect_components(grid.ndim())?;
    let n = grid.node_count();
    let mut out = Field::zeros(grid, 1);
    let mut tmp = vec![R::zero(); n];
    for a in 0..grid.ndim() {
        axis_derivative(&grid, v.component(a), a, &mut tmp);
        for (o, t) in out.values_mut().iter_mut().zip(&tmp) {
            *o += *t;
        }
    }
    Ok(out)
}

/// Flux-form operator `u -> div(k grad u)` with face coefficients equal to
/// the arithmetic mean of the two adjacent nodes and mirrored ghost nodes on
/// every face (zero normal flux).
#[derive(Debug, Clone)]
pub struct DiffusionStencil<R> {
    grid: Grid,
    /// `coef[a][n]` couples node `n` with `n + stride(a)`, already divided by `h_a^2`.
    coef: [Vec<R>; 3],
}

impl<R: Real> DiffusionStencil<R> {
    /// Constant coefficient (a scaled Laplacian).
    pub fn uniform(grid: Grid, k: R) -> Self {
        let n = grid.node_count();
        let coef = std::array::from_fn(|a| {
            if a < grid.ndim() {
                vec![k / R::lit(grid.spacing(a) * grid.spacing(a)); n]
            } else {
                Vec::new()
            }
        });
        DiffusionStencil { grid, coef }
    }

    pub fn from_conductivity(kappa: &Field<R>) -> Result<Self> {
        kappa.expect_components(1)?;
        if let Some((node, v)) = kappa
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > R::zero()) || !v.is_finite())
        {
            return Err(Error::NonPositive {
                name: "conductivity",
                node,
                value: v.as_f64(),
            });
        }
        let grid = *kappa.grid();
        let k = kappa.values();
        let n = grid.node_count();
        let dims = grid.dims3();
        let half = R::lit(0.5);
        let coef = std::array::from_fn(|a| {
            if a >= grid.ndim() {
                return Vec::new();
            }
            let s = grid.stride(a);
            let inv_h2 = R::lit(1.0 / (grid.spacing(a) * grid.spacing(a)));
            (0..n)
                .map(|i| {
                    if (i / s) % dims[a] + 1 < dims[a] {
                        half * (k[i] + k[i + s]) * inv_h2
                    } else {
                        R::zero()
                    }
                })
                .collect()
        });
        Ok(DiffusionStencil { grid, coef })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Writes the operator applied to `f` into `out` (both of length `N`).
    pub fn apply(&self, f: &[R], out: &mut [R]) {
        let nx = self.grid.dims3()[0];
        parallel::for_each_chunk(out, nx, |row, out_row| self.apply_row(row, f, out_row));
    }

    fn apply_row(&self, row: usize, f: &[R], out: &mut [R]) {
        let [nx, ny, nz] = self.grid.dims3();
        let j = row % ny;
        let k = row / ny;
        let base = row * nx;
        let two = R::lit(2.0);

        let fr = &f[base..base + nx];
        let cx = &self.coef[0][base..base + nx];

        // Neighbouring rows along y (mirrored at the ends).
        let ys = nx;
        let (ylo, cylo) = if j > 0 { (base - ys, base - ys) } else { (base + ys, base) };
        let (yhi, cyhi) = if j + 1 < ny { (base + ys, base) } else { (base - ys, base - ys) };
        let fylo = &f[ylo..ylo + nx];
        let fyhi = &f[yhi..yhi + nx];
        let cylo = &self.coef[1][cylo..cylo + nx];
        let cyhi = &self.coef[1][cyhi..cyhi + nx];

        let xpart = |i: usize, fc: R| -> R {
            if i == 0 {
                two * cx[0] * (fr[1] - fc)
            } else if i + 1 == nx {
                two * cx[nx - 2] * (fr[nx - 2] - fc)
            } else {
                cx[i - 1] * (fr[i - 1] - fc) + cx[i] * (fr[i + 1] - fc)
            }
        };

        if nz > 1 {
            let zs = nx * ny;
            let (zlo, czlo) = if k > 0 { (base - zs, base - zs) } else { (base + zs, base) };
            let (zhi, czhi) = if k + 1 < nz { (base + zs, base) } else { (base - zs, base - zs) };
            let fzlo = &f[zlo..zlo + nx];
            let fzhi = &f[zhi..zhi + nx];
            let czlo = &self.coef[2][czlo..czlo + nx];
            let czhi = &self.coef[2][czhi..czhi + nx];
            for i in 0..nx {
                let fc = fr[i];
                out[i] = xpart(i, fc)
                    + cylo[i] * (fylo[i] - fc)
                    + cyhi[i] * (fyhi[i] - fc)
                    + czlo[i] * (fzlo[i] - fc)
                    + czhi[i] * (fzhi[i] - fc);
            }
        } else {
            for i in 0..nx {
                let fc = fr[i];
                out[i] = xpart(i, fc) + cylo[i] * (fylo[i] - fc) + cyhi[i] * (fyhi[i] - fc);
            }
        }
    }
}

/// `div(kappa grad f)` in flux form. Mirrored ghosts give zero normal flux on
/// non-Dirichlet faces; nodes fixed by a Dirichlet condition return 0.
pub fn variable_diffusion<R: Real>(
    f: &Field<R>,
    kappa: &Field<R>,
    bc: &BoundarySpec,
) -> Result<Field<R>> {
    f.expect_components(1)?;
    f.same_grid(kappa)?;
    let stencil = DiffusionStencil::from_conductivity(kappa)?;
    let cons = bc.constraints::<R>(f.grid(), 1)?;
    let mut out = Field::zeros(*f.grid(), 1);
    stencil.apply(f.values(), out.values_mut());
    cons.zero(out.values_mut());
    Ok(out)
}

/// Laplacian with mirrored ghosts on every face.
pub fn laplacian<R: Real>(f: &Field<R>) -> Result<Field<R>> {
    f.expect_components(1)?;
    let mut out = Field::zeros(*f.grid(), 1);
    DiffusionStencil::uniform(*f.grid(), R::one()).apply(f.values(), out.values_mut());
    Ok(out)
}
