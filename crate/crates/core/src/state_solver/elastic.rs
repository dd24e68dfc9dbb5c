//! Isotropic linear elasticity, plane strain in 2D.
//!
//! The stencil comes from the strain energy of bilinear (trilinear) cells
//! integrated with 2^d Gauss points and divided by the lumped nodal volume, so
//! that at interior nodes it is a second-order difference approximation of
//! `div(sigma)`. Faces without a Dirichlet or roller condition carry zero
//! traction, which falls out of the energy form without ghost nodes.

use crate::grid::{BoundarySpec, Constraints, Field, Grid};
use crate::parallel;
use crate::{Error, Real, Result};

use super::StateOperator;

/// Nodal Lamé parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticMaterialField<R> {
    pub lambda: Field<R>,
    pub mu: Field<R>,
}

/// `(lambda, mu)` for Young's modulus `e` and Poisson ratio `nu`.
pub fn lame(e: f64, nu: f64) -> (f64, f64) {
    (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
}

impl<R: Real> ElasticMaterialField<R> {
    pub fn from_youngs(youngs: &Field<R>, nu: f64) -> Result<Self> {
        youngs.expect_components(1)?;
        if !(nu > -1.0 && nu < 0.5) {
            return Err(Error::param("poisson_ratio", format!("must lie in (-1, 0.5), got {nu}")));
        }
        let (cl, cm) = lame(1.0, nu);
        let (cl, cm) = (R::lit(cl), R::lit(cm));
        let mat = ElasticMaterialField {
            lambda: youngs.map(|e| cl * e),
            mu: youngs.map(|e| cm * e),
        };
        mat.validate()?;
        Ok(mat)
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda.same_grid(&self.mu)?;
        for (name, f) in [("lambda", &self.lambda), ("mu", &self.mu)] {
            if let Some((node, v)) = f
                .values()
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v > R::zero()) || !v.is_finite())
            {
                return Err(Error::NonPositive {
                    name,
                    node,
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Residual `div(sigma(u)) - f` of the elasticity equation.
#[derive(Debug, Clone)]
pub struct ElasticOperator<R> {
    grid: Grid,
    /// Cell corners (2^d).
    corners: usize,
    /// Degrees of freedom per cell, `corners * d`.
    dofs: usize,
    /// Node offset of each corner from the cell origin.
    corner_offset: Vec<usize>,
    k_lambda: Vec<R>,
    k_mu: Vec<R>,
    /// Cell-averaged parameters, indexed by the cell's origin node.
    lambda_cell: Vec<R>,
    mu_cell: Vec<R>,
    inv_volume: Vec<R>,
    loads: Vec<R>,
    constraints: Constraints<R>,
}

impl<R: Real> ElasticOperator<R> {
    pub fn new(mat: &ElasticMaterialField<R>, loads: &Field<R>, bc: &BoundarySpec) -> Result<Self> {
        mat.validate()?;
        let grid = *mat.lambda.grid();
        let d = grid.ndim();
        mat.lambda.same_grid(loads)?;
        loads.expect_components(d)?;
        let constraints = bc.constraints(&grid, d)?;

        let corners = 1usize << d;
        let dofs = corners * d;
        let [nx, ny, _] = grid.dims3();
        let corner_offset: Vec<usize> = (0..corners)
            .map(|b| (b & 1) + nx * ((b >> 1) & 1) + nx * ny * ((b >> 2) & 1))
            .collect();
        let (kl, km) = reference_matrices(grid.spacings());

        let n = grid.node_count();
        let dims = grid.dims3();
        let inv_corners = R::lit(1.0 / corners as f64);
        let mut lambda_cell = vec![R::zero(); n];
        let mut mu_cell = vec![R::zero(); n];
        for origin in 0..n {
            let ijk = grid.ijk(origin);
            if (0..d).any(|a| ijk[a] + 1 >= dims[a]) {
                continue;
            }
            let mut l = [R::zero(); 8];
            let mut m = [R::zero(); 8];
            for (b, off) in corner_offset.iter().enumerate() {
                l[b] = mat.lambda.values()[origin + off];
                m[b] = mat.mu.values()[origin + off];
            }
            lambda_cell[origin] = corner_sum(&mut l[..corners]) * inv_corners;
            mu_cell[origin] = corner_sum(&mut m[..corners]) * inv_corners;
        }

        Ok(ElasticOperator {
            grid,
            corners,
            dofs,
            corner_offset,
            k_lambda: kl.into_iter().map(R::lit).collect(),
            k_mu: km.into_iter().map(R::lit).collect(),
            lambda_cell,
            mu_cell,
            inv_volume: (0..n).map(|i| R::lit(1.0 / grid.cell_volume(i))).collect(),
            loads: loads.values().to_vec(),
            constraints,
        })
    }

    /// `-(K u)` at one node and component: the internal nodal force.
    #[inline]
    fn internal_force(&self, state: &[R], node: usize, comp: usize) -> R {
        let d = self.grid.ndim();
        let n = self.grid.node_count();
        let dims = self.grid.dims3();
        let ijk = self.grid.ijk(node);
        let mut cell = [R::zero(); 8];
        let mut terms = [R::zero(); 8];
        'cells: for a in 0..self.corners {
            for axis in 0..d {
                let bit = (a >> axis) & 1;
                if ijk[axis] < bit || ijk[axis] - bit + 1 >= dims[axis] {
                    continue 'cells;
                }
            }
            let origin = node - self.corner_offset[a];
            let row = (a * d + comp) * self.dofs;
            let kl = &self.k_lambda[row..row + self.dofs];
            let km = &self.k_mu[row..row + self.dofs];
            let (mut sl, mut sm) = (R::zero(), R::zero());
            for q in 0..d {
                for b in 0..self.corners {
                    terms[b] = kl[b * d + q] * state[q * n + origin + self.corner_offset[b]];
                }
                sl += corner_sum(&mut terms[..self.corners]);
                for b in 0..self.corners {
                    terms[b] = km[b * d + q] * state[q * n + origin + self.corner_offset[b]];
                }
                sm += corner_sum(&mut terms[..self.corners]);
            }
            cell[a] = self.lambda_cell[origin] * sl + self.mu_cell[origin] * sm;
        }
        -corner_sum(&mut cell[..self.corners])
    }
}

/// Sums values indexed by corner bits pairwise, lowest bit first. The result
/// is bitwise unchanged when the two halves of any axis are swapped, which
/// keeps mirror-symmetric problems exactly symmetric.
#[inline]
fn corner_sum<R: Real>(v: &mut [R]) -> R {
    let mut stride = 1;
    while stride < v.len() {
        for i in (0..v.len()).step_by(2 * stride) {
            v[i] = v[i] + v[i + stride];
        }
        stride *= 2;
    }
    v[0]
}

impl<R: Real> StateOperator<R> for ElasticOperator<R> {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn components(&self) -> usize {
        self.grid.ndim()
    }

    fn constraints(&self) -> &Constraints<R> {
        &self.constraints
    }

    fn residual_into(&self, state: &[R], out: &mut [R]) {
        let n = self.grid.node_count();
        for (c, chunk) in out.chunks_mut(n).enumerate() {
            parallel::fill_indexed(chunk, |node| {
                self.internal_force(state, node, c) * self.inv_volume[node] - self.loads[c * n + node]
            });
        }
        self.constraints.zero(out);
    }
}

/// Reference stiffness matrices of one cell, split into the parts
/// proportional to `lambda` and to `mu`. Dof `(corner b, component q)` sits at
/// `b * d + q`; corner bits are (x, y, z) offsets.
fn reference_matrices(h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = h.len();
    let corners = 1usize << d;
    let m = corners * d;
    let mut kl = vec![0.0; m * m];
    let mut km = vec![0.0; m * m];
    let weight = h.iter().product::<f64>() / corners as f64;
    let off = 0.5 / 3f64.sqrt();

    let shape = |bit: usize, xi: f64| if bit == 1 { xi } else { 1.0 - xi };
    for g in 0..corners {
        let xi: Vec<f64> = (0..d)
            .map(|k| if (g >> k) & 1 == 1 { 0.5 + off } else { 0.5 - off })
            .collect();
        // grad[b][k] = d N_b / d x_k at this Gauss point
        let grad: Vec<Vec<f64>> = (0..corners)
            .map(|b| {
                (0..d)
                    .map(|k| {
                        let sign = if (b >> k) & 1 == 1 { 1.0 } else { -1.0 };
                        let rest: f64 = (0..d)
                            .filter(|&j| j != k)
                            .map(|j| shape((b >> j) & 1, xi[j]))
                            .product();
                        sign * rest / h[k]
                    })
                    .collect()
            })
            .collect();
        for a in 0..corners {
            for p in 0..d {
                for b in 0..corners {
                    let dot: f64 = (0..d).map(|k| grad[a][k] * grad[b][k]).sum();
                    for q in 0..d {
                        let r = (a * d + p) * m + b * d + q;
                        kl[r] += weight * grad[a][p] * grad[b][q];
                        let diag = if p == q { dot } else { 0.0 };
                        km[r] += weight * (diag + grad[a][q] * grad[b][p]);
                    }
                }
            }
        }
    }
    (mirror_average(&kl, d), mirror_average(&km, d))
}

/// Replaces every entry by the mean over its images under the axis
/// reflections of the cell, so reflected entries agree bit for bit.
fn mirror_average(k: &[f64], d: usize) -> Vec<f64> {
    let corners = 1usize << d;
    let m = corners * d;
    let mut out = vec![0.0; m * m];
    let mut images = [0.0; 8];
    for a in 0..corners {
        for p in 0..d {
            for b in 0..corners {
                for q in 0..d {
                    for (flip, img) in images.iter_mut().enumerate().take(corners) {
                        let sign = if ((flip >> p) & 1) ^ ((flip >> q) & 1) == 1 { -1.0 } else { 1.0 };
                        *img = sign * k[((a ^ flip) * d + p) * m + (b ^ flip) * d + q];
                    }
                    out[(a * d + p) * m + b * d + q] = corner_sum(&mut images[..corners]) / corners as f64;
                }
            }
        }
    }
    out
}

/// `div(sigma(u)) - loads` at every node, zero on constrained entries.
pub fn elasticity_residual<R: Real>(
    u: &Field<R>,
    mat: &ElasticMaterialField<R>,
    loads: &Field<R>,
    bc: &BoundarySpec,
) -> Result<Field<R>> {
    u.same_grid(&mat.lambda)?;
    u.expect_components(u.grid().ndim())?;
    let op = ElasticOperator::new(mat, loads, bc)?;
    Ok(op.residual(u))
}
