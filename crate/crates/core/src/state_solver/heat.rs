use crate::grid::{BoundarySpec, Constraints, DiffusionStencil, Field, Grid};
use crate::{Real, Result};

use super::StateOperator;

/// Steady heat conduction `div(kappa grad T) + f = 0`.
///
/// Face conductivities are frozen at construction, so one operator serves
/// every pseudo-time step of a loop.
#[derive(Debug, Clone)]
pub struct HeatOperator<R> {
    stencil: DiffusionStencil<R>,
    source: Vec<R>,
    constraints: Constraints<R>,
}

impl<R: Real> HeatOperator<R> {
    pub fn new(kappa: &Field<R>, source: &Field<R>, bc: &BoundarySpec) -> Result<Self> {
        kappa.same_grid(source)?;
        source.expect_components(1)?;
        let stencil = DiffusionStencil::from_conductivity(kappa)?;
        let constraints = bc.constraints(kappa.grid(), 1)?;
        Ok(HeatOperator {
            stencil,
            source: source.values().to_vec(),
            constraints,
        })
    }
}

impl<R: Real> StateOperator<R> for HeatOperator<R> {
    fn grid(&self) -> &Grid {
        self.stencil.grid()
    }

    fn components(&self) -> usize {
        1
    }

    fn constraints(&self) -> &Constraints<R> {
        &self.constraints
    }

    fn residual_into(&self, state: &[R], out: &mut [R]) {
        self.stencil.apply(state, out);
        for (o, f) in out.iter_mut().zip(&self.source) {
            *o += *f;
        }
        self.constraints.zero(out);
    }
}

/// `div(kappa grad T) + f`, zero at Dirichlet nodes.
pub fn heat_residual<R: Real>(
    t: &Field<R>,
    kappa: &Field<R>,
    f: &Field<R>,
    bc: &BoundarySpec,
) -> Result<Field<R>> {
    t.same_grid(kappa)?;
    t.expect_components(1)?;
    let op = HeatOperator::new(kappa, f, bc)?;
    Ok(op.residual(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Face, FaceCondition};

    #[test]
    fn uniform_source_at_zero_temperature() {
        let g = Grid::new_2d(9, 9, 4.0, 4.0).unwrap();
        let bc = BoundarySpec::uniform(2, FaceCondition::NeumannZero)
            .with_face(Face::parse("x_min").unwrap(), FaceCondition::Dirichlet(0.0))
            .with_face(Face::parse("y_max").unwrap(), FaceCondition::Dirichlet(0.0));
        let t = Field::<f64>::zeros(g, 1);
        let k = Field::scalar(g, 1.0);
        let f = Field::scalar(g, 0.01);
        let r = heat_residual(&t, &k, &f, &bc).unwrap();
        let cons = bc.constraints::<f64>(&g, 1).unwrap();
        for n in 0..g.node_count() {
            let want = if cons.is_fixed(n) { 0.0 } else { 0.01 };
            assert_eq!(r.values()[n], want);
        }
    }

    #[test]
    fn insulated_constant_temperature_has_no_residual() {
        let g = Grid::new_3d([5, 4, 6], [1.0, 1.0, 1.0]).unwrap();
        let bc = BoundarySpec::uniform(3, FaceCondition::NeumannZero);
        let t = Field::<f64>::scalar(g, 2.0);
        let k = Field::from_fn(g, |x| 0.5 + x[2]);
        let f = Field::zeros(g, 1);
        assert!(heat_residual(&t, &k, &f, &bc).unwrap().max_abs() < 1e-12);
    }
}
