use serde::{Deserialize, Serialize};

use super::eigen::{lowest_generalized, EigenOptions};
use super::solve::{Cholesky, Multigrid, Solver};
use super::{Grid, Layout, Operator, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{CompactSet, Domain, Point};

/// Grids with more free nodes than this are solved by multigrid CG under
/// [`SolverChoice::Auto`] (a direct factorization would need several GB).
pub const DIRECT_MAX: usize = 1_500_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Direct,
    Multigrid,
}

/// A grid, its stiffness matrix and a solver for it.
pub struct Problem {
    pub grid: Grid,
    pub op: Operator,
    solver: Solver,
    /// Lumped mass per free node in units of `h²` (`None`: all ones).
    mass: Option<Vec<f64>>,
}

impl Problem {
    pub fn new(domain: &Domain, h: f64, layout: Layout, k: Option<&CompactSet>, choice: SolverChoice) -> Result<Self> {
        Self::from_grid(Grid::for_domain(domain, h, layout, k)?, choice)
    }

    pub fn from_grid(grid: Grid, choice: SolverChoice) -> Result<Self> {
        let op = grid.operator();
        if op.n == 0 {
            return Err(Error::Invalid("grid has no free nodes".into()));
        }
        let direct = match choice {
            SolverChoice::Direct => true,
            SolverChoice::Multigrid => false,
            SolverChoice::Auto => op.n <= DIRECT_MAX,
        };
        let solver = if direct {
            Solver::Direct(Cholesky::factor(&op)?)
        } else {
            Solver::Multigrid(Multigrid::new(&grid, &op)?)
        };
        Ok(Problem { grid, op, solver, mass: None })
    }

    /// Replaces the unit lumped mass by `weight(p)` at each free node `p`
    /// (e.g. `1/2` on a mirror boundary row).
    pub fn with_mass(mut self, weight: impl Fn(Point) -> f64) -> Self {
        let lat = self.grid.lattice;
        let w: Vec<f64> = self.grid.free_nodes().iter().map(|&p| weight(lat.point(p as usize))).collect();
        self.mass = Some(w);
        self
    }

    pub fn h(&self) -> f64 {
        self.grid.lattice.h
    }

    pub fn uses_direct_solver(&self) -> bool {
        self.solver.is_direct()
    }

    /// Discrete harmonic function with the given values on constrained nodes
    /// and the grid's boundary conditions elsewhere. `data` is indexed by box
    /// node; only constrained entries are read.
    pub fn solve_dirichlet(&self, data: &[f64]) -> Result<ScalarField> {
        let b = self.grid.rhs(data);
        let x = self.solver.solve(&self.op, &b)?;
        Ok(self.grid.assemble_field(&x, data))
    }

    pub fn energy(&self, field: &ScalarField) -> f64 {
        self.grid.energy(field)
    }

    /// `m` lowest eigenvalues of `−Δ_h` (ascending) with fields normalised by
    /// `h² Σ w v² = 1` (`w` the lumped mass) and signed positive at the node
    /// nearest `sign_point`.
    pub fn eigenpairs(&self, m: usize, opts: &EigenOptions, sign_point: Point) -> Result<Vec<(f64, ScalarField)>> {
        let Solver::Direct(chol) = &self.solver else {
            return Err(Error::Unsupported("eigenpairs need a direct factorization".into()));
        };
        let pairs = lowest_generalized(&self.op, self.mass.as_deref(), chol, m, opts)?;
        let h = self.h();
        let zero = vec![0.0; self.grid.lattice.len()];
        let mut out = Vec::with_capacity(m);
        for (mu, v) in pairs.values.iter().zip(&pairs.vectors) {
            let mut field = self.grid.assemble_field(v, &zero);
            // unit matrix norm → h² Σ w v² = 1
            field.scale(1.0 / h);
            fix_sign(&mut field, sign_point);
            out.push((mu / (h * h), field));
        }
        Ok(out)
    }
}

fn fix_sign(field: &mut ScalarField, p: Point) {
    let max = field.max_abs();
    let at = field.nearest_value(p).unwrap_or(0.0);
    let s = if at.abs() > 1e-8 * max {
        at.signum()
    } else {
        let (mut best, mut val) = (0.0f64, 0.0);
        for &v in &field.values {
            if v.abs() > best * (1.0 + 1e-9) {
                best = v.abs();
                val = v;
            }
        }
        val.signum()
    };
    if s < 0.0 {
        field.scale(-1.0);
    }
}
