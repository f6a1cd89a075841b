//! Linear solvers for the stiffness matrix: sparse Cholesky, and conjugate
//! gradients preconditioned by a geometric V-cycle for grids too large to
//! factor.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::{dot, norm, Grid, Lattice, Operator};
use crate::error::{Error, Result};
use crate::par;

/// Relative residual required from every solve.
pub const SOLVE_TOL: f64 = 1e-10;

pub struct Cholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl Cholesky {
    pub fn factor(op: &Operator) -> Result<Self> {
        let mut trip = Vec::with_capacity(op.val.len() / 2 + op.n);
        for i in 0..op.n {
            for k in op.row_ptr[i]..op.row_ptr[i + 1] {
                let j = op.col[k] as usize;
                if j >= i {
                    // row i of a symmetric matrix = column i: (j, i) is lower
                    trip.push(Triplet::new(j, i, op.val[k]));
                }
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(op.n, op.n, &trip)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = a.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Cholesky { llt, n: op.n })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    /// Solves for several right-hand sides at once (columns).
    pub fn solve_many(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if cols.is_empty() {
            return Vec::new();
        }
        let mut m = Mat::<f64>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        self.llt.solve_in_place(m.as_mut());
        (0..cols.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect()
    }
}

struct Level {
    lattice: Lattice,
    /// Box index → free index (`u32::MAX` if inactive).
    free_index: Vec<u32>,
    /// Free index → box index.
    nodes: Vec<u32>,
    op: Operator,
    diag: Vec<f64>,
    colors: [Vec<u32>; 2],
}

impl Level {
    fn from_grid(grid: &Grid, op: Operator) -> Self {
        let lattice = grid.lattice;
        let mut free_index = vec![u32::MAX; lattice.len()];
        let nodes: Vec<u32> = grid.free_nodes().to_vec();
        for (f, &p) in nodes.iter().enumerate() {
            free_index[p as usize] = f as u32;
        }
        Self::finish(lattice, free_index, nodes, op)
    }

    fn finish(lattice: Lattice, free_index: Vec<u32>, nodes: Vec<u32>, op: Operator) -> Self {
        let diag = op.diagonal();
        let mut colors = [Vec::new(), Vec::new()];
        for (f, &p) in nodes.iter().enumerate() {
            let (i, j) = lattice.abs_ij(p as usize);
            colors[(i + j).rem_euclid(2) as usize].push(f as u32);
        }
        Level { lattice, free_index, nodes, op, diag, colors }
    }

    /// Rediscretized 5-point operator on the nodes `(2I, 2J)` of this level.
    fn coarsen(&self) -> Level {
        let f = &self.lattice;
        let i_lo = f.i0.div_euclid(2) + (f.i0.rem_euclid(2) != 0) as i64;
        let i_hi = (f.i0 + f.nx as i64 - 1).div_euclid(2);
        let j_lo = f.j0.div_euclid(2) + (f.j0.rem_euclid(2) != 0) as i64;
        let j_hi = (f.j0 + f.ny as i64 - 1).div_euclid(2);
        let lattice = Lattice {
            h: 2.0 * f.h,
            layout: f.layout,
            i0: i_lo,
            j0: j_lo,
            nx: (i_hi - i_lo + 1) as usize,
            ny: (j_hi - j_lo + 1) as usize,
        };
        let mut free_index = vec![u32::MAX; lattice.len()];
        let mut nodes = Vec::new();
        for idx in 0..lattice.len() {
            let (ci, cj) = lattice.abs_ij(idx);
            if let Some(fi) = f.node_at(2 * ci, 2 * cj) {
                if self.free_index[fi] != u32::MAX {
                    free_index[idx] = nodes.len() as u32;
                    nodes.push(idx as u32);
                }
            }
        }
        let n = nodes.len();
        let mut row_ptr = vec![0usize];
        let mut col = Vec::with_capacity(5 * n);
        let mut val = Vec::with_capacity(5 * n);
        for (r, &p) in nodes.iter().enumerate() {
            let mut row = vec![(r as u32, 4.0)];
            for dir in 0..4 {
                if let Some(q) = lattice.neighbor(p as usize, dir) {
                    if free_index[q] != u32::MAX {
                        row.push((free_index[q], -1.0));
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Self::finish(lattice, free_index, nodes, Operator { n, row_ptr, col, val })
    }

    /// One Gauss–Seidel half-sweep over a colour (no intra-colour coupling).
    fn relax(&self, color: usize, b: &[f64], x: &mut [f64]) {
        let list = &self.colors[color];
        let mut upd = vec![0.0; list.len()];
        {
            let x: &[f64] = x;
            par::fill(&mut upd, |k| {
                let i = list[k] as usize;
                let mut s = b[i];
                for e in self.op.row_ptr[i]..self.op.row_ptr[i + 1] {
                    let j = self.op.col[e] as usize;
                    if j != i {
                        s -= self.op.val[e] * x[j];
                    }
                }
                s / self.diag[i]
            });
        }
        for (k, &i) in list.iter().enumerate() {
            x[i as usize] = upd[k];
        }
    }
}

/// Geometric multigrid V-cycle used as a CG preconditioner.
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: Cholesky,
    sweeps: usize,
}

/// Levels are added until the coarsest has at most this many unknowns.
const COARSEST_MAX: usize = 150_000;

impl Multigrid {
    pub fn new(grid: &Grid, op: &Operator) -> Result<Self> {
        let mut levels = vec![Level::from_grid(grid, op.clone())];
        while levels.last().unwrap().op.n > COARSEST_MAX {
            let c = levels.last().unwrap().coarsen();
            if c.op.n == 0 {
                break;
            }
            levels.push(c);
        }
        let coarse = Cholesky::factor(&levels.last().unwrap().op)?;
        Ok(Multigrid { levels, coarse, sweeps: 2 })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn prolong(&self, l: usize, ec: &[f64]) -> Vec<f64> {
        let (fine, coarse) = (&self.levels[l], &self.levels[l + 1]);
        let cval = |ci: i64, cj: i64| -> f64 {
            coarse
                .lattice
                .node_at(ci, cj)
                .map(|c| coarse.free_index[c])
                .filter(|&f| f != u32::MAX)
                .map_or(0.0, |f| ec[f as usize])
        };
        let mut out = vec![0.0; fine.op.n];
        par::fill(&mut out, |k| {
            let (i, j) = fine.lattice.abs_ij(fine.nodes[k] as usize);
            let (qi, ri) = (i.div_euclid(2), i.rem_euclid(2));
            let (qj, rj) = (j.div_euclid(2), j.rem_euclid(2));
            match (ri, rj) {
                (0, 0) => cval(qi, qj),
                (1, 0) => 0.5 * (cval(qi, qj) + cval(qi + 1, qj)),
                (0, _) => 0.5 * (cval(qi, qj) + cval(qi, qj + 1)),
                _ => 0.25 * (cval(qi, qj) + cval(qi + 1, qj) + cval(qi, qj + 1) + cval(qi + 1, qj + 1)),
            }
        });
        out
    }

    /// Transpose of [`Self::prolong`].
    fn restrict(&self, l: usize, r: &[f64]) -> Vec<f64> {
        let (fine, coarse) = (&self.levels[l], &self.levels[l + 1]);
        let fval = |i: i64, j: i64| -> f64 {
            fine.lattice
                .node_at(i, j)
                .map(|p| fine.free_index[p])
                .filter(|&f| f != u32::MAX)
                .map_or(0.0, |f| r[f as usize])
        };
        let mut out = vec![0.0; coarse.op.n];
        par::fill(&mut out, |k| {
            let (ci, cj) = coarse.lattice.abs_ij(coarse.nodes[k] as usize);
            let (i, j) = (2 * ci, 2 * cj);
            fval(i, j)
                + 0.5 * (fval(i - 1, j) + fval(i + 1, j) + fval(i, j - 1) + fval(i, j + 1))
                + 0.25 * (fval(i - 1, j - 1) + fval(i + 1, j - 1) + fval(i - 1, j + 1) + fval(i + 1, j + 1))
        });
        out
    }

    fn vcycle(&self, l: usize, b: &[f64]) -> Vec<f64> {
        if l + 1 == self.levels.len() {
            return self.coarse.solve(b);
        }
        let lev = &self.levels[l];
        let mut x = vec![0.0; lev.op.n];
        for _ in 0..self.sweeps {
            lev.relax(0, b, &mut x);
            lev.relax(1, b, &mut x);
        }
        let ax = lev.op.mul(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let ec = self.vcycle(l + 1, &self.restrict(l, &r));
        let e = self.prolong(l, &ec);
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        for _ in 0..self.sweeps {
            lev.relax(1, b, &mut x);
            lev.relax(0, b, &mut x);
        }
        x
    }

    /// Preconditioned conjugate gradients to relative residual `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let op = &self.levels[0].op;
        let n = op.n;
        let bn = norm(b);
        let mut x = vec![0.0; n];
        if bn == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z = self.vcycle(0, &r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let max_it = 200;
        for it in 0..max_it {
            let ap = op.mul(&p);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let res = norm(&r) / bn;
            if res <= tol {
                return Ok(x);
            }
            if it + 1 == max_it {
                return Err(Error::NoConvergence { residual: res, iterations: max_it });
            }
            z = self.vcycle(0, &r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        unreachable!()
    }
}

/// Either a sparse factorization or a multigrid-preconditioned CG.
pub enum Solver {
    Direct(Cholesky),
    Multigrid(Multigrid),
}

impl Solver {
    pub fn is_direct(&self) -> bool {
        matches!(self, Solver::Direct(_))
    }

    pub fn solve(&self, op: &Operator, b: &[f64]) -> Result<Vec<f64>> {
        let x = match self {
            Solver::Direct(c) => c.solve(b),
            Solver::Multigrid(m) => m.solve(b, 0.1 * SOLVE_TOL)?,
        };
        check_residual(op, &x, b)?;
        Ok(x)
    }
}

fn check_residual(op: &Operator, x: &[f64], b: &[f64]) -> Result<()> {
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(());
    }
    let ax = op.mul(x);
    let rn = par::sum(b.len(), |i| (ax[i] - b[i]).powi(2)).sqrt();
    let res = rn / bn;
    if res > SOLVE_TOL || !res.is_finite() {
        return Err(Error::NoConvergence { residual: res, iterations: 1 });
    }
    Ok(())
}
