//! Five-point discretization of the Dirichlet Laplacian on uniform grids.
//!
//! A [`Lattice`] is a rectangular box of nodes; a [`Grid`] classifies each box
//! node (outside / free / constrained) and every half-edge leaving an active
//! node (weighted coupling with a sign, weighted Dirichlet face, or Neumann).
//! The stiffness matrix is the unscaled stencil: its quadratic form is
//! `Σ_edges w (v_p − s v_q)² + Σ_faces w (v_p − g)²`, which approximates
//! `∫|∇v|²` without any `h` factor in two dimensions. Eigenvalues of `−Δ`
//! are the matrix eigenvalues divided by `h²` (lumped mass `h²`).

mod eigen;
mod problem;
mod solve;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use eigen::{lowest_eigenpairs, lowest_generalized, EigenOptions, Eigenpairs};
pub use problem::{Problem, SolverChoice};
pub use solve::{Multigrid, Solver};

use crate::error::{invalid, Result};
use crate::geometry::{CompactSet, Domain, Point};
use crate::par;

/// Where the lattice origin sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// The origin is a node.
    Node,
    /// The origin is a cell corner: nodes sit at half-integer multiples of h.
    Cell,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub h: f64,
    pub layout: Layout,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
}

/// Neighbour directions: +x, −x, +y, −y.
pub const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

impl Lattice {
    /// Smallest box whose nodes cover `[lo, hi]` with one extra node on each side.
    pub fn covering(h: f64, layout: Layout, lo: Point, hi: Point) -> Self {
        let off = Self::offset_of(layout);
        let i0 = (lo[0] / h - off).floor() as i64 - 1;
        let i1 = (hi[0] / h - off).ceil() as i64 + 1;
        let j0 = (lo[1] / h - off).floor() as i64 - 1;
        let j1 = (hi[1] / h - off).ceil() as i64 + 1;
        Lattice { h, layout, i0, j0, nx: (i1 - i0 + 1) as usize, ny: (j1 - j0 + 1) as usize }
    }

    fn offset_of(layout: Layout) -> f64 {
        match layout {
            Layout::Node => 0.0,
            Layout::Cell => 0.5,
        }
    }

    pub fn offset(&self) -> f64 {
        Self::offset_of(self.layout)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Absolute integer coordinates of a node.
    pub fn abs_ij(&self, idx: usize) -> (i64, i64) {
        let (i, j) = self.ij(idx);
        (self.i0 + i as i64, self.j0 + j as i64)
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.abs_ij(idx);
        let off = self.offset();
        [(i as f64 + off) * self.h, (j as f64 + off) * self.h]
    }

    pub fn neighbor(&self, idx: usize, dir: usize) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let (di, dj) = DIRS[dir];
        let ni = i as i64 + di;
        let nj = j as i64 + dj;
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    /// Node at absolute integer coordinates, if inside the box.
    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        let (a, b) = (i - self.i0, j - self.j0);
        if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
            None
        } else {
            Some(self.index(a as usize, b as usize))
        }
    }

    /// Node nearest to `p`, if inside the box.
    pub fn nearest(&self, p: Point) -> Option<usize> {
        let off = self.offset();
        let i = (p[0] / self.h - off).round() as i64;
        let j = (p[1] / self.h - off).round() as i64;
        self.node_at(i, j)
    }

    /// Lower-left node of the cell containing `p` and the local coordinates.
    fn cell_of(&self, p: Point) -> Option<(usize, f64, f64)> {
        let off = self.offset();
        let x = p[0] / self.h - off - self.i0 as f64;
        let y = p[1] / self.h - off - self.j0 as f64;
        let (fi, fj) = (x.floor(), y.floor());
        if fi < 0.0 || fj < 0.0 || fi as usize + 1 >= self.nx || fj as usize + 1 >= self.ny {
            return None;
        }
        Some((self.index(fi as usize, fj as usize), x - fi, y - fj))
    }
}

/// What a half-edge leaving an active node does.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Link {
    /// Couples to the neighbour: energy `weight (v_p − sign v_q)²`.
    Couple { weight: f64, sign: f64 },
    /// Dirichlet face: energy `weight (v_p − value)²`.
    Dirichlet { weight: f64, value: f64 },
    /// Natural condition: no contribution.
    Neumann,
}

impl Link {
    /// The plain unit coupling of the five-point stencil.
    pub const UNIT: Link = Link::Couple { weight: 1.0, sign: 1.0 };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum NodeKind {
    Outside,
    Free,
    Constrained,
}

/// Description from which a [`Grid`] is built.
pub struct GridSpec<'a> {
    pub lattice: Lattice,
    /// Active-node predicate.
    pub inside: &'a (dyn Fn(Point) -> bool + Sync),
    /// Link from an active node `p` to an inactive neighbour `q`.
    pub exterior: &'a (dyn Fn(Point, Point) -> Link + Sync),
    /// Optional override for the link between two active nodes.
    pub interior: Option<&'a (dyn Fn(Point, Point) -> Option<Link> + Sync)>,
    /// Box indices of nodes whose values are prescribed.
    pub constrained: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub lattice: Lattice,
    kind: Vec<NodeKind>,
    free_index: Vec<u32>,
    free_nodes: Vec<u32>,
    constrained_nodes: Vec<u32>,
    links: HashMap<(u32, u8), Link>,
}

const NOT_FREE: u32 = u32::MAX;

impl Grid {
    pub fn build(spec: GridSpec<'_>) -> Result<Self> {
        let lat = spec.lattice;
        let n = lat.len();
        if n >= NOT_FREE as usize {
            return invalid("grid too large");
        }
        let mut kind = vec![NodeKind::Outside; n];
        for (idx, k) in kind.iter_mut().enumerate() {
            if (spec.inside)(lat.point(idx)) {
                *k = NodeKind::Free;
            }
        }
        for &c in &spec.constrained {
            if kind[c] == NodeKind::Outside {
                return invalid(format!("constrained node at {:?} lies outside the domain", lat.point(c)));
            }
            kind[c] = NodeKind::Constrained;
        }
        let mut links = HashMap::new();
        for idx in 0..n {
            if kind[idx] == NodeKind::Outside {
                continue;
            }
            let p = lat.point(idx);
            for dir in 0..4 {
                let Some(q) = lat.neighbor(idx, dir) else {
                    return invalid("active node on the edge of the lattice box");
                };
                let link = if kind[q] == NodeKind::Outside {
                    Some((spec.exterior)(p, lat.point(q)))
                } else {
                    spec.interior.and_then(|f| f(p, lat.point(q)))
                };
                if let Some(l) = link {
                    if l != Link::UNIT {
                        links.insert((idx as u32, dir as u8), l);
                    }
                }
            }
        }
        let mut free_index = vec![NOT_FREE; n];
        let mut free_nodes = Vec::new();
        let mut constrained_nodes = Vec::new();
        for idx in 0..n {
            match kind[idx] {
                NodeKind::Free => {
                    free_index[idx] = free_nodes.len() as u32;
                    free_nodes.push(idx as u32);
                }
                NodeKind::Constrained => constrained_nodes.push(idx as u32),
                NodeKind::Outside => {}
            }
        }
        Ok(Grid { lattice: lat, kind, free_index, free_nodes, constrained_nodes, links })
    }

    /// Standard grid for `Ω` (or `Ω∖K`): Dirichlet on `∂Ω` through the
    /// fractional-distance face rule, `K` rasterized onto constrained nodes.
    pub fn for_domain(domain: &Domain, h: f64, layout: Layout, k: Option<&CompactSet>) -> Result<Self> {
        let (lo, hi) = domain.bbox();
        let lattice = Lattice::covering(h, layout, lo, hi);
        let constrained = match k {
            Some(set) => {
                let clearance = set.clearance(domain);
                if clearance < 2.0 * h {
                    return Err(crate::Error::Escapes {
                        eps: set.epsilon,
                        reason: format!("distance {clearance:.3e} to the boundary is below 2h = {:.3e}", 2.0 * h),
                    });
                }
                let nodes = rasterize(&lattice, set);
                check_extent(&lattice, set, &nodes)?;
                nodes
            }
            None => Vec::new(),
        };
        let inside = |p: Point| domain.contains(p);
        let exterior = |p: Point, q: Point| Link::Dirichlet { weight: 1.0 / domain.boundary_fraction(p, q), value: 0.0 };
        Grid::build(GridSpec { lattice, inside: &inside, exterior: &exterior, interior: None, constrained })
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kind[idx]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.kind[idx] != NodeKind::Outside
    }

    pub fn free_nodes(&self) -> &[u32] {
        &self.free_nodes
    }

    pub fn constrained_nodes(&self) -> &[u32] {
        &self.constrained_nodes
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn free_index(&self, idx: usize) -> Option<usize> {
        let f = self.free_index[idx];
        (f != NOT_FREE).then_some(f as usize)
    }

    /// Link of the half-edge leaving active node `idx` in direction `dir`.
    pub fn link(&self, idx: usize, dir: usize) -> Link {
        *self.links.get(&(idx as u32, dir as u8)).unwrap_or(&Link::UNIT)
    }

    /// Half-edges with a non-default link.
    pub fn special_links(&self) -> impl Iterator<Item = (usize, usize, Link)> + '_ {
        self.links.iter().map(|(&(i, d), &l)| (i as usize, d as usize, l))
    }

    /// Stiffness matrix over free nodes.
    pub fn operator(&self) -> Operator {
        let lat = &self.lattice;
        let n = self.n_free();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::with_capacity(5 * n);
        let mut val = Vec::with_capacity(5 * n);
        row_ptr.push(0);
        for &p in &self.free_nodes {
            let p = p as usize;
            let mut diag = 0.0;
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(5);
            for dir in 0..4 {
                match self.link(p, dir) {
                    Link::Couple { weight, sign } => {
                        diag += weight;
                        let q = lat.neighbor(p, dir).expect("active nodes have neighbours");
                        if let Some(fq) = self.free_index(q) {
                            row.push((fq as u32, -weight * sign));
                        }
                    }
                    Link::Dirichlet { weight, .. } => diag += weight,
                    Link::Neumann => {}
                }
            }
            row.push((self.free_index[p], diag));
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Operator { n, row_ptr, col, val }
    }

    /// Right-hand side produced by prescribed values on constrained nodes and
    /// inhomogeneous Dirichlet faces. `data` is indexed by box node.
    pub fn rhs(&self, data: &[f64]) -> Vec<f64> {
        let lat = &self.lattice;
        let mut b = vec![0.0; self.n_free()];
        par::fill(&mut b, |f| {
            let p = self.free_nodes[f] as usize;
            let mut s = 0.0;
            for dir in 0..4 {
                match self.link(p, dir) {
                    Link::Couple { weight, sign } => {
                        let q = lat.neighbor(p, dir).expect("active nodes have neighbours");
                        if self.kind[q] == NodeKind::Constrained {
                            s += weight * sign * data[q];
                        }
                    }
                    Link::Dirichlet { weight, value } => s += weight * value,
                    Link::Neumann => {}
                }
            }
            s
        });
        b
    }

    /// Full field from free-node values plus constrained data.
    pub fn assemble_field(&self, free: &[f64], data: &[f64]) -> ScalarField {
        let mut values = vec![0.0; self.lattice.len()];
        for (f, &p) in self.free_nodes.iter().enumerate() {
            values[p as usize] = free[f];
        }
        for &c in &self.constrained_nodes {
            values[c as usize] = data[c as usize];
        }
        ScalarField { lattice: self.lattice, values }
    }

    /// Free-node values of a field.
    pub fn restrict(&self, field: &ScalarField) -> Vec<f64> {
        self.free_nodes.iter().map(|&p| field.values[p as usize]).collect()
    }

    /// Discrete Dirichlet energy of a field over all active nodes, including
    /// the gradient across and inside the constrained set.
    pub fn energy(&self, field: &ScalarField) -> f64 {
        let lat = &self.lattice;
        let v = &field.values;
        par::sum(lat.len(), |p| {
            if self.kind[p] == NodeKind::Outside {
                return 0.0;
            }
            let mut e = 0.0;
            for dir in 0..4 {
                match self.link(p, dir) {
                    Link::Couple { weight, sign } => {
                        // each coupled pair once: from its lower endpoint
                        if dir == 0 || dir == 2 {
                            let q = lat.neighbor(p, dir).expect("active nodes have neighbours");
                            let d = v[p] - sign * v[q];
                            e += weight * d * d;
                        }
                    }
                    Link::Dirichlet { weight, value } => {
                        let d = v[p] - value;
                        e += weight * d * d;
                    }
                    Link::Neumann => {}
                }
            }
            e
        })
    }

    /// `h² Σ v²` over active nodes.
    pub fn l2_norm_sq(&self, field: &ScalarField) -> f64 {
        let h2 = self.lattice.h * self.lattice.h;
        h2 * par::sum(self.lattice.len(), |p| {
            if self.kind[p] == NodeKind::Outside {
                0.0
            } else {
                field.values[p] * field.values[p]
            }
        })
    }
}

/// Grid spacing used for a member of a family with parameter ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HRule {
    /// `h = ε / cells`.
    Ratio { cells: f64 },
    Fixed { h: f64 },
}

impl Default for HRule {
    fn default() -> Self {
        HRule::Ratio { cells: 8.0 }
    }
}

/// Coarsest admissible resolution: eight cells per ε.
pub const MIN_CELLS_PER_EPS: f64 = 8.0;

impl HRule {
    pub fn h(&self, eps: f64) -> f64 {
        match *self {
            HRule::Ratio { cells } => eps / cells,
            HRule::Fixed { h } => h,
        }
    }

    /// Rejects spacings coarser than `ε/8`.
    pub fn check(&self, eps: f64) -> Result<f64> {
        let h = self.h(eps);
        if !(h > 0.0) || h > eps / MIN_CELLS_PER_EPS * (1.0 + 1e-12) {
            return invalid(format!("h = {h} violates h <= eps/8 at eps = {eps}"));
        }
        Ok(h)
    }
}

impl std::str::FromStr for HRule {
    type Err = crate::Error;

    /// `eps/16` or a fixed spacing such as `0.0025`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("eps/") {
            let cells: f64 = rest.parse().map_err(|_| crate::Error::Invalid(format!("bad h rule {s:?}")))?;
            if !(cells > 0.0) {
                return invalid(format!("bad h rule {s:?}"));
            }
            return Ok(HRule::Ratio { cells });
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 => Ok(HRule::Fixed { h }),
            _ => invalid(format!("bad h rule {s:?} (expected eps/N or a spacing)")),
        }
    }
}

/// Richardson extrapolation from spacings `h` and `h/2` for an error `∝ hᵖ`.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> f64 {
    let f = 2f64.powf(order);
    (f * fine - coarse) / (f - 1.0)
}

/// Box nodes covered by a compact set.
pub fn rasterize(lattice: &Lattice, set: &CompactSet) -> Vec<usize> {
    let (lo, hi) = set.bbox();
    let h = lattice.h;
    let off = lattice.offset();
    let i_lo = ((lo[0] - h) / h - off).floor() as i64;
    let i_hi = ((hi[0] + h) / h - off).ceil() as i64;
    let j_lo = ((lo[1] - h) / h - off).floor() as i64;
    let j_hi = ((hi[1] + h) / h - off).ceil() as i64;
    let mut out = Vec::new();
    for j in j_lo..=j_hi {
        for i in i_lo..=i_hi {
            if let Some(idx) = lattice.node_at(i, j) {
                if set.covers_node(lattice.point(idx), h) {
                    out.push(idx);
                }
            }
        }
    }
    out
}

/// At least three nodes across the set's longest extent.
fn check_extent(lattice: &Lattice, set: &CompactSet, nodes: &[usize]) -> Result<()> {
    let (lo, hi) = set.bbox();
    let (w, ht) = (hi[0] - lo[0], hi[1] - lo[1]);
    let count = |axis: usize| -> usize {
        let mut c: Vec<i64> = nodes
            .iter()
            .map(|&n| {
                let (i, j) = lattice.abs_ij(n);
                if axis == 0 {
                    i
                } else {
                    j
                }
            })
            .collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    let across = if w >= ht { count(0) } else { count(1) };
    if across < 3 {
        return Err(crate::Error::TooCoarse { h: lattice.h, nodes: across });
    }
    Ok(())
}

/// Nodal values over a lattice box (zero at inactive nodes).
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(lattice: Lattice) -> Self {
        ScalarField { lattice, values: vec![0.0; lattice.len()] }
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..lattice.len()).map(|i| f(lattice.point(i))).collect();
        ScalarField { lattice, values }
    }

    /// Value at the node nearest to `p`.
    pub fn nearest_value(&self, p: Point) -> Option<f64> {
        self.lattice.nearest(p).map(|i| self.values[i])
    }

    /// Bilinear interpolation.
    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let (ll, s, t) = self.lattice.cell_of(p)?;
        let nx = self.lattice.nx;
        let v = &self.values;
        Some(
            (1.0 - s) * (1.0 - t) * v[ll]
                + s * (1.0 - t) * v[ll + 1]
                + (1.0 - s) * t * v[ll + nx]
                + s * t * v[ll + nx + 1],
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }
}

/// Compressed sparse rows over free nodes (symmetric).
#[derive(Clone, Debug)]
pub struct Operator {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Operator {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        par::fill(y, |i| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            s
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.col[k] as usize == i)
                    .map_or(0.0, |k| self.val[k])
            })
            .collect()
    }

    /// `xᵀ S x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.mul(x);
        dot(x, &y)
    }

    pub fn is_symmetric(&self) -> bool {
        let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                entries.insert((i, self.col[k] as usize), self.val[k]);
            }
        }
        entries.iter().all(|(&(i, j), &v)| entries.get(&(j, i)) == Some(&v))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum(a.len(), |i| a[i] * b[i])
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
