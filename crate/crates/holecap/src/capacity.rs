//! Condenser capacity, u-capacity and capacitary potentials on the grid.
//!
//! Capacities are energies of discrete harmonic functions: data on the
//! rasterized compact set, zero on `∂Ω`. Reported values are extrapolated
//! from the pair of spacings `(h, h/2)`.

use serde::Serialize;

use crate::discrete::{richardson, HRule, Layout, Link, NodeKind, Problem, ScalarField, SolverChoice};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CompactSet, CompactShape, Domain, Family, Point};

/// Capacities below this are reported as exactly zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Error order of capacities in `h`: the rasterized set moves its boundary by
/// a fraction of a cell, which perturbs the energy at first order.
pub const CAPACITY_ORDER: f64 = 1.0;

/// Values prescribed on the compact set.
#[derive(Clone, Copy)]
pub enum Data<'a> {
    /// `u ≡ 1`: the condenser capacity.
    One,
    Function(&'a (dyn Fn(Point) -> f64 + Sync)),
    /// A discrete field: exact at its own nodes, bilinear elsewhere.
    Field(&'a ScalarField),
}

impl Data<'_> {
    pub fn at(&self, p: Point) -> f64 {
        match self {
            Data::One => 1.0,
            Data::Function(f) => f(p),
            Data::Field(field) => {
                let lat = &field.lattice;
                if let Some(i) = lat.nearest(p) {
                    let q = lat.point(i);
                    if (q[0] - p[0]).abs() < 1e-9 * lat.h && (q[1] - p[1]).abs() < 1e-9 * lat.h {
                        return field.values[i];
                    }
                }
                field.interpolate(p).unwrap_or(0.0)
            }
        }
    }
}

/// A discrete capacitary potential on one grid.
#[derive(Clone, Debug)]
pub struct Potential {
    pub energy: f64,
    pub field: ScalarField,
    pub l2_norm_sq: f64,
    pub h: f64,
}

/// Solves for the potential with the given data on an assembled problem.
pub fn potential_on(problem: &Problem, data: Data<'_>) -> Result<Potential> {
    let grid = &problem.grid;
    let lat = grid.lattice;
    let mut values = vec![0.0; lat.len()];
    let mut any = false;
    for &c in grid.constrained_nodes() {
        let v = data.at(lat.point(c as usize));
        any |= v != 0.0;
        values[c as usize] = v;
    }
    if !any {
        return Ok(Potential { energy: 0.0, field: ScalarField::zeros(lat), l2_norm_sq: 0.0, h: lat.h });
    }
    let field = problem.solve_dirichlet(&values)?;
    let mut energy = problem.energy(&field);
    if energy < ZERO_THRESHOLD {
        energy = 0.0;
    }
    let l2_norm_sq = grid.l2_norm_sq(&field);
    Ok(Potential { energy, field, l2_norm_sq, h: lat.h })
}

/// Potential of `K` with data `data` on the grid of spacing `h`.
pub fn potential(domain: &Domain, k: &CompactSet, data: Data<'_>, h: f64) -> Result<Potential> {
    let problem = Problem::new(domain, h, Layout::Node, Some(k), SolverChoice::Auto)?;
    potential_on(&problem, data)
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityResult {
    /// Extrapolated value when `extrapolated`, else the value at `h`.
    pub value: f64,
    /// Value at `h`.
    pub raw: f64,
    /// Value at `h/2`.
    pub refined: Option<f64>,
    /// Potential on the finest grid used.
    #[serde(skip)]
    pub potential: Option<ScalarField>,
    /// `‖V‖²_{L²}` on the finest grid used.
    pub l2_norm_sq: f64,
    pub h: f64,
    pub extrapolated: bool,
}

impl CapacityResult {
    fn zero(h: f64) -> Self {
        CapacityResult {
            value: 0.0,
            raw: 0.0,
            refined: None,
            potential: None,
            l2_norm_sq: 0.0,
            h,
            extrapolated: false,
        }
    }

    /// Combines the potentials at `h` and `h/2`.
    pub fn from_pair(coarse: Potential, fine: Potential) -> Self {
        let mut value = richardson(coarse.energy, fine.energy, CAPACITY_ORDER);
        if coarse.energy == 0.0 && fine.energy == 0.0 || value < ZERO_THRESHOLD {
            value = value.max(0.0);
            if value < ZERO_THRESHOLD {
                value = 0.0;
            }
        }
        CapacityResult {
            value,
            raw: coarse.energy,
            refined: Some(fine.energy),
            l2_norm_sq: fine.l2_norm_sq,
            potential: Some(fine.field),
            h: coarse.h,
            extrapolated: true,
        }
    }

    pub fn from_single(p: Potential) -> Self {
        CapacityResult {
            value: p.energy,
            raw: p.energy,
            refined: None,
            l2_norm_sq: p.l2_norm_sq,
            potential: Some(p.field),
            h: p.h,
            extrapolated: false,
        }
    }
}

/// `Cap_Ω(K, u)`, extrapolated from `h` and `h/2`. `None` for `K` is the
/// empty set, whose capacity is exactly zero.
pub fn u_capacity(domain: &Domain, k: Option<&CompactSet>, u: Data<'_>, h: f64) -> Result<CapacityResult> {
    let Some(k) = k else {
        return Ok(CapacityResult::zero(h));
    };
    let coarse = potential(domain, k, u, h)?;
    if coarse.energy == 0.0 {
        return Ok(CapacityResult::from_single(coarse));
    }
    let fine = potential(domain, k, u, h / 2.0)?;
    Ok(CapacityResult::from_pair(coarse, fine))
}

/// `Cap_Ω(K)`: data 1 on `K`.
pub fn condenser_capacity(domain: &Domain, k: &CompactSet, h: f64) -> Result<CapacityResult> {
    u_capacity(domain, Some(k), Data::One, h)
}

/// `‖V‖²_{L²} / Cap`, which vanishes along concentrating families.
pub fn l2_capacity_ratio(result: &CapacityResult) -> Result<f64> {
    if result.value <= 0.0 {
        return Err(Error::ZeroCapacity);
    }
    Ok(result.l2_norm_sq / result.value)
}

/// Terms of the capacity identity that splits `Cap(K,u)` into a boundary
/// flux `L(u,K)` weighted by `u²` and two volume corrections.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    /// `Cap(K, u)` as an energy.
    pub lhs: f64,
    /// `L + volume + gradient`.
    pub rhs: f64,
    pub flux: f64,
    /// `−∫ V_K V_{K,u} Δ(ηu)`.
    pub volume: f64,
    /// `−2∫ V_{K,u} ∇V_K·∇(ηu)`.
    pub gradient: f64,
    pub capacity: f64,
    /// `min_K u² · Cap(K)` and `max_K u² · Cap(K)`.
    pub lower: f64,
    pub upper: f64,
    pub within_bounds: bool,
}

impl IdentityCheck {
    pub fn relative_gap(&self) -> f64 {
        if self.lhs == 0.0 {
            (self.lhs - self.rhs).abs()
        } else {
            ((self.lhs - self.rhs) / self.lhs).abs()
        }
    }
}

/// Radial cutoff equal to 1 on `B(c, 2ε)` and 0 outside `B(c, 4ε)`, `C²`.
pub fn cutoff(center: Point, eps: f64) -> impl Fn(Point) -> f64 {
    move |p: Point| {
        let r = (p[0] - center[0]).hypot(p[1] - center[1]);
        let t = ((r - 2.0 * eps) / (2.0 * eps)).clamp(0.0, 1.0);
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Evaluates the identity for a closed disk `K` on the grid of spacing `h`.
/// The flux term sums stencil fluxes of `V_K` out of the constrained nodes.
pub fn identity_check(domain: &Domain, k: &CompactSet, u: Data<'_>, h: f64) -> Result<IdentityCheck> {
    let CompactShape::ClosedDisk { center, radius } = k.shape else {
        return Err(Error::Unsupported("the capacity identity is evaluated for closed disks only".into()));
    };
    if domain.distance_to_boundary(center) <= 4.0 * radius {
        return invalid("the cutoff support B(c, 4ε) must lie inside the domain");
    }
    let problem = Problem::new(domain, h, Layout::Node, Some(k), SolverChoice::Auto)?;
    let grid = &problem.grid;
    let lat = grid.lattice;
    let vk = potential_on(&problem, Data::One)?;
    let vu = potential_on(&problem, u)?;
    let eta = cutoff(center, radius);
    let w: Vec<f64> = (0..lat.len())
        .map(|i| {
            let p = lat.point(i);
            let e = eta(p);
            if e == 0.0 {
                0.0
            } else {
                e * u.at(p)
            }
        })
        .collect();
    let (a, b) = (&vk.field.values, &vu.field.values);

    let mut flux = 0.0;
    let (mut umin, mut umax) = (f64::INFINITY, 0.0f64);
    for &c in grid.constrained_nodes() {
        let c = c as usize;
        let u2 = u.at(lat.point(c)).powi(2);
        umin = umin.min(u2);
        umax = umax.max(u2);
        for dir in 0..4 {
            let q = lat.neighbor(c, dir).expect("constrained nodes are interior");
            if grid.kind(q) == NodeKind::Free {
                flux += u2 * (a[c] - a[q]);
            }
        }
    }
    let mut volume = 0.0;
    let mut gradient = 0.0;
    for p in 0..lat.len() {
        if grid.kind(p) == NodeKind::Outside {
            continue;
        }
        let mut lap = 0.0;
        for dir in 0..4 {
            let q = lat.neighbor(p, dir).expect("active nodes are interior");
            lap += w[q] - w[p];
            if (dir == 0 || dir == 2) && grid.is_active(q) && matches!(grid.link(p, dir), Link::Couple { .. }) {
                let mid = 0.5 * (b[p] + b[q]);
                gradient -= 2.0 * mid * (a[q] - a[p]) * (w[q] - w[p]);
            }
        }
        volume -= a[p] * b[p] * lap;
    }
    let cap = vk.energy;
    let (lower, upper) = (umin * cap, umax * cap);
    let tol = 1e-9 * upper.max(1e-300);
    Ok(IdentityCheck {
        lhs: vu.energy,
        rhs: flux + volume + gradient,
        flux,
        volume,
        gradient,
        capacity: cap,
        lower,
        upper,
        within_bounds: flux >= lower - tol && flux <= upper + tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    pub eps: f64,
    pub h: f64,
    pub capacity: f64,
    pub l2_norm_sq: f64,
}

/// Capacities and potential norms along a concentrating family.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTrend {
    pub rows: Vec<TrendRow>,
    pub capacity_decreasing: bool,
    pub l2_decreasing: bool,
}

impl ConvergenceTrend {
    /// Capacity at the smallest ε (0 for an empty family).
    pub fn last_capacity(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.capacity)
    }

    pub fn below(&self, tol: f64) -> bool {
        self.last_capacity() < tol && self.rows.last().map_or(true, |r| r.l2_norm_sq < tol)
    }
}

fn strictly_decreasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

/// Runs `u_capacity` along a family (rows in parallel).
pub fn convergence_to_zero(domain: &Domain, family: &Family, u: Data<'_>, rule: HRule) -> Result<ConvergenceTrend> {
    let hs: Vec<f64> = family.sets.iter().map(|k| rule.check(k.epsilon)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = hs.iter().copied().enumerate().collect();
    let results = crate::par::map(&jobs, |&(i, h)| u_capacity(domain, Some(&family.sets[i]), u, h));
    let mut rows = Vec::with_capacity(results.len());
    for (k, r) in family.sets.iter().zip(results) {
        let r = r?;
        rows.push(TrendRow { eps: k.epsilon, h: r.h, capacity: r.value, l2_norm_sq: r.l2_norm_sq });
    }
    Ok(ConvergenceTrend {
        capacity_decreasing: strictly_decreasing(rows.iter().map(|r| r.capacity)),
        l2_decreasing: strictly_decreasing(rows.iter().map(|r| r.l2_norm_sq)),
        rows,
    })
}
