//! Two coalescing Aharonov–Bohm poles of circulation `∓½` at `(∓a, 0)`.
//!
//! The lattice operator uses the real gauge in which the magnetic potential
//! reduces to a sign flip across the segment `I_c = [−a, a] × {0}`. Nodes lie
//! on the symmetry axis; the cut is taken on the upper side, so the vertical
//! edges leaving axis nodes with `|x₁| < a` upwards carry the hopping `−1`.
//! The half-domain operators `NDN` and `DND` live on `x₂ ≥ 0` with the axis
//! row carrying half weights (mirror stencil).

use nalgebra::Complex;
use serde::Serialize;

use crate::asymptotics::{verify, Experiment, LadderReport};
use crate::closed_form::TheoremId;
use crate::discrete::{EigenOptions, Grid, GridSpec, HRule, Lattice, Layout, Link, Problem, ScalarField, SolverChoice};
use crate::error::{invalid, Result};
use crate::geometry::{Domain, Point, PolePair, Template};

/// Polar angle in `(−π, π)` as `2 arctan(x₂ / (x₁ + |x|))`.
pub fn theta0(x: Point) -> Result<f64> {
    if x[1] == 0.0 && x[0] <= 0.0 {
        return invalid(format!("θ₀ is undefined on the cut: {x:?}"));
    }
    Ok(2.0 * (x[1] / (x[0] + x[0].hypot(x[1]))).atan())
}

/// `φ = ½θ₀(x − a⁺) − ½θ₀(x − a⁻)`, extended continuously across the axis
/// left of `a⁻`. Equals `±π/2` next to `I_c` from above / below.
pub fn gauge_phi(x: Point, poles: &PolePair) -> Result<f64> {
    if poles.on_segment(x) {
        return invalid(format!("φ is undefined on the segment between the poles: {x:?}"));
    }
    if x[1] == 0.0 && x[0] < -poles.a {
        return Ok(0.0);
    }
    let tp = theta0([x[0] - poles.a, x[1]])?;
    let tm = theta0([x[0] + poles.a, x[1]])?;
    Ok(0.5 * tp - 0.5 * tm)
}

/// `ψ = e^{2iφ}`.
pub fn psi(x: Point, poles: &PolePair) -> Result<Complex<f64>> {
    let phi = gauge_phi(x, poles)?;
    Ok(Complex::from_polar(1.0, 2.0 * phi))
}

/// `−A_{a⁻} + A_{a⁺}` with `A_b(x) = ½ (−(x₂ − b₂), x₁ − b₁) / |x − b|²`.
pub fn vector_potential(x: Point, poles: &PolePair) -> Result<[f64; 2]> {
    let single = |b: Point| -> Result<[f64; 2]> {
        let (dx, dy) = (x[0] - b[0], x[1] - b[1]);
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            return invalid(format!("the potential is singular at the pole {b:?}"));
        }
        Ok([-0.5 * dy / r2, 0.5 * dx / r2])
    };
    let m = single(poles.minus())?;
    let p = single(poles.plus())?;
    Ok([p[0] - m[0], p[1] - m[1]])
}

/// The two-pole potential with its gauge functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeField {
    pub poles: PolePair,
}

impl GaugeField {
    pub fn new(poles: PolePair) -> Self {
        GaugeField { poles }
    }

    pub fn potential(&self, x: Point) -> Result<[f64; 2]> {
        vector_potential(x, &self.poles)
    }

    pub fn theta0(&self, x: Point) -> Result<f64> {
        theta0(x)
    }

    pub fn phi(&self, x: Point) -> Result<f64> {
        gauge_phi(x, &self.poles)
    }

    pub fn psi(&self, x: Point) -> Result<Complex<f64>> {
        psi(x, &self.poles)
    }
}

fn on_axis(p: Point, h: f64) -> bool {
    p[1].abs() < 0.25 * h
}

fn node_lattice(domain: &Domain, h: f64) -> Lattice {
    let (lo, hi) = domain.bbox();
    Lattice::covering(h, Layout::Node, lo, hi)
}

fn require_mirror(domain: &Domain) -> Result<()> {
    if !domain.mirror_symmetric {
        return invalid("the domain must be mirror-symmetric about x₂ = 0");
    }
    Ok(())
}

/// Lattice magnetic Laplacian with the two half-flux poles.
#[derive(Clone, Debug)]
pub struct MagneticOperator {
    pub grid: Grid,
    pub poles: PolePair,
}

/// Edge sign of the gauge-fixed hopping from `p` to `q`.
fn hopping(p: Point, q: Point, a: f64, h: f64) -> f64 {
    let vertical = (p[0] - q[0]).abs() < 0.25 * h;
    if !vertical || p[0].abs() >= a {
        return 1.0;
    }
    let (lo, hi) = if p[1] < q[1] { (p, q) } else { (q, p) };
    if on_axis(lo, h) && hi[1] > 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Assembles the magnetic operator on the node lattice of spacing `h`.
/// The poles must not coincide with nodes.
pub fn assemble_magnetic(domain: &Domain, poles: &PolePair, h: f64) -> Result<MagneticOperator> {
    require_mirror(domain)?;
    let r = poles.a / h;
    if (r - r.round()).abs() < 1e-9 {
        return invalid(format!("pole (±{}, 0) lies on a grid node for h = {h}", poles.a));
    }
    let a = poles.a;
    let lattice = node_lattice(domain, h);
    let inside = |p: Point| domain.contains(p);
    let exterior = |p: Point, q: Point| Link::Dirichlet { weight: 1.0 / domain.boundary_fraction(p, q), value: 0.0 };
    let interior = |p: Point, q: Point| {
        let s = hopping(p, q, a, h);
        (s != 1.0).then_some(Link::Couple { weight: 1.0, sign: s })
    };
    let grid = Grid::build(GridSpec { lattice, inside: &inside, exterior: &exterior, interior: Some(&interior), constrained: vec![] })?;
    Ok(MagneticOperator { grid, poles: *poles })
}

/// Edge-sign products around plaquettes with four active corners.
#[derive(Clone, Debug, Serialize)]
pub struct PlaquetteFlux {
    pub plaquettes: usize,
    /// Lower-left corners of plaquettes with product `−1`.
    pub negative: Vec<Point>,
    /// Plaquettes whose product is neither `+1` nor `−1`.
    pub malformed: usize,
}

impl MagneticOperator {
    fn sign(&self, idx: usize, dir: usize) -> f64 {
        match self.grid.link(idx, dir) {
            Link::Couple { sign, .. } => sign,
            _ => 1.0,
        }
    }

    pub fn plaquette_flux(&self) -> PlaquetteFlux {
        let lat = &self.grid.lattice;
        let mut out = PlaquetteFlux { plaquettes: 0, negative: Vec::new(), malformed: 0 };
        for idx in 0..lat.len() {
            let Some(r) = lat.neighbor(idx, 0) else { continue };
            let Some(u) = lat.neighbor(idx, 2) else { continue };
            let Some(ru) = lat.neighbor(r, 2) else { continue };
            if ![idx, r, u, ru].iter().all(|&n| self.grid.is_active(n)) {
                continue;
            }
            out.plaquettes += 1;
            let prod = self.sign(idx, 0) * self.sign(r, 2) * self.sign(u, 0) * self.sign(idx, 2);
            if prod == -1.0 {
                out.negative.push(lat.point(idx));
            } else if prod != 1.0 {
                out.malformed += 1;
            }
        }
        out
    }

    /// Whether the stiffness matrix equals the plain Dirichlet Laplacian.
    pub fn is_plain(&self) -> bool {
        self.grid.special_links().all(|(_, _, l)| !matches!(l, Link::Couple { sign, .. } if sign != 1.0))
    }
}

/// Axis conditions of the half-domain operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MixedVariant {
    /// Dirichlet on axis nodes with `|x₁| ≤ a`, Neumann elsewhere.
    Ndn,
    /// Neumann on axis nodes with `|x₁| ≤ a`, Dirichlet elsewhere.
    Dnd,
}

impl MixedVariant {
    pub fn axis_dirichlet(&self, x1: f64, a: f64, h: f64) -> bool {
        let within = x1.abs() <= a + 1e-9 * h;
        match self {
            MixedVariant::Ndn => within,
            MixedVariant::Dnd => !within,
        }
    }
}

/// Half-domain operator on `x₂ ≥ 0`.
#[derive(Clone, Debug)]
pub struct MixedBcOperator {
    pub grid: Grid,
    pub variant: MixedVariant,
    pub a: f64,
}

/// Half-domain grid whose axis node at `x₁` is Dirichlet iff `dirichlet(x₁)`.
fn half_grid(domain: &Domain, h: f64, dirichlet: impl Fn(f64) -> bool) -> Result<Grid> {
    require_mirror(domain)?;
    let lattice = node_lattice(domain, h);
    let inside = |p: Point| domain.contains(p) && p[1] > -0.25 * h;
    let exterior = |p: Point, q: Point| {
        if q[1] < -0.25 * h {
            return Link::Neumann;
        }
        let w = if on_axis(p, h) && on_axis(q, h) { 0.5 } else { 1.0 };
        Link::Dirichlet { weight: w / domain.boundary_fraction(p, q), value: 0.0 }
    };
    let interior = |p: Point, q: Point| (on_axis(p, h) && on_axis(q, h)).then_some(Link::Couple { weight: 0.5, sign: 1.0 });
    let constrained = (0..lattice.len())
        .filter(|&i| {
            let p = lattice.point(i);
            on_axis(p, h) && domain.contains(p) && dirichlet(p[0])
        })
        .collect();
    Grid::build(GridSpec { lattice, inside: &inside, exterior: &exterior, interior: Some(&interior), constrained })
}

pub fn assemble_mixed(domain: &Domain, variant: MixedVariant, a: f64, h: f64) -> Result<MixedBcOperator> {
    if !(a >= 0.0) {
        return invalid("segment half-length must be non-negative");
    }
    let grid = half_grid(domain, h, |x| variant.axis_dirichlet(x, a, h))?;
    Ok(MixedBcOperator { grid, variant, a })
}

/// Full-domain Dirichlet Laplacian with the axis nodes `|x₁| ≤ a` removed.
pub fn assemble_slit(domain: &Domain, a: f64, h: f64) -> Result<Grid> {
    require_mirror(domain)?;
    let lattice = node_lattice(domain, h);
    let inside = |p: Point| domain.contains(p);
    let exterior = |p: Point, q: Point| Link::Dirichlet { weight: 1.0 / domain.boundary_fraction(p, q), value: 0.0 };
    let constrained = (0..lattice.len())
        .filter(|&i| {
            let p = lattice.point(i);
            on_axis(p, h) && domain.contains(p) && p[0].abs() <= a + 1e-9 * h
        })
        .collect();
    Grid::build(GridSpec { lattice, inside: &inside, exterior: &exterior, interior: None, constrained })
}

fn half_mass(h: f64) -> impl Fn(Point) -> f64 {
    move |p| if on_axis(p, h) { 0.5 } else { 1.0 }
}

/// Eigenvalues and eigenfields on one grid.
#[derive(Clone, Debug)]
pub struct Eigs {
    pub h: f64,
    pub values: Vec<f64>,
    pub fields: Vec<ScalarField>,
}

fn eigs(problem: &Problem, m: usize, sign_point: Point) -> Result<Eigs> {
    let pairs = problem.eigenpairs(m, &EigenOptions::default(), sign_point)?;
    let (values, fields) = pairs.into_iter().unzip();
    Ok(Eigs { h: problem.h(), values, fields })
}

fn half_sign_point(domain: &Domain) -> Point {
    let p = domain.designated_sample_point();
    [p[0], p[1].abs()]
}

pub fn magnetic_spectrum(op: &MagneticOperator, domain: &Domain, m: usize) -> Result<Eigs> {
    let problem = Problem::from_grid(op.grid.clone(), SolverChoice::Direct)?;
    eigs(&problem, m, domain.designated_sample_point())
}

pub fn mixed_spectrum(op: &MixedBcOperator, domain: &Domain, m: usize) -> Result<Eigs> {
    let h = op.grid.lattice.h;
    let problem = Problem::from_grid(op.grid.clone(), SolverChoice::Direct)?.with_mass(half_mass(h));
    eigs(&problem, m, half_sign_point(domain))
}

/// Lowest `m` eigenvalues of the NDN operator.
pub fn ndn_spectrum(domain: &Domain, a: f64, h: f64, m: usize) -> Result<Eigs> {
    mixed_spectrum(&assemble_mixed(domain, MixedVariant::Ndn, a, h)?, domain, m)
}

/// Lowest `m` eigenvalues of the DND operator.
pub fn dnd_spectrum(domain: &Domain, a: f64, h: f64, m: usize) -> Result<Eigs> {
    mixed_spectrum(&assemble_mixed(domain, MixedVariant::Dnd, a, h)?, domain, m)
}

/// Half-domain Laplacian with Dirichlet on the whole axis.
pub fn dirichlet_half_spectrum(domain: &Domain, h: f64, m: usize) -> Result<Eigs> {
    let grid = half_grid(domain, h, |_| true)?;
    let problem = Problem::from_grid(grid, SolverChoice::Direct)?.with_mass(half_mass(h));
    eigs(&problem, m, half_sign_point(domain))
}

pub fn slit_spectrum(domain: &Domain, a: f64, h: f64, m: usize) -> Result<Eigs> {
    let problem = Problem::from_grid(assemble_slit(domain, a, h)?, SolverChoice::Direct)?;
    eigs(&problem, m, domain.designated_sample_point())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pairing {
    /// 1-based.
    pub index: usize,
    pub reference: f64,
    pub partner: f64,
    pub sector: Sector,
    pub relative_mismatch: f64,
}

/// The first `m` values of the union of two sector spectra, each holding
/// at least its own `m` lowest values.
fn merge(sym: &[f64], anti: &[f64], m: usize) -> Result<Vec<(f64, Sector)>> {
    let mut all: Vec<(f64, Sector)> = sym
        .iter()
        .map(|&v| (v, Sector::Symmetric))
        .chain(anti.iter().map(|&v| (v, Sector::Antisymmetric)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sym.len() < m || anti.len() < m {
        return invalid(format!("pairing {m} values needs {m} eigenvalues from each sector"));
    }
    all.truncate(m);
    Ok(all)
}

fn pair(reference: &[f64], union: &[(f64, Sector)]) -> Vec<Pairing> {
    reference
        .iter()
        .zip(union)
        .enumerate()
        .map(|(i, (&r, &(p, sector)))| Pairing {
            index: i + 1,
            reference: r,
            partner: p,
            sector,
            relative_mismatch: (p - r).abs() / r,
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IsospectralityReport {
    pub h: f64,
    pub a: f64,
    pub magnetic: Vec<f64>,
    pub ndn: Vec<f64>,
    pub dnd: Vec<f64>,
    pub pairs: Vec<Pairing>,
    pub max_relative_mismatch: f64,
    /// Largest `|u|/max|u|` of symmetric-sector magnetic eigenfunctions on
    /// the axis nodes strictly between the poles.
    pub zero_set_ratio: f64,
}

impl IsospectralityReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_relative_mismatch <= tol
    }
}

/// Compares the first `m` magnetic eigenvalues with the sorted union of the
/// NDN and DND spectra on the same lattice.
pub fn isospectrality_check(domain: &Domain, a: f64, h: f64, m: usize) -> Result<IsospectralityReport> {
    if m == 0 {
        return invalid("at least one eigenvalue must be compared");
    }
    let poles = PolePair::new(domain, a)?;
    let op = assemble_magnetic(domain, &poles, h)?;
    let mag = magnetic_spectrum(&op, domain, m)?;
    let (ndn, dnd) = (ndn_spectrum(domain, a, h, m)?, dnd_spectrum(domain, a, h, m)?);
    let union = merge(&ndn.values, &dnd.values, m)?;
    let pairs = pair(&mag.values, &union);
    let max = pairs.iter().map(|p| p.relative_mismatch).fold(0.0, f64::max);
    let lat = op.grid.lattice;
    let mut zero_set = 0.0f64;
    for (p, field) in pairs.iter().zip(&mag.fields) {
        if p.sector != Sector::Symmetric {
            continue;
        }
        let scale = field.max_abs();
        for (idx, v) in field.values.iter().enumerate() {
            let x = lat.point(idx);
            if on_axis(x, h) && x[0].abs() < a {
                zero_set = zero_set.max(v.abs() / scale);
            }
        }
    }
    Ok(IsospectralityReport {
        h,
        a,
        magnetic: mag.values,
        ndn: ndn.values,
        dnd: dnd.values,
        pairs,
        max_relative_mismatch: max,
        zero_set_ratio: zero_set,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorDecomposition {
    pub h: f64,
    pub a: f64,
    pub slit: Vec<f64>,
    pub pairs: Vec<Pairing>,
    pub max_relative_mismatch: f64,
}

/// The slit-domain spectrum against the union of the NDN spectrum
/// (symmetric sector) and the axis-Dirichlet half spectrum (antisymmetric).
/// On a mirror-symmetric lattice this is an exact identity.
pub fn sector_decomposition(domain: &Domain, a: f64, h: f64, m: usize) -> Result<SectorDecomposition> {
    let slit = slit_spectrum(domain, a, h, m)?;
    let sym = ndn_spectrum(domain, a, h, m)?;
    let anti = dirichlet_half_spectrum(domain, h, m)?;
    let union = merge(&sym.values, &anti.values, m)?;
    let pairs = pair(&slit.values, &union);
    let max = pairs.iter().map(|p| p.relative_mismatch).fold(0.0, f64::max);
    Ok(SectorDecomposition { h, a, slit: slit.values, pairs, max_relative_mismatch: max })
}

/// λ_N along the ladder through each route on one grid.
#[derive(Clone, Debug, Serialize)]
pub struct RouteRow {
    pub a: f64,
    pub h: f64,
    /// `λ_N(Ω∖s_a)` from the full slit domain.
    pub slit: f64,
    /// `N`-th value of NDN ∪ axis-Dirichlet half.
    pub ndn: f64,
    /// `N`-th value of NDN ∪ DND, the lattice AB eigenvalue by isospectrality.
    pub ab: f64,
    pub relative_mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbCollisionReport {
    pub ladder: LadderReport,
    pub routes: Vec<RouteRow>,
    pub max_route_mismatch: f64,
}

/// Eigenvalue asymptotics as the poles `(∓a, 0)` collide at the origin.
/// The slit route runs the ladder verification; the NDN route recomputes
/// `λ_N` on every grid of the ladder from the half-domain operators.
pub fn ab_collision_asymptotics(domain: &Domain, n: usize, ladder: &[f64], h_rule: HRule) -> Result<AbCollisionReport> {
    require_mirror(domain)?;
    for &a in ladder {
        PolePair::new(domain, a)?;
    }
    let mut exp = Experiment::new(TheoremId::TAb, domain.clone(), Template::Segment { angle: 0.0 }, ladder.to_vec());
    exp.n = n;
    exp.h_rule = h_rule;
    let report = verify(&exp)?;
    let mut jobs = Vec::new();
    for row in &report.rows {
        for g in &row.grids {
            jobs.push((row.eps, g.h, g.lambda_perturbed));
        }
    }
    let routes = crate::par::map(&jobs, |&(a, h, slit)| -> Result<RouteRow> {
        let ndn = ndn_spectrum(domain, a, h, n)?;
        let anti = dirichlet_half_spectrum(domain, h, n)?;
        let dnd = dnd_spectrum(domain, a, h, n)?;
        let nth = |u: Vec<(f64, Sector)>| u[n - 1].0;
        let ndn_route = nth(merge(&ndn.values, &anti.values, n)?);
        let ab = nth(merge(&ndn.values, &dnd.values, n)?);
        Ok(RouteRow { a, h, slit, ndn: ndn_route, ab, relative_mismatch: (ndn_route - slit).abs() / slit })
    });
    let routes = routes.into_iter().collect::<Result<Vec<_>>>()?;
    let max = routes.iter().map(|r| r.relative_mismatch).fold(0.0, f64::max);
    Ok(AbCollisionReport { ladder: report, routes, max_route_mismatch: max })
}
