//! Domains, removed compact sets and concentrating families.
//!
//! All coordinates handed to or returned from this module are *shifted*: the
//! designated concentration point of the domain is the origin.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Shape in its native coordinates: the rectangle is `[0,a]×[0,b]`, the disk
/// is centred at the native origin, polygons are given by their vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rectangle { a: f64, b: f64 },
    Disk { radius: f64 },
    Polygon { vertices: Vec<Point> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub shape: Shape,
    /// Concentration point x₀ in native coordinates.
    pub origin: Point,
    #[serde(default)]
    pub mirror_symmetric: bool,
    /// Point (shifted coordinates) where eigenvectors are made positive.
    #[serde(default)]
    pub sample_point: Option<Point>,
}

impl Domain {
    pub fn new(shape: Shape, origin: Point, mirror_symmetric: bool) -> Result<Self> {
        let d = Domain { shape, origin, mirror_symmetric, sample_point: None };
        d.validate()?;
        Ok(d)
    }

    /// Rectangle `[0,a]×[0,b]` with the concentration point at its centre.
    pub fn rectangle(a: f64, b: f64) -> Result<Self> {
        Self::new(Shape::Rectangle { a, b }, [a / 2.0, b / 2.0], true)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(Shape::Disk { radius }, [0.0, 0.0], true)
    }

    pub fn polygon(vertices: Vec<Point>, origin: Point) -> Result<Self> {
        let mut d = Domain { shape: Shape::Polygon { vertices }, origin, mirror_symmetric: false, sample_point: None };
        d.validate()?;
        d.mirror_symmetric = d.sampled_mirror_symmetry();
        Ok(d)
    }

    pub fn with_origin(mut self, origin: Point) -> Result<Self> {
        self.origin = origin;
        if self.mirror_symmetric && !self.sampled_mirror_symmetry() {
            self.mirror_symmetric = false;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_sample_point(mut self, p: Point) -> Result<Self> {
        if !self.contains(p) {
            return invalid(format!("sample point {p:?} is not inside the domain"));
        }
        self.sample_point = Some(p);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Rectangle { a, b } if !(*a > 0.0 && *b > 0.0) => {
                return invalid("rectangle sides must be positive")
            }
            Shape::Disk { radius } if !(*radius > 0.0) => return invalid("disk radius must be positive"),
            Shape::Polygon { vertices } if vertices.len() < 3 => {
                return invalid("polygon needs at least three vertices")
            }
            _ => {}
        }
        if !self.contains([0.0, 0.0]) {
            return invalid("the concentration point must lie strictly inside the domain");
        }
        if self.mirror_symmetric && !self.sampled_mirror_symmetry() {
            return invalid("domain flagged mirror-symmetric but membership is not symmetric in x2");
        }
        Ok(())
    }

    fn native(&self, p: Point) -> Point {
        [p[0] + self.origin[0], p[1] + self.origin[1]]
    }

    /// Strict membership in the open set (shifted coordinates).
    pub fn contains(&self, p: Point) -> bool {
        let q = self.native(p);
        match &self.shape {
            Shape::Rectangle { a, b } => q[0] > 0.0 && q[0] < *a && q[1] > 0.0 && q[1] < *b,
            Shape::Disk { radius } => q[0] * q[0] + q[1] * q[1] < radius * radius,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                for k in 0..n {
                    if point_segment_distance(q, vertices[k], vertices[(k + 1) % n]) < 1e-14 {
                        return false;
                    }
                }
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (vi, vj) = (vertices[i], vertices[j]);
                    if (vi[1] > q[1]) != (vj[1] > q[1])
                        && q[0] < (vj[0] - vi[0]) * (q[1] - vi[1]) / (vj[1] - vi[1]) + vi[0]
                    {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// Distance from an interior point to the boundary (0 outside).
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        let q = self.native(p);
        match &self.shape {
            Shape::Rectangle { a, b } => q[0].min(a - q[0]).min(q[1]).min(b - q[1]),
            Shape::Disk { radius } => radius - q[0].hypot(q[1]),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|k| point_segment_distance(q, vertices[k], vertices[(k + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Bounding box `(lo, hi)` in shifted coordinates.
    pub fn bbox(&self) -> (Point, Point) {
        let (lo, hi) = match &self.shape {
            Shape::Rectangle { a, b } => ([0.0, 0.0], [*a, *b]),
            Shape::Disk { radius } => ([-radius, -radius], [*radius, *radius]),
            Shape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for c in 0..2 {
                        lo[c] = lo[c].min(v[c]);
                        hi[c] = hi[c].max(v[c]);
                    }
                }
                (lo, hi)
            }
        };
        (
            [lo[0] - self.origin[0], lo[1] - self.origin[1]],
            [hi[0] - self.origin[0], hi[1] - self.origin[1]],
        )
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Rectangle { a, b } => a * b,
            Shape::Disk { radius } => std::f64::consts::PI * radius * radius,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let s: f64 = (0..n)
                    .map(|k| {
                        let (p, q) = (vertices[k], vertices[(k + 1) % n]);
                        p[0] * q[1] - q[0] * p[1]
                    })
                    .sum();
                0.5 * s.abs()
            }
        }
    }

    /// Fraction `θ ∈ (0,1]` of the way from an inside point `p` to an outside
    /// point `q` at which the segment `pq` leaves the domain.
    pub fn boundary_fraction(&self, p: Point, q: Point) -> f64 {
        let (pn, qn) = (self.native(p), self.native(q));
        let d = [qn[0] - pn[0], qn[1] - pn[1]];
        let t = match &self.shape {
            Shape::Rectangle { a, b } => {
                let mut t = 1.0f64;
                for (c, hi) in [(0usize, *a), (1usize, *b)] {
                    if d[c] > 0.0 && qn[c] >= hi {
                        t = t.min((hi - pn[c]) / d[c]);
                    } else if d[c] < 0.0 && qn[c] <= 0.0 {
                        t = t.min(-pn[c] / d[c]);
                    }
                }
                t
            }
            Shape::Disk { radius } => {
                // |pn + t d| = R, larger root
                let aa = d[0] * d[0] + d[1] * d[1];
                let bb = 2.0 * (pn[0] * d[0] + pn[1] * d[1]);
                let cc = pn[0] * pn[0] + pn[1] * pn[1] - radius * radius;
                let disc = (bb * bb - 4.0 * aa * cc).max(0.0);
                // stable form of (-b + sqrt(disc)) / 2a with c < 0
                if bb >= 0.0 {
                    -2.0 * cc / (bb + disc.sqrt())
                } else {
                    (-bb + disc.sqrt()) / (2.0 * aa)
                }
            }
            Shape::Polygon { .. } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.contains([p[0] + mid * (q[0] - p[0]), p[1] + mid * (q[1] - p[1])]) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        };
        t.clamp(1e-6, 1.0)
    }

    /// Membership symmetry under `(x1,x2) ↦ (x1,−x2)`, checked on a sample lattice.
    pub fn sampled_mirror_symmetry(&self) -> bool {
        let (lo, hi) = self.bbox();
        let n = 97;
        for i in 0..=n {
            for j in 0..=n {
                // irrational offsets keep samples off the boundary
                let x = lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.318) / (n as f64 + 1.0);
                let y = lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.271) / (n as f64 + 1.0);
                if self.contains([x, y]) != self.contains([x, -y]) {
                    return false;
                }
            }
        }
        true
    }

    /// Point where eigenvectors are normalised to be positive.
    pub fn designated_sample_point(&self) -> Point {
        if let Some(p) = self.sample_point {
            return p;
        }
        let (lo, hi) = self.bbox();
        let cand = [lo[0] + 0.3137 * (hi[0] - lo[0]), lo[1] + 0.2871 * (hi[1] - lo[1])];
        if self.contains(cand) {
            cand
        } else {
            [0.0, 0.0]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactShape {
    Segment { center: Point, half_length: f64, angle: f64 },
    ClosedDisk { center: Point, radius: f64 },
    Polyline { points: Vec<Point> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactSet {
    pub shape: CompactShape,
    pub epsilon: f64,
}

impl CompactSet {
    pub fn segment(center: Point, half_length: f64, angle: f64) -> Self {
        CompactSet { shape: CompactShape::Segment { center, half_length, angle }, epsilon: half_length }
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        CompactSet { shape: CompactShape::ClosedDisk { center, radius }, epsilon: radius }
    }

    pub fn polyline(points: Vec<Point>, epsilon: f64) -> Self {
        CompactSet { shape: CompactShape::Polyline { points }, epsilon }
    }

    fn segment_ends(center: Point, half_length: f64, angle: f64) -> (Point, Point) {
        let (s, c) = angle.sin_cos();
        (
            [center[0] - half_length * c, center[1] - half_length * s],
            [center[0] + half_length * c, center[1] + half_length * s],
        )
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            CompactShape::Segment { half_length, .. } => 2.0 * half_length,
            CompactShape::ClosedDisk { radius, .. } => 2.0 * radius,
            CompactShape::Polyline { points } => {
                let mut d = 0.0f64;
                for (i, p) in points.iter().enumerate() {
                    for q in &points[i + 1..] {
                        d = d.max(dist(*p, *q));
                    }
                }
                d
            }
        }
    }

    /// Euclidean distance from `p` to the set (0 inside a disk).
    pub fn distance(&self, p: Point) -> f64 {
        match &self.shape {
            CompactShape::Segment { center, half_length, angle } => {
                let (a, b) = Self::segment_ends(*center, *half_length, *angle);
                point_segment_distance(p, a, b)
            }
            CompactShape::ClosedDisk { center, radius } => (dist(p, *center) - radius).max(0.0),
            CompactShape::Polyline { points } => {
                if points.len() == 1 {
                    return dist(p, points[0]);
                }
                points
                    .windows(2)
                    .map(|w| point_segment_distance(p, w[0], w[1]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Rasterization rule: disks take nodes with `|x − c| ≤ ε`, one-dimensional
    /// sets take nodes within `h/2`.
    pub fn covers_node(&self, p: Point, h: f64) -> bool {
        let slack = 1e-9 * h;
        match &self.shape {
            CompactShape::ClosedDisk { center, radius } => dist(p, *center) <= radius + slack,
            _ => self.distance(p) <= 0.5 * h + slack,
        }
    }

    /// Axis-aligned bounding box.
    pub fn bbox(&self) -> (Point, Point) {
        let pts: Vec<Point> = match &self.shape {
            CompactShape::Segment { center, half_length, angle } => {
                let (a, b) = Self::segment_ends(*center, *half_length, *angle);
                vec![a, b]
            }
            CompactShape::ClosedDisk { center, radius } => {
                vec![[center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius]]
            }
            CompactShape::Polyline { points } => points.clone(),
        };
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in pts {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (lo, hi)
    }

    /// Dense sample of points of the set (boundary points for disks).
    pub fn sample_points(&self) -> Vec<Point> {
        let n = 64;
        match &self.shape {
            CompactShape::Segment { center, half_length, angle } => {
                let (a, b) = Self::segment_ends(*center, *half_length, *angle);
                (0..=n)
                    .map(|i| {
                        let t = i as f64 / n as f64;
                        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                    })
                    .collect()
            }
            CompactShape::ClosedDisk { center, radius } => (0..n)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            CompactShape::Polyline { points } => {
                let mut out = vec![points[0]];
                for w in points.windows(2) {
                    for i in 1..=n {
                        let t = i as f64 / n as f64;
                        out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
                    }
                }
                out
            }
        }
    }

    /// Largest `|x|` over the set.
    pub fn radius_about_origin(&self) -> f64 {
        let r = self.sample_points().iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        match &self.shape {
            CompactShape::ClosedDisk { center, radius } => r.max(center[0].hypot(center[1]) + radius),
            _ => r,
        }
    }

    /// Smallest distance from the set to `∂Ω`; 0 if any part lies outside.
    pub fn clearance(&self, domain: &Domain) -> f64 {
        self.sample_points()
            .iter()
            .map(|&p| domain.distance_to_boundary(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` belongs to the set itself (not its rasterization).
    pub fn contains(&self, p: Point) -> bool {
        self.distance(p) <= 1e-12
    }
}

/// Unit-size shape scaled by ε to produce the members of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Template {
    /// Segment of half-length ε through the origin.
    Segment {
        #[serde(default)]
        angle: f64,
    },
    /// Closed disk of radius ε centred at the origin.
    Disk,
    /// Polyline whose vertices are multiplied by ε.
    Polyline { points: Vec<Point> },
}

impl Template {
    pub fn instantiate(&self, eps: f64) -> CompactSet {
        match self {
            Template::Segment { angle } => CompactSet::segment([0.0, 0.0], eps, *angle),
            Template::Disk => CompactSet::disk([0.0, 0.0], eps),
            Template::Polyline { points } => {
                CompactSet::polyline(points.iter().map(|p| [eps * p[0], eps * p[1]]).collect(), eps)
            }
        }
    }

    /// `diam K_ε / ε`.
    pub fn diameter_factor(&self) -> f64 {
        self.instantiate(1.0).diameter()
    }

    pub fn is_segment(&self) -> bool {
        matches!(self, Template::Segment { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Family {
    pub sets: Vec<CompactSet>,
    /// Every member satisfies `K_ε ⊂ B(0, C ε)` with this `C`.
    pub radius_constant: f64,
}

/// Members of a concentrating family for a strictly decreasing ladder of ε.
pub fn concentrating_family(domain: &Domain, template: &Template, ladder: &[f64]) -> Result<Family> {
    if ladder.is_empty() {
        return invalid("empty ε ladder");
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|&e| !(e > 0.0)) {
        return invalid("ε ladder must be positive and strictly decreasing");
    }
    let mut sets = Vec::with_capacity(ladder.len());
    let mut c = 0.0f64;
    for &eps in ladder {
        let k = template.instantiate(eps);
        if !(k.clearance(domain) > 0.0) {
            return Err(Error::Escapes { eps, reason: "set is not inside the open domain".into() });
        }
        c = c.max(k.radius_about_origin() / eps);
        sets.push(k);
    }
    Ok(Family { sets, radius_constant: c })
}

/// Two poles `(∓a, 0)` on the symmetry axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolePair {
    pub a: f64,
}

impl PolePair {
    pub fn new(domain: &Domain, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return invalid("pole half-distance must be positive");
        }
        if !domain.contains([-a, 0.0]) || !domain.contains([a, 0.0]) {
            return invalid(format!("poles (±{a}, 0) must lie inside the domain"));
        }
        Ok(PolePair { a })
    }

    pub fn minus(&self) -> Point {
        [-self.a, 0.0]
    }

    pub fn plus(&self) -> Point {
        [self.a, 0.0]
    }

    /// Whether `p` lies on the closed segment joining the poles.
    pub fn on_segment(&self, p: Point) -> bool {
        p[1] == 0.0 && p[0].abs() <= self.a
    }
}
