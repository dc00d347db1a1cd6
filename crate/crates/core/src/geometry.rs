//! Closed polygonal boundaries in the plane.
//!
//! A [`BoundaryMesh`] is an ordered, counterclockwise list of straight
//! panels. Curved boundaries are represented by inscribed polygons.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Polar angle in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.x2.atan2(self.x1)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x1 * rhs, self.x2 * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// A straight boundary segment from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: Point,
    pub b: Point,
}

impl Panel {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Point {
        (self.a + self.b) * 0.5
    }

    pub fn tangent(&self) -> Point {
        (self.b - self.a) * (1.0 / self.length())
    }

    /// Point at local coordinate `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> Point {
        self.a + (self.b - self.a) * t
    }

    pub fn split(&self) -> (Panel, Panel) {
        let m = self.midpoint();
        (Panel::new(self.a, m), Panel::new(m, self.b))
    }

    pub fn distance_to(&self, x: Point) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        let t = ((x - self.a).dot(d) / len2).clamp(0.0, 1.0);
        x.dist(self.at(t))
    }

    /// Minimum distance between two segments (zero if they intersect).
    pub fn distance_to_panel(&self, other: &Panel) -> f64 {
        if segments_intersect(self, other) {
            return 0.0;
        }
        self.distance_to(other.a)
            .min(self.distance_to(other.b))
            .min(other.distance_to(self.a))
            .min(other.distance_to(self.b))
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: &Panel, c: Point) -> bool {
    c.x1 >= p.a.x1.min(p.b.x1)
        && c.x1 <= p.a.x1.max(p.b.x1)
        && c.x2 >= p.a.x2.min(p.b.x2)
        && c.x2 <= p.a.x2.max(p.b.x2)
}

fn segments_intersect(p: &Panel, q: &Panel) -> bool {
    let d1 = orient(q.a, q.b, p.a);
    let d2 = orient(q.a, q.b, p.b);
    let d3 = orient(p.a, p.b, q.a);
    let d4 = orient(p.a, p.b, q.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q, p.a))
        || (d2 == 0.0 && on_segment(q, p.b))
        || (d3 == 0.0 && on_segment(p, q.a))
        || (d4 == 0.0 && on_segment(p, q.b))
}

/// Closed, simple, counterclockwise polygonal curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    panels: Vec<Panel>,
}

impl BoundaryMesh {
    /// `n` equal chords inscribed in the circle of `radius` about the origin,
    /// first vertex at angle zero.
    pub fn circle(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        if n < 3 {
            return Err(Error::param("N", format!("need at least 3 panels, got {n}")));
        }
        let vertices: Vec<Point> = (0..n)
            .map(|i| Point::polar(radius, 2.0 * std::f64::consts::PI * i as f64 / n as f64))
            .collect();
        Self::from_ccw_vertices(&vertices)
    }

    /// One panel per polygon edge; clockwise input is reversed.
    pub fn polygon(vertices: &[Point]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {p}")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidMesh(format!(
                    "repeated consecutive vertex {} at index {i}",
                    vertices[i]
                )));
            }
        }
        let area = signed_area(vertices);
        if area == 0.0 {
            return Err(Error::InvalidMesh("polygon has zero area".into()));
        }
        if area > 0.0 {
            Self::from_ccw_vertices(vertices)
        } else {
            // keep the first vertex first so clockwise and counterclockwise
            // listings of the same polygon give the same mesh
            let mut v = Vec::with_capacity(n);
            v.push(vertices[0]);
            v.extend(vertices[1..].iter().rev());
            Self::from_ccw_vertices(&v)
        }
    }

    fn from_ccw_vertices(vertices: &[Point]) -> Result<Self> {
        let n = vertices.len();
        let panels = (0..n)
            .map(|i| Panel::new(vertices[i], vertices[(i + 1) % n]))
            .collect();
        let mesh = Self { panels };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks closure, positive panel lengths, orientation and simplicity.
    pub fn validate(&self) -> Result<()> {
        let n = self.panels.len();
        if n < 3 {
            return Err(Error::InvalidMesh(format!("{n} panels")));
        }
        for (i, p) in self.panels.iter().enumerate() {
            if !(p.length() > 0.0) {
                return Err(Error::InvalidMesh(format!("panel {i} has zero length")));
            }
            if p.b != self.panels[(i + 1) % n].a {
                return Err(Error::InvalidMesh(format!("not closed at panel {i}")));
            }
        }
        if signed_area(&self.vertices()) <= 0.0 {
            return Err(Error::InvalidMesh("orientation is not counterclockwise".into()));
        }
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_intersect(&self.panels[i], &self.panels[j]) {
                    return Err(Error::InvalidMesh(format!(
                        "panels {i} and {j} intersect"
                    )));
                }
            }
        }
        // adjacent panels may only share their common vertex
        for i in 0..n {
            let p = &self.panels[i];
            let q = &self.panels[(i + 1) % n];
            if orient(p.a, p.b, q.b) == 0.0 && (q.b - q.a).dot(p.b - p.a) < 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "panels {i} and {} fold back onto each other",
                    (i + 1) % n
                )));
            }
        }
        Ok(())
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn vertices(&self) -> Vec<Point> {
        self.panels.iter().map(|p| p.a).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.panels.iter().map(Panel::length).sum()
    }

    pub fn max_panel_length(&self) -> f64 {
        self.panels.iter().map(Panel::length).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for (i, p) in v.iter().enumerate() {
            for q in &v[i + 1..] {
                d = d.max(p.dist(*q));
            }
        }
        d
    }

    /// Bisects every panel at its midpoint.
    pub fn refine(&self) -> Self {
        let panels = self
            .panels
            .iter()
            .flat_map(|p| {
                let (l, r) = p.split();
                [l, r]
            })
            .collect();
        Self { panels }
    }

    /// The mesh dilated by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        let panels = self
            .panels
            .iter()
            .map(|p| Panel::new(p.a * factor, p.b * factor))
            .collect();
        Self { panels }
    }

    /// Whether panels `i` and `j` share a vertex (and are distinct).
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let n = self.len();
        i != j && ((i + 1) % n == j || (j + 1) % n == i)
    }

    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        self.panels
            .iter()
            .map(|p| p.distance_to(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Short content hash of the vertex coordinates.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.panels {
            hasher.update(p.a.x1.to_le_bytes());
            hasher.update(p.a.x2.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses the plain-text vertex format: one `x1 x2` pair per line,
    /// `#` comment lines, closed implicitly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Format(format!(
                    "line {}: expected `x1 x2`, got {line:?}",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}: {s:?}", lineno + 1)))
            };
            vertices.push(Point::new(parse(fields[0])?, parse(fields[1])?));
        }
        Self::polygon(&vertices)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {} panels, counterclockwise\n", self.len());
        for v in self.vertices() {
            out.push_str(&format!("{:.16e} {:.16e}\n", v.x1, v.x2));
        }
        out
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}
