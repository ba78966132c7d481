//! Planar primitives and the rectangular domain with polygonal obstacles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Sign of the turn a -> b -> c, with a small tolerance band treated as collinear.
fn orient(a: Point, b: Point, c: Point) -> i8 {
    let v = b.sub(a).cross(c.sub(a));
    let scale = 1.0 + b.sub(a).norm() * c.sub(a).norm();
    if v > EPS * scale {
        1
    } else if v < -EPS * scale {
        -1
    } else {
        0
    }
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Parameters `t` in [0, 1] along `p -> q` where it meets segment `a -> b`.
/// Collinear overlaps report both overlap endpoints.
fn segment_hits(p: Point, q: Point, a: Point, b: Point, out: &mut Vec<f64>) {
    let d = q.sub(p);
    let e = b.sub(a);
    let denom = d.cross(e);
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return;
    }
    if denom.abs() > EPS * (1.0 + d.norm() * e.norm()) {
        let t = a.sub(p).cross(e) / denom;
        let u = a.sub(p).cross(d) / denom;
        if (-EPS..=1.0 + EPS).contains(&t) && (-EPS..=1.0 + EPS).contains(&u) {
            out.push(t.clamp(0.0, 1.0));
        }
    } else if orient(p, q, a) == 0 {
        for c in [a, b] {
            let t = c.sub(p).dot(d) / len2;
            if (0.0..=1.0).contains(&t) {
                out.push(t);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned rectangle with lower-left corner `(x, y)`.
    pub fn rect(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self::new(vec![
            Point::new(x, y),
            Point::new(x + w, y),
            Point::new(x + w, y + h),
            Point::new(x, y + h),
        ])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.edges()
            .any(|(a, b)| orient(a, b, p) == 0 && on_segment(a, b, p))
    }

    /// Strict interior test; boundary points are outside.
    pub fn contains_strict(&self, p: Point) -> bool {
        if self.on_boundary(p) {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when the open interior of the polygon meets segment `p -> q`.
    pub fn blocks_segment(&self, p: Point, q: Point) -> bool {
        let (lo, hi) = self.bounds();
        if p.x.max(q.x) < lo.x || p.x.min(q.x) > hi.x || p.y.max(q.y) < lo.y || p.y.min(q.y) > hi.y {
            return false;
        }
        let mut ts = vec![0.0, 1.0];
        for (a, b) in self.edges() {
            segment_hits(p, q, a, b, &mut ts);
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2).any(|w| {
            w[1] - w[0] > 1e-12 && self.contains_strict(p.lerp(q, 0.5 * (w[0] + w[1])))
        })
    }

    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Closest point on the boundary and the outward unit normal of that edge.
    pub fn nearest_edge(&self, p: Point) -> (f64, Point) {
        let ccw = self.signed_area() > 0.0;
        let mut best = (f64::INFINITY, Point::new(1.0, 0.0));
        for (a, b) in self.edges() {
            let e = b.sub(a);
            let t = (p.sub(a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
            let d = p.dist(a.lerp(b, t));
            if d < best.0 {
                let n = if ccw { Point::new(e.y, -e.x) } else { Point::new(-e.y, e.x) };
                best = (d, n.scale(1.0 / n.norm()));
            }
        }
        best
    }

    pub fn closest_boundary_point(&self, p: Point) -> Point {
        let mut best = (f64::INFINITY, p);
        for (a, b) in self.edges() {
            let e = b.sub(a);
            let t = (p.sub(a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
            let q = a.lerp(b, t);
            let d = p.dist(q);
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

fn polygons_intersect(p: &Polygon, q: &Polygon) -> bool {
    for (a, b) in p.edges() {
        for (c, d) in q.edges() {
            if segments_touch(a, b, c, d) {
                return true;
            }
        }
    }
    p.contains_strict(q.vertices[0]) || q.contains_strict(p.vertices[0])
}

/// Rectangle `[0, width] x [0, height]` minus the interiors of the obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub obstacles: Vec<Polygon>,
}

impl Domain {
    pub fn new(width: f64, height: f64, obstacles: Vec<Polygon>) -> Result<Self> {
        let d = Self {
            width,
            height,
            obstacles,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn empty(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidDomain("width and height must be positive".into()));
        }
        for (i, poly) in self.obstacles.iter().enumerate() {
            if poly.vertices.len() < 3 {
                return Err(Error::InvalidDomain(format!("obstacle {i} has fewer than 3 vertices")));
            }
            if poly.signed_area().abs() <= EPS {
                return Err(Error::InvalidDomain(format!("obstacle {i} is degenerate")));
            }
            let (lo, hi) = poly.bounds();
            if lo.x <= 0.0 || lo.y <= 0.0 || hi.x >= self.width || hi.y >= self.height {
                return Err(Error::InvalidDomain(format!(
                    "obstacle {i} is not strictly inside the rectangle"
                )));
            }
            if !poly.is_simple() {
                return Err(Error::InvalidDomain(format!("obstacle {i} self-intersects")));
            }
            for (j, other) in self.obstacles.iter().enumerate().skip(i + 1) {
                if polygons_intersect(poly, other) {
                    return Err(Error::InvalidDomain(format!("obstacles {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn in_rect(&self, p: Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.in_rect(p) && !self.obstacles.iter().any(|o| o.contains_strict(p))
    }

    /// Nearest free point: clamps into the rectangle and pushes points out of
    /// obstacle interiors onto the closest boundary.
    pub fn snap_free(&self, p: Point) -> Point {
        let mut q = Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height));
        for _ in 0..4 {
            let Some(obs) = self.obstacles.iter().find(|o| o.contains_strict(q)) else {
                break;
            };
            let b = obs.closest_boundary_point(q);
            let (_, n) = obs.nearest_edge(q);
            // step a hair past the edge so rounding cannot leave us inside
            q = b.add(n.scale(1e-9 * (1.0 + self.width.max(self.height))));
        }
        q
    }

    /// Segment stays in the rectangle and never enters an obstacle interior.
    pub fn segment_free(&self, p: Point, q: Point) -> bool {
        self.in_rect(p) && self.in_rect(q) && !self.obstacles.iter().any(|o| o.blocks_segment(p, q))
    }

    pub fn obstacle_vertices(&self) -> Vec<Point> {
        self.obstacles
            .iter()
            .flat_map(|o| o.vertices.iter().copied())
            .collect()
    }

    /// Inward normals of every boundary piece within `reach` of `p`.
    pub fn contact_normals(&self, p: Point, reach: f64) -> Vec<Point> {
        let mut normals = Vec::new();
        if p.x <= reach {
            normals.push(Point::new(1.0, 0.0));
        }
        if p.x >= self.width - reach {
            normals.push(Point::new(-1.0, 0.0));
        }
        if p.y <= reach {
            normals.push(Point::new(0.0, 1.0));
        }
        if p.y >= self.height - reach {
            normals.push(Point::new(0.0, -1.0));
        }
        for obs in &self.obstacles {
            let (d, n) = obs.nearest_edge(p);
            if d <= reach {
                normals.push(n);
            }
        }
        normals
    }

    /// Grid of free points with the given spacing, anchored at the origin.
    pub fn grid_points(&self, spacing: f64) -> Vec<Point> {
        let nx = (self.width / spacing + 1e-9).floor() as usize;
        let ny = (self.height / spacing + 1e-9).floor() as usize;
        let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let p = Point::new(i as f64 * spacing, j as f64 * spacing);
                if self.is_free(p) {
                    pts.push(p);
                }
            }
        }
        pts
    }

    pub fn free_area_estimate(&self) -> f64 {
        let obstacles: f64 = self.obstacles.iter().map(|o| o.signed_area().abs()).sum();
        self.width * self.height - obstacles
    }
}
