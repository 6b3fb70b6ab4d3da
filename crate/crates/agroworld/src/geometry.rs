//! Desk-scale planar geometry: coordinate reference systems, simple polygons,
//! shoelace areas, ray-cast containment, and a positive-area overlap test.
//!
//! Polygons are restricted to a single counter-clockwise exterior ring without
//! holes. That keeps every operation exact enough to verify against brute
//! force: areas come from the shoelace formula, membership from ray casting.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Coordinate reference system.
///
/// `Geo` is degrees lon/lat. `Metric` is a local equirectangular projection in
/// meters, parameterized by the standard latitude `lat0` at which east-west
/// distances are true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Crs {
    Geo,
    Metric { lat0: f64 },
}

impl Crs {
    pub fn metric(lat0: f64) -> Crs {
        Crs::Metric { lat0 }
    }
}

impl fmt::Display for Crs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Crs::Geo => write!(f, "GEO"),
            Crs::Metric { lat0 } => write!(f, "METRIC(lat0={lat0})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon ring needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon must have exactly one exterior ring (holes unsupported), got {0}")]
    RingCount(usize),
    #[error("exterior ring must be counter-clockwise with positive area (signed area {0})")]
    NotCounterClockwise(f64),
    #[error("polygon ring is self-intersecting")]
    SelfIntersecting,
    #[error("vertex coordinate is not finite")]
    NonFiniteVertex,
    #[error("coordinate out of CRS domain: {0}")]
    OutOfDomain(String),
}

/// A simple polygon: one counter-clockwise exterior ring, stored unclosed
/// (the last vertex is not a repeat of the first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub rings: Vec<Vec<[f64; 2]>>,
    pub crs: Crs,
}

impl Polygon {
    /// Validate and construct. A trailing vertex equal to the first is
    /// tolerated on input and dropped.
    pub fn new(mut rings: Vec<Vec<[f64; 2]>>, crs: Crs) -> Result<Polygon, GeometryError> {
        if rings.len() != 1 {
            return Err(GeometryError::RingCount(rings.len()));
        }
        let ring = &mut rings[0];
        if ring.len() >= 2 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeometryError::TooFewVertices(ring.len()));
        }
        if ring.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(GeometryError::NonFiniteVertex);
        }
        let poly = Polygon { rings, crs };
        let signed = poly.signed_area();
        if signed <= 0.0 {
            return Err(GeometryError::NotCounterClockwise(signed));
        }
        if !poly.is_simple() {
            return Err(GeometryError::SelfIntersecting);
        }
        if let Crs::Geo = crs {
            for p in &poly.rings[0] {
                if p[0].abs() > 180.0 || p[1].abs() > 90.0 {
                    return Err(GeometryError::OutOfDomain(format!(
                        "GEO vertex ({}, {}) outside lon ±180 / lat ±90",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle helper.
    pub fn rect(min: [f64; 2], max: [f64; 2], crs: Crs) -> Result<Polygon, GeometryError> {
        Polygon::new(
            vec![vec![min, [max[0], min[1]], max, [min[0], max[1]]]],
            crs,
        )
    }

    pub fn exterior(&self) -> &[[f64; 2]] {
        &self.rings[0]
    }

    /// Shoelace signed area; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        let ring = self.exterior();
        let n = ring.len();
        let mut sum = 0.0;
        for i in 0..n {
            let [x1, y1] = ring[i];
            let [x2, y2] = ring[(i + 1) % n];
            sum += x1 * y2 - x2 * y1;
        }
        sum / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area()
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut min = [f64::INFINITY, f64::INFINITY];
        let mut max = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in self.exterior() {
            min[0] = min[0].min(p[0]);
            min[1] = min[1].min(p[1]);
            max[0] = max[0].max(p[0]);
            max[1] = max[1].max(p[1]);
        }
        (min, max)
    }

    /// Bounding-box center. Used as a deterministic anchor point, e.g. for
    /// choosing the standard latitude of an auto-selected metric CRS.
    pub fn anchor(&self) -> [f64; 2] {
        let (min, max) = self.bbox();
        [(min[0] + max[0]) / 2.0, (min[1] + max[1]) / 2.0]
    }

    /// Mean of the vertices; strictly interior for convex rings.
    pub fn vertex_mean(&self) -> [f64; 2] {
        let ring = self.exterior();
        let n = ring.len() as f64;
        let (sx, sy) = ring.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    /// Even-odd ray-cast containment. Boundary points are resolved by the
    /// half-open edge rule and may land on either side; callers must not rely
    /// on a specific boundary verdict.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let ring = self.exterior();
        let n = ring.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let [xi, yi] = ring[i];
            let [xj, yj] = ring[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let ring = self.exterior();
        let n = ring.len();
        (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
    }

    fn is_simple(&self) -> bool {
        let ring = self.exterior();
        let n = ring.len();
        for i in 0..n {
            for k in i + 1..n {
                // Skip adjacent edges (they share a vertex by construction).
                if k == i + 1 || (i == 0 && k == n - 1) {
                    continue;
                }
                let a = (ring[i], ring[(i + 1) % n]);
                let b = (ring[k], ring[(k + 1) % n]);
                if segments_cross(a.0, a.1, b.0, b.1) {
                    return false;
                }
            }
        }
        true
    }

    /// Rebuild with mapped vertices, bypassing validation. The caller must
    /// supply a map that preserves simplicity and orientation (axis-wise
    /// positive scalings do).
    pub(crate) fn map_vertices<F: Fn([f64; 2]) -> [f64; 2]>(&self, f: F, crs: Crs) -> Polygon {
        Polygon {
            rings: vec![self.exterior().iter().map(|p| f(*p)).collect()],
            crs,
        }
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Proper crossing test: segments intersect at a single interior point.
fn segments_cross(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// Whether two simple polygons overlap with positive area.
///
/// True when any edges properly cross or either polygon has a vertex (or its
/// vertex mean) inside the other. Exact boundary contact sits on the ray-cast
/// ambiguity and may be classified either way; callers must not place
/// geometries that merely touch. Both polygons must be in the same CRS; this
/// function compares raw coordinates and leaves CRS checking to the caller.
pub fn overlaps_positively(a: &Polygon, b: &Polygon) -> bool {
    let (amin, amax) = a.bbox();
    let (bmin, bmax) = b.bbox();
    if amin[0] > bmax[0] || bmin[0] > amax[0] || amin[1] > bmax[1] || bmin[1] > amax[1] {
        return false;
    }
    for p in a.exterior() {
        if b.contains(p[0], p[1]) {
            return true;
        }
    }
    for p in b.exterior() {
        if a.contains(p[0], p[1]) {
            return true;
        }
    }
    let ca = a.vertex_mean();
    if b.contains(ca[0], ca[1]) {
        return true;
    }
    let cb = b.vertex_mean();
    if a.contains(cb[0], cb[1]) {
        return true;
    }
    for (a1, a2) in a.edges() {
        for (b1, b2) in b.edges() {
            if segments_cross(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}
