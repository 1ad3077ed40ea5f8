//! Convex taxiway corridors in the (latitude, longitude) plane.
//!
//! Corridors are small enough (hundreds of metres) that treating degrees as
//! planar coordinates does not change containment results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeofenceError {
    #[error("geofence needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("geofence has zero area")]
    Degenerate,
    #[error("geofence is not convex")]
    NotConvex,
}

/// A convex polygon given as `[lat, lon]` vertices, either winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Geofence {
    vertices: Vec<[f64; 2]>,
}

// Coordinates are compared in degrees; 1e-12 deg is well below a millimetre.
const EPS: f64 = 1e-12;

impl Geofence {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self, GeofenceError> {
        if vertices.len() < 3 {
            return Err(GeofenceError::TooFewVertices(vertices.len()));
        }
        let n = vertices.len();
        let mut sign = 0.0f64;
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if c.abs() <= EPS * EPS {
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return Err(GeofenceError::NotConvex);
            }
        }
        if sign == 0.0 || signed_area(&vertices).abs() <= EPS * EPS {
            return Err(GeofenceError::Degenerate);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Winding-number containment test; points on an edge count as inside.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let p = [lat, lon];
        let n = self.vertices.len();
        let mut winding = 0i32;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if on_segment(a, b, p) {
                return true;
            }
            // x = lon, y = lat
            if a[0] <= p[0] {
                if b[0] > p[0] && is_left(a, b, p) > 0.0 {
                    winding += 1;
                }
            } else if b[0] <= p[0] && is_left(a, b, p) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Vertex average; inside the polygon because it is convex.
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let (lat, lon) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(a, b), v| (a + v[0], b + v[1]));
        [lat / n, lon / n]
    }

    /// True when the interiors intersect. Polygons that only touch along an
    /// edge or at a vertex do not overlap.
    pub fn overlaps(&self, other: &Geofence) -> bool {
        for poly in [self, other] {
            let n = poly.vertices.len();
            for i in 0..n {
                let a = poly.vertices[i];
                let b = poly.vertices[(i + 1) % n];
                let axis = [-(b[1] - a[1]), b[0] - a[0]];
                let (min_a, max_a) = project(&self.vertices, axis);
                let (min_b, max_b) = project(&other.vertices, axis);
                let tol = EPS * (axis[0].abs() + axis[1].abs()).max(EPS);
                if max_a <= min_b + tol || max_b <= min_a + tol {
                    return false;
                }
            }
        }
        true
    }

    /// Point given by barycentric weights over a fan triangle; used to place
    /// synthetic fixes uniformly inside the corridor.
    pub fn point_in_triangle(&self, triangle: usize, u: f64, v: f64) -> [f64; 2] {
        let tri = triangle % (self.vertices.len() - 2);
        let (mut u, mut v) = (u, v);
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let a = self.vertices[0];
        let b = self.vertices[tri + 1];
        let c = self.vertices[tri + 2];
        [
            a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
            a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
        ]
    }

    /// Areas of the fan triangles rooted at vertex 0.
    pub fn fan_areas(&self) -> Vec<f64> {
        let a = self.vertices[0];
        self.vertices
            .windows(2)
            .skip(1)
            .map(|w| cross(a, w[0], w[1]).abs() / 2.0)
            .collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for Geofence {
    type Error = GeofenceError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Geofence::new(v)
    }
}

impl From<Geofence> for Vec<[f64; 2]> {
    fn from(g: Geofence) -> Self {
        g.vertices
    }
}

// Points are [lat, lon]; geometry below treats lon as x and lat as y.
fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[1] - o[1]) * (b[0] - o[0]) - (a[0] - o[0]) * (b[1] - o[1])
}

fn is_left(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    cross(a, b, p)
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let c = cross(a, b, p);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if c.abs() > EPS * len.max(EPS) {
        return false;
    }
    p[0] >= a[0].min(b[0]) - EPS
        && p[0] <= a[0].max(b[0]) + EPS
        && p[1] >= a[1].min(b[1]) - EPS
        && p[1] <= a[1].max(b[1]) + EPS
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a[1] * b[0] - b[1] * a[0]
        })
        .sum::<f64>()
        / 2.0
}

fn project(v: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p[0] * axis[0] + p[1] * axis[1];
        (lo.min(d), hi.max(d))
    })
}
