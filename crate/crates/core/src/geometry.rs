//! Open sets described by exact signed distance functions, their truncations,
//! and deterministic quadrature sampling of those sets.
//!
//! Every domain kind carries a closed-form signed distance `sd` (negative
//! inside, positive outside, zero on the boundary). Membership is the strict
//! test `sd < 0`, so boundary points never count as interior, and the interior
//! boundary distance is `-sd`. All signed distances are 1-Lipschitz; for the
//! composite kinds the value is a lower bound on the true boundary distance
//! (exact for the compositions shipped here), which keeps every inclusion that
//! the integrators rely on valid.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use std::fmt;

/// Largest supported spatial dimension.
///
/// Points are stored inline as `[f64; MAX_DIM]` so the inner quadrature loops
/// stay allocation-free; unused trailing coordinates are kept at zero.
pub const MAX_DIM: usize = 3;

/// A point of R^N for N in 1..=3.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    /// Build a point from a coordinate slice. Rejects empty, oversized, or
    /// non-finite input.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        let mut buf = [0.0; MAX_DIM];
        buf[..coords.len()].copy_from_slice(coords);
        Ok(Point {
            coords: buf,
            dim: coords.len() as u8,
        })
    }

    /// The origin of R^dim.
    pub fn zero(dim: usize) -> Result<Self> {
        Point::new(&vec![0.0; dim])
    }

    pub(crate) fn from_parts(coords: [f64; MAX_DIM], dim: usize) -> Self {
        Point {
            coords,
            dim: dim as u8,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for c in &self.coords {
            s += c * c;
        }
        s.sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            let d = self.coords[i] - other.coords[i];
            s += d * d;
        }
        s.sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            s += self.coords[i] * other.coords[i];
        }
        s
    }

    /// `self + t * dir`, staying in the same dimension.
    pub fn add_scaled(&self, dir: &Point, t: f64) -> Point {
        let mut buf = [0.0; MAX_DIM];
        for i in 0..MAX_DIM {
            buf[i] = self.coords[i] + t * dir.coords[i];
        }
        Point {
            coords: buf,
            dim: self.dim,
        }
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut buf = [0.0; MAX_DIM];
        for i in 0..MAX_DIM {
            buf[i] = self.coords[i] - other.coords[i];
        }
        Point {
            coords: buf,
            dim: self.dim,
        }
    }

    pub fn scale(&self, t: f64) -> Point {
        let mut buf = [0.0; MAX_DIM];
        for i in 0..MAX_DIM {
            buf[i] = t * self.coords[i];
        }
        Point {
            coords: buf,
            dim: self.dim,
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for c in self.coords() {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

/// The catalog of domain shapes. Each variant documents its signed distance.
#[derive(Clone, Debug, Serialize)]
pub enum DomainKind {
    /// `sd(x) = |x - center| - radius`. Exact.
    Ball { center: Point, radius: f64 },
    /// Axis-aligned box; the standard exact box signed distance.
    AxisBox { lo: Point, hi: Point },
    /// `sd(x) = max(|x - center| - r_outer, r_inner - |x - center|)`. Exact.
    Annulus {
        center: Point,
        r_inner: f64,
        r_outer: f64,
    },
    /// Open half space `{ x : normal . x < offset }` with unit normal;
    /// `sd(x) = normal . x - offset`. Exact, unbounded.
    HalfSpace { normal: Point, offset: f64 },
    /// `{ x : |x_axis| < half_width }` (N >= 2); `sd = |x_axis| - half_width`.
    /// Exact, unbounded.
    Strip { axis: usize, half_width: f64 },
    /// Open disk of the plane minus the closed radial segment at `slit_angle`.
    /// Interior distance is the exact minimum of rim distance and distance to
    /// the slit segment.
    SlitDisk { radius: f64, slit_angle: f64 },
    /// Complement of the scaled integer lattice `spacing * Z^N`; the boundary
    /// is the lattice itself, so `sd(x) = -|x - nearest lattice point|`.
    /// Exact, unbounded, full measure.
    LatticeComplement { spacing: f64 },
    /// Simple polygon in the plane (vertices in order, no self-intersection;
    /// simplicity is assumed, not verified). Exact: the boundary is the union
    /// of the edges, so distance is the minimum over edge segments, signed by
    /// an even-odd containment test.
    Polygon2d { vertices: Vec<[f64; 2]> },
    /// Intersection of finitely many domains, `sd = max(sd_i)`. The interior
    /// distance `-sd = min(dist_i)` is a lower bound on the true boundary
    /// distance and is exact whenever the nearest boundary point of the
    /// closest component lies on the intersection's boundary (true for the
    /// compositions used here, e.g. concentric box-and-ball overlaps).
    Intersection(Vec<Domain>),
    /// `base` minus the closure of `excluded`: `sd = max(sd_base, -sd_excluded)`.
    /// Same exactness caveat as `Intersection`.
    ComplementRestriction {
        base: Box<Domain>,
        excluded: Box<Domain>,
    },
}

/// An open subset of R^N with an exact signed distance function.
#[derive(Clone, Debug, Serialize)]
pub struct Domain {
    kind: DomainKind,
    dim: usize,
}

fn unit_normal(normal: &Point) -> Result<Point> {
    let n = normal.norm();
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::invalid("half-space normal must be nonzero"));
    }
    Point::new(
        &normal
            .coords()
            .iter()
            .map(|c| c / n)
            .collect::<Vec<f64>>(),
    )
}

impl Domain {
    pub fn ball(center: Point, radius: f64) -> Result<Domain> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("ball radius must be positive and finite"));
        }
        Ok(Domain {
            dim: center.dim(),
            kind: DomainKind::Ball { center, radius },
        })
    }

    /// Unit ball centered at the origin of R^dim.
    pub fn unit_ball(dim: usize) -> Result<Domain> {
        Domain::ball(Point::zero(dim)?, 1.0)
    }

    pub fn axis_box(lo: Point, hi: Point) -> Result<Domain> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        for i in 0..lo.dim() {
            if !(lo.get(i) < hi.get(i)) {
                return Err(Error::invalid("axis_box requires lo < hi on every axis"));
            }
        }
        Ok(Domain {
            dim: lo.dim(),
            kind: DomainKind::AxisBox { lo, hi },
        })
    }

    pub fn annulus(center: Point, r_inner: f64, r_outer: f64) -> Result<Domain> {
        if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return Err(Error::invalid("annulus requires 0 < r_inner < r_outer"));
        }
        Ok(Domain {
            dim: center.dim(),
            kind: DomainKind::Annulus {
                center,
                r_inner,
                r_outer,
            },
        })
    }

    pub fn half_space(normal: Point, offset: f64) -> Result<Domain> {
        if !offset.is_finite() {
            return Err(Error::invalid("half-space offset must be finite"));
        }
        let n = unit_normal(&normal)?;
        Ok(Domain {
            dim: normal.dim(),
            kind: DomainKind::HalfSpace { normal: n, offset },
        })
    }

    pub fn strip(dim: usize, axis: usize, half_width: f64) -> Result<Domain> {
        if dim < 2 || dim > MAX_DIM {
            return Err(Error::invalid(
                "strip requires dimension 2 or 3 (use a ball or box in dimension 1)",
            ));
        }
        if axis >= dim {
            return Err(Error::invalid("strip axis out of range"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("strip half_width must be positive and finite"));
        }
        Ok(Domain {
            dim,
            kind: DomainKind::Strip { axis, half_width },
        })
    }

    pub fn slit_disk(radius: f64, slit_angle: f64) -> Result<Domain> {
        if !(radius > 0.0) || !radius.is_finite() || !slit_angle.is_finite() {
            return Err(Error::invalid("slit_disk requires positive finite radius"));
        }
        Ok(Domain {
            dim: 2,
            kind: DomainKind::SlitDisk { radius, slit_angle },
        })
    }

    pub fn lattice_complement(dim: usize, spacing: f64) -> Result<Domain> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::invalid("lattice spacing must be positive and finite"));
        }
        Ok(Domain {
            dim,
            kind: DomainKind::LatticeComplement { spacing },
        })
    }

    pub fn polygon2d(vertices: Vec<[f64; 2]>) -> Result<Domain> {
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon2d needs at least 3 vertices"));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polygon2d vertices must be finite"));
        }
        Ok(Domain {
            dim: 2,
            kind: DomainKind::Polygon2d { vertices },
        })
    }

    pub fn intersection(parts: Vec<Domain>) -> Result<Domain> {
        let dim = match parts.first() {
            Some(d) => d.dim,
            None => return Err(Error::invalid("intersection of zero domains")),
        };
        if parts.iter().any(|d| d.dim != dim) {
            return Err(Error::invalid("intersection components must share a dimension"));
        }
        Ok(Domain {
            dim,
            kind: DomainKind::Intersection(parts),
        })
    }

    pub fn complement_restriction(base: Domain, excluded: Domain) -> Result<Domain> {
        if base.dim != excluded.dim {
            return Err(Error::DimensionMismatch {
                expected: base.dim,
                got: excluded.dim,
            });
        }
        Ok(Domain {
            dim: base.dim,
            kind: DomainKind::ComplementRestriction {
                base: Box::new(base),
                excluded: Box::new(excluded),
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Signed distance: negative inside, positive outside, zero on the
    /// boundary. Does not validate the point's dimension (hot path); use
    /// [`Domain::signed_distance`] for the checked version.
    pub(crate) fn sd(&self, x: &Point) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => x.dist(center) - radius,
            DomainKind::AxisBox { lo, hi } => {
                // Exact box signed distance via the centered half-extent form.
                let mut outside = 0.0f64;
                let mut inside = f64::NEG_INFINITY;
                for i in 0..self.dim {
                    let mid = 0.5 * (lo.get(i) + hi.get(i));
                    let half = 0.5 * (hi.get(i) - lo.get(i));
                    let q = (x.get(i) - mid).abs() - half;
                    if q > 0.0 {
                        outside += q * q;
                    }
                    inside = inside.max(q);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
            DomainKind::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let r = x.dist(center);
                (r - r_outer).max(r_inner - r)
            }
            DomainKind::HalfSpace { normal, offset } => x.dot(normal) - offset,
            DomainKind::Strip { axis, half_width } => x.get(*axis).abs() - half_width,
            DomainKind::SlitDisk { radius, slit_angle } => {
                let rim = x.norm() - radius;
                if rim >= 0.0 {
                    return rim;
                }
                let tip = [radius * slit_angle.cos(), radius * slit_angle.sin()];
                let slit = dist_point_segment(x.get(0), x.get(1), 0.0, 0.0, tip[0], tip[1]);
                -(-rim).min(slit)
            }
            DomainKind::LatticeComplement { spacing } => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let d = x.get(i) - spacing * (x.get(i) / spacing).round();
                    s += d * d;
                }
                -s.sqrt()
            }
            DomainKind::Polygon2d { vertices } => {
                let (px, py) = (x.get(0), x.get(1));
                let n = vertices.len();
                let mut edge = f64::INFINITY;
                let mut inside = false;
                for i in 0..n {
                    let [ax, ay] = vertices[i];
                    let [bx, by] = vertices[(i + 1) % n];
                    edge = edge.min(dist_point_segment(px, py, ax, ay, bx, by));
                    // Even-odd ray cast along +x.
                    if (ay > py) != (by > py) {
                        let t = (py - ay) / (by - ay);
                        if px < ax + t * (bx - ax) {
                            inside = !inside;
                        }
                    }
                }
                if inside {
                    -edge
                } else {
                    edge
                }
            }
            DomainKind::Intersection(parts) => {
                let mut m = f64::NEG_INFINITY;
                for p in parts {
                    m = m.max(p.sd(x));
                }
                m
            }
            DomainKind::ComplementRestriction { base, excluded } => {
                base.sd(x).max(-excluded.sd(x))
            }
        }
    }

    /// Checked signed distance.
    pub fn signed_distance(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.sd(x))
    }

    /// Strict membership: boundary points are not members.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.sd(x) < 0.0)
    }

    /// Distance from an interior point to the boundary. Errors for exterior
    /// and boundary points.
    pub fn dist_to_boundary(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        let sd = self.sd(x);
        if sd >= 0.0 {
            return Err(Error::OutsideDomain {
                point: x.coords().to_vec(),
            });
        }
        Ok(-sd)
    }

    /// The capped inner radius `min(r_cap, tau * dist(x, boundary))` used by
    /// the restricted seminorm variants. `r_cap` may be `f64::INFINITY`.
    pub fn delta(&self, x: &Point, r_cap: f64, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid("tau must lie in the open interval (0,1)"));
        }
        if !(r_cap > 0.0) {
            return Err(Error::invalid("r_cap must be positive (possibly infinite)"));
        }
        let d = self.dist_to_boundary(x)?;
        Ok(r_cap.min(tau * d))
    }

    pub fn is_bounded(&self) -> bool {
        match &self.kind {
            DomainKind::Ball { .. }
            | DomainKind::AxisBox { .. }
            | DomainKind::Annulus { .. }
            | DomainKind::SlitDisk { .. }
            | DomainKind::Polygon2d { .. } => true,
            DomainKind::HalfSpace { .. }
            | DomainKind::Strip { .. }
            | DomainKind::LatticeComplement { .. } => false,
            DomainKind::Intersection(parts) => parts.iter().any(|p| p.is_bounded()),
            DomainKind::ComplementRestriction { base, .. } => base.is_bounded(),
        }
    }

    /// Lebesgue measure when available in closed form.
    pub fn measure(&self) -> Option<f64> {
        match &self.kind {
            DomainKind::Ball { radius, .. } => Some(ball_volume(self.dim, *radius)),
            DomainKind::AxisBox { lo, hi } => {
                let mut v = 1.0;
                for i in 0..self.dim {
                    v *= hi.get(i) - lo.get(i);
                }
                Some(v)
            }
            DomainKind::Annulus {
                r_inner, r_outer, ..
            } => Some(ball_volume(self.dim, *r_outer) - ball_volume(self.dim, *r_inner)),
            // The slit is a null set.
            DomainKind::SlitDisk { radius, .. } => Some(std::f64::consts::PI * radius * radius),
            DomainKind::Polygon2d { vertices } => {
                let n = vertices.len();
                let mut a = 0.0;
                for i in 0..n {
                    let [x0, y0] = vertices[i];
                    let [x1, y1] = vertices[(i + 1) % n];
                    a += x0 * y1 - x1 * y0;
                }
                Some(0.5 * a.abs())
            }
            _ => None,
        }
    }

    /// A ball guaranteed to contain the domain, for bounded kinds.
    pub fn enclosing_ball(&self) -> Option<(Point, f64)> {
        match &self.kind {
            DomainKind::Ball { center, radius } => Some((*center, *radius)),
            DomainKind::AxisBox { lo, hi } => {
                let mid: Vec<f64> = (0..self.dim)
                    .map(|i| 0.5 * (lo.get(i) + hi.get(i)))
                    .collect();
                let mut r2 = 0.0;
                for i in 0..self.dim {
                    let h = 0.5 * (hi.get(i) - lo.get(i));
                    r2 += h * h;
                }
                Some((Point::new(&mid).ok()?, r2.sqrt()))
            }
            DomainKind::Annulus {
                center, r_outer, ..
            } => Some((*center, *r_outer)),
            DomainKind::SlitDisk { radius, .. } => Some((Point::zero(2).ok()?, *radius)),
            DomainKind::Polygon2d { vertices } => {
                let bb = polygon_bbox(vertices);
                let mid = Point::new(&[0.5 * (bb[0].0 + bb[0].1), 0.5 * (bb[1].0 + bb[1].1)]).ok()?;
                let hx = 0.5 * (bb[0].1 - bb[0].0);
                let hy = 0.5 * (bb[1].1 - bb[1].0);
                Some((mid, (hx * hx + hy * hy).sqrt()))
            }
            DomainKind::Intersection(parts) => parts
                .iter()
                .filter_map(|p| p.enclosing_ball())
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()),
            DomainKind::ComplementRestriction { base, .. } => base.enclosing_ball(),
            _ => None,
        }
    }

    /// Per-axis bounds where known; `None` on an axis means unbounded there.
    pub fn axis_bounds(&self) -> Vec<Option<(f64, f64)>> {
        match &self.kind {
            DomainKind::Ball { center, radius } => (0..self.dim)
                .map(|i| Some((center.get(i) - radius, center.get(i) + radius)))
                .collect(),
            DomainKind::AxisBox { lo, hi } => (0..self.dim)
                .map(|i| Some((lo.get(i), hi.get(i))))
                .collect(),
            DomainKind::Annulus {
                center, r_outer, ..
            } => (0..self.dim)
                .map(|i| Some((center.get(i) - r_outer, center.get(i) + r_outer)))
                .collect(),
            DomainKind::SlitDisk { radius, .. } => {
                vec![Some((-radius, *radius)); 2]
            }
            DomainKind::Polygon2d { vertices } => {
                polygon_bbox(vertices).into_iter().map(Some).collect()
            }
            DomainKind::Strip { axis, half_width } => (0..self.dim)
                .map(|i| {
                    if i == *axis {
                        Some((-half_width, *half_width))
                    } else {
                        None
                    }
                })
                .collect(),
            DomainKind::HalfSpace { .. } | DomainKind::LatticeComplement { .. } => {
                vec![None; self.dim]
            }
            DomainKind::Intersection(parts) => {
                let mut out = vec![None; self.dim];
                for p in parts {
                    for (i, b) in p.axis_bounds().into_iter().enumerate() {
                        out[i] = match (out[i], b) {
                            (None, b) => b,
                            (a, None) => a,
                            (Some((l0, h0)), Some((l1, h1))) => Some((l0.max(l1), h0.min(h1))),
                        };
                    }
                }
                out
            }
            DomainKind::ComplementRestriction { base, .. } => base.axis_bounds(),
        }
    }

    /// Characteristic length used to size geometric epsilons.
    pub fn length_scale(&self) -> f64 {
        match &self.kind {
            DomainKind::Strip { half_width, .. } => half_width.max(1.0),
            DomainKind::LatticeComplement { spacing } => spacing.max(1.0),
            DomainKind::HalfSpace { .. } => 1.0,
            _ => self
                .enclosing_ball()
                .map(|(_, r)| r)
                .unwrap_or(1.0)
                .max(f64::MIN_POSITIVE),
        }
    }

    /// Interior points closer than this to the boundary are excluded from
    /// outer quadrature; keeps `1/dist`-type quantities finite without
    /// affecting any integral at working precision.
    pub fn eps_geom(&self) -> f64 {
        1e-12 * self.length_scale()
    }

    /// Unit gradient of the boundary-distance function where it is smooth;
    /// ties (medial-axis points) are broken deterministically, so the returned
    /// direction is one of the valid one-sided choices and the magnitude of
    /// `grad dist` is always 1. `None` for kinds without an implemented form.
    pub fn boundary_distance_gradient(&self, x: &Point) -> Option<Point> {
        match &self.kind {
            DomainKind::Ball { center, .. } => {
                let d = x.sub(center);
                let n = d.norm();
                if n == 0.0 {
                    // Arbitrary but fixed direction at the exact center.
                    let mut e = [0.0; MAX_DIM];
                    e[0] = -1.0;
                    return Some(Point::from_parts(e, self.dim));
                }
                Some(d.scale(-1.0 / n))
            }
            DomainKind::AxisBox { lo, hi } => {
                // Gradient points away from the nearest face.
                let mut best = f64::INFINITY;
                let mut dir = [0.0; MAX_DIM];
                let mut axis = 0;
                let mut sign = 1.0;
                for i in 0..self.dim {
                    let dlo = x.get(i) - lo.get(i);
                    let dhi = hi.get(i) - x.get(i);
                    if dlo < best {
                        best = dlo;
                        axis = i;
                        sign = 1.0;
                    }
                    if dhi < best {
                        best = dhi;
                        axis = i;
                        sign = -1.0;
                    }
                }
                dir[axis] = sign;
                Some(Point::from_parts(dir, self.dim))
            }
            DomainKind::Strip { axis, .. } => {
                let mut dir = [0.0; MAX_DIM];
                dir[*axis] = if x.get(*axis) >= 0.0 { -1.0 } else { 1.0 };
                Some(Point::from_parts(dir, self.dim))
            }
            DomainKind::HalfSpace { normal, .. } => Some(normal.scale(-1.0)),
            DomainKind::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let d = x.sub(center);
                let r = d.norm();
                if r == 0.0 {
                    return None;
                }
                let to_outer = r_outer - r;
                let to_inner = r - r_inner;
                if to_inner <= to_outer {
                    Some(d.scale(1.0 / r))
                } else {
                    Some(d.scale(-1.0 / r))
                }
            }
            _ => None,
        }
    }

    /// Translate by `shift` where the kind supports it (used by the
    /// translation-invariance tests).
    pub fn translated(&self, shift: &Point) -> Option<Domain> {
        if shift.dim() != self.dim {
            return None;
        }
        let kind = match &self.kind {
            DomainKind::Ball { center, radius } => DomainKind::Ball {
                center: center.add_scaled(shift, 1.0),
                radius: *radius,
            },
            DomainKind::AxisBox { lo, hi } => DomainKind::AxisBox {
                lo: lo.add_scaled(shift, 1.0),
                hi: hi.add_scaled(shift, 1.0),
            },
            DomainKind::Annulus {
                center,
                r_inner,
                r_outer,
            } => DomainKind::Annulus {
                center: center.add_scaled(shift, 1.0),
                r_inner: *r_inner,
                r_outer: *r_outer,
            },
            DomainKind::HalfSpace { normal, offset } => DomainKind::HalfSpace {
                normal: *normal,
                offset: offset + normal.dot(shift),
            },
            DomainKind::Polygon2d { vertices } => DomainKind::Polygon2d {
                vertices: vertices
                    .iter()
                    .map(|[a, b]| [a + shift.get(0), b + shift.get(1)])
                    .collect(),
            },
            _ => return None,
        };
        Some(Domain {
            kind,
            dim: self.dim,
        })
    }
}

/// Volume of the N-ball of the given radius, N in 1..=3.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    match dim {
        1 => 2.0 * radius,
        2 => std::f64::consts::PI * radius * radius,
        _ => 4.0 / 3.0 * std::f64::consts::PI * radius * radius * radius,
    }
}

fn dist_point_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (vx, vy) = (bx - ax, by - ay);
    let (wx, wy) = (px - ax, py - ay);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    (dx * dx + dy * dy).sqrt()
}

fn polygon_bbox(vertices: &[[f64; 2]]) -> [(f64, f64); 2] {
    let mut bb = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for v in vertices {
        for i in 0..2 {
            bb[i].0 = bb[i].0.min(v[i]);
            bb[i].1 = bb[i].1.max(v[i]);
        }
    }
    bb
}

/// Interior truncation parameter: `Lambda(l)` keeps points with boundary
/// distance above `l` inside the ball of radius `1/l`; `Index(i)` keeps
/// boundary distance above `1/i` inside the ball of radius `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Truncation {
    Lambda(f64),
    Index(u32),
}

impl Truncation {
    /// The pair (min boundary distance, max norm) the truncation enforces.
    pub fn thresholds(&self) -> Result<(f64, f64)> {
        match self {
            Truncation::Lambda(l) => {
                if !(*l > 0.0) || !l.is_finite() {
                    return Err(Error::invalid("truncation lambda must be positive and finite"));
                }
                Ok((*l, 1.0 / l))
            }
            Truncation::Index(i) => {
                if *i == 0 {
                    return Err(Error::invalid("truncation index must be at least 1"));
                }
                Ok((1.0 / f64::from(*i), f64::from(*i)))
            }
        }
    }
}

/// A truncation attached to its parent domain.
#[derive(Clone, Debug, Serialize)]
pub struct TruncationSet<'a> {
    pub parent: &'a Domain,
    pub truncation: Truncation,
}

impl<'a> TruncationSet<'a> {
    pub fn new(parent: &'a Domain, truncation: Truncation) -> Result<Self> {
        truncation.thresholds()?;
        Ok(TruncationSet { parent, truncation })
    }

    /// True iff `x` is in the parent, further than the threshold from the
    /// boundary, and inside the truncation ball around the origin.
    pub fn member(&self, x: &Point) -> Result<bool> {
        let (min_dist, max_norm) = self.truncation.thresholds()?;
        if !self.parent.contains(x)? {
            return Ok(false);
        }
        Ok(-self.parent.sd(x) > min_dist && x.norm() < max_norm)
    }

    pub(crate) fn member_unchecked(&self, x: &Point, min_dist: f64, max_norm: f64) -> bool {
        self.parent.sd(x) < -min_dist && x.norm() < max_norm
    }
}

/// How outer integration nodes are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum OuterPlan {
    /// Product rule with `resolution` nodes per axis. Balls, annuli and slit
    /// disks get an exact polar/spherical product grid; boxes get a
    /// Gauss-Legendre product; every other region falls back to a
    /// cell-centered rejection grid over the bounding box (weight-sum error
    /// of first order in the cell size).
    TensorGrid { resolution: usize },
    /// Uniform rejection sampling of the bounding box with `samples` draws;
    /// accepted nodes carry equal weights summing to an unbiased measure
    /// estimate with relative error of order `1/sqrt(samples)`.
    MonteCarlo { samples: usize },
}

/// Complete sampling plan: node layout plus an optional interior truncation
/// (mandatory when the domain is unbounded).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub plan: OuterPlan,
    pub truncation: Option<Truncation>,
}

impl SamplingPlan {
    pub fn grid(resolution: usize) -> Self {
        SamplingPlan {
            plan: OuterPlan::TensorGrid { resolution },
            truncation: None,
        }
    }

    pub fn monte_carlo(samples: usize) -> Self {
        SamplingPlan {
            plan: OuterPlan::MonteCarlo { samples },
            truncation: None,
        }
    }

    pub fn with_truncation(mut self, t: Truncation) -> Self {
        self.truncation = Some(t);
        self
    }

    fn validate(&self) -> Result<()> {
        match self.plan {
            OuterPlan::TensorGrid { resolution } => {
                if resolution < 2 {
                    return Err(Error::invalid("tensor-grid resolution must be at least 2"));
                }
            }
            OuterPlan::MonteCarlo { samples } => {
                if samples == 0 {
                    return Err(Error::invalid("Monte Carlo plan needs at least one sample"));
                }
            }
        }
        if let Some(t) = self.truncation {
            t.thresholds()?;
        }
        Ok(())
    }
}

/// Weighted nodes `(x_k, w_k)` covering the (possibly truncated) domain, so
/// that `sum w_k g(x_k)` approximates the integral of `g`. Deterministic for a
/// fixed `(domain, plan, seed)` triple; nodes are emitted in a fixed order, and
/// interior points closer than `eps_geom` to the boundary are dropped.
pub fn sample_domain(
    domain: &Domain,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<Vec<(Point, f64)>> {
    plan.validate()?;
    if !domain.is_bounded() && plan.truncation.is_none() {
        return Err(Error::UnboundedNeedsTruncation);
    }
    let eps = domain.eps_geom();

    // Exact product grids for the friendly kinds when no truncation interferes
    // (plus the shrunk-ball special case, which stays a ball).
    if let OuterPlan::TensorGrid { resolution } = plan.plan {
        match (&domain.kind, plan.truncation) {
            (DomainKind::Ball { center, radius }, None) => {
                return ball_grid(domain.dim, center, *radius, resolution, eps);
            }
            (DomainKind::Ball { center, radius }, Some(t)) => {
                let (min_dist, max_norm) = t.thresholds()?;
                let shrunk = radius - min_dist;
                if shrunk > 0.0 && center.norm() + shrunk <= max_norm {
                    return ball_grid(domain.dim, center, shrunk, resolution, eps);
                } else if shrunk <= 0.0 {
                    return Ok(Vec::new());
                }
                // else: fall through to the rejection grid.
            }
            (DomainKind::AxisBox { lo, hi }, None) => {
                return box_grid(domain.dim, lo, hi, resolution);
            }
            (
                DomainKind::Annulus {
                    center,
                    r_inner,
                    r_outer,
                },
                None,
            ) => {
                return radial_shell_grid(domain.dim, center, *r_inner, *r_outer, resolution, 0.0);
            }
            (DomainKind::SlitDisk { radius, slit_angle }, None) => {
                return radial_shell_grid(2, &Point::zero(2)?, 0.0, *radius, resolution, *slit_angle);
            }
            _ => {}
        }
    }

    // Generic paths need a bounding box.
    let bbox = region_bbox(domain, plan.truncation)?;
    let tset = plan
        .truncation
        .map(|t| TruncationSet::new(domain, t))
        .transpose()?;
    let thresholds = match &tset {
        Some(ts) => Some(ts.truncation.thresholds()?),
        None => None,
    };
    let accept = |x: &Point| -> bool {
        let sd = domain.sd(x);
        if sd >= -eps {
            return false;
        }
        match (&tset, thresholds) {
            (Some(ts), Some((md, mn))) => ts.member_unchecked(x, md, mn),
            _ => true,
        }
    };

    let mut out = Vec::new();
    match plan.plan {
        OuterPlan::TensorGrid { resolution } => {
            let n = resolution;
            let mut cell = 1.0;
            let mut steps = [0.0f64; MAX_DIM];
            for i in 0..domain.dim {
                let (lo, hi) = bbox[i];
                let h = (hi - lo) / n as f64;
                steps[i] = h;
                cell *= h;
            }
            let mut idx = vec![0usize; domain.dim];
            loop {
                let mut c = [0.0f64; MAX_DIM];
                for i in 0..domain.dim {
                    c[i] = bbox[i].0 + (idx[i] as f64 + 0.5) * steps[i];
                }
                let x = Point::from_parts(c, domain.dim);
                if accept(&x) {
                    out.push((x, cell));
                }
                // Odometer increment.
                let mut i = domain.dim;
                loop {
                    if i == 0 {
                        return Ok(out);
                    }
                    i -= 1;
                    idx[i] += 1;
                    if idx[i] < n {
                        break;
                    }
                    idx[i] = 0;
                }
            }
        }
        OuterPlan::MonteCarlo { samples } => {
            let mut vol = 1.0;
            for i in 0..domain.dim {
                vol *= bbox[i].1 - bbox[i].0;
            }
            let w = vol / samples as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let mut c = [0.0f64; MAX_DIM];
                for i in 0..domain.dim {
                    let u: f64 = rng.gen();
                    c[i] = bbox[i].0 + u * (bbox[i].1 - bbox[i].0);
                }
                let x = Point::from_parts(c, domain.dim);
                if accept(&x) {
                    out.push((x, w));
                }
            }
            Ok(out)
        }
    }
}

/// Bounding box of the domain intersected with the truncation region.
fn region_bbox(domain: &Domain, truncation: Option<Truncation>) -> Result<Vec<(f64, f64)>> {
    let bounds = domain.axis_bounds();
    let ball = truncation.map(|t| t.thresholds()).transpose()?.map(|x| x.1);
    let mut out = Vec::with_capacity(domain.dim);
    for b in bounds {
        let r = match (b, ball) {
            (Some((lo, hi)), Some(r)) => (lo.max(-r), hi.min(r)),
            (Some((lo, hi)), None) => (lo, hi),
            (None, Some(r)) => (-r, r),
            (None, None) => return Err(Error::UnboundedNeedsTruncation),
        };
        if !(r.0 < r.1) {
            // Empty region; represent by a degenerate box the grid will skip.
            return Ok(vec![(0.0, 0.0); domain.dim]);
        }
        out.push(r);
    }
    Ok(out)
}

/// Exact polar/spherical product grid on a ball.
fn ball_grid(
    dim: usize,
    center: &Point,
    radius: f64,
    resolution: usize,
    eps: f64,
) -> Result<Vec<(Point, f64)>> {
    use crate::quadrature::gauss_legendre_unit;
    let mut out = Vec::new();
    match dim {
        1 => {
            for (t, w) in gauss_legendre_unit(resolution) {
                let x = center.get(0) - radius + 2.0 * radius * t;
                out.push((Point::from_parts([x, 0.0, 0.0], 1), 2.0 * radius * w));
            }
        }
        2 => {
            let rg = gauss_legendre_unit(resolution);
            let m = resolution;
            let dth = 2.0 * std::f64::consts::PI / m as f64;
            for (t, wr) in &rg {
                let r = radius * t;
                if radius - r <= eps {
                    continue;
                }
                let w_r = radius * wr * r;
                for j in 0..m {
                    let th = (j as f64 + 0.5) * dth;
                    let x = Point::from_parts(
                        [center.get(0) + r * th.cos(), center.get(1) + r * th.sin(), 0.0],
                        2,
                    );
                    out.push((x, w_r * dth));
                }
            }
        }
        3 => {
            let rg = gauss_legendre_unit(resolution);
            let tg = gauss_legendre_unit(resolution);
            let m = resolution;
            let dph = 2.0 * std::f64::consts::PI / m as f64;
            for (t, wr) in &rg {
                let r = radius * t;
                if radius - r <= eps {
                    continue;
                }
                let w_r = radius * wr * r * r;
                for (u, wu) in &tg {
                    let cosb = 2.0 * u - 1.0;
                    let sinb = (1.0 - cosb * cosb).max(0.0).sqrt();
                    let w_t = 2.0 * wu;
                    for j in 0..m {
                        let ph = (j as f64 + 0.5) * dph;
                        let x = Point::from_parts(
                            [
                                center.get(0) + r * sinb * ph.cos(),
                                center.get(1) + r * sinb * ph.sin(),
                                center.get(2) + r * cosb,
                            ],
                            3,
                        );
                        out.push((x, w_r * w_t * dph));
                    }
                }
            }
        }
        d => return Err(Error::UnsupportedDimension(d)),
    }
    Ok(out)
}

/// Gauss-Legendre product grid on an axis box (exact weight sum).
fn box_grid(dim: usize, lo: &Point, hi: &Point, resolution: usize) -> Result<Vec<(Point, f64)>> {
    use crate::quadrature::gauss_legendre_unit;
    let gl = gauss_legendre_unit(resolution);
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let mut c = [0.0f64; MAX_DIM];
        let mut w = 1.0;
        for i in 0..dim {
            let (t, wt) = gl[idx[i]];
            let len = hi.get(i) - lo.get(i);
            c[i] = lo.get(i) + len * t;
            w *= len * wt;
        }
        out.push((Point::from_parts(c, dim), w));
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < resolution {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Polar grid on `{r_inner < |x - center| < r_outer}`; `angle_offset` shifts
/// the angular midpoints (used to keep slit-disk nodes off the slit).
fn radial_shell_grid(
    dim: usize,
    center: &Point,
    r_inner: f64,
    r_outer: f64,
    resolution: usize,
    angle_offset: f64,
) -> Result<Vec<(Point, f64)>> {
    use crate::quadrature::gauss_legendre_unit;
    if dim != 2 && dim != 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let rg = gauss_legendre_unit(resolution);
    let span = r_outer - r_inner;
    let mut out = Vec::new();
    if dim == 2 {
        let m = resolution;
        let dth = 2.0 * std::f64::consts::PI / m as f64;
        for (t, wr) in &rg {
            let r = r_inner + span * t;
            let w_r = span * wr * r;
            for j in 0..m {
                let th = angle_offset + (j as f64 + 0.5) * dth;
                let x = Point::from_parts(
                    [center.get(0) + r * th.cos(), center.get(1) + r * th.sin(), 0.0],
                    2,
                );
                out.push((x, w_r * dth));
            }
        }
    } else {
        let tg = gauss_legendre_unit(resolution);
        let m = resolution;
        let dph = 2.0 * std::f64::consts::PI / m as f64;
        for (t, wr) in &rg {
            let r = r_inner + span * t;
            let w_r = span * wr * r * r;
            for (u, wu) in &tg {
                let cosb = 2.0 * u - 1.0;
                let sinb = (1.0 - cosb * cosb).max(0.0).sqrt();
                for j in 0..m {
                    let ph = angle_offset + (j as f64 + 0.5) * dph;
                    let x = Point::from_parts(
                        [
                            center.get(0) + r * sinb * ph.cos(),
                            center.get(1) + r * sinb * ph.sin(),
                            center.get(2) + r * cosb,
                        ],
                        3,
                    );
                    out.push((x, w_r * 2.0 * wu * dph));
                }
            }
        }
    }
    Ok(out)
}
