//! Mirror-symmetric flat double wells built from six billiard shapes.
//!
//! Every shape is placed with its symmetry axis on `x = 0`. The left well
//! sits at `x < -w_b/2`, the barrier straddles the axis and the right well is
//! the mirror image. All closures are resolved so that each well has the
//! requested area.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Point2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Point = Point2<f64>;
pub type Vector = Vector2<f64>;

pub const DEFAULT_BARRIER_WIDTH: f64 = 0.1;
pub const DEFAULT_BARRIER_HEIGHT: f64 = 1000.0;
pub const DEFAULT_WELL_AREA: f64 = 4.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown shape `{0}` (expected one of rectangle, circle, stadium, sinai, butterfly, concave)")]
    UnknownShape(String),
    #[error("shape {kind} has no parameter `{name}`")]
    UnknownParameter { kind: ShapeKind, name: String },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("cannot resolve `{name}` from the well-area constraint: {reason}")]
    Unresolvable { name: &'static str, reason: String },
    #[error("arc length {s} outside [0, {perimeter})")]
    ArcLengthOutOfRange { s: f64, perimeter: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapeKind {
    Rectangle,
    Circle,
    Stadium,
    Sinai,
    Butterfly,
    Concave,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Rectangle,
        ShapeKind::Circle,
        ShapeKind::Stadium,
        ShapeKind::Sinai,
        ShapeKind::Butterfly,
        ShapeKind::Concave,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Circle => "circle",
            ShapeKind::Stadium => "stadium",
            ShapeKind::Sinai => "sinai",
            ShapeKind::Butterfly => "butterfly",
            ShapeKind::Concave => "concave",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| GeometryError::UnknownShape(s.to_string()))
    }
}

/// Free parameters of each family. The remaining dimension is solved from
/// the well-area constraint at build time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeParams {
    /// Width is `area / height`.
    Rectangle { height: f64 },
    /// Radius is `sqrt(area / pi)`; the barrier caps at `|y| <= cap_fraction * r`.
    Circle { cap_fraction: f64 },
    /// Straight side length is solved from the area.
    Stadium { cap_width: f64 },
    /// Central hard disk radius is solved from the area.
    Sinai { width: f64, height: f64 },
    /// Width is solved from the area.
    Butterfly { height: f64, sagitta: f64 },
    /// Width is solved from the area.
    Concave { height: f64, sagitta: f64 },
}

impl ShapeParams {
    pub fn defaults(kind: ShapeKind) -> Self {
        match kind {
            ShapeKind::Rectangle => ShapeParams::Rectangle { height: 2.4 },
            ShapeKind::Circle => ShapeParams::Circle { cap_fraction: 1.0 / 3.0 },
            ShapeKind::Stadium => ShapeParams::Stadium { cap_width: 1.8 },
            ShapeKind::Sinai => ShapeParams::Sinai { width: 2.2, height: 2.4 },
            ShapeKind::Butterfly => ShapeParams::Butterfly { height: 2.4, sagitta: 0.4 },
            ShapeKind::Concave => ShapeParams::Concave { height: 2.4, sagitta: 0.3 },
        }
    }

    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeParams::Rectangle { .. } => ShapeKind::Rectangle,
            ShapeParams::Circle { .. } => ShapeKind::Circle,
            ShapeParams::Stadium { .. } => ShapeKind::Stadium,
            ShapeParams::Sinai { .. } => ShapeKind::Sinai,
            ShapeParams::Butterfly { .. } => ShapeKind::Butterfly,
            ShapeParams::Concave { .. } => ShapeKind::Concave,
        }
    }

    /// Overrides one named parameter.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), GeometryError> {
        let kind = self.kind();
        let slot = match (self, name) {
            (ShapeParams::Rectangle { height }, "height") => height,
            (ShapeParams::Circle { cap_fraction }, "cap_fraction") => cap_fraction,
            (ShapeParams::Stadium { cap_width }, "cap_width") => cap_width,
            (ShapeParams::Sinai { width, .. }, "width") => width,
            (ShapeParams::Sinai { height, .. }, "height") => height,
            (ShapeParams::Butterfly { height, .. }, "height") => height,
            (ShapeParams::Butterfly { sagitta, .. }, "sagitta") => sagitta,
            (ShapeParams::Concave { height, .. }, "height") => height,
            (ShapeParams::Concave { sagitta, .. }, "sagitta") => sagitta,
            _ => {
                return Err(GeometryError::UnknownParameter {
                    kind,
                    name: name.to_string(),
                })
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub params: ShapeParams,
    pub barrier_width: f64,
    /// `f64::INFINITY` turns the barrier into hard wall (decoupled wells).
    pub barrier_height: f64,
    pub well_area: f64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind) -> Self {
        ShapeSpec {
            params: ShapeParams::defaults(kind),
            barrier_width: DEFAULT_BARRIER_WIDTH,
            barrier_height: DEFAULT_BARRIER_HEIGHT,
            well_area: DEFAULT_WELL_AREA,
        }
    }

    pub fn kind(&self) -> ShapeKind {
        self.params.kind()
    }

    /// Same shape with an impenetrable barrier.
    pub fn hard_wall(mut self) -> Self {
        self.barrier_height = f64::INFINITY;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    LeftWell,
    RightWell,
    Barrier,
    Outside,
}

impl Region {
    /// Potential in units where hbar^2/2m = 1.
    pub fn potential(self, barrier_height: f64) -> f64 {
        match self {
            Region::LeftWell | Region::RightWell => 0.0,
            Region::Barrier => barrier_height,
            Region::Outside => f64::INFINITY,
        }
    }

    pub fn mirrored(self) -> Region {
        match self {
            Region::LeftWell => Region::RightWell,
            Region::RightWell => Region::LeftWell,
            r => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// One boundary piece, traversed in the direction of increasing arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line {
        start: Point,
        end: Point,
    },
    /// Positive sweep is counterclockwise about the center.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { start, end } => (end - start).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point at arc length `t` from the segment start.
    pub fn point_at(&self, t: f64) -> Point {
        match *self {
            Segment::Line { start, end } => {
                let len = (end - start).norm();
                start + (end - start) * (t / len)
            }
            Segment::Arc { center, radius, .. } => {
                let a = self.angle_at(t);
                center + Vector::new(a.cos(), a.sin()) * radius
            }
        }
    }

    pub fn tangent_at(&self, t: f64) -> Vector {
        match *self {
            Segment::Line { start, end } => (end - start).normalize(),
            Segment::Arc { sweep, .. } => {
                let a = self.angle_at(t);
                Vector::new(-a.sin(), a.cos()) * sweep.signum()
            }
        }
    }

    /// Left normal of the traversal direction, which faces the enclosed region
    /// for counterclockwise outer loops and clockwise holes.
    pub fn inward_normal_at(&self, t: f64) -> Vector {
        let tg = self.tangent_at(t);
        Vector::new(-tg.y, tg.x)
    }

    pub fn start(&self) -> Point {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Point {
        match *self {
            Segment::Line { end, .. } => end,
            _ => self.point_at(self.length()),
        }
    }

    fn angle_at(&self, t: f64) -> f64 {
        match *self {
            Segment::Arc {
                radius,
                start_angle,
                sweep,
                ..
            } => start_angle + sweep.signum() * t / radius,
            Segment::Line { .. } => 0.0,
        }
    }

    /// Traverses the segment backwards.
    fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { start, end } => Segment::Line { start: end, end: start },
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => Segment::Arc {
                center,
                radius,
                start_angle: start_angle + sweep,
                sweep: -sweep,
            },
        }
    }

    /// Reflection through the axis `x = 0` (orientation flips).
    fn mirrored(&self) -> Segment {
        let m = |p: Point| Point::new(-p.x, p.y);
        match *self {
            Segment::Line { start, end } => Segment::Line {
                start: m(start),
                end: m(end),
            },
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => Segment::Arc {
                center: m(center),
                radius,
                start_angle: PI - start_angle,
                sweep: -sweep,
            },
        }
    }
}

/// Closed boundary of one well, parameterized by arc length. Wells with a hole
/// (the Sinai scatterer) have two components; `s` runs over the outer loop
/// first and then over the hole.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPath {
    segments: Vec<Segment>,
    offsets: Vec<f64>,
    components: Vec<(usize, usize)>,
    corner_at_start: Vec<bool>,
    length: f64,
}

/// A sample of the boundary for export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub s: f64,
    pub point: Point,
    pub normal: Vector,
}

impl BoundaryPath {
    /// Builds a path from closed components, each listed head to tail.
    pub fn from_components(components: Vec<Vec<Segment>>) -> Self {
        let mut segments = Vec::new();
        let mut ranges = Vec::new();
        for comp in components {
            let lo = segments.len();
            segments.extend(comp);
            ranges.push((lo, segments.len()));
        }
        let mut offsets = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for seg in &segments {
            offsets.push(acc);
            acc += seg.length();
        }
        let mut corner_at_start = vec![false; segments.len()];
        for &(lo, hi) in &ranges {
            for k in lo..hi {
                let prev = if k == lo { hi - 1 } else { k - 1 };
                let t_in = segments[prev].tangent_at(segments[prev].length());
                let t_out = segments[k].tangent_at(0.0);
                corner_at_start[k] = (t_in - t_out).norm() > 1e-9;
            }
        }
        BoundaryPath {
            segments,
            offsets,
            components: ranges,
            corner_at_start,
            length: acc,
        }
    }

    /// Counterclockwise polygon through the given vertices.
    pub fn polygon(vertices: &[Point]) -> Self {
        let n = vertices.len();
        let segs = (0..n)
            .map(|k| Segment::Line {
                start: vertices[k],
                end: vertices[(k + 1) % n],
            })
            .collect();
        Self::from_components(vec![segs])
    }

    /// Full counterclockwise circle starting at `start_angle`.
    pub fn circle(center: Point, radius: f64, start_angle: f64) -> Self {
        Self::from_components(vec![vec![Segment::Arc {
            center,
            radius,
            start_angle,
            sweep: 2.0 * PI,
        }]])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Arc length at which each segment starts.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn components(&self) -> &[(usize, usize)] {
        &self.components
    }

    /// Whether the vertex at the start of segment `k` is a true corner
    /// (tangent discontinuity) rather than a smooth junction.
    pub fn is_corner(&self, k: usize) -> bool {
        self.corner_at_start[k]
    }

    /// Index of the segment following `k` within its component.
    pub fn next_in_component(&self, k: usize) -> usize {
        let &(lo, hi) = self
            .components
            .iter()
            .find(|&&(lo, hi)| (lo..hi).contains(&k))
            .expect("segment index in range");
        if k + 1 == hi {
            lo
        } else {
            k + 1
        }
    }

    /// Segment index and local arc length for a global arc length.
    pub fn locate(&self, s: f64) -> Result<(usize, f64), GeometryError> {
        if !(0.0..self.length).contains(&s) {
            return Err(GeometryError::ArcLengthOutOfRange {
                s,
                perimeter: self.length,
            });
        }
        let k = self.offsets.partition_point(|&o| o <= s).saturating_sub(1);
        let t = (s - self.offsets[k]).min(self.segments[k].length());
        Ok((k, t))
    }

    /// Boundary point and inward unit normal at arc length `s`.
    pub fn point(&self, s: f64) -> Result<(Point, Vector), GeometryError> {
        let (k, t) = self.locate(s)?;
        let seg = &self.segments[k];
        Ok((seg.point_at(t), seg.inward_normal_at(t)))
    }

    /// Unit tangent in the direction of increasing `s`.
    pub fn tangent(&self, s: f64) -> Result<Vector, GeometryError> {
        let (k, t) = self.locate(s)?;
        Ok(self.segments[k].tangent_at(t))
    }

    /// Evenly spaced samples at roughly `n` points, always including every
    /// segment start.
    pub fn polyline(&self, n: usize) -> Vec<BoundarySample> {
        let step = self.length / n.max(1) as f64;
        let mut out = Vec::new();
        for (k, seg) in self.segments.iter().enumerate() {
            let len = seg.length();
            let m = ((len / step).ceil() as usize).max(1);
            for q in 0..m {
                let t = len * q as f64 / m as f64;
                out.push(BoundarySample {
                    s: self.offsets[k] + t,
                    point: seg.point_at(t),
                    normal: seg.inward_normal_at(t),
                });
            }
        }
        out
    }

    /// Mirror image through `x = 0`, re-oriented counterclockwise and started
    /// at the image of this path's origin.
    pub fn mirrored(&self) -> Self {
        let comps = self
            .components
            .iter()
            .map(|&(lo, hi)| {
                self.segments[lo..hi]
                    .iter()
                    .rev()
                    .map(|s| s.reversed().mirrored())
                    .collect()
            })
            .collect();
        Self::from_components(comps)
    }
}

/// Barrier-facing stretch of the left well's boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierFace {
    /// Smallest x of the well/barrier interface over the facing interval.
    pub x_interface: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Resolved dimensions of the left well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedShape {
    Rectangle {
        width: f64,
        height: f64,
    },
    Circle {
        radius: f64,
        gap: f64,
        cap_half_height: f64,
    },
    Stadium {
        cap_width: f64,
        straight: f64,
    },
    Sinai {
        width: f64,
        height: f64,
        disk_radius: f64,
    },
    Butterfly {
        width: f64,
        height: f64,
        sagitta: f64,
        arc_radius: f64,
    },
    Concave {
        width: f64,
        height: f64,
        sagitta: f64,
        side_radius: f64,
        cap_radius: f64,
    },
}

#[derive(Debug, Clone)]
pub struct DoubleWellGeometry {
    spec: ShapeSpec,
    shape: ResolvedShape,
    left: BoundaryPath,
    right: BoundaryPath,
    bbox: (Point, Point),
}

/// Area of the circular segment cut off by a chord with the given sagitta.
pub fn segment_area(chord: f64, sagitta: f64) -> f64 {
    let r = segment_radius(chord, sagitta);
    r * r * ((r - sagitta) / r).acos() - (r - sagitta) * chord / 2.0
}

/// Radius of the circle through a chord with the given sagitta.
pub fn segment_radius(chord: f64, sagitta: f64) -> f64 {
    (chord * chord / 4.0 + sagitta * sagitta) / (2.0 * sagitta)
}

/// Mean of `sqrt(r^2 - y^2)` over `|y| <= y_b`.
fn mean_chord_half(r: f64, y_b: f64) -> f64 {
    (y_b * (r * r - y_b * y_b).sqrt() + r * r * (y_b / r).asin()) / (2.0 * y_b)
}

fn positive(name: &'static str, v: f64) -> Result<(), GeometryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter {
            name,
            reason: format!("must be a positive finite length, got {v}"),
        })
    }
}

fn bisect<F: Fn(f64) -> f64>(
    name: &'static str,
    f: F,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, GeometryError> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(GeometryError::Unresolvable {
            name,
            reason: format!("no sign change on [{lo}, {hi}]"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Constructs the double well, solving the free dimension for the well area.
pub fn build_double_well(spec: ShapeSpec) -> Result<DoubleWellGeometry, GeometryError> {
    positive("barrier_width", spec.barrier_width)?;
    positive("well_area", spec.well_area)?;
    if !(spec.barrier_height > 0.0) {
        return Err(GeometryError::InvalidParameter {
            name: "barrier_height",
            reason: format!("must be positive, got {}", spec.barrier_height),
        });
    }
    let half = spec.barrier_width / 2.0;
    let area = spec.well_area;
    let too_wide = |diameter: f64| -> Result<(), GeometryError> {
        if spec.barrier_width < diameter {
            Ok(())
        } else {
            Err(GeometryError::InvalidParameter {
                name: "barrier_width",
                reason: format!("must be narrower than the well ({diameter})"),
            })
        }
    };

    let shape = match spec.params {
        ShapeParams::Rectangle { height } => {
            positive("height", height)?;
            let width = area / height;
            too_wide(width.min(height))?;
            ResolvedShape::Rectangle { width, height }
        }
        ShapeParams::Circle { cap_fraction } => {
            if !(cap_fraction > 0.0 && cap_fraction < 1.0) {
                return Err(GeometryError::InvalidParameter {
                    name: "cap_fraction",
                    reason: format!("must lie in (0, 1), got {cap_fraction}"),
                });
            }
            let radius = (area / PI).sqrt();
            too_wide(2.0 * radius)?;
            let cap_half_height = cap_fraction * radius;
            // mean gap = gap + 2 (r - mean sqrt(r^2 - y^2)) must equal w_b
            let gap = spec.barrier_width - 2.0 * radius
                + 2.0 * mean_chord_half(radius, cap_half_height);
            if gap <= 0.0 {
                return Err(GeometryError::Unresolvable {
                    name: "gap",
                    reason: format!(
                        "barrier caps at |y| <= {cap_half_height} open wider than the mean width"
                    ),
                });
            }
            ResolvedShape::Circle {
                radius,
                gap,
                cap_half_height,
            }
        }
        ShapeParams::Stadium { cap_width } => {
            positive("cap_width", cap_width)?;
            let straight = (area - PI * cap_width * cap_width / 4.0) / cap_width;
            if straight <= 0.0 {
                return Err(GeometryError::Unresolvable {
                    name: "straight",
                    reason: format!("caps of width {cap_width} already exceed the well area"),
                });
            }
            too_wide(cap_width)?;
            ResolvedShape::Stadium { cap_width, straight }
        }
        ShapeParams::Sinai { width, height } => {
            positive("width", width)?;
            positive("height", height)?;
            let excess = width * height - area;
            if excess <= 0.0 {
                return Err(GeometryError::Unresolvable {
                    name: "disk_radius",
                    reason: format!("rectangle {width} x {height} is not larger than the well area"),
                });
            }
            let disk_radius = (excess / PI).sqrt();
            if 2.0 * disk_radius >= width.min(height) {
                return Err(GeometryError::Unresolvable {
                    name: "disk_radius",
                    reason: format!("scatterer radius {disk_radius} does not fit"),
                });
            }
            too_wide(width.min(height))?;
            ResolvedShape::Sinai {
                width,
                height,
                disk_radius,
            }
        }
        ShapeParams::Butterfly { height, sagitta } => {
            positive("height", height)?;
            positive("sagitta", sagitta)?;
            if sagitta > height / 2.0 {
                return Err(GeometryError::InvalidParameter {
                    name: "sagitta",
                    reason: "indentation deeper than a semicircle".into(),
                });
            }
            let width = (area + segment_area(height, sagitta)) / height;
            if width <= sagitta {
                return Err(GeometryError::Unresolvable {
                    name: "width",
                    reason: "indentation reaches the barrier".into(),
                });
            }
            too_wide(height.min(width - sagitta))?;
            ResolvedShape::Butterfly {
                width,
                height,
                sagitta,
                arc_radius: segment_radius(height, sagitta),
            }
        }
        ShapeParams::Concave { height, sagitta } => {
            positive("height", height)?;
            positive("sagitta", sagitta)?;
            if sagitta > height / 2.0 {
                return Err(GeometryError::InvalidParameter {
                    name: "sagitta",
                    reason: "indentation deeper than a semicircle".into(),
                });
            }
            let side = segment_area(height, sagitta);
            let width = bisect(
                "width",
                |w| w * height - side - 2.0 * segment_area(w, sagitta) - area,
                2.0 * sagitta,
                1e3,
            )?;
            let side_radius = segment_radius(height, sagitta);
            let cap_radius = segment_radius(width, sagitta);
            // the three arcs must not cross near the far corners
            let a_side = (height / 2.0 / side_radius).asin();
            let a_cap = (width / 2.0 / cap_radius).asin();
            if a_side + a_cap >= PI / 2.0 || 2.0 * sagitta >= height.min(width) {
                return Err(GeometryError::Unresolvable {
                    name: "sagitta",
                    reason: format!("indentations of depth {sagitta} overlap"),
                });
            }
            too_wide(height - 2.0 * sagitta)?;
            ResolvedShape::Concave {
                width,
                height,
                sagitta,
                side_radius,
                cap_radius,
            }
        }
    };

    let left = left_boundary(&shape, half);
    let right = left.mirrored();
    let (xmin, ymin, ymax) = match shape {
        ResolvedShape::Rectangle { width, height } => (-half - width, -height / 2.0, height / 2.0),
        ResolvedShape::Circle { radius, gap, .. } => (-gap / 2.0 - 2.0 * radius, -radius, radius),
        ResolvedShape::Stadium {
            cap_width,
            straight,
        } => {
            let ext = straight / 2.0 + cap_width / 2.0;
            (-half - cap_width, -ext, ext)
        }
        ResolvedShape::Sinai { width, height, .. }
        | ResolvedShape::Butterfly { width, height, .. }
        | ResolvedShape::Concave { width, height, .. } => (-half - width, -height / 2.0, height / 2.0),
    };
    Ok(DoubleWellGeometry {
        spec,
        shape,
        left,
        right,
        bbox: (Point::new(xmin, ymin), Point::new(-xmin, ymax)),
    })
}

fn left_boundary(shape: &ResolvedShape, half: f64) -> BoundaryPath {
    let xr = -half;
    let line = |a: (f64, f64), b: (f64, f64)| Segment::Line {
        start: Point::new(a.0, a.1),
        end: Point::new(b.0, b.1),
    };
    match *shape {
        ResolvedShape::Rectangle { width, height } => {
            let (xl, yt) = (xr - width, height / 2.0);
            BoundaryPath::polygon(&[
                Point::new(xr, -yt),
                Point::new(xr, yt),
                Point::new(xl, yt),
                Point::new(xl, -yt),
            ])
        }
        ResolvedShape::Sinai {
            width,
            height,
            disk_radius,
        } => {
            let (xl, yt) = (xr - width, height / 2.0);
            let outer = vec![
                line((xr, -yt), (xr, yt)),
                line((xr, yt), (xl, yt)),
                line((xl, yt), (xl, -yt)),
                line((xl, -yt), (xr, -yt)),
            ];
            let hole = vec![Segment::Arc {
                center: Point::new(xr - width / 2.0, 0.0),
                radius: disk_radius,
                start_angle: -PI / 2.0,
                sweep: -2.0 * PI,
            }];
            BoundaryPath::from_components(vec![outer, hole])
        }
        ResolvedShape::Circle {
            radius,
            gap,
            cap_half_height,
        } => {
            let center = Point::new(-gap / 2.0 - radius, 0.0);
            BoundaryPath::circle(center, radius, -(cap_half_height / radius).asin())
        }
        ResolvedShape::Stadium {
            cap_width,
            straight,
        } => {
            let r = cap_width / 2.0;
            let (xl, cx, a) = (xr - cap_width, xr - r, straight / 2.0);
            BoundaryPath::from_components(vec![vec![
                line((xr, -a), (xr, a)),
                Segment::Arc {
                    center: Point::new(cx, a),
                    radius: r,
                    start_angle: 0.0,
                    sweep: PI,
                },
                line((xl, a), (xl, -a)),
                Segment::Arc {
                    center: Point::new(cx, -a),
                    radius: r,
                    start_angle: PI,
                    sweep: PI,
                },
            ]])
        }
        ResolvedShape::Butterfly {
            width,
            height,
            sagitta,
            arc_radius,
        } => {
            let (xl, yt) = (xr - width, height / 2.0);
            let off = arc_radius - sagitta;
            let ang = yt.atan2(off);
            BoundaryPath::from_components(vec![vec![
                line((xr, -yt), (xr, yt)),
                line((xr, yt), (xl, yt)),
                Segment::Arc {
                    center: Point::new(xl - off, 0.0),
                    radius: arc_radius,
                    start_angle: ang,
                    sweep: -2.0 * ang,
                },
                line((xl, -yt), (xr, -yt)),
            ]])
        }
        ResolvedShape::Concave {
            width,
            height,
            sagitta,
            side_radius,
            cap_radius,
        } => {
            let (xl, yt) = (xr - width, height / 2.0);
            let xm = xr - width / 2.0;
            let cap_off = cap_radius - sagitta;
            let side_off = side_radius - sagitta;
            let beta = (width / 2.0).atan2(cap_off);
            let gamma = yt.atan2(side_off);
            BoundaryPath::from_components(vec![vec![
                line((xr, -yt), (xr, yt)),
                Segment::Arc {
                    center: Point::new(xm, yt + cap_off),
                    radius: cap_radius,
                    start_angle: -PI / 2.0 + beta,
                    sweep: -2.0 * beta,
                },
                Segment::Arc {
                    center: Point::new(xl - side_off, 0.0),
                    radius: side_radius,
                    start_angle: gamma,
                    sweep: -2.0 * gamma,
                },
                Segment::Arc {
                    center: Point::new(xm, -yt - cap_off),
                    radius: cap_radius,
                    start_angle: PI / 2.0 + beta,
                    sweep: -2.0 * beta,
                },
            ]])
        }
    }
}

impl DoubleWellGeometry {
    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn kind(&self) -> ShapeKind {
        self.spec.kind()
    }

    pub fn shape(&self) -> &ResolvedShape {
        &self.shape
    }

    pub fn barrier_height(&self) -> f64 {
        self.spec.barrier_height
    }

    /// Lower-left and upper-right corners of the whole double well.
    pub fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }

    pub fn boundary(&self, side: Side) -> &BoundaryPath {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Hard-wall perimeter of one well (barrier face counted as wall).
    pub fn well_perimeter(&self) -> f64 {
        self.left.length()
    }

    pub fn boundary_point(&self, side: Side, s: f64) -> Result<(Point, Vector), GeometryError> {
        self.boundary(side).point(s)
    }

    pub fn barrier_face(&self) -> BarrierFace {
        let half = self.spec.barrier_width / 2.0;
        match self.shape {
            ResolvedShape::Rectangle { height, .. }
            | ResolvedShape::Sinai { height, .. }
            | ResolvedShape::Butterfly { height, .. }
            | ResolvedShape::Concave { height, .. } => BarrierFace {
                x_interface: -half,
                y_min: -height / 2.0,
                y_max: height / 2.0,
            },
            ResolvedShape::Stadium { straight, .. } => BarrierFace {
                x_interface: -half,
                y_min: -straight / 2.0,
                y_max: straight / 2.0,
            },
            ResolvedShape::Circle {
                radius,
                gap,
                cap_half_height,
            } => BarrierFace {
                x_interface: -gap / 2.0 - radius
                    + (radius * radius - cap_half_height * cap_half_height).sqrt(),
                y_min: -cap_half_height,
                y_max: cap_half_height,
            },
        }
    }

    /// Region containing `p`. Points on a well/barrier interface belong to
    /// the barrier; points on an outer wall are outside.
    pub fn classify(&self, p: Point) -> Region {
        let q = Point::new(-p.x.abs(), p.y);
        let region = if self.in_barrier(q) {
            Region::Barrier
        } else if self.in_left_well(q) {
            Region::LeftWell
        } else {
            Region::Outside
        };
        if p.x > 0.0 {
            region.mirrored()
        } else {
            region
        }
    }

    // q is in the closed left half plane
    fn in_barrier(&self, q: Point) -> bool {
        let half = self.spec.barrier_width / 2.0;
        match self.shape {
            ResolvedShape::Rectangle { height, .. }
            | ResolvedShape::Sinai { height, .. }
            | ResolvedShape::Butterfly { height, .. }
            | ResolvedShape::Concave { height, .. } => q.x >= -half && q.y.abs() < height / 2.0,
            ResolvedShape::Stadium { straight, .. } => {
                q.x >= -half && q.y.abs() < straight / 2.0
            }
            ResolvedShape::Circle {
                radius,
                gap,
                cap_half_height,
            } => {
                let cx = -gap / 2.0 - radius;
                q.y.abs() < cap_half_height
                    && q.x > cx
                    && (q.x - cx).powi(2) + q.y * q.y >= radius * radius
            }
        }
    }

    // strict interior of the left well
    fn in_left_well(&self, q: Point) -> bool {
        let xr = -self.spec.barrier_width / 2.0;
        let in_rect = |w: f64, h: f64| q.x < xr && q.x > xr - w && q.y.abs() < h / 2.0;
        let outside_disk =
            |c: Point, r: f64| (q.x - c.x).powi(2) + (q.y - c.y).powi(2) > r * r;
        let inside_disk = |c: Point, r: f64| (q.x - c.x).powi(2) + (q.y - c.y).powi(2) < r * r;
        match self.shape {
            ResolvedShape::Rectangle { width, height } => in_rect(width, height),
            ResolvedShape::Circle { radius, gap, .. } => {
                inside_disk(Point::new(-gap / 2.0 - radius, 0.0), radius)
            }
            ResolvedShape::Stadium {
                cap_width,
                straight,
            } => {
                let r = cap_width / 2.0;
                let cx = xr - r;
                in_rect(cap_width, straight)
                    || inside_disk(Point::new(cx, straight / 2.0), r)
                    || inside_disk(Point::new(cx, -straight / 2.0), r)
            }
            ResolvedShape::Sinai {
                width,
                height,
                disk_radius,
            } => in_rect(width, height) && outside_disk(Point::new(xr - width / 2.0, 0.0), disk_radius),
            ResolvedShape::Butterfly {
                width,
                height,
                sagitta,
                arc_radius,
            } => {
                let c = Point::new(xr - width - (arc_radius - sagitta), 0.0);
                in_rect(width, height) && outside_disk(c, arc_radius)
            }
            ResolvedShape::Concave {
                width,
                height,
                sagitta,
                side_radius,
                cap_radius,
            } => {
                let xm = xr - width / 2.0;
                let cap_off = cap_radius - sagitta;
                in_rect(width, height)
                    && outside_disk(Point::new(xr - width - (side_radius - sagitta), 0.0), side_radius)
                    && outside_disk(Point::new(xm, height / 2.0 + cap_off), cap_radius)
                    && outside_disk(Point::new(xm, -height / 2.0 - cap_off), cap_radius)
            }
        }
    }
}

/// Monte-Carlo estimate of a region's area with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaEstimate {
    pub area: f64,
    pub stderr: f64,
}

/// Uniform Monte-Carlo integration of the region indicator over the
/// bounding box. Reproducible for a fixed seed.
pub fn region_area(
    g: &DoubleWellGeometry,
    region: Region,
    n_samples: usize,
    seed: u64,
) -> AreaEstimate {
    let (lo, hi) = g.bounding_box();
    // pad so boundary points are sampled from both sides
    let pad = 1e-3;
    let (x0, x1, y0, y1) = (lo.x - pad, hi.x + pad, lo.y - pad, hi.y + pad);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
        if g.classify(p) == region {
            hits += 1;
        }
    }
    let box_area = (x1 - x0) * (y1 - y0);
    let frac = hits as f64 / n_samples as f64;
    AreaEstimate {
        area: box_area * frac,
        stderr: box_area * (frac * (1.0 - frac) / n_samples as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geom(kind: ShapeKind) -> DoubleWellGeometry {
        build_double_well(ShapeSpec::new(kind)).unwrap()
    }

    #[test]
    fn rectangle_dimensions_are_exact() {
        let g = geom(ShapeKind::Rectangle);
        match *g.shape() {
            ResolvedShape::Rectangle { width, height } => {
                assert_abs_diff_eq!(width, 2.0, epsilon = 1e-15);
                assert_abs_diff_eq!(width * height, 4.8, epsilon = 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn circle_radius_gives_area() {
        let g = geom(ShapeKind::Circle);
        let ResolvedShape::Circle { radius, .. } = *g.shape() else {
            unreachable!()
        };
        assert_abs_diff_eq!(radius, 1.23608, epsilon = 1e-5);
        assert_abs_diff_eq!(PI * radius * radius, 4.8, epsilon = 1e-12);
    }

    #[test]
    fn stadium_straight_length() {
        let ResolvedShape::Stadium { straight, .. } = *geom(ShapeKind::Stadium).shape() else {
            unreachable!()
        };
        assert_abs_diff_eq!(1.8 * straight + PI * 0.81, 4.8, epsilon = 1e-12);
    }

    #[test]
    fn sinai_disk_radius() {
        let ResolvedShape::Sinai { disk_radius, .. } = *geom(ShapeKind::Sinai).shape() else {
            unreachable!()
        };
        assert_abs_diff_eq!(disk_radius, 0.3909, epsilon = 1e-4);
    }

    #[test]
    fn classify_examples() {
        let g = geom(ShapeKind::Rectangle);
        assert_eq!(g.classify(Point::new(0.0, 0.0)), Region::Barrier);
        assert_eq!(g.classify(Point::new(-1.0, 0.0)), Region::LeftWell);
        assert_eq!(g.classify(Point::new(1.0, 0.0)), Region::RightWell);
        for kind in ShapeKind::ALL {
            let g = geom(kind);
            assert_eq!(g.classify(Point::new(50.0, -30.0)), Region::Outside);
        }
    }

    #[test]
    fn interface_tie_breaks() {
        let g = geom(ShapeKind::Rectangle);
        // well/barrier interface
        assert_eq!(g.classify(Point::new(-0.05, 0.3)), Region::Barrier);
        assert_eq!(g.classify(Point::new(0.05, 0.3)), Region::Barrier);
        // outer walls
        assert_eq!(g.classify(Point::new(-2.05, 0.3)), Region::Outside);
        assert_eq!(g.classify(Point::new(-1.0, 1.2)), Region::Outside);
        assert_eq!(g.classify(Point::new(0.0, 1.2)), Region::Outside);
    }

    #[test]
    fn unresolvable_shapes_name_the_parameter() {
        let mut spec = ShapeSpec::new(ShapeKind::Stadium);
        spec.params.set("cap_width", 3.0).unwrap();
        match build_double_well(spec) {
            Err(GeometryError::Unresolvable { name, .. }) => assert_eq!(name, "straight"),
            other => panic!("unexpected {other:?}"),
        }
        let mut spec = ShapeSpec::new(ShapeKind::Sinai);
        spec.params.set("width", 1.0).unwrap();
        assert!(matches!(
            build_double_well(spec),
            Err(GeometryError::Unresolvable { name: "disk_radius", .. })
        ));
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!("hexagon".parse::<ShapeKind>().is_err());
        assert_eq!("Concave".parse::<ShapeKind>().unwrap(), ShapeKind::Concave);
        let mut p = ShapeParams::defaults(ShapeKind::Circle);
        assert!(p.set("height", 1.0).is_err());
    }

    #[test]
    fn boundary_origin_and_normals() {
        let g = geom(ShapeKind::Rectangle);
        let (p, n) = g.boundary_point(Side::Left, 0.0).unwrap();
        assert_abs_diff_eq!(p.x, -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, -1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(n.x, -1.0, epsilon = 1e-15);
        let (p, n) = g.boundary_point(Side::Right, 0.0).unwrap();
        assert_abs_diff_eq!(p.x, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, -1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(n.y, 1.0, epsilon = 1e-15);
        assert!(g.boundary_point(Side::Left, g.well_perimeter()).is_err());
        assert!(g.boundary_point(Side::Left, -0.1).is_err());
    }

    #[test]
    fn circle_boundary_on_circle() {
        let g = geom(ShapeKind::Circle);
        let ResolvedShape::Circle { radius, gap, .. } = *g.shape() else {
            unreachable!()
        };
        let c = Point::new(-gap / 2.0 - radius, 0.0);
        let l = g.well_perimeter();
        for k in 0..97 {
            let s = l * k as f64 / 97.0;
            let (p, n) = g.boundary_point(Side::Left, s).unwrap();
            assert_abs_diff_eq!((p - c).norm(), radius, epsilon = 1e-12);
            assert!(n.dot(&(c - p)) > 0.0);
        }
    }

    #[test]
    fn stadium_cap_normal_points_to_cap_center() {
        let g = geom(ShapeKind::Stadium);
        let ResolvedShape::Stadium { straight, .. } = *g.shape() else {
            unreachable!()
        };
        // the first cap begins right after the barrier face
        let s = straight + 0.4;
        let (p, n) = g.boundary_point(Side::Left, s).unwrap();
        let c = Point::new(-0.05 - 0.9, straight / 2.0);
        assert_abs_diff_eq!((p - c).norm(), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(n.dot(&(c - p).normalize()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn corners_are_detected() {
        let g = geom(ShapeKind::Stadium);
        let b = g.boundary(Side::Left);
        assert!((0..b.segments().len()).all(|k| !b.is_corner(k)));
        let g = geom(ShapeKind::Rectangle);
        let b = g.boundary(Side::Left);
        assert!((0..4).all(|k| b.is_corner(k)));
    }
}
