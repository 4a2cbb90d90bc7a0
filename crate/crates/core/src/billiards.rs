//! Classical billiard dynamics inside one well, in Birkhoff coordinates.
//!
//! Collisions are found analytically against lines and circular arcs. A
//! bounce is recorded as `(s, c)` with `s` the arc length of the hit and
//! `c = v · t` the sine of the incidence angle, positive when the incoming
//! velocity runs toward increasing `s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{BoundaryPath, GeometryError, Point, Segment, Vector};
use crate::mix_seed;

/// Distance below which hits are ignored and corners are considered struck.
pub const EPS_GEOM: f64 = 1e-9;
/// `|v · n|` below which a hit counts as tangential.
pub const EPS_TANGENT: f64 = 1e-10;
pub const MIN_CHAOS_BOUNCES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilliardError {
    #[error("direction is not incident on the wall (v·n = {0})")]
    NotIncident(f64),
    #[error("ray from ({x}, {y}) leaves the well without hitting its boundary", x = .0.x, y = .0.y)]
    NoIntersection(Point),
    #[error("invalid bounce state: {0}")]
    InvalidState(String),
    #[error("|c| = {0} exceeds 1")]
    SineOutOfRange(f64),
    #[error("trajectory terminated ({reason}) after {bounces} bounces, need {needed}")]
    TooShort {
        reason: Termination,
        bounces: usize,
        needed: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Birkhoff coordinates of one collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceState {
    pub s: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point,
    pub direction: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Corner,
    Tangent,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Corner => "corner hit",
            Termination::Tangent => "tangential hit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub point: Point,
    pub segment: usize,
    pub distance: f64,
    pub state: BounceState,
    /// Incoming unit velocity.
    pub incoming: Vector,
    pub normal: Vector,
    /// Set when the hit is at a corner or grazing; the motion cannot continue.
    pub flag: Option<Termination>,
}

/// Specular reflection of `v` off a wall with inward normal `n`.
pub fn reflect(v: Vector, n: Vector) -> Result<Vector, BilliardError> {
    let d = v.dot(&n);
    if d >= 0.0 {
        return Err(BilliardError::NotIncident(d));
    }
    Ok((v - n * (2.0 * d)).normalize())
}

fn cross(a: Vector, b: Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance along the ray and local arc length of its first crossing with `seg`.
fn intersect(seg: &Segment, ray: &Ray) -> Option<(f64, f64)> {
    let (p, d) = (ray.origin, ray.direction);
    match *seg {
        Segment::Line { start, end } => {
            let e = end - start;
            let denom = cross(d, e);
            if denom == 0.0 {
                return None;
            }
            let w = start - p;
            let t = cross(w, e) / denom;
            let u = cross(w, d) / denom;
            let len = e.norm();
            (t > EPS_GEOM && (-1e-12..=1.0 + 1e-12).contains(&u)).then(|| (t, (u * len).clamp(0.0, len)))
        }
        Segment::Arc {
            center,
            radius,
            start_angle,
            sweep,
        } => {
            let m = p - center;
            let b = d.dot(&m);
            let disc = b * b - (m.norm_squared() - radius * radius);
            if disc < 0.0 {
                return None;
            }
            let r = disc.sqrt();
            let tau = std::f64::consts::TAU;
            let mut best: Option<(f64, f64)> = None;
            for t in [-b - r, -b + r] {
                if t <= EPS_GEOM {
                    continue;
                }
                let q = m + d * t;
                let phi = q.y.atan2(q.x);
                let u = ((phi - start_angle) * sweep.signum()).rem_euclid(tau);
                let span = sweep.abs();
                let tol = 1e-12;
                let local = if u <= span + tol {
                    Some(u.min(span))
                } else if u >= tau - tol {
                    Some(0.0)
                } else {
                    None
                };
                if let Some(u) = local {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, u * radius));
                    }
                }
            }
            best
        }
    }
}

/// Nearest wall hit along `ray`.
pub fn next_collision(path: &BoundaryPath, ray: &Ray) -> Result<Collision, BilliardError> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (k, seg) in path.segments().iter().enumerate() {
        if let Some((t, local)) = intersect(seg, ray) {
            if best.is_none_or(|(_, bt, _)| t < bt) {
                best = Some((k, t, local));
            }
        }
    }
    let (k, t, local) = best.ok_or(BilliardError::NoIntersection(ray.origin))?;
    let seg = &path.segments()[k];
    let len = seg.length();
    let normal = seg.inward_normal_at(local);
    let tangent = seg.tangent_at(local);
    let v = ray.direction;
    let mut s = path.offsets()[k] + local;
    if s >= path.length() {
        s -= path.length();
    }
    let c = v.dot(&tangent);
    if c.abs() > 1.0 + 1e-12 {
        return Err(BilliardError::SineOutOfRange(c));
    }
    let corner = (local < EPS_GEOM && path.is_corner(k))
        || (len - local < EPS_GEOM && path.is_corner(path.next_in_component(k)));
    let flag = if corner {
        Some(Termination::Corner)
    } else if v.dot(&normal).abs() < EPS_TANGENT {
        Some(Termination::Tangent)
    } else {
        None
    };
    Ok(Collision {
        point: ray.origin + v * t,
        segment: k,
        distance: t,
        state: BounceState {
            s,
            c: c.clamp(-1.0, 1.0),
        },
        incoming: v,
        normal,
        flag,
    })
}

/// Ray leaving the wall at `state`, with tangential velocity component `c`.
pub fn launch(path: &BoundaryPath, state: BounceState) -> Result<Ray, BilliardError> {
    if !(state.c.abs() < 1.0) {
        return Err(BilliardError::InvalidState(format!("c = {} must lie in (-1, 1)", state.c)));
    }
    let (origin, normal) = path.point(state.s)?;
    let tangent = path.tangent(state.s)?;
    let direction = (tangent * state.c + normal * (1.0 - state.c * state.c).sqrt()).normalize();
    Ok(Ray { origin, direction })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub collisions: Vec<Collision>,
    /// Reason and index of the bounce that stopped the trajectory early.
    pub termination: Option<(Termination, usize)>,
}

impl Trajectory {
    pub fn states(&self) -> Vec<BounceState> {
        self.collisions.iter().map(|c| c.state).collect()
    }
}

/// Follows a ray for up to `n_bounces` collisions. A flagged collision is
/// recorded and ends the trajectory.
pub fn trace_ray(path: &BoundaryPath, mut ray: Ray, n_bounces: usize) -> Result<Trajectory, BilliardError> {
    let mut collisions = Vec::with_capacity(n_bounces);
    for b in 0..n_bounces {
        let hit = next_collision(path, &ray)?;
        collisions.push(hit);
        if let Some(reason) = hit.flag {
            return Ok(Trajectory {
                collisions,
                termination: Some((reason, b)),
            });
        }
        ray = Ray {
            origin: hit.point,
            direction: reflect(hit.incoming, hit.normal)?,
        };
    }
    Ok(Trajectory {
        collisions,
        termination: None,
    })
}

/// The `n_bounces` collisions after leaving the wall at `initial`.
pub fn trace(path: &BoundaryPath, initial: BounceState, n_bounces: usize) -> Result<Trajectory, BilliardError> {
    if n_bounces == 0 {
        return Err(BilliardError::InvalidState("n_bounces must be at least 1".into()));
    }
    trace_ray(path, launch(path, initial)?, n_bounces)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub traj: usize,
    /// 1-based collision index.
    pub bounce: usize,
    pub s: f64,
    pub c: f64,
}

/// Initial condition of trajectory `id`: uniform on `[0, L) × (-1, 1)`.
pub fn initial_condition(path: &BoundaryPath, seed: u64, id: usize) -> BounceState {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, id as u64));
    let s = rng.random_range(0.0..path.length());
    let c = loop {
        let c: f64 = rng.random_range(-1.0..1.0);
        if c > -1.0 {
            break c;
        }
    };
    BounceState { s, c }
}

/// Bounce maps of `n_traj` random trajectories, ordered by trajectory id.
pub fn poincare_section(
    path: &BoundaryPath,
    n_traj: usize,
    n_bounces: usize,
    seed: u64,
) -> Result<Vec<SectionPoint>, BilliardError> {
    let per: Vec<Vec<SectionPoint>> = (0..n_traj)
        .into_par_iter()
        .map(|id| {
            let t = trace(path, initial_condition(path, seed, id), n_bounces)?;
            Ok(t.collisions
                .iter()
                .enumerate()
                .map(|(b, c)| SectionPoint {
                    traj: id,
                    bounce: b + 1,
                    s: c.state.s,
                    c: c.state.c,
                })
                .collect())
        })
        .collect::<Result<_, BilliardError>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Mean logarithmic growth per bounce of a `δ₀` separation in the
/// normalized coordinates `(s/L, c)`, renormalized after every bounce.
pub fn chaos_indicator(
    path: &BoundaryPath,
    initial: BounceState,
    n_bounces: usize,
    delta0: f64,
) -> Result<f64, BilliardError> {
    if !(delta0 > 0.0 && delta0 <= 1e-8) {
        return Err(BilliardError::InvalidState(format!("δ₀ = {delta0} must lie in (0, 1e-8]")));
    }
    let len = path.length();
    let wrap = |x: f64| x - x.round();
    let to_state = |u: f64, c: f64| BounceState {
        s: (u.rem_euclid(1.0) * len).min(len * (1.0 - f64::EPSILON)),
        c,
    };
    let step = |st: BounceState| -> Result<Result<BounceState, Termination>, BilliardError> {
        let hit = next_collision(path, &launch(path, st)?)?;
        Ok(match hit.flag {
            Some(r) => Err(r),
            None => Ok(hit.state),
        })
    };
    let off = delta0 / std::f64::consts::SQRT_2;
    let mut a = initial;
    let mut b = to_state(initial.s / len + off, (initial.c + off).min(1.0 - 1e-15));
    let mut sum = 0.0;
    for k in 0..n_bounces {
        let (na, nb) = match (step(a)?, step(b)?) {
            (Ok(na), Ok(nb)) => (na, nb),
            (Err(reason), _) | (_, Err(reason)) => {
                if k < MIN_CHAOS_BOUNCES {
                    return Err(BilliardError::TooShort {
                        reason,
                        bounces: k,
                        needed: MIN_CHAOS_BOUNCES,
                    });
                }
                return Ok(sum / k as f64);
            }
        };
        let du = wrap(nb.s / len - na.s / len);
        let dc = nb.c - na.c;
        let d = (du * du + dc * dc).sqrt().max(1e-300);
        sum += (d / delta0).ln();
        let scale = delta0 / d;
        a = na;
        let c = (na.c + dc * scale).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        b = to_state(na.s / len + du * scale, c);
    }
    Ok(sum / n_bounces as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> BoundaryPath {
        BoundaryPath::polygon(&[
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
    }

    #[test]
    fn reflection_examples() {
        let r = reflect(Vector::new(1.0, 0.0), Vector::new(-1.0, 0.0)).unwrap();
        assert!((r - Vector::new(-1.0, 0.0)).norm() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = reflect(Vector::new(h, -h), Vector::new(0.0, 1.0)).unwrap();
        assert!((r - Vector::new(h, h)).norm() < 1e-15);
        let r = reflect(Vector::new(0.0, -1.0), Vector::new(0.0, 1.0)).unwrap();
        assert!((r - Vector::new(0.0, 1.0)).norm() < 1e-15);
        assert!(reflect(Vector::new(0.0, 1.0), Vector::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn square_hit_from_center() {
        let ray = Ray {
            origin: Point::new(0.5, 0.5),
            direction: Vector::new(1.0, 0.0),
        };
        let hit = next_collision(&square(), &ray).unwrap();
        assert!((hit.point - Point::new(1.0, 0.5)).norm() < 1e-15);
        assert!((hit.distance - 0.5).abs() < 1e-15);
        assert!(hit.state.c.abs() < 1e-15);
        assert!((hit.state.s - 1.5).abs() < 1e-15);
    }

    #[test]
    fn radial_ray_in_disk() {
        let circle = BoundaryPath::circle(Point::origin(), 1.0, 0.0);
        for a in [0.1f64, 1.0, 2.5, 4.0] {
            let ray = Ray {
                origin: Point::origin(),
                direction: Vector::new(a.cos(), a.sin()),
            };
            let hit = next_collision(&circle, &ray).unwrap();
            assert!((hit.distance - 1.0).abs() < 1e-14);
            assert!(hit.state.c.abs() < 1e-14);
        }
    }

    #[test]
    fn period_two_orbit_in_square() {
        let t = trace(&square(), BounceState { s: 0.5, c: 0.0 }, 6).unwrap();
        let s: Vec<f64> = t.states().iter().map(|b| b.s).collect();
        for (k, v) in s.iter().enumerate() {
            let expected = if k % 2 == 0 { 2.5 } else { 0.5 };
            assert!((v - expected).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn corner_hit_terminates() {
        let ray = Ray {
            origin: Point::new(0.5, 0.5),
            direction: Vector::new(1.0, 1.0).normalize(),
        };
        let t = trace_ray(&square(), ray, 10).unwrap();
        assert_eq!(t.termination, Some((Termination::Corner, 0)));
    }

    #[test]
    fn launch_rejects_grazing_state() {
        assert!(trace(&square(), BounceState { s: 0.5, c: 1.0 }, 3).is_err());
        assert!(trace(&square(), BounceState { s: 0.5, c: 0.2 }, 0).is_err());
    }
}
