//! Reference-trajectory generators, obstacle definitions and the randomized
//! cluttered-environment generator.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::so3::EulerZyx;

/// RNG algorithm used by scenario generation, recorded in trace headers so
/// layouts can be regenerated bit-identically.
pub const SCENARIO_RNG: &str = "chacha8";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("could not place obstacle {index} clear of the start position after {attempts} attempts")]
    PlacementFailure { index: usize, attempts: usize },
}

/// Reference sample: position through snap, plus desired yaw.
#[derive(Debug, Clone, Copy)]
pub struct ReferencePoint {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub jerk: Vector3<f64>,
    pub snap: Vector3<f64>,
    pub yaw: f64,
}

impl ReferencePoint {
    pub fn hover_at(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
            jerk: Vector3::zeros(),
            snap: Vector3::zeros(),
            yaw: 0.0,
        }
    }
}

/// Constant setpoint: all derivatives zero.
pub fn setpoint_reference(x_set: Vector3<f64>) -> ReferencePoint {
    ReferencePoint::hover_at(x_set)
}

/// Counterclockwise circle of radius `r_c` and period `period` around a
/// fixed `center`, differentiated through snap.
pub fn circle_reference(t: f64, r_c: f64, period: f64, center: Vector3<f64>) -> ReferencePoint {
    debug_assert!(period > 0.0);
    let w = 2.0 * std::f64::consts::PI / period;
    let (s, c) = (w * t).sin_cos();
    ReferencePoint {
        position: center + r_c * Vector3::new(c, s, 0.0),
        velocity: r_c * w * Vector3::new(-s, c, 0.0),
        acceleration: r_c * w * w * Vector3::new(-c, -s, 0.0),
        jerk: r_c * w.powi(3) * Vector3::new(s, -c, 0.0),
        snap: r_c * w.powi(4) * Vector3::new(c, s, 0.0),
        yaw: 0.0,
    }
}

/// The reference trajectory of a scenario.
#[derive(Debug, Clone)]
pub enum ReferenceKind {
    Setpoint {
        point: Vector3<f64>,
    },
    Circle {
        r_c: f64,
        period: f64,
        center: Vector3<f64>,
    },
}

impl ReferenceKind {
    pub fn sample(&self, t: f64) -> ReferencePoint {
        match self {
            ReferenceKind::Setpoint { point } => setpoint_reference(*point),
            ReferenceKind::Circle { r_c, period, center } => {
                circle_reference(t, *r_c, *period, *center)
            }
        }
    }
}

/// Obstacle path; positions before `t_start` are inactive.
#[derive(Debug, Clone)]
pub enum ObstacleMotion {
    Linear {
        start: Vector3<f64>,
        velocity: Vector3<f64>,
    },
    /// Circular orbit in the x-y plane, used for the obstacle that rides the
    /// reference circle in the opposite direction.
    Circular {
        center: Vector3<f64>,
        orbit_radius: f64,
        period: f64,
        phase: f64,
        clockwise: bool,
    },
}

#[derive(Debug, Clone)]
pub struct Obstacle {
    pub motion: ObstacleMotion,
    pub radius: f64,
    pub t_start: f64,
}

impl Obstacle {
    pub fn static_sphere(center: Vector3<f64>, radius: f64) -> Self {
        Obstacle {
            motion: ObstacleMotion::Linear {
                start: center,
                velocity: Vector3::zeros(),
            },
            radius,
            t_start: 0.0,
        }
    }

    pub fn moving(start: Vector3<f64>, velocity: Vector3<f64>, radius: f64) -> Self {
        Obstacle {
            motion: ObstacleMotion::Linear { start, velocity },
            radius,
            t_start: 0.0,
        }
    }

    /// Position and velocity at time `t`, or `None` while inactive.
    pub fn state(&self, t: f64) -> Option<(Vector3<f64>, Vector3<f64>)> {
        if t < self.t_start {
            return None;
        }
        let tau = t - self.t_start;
        Some(match &self.motion {
            ObstacleMotion::Linear { start, velocity } => (start + velocity * tau, *velocity),
            ObstacleMotion::Circular {
                center,
                orbit_radius,
                period,
                phase,
                clockwise,
            } => {
                let dir = if *clockwise { -1.0 } else { 1.0 };
                let w = dir * 2.0 * std::f64::consts::PI / period;
                let (s, c) = (w * tau + phase).sin_cos();
                (
                    center + *orbit_radius * Vector3::new(c, s, 0.0),
                    *orbit_radius * w * Vector3::new(-s, c, 0.0),
                )
            }
        })
    }
}

/// Robot sphere radius plus extra margin.
#[derive(Debug, Clone, Copy)]
pub struct SafetyGeometry {
    pub r_robot: f64,
    pub r_safety: f64,
}

/// Minimum admissible center distance `r_robot + r_obstacle + r_safety`.
pub fn augmented_radius(o: &Obstacle, sg: &SafetyGeometry) -> f64 {
    sg.r_robot + o.radius + sg.r_safety
}

/// Axis-aligned box, used for obstacle placement and state constraints.
#[derive(Debug, Clone, Copy)]
pub struct BoxBounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl BoxBounds {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// `n` static obstacles uniformly placed in `bounds` from a seeded ChaCha8
/// stream. Obstacles that would overlap the start position (plus 0.2 m
/// clearance) are resampled.
pub fn generate_cluttered(
    n: usize,
    bounds: &BoxBounds,
    radius_range: (f64, f64),
    seed: u64,
    start: &Vector3<f64>,
    sg: &SafetyGeometry,
) -> Result<Vec<Obstacle>, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::with_capacity(n);
    for index in 0..n {
        let mut placed = None;
        for _ in 0..1000 {
            let center = Vector3::new(
                rng.random_range(bounds.min.x..=bounds.max.x),
                rng.random_range(bounds.min.y..=bounds.max.y),
                rng.random_range(bounds.min.z..=bounds.max.z),
            );
            let radius = rng.random_range(radius_range.0..=radius_range.1);
            let candidate = Obstacle::static_sphere(center, radius);
            let clearance = augmented_radius(&candidate, sg) + 0.2;
            if (center - start).norm() >= clearance {
                placed = Some(candidate);
                break;
            }
        }
        match placed {
            Some(o) => obstacles.push(o),
            None => return Err(ScenarioError::PlacementFailure { index, attempts: 1000 }),
        }
    }
    Ok(obstacles)
}

/// A full scenario: reference, obstacles, duration, optional state box and
/// the RNG seed it was generated from.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub reference: ReferenceKind,
    pub obstacles: Vec<Obstacle>,
    pub duration: f64,
    pub bounds: Option<BoxBounds>,
    pub seed: u64,
    /// Initial attitude override (z-y-x Euler); identity when absent.
    pub initial_attitude: Option<EulerZyx>,
    /// Initial position override; the t = 0 reference position when absent.
    pub initial_position: Option<Vector3<f64>>,
    /// Initial velocity override; the t = 0 reference velocity when absent.
    pub initial_velocity: Option<Vector3<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn circle_at_t0() {
        let r = circle_reference(0.0, 1.5, 8.0, Vector3::new(0.5, 0.0, 1.0));
        assert_abs_diff_eq!(r.position, Vector3::new(2.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.velocity,
            Vector3::new(0.0, 2.0 * PI * 1.5 / 8.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn circle_speed_is_constant() {
        let speed = 2.0 * PI * 1.5 / 8.0;
        for i in 0..50 {
            let r = circle_reference(i as f64 * 0.37, 1.5, 8.0, Vector3::zeros());
            assert_abs_diff_eq!(r.velocity.norm(), speed, epsilon = 1e-12);
        }
    }

    #[test]
    fn snap_points_along_position_offset() {
        let center = Vector3::new(1.0, -2.0, 0.5);
        let r = circle_reference(1.3, 1.5, 8.0, center);
        let w = 2.0 * PI / 8.0;
        let offset = r.position - center;
        assert_abs_diff_eq!(r.snap, w.powi(4) * offset, epsilon = 1e-12);
    }

    #[test]
    fn circle_derivatives_match_finite_differences() {
        let sample = |t: f64| circle_reference(t, 1.5, 8.0, Vector3::zeros()).position;
        let t = 2.7;
        let r = circle_reference(t, 1.5, 8.0, Vector3::zeros());

        let h = 1e-5;
        let vel_fd = (sample(t + h) - sample(t - h)) / (2.0 * h);
        assert!((vel_fd - r.velocity).norm() / r.velocity.norm() <= 1e-6);

        let h = 1e-4;
        let acc_fd = (sample(t + h) - 2.0 * sample(t) + sample(t - h)) / (h * h);
        assert!((acc_fd - r.acceleration).norm() / r.acceleration.norm() <= 1e-4);

        let h = 1e-3;
        let jerk_fd = (sample(t + 2.0 * h) - 2.0 * sample(t + h) + 2.0 * sample(t - h)
            - sample(t - 2.0 * h))
            / (2.0 * h.powi(3));
        assert!((jerk_fd - r.jerk).norm() / r.jerk.norm() <= 1e-2);

        let snap_fd = (sample(t + 2.0 * h) - 4.0 * sample(t + h) + 6.0 * sample(t)
            - 4.0 * sample(t - h)
            + sample(t - 2.0 * h))
            / h.powi(4);
        assert!((snap_fd - r.snap).norm() / r.snap.norm() <= 1e-2);
    }

    #[test]
    fn setpoint_has_zero_derivatives() {
        let r = setpoint_reference(Vector3::new(0.0, 0.0, 1.25));
        assert_eq!(r.position, Vector3::new(0.0, 0.0, 1.25));
        assert_eq!(r.velocity, Vector3::zeros());
        assert_eq!(r.acceleration, Vector3::zeros());
        assert_eq!(r.snap, Vector3::zeros());
    }

    #[test]
    fn obstacle_from_close_by_setup() {
        // Start [1.28, 0, -5], velocity [0, 0, 2]: crosses z = 0 at t = 2.5.
        let o = Obstacle::moving(
            Vector3::new(1.28, 0.0, -5.0),
            Vector3::new(0.0, 0.0, 2.0),
            1.0,
        );
        let (pos, vel) = o.state(2.5).unwrap();
        assert_abs_diff_eq!(pos, Vector3::new(1.28, 0.0, 0.0), epsilon = 1e-12);
        assert_eq!(vel, Vector3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn obstacle_is_affine_in_time() {
        let o = Obstacle::moving(Vector3::new(1.0, 2.0, 3.0), Vector3::new(-1.0, 0.5, 0.0), 0.3);
        let (p1, _) = o.state(1.0).unwrap();
        let (p2, _) = o.state(2.0).unwrap();
        let (p3, _) = o.state(3.0).unwrap();
        assert_abs_diff_eq!(p3 - p2, p2 - p1, epsilon = 1e-15);
    }

    #[test]
    fn inactive_before_t_start() {
        let mut o = Obstacle::static_sphere(Vector3::zeros(), 1.0);
        o.t_start = 2.0;
        assert!(o.state(1.9).is_none());
        assert!(o.state(2.0).is_some());
    }

    #[test]
    fn augmented_radius_values() {
        let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
        let o = Obstacle::static_sphere(Vector3::zeros(), 1.0);
        assert_abs_diff_eq!(augmented_radius(&o, &sg), 1.265, epsilon = 1e-15);

        let sg2 = SafetyGeometry { r_robot: 0.265, r_safety: 0.1 };
        assert_abs_diff_eq!(
            augmented_radius(&o, &sg2) - augmented_radius(&o, &sg),
            0.1,
            epsilon = 1e-15
        );
        // Squared augmented radius is the square of the sum.
        let r = augmented_radius(&o, &sg);
        assert_abs_diff_eq!(r * r, 1.265f64.powi(2), epsilon = 1e-15);
    }

    #[test]
    fn cluttered_generation_is_deterministic_and_in_box() {
        let bounds = BoxBounds {
            min: Vector3::new(-4.0, -4.0, -2.0),
            max: Vector3::new(4.0, 4.0, 2.0),
        };
        let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
        let start = Vector3::new(1.5, 0.0, 0.0);
        let a = generate_cluttered(40, &bounds, (0.2, 0.5), 7, &start, &sg).unwrap();
        let b = generate_cluttered(40, &bounds, (0.2, 0.5), 7, &start, &sg).unwrap();
        assert_eq!(a.len(), 40);
        for (oa, ob) in a.iter().zip(&b) {
            let (pa, _) = oa.state(0.0).unwrap();
            let (pb, _) = ob.state(0.0).unwrap();
            assert_eq!(pa, pb);
            assert_eq!(oa.radius, ob.radius);
            assert!(bounds.contains(&pa));
            assert!((0.2..=0.5).contains(&oa.radius));
            assert!((pa - start).norm() >= augmented_radius(oa, &sg) + 0.2);
        }
        let different = generate_cluttered(40, &bounds, (0.2, 0.5), 8, &start, &sg).unwrap();
        let (p_diff, _) = different[0].state(0.0).unwrap();
        let (p_a, _) = a[0].state(0.0).unwrap();
        assert_ne!(p_a, p_diff);
    }

    #[test]
    fn cluttered_zero_count_is_empty() {
        let bounds = BoxBounds {
            min: Vector3::new(-1.0, -1.0, -1.0),
            max: Vector3::new(1.0, 1.0, 1.0),
        };
        let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
        let list =
            generate_cluttered(0, &bounds, (0.2, 0.5), 1, &Vector3::zeros(), &sg).unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn placement_failure_when_box_is_inside_clearance() {
        // A box entirely within the start clearance can never host an obstacle.
        let bounds = BoxBounds {
            min: Vector3::new(-0.1, -0.1, -0.1),
            max: Vector3::new(0.1, 0.1, 0.1),
        };
        let sg = SafetyGeometry { r_robot: 0.265, r_safety: 0.0 };
        let result = generate_cluttered(1, &bounds, (0.2, 0.5), 1, &Vector3::zeros(), &sg);
        assert!(matches!(result, Err(ScenarioError::PlacementFailure { .. })));
    }

    #[test]
    fn circular_obstacle_orbits_clockwise() {
        let o = Obstacle {
            motion: ObstacleMotion::Circular {
                center: Vector3::new(0.0, 0.0, 2.0),
                orbit_radius: 1.0,
                period: 15.0,
                phase: 0.0,
                clockwise: true,
            },
            radius: 0.125,
            t_start: 0.0,
        };
        let (p0, v0) = o.state(0.0).unwrap();
        assert_abs_diff_eq!(p0, Vector3::new(1.0, 0.0, 2.0), epsilon = 1e-12);
        // Clockwise: initial motion toward -y.
        assert!(v0.y < 0.0);
        let (p_quarter, _) = o.state(15.0 / 4.0).unwrap();
        assert_abs_diff_eq!(p_quarter, Vector3::new(0.0, -1.0, 2.0), epsilon = 1e-9);
    }
}
