use super::{normalize_angle, Pose2D, RobotSpec};

/// Below this angular rate the arc update falls back to a straight segment.
const STRAIGHT_LINE_OMEGA: f64 = 1e-9;

/// Body speeds `(v, omega)` produced by wheel surface speeds.
pub fn forward_kinematics(v_left: f64, v_right: f64, axle_length: f64) -> (f64, f64) {
    ((v_right + v_left) / 2.0, (v_right - v_left) / axle_length)
}

/// Wheel surface speeds `(v_left, v_right)` realising body speeds `(v, omega)`.
pub fn inverse_kinematics(v: f64, omega: f64, axle_length: f64) -> (f64, f64) {
    let half = omega * axle_length / 2.0;
    (v - half, v + half)
}

/// Advance a pose along the exact circular arc traced by constant wheel speeds.
pub fn diff_drive_update(pose: Pose2D, v_left: f64, v_right: f64, axle_length: f64, dt: f64) -> Pose2D {
    debug_assert!(dt > 0.0 && axle_length > 0.0);
    let (v, omega) = forward_kinematics(v_left, v_right, axle_length);
    if omega.abs() < STRAIGHT_LINE_OMEGA {
        let d = v * dt;
        return Pose2D {
            x: pose.x + d * libm::cos(pose.theta),
            y: pose.y + d * libm::sin(pose.theta),
            theta: pose.theta,
        };
    }
    let radius = v / omega;
    let theta_end = pose.theta + omega * dt;
    Pose2D {
        x: pose.x + radius * (libm::sin(theta_end) - libm::sin(pose.theta)),
        y: pose.y + radius * (libm::cos(pose.theta) - libm::cos(theta_end)),
        theta: normalize_angle(theta_end),
    }
}

/// First-order actuator lag of one wheel toward `v_max * command / 100`.
pub fn motor_step(actual: f64, command: f64, spec: &RobotSpec, dt: f64) -> f64 {
    let target = spec.v_max * command.clamp(-100.0, 100.0) / 100.0;
    let alpha = 1.0 - libm::exp(-dt / spec.motor_time_constant);
    let next = actual + (target - actual) * alpha;
    next.clamp(-spec.v_max, spec.v_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line() {
        let p = diff_drive_update(Pose2D::default(), 10.0, 10.0, 7.5, 0.1);
        assert!((p.x - 1.0).abs() < 1e-12);
        assert_eq!(p.y, 0.0);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn pure_rotation() {
        let p = diff_drive_update(Pose2D::default(), -5.0, 5.0, 7.5, 0.1);
        assert!(p.x.abs() < 1e-15 && p.y.abs() < 1e-15);
        assert!((p.theta - (10.0 / 7.5) * 0.1).abs() < 1e-15);
    }

    #[test]
    fn arc_matches_fine_euler() {
        // Frozen from a 1e5-substep Euler integration with the heading sampled
        // at each substep midpoint.
        let p = diff_drive_update(Pose2D::default(), 5.0, 10.0, 7.5, 0.1);
        let n = 100_000;
        let h = 0.1 / n as f64;
        let (v, w) = (7.5, 5.0 / 7.5);
        let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..n {
            let mid = th + 0.5 * w * h;
            x += v * mid.cos() * h;
            y += v * mid.sin() * h;
            th += w * h;
        }
        assert!((p.x - x).abs() < 1e-6 && (p.y - y).abs() < 1e-6);
        assert!((p.theta - th).abs() < 1e-8);
    }

    #[test]
    fn motor_fixed_points_and_lag() {
        let spec = RobotSpec::default();
        assert_eq!(motor_step(0.0, 0.0, &spec, 0.05), 0.0);
        assert_eq!(motor_step(spec.v_max, 100.0, &spec, 0.05), spec.v_max);
        let expected = spec.v_max * (1.0 - (-1.0f64).exp());
        assert!((motor_step(0.0, 100.0, &spec, 0.05) - expected).abs() < 1e-12);
    }

    #[test]
    fn kinematics_inverse_roundtrip() {
        let (vl, vr) = inverse_kinematics(20.0, -1.0, 7.5);
        assert_eq!((vl, vr), (23.75, 16.25));
        let (v, w) = forward_kinematics(vl, vr, 7.5);
        assert_eq!((v, w), (20.0, -1.0));
    }
}
