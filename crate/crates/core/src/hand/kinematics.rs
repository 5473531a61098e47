use super::{HandError, HandFrame, Trajectory, Vec3};

/// Palm velocity (m/s) and acceleration (m/s²) for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics {
    pub vel: Vec3,
    pub acc: Vec3,
}

pub type KinematicTrack = Vec<Kinematics>;

// Per-point difference formulas, shared by the batch and streaming paths so
// both produce identical bits.

fn forward(p0: &HandFrame, p1: &HandFrame) -> Vec3 {
    (p1.palm_pos - p0.palm_pos) / (p1.t - p0.t)
}

fn central_vel(prev: &HandFrame, next: &HandFrame) -> Vec3 {
    (next.palm_pos - prev.palm_pos) / (next.t - prev.t)
}

fn second_diff(prev: &HandFrame, cur: &HandFrame, next: &HandFrame) -> Vec3 {
    let h1 = cur.t - prev.t;
    let h2 = next.t - cur.t;
    let d1 = (cur.palm_pos - prev.palm_pos) / h1;
    let d2 = (next.palm_pos - cur.palm_pos) / h2;
    (d2 - d1) * (2.0 / (h1 + h2))
}

/// Central-difference kinematics over a whole trajectory.
///
/// Velocities are one-sided at the two ends. Accelerations use the
/// three-point second difference; the end frames reuse the nearest
/// three-point stencil. Fewer than three frames yield zero acceleration,
/// and a single frame yields all zeros.
pub fn derive_kinematics(traj: &Trajectory) -> Result<KinematicTrack, HandError> {
    let f = traj.frames();
    let n = f.len();
    match n {
        0 => return Err(HandError::Empty),
        1 => return Ok(vec![Kinematics::default()]),
        _ => {}
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let vel = if i == 0 {
            forward(&f[0], &f[1])
        } else if i == n - 1 {
            forward(&f[n - 2], &f[n - 1])
        } else {
            central_vel(&f[i - 1], &f[i + 1])
        };
        let acc = if n < 3 {
            Vec3::zeros()
        } else {
            let c = i.clamp(1, n - 2);
            second_diff(&f[c - 1], &f[c], &f[c + 1])
        };
        out.push(Kinematics { vel, acc });
    }
    Ok(out)
}

/// Online version of [`derive_kinematics`].
///
/// Frames are released with a one-frame lag (two for the very first frame),
/// once the stencil they need is available; [`KinematicsStream::finish`]
/// flushes the tail. The concatenated output equals the batch result
/// bit-for-bit.
#[derive(Debug, Clone, Default)]
pub struct KinematicsStream {
    window: Vec<HandFrame>,
    pushed: usize,
}

impl KinematicsStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pushes the next frame and returns the frames whose kinematics became
    /// final. The caller guarantees increasing timestamps.
    pub fn push(&mut self, frame: HandFrame) -> Vec<(HandFrame, Kinematics)> {
        self.window.push(frame);
        if self.window.len() > 3 {
            self.window.remove(0);
        }
        self.pushed += 1;
        let w = &self.window;
        match self.pushed {
            1 | 2 => Vec::new(),
            3 => {
                let acc = second_diff(&w[0], &w[1], &w[2]);
                vec![
                    (w[0], Kinematics { vel: forward(&w[0], &w[1]), acc }),
                    (w[1], Kinematics { vel: central_vel(&w[0], &w[2]), acc }),
                ]
            }
            _ => {
                let acc = second_diff(&w[0], &w[1], &w[2]);
                vec![(w[1], Kinematics { vel: central_vel(&w[0], &w[2]), acc })]
            }
        }
    }

    /// Releases the frames still held back and resets the stream.
    pub fn finish(&mut self) -> Vec<(HandFrame, Kinematics)> {
        let w = std::mem::take(&mut self.window);
        let pushed = std::mem::take(&mut self.pushed);
        match pushed {
            0 => Vec::new(),
            1 => vec![(w[0], Kinematics::default())],
            2 => {
                let v = forward(&w[0], &w[1]);
                let k = Kinematics {
                    vel: v,
                    acc: Vec3::zeros(),
                };
                vec![(w[0], k), (w[1], k)]
            }
            _ => {
                let n = w.len();
                let acc = second_diff(&w[n - 3], &w[n - 2], &w[n - 1]);
                vec![(
                    w[n - 1],
                    Kinematics {
                        vel: forward(&w[n - 2], &w[n - 1]),
                        acc,
                    },
                )]
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize, pos: impl Fn(f64) -> Vec3) -> Trajectory {
        let frames = (0..n)
            .map(|i| {
                let t = i as f64 / 100.0;
                HandFrame::open_palm(t, pos(t))
            })
            .collect();
        Trajectory::new(frames).unwrap()
    }

    #[test]
    fn stationary_hand_is_zero() {
        let k = derive_kinematics(&ramp(20, |_| Vec3::new(0.01, -0.02, 0.2))).unwrap();
        assert!(k.iter().all(|k| k.vel == Vec3::zeros() && k.acc == Vec3::zeros()));
    }

    #[test]
    fn single_frame_is_zero() {
        let k = derive_kinematics(&ramp(1, |_| Vec3::new(0.0, 0.0, 0.2))).unwrap();
        assert_eq!(k, vec![Kinematics::default()]);
    }

    #[test]
    fn empty_is_error() {
        let traj = Trajectory::new(Vec::new()).unwrap();
        assert_eq!(derive_kinematics(&traj), Err(HandError::Empty));
    }

    #[test]
    fn linear_ramp_velocity() {
        // x(t) = 0.5 t sampled at 100 Hz; the analytic derivative is 0.5 m/s.
        let k = derive_kinematics(&ramp(50, |t| Vec3::new(0.5 * t, 0.0, 0.2))).unwrap();
        for (i, k) in k.iter().enumerate().skip(1).take(48) {
            assert!((k.vel.x - 0.5).abs() < 1e-12, "frame {i}: {}", k.vel.x);
            assert!(k.acc.x.abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_acceleration_is_exact() {
        // z(t) = 0.2 - 5 t^2 has constant acceleration -10 m/s^2.
        let k = derive_kinematics(&ramp(30, |t| Vec3::new(0.0, 0.0, 0.2 - 5.0 * t * t))).unwrap();
        for k in &k {
            assert!((k.acc.z + 10.0).abs() < 1e-6, "{}", k.acc.z);
        }
        assert!((k[10].vel.z + 1.0).abs() < 1e-9);
    }

    fn stream_all(traj: &Trajectory) -> Vec<(HandFrame, Kinematics)> {
        let mut s = KinematicsStream::new();
        let mut out = Vec::new();
        for f in traj.frames() {
            out.extend(s.push(*f));
        }
        out.extend(s.finish());
        out
    }

    proptest! {
        #[test]
        fn linear_positions_give_constant_velocity(
            v in prop::array::uniform3(-2.0f64..2.0),
            p0 in prop::array::uniform3(-0.1f64..0.1),
            n in 3usize..60,
        ) {
            let v = Vec3::from(v);
            let p0 = Vec3::from(p0);
            let k = derive_kinematics(&ramp(n, |t| p0 + v * t)).unwrap();
            let scale = v.norm().max(1e-3);
            for k in &k {
                prop_assert!((k.vel - v).norm() <= 1e-9 * scale.max(1.0) + 1e-12);
                prop_assert!(k.acc.norm() <= 1e-9 * 1e4 * scale);
            }
        }

        #[test]
        fn stream_matches_batch(
            zs in prop::collection::vec(-0.1f64..0.1, 1..50),
            dts in prop::collection::vec(0.005f64..0.02, 50),
        ) {
            let mut t = 0.0;
            let frames: Vec<_> = zs.iter().enumerate().map(|(i, z)| {
                t += dts[i];
                HandFrame::open_palm(t, Vec3::new(z * 0.5, -z, 0.2 + z))
            }).collect();
            let traj = Trajectory::new(frames).unwrap();
            let batch = derive_kinematics(&traj).unwrap();
            let streamed = stream_all(&traj);
            prop_assert_eq!(streamed.len(), batch.len());
            for ((f, k), (src, b)) in streamed.iter().zip(traj.frames().iter().zip(&batch)) {
                prop_assert_eq!(f, src);
                prop_assert_eq!(k, b);
            }
        }
    }
}
