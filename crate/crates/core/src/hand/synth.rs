//! Canonical gesture trajectories.
//!
//! Each generator produces a trajectory that the recognizer, under the
//! configuration it was generated for, turns into exactly one event of the
//! requested kind. Amplitudes are expressed as a multiple (`factor`) of the
//! matching recognizer threshold; timing windows shrink by the same factor.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HandError, HandFrame, Trajectory, Vec3, NOMINAL_RATE_HZ};
use crate::gesture::RecognizerConfig;

const LEAD_IN: f64 = 0.2;
const TAIL: f64 = 0.3;
const FRAME: f64 = 1.0 / NOMINAL_RATE_HZ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwipeDirection {
    Left,
    Right,
}

impl SwipeDirection {
    pub fn sign(self) -> f64 {
        match self {
            SwipeDirection::Left => -1.0,
            SwipeDirection::Right => 1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            SwipeDirection::Left => SwipeDirection::Right,
            SwipeDirection::Right => SwipeDirection::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SwipeDirection::Left => "left",
            SwipeDirection::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind {
    Swipe(SwipeDirection),
    Twist,
    Tap,
    /// Pinch, move the palm by `disp` while holding, release.
    Pinch { disp: Vec3 },
    GrabRelease,
    /// Show `1..=4` non-thumb fingers with the thumb folded.
    FingerPose(u8),
    /// Hover without gesturing for `duration` seconds.
    Idle { duration: f64 },
}

impl SynthKind {
    pub const DEFAULT_PINCH_DISP: Vec3 = Vec3::new(0.0, 0.0, 0.10);

    pub fn pinch() -> Self {
        SynthKind::Pinch {
            disp: Self::DEFAULT_PINCH_DISP,
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::Swipe(d) => write!(f, "swipe-{}", d.as_str()),
            SynthKind::Twist => f.write_str("twist"),
            SynthKind::Tap => f.write_str("tap"),
            SynthKind::Pinch { disp } => write!(f, "pinch:{},{},{}", disp.x, disp.y, disp.z),
            SynthKind::GrabRelease => f.write_str("grab-release"),
            SynthKind::FingerPose(n) => write!(f, "finger-pose:{n}"),
            SynthKind::Idle { duration } => write!(f, "idle:{duration}"),
        }
    }
}

impl FromStr for SynthKind {
    type Err = HandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || HandError::Parse {
            line: 0,
            msg: format!("unknown gesture kind {s:?}"),
        };
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let kind = match (head, arg) {
            ("swipe-left", None) => SynthKind::Swipe(SwipeDirection::Left),
            ("swipe-right", None) => SynthKind::Swipe(SwipeDirection::Right),
            ("twist", None) => SynthKind::Twist,
            ("tap", None) => SynthKind::Tap,
            ("grab-release", None) => SynthKind::GrabRelease,
            ("pinch", None) => SynthKind::pinch(),
            ("pinch", Some(a)) => {
                let v: Vec<f64> = a
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| unknown())?;
                if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
                    return Err(unknown());
                }
                SynthKind::Pinch {
                    disp: Vec3::new(v[0], v[1], v[2]),
                }
            }
            ("finger-pose", Some(a)) => match a.parse::<u8>() {
                Ok(n @ 1..=4) => SynthKind::FingerPose(n),
                _ => return Err(unknown()),
            },
            ("idle", None) => SynthKind::Idle { duration: 3.0 },
            ("idle", Some(a)) => match a.parse::<f64>() {
                Ok(d) if d > 0.0 && d.is_finite() => SynthKind::Idle { duration: d },
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        };
        Ok(kind)
    }
}

/// Generator knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Gesture strength as a multiple of the recognizer threshold.
    pub factor: f64,
    /// Seed for sub-millimeter hover jitter; `None` gives a perfectly still hand.
    pub jitter_seed: Option<u64>,
    pub config: RecognizerConfig,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            factor: 1.5,
            jitter_seed: None,
            config: RecognizerConfig::default(),
        }
    }
}

/// Canonical trajectory with default parameters (1.5x thresholds, no jitter).
pub fn synth_gesture(kind: &SynthKind, start: f64, base_pos: Vec3) -> Result<Trajectory, HandError> {
    synth_gesture_with(kind, start, base_pos, &SynthParams::default())
}

pub fn synth_gesture_with(
    kind: &SynthKind,
    start: f64,
    base_pos: Vec3,
    params: &SynthParams,
) -> Result<Trajectory, HandError> {
    let f = params.factor;
    if !(f >= 1.0 && f.is_finite()) {
        return Err(HandError::Parse {
            line: 0,
            msg: format!("factor must be >= 1, got {f}"),
        });
    }
    if !start.is_finite() || base_pos.iter().any(|v| !v.is_finite()) {
        return Err(HandError::Parse {
            line: 0,
            msg: "non-finite start or base position".into(),
        });
    }
    let cfg = &params.config;
    let profile: Box<dyn Fn(f64) -> HandFrame> = match *kind {
        SynthKind::Swipe(dir) => {
            let disp = cfg.swipe_min_disp * f;
            let peak_speed = cfg.swipe_min_speed * f * 10.0 / 9.0;
            let dur = frames_ceil(2.0 * disp / peak_speed);
            Box::new(move |tau| {
                let u = ((tau - LEAD_IN) / dur).clamp(0.0, 1.0);
                let x = dir.sign() * disp * (-0.5 + smooth_step(u));
                HandFrame::open_palm(0.0, base_pos + Vec3::new(x, 0.0, 0.0))
            })
        }
        SynthKind::Twist => {
            let dur = frames_ceil(0.6 * cfg.twist_window / f);
            Box::new(move |tau| {
                let u = ((tau - LEAD_IN) / dur).clamp(0.0, 1.0);
                let theta = PI * (1.0 - (TAU * u).cos()) / 2.0;
                HandFrame {
                    palm_normal: Vec3::new(theta.sin(), 0.0, -theta.cos()),
                    ..HandFrame::open_palm(0.0, base_pos)
                }
            })
        }
        SynthKind::Tap => {
            let acc = cfg.tap_min_acc * f;
            let push = frames_ceil(2.0 * cfg.tap_min_speed / cfg.tap_min_acc);
            let depth = acc * push * push;
            let hold = 0.1;
            let back = 0.4;
            Box::new(move |tau| {
                let s = tau - LEAD_IN;
                let dz = if s <= 0.0 {
                    0.0
                } else if s <= push {
                    -0.5 * acc * s * s
                } else if s <= 2.0 * push {
                    let r = 2.0 * push - s;
                    -depth + 0.5 * acc * r * r
                } else if s <= 2.0 * push + hold {
                    -depth
                } else {
                    let u = ((s - 2.0 * push - hold) / back).min(1.0);
                    -depth * (1.0 + (PI * u).cos()) / 2.0
                };
                HandFrame::open_palm(0.0, base_pos + Vec3::new(0.0, 0.0, dz))
            })
        }
        SynthKind::Pinch { disp } => {
            let peak = (cfg.pinch_on * f).min(1.0);
            let ramp = 0.1;
            let hold = 0.1;
            let travel = 1.0;
            Box::new(move |tau| {
                let s = tau - LEAD_IN;
                let t_move = ramp + hold;
                let t_release = t_move + travel + hold;
                let strength = if s <= 0.0 {
                    0.0
                } else if s < ramp {
                    peak * s / ramp
                } else if s <= t_release {
                    peak
                } else {
                    (peak * (1.0 - (s - t_release) / ramp)).max(0.0)
                };
                let u = ((s - t_move) / travel).clamp(0.0, 1.0);
                HandFrame {
                    pinch_strength: strength,
                    ..HandFrame::open_palm(0.0, base_pos + disp * smooth_step(u))
                }
            })
        }
        SynthKind::GrabRelease => {
            let peak = (cfg.grab_on * f).min(1.0);
            let ramp = 0.1;
            let closed = frames_ceil(cfg.grab_release_window / (2.0 * f));
            Box::new(move |tau| {
                let s = tau - LEAD_IN;
                let strength = if s <= 0.0 {
                    0.0
                } else if s < ramp {
                    peak * s / ramp
                } else if s <= ramp + closed {
                    peak
                } else {
                    (peak * (1.0 - (s - ramp - closed) / ramp)).max(0.0)
                };
                HandFrame {
                    grab_strength: strength,
                    fingers_extended: [strength < 0.5; 5],
                    ..HandFrame::open_palm(0.0, base_pos)
                }
            })
        }
        SynthKind::FingerPose(n) => {
            if !(1..=4).contains(&n) {
                return Err(HandError::Parse {
                    line: 0,
                    msg: format!("finger pose count must be 1..=4, got {n}"),
                });
            }
            let hold = frames_ceil(cfg.pose_dwell * f);
            Box::new(move |tau| {
                let s = tau - LEAD_IN;
                let mut fingers = [true; 5];
                if s >= 0.0 && s < hold {
                    fingers = [false; 5];
                    for finger in fingers.iter_mut().skip(1).take(n as usize) {
                        *finger = true;
                    }
                }
                HandFrame {
                    fingers_extended: fingers,
                    ..HandFrame::open_palm(0.0, base_pos)
                }
            })
        }
        SynthKind::Idle { duration } => {
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(HandError::Parse {
                    line: 0,
                    msg: format!("idle duration must be positive, got {duration}"),
                });
            }
            Box::new(move |_| HandFrame::open_palm(0.0, base_pos))
        }
    };

    let active = gesture_duration(kind, params);
    let total = LEAD_IN + active + TAIL;
    let n = (total * NOMINAL_RATE_HZ).round() as usize + 1;
    let jitter = params.jitter_seed.map(Jitter::new);
    let frames = (0..n)
        .map(|i| {
            let tau = i as f64 / NOMINAL_RATE_HZ;
            let mut frame = profile(tau);
            frame.t = start + tau;
            if let Some(j) = &jitter {
                frame.palm_pos += j.at(tau);
            }
            frame
        })
        .collect();
    Trajectory::new(frames)
}

/// Length of the moving part of a generated gesture, excluding lead-in and tail.
fn gesture_duration(kind: &SynthKind, params: &SynthParams) -> f64 {
    let f = params.factor;
    let cfg = &params.config;
    match *kind {
        SynthKind::Swipe(_) => {
            let disp = cfg.swipe_min_disp * f;
            frames_ceil(2.0 * disp / (cfg.swipe_min_speed * f * 10.0 / 9.0))
        }
        SynthKind::Twist => frames_ceil(0.6 * cfg.twist_window / f),
        SynthKind::Tap => 2.0 * frames_ceil(2.0 * cfg.tap_min_speed / cfg.tap_min_acc) + 0.5,
        SynthKind::Pinch { .. } => 0.1 + 0.1 + 1.0 + 0.1 + 0.1,
        SynthKind::GrabRelease => 0.2 + frames_ceil(cfg.grab_release_window / (2.0 * f)),
        SynthKind::FingerPose(_) => frames_ceil(cfg.pose_dwell * f),
        SynthKind::Idle { duration } => duration,
    }
}

/// Rounds a duration up to a whole number of frames.
fn frames_ceil(d: f64) -> f64 {
    (d / FRAME - 1e-9).ceil().max(1.0) * FRAME
}

/// Displacement fraction of a raised-cosine velocity profile: zero velocity
/// at both ends, peak velocity twice the mean at the midpoint.
fn smooth_step(u: f64) -> f64 {
    u - (TAU * u).sin() / TAU
}

/// Slow sum-of-sines hover drift, below 1 mm per axis.
struct Jitter {
    terms: Vec<[(f64, f64, f64); 3]>,
}

impl Jitter {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..3)
            .map(|_| {
                std::array::from_fn(|_| {
                    let amp = rng.random_range(0.1e-3..0.3e-3);
                    let freq = rng.random_range(0.3..2.0);
                    let phase = rng.random_range(0.0..TAU);
                    (amp, freq, phase)
                })
            })
            .collect();
        Self { terms }
    }

    fn at(&self, t: f64) -> Vec3 {
        let mut d = Vec3::zeros();
        for term in &self.terms {
            for (axis, &(amp, freq, phase)) in term.iter().enumerate() {
                d[axis] += amp * (TAU * freq * t + phase).sin();
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::derive_kinematics;

    fn base() -> Vec3 {
        Vec3::new(0.0, 0.0, 0.2)
    }

    #[test]
    fn swipe_right_spans_fifteen_centimeters_in_point_three_seconds() {
        let traj = synth_gesture(&SynthKind::Swipe(SwipeDirection::Right), 0.0, base()).unwrap();
        let frames = traj.frames();
        let first = frames.first().unwrap().palm_pos;
        let last = frames.last().unwrap().palm_pos;
        assert!((last.x - first.x - 0.15).abs() < 1e-12);
        assert!(frames.iter().all(|f| f.palm_pos.z == 0.2));
        let moving: Vec<_> = frames
            .windows(2)
            .filter(|w| w[1].palm_pos.x != w[0].palm_pos.x)
            .collect();
        let span = moving.last().unwrap()[1].t - moving.first().unwrap()[0].t;
        assert!((span - 0.3).abs() < 1e-9, "{span}");
    }

    #[test]
    fn tap_peak_downward_acceleration() {
        let traj = synth_gesture(&SynthKind::Tap, 0.0, base()).unwrap();
        let kin = derive_kinematics(&traj).unwrap();
        let peak_down = kin.iter().map(|k| -k.acc.z).fold(f64::MIN, f64::max);
        assert!(peak_down >= 15.0 - 1e-6, "{peak_down}");
    }

    #[test]
    fn idle_jitter_below_one_millimeter() {
        let params = SynthParams {
            jitter_seed: Some(42),
            ..SynthParams::default()
        };
        let traj = synth_gesture_with(&SynthKind::Idle { duration: 5.0 }, 0.0, base(), &params).unwrap();
        for f in traj.frames() {
            let d = f.palm_pos - base();
            assert!(d.iter().all(|v| v.abs() < 1e-3));
        }
    }

    #[test]
    fn start_time_offsets_frames() {
        let traj = synth_gesture(&SynthKind::Twist, 2.2, base()).unwrap();
        assert_eq!(traj.start(), Some(2.2));
    }

    #[test]
    fn kind_names_round_trip() {
        for s in [
            "swipe-left",
            "swipe-right",
            "twist",
            "tap",
            "grab-release",
            "finger-pose:3",
            "pinch:0,0.05,-0.1",
            "idle:2",
        ] {
            let k: SynthKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("wave".parse::<SynthKind>().is_err());
        assert!("finger-pose:5".parse::<SynthKind>().is_err());
    }
}
