//! Hand-tracking frames, trajectories, kinematics and synthetic gestures.
//!
//! Coordinates are meters in the array frame: origin at the center of the
//! transducer surface, `x` lateral-right, `y` depth-forward, `z` vertical-up.

mod format;
mod kinematics;
mod synth;

pub use format::{parse_trajectory, write_trajectory};
pub use kinematics::{derive_kinematics, KinematicTrack, Kinematics, KinematicsStream};
pub use synth::{synth_gesture, synth_gesture_with, SynthKind, SynthParams, SwipeDirection};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Default tracking rate of the hand sensor.
pub const NOMINAL_RATE_HZ: f64 = 100.0;

/// Finger order used by [`HandFrame::fingers_extended`].
pub const THUMB: usize = 0;
pub const INDEX: usize = 1;
pub const MIDDLE: usize = 2;
pub const RING: usize = 3;
pub const LITTLE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HandError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: non-monotone timestamp {t} after {prev}")]
    NonMonotone { line: usize, t: f64, prev: f64 },
    #[error("line {line}: {field} out of range: {value}")]
    Range {
        line: usize,
        field: &'static str,
        value: f64,
    },
    #[error("frame {index}: {msg}")]
    Invalid { index: usize, msg: String },
    #[error("empty trajectory")]
    Empty,
    #[error("nominal rate must be positive, got {0}")]
    Rate(f64),
}

/// One sample of tracked-hand state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandFrame {
    pub t: f64,
    pub hand_present: bool,
    pub palm_pos: Vec3,
    pub palm_normal: Vec3,
    pub pinch_strength: f64,
    pub grab_strength: f64,
    /// Thumb, index, middle, ring, little.
    pub fingers_extended: [bool; 5],
    pub confidence: f64,
}

impl HandFrame {
    /// An open, relaxed hand with the palm facing down toward the array.
    pub fn open_palm(t: f64, palm_pos: Vec3) -> Self {
        Self {
            t,
            hand_present: true,
            palm_pos,
            palm_normal: Vec3::new(0.0, 0.0, -1.0),
            pinch_strength: 0.0,
            grab_strength: 0.0,
            fingers_extended: [true; 5],
            confidence: 1.0,
        }
    }

    pub fn absent(t: f64) -> Self {
        Self {
            hand_present: false,
            confidence: 0.0,
            ..Self::open_palm(t, Vec3::zeros())
        }
    }

    /// Checks the frame invariants. `Err` carries the offending field.
    pub fn check(&self) -> Result<(), (&'static str, f64)> {
        let scalars = [
            ("t", self.t),
            ("px", self.palm_pos.x),
            ("py", self.palm_pos.y),
            ("pz", self.palm_pos.z),
            ("nx", self.palm_normal.x),
            ("ny", self.palm_normal.y),
            ("nz", self.palm_normal.z),
            ("pinch", self.pinch_strength),
            ("grab", self.grab_strength),
            ("conf", self.confidence),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err((name, v));
            }
        }
        for (name, v) in [
            ("pinch", self.pinch_strength),
            ("grab", self.grab_strength),
            ("conf", self.confidence),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err((name, v));
            }
        }
        if self.hand_present {
            let n = self.palm_normal.norm();
            if (n - 1.0).abs() > 1e-6 {
                return Err(("palm_normal norm", n));
            }
        }
        Ok(())
    }
}

/// Time-ordered sequence of hand frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<HandFrame>,
    nominal_rate: f64,
}

impl Trajectory {
    pub fn new(frames: Vec<HandFrame>) -> Result<Self, HandError> {
        Self::with_rate(frames, NOMINAL_RATE_HZ)
    }

    pub fn with_rate(frames: Vec<HandFrame>, nominal_rate: f64) -> Result<Self, HandError> {
        if !(nominal_rate > 0.0 && nominal_rate.is_finite()) {
            return Err(HandError::Rate(nominal_rate));
        }
        for (index, f) in frames.iter().enumerate() {
            f.check().map_err(|(field, value)| HandError::Invalid {
                index,
                msg: format!("{field} invalid: {value}"),
            })?;
        }
        for (index, w) in frames.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(HandError::Invalid {
                    index: index + 1,
                    msg: format!("non-monotone timestamp {} after {}", w[1].t, w[0].t),
                });
            }
        }
        Ok(Self {
            frames,
            nominal_rate,
        })
    }

    pub fn frames(&self) -> &[HandFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<HandFrame> {
        self.frames
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn start(&self) -> Option<f64> {
        self.frames.first().map(|f| f.t)
    }

    pub fn end(&self) -> Option<f64> {
        self.frames.last().map(|f| f.t)
    }

    /// Shifts every timestamp by `dt` seconds.
    pub fn shifted(&self, dt: f64) -> Self {
        let frames = self
            .frames
            .iter()
            .map(|f| HandFrame { t: f.t + dt, ..*f })
            .collect();
        Self {
            frames,
            nominal_rate: self.nominal_rate,
        }
    }

    /// Rigidly translates the palm path.
    pub fn translated(&self, d: Vec3) -> Self {
        let frames = self
            .frames
            .iter()
            .map(|f| HandFrame {
                palm_pos: f.palm_pos + d,
                ..*f
            })
            .collect();
        Self {
            frames,
            nominal_rate: self.nominal_rate,
        }
    }

    /// Appends `other`, which must start strictly after this trajectory ends.
    pub fn concat(mut self, other: &Trajectory) -> Result<Self, HandError> {
        if let (Some(end), Some(start)) = (self.end(), other.start()) {
            if start <= end {
                return Err(HandError::Invalid {
                    index: self.frames.len(),
                    msg: format!("non-monotone timestamp {start} after {end}"),
                });
            }
        }
        self.frames.extend_from_slice(&other.frames);
        Ok(self)
    }
}
