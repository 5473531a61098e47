//! Gesture recognition over hand-frame streams.

mod config;
mod recognizer;

pub use config::RecognizerConfig;
pub use recognizer::{Recognizer, MAX_FRAME_GAP};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::{HandFrame, SwipeDirection, Vec3, INDEX, LITTLE, THUMB};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GestureError {
    #[error("out-of-order frame: t={t} after t={prev}")]
    OutOfOrder { t: f64, prev: f64 },
    #[error("config: {0}")]
    Config(String),
}

/// Axis-aligned region above the array in which gestures are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for InteractionBox {
    /// 30 x 30 cm footprint, 40 cm tall, floor 5 cm above the array.
    fn default() -> Self {
        Self {
            min: Vec3::new(-0.15, -0.15, 0.05),
            max: Vec3::new(0.15, 0.15, 0.45),
        }
    }
}

impl InteractionBox {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn volume(&self) -> f64 {
        (self.max - self.min).iter().product()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::from_fn(|k, _| p[k].clamp(self.min[k], self.max[k]))
    }
}

/// Closed-interval containment in the default interaction box.
pub fn contains(bx: &InteractionBox, p: &Vec3) -> bool {
    bx.contains(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GestureKind {
    Swipe { direction: SwipeDirection },
    Twist,
    Tap,
    PinchEngage,
    /// Palm displacement since the pinch engaged.
    PinchMove { dx: f64, dy: f64, dz: f64 },
    PinchRelease,
    GrabRelease,
    FingerPose { count: u8 },
}

/// Debounce groups. Engage and release of one pinch share a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Swipe,
    Twist,
    Tap,
    Pinch,
    GrabRelease,
    FingerPose,
}

impl GestureKind {
    /// `None` for the continuous `PinchMove`.
    pub fn family(&self) -> Option<Family> {
        Some(match self {
            GestureKind::Swipe { .. } => Family::Swipe,
            GestureKind::Twist => Family::Twist,
            GestureKind::Tap => Family::Tap,
            GestureKind::PinchEngage | GestureKind::PinchRelease => Family::Pinch,
            GestureKind::PinchMove { .. } => return None,
            GestureKind::GrabRelease => Family::GrabRelease,
            GestureKind::FingerPose { .. } => Family::FingerPose,
        })
    }

    pub fn is_discrete(&self) -> bool {
        self.family().is_some()
    }

    /// Short label used in event logs and label files.
    pub fn label(&self) -> String {
        match self {
            GestureKind::Swipe { direction } => format!("swipe-{}", direction.as_str()),
            GestureKind::Twist => "twist".into(),
            GestureKind::Tap => "tap".into(),
            GestureKind::PinchEngage => "pinch-engage".into(),
            GestureKind::PinchMove { .. } => "pinch-move".into(),
            GestureKind::PinchRelease => "pinch-release".into(),
            GestureKind::GrabRelease => "grab-release".into(),
            GestureKind::FingerPose { count } => format!("finger-pose:{count}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: GestureKind,
    /// Palm position at trigger.
    pub pos: Vec3,
}

impl fmt::Display for GestureEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.t, self.kind.label())?;
        if let GestureKind::PinchMove { dx, dy, dz } = self.kind {
            write!(f, " {dx} {dy} {dz}")?;
        }
        write!(f, " {} {} {}", self.pos.x, self.pos.y, self.pos.z)
    }
}

/// Number of extended non-thumb fingers, or `None` when the thumb is
/// extended or no finger is shown.
pub fn classify_finger_count(frame: &HandFrame) -> Option<u8> {
    if !frame.hand_present || frame.fingers_extended[THUMB] {
        return None;
    }
    let n = frame.fingers_extended[INDEX..=LITTLE]
        .iter()
        .filter(|&&e| e)
        .count() as u8;
    (n > 0).then_some(n)
}

/// Radial menu slots, West/North/South/East from the pinch origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RadialDirection {
    W,
    N,
    S,
    E,
}

impl RadialDirection {
    pub const ALL: [RadialDirection; 4] = [
        RadialDirection::W,
        RadialDirection::N,
        RadialDirection::S,
        RadialDirection::E,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RadialDirection::W => "W",
            RadialDirection::N => "N",
            RadialDirection::S => "S",
            RadialDirection::E => "E",
        }
    }
}

/// Horizontal magnitude of a pinch displacement.
pub fn horizontal(disp: &Vec3) -> f64 {
    disp.x.hypot(disp.y)
}

/// Dominant horizontal axis of `disp`, or `None` inside the deadzone.
/// Ties go to the lateral axis.
pub fn radial_direction(disp: &Vec3, deadzone: f64) -> Option<RadialDirection> {
    if horizontal(disp) < deadzone {
        return None;
    }
    Some(if disp.x.abs() >= disp.y.abs() {
        if disp.x < 0.0 {
            RadialDirection::W
        } else {
            RadialDirection::E
        }
    } else if disp.y > 0.0 {
        RadialDirection::N
    } else {
        RadialDirection::S
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_contains() {
        let bx = InteractionBox::default();
        assert!(contains(&bx, &Vec3::new(0.0, 0.0, 0.25)));
        assert!(!contains(&bx, &Vec3::new(0.0, 0.0, 0.04)));
        assert!(!contains(&bx, &Vec3::new(0.16, 0.0, 0.25)));
        assert!(contains(&bx, &Vec3::new(0.15, -0.15, 0.05)));
        assert!(contains(&bx, &Vec3::new(-0.15, 0.15, 0.45)));
    }

    #[test]
    fn box_volume() {
        assert!((InteractionBox::default().volume() - 0.036).abs() < 1e-12);
    }

    fn with_fingers(f: [bool; 5]) -> HandFrame {
        HandFrame {
            fingers_extended: f,
            ..HandFrame::open_palm(0.0, Vec3::new(0.0, 0.0, 0.2))
        }
    }

    #[test]
    fn finger_counts() {
        assert_eq!(classify_finger_count(&with_fingers([false, true, false, false, false])), Some(1));
        assert_eq!(classify_finger_count(&with_fingers([false, true, true, true, true])), Some(4));
        assert_eq!(classify_finger_count(&with_fingers([true; 5])), None);
        assert_eq!(classify_finger_count(&with_fingers([false; 5])), None);
        assert_eq!(classify_finger_count(&HandFrame::absent(0.0)), None);
    }

    #[test]
    fn radial_directions() {
        let dz = 0.04;
        assert_eq!(radial_direction(&Vec3::new(-0.10, 0.0, 0.0), dz), Some(RadialDirection::W));
        assert_eq!(radial_direction(&Vec3::new(0.03, 0.02, 0.0), dz), None);
        assert_eq!(radial_direction(&Vec3::new(0.06, 0.10, 0.0), dz), Some(RadialDirection::N));
        assert_eq!(radial_direction(&Vec3::new(0.0, -0.05, 0.3), dz), Some(RadialDirection::S));
        assert_eq!(radial_direction(&Vec3::new(0.09, 0.0, 0.0), dz), Some(RadialDirection::E));
    }

    #[test]
    fn event_serializes_with_kind_tag() {
        let ev = GestureEvent {
            t: 1.5,
            kind: GestureKind::Swipe {
                direction: SwipeDirection::Right,
            },
            pos: Vec3::new(0.0, 0.0, 0.2),
        };
        let json = serde_json::to_string(&ev).unwrap();
        assert_eq!(json, r#"{"t":1.5,"kind":"swipe","direction":"right","pos":[0.0,0.0,0.2]}"#);
        let back: GestureEvent = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ev);
    }
}
