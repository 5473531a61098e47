//! Haptic sensations rendered as focal-point paths.
//!
//! Every sensation is a single focus moving along a path. Circle-family
//! paths are traced at [`CIRCLE_RATE_HZ`] in the palm plane; scan lines are
//! swept across the palm while the focus oscillates along the line.

use std::f64::consts::TAU;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::{HandFrame, SwipeDirection, Vec3};

/// Circle path repetition rate.
pub const CIRCLE_RATE_HZ: f64 = 70.0;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 4000.0;
pub const MIN_SAMPLE_RATE_HZ: f64 = 1000.0;

pub const TAP_RADIUS: f64 = 0.02;
pub const TAP_DURATION: f64 = 0.5;
pub const DOUBLE_TAP_ON: f64 = 0.3;
pub const DOUBLE_TAP_GAP: f64 = 0.1;
pub const OPEN_CLOSE_DURATION: f64 = 0.7;
pub const SMALL_RADIUS: f64 = 0.01;
pub const LARGE_RADIUS: f64 = 0.03;
pub const SCAN_DURATION: f64 = 0.4;
pub const SCAN_LINE_LENGTH: f64 = 0.08;
/// Distance the scan line travels across the palm.
pub const SCAN_SWEEP: f64 = 0.08;
/// Finger bases sit this far forward of the palm center.
pub const FINGER_BASE_OFFSET: f64 = 0.05;
pub const FINGER_SPAN: f64 = 0.06;
pub const FINGER_LINE_LENGTH: f64 = 0.03;
pub const ANCHOR_POS: Vec3 = Vec3::new(0.0, 0.0, 0.20);
pub const ANCHOR_INTENSITY: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HapticError {
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("sample rate {0} Hz below the 1000 Hz minimum")]
    SampleRate(f64),
    #[error("level {0} outside [0, 1]")]
    Level(f64),
    #[error("unknown sensation {0:?}")]
    Unknown(String),
    #[error("{0} is continuous and needs an explicit length")]
    Unbounded(String),
    #[error("unknown envelope mode {0:?}")]
    Envelope(String),
    #[error("malformed timeline line {0:?}")]
    Timeline(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sensation {
    CircleTap,
    DoubleTap,
    ScanLine { direction: SwipeDirection },
    FingerScan,
    OpenCircle,
    CloseCircle,
    ValueCircle { level: f64 },
    AnchorCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    Hand,
    World,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvelopeMode {
    /// Carrier switched on and off at 200 Hz.
    #[serde(rename = "AM-200Hz")]
    Am200,
    /// Constant drive; the moving focus itself is felt.
    #[serde(rename = "STM")]
    Stm,
}

impl EnvelopeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeMode::Am200 => "AM-200Hz",
            EnvelopeMode::Stm => "STM",
        }
    }
}

impl FromStr for EnvelopeMode {
    type Err = HapticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "am" | "am-200hz" => Ok(EnvelopeMode::Am200),
            "stm" => Ok(EnvelopeMode::Stm),
            _ => Err(HapticError::Envelope(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalSample {
    pub t: f64,
    pub pos: Vec3,
    pub intensity: f64,
    pub envelope_mode: EnvelopeMode,
}

impl Sensation {
    pub fn anchor(&self) -> Anchor {
        match self {
            Sensation::AnchorCircle => Anchor::World,
            _ => Anchor::Hand,
        }
    }

    /// `None` for continuous sensations.
    pub fn duration(&self) -> Option<f64> {
        match self {
            Sensation::CircleTap => Some(TAP_DURATION),
            Sensation::DoubleTap => Some(2.0 * DOUBLE_TAP_ON + DOUBLE_TAP_GAP),
            Sensation::OpenCircle | Sensation::CloseCircle => Some(OPEN_CLOSE_DURATION),
            Sensation::ScanLine { .. } | Sensation::FingerScan => Some(SCAN_DURATION),
            Sensation::ValueCircle { .. } | Sensation::AnchorCircle => None,
        }
    }

    pub fn envelope_mode(&self) -> EnvelopeMode {
        EnvelopeMode::Stm
    }

    /// Whether the focus is emitting at `t` seconds after the trigger.
    pub fn is_active(&self, t: f64) -> bool {
        if t < 0.0 {
            return false;
        }
        if let Some(d) = self.duration() {
            if t > d {
                return false;
            }
        }
        match self {
            Sensation::DoubleTap => !(t > DOUBLE_TAP_ON && t < DOUBLE_TAP_ON + DOUBLE_TAP_GAP),
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Sensation::CircleTap => "circle-tap".into(),
            Sensation::DoubleTap => "double-tap".into(),
            Sensation::ScanLine { direction } => format!("scan-{}", direction.as_str()),
            Sensation::FingerScan => "finger-scan".into(),
            Sensation::OpenCircle => "open".into(),
            Sensation::CloseCircle => "close".into(),
            Sensation::ValueCircle { level } => format!("value:{level}"),
            Sensation::AnchorCircle => "anchor".into(),
        }
    }
}

impl fmt::Display for Sensation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Sensation {
    type Err = HapticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || HapticError::Unknown(s.into());
        Ok(match s {
            "circle-tap" => Sensation::CircleTap,
            "double-tap" => Sensation::DoubleTap,
            "scan-left" => Sensation::ScanLine {
                direction: SwipeDirection::Left,
            },
            "scan-right" => Sensation::ScanLine {
                direction: SwipeDirection::Right,
            },
            "finger-scan" => Sensation::FingerScan,
            "open" => Sensation::OpenCircle,
            "close" => Sensation::CloseCircle,
            "anchor" => Sensation::AnchorCircle,
            other => {
                let level = other
                    .strip_prefix("value:")
                    .ok_or_else(unknown)?
                    .parse::<f64>()
                    .map_err(|_| unknown())?;
                if !(0.0..=1.0).contains(&level) {
                    return Err(HapticError::Level(level));
                }
                Sensation::ValueCircle { level }
            }
        })
    }
}

/// Radius and intensity of the value-coupled circle.
pub fn value_circle_params(level: f64) -> Result<(f64, f64), HapticError> {
    if !(0.0..=1.0).contains(&level) {
        return Err(HapticError::Level(level));
    }
    Ok((SMALL_RADIUS + 0.02 * level, 0.3 + 0.7 * level))
}

/// Orthonormal basis `(u, v)` of the palm plane.
///
/// `u` is world `x` projected onto the plane (world `y` if the palm faces
/// sideways along `x`); `v = u × n`, so a palm facing straight down gets
/// `u = +x`, `v = +y`.
pub fn palm_basis(normal: &Vec3) -> (Vec3, Vec3) {
    let n = if normal.norm() < 1e-9 {
        -Vec3::z()
    } else {
        normal.normalize()
    };
    let mut u = Vec3::x() - n * n.x;
    if u.norm() < 1e-6 {
        u = Vec3::y() - n * n.y;
    }
    let u = u.normalize();
    let v = u.cross(&n);
    (u, v)
}

/// Focal point of sensation `s` at `t` seconds after its trigger, or `None`
/// outside its active windows.
pub fn sample_focus(
    s: &Sensation,
    t: f64,
    hand: &HandFrame,
    sample_rate: f64,
) -> Result<Option<FocalSample>, HapticError> {
    if t < 0.0 || t.is_nan() {
        return Err(HapticError::NegativeTime(t));
    }
    if sample_rate.is_nan() || sample_rate < MIN_SAMPLE_RATE_HZ {
        return Err(HapticError::SampleRate(sample_rate));
    }
    if !s.is_active(t) {
        return Ok(None);
    }
    let (center, u, v) = match s.anchor() {
        Anchor::World => (ANCHOR_POS, Vec3::x(), Vec3::y()),
        Anchor::Hand => {
            let (u, v) = palm_basis(&hand.palm_normal);
            (hand.palm_pos, u, v)
        }
    };
    let theta = TAU * CIRCLE_RATE_HZ * t;
    let circle = |r: f64| center + (u * theta.cos() + v * theta.sin()) * r;
    let (pos, intensity) = match *s {
        Sensation::CircleTap | Sensation::DoubleTap => (circle(TAP_RADIUS), 1.0),
        Sensation::OpenCircle => (circle(open_radius(t)), 1.0),
        Sensation::CloseCircle => (circle(close_radius(t)), 1.0),
        Sensation::ValueCircle { level } => {
            let (r, i) = value_circle_params(level)?;
            (circle(r), i)
        }
        Sensation::AnchorCircle => (circle(TAP_RADIUS), ANCHOR_INTENSITY),
        Sensation::ScanLine { direction } => {
            let progress = t / SCAN_DURATION;
            let across = direction.sign() * SCAN_SWEEP * (progress - 0.5);
            let along = 0.5 * SCAN_LINE_LENGTH * theta.sin();
            (center + u * across + v * along, 1.0)
        }
        Sensation::FingerScan => {
            let progress = t / SCAN_DURATION;
            let across = FINGER_SPAN * (progress - 0.5);
            let along = FINGER_BASE_OFFSET + 0.5 * FINGER_LINE_LENGTH * theta.sin();
            (center + u * across + v * along, 1.0)
        }
    };
    Ok(Some(FocalSample {
        t,
        pos,
        intensity,
        envelope_mode: s.envelope_mode(),
    }))
}

pub fn open_radius(t: f64) -> f64 {
    SMALL_RADIUS + (LARGE_RADIUS - SMALL_RADIUS) / OPEN_CLOSE_DURATION * t
}

pub fn close_radius(t: f64) -> f64 {
    LARGE_RADIUS - (LARGE_RADIUS - SMALL_RADIUS) / OPEN_CLOSE_DURATION * t
}

/// Samples a sensation on a uniform grid `k / sample_rate` for
/// `t ∈ [0, length]`, skipping inactive instants. `length` defaults to the
/// sensation duration and is required for continuous sensations.
pub fn timeline(
    s: &Sensation,
    hand: &HandFrame,
    sample_rate: f64,
    length: Option<f64>,
    mode: Option<EnvelopeMode>,
) -> Result<Vec<FocalSample>, HapticError> {
    let length = match (length, s.duration()) {
        (Some(l), _) => l,
        (None, Some(d)) => d,
        (None, None) => return Err(HapticError::Unbounded(s.to_string())),
    };
    let n = (length * sample_rate + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / sample_rate;
        if let Some(mut sample) = sample_focus(s, t, hand, sample_rate)? {
            if let Some(m) = mode {
                sample.envelope_mode = m;
            }
            out.push(sample);
        }
    }
    Ok(out)
}

/// Line-delimited `t x y z intensity mode`.
pub fn write_timeline(samples: &[FocalSample]) -> String {
    let mut out = String::from("# t x y z intensity mode\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            s.t,
            s.pos.x,
            s.pos.y,
            s.pos.z,
            s.intensity,
            s.envelope_mode.as_str()
        );
    }
    out
}

pub fn parse_timeline(text: &str) -> Result<Vec<FocalSample>, HapticError> {
    let mut out = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 6 {
            return Err(HapticError::Timeline(line.into()));
        }
        let num = |i: usize| tok[i].parse::<f64>().map_err(|_| HapticError::Timeline(line.into()));
        out.push(FocalSample {
            t: num(0)?,
            pos: Vec3::new(num(1)?, num(2)?, num(3)?),
            intensity: num(4)?,
            envelope_mode: tok[5].parse()?,
        });
    }
    Ok(out)
}
