use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::GestureError;

/// Recognizer thresholds. Distances in meters, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizerConfig {
    pub swipe_min_disp: f64,
    pub swipe_min_speed: f64,
    pub swipe_window: f64,
    /// Downward acceleration, m/s².
    pub tap_min_acc: f64,
    /// Downward speed, m/s.
    pub tap_min_speed: f64,
    pub twist_window: f64,
    /// Threshold on `palm_normal · z` for the palm-down and palm-up poses.
    pub twist_normal_thresh: f64,
    pub pinch_on: f64,
    pub pinch_off: f64,
    pub grab_on: f64,
    pub grab_off: f64,
    pub grab_release_window: f64,
    pub pose_dwell: f64,
    pub radial_threshold: f64,
    pub radial_deadzone: f64,
    /// Refractory period during which other discrete kinds are suppressed.
    pub debounce: f64,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        Self {
            swipe_min_disp: 0.10,
            swipe_min_speed: 0.6,
            swipe_window: 0.5,
            tap_min_acc: 10.0,
            tap_min_speed: 0.3,
            twist_window: 1.5,
            twist_normal_thresh: 0.7,
            pinch_on: 0.8,
            pinch_off: 0.5,
            grab_on: 0.9,
            grab_off: 0.3,
            grab_release_window: 1.0,
            pose_dwell: 0.5,
            radial_threshold: 0.08,
            radial_deadzone: 0.04,
            debounce: 2.0,
        }
    }
}

macro_rules! config_fields {
    ($mac:ident) => {
        $mac!(
            swipe_min_disp,
            swipe_min_speed,
            swipe_window,
            tap_min_acc,
            tap_min_speed,
            twist_window,
            twist_normal_thresh,
            pinch_on,
            pinch_off,
            grab_on,
            grab_off,
            grab_release_window,
            pose_dwell,
            radial_threshold,
            radial_deadzone,
            debounce
        )
    };
}

impl RecognizerConfig {
    pub fn validate(&self) -> Result<(), GestureError> {
        macro_rules! positive {
            ($($f:ident),*) => {
                $(
                    if !(self.$f > 0.0 && self.$f.is_finite()) {
                        return Err(GestureError::Config(format!(
                            "{} must be positive, got {}", stringify!($f), self.$f
                        )));
                    }
                )*
            };
        }
        config_fields!(positive);
        if self.pinch_off >= self.pinch_on {
            return Err(GestureError::Config("pinch_off must be below pinch_on".into()));
        }
        if self.grab_off >= self.grab_on {
            return Err(GestureError::Config("grab_off must be below grab_on".into()));
        }
        if self.radial_deadzone > self.radial_threshold {
            return Err(GestureError::Config(
                "radial_deadzone must not exceed radial_threshold".into(),
            ));
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. Unset keys keep their defaults;
    /// `#` starts a comment line.
    pub fn from_kv(text: &str) -> Result<Self, GestureError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                GestureError::Config(format!("line {}: expected key=value", i + 1))
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                GestureError::Config(format!("line {}: {key}: not a number", i + 1))
            })?;
            macro_rules! assign {
                ($($f:ident),*) => {
                    match key {
                        $(stringify!($f) => cfg.$f = value,)*
                        _ => return Err(GestureError::Config(format!(
                            "line {}: unknown key {key:?}", i + 1
                        ))),
                    }
                };
            }
            config_fields!(assign);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        macro_rules! emit {
            ($($f:ident),*) => {
                $( let _ = writeln!(out, "{} = {}", stringify!($f), self.$f); )*
            };
        }
        config_fields!(emit);
        out
    }
}
