use std::collections::VecDeque;

use super::{
    classify_finger_count, Family, GestureError, GestureEvent, GestureKind, InteractionBox,
    RecognizerConfig,
};
use crate::hand::{HandFrame, Kinematics, SwipeDirection, Vec3};

/// Frames further apart than this are treated as a tracking dropout.
/// Longer frame gaps count as a tracking dropout.
pub const MAX_FRAME_GAP: f64 = 0.1;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum TwistPhase {
    Neutral,
    /// Palm down; `last` is the latest time the down pose was seen.
    Down { last: f64 },
    /// Flipped palm up after leaving the down pose at `left`.
    Up { left: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum GrabPhase {
    Open,
    Closed { since: f64 },
    /// Held closed past the window; waits for the hand to open.
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PoseTrack {
    count: Option<u8>,
    since: f64,
    fired: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pinch {
    origin: Vec3,
    last_inside: Vec3,
}

/// Stateful fold from hand frames to gesture events.
///
/// Discrete events fire only with the palm inside the interaction box, and
/// after a discrete event every other discrete family is suppressed for
/// `debounce` seconds. Suppressed gestures are consumed, not deferred.
#[derive(Debug, Clone)]
pub struct Recognizer {
    cfg: RecognizerConfig,
    bx: InteractionBox,
    last_t: Option<f64>,
    last_discrete: Option<(f64, Family)>,
    swipe: VecDeque<(f64, f64, f64)>,
    tap_armed: bool,
    twist: TwistPhase,
    grab: GrabPhase,
    pose: PoseTrack,
    pinch: Option<Pinch>,
    /// Pinch strength must fall below `pinch_off` before a new engage.
    pinch_latched: bool,
}

impl Recognizer {
    pub fn new(cfg: RecognizerConfig) -> Self {
        Self::with_box(cfg, InteractionBox::default())
    }

    pub fn with_box(cfg: RecognizerConfig, bx: InteractionBox) -> Self {
        Self {
            cfg,
            bx,
            last_t: None,
            last_discrete: None,
            swipe: VecDeque::new(),
            tap_armed: false,
            twist: TwistPhase::Neutral,
            grab: GrabPhase::Open,
            pose: PoseTrack {
                count: None,
                since: 0.0,
                fired: false,
            },
            pinch: None,
            pinch_latched: false,
        }
    }

    pub fn config(&self) -> &RecognizerConfig {
        &self.cfg
    }

    pub fn interaction_box(&self) -> &InteractionBox {
        &self.bx
    }

    pub fn pinch_engaged(&self) -> bool {
        self.pinch.is_some()
    }

    /// Consumes one frame and its kinematics.
    pub fn step(&mut self, frame: &HandFrame, kin: &Kinematics) -> Result<Vec<GestureEvent>, GestureError> {
        let t = frame.t;
        if let Some(prev) = self.last_t {
            if t <= prev {
                return Err(GestureError::OutOfOrder { t, prev });
            }
        }
        let dropout = self.last_t.is_some_and(|prev| t - prev > MAX_FRAME_GAP);
        self.last_t = Some(t);

        let mut out = Vec::new();
        if dropout || !frame.hand_present {
            if let Some(p) = self.pinch.take() {
                out.push(self.release_pinch(t, p.last_inside));
            }
            self.reset_transient();
            if !frame.hand_present {
                return Ok(out);
            }
        }

        let pos = frame.palm_pos;
        let inside = self.bx.contains(&pos);

        if let Some(mut p) = self.pinch {
            if frame.pinch_strength < self.cfg.pinch_off || !inside {
                self.pinch = None;
                self.pinch_latched = frame.pinch_strength >= self.cfg.pinch_off;
                out.push(self.release_pinch(t, if inside { pos } else { p.last_inside }));
            } else {
                p.last_inside = pos;
                self.pinch = Some(p);
                let d = pos - p.origin;
                out.push(GestureEvent {
                    t,
                    kind: GestureKind::PinchMove {
                        dx: d.x,
                        dy: d.y,
                        dz: d.z,
                    },
                    pos,
                });
                return Ok(out);
            }
        } else if self.pinch_latched {
            if frame.pinch_strength < self.cfg.pinch_off {
                self.pinch_latched = false;
            }
        } else if frame.pinch_strength >= self.cfg.pinch_on {
            self.pinch_latched = true;
            if inside && frame.grab_strength < self.cfg.grab_on && self.admit(t, Family::Pinch) {
                self.pinch = Some(Pinch {
                    origin: pos,
                    last_inside: pos,
                });
                self.reset_transient();
                out.push(GestureEvent {
                    t,
                    kind: GestureKind::PinchEngage,
                    pos,
                });
                return Ok(out);
            }
        }

        let mut candidates: Vec<GestureKind> = Vec::new();
        if let Some(k) = self.detect_grab(frame) {
            candidates.push(k);
        }
        if let Some(k) = self.detect_tap(kin) {
            candidates.push(k);
        }
        if let Some(k) = self.detect_twist(frame) {
            candidates.push(k);
        }
        if let Some(k) = self.detect_swipe(frame, kin) {
            candidates.push(k);
        }
        if let Some(k) = self.detect_pose(frame) {
            candidates.push(k);
        }
        for kind in candidates {
            let family = kind.family().expect("candidates are discrete");
            if inside && self.admit(t, family) {
                out.push(GestureEvent { t, kind, pos });
            }
        }
        Ok(out)
    }

    /// Debounce gate. Records the event when admitted.
    fn admit(&mut self, t: f64, family: Family) -> bool {
        if let Some((last, fam)) = self.last_discrete {
            if fam != family && t - last < self.cfg.debounce {
                return false;
            }
        }
        self.last_discrete = Some((t, family));
        true
    }

    fn release_pinch(&mut self, t: f64, pos: Vec3) -> GestureEvent {
        // A release always closes its engage, even inside another family's
        // debounce window.
        self.last_discrete = Some((t, Family::Pinch));
        GestureEvent {
            t,
            kind: GestureKind::PinchRelease,
            pos,
        }
    }

    fn reset_transient(&mut self) {
        self.swipe.clear();
        self.tap_armed = false;
        self.twist = TwistPhase::Neutral;
        self.grab = GrabPhase::Open;
        self.pose = PoseTrack {
            count: None,
            since: 0.0,
            fired: false,
        };
    }

    fn detect_swipe(&mut self, frame: &HandFrame, kin: &Kinematics) -> Option<GestureKind> {
        let t = frame.t;
        self.swipe.push_back((t, frame.palm_pos.x, kin.vel.x));
        while let Some(&(t0, _, _)) = self.swipe.front() {
            if t - t0 > self.cfg.swipe_window + EPS {
                self.swipe.pop_front();
            } else {
                break;
            }
        }
        let x = frame.palm_pos.x;
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut peak_right, mut peak_left) = (0.0f64, 0.0f64);
        for &(_, xi, vi) in &self.swipe {
            min_x = min_x.min(xi);
            max_x = max_x.max(xi);
            peak_right = peak_right.max(vi);
            peak_left = peak_left.max(-vi);
        }
        let direction = if x - min_x >= self.cfg.swipe_min_disp && peak_right >= self.cfg.swipe_min_speed {
            SwipeDirection::Right
        } else if max_x - x >= self.cfg.swipe_min_disp && peak_left >= self.cfg.swipe_min_speed {
            SwipeDirection::Left
        } else {
            return None;
        };
        self.swipe.clear();
        Some(GestureKind::Swipe { direction })
    }

    fn detect_tap(&mut self, kin: &Kinematics) -> Option<GestureKind> {
        let down_speed = -kin.vel.z;
        let down_acc = -kin.acc.z;
        if !self.tap_armed {
            if down_speed < self.cfg.tap_min_speed / 2.0 {
                self.tap_armed = true;
            }
            return None;
        }
        if down_acc >= self.cfg.tap_min_acc && down_speed >= self.cfg.tap_min_speed {
            self.tap_armed = false;
            return Some(GestureKind::Tap);
        }
        None
    }

    fn detect_twist(&mut self, frame: &HandFrame) -> Option<GestureKind> {
        let t = frame.t;
        let nz = frame.palm_normal.z;
        let thr = self.cfg.twist_normal_thresh;
        let mut fired = None;
        self.twist = match self.twist {
            TwistPhase::Up { left } if t - left > self.cfg.twist_window + EPS => {
                if nz < -thr {
                    TwistPhase::Down { last: t }
                } else {
                    TwistPhase::Neutral
                }
            }
            TwistPhase::Up { .. } if nz < -thr => {
                fired = Some(GestureKind::Twist);
                TwistPhase::Down { last: t }
            }
            TwistPhase::Down { last } if nz > thr => TwistPhase::Up { left: last },
            _ if nz < -thr => TwistPhase::Down { last: t },
            other => other,
        };
        fired
    }

    fn detect_grab(&mut self, frame: &HandFrame) -> Option<GestureKind> {
        let t = frame.t;
        let g = frame.grab_strength;
        let mut fired = None;
        self.grab = match self.grab {
            GrabPhase::Open if g >= self.cfg.grab_on => GrabPhase::Closed { since: t },
            GrabPhase::Closed { since } if g < self.cfg.grab_off => {
                if t - since <= self.cfg.grab_release_window + EPS {
                    fired = Some(GestureKind::GrabRelease);
                }
                GrabPhase::Open
            }
            GrabPhase::Closed { since } if t - since > self.cfg.grab_release_window + EPS => {
                GrabPhase::Expired
            }
            GrabPhase::Expired if g < self.cfg.grab_off => GrabPhase::Open,
            other => other,
        };
        fired
    }

    fn detect_pose(&mut self, frame: &HandFrame) -> Option<GestureKind> {
        let t = frame.t;
        let count = if frame.pinch_strength >= self.cfg.pinch_off || frame.grab_strength >= self.cfg.grab_off {
            None
        } else {
            classify_finger_count(frame)
        };
        if count != self.pose.count {
            self.pose = PoseTrack {
                count,
                since: t,
                fired: false,
            };
        }
        match self.pose.count {
            Some(n) if !self.pose.fired && t - self.pose.since >= self.cfg.pose_dwell - EPS => {
                self.pose.fired = true;
                Some(GestureKind::FingerPose { count: n })
            }
            _ => None,
        }
    }
}
