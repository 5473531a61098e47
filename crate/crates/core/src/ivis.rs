//! Infotainment state machine.
//!
//! Four flat modes (no submenus), two interchangeable navigation methods, and
//! call/route modals that take priority over every mode control. Transitions
//! are pure: `(state, input) -> (state', effects)`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gesture::{horizontal, radial_direction, GestureKind, RadialDirection, RecognizerConfig};
use crate::hand::{SwipeDirection, Vec3};
use crate::haptics::Sensation;

pub const TEMP_MIN: f64 = 16.0;
pub const TEMP_MAX: f64 = 26.0;
pub const TEMP_STEP: f64 = 0.5;
pub const VOLUME_MAX: u8 = 100;
pub const FAN_MIN: u8 = 1;
pub const FAN_MAX: u8 = 5;
pub const ZOOM_MIN: u8 = 1;
pub const ZOOM_MAX: u8 = 10;

/// Value change per meter of vertical pinch travel.
pub const VOLUME_GAIN: f64 = 400.0;
pub const TEMP_GAIN: f64 = 50.0;
pub const LEVEL_GAIN: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IvisError {
    #[error("non-finite displacement {0}")]
    NonFinite(f64),
    #[error("unknown {what} {name:?}")]
    Unknown { what: &'static str, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Media,
    Temperature,
    Fan,
    Navigation,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Media, Mode::Temperature, Mode::Fan, Mode::Navigation];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Media => "Media",
            Mode::Temperature => "Temperature",
            Mode::Fan => "Fan",
            Mode::Navigation => "Navigation",
        }
    }

    /// Finger-count selection: 1 Media, 2 Temperature, 3 Fan, 4 Navigation.
    pub fn from_finger_count(n: u8) -> Option<Mode> {
        Mode::ALL.get((n as usize).checked_sub(1)?).copied()
    }

    /// Radial menu slot: Media West, Temperature North, Fan South,
    /// Navigation East.
    pub fn from_radial(d: RadialDirection) -> Mode {
        match d {
            RadialDirection::W => Mode::Media,
            RadialDirection::N => Mode::Temperature,
            RadialDirection::S => Mode::Fan,
            RadialDirection::E => Mode::Navigation,
        }
    }

    fn region(self) -> Region {
        match self {
            Mode::Media => Region::Media,
            Mode::Temperature => Region::Temperature,
            Mode::Fan => Region::Fan,
            Mode::Navigation => Region::Navigation,
        }
    }

    fn speech(self) -> Speech {
        match self {
            Mode::Media => Speech::Media,
            Mode::Temperature => Speech::Temperature,
            Mode::Fan => Speech::Fan,
            Mode::Navigation => Speech::Navigation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NavMethod {
    FingerPose,
    Radial3D,
}

impl NavMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            NavMethod::FingerPose => "FingerPose",
            NavMethod::Radial3D => "Radial3D",
        }
    }
}

impl FromStr for NavMethod {
    type Err = IvisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "finger" | "fingerpose" | "finger-pose" => Ok(NavMethod::FingerPose),
            "radial" | "radial3d" => Ok(NavMethod::Radial3D),
            _ => Err(IvisError::Unknown {
                what: "nav method",
                name: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modal {
    IncomingCall,
    ActiveCall,
    RouteSuggestion,
}

impl Modal {
    fn region(self) -> Region {
        match self {
            Modal::IncomingCall | Modal::ActiveCall => Region::CallModal,
            Modal::RouteSuggestion => Region::RouteModal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stimulus {
    IncomingCall,
    RouteSuggestion,
    CallerHangup,
}

impl FromStr for Stimulus {
    type Err = IvisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incoming-call" | "IncomingCall" => Ok(Stimulus::IncomingCall),
            "route-suggestion" | "RouteSuggestion" => Ok(Stimulus::RouteSuggestion),
            "caller-hangup" | "CallerHangup" => Ok(Stimulus::CallerHangup),
            _ => Err(IvisError::Unknown {
                what: "stimulus",
                name: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Media,
    Temperature,
    Fan,
    Navigation,
    CallModal,
    RouteModal,
    RadialMenu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speech {
    Media,
    Temperature,
    Fan,
    Navigation,
    #[serde(rename = "Incoming call")]
    IncomingCall,
    #[serde(rename = "Call answered")]
    CallAnswered,
    #[serde(rename = "Call declined")]
    CallDeclined,
    #[serde(rename = "Call ended")]
    CallEnded,
    #[serde(rename = "Route suggested")]
    RouteSuggested,
    #[serde(rename = "Route accepted")]
    RouteAccepted,
    #[serde(rename = "Route declined")]
    RouteDeclined,
}

impl Speech {
    pub fn as_str(self) -> &'static str {
        match self {
            Speech::Media => "Media",
            Speech::Temperature => "Temperature",
            Speech::Fan => "Fan",
            Speech::Navigation => "Navigation",
            Speech::IncomingCall => "Incoming call",
            Speech::CallAnswered => "Call answered",
            Speech::CallDeclined => "Call declined",
            Speech::CallEnded => "Call ended",
            Speech::RouteSuggested => "Route suggested",
            Speech::RouteAccepted => "Route accepted",
            Speech::RouteDeclined => "Route declined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhoneAction {
    Answer,
    Decline,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteAction {
    Accept,
    Decline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Effect {
    ScreenUpdate { focused: Region, dimmed: Vec<Region> },
    AudioSpeech { label: Speech },
    AudioDing,
    HapticTrigger { sensation: Sensation },
    PhoneAction { action: PhoneAction },
    RouteAction { action: RouteAction },
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::ScreenUpdate { focused, dimmed } => {
                let d: Vec<String> = dimmed.iter().map(|r| format!("{r:?}")).collect();
                write!(f, "ScreenUpdate focused={focused:?} dimmed={}", d.join(","))
            }
            Effect::AudioSpeech { label } => write!(f, "AudioSpeech {}", label.as_str()),
            Effect::AudioDing => f.write_str("AudioDing"),
            Effect::HapticTrigger { sensation } => write!(f, "HapticTrigger {sensation}"),
            Effect::PhoneAction { action } => write!(f, "PhoneAction {action:?}"),
            Effect::RouteAction { action } => write!(f, "RouteAction {action:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Media {
    pub playing: bool,
    pub track_index: u32,
    pub volume: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadialOverlay {
    pub highlight: Option<RadialDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PinchIntent {
    /// Radial pinch that has not yet left the deadzone.
    Undecided,
    /// Vertical value adjustment starting from `base`.
    Value { mode: Mode, base: f64 },
    Radial,
    /// Started under a modal; ignored until released.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PinchSession {
    intent: PinchIntent,
    last: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvisState {
    pub mode: Mode,
    pub nav_method: NavMethod,
    pub media: Media,
    pub temperature: f64,
    pub fan: u8,
    pub nav_zoom: u8,
    pub modal: Option<Modal>,
    pub radial_overlay: Option<RadialOverlay>,
    /// Stimuli waiting behind the active modal.
    pub pending: VecDeque<Stimulus>,
    #[serde(skip)]
    pinch: Option<PinchSession>,
}

impl Default for IvisState {
    fn default() -> Self {
        Self {
            mode: Mode::Media,
            nav_method: NavMethod::FingerPose,
            media: Media {
                playing: false,
                track_index: 0,
                volume: 50,
            },
            temperature: 21.0,
            fan: 3,
            nav_zoom: 5,
            modal: None,
            radial_overlay: None,
            pending: VecDeque::new(),
            pinch: None,
        }
    }
}

/// Pure value update for a vertical pinch displacement `dz` (meters).
pub fn adjust_value(mode: Mode, current: f64, dz: f64) -> Result<f64, IvisError> {
    if !dz.is_finite() {
        return Err(IvisError::NonFinite(dz));
    }
    Ok(match mode {
        Mode::Media => (current + VOLUME_GAIN * dz).round().clamp(0.0, VOLUME_MAX as f64),
        Mode::Temperature => ((current + TEMP_GAIN * dz).clamp(TEMP_MIN, TEMP_MAX) / TEMP_STEP).round() * TEMP_STEP,
        Mode::Fan => (current + (LEVEL_GAIN * dz).round()).clamp(FAN_MIN as f64, FAN_MAX as f64),
        Mode::Navigation => (current + (LEVEL_GAIN * dz).round()).clamp(ZOOM_MIN as f64, ZOOM_MAX as f64),
    })
}

/// Thresholds the state machine borrows from the recognizer configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvisConfig {
    pub radial_threshold: f64,
    pub radial_deadzone: f64,
}

impl Default for IvisConfig {
    fn default() -> Self {
        Self::from(&RecognizerConfig::default())
    }
}

impl From<&RecognizerConfig> for IvisConfig {
    fn from(c: &RecognizerConfig) -> Self {
        Self {
            radial_threshold: c.radial_threshold,
            radial_deadzone: c.radial_deadzone,
        }
    }
}

pub type Transition = (IvisState, Vec<Effect>);

impl IvisState {
    /// Default state under the given navigation method.
    pub fn with_nav_method(nav_method: NavMethod) -> Self {
        Self {
            nav_method,
            ..Self::default()
        }
    }

    pub fn value(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Media => self.media.volume as f64,
            Mode::Temperature => self.temperature,
            Mode::Fan => self.fan as f64,
            Mode::Navigation => self.nav_zoom as f64,
        }
    }

    fn set_value(&mut self, mode: Mode, v: f64) {
        match mode {
            Mode::Media => self.media.volume = v as u8,
            Mode::Temperature => self.temperature = v,
            Mode::Fan => self.fan = v as u8,
            Mode::Navigation => self.nav_zoom = v as u8,
        }
    }

    /// Adjusted value normalized to `[0, 1]` over its range.
    pub fn level(&self, mode: Mode) -> f64 {
        let v = self.value(mode);
        let (lo, hi) = match mode {
            Mode::Media => (0.0, VOLUME_MAX as f64),
            Mode::Temperature => (TEMP_MIN, TEMP_MAX),
            Mode::Fan => (FAN_MIN as f64, FAN_MAX as f64),
            Mode::Navigation => (ZOOM_MIN as f64, ZOOM_MAX as f64),
        };
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn screen(&self) -> Effect {
        let focused = if let Some(m) = self.modal {
            m.region()
        } else if self.radial_overlay.is_some() {
            Region::RadialMenu
        } else {
            self.mode.region()
        };
        let dimmed = Mode::ALL
            .iter()
            .map(|m| m.region())
            .filter(|r| *r != focused)
            .collect();
        Effect::ScreenUpdate { focused, dimmed }
    }

    /// Whether a pinch is currently being tracked.
    pub fn pinch_active(&self) -> bool {
        self.pinch.is_some()
    }

    /// Checks every state invariant; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        if !(TEMP_MIN..=TEMP_MAX).contains(&self.temperature) {
            return Err(format!("temperature {} out of range", self.temperature));
        }
        if (self.temperature / TEMP_STEP).fract() != 0.0 {
            return Err(format!("temperature {} not a multiple of 0.5", self.temperature));
        }
        if !(FAN_MIN..=FAN_MAX).contains(&self.fan) {
            return Err(format!("fan {} out of range", self.fan));
        }
        if self.media.volume > VOLUME_MAX {
            return Err(format!("volume {} out of range", self.media.volume));
        }
        if !(ZOOM_MIN..=ZOOM_MAX).contains(&self.nav_zoom) {
            return Err(format!("zoom {} out of range", self.nav_zoom));
        }
        if self.radial_overlay.is_some() {
            let radial_pinch = matches!(
                self.pinch.map(|p| p.intent),
                Some(PinchIntent::Undecided | PinchIntent::Radial)
            );
            if !radial_pinch || self.nav_method != NavMethod::Radial3D || self.modal.is_some() {
                return Err("radial overlay without an engaged radial pinch".into());
            }
        }
        if self.pending.contains(&Stimulus::CallerHangup) {
            return Err("hangup queued".into());
        }
        Ok(())
    }

    /// Flat `key=value` snapshot of all externally visible fields.
    pub fn snapshot(&self) -> String {
        let overlay = match self.radial_overlay {
            None => "none".to_string(),
            Some(RadialOverlay { highlight: None }) => "highlight:none".to_string(),
            Some(RadialOverlay { highlight: Some(d) }) => format!("highlight:{}", d.as_str()),
        };
        let modal = self.modal.map_or("none".to_string(), |m| format!("{m:?}"));
        let pending: Vec<String> = self.pending.iter().map(|s| format!("{s:?}")).collect();
        format!(
            "mode={}\nnav_method={}\nmedia.playing={}\nmedia.track_index={}\nmedia.volume={}\n\
             temperature={:.1}\nfan={}\nnav_zoom={}\nmodal={}\nradial_overlay={}\npending={}\n",
            self.mode.as_str(),
            self.nav_method.as_str(),
            self.media.playing,
            self.media.track_index,
            self.media.volume,
            self.temperature,
            self.fan,
            self.nav_zoom,
            modal,
            overlay,
            if pending.is_empty() { "none".to_string() } else { pending.join(",") },
        )
    }

    pub fn snapshot_pairs(&self) -> Vec<(String, String)> {
        self.snapshot()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    pub const SNAPSHOT_KEYS: [&'static str; 11] = [
        "mode",
        "nav_method",
        "media.playing",
        "media.track_index",
        "media.volume",
        "temperature",
        "fan",
        "nav_zoom",
        "modal",
        "radial_overlay",
        "pending",
    ];

    fn clear_pinch_for_modal(&mut self) {
        self.radial_overlay = None;
        if let Some(p) = self.pinch.as_mut() {
            p.intent = PinchIntent::Ignored;
        }
    }
}

fn speak(label: Speech) -> Effect {
    Effect::AudioSpeech { label }
}

fn haptic(sensation: Sensation) -> Effect {
    Effect::HapticTrigger { sensation }
}

/// Switches navigation method. Any radial overlay in progress is dropped.
pub fn set_nav_method(state: &IvisState, method: NavMethod) -> Transition {
    let mut s = state.clone();
    s.nav_method = method;
    if s.radial_overlay.is_some() {
        s.radial_overlay = None;
        if let Some(p) = s.pinch.as_mut() {
            p.intent = PinchIntent::Ignored;
        }
    }
    let effects = if &s == state { Vec::new() } else { vec![s.screen()] };
    (s, effects)
}

/// Applies an external stimulus (call, route suggestion, hangup).
pub fn inject(state: &IvisState, stim: Stimulus) -> Transition {
    let mut s = state.clone();
    let mut effects = Vec::new();
    match stim {
        Stimulus::IncomingCall | Stimulus::RouteSuggestion => {
            if s.modal.is_some() {
                s.pending.push_back(stim);
            } else {
                open_modal(&mut s, stim, &mut effects);
            }
        }
        Stimulus::CallerHangup => match s.modal {
            Some(Modal::IncomingCall | Modal::ActiveCall) => {
                s.modal = None;
                effects.push(s.screen());
                effects.push(speak(Speech::CallEnded));
                surface_pending(&mut s, &mut effects);
            }
            _ => {
                if let Some(i) = s.pending.iter().position(|p| *p == Stimulus::IncomingCall) {
                    s.pending.remove(i);
                }
            }
        },
    }
    (s, effects)
}

fn open_modal(s: &mut IvisState, stim: Stimulus, effects: &mut Vec<Effect>) {
    let (modal, label) = match stim {
        Stimulus::IncomingCall => (Modal::IncomingCall, Speech::IncomingCall),
        Stimulus::RouteSuggestion => (Modal::RouteSuggestion, Speech::RouteSuggested),
        Stimulus::CallerHangup => return,
    };
    s.modal = Some(modal);
    s.clear_pinch_for_modal();
    effects.push(s.screen());
    effects.push(speak(label));
}

fn surface_pending(s: &mut IvisState, effects: &mut Vec<Effect>) {
    if s.modal.is_none() {
        if let Some(next) = s.pending.pop_front() {
            open_modal(s, next, effects);
        }
    }
}

/// Routes one gesture event. Total over all `(state, event)` pairs; unmapped
/// pairs return the state unchanged with no effects.
pub fn dispatch(cfg: &IvisConfig, state: &IvisState, ev: &GestureKind) -> Transition {
    let mut s = state.clone();
    let mut effects = Vec::new();

    // Pinch bookkeeping is shared by modal and mode routing.
    match ev {
        GestureKind::PinchEngage => {
            let intent = if s.modal.is_some() {
                PinchIntent::Ignored
            } else {
                match s.nav_method {
                    NavMethod::FingerPose => PinchIntent::Value {
                        mode: s.mode,
                        base: s.value(s.mode),
                    },
                    NavMethod::Radial3D => PinchIntent::Undecided,
                }
            };
            s.pinch = Some(PinchSession {
                intent,
                last: Vec3::zeros(),
            });
            match intent {
                PinchIntent::Value { mode, .. } => effects.push(haptic(Sensation::ValueCircle { level: s.level(mode) })),
                PinchIntent::Undecided => {
                    s.radial_overlay = Some(RadialOverlay { highlight: None });
                    effects.push(s.screen());
                }
                _ => {}
            }
            return (s, effects);
        }
        GestureKind::PinchMove { dx, dy, dz } => {
            pinch_move(cfg, &mut s, Vec3::new(*dx, *dy, *dz), &mut effects);
            return (s, effects);
        }
        GestureKind::PinchRelease => {
            pinch_release(cfg, &mut s, &mut effects);
            return (s, effects);
        }
        _ => {}
    }

    if let Some(modal) = s.modal {
        let resolved = match (modal, ev) {
            (Modal::IncomingCall, GestureKind::Tap) => {
                s.modal = Some(Modal::ActiveCall);
                effects.push(s.screen());
                effects.push(Effect::PhoneAction {
                    action: PhoneAction::Answer,
                });
                effects.push(speak(Speech::CallAnswered));
                effects.push(haptic(Sensation::OpenCircle));
                false
            }
            (Modal::IncomingCall, GestureKind::GrabRelease) => {
                s.modal = None;
                effects.push(s.screen());
                effects.push(Effect::PhoneAction {
                    action: PhoneAction::Decline,
                });
                effects.push(speak(Speech::CallDeclined));
                effects.push(haptic(Sensation::CloseCircle));
                true
            }
            (Modal::ActiveCall, GestureKind::GrabRelease) => {
                s.modal = None;
                effects.push(s.screen());
                effects.push(Effect::PhoneAction { action: PhoneAction::End });
                effects.push(speak(Speech::CallEnded));
                effects.push(haptic(Sensation::CloseCircle));
                true
            }
            (Modal::RouteSuggestion, GestureKind::Tap) => {
                s.modal = None;
                effects.push(s.screen());
                effects.push(Effect::RouteAction {
                    action: RouteAction::Accept,
                });
                effects.push(speak(Speech::RouteAccepted));
                effects.push(haptic(Sensation::OpenCircle));
                true
            }
            (Modal::RouteSuggestion, GestureKind::GrabRelease) => {
                s.modal = None;
                effects.push(s.screen());
                effects.push(Effect::RouteAction {
                    action: RouteAction::Decline,
                });
                effects.push(speak(Speech::RouteDeclined));
                effects.push(haptic(Sensation::CloseCircle));
                true
            }
            _ => false,
        };
        if resolved {
            surface_pending(&mut s, &mut effects);
        }
        return (s, effects);
    }

    match (s.mode, ev) {
        (_, GestureKind::FingerPose { count }) if s.nav_method == NavMethod::FingerPose => {
            if let Some(mode) = Mode::from_finger_count(*count) {
                s.mode = mode;
                effects.push(s.screen());
                effects.push(speak(mode.speech()));
                effects.push(haptic(Sensation::FingerScan));
            }
        }
        (Mode::Media, GestureKind::Tap) => {
            s.media.playing = !s.media.playing;
            effects.push(s.screen());
            effects.push(haptic(Sensation::OpenCircle));
        }
        (Mode::Media, GestureKind::Swipe { direction }) => {
            s.media.track_index = s.media.track_index.saturating_add(1);
            effects.push(s.screen());
            effects.push(haptic(Sensation::ScanLine { direction: *direction }));
        }
        (Mode::Media, GestureKind::Twist) => {
            s.media.track_index = s.media.track_index.saturating_sub(1);
            if s.media.track_index != state.media.track_index {
                effects.push(s.screen());
            }
            effects.push(haptic(Sensation::ScanLine {
                direction: SwipeDirection::Left,
            }));
        }
        _ => {}
    }
    (s, effects)
}

fn apply_value(s: &mut IvisState, mode: Mode, base: f64, dz: f64, effects: &mut Vec<Effect>) {
    let new = adjust_value(mode, base, dz).unwrap_or(base);
    if new != s.value(mode) {
        s.set_value(mode, new);
        effects.push(s.screen());
        effects.push(haptic(Sensation::ValueCircle { level: s.level(mode) }));
    }
}

fn pinch_move(cfg: &IvisConfig, s: &mut IvisState, disp: Vec3, effects: &mut Vec<Effect>) {
    let Some(mut session) = s.pinch else {
        return;
    };
    if disp.iter().any(|v| !v.is_finite()) {
        return;
    }
    session.last = disp;
    if session.intent == PinchIntent::Undecided {
        let vertical = disp.z.abs();
        let horiz = horizontal(&disp);
        if vertical >= cfg.radial_deadzone && vertical >= horiz {
            session.intent = PinchIntent::Value {
                mode: s.mode,
                base: s.value(s.mode),
            };
            s.radial_overlay = None;
            effects.push(s.screen());
            effects.push(haptic(Sensation::ValueCircle { level: s.level(s.mode) }));
        } else if horiz >= cfg.radial_deadzone {
            session.intent = PinchIntent::Radial;
        }
    }
    s.pinch = Some(session);
    match session.intent {
        PinchIntent::Value { mode, base } => apply_value(s, mode, base, disp.z, effects),
        PinchIntent::Radial => {
            let highlight = radial_direction(&disp, cfg.radial_deadzone);
            let overlay = RadialOverlay { highlight };
            if s.radial_overlay != Some(overlay) {
                s.radial_overlay = Some(overlay);
                effects.push(s.screen());
                if let Some(d) = highlight {
                    effects.push(speak(Mode::from_radial(d).speech()));
                }
            }
        }
        PinchIntent::Undecided | PinchIntent::Ignored => {}
    }
}

fn pinch_release(cfg: &IvisConfig, s: &mut IvisState, effects: &mut Vec<Effect>) {
    let Some(session) = s.pinch.take() else {
        return;
    };
    match session.intent {
        PinchIntent::Radial | PinchIntent::Undecided => {
            s.radial_overlay = None;
            let selected = (horizontal(&session.last) >= cfg.radial_threshold)
                .then(|| radial_direction(&session.last, cfg.radial_deadzone))
                .flatten();
            match selected {
                Some(d) if session.intent == PinchIntent::Radial => {
                    s.mode = Mode::from_radial(d);
                    effects.push(s.screen());
                    effects.push(Effect::AudioDing);
                    effects.push(haptic(Sensation::OpenCircle));
                }
                _ => effects.push(s.screen()),
            }
        }
        PinchIntent::Value { .. } | PinchIntent::Ignored => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IvisConfig {
        IvisConfig::default()
    }

    fn run(state: &IvisState, evs: &[GestureKind]) -> Transition {
        let mut s = state.clone();
        let mut all = Vec::new();
        for ev in evs {
            let (next, effects) = dispatch(&cfg(), &s, ev);
            next.check().unwrap();
            s = next;
            all.extend(effects);
        }
        (s, all)
    }

    fn mv(dx: f64, dy: f64, dz: f64) -> GestureKind {
        GestureKind::PinchMove { dx, dy, dz }
    }

    #[test]
    fn tap_pauses_media() {
        let mut s = IvisState::default();
        s.media.playing = true;
        let (next, effects) = dispatch(&cfg(), &s, &GestureKind::Tap);
        assert!(!next.media.playing);
        assert!(effects.contains(&haptic(Sensation::OpenCircle)));
    }

    #[test]
    fn temperature_clamps_at_ceiling() {
        let s = IvisState {
            mode: Mode::Temperature,
            temperature: 26.0,
            ..IvisState::default()
        };
        let (next, _) = run(&s, &[GestureKind::PinchEngage, mv(0.0, 0.0, 0.05), GestureKind::PinchRelease]);
        assert_eq!(next.temperature, 26.0);
    }

    #[test]
    fn decline_incoming_call() {
        let s = IvisState {
            modal: Some(Modal::IncomingCall),
            ..IvisState::default()
        };
        let (next, effects) = dispatch(&cfg(), &s, &GestureKind::GrabRelease);
        assert_eq!(next.modal, None);
        assert!(effects.contains(&Effect::PhoneAction {
            action: PhoneAction::Decline
        }));
        assert!(effects.contains(&haptic(Sensation::CloseCircle)));
        assert!(effects.iter().any(|e| matches!(e, Effect::AudioSpeech { .. })));
    }

    #[test]
    fn finger_pose_three_selects_fan() {
        for mode in Mode::ALL {
            let s = IvisState {
                mode,
                ..IvisState::default()
            };
            let (next, effects) = dispatch(&cfg(), &s, &GestureKind::FingerPose { count: 3 });
            assert_eq!(next.mode, Mode::Fan);
            assert_eq!(
                effects,
                vec![next.screen(), speak(Speech::Fan), haptic(Sensation::FingerScan)]
            );
            assert!(!effects.contains(&Effect::AudioDing));
        }
    }

    #[test]
    fn swipe_outside_media_is_noop() {
        let s = IvisState {
            mode: Mode::Temperature,
            ..IvisState::default()
        };
        let ev = GestureKind::Swipe {
            direction: SwipeDirection::Right,
        };
        assert_eq!(dispatch(&cfg(), &s, &ev), (s.clone(), Vec::new()));
    }

    #[test]
    fn swipe_and_twist_change_track() {
        let s = IvisState::default();
        let right = GestureKind::Swipe {
            direction: SwipeDirection::Right,
        };
        let (s1, e1) = dispatch(&cfg(), &s, &right);
        assert_eq!(s1.media.track_index, 1);
        assert!(e1.contains(&haptic(Sensation::ScanLine {
            direction: SwipeDirection::Right
        })));
        let (s2, _) = dispatch(&cfg(), &s1, &GestureKind::Twist);
        assert_eq!(s2.media.track_index, 0);
        let (s3, e3) = dispatch(&cfg(), &s2, &GestureKind::Twist);
        assert_eq!(s3.media.track_index, 0);
        assert!(!e3.iter().any(|e| matches!(e, Effect::ScreenUpdate { .. })));
    }

    #[test]
    fn adjust_value_examples() {
        assert_eq!(adjust_value(Mode::Media, 50.0, 0.05).unwrap(), 70.0);
        assert_eq!(adjust_value(Mode::Fan, 5.0, 0.10).unwrap(), 5.0);
        assert_eq!(adjust_value(Mode::Temperature, 20.0, -0.02).unwrap(), 19.0);
        assert_eq!(adjust_value(Mode::Navigation, 1.0, -0.3).unwrap(), 1.0);
        assert!(adjust_value(Mode::Media, 50.0, f64::NAN).is_err());
    }

    #[test]
    fn clutching_accumulates_volume() {
        let s = IvisState::default();
        let (s, _) = run(&s, &[GestureKind::PinchEngage, mv(0.0, 0.0, 0.05), GestureKind::PinchRelease]);
        assert_eq!(s.media.volume, 70);
        let (s, _) = run(&s, &[GestureKind::PinchEngage, mv(0.0, 0.0, 0.025), GestureKind::PinchRelease]);
        assert_eq!(s.media.volume, 80);
    }

    #[test]
    fn incoming_call_preserves_mode() {
        let (s, effects) = inject(&IvisState::default(), Stimulus::IncomingCall);
        assert_eq!(s.modal, Some(Modal::IncomingCall));
        assert_eq!(s.mode, Mode::Media);
        assert!(effects.contains(&speak(Speech::IncomingCall)));
    }

    #[test]
    fn hangup_without_modal_is_noop() {
        let s = IvisState::default();
        assert_eq!(inject(&s, Stimulus::CallerHangup), (s, Vec::new()));
    }

    #[test]
    fn route_queued_behind_call() {
        // Oracle: the queued route must surface exactly as a lone injection.
        let (alone, alone_fx) = inject(&IvisState::default(), Stimulus::RouteSuggestion);

        let (s, _) = inject(&IvisState::default(), Stimulus::IncomingCall);
        let (s, fx) = inject(&s, Stimulus::RouteSuggestion);
        assert!(fx.is_empty());
        assert_eq!(s.modal, Some(Modal::IncomingCall));
        let (s, fx) = dispatch(&cfg(), &s, &GestureKind::GrabRelease);
        assert_eq!(s, alone);
        assert!(fx.ends_with(&alone_fx));
    }

    #[test]
    fn hangup_removes_queued_call() {
        let (s, _) = inject(&IvisState::default(), Stimulus::RouteSuggestion);
        let (s, _) = inject(&s, Stimulus::IncomingCall);
        let (s, fx) = inject(&s, Stimulus::CallerHangup);
        assert!(fx.is_empty());
        assert!(s.pending.is_empty());
        assert_eq!(s.modal, Some(Modal::RouteSuggestion));
    }

    #[test]
    fn answer_then_end_call() {
        let (s, _) = inject(&IvisState::default(), Stimulus::IncomingCall);
        let (s, fx) = dispatch(&cfg(), &s, &GestureKind::Tap);
        assert_eq!(s.modal, Some(Modal::ActiveCall));
        assert!(fx.contains(&Effect::PhoneAction {
            action: PhoneAction::Answer
        }));
        assert!(fx.contains(&haptic(Sensation::OpenCircle)));
        let (s, fx) = dispatch(&cfg(), &s, &GestureKind::GrabRelease);
        assert_eq!(s.modal, None);
        assert!(fx.contains(&Effect::PhoneAction { action: PhoneAction::End }));
    }

    fn radial() -> IvisState {
        IvisState {
            nav_method: NavMethod::Radial3D,
            ..IvisState::default()
        }
    }

    #[test]
    fn radial_selection_dings() {
        let (s, fx) = run(
            &radial(),
            &[
                GestureKind::PinchEngage,
                mv(0.0, 0.02, 0.0),
                mv(0.0, 0.05, 0.0),
                mv(0.0, 0.10, 0.0),
                GestureKind::PinchRelease,
            ],
        );
        assert_eq!(s.mode, Mode::Temperature);
        assert_eq!(s.radial_overlay, None);
        assert!(fx.contains(&speak(Speech::Temperature)));
        assert!(fx.contains(&Effect::AudioDing));
        assert!(fx.contains(&haptic(Sensation::OpenCircle)));
    }

    #[test]
    fn radial_release_short_of_threshold_cancels() {
        let (s, fx) = run(
            &radial(),
            &[GestureKind::PinchEngage, mv(-0.06, 0.0, 0.0), GestureKind::PinchRelease],
        );
        assert_eq!(s.mode, Mode::Media);
        assert!(!fx.contains(&Effect::AudioDing));
        assert!(fx.contains(&speak(Speech::Media)));
    }

    #[test]
    fn radial_vertical_first_adjusts_value() {
        let (s, fx) = run(
            &radial(),
            &[
                GestureKind::PinchEngage,
                mv(0.0, 0.0, 0.05),
                mv(0.09, 0.0, 0.05),
                GestureKind::PinchRelease,
            ],
        );
        assert_eq!(s.mode, Mode::Media);
        assert_eq!(s.media.volume, 70);
        assert!(!fx.contains(&Effect::AudioDing));
    }

    #[test]
    fn modal_mid_pinch_drops_overlay() {
        let (s, _) = run(&radial(), &[GestureKind::PinchEngage, mv(0.06, 0.0, 0.0)]);
        assert!(s.radial_overlay.is_some());
        let (s, _) = inject(&s, Stimulus::IncomingCall);
        s.check().unwrap();
        let (s, fx) = run(&s, &[mv(0.12, 0.0, 0.0), GestureKind::PinchRelease]);
        assert_eq!(s.mode, Mode::Media);
        assert!(fx.is_empty());
    }

    #[test]
    fn snapshot_format() {
        let snap = IvisState::default().snapshot();
        assert_eq!(
            snap,
            "mode=Media\nnav_method=FingerPose\nmedia.playing=false\nmedia.track_index=0\n\
             media.volume=50\ntemperature=21.0\nfan=3\nnav_zoom=5\nmodal=none\n\
             radial_overlay=none\npending=none\n"
        );
        let keys: Vec<String> = IvisState::default().snapshot_pairs().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, IvisState::SNAPSHOT_KEYS);
    }
}
