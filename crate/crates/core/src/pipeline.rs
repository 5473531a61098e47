//! Frame-driven composition of the whole system: kinematics, recognition,
//! dispatch, haptic playback and focusing.

use thiserror::Error;

use crate::acoustic::{solve_focus, AcousticError, PhaseSolution, TransducerArray};
use crate::gesture::{GestureError, GestureEvent, GestureKind, Recognizer, RecognizerConfig, MAX_FRAME_GAP};
use crate::hand::{HandFrame, Kinematics, KinematicsStream, NOMINAL_RATE_HZ};
use crate::haptics::{sample_focus, EnvelopeMode, FocalSample, HapticError, Sensation, DEFAULT_SAMPLE_RATE_HZ};
use crate::ivis::{dispatch, inject, set_nav_method, Effect, IvisConfig, IvisState, NavMethod, Stimulus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Gesture(#[from] GestureError),
    #[error(transparent)]
    Haptic(#[from] HapticError),
    #[error(transparent)]
    Acoustic(#[from] AcousticError),
    #[error("invalid frame at t={t}: {field}={value}")]
    Frame { t: f64, field: &'static str, value: f64 },
    #[error("invariant violated at t={t}: {msg}")]
    Invariant { t: f64, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub recognizer: RecognizerConfig,
    pub nav_method: NavMethod,
    /// Focal sampling rate of the haptic renderer.
    pub sample_rate: f64,
    /// Forces every emitted sample to one envelope mode.
    pub envelope: Option<EnvelopeMode>,
    /// Solve array phases for every focal sample.
    pub solve: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            recognizer: RecognizerConfig::default(),
            nav_method: NavMethod::FingerPose,
            sample_rate: DEFAULT_SAMPLE_RATE_HZ,
            envelope: None,
            solve: true,
        }
    }
}

/// Plays one foreground sensation at a time over the idle anchor circle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HapticPlayer {
    current: Option<(Sensation, f64)>,
}

impl HapticPlayer {
    pub fn trigger(&mut self, s: Sensation, t: f64) {
        self.current = match (self.current, s) {
            // Level updates keep the circle phase continuous.
            (Some((Sensation::ValueCircle { .. }, start)), Sensation::ValueCircle { .. }) => Some((s, start)),
            _ => Some((s, t)),
        };
    }

    pub fn stop_value(&mut self) {
        if matches!(self.current, Some((Sensation::ValueCircle { .. }, _))) {
            self.current = None;
        }
    }

    /// Sensation playing at absolute time `t` with its local time.
    pub fn active(&self, t: f64) -> (Sensation, f64) {
        match self.current {
            Some((s, start)) if s.duration().is_none_or(|d| t - start <= d) && t >= start => (s, t - start),
            _ => (Sensation::AnchorCircle, t),
        }
    }

    fn expire(&mut self, t: f64) {
        if let Some((s, start)) = self.current {
            if s.duration().is_some_and(|d| t - start > d) {
                self.current = None;
            }
        }
    }
}

/// Everything produced while processing one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameOutput {
    pub t: f64,
    pub events: Vec<GestureEvent>,
    pub effects: Vec<Effect>,
    pub focal: Vec<FocalSample>,
    pub phases: Vec<PhaseSolution>,
    /// IVIS state differs from the one before this frame.
    pub changed: bool,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    ivis_cfg: IvisConfig,
    recognizer: Recognizer,
    kinematics: KinematicsStream,
    state: IvisState,
    player: HapticPlayer,
    array: TransducerArray,
    last_t: Option<f64>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.recognizer.validate()?;
        if cfg.sample_rate.is_nan() || cfg.sample_rate < crate::haptics::MIN_SAMPLE_RATE_HZ {
            return Err(HapticError::SampleRate(cfg.sample_rate).into());
        }
        let state = IvisState::with_nav_method(cfg.nav_method);
        Ok(Self {
            ivis_cfg: IvisConfig::from(&cfg.recognizer),
            recognizer: Recognizer::new(cfg.recognizer.clone()),
            kinematics: KinematicsStream::new(),
            state,
            player: HapticPlayer::default(),
            array: TransducerArray::default(),
            last_t: None,
            cfg,
        })
    }

    pub fn state(&self) -> &IvisState {
        &self.state
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn player(&self) -> &HapticPlayer {
        &self.player
    }

    /// Time of the last frame accepted by [`Pipeline::push`].
    pub fn last_time(&self) -> Option<f64> {
        self.last_t
    }

    /// Accepts the next frame. Kinematics need one frame of look-ahead, so
    /// outputs trail the input by a frame; a gap larger than the recognizer's
    /// dropout threshold flushes the held frame first.
    pub fn push(&mut self, frame: HandFrame) -> Result<Vec<FrameOutput>, PipelineError> {
        if let Err((field, value)) = frame.check() {
            return Err(PipelineError::Frame { t: frame.t, field, value });
        }
        let mut out = Vec::new();
        if let Some(prev) = self.last_t {
            if frame.t <= prev {
                return Err(GestureError::OutOfOrder { t: frame.t, prev }.into());
            }
            if frame.t - prev > MAX_FRAME_GAP {
                for (f, k) in self.kinematics.finish() {
                    out.push(self.process(&f, &k)?);
                }
            }
        }
        self.last_t = Some(frame.t);
        for (f, k) in self.kinematics.push(frame) {
            out.push(self.process(&f, &k)?);
        }
        Ok(out)
    }

    /// Releases the frame held back for look-ahead.
    pub fn flush(&mut self) -> Result<Vec<FrameOutput>, PipelineError> {
        let held = self.kinematics.finish();
        held.iter().map(|(f, k)| self.process(f, k)).collect()
    }

    pub fn inject(&mut self, t: f64, stim: Stimulus) -> Result<Vec<Effect>, PipelineError> {
        let (next, effects) = inject(&self.state, stim);
        self.commit(t, next, &effects)?;
        Ok(effects)
    }

    pub fn set_nav_method(&mut self, t: f64, method: NavMethod) -> Result<Vec<Effect>, PipelineError> {
        let (next, effects) = set_nav_method(&self.state, method);
        self.commit(t, next, &effects)?;
        Ok(effects)
    }

    fn commit(&mut self, t: f64, next: IvisState, effects: &[Effect]) -> Result<(), PipelineError> {
        next.check().map_err(|msg| PipelineError::Invariant { t, msg })?;
        self.state = next;
        for e in effects {
            if let Effect::HapticTrigger { sensation } = e {
                self.player.trigger(*sensation, t);
            }
        }
        Ok(())
    }

    fn process(&mut self, frame: &HandFrame, kin: &Kinematics) -> Result<FrameOutput, PipelineError> {
        let before = self.state.clone();
        let events = self.recognizer.step(frame, kin)?;
        let mut effects = Vec::new();
        for ev in &events {
            let (next, fx) = dispatch(&self.ivis_cfg, &self.state, &ev.kind);
            self.commit(ev.t, next, &fx)?;
            if ev.kind == GestureKind::PinchRelease {
                self.player.stop_value();
            }
            effects.extend(fx);
        }
        let (focal, phases) = self.render(frame)?;
        Ok(FrameOutput {
            t: frame.t,
            changed: self.state != before,
            events,
            effects,
            focal,
            phases,
        })
    }

    /// Focal samples covering one frame period starting at the frame time.
    fn render(&mut self, frame: &HandFrame) -> Result<(Vec<FocalSample>, Vec<PhaseSolution>), PipelineError> {
        let n = (self.cfg.sample_rate / NOMINAL_RATE_HZ).round() as usize;
        let mut focal = Vec::with_capacity(n);
        let mut phases = Vec::new();
        for k in 0..n {
            let t = frame.t + k as f64 / self.cfg.sample_rate;
            self.player.expire(t);
            let (s, local) = self.player.active(t);
            if !frame.hand_present && s != Sensation::AnchorCircle {
                continue;
            }
            let Some(mut sample) = sample_focus(&s, local, frame, self.cfg.sample_rate)? else {
                continue;
            };
            sample.t = t;
            if let Some(m) = self.cfg.envelope {
                sample.envelope_mode = m;
            }
            if self.cfg.solve {
                phases.push(solve_focus(&self.array, &sample.pos)?);
            }
            focal.push(sample);
        }
        Ok((focal, phases))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::{synth_gesture, SynthKind, Vec3};

    fn run(p: &mut Pipeline, kind: &SynthKind, start: f64) -> Vec<FrameOutput> {
        let traj = synth_gesture(kind, start, Vec3::new(0.0, 0.0, 0.2)).unwrap();
        let mut out = Vec::new();
        for f in traj.frames() {
            out.extend(p.push(*f).unwrap());
        }
        out.extend(p.flush().unwrap());
        out
    }

    #[test]
    fn tap_toggles_playback_and_opens_circle() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        let out = run(&mut p, &SynthKind::Tap, 0.0);
        assert!(p.state().media.playing);
        let fired = out.iter().position(|o| !o.events.is_empty()).unwrap();
        assert!(out[fired].changed);
        assert!(out[fired].effects.contains(&Effect::HapticTrigger {
            sensation: Sensation::OpenCircle
        }));
        assert!(out.iter().all(|o| o.focal.len() == 40));
        assert_eq!(out[fired + 1].phases.len(), 40);
    }

    #[test]
    fn idle_hand_feels_anchor() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        let out = run(&mut p, &SynthKind::Idle { duration: 0.5 }, 0.0);
        for s in out.iter().flat_map(|o| &o.focal) {
            assert!((s.intensity - 0.2).abs() < 1e-12);
            assert!((s.pos.z - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn value_circle_stops_on_release() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        run(&mut p, &SynthKind::pinch(), 0.0);
        assert_eq!(p.player().active(100.0).0, Sensation::AnchorCircle);
        assert!(p.state().media.volume > 50);
    }

    #[test]
    fn rejects_out_of_order() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        p.push(HandFrame::open_palm(1.0, Vec3::new(0.0, 0.0, 0.2))).unwrap();
        assert!(matches!(
            p.push(HandFrame::open_palm(0.5, Vec3::new(0.0, 0.0, 0.2))),
            Err(PipelineError::Gesture(GestureError::OutOfOrder { .. }))
        ));
    }

    #[test]
    fn inject_opens_modal() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        let fx = p.inject(0.0, Stimulus::IncomingCall).unwrap();
        assert!(!fx.is_empty());
        assert_eq!(p.state().modal, Some(crate::ivis::Modal::IncomingCall));
    }
}
