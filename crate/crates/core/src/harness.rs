//! Scenario replay, recognition scoring and latency measurement.
//!
//! A scenario is a line-delimited script of `at action args` steps:
//!
//! ```text
//! # name: volume-up
//! # seed: 7
//! 0.0 nav finger
//! 0.5 synth pinch:0,0,0.05
//! 2.5 expect media.volume=70
//! ```
//!
//! Actions are `play <trajectory file>`, `synth <kind>`, `inject <stimulus>`,
//! `nav finger|radial` and `expect key=value ...`. Trajectories start at the
//! step time; the simulated clock is driven by frame timestamps only.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::gesture::{GestureEvent, GestureKind, RecognizerConfig, MAX_FRAME_GAP};
use crate::hand::{parse_trajectory, synth_gesture_with, HandError, HandFrame, SynthKind, SynthParams, Trajectory, Vec3};
use crate::ivis::{Effect, IvisState, NavMethod, Stimulus};
use crate::pipeline::{FrameOutput, Pipeline, PipelineConfig, PipelineError};

/// Hover position used for synthesized gestures.
pub const SYNTH_BASE: Vec3 = Vec3::new(0.0, 0.0, 0.2);
pub const DEFAULT_TOLERANCE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Trajectory {
        path: String,
        #[source]
        source: HandError,
    },
    #[error("line {line}: trajectory overlaps the previous one ({start} < {prev_end})")]
    Overlap { line: usize, start: f64, prev_end: f64 },
    #[error("negative tolerance {0}")]
    Tolerance(f64),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// One `key=value` check against the state snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub key: String,
    pub value: String,
}

impl Predicate {
    /// Numeric values compare numerically, everything else verbatim.
    pub fn holds(&self, state: &IvisState) -> Result<(), String> {
        let actual = state
            .snapshot_pairs()
            .into_iter()
            .find(|(k, _)| *k == self.key)
            .map(|(_, v)| v)
            .unwrap_or_default();
        let equal = match (actual.parse::<f64>(), self.value.parse::<f64>()) {
            (Ok(a), Ok(b)) => a == b,
            _ => actual == self.value,
        };
        if equal {
            Ok(())
        } else {
            Err(format!("{}={} (expected {})", self.key, actual, self.value))
        }
    }
}

impl FromStr for Predicate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, value) = s.split_once('=').ok_or_else(|| format!("predicate {s:?} is not key=value"))?;
        if !IvisState::SNAPSHOT_KEYS.contains(&key) {
            return Err(format!("unknown state field {key:?}"));
        }
        if value.is_empty() {
            return Err(format!("empty value for {key}"));
        }
        Ok(Self {
            key: key.to_string(),
            value: value.to_string(),
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.key, self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Play(PathBuf),
    Synth(SynthKind),
    Inject(Stimulus),
    SetNavMethod(NavMethod),
    Expect(Vec<Predicate>),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Play(p) => write!(f, "play {}", p.display()),
            Action::Synth(k) => write!(f, "synth {k}"),
            Action::Inject(s) => write!(f, "inject {s:?}"),
            Action::SetNavMethod(m) => write!(f, "nav {}", m.as_str()),
            Action::Expect(ps) => {
                f.write_str("expect")?;
                for p in ps {
                    write!(f, " {p}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub at: f64,
    /// 1-based source line.
    pub line: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub name: String,
    pub seed: Option<u64>,
    pub steps: Vec<Step>,
    /// Directory that relative `play` paths resolve against.
    pub base: Option<PathBuf>,
}

impl Scenario {
    /// Parses scenario text. Relative `play` paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, HarnessError> {
        let mut sc = Scenario {
            base: base.map(Path::to_path_buf),
            ..Scenario::default()
        };
        let mut prev_at = f64::NEG_INFINITY;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| HarnessError::Parse { line, msg };
            let l = raw.trim();
            if let Some(comment) = l.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(name) = comment.strip_prefix("name:") {
                    sc.name = name.trim().to_string();
                } else if let Some(seed) = comment.strip_prefix("seed:") {
                    sc.seed = Some(seed.trim().parse().map_err(|e| err(format!("seed: {e}")))?);
                }
                continue;
            }
            if l.is_empty() {
                continue;
            }
            let mut tok = l.split_whitespace();
            let at: f64 = tok
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|_| err("step time is not a number".into()))?;
            if !at.is_finite() || at < 0.0 {
                return Err(err(format!("step time {at} must be finite and non-negative")));
            }
            if at < prev_at {
                return Err(err(format!("step time {at} before previous step at {prev_at}")));
            }
            prev_at = at;
            let verb = tok.next().ok_or_else(|| err("missing action".into()))?;
            let args: Vec<&str> = tok.collect();
            let one = || match args.as_slice() {
                [a] => Ok(*a),
                _ => Err(err(format!("{verb} takes exactly one argument"))),
            };
            let action = match verb {
                "play" => Action::Play(PathBuf::from(one()?)),
                "synth" => Action::Synth(one()?.parse().map_err(|e| err(format!("{e}")))?),
                "inject" => Action::Inject(one()?.parse().map_err(|e| err(format!("{e}")))?),
                "nav" => Action::SetNavMethod(one()?.parse().map_err(|e| err(format!("{e}")))?),
                "expect" => {
                    if args.is_empty() {
                        return Err(err("expect needs at least one predicate".into()));
                    }
                    let preds = args.iter().map(|a| a.parse()).collect::<Result<Vec<Predicate>, _>>();
                    Action::Expect(preds.map_err(err)?)
                }
                other => return Err(err(format!("unknown action {other:?}"))),
            };
            sc.steps.push(Step { at, line, action });
        }
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut sc = Self::parse(&text, path.parent())?;
        if sc.name.is_empty() {
            sc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub line: usize,
    pub at: f64,
    pub action: String,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencyStats {
    pub frames: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    fn record(&mut self, total_ms: &mut f64, ms: f64, frames: usize) {
        if frames == 0 {
            return;
        }
        *total_ms += ms;
        self.frames += frames;
        self.max_ms = self.max_ms.max(ms / frames as f64);
        self.mean_ms = *total_ms / self.frames as f64;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub seed: Option<u64>,
    pub steps: Vec<StepOutcome>,
    pub events: Vec<GestureEvent>,
    pub effects: Vec<(f64, Effect)>,
    pub violations: Vec<String>,
    pub final_state: IvisState,
    pub latency: LatencyStats,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.steps.iter().all(|s| s.failure.is_none())
    }

    /// Full report. Wall-clock lines start with `latency.`.
    pub fn render(&self) -> String {
        let mut out = self.render_deterministic();
        let _ = writeln!(out, "latency.frames {}", self.latency.frames);
        let _ = writeln!(out, "latency.mean_ms {:.4}", self.latency.mean_ms);
        let _ = writeln!(out, "latency.max_ms {:.4}", self.latency.max_ms);
        out
    }

    /// Report without wall-clock timing; identical across replays.
    pub fn render_deterministic(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.name);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed {seed}");
        }
        for s in &self.steps {
            let status = s.failure.as_deref().map_or("ok".to_string(), |f| format!("FAIL {f}"));
            let _ = writeln!(out, "step line={} at={} {} {}", s.line, s.at, s.action, status);
        }
        for v in &self.violations {
            let _ = writeln!(out, "violation {v}");
        }
        for e in &self.events {
            let _ = writeln!(out, "event {e}");
        }
        for (t, e) in &self.effects {
            let _ = writeln!(out, "effect {t} {e}");
        }
        for l in self.final_state.snapshot().lines() {
            let _ = writeln!(out, "final {l}");
        }
        let _ = writeln!(out, "result {}", if self.passed() { "pass" } else { "fail" });
        out
    }

    /// Discrete gesture events in event-log form, one per line.
    pub fn event_log(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }
}

struct Runner {
    pipeline: Pipeline,
    report: Report,
    total_ms: f64,
    halted: bool,
}

impl Runner {
    fn absorb(&mut self, outputs: Vec<FrameOutput>) {
        for o in outputs {
            self.report.events.extend(o.events.iter().copied());
            let t = o.events.last().map_or(o.t, |e| e.t);
            self.report.effects.extend(o.effects.into_iter().map(|e| (t, e)));
        }
    }

    fn push(&mut self, frame: HandFrame) {
        if self.halted {
            return;
        }
        let start = Instant::now();
        let res = self.pipeline.push(frame);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match res {
            Ok(out) => {
                self.report.latency.record(&mut self.total_ms, ms, out.len());
                self.absorb(out);
            }
            Err(e) => self.halt(e),
        }
    }

    fn flush(&mut self) {
        if self.halted {
            return;
        }
        match self.pipeline.flush() {
            Ok(out) => self.absorb(out),
            Err(e) => self.halt(e),
        }
    }

    fn halt(&mut self, e: PipelineError) {
        self.report.violations.push(e.to_string());
        self.halted = true;
    }
}

fn load_frames(sc: &Scenario, cfg: &RecognizerConfig) -> Result<Vec<HandFrame>, HarnessError> {
    let mut frames: Vec<HandFrame> = Vec::new();
    for (i, step) in sc.steps.iter().enumerate() {
        let traj = match &step.action {
            Action::Play(path) => {
                let path = &match &sc.base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                let traj = parse_trajectory(&text).map_err(|source| HarnessError::Trajectory {
                    path: path.display().to_string(),
                    source,
                })?;
                let start = traj.start().unwrap_or(0.0);
                traj.shifted(step.at - start)
            }
            Action::Synth(kind) => {
                let params = SynthParams {
                    jitter_seed: sc.seed.map(|s| s.wrapping_add(i as u64)),
                    config: cfg.clone(),
                    ..SynthParams::default()
                };
                synth_gesture_with(kind, step.at, SYNTH_BASE, &params).map_err(|source| HarnessError::Trajectory {
                    path: format!("synth {kind}"),
                    source,
                })?
            }
            _ => continue,
        };
        let Some(first) = traj.start() else { continue };
        if let Some(prev) = frames.last() {
            if first <= prev.t {
                return Err(HarnessError::Overlap {
                    line: step.line,
                    start: first,
                    prev_end: prev.t,
                });
            }
        }
        frames.extend(Trajectory::into_frames(traj));
    }
    Ok(frames)
}

/// Replays a scenario through the full pipeline.
pub fn run(sc: &Scenario, cfg: &PipelineConfig) -> Result<Report, HarnessError> {
    let frames = load_frames(sc, &cfg.recognizer)?;
    let mut r = Runner {
        pipeline: Pipeline::new(cfg.clone())?,
        report: Report {
            name: sc.name.clone(),
            seed: sc.seed,
            steps: Vec::new(),
            events: Vec::new(),
            effects: Vec::new(),
            violations: Vec::new(),
            final_state: IvisState::with_nav_method(cfg.nav_method),
            latency: LatencyStats::default(),
        },
        total_ms: 0.0,
        halted: false,
    };
    let mut next = 0;
    for step in &sc.steps {
        if matches!(step.action, Action::Play(_) | Action::Synth(_)) {
            r.report.steps.push(StepOutcome {
                line: step.line,
                at: step.at,
                action: step.action.to_string(),
                failure: None,
            });
            continue;
        }
        while next < frames.len() && frames[next].t < step.at {
            r.push(frames[next]);
            next += 1;
        }
        // The held-back frame is final once the stream pauses.
        let paused = frames
            .get(next)
            .is_none_or(|f| r.pipeline.last_time().is_some_and(|last| f.t - last > MAX_FRAME_GAP));
        if paused {
            r.flush();
        }
        let mut failure = None;
        if !r.halted {
            let res = match &step.action {
                Action::Inject(stim) => r.pipeline.inject(step.at, *stim).map(Some),
                Action::SetNavMethod(m) => r.pipeline.set_nav_method(step.at, *m).map(Some),
                Action::Expect(preds) => {
                    let fails: Vec<String> = preds.iter().filter_map(|p| p.holds(r.pipeline.state()).err()).collect();
                    if !fails.is_empty() {
                        failure = Some(fails.join(" "));
                    }
                    Ok(None)
                }
                Action::Play(_) | Action::Synth(_) => Ok(None),
            };
            match res {
                Ok(Some(fx)) => r.report.effects.extend(fx.into_iter().map(|e| (step.at, e))),
                Ok(None) => {}
                Err(e) => r.halt(e),
            }
        } else {
            failure = Some("not evaluated".into());
        }
        r.report.steps.push(StepOutcome {
            line: step.line,
            at: step.at,
            action: step.action.to_string(),
            failure,
        });
    }
    while next < frames.len() {
        r.push(frames[next]);
        next += 1;
    }
    r.flush();
    r.report.final_state = r.pipeline.state().clone();
    Ok(r.report)
}

/// Per-frame latency of the full pipeline over an arbitrary frame stream.
pub fn measure_latency(frames: &[HandFrame], cfg: &PipelineConfig) -> Result<LatencyStats, HarnessError> {
    let mut pipeline = Pipeline::new(cfg.clone())?;
    let mut stats = LatencyStats::default();
    let mut total = 0.0;
    for f in frames {
        let start = Instant::now();
        let out = pipeline.push(*f)?;
        stats.record(&mut total, start.elapsed().as_secs_f64() * 1e3, out.len());
    }
    let start = Instant::now();
    let out = pipeline.flush()?;
    stats.record(&mut total, start.elapsed().as_secs_f64() * 1e3, out.len());
    Ok(stats)
}

/// `(t, label)` pairs from `t label ...` lines; `#` starts a comment.
pub fn parse_labels(text: &str) -> Result<Vec<(f64, String)>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let mut tok = l.split_whitespace();
        let t = tok.next().and_then(|s| s.parse::<f64>().ok()).filter(|t| t.is_finite());
        match (t, tok.next()) {
            (Some(t), Some(kind)) => out.push((t, kind.to_string())),
            _ => {
                return Err(HarnessError::Parse {
                    line: i + 1,
                    msg: "expected `t kind`".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Discrete events as scoring pairs; continuous pinch moves are skipped.
pub fn event_labels(events: &[GestureEvent]) -> Vec<(f64, String)> {
    events
        .iter()
        .filter(|e| !matches!(e.kind, GestureKind::PinchMove { .. }))
        .map(|e| (e.t, e.kind.label()))
        .collect()
}

/// Greedy one-to-one matching of events to labels of the same kind within
/// `tol` seconds. Returns `(precision, recall)`; an empty side scores 1.0.
pub fn score(labels: &[(f64, String)], events: &[(f64, String)], tol: f64) -> Result<(f64, f64), HarnessError> {
    if tol.is_nan() || tol < 0.0 {
        return Err(HarnessError::Tolerance(tol));
    }
    let mut used = vec![false; labels.len()];
    let mut matched = 0usize;
    for (te, ke) in events {
        let hit = labels
            .iter()
            .enumerate()
            .find(|(j, (tl, kl))| !used[*j] && kl == ke && (tl - te).abs() <= tol);
        if let Some((j, _)) = hit {
            used[j] = true;
            matched += 1;
        }
    }
    let ratio = |n: usize| if n == 0 { 1.0 } else { matched as f64 / n as f64 };
    Ok((ratio(events.len()), ratio(labels.len())))
}
