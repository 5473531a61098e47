//! `ivis` command line: scenario replay, scoring, generators and exports.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ivis_sim::acoustic::{field_grid, solve_focus, Axis, Plane, TransducerArray};
use ivis_sim::gesture::RecognizerConfig;
use ivis_sim::hand::{parse_trajectory, synth_gesture_with, write_trajectory, HandFrame, SynthKind, SynthParams, Vec3};
use ivis_sim::harness::{event_labels, parse_labels, run, score, Scenario, DEFAULT_TOLERANCE, SYNTH_BASE};
use ivis_sim::haptics::{timeline, write_timeline, EnvelopeMode, Sensation, DEFAULT_SAMPLE_RATE_HZ};
use ivis_sim::ivis::NavMethod;
use ivis_sim::pipeline::{Pipeline, PipelineConfig};

#[derive(Parser)]
#[command(name = "ivis", version, about = "Mid-air haptic infotainment simulator")]
struct Cli {
    /// Recognizer configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective recognizer configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario through the full pipeline.
    Run {
        scenario: PathBuf,
        #[arg(long, value_parser = parse_nav)]
        nav_method: Option<NavMethod>,
        /// Force every focal sample to `am` or `stm`.
        #[arg(long)]
        envelope: Option<EnvelopeMode>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the discrete event log.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Precision and recall of an event log against labels.
    Score {
        labels: PathBuf,
        events: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Run a trajectory through the recognizer and print its events.
    Recognize {
        trajectory: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic gesture trajectory.
    Synth {
        kind: SynthKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Strength as a multiple of the recognizer thresholds.
        #[arg(long, default_value_t = 1.5)]
        factor: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export a pressure-magnitude slice for a focused array as CSV.
    Field {
        /// Focal point `x,y,z` in meters.
        #[arg(long, value_parser = parse_vec3)]
        focus: Vec3,
        /// Slice plane such as `z=0.2`.
        #[arg(long, value_parser = parse_plane)]
        plane: (Axis, f64),
        /// Grid spacing in millimeters.
        #[arg(long, default_value_t = 1.0)]
        res: f64,
        /// Side of the square slice in millimeters.
        #[arg(long, default_value_t = 100.0)]
        extent: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the focal-point timeline of a sensation.
    Haptics {
        /// circle-tap, double-tap, scan-left, scan-right, finger-scan, open,
        /// close, anchor or value:LEVEL.
        sensation: Sensation,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
        rate: f64,
        /// Required for continuous sensations.
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        envelope: Option<EnvelopeMode>,
        /// Palm position `x,y,z`.
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,0.2")]
        palm: Vec3,
    },
    /// Start the WebSocket session server.
    Serve {
        #[arg(long, default_value_t = ivis_bridge::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn parse_nav(s: &str) -> Result<NavMethod, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn parse_plane(s: &str) -> Result<(Axis, f64), String> {
    let (axis, value) = s.split_once('=').ok_or_else(|| format!("expected axis=value, got {s:?}"))?;
    let axis = match axis.trim() {
        "x" => Axis::X,
        "y" => Axis::Y,
        "z" => Axis::Z,
        other => return Err(format!("unknown axis {other:?}")),
    };
    Ok((axis, value.trim().parse().map_err(|e| format!("{value:?}: {e}"))?))
}

/// Failure modes mapped onto exit codes.
enum Outcome {
    Pass,
    Fail,
}

type CmdResult = Result<Outcome, String>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        // A closed pipe (`ivis ... | head`) is not an error.
        None => match io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(format!("stdout: {e}")),
            _ => Ok(()),
        },
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<RecognizerConfig, String> {
    match path {
        Some(p) => RecognizerConfig::from_kv(&read(p)?).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(RecognizerConfig::default()),
    }
}

fn execute(cli: Cli) -> CmdResult {
    let config = load_config(cli.config.as_deref())?;
    if cli.print_config {
        print!("{}", config.to_kv());
        return Ok(Outcome::Pass);
    }
    let Some(command) = cli.command else {
        return Err("no command given; see --help".into());
    };
    match command {
        Command::Run {
            scenario,
            nav_method,
            envelope,
            report,
            events,
        } => {
            let sc = Scenario::load(&scenario).map_err(|e| e.to_string())?;
            let cfg = PipelineConfig {
                recognizer: config,
                nav_method: nav_method.unwrap_or(NavMethod::FingerPose),
                envelope,
                ..PipelineConfig::default()
            };
            let rep = run(&sc, &cfg).map_err(|e| e.to_string())?;
            emit(report.as_deref(), &rep.render())?;
            if let Some(p) = events {
                emit(Some(&p), &rep.event_log())?;
            }
            Ok(if rep.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Score { labels, events, tol } => {
            let l = parse_labels(&read(&labels)?).map_err(|e| format!("{}: {e}", labels.display()))?;
            let e = parse_labels(&read(&events)?).map_err(|e| format!("{}: {e}", events.display()))?;
            let e: Vec<_> = e.into_iter().filter(|(_, k)| k != "pinch-move").collect();
            let (p, r) = score(&l, &e, tol).map_err(|e| e.to_string())?;
            println!("precision {p:.6}\nrecall {r:.6}");
            Ok(Outcome::Pass)
        }
        Command::Recognize { trajectory, out } => {
            let traj = parse_trajectory(&read(&trajectory)?).map_err(|e| format!("{}: {e}", trajectory.display()))?;
            let cfg = PipelineConfig {
                recognizer: config,
                solve: false,
                ..PipelineConfig::default()
            };
            let mut p = Pipeline::new(cfg).map_err(|e| e.to_string())?;
            let mut events = Vec::new();
            for f in traj.frames() {
                for o in p.push(*f).map_err(|e| e.to_string())? {
                    events.extend(o.events);
                }
            }
            for o in p.flush().map_err(|e| e.to_string())? {
                events.extend(o.events);
            }
            let text: String = event_labels(&events).iter().map(|(t, k)| format!("{t} {k}\n")).collect();
            emit(out.as_deref(), &text)?;
            Ok(Outcome::Pass)
        }
        Command::Synth {
            kind,
            out,
            start,
            factor,
            seed,
        } => {
            let params = SynthParams {
                factor,
                jitter_seed: seed,
                config,
            };
            let traj = synth_gesture_with(&kind, start, SYNTH_BASE, &params).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &write_trajectory(&traj))?;
            Ok(Outcome::Pass)
        }
        Command::Field {
            focus,
            plane,
            res,
            extent,
            out,
        } => {
            if !(res > 0.0 && extent > 0.0) {
                return Err("--res and --extent must be positive".into());
            }
            let array = TransducerArray::default();
            let phases = solve_focus(&array, &focus).map_err(|e| e.to_string())?;
            let slice = Plane::square(plane.0, plane.1, &focus, extent / 1000.0, res / 1000.0);
            let grid = field_grid(&array, &phases, &slice).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &grid.to_csv().map_err(|e| e.to_string())?)?;
            eprintln!(
                "argmax {},{},{} |p|={}",
                grid.argmax.x, grid.argmax.y, grid.argmax.z, grid.max
            );
            Ok(Outcome::Pass)
        }
        Command::Haptics {
            sensation,
            out,
            rate,
            length,
            envelope,
            palm,
        } => {
            let hand = HandFrame::open_palm(0.0, palm);
            let samples = timeline(&sensation, &hand, rate, length, envelope).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &write_timeline(&samples))?;
            Ok(Outcome::Pass)
        }
        Command::Serve { port, host } => {
            let listener = ivis_bridge::bind((host.as_str(), port)).map_err(|e| format!("{host}:{port}: {e}"))?;
            eprintln!("listening on ws://{}", listener.local_addr().map_err(|e| e.to_string())?);
            ivis_bridge::serve(listener).map_err(|e| e.to_string())?;
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
