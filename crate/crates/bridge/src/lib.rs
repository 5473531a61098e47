//! WebSocket session server for interactive clients.
//!
//! Every connection owns one [`Session`]. Text frames carry JSON objects with
//! a `type` field; see `docs/wire.md` for the schema.

use std::io;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tungstenite::{Message, WebSocket};

use ivis_sim::gesture::{GestureError, GestureEvent};
use ivis_sim::hand::{HandFrame, Vec3, NOMINAL_RATE_HZ};
use ivis_sim::haptics::FocalSample;
use ivis_sim::ivis::{Effect, IvisState, NavMethod, Stimulus};
use ivis_sim::pipeline::{FrameOutput, Pipeline, PipelineConfig, PipelineError};

pub const DEFAULT_PORT: u16 = 7341;
pub const HEARTBEAT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    WebSocket(Box<tungstenite::Error>),
}

impl From<tungstenite::Error> for BridgeError {
    fn from(e: tungstenite::Error) -> Self {
        BridgeError::WebSocket(Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ClientMessage {
    Hello {
        nav_method: NavMethod,
    },
    Frame(HandFrame),
    /// Virtual hand pose, stamped by the server one frame period after the
    /// previous input.
    VirtualControl {
        x: f64,
        y: f64,
        z: f64,
        pinch: f64,
        grab: f64,
        fingers: [bool; 5],
    },
    Trigger {
        stimulus: Stimulus,
    },
    SetNavMethod {
        method: NavMethod,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ServerMessage {
    Snapshot { state: IvisState },
    Event { event: GestureEvent },
    Effect { t: f64, effect: Effect },
    Focal { samples: Vec<FocalSample> },
    Error { code: ErrorCode, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    /// Message sent before `Hello`.
    NoHello,
    /// Not valid JSON or not a known message.
    Parse,
    /// Frame timestamp not after the previous one.
    Order,
    /// Field outside its valid range.
    Range,
    Internal,
}

fn error(code: ErrorCode, detail: impl Into<String>) -> ServerMessage {
    ServerMessage::Error {
        code,
        detail: detail.into(),
    }
}

/// Per-connection pipeline state. Outputs are a pure function of the input
/// message sequence.
#[derive(Debug, Default)]
pub struct Session {
    pipeline: Option<Pipeline>,
    clock: Option<f64>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> Option<&IvisState> {
        self.pipeline.as_ref().map(|p| p.state())
    }

    /// Handles one raw text message.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![error(ErrorCode::Parse, e.to_string())],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        if let ClientMessage::Hello { nav_method } = msg {
            let cfg = PipelineConfig {
                nav_method,
                ..PipelineConfig::default()
            };
            return match Pipeline::new(cfg) {
                Ok(p) => {
                    let state = p.state().clone();
                    self.pipeline = Some(p);
                    self.clock = None;
                    vec![ServerMessage::Snapshot { state }]
                }
                Err(e) => vec![error(ErrorCode::Internal, e.to_string())],
            };
        }
        let Some(pipeline) = self.pipeline.as_mut() else {
            return vec![error(ErrorCode::NoHello, "send Hello first")];
        };
        let t = self.clock.unwrap_or(0.0);
        let result = match msg {
            ClientMessage::Hello { .. } => unreachable!(),
            ClientMessage::Frame(frame) => pipeline.push(frame).map(frames_to_messages),
            ClientMessage::VirtualControl {
                x,
                y,
                z,
                pinch,
                grab,
                fingers,
            } => {
                let t = self.clock.map_or(0.0, |c| c + 1.0 / NOMINAL_RATE_HZ);
                let frame = HandFrame {
                    pinch_strength: pinch,
                    grab_strength: grab,
                    fingers_extended: fingers,
                    ..HandFrame::open_palm(t, Vec3::new(x, y, z))
                };
                pipeline.push(frame).map(frames_to_messages)
            }
            ClientMessage::Trigger { stimulus } => pipeline.inject(t, stimulus).map(|fx| effects(t, fx)),
            ClientMessage::SetNavMethod { method } => pipeline.set_nav_method(t, method).map(|fx| effects(t, fx)),
        };
        match result {
            Ok(mut out) => {
                self.clock = pipeline.last_time().or(self.clock);
                out.push(ServerMessage::Snapshot {
                    state: pipeline.state().clone(),
                });
                out
            }
            Err(e) => vec![pipeline_error(e)],
        }
    }
}

fn pipeline_error(e: PipelineError) -> ServerMessage {
    let code = match &e {
        PipelineError::Gesture(GestureError::OutOfOrder { .. }) => ErrorCode::Order,
        PipelineError::Frame { .. } => ErrorCode::Range,
        _ => ErrorCode::Internal,
    };
    error(code, e.to_string())
}

fn effects(t: f64, fx: Vec<Effect>) -> Vec<ServerMessage> {
    fx.into_iter().map(|effect| ServerMessage::Effect { t, effect }).collect()
}

fn frames_to_messages(outputs: Vec<FrameOutput>) -> Vec<ServerMessage> {
    let mut out = Vec::new();
    for o in outputs {
        let t = o.events.last().map_or(o.t, |e| e.t);
        out.extend(o.events.into_iter().map(|event| ServerMessage::Event { event }));
        out.extend(effects(t, o.effects));
        if !o.focal.is_empty() {
            out.push(ServerMessage::Focal { samples: o.focal });
        }
    }
    out
}

/// Serves one upgraded connection until the peer closes it.
pub fn serve_connection(stream: TcpStream) -> Result<(), BridgeError> {
    stream.set_read_timeout(Some(HEARTBEAT))?;
    stream.set_nodelay(true)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e.into(),
        tungstenite::HandshakeError::Interrupted(_) => BridgeError::Io(io::ErrorKind::TimedOut.into()),
    })?;
    let mut session = Session::new();
    loop {
        match ws.read() {
            Ok(Message::Text(text)) => {
                for m in session.handle_text(&text) {
                    let json = serde_json::to_string(&m).expect("server messages serialize");
                    ws.send(Message::Text(json))?;
                }
            }
            Ok(Message::Binary(_)) => {
                let m = error(ErrorCode::Parse, "binary frames are not supported");
                ws.send(Message::Text(serde_json::to_string(&m).expect("server messages serialize")))?;
            }
            Ok(Message::Close(_)) | Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                ws.send(Message::Ping(Vec::new()))?;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Accepts connections forever, one thread per session.
pub fn serve(listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        thread::spawn(move || {
            let _ = serve_connection(stream);
        });
    }
    Ok(())
}

pub fn bind(addr: impl ToSocketAddrs) -> io::Result<TcpListener> {
    TcpListener::bind(addr)
}
