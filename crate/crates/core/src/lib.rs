//! Simulation of a mid-air haptic, gesture-controlled in-vehicle infotainment
//! system.
//!
//! The pipeline runs hand-tracking frames through a gesture recognizer, feeds
//! the resulting events into the infotainment state machine, and renders the
//! emitted haptic sensations as focal-point timelines on a simulated
//! ultrasonic phased array.
//!
//! ```
//! use ivis_sim::gesture::{Recognizer, RecognizerConfig};
//! use ivis_sim::hand::{synth_gesture, derive_kinematics, SynthKind, Vec3};
//!
//! let traj = synth_gesture(&SynthKind::Tap, 0.0, Vec3::new(0.0, 0.0, 0.2)).unwrap();
//! let kin = derive_kinematics(&traj).unwrap();
//! let mut rec = Recognizer::new(RecognizerConfig::default());
//! let events: Vec<_> = traj
//!     .frames()
//!     .iter()
//!     .zip(kin.iter())
//!     .flat_map(|(f, k)| rec.step(f, k).unwrap())
//!     .collect();
//! assert_eq!(events.len(), 1);
//! ```

pub mod acoustic;
pub mod gesture;
pub mod hand;
pub mod harness;
pub mod haptics;
pub mod ivis;
pub mod pipeline;

pub use nalgebra;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hand-frames.md")]
    mod hand_frames {}
    #[doc = include_str!("../../../book/src/gestures.md")]
    mod gestures {}
    #[doc = include_str!("../../../book/src/haptics.md")]
    mod haptics {}
    #[doc = include_str!("../../../book/src/acoustics.md")]
    mod acoustics {}
    #[doc = include_str!("../../../book/src/infotainment.md")]
    mod infotainment {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
