//! Simulated ultrasonic phased array.
//!
//! Elements are ideal monopoles: each contributes `A / r · exp(i(k r + φ))`
//! at distance `r`, with no directivity and no absorption.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::Vec3;
use crate::haptics::{EnvelopeMode, FocalSample};

pub const DEFAULT_CARRIER_HZ: f64 = 40_000.0;
pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const AM_RATE_HZ: f64 = 200.0;

/// Distances below this count as "at an element".
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticError {
    #[error("array needs at least one element")]
    NoElements,
    #[error("amplitude count {amps} does not match element count {elements}")]
    AmplitudeCount { elements: usize, amps: usize },
    #[error("carrier frequency and speed of sound must be positive")]
    Physics,
    #[error("point coincides with element {0}")]
    Singular(usize),
    #[error("phase count {phases} does not match element count {elements}")]
    PhaseCount { elements: usize, phases: usize },
    #[error("degenerate plane: {0}")]
    DegeneratePlane(String),
    #[error("samples out of order at index {0}")]
    OutOfOrder(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransducerArray {
    elements: Vec<Vec3>,
    amplitudes: Vec<f64>,
    carrier_freq: f64,
    speed_of_sound: f64,
}

impl Default for TransducerArray {
    /// 16 x 16 elements at 10 mm pitch on the `z = 0` plane.
    fn default() -> Self {
        Self::grid(16, 16, 0.01).expect("default grid is valid")
    }
}

impl TransducerArray {
    pub fn new(elements: Vec<Vec3>, amplitudes: Vec<f64>) -> Result<Self, AcousticError> {
        if elements.is_empty() {
            return Err(AcousticError::NoElements);
        }
        if amplitudes.len() != elements.len() {
            return Err(AcousticError::AmplitudeCount {
                elements: elements.len(),
                amps: amplitudes.len(),
            });
        }
        Ok(Self {
            elements,
            amplitudes,
            carrier_freq: DEFAULT_CARRIER_HZ,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        })
    }

    /// Unit-amplitude elements.
    pub fn from_positions(elements: Vec<Vec3>) -> Result<Self, AcousticError> {
        let amps = vec![1.0; elements.len()];
        Self::new(elements, amps)
    }

    /// Rectangular grid centered on the origin in the `z = 0` plane,
    /// rows along `y`, elements within a row along `x`.
    pub fn grid(nx: usize, ny: usize, pitch: f64) -> Result<Self, AcousticError> {
        let cx = (nx as f64 - 1.0) / 2.0;
        let cy = (ny as f64 - 1.0) / 2.0;
        let elements = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| Vec3::new((i as f64 - cx) * pitch, (j as f64 - cy) * pitch, 0.0)))
            .collect();
        Self::from_positions(elements)
    }

    pub fn with_physics(mut self, carrier_freq: f64, speed_of_sound: f64) -> Result<Self, AcousticError> {
        if !(carrier_freq > 0.0 && speed_of_sound > 0.0) {
            return Err(AcousticError::Physics);
        }
        self.carrier_freq = carrier_freq;
        self.speed_of_sound = speed_of_sound;
        Ok(self)
    }

    pub fn translated(&self, d: Vec3) -> Self {
        Self {
            elements: self.elements.iter().map(|e| e + d).collect(),
            ..self.clone()
        }
    }

    pub fn elements(&self) -> &[Vec3] {
        &self.elements
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn wavelength(&self) -> f64 {
        self.speed_of_sound / self.carrier_freq
    }

    pub fn wavenumber(&self) -> f64 {
        TAU * self.carrier_freq / self.speed_of_sound
    }

    fn distances(&self, q: &Vec3) -> Result<Vec<f64>, AcousticError> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let r = (q - e).norm();
                if r < SINGULAR_EPS {
                    Err(AcousticError::Singular(i))
                } else {
                    Ok(r)
                }
            })
            .collect()
    }

    /// Coherent-sum bound `Σ A_i / r_i` at `q`.
    pub fn coherent_sum(&self, q: &Vec3) -> Result<f64, AcousticError> {
        Ok(self
            .distances(q)?
            .iter()
            .zip(&self.amplitudes)
            .map(|(r, a)| a / r)
            .sum())
    }
}

/// Per-element emission phases in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSolution {
    pub phases: Vec<f64>,
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Time-of-flight focusing: every element is delayed so its wavefront
/// reaches `focal` in phase. Phases are shifted so element 0 is at zero.
pub fn solve_focus(array: &TransducerArray, focal: &Vec3) -> Result<PhaseSolution, AcousticError> {
    let k = array.wavenumber();
    let r = array.distances(focal)?;
    let r0 = r[0];
    let phases = r.iter().map(|ri| wrap_phase(k * (r0 - ri))).collect();
    Ok(PhaseSolution { phases })
}

/// Complex pressure at `q` under the monopole model.
pub fn pressure_at(array: &TransducerArray, phases: &PhaseSolution, q: &Vec3) -> Result<Complex64, AcousticError> {
    if phases.phases.len() != array.len() {
        return Err(AcousticError::PhaseCount {
            elements: array.len(),
            phases: phases.phases.len(),
        });
    }
    let k = array.wavenumber();
    let mut p = Complex64::new(0.0, 0.0);
    for (i, (e, a)) in array.elements.iter().zip(&array.amplitudes).enumerate() {
        let r = (q - e).norm();
        if r < SINGULAR_EPS {
            return Err(AcousticError::Singular(i));
        }
        p += Complex64::from_polar(a / r, k * r + phases.phases[i]);
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Axis-aligned sampling rectangle. The plane is `normal = offset`; the two
/// in-plane coordinates `(u, v)` are the remaining axes in `x, y, z` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub normal: Axis,
    pub offset: f64,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub resolution: (usize, usize),
}

impl Plane {
    /// Square patch of side `extent` centered on `center`'s projection,
    /// sampled every `spacing` meters.
    pub fn square(normal: Axis, offset: f64, center: &Vec3, extent: f64, spacing: f64) -> Self {
        let (cu, cv) = match normal {
            Axis::X => (center.y, center.z),
            Axis::Y => (center.x, center.z),
            Axis::Z => (center.x, center.y),
        };
        let n = (extent / spacing).round() as usize + 1;
        let h = spacing * (n as f64 - 1.0) / 2.0;
        Self {
            normal,
            offset,
            u_range: (cu - h, cu + h),
            v_range: (cv - h, cv + h),
            resolution: (n, n),
        }
    }

    fn point(&self, u: f64, v: f64) -> Vec3 {
        match self.normal {
            Axis::X => Vec3::new(self.offset, u, v),
            Axis::Y => Vec3::new(u, self.offset, v),
            Axis::Z => Vec3::new(u, v, self.offset),
        }
    }

    fn coords(range: (f64, f64), n: usize) -> Vec<f64> {
        let step = (range.1 - range.0) / (n as f64 - 1.0);
        (0..n).map(|i| range.0 + step * i as f64).collect()
    }

    pub fn u_coords(&self) -> Vec<f64> {
        Self::coords(self.u_range, self.resolution.0)
    }

    pub fn v_coords(&self) -> Vec<f64> {
        Self::coords(self.v_range, self.resolution.1)
    }

    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self.normal {
            Axis::X => ("y", "z"),
            Axis::Y => ("x", "z"),
            Axis::Z => ("x", "y"),
        }
    }
}

/// `|p|` sampled over a plane, row-major with one row per `v` coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub plane: Plane,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax: Vec3,
    pub max: f64,
}

impl FieldGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.u.len() + col]
    }

    /// First row: empty corner then `u` coordinates; each following row
    /// starts with its `v` coordinate.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let (un, vn) = self.plane.axis_names();
        let mut header = vec![format!("{vn}\\{un}")];
        header.extend(self.u.iter().map(|x| x.to_string()));
        w.write_record(&header)?;
        for (j, v) in self.v.iter().enumerate() {
            let mut row = vec![v.to_string()];
            row.extend((0..self.u.len()).map(|i| self.at(j, i).to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn field_grid(array: &TransducerArray, phases: &PhaseSolution, plane: &Plane) -> Result<FieldGrid, AcousticError> {
    let (nu, nv) = plane.resolution;
    if nu < 2 || nv < 2 {
        return Err(AcousticError::DegeneratePlane(format!("resolution {nu}x{nv} below 2x2")));
    }
    let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
    if !ok(plane.u_range) || !ok(plane.v_range) || !plane.offset.is_finite() {
        return Err(AcousticError::DegeneratePlane("empty or non-finite extent".into()));
    }
    let u = plane.u_coords();
    let v = plane.v_coords();
    let mut values = Vec::with_capacity(nu * nv);
    let mut best = (f64::NEG_INFINITY, Vec3::zeros());
    for &vj in &v {
        for &ui in &u {
            let q = plane.point(ui, vj);
            let mag = pressure_at(array, phases, &q)
                .map_err(|e| AcousticError::DegeneratePlane(format!("sample ({ui}, {vj}): {e}")))?
                .norm();
            if mag > best.0 {
                best = (mag, q);
            }
            values.push(mag);
        }
    }
    Ok(FieldGrid {
        plane: plane.clone(),
        u,
        v,
        values,
        argmax: best.1,
        max: best.0,
    })
}

/// 200 Hz raised-cosine on/off envelope, zero at `t = 0`.
pub fn am_envelope(t: f64) -> f64 {
    (1.0 - (TAU * AM_RATE_HZ * t).cos()) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveFrame {
    pub t: f64,
    pub phases: PhaseSolution,
    /// Normalized output level in `[0, 1]`.
    pub drive: f64,
}

/// Phases and drive level for each focal sample.
pub fn render_timeline(array: &TransducerArray, samples: &[FocalSample]) -> Result<Vec<DriveFrame>, AcousticError> {
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].t < w[0].t {
            return Err(AcousticError::OutOfOrder(i + 1));
        }
    }
    samples
        .iter()
        .map(|s| {
            let envelope = match s.envelope_mode {
                EnvelopeMode::Am200 => am_envelope(s.t),
                EnvelopeMode::Stm => 1.0,
            };
            Ok(DriveFrame {
                t: s.t,
                phases: solve_focus(array, &s.pos)?,
                drive: s.intensity * envelope,
            })
        })
        .collect()
}

/// Text dump of a drive timeline: `t drive phase_0 ... phase_n`.
pub fn write_drive(frames: &[DriveFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        let _ = write!(out, "{} {}", f.t, f.drive);
        for p in &f.phases.phases {
            let _ = write!(out, " {p}");
        }
        out.push('\n');
    }
    out
}
