//! Line-delimited trajectory files.
//!
//! One frame per line, space separated, in the fixed order
//! `t hand_present px py pz nx ny nz pinch grab f0 f1 f2 f3 f4 conf`.
//! Flags are written as `0`/`1`. Lines starting with `#` are comments.

use std::fmt::Write as _;

use super::{HandError, HandFrame, Trajectory, Vec3};

const FIELDS: usize = 16;

pub fn parse_trajectory(text: &str) -> Result<Trajectory, HandError> {
    let mut frames: Vec<HandFrame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let frame = parse_line(trimmed, line)?;
        if let Some(prev) = frames.last() {
            if frame.t <= prev.t {
                return Err(HandError::NonMonotone {
                    line,
                    t: frame.t,
                    prev: prev.t,
                });
            }
        }
        frames.push(frame);
    }
    Trajectory::new(frames)
}

fn parse_line(line_text: &str, line: usize) -> Result<HandFrame, HandError> {
    let tokens: Vec<&str> = line_text.split_whitespace().collect();
    if tokens.len() != FIELDS {
        return Err(HandError::Parse {
            line,
            msg: format!("expected {FIELDS} fields, found {}", tokens.len()),
        });
    }
    let num = |idx: usize, name: &str| -> Result<f64, HandError> {
        let v: f64 = tokens[idx].parse().map_err(|_| HandError::Parse {
            line,
            msg: format!("field {name}: not a number: {:?}", tokens[idx]),
        })?;
        if !v.is_finite() {
            return Err(HandError::Parse {
                line,
                msg: format!("field {name}: non-finite value"),
            });
        }
        Ok(v)
    };
    let flag = |idx: usize, name: &str| -> Result<bool, HandError> {
        match tokens[idx] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(HandError::Parse {
                line,
                msg: format!("field {name}: expected 0 or 1, found {other:?}"),
            }),
        }
    };

    let frame = HandFrame {
        t: num(0, "t")?,
        hand_present: flag(1, "hand_present")?,
        palm_pos: Vec3::new(num(2, "px")?, num(3, "py")?, num(4, "pz")?),
        palm_normal: Vec3::new(num(5, "nx")?, num(6, "ny")?, num(7, "nz")?),
        pinch_strength: num(8, "pinch")?,
        grab_strength: num(9, "grab")?,
        fingers_extended: [
            flag(10, "f0")?,
            flag(11, "f1")?,
            flag(12, "f2")?,
            flag(13, "f3")?,
            flag(14, "f4")?,
        ],
        confidence: num(15, "conf")?,
    };
    frame
        .check()
        .map_err(|(field, value)| HandError::Range { line, field, value })?;
    Ok(frame)
}

/// Serializes a trajectory. Floats use the shortest representation that
/// parses back to the same bits.
pub fn write_trajectory(traj: &Trajectory) -> String {
    let mut out = String::from("# t hand_present px py pz nx ny nz pinch grab f0 f1 f2 f3 f4 conf\n");
    for f in traj.frames() {
        let b = |v: bool| if v { 1 } else { 0 };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            f.t,
            b(f.hand_present),
            f.palm_pos.x,
            f.palm_pos.y,
            f.palm_pos.z,
            f.palm_normal.x,
            f.palm_normal.y,
            f.palm_normal.z,
            f.pinch_strength,
            f.grab_strength,
            b(f.fingers_extended[0]),
            b(f.fingers_extended[1]),
            b(f.fingers_extended[2]),
            b(f.fingers_extended[3]),
            b(f.fingers_extended[4]),
            f.confidence,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REC_A: &str = "0 1 0 0 0.2 0 0 -1 0 0 1 1 1 1 1 1";
    const REC_B: &str = "0.01 1 0 0 0.2 0 0 -1 0 0 1 1 1 1 1 1";

    #[test]
    fn two_records() {
        let traj = parse_trajectory(&format!("{REC_A}\n{REC_B}\n")).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.nominal_rate(), 100.0);
        assert_eq!(traj.frames()[1].t, 0.01);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let text = format!("# header\n\n{REC_A}\n   \n# mid\n{REC_B}\n");
        assert_eq!(parse_trajectory(&text).unwrap().len(), 2);
    }

    #[test]
    fn rejects_non_monotone() {
        let text = "0.02 1 0 0 0.2 0 0 -1 0 0 1 1 1 1 1 1\n0.01 1 0 0 0.2 0 0 -1 0 0 1 1 1 1 1 1\n";
        let err = parse_trajectory(text).unwrap_err();
        assert!(matches!(err, HandError::NonMonotone { line: 2, .. }));
        assert!(err.to_string().contains("non-monotone timestamp"));
    }

    #[test]
    fn rejects_strength_out_of_range() {
        let text = "0 1 0 0 0.2 0 0 -1 1.3 0 1 1 1 1 1 1\n";
        let err = parse_trajectory(text).unwrap_err();
        assert!(matches!(err, HandError::Range { field: "pinch", .. }));
        assert!(err.to_string().contains("range"));
    }

    #[test]
    fn rejects_nan_and_missing_fields() {
        assert!(parse_trajectory("0 1 0 0 NaN 0 0 -1 0 0 1 1 1 1 1 1\n").is_err());
        assert!(parse_trajectory("0 1 0 0 0.2 0 0 -1 0 0 1 1 1 1 1\n").is_err());
        assert!(parse_trajectory("0 2 0 0 0.2 0 0 -1 0 0 1 1 1 1 1 1\n").is_err());
    }

    #[test]
    fn rejects_whole_input_on_one_bad_line() {
        let text = format!("{REC_A}\n0.005 1 0 0 0.2 0 0 -1 0 0 1 1 1 1 1 7\n{REC_B}\n");
        assert!(parse_trajectory(&text).is_err());
    }

    #[test]
    fn unit_normal_only_required_when_present() {
        assert!(parse_trajectory("0 1 0 0 0.2 0 0 -2 0 0 1 1 1 1 1 1\n").is_err());
        assert!(parse_trajectory("0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n").is_ok());
    }

    fn arb_frame() -> impl Strategy<Value = HandFrame> {
        (
            -1e3f64..1e3,
            any::<bool>(),
            prop::array::uniform3(-1.0f64..1.0),
            (0.0f64..std::f64::consts::TAU, -1.0f64..1.0),
            prop::array::uniform3(0.0f64..=1.0),
            prop::array::uniform5(any::<bool>()),
        )
            .prop_map(|(t, present, p, (az, cz), s, fingers)| {
                let sz = (1.0 - cz * cz).sqrt();
                HandFrame {
                    t,
                    hand_present: present,
                    palm_pos: Vec3::new(p[0], p[1], p[2]),
                    palm_normal: Vec3::new(sz * az.cos(), sz * az.sin(), cz).normalize(),
                    pinch_strength: s[0],
                    grab_strength: s[1],
                    fingers_extended: fingers,
                    confidence: s[2],
                }
            })
    }

    proptest! {
        #[test]
        fn write_then_parse_is_bit_exact(mut frames in prop::collection::vec(arb_frame(), 1..40)) {
            frames.sort_by(|a, b| a.t.total_cmp(&b.t));
            frames.dedup_by(|a, b| a.t == b.t);
            let traj = Trajectory::new(frames).unwrap();
            let back = parse_trajectory(&write_trajectory(&traj)).unwrap();
            prop_assert_eq!(back.len(), traj.len());
            for (a, b) in traj.frames().iter().zip(back.frames()) {
                prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
                for k in 0..3 {
                    prop_assert_eq!(a.palm_pos[k].to_bits(), b.palm_pos[k].to_bits());
                    prop_assert_eq!(a.palm_normal[k].to_bits(), b.palm_normal[k].to_bits());
                }
                prop_assert_eq!(a.pinch_strength.to_bits(), b.pinch_strength.to_bits());
                prop_assert_eq!(a.grab_strength.to_bits(), b.grab_strength.to_bits());
                prop_assert_eq!(a.confidence.to_bits(), b.confidence.to_bits());
                prop_assert_eq!(a.fingers_extended, b.fingers_extended);
                prop_assert_eq!(a.hand_present, b.hand_present);
            }
        }
    }
}
