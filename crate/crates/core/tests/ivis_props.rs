use proptest::prelude::*;

use ivis_sim::hand::SwipeDirection;
use ivis_sim::gesture::GestureKind;
use ivis_sim::haptics::Sensation;
use ivis_sim::ivis::{adjust_value, dispatch, inject, set_nav_method, Effect, IvisConfig, IvisState, Mode, NavMethod, Stimulus};

#[derive(Debug, Clone)]
enum Input {
    Gesture(GestureKind),
    Stim(Stimulus),
    Nav(NavMethod),
}

fn input() -> impl Strategy<Value = Input> {
    let disp = -0.2..0.2f64;
    prop_oneof![
        Just(Input::Gesture(GestureKind::Tap)),
        Just(Input::Gesture(GestureKind::Twist)),
        Just(Input::Gesture(GestureKind::GrabRelease)),
        Just(Input::Gesture(GestureKind::Swipe {
            direction: SwipeDirection::Right
        })),
        Just(Input::Gesture(GestureKind::PinchEngage)),
        Just(Input::Gesture(GestureKind::PinchRelease)),
        (0u8..6).prop_map(|count| Input::Gesture(GestureKind::FingerPose { count })),
        (disp.clone(), disp.clone(), disp).prop_map(|(dx, dy, dz)| Input::Gesture(GestureKind::PinchMove { dx, dy, dz })),
        prop_oneof![
            Just(Stimulus::IncomingCall),
            Just(Stimulus::RouteSuggestion),
            Just(Stimulus::CallerHangup)
        ]
        .prop_map(Input::Stim),
        prop_oneof![Just(NavMethod::FingerPose), Just(NavMethod::Radial3D)].prop_map(Input::Nav),
    ]
}

fn apply(s: &IvisState, i: &Input) -> (IvisState, Vec<Effect>) {
    match i {
        Input::Gesture(g) => dispatch(&IvisConfig::default(), s, g),
        Input::Stim(st) => inject(s, *st),
        Input::Nav(m) => set_nav_method(s, *m),
    }
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![
        Just(Mode::Media),
        Just(Mode::Temperature),
        Just(Mode::Fan),
        Just(Mode::Navigation)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn invariants_hold_along_any_input_sequence(inputs in prop::collection::vec(input(), 0..60)) {
        let mut s = IvisState::default();
        for i in &inputs {
            let (next, fx) = apply(&s, i);
            prop_assert_eq!(apply(&s, i), (next.clone(), fx.clone()), "dispatch is deterministic");
            if let Err(e) = next.check() {
                return Err(TestCaseError::fail(format!("{e} after {i:?}")));
            }
            if s.modal.is_some() {
                prop_assert_eq!(next.mode, s.mode);
                prop_assert_eq!(next.media, s.media);
                prop_assert_eq!(next.temperature, s.temperature);
                prop_assert_eq!(next.fan, s.fan);
            }
            s = next;
        }
    }

    #[test]
    fn clutching_composes(m in mode(), dz1 in -0.1..0.1f64, dz2 in -0.1..0.1f64) {
        let mut s = IvisState::default();
        s.mode = m;
        let v0 = s.value(m);
        let cfg = IvisConfig::default();
        for dz in [dz1, dz2] {
            for ev in [GestureKind::PinchEngage, GestureKind::PinchMove { dx: 0.0, dy: 0.0, dz }, GestureKind::PinchRelease] {
                s = dispatch(&cfg, &s, &ev).0;
            }
        }
        let expected = adjust_value(m, adjust_value(m, v0, dz1).unwrap(), dz2).unwrap();
        prop_assert_eq!(s.value(m), expected);
    }

    #[test]
    fn adjust_stays_in_range_and_is_idempotent_at_bounds(m in mode(), v in 0.0..1.0f64, dz in -1.0..1.0f64) {
        let (lo, hi) = match m {
            Mode::Media => (0.0, 100.0),
            Mode::Temperature => (16.0, 26.0),
            Mode::Fan => (1.0, 5.0),
            Mode::Navigation => (1.0, 10.0),
        };
        let start = adjust_value(m, lo + v * (hi - lo), 0.0).unwrap();
        let out = adjust_value(m, start, dz).unwrap();
        prop_assert!((lo..=hi).contains(&out));
        prop_assert_eq!(adjust_value(m, out, 0.0).unwrap(), out);
        if dz > 0.0 {
            prop_assert!(out >= start);
        } else {
            prop_assert!(out <= start);
        }
    }

    #[test]
    fn value_haptic_level_tracks_state(m in mode(), dz in -0.1..0.1f64) {
        let cfg = IvisConfig::default();
        let mut s = IvisState::default();
        s.mode = m;
        s = dispatch(&cfg, &s, &GestureKind::PinchEngage).0;
        let (next, fx) = dispatch(&cfg, &s, &GestureKind::PinchMove { dx: 0.0, dy: 0.0, dz });
        for e in fx {
            if let Effect::HapticTrigger { sensation: Sensation::ValueCircle { level } } = e {
                prop_assert!((0.0..=1.0).contains(&level));
                prop_assert_eq!(level, next.level(m));
            }
        }
    }
}

#[test]
fn fan_at_ceiling_stays_at_five() {
    let mut s = IvisState::default();
    s.mode = Mode::Fan;
    s.fan = 5;
    let cfg = IvisConfig::default();
    for ev in [
        GestureKind::PinchEngage,
        GestureKind::PinchMove { dx: 0.0, dy: 0.0, dz: 0.10 },
        GestureKind::PinchRelease,
    ] {
        s = dispatch(&cfg, &s, &ev).0;
    }
    assert_eq!(s.fan, 5);
}

#[test]
fn finger_pose_ignored_under_radial_navigation() {
    let s = IvisState::with_nav_method(NavMethod::Radial3D);
    let (next, fx) = dispatch(&IvisConfig::default(), &s, &GestureKind::FingerPose { count: 2 });
    assert_eq!(next, s);
    assert!(fx.is_empty());
}
