use std::f64::consts::PI;

use bdett::degradation::{Degradation, DegradationSpec};
use bdett::rng::{self, Purpose};
use bdett::sim2d::{
    cast_ray, generate_trials, run_episode, step_kinematics, Bounds, Circle, DynamicObstacle, EpisodeConfig, ExpertParams,
    ExpertPolicy, InputDegrader, RobotPose, Segment, World,
};
use bdett::verify::oracles;
use proptest::prelude::*;

fn scene() -> impl Strategy<Value = World> {
    let circle = (-8.0..8.0f64, -8.0..8.0f64, 0.1..1.5f64).prop_map(|(x, y, r)| Circle { x, y, r });
    let segment = (-8.0..8.0f64, -8.0..8.0f64, -8.0..8.0f64, -8.0..8.0f64).prop_map(|(x1, y1, x2, y2)| Segment { x1, y1, x2, y2 });
    (prop::collection::vec(circle, 0..6), prop::collection::vec(segment, 0..5)).prop_map(|(circles, segments)| World {
        bounds: Bounds { x_min: -10.0, y_min: -10.0, x_max: 10.0, y_max: 10.0 },
        circles,
        segments,
        dynamic: Vec::new(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn raycast_matches_reference_geometry(w in scene(), x in -9.9..9.9f64, y in -9.9..9.9f64, angle in -PI..PI) {
        prop_assume!(w.circles.iter().all(|c| c.surface_distance(x, y) > 1e-6));
        let (dx, dy) = (angle.cos(), angle.sin());
        let edges = w.bounds.edges();
        let want = w
            .circles
            .iter()
            .filter_map(|c| oracles::ray_circle(x, y, dx, dy, c))
            .chain(w.segments.iter().chain(&edges).filter_map(|s| oracles::ray_segment(x, y, dx, dy, s)))
            .fold(f64::INFINITY, f64::min);
        let got = cast_ray(&w, &[], x, y, angle);
        prop_assert!((got - want).abs() <= 1e-9, "got {} want {}", got, want);
    }

    #[test]
    fn kinematics_matches_fine_integration(
        x in -9.0..9.0f64, y in -9.0..9.0f64, h in -3.0..3.0f64,
        vl in -0.5..0.5f64, vr in -0.5..0.5f64,
    ) {
        let start = RobotPose::at(x, y, h);
        let p = step_kinematics(&start, vl, vr, 0.1, 0.3);
        let (ox, oy, _) = oracles::kinematics(x, y, start.heading, vl, vr, 0.1, 0.3, 1000);
        prop_assert!((p.x - ox).abs() <= 1e-6 && (p.y - oy).abs() <= 1e-6);
        let travelled = (p.x - x).hypot(p.y - y);
        prop_assert!(travelled <= 0.5 * (vl + vr).abs() * 0.1 + 1e-12);
    }

    #[test]
    fn dynamic_obstacles_shuttle_along_their_path(
        ax in -8.0..8.0f64, ay in -8.0..8.0f64, bx in -8.0..8.0f64, by in -8.0..8.0f64,
        speed in 0.0..0.5f64, step in 0u64..10_000,
    ) {
        let d = DynamicObstacle { ax, ay, bx, by, speed, r: 0.3 };
        let w = World { dynamic: vec![d], ..World::empty() };
        let c = w.dynamic_at(step, 0.1)[0];
        let (ex, ey) = oracles::shuttle(ax, ay, bx, by, speed, step as f64 * 0.1);
        prop_assert!((c.x - ex).abs() <= 1e-9 && (c.y - ey).abs() <= 1e-9);
        prop_assert_eq!(c.r, 0.3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn episodes_replay_identically(seed in any::<u64>(), sigma in 0.0..1.0f64) {
        let w = World::default_world();
        let trials = generate_trials(&w, 2, seed).unwrap();
        prop_assert_eq!(&trials, &generate_trials(&w, 2, seed).unwrap());
        let cfg = EpisodeConfig { max_steps: 200, ..EpisodeConfig::default() };
        let spec = DegradationSpec::new(Degradation::GaussInput { sigma, clip_lo: 0.2, clip_hi: 6.0 }, seed);
        let run = |t| {
            let mut inputs = [InputDegrader { spec: spec.clone(), rng: rng::stream(seed, Purpose::InputNoise, 0) }];
            let mut policy = ExpertPolicy { params: ExpertParams::default() };
            run_episode(&w, &mut policy, t, &cfg, &mut inputs, &mut rng::stream(seed, Purpose::Eval, 0)).unwrap()
        };
        for t in &trials {
            let a = run(t);
            let b = run(t);
            prop_assert_eq!(a.outcome, b.outcome);
            prop_assert_eq!(a.steps, b.steps);
            prop_assert!(a.steps <= cfg.max_steps);
        }
    }
}
