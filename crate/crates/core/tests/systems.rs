use hysst::hybrid::{inflate, validate_solution};
use hysst::planner::{
    hysst_plan, AuxiliaryClockCost, CostFunctional, HybridTimeCost, PlannerConfig,
};
use hysst::simulation::{integrate_flow, jump_pair, IntegratorConfig, Propagator};
use hysst::systems::{
    auxiliary_extension, bouncing_ball_problem, bouncing_ball_system, by_name, impact_velocity,
    multicopter_problem, multicopter_system, wall_contact, BouncingBallParams, MulticopterParams,
    Rect, WallContact, SYSTEM_NAMES,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ball_maps() {
    let sys = bouncing_ball_system(&BouncingBallParams::default());
    assert_eq!(sys.flow(&[15.0, 0.0], &[3.0]), vec![0.0, -9.81]);
    assert_eq!(sys.flow(&[2.0, -4.0], &[0.0]), vec![-4.0, -9.81]);
    assert_eq!(sys.jump(&[0.0, -10.0], &[1.0]), vec![0.0, 9.0]);
    assert!(sys.jump_set.contains(&[0.0, -1.0], &[0.0]));
    assert!(!sys.jump_set.contains(&[0.0, -1.0], &[-0.5]));
    assert!(!sys.jump_set.contains(&[0.5, -1.0], &[0.0]));
    assert!(sys.flow_set.contains(&[0.0, 3.0], &[0.0]));
    assert!(!sys.flow_set.contains(&[-0.1, 3.0], &[0.0]));
}

#[test]
fn inflated_ball_flow_set_reaches_below_ground() {
    let sys = bouncing_ball_system(&BouncingBallParams::default());
    for delta in [1e-3, 0.1, 2.0] {
        let inflated = inflate(&sys, delta).unwrap();
        assert!(inflated.flow_set.contains(&[-delta / 2.0, 1.0], &[0.0]));
        assert!(!inflated.flow_set.contains(&[-2.0 * delta, 1.0], &[0.0]));
        assert!(inflated.jump_set.contains(&[delta / 2.0, -1.0], &[0.0]));
    }
    assert!(inflate(&sys, 0.0).is_err());
}

#[test]
fn clocks_track_flow_time_and_jumps() {
    let base = bouncing_ball_problem(&BouncingBallParams::default());
    let ext = auxiliary_extension(&base);
    let sys = &ext.system;
    assert_eq!(sys.state_dim, 4);
    let cfg = IntegratorConfig::default();
    let psi = integrate_flow(sys, &[15.0, 0.0, 0.0, 0.0], &[0.0], 1.0, &cfg).unwrap();
    let x = psi.state().terminal();
    assert!((x[2] - 1.0).abs() < 1e-12);
    assert_eq!(x[3], 0.0);
    let post = sys.jump(&[0.0, -3.0, 2.0, 0.0], &[1.0]);
    assert_eq!(post[2..], [2.0, 1.0]);
    assert!((post[1] - 3.4).abs() < 1e-12);
    assert!((ext.initial_set.contains)(&[15.0, 0.0, 0.0, 0.0]));
    assert!(!(ext.initial_set.contains)(&[15.0, 0.0, 0.5, 0.0]));
}

#[test]
fn clock_cost_equals_hybrid_time_on_generated_arcs() {
    let p = BouncingBallParams::default();
    let ext = auxiliary_extension(&bouncing_ball_problem(&p));
    let lib = p.input_library(1.0);
    let cfg = IntegratorConfig::default();
    let clock = AuxiliaryClockCost { offset: 2 };
    let prop = Propagator {
        system: &ext.system,
        library: &lib,
        unsafe_set: &ext.unsafe_set,
        cost: &clock,
        integrator: &cfg,
        flow_probability: 0.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut n = 0;
    for _ in 0..2000 {
        let x = if n % 3 == 0 {
            ext.system.jump_proj.sample(&mut rng)
        } else {
            ext.system.flow_proj.sample(&mut rng)
        };
        let Ok(r) = prop.new_state(&x, 0.0, &mut rng) else {
            continue;
        };
        let arc = r.psi.state();
        assert!((clock.evaluate(arc) - HybridTimeCost.evaluate(arc)).abs() < 1e-9);
        n += 1;
    }
    assert!(n > 1000);
}

#[test]
fn clock_extended_plan_costs_its_hybrid_time() {
    let p = BouncingBallParams::default();
    let ext = auxiliary_extension(&bouncing_ball_problem(&p));
    let lib = p.input_library(p.default_flow_duration());
    let cfg = PlannerConfig {
        seed: 1,
        ..p.default_planner_config()
    };
    let r = hysst_plan(&ext, &lib, p.default_integrator(), cfg).unwrap();
    let plan = r.best.expect("plan found");
    let end = plan.psi.state().terminal();
    let hybrid_time = HybridTimeCost.evaluate(plan.psi.state());
    assert!((plan.cost - hybrid_time).abs() < 1e-9);
    assert!((end[2] + end[3] - hybrid_time).abs() < 1e-9);
    assert_eq!(end[3] as usize, plan.psi.domain().jumps());
}

#[test]
fn multicopter_maps() {
    let params = MulticopterParams::default();
    let sys = multicopter_system(&params);
    let x = [1.0, 2.0, 0.3, -0.4, 0.5, 0.6];
    assert_eq!(
        sys.flow(&x, &[0.7, -0.8]),
        vec![0.3, -0.4, 0.5, 0.6, 0.7, -0.8]
    );

    // right face of the lower wall has normal +x
    let pre = [3.0, 1.0, -1.0, 2.0, 0.9, -0.9];
    assert!(sys.jump_set.contains(&pre, &[0.0, 0.0]));
    let post = sys.jump(&pre, &[0.0, 0.0]);
    let expected_t = 2.0 - 0.20 * (-0.43 - 1.0) * (2.0f64 / -1.0).atan();
    assert_eq!(post[..2], pre[..2]);
    assert!((post[2] - 0.43).abs() < 1e-15);
    assert!((post[3] - expected_t).abs() < 1e-15);
    assert!((post[3] - 1.6834).abs() < 1e-4);
    assert_eq!(post[4..], [0.0, 0.0]);

    // moving away from the face
    assert!(!sys
        .jump_set
        .contains(&[3.0, 1.0, 0.5, 0.0, 0.0, 0.0], &[0.0, 0.0]));
    assert!(!sys
        .jump_set
        .contains(&[1.0, 1.0, -1.0, 0.0, 0.0, 0.0], &[0.0, 0.0]));
    assert!(!sys
        .flow_set
        .contains(&[2.75, 1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 0.0]));
    assert!(sys
        .flow_set
        .contains(&[2.5, 1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 0.0]));
}

#[test]
fn contact_frames() {
    let walls = MulticopterParams::default().walls;
    let left = wall_contact(&walls, &[2.5, 1.0], 1e-9).unwrap();
    assert_eq!(
        (left.wall, left.normal, left.tangent),
        (0, [-1.0, 0.0], [0.0, 1.0])
    );
    let top = wall_contact(&walls, &[2.7, 2.6], 1e-9).unwrap();
    assert_eq!((top.wall, top.normal), (0, [0.0, 1.0]));
    let upper = wall_contact(&walls, &[2.7, 3.6], 1e-9).unwrap();
    assert_eq!((upper.wall, upper.normal), (1, [0.0, -1.0]));
    // a corner resolves to the x-face of the lower wall
    let corner = wall_contact(&walls, &[2.5, 2.6], 1e-9).unwrap();
    assert_eq!((corner.wall, corner.normal), (0, [-1.0, 0.0]));
    assert!(wall_contact(&walls, &[1.0, 2.0], 1e-9).is_none());
}

#[test]
fn grazing_impact_keeps_tangential_speed() {
    let c = WallContact {
        wall: 0,
        normal: [0.0, 1.0],
        tangent: [1.0, 0.0],
    };
    assert_eq!(impact_velocity(&c, [1.5, 0.0], 0.43, 0.2), [1.5, 0.0]);
}

fn face_point(walls: &[Rect], face: usize, s: f64) -> [f64; 2] {
    let w = walls[face / 4];
    match face % 4 {
        0 => [w.x_min, w.y_min + s * (w.y_max - w.y_min)],
        1 => [w.x_max, w.y_min + s * (w.y_max - w.y_min)],
        2 => [w.x_min + s * (w.x_max - w.x_min), w.y_min],
        _ => [w.x_min + s * (w.x_max - w.x_min), w.y_max],
    }
}

proptest! {
    #[test]
    fn frames_round_trip_and_impacts_reflect_exactly(
        face in 0usize..8, s in 0.0f64..=1.0, vx in -3.0f64..3.0, vy in -3.0f64..3.0,
    ) {
        let params = MulticopterParams::default();
        let p = face_point(&params.walls, face, s);
        let c = wall_contact(&params.walls, &p, 1e-9).unwrap();
        let back = c.from_frame(c.to_frame([vx, vy]));
        prop_assert_eq!(back, [vx, vy]);
        let [v_n, v_t] = c.to_frame([vx, vy]);
        let post = impact_velocity(&c, [vx, vy], params.e, params.kappa);
        prop_assert_eq!(c.to_frame(post)[0], -params.e * v_n);
        if v_n < 0.0 {
            // friction slows the tangential motion without reversing it
            let t_post = c.to_frame(post)[1];
            prop_assert!(t_post.abs() <= v_t.abs() + 1e-12);
            prop_assert!(t_post * v_t >= 0.0);
        }
    }

    #[test]
    fn samplers_stay_in_their_sets(seed in 0u64..1_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ball = bouncing_ball_system(&BouncingBallParams::default());
        let c = ball.flow_proj.sample(&mut rng);
        prop_assert!(ball.flow_set.contains(&c, &[0.0]));
        let d = ball.jump_proj.sample(&mut rng);
        prop_assert!(ball.jump_set.contains(&d, &[0.0]));

        let params = MulticopterParams::default();
        let copter = multicopter_system(&params);
        let c = copter.flow_proj.sample(&mut rng);
        prop_assert!(copter.flow_set.contains(&c, &[0.0, 0.0]));
        for (k, (lo, hi)) in copter.bounding_box.iter().enumerate() {
            prop_assert!(c[k] >= *lo && c[k] <= *hi);
        }
        let d = copter.jump_proj.sample(&mut rng);
        prop_assert!(copter.jump_set.contains(&d, &[0.0, 0.0]));
        let post = copter.jump(&d, &[0.0, 0.0]);
        let contact = wall_contact(&params.walls, &d, 1e-6).unwrap();
        prop_assert!(contact.to_frame([post[2], post[3]])[0] > 0.0);

        let ext = auxiliary_extension(&bouncing_ball_problem(&BouncingBallParams::default()));
        let x = ext.system.flow_proj.sample(&mut rng);
        prop_assert!((0.0..=10.0).contains(&x[2]) && x[3].fract() == 0.0 && x[3] <= 5.0);
    }

    #[test]
    fn wall_jumps_validate(seed in 0u64..1_000) {
        let params = MulticopterParams::default();
        let copter = multicopter_system(&params);
        let d = copter.jump_proj.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let psi = jump_pair(&copter, &d, &[0.0, 0.0]).unwrap();
        prop_assert!(validate_solution(&copter, &psi, 1e-9).is_valid());
    }
}

#[test]
fn lookup_by_name() {
    for name in SYSTEM_NAMES {
        let b = by_name(name, None, None).unwrap();
        assert_eq!(b.name, name);
        assert!(b.planner.validate().is_ok());
    }
    assert_eq!(by_name("multicopter", None, None).unwrap().walls.len(), 2);
    assert!(by_name("pendulum", None, None).is_err());
    let v = serde_json::json!({"lambda": 0.5});
    let b = by_name("bouncing_ball", Some(&v), Some(0.25)).unwrap();
    assert_eq!(b.library.max_flow_duration, 0.25);
    assert_eq!(b.problem.system.jump(&[0.0, -2.0], &[0.0]), vec![0.0, 1.0]);
    for bad in [
        serde_json::json!({"lambda": 1.5}),
        serde_json::json!({"colour": 1}),
    ] {
        assert!(by_name("bouncing_ball", Some(&bad), None).is_err());
    }
    assert!(by_name("bouncing_ball", None, Some(0.0)).is_err());
    let walls =
        serde_json::json!({"walls": [{"x_min": 7.0, "x_max": 8.0, "y_min": 0.0, "y_max": 1.0}]});
    assert!(by_name("multicopter", Some(&walls), None).is_err());
}

#[test]
fn multicopter_problem_sets() {
    let params = MulticopterParams::default();
    let problem = multicopter_problem(&params);
    assert!((problem.initial_set.contains)(&[
        1.0, 2.0, 0.0, 0.0, 0.0, 0.0
    ]));
    assert_eq!(
        problem.final_set.distance(&[5.0, 4.0, 1.0, 1.0, 1.0, 1.0]),
        0.0
    );
    assert!((problem.final_set.distance(&[5.3, 4.4, 0.0, 0.0, 0.0, 0.0]) - 0.5).abs() < 1e-12);
    let u = [0.0, 0.0];
    assert!(problem
        .unsafe_set
        .contains(&[2.75, 1.0, 0.0, 0.0, 0.0, 0.0], &u));
    assert!(problem
        .unsafe_set
        .contains(&[6.0, 1.0, 0.0, 0.0, 0.0, 0.0], &u));
    assert!(!problem
        .unsafe_set
        .contains(&[2.5, 1.0, 0.0, 0.0, 0.0, 0.0], &u));
    assert!(!problem
        .unsafe_set
        .contains(&[2.75, 3.0, 0.0, 0.0, 0.0, 0.0], &u));
}
