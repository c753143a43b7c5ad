mod common;

use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stroke_core::agent::{select_min_norm, ReplayBuffer, Transition};
use stroke_core::contact::{contact_slip, impact, SurfaceParams};
use stroke_core::env::{
    observe, reward, ActionBounds, EpisodeOutcome, HitState, NoiseConfig, StateRanges, StrokeAction, StrokeEnv,
    HITTING_PLANE_X,
};
use stroke_core::eval::distance_error;
use stroke_core::nn::Activation;
use stroke_core::physics::{drag_force, integrate_for, magnus_force, step, BallParams, BallState};
use stroke_core::vec3::Vec3;

fn vec3(range: f64) -> impl Strategy<Value = Vec3<f64>> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn ball() -> BallParams<f64> {
    BallParams::standard()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn drag_opposes_velocity(v in vec3(20.0)) {
        prop_assume!(v.norm() > 1e-6);
        let f = drag_force(v, &ball());
        prop_assert!(f.dot(v) < 0.0);
        prop_assert!(f.cross(v).norm() <= 1e-12 * f.norm() * v.norm());
    }

    #[test]
    fn magnus_is_orthogonal(v in vec3(20.0), w in vec3(400.0)) {
        let f = magnus_force(v, w, &ball());
        let tol = 1e-12 * f.norm().max(1e-300);
        prop_assert!(f.dot(v).abs() <= tol * v.norm());
        prop_assert!(f.dot(w).abs() <= tol * w.norm());
    }

    #[test]
    fn step_keeps_spin(v in vec3(10.0), w in vec3(300.0)) {
        let s = BallState::new(0.0, Vec3::zero(), v, w);
        prop_assert_eq!(step(&s, 1e-3, &ball()).unwrap().w, w);
    }

    #[test]
    fn drag_alone_dissipates(v in vec3(10.0), w in vec3(300.0)) {
        let params = ball().with_gravity(0.0).with_aero(0.4, 0.0);
        let mut s = BallState::new(0.0, Vec3::zero(), v, w);
        let mut e = s.kinetic_energy(&params);
        for _ in 0..100 {
            s = step(&s, 1e-3, &params).unwrap();
            let e2 = s.kinetic_energy(&params);
            prop_assert!(e2 <= e);
            e = e2;
        }
    }

    #[test]
    fn halving_the_step_barely_moves_the_endpoint(v in vec3(6.0), w in vec3(200.0)) {
        let s = BallState::new(0.0, Vec3::new(0.0, 0.0, 1.0), v, w);
        let a = integrate_for(&s, &ball(), 0.5, 1e-3).unwrap();
        let b = integrate_for(&s, &ball(), 0.5, 5e-4).unwrap();
        prop_assert!(a.p.max_abs_diff(b.p) < 1e-8);
    }

    #[test]
    fn impacts_conserve_or_lose_energy(
        v in vec3(8.0),
        w in vec3(300.0),
        n in vec3(1.0),
        kappa in 0.05f64..=1.0,
        mu in 0.0f64..2.0,
    ) {
        prop_assume!(n.norm() > 1e-3);
        let n = n.normalized().unwrap();
        prop_assume!(v.dot(n) < -1e-6);
        let surface = SurfaceParams::new(kappa, mu).unwrap();
        let s = BallState::new(0.0, Vec3::zero(), v, w);
        let hit = impact(&s, n, Vec3::zero(), &surface, &ball()).unwrap();
        let before = s.kinetic_energy(&ball());
        let after = hit.state.kinetic_energy(&ball());
        prop_assert!(after <= before * (1.0 + 1e-12));
        // restitution along the normal
        prop_assert!((hit.state.v.dot(n) + kappa * v.dot(n)).abs() <= 1e-12 * v.norm().max(1.0));
        // friction cone
        prop_assert!(hit.tangential_impulse <= mu * hit.normal_impulse * (1.0 + 1e-12));
        if hit.sticking {
            prop_assert!(contact_slip(&hit.state, n, Vec3::zero(), &ball()).norm() < 1e-9);
        }
    }

    #[test]
    fn impacts_are_frame_invariant(v in vec3(8.0), w in vec3(300.0), vs in vec3(3.0)) {
        let n = Vec3::new(0.0, 0.0, 1.0);
        prop_assume!((v - vs).dot(n) < -1e-6);
        let racket = SurfaceParams::racket();
        let moving = impact(&BallState::new(0.0, Vec3::zero(), v, w), n, vs, &racket, &ball()).unwrap();
        let still = impact(&BallState::new(0.0, Vec3::zero(), v - vs, w), n, Vec3::zero(), &racket, &ball()).unwrap();
        prop_assert!((moving.state.v - vs).max_abs_diff(still.state.v) < 1e-12);
        prop_assert!(moving.state.w.max_abs_diff(still.state.w) < 1e-9);
    }

    #[test]
    fn reward_is_bounded_and_monotone(
        dx in 0.0f64..2.0, dy in 0.0f64..0.7, dh in 0.0f64..1.0, extra in 1e-3f64..0.5,
    ) {
        let target = [2.55, 0.0];
        let near = reward(&EpisodeOutcome::landed([2.55 + dx, dy], 0.173 + dh), target);
        let far_x = reward(&EpisodeOutcome::landed([2.55 + dx + extra, dy], 0.173 + dh), target);
        let far_y = reward(&EpisodeOutcome::landed([2.55 + dx, dy + extra], 0.173 + dh), target);
        let far_h = reward(&EpisodeOutcome::landed([2.55 + dx, dy], 0.173 + dh + extra), target);
        for r in [near, far_x, far_y, far_h] {
            for c in r.to_array() {
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
        prop_assert!(far_x.x < near.x && far_x.y == near.y && far_x.h == near.h);
        prop_assert!(far_y.y < near.y && far_y.x == near.x);
        prop_assert!(far_h.h < near.h && far_h.x == near.x);
    }

    #[test]
    fn action_scaling_round_trips(a in prop::array::uniform3(-1.0f64..=1.0)) {
        let bounds = ActionBounds::default();
        let phys = StrokeAction::from_unit(a, &bounds);
        prop_assert!((0.0..=2.0).contains(&phys.speed));
        prop_assert!(phys.beta.abs() <= 50f64.to_radians() + 1e-15);
        prop_assert!(phys.gamma.abs() <= 50f64.to_radians() + 1e-15);
        let back = phys.to_unit(&bounds);
        for i in 0..3 {
            prop_assert!((back[i] - a[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_observation_inverts(u in prop::array::uniform8(0.0f64..=1.0), seed in any::<u64>()) {
        let env = StrokeEnv::default();
        let r = StateRanges::training();
        let pick = |range: stroke_core::env::Range, t: f64| range.lo + t * (range.hi - range.lo);
        let hit = HitState {
            p: Vec3::new(HITTING_PLANE_X, pick(r.p_y, u[0]), pick(r.p_z, u[1])),
            v: Vec3::new(pick(r.v_x, u[2]), pick(r.v_y, u[3]), pick(r.v_z, u[4])),
            w: Vec3::new(pick(r.w_x, u[5]), pick(r.w_y, u[6]), pick(r.w_z, u[7])),
            target: env.target,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = observe(&hit, &NoiseConfig::NONE, env.scale(), &mut rng);
        prop_assert!(obs.iter().all(|o| (-1.0..=1.0).contains(o)));
        let back = env.scale().denormalize(&obs);
        prop_assert!(back.p.max_abs_diff(hit.p) < 1e-9);
        prop_assert!(back.v.max_abs_diff(hit.v) < 1e-9);
        prop_assert!(back.w.max_abs_diff(hit.w) < 1e-9);
    }

    #[test]
    fn min_norm_selection_picks_smaller(q1 in prop::array::uniform3(-2.0f64..2.0), q2 in prop::array::uniform3(-2.0f64..2.0)) {
        let a = Array2::from_shape_vec((1, 3), q1.to_vec()).unwrap();
        let b = Array2::from_shape_vec((1, 3), q2.to_vec()).unwrap();
        let (sel, _) = select_min_norm(a.view(), Some(b.view()));
        let norm = |q: &[f64]| q.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert_eq!(norm(sel.row(0).as_slice().unwrap()), norm(&q1).min(norm(&q2)));
    }

    #[test]
    fn replay_buffer_is_bounded(cap in 1usize..50, pushes in 0usize..200) {
        let mut buf = ReplayBuffer::new(cap);
        for i in 0..pushes {
            buf.push(Transition { observation: vec![i as f64], action: [0.0; 3], reward: vec![0.0] });
        }
        prop_assert_eq!(buf.len(), pushes.min(cap));
        let oldest_kept = pushes.saturating_sub(cap);
        prop_assert!(buf.iter().all(|t| t.observation[0] >= oldest_kept as f64));
    }

    #[test]
    fn distance_error_improves_with_any_closer_landing(
        dists in prop::collection::vec(0.0f64..1.5, 1..20),
        which in any::<prop::sample::Index>(),
        shrink in 0.01f64..1.0,
    ) {
        let target = [2.55, 0.0];
        let outcomes: Vec<EpisodeOutcome> =
            dists.iter().map(|d| EpisodeOutcome::landed([2.55 + d, 0.0], 0.2)).collect();
        let i = which.index(dists.len());
        prop_assume!(dists[i] > 1e-6);
        let mut closer = outcomes.clone();
        closer[i] = EpisodeOutcome::landed([2.55 + dists[i] * (1.0 - shrink), 0.0], 0.2);
        prop_assert!(distance_error(&closer, target) < distance_error(&outcomes, target));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), tanh in any::<bool>()) {
        let out = if tanh { Activation::Tanh } else { Activation::Linear };
        common::gradient_check(seed, out).map_err(TestCaseError::fail)?;
    }
}
