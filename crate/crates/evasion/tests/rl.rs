//! Agent-level tests: action squashing and the speed deadband, analytic
//! gradients against central finite differences, target-network tracking,
//! temperature adaptation, checkpoint fidelity, and a tiny deterministic
//! end-to-end training run.

use rand::Rng;

use evasion::env::WorldConfig;
use evasion::rl::{
    action_to_command, obs_dim_for, train_evader, ReplayBuffer, SacAgent, SacCheckpoint,
    SacConfig, TrainBudget, TrainMode, Transition, ACT_DIM, SPEED_DEADBAND,
};
use evasion::util::{derive_seed, rng_from_seed};

fn prisoner() -> WorldConfig {
    WorldConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/prisoner.json"))
        .expect("prisoner config loads")
}

/// Small agent plus a replay buffer of random transitions, deterministic in
/// `seed`. Sized so finite-difference sweeps stay fast.
fn small_setup(seed: u64, obs_dim: usize, batch: usize) -> (SacAgent, ReplayBuffer) {
    let mut cfg = SacConfig::new(obs_dim);
    cfg.hidden = vec![12, 12];
    cfg.batch_size = batch;
    cfg.replay_capacity = 4096;
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let agent = SacAgent::new(cfg, &mut rng).expect("valid config");

    let mut data_rng = rng_from_seed(derive_seed(seed, 1));
    let mut replay = ReplayBuffer::new(4096);
    for k in 0..(batch * 4) {
        let obs: Vec<f64> = (0..obs_dim).map(|_| data_rng.gen_range(-1.0..1.0)).collect();
        let next_obs: Vec<f64> = (0..obs_dim).map(|_| data_rng.gen_range(-1.0..1.0)).collect();
        replay.push(Transition {
            obs,
            action: [data_rng.gen_range(-0.99..0.99), data_rng.gen_range(-0.99..0.99)],
            reward: data_rng.gen_range(-2.0..2.0),
            next_obs,
            done: k % 7 == 0,
        });
    }
    (agent, replay)
}

/// Relative agreement with an absolute floor for near-zero pairs.
fn grads_agree(analytic: f64, fd: f64, rel_tol: f64) -> bool {
    let denom = analytic.abs().max(fd.abs());
    denom < 1e-8 || (analytic - fd).abs() / denom < rel_tol
}

#[test]
fn actions_stay_inside_the_open_unit_box() {
    let (agent, _) = small_setup(3, 9, 16);
    let mut rng = rng_from_seed(42);
    for _ in 0..200 {
        let obs: Vec<f64> = (0..9).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let u = agent.act(&obs, false, &mut rng);
        for k in 0..ACT_DIM {
            assert!(u[k] > -1.0 && u[k] < 1.0, "sampled action escaped the box: {u:?}");
        }
    }
}

#[test]
fn deterministic_act_is_the_squashed_actor_mean() {
    let (agent, _) = small_setup(4, 7, 16);
    let mut rng = rng_from_seed(1);
    let obs: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let head = agent.actor.forward(&obs);
    let u1 = agent.act(&obs, true, &mut rng);
    let u2 = agent.act(&obs, true, &mut rng);
    assert_eq!(u1, u2, "deterministic action must not consume randomness");
    for k in 0..ACT_DIM {
        assert!((u1[k] - head[k].tanh()).abs() < 1e-15);
    }
    // Stochastic actions from different rng states differ.
    let s1 = agent.act(&obs, false, &mut rng);
    let s2 = agent.act(&obs, false, &mut rng);
    assert_ne!(s1, s2);
}

#[test]
fn speed_deadband_makes_a_true_stop_reachable() {
    // Bottom of the squashed range, including everything below the deadband,
    // must command exactly zero speed — the only action that collapses the
    // evader's own detection footprint.
    for u1 in [-1.0, -0.9, -0.75, 2.0 * SPEED_DEADBAND - 1.0 - 1e-9] {
        let a = action_to_command([0.3, u1]);
        assert_eq!(a.speed_frac, 0.0, "u1 = {u1} should be a full stop");
    }
    // Top of the range keeps full speed despite the rescale.
    assert!((action_to_command([0.0, 1.0]).speed_frac - 1.0).abs() < 1e-12);
    // Just above the deadband the rescaled fraction is continuous from zero.
    let eps = 1e-6;
    let a = action_to_command([0.0, 2.0 * (SPEED_DEADBAND + eps) - 1.0]);
    assert!(a.speed_frac > 0.0 && a.speed_frac < 1e-4);
    // Heading maps linearly to radians.
    assert!((action_to_command([0.5, 0.0]).heading - 0.5 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn critic_gradients_match_central_finite_differences() {
    let (agent, replay) = small_setup(11, 5, 8);
    let mut rng = rng_from_seed(derive_seed(11, 2));
    let idx = replay.sample_indices(8, &mut rng);
    let mut xi_next = vec![[0.0; ACT_DIM]; 8];
    for xi in &mut xi_next {
        for x in xi.iter_mut() {
            *x = rng.sample(rand_distr::StandardNormal);
        }
    }

    let grads = agent.critic_gradients(&replay, &idx, &xi_next);
    let h = 1e-5;

    for (which, g) in [(1, &grads.g1), (2, &grads.g2)] {
        let base = if which == 1 { agent.critic1.flat_params() } else { agent.critic2.flat_params() };
        let mut probe_rng = rng_from_seed(derive_seed(11, 3 + which as u64));
        for _ in 0..30 {
            let i = probe_rng.gen_range(0..base.len());
            let mut agent_p = agent.clone();
            let mut p = base.clone();
            p[i] = base[i] + h;
            if which == 1 {
                agent_p.critic1.set_flat_params(&p);
            } else {
                agent_p.critic2.set_flat_params(&p);
            }
            let lp = agent_p.critic_gradients(&replay, &idx, &xi_next).loss;
            p[i] = base[i] - h;
            if which == 1 {
                agent_p.critic1.set_flat_params(&p);
            } else {
                agent_p.critic2.set_flat_params(&p);
            }
            let lm = agent_p.critic_gradients(&replay, &idx, &xi_next).loss;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                grads_agree(g[i], fd, 1e-4),
                "critic{which} param {i}: analytic {} vs fd {fd}",
                g[i]
            );
        }
    }
}

#[test]
fn actor_gradient_matches_central_finite_differences() {
    let (agent, replay) = small_setup(13, 5, 8);
    let mut rng = rng_from_seed(derive_seed(13, 2));
    let idx = replay.sample_indices(8, &mut rng);
    let mut xi_act = vec![[0.0; ACT_DIM]; 8];
    for xi in &mut xi_act {
        for x in xi.iter_mut() {
            *x = rng.sample(rand_distr::StandardNormal);
        }
    }

    let grads = agent.actor_gradients(&replay, &idx, &xi_act);
    let base = agent.actor.flat_params();
    let h = 1e-5;
    let mut probe_rng = rng_from_seed(derive_seed(13, 3));
    for _ in 0..40 {
        let i = probe_rng.gen_range(0..base.len());
        let mut agent_p = agent.clone();
        let mut p = base.clone();
        p[i] = base[i] + h;
        agent_p.actor.set_flat_params(&p);
        let lp = agent_p.actor_gradients(&replay, &idx, &xi_act).loss;
        p[i] = base[i] - h;
        agent_p.actor.set_flat_params(&p);
        let lm = agent_p.actor_gradients(&replay, &idx, &xi_act).loss;
        let fd = (lp - lm) / (2.0 * h);
        assert!(
            grads_agree(grads.grad[i], fd, 1e-4),
            "actor param {i}: analytic {} vs fd {fd}",
            grads.grad[i]
        );
    }
}

#[test]
fn polyak_step_lerps_targets_toward_online_critics() {
    let (mut agent, _) = small_setup(5, 6, 16);
    // Push the online critics away from the targets, then watch one polyak
    // step apply the exact elementwise lerp.
    let mut rng = rng_from_seed(99);
    let mut p1 = agent.critic1.flat_params();
    for v in &mut p1 {
        *v += rng.gen_range(-0.5..0.5);
    }
    agent.critic1.set_flat_params(&p1);

    let t_before = agent.target1.flat_params();
    agent.polyak_update();
    let t_after = agent.target1.flat_params();
    let rho = agent.cfg.polyak;
    for i in 0..p1.len() {
        let expect = rho * p1[i] + (1.0 - rho) * t_before[i];
        assert!((t_after[i] - expect).abs() < 1e-15);
    }

    // Repeated steps close the gap geometrically.
    let gap = |a: &SacAgent| -> f64 {
        a.critic1
            .flat_params()
            .iter()
            .zip(a.target1.flat_params())
            .map(|(o, t)| (o - t).abs())
            .fold(0.0, f64::max)
    };
    let g0 = gap(&agent);
    for _ in 0..200 {
        agent.polyak_update();
    }
    let g1 = gap(&agent);
    assert!(g1 < g0 * (1.0 - rho).powi(150), "gap {g0} only shrank to {g1}");
}

#[test]
fn updates_are_finite_deterministic_and_counted() {
    let (mut a, replay) = small_setup(21, 6, 32);
    let mut b = a.clone();
    let mut rng_a = rng_from_seed(77);
    let mut rng_b = rng_from_seed(77);

    for step in 0..10 {
        let sa = a.update(&replay, &mut rng_a).expect("update succeeds");
        let sb = b.update(&replay, &mut rng_b).expect("update succeeds");
        for v in [sa.critic_loss, sa.actor_loss, sa.alpha, sa.entropy] {
            assert!(v.is_finite(), "non-finite stat at step {step}");
        }
        assert_eq!(sa.critic_loss.to_bits(), sb.critic_loss.to_bits());
        assert_eq!(sa.actor_loss.to_bits(), sb.actor_loss.to_bits());
        assert_eq!(sa.alpha.to_bits(), sb.alpha.to_bits());
    }
    assert_eq!(a.updates, 10);
    let pa = a.actor.flat_params();
    let pb = b.actor.flat_params();
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.to_bits(), y.to_bits(), "divergent twin training runs");
    }
}

#[test]
fn temperature_moves_against_the_entropy_error() {
    let (mut agent, replay) = small_setup(31, 6, 32);
    let mut rng = rng_from_seed(5);
    let la_before = agent.log_alpha;
    let stats = agent.update(&replay, &mut rng).expect("update succeeds");
    // Adam's first step moves along the negative gradient direction;
    // g = -(mean_log_pi + target) = entropy_estimate - (-target)... keep it
    // in measured terms: entropy above target should cool alpha down.
    if stats.entropy > agent.cfg.target_entropy {
        assert!(agent.log_alpha < la_before, "alpha should fall when entropy is high");
    } else {
        assert!(agent.log_alpha > la_before, "alpha should rise when entropy is low");
    }
    assert!(agent.alpha() > 0.0);
}

#[test]
fn checkpoint_roundtrip_preserves_future_behavior() {
    let (mut agent, replay) = small_setup(41, 6, 32);
    let mut rng = rng_from_seed(17);
    for _ in 0..5 {
        agent.update(&replay, &mut rng).expect("update succeeds");
    }

    let json = serde_json::to_string(&SacCheckpoint::capture(&agent)).expect("serializes");
    let mut restored: SacAgent =
        serde_json::from_str::<SacCheckpoint>(&json).expect("parses").restore().expect("restores");

    // Same deterministic action...
    let obs: Vec<f64> = (0..6).map(|i| 0.1 * i as f64 - 0.2).collect();
    let mut r1 = rng_from_seed(3);
    let mut r2 = rng_from_seed(3);
    assert_eq!(agent.act(&obs, true, &mut r1), restored.act(&obs, true, &mut r2));

    // ...and the *next* update matches bit for bit, which exercises the
    // optimizer moments and step counters, not just the weights.
    let mut ra = rng_from_seed(23);
    let mut rb = rng_from_seed(23);
    let sa = agent.update(&replay, &mut ra).expect("update succeeds");
    let sb = restored.update(&replay, &mut rb).expect("update succeeds");
    assert_eq!(sa.critic_loss.to_bits(), sb.critic_loss.to_bits());
    assert_eq!(sa.actor_loss.to_bits(), sb.actor_loss.to_bits());
    assert_eq!(sa.alpha.to_bits(), sb.alpha.to_bits());
}

#[test]
fn rejects_invalid_configs_and_mismatched_dimensions() {
    let mut rng = rng_from_seed(1);
    for breaker in [
        |c: &mut SacConfig| c.obs_dim = 0,
        |c: &mut SacConfig| c.hidden = vec![],
        |c: &mut SacConfig| c.hidden = vec![16, 0],
        |c: &mut SacConfig| c.gamma = 1.0,
        |c: &mut SacConfig| c.polyak = 0.0,
        |c: &mut SacConfig| c.lr = 0.0,
        |c: &mut SacConfig| c.batch_size = 0,
        |c: &mut SacConfig| c.init_alpha = 0.0,
    ] {
        let mut cfg = SacConfig::new(8);
        breaker(&mut cfg);
        assert!(SacAgent::new(cfg, &mut rng).is_err());
    }

    // Observation-size mismatches are rejected before any training starts.
    let world = prisoner();
    let wrong = SacConfig::new(world.obs_dim() + 1);
    assert!(train_evader(&world, TrainMode::Plain, &wrong, &TrainBudget::smoke(), 1).is_err());
}

#[test]
fn tiny_training_run_is_deterministic_end_to_end() {
    let mut world = prisoner();
    world.t_max = 90;
    world.validate().expect("shortened episodes stay valid");

    let mut sac = SacConfig::new(obs_dim_for(&world, false));
    sac.hidden = vec![16, 16];
    sac.batch_size = 32;
    sac.replay_capacity = 8192;
    let budget = TrainBudget { episodes: 3, start_steps: 60, update_every: 2, min_replay: 64 };

    let run = |seed: u64| train_evader(&world, TrainMode::Plain, &sac, &budget, seed);
    let a = run(7).expect("training succeeds");
    let b = run(7).expect("training succeeds");
    let c = run(8).expect("training succeeds");

    assert_eq!(a.curve.len(), 3);
    assert!(a.agent.updates > 0, "the tiny budget must still reach the update phase");
    for (sa, sb) in a.curve.iter().zip(&b.curve) {
        assert_eq!(sa.ret.to_bits(), sb.ret.to_bits());
        assert_eq!(sa.steps, sb.steps);
        assert_eq!(sa.detected_steps, sb.detected_steps);
    }
    let (pa, pb) = (a.agent.actor.flat_params(), b.agent.actor.flat_params());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.to_bits(), y.to_bits(), "same seed must give identical weights");
    }
    // A different seed takes a different trajectory.
    assert!(
        a.curve.iter().zip(&c.curve).any(|(sa, sc)| sa.ret.to_bits() != sc.ret.to_bits()),
        "distinct seeds should not produce identical curves"
    );
}

#[test]
fn waypoint_mode_augments_the_observation() {
    let world = prisoner();
    assert_eq!(obs_dim_for(&world, false), world.obs_dim());
    assert_eq!(obs_dim_for(&world, true), world.obs_dim() + 2);
}
