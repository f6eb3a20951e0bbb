use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::schedule::{NoiseSchedule, ScheduleKind};
use super::DiffusionError;
use crate::env::OBSTACLE_PROJECTION_MARGIN;
use crate::geom::{Circle, Vec2};
use crate::numerics::{
    pack_block, unpack_lane, Activation, Adam, DenseNet, NetCheckpoint, LANES,
};
use crate::planners::{PathRecord, WaypointPath};
use crate::util::{derive_seed, rng_from_seed};

/// Sinusoidal timestep embedding width.
pub const EMB_DIM: usize = 16;

/// The global constraints a path must satisfy: endpoints and obstacle set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConstraint {
    pub start: Vec2,
    pub goal: Vec2,
    pub obstacles: Vec<Circle>,
}

/// Sinusoidal embedding of denoising step `i` (1-based) into `dim` values.
pub fn timestep_embedding(i: usize, dim: usize) -> Vec<f64> {
    assert!(dim % 2 == 0, "embedding dim must be even");
    let half = dim / 2;
    let mut out = Vec::with_capacity(dim);
    for j in 0..half {
        let freq = (-(j as f64) * (10_000f64).ln() / (half as f64 - 1.0)).exp();
        let x = i as f64 * freq;
        out.push(x.sin());
        out.push(x.cos());
    }
    out
}

#[inline]
fn norm_coord(x: f64) -> f64 {
    2.0 * x - 1.0
}

#[inline]
fn denorm_coord(x: f64) -> f64 {
    (x + 1.0) / 2.0
}

/// Conditioning vector for constraints `c`: normalized start, goal, and the
/// zero-padded obstacle digest (`slots` entries of center+radius).
pub fn cond_vector(c: &PathConstraint, slots: usize) -> Vec<f64> {
    assert!(c.obstacles.len() <= slots, "more obstacles than conditioning slots");
    let mut v = Vec::with_capacity(4 + 3 * slots);
    v.extend_from_slice(&[
        norm_coord(c.start.x),
        norm_coord(c.start.y),
        norm_coord(c.goal.x),
        norm_coord(c.goal.y),
    ]);
    for slot in 0..slots {
        match c.obstacles.get(slot) {
            Some(o) => v.extend_from_slice(&[
                norm_coord(o.center.x),
                norm_coord(o.center.y),
                2.0 * o.radius,
            ]),
            None => v.extend_from_slice(&[-1.0, -1.0, 0.0]),
        }
    }
    v
}

/// Forward noising `tau_i = sqrt(abar_i) tau_0 + sqrt(1 - abar_i) eps`.
pub fn forward_noise(tau0: &[f64], i: usize, eps: &[f64], schedule: &NoiseSchedule) -> Vec<f64> {
    assert!(i >= 1 && i <= schedule.t_steps(), "forward_noise: step out of range");
    assert_eq!(tau0.len(), eps.len(), "forward_noise: shape mismatch");
    let ab = schedule.alpha_bar(i);
    let (s, n) = (ab.sqrt(), (1.0 - ab).sqrt());
    tau0.iter().zip(eps).map(|(t, e)| s * t + n * e).collect()
}

/// Per-sample noise-prediction loss `||eps - eps_hat||^2` (sum over
/// coordinates).
pub fn mse_loss(eps: &[f64], eps_hat: &[f64]) -> f64 {
    assert_eq!(eps.len(), eps_hat.len(), "mse_loss: shape mismatch");
    eps.iter().zip(eps_hat).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Project a flat waypoint buffer (map coordinates) onto the constraint set:
/// endpoints are inpainted exactly, intermediate points are clamped to the
/// map and pushed radially out of obstacles (to `(1 + margin) * radius`; a
/// point exactly at a center leaves along +x).
pub fn apply_constraints(flat: &mut [f64], c: &PathConstraint) {
    let n = flat.len() / 2;
    assert!(flat.len() % 2 == 0 && n >= 2, "apply_constraints: malformed buffer");
    flat[0] = c.start.x;
    flat[1] = c.start.y;
    flat[2 * n - 2] = c.goal.x;
    flat[2 * n - 1] = c.goal.y;
    for k in 1..n - 1 {
        let mut p = Vec2::new(flat[2 * k], flat[2 * k + 1]).clamp_unit();
        for o in &c.obstacles {
            if o.contains(p) {
                let dir = (p - o.center).normalized();
                let dir = if dir == Vec2::ZERO { Vec2::new(1.0, 0.0) } else { dir };
                p = o.center + dir * (o.radius * (1.0 + OBSTACLE_PROJECTION_MARGIN));
            }
        }
        flat[2 * k] = p.x;
        flat[2 * k + 1] = p.y;
    }
}

/// Whether a flat waypoint buffer meets the constraints exactly: endpoint
/// equality and every intermediate waypoint outside every obstacle.
pub fn path_satisfies_constraints(flat: &[f64], c: &PathConstraint) -> bool {
    let n = flat.len() / 2;
    if flat[0] != c.start.x || flat[1] != c.start.y {
        return false;
    }
    if flat[2 * n - 2] != c.goal.x || flat[2 * n - 1] != c.goal.y {
        return false;
    }
    for k in 1..n - 1 {
        let p = Vec2::new(flat[2 * k], flat[2 * k + 1]);
        if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
            return false;
        }
        if c.obstacles.iter().any(|o| o.contains(p)) {
            return false;
        }
    }
    true
}

/// A prepared training sample: normalized flat waypoints plus conditioning.
#[derive(Clone, Debug)]
pub struct TrainExample {
    pub tau0: Vec<f64>,
    pub cond: Vec<f64>,
}

/// One sampled path with a flag marking retry exhaustion (the path is then
/// the constraint-projected output of the final attempt).
#[derive(Clone, Debug)]
pub struct SampledPath {
    pub path: WaypointPath,
    pub warned: bool,
}

/// The waypoint diffusion planner: denoiser network, schedule, and layout.
#[derive(Clone, Debug)]
pub struct DiffusionModel {
    pub net: DenseNet,
    pub schedule: NoiseSchedule,
    pub n_w: usize,
    pub obstacle_slots: usize,
    pub train_steps: u64,
}

impl DiffusionModel {
    /// Fresh model with the default denoiser (3 hidden layers of 128 relu).
    pub fn new(
        n_w: usize,
        obstacle_slots: usize,
        schedule: NoiseSchedule,
        rng: &mut impl Rng,
    ) -> Self {
        let input = 2 * n_w + EMB_DIM + 4 + 3 * obstacle_slots;
        let net = DenseNet::new(
            &[input, 128, 128, 128, 2 * n_w],
            &[Activation::Relu, Activation::Relu, Activation::Relu, Activation::Identity],
            rng,
        );
        DiffusionModel { net, schedule, n_w, obstacle_slots, train_steps: 0 }
    }

    pub fn input_dim(&self) -> usize {
        2 * self.n_w + EMB_DIM + 4 + 3 * self.obstacle_slots
    }

    fn check_shapes(&self) -> Result<(), DiffusionError> {
        if self.net.input_dim() != self.input_dim() || self.net.output_dim() != 2 * self.n_w {
            return Err(DiffusionError::Shape(format!(
                "denoiser expects {}->{} but the layout requires {}->{}",
                self.net.input_dim(),
                self.net.output_dim(),
                self.input_dim(),
                2 * self.n_w
            )));
        }
        Ok(())
    }

    /// Normalize a corpus record into a training example.
    pub fn prepare_example(&self, rec: &PathRecord) -> Result<TrainExample, DiffusionError> {
        if rec.waypoints.len() != self.n_w {
            return Err(DiffusionError::Shape(format!(
                "record has {} waypoints, model expects {}",
                rec.waypoints.len(),
                self.n_w
            )));
        }
        if rec.obstacles.len() > self.obstacle_slots {
            return Err(DiffusionError::Shape(format!(
                "record has {} obstacles, model supports {}",
                rec.obstacles.len(),
                self.obstacle_slots
            )));
        }
        let mut tau0 = Vec::with_capacity(2 * self.n_w);
        for w in &rec.waypoints {
            tau0.push(norm_coord(w.x));
            tau0.push(norm_coord(w.y));
        }
        let c = PathConstraint { start: rec.p_s, goal: rec.p_g, obstacles: rec.obstacles.clone() };
        Ok(TrainExample { tau0, cond: cond_vector(&c, self.obstacle_slots) })
    }

    fn assemble_input(&self, tau: &[f64], emb: &[f64], cond: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.input_dim());
        input.extend_from_slice(tau);
        input.extend_from_slice(emb);
        input.extend_from_slice(cond);
        input
    }

    /// One optimizer step of noise-prediction training on a mini-batch.
    /// Returns the mean per-sample loss.
    pub fn train_step(
        &mut self,
        opt: &mut Adam,
        batch: &[TrainExample],
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, DiffusionError> {
        self.check_shapes()?;
        if batch.is_empty() {
            return Err(DiffusionError::Shape("empty training batch".into()));
        }
        let t_total = self.schedule.t_steps();
        let dim = 2 * self.n_w;

        // Draw all randomness in sample order first so lane chunking does not
        // affect the stream.
        let mut inputs = Vec::with_capacity(batch.len());
        let mut epss = Vec::with_capacity(batch.len());
        for ex in batch {
            let i = rng.gen_range(1..=t_total);
            let eps: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let tau_i = forward_noise(&ex.tau0, i, &eps, &self.schedule);
            inputs.push(self.assemble_input(&tau_i, &timestep_embedding(i, EMB_DIM), &ex.cond));
            epss.push(eps);
        }

        let mut grads = vec![0.0; self.net.param_count()];
        let mut loss_sum = 0.0;
        let inv_b = 1.0 / batch.len() as f64;
        for chunk in (0..batch.len()).collect::<Vec<_>>().chunks(LANES) {
            let refs: Vec<&[f64]> = chunk.iter().map(|&s| inputs[s].as_slice()).collect();
            let block = pack_block(&refs);
            let (out, tape) = self.net.forward_block_traced(&block);
            let mut dout = vec![0.0; dim * LANES];
            for (l, &s) in chunk.iter().enumerate() {
                for k in 0..dim {
                    let eps_hat = out[k * LANES + l];
                    let e = epss[s][k];
                    loss_sum += (eps_hat - e) * (eps_hat - e);
                    dout[k * LANES + l] = 2.0 * (eps_hat - e) * inv_b;
                }
            }
            self.net.backward_block(&tape, &dout, &mut grads);
        }

        let loss = loss_sum * inv_b;
        if !loss.is_finite() {
            return Err(DiffusionError::Training(format!("non-finite loss {loss}")));
        }
        opt.step_net(&mut self.net, &grads)?;
        self.train_steps += 1;
        Ok(loss)
    }

    /// Draw `n_s` constraint-guided samples.
    ///
    /// Ancestral denoising runs all samples jointly through the lane-blocked
    /// network kernel once per step; constraints are projected every step and
    /// after the last. Invalid samples are redrawn up to `max_retries` times,
    /// after which the projected output is accepted with `warned = true`.
    /// Fully deterministic in `(model, constraints, seed)`.
    pub fn sample_paths(
        &self,
        c: &PathConstraint,
        n_s: usize,
        seed: u64,
        max_retries: usize,
    ) -> Result<Vec<SampledPath>, DiffusionError> {
        self.check_shapes()?;
        if n_s == 0 {
            return Err(DiffusionError::Shape("n_s must be >= 1".into()));
        }
        if c.obstacles.len() > self.obstacle_slots {
            return Err(DiffusionError::Shape(format!(
                "constraint has {} obstacles, model supports {}",
                c.obstacles.len(),
                self.obstacle_slots
            )));
        }
        let cond = cond_vector(c, self.obstacle_slots);
        let dim = 2 * self.n_w;
        let t_total = self.schedule.t_steps();

        let mut results: Vec<Option<WaypointPath>> = vec![None; n_s];
        let mut last_projected: Vec<Option<WaypointPath>> = vec![None; n_s];

        for round in 0..=max_retries {
            let pending: Vec<usize> =
                (0..n_s).filter(|&k| results[k].is_none()).collect();
            if pending.is_empty() {
                break;
            }

            // Independent per-sample streams: chunk layout cannot change draws.
            let mut rngs: Vec<ChaCha8Rng> = pending
                .iter()
                .map(|&k| rng_from_seed(derive_seed(seed, (round * n_s + k) as u64)))
                .collect();
            let mut taus: Vec<Vec<f64>> = rngs
                .iter_mut()
                .map(|r| (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
                .collect();

            for i in (1..=t_total).rev() {
                let emb = timestep_embedding(i, EMB_DIM);
                let beta = self.schedule.beta(i);
                let ab = self.schedule.alpha_bar(i);
                let a = self.schedule.alpha(i);
                let coef = beta / (1.0 - ab).sqrt();
                let inv_sqrt_a = 1.0 / a.sqrt();
                let sigma = self.schedule.posterior_var(i).sqrt();

                for chunk_start in (0..taus.len()).step_by(LANES) {
                    let chunk_end = (chunk_start + LANES).min(taus.len());
                    let inputs: Vec<Vec<f64>> = (chunk_start..chunk_end)
                        .map(|s| self.assemble_input(&taus[s], &emb, &cond))
                        .collect();
                    let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
                    let out = self.net.forward_block(&pack_block(&refs));

                    for (l, s) in (chunk_start..chunk_end).enumerate() {
                        let eps_hat = unpack_lane(&out, l, dim);
                        let tau = &mut taus[s];
                        for k in 0..dim {
                            tau[k] = (tau[k] - coef * eps_hat[k]) * inv_sqrt_a;
                        }
                        if i > 1 {
                            for k in 0..dim {
                                let z: f64 = rngs[s].sample(StandardNormal);
                                tau[k] += sigma * z;
                            }
                        }
                        // Project in map space, continue in normalized space.
                        let mut map_flat: Vec<f64> = tau.iter().map(|&x| denorm_coord(x)).collect();
                        apply_constraints(&mut map_flat, c);
                        for k in 0..dim {
                            tau[k] = norm_coord(map_flat[k]);
                        }
                    }
                }
            }

            for (slot, &k) in pending.iter().enumerate() {
                let mut map_flat: Vec<f64> = taus[slot].iter().map(|&x| denorm_coord(x)).collect();
                apply_constraints(&mut map_flat, c);
                let path = WaypointPath::from_flat(&map_flat);
                if path_satisfies_constraints(&map_flat, c) {
                    results[k] = Some(path);
                } else {
                    last_projected[k] = Some(path);
                }
            }
        }

        Ok((0..n_s)
            .map(|k| match results[k].take() {
                Some(path) => SampledPath { path, warned: false },
                None => SampledPath {
                    path: last_projected[k].take().expect("projection always yields a path"),
                    warned: true,
                },
            })
            .collect())
    }
}

/// Serializable container for a diffusion model (+ optional optimizer state).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffusionCheckpoint {
    pub format_version: u32,
    pub n_w: usize,
    pub obstacle_slots: usize,
    pub schedule_kind: ScheduleKind,
    pub betas: Vec<f64>,
    pub train_steps: u64,
    pub net: NetCheckpoint,
}

impl DiffusionCheckpoint {
    pub fn capture(model: &DiffusionModel, opt: Option<&Adam>) -> Self {
        DiffusionCheckpoint {
            format_version: crate::numerics::CHECKPOINT_FORMAT_VERSION,
            n_w: model.n_w,
            obstacle_slots: model.obstacle_slots,
            schedule_kind: model.schedule.kind,
            betas: model.schedule.betas().to_vec(),
            train_steps: model.train_steps,
            net: NetCheckpoint::capture(&model.net, opt),
        }
    }

    pub fn restore(&self) -> Result<(DiffusionModel, Option<Adam>), DiffusionError> {
        let schedule = NoiseSchedule::from_betas(self.schedule_kind, &self.betas)?;
        let (net, opt) = self.net.restore()?;
        let model = DiffusionModel {
            net,
            schedule,
            n_w: self.n_w,
            obstacle_slots: self.obstacle_slots,
            train_steps: self.train_steps,
        };
        model.check_shapes()?;
        Ok((model, opt))
    }
}
