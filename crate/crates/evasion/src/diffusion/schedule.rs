use serde::{Deserialize, Serialize};

use super::DiffusionError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ScheduleKind::Linear),
            "cosine" => Ok(ScheduleKind::Cosine),
            other => Err(format!("unknown schedule kind '{other}'")),
        }
    }
}

/// A denoising schedule over `t_steps` steps. Index convention: step `i` runs
/// over `1..=t_steps`; `alpha_bar(0)` is defined as 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub kind: ScheduleKind,
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
    posterior_vars: Vec<f64>,
}

impl NoiseSchedule {
    /// Build a schedule from explicit per-step noise rates `beta_i in (0,1)`.
    pub fn from_betas(kind: ScheduleKind, betas: &[f64]) -> Result<Self, DiffusionError> {
        if betas.is_empty() {
            return Err(DiffusionError::Schedule("need at least one step".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(0.0 < **b && **b < 1.0)) {
            return Err(DiffusionError::Schedule(format!("beta {b} outside (0,1)")));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut prod = 1.0;
        for a in &alphas {
            prod *= a;
            alpha_bars.push(prod);
        }
        let mut posterior_vars = Vec::with_capacity(betas.len());
        for i in 0..betas.len() {
            let prev = if i == 0 { 1.0 } else { alpha_bars[i - 1] };
            posterior_vars.push(betas[i] * (1.0 - prev) / (1.0 - alpha_bars[i]));
        }
        Ok(NoiseSchedule { kind, betas: betas.to_vec(), alphas, alpha_bars, posterior_vars })
    }

    pub fn t_steps(&self) -> usize {
        self.betas.len()
    }

    /// `beta_i`, `i` in `1..=t_steps`.
    pub fn beta(&self, i: usize) -> f64 {
        self.betas[i - 1]
    }

    /// `alpha_i`, `i` in `1..=t_steps`.
    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas[i - 1]
    }

    /// Cumulative product; `alpha_bar(0) == 1` by convention.
    pub fn alpha_bar(&self, i: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            self.alpha_bars[i - 1]
        }
    }

    /// Posterior variance of the reverse step at `i` (zero at `i == 1`).
    pub fn posterior_var(&self, i: usize) -> f64 {
        self.posterior_vars[i - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

const BETA_MAX: f64 = 0.999;

/// Standard schedules: `linear` interpolates noise rates (scaled so the
/// terminal signal level is small at any step count), `cosine` follows the
/// squared-cosine cumulative curve.
pub fn make_schedule(t: usize, kind: ScheduleKind) -> Result<NoiseSchedule, DiffusionError> {
    if t == 0 {
        return Err(DiffusionError::Schedule("t must be >= 1".into()));
    }
    let betas: Vec<f64> = match kind {
        ScheduleKind::Linear => {
            let scale = 1000.0 / t as f64;
            let (b0, b1) = (1e-4 * scale, 0.02 * scale);
            (0..t)
                .map(|j| {
                    let f = if t == 1 { 0.5 } else { j as f64 / (t - 1) as f64 };
                    (b0 + (b1 - b0) * f).min(BETA_MAX)
                })
                .collect()
        }
        ScheduleKind::Cosine => {
            let s = 0.008;
            let f = |i: f64| {
                let x = (i / t as f64 + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2;
                x.cos().powi(2)
            };
            let f0 = f(0.0);
            let mut prev = 1.0;
            (1..=t)
                .map(|i| {
                    let bar = f(i as f64) / f0;
                    let beta = (1.0 - bar / prev).clamp(1e-8, BETA_MAX);
                    prev *= 1.0 - beta;
                    beta
                })
                .collect()
        }
    };
    NoiseSchedule::from_betas(kind, &betas)
}
