//! `evasion` — one binary over the pursuit-evasion laboratory.
//!
//! Subcommands: `gen-data | train-diffusion | train-rl | build-costmap |
//! evaluate | timing | render`. Every stochastic command takes `--seed` and
//! is fully determined by it; data artifacts re-run byte-identical. Exit
//! codes: 0 success, 1 usage, 2 data/config, 3 runtime. Output paths may be
//! redirected with the `EVASION_OUT_ROOT` environment variable (relative
//! `--out` paths are prefixed with it); each run writes a JSON manifest
//! (`manifest.json` in directory outputs, `<file>.manifest.json` otherwise)
//! recording inputs, outputs, and SHA-256 digests.

mod artifacts;

use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use evasion::bench::{
    aggregate, detection_fraction, raw_score, render_ppm, render_svg, run_episode, run_episodes,
    timing_study, EpisodeLog, MetricTable, Policy, RenderScene, RenderStyle, TimingQuery,
    POLICY_TAGS,
};
use evasion::costmap::{adjust, build_costmap, BuildParams, Costmap};
use evasion::diffusion::{make_schedule, DiffusionModel, PathConstraint, ScheduleKind};
use evasion::env::{Outcome, ViewMode};
use evasion::geom::Vec2;
use evasion::numerics::Adam;
use evasion::planners::generate_dataset;
use evasion::rl::{obs_dim_for, train_evader, SacAgent, SacConfig, TrainBudget, TrainMode};
use evasion::util::{derive_seed, rng_from_seed};

use artifacts::{CliError, ManifestBuilder};

#[derive(Parser)]
#[command(name = "evasion", version, about = "Pursuit-evasion laboratory CLI")]
struct Cli {
    /// Worker threads for parallel stages (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planner-demonstration corpus (JSONL of waypoint paths).
    GenData(GenDataArgs),
    /// Train the waypoint diffusion planner on a corpus.
    TrainDiffusion(TrainDiffusionArgs),
    /// Train an evader agent (waypoint-conditioned or plain).
    TrainRl(TrainRlArgs),
    /// Roll out the learned hierarchy and build a detection-risk costmap.
    BuildCostmap(BuildCostmapArgs),
    /// Benchmark policies over a shared set of episodes.
    Evaluate(EvaluateArgs),
    /// Planner timing study: diffusion batch sampling vs. sequential RRT*.
    Timing(TimingArgs),
    /// Render a world, costmap, or episode to PPM (and optionally SVG).
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Global,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Linear,
    Cosine,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Waypoint,
    Plain,
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetArg {
    Smoke,
    Full,
}

#[derive(Args)]
struct GenDataArgs {
    /// World config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Number of path records to produce.
    #[arg(long, default_value_t = 20_000)]
    count: usize,
    /// Waypoints per path.
    #[arg(long, default_value_t = 10)]
    n_w: usize,
    /// RRT* iterations per query.
    #[arg(long, default_value_t = 3000)]
    rrt_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset path (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainDiffusionArgs {
    /// World config JSON (fixes the obstacle-slot layout).
    #[arg(long)]
    config: PathBuf,
    /// Dataset JSONL from `gen-data`.
    #[arg(long)]
    dataset: PathBuf,
    /// Gradient steps to run.
    #[arg(long, default_value_t = 4000)]
    steps: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    /// Denoising steps T (ignored with --resume).
    #[arg(long, default_value_t = 50)]
    t_steps: usize,
    /// Noise schedule (ignored with --resume).
    #[arg(long, value_enum, default_value_t = ScheduleArg::Cosine)]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Continue from an existing checkpoint instead of initializing fresh.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Print a progress line every this many steps.
    #[arg(long, default_value_t = 200)]
    log_every: usize,
    /// Output checkpoint path (JSON). A loss curve CSV lands beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainRlArgs {
    #[arg(long)]
    config: PathBuf,
    /// Waypoint-conditioned (default) or plain flat-reward agent.
    #[arg(long, value_enum, default_value_t = ModeArg::Waypoint)]
    mode: ModeArg,
    /// Diffusion checkpoint (required in waypoint mode).
    #[arg(long)]
    diffusion: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BudgetArg::Smoke)]
    budget: BudgetArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output agent checkpoint path (JSON). A curve CSV lands beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildCostmapArgs {
    #[arg(long)]
    config: PathBuf,
    /// Diffusion checkpoint for global path proposals.
    #[arg(long)]
    diffusion: PathBuf,
    /// Waypoint-conditioned agent checkpoint for the rollouts.
    #[arg(long)]
    agent: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Deposit kernel width.
    #[arg(long)]
    sigma: Option<f64>,
    /// Proximity threshold for risk deposits (default: derived from the
    /// config's detection parameters).
    #[arg(long)]
    epsilon_risk: Option<f64>,
    /// Use the agent's mean action instead of sampling during rollouts.
    #[arg(long)]
    deterministic_actions: bool,
    /// Operator zone overlay JSON to bake into the saved map.
    #[arg(long)]
    zones: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output costmap path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// World config JSON (alternative to --domain).
    #[arg(long, conflicts_with = "domain")]
    config: Option<PathBuf>,
    /// Named preset, resolved as <config-root>/<domain>.json.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, default_value = "configs")]
    config_root: PathBuf,
    /// Comma-separated policy tags.
    #[arg(long, value_delimiter = ',', default_value = "astar-heuristic,rrtstar-heuristic,vo")]
    policies: Vec<String>,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the config's observation view.
    #[arg(long, value_enum)]
    view: Option<ViewArg>,
    /// Diffusion checkpoint (diffusion-* policies).
    #[arg(long)]
    diffusion: Option<PathBuf>,
    /// Waypoint-conditioned agent (diffusion-rl, diffusion-rl-map).
    #[arg(long)]
    agent: Option<PathBuf>,
    /// Plain agent (sac-only).
    #[arg(long)]
    sac_agent: Option<PathBuf>,
    /// Costmap JSON (diffusion-rl-map).
    #[arg(long)]
    costmap: Option<PathBuf>,
    /// Output directory for metrics.csv, episodes.jsonl, summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    diffusion: PathBuf,
    /// Batch sizes to measure.
    #[arg(long, value_delimiter = ',', default_value = "1,10,20,30,40,50")]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 3000)]
    rrt_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    config: PathBuf,
    /// Costmap JSON to draw as the background layer.
    #[arg(long)]
    costmap: Option<PathBuf>,
    /// Run one episode of this policy and draw its trace.
    #[arg(long)]
    policy: Option<String>,
    /// Episode seed used with --policy.
    #[arg(long, default_value_t = 0)]
    episode_seed: u64,
    #[arg(long)]
    diffusion: Option<PathBuf>,
    #[arg(long)]
    agent: Option<PathBuf>,
    #[arg(long)]
    sac_agent: Option<PathBuf>,
    /// Output image path (binary PPM).
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG overlay (vector layers only, no costmap raster).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Image width in pixels (the map is square, so height matches).
    #[arg(long, default_value_t = 512)]
    width: usize,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("usage error: --workers must be >= 1");
            std::process::exit(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("runtime error: could not configure worker pool: {e}");
            std::process::exit(3);
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenData(a) => gen_data(a),
        Command::TrainDiffusion(a) => train_diffusion(a),
        Command::TrainRl(a) => train_rl(a),
        Command::BuildCostmap(a) => build_costmap_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Timing(a) => timing(a),
        Command::Render(a) => render(a),
    }
}

// ---------------------------------------------------------------------------
// gen-data

fn gen_data(a: GenDataArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be >= 1".into()));
    }
    if a.n_w < 2 {
        return Err(CliError::Usage("--n-w must be >= 2".into()));
    }
    let cfg = artifacts::load_config(&a.config)?;
    let out = artifacts::resolve_out(&a.out);
    let mut manifest = ManifestBuilder::new("gen-data", Some(a.seed));
    manifest.input("config", &a.config)?;

    let (records, stats) = generate_dataset(&cfg, a.count, a.n_w, a.rrt_iterations, a.seed)?;
    artifacts::save_dataset(&out, &records)?;
    manifest.output("dataset", &out)?;
    let manifest_path = manifest.write(&out)?;

    println!(
        "dataset: {}/{} records, {} planner failures along the way",
        stats.produced, stats.requested, stats.planner_failures
    );
    println!("wrote {}", out.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train-diffusion

fn train_diffusion(a: TrainDiffusionArgs) -> Result<(), CliError> {
    if a.steps == 0 || a.batch == 0 {
        return Err(CliError::Usage("--steps and --batch must be >= 1".into()));
    }
    let cfg = artifacts::load_config(&a.config)?;
    let records = artifacts::load_dataset(&a.dataset)?;
    let out = artifacts::resolve_out(&a.out);
    let mut manifest = ManifestBuilder::new("train-diffusion", Some(a.seed));
    manifest.input("config", &a.config)?;
    manifest.input("dataset", &a.dataset)?;

    let (mut model, mut opt) = match &a.resume {
        Some(path) => {
            manifest.input("resume", path)?;
            let (model, opt) = artifacts::load_diffusion(path)?;
            let opt = opt.ok_or_else(|| {
                CliError::Data(format!(
                    "checkpoint {} has no optimizer state; cannot resume",
                    path.display()
                ))
            })?;
            if model.obstacle_slots != cfg.obstacle_slots {
                return Err(CliError::Data(format!(
                    "checkpoint has {} obstacle slots, config has {}",
                    model.obstacle_slots, cfg.obstacle_slots
                )));
            }
            println!("resuming from {} at step {}", path.display(), model.train_steps);
            (model, opt)
        }
        None => {
            let kind = match a.schedule {
                ScheduleArg::Linear => ScheduleKind::Linear,
                ScheduleArg::Cosine => ScheduleKind::Cosine,
            };
            let schedule = make_schedule(a.t_steps, kind)?;
            let n_w = records[0].waypoints.len();
            let mut init_rng = rng_from_seed(derive_seed(a.seed, 0));
            let model = DiffusionModel::new(n_w, cfg.obstacle_slots, schedule, &mut init_rng);
            let opt = Adam::new(model.net.param_count(), a.lr);
            (model, opt)
        }
    };
    opt.lr = a.lr;

    let examples = records
        .iter()
        .map(|r| model.prepare_example(r))
        .collect::<Result<Vec<_>, _>>()?;
    println!(
        "training on {} examples (n_w={}, T={}, batch={}, steps={})",
        examples.len(),
        model.n_w,
        model.schedule.t_steps(),
        a.batch,
        a.steps
    );

    let mut step_rng = rng_from_seed(derive_seed(a.seed, 1));
    let mut batch_rng = rng_from_seed(derive_seed(a.seed, 2));
    let mut curve: Vec<(u64, f64)> = Vec::with_capacity(a.steps);
    let mut batch = Vec::with_capacity(a.batch);
    for s in 0..a.steps {
        batch.clear();
        for _ in 0..a.batch {
            let idx = batch_rng.gen_range(0..examples.len());
            batch.push(examples[idx].clone());
        }
        let loss = model.train_step(&mut opt, &batch, &mut step_rng)?;
        curve.push((model.train_steps, loss));
        if (s + 1) % a.log_every == 0 || s + 1 == a.steps {
            println!("step {}/{}: loss {loss:.6}", s + 1, a.steps);
        }
    }

    artifacts::save_diffusion(&out, &model, Some(&opt))?;
    let curve_path = out.with_extension("loss.csv");
    let mut csv = String::from("step,loss\n");
    for (step, loss) in &curve {
        csv.push_str(&format!("{step},{loss:.6}\n"));
    }
    artifacts::ensure_parent(&curve_path)?;
    fs::write(&curve_path, csv)?;

    manifest.output("checkpoint", &out)?;
    manifest.output("loss_curve", &curve_path)?;
    let manifest_path = manifest.write(&out)?;
    println!("wrote {}", out.display());
    println!("wrote {}", curve_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train-rl

fn train_rl(a: TrainRlArgs) -> Result<(), CliError> {
    let cfg = artifacts::load_config(&a.config)?;
    let out = artifacts::resolve_out(&a.out);
    let mut manifest = ManifestBuilder::new("train-rl", Some(a.seed));
    manifest.input("config", &a.config)?;

    let model = match (a.mode, &a.diffusion) {
        (ModeArg::Waypoint, Some(path)) => {
            manifest.input("diffusion", path)?;
            Some(artifacts::load_diffusion(path)?.0)
        }
        (ModeArg::Waypoint, None) => {
            return Err(CliError::Usage(
                "--mode waypoint requires --diffusion <checkpoint>".into(),
            ));
        }
        (ModeArg::Plain, _) => None,
    };
    let mode = match &model {
        Some(m) => TrainMode::Waypoint { model: m },
        None => TrainMode::Plain,
    };
    let budget = match a.budget {
        BudgetArg::Smoke => TrainBudget::smoke(),
        BudgetArg::Full => TrainBudget::full(),
    };
    let sac_cfg = SacConfig::new(obs_dim_for(&cfg, mode.uses_waypoints()));
    println!(
        "training {} agent: {} episodes, obs_dim {}",
        match a.mode {
            ModeArg::Waypoint => "waypoint",
            ModeArg::Plain => "plain",
        },
        budget.episodes,
        sac_cfg.obs_dim
    );

    let output = train_evader(&cfg, mode, &sac_cfg, &budget, a.seed)?;

    let tail = output.curve.iter().rev().take(10).collect::<Vec<_>>();
    let tail_ret = tail.iter().map(|s| s.ret).sum::<f64>() / tail.len().max(1) as f64;
    let goals = output.curve.iter().filter(|s| s.goal).count();
    println!(
        "done: {} episodes, goal rate {:.2}, mean return over last {}: {:.2}",
        output.curve.len(),
        goals as f64 / output.curve.len().max(1) as f64,
        tail.len(),
        tail_ret
    );

    artifacts::save_json(&out, &evasion::rl::SacCheckpoint::capture(&output.agent))?;
    let curve_path = out.with_extension("curve.csv");
    let mut csv = String::from("episode,steps,return,detected_steps,goal,warned_path\n");
    for s in &output.curve {
        csv.push_str(&format!(
            "{},{},{:.6},{},{},{}\n",
            s.episode,
            s.steps,
            s.ret,
            s.detected_steps,
            u8::from(s.goal),
            u8::from(s.warned_path)
        ));
    }
    artifacts::ensure_parent(&curve_path)?;
    fs::write(&curve_path, csv)?;

    manifest.output("agent", &out)?;
    manifest.output("curve", &curve_path)?;
    let manifest_path = manifest.write(&out)?;
    println!("wrote {}", out.display());
    println!("wrote {}", curve_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// build-costmap

fn build_costmap_cmd(a: BuildCostmapArgs) -> Result<(), CliError> {
    let cfg = artifacts::load_config(&a.config)?;
    let out = artifacts::resolve_out(&a.out);
    let mut manifest = ManifestBuilder::new("build-costmap", Some(a.seed));
    manifest.input("config", &a.config)?;
    manifest.input("diffusion", &a.diffusion)?;
    manifest.input("agent", &a.agent)?;

    let (model, _) = artifacts::load_diffusion(&a.diffusion)?;
    let agent = artifacts::load_agent(&a.agent)?;
    let expected = obs_dim_for(&cfg, true);
    if agent.cfg.obs_dim != expected {
        return Err(CliError::Data(format!(
            "agent obs_dim {} does not match the waypoint-conditioned layout ({expected}); \
             pass a waypoint-mode agent",
            agent.cfg.obs_dim
        )));
    }

    let mut params = BuildParams::defaults(&cfg);
    if let Some(v) = a.episodes {
        params.episodes = v;
    }
    if let Some(v) = a.resolution {
        params.resolution = v;
    }
    if let Some(v) = a.sigma {
        params.sigma = v;
    }
    if let Some(v) = a.epsilon_risk {
        params.epsilon_risk = v;
    }
    params.stochastic = !a.deterministic_actions;
    if params.episodes == 0 || params.resolution < 2 || params.sigma <= 0.0 {
        return Err(CliError::Usage(
            "--episodes >= 1, --resolution >= 2 and --sigma > 0 required".into(),
        ));
    }

    let (map, report) = build_costmap(&cfg, &model, &agent, &params, a.seed)?;
    let map = match &a.zones {
        Some(path) => {
            manifest.input("zones", path)?;
            let zones = artifacts::load_zones(path)?;
            adjust(&map, &zones)?
        }
        None => map,
    };

    artifacts::save_json(&out, &map)?;
    manifest.output("costmap", &out)?;
    let manifest_path = manifest.write(&out)?;
    println!(
        "costmap: {} episodes ({} reached a hideout), {} deposits{}",
        report.episodes,
        report.goal_episodes,
        report.deposits,
        if report.empty { " — the map is empty" } else { "" }
    );
    println!("wrote {}", out.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

/// Learned artifacts that benchmark policies borrow from.
struct ArtifactStore {
    model: Option<DiffusionModel>,
    agent: Option<SacAgent>,
    plain: Option<SacAgent>,
    map: Option<Costmap>,
}

impl ArtifactStore {
    fn load(
        diffusion: &Option<PathBuf>,
        agent: &Option<PathBuf>,
        sac_agent: &Option<PathBuf>,
        costmap: &Option<PathBuf>,
        manifest: &mut ManifestBuilder,
    ) -> Result<Self, CliError> {
        let model = match diffusion {
            Some(p) => {
                manifest.input("diffusion", p)?;
                Some(artifacts::load_diffusion(p)?.0)
            }
            None => None,
        };
        let agent = match agent {
            Some(p) => {
                manifest.input("agent", p)?;
                Some(artifacts::load_agent(p)?)
            }
            None => None,
        };
        let plain = match sac_agent {
            Some(p) => {
                manifest.input("sac_agent", p)?;
                Some(artifacts::load_agent(p)?)
            }
            None => None,
        };
        let map = match costmap {
            Some(p) => {
                manifest.input("costmap", p)?;
                Some(artifacts::load_costmap(p)?)
            }
            None => None,
        };
        Ok(ArtifactStore { model, agent, plain, map })
    }

    fn policy(&self, tag: &str) -> Result<Policy<'_>, CliError> {
        fn need<'a, T>(slot: &'a Option<T>, tag: &str, flag: &str) -> Result<&'a T, CliError> {
            slot.as_ref().ok_or_else(|| {
                CliError::Data(format!("policy '{tag}' requires {flag} <path>"))
            })
        }
        match tag {
            "astar-heuristic" => Ok(Policy::AstarHeuristic),
            "rrtstar-heuristic" => Ok(Policy::RrtStarHeuristic),
            "vo" => Ok(Policy::Vo),
            "sac-only" => Ok(Policy::SacOnly { agent: need(&self.plain, tag, "--sac-agent")? }),
            "diffusion-only" => {
                Ok(Policy::DiffusionOnly { model: need(&self.model, tag, "--diffusion")? })
            }
            "diffusion-rl" => Ok(Policy::DiffusionRl {
                model: need(&self.model, tag, "--diffusion")?,
                agent: need(&self.agent, tag, "--agent")?,
            }),
            "diffusion-rl-map" => Ok(Policy::DiffusionRlMap {
                model: need(&self.model, tag, "--diffusion")?,
                agent: need(&self.agent, tag, "--agent")?,
                map: need(&self.map, tag, "--costmap")?,
            }),
            other => Err(CliError::Usage(format!(
                "unknown policy '{other}' (valid: {})",
                POLICY_TAGS.join(", ")
            ))),
        }
    }
}

#[derive(Serialize)]
struct EpisodeSummary<'a> {
    policy: &'a str,
    seed: u64,
    outcome: &'a str,
    length: u32,
    detected_steps: u32,
    raw_score: f64,
    detection: f64,
    goal: bool,
}

fn episode_summary<'a>(log: &'a EpisodeLog) -> EpisodeSummary<'a> {
    let goal = matches!(log.outcome, Outcome::Goal);
    EpisodeSummary {
        policy: &log.policy,
        seed: log.seed,
        outcome: if goal { "goal" } else { "timeout" },
        length: log.length,
        detected_steps: log.detected_steps,
        raw_score: raw_score(log),
        detection: detection_fraction(log),
        goal,
    }
}

fn print_metric_table(table: &MetricTable) {
    println!(
        "{:<20} {:>4}  {:>16}  {:>14}  {:>5}  {:>14}",
        "policy", "eps", "raw_score", "detection", "goal", "norm_score"
    );
    for r in &table.rows {
        println!(
            "{:<20} {:>4}  {:>8.2} ± {:>5.2}  {:>6.3} ± {:>5.3}  {:>5.2}  {:>6.3} ± {:>5.3}",
            r.policy,
            r.episodes,
            r.raw_score_mean,
            r.raw_score_std,
            r.detection_mean,
            r.detection_std,
            r.goal_reach_mean,
            r.norm_score_mean,
            r.norm_score_std
        );
    }
    println!("(score range for normalization: [{:.2}, {:.2}])", table.score_min, table.score_max);
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    if a.episodes == 0 {
        return Err(CliError::Usage("--episodes must be >= 1".into()));
    }
    if a.policies.is_empty() {
        return Err(CliError::Usage("--policies must name at least one policy".into()));
    }
    let config_path = match (&a.config, &a.domain) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) => a.config_root.join(format!("{d}.json")),
        (None, None) => {
            return Err(CliError::Usage("pass either --config <path> or --domain <name>".into()))
        }
    };
    let mut cfg = artifacts::load_config(&config_path)?;
    if let Some(v) = a.view {
        cfg.view = match v {
            ViewArg::Global => ViewMode::Global,
            ViewArg::Local => ViewMode::Local,
        };
    }

    let out = artifacts::resolve_out(&a.out);
    fs::create_dir_all(&out)?;
    let mut manifest = ManifestBuilder::new("evaluate", Some(a.seed));
    manifest.input("config", &config_path)?;
    let store = ArtifactStore::load(&a.diffusion, &a.agent, &a.sac_agent, &a.costmap, &mut manifest)?;
    // Validate every tag up front so a typo fails before hours of rollouts.
    for tag in &a.policies {
        store.policy(tag)?;
    }

    let seeds: Vec<u64> = (0..a.episodes).map(|i| derive_seed(a.seed, i as u64)).collect();
    let mut per_policy: Vec<(String, Vec<EpisodeLog>)> = Vec::with_capacity(a.policies.len());
    for tag in &a.policies {
        let policy = store.policy(tag)?;
        let logs = run_episodes(&cfg, &policy, &seeds)?;
        let goals = logs.iter().filter(|l| matches!(l.outcome, Outcome::Goal)).count();
        let mean_raw = logs.iter().map(raw_score).sum::<f64>() / logs.len() as f64;
        println!(
            "{tag}: {} episodes, goal rate {:.2}, mean raw score {:.2}",
            logs.len(),
            goals as f64 / logs.len() as f64,
            mean_raw
        );
        per_policy.push((tag.clone(), logs));
    }

    let table = aggregate(&per_policy)?;
    println!();
    print_metric_table(&table);

    let metrics_path = out.join("metrics.csv");
    fs::write(&metrics_path, table.to_csv())?;
    let episodes_path = out.join("episodes.jsonl");
    let mut jsonl = String::new();
    for (_, logs) in &per_policy {
        for log in logs {
            jsonl.push_str(
                &serde_json::to_string(&episode_summary(log))
                    .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?,
            );
            jsonl.push('\n');
        }
    }
    fs::write(&episodes_path, jsonl)?;
    let summary_path = out.join("summary.json");
    artifacts::save_json(&summary_path, &table)?;

    manifest.output("metrics", &metrics_path)?;
    manifest.output("episodes", &episodes_path)?;
    manifest.output("summary", &summary_path)?;
    let manifest_path = manifest.write(&out)?;
    println!("\nwrote {}", metrics_path.display());
    println!("wrote {}", episodes_path.display());
    println!("wrote {}", summary_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// timing

fn timing(a: TimingArgs) -> Result<(), CliError> {
    let cfg = artifacts::load_config(&a.config)?;
    let out = artifacts::resolve_out(&a.out);
    let mut manifest = ManifestBuilder::new("timing", Some(a.seed));
    manifest.input("config", &a.config)?;
    manifest.input("diffusion", &a.diffusion)?;
    let (model, _) = artifacts::load_diffusion(&a.diffusion)?;

    let start = Vec2::new(
        0.5 * (cfg.corner_start.min.x + cfg.corner_start.max.x),
        0.5 * (cfg.corner_start.min.y + cfg.corner_start.max.y),
    );
    let goal = cfg.hideout_candidates[0];
    let query = TimingQuery {
        constraint: PathConstraint { start, goal, obstacles: cfg.obstacles.clone() },
        rrt_iterations: a.rrt_iterations,
    };
    let table = timing_study(&model, &query, &a.counts, a.repeats, a.seed)?;

    println!("{:<6} {:>18} {:>18} {:>8}", "count", "diffusion_mean_s", "rrt_mean_s", "ratio");
    for r in &table.rows {
        println!(
            "{:<6} {:>10.4} ± {:>5.4} {:>10.4} ± {:>5.4} {:>8.2}",
            r.count,
            r.diffusion_mean_s,
            r.diffusion_std_s,
            r.rrt_mean_s,
            r.rrt_std_s,
            r.rrt_mean_s / r.diffusion_mean_s.max(1e-12)
        );
    }

    artifacts::ensure_parent(&out)?;
    fs::write(&out, table.to_csv())?;
    manifest.output("timing", &out)?;
    let manifest_path = manifest.write(&out)?;
    println!("wrote {}", out.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// render

fn render(a: RenderArgs) -> Result<(), CliError> {
    if a.width < 16 {
        return Err(CliError::Usage("--width must be >= 16".into()));
    }
    let cfg = artifacts::load_config(&a.config)?;
    let out = artifacts::resolve_out(&a.out);
    let mut manifest = ManifestBuilder::new("render", Some(a.episode_seed));
    manifest.input("config", &a.config)?;

    let costmap = match &a.costmap {
        Some(p) => {
            manifest.input("costmap", p)?;
            Some(artifacts::load_costmap(p)?)
        }
        None => None,
    };
    let log = match &a.policy {
        Some(tag) => {
            let store =
                ArtifactStore::load(&a.diffusion, &a.agent, &a.sac_agent, &None, &mut manifest)?;
            let store = ArtifactStore { map: costmap.clone(), ..store };
            let policy = store.policy(tag)?;
            let log = run_episode(&cfg, &policy, a.episode_seed)?;
            println!(
                "episode {}: {} steps, {} detected, outcome {:?}",
                a.episode_seed, log.length, log.detected_steps, log.outcome
            );
            Some(log)
        }
        None => None,
    };

    let scene = RenderScene { cfg: &cfg, costmap: costmap.as_ref(), log: log.as_ref(), paths: &[] };
    let style = RenderStyle { width: a.width, height: a.width };
    let ppm = render_ppm(&scene, &style);
    artifacts::ensure_parent(&out)?;
    fs::write(&out, &ppm)?;
    manifest.output("image", &out)?;
    println!("wrote {}", out.display());

    if let Some(svg_path) = &a.svg {
        let svg_out = artifacts::resolve_out(svg_path);
        artifacts::ensure_parent(&svg_out)?;
        fs::write(&svg_out, render_svg(&scene, &style))?;
        manifest.output("svg", &svg_out)?;
        println!("wrote {}", svg_out.display());
    }
    let manifest_path = manifest.write(&out)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}
