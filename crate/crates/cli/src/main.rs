use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stroke_core::agent::{train, AgentConfig, EpochRecord};
use stroke_core::config::RunConfig;
use stroke_core::contact::{estimate_friction, estimate_restitution};
use stroke_core::env::{episode_trajectory, sample_hit_state, synthesize_serve, BanditEnv, HitState, StrokeEnv};
use stroke_core::eval::{ablation_report, evaluate, Metrics};
use stroke_core::persist::{save_metrics, save_training_log, WeightsFile};
use stroke_core::seeding::{episode_rng, Stream};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "stroke", version, about = "Learn and evaluate table-tennis return strokes in simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write weights, training log and final metrics.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate saved weights on a fixed suite of episodes.
    Eval {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Evaluation seed; defaults to the one in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the metrics to this TOML file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one full episode and export its trajectory as CSV.
    Rollout {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Use this actor instead of the neutral stroke.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Length of the incoming flight before the hit (s).
        #[arg(long, default_value_t = 0.3)]
        serve_duration: f64,
    },
    /// Estimate restitution from a drop test and friction from a tilt test.
    Calibrate {
        /// Drop height (m).
        #[arg(long)]
        h1: f64,
        /// Rebound height (m).
        #[arg(long)]
        h2: f64,
        /// Tilt angle at which the ball starts to slide (deg).
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Train and compare the six learner variants over several seeds.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated list of training seeds.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { config, seed, out } => cmd_train(config.as_deref(), seed, out),
        Command::Eval { weights, config, episodes, seed, out } => {
            cmd_eval(&weights, config.as_deref(), episodes, seed, out.as_deref())
        }
        Command::Rollout { config, seed, out, weights, serve_duration } => {
            cmd_rollout(config.as_deref(), seed, &out, weights.as_deref(), serve_duration)
        }
        Command::Calibrate { h1, h2, theta } => cmd_calibrate(h1, h2, theta),
        Command::Ablate { config, seeds, out } => cmd_ablate(config.as_deref(), &seeds, out),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Run metadata that changes between otherwise identical runs.
fn write_sidecar(dir: &Path, command: &str) -> Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let text = format!(
        "command = \"{command}\"\nfinished_unix_seconds = {secs}\nversion = \"{}\"\n",
        env!("CARGO_PKG_VERSION")
    );
    let path = dir.join("run_info.toml");
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn format_metrics(m: &Metrics) -> String {
    format!(
        "episodes {}  success {:.1}%  eps_d {:.1} cm  eps_h {:.1} cm",
        m.episodes,
        100.0 * m.success_rate,
        100.0 * m.eps_d,
        100.0 * m.eps_h
    )
}

fn print_epoch(prefix: &str, r: &EpochRecord) {
    let q = r.metrics.mean_q.as_deref().unwrap_or(&[]);
    let q: Vec<String> = q.iter().map(|v| format!("{v:.3}")).collect();
    let rw = r.metrics.mean_reward;
    println!(
        "{prefix}epoch {:>3}  r=({:.3}, {:.3}, {:.3})  q=({})  {}",
        r.epoch,
        rw[0],
        rw[1],
        rw[2],
        q.join(", "),
        format_metrics(&r.metrics)
    );
}

fn cmd_train(config: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let env = cfg.to_env()?;
    let out = cfg.output_dir.clone();
    create_dir(&out)?;
    cfg.save(&out.join("config.toml"))?;

    println!("training {} with seed {}", cfg.agent.label(), cfg.seed);
    let trained = train(&env, &cfg.agent, cfg.seed, cfg.eval.seed, |r| print_epoch("", r))?;
    let metrics = evaluate(&trained.agent.actor, &env, cfg.eval.episodes, cfg.eval.seed)?;
    WeightsFile::of(&trained.agent).save(&out.join("weights.json"))?;
    save_training_log(&out.join("training_log.toml"), &trained.log)?;
    save_metrics(&out.join("metrics.toml"), &cfg.agent.label(), &metrics)?;
    write_sidecar(&out, "train")?;
    println!("final: {}", format_metrics(&metrics));
    Ok(())
}

fn cmd_eval(weights: &Path, config: Option<&Path>, episodes: usize, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    if episodes == 0 {
        bail!("--episodes must be at least 1");
    }
    let cfg = load_config(config)?;
    let env = cfg.to_env()?;
    let file = WeightsFile::load(weights)?;
    let actor = file.actor_for(&cfg.agent, env.observation_dim())?;
    let metrics = evaluate(&actor, &env, episodes, seed.unwrap_or(cfg.eval.seed))?;
    println!("{}", format_metrics(&metrics));
    if let Some(p) = out {
        save_metrics(p, &file.label, &metrics)?;
    }
    Ok(())
}

/// First hitting state of the rollout stream whose incoming flight stays
/// above the table for the whole serve segment.
fn servable_hit(env: &StrokeEnv, seed: u64, serve_duration: f64) -> Result<HitState> {
    for i in 0..1000 {
        let hit = sample_hit_state(&mut episode_rng(seed, Stream::Rollout, i), &env.evaluation_ranges, env.target)?;
        if synthesize_serve(&hit, serve_duration, env).is_ok() {
            return Ok(hit);
        }
    }
    bail!("no servable hitting state found for seed {seed}")
}

fn cmd_rollout(config: Option<&Path>, seed: u64, out: &Path, weights: Option<&Path>, serve_duration: f64) -> Result<()> {
    if !(serve_duration >= 0.0) {
        bail!("--serve-duration must be non-negative");
    }
    let cfg = load_config(config)?;
    let env = cfg.to_env()?;
    let hit = servable_hit(&env, seed, serve_duration)?;
    let action = match weights {
        Some(w) => {
            let actor = WeightsFile::load(w)?.actor_for(&cfg.agent, env.observation_dim())?;
            let obs = env.scale().normalize(&hit);
            let y = actor.predict_one(&obs)?;
            [y[0], y[1], y[2]]
        }
        None => [0.0; 3],
    };
    let racket = env.racket_for(action, &hit);
    let (rows, outcome) = episode_trajectory(&hit, &racket, serve_duration, &env)?;

    let mut csv = String::from("t,px,py,pz,vx,vy,vz,wx,wy,wz\n");
    for s in &rows {
        let v = [s.t, s.p.x, s.p.y, s.p.z, s.v.x, s.v.y, s.v.z, s.w.x, s.w.y, s.w.z];
        let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    fs::write(out, csv).with_context(|| format!("cannot write {}", out.display()))?;
    match outcome.failure {
        None => println!("{} rows; landed at {:?}", rows.len(), outcome.landing.unwrap_or_default()),
        Some(f) => println!("{} rows; failed: {}", rows.len(), f.as_str()),
    }
    Ok(())
}

fn cmd_calibrate(h1: f64, h2: f64, theta: Option<f64>) -> Result<()> {
    let restitution = estimate_restitution(h1, h2)?;
    println!("restitution {restitution:.6}");
    if let Some(deg) = theta {
        println!("friction {:.6}", estimate_friction(deg.to_radians())?);
    }
    Ok(())
}

fn cmd_ablate(config: Option<&Path>, seeds: &[u64], out: Option<PathBuf>) -> Result<()> {
    if seeds.is_empty() {
        bail!("--seeds needs at least one seed");
    }
    let cfg = load_config(config)?;
    let env = cfg.to_env()?;
    let out = out.unwrap_or_else(|| cfg.output_dir.clone());
    create_dir(&out)?;
    let configs: Vec<(String, AgentConfig)> = AgentConfig::ablation_variants()
        .into_iter()
        .map(|(label, v)| (label, cfg.agent.with_switches_of(&v)))
        .collect();
    let report = ablation_report(&configs, &env, seeds, cfg.eval.episodes, cfg.eval.seed, |label, seed, r| {
        print_epoch(&format!("{label} seed {seed}  "), r)
    })?;
    let text = report.to_text();
    print!("{text}");
    fs::write(out.join("ablation.txt"), &text).context("cannot write ablation.txt")?;
    fs::write(out.join("ablation.toml"), report.to_toml()?).context("cannot write ablation.toml")?;
    write_sidecar(&out, "ablate")?;
    Ok(())
}
