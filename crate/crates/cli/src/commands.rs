use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qqn_core::seed::{episode_seed, STREAM_EVAL_ENV};
use qqn_core::trainer::{evaluate_checkpoint, greedy_rollout, write_train_log, EpisodeLog, Rollout, Trainer};
use qqn_core::{Checkpoint, Outcome, Scenario};

use crate::config::RunConfig;
use crate::CliError;

pub const CONFIG_FILE: &str = "config.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const SUMMARY_FILE: &str = "train_summary.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const CHECKPOINT_EXT: &str = "ckpt";
pub const EVAL_FILE: &str = "eval.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

pub const SUMMARY_HEADER: [&str; 7] = [
    "interval",
    "first_episode",
    "last_episode",
    "mean_loss",
    "mean_reward",
    "success_rate",
    "collision_rate",
];
pub const EVAL_HEADER: [&str; 11] = [
    "checkpoint",
    "episode",
    "mean_reward",
    "std_reward",
    "standard_error",
    "success_rate",
    "collision_rate",
    "timeout_rate",
    "mean_roughness",
    "mean_discounted_reward",
    "mean_steps",
];
pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "x", "y", "v", "theta", "omega", "action", "reward"];

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", cfg.out.display())))?;
    fs::write(cfg.out.join(CONFIG_FILE), cfg.dump())?;
    Ok(())
}

pub fn checkpoint_file_name(index: usize) -> String {
    format!("checkpoint-{index:02}.{CHECKPOINT_EXT}")
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub checkpoint_paths: Vec<PathBuf>,
    pub log: Vec<EpisodeLog<f64>>,
}

/// Trains and writes the log, the interval summary and every checkpoint into `cfg.out`.
///
/// On divergence the log up to the failing episode is still written.
pub fn train(cfg: &RunConfig) -> Result<TrainReport, CliError> {
    prepare_out(cfg)?;
    let ckpt_dir = cfg.out.join(CHECKPOINT_DIR);
    fs::create_dir_all(&ckpt_dir)?;

    let mut trainer = Trainer::new(cfg.train.clone(), cfg.world.clone(), cfg.reward, cfg.seed)?;
    let mut paths = Vec::new();
    let mut failure = None;
    while !trainer.is_finished() {
        if let Err(e) = trainer.run_episode() {
            failure = Some(e);
            break;
        }
        while paths.len() < trainer.checkpoints().len() {
            let k = paths.len() + 1;
            let path = ckpt_dir.join(checkpoint_file_name(k));
            trainer.checkpoints()[k - 1].save(&path)?;
            if let Some(last) = trainer.log().last() {
                eprintln!(
                    "checkpoint {k:2} after episode {:5}: reward {:9.3}, {}",
                    last.episode + 1,
                    last.total_reward,
                    last.outcome
                );
            }
            paths.push(path);
        }
    }
    let log = trainer.log().to_vec();
    write_train_log(BufWriter::new(fs::File::create(cfg.out.join(TRAIN_LOG_FILE))?), &log)?;
    write_summary(&cfg.out.join(SUMMARY_FILE), cfg, &log)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(TrainReport {
        checkpoint_paths: paths,
        log,
    })
}

/// One row per checkpoint interval: mean loss (over episodes that trained), mean reward
/// and outcome rates.
fn write_summary(path: &Path, cfg: &RunConfig, log: &[EpisodeLog<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?));
    w.write_record(SUMMARY_HEADER)?;
    let mut start = 0;
    for k in 1..=cfg.train.checkpoints {
        let end = cfg.train.checkpoint_episode(k).min(log.len());
        if end <= start {
            continue;
        }
        let rows = &log[start..end];
        let n = rows.len() as f64;
        let losses: Vec<f64> = rows.iter().filter_map(|r| r.mean_loss).collect();
        let mean_loss = if losses.is_empty() {
            String::new()
        } else {
            format!("{:?}", losses.iter().sum::<f64>() / losses.len() as f64)
        };
        let rate = |o: Outcome| rows.iter().filter(|r| r.outcome == o).count() as f64 / n;
        w.write_record([
            k.to_string(),
            start.to_string(),
            (end - 1).to_string(),
            mean_loss,
            format!("{:?}", rows.iter().map(|r| r.total_reward).sum::<f64>() / n),
            format!("{:?}", rate(Outcome::Success)),
            format!("{:?}", rate(Outcome::Collision)),
        ])?;
        start = end;
    }
    w.flush()?;
    Ok(())
}

/// Checkpoint files at `path`: the file itself, or every `*.ckpt` in a directory (or its
/// `checkpoints` subdirectory) in name order.
pub fn checkpoint_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(CliError::Other(format!("no checkpoint at {}", path.display())));
    }
    let sub = path.join(CHECKPOINT_DIR);
    let dir = if sub.is_dir() { sub } else { path.to_path_buf() };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == CHECKPOINT_EXT))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Other(format!("no checkpoints found in {}", dir.display())));
    }
    Ok(files)
}

/// Scenario tag of the first checkpoint at `path`.
pub fn checkpoint_scenario(path: &Path) -> Result<Scenario, CliError> {
    let first = checkpoint_files(path)?.remove(0);
    Ok(Checkpoint::<f64>::load(&first)?.scenario())
}

/// Greedy evaluation of every checkpoint at `path`; one CSV row per checkpoint, in
/// name order.
pub fn eval(cfg: &RunConfig, path: &Path) -> Result<Vec<qqn_core::trainer::EvalSummary<f64>>, CliError> {
    let files = checkpoint_files(path)?;
    let checkpoints = files
        .iter()
        .map(|f| Checkpoint::<f64>::load_for(f, cfg.scenario()))
        .collect::<Result<Vec<_>, _>>()?;
    prepare_out(cfg)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(cfg.out.join(EVAL_FILE))?));
    w.write_record(EVAL_HEADER)?;
    let mut summaries = Vec::with_capacity(checkpoints.len());
    for (i, ck) in checkpoints.iter().enumerate() {
        let s = evaluate_checkpoint(
            ck,
            &cfg.world,
            &cfg.reward,
            cfg.train.gamma,
            cfg.train.eval_episodes,
            cfg.seed,
        )?;
        w.write_record([
            (i + 1).to_string(),
            ck.episode.to_string(),
            format!("{:?}", s.mean_reward),
            format!("{:?}", s.std_reward),
            format!("{:?}", s.standard_error()),
            format!("{:?}", s.success_rate),
            format!("{:?}", s.collision_rate),
            format!("{:?}", s.timeout_rate),
            format!("{:?}", s.mean_roughness),
            format!("{:?}", s.mean_discounted_reward),
            format!("{:?}", s.mean_steps),
        ])?;
        eprintln!(
            "{}: reward {:.3} ± {:.3}, success {:.2}, collision {:.2}",
            files[i].display(),
            s.mean_reward,
            s.standard_error(),
            s.success_rate,
            s.collision_rate
        );
        summaries.push(s);
    }
    w.flush()?;
    Ok(summaries)
}

/// One greedy episode (the first evaluation world for `cfg.seed`) written per step.
/// A directory argument uses its last checkpoint.
pub fn export_traj(cfg: &RunConfig, path: &Path) -> Result<Rollout<f64>, CliError> {
    let file = checkpoint_files(path)?.pop().expect("checkpoint_files is never empty");
    let ck = Checkpoint::<f64>::load_for(&file, cfg.scenario())?;
    let world_seed = episode_seed(cfg.seed, STREAM_EVAL_ENV, 0);
    let rollout = greedy_rollout(&ck.qnet, &cfg.world, &cfg.reward, cfg.train.gamma, world_seed)?;
    prepare_out(cfg)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(cfg.out.join(TRAJECTORY_FILE))?));
    w.write_record(TRAJECTORY_HEADER)?;
    for p in &rollout.points {
        w.write_record(
            [p.t, p.x, p.y, p.v, p.theta, p.omega, p.action, p.reward].map(|v| format!("{v:?}")),
        )?;
    }
    w.flush()?;
    eprintln!(
        "{}: {} steps, outcome {}, reward {:.3}",
        file.display(),
        rollout.points.len(),
        rollout.outcome,
        rollout.total_reward
    );
    Ok(rollout)
}
