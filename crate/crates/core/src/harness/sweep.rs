use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::summary::{heatmaps, read_csv_file, select_star, summarize, write_csv_file, FAILURE_COLUMNS, SELECTION_COLUMNS, SUMMARY_COLUMNS, TRIAL_COLUMNS};
use super::{trial::truth_seed, compute_truth, Experiment, Failure, JobOutput, SummaryRow, SweepConfig, TrialResult, Truth};
use crate::error::{Error, Result};

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// What a sweep wrote and how much of it was reused from an earlier run.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub truth: Truth,
    pub results: Vec<TrialResult>,
    pub failures: Vec<Failure>,
    pub summary: Vec<SummaryRow>,
    pub jobs_run: usize,
    pub jobs_reused: usize,
}

fn job_paths(dir: &Path, n: usize, trial: usize) -> (PathBuf, PathBuf) {
    let stem = format!("n{n}_trial{trial:05}");
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.failures.csv")))
}

fn load_job(dir: &Path, n: usize, trial: usize) -> Result<Option<JobOutput>> {
    let (results, failures) = job_paths(dir, n, trial);
    if !results.exists() {
        return Ok(None);
    }
    Ok(Some(JobOutput {
        results: read_csv_file(&results)?,
        failures: if failures.exists() { read_csv_file(&failures)? } else { Vec::new() },
    }))
}

fn store_job(dir: &Path, n: usize, trial: usize, job: &JobOutput) -> Result<()> {
    let (results, failures) = job_paths(dir, n, trial);
    write_csv_file(&job.failures, &FAILURE_COLUMNS, &failures)?;
    write_csv_file(&job.results, &TRIAL_COLUMNS, &results)
}

/// Reuses `truth.csv` from an earlier run of the same config.
fn load_or_compute_truth(config: &SweepConfig, path: &Path) -> Result<Truth> {
    if path.exists() {
        if let Some(t) = read_csv_file::<Truth>(path)?.into_iter().next() {
            return Ok(t);
        }
    }
    let env = config.env_spec()?;
    let pi_e = config.evaluation_spec()?.build(env.build().as_ref())?;
    log::info!("computing truth for {} under {}", config.env, config.evaluation);
    let truth = compute_truth(&env, pi_e.as_ref(), config.truth_episodes, truth_seed(config))?;
    write_csv_file(&[truth], &["value", "stderr", "episodes"], path)?;
    Ok(truth)
}

/// Writes summary, heatmap and selection files derived from `results`.
pub fn write_reports(results: &[TrialResult], out_dir: &Path) -> Result<Vec<SummaryRow>> {
    let summary = summarize(results)?;
    write_csv_file(&summary, &SUMMARY_COLUMNS, &out_dir.join("summary.csv"))?;
    for map in heatmaps(&summary) {
        let mut buf = Vec::new();
        map.write(&mut buf)?;
        write_atomic(&out_dir.join(format!("heatmap_n{}.csv", map.n)), &buf)?;
    }
    write_csv_file(&select_star(&summary), &SELECTION_COLUMNS, &out_dir.join("selection.csv"))?;
    Ok(summary)
}

/// Runs every `(n, trial)` job of `config`, skipping jobs whose files already
/// exist, then writes `trials.csv`, `failures.csv`, `summary.csv`,
/// `heatmap_n{n}.csv` and `selection.csv` into `config.out_dir`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let out = &config.out_dir;
    let jobs_dir = out.join("jobs");
    fs::create_dir_all(&jobs_dir).map_err(|e| Error::io(&jobs_dir, e))?;

    let config_path = out.join("config.toml");
    let text = config.to_toml_string();
    if config_path.exists() {
        let old = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
        if old != text {
            return Err(Error::Config(format!("{} holds a sweep with a different config", out.display())));
        }
    } else {
        write_atomic(&config_path, text.as_bytes())?;
    }

    let truth = load_or_compute_truth(config, &out.join("truth.csv"))?;
    let exp = Experiment::with_truth(config.clone(), truth)?;
    let jobs: Vec<(usize, usize)> = config.sizes.iter().flat_map(|&n| (0..config.trials).map(move |t| (n, t))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outputs: Vec<Result<(JobOutput, bool)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, trial)| {
                if let Some(job) = load_job(&jobs_dir, n, trial)? {
                    return Ok((job, false));
                }
                let job = exp.run_job(n, trial);
                store_job(&jobs_dir, n, trial, &job)?;
                log::info!("finished n={n} trial={trial}");
                Ok((job, true))
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    let (mut jobs_run, mut jobs_reused) = (0, 0);
    for outcome in outputs {
        let (job, ran) = outcome?;
        if ran {
            jobs_run += 1;
        } else {
            jobs_reused += 1;
        }
        results.extend(job.results);
        failures.extend(job.failures);
    }
    write_csv_file(&results, &TRIAL_COLUMNS, &out.join("trials.csv"))?;
    write_csv_file(&failures, &FAILURE_COLUMNS, &out.join("failures.csv"))?;
    if !failures.is_empty() {
        log::warn!("{} estimates failed; see failures.csv", failures.len());
    }
    let summary = write_reports(&results, out)?;
    Ok(SweepOutcome {
        truth,
        results,
        failures,
        summary,
        jobs_run,
        jobs_reused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(out: &Path) -> SweepConfig {
        SweepConfig::from_toml_str(&format!(
            "env = \"two_state\"\nbehavior = \"uniform\"\nevaluation = \"always:action=1\"\nsizes = [50]\nnum_abstract = [1, 2]\nclip = [1, \"unclipped\"]\ntrials = 2\nworkers = 2\nout_dir = {:?}\n",
            out.display().to_string()
        ))
        .unwrap()
    }

    #[test]
    fn small_sweep_writes_everything_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path());
        let first = run_sweep(&c).unwrap();
        assert_eq!(first.results.iter().filter(|r| r.estimator == crate::estimators::EstimatorId::Star).count(), 8);
        assert_eq!(first.results.len(), 8 + 2 * 5);
        assert!(first.summary.iter().all(|r| r.identity_gap() <= 1e-12 * r.mse.max(1.0)));
        for f in ["trials.csv", "summary.csv", "heatmap_n50.csv", "selection.csv", "failures.csv", "truth.csv", "config.toml"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let snapshot = fs::read(dir.path().join("summary.csv")).unwrap();
        let second = run_sweep(&c).unwrap();
        assert_eq!((second.jobs_run, second.jobs_reused), (0, 2));
        assert_eq!(fs::read(dir.path().join("summary.csv")).unwrap(), snapshot);
    }

    #[test]
    fn refuses_to_mix_configs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path());
        run_sweep(&c).unwrap();
        c.seed = 99;
        assert!(matches!(run_sweep(&c), Err(Error::Config(_))));
    }
}
