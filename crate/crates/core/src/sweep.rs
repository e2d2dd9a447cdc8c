//! Parameter sweeps: every (scenario, node count, seed) run in parallel,
//! with rows written by a single writer in a fixed order so the output is
//! independent of scheduling.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::mpsc;

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::engine::run;
use crate::error::Result;
use crate::metrics::{aggregate, RunReport, ScenarioSummary};
use crate::report::{CsvRow, ResultsWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Job {
    config: usize,
    nodes: usize,
    seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub runs: Vec<RunReport>,
    pub summaries: Vec<ScenarioSummary>,
}

fn jobs(configs: &[ScenarioConfig]) -> Vec<Job> {
    let mut out = Vec::new();
    for (config, c) in configs.iter().enumerate() {
        for &nodes in &c.node_counts {
            for &seed in &c.seeds {
                out.push(Job { config, nodes, seed });
            }
        }
    }
    out
}

/// Runs the full matrix of every config and streams CSV to `out`: per-seed
/// rows of one (scenario, node count) group followed by its `AGG` row.
/// `progress` is called with (finished, total) as runs complete.
pub fn run_sweep<W: Write>(
    configs: &[ScenarioConfig],
    out: W,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepOutcome> {
    for c in configs {
        c.validate()?;
    }
    let jobs = jobs(configs);
    let total = jobs.len();
    let mut writer = ResultsWriter::new(out)?;
    let mut outcome = SweepOutcome::default();

    let (tx, rx) = mpsc::channel::<(usize, Result<RunReport>)>();
    std::thread::scope(|scope| -> Result<()> {
        let jobs = &jobs;
        scope.spawn(move || {
            jobs.par_iter().enumerate().for_each_with(tx, |tx, (k, job)| {
                let cfg = configs[job.config].run_config(job.nodes);
                // the receiver only goes away after an error; later runs are moot
                let _ = tx.send((k, run(&cfg, job.seed)));
            });
        });

        let mut pending: BTreeMap<usize, RunReport> = BTreeMap::new();
        let mut group: Vec<RunReport> = Vec::new();
        let mut next = 0;
        let mut done = 0;
        for (k, result) in rx {
            pending.insert(k, result?);
            done += 1;
            progress(done, total);
            while let Some(report) = pending.remove(&next) {
                writer.write(&CsvRow::from(&report))?;
                let job = jobs[next];
                group.push(report);
                next += 1;
                let group_ends = jobs
                    .get(next)
                    .is_none_or(|j| (j.config, j.nodes) != (job.config, job.nodes));
                if group_ends {
                    let summary = aggregate(&group)?;
                    writer.write(&CsvRow::from(&summary))?;
                    writer.flush()?;
                    outcome.summaries.push(summary);
                    outcome.runs.append(&mut group);
                }
            }
        }
        Ok(())
    })?;
    writer.flush()?;
    Ok(outcome)
}
