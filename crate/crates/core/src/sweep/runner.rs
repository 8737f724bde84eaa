use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::gaussmodel::ModelParams;
use crate::rng::{derive_seed, tags};
use crate::signedstats::{calibrate_null, estimate_power_many, NullInterval, StatisticRegistry, TestStatistic};

use super::config::SweepConfig;
use super::output::{SweepResult, SweepRow, Timings};

const ANY_Q: u64 = u64::MAX;

/// Runs the sweep with the built-in statistics.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, &StatisticRegistry::default())
}

/// Runs every `(d, q)` cell in grid order (`d` outer). Null intervals are
/// shared by all cells with the same statistic and, for mask-restricted
/// statistics, the same `q`; the null law depends on nothing else. Cell `c`
/// draws its alternative samples from `derive_seed(seed, [ALTERNATIVE, c])`
/// and all statistics are evaluated on the same draws.
pub fn run_sweep_with(config: &SweepConfig, registry: &StatisticRegistry) -> Result<SweepResult> {
    config.validate(registry)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = config.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?
    };
    let threads = pool.current_num_threads();
    pool.install(|| run_cells(config, registry, threads))
}

fn run_cells(config: &SweepConfig, registry: &StatisticRegistry, threads: usize) -> Result<SweepResult> {
    let start = Instant::now();
    let stats: Vec<_> = config
        .statistics
        .iter()
        .map(|name| registry.get(name))
        .collect::<Result<_>>()?;
    let d_grid = config.d_grid();
    let q_grid = config.q_grid();
    let null_trials = config.effective_null_trials();

    let mut nulls: BTreeMap<(usize, u64), NullInterval> = BTreeMap::new();
    for (si, stat) in stats.iter().enumerate() {
        let q_keys: Vec<u64> = if stat.uses_mask() {
            (0..q_grid.len() as u64).collect()
        } else {
            vec![ANY_Q]
        };
        for qk in q_keys {
            let q = if qk == ANY_Q { 1.0 } else { q_grid[qk as usize] };
            let params = ModelParams::new(config.n, config.m, config.p, q, 1)?;
            let seed = derive_seed(config.seed, &[tags::NULL_CALIBRATION, si as u64, qk]);
            let interval = calibrate_null(stat.as_ref(), &params, config.alpha, null_trials, seed)?;
            nulls.insert((si, qk), interval);
        }
    }
    let null_seconds = start.elapsed().as_secs_f64();

    let mut rows = Vec::with_capacity(d_grid.len() * q_grid.len() * stats.len());
    for (di, &d) in d_grid.iter().enumerate() {
        for (qi, &q) in q_grid.iter().enumerate() {
            let cell = (di * q_grid.len() + qi) as u64;
            let seed = derive_seed(config.seed, &[tags::ALTERNATIVE, cell]);
            let params = ModelParams::new(config.n, config.m, config.p, q, d)?;
            let tests: Vec<(&dyn TestStatistic, &NullInterval)> = stats
                .iter()
                .enumerate()
                .map(|(si, s)| {
                    let qk = if s.uses_mask() { qi as u64 } else { ANY_Q };
                    (s.as_ref(), &nulls[&(si, qk)])
                })
                .collect();
            let powers = estimate_power_many(&tests, &params, config.mask_mode, config.trials, seed)?;
            for ((stat, interval), est) in tests.iter().zip(powers) {
                rows.push(SweepRow {
                    d,
                    q,
                    stat: stat.name().to_string(),
                    power: est.power,
                    power_se: est.power_se,
                    null_lo: interval.lower,
                    null_hi: interval.upper,
                    h1_mean: est.h1_mean,
                    seed,
                });
            }
        }
    }
    let total_seconds = start.elapsed().as_secs_f64();
    Ok(SweepResult {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        timings: Timings {
            null_seconds,
            alternative_seconds: total_seconds - null_seconds,
            total_seconds,
        },
        rows,
    })
}
