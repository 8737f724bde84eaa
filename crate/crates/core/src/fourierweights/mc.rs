use rayon::prelude::*;

use crate::numerics::RunningMoments;
use crate::rng::{stream, StreamRng};

/// Draws per independent stream; fixes the draw-to-stream layout.
pub(crate) const DRAWS_PER_BATCH: usize = 1 << 14;

/// Moments of `draw` over `count` draws, where batch `b` of the draws uses
/// `stream(seed, &[b])`. Batches run in parallel and merge in order.
pub(crate) fn batched_moments<F>(count: usize, seed: u64, draw: F) -> RunningMoments
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    let batches = count.div_ceil(DRAWS_PER_BATCH);
    let parts: Vec<RunningMoments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, &[b as u64]);
            let len = DRAWS_PER_BATCH.min(count - b * DRAWS_PER_BATCH);
            let mut m = RunningMoments::new();
            for _ in 0..len {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    let mut total = RunningMoments::new();
    for p in &parts {
        total.merge(p);
    }
    total
}
