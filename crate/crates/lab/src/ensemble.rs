//! Parallel ensembles. Trajectory `j` always lands in batch `j % B` and all
//! merges are exact, so the result does not depend on thread scheduling.

use rayon::prelude::*;
use squeezesim_core::estimators::{Batched, Merge};
use squeezesim_core::sed::{sed_trajectory, validate_sed, SedAccumulator, SedOptions};
use squeezesim_core::trajectory::{
    chd_trajectory, homodyne_trajectory, n_batches, offset_amplitude, validate_chd, validate_homodyne,
    TrajectoryOptions, TrajectoryResult,
};
use squeezesim_core::{DetectionConfig, Result, SystemParams};

/// Runs `n_traj` independent tasks, one batch per rayon job.
pub fn par_batched<T, F>(n_traj: usize, empty: T, task: F) -> Result<Batched<T>>
where
    T: Merge + Send + Sync,
    F: Fn(u64) -> Result<T> + Sync,
{
    let b = n_batches(n_traj);
    let batches = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut acc = empty.clone();
            for j in (k..n_traj).step_by(b) {
                acc.merge_from(&task(j as u64)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<T>>>()?;
    Batched::from_batches(batches)
}

pub fn homodyne_ensemble(params: &SystemParams, config: &DetectionConfig) -> Result<Batched<TrajectoryResult>> {
    validate_homodyne(params, config)?;
    let options = TrajectoryOptions::for_params(params);
    par_batched(config.n_traj, TrajectoryResult::empty(config.tau_grid()), |j| {
        homodyne_trajectory(params, config, &options, j)
    })
}

pub fn chd_ensemble(params: &SystemParams, config: &DetectionConfig) -> Result<Batched<TrajectoryResult>> {
    validate_chd(params, config)?;
    let options = TrajectoryOptions::for_params(params);
    let amp = offset_amplitude(params, config)?;
    par_batched(config.n_traj, TrajectoryResult::empty(config.tau_grid()), |j| {
        chd_trajectory(params, config, amp, &options, j)
    })
}

pub fn sed_ensemble(params: &SystemParams, config: &DetectionConfig) -> Result<Batched<SedAccumulator>> {
    validate_sed(params, config)?;
    let options = SedOptions::default();
    let amp = offset_amplitude(params, config)?;
    par_batched(config.n_traj, SedAccumulator::new(config.tau_grid()), |j| {
        sed_trajectory(params, config, amp, &options, j)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use squeezesim_core::trajectory::run_ensemble;

    #[test]
    fn parallel_matches_sequential() {
        let p = SystemParams::baseline(0.1);
        let c = DetectionConfig {
            t_max: 30.0,
            tau_max: 1.0,
            n_tau: 11,
            n_traj: 7,
            ..DetectionConfig::default()
        };
        let options = TrajectoryOptions::for_params(&p);
        let seq = run_ensemble(c.n_traj, c.tau_grid(), |j| homodyne_trajectory(&p, &c, &options, j)).unwrap();
        let par = homodyne_ensemble(&p, &c).unwrap();
        assert_eq!(seq, par);
    }
}
