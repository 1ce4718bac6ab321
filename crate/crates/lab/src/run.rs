//! Dispatch from a spec to the owning simulation, with closed-form curves
//! attached alongside the estimates.

use squeezesim_core::estimators::{tail_normalize, CorrelationEstimate, NormalizeMode, DEFAULT_TAIL_FRACTION};
use squeezesim_core::model::{
    chd_prediction, classical_spectrum, oracle_current_autocorrelation, wigner_spectrum, Quadrature,
};
use squeezesim_core::sed::{fit_decomposition, run_calibration, sed_h_estimate, sed_prediction, sed_spike};
use squeezesim_core::trajectory::{
    autocorrelation_estimate, autocorrelation_spike, h_estimate, h_spike, moment_estimate, offset_amplitude,
    MomentEstimate, TrajectoryStats,
};

use crate::ensemble::{chd_ensemble, homodyne_ensemble, sed_ensemble};
use crate::error::LabError;
use crate::output::ResultRecord;
use crate::spec::{Experiment, ExperimentSpec};

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn correlation_record(
    header: Vec<(String, String)>,
    est: &CorrelationEstimate,
    oracle: &CorrelationEstimate,
) -> ResultRecord {
    let rows = (0..est.len())
        .map(|i| {
            vec![
                est.tau[i],
                est.mean[i],
                est.stderr[i],
                est.count[i] as f64,
                oracle.mean[i],
            ]
        })
        .collect();
    ResultRecord {
        header,
        columns: ["tau", "mean", "stderr", "count", "oracle"].map(String::from).to_vec(),
        rows,
    }
}

fn moments_header(h: &mut Vec<(String, String)>, m: &MomentEstimate) {
    h.push(kv("photon-number", m.photon_number.0));
    h.push(kv("photon-number-stderr", m.photon_number.1));
    h.push(kv("y2", m.y2.0));
    h.push(kv("y2-stderr", m.y2.1));
}

fn stats_header(h: &mut Vec<(String, String)>, s: &TrajectoryStats) {
    h.push(kv("trajectories", s.trajectories));
    h.push(kv("max-fock-dim", s.max_dim));
    h.push(kv("leak-restarts", s.restarts));
    h.push(kv("start-events", s.jumps));
    h.push(kv("coarse-steps", s.coarse_steps));
}

/// Runs the experiment named in `spec` and returns its table.
pub fn run(spec: &ExperimentSpec) -> Result<ResultRecord, LabError> {
    spec.validate()?;
    let Some(experiment) = spec.experiment else {
        return Err(LabError::invalid("no experiment selected"));
    };
    let p = &spec.params;
    let c = &spec.detection;
    let mut header = spec.echo();
    header.push(kv("version", env!("CARGO_PKG_VERSION")));
    let width = p.spike_width();
    match experiment {
        Experiment::Spectra => {
            let n = spec.n_omega;
            let mut rows = Vec::with_capacity(n);
            for k in 0..n {
                let w = spec.omega_max * k as f64 / (n - 1) as f64;
                rows.push(vec![
                    w,
                    classical_spectrum(p, Quadrature::Y, w)?,
                    wigner_spectrum(p, Quadrature::Y, w)?,
                    classical_spectrum(p, Quadrature::X, w)?,
                    wigner_spectrum(p, Quadrature::X, w)?,
                ]);
            }
            Ok(ResultRecord {
                header,
                columns: ["omega", "classical_y", "wigner_y", "classical_x", "wigner_x"]
                    .map(String::from)
                    .to_vec(),
                rows,
            })
        }
        Experiment::AutocorrQuantum => {
            let batched = homodyne_ensemble(p, c)?;
            let est = autocorrelation_estimate(&batched)?;
            let oracle = oracle_current_autocorrelation(p, &est.tau)?;
            let spike = autocorrelation_spike(&batched, width)?;
            header.push(kv("spike-width", width));
            header.push(kv("spike", spike.0));
            header.push(kv("spike-stderr", spike.1));
            moments_header(&mut header, &moment_estimate(&batched)?);
            stats_header(&mut header, &batched.total()?.stats);
            Ok(correlation_record(header, &est, &oracle))
        }
        Experiment::ChdQuantum => {
            let amp = offset_amplitude(p, c)?;
            let batched = chd_ensemble(p, c)?;
            let est = h_estimate(&batched, NormalizeMode::default())?;
            let oracle = tail_normalize(&chd_prediction(p, amp * amp, &est.tau)?, DEFAULT_TAIL_FRACTION)?;
            let spike = h_spike(&batched, NormalizeMode::default(), width)?;
            header.push(kv("offset-amp-used", amp));
            header.push(kv("normalization", "tail-window"));
            header.push(kv("spike-width", width));
            header.push(kv("spike", spike.0));
            header.push(kv("spike-stderr", spike.1));
            moments_header(&mut header, &moment_estimate(&batched)?);
            stats_header(&mut header, &batched.total()?.stats);
            Ok(correlation_record(header, &est, &oracle))
        }
        Experiment::ChdSed => {
            let amp = offset_amplitude(p, c)?;
            let batched = sed_ensemble(p, c)?;
            let est = sed_h_estimate(&batched)?;
            let oracle = sed_prediction(p, c, amp, &est.tau)?;
            let spike = sed_spike(&batched, width)?;
            let fit = fit_decomposition(&batched)?;
            let total = batched.total()?;
            header.push(kv("offset-amp-used", amp));
            header.push(kv("spike-width", width));
            header.push(kv("spike", spike.0));
            header.push(kv("spike-stderr", spike.1));
            header.push(kv("mean-start-flux", total.mean_start_flux()));
            header.push(kv("decomposition-amplitude", fit.amplitude));
            Ok(correlation_record(header, &est, &oracle))
        }
        Experiment::Calibrate => {
            let est = run_calibration(p, c)?;
            Ok(ResultRecord {
                header,
                columns: ["nbar_a", "mean", "stderr", "count", "oracle"]
                    .map(String::from)
                    .to_vec(),
                rows: vec![vec![p.nbar_a, est.mean, est.stderr, c.n_traj as f64, p.nbar_a]],
            })
        }
    }
}
