//! Time-resolved absorption spectra assembled from per-detuning engine runs.
//!
//! A scan integrates the first-order probe response once per detuning (in
//! parallel, with a deterministic layout) and collects the stationary
//! signal, the demodulated wave-mixing signal, and optionally a pump-off
//! baseline on the same grid so the pump-induced change is available
//! directly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Engine, EngineError, TurnOnMode};
use crate::signal::{measure_lineshape, LineshapeMetrics, SignalError};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("detuning list is empty")]
    EmptyDetuningList,
    #[error("detuning at index {index} is not finite")]
    NonFiniteDetuning { index: usize },
    #[error("time index {index} out of range ({len} samples)")]
    TimeIndexOutOfRange { index: usize, len: usize },
    #[error("scan was run without the linear baseline")]
    MissingLinearBaseline,
}

/// Wave-mixing signal at time `t` from its complex amplitude: the new field
/// component oscillates at twice the probe-pump detuning.
pub fn fwm_signal(amplitude: Complex64, delta: f64, t: f64) -> f64 {
    -(amplitude * Complex64::from_polar(1.0, 2.0 * delta * t)).im
}

/// Pump-probe beat signal at time `t` from its complex amplitude.
pub fn beat_signal(amplitude: Complex64, delta: f64, t: f64) -> f64 {
    -(amplitude * Complex64::from_polar(1.0, delta * t)).im
}

/// Scan request: which detunings, how long, how densely, and what to keep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Probe-pump detunings, one engine run each.
    pub deltas: Vec<f64>,
    /// Final time of every run (times start at zero).
    pub t_final: f64,
    /// Number of equidistant samples per run, endpoints included.
    pub time_samples: usize,
    pub turn_on: TurnOnMode,
    /// Keep the demodulated wave-mixing signal (off by default downstream:
    /// in most detection geometries it is filtered out before the probe
    /// photodiode).
    pub include_fwm: bool,
    /// Also integrate the pump-off response per detuning so the
    /// pump-induced change of the spectrum is available.
    pub include_linear: bool,
    /// Integration step override; `None` uses the engine default.
    pub step: Option<f64>,
}

/// Per-detuning rows of time-resolved signals.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumGrid {
    pub delta_values: Vec<f64>,
    pub time_values: Vec<f64>,
    /// Stationary probe absorption, indexed `[detuning][time]`.
    pub alpha_s: Vec<Vec<f64>>,
    /// Demodulated wave-mixing signal, same layout.
    pub alpha_fwm: Option<Vec<Vec<f64>>>,
    /// Pump-off stationary absorption, same layout.
    pub alpha_linear: Option<Vec<Vec<f64>>>,
    /// Pump-induced change `alpha_s - alpha_linear`, same layout.
    pub delta_alpha: Option<Vec<Vec<f64>>>,
}

/// Lineshape summary of a spectral cut, in detuning units.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetuningLineshape {
    pub peak_delta: f64,
    pub peak_value: f64,
    pub baseline: f64,
    pub fwhm: f64,
    pub lorentzian_score: f64,
}

impl From<LineshapeMetrics> for DetuningLineshape {
    fn from(m: LineshapeMetrics) -> Self {
        Self {
            peak_delta: m.peak_x,
            peak_value: m.peak_value,
            baseline: m.baseline,
            fwhm: m.fwhm,
            lorentzian_score: m.lorentzian_score,
        }
    }
}

/// Run the scan.  Detunings are processed in parallel; the output layout
/// follows the input order deterministically.
pub fn scan(engine: &Engine, config: &ScanConfig) -> Result<SpectrumGrid, SpectraError> {
    if config.deltas.is_empty() {
        return Err(SpectraError::EmptyDetuningList);
    }
    if let Some(index) = config.deltas.iter().position(|d| !d.is_finite()) {
        return Err(SpectraError::NonFiniteDetuning { index });
    }

    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = config
        .deltas
        .par_iter()
        .map(|&delta| -> Result<_, SpectraError> {
            let tr = engine.evolve_first_order(
                delta,
                config.turn_on,
                config.t_final,
                config.time_samples,
                config.step,
            )?;
            let fwm = tr
                .fwm_amplitude
                .iter()
                .zip(&tr.times)
                .map(|(&a, &t)| fwm_signal(a, delta, t))
                .collect();
            Ok((tr.times, tr.stationary_absorption, fwm))
        })
        .collect::<Result<_, _>>()?;

    let linear: Option<Vec<Vec<f64>>> = if config.include_linear {
        let mut quiet = engine.spec().clone();
        quiet.pump.rabi = Complex64::ZERO;
        let baseline_engine = Engine::new(quiet)?;
        Some(
            config
                .deltas
                .par_iter()
                .map(|&delta| -> Result<_, SpectraError> {
                    // with the pump off the isotropic state is already
                    // stationary, so the turn-on mode is irrelevant and the
                    // cheap simultaneous path is used
                    let tr = baseline_engine.evolve_first_order(
                        delta,
                        TurnOnMode::Simultaneous,
                        config.t_final,
                        config.time_samples,
                        config.step,
                    )?;
                    Ok(tr.stationary_absorption)
                })
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };

    let time_values = rows[0].0.clone();
    let alpha_s: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    let alpha_fwm = config
        .include_fwm
        .then(|| rows.iter().map(|r| r.2.clone()).collect());
    let delta_alpha = linear.as_ref().map(|lin| {
        alpha_s
            .iter()
            .zip(lin)
            .map(|(a, l)| a.iter().zip(l).map(|(x, y)| x - y).collect())
            .collect()
    });

    Ok(SpectrumGrid {
        delta_values: config.deltas.clone(),
        time_values,
        alpha_s,
        alpha_fwm,
        alpha_linear: linear,
        delta_alpha,
    })
}

impl SpectrumGrid {
    fn cut(rows: &[Vec<f64>], index: usize) -> Vec<f64> {
        rows.iter().map(|r| r[index]).collect()
    }

    /// Stationary-signal spectral cut at one sample time.
    pub fn stationary_cut(&self, time_index: usize) -> Result<Vec<f64>, SpectraError> {
        self.check_time(time_index)?;
        Ok(Self::cut(&self.alpha_s, time_index))
    }

    /// Pump-induced-change spectral cut at one sample time.
    pub fn difference_cut(&self, time_index: usize) -> Result<Vec<f64>, SpectraError> {
        self.check_time(time_index)?;
        let rows = self
            .delta_alpha
            .as_ref()
            .ok_or(SpectraError::MissingLinearBaseline)?;
        Ok(Self::cut(rows, time_index))
    }

    /// Lineshape summary of the pump-induced change at one sample time.
    pub fn difference_lineshape(
        &self,
        time_index: usize,
    ) -> Result<DetuningLineshape, SpectraError> {
        let values = self.difference_cut(time_index)?;
        Ok(measure_lineshape(&self.delta_values, &values)?.into())
    }

    fn check_time(&self, index: usize) -> Result<(), SpectraError> {
        if index >= self.time_values.len() {
            return Err(SpectraError::TimeIndexOutOfRange {
                index,
                len: self.time_values.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{AtomicTransition, Polarization};
    use crate::engine::{EngineSpec, FieldSpec};
    use approx::assert_relative_eq;

    fn lin_perp_lin(fg: f64, fe: f64, pump_rabi: f64, probe_rabi: f64) -> Engine {
        Engine::new(EngineSpec {
            transition: AtomicTransition::bare(fg, fe).unwrap(),
            pump: FieldSpec {
                rabi: Complex64::new(pump_rabi, 0.0),
                polarization: Polarization::linear_x(),
            },
            pump_detuning: 0.0,
            probe: FieldSpec {
                rabi: Complex64::new(probe_rabi, 0.0),
                polarization: Polarization::linear_y(),
            },
            larmor_ground: 0.0,
            larmor_excited: 0.0,
        })
        .unwrap()
    }

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn scan_layout_is_deterministic() {
        let engine = lin_perp_lin(1.0, 0.0, 0.2, 0.02);
        let config = ScanConfig {
            deltas: linspace(-0.05, 0.05, 5),
            t_final: 40.0,
            time_samples: 21,
            turn_on: TurnOnMode::Simultaneous,
            include_fwm: true,
            include_linear: true,
            step: None,
        };
        let a = scan(&engine, &config).unwrap();
        let b = scan(&engine, &config).unwrap();
        assert_eq!(a.delta_values, config.deltas);
        assert_eq!(a.time_values.len(), 21);
        assert_eq!(a.alpha_s.len(), 5);
        assert_eq!(a.alpha_s[0].len(), 21);
        assert_eq!(a.alpha_s, b.alpha_s);
        assert_eq!(a.alpha_fwm, b.alpha_fwm);
        assert_eq!(a.alpha_linear, b.alpha_linear);
    }

    #[test]
    fn linear_baseline_matches_the_lorentzian_profile() {
        let engine = lin_perp_lin(1.0, 0.0, 0.2, 0.02);
        let config = ScanConfig {
            deltas: vec![0.0, 0.06, -0.12],
            t_final: 400.0,
            time_samples: 41,
            turn_on: TurnOnMode::Simultaneous,
            include_fwm: false,
            include_linear: true,
            step: None,
        };
        let grid = scan(&engine, &config).unwrap();
        let lin = grid.alpha_linear.as_ref().unwrap();
        let w2sq = 0.02f64.powi(2);
        for (i, &delta) in grid.delta_values.iter().enumerate() {
            let expect = w2sq * (1.0 / 3.0) * (1.0 / 3.0) * (0.5 / (0.25 + delta * delta));
            assert_relative_eq!(*lin[i].last().unwrap(), expect, max_relative = 1e-6);
        }
        // and the difference rows are exactly stationary minus baseline
        let diff = grid.delta_alpha.as_ref().unwrap();
        for i in 0..grid.delta_values.len() {
            for k in 0..grid.time_values.len() {
                assert_eq!(diff[i][k], grid.alpha_s[i][k] - lin[i][k]);
            }
        }
    }

    #[test]
    fn open_transition_develops_a_narrow_transparency_dip() {
        let engine = lin_perp_lin(1.0, 0.0, 0.2, 0.02);
        let config = ScanConfig {
            deltas: linspace(-0.1, 0.1, 21),
            t_final: 1500.0,
            time_samples: 11,
            turn_on: TurnOnMode::Simultaneous,
            include_fwm: false,
            include_linear: true,
            step: Some(0.05),
        };
        let grid = scan(&engine, &config).unwrap();
        let last = grid.time_values.len() - 1;
        let shape = grid.difference_lineshape(last).unwrap();
        assert!(shape.peak_value < shape.baseline, "dip expected");
        assert!(shape.peak_delta.abs() < 5e-3, "dip centred, got {}", shape.peak_delta);
        // optical pumping into the dark superposition is essentially
        // complete by this time: the dip depth cancels the linear absorption
        let lin = grid.alpha_linear.as_ref().unwrap();
        let center = 10;
        let transparency =
            -grid.delta_alpha.as_ref().unwrap()[center][last] / lin[center][last];
        assert!(transparency > 0.95, "transparency {transparency}");
    }

    #[test]
    fn wave_mixing_rows_are_the_demodulated_amplitudes() {
        let engine = lin_perp_lin(1.0, 0.0, 0.2, 0.01);
        let delta = 0.04;
        let config = ScanConfig {
            deltas: vec![delta],
            t_final: 60.0,
            time_samples: 31,
            turn_on: TurnOnMode::Simultaneous,
            include_fwm: true,
            include_linear: false,
            step: None,
        };
        let grid = scan(&engine, &config).unwrap();
        let tr = engine
            .evolve_first_order(delta, TurnOnMode::Simultaneous, 60.0, 31, None)
            .unwrap();
        let fwm = grid.alpha_fwm.as_ref().unwrap();
        for k in 0..tr.times.len() {
            assert_eq!(fwm[0][k], fwm_signal(tr.fwm_amplitude[k], delta, tr.times[k]));
        }
    }

    #[test]
    fn scan_input_validation() {
        let engine = lin_perp_lin(1.0, 0.0, 0.2, 0.02);
        let mut config = ScanConfig {
            deltas: vec![],
            t_final: 10.0,
            time_samples: 5,
            turn_on: TurnOnMode::Simultaneous,
            include_fwm: false,
            include_linear: false,
            step: None,
        };
        assert!(matches!(
            scan(&engine, &config),
            Err(SpectraError::EmptyDetuningList)
        ));
        config.deltas = vec![0.0, f64::NAN];
        assert!(matches!(
            scan(&engine, &config),
            Err(SpectraError::NonFiniteDetuning { index: 1 })
        ));
        config.deltas = vec![0.0];
        let grid = scan(&engine, &config).unwrap();
        assert!(matches!(
            grid.stationary_cut(99),
            Err(SpectraError::TimeIndexOutOfRange { .. })
        ));
        assert!(matches!(
            grid.difference_cut(0),
            Err(SpectraError::MissingLinearBaseline)
        ));
    }
}
