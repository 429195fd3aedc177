//! Closed-form and few-state models of transient probe absorption.
//!
//! Two reference systems bracket the full degenerate-level solver: a
//! three-state chain (two stable ground states, one decaying excited state)
//! whose pump-induced Raman coherence carves a narrow transparency window,
//! and a four-state chain whose closed cycling leg feeds coherence back into
//! the ground pair through spontaneous emission, producing a narrow
//! *enhancement* instead.  Both admit an adiabatic solution built from a
//! single universal build-up lineshape, plus an exact small ODE system used
//! to validate it.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("argument `{name}` must be finite")]
    NonFiniteInput { name: &'static str },
    #[error("pumping parameter x must be positive, got {value}")]
    NonPositiveDamping { value: f64 },
    #[error("time must be non-negative, got {value}")]
    NegativeTime { value: f64 },
    #[error("decay rate must be positive, got {value}")]
    NonPositiveRate { value: f64 },
    #[error("ground-state branching rates must sum to the total decay rate (sum {sum}, total {total})")]
    InconsistentBranching { sum: f64, total: f64 },
    #[error("open-leg coupling ratio magnitude must lie in [0, 1], got {value}")]
    CouplingOutOfRange { value: f64 },
    #[error("need at least two samples, got {got}")]
    TooFewSamples { got: usize },
}

/// Non-fatal diagnostics for parameter regimes where the adiabatic formulas
/// lose accuracy.  The exact ODE solvers remain valid regardless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeWarning {
    /// The optical pumping rate is not small against the excited-state decay
    /// rate, so eliminating the fast coherences is no longer clean.
    PumpingComparableToDecay { beta: f64, gamma: f64 },
    /// The detuning leaves the band where the slow-variable expansion holds.
    DetuningComparableToDecay { detuning: f64, gamma: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::PumpingComparableToDecay { beta, gamma } => write!(
                f,
                "pumping rate {beta:.3e} is above a tenth of the decay rate {gamma:.3e}; \
                 adiabatic formulas degrade"
            ),
            RegimeWarning::DetuningComparableToDecay { detuning, gamma } => write!(
                f,
                "detuning {detuning:.3e} is above a tenth of the decay rate {gamma:.3e}; \
                 adiabatic formulas degrade"
            ),
        }
    }
}

fn require_finite(value: f64, name: &'static str) -> Result<(), AnalyticError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(AnalyticError::NonFiniteInput { name })
    }
}

/// Universal build-up lineshape of a narrow pump-induced structure.
///
/// `x` is the structure's relaxation (optical pumping) rate and `y` the
/// probe-pump detuning, both in units of the excited-state decay rate;
/// `tau` is time in units of the excited-state lifetime.  The value rises
/// from zero at `tau = 0` toward the steady profile of [`f_function_steady`],
/// oscillating at the detuning while the transient decays at rate `x`.
pub fn f_function(x: f64, y: f64, tau: f64) -> Result<f64, AnalyticError> {
    require_finite(x, "x")?;
    require_finite(y, "y")?;
    require_finite(tau, "tau")?;
    if x <= 0.0 {
        return Err(AnalyticError::NonPositiveDamping { value: x });
    }
    if tau < 0.0 {
        return Err(AnalyticError::NegativeTime { value: tau });
    }
    let pole = Complex64::new(x, -y);
    let den = Complex64::new(0.5, -y);
    let z = pole * tau;
    let value = if z.norm() < 1e-3 {
        // (1 - exp(-z))/z expanded to dodge the small-z cancellation
        let phi = 1.0
            + z * (-0.5 + z * (1.0 / 6.0 + z * (-1.0 / 24.0 + z * (1.0 / 120.0))));
        (phi * tau / den).re
    } else {
        (((1.0 - (-z).exp()) / pole) / den).re
    };
    Ok(value)
}

/// Long-time limit of [`f_function`]: the steady lineshape
/// `(x/2 - y^2) / [(x/2 - y^2)^2 + y^2 (1/2 + x)^2]`, which changes sign at
/// `|y| = sqrt(x/2)` and therefore has shallow negative wings.
pub fn f_function_steady(x: f64, y: f64) -> Result<f64, AnalyticError> {
    require_finite(x, "x")?;
    require_finite(y, "y")?;
    if x <= 0.0 {
        return Err(AnalyticError::NonPositiveDamping { value: x });
    }
    let pole = Complex64::new(x, -y);
    let den = Complex64::new(0.5, -y);
    Ok((den * pole).inv().re)
}

// ---------------------------------------------------------------------------
// three-state chain (transparency)
// ---------------------------------------------------------------------------

/// Two stable ground states coupled to one decaying excited state.  The
/// resonant pump acts on one leg, the weak probe on the other; the shared
/// excited state decays back into both ground states.
#[derive(Debug, Clone, Copy)]
pub struct LambdaParams {
    /// Total excited-state decay rate.
    pub gamma: f64,
    /// Decay branch into the pump-side ground state.
    pub decay_to_pump_ground: f64,
    /// Decay branch into the probe-side ground state.
    pub decay_to_probe_ground: f64,
    /// Pump half-Rabi amplitude (real by phase choice).
    pub pump_rabi: f64,
    /// Probe half-Rabi amplitude; enters observables as its square modulus.
    pub probe_rabi: Complex64,
}

/// Exact state of the three-state chain sampled along a trajectory.
#[derive(Debug, Clone)]
pub struct LambdaTrajectory {
    pub times: Vec<f64>,
    /// Probe absorption (arbitrary units, positive = attenuation).
    pub absorption: Vec<f64>,
    pub probe_ground: Vec<f64>,
    pub pump_ground: Vec<f64>,
    pub excited: Vec<f64>,
    /// Optical coherence on the probe leg.
    pub probe_coherence: Vec<Complex64>,
    /// Ground-pair (Raman) coherence responsible for the narrow structure.
    pub raman_coherence: Vec<Complex64>,
    /// Largest deviation of the population sum from one along the run.
    pub max_trace_deviation: f64,
}

impl LambdaParams {
    pub fn new(
        gamma: f64,
        decay_to_pump_ground: f64,
        decay_to_probe_ground: f64,
        pump_rabi: f64,
        probe_rabi: Complex64,
    ) -> Result<Self, AnalyticError> {
        require_finite(gamma, "gamma")?;
        require_finite(decay_to_pump_ground, "decay_to_pump_ground")?;
        require_finite(decay_to_probe_ground, "decay_to_probe_ground")?;
        require_finite(pump_rabi, "pump_rabi")?;
        require_finite(probe_rabi.re, "probe_rabi.re")?;
        require_finite(probe_rabi.im, "probe_rabi.im")?;
        if gamma <= 0.0 {
            return Err(AnalyticError::NonPositiveRate { value: gamma });
        }
        if decay_to_pump_ground < 0.0 {
            return Err(AnalyticError::NonPositiveRate {
                value: decay_to_pump_ground,
            });
        }
        if decay_to_probe_ground < 0.0 {
            return Err(AnalyticError::NonPositiveRate {
                value: decay_to_probe_ground,
            });
        }
        let sum = decay_to_pump_ground + decay_to_probe_ground;
        if (sum - gamma).abs() > 1e-9 * gamma {
            return Err(AnalyticError::InconsistentBranching { sum, total: gamma });
        }
        Ok(Self {
            gamma,
            decay_to_pump_ground,
            decay_to_probe_ground,
            pump_rabi,
            probe_rabi,
        })
    }

    /// Equal branching into both ground states.
    pub fn symmetric(gamma: f64, pump_rabi: f64, probe_rabi: Complex64) -> Result<Self, AnalyticError> {
        Self::new(gamma, gamma / 2.0, gamma / 2.0, pump_rabi, probe_rabi)
    }

    /// Optical pumping rate of the ground-pair coherence, `2 W1^2 / gamma`.
    pub fn beta(&self) -> f64 {
        2.0 * self.pump_rabi * self.pump_rabi / self.gamma
    }

    /// Full width of the narrow transparency structure in detuning,
    /// `4 W1^2 / gamma` (twice the pumping rate).
    pub fn narrow_fwhm(&self) -> f64 {
        2.0 * self.beta()
    }

    /// Overall scale of the nonlinear response.  `initial_probe_ground` is
    /// the population prepared in the probe-side ground state at switch-on.
    pub fn k_coefficient(&self, initial_probe_ground: f64) -> f64 {
        2.0 * self.pump_rabi * self.pump_rabi * self.probe_rabi.norm_sqr()
            * initial_probe_ground
            / (self.gamma * self.gamma * self.gamma)
    }

    pub fn regime_warnings(&self, detuning: f64) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        if self.beta() > 0.1 * self.gamma {
            out.push(RegimeWarning::PumpingComparableToDecay {
                beta: self.beta(),
                gamma: self.gamma,
            });
        }
        if detuning.abs() > 0.1 * self.gamma {
            out.push(RegimeWarning::DetuningComparableToDecay {
                detuning,
                gamma: self.gamma,
            });
        }
        out
    }

    /// Linear (pump-off) probe absorption: a Lorentzian of half width
    /// `gamma / 2`.
    pub fn linear_absorption(&self, detuning: f64) -> f64 {
        let g = self.gamma;
        self.probe_rabi.norm_sqr() * Complex64::new(g / 2.0, -detuning).inv().re
    }

    /// Adiabatic pump-induced change of the probe absorption at time `t`
    /// after both fields switch on; negative values are transparency.
    pub fn nonlinear_absorption(
        &self,
        detuning: f64,
        t: f64,
        initial_probe_ground: f64,
    ) -> Result<f64, AnalyticError> {
        let g = self.gamma;
        let f = f_function(self.beta() / g, detuning / g, g * t)?;
        Ok(-self.k_coefficient(initial_probe_ground) * f)
    }

    /// Steady-state probe absorption with the pump on (adiabatic form):
    /// the linear Lorentzian minus the narrow pump-induced structure.
    pub fn steady_absorption(&self, detuning: f64, initial_probe_ground: f64) -> f64 {
        let g = self.gamma;
        let lorentz = Complex64::new(g / 2.0, -detuning).inv();
        let narrow = Complex64::new(self.beta(), -detuning).inv();
        let w1sq = self.pump_rabi * self.pump_rabi;
        self.probe_rabi.norm_sqr()
            * (lorentz - lorentz * narrow * (2.0 * w1sq * initial_probe_ground / g)).re
    }

    /// Integrate the exact six-component density-matrix system with all
    /// population in the probe-side ground state at `t = 0` and the pump
    /// resonant.  `detuning` is probe minus pump frequency.
    pub fn evolve(
        &self,
        detuning: f64,
        t_final: f64,
        samples: usize,
    ) -> Result<LambdaTrajectory, AnalyticError> {
        require_finite(detuning, "detuning")?;
        require_finite(t_final, "t_final")?;
        if t_final < 0.0 {
            return Err(AnalyticError::NegativeTime { value: t_final });
        }
        if samples < 2 {
            return Err(AnalyticError::TooFewSamples { got: samples });
        }
        let g = self.gamma;
        let w1 = self.pump_rabi;
        let w2 = self.probe_rabi;
        let gba = self.decay_to_pump_ground;
        let gbc = self.decay_to_probe_ground;
        let i = Complex64::i();

        // state layout: [probe_ground, excited, pump_ground,
        //                probe_coherence, pump_coherence, raman_coherence]
        let rhs = move |s: &[Complex64; 6]| -> [Complex64; 6] {
            let [cc, bb, aa, bc, ab, ac] = *s;
            let d_cc = -i * w2 * bc + (i * w2 * bc).conj() + gbc * bb;
            let d_bb = i * w2 * bc - (i * w2 * bc).conj() - i * w1 * (ab - ab.conj()) - g * bb;
            let d_aa = i * w1 * (ab - ab.conj()) + gba * bb;
            let d_bc = -(Complex64::new(g / 2.0, -detuning)) * bc
                - i * w2.conj() * (cc - bb)
                - i * w1 * ac;
            let d_ab = -(g / 2.0) * ab + i * w1 * (aa - bb) + i * w2 * ac;
            let d_ac = i * detuning * ac - i * w1 * bc + i * w2.conj() * ab;
            [d_cc, d_bb, d_aa, d_bc, d_ab, d_ac]
        };

        let scale = g
            .max(detuning.abs())
            .max(w1.abs())
            .max(w2.norm());
        let dt = t_final / (samples - 1) as f64;
        let substeps = (dt / (0.05f64.min(0.1 / scale))).ceil().max(1.0) as usize;

        let mut out = LambdaTrajectory {
            times: Vec::with_capacity(samples),
            absorption: Vec::with_capacity(samples),
            probe_ground: Vec::with_capacity(samples),
            pump_ground: Vec::with_capacity(samples),
            excited: Vec::with_capacity(samples),
            probe_coherence: Vec::with_capacity(samples),
            raman_coherence: Vec::with_capacity(samples),
            max_trace_deviation: 0.0,
        };
        let mut state = [Complex64::new(0.0, 0.0); 6];
        state[0] = Complex64::new(1.0, 0.0);
        rk4_sampled(rhs, &mut state, dt, substeps, samples, |k, s| {
            out.times.push(k as f64 * dt);
            out.absorption.push(-(s[3] * w2).im);
            out.probe_ground.push(s[0].re);
            out.excited.push(s[1].re);
            out.pump_ground.push(s[2].re);
            out.probe_coherence.push(s[3]);
            out.raman_coherence.push(s[5]);
            let trace = (s[0] + s[1] + s[2]).re;
            out.max_trace_deviation = out.max_trace_deviation.max((trace - 1.0).abs());
        });
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// four-state chain (enhancement)
// ---------------------------------------------------------------------------

/// Pump-leg steady state of the four-state chain: the closed cycling
/// transition carries all population once the open ground state has been
/// pumped out.
#[derive(Debug, Clone, Copy)]
pub struct NZeroOrder {
    /// Ground population of the cycling leg (shared with the probe).
    pub probed_ground: f64,
    /// Excited population of the cycling leg.
    pub cycling_excited: f64,
    /// Optical coherence of the cycling leg, ground-excited ordering.  Its
    /// sign convention matters: it must match the one used by the
    /// first-order equations, which puts it on the positive imaginary axis.
    pub pump_coherence: Complex64,
}

/// First-order (in the probe) response of the four-state chain.
#[derive(Debug, Clone)]
pub struct NTrajectory {
    pub times: Vec<f64>,
    /// Total probe absorption to first order (linear plus pump-induced).
    pub absorption: Vec<f64>,
    /// Slow ground-pair coherence; its envelope decays at the narrowed rate.
    pub ground_coherence: Vec<Complex64>,
    /// Optical coherence on the probe leg.
    pub probe_coherence: Vec<Complex64>,
}

/// Four-state chain: strong pump on a closed cycling leg (unit relative
/// dipole) and on an open leg (relative dipole `coupling_ratio`), weak probe
/// connecting the two legs.  Spontaneous emission from the two excited
/// states interferes and transfers coherence into the ground pair.
#[derive(Debug, Clone, Copy)]
pub struct NParams {
    pub gamma: f64,
    pub pump_rabi: f64,
    pub probe_rabi: Complex64,
    /// Relative dipole amplitude of the open pump leg, in [-1, 1].
    pub coupling_ratio: f64,
}

impl NParams {
    pub fn new(
        gamma: f64,
        pump_rabi: f64,
        probe_rabi: Complex64,
        coupling_ratio: f64,
    ) -> Result<Self, AnalyticError> {
        require_finite(gamma, "gamma")?;
        require_finite(pump_rabi, "pump_rabi")?;
        require_finite(probe_rabi.re, "probe_rabi.re")?;
        require_finite(probe_rabi.im, "probe_rabi.im")?;
        require_finite(coupling_ratio, "coupling_ratio")?;
        if gamma <= 0.0 {
            return Err(AnalyticError::NonPositiveRate { value: gamma });
        }
        if !(0.0..=1.0).contains(&coupling_ratio.abs()) {
            return Err(AnalyticError::CouplingOutOfRange {
                value: coupling_ratio,
            });
        }
        Ok(Self {
            gamma,
            pump_rabi,
            probe_rabi,
            coupling_ratio,
        })
    }

    pub fn beta(&self) -> f64 {
        2.0 * self.pump_rabi * self.pump_rabi / self.gamma
    }

    /// Ground-pair relaxation rate narrowed by the coherence fed back from
    /// spontaneous emission: `beta * (1 - A^2)`.
    pub fn narrowed_beta(&self) -> f64 {
        self.beta() * (1.0 - self.coupling_ratio * self.coupling_ratio)
    }

    /// Scale of the pump-induced response, `2 W1^2 |W2|^2 / gamma`.
    pub fn kprime(&self) -> f64 {
        2.0 * self.pump_rabi * self.pump_rabi * self.probe_rabi.norm_sqr() / self.gamma
    }

    pub fn regime_warnings(&self, detuning: f64) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        if self.beta() > 0.1 * self.gamma {
            out.push(RegimeWarning::PumpingComparableToDecay {
                beta: self.beta(),
                gamma: self.gamma,
            });
        }
        if detuning.abs() > 0.1 * self.gamma {
            out.push(RegimeWarning::DetuningComparableToDecay {
                detuning,
                gamma: self.gamma,
            });
        }
        out
    }

    /// Exact steady state of the pump-only cycling leg.
    pub fn zero_order(&self) -> NZeroOrder {
        let g = self.gamma;
        let w1 = self.pump_rabi;
        let den = g * g + 8.0 * w1 * w1;
        NZeroOrder {
            probed_ground: (g * g + 4.0 * w1 * w1) / den,
            cycling_excited: 4.0 * w1 * w1 / den,
            pump_coherence: Complex64::new(0.0, 2.0 * w1 * g / den),
        }
    }

    pub fn linear_absorption(&self, detuning: f64) -> f64 {
        let g = self.gamma;
        self.probe_rabi.norm_sqr() * Complex64::new(g / 2.0, -detuning).inv().re
    }

    /// Adiabatic pump-induced change of the probe absorption: a broad
    /// (lifetime-limited) reduction plus a narrow structure growing with the
    /// universal lineshape; for nonzero coupling the narrow part is positive
    /// at line centre (enhanced absorption).
    pub fn nonlinear_absorption(&self, detuning: f64, t: f64) -> Result<f64, AnalyticError> {
        let g = self.gamma;
        let a2 = self.coupling_ratio * self.coupling_ratio;
        let kp = self.kprime();
        let broad = -kp / (g * g / 4.0 + detuning * detuning);
        if a2 == 0.0 {
            return if t.is_finite() && t >= 0.0 {
                Ok(broad)
            } else {
                Err(AnalyticError::NegativeTime { value: t })
            };
        }
        let f = f_function(self.narrowed_beta() / g, detuning / g, g * t)?;
        Ok(broad + kp * a2 / (g * g) * f)
    }

    /// Steady-state probe absorption with the pump on (adiabatic form).
    pub fn steady_absorption(&self, detuning: f64) -> f64 {
        let g = self.gamma;
        let w1sq = self.pump_rabi * self.pump_rabi;
        let a2 = self.coupling_ratio * self.coupling_ratio;
        let lorentz = Complex64::new(g / 2.0, -detuning).inv();
        let narrow = Complex64::new(self.narrowed_beta(), -detuning).inv();
        let bracket = Complex64::new(1.0 - 4.0 * w1sq / (g * g), 0.0)
            + narrow * (2.0 * a2 * w1sq / g);
        self.probe_rabi.norm_sqr() * (lorentz * bracket).re
    }

    /// Integrate the exact first-order system (four slow coherences) with
    /// the pump-leg steady state as input and everything else at zero.
    pub fn evolve(
        &self,
        detuning: f64,
        t_final: f64,
        samples: usize,
    ) -> Result<NTrajectory, AnalyticError> {
        require_finite(detuning, "detuning")?;
        require_finite(t_final, "t_final")?;
        if t_final < 0.0 {
            return Err(AnalyticError::NegativeTime { value: t_final });
        }
        if samples < 2 {
            return Err(AnalyticError::TooFewSamples { got: samples });
        }
        let g = self.gamma;
        let w1 = self.pump_rabi;
        let w2 = self.probe_rabi;
        let a = self.coupling_ratio;
        let zero = self.zero_order();
        let s0cc: Complex64 = zero.probed_ground.into();
        let s0cd = zero.pump_coherence;
        let i = Complex64::i();

        // state layout: [ground_pair (ac), probe leg (bc),
        //                cross leg (ad), excited pair (bd)]
        let rhs = move |s: &[Complex64; 4]| -> [Complex64; 4] {
            let [ac, bc, ad, bd] = *s;
            let d_ac = i * detuning * ac - i * w1 * a * bc + i * w1 * ad + g * a * bd;
            let d_bc = -i * w1 * a * ac - (Complex64::new(g / 2.0, -detuning)) * bc
                + i * w1 * bd
                - i * w2.conj() * s0cc;
            let d_ad = i * w1 * ac - (Complex64::new(g / 2.0, -detuning)) * ad - i * w1 * a * bd;
            let d_bd = i * w1 * bc - i * w1 * a * ad - (Complex64::new(g, -detuning)) * bd
                - i * w2.conj() * s0cd;
            [d_ac, d_bc, d_ad, d_bd]
        };

        let scale = g
            .max(detuning.abs())
            .max(w1.abs())
            .max(w2.norm());
        let dt = t_final / (samples - 1) as f64;
        let substeps = (dt / (0.05f64.min(0.1 / scale))).ceil().max(1.0) as usize;

        let mut out = NTrajectory {
            times: Vec::with_capacity(samples),
            absorption: Vec::with_capacity(samples),
            ground_coherence: Vec::with_capacity(samples),
            probe_coherence: Vec::with_capacity(samples),
        };
        let mut state = [Complex64::new(0.0, 0.0); 4];
        rk4_sampled(rhs, &mut state, dt, substeps, samples, |k, s| {
            out.times.push(k as f64 * dt);
            out.absorption.push(-(s[1] * w2).im);
            out.ground_coherence.push(s[0]);
            out.probe_coherence.push(s[1]);
        });
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// shared fixed-step integrator
// ---------------------------------------------------------------------------

fn rk4_step<const N: usize>(
    rhs: &impl Fn(&[Complex64; N]) -> [Complex64; N],
    y: &[Complex64; N],
    h: f64,
) -> [Complex64; N] {
    let k1 = rhs(y);
    let y2 = std::array::from_fn(|j| y[j] + k1[j] * (h / 2.0));
    let k2 = rhs(&y2);
    let y3 = std::array::from_fn(|j| y[j] + k2[j] * (h / 2.0));
    let k3 = rhs(&y3);
    let y4 = std::array::from_fn(|j| y[j] + k3[j] * h);
    let k4 = rhs(&y4);
    std::array::from_fn(|j| {
        y[j] + (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0)
    })
}

/// Fixed-step RK4 that lands exactly on `samples` equidistant sample times
/// spaced `dt` apart, taking `substeps` internal steps per interval.
fn rk4_sampled<const N: usize>(
    rhs: impl Fn(&[Complex64; N]) -> [Complex64; N],
    state: &mut [Complex64; N],
    dt: f64,
    substeps: usize,
    samples: usize,
    mut record: impl FnMut(usize, &[Complex64; N]),
) {
    record(0, state);
    let h = dt / substeps as f64;
    for k in 1..samples {
        for _ in 0..substeps {
            *state = rk4_step(&rhs, state, h);
        }
        record(k, state);
    }
}
