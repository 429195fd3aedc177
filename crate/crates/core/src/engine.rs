//! Pump-probe dynamics on a degenerate ground/excited manifold pair.
//!
//! Everything is phrased in the frame rotating at the pump frequency.  The
//! pump enters to all orders through the zero-order master equation; the
//! probe enters to first order through a non-Hermitian sideband matrix with
//! its own linear equation of motion.  A brute-force bichromatic integrator
//! with probe-phase cycling provides an independent reference for both the
//! stationary and the wave-mixing observables.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::angular::{
    dipole_coupling, lowering_operators, AngularError, AtomicTransition, Polarization,
};

type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Error)]
pub enum EngineError {
    #[error(transparent)]
    Angular(#[from] AngularError),
    #[error("{which} rabi amplitude {rabi} is not below the decay rate {gamma}; the perturbative split is invalid")]
    FieldTooStrong {
        which: &'static str,
        rabi: f64,
        gamma: f64,
    },
    #[error("argument `{name}` must be finite")]
    NonFiniteInput { name: &'static str },
    #[error("time must be non-negative, got {value}")]
    NegativeTime { value: f64 },
    #[error("need at least two samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("step must be positive, got {value}")]
    NonPositiveStep { value: f64 },
    #[error("stationary projection is singular; the zero eigenvalue is defective")]
    SingularSteadyProjection,
    #[error("stationary state carries no population (trace {trace:.3e})")]
    TracelessSteadyState { trace: f64 },
}

/// Non-fatal diagnostics attached to a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineWarning {
    /// A field is strong enough (above half the decay rate) that its
    /// lowest-order treatment starts to pick up visible corrections.
    FieldBeyondLinearRegime {
        which: &'static str,
        rabi: f64,
        gamma: f64,
    },
    /// The pump-only stationary state is not unique (dark manifold); the
    /// reported state is the projection of the chosen initial condition.
    DegenerateStationaryState { kernel_dimension: usize },
}

impl fmt::Display for EngineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineWarning::FieldBeyondLinearRegime { which, rabi, gamma } => write!(
                f,
                "{which} Rabi amplitude {rabi:.3} exceeds half the decay rate {gamma:.3}; \
                 lowest-order results pick up visible corrections"
            ),
            EngineWarning::DegenerateStationaryState { kernel_dimension } => write!(
                f,
                "stationary state is not unique ({kernel_dimension}-dimensional dark manifold); \
                 reporting the projection of the initial state"
            ),
        }
    }
}

/// One optical field: half-Rabi amplitude (reduced dipole element absorbed)
/// and unit polarization.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub rabi: Complex64,
    pub polarization: Polarization,
}

/// How the two fields switch on at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnOnMode {
    /// Pump and probe both start at `t = 0` on an isotropic ground state.
    Simultaneous,
    /// The pump has already driven the atom to its stationary state when the
    /// probe switches on.
    PumpPreconditioned,
}

/// Full problem specification for one transition and one field geometry.
#[derive(Debug, Clone)]
pub struct EngineSpec {
    pub transition: AtomicTransition,
    pub pump: FieldSpec,
    /// Pump detuning from the atomic resonance.
    pub pump_detuning: f64,
    pub probe: FieldSpec,
    /// Zeeman shift per unit magnetic quantum number, ground manifold.
    pub larmor_ground: f64,
    /// Zeeman shift per unit magnetic quantum number, excited manifold.
    pub larmor_excited: f64,
}

/// Pump-only evolution record.
#[derive(Debug, Clone)]
pub struct ZeroOrderTrajectory {
    pub times: Vec<f64>,
    /// Pump absorption signal, positive when the pump is attenuated.
    pub pump_absorption: Vec<f64>,
    /// Ground sublevel populations per sample, ascending magnetic number.
    pub ground_populations: Vec<Vec<f64>>,
    /// Excited sublevel populations per sample.
    pub excited_populations: Vec<Vec<f64>>,
    pub final_sigma: CMatrix,
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
}

/// First-order probe response record.  The stationary component is a real
/// signal; the wave-mixing and pump-probe beat components are reported as
/// complex amplitudes to be modulated with `exp(2 i delta t)` and
/// `exp(i delta t)` respectively.
#[derive(Debug, Clone)]
pub struct FirstOrderTrajectory {
    pub times: Vec<f64>,
    pub stationary_absorption: Vec<f64>,
    pub fwm_amplitude: Vec<Complex64>,
    pub beat_amplitude: Vec<Complex64>,
    pub final_sideband: CMatrix,
    pub zero_order_trace_deviation: f64,
}

/// Pump-only stationary state.
#[derive(Debug, Clone)]
pub struct ZeroOrderSteady {
    pub sigma: CMatrix,
    /// Dimension of the generator kernel; one for a unique stationary state.
    pub kernel_dimension: usize,
}

/// Phase-cycled bichromatic reference record.  Both entries are real signals
/// directly comparable with the perturbative ones.
#[derive(Debug, Clone)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub stationary_absorption: Vec<f64>,
    /// Demodulated wave-mixing signal, equal to
    /// `-Im[amplitude * exp(2 i delta t)]` of the perturbative description.
    pub fwm_absorption: Vec<f64>,
}

/// Prepared solver for one [`EngineSpec`]: caches the coupling operators and
/// the static Hamiltonian.
#[derive(Debug, Clone)]
pub struct Engine {
    spec: EngineSpec,
    dim_ground: usize,
    dim_excited: usize,
    dim: usize,
    /// Spherical lowering operators embedded in the full space.
    lower: [CMatrix; 3],
    /// Raising partners (adjoints), cached.
    raise: [CMatrix; 3],
    /// Pump coupling, lowering part, full space.
    pump_lower: CMatrix,
    /// Probe coupling, lowering part, full space.
    probe_lower: CMatrix,
    /// Excited-manifold projector.
    p_excited: CMatrix,
    /// Static rotating-frame Hamiltonian including the pump coupling.
    h_static: CMatrix,
}

impl Engine {
    pub fn new(spec: EngineSpec) -> Result<Self, EngineError> {
        let gamma = spec.transition.gamma;
        for (field, which) in [(&spec.pump, "pump"), (&spec.probe, "probe")] {
            let r = field.rabi.norm();
            if !r.is_finite() {
                return Err(EngineError::NonFiniteInput { name: "rabi" });
            }
            if r >= gamma {
                return Err(EngineError::FieldTooStrong {
                    which,
                    rabi: r,
                    gamma,
                });
            }
        }
        for (value, name) in [
            (spec.pump_detuning, "pump_detuning"),
            (spec.larmor_ground, "larmor_ground"),
            (spec.larmor_excited, "larmor_excited"),
        ] {
            if !value.is_finite() {
                return Err(EngineError::NonFiniteInput { name });
            }
        }

        let dg = spec.transition.dg();
        let de = spec.transition.de();
        let dim = dg + de;
        let embed = |block: &DMatrix<Complex64>| -> CMatrix {
            let mut full = CMatrix::zeros(dim, dim);
            full.view_mut((0, dg), (dg, de)).copy_from(block);
            full
        };

        let q_ops = lowering_operators(&spec.transition);
        let lower: [CMatrix; 3] = std::array::from_fn(|i| embed(&q_ops[i].matrix));
        let raise: [CMatrix; 3] = std::array::from_fn(|i| lower[i].adjoint());
        let pump_lower = embed(&dipole_coupling(&spec.transition, &spec.pump.polarization).matrix);
        let probe_lower =
            embed(&dipole_coupling(&spec.transition, &spec.probe.polarization).matrix);

        let mut p_excited = CMatrix::zeros(dim, dim);
        for i in 0..de {
            p_excited[(dg + i, dg + i)] = Complex64::ONE;
        }

        let mut h_static = CMatrix::zeros(dim, dim);
        for i in 0..dg {
            h_static[(i, i)] = Complex64::new(spec.larmor_ground * spec.transition.mg(i), 0.0);
        }
        for i in 0..de {
            h_static[(dg + i, dg + i)] = Complex64::new(
                spec.larmor_excited * spec.transition.me(i) - spec.pump_detuning,
                0.0,
            );
        }
        h_static += &pump_lower * spec.pump.rabi + pump_lower.adjoint() * spec.pump.rabi.conj();

        Ok(Self {
            spec,
            dim_ground: dg,
            dim_excited: de,
            dim,
            lower,
            raise,
            pump_lower,
            probe_lower,
            p_excited,
            h_static,
        })
    }

    pub fn spec(&self) -> &EngineSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn warnings(&self) -> Vec<EngineWarning> {
        let gamma = self.spec.transition.gamma;
        let mut out = Vec::new();
        for (field, which) in [(&self.spec.pump, "pump"), (&self.spec.probe, "probe")] {
            let r = field.rabi.norm();
            if r > gamma / 2.0 {
                out.push(EngineWarning::FieldBeyondLinearRegime {
                    which,
                    rabi: r,
                    gamma,
                });
            }
        }
        out
    }

    /// Unpolarized ground-state density matrix.
    pub fn isotropic_ground(&self) -> CMatrix {
        let mut sigma = CMatrix::zeros(self.dim, self.dim);
        let w = Complex64::new(1.0 / self.dim_ground as f64, 0.0);
        for i in 0..self.dim_ground {
            sigma[(i, i)] = w;
        }
        sigma
    }

    /// Pump-frame master-equation generator applied to `sigma`: coherent
    /// part with the static Hamiltonian, uniform excited-state decay, and
    /// polarization-resolved repopulation of the ground manifold.
    fn lindblad(&self, sigma: &CMatrix) -> CMatrix {
        let gamma = self.spec.transition.gamma;
        let i = Complex64::i();
        let mut out = (sigma * &self.h_static - &self.h_static * sigma) * i;
        out -= (&self.p_excited * sigma + sigma * &self.p_excited)
            * Complex64::new(0.5 * gamma, 0.0);
        for q in 0..3 {
            out += &self.lower[q] * sigma * &self.raise[q] * Complex64::new(gamma, 0.0);
        }
        out
    }

    /// First-order drive `-i W2 [L2, sigma0]`.
    fn probe_drive(&self, sigma0: &CMatrix) -> CMatrix {
        (&self.probe_lower * sigma0 - sigma0 * &self.probe_lower)
            * (-Complex64::i() * self.spec.probe.rabi)
    }

    fn first_order_rhs(&self, sideband: &CMatrix, sigma0: &CMatrix, delta: f64) -> CMatrix {
        self.lindblad(sideband) - sideband * Complex64::new(0.0, delta) + self.probe_drive(sigma0)
    }

    /// Pump absorption signal of a state, `-Im[W1 Tr(sigma L1)]`.
    pub fn pump_absorption(&self, sigma: &CMatrix) -> f64 {
        -((sigma * &self.pump_lower).trace() * self.spec.pump.rabi).im
    }

    /// Stationary probe absorption component carried by a sideband matrix,
    /// `Im[W2* Tr(sideband L2^dag)]`.
    pub fn stationary_absorption(&self, sideband: &CMatrix) -> f64 {
        ((sideband * self.probe_lower.adjoint()).trace() * self.spec.probe.rabi.conj()).im
    }

    /// Complex wave-mixing amplitude of a sideband matrix; the physical
    /// signal is `-Im[amplitude * exp(2 i delta t)]`.
    pub fn fwm_amplitude(&self, sideband: &CMatrix) -> Complex64 {
        (sideband * &self.probe_lower).trace() * self.spec.probe.rabi
    }

    /// Complex pump-probe beat amplitude of the zero-order state; the
    /// physical signal is `-Im[amplitude * exp(i delta t)]`.
    pub fn beat_amplitude(&self, sigma0: &CMatrix) -> Complex64 {
        (sigma0 * &self.probe_lower).trace() * self.spec.probe.rabi
    }

    /// Default integration step: a small fraction of the fastest timescale.
    pub fn suggested_step(&self, delta: f64) -> f64 {
        let s = &self.spec;
        let rate = s
            .transition
            .gamma
            .max(delta.abs())
            .max(s.pump.rabi.norm())
            .max(s.pump_detuning.abs())
            .max(s.larmor_ground.abs())
            .max(s.larmor_excited.abs());
        0.02 / rate
    }

    fn sampling(
        &self,
        delta: f64,
        t_final: f64,
        samples: usize,
        step: Option<f64>,
    ) -> Result<(f64, usize), EngineError> {
        if !t_final.is_finite() {
            return Err(EngineError::NonFiniteInput { name: "t_final" });
        }
        if t_final < 0.0 {
            return Err(EngineError::NegativeTime { value: t_final });
        }
        if samples < 2 {
            return Err(EngineError::TooFewSamples { got: samples });
        }
        let target = match step {
            Some(h) if !(h > 0.0) => return Err(EngineError::NonPositiveStep { value: h }),
            Some(h) => h,
            None => self.suggested_step(delta),
        };
        let dt = t_final / (samples - 1) as f64;
        let substeps = (dt / target).ceil().max(1.0) as usize;
        Ok((dt, substeps))
    }

    /// Integrate the pump-only master equation from `sigma0`.
    pub fn evolve_zero_order(
        &self,
        sigma0: &CMatrix,
        t_final: f64,
        samples: usize,
        step: Option<f64>,
    ) -> Result<ZeroOrderTrajectory, EngineError> {
        let (dt, substeps) = self.sampling(0.0, t_final, samples, step)?;
        let h = dt / substeps as f64;
        let mut sigma = sigma0.clone();
        let mut out = ZeroOrderTrajectory {
            times: Vec::with_capacity(samples),
            pump_absorption: Vec::with_capacity(samples),
            ground_populations: Vec::with_capacity(samples),
            excited_populations: Vec::with_capacity(samples),
            final_sigma: CMatrix::zeros(self.dim, self.dim),
            max_trace_deviation: 0.0,
            max_hermiticity_deviation: 0.0,
        };
        let record = |k: usize, s: &CMatrix, out: &mut ZeroOrderTrajectory| {
            out.times.push(k as f64 * dt);
            out.pump_absorption.push(self.pump_absorption(s));
            out.ground_populations
                .push((0..self.dim_ground).map(|i| s[(i, i)].re).collect());
            out.excited_populations.push(
                (0..self.dim_excited)
                    .map(|i| s[(self.dim_ground + i, self.dim_ground + i)].re)
                    .collect(),
            );
            let trace: Complex64 = s.trace();
            out.max_trace_deviation = out.max_trace_deviation.max((trace.re - 1.0).abs());
            let herm = (s - s.adjoint()).norm() / 2.0;
            out.max_hermiticity_deviation = out.max_hermiticity_deviation.max(herm);
        };
        record(0, &sigma, &mut out);
        for k in 1..samples {
            for _ in 0..substeps {
                sigma = rk4_matrix_step(&|s: &CMatrix| self.lindblad(s), &sigma, h);
            }
            record(k, &sigma, &mut out);
        }
        out.final_sigma = sigma;
        Ok(out)
    }

    /// Vectorized (column-major) matrix of a map on density matrices.
    fn superoperator(&self, map: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
        let nn = self.dim * self.dim;
        let mut gen = CMatrix::zeros(nn, nn);
        let mut basis = CMatrix::zeros(self.dim, self.dim);
        for j in 0..nn {
            basis[(j % self.dim, j / self.dim)] = Complex64::ONE;
            let image = map(&basis);
            gen.set_column(j, &DVector::from_column_slice(image.as_slice()));
            basis[(j % self.dim, j / self.dim)] = Complex64::ZERO;
        }
        gen
    }

    /// Stationary state of the pump-only generator, computed as the spectral
    /// projection of `initial` onto the generator kernel.  When the kernel
    /// is degenerate (dark manifolds) the result depends on `initial`, which
    /// is the physically relevant long-time limit; undamped oscillating
    /// coherences (Zeeman precession inside a dark manifold) are averaged
    /// out.
    pub fn steady_zero_order(
        &self,
        initial: &CMatrix,
    ) -> Result<ZeroOrderSteady, EngineError> {
        let gen = self.superoperator(|s| self.lindblad(s));
        let svd = gen.clone().svd(true, true);
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let smax = svd.singular_values.max();
        let tol = 1e-10 * smax.max(1.0);
        let kernel: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] <= tol)
            .collect();
        let k = kernel.len();
        if k == 0 {
            return Err(EngineError::SingularSteadyProjection);
        }
        let nn = self.dim * self.dim;
        let mut vk = CMatrix::zeros(nn, k);
        let mut uk = CMatrix::zeros(nn, k);
        for (c, &i) in kernel.iter().enumerate() {
            vk.set_column(c, &v_t.row(i).adjoint());
            uk.set_column(c, &u.column(i).into_owned());
        }
        let w = uk.ad_mul(&vk);
        let w_inv = w
            .try_inverse()
            .ok_or(EngineError::SingularSteadyProjection)?;
        let coeff = w_inv * uk.ad_mul(&DVector::from_column_slice(initial.as_slice()));
        let vec_ss = &vk * coeff;
        let mut sigma = CMatrix::from_column_slice(self.dim, self.dim, vec_ss.as_slice());
        sigma = (&sigma + sigma.adjoint()) * Complex64::new(0.5, 0.0);
        let trace = sigma.trace().re;
        if trace.abs() < 1e-6 {
            return Err(EngineError::TracelessSteadyState { trace });
        }
        sigma /= Complex64::new(trace, 0.0);
        Ok(ZeroOrderSteady {
            sigma,
            kernel_dimension: k,
        })
    }

    /// Integrate the first-order probe response at probe-pump detuning
    /// `delta`.  With [`TurnOnMode::Simultaneous`] the pump-only state
    /// starts isotropic and evolves alongside the sideband; with
    /// [`TurnOnMode::PumpPreconditioned`] it is held at the stationary
    /// state.
    pub fn evolve_first_order(
        &self,
        delta: f64,
        turn_on: TurnOnMode,
        t_final: f64,
        samples: usize,
        step: Option<f64>,
    ) -> Result<FirstOrderTrajectory, EngineError> {
        if !delta.is_finite() {
            return Err(EngineError::NonFiniteInput { name: "delta" });
        }
        let (dt, substeps) = self.sampling(delta, t_final, samples, step)?;
        let h = dt / substeps as f64;
        let mut sigma0 = match turn_on {
            TurnOnMode::Simultaneous => self.isotropic_ground(),
            TurnOnMode::PumpPreconditioned => self.steady_zero_order(&self.isotropic_ground())?.sigma,
        };
        let evolve_zero = turn_on == TurnOnMode::Simultaneous;
        let mut sideband = CMatrix::zeros(self.dim, self.dim);
        let mut out = FirstOrderTrajectory {
            times: Vec::with_capacity(samples),
            stationary_absorption: Vec::with_capacity(samples),
            fwm_amplitude: Vec::with_capacity(samples),
            beat_amplitude: Vec::with_capacity(samples),
            final_sideband: CMatrix::zeros(self.dim, self.dim),
            zero_order_trace_deviation: 0.0,
        };
        let record = |k: usize,
                          s0: &CMatrix,
                          sb: &CMatrix,
                          out: &mut FirstOrderTrajectory| {
            out.times.push(k as f64 * dt);
            out.stationary_absorption.push(self.stationary_absorption(sb));
            out.fwm_amplitude.push(self.fwm_amplitude(sb));
            out.beat_amplitude.push(self.beat_amplitude(s0));
            out.zero_order_trace_deviation = out
                .zero_order_trace_deviation
                .max((s0.trace().re - 1.0).abs());
        };
        record(0, &sigma0, &sideband, &mut out);
        for k in 1..samples {
            for _ in 0..substeps {
                if evolve_zero {
                    let (next0, next1) = rk4_pair_step(
                        &|a: &CMatrix, b: &CMatrix| {
                            (self.lindblad(a), self.first_order_rhs(b, a, delta))
                        },
                        &sigma0,
                        &sideband,
                        h,
                    );
                    sigma0 = next0;
                    sideband = next1;
                } else {
                    sideband = rk4_matrix_step(
                        &|b: &CMatrix| self.first_order_rhs(b, &sigma0, delta),
                        &sideband,
                        h,
                    );
                }
            }
            record(k, &sigma0, &sideband, &mut out);
        }
        out.final_sideband = sideband;
        Ok(out)
    }

    /// Same response as [`Engine::evolve_first_order`] with
    /// [`TurnOnMode::PumpPreconditioned`], computed through the exponential
    /// of the constant augmented generator instead of step integration.
    pub fn evolve_first_order_expm(
        &self,
        delta: f64,
        t_final: f64,
        samples: usize,
    ) -> Result<FirstOrderTrajectory, EngineError> {
        if !delta.is_finite() {
            return Err(EngineError::NonFiniteInput { name: "delta" });
        }
        if !t_final.is_finite() {
            return Err(EngineError::NonFiniteInput { name: "t_final" });
        }
        if t_final < 0.0 {
            return Err(EngineError::NegativeTime { value: t_final });
        }
        if samples < 2 {
            return Err(EngineError::TooFewSamples { got: samples });
        }
        let sigma0 = self.steady_zero_order(&self.isotropic_ground())?.sigma;
        let nn = self.dim * self.dim;
        let gen = self.superoperator(|s| {
            self.lindblad(s) - s * Complex64::new(0.0, delta)
        });
        let drive = self.probe_drive(&sigma0);
        let mut aug = CMatrix::zeros(nn + 1, nn + 1);
        aug.view_mut((0, 0), (nn, nn)).copy_from(&gen);
        aug.view_mut((0, nn), (nn, 1))
            .copy_from(&DVector::from_column_slice(drive.as_slice()));
        let dt = t_final / (samples - 1) as f64;
        let propagator = (aug * Complex64::new(dt, 0.0)).exp();

        let mut state = DVector::<Complex64>::zeros(nn + 1);
        state[nn] = Complex64::ONE;
        let mut out = FirstOrderTrajectory {
            times: Vec::with_capacity(samples),
            stationary_absorption: Vec::with_capacity(samples),
            fwm_amplitude: Vec::with_capacity(samples),
            beat_amplitude: Vec::with_capacity(samples),
            final_sideband: CMatrix::zeros(self.dim, self.dim),
            zero_order_trace_deviation: 0.0,
        };
        for k in 0..samples {
            if k > 0 {
                state = &propagator * state;
            }
            let sideband =
                CMatrix::from_column_slice(self.dim, self.dim, &state.as_slice()[..nn]);
            out.times.push(k as f64 * dt);
            out.stationary_absorption.push(self.stationary_absorption(&sideband));
            out.fwm_amplitude.push(self.fwm_amplitude(&sideband));
            out.beat_amplitude.push(self.beat_amplitude(&sigma0));
            if k == samples - 1 {
                out.final_sideband = sideband;
            }
        }
        Ok(out)
    }

    /// Brute-force bichromatic reference: integrates the full master
    /// equation with the explicitly time-dependent probe coupling for four
    /// probe phases and separates the stationary and wave-mixing components
    /// by phase cycling.  Always starts from the isotropic ground state with
    /// both fields switching on together.
    pub fn oracle_probe_response(
        &self,
        delta: f64,
        t_final: f64,
        samples: usize,
        step: Option<f64>,
    ) -> Result<OracleTrajectory, EngineError> {
        if !delta.is_finite() {
            return Err(EngineError::NonFiniteInput { name: "delta" });
        }
        let (dt, substeps) = self.sampling(delta, t_final, samples, step)?;
        let h = dt / substeps as f64;
        let phases = [
            0.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
            1.5 * std::f64::consts::PI,
        ];
        let mut signals: Vec<Vec<f64>> = Vec::with_capacity(phases.len());
        for &phi in &phases {
            let w2 = self.spec.probe.rabi * Complex64::from_polar(1.0, phi);
            let rhs = |t: f64, rho: &CMatrix| -> CMatrix {
                let mod2 = w2 * Complex64::from_polar(1.0, delta * t);
                let v2 = &self.probe_lower * mod2 + self.probe_lower.adjoint() * mod2.conj();
                self.lindblad(rho) + (rho * &v2 - &v2 * rho) * Complex64::i()
            };
            let mut rho = self.isotropic_ground();
            let mut sig = Vec::with_capacity(samples);
            let absorption = |t: f64, rho: &CMatrix| -> f64 {
                let mod2 = w2 * Complex64::from_polar(1.0, delta * t);
                -((rho * &self.probe_lower).trace() * mod2).im
            };
            sig.push(absorption(0.0, &rho));
            for k in 1..samples {
                let mut t = (k - 1) as f64 * dt;
                for _ in 0..substeps {
                    rho = rk4_timed_step(&rhs, t, &rho, h);
                    t += h;
                }
                sig.push(absorption(k as f64 * dt, &rho));
            }
            signals.push(sig);
        }
        let mut stationary = Vec::with_capacity(samples);
        let mut fwm = Vec::with_capacity(samples);
        for k in 0..samples {
            let mean = signals.iter().map(|s| s[k]).sum::<f64>() / 4.0;
            stationary.push(mean);
            let weighted: Complex64 = signals
                .iter()
                .zip(&phases)
                .map(|(s, &phi)| Complex64::from_polar(1.0, -2.0 * phi) * s[k])
                .sum::<Complex64>()
                / 4.0;
            fwm.push(weighted.re);
        }
        Ok(OracleTrajectory {
            times: (0..samples).map(|k| k as f64 * dt).collect(),
            stationary_absorption: stationary,
            fwm_absorption: fwm,
        })
    }
}

fn rk4_matrix_step(rhs: &impl Fn(&CMatrix) -> CMatrix, y: &CMatrix, h: f64) -> CMatrix {
    let k1 = rhs(y);
    let k2 = rhs(&(y + &k1 * Complex64::new(h / 2.0, 0.0)));
    let k3 = rhs(&(y + &k2 * Complex64::new(h / 2.0, 0.0)));
    let k4 = rhs(&(y + &k3 * Complex64::new(h, 0.0)));
    y + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0)
}

fn rk4_timed_step(
    rhs: &impl Fn(f64, &CMatrix) -> CMatrix,
    t: f64,
    y: &CMatrix,
    h: f64,
) -> CMatrix {
    let k1 = rhs(t, y);
    let k2 = rhs(t + h / 2.0, &(y + &k1 * Complex64::new(h / 2.0, 0.0)));
    let k3 = rhs(t + h / 2.0, &(y + &k2 * Complex64::new(h / 2.0, 0.0)));
    let k4 = rhs(t + h, &(y + &k3 * Complex64::new(h, 0.0)));
    y + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0)
}

fn rk4_pair_step(
    rhs: &impl Fn(&CMatrix, &CMatrix) -> (CMatrix, CMatrix),
    a: &CMatrix,
    b: &CMatrix,
    h: f64,
) -> (CMatrix, CMatrix) {
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let (ka1, kb1) = rhs(a, b);
    let (ka2, kb2) = rhs(&(a + &ka1 * half), &(b + &kb1 * half));
    let (ka3, kb3) = rhs(&(a + &ka2 * half), &(b + &kb2 * half));
    let (ka4, kb4) = rhs(&(a + &ka3 * full), &(b + &kb3 * full));
    (
        a + (ka1 + (ka2 + ka3) * two + ka4) * sixth,
        b + (kb1 + (kb2 + kb3) * two + kb4) * sixth,
    )
}
