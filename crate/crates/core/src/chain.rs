//! Concatenated transfers along a chain of qutrits.
//!
//! Once a qutrit has handed its state on, its coupler stays off, so the
//! amplitude left behind on it never returns. The overlap with the ideal
//! end state therefore only needs the three (unnormalized) amplitudes
//! carried by the moving front, propagated with the two-qutrit step
//! propagator projected onto `|0⟩` of the sending qutrit.

use serde::Serialize;

use crate::error::{QstError, Result};
use crate::model::{embed, ChainOperators, QutritSystem, Waveform};
use crate::noise::uniform_state;
use crate::pulse::TrapezoidPulse;
use crate::qcore::{c, evolve_state, identity, ComplexMatrix, Propagator, StateVector, C64};
use crate::transfer::{compensating_gate, evolve_transfer, IDX_02, IDX_20, IDX_01, IDX_10};

/// Three-level state carried to qutrit `site`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontState {
    pub amplitudes: [C64; 3],
    pub site: usize,
}

impl FrontState {
    pub fn new(amplitudes: [C64; 3], site: usize) -> Self {
        Self { amplitudes, site }
    }

    /// `(|0⟩ + |1⟩ + |2⟩)/√3` on the first qutrit.
    pub fn uniform() -> Self {
        let a = c(1.0 / 3f64.sqrt(), 0.0);
        Self::new([a; 3], 0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability lost from the front so far.
    pub fn norm_deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// `⟨target|front⟩`.
    pub fn overlap(&self, target: &[C64; 3]) -> C64 {
        target.iter().zip(&self.amplitudes).map(|(t, a)| t.conj() * a).sum()
    }

    /// `1 − |⟨ψ_unif|front⟩|²` without renormalizing the front.
    pub fn infidelity(&self) -> f64 {
        1.0 - self.overlap(&FrontState::uniform().amplitudes).norm_sqr()
    }

    /// Same as [`FrontState::infidelity`] after renormalizing the front, so
    /// that only the shape error counts and the lost norm does not.
    pub fn normalized_infidelity(&self) -> f64 {
        let n = self.norm_sqr();
        if n == 0.0 {
            return 1.0;
        }
        1.0 - self.overlap(&FrontState::uniform().amplitudes).norm_sqr() / n
    }
}

/// One advance of the front: embed `front ⊗ |0⟩`, apply `u_step`, keep the
/// component with the sending qutrit in `|0⟩`, then apply `comp` to the
/// receiving qutrit.
pub fn step_transfer(front: &FrontState, u_step: &Propagator, comp: &ComplexMatrix) -> Result<FrontState> {
    if u_step.dim() != 9 || comp.nrows() != 3 || comp.ncols() != 3 {
        return Err(QstError::Dimension(format!(
            "step needs a 9x9 propagator and a 3x3 gate, got {} and {}x{}",
            u_step.dim(),
            comp.nrows(),
            comp.ncols()
        )));
    }
    // |a⟩|0⟩ has index 3a, |0⟩|b⟩ has index b.
    let moved: [C64; 3] = std::array::from_fn(|b| (0..3).map(|a| u_step.matrix[(b, 3 * a)] * front.amplitudes[a]).sum());
    let out = std::array::from_fn(|j| (0..3).map(|b| comp[(j, b)] * moved[b]).sum());
    Ok(FrontState::new(out, front.site + 1))
}

/// The repeated two-qutrit step: pulse, its propagator and the measured transfer phases.
#[derive(Debug, Clone)]
pub struct TransferStep {
    pub pulse: TrapezoidPulse,
    pub eta: f64,
    pub dt: f64,
    pub propagator: Propagator,
    /// `arg ⟨01|U|10⟩`.
    pub theta: f64,
    /// `arg ⟨02|U|20⟩`.
    pub phi: f64,
}

impl TransferStep {
    pub fn new(pulse: TrapezoidPulse, eta: f64, dt: f64) -> Result<Self> {
        let pulse = pulse.with_offset(0.0);
        let propagator = evolve_transfer(&pulse, eta, dt)?;
        let theta = propagator.amplitude(IDX_01, IDX_10).arg();
        let phi = propagator.amplitude(IDX_02, IDX_20).arg();
        Ok(Self { pulse, eta, dt, propagator, theta, phi })
    }

    /// Phase gate cancelling the transfer phases, or the identity.
    pub fn gate(&self, compensate: bool) -> ComplexMatrix {
        if compensate {
            compensating_gate(&self.propagator)
        } else {
            identity(3)
        }
    }
}

/// Front after each of `n_steps` steps starting from the uniform superposition.
pub fn front_trajectory(step: &TransferStep, n_steps: usize, compensate: bool) -> Result<Vec<FrontState>> {
    let gate = step.gate(compensate);
    let mut front = FrontState::uniform();
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        front = step_transfer(&front, &step.propagator, &gate)?;
        out.push(front);
    }
    Ok(out)
}

/// `(k, 1 − |⟨ψ_unif|ψ_k⟩|²)` for `k = 1..=n_steps`.
pub fn intrinsic_error_curve(step: &TransferStep, n_steps: usize, compensate: bool) -> Result<Vec<(usize, f64)>> {
    Ok(front_trajectory(step, n_steps, compensate)?
        .iter()
        .enumerate()
        .map(|(i, f)| (i + 1, f.infidelity()))
        .collect())
}

/// Back-to-back coupling pulses for a chain, with the per-step phase corrections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSchedule {
    pub step_pulse: TrapezoidPulse,
    pub n_steps: usize,
    pub compensation: Vec<(f64, f64)>,
}

impl ChainSchedule {
    pub fn new(step: &TransferStep, n_steps: usize) -> Self {
        Self { step_pulse: step.pulse, n_steps, compensation: vec![(step.theta, step.phi); n_steps] }
    }

    /// Schedule for `n_qutrits` without compensation data.
    pub fn for_chain(step_pulse: TrapezoidPulse, n_qutrits: usize) -> Result<Self> {
        if n_qutrits < 2 {
            return Err(QstError::InvalidParameter(format!("a chain needs at least 2 qutrits, got {n_qutrits}")));
        }
        step_pulse.validate()?;
        let n_steps = n_qutrits - 1;
        Ok(Self { step_pulse: step_pulse.with_offset(0.0), n_steps, compensation: vec![(0.0, 0.0); n_steps] })
    }

    pub fn n_qutrits(&self) -> usize {
        self.n_steps + 1
    }

    /// Pulse on coupler `k` starts at `k·t_qst`.
    pub fn pulses(&self) -> Vec<TrapezoidPulse> {
        (0..self.n_steps)
            .map(|k| self.step_pulse.with_offset(k as f64 * self.step_pulse.t_total))
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.n_steps as f64 * self.step_pulse.t_total
    }

    pub fn couplings_at(&self, t: f64) -> Vec<f64> {
        self.pulses().iter().map(|p| p.value_at(t)).collect()
    }

    /// Rows `(t, g_1 … g_{n−1})` every `dt_out`, end point included.
    pub fn samples(&self, dt_out: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        if !(dt_out > 0.0) {
            return Err(QstError::InvalidParameter(format!("sample spacing must be positive, got {dt_out}")));
        }
        let total = self.total_duration();
        let n = (total / dt_out - 1e-9).ceil() as usize;
        let pulses = self.pulses();
        Ok((0..=n)
            .map(|i| {
                let t = (i as f64 * dt_out).min(total);
                (t, pulses.iter().map(|p| p.value_at(t)).collect())
            })
            .collect())
    }

    /// Resonant chain driven by this schedule.
    pub fn system(&self, eta: f64) -> Result<QutritSystem> {
        QutritSystem::resonant_chain(eta, self.pulses().into_iter().map(Waveform::Trapezoid).collect())
    }
}

/// `|⟨0…0 ψ_unif|ψ_full⟩ − ⟨ψ_unif|ψ_front⟩|` for an `n`-qutrit chain.
///
/// The full state is propagated in the `3ⁿ`-dimensional space pulse by
/// pulse, with the compensating gate applied to each receiving qutrit at
/// the end of its window.
pub fn validate_front_vs_full(n: usize, step: &TransferStep, compensate: bool) -> Result<f64> {
    let ops = ChainOperators::new(n)?;
    if n < 2 {
        return Err(QstError::InvalidParameter(format!("a chain needs at least 2 qutrits, got {n}")));
    }
    let schedule = ChainSchedule::new(step, n - 1);
    let gate = step.gate(compensate);
    let dim = 3usize.pow(n as u32);
    let stride = 3usize.pow(n as u32 - 1);
    let unif = uniform_state();

    let mut psi = StateVector::zeros(dim);
    for a in 0..3 {
        psi[a * stride] = unif[a];
    }
    let zeros = vec![0.0; n];
    let etas = vec![step.eta; n];
    for (k, pulse) in schedule.pulses().iter().enumerate() {
        let h = |t: f64| {
            let mut gs = vec![0.0; n - 1];
            gs[k] = pulse.value_at(t);
            ops.hamiltonian(&zeros, &etas, &gs)
        };
        psi = evolve_state(h, (pulse.t_offset, pulse.t_end()), step.dt, &psi)?;
        psi = embed(&gate, k + 1, n) * psi;
    }
    let full: C64 = (0..3).map(|a| unif[a].conj() * psi[a]).sum();

    let front = front_trajectory(step, n - 1, compensate)?
        .last()
        .copied()
        .unwrap_or_else(FrontState::uniform);
    let reduced = front.overlap(&FrontState::uniform().amplitudes);
    Ok((full - reduced).norm())
}
