//! Single-qutrit amplitude and phase damping in the truncated
//! harmonic-oscillator picture, and the idle-decoherence error curve.

use nalgebra::DMatrix;

use crate::error::{QstError, Result};
use crate::qcore::{c, hermitian_eigenvalues, identity, kron, ComplexMatrix, DensityMatrix, StateVector};

const DIM: usize = 3;

/// Kraus representation of a single-qutrit channel acting for `duration` ns.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritChannel {
    pub kraus_ops: Vec<ComplexMatrix>,
    pub duration: f64,
    /// µs.
    pub t1: f64,
    /// µs.
    pub t2: f64,
}

impl QutritChannel {
    pub fn identity(duration: f64, t1: f64, t2: f64) -> Self {
        Self { kraus_ops: vec![identity(DIM)], duration, t1, t2 }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let m = rho.matrix();
        let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
        for e in &self.kraus_ops {
            out += e * m * e.adjoint();
        }
        DensityMatrix::from_raw(out)
    }

    /// Channel that applies `self` and then `next`. Kraus sets multiply; the
    /// durations add, as for consecutive time windows.
    pub fn then(&self, next: &QutritChannel) -> QutritChannel {
        QutritChannel {
            kraus_ops: kraus_product(&self.kraus_ops, &next.kraus_ops),
            duration: self.duration + next.duration,
            t1: self.t1,
            t2: self.t2,
        }
    }

    /// Largest entry of `Σ E†E − I`.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(DIM, DIM);
        for e in &self.kraus_ops {
            sum += e.adjoint() * e;
        }
        (sum - identity(DIM)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(DIM * DIM, DIM * DIM);
        for i in 0..DIM {
            for j in 0..DIM {
                let mut unit = ComplexMatrix::zeros(DIM, DIM);
                unit[(i, j)] = c(1.0, 0.0);
                let image = self.apply(&DensityMatrix::from_raw(unit.clone()));
                out += kron(&unit, image.matrix());
            }
        }
        out
    }

    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.choi())?.first().copied().unwrap_or(0.0))
    }
}

fn kraus_product(first: &[ComplexMatrix], second: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    second.iter().flat_map(|b| first.iter().map(move |a| b * a)).collect()
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(QstError::InvalidParameter(format!("channel duration must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_lifetime(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) {
        return Err(QstError::InvalidParameter(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

/// Energy relaxation for `t` ns with lifetime `t1` µs.
pub fn amplitude_damping(t: f64, t1: f64) -> Result<QutritChannel> {
    check_time(t)?;
    check_lifetime("T1", t1)?;
    let gamma = -(-t / (t1 * 1e3)).exp_m1();
    let keep = 1.0 - gamma;
    let mut e0 = ComplexMatrix::zeros(DIM, DIM);
    e0[(0, 0)] = c(1.0, 0.0);
    e0[(1, 1)] = c(keep.sqrt(), 0.0);
    e0[(2, 2)] = c(keep, 0.0);
    let mut e1 = ComplexMatrix::zeros(DIM, DIM);
    e1[(0, 1)] = c(gamma.sqrt(), 0.0);
    e1[(1, 2)] = c((2.0 * gamma * keep).sqrt(), 0.0);
    let mut e2 = ComplexMatrix::zeros(DIM, DIM);
    e2[(0, 2)] = c(gamma, 0.0);
    Ok(QutritChannel { kraus_ops: vec![e0, e1, e2], duration: t, t1, t2: 2.0 * t1 })
}

/// Pure-dephasing rate `1/T_φ = 1/T₂ − 1/(2T₁)` in 1/ns.
pub fn dephasing_rate(t1: f64, t2: f64) -> Result<f64> {
    check_lifetime("T1", t1)?;
    check_lifetime("T2", t2)?;
    let rate = 1.0 / (t2 * 1e3) - 1.0 / (2.0 * t1 * 1e3);
    // Allow rounding at the T₂ = 2T₁ boundary.
    if rate < -1e-15 / (t1 * 1e3) {
        return Err(QstError::Unphysical(format!("T2 = {t2} µs exceeds 2·T1 = {} µs", 2.0 * t1)));
    }
    Ok(rate.max(0.0))
}

/// Pure dephasing for `t` ns: `ρ_mn → ρ_mn·exp(−(m−n)² t/T_φ)`.
///
/// Level 1 then loses coherence with level 0 at `1/T_φ`, which together with
/// the `1/(2T₁)` from relaxation gives the `1/T₂` decay of the qubit
/// coherence.
pub fn phase_damping(t: f64, t1: f64, t2: f64) -> Result<QutritChannel> {
    check_time(t)?;
    let rate = dephasing_rate(t1, t2)?;
    let lambda = rate * t;
    if lambda == 0.0 {
        return Ok(QutritChannel::identity(t, t1, t2));
    }
    // The damping kernel is positive semidefinite; its eigenvectors give diagonal Kraus operators.
    let kernel = DMatrix::from_fn(DIM, DIM, |m, n| {
        let d = m as f64 - n as f64;
        (-lambda * d * d).exp()
    });
    let eig = kernel.symmetric_eigen();
    let kraus_ops = (0..DIM)
        .filter(|&k| eig.eigenvalues[k] > 0.0)
        .map(|k| {
            let w = eig.eigenvalues[k].sqrt();
            ComplexMatrix::from_diagonal(&StateVector::from_fn(DIM, |m, _| c(w * eig.eigenvectors[(m, k)], 0.0)))
        })
        .collect();
    Ok(QutritChannel { kraus_ops, duration: t, t1, t2 })
}

/// Amplitude damping followed by phase damping over the same `t` ns.
pub fn decoherence_channel(t: f64, t1: f64, t2: f64) -> Result<QutritChannel> {
    let amp = amplitude_damping(t, t1)?;
    let phase = phase_damping(t, t1, t2)?;
    Ok(QutritChannel { kraus_ops: kraus_product(&amp.kraus_ops, &phase.kraus_ops), duration: t, t1, t2 })
}

/// `(|0⟩ + |1⟩ + |2⟩)/√3`.
pub fn uniform_state() -> StateVector {
    StateVector::from_element(DIM, c(1.0 / 3f64.sqrt(), 0.0))
}

/// `1 − ⟨ψ_unif|ρ(k·t_qst)|ψ_unif⟩` for `k = 1..=n_steps` on an idle qutrit.
pub fn decoherence_error_curve(n_steps: usize, t_qst: f64, t1: f64, t2: f64) -> Result<Vec<(usize, f64)>> {
    if !(t_qst > 0.0) {
        return Err(QstError::InvalidParameter(format!("step duration must be positive, got {t_qst}")));
    }
    let psi = uniform_state();
    let rho0 = DensityMatrix::from_pure(&psi)?;
    (1..=n_steps)
        .map(|k| {
            let channel = decoherence_channel(k as f64 * t_qst, t1, t2)?;
            Ok((k, 1.0 - channel.apply(&rho0).expectation_pure(&psi)))
        })
        .collect()
}
