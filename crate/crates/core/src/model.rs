//! Hamiltonians of coupled transmon qutrits.
//!
//! Basis ordering: for `n` qutrits the product state `|l₁ l₂ … lₙ⟩` sits at
//! index `Σ_k 3^(n−k) l_k`, so qutrit 1 is the most significant digit and
//! the two-qutrit index of `|ab⟩` is `3a + b`. All builders take MHz and
//! return matrices in rad/ns.

use serde::{Deserialize, Serialize};

use crate::error::{QstError, Result};
use crate::pulse::TrapezoidPulse;
use crate::qcore::{c, evolve, identity, kron, kron_all, mhz_to_angular, spectral_norm, ComplexMatrix, C64};

/// Levels kept per transmon.
pub const LEVELS: usize = 3;
/// Upper end of the tunable coupler range.
pub const COUPLER_MAX_MHZ: f64 = 55.0;
/// Largest detuning reachable by the flux control.
pub const DETUNING_MAX_MHZ: f64 = 2500.0;
/// Largest chain the full Hilbert-space builders accept.
pub const MAX_FULL_QUTRITS: usize = 4;

/// Time-dependent scalar control, in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Waveform {
    Zero,
    Constant(f64),
    Trapezoid(TrapezoidPulse),
}

impl Waveform {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Waveform::Zero => 0.0,
            Waveform::Constant(v) => *v,
            Waveform::Trapezoid(p) => p.value_at(t),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Waveform::Zero => (0.0, 0.0),
            Waveform::Constant(v) => (*v, *v),
            Waveform::Trapezoid(p) => (0.0, p.amp_max),
        }
    }
}

/// Per-transmon parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QutritParams {
    /// Anharmonicity η (MHz).
    pub eta: f64,
    /// Detuning Δ(t) from the rotating-frame clock (MHz).
    pub delta: Waveform,
    /// Clock frequency ω (MHz); only the lab and exact rotating frames use it.
    pub omega: f64,
}

impl QutritParams {
    pub fn resonant(eta: f64) -> Self {
        Self { eta, delta: Waveform::Zero, omega: 0.0 }
    }
}

/// `n` qutrits with nearest-neighbour couplings `g_k(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QutritSystem {
    pub params: Vec<QutritParams>,
    pub couplings: Vec<Waveform>,
}

impl QutritSystem {
    pub fn new(params: Vec<QutritParams>, couplings: Vec<Waveform>) -> Result<Self> {
        if params.is_empty() {
            return Err(QstError::InvalidParameter("a system needs at least one qutrit".into()));
        }
        if couplings.len() + 1 != params.len() {
            return Err(QstError::InvalidParameter(format!(
                "{} qutrits need {} couplings, got {}",
                params.len(),
                params.len() - 1,
                couplings.len()
            )));
        }
        for (k, p) in params.iter().enumerate() {
            if !(p.eta > 0.0) {
                return Err(QstError::InvalidParameter(format!("qutrit {}: eta must be positive, got {}", k + 1, p.eta)));
            }
            let (lo, hi) = p.delta.range();
            if lo.abs().max(hi.abs()) > DETUNING_MAX_MHZ {
                return Err(QstError::InvalidParameter(format!(
                    "qutrit {}: detuning exceeds ±{DETUNING_MAX_MHZ} MHz",
                    k + 1
                )));
            }
        }
        for (k, g) in couplings.iter().enumerate() {
            if let Waveform::Trapezoid(p) = g {
                p.validate()?;
            }
            let (lo, hi) = g.range();
            if lo < 0.0 || hi > COUPLER_MAX_MHZ {
                return Err(QstError::InvalidParameter(format!(
                    "coupling {}: range [{lo}, {hi}] MHz outside [0, {COUPLER_MAX_MHZ}]",
                    k + 1
                )));
            }
        }
        Ok(Self { params, couplings })
    }

    /// All qutrits resonant with the clock, equal anharmonicity.
    pub fn resonant_chain(eta: f64, couplings: Vec<Waveform>) -> Result<Self> {
        let n = couplings.len() + 1;
        Self::new(vec![QutritParams::resonant(eta); n], couplings)
    }

    pub fn n(&self) -> usize {
        self.params.len()
    }

    /// Sets the same clock frequency ω on every qutrit.
    pub fn with_clock(mut self, omega_mhz: f64) -> Self {
        for p in &mut self.params {
            p.omega = omega_mhz;
        }
        self
    }

    fn require_pair(&self) -> Result<()> {
        if self.n() != 2 {
            return Err(QstError::InvalidParameter(format!(
                "two-qutrit Hamiltonian requested for {} qutrits",
                self.n()
            )));
        }
        Ok(())
    }
}

fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, data.iter().map(|&v| c(v, 0.0)))
}

/// Generalized σˣ for three levels.
pub fn x_op() -> ComplexMatrix {
    let s2 = 2f64.sqrt();
    real_matrix(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, s2, 0.0, s2, 0.0])
}

/// Generalized σʸ for three levels.
pub fn y_op() -> ComplexMatrix {
    let s2 = 2f64.sqrt();
    let z = c(0.0, 0.0);
    ComplexMatrix::from_row_slice(
        3,
        3,
        &[z, c(0.0, -1.0), z, c(0.0, 1.0), z, c(0.0, -s2), z, c(0.0, s2), z],
    )
}

/// `diag(0, 1, 2)`.
pub fn number_op() -> ComplexMatrix {
    real_matrix(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0])
}

/// Local energy `diag(0, f, 2f − η)` (inputs MHz, output rad/ns).
pub fn local_levels(freq_mhz: f64, eta_mhz: f64) -> ComplexMatrix {
    let f = mhz_to_angular(freq_mhz);
    let e = mhz_to_angular(eta_mhz);
    real_matrix(3, 3, &[0.0, 0.0, 0.0, 0.0, f, 0.0, 0.0, 0.0, 2.0 * f - e])
}

/// `op` acting on qutrit `site` (0-based) of an `n`-qutrit register.
pub fn embed(op: &ComplexMatrix, site: usize, n: usize) -> ComplexMatrix {
    let id = identity(LEVELS);
    let factors: Vec<&ComplexMatrix> = (0..n).map(|k| if k == site { op } else { &id }).collect();
    kron_all(factors)
}

/// Total excitation number `Σ_k diag(0, 1, 2)_k`.
pub fn excitation_number(n: usize) -> ComplexMatrix {
    let num = number_op();
    (0..n).fold(ComplexMatrix::zeros(3usize.pow(n as u32), 3usize.pow(n as u32)), |acc, k| {
        acc + embed(&num, k, n)
    })
}

pub fn basis_index(levels: &[u8]) -> usize {
    levels.iter().fold(0, |acc, &l| acc * LEVELS + l as usize)
}

pub fn basis_levels(mut index: usize, n: usize) -> Vec<u8> {
    let mut levels = vec![0u8; n];
    for slot in levels.iter_mut().rev() {
        *slot = (index % LEVELS) as u8;
        index /= LEVELS;
    }
    levels
}

/// Labels such as `"02"` in index order.
pub fn basis_labels(n: usize) -> Vec<String> {
    (0..3usize.pow(n as u32))
        .map(|i| basis_levels(i, n).iter().map(|l| char::from(b'0' + l)).collect())
        .collect()
}

/// Index of a label such as `"10"`.
pub fn label_index(label: &str) -> Option<usize> {
    let levels: Option<Vec<u8>> = label
        .bytes()
        .map(|b| match b {
            b'0'..=b'2' => Some(b - b'0'),
            _ => None,
        })
        .collect();
    levels.map(|l| basis_index(&l))
}

/// Laboratory-frame Hamiltonian of a coupled pair with `ε_i = ω_i + Δ_i`.
pub fn lab_hamiltonian(sys: &QutritSystem, t: f64) -> Result<ComplexMatrix> {
    sys.require_pair()?;
    let mut h = ComplexMatrix::zeros(9, 9);
    for (k, p) in sys.params.iter().enumerate() {
        h += embed(&local_levels(p.omega + p.delta.value_at(t), p.eta), k, 2);
    }
    let g = mhz_to_angular(sys.couplings[0].value_at(t));
    let x = x_op();
    h += kron(&x, &x) * c(g, 0.0);
    Ok(h)
}

/// Rotating-frame Hamiltonian without the rotating-wave approximation.
///
/// The coupling `g X₁X₂` picks up `exp(i(ω₁(c−a) + ω₂(d−b))t)` on the element
/// `⟨ab|·|cd⟩`, so the counter-rotating terms oscillate at `ω₁ + ω₂`.
pub fn rotating_frame_hamiltonian(sys: &QutritSystem, t: f64) -> Result<ComplexMatrix> {
    sys.require_pair()?;
    let mut h = ComplexMatrix::zeros(9, 9);
    for (k, p) in sys.params.iter().enumerate() {
        h += embed(&local_levels(p.delta.value_at(t), p.eta), k, 2);
    }
    let g = mhz_to_angular(sys.couplings[0].value_at(t));
    let w1 = mhz_to_angular(sys.params[0].omega);
    let w2 = mhz_to_angular(sys.params[1].omega);
    let x = x_op();
    for row in 0..9 {
        let (a, b) = (row / 3, row % 3);
        for col in 0..9 {
            let (cc, d) = (col / 3, col % 3);
            let amp = x[(a, cc)].re * x[(b, d)].re;
            if amp != 0.0 {
                let phase = (w1 * (cc as f64 - a as f64) + w2 * (d as f64 - b as f64)) * t;
                h[(row, col)] += C64::from_polar(g * amp, phase);
            }
        }
    }
    Ok(h)
}

/// Pair Hamiltonian in the rotating frame after the rotating-wave approximation.
pub fn rwa_hamiltonian(sys: &QutritSystem, t: f64) -> Result<ComplexMatrix> {
    sys.require_pair()?;
    let mut h = ComplexMatrix::zeros(9, 9);
    for (k, p) in sys.params.iter().enumerate() {
        h += embed(&local_levels(p.delta.value_at(t), p.eta), k, 2);
    }
    let g = mhz_to_angular(sys.couplings[0].value_at(t));
    h += flip_flop_pair() * c(g, 0.0);
    Ok(h)
}

/// `(X⊗X + Y⊗Y)/2` on two qutrits.
pub fn flip_flop_pair() -> ComplexMatrix {
    let (x, y) = (x_op(), y_op());
    (kron(&x, &x) + kron(&y, &y)) * c(0.5, 0.0)
}

/// Precomputed operators of an `n`-qutrit chain Hamiltonian.
#[derive(Debug, Clone)]
pub struct ChainOperators {
    n: usize,
    number: Vec<ComplexMatrix>,
    level2: Vec<ComplexMatrix>,
    hopping: Vec<ComplexMatrix>,
}

impl ChainOperators {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QstError::InvalidParameter("chain needs at least one qutrit".into()));
        }
        if n > MAX_FULL_QUTRITS {
            return Err(QstError::Capacity { n, max: MAX_FULL_QUTRITS });
        }
        let num = number_op();
        let p2 = real_matrix(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let (x, y) = (x_op(), y_op());
        let hopping = (0..n.saturating_sub(1))
            .map(|k| {
                let xx = embed(&x, k, n) * embed(&x, k + 1, n);
                let yy = embed(&y, k, n) * embed(&y, k + 1, n);
                (xx + yy) * c(0.5, 0.0)
            })
            .collect();
        Ok(Self {
            n,
            number: (0..n).map(|k| embed(&num, k, n)).collect(),
            level2: (0..n).map(|k| embed(&p2, k, n)).collect(),
            hopping,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Σ_k [Δ_k N_k − η_k P2_k] + Σ_k (g_k/2)(X_k X_{k+1} + Y_k Y_{k+1})`, inputs MHz.
    pub fn hamiltonian(&self, deltas: &[f64], etas: &[f64], gs: &[f64]) -> ComplexMatrix {
        let dim = 3usize.pow(self.n as u32);
        let mut h = ComplexMatrix::zeros(dim, dim);
        for k in 0..self.n {
            if deltas[k] != 0.0 {
                h += &self.number[k] * c(mhz_to_angular(deltas[k]), 0.0);
            }
            h -= &self.level2[k] * c(mhz_to_angular(etas[k]), 0.0);
        }
        for (k, &g) in gs.iter().enumerate() {
            if g != 0.0 {
                h += &self.hopping[k] * c(mhz_to_angular(g), 0.0);
            }
        }
        h
    }

    pub fn at(&self, sys: &QutritSystem, t: f64) -> ComplexMatrix {
        let deltas: Vec<f64> = sys.params.iter().map(|p| p.delta.value_at(t)).collect();
        let etas: Vec<f64> = sys.params.iter().map(|p| p.eta).collect();
        let gs: Vec<f64> = sys.couplings.iter().map(|g| g.value_at(t)).collect();
        self.hamiltonian(&deltas, &etas, &gs)
    }
}

/// Full `3ⁿ`-dimensional chain Hamiltonian in the rotating frame (RWA).
pub fn chain_hamiltonian(sys: &QutritSystem, t: f64) -> Result<ComplexMatrix> {
    Ok(ChainOperators::new(sys.n())?.at(sys, t))
}

/// Spectral-norm distance between the exact rotating-frame and RWA propagators.
///
/// Requires a shared clock `ω₁ = ω₂`.
pub fn rwa_residual(sys: &QutritSystem, t_span: (f64, f64), dt: f64) -> Result<f64> {
    sys.require_pair()?;
    if sys.params[0].omega != sys.params[1].omega {
        return Err(QstError::InvalidParameter("RWA comparison assumes a shared clock ω₁ = ω₂".into()));
    }
    let exact = evolve(
        |t| rotating_frame_hamiltonian(sys, t).expect("pair checked"),
        t_span,
        dt,
    )?;
    let rwa = evolve(|t| rwa_hamiltonian(sys, t).expect("pair checked"), t_span, dt)?;
    Ok(spectral_norm(&(exact.matrix - rwa.matrix)))
}
