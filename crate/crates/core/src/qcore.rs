//! Dense complex linear algebra and time-ordered evolution.
//!
//! Hamiltonians handed to this layer are in angular units (rad/ns) and times
//! are in ns. Conversion from the cyclic MHz used by the public pulse and
//! model APIs goes through [`mhz_to_angular`].

use std::f64::consts::TAU;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{QstError, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Largest allowed `|h_ij - conj(h_ji)|` for an input Hamiltonian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Converts a cyclic frequency in MHz to an angular frequency in rad/ns.
#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TAU * (f_mhz / 1000.0)
}

/// Converts an angular frequency in rad/ns back to cyclic MHz.
#[inline]
pub fn angular_to_mhz(w: f64) -> f64 {
    w / TAU * 1000.0
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Kronecker product `a ⊗ b`. Block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn max_hermitian_asymmetry(h: &ComplexMatrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    let n = h.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn ensure_hermitian(h: &ComplexMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(QstError::Dimension(format!(
            "Hamiltonian must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let max_asymmetry = max_hermitian_asymmetry(h);
    if max_asymmetry > HERMITIAN_TOL {
        return Err(QstError::NonHermitian { max_asymmetry });
    }
    Ok(())
}

/// `exp(-i h t)` for Hermitian `h` via eigendecomposition.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    ensure_hermitian(h)?;
    Ok(expm_hermitian_unchecked(h, t))
}

fn expm_hermitian_unchecked(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    // Short steps: the Taylor series stays unitary to rounding, tighter than
    // an eigendecomposition.
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max) * h.nrows() as f64 * t.abs();
    if scale <= 0.1 {
        return taylor_expm(h, t);
    }
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|lam| C64::from_polar(1.0, -lam * t));
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

fn taylor_expm(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = h.nrows();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=30 {
        term = (h * &term) * c(0.0, -t / k as f64);
        sum += &term;
        if term.iter().all(|z| z.norm() < 1e-20) {
            break;
        }
    }
    sum
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_hermitian(h)?;
    let mut vals: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - identity(n)).norm()
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Principal submatrix on the given (ordered) indices.
pub fn submatrix(m: &ComplexMatrix, indices: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(indices.len(), indices.len(), |i, j| m[(indices[i], indices[j])])
}

/// Commutator `[a, b] = ab − ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Unitary time-evolution operator together with the basis it is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub matrix: ComplexMatrix,
    pub basis: Vec<String>,
    pub t_start: f64,
    pub t_end: f64,
}

impl Propagator {
    pub fn new(matrix: ComplexMatrix, basis: Vec<String>, t_start: f64, t_end: f64) -> Result<Self> {
        if !matrix.is_square() || basis.len() != matrix.nrows() {
            return Err(QstError::Dimension(format!(
                "propagator {}x{} with {} basis labels",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        Ok(Self { matrix, basis, t_start, t_end })
    }

    fn with_index_basis(matrix: ComplexMatrix, t_start: f64, t_end: f64) -> Self {
        let basis = (0..matrix.nrows()).map(|i| i.to_string()).collect();
        Self { matrix, basis, t_start, t_end }
    }

    /// Replaces the basis labels; the label count must match the dimension.
    pub fn with_basis(self, basis: Vec<String>) -> Result<Self> {
        Self::new(self.matrix, basis, self.t_start, self.t_end)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `⟨to|U|from⟩`.
    pub fn amplitude(&self, to: usize, from: usize) -> C64 {
        self.matrix[(to, from)]
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == label)
    }
}

/// Number of steps and the step length for a span sampled at roughly `dt`.
pub fn step_grid(t_span: (f64, f64), dt: f64) -> Result<(usize, f64)> {
    let (t0, t1) = t_span;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(QstError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(QstError::InvalidParameter(format!(
            "time span must be ordered, got [{t0}, {t1}]"
        )));
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((0, 0.0));
    }
    let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// Time-ordered product of midpoint-sampled step exponentials.
///
/// `observe` sees `(t_start, I)` first and then the accumulated propagator
/// after every step. When `h` returns a bitwise-identical matrix on
/// consecutive steps the step exponential is reused.
pub fn evolve_observed<H, O>(h: H, t_span: (f64, f64), dt: f64, mut observe: O) -> Result<ComplexMatrix>
where
    H: Fn(f64) -> ComplexMatrix,
    O: FnMut(f64, &ComplexMatrix),
{
    let (n, step) = step_grid(t_span, dt)?;
    let dim = h(t_span.0).nrows();
    let mut u = identity(dim);
    observe(t_span.0, &u);

    let mut last: Option<(ComplexMatrix, ComplexMatrix)> = None;
    for k in 0..n {
        let t_mid = t_span.0 + (k as f64 + 0.5) * step;
        let hm = h(t_mid);
        if hm.nrows() != dim {
            return Err(QstError::Dimension(format!(
                "Hamiltonian dimension changed from {dim} to {} at t = {t_mid}",
                hm.nrows()
            )));
        }
        let reuse = matches!(&last, Some((prev, _)) if *prev == hm);
        if !reuse {
            ensure_hermitian(&hm)?;
            let step_u = expm_hermitian_unchecked(&hm, step);
            last = Some((hm, step_u));
        }
        let step_u = &last.as_ref().expect("step exponential cached").1;
        u = step_u * &u;
        let t_now = if k + 1 == n { t_span.1 } else { t_span.0 + (k + 1) as f64 * step };
        observe(t_now, &u);
    }
    Ok(u)
}

/// Calls `apply(h, count)` for each maximal run of consecutive steps whose
/// midpoint Hamiltonians are bitwise identical.
fn for_each_run<H, A>(h: H, t_span: (f64, f64), dt: f64, dim: usize, mut apply: A) -> Result<()>
where
    H: Fn(f64) -> ComplexMatrix,
    A: FnMut(&ComplexMatrix, usize, f64) -> Result<()>,
{
    let (n, step) = step_grid(t_span, dt)?;
    let mut run: Option<(ComplexMatrix, usize)> = None;
    for k in 0..n {
        let t_mid = t_span.0 + (k as f64 + 0.5) * step;
        let hm = h(t_mid);
        if hm.nrows() != dim {
            return Err(QstError::Dimension(format!(
                "Hamiltonian is {}x{} but the evolved object has dimension {dim}",
                hm.nrows(),
                hm.ncols()
            )));
        }
        match &mut run {
            Some((prev, count)) if *prev == hm => *count += 1,
            _ => {
                ensure_hermitian(&hm)?;
                if let Some((prev, count)) = run.take() {
                    apply(&prev, count, step)?;
                }
                run = Some((hm, 1));
            }
        }
    }
    if let Some((prev, count)) = run {
        apply(&prev, count, step)?;
    }
    Ok(())
}

/// Propagator of `h(t)` over `t_span` with step at most `dt`.
///
/// Same product as [`evolve_observed`], except that a run of identical step
/// Hamiltonians is exponentiated in one go rather than step by step.
pub fn evolve<H>(h: H, t_span: (f64, f64), dt: f64) -> Result<Propagator>
where
    H: Fn(f64) -> ComplexMatrix,
{
    let dim = h(t_span.0).nrows();
    let mut u = identity(dim);
    for_each_run(h, t_span, dt, dim, |hm, count, step| {
        u = expm_hermitian_unchecked(hm, count as f64 * step) * &u;
        Ok(())
    })?;
    Ok(Propagator::with_index_basis(u, t_span.0, t_span.1))
}

/// Applies the midpoint-sampled evolution directly to a state vector.
///
/// Isolated steps use a Taylor series for the action of the exponential;
/// runs of identical Hamiltonians use one dense exponential. Intended for
/// dimensions where forming the full propagator is wasteful.
pub fn evolve_state<H>(h: H, t_span: (f64, f64), dt: f64, psi: &StateVector) -> Result<StateVector>
where
    H: Fn(f64) -> ComplexMatrix,
{
    let mut psi = psi.clone();
    for_each_run(h, t_span, dt, psi.len(), |hm, count, step| {
        psi = if count == 1 {
            taylor_step(hm, step, &psi)
        } else {
            expm_hermitian_unchecked(hm, count as f64 * step) * &psi
        };
        Ok(())
    })?;
    Ok(psi)
}

fn taylor_step(h: &ComplexMatrix, step: f64, psi: &StateVector) -> StateVector {
    let mut term = psi.clone();
    let mut sum = psi.clone();
    let scale = sum.norm().max(f64::MIN_POSITIVE);
    for k in 1..=60 {
        term = (h * &term) * c(0.0, -step / k as f64);
        sum += &term;
        if term.norm() < 1e-18 * scale {
            break;
        }
    }
    sum
}

/// Single- or multi-qutrit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: ComplexMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGEN_TOL: f64 = -1e-10;

    /// Validating constructor.
    pub fn new(entries: ComplexMatrix) -> Result<Self> {
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(QstError::InvalidParameter(format!(
                "pure state must be normalized, got norm {norm}"
            )));
        }
        Ok(Self { entries: psi * psi.adjoint() })
    }

    pub(crate) fn from_raw(entries: ComplexMatrix) -> Self {
        Self { entries }
    }

    pub fn validate(&self) -> Result<()> {
        let asym = max_hermitian_asymmetry(&self.entries);
        if asym > Self::HERMITIAN_TOL {
            return Err(QstError::NonHermitian { max_asymmetry: asym });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(QstError::InvalidParameter(format!("density matrix trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&self.entries)?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < Self::EIGEN_TOL {
            return Err(QstError::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation_pure(&self, psi: &StateVector) -> f64 {
        (psi.adjoint() * &self.entries * psi)[(0, 0)].re
    }
}
