//! Trapezoidal control pulses and the two-subspace transfer constraint.
//!
//! A population swap in the single-excitation subspace needs a coupling
//! area of `mπ/2` while the `|20⟩ ↔ |02⟩` swap, mediated by `|11⟩`, needs an
//! effective-coupling area of `lπ/2`. Both are expressed here in radians;
//! pulse amplitudes are cyclic MHz and times ns.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{QstError, Result};
use crate::model::COUPLER_MAX_MHZ;
use crate::numerics::adaptive_simpson;
use crate::qcore::mhz_to_angular;

/// Relative tolerance used for every effective-area quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-12;
/// Residual (rad) below which the transfer constraint counts as solved.
pub const CONSTRAINT_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITERATIONS: usize = 200;

/// Symmetric trapezoid: linear ramp up, flat top, linear ramp down.
///
/// `t_ramp` is the duration of each ramp, so the flat top lasts
/// `t_total - 2 t_ramp` and the area is `amp_max (t_total - t_ramp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidPulse {
    pub amp_max: f64,
    pub t_total: f64,
    pub t_ramp: f64,
    pub t_offset: f64,
}

impl TrapezoidPulse {
    pub fn new(amp_max: f64, t_total: f64, t_ramp: f64) -> Result<Self> {
        let p = Self { amp_max, t_total, t_ramp, t_offset: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// Same shape, shifted to start at `t_offset`.
    pub fn with_offset(self, t_offset: f64) -> Self {
        Self { t_offset, ..self }
    }

    pub fn zero(t_total: f64, t_ramp: f64) -> Self {
        Self { amp_max: 0.0, t_total, t_ramp, t_offset: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.amp_max, self.t_total, self.t_ramp, self.t_offset]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(QstError::InvalidParameter(format!("non-finite pulse parameter in {self:?}")));
        }
        if self.amp_max < 0.0 {
            return Err(QstError::InvalidParameter(format!(
                "pulse amplitude must be non-negative, got {}",
                self.amp_max
            )));
        }
        if self.t_ramp < 0.0 || self.t_total < 2.0 * self.t_ramp {
            return Err(QstError::InvalidParameter(format!(
                "pulse needs 0 <= 2 t_ramp <= t_total, got t_ramp = {}, t_total = {}",
                self.t_ramp, self.t_total
            )));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.t_offset + self.t_total
    }

    /// Amplitude at absolute time `t`; zero outside the pulse window.
    pub fn value_at(&self, t: f64) -> f64 {
        let u = t - self.t_offset;
        if u <= 0.0 || u >= self.t_total {
            0.0
        } else if u < self.t_ramp {
            self.amp_max * u / self.t_ramp
        } else if u > self.t_total - self.t_ramp {
            self.amp_max * (self.t_total - u) / self.t_ramp
        } else {
            self.amp_max
        }
    }

    /// `∫ g dt` in MHz·ns.
    pub fn area_mhz_ns(&self) -> f64 {
        self.amp_max * (self.t_total - self.t_ramp)
    }

    /// Start, end of ramp-up, start of ramp-down, end.
    pub fn breakpoints(&self) -> [f64; 4] {
        let t0 = self.t_offset;
        [t0, t0 + self.t_ramp, t0 + self.t_total - self.t_ramp, t0 + self.t_total]
    }

    /// `(t, value)` pairs from the pulse start to its end on a grid of `dt`.
    pub fn samples(&self, dt: f64) -> Result<Vec<(f64, f64)>> {
        if !(dt > 0.0) {
            return Err(QstError::InvalidParameter(format!("sample spacing must be positive, got {dt}")));
        }
        let n = ((self.t_total / dt) - 1e-9).ceil().max(0.0) as usize;
        let mut out: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = self.t_offset + i as f64 * dt;
                (t, self.value_at(t))
            })
            .collect();
        out.push((self.t_end(), 0.0));
        Ok(out)
    }
}

/// Coupling area in radians.
pub fn pulse_area(p: &TrapezoidPulse) -> f64 {
    mhz_to_angular(p.area_mhz_ns())
}

/// Effective `|20⟩ ↔ |02⟩` coupling from level repulsion with `|11⟩`, in MHz.
///
/// Equal to `|η/4 − √((η/4)² + g²)|`, evaluated in a cancellation-free form.
pub fn g_eff(g: f64, eta: f64) -> f64 {
    let a = eta / 4.0;
    let root = a.hypot(g);
    g * g / (root + a)
}

/// Effective-coupling area (rad) of each segment: ramp up, flat top, ramp down.
pub fn effective_area_segments(p: &TrapezoidPulse, eta: f64) -> [f64; 3] {
    let [t0, t1, t2, t3] = p.breakpoints();
    let seg = |a: f64, b: f64| {
        if b <= a {
            0.0
        } else {
            mhz_to_angular(adaptive_simpson(|t| g_eff(p.value_at(t), eta), a, b, QUADRATURE_REL_TOL))
        }
    };
    [seg(t0, t1), seg(t1, t2), seg(t2, t3)]
}

/// `∫ g_eff(g(t)) dt` in radians, ramps included.
pub fn effective_area(p: &TrapezoidPulse, eta: f64) -> f64 {
    effective_area_segments(p, eta).iter().sum()
}

/// Closed-form pulse parameters for a 3:1 area ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub g_max: f64,
    pub t_qst: f64,
    pub eta: f64,
    pub t_ramp: f64,
}

impl AnalyticParams {
    pub fn exceeds_cap(&self, cap_mhz: f64) -> bool {
        self.g_max > cap_mhz
    }

    pub fn pulse(&self) -> Result<TrapezoidPulse> {
        TrapezoidPulse::new(self.g_max, self.t_qst, self.t_ramp)
    }
}

/// `g_max = 3η/16` and `t_qst = t_ramp + 8π/η` (η angular).
///
/// Only `m = 3` has a closed form: it follows from equating flat-top areas
/// of `g` and `3 g_eff`.
pub fn analytic_params(eta: f64, t_ramp: f64, m: u32) -> Result<AnalyticParams> {
    if m != 3 {
        return Err(QstError::Unsupported(format!(
            "closed-form pulse parameters exist only for m = 3, got m = {m}"
        )));
    }
    if !(eta > 0.0) || !(t_ramp >= 0.0) {
        return Err(QstError::InvalidParameter(format!(
            "need eta > 0 and t_ramp >= 0, got eta = {eta}, t_ramp = {t_ramp}"
        )));
    }
    let g_max = 3.0 * eta / 16.0;
    // 8π / (2π·η·1e-3) with η in MHz.
    let t_qst = t_ramp + 4000.0 / eta;
    Ok(AnalyticParams { g_max, t_qst, eta, t_ramp })
}

/// Root of the two-subspace transfer constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSolution {
    pub g_max: f64,
    pub t_qst: f64,
    pub m: u32,
    pub l: u32,
    /// `[pulse_area − mπ/2, effective_area − lπ/2]` in rad.
    pub residuals: [f64; 2],
    pub iterations: usize,
}

fn constraint_residuals(g: f64, t: f64, t_ramp: f64, eta: f64, m: u32, l: u32) -> [f64; 2] {
    let p = TrapezoidPulse { amp_max: g, t_total: t, t_ramp, t_offset: 0.0 };
    [
        pulse_area(&p) - m as f64 * FRAC_PI_2,
        effective_area(&p, eta) - l as f64 * FRAC_PI_2,
    ]
}

/// Solves `pulse_area = mπ/2` and `effective_area = lπ/2` for `(g_max, t_qst)`.
///
/// Damped Newton with a central-difference Jacobian, seeded from
/// [`analytic_params`]. The amplitude is kept inside `(0, 55]` MHz and the
/// duration above `2 t_ramp`.
pub fn solve_constraint(eta: f64, t_ramp: f64, m: u32, l: u32) -> Result<ConstraintSolution> {
    if m.is_multiple_of(2) || l.is_multiple_of(2) {
        return Err(QstError::InvalidParameter(format!("m and l must be odd, got m = {m}, l = {l}")));
    }
    let seed = analytic_params(eta, t_ramp, m)?;
    let t_min = 2.0 * t_ramp + 1e-9;
    let clamp = |g: f64, t: f64| (g.clamp(1e-9, COUPLER_MAX_MHZ), t.clamp(t_min, 1e4));
    let (mut g, mut t) = clamp(seed.g_max, seed.t_qst);
    let mut f = constraint_residuals(g, t, t_ramp, eta, m, l);
    let norm = |r: &[f64; 2]| r[0].hypot(r[1]);

    for iteration in 0..MAX_NEWTON_ITERATIONS {
        if f[0].abs() < CONSTRAINT_TOL && f[1].abs() < CONSTRAINT_TOL {
            return Ok(ConstraintSolution { g_max: g, t_qst: t, m, l, residuals: f, iterations: iteration });
        }
        let hg = 1e-6 * g.max(1.0);
        let ht = 1e-6 * t.max(1.0);
        let fgp = constraint_residuals(g + hg, t, t_ramp, eta, m, l);
        let fgm = constraint_residuals(g - hg, t, t_ramp, eta, m, l);
        let ftp = constraint_residuals(g, t + ht, t_ramp, eta, m, l);
        let ftm = constraint_residuals(g, t - ht, t_ramp, eta, m, l);
        let j = [
            [(fgp[0] - fgm[0]) / (2.0 * hg), (ftp[0] - ftm[0]) / (2.0 * ht)],
            [(fgp[1] - fgm[1]) / (2.0 * hg), (ftp[1] - ftm[1]) / (2.0 * ht)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dg = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dt = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let (gn, tn) = clamp(g + lambda * dg, t + lambda * dt);
            let fnew = constraint_residuals(gn, tn, t_ramp, eta, m, l);
            if norm(&fnew) < norm(&f) {
                accepted = Some((gn, tn, fnew));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((gn, tn, fnew)) => {
                g = gn;
                t = tn;
                f = fnew;
            }
            None => {
                log::debug!("constraint solver stalled at g = {g}, t = {t}, residuals {f:?}");
                break;
            }
        }
    }
    if f[0].abs() < CONSTRAINT_TOL && f[1].abs() < CONSTRAINT_TOL {
        return Ok(ConstraintSolution { g_max: g, t_qst: t, m, l, residuals: f, iterations: MAX_NEWTON_ITERATIONS });
    }
    Err(QstError::NoConvergence { iterations: MAX_NEWTON_ITERATIONS, residuals: f.to_vec() })
}

/// Area condition `mπ/2` for a given odd `m`.
pub fn target_area(m: u32) -> f64 {
    m as f64 * PI / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1_pulse() -> TrapezoidPulse {
        TrapezoidPulse::new(37.5, 22.0, 2.0).unwrap()
    }

    /// Closed form of ∫₀^τ g_eff(G s/τ) ds in MHz·ns.
    fn ramp_integral_oracle(g_max: f64, tau: f64, eta: f64) -> f64 {
        let a = eta / 4.0;
        let prim = |x: f64| {
            let r = (a * a + x * x).sqrt();
            0.5 * x * r + 0.5 * a * a * (x + r).ln() - a * x
        };
        tau / g_max * (prim(g_max) - prim(0.0))
    }

    #[test]
    fn pulse_shape_invariants() {
        let p = table1_pulse().with_offset(5.0);
        assert_eq!(p.value_at(5.0), 0.0);
        assert_eq!(p.value_at(27.0), 0.0);
        assert_eq!(p.value_at(6.0), 18.75);
        assert_eq!(p.value_at(7.0), 37.5);
        assert_eq!(p.value_at(25.0), 37.5);
        assert_eq!(p.value_at(26.0), 18.75);
        assert_eq!(p.area_mhz_ns(), 750.0);
    }

    #[test]
    fn pulse_rejects_bad_shapes() {
        assert!(TrapezoidPulse::new(-1.0, 10.0, 2.0).is_err());
        assert!(TrapezoidPulse::new(10.0, 3.0, 2.0).is_err());
        assert!(TrapezoidPulse::new(10.0, 4.0, 2.0).is_ok());
    }

    #[test]
    fn area_of_table1_pulse_is_three_half_pi() {
        assert_eq!(pulse_area(&table1_pulse()), 3.0 * PI / 2.0);
    }

    #[test]
    fn area_of_zero_and_rectangle() {
        assert_eq!(pulse_area(&TrapezoidPulse::zero(22.0, 2.0)), 0.0);
        let rect = TrapezoidPulse::new(10.0, 5.0, 0.0).unwrap();
        assert_eq!(pulse_area(&rect), mhz_to_angular(50.0));
        assert_eq!(rect.value_at(2.5), 10.0);
    }

    #[test]
    fn g_eff_values() {
        assert!((g_eff(37.5, 200.0) - 12.5).abs() < 1e-12);
        assert_eq!(g_eff(0.0, 200.0), 0.0);
        let small = g_eff(5.0, 200.0);
        assert!((small - 0.25).abs() / 0.25 < 0.01);
        let direct = (50.0f64 - (2500.0f64 + 25.0).sqrt()).abs();
        assert!((small - direct).abs() < 1e-13);
    }

    #[test]
    fn effective_area_plateau_and_ramps() {
        let p = table1_pulse();
        let [up, flat, down] = effective_area_segments(&p, 200.0);
        assert!((flat - mhz_to_angular(12.5 * 18.0)).abs() < 1e-12);
        let ramp = mhz_to_angular(ramp_integral_oracle(37.5, 2.0, 200.0));
        assert!((up - ramp).abs() < 1e-12);
        assert!((down - ramp).abs() < 1e-12);
        // g_eff is convex in g, so the ramps fall short of their linear share.
        let total = effective_area(&p, 200.0);
        assert!(total < FRAC_PI_2 && total > 0.95 * FRAC_PI_2);
        assert_eq!(effective_area(&TrapezoidPulse::zero(22.0, 2.0), 200.0), 0.0);
    }

    #[test]
    fn analytic_parameters() {
        let a = analytic_params(200.0, 2.0, 3).unwrap();
        assert_eq!((a.g_max, a.t_qst), (37.5, 22.0));
        let b = analytic_params(400.0, 2.0, 3).unwrap();
        assert_eq!((b.g_max, b.t_qst), (75.0, 12.0));
        assert!(b.exceeds_cap(COUPLER_MAX_MHZ));
        assert!(!a.exceeds_cap(COUPLER_MAX_MHZ));
        // 3η/16 = 55 at η = 293.33 MHz.
        assert!(!analytic_params(293.3, 2.0, 3).unwrap().exceeds_cap(55.0));
        assert!(analytic_params(293.4, 2.0, 3).unwrap().exceeds_cap(55.0));
        assert!(matches!(analytic_params(200.0, 2.0, 5), Err(QstError::Unsupported(_))));
    }

    #[test]
    fn seed_satisfies_coupling_area_exactly() {
        let a = analytic_params(200.0, 2.0, 3).unwrap();
        assert_eq!(pulse_area(&a.pulse().unwrap()) - target_area(3), 0.0);
    }

    #[test]
    fn constraint_solution_near_analytic_seed() {
        let s = solve_constraint(200.0, 2.0, 3, 1).unwrap();
        assert!(s.residuals.iter().all(|r| r.abs() < CONSTRAINT_TOL));
        assert!((s.g_max - 37.5).abs() < 2.0, "g_max = {}", s.g_max);
        assert!((s.t_qst - 22.0).abs() < 1.0, "t_qst = {}", s.t_qst);
        // Independent check of both conditions with the closed-form ramp integral.
        let plateau = s.t_qst - 4.0;
        let eff = mhz_to_angular(g_eff(s.g_max, 200.0) * plateau + 2.0 * ramp_integral_oracle(s.g_max, 2.0, 200.0));
        assert!((eff - FRAC_PI_2).abs() < 1e-10);
        assert!((mhz_to_angular(s.g_max * (s.t_qst - 2.0)) - 3.0 * FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn equal_orders_are_infeasible() {
        match solve_constraint(200.0, 2.0, 3, 3) {
            Err(QstError::NoConvergence { residuals, .. }) => assert_eq!(residuals.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(solve_constraint(200.0, 2.0, 2, 1).is_err());
    }

    #[test]
    fn samples_cover_pulse() {
        let s = table1_pulse().samples(0.5).unwrap();
        assert_eq!(s.first().unwrap(), &(0.0, 0.0));
        assert_eq!(s.last().unwrap(), &(22.0, 0.0));
        assert_eq!(s.len(), 45);
        assert!(s.iter().all(|&(_, g)| (0.0..=37.5).contains(&g)));
    }
}
