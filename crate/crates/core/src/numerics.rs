//! Small scalar numerics: adaptive quadrature and bracketed maximization.

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Refinement stops on an interval once the Richardson estimate falls below
/// `rel_tol` times the running magnitude of the integral (or `abs_floor`,
/// whichever is larger).
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Coarse magnitude estimate, used to turn the relative tolerance into an absolute one.
    let coarse = {
        let n = 64;
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * f(a + i as f64 * h).abs()
            })
            .sum::<f64>()
            * h
    };
    let tol = (rel_tol * coarse).max(f64::EPSILON * 16.0 * coarse).max(1e-300);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Result of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`, to within `tol` in x.
///
/// Ties (values within `tie_tol`) resolve toward the smaller abscissa.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64, tie_tol: f64) -> LineMax
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;
    while b - a > tol {
        if f1 >= f2 - tie_tol {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        evaluations += 1;
    }
    if f1 >= f2 - tie_tol {
        LineMax { x: x1, value: f1, evaluations }
    } else {
        LineMax { x: x2, value: f2, evaluations }
    }
}
