//! Scalar and complex root finding, plus a 1-D maximizer.
//!
//! All solvers are derivative free. Real roots are located by bracketed
//! bisection and polished with Newton steps built on a central-difference
//! derivative, so callers only supply the function itself. Complex roots
//! (needed for the three-mode dispersion determinant, which is analytic)
//! use damped Newton iteration with the same numerical derivative.

use num_complex::Complex64;

/// Relative tolerance on the abscissa at which a root is accepted.
pub const ROOT_TOL: f64 = 1e-12;

/// Bisection iteration cap. 200 halvings shrink any finite bracket far
/// below `f64` resolution, so hitting the cap means the bracket update
/// itself is broken rather than slow.
const MAX_BISECT: usize = 200;

/// Newton polish iteration cap; the polish starts inside a
/// near-converged bracket, so a handful of steps suffices.
const MAX_POLISH: usize = 8;

/// Failure modes shared by the scalar solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    /// `f(lo)` and `f(hi)` have the same sign, so the bracket is invalid.
    NoSignChange { lo: f64, hi: f64 },
    /// The iteration hit its cap without meeting tolerance.
    IterationLimit { last: f64 },
    /// The function returned NaN or an infinity during the search.
    NonFinite { x: f64 },
}

impl std::fmt::Display for RootError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RootError::NoSignChange { lo, hi } => {
                write!(f, "no sign change over bracket [{lo}, {hi}]")
            }
            RootError::IterationLimit { last } => {
                write!(f, "iteration limit reached, last iterate {last}")
            }
            RootError::NonFinite { x } => {
                write!(f, "function value is not finite at x = {x}")
            }
        }
    }
}

impl std::error::Error for RootError {}

/// Finds the root of `f` inside `[lo, hi]`, which must straddle a sign
/// change. Bisection narrows the bracket to [`ROOT_TOL`] relative width,
/// then Newton steps with a central-difference derivative polish the last
/// few digits without being allowed to leave the bracket.
pub fn solve_bracketed<F>(f: F, lo: f64, hi: f64) -> Result<f64, RootError>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() {
        return Err(RootError::NonFinite { x: lo });
    }
    if !fhi.is_finite() {
        return Err(RootError::NonFinite { x: hi });
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoSignChange { lo, hi });
    }

    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = ROOT_TOL * scale;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT {
        mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            break;
        }
        let fmid = f(mid);
        if !fmid.is_finite() {
            return Err(RootError::NonFinite { x: mid });
        }
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }

    let mut x = mid;
    for _ in 0..MAX_POLISH {
        let h = scale * f64::EPSILON.sqrt();
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let x_new = x - step;
        if !(lo..=hi).contains(&x_new) || !x_new.is_finite() {
            break;
        }
        x = x_new;
        if step.abs() <= f64::EPSILON * scale {
            break;
        }
    }
    Ok(x)
}

/// Scans `[lo, hi]` on `n` uniform panels and returns the first panel
/// `[a, b]` with a sign change of `f`, ready for [`solve_bracketed`].
pub fn scan_for_bracket<F>(f: F, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let n = n.max(1);
    let dx = (hi - lo) / n as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + i as f64 * dx };
        let fb = f(b);
        if fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
            return Some((a, b));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Golden-section maximizer over `[lo, hi]` for a unimodal `f`.
/// Returns `(argmax, max)` with the abscissa resolved to `tol`.
pub fn golden_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Damped Newton iteration for a root of an analytic complex function.
/// The derivative is a real-step central difference, which is the true
/// complex derivative for analytic `f`. Returns `None` when the iteration
/// fails to converge, so callers can fall back to a global search.
pub fn newton_complex<F>(f: F, z0: Complex64, tol: f64, max_iter: usize) -> Option<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut z = z0;
    let mut fz = f(z);
    if !fz.re.is_finite() || !fz.im.is_finite() {
        return None;
    }
    for _ in 0..max_iter {
        if fz.norm() == 0.0 {
            return Some(z);
        }
        let h = f64::EPSILON.sqrt() * z.norm().max(1.0);
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return None;
        }
        let mut step = fz / d;
        let mut z_new = z - step;
        let mut f_new = f(z_new);
        let mut halvings = 0;
        while (!f_new.re.is_finite() || !f_new.im.is_finite() || f_new.norm() > fz.norm())
            && halvings < 12
        {
            step *= 0.5;
            z_new = z - step;
            f_new = f(z_new);
            halvings += 1;
        }
        if halvings == 12 {
            return None;
        }
        let converged = step.norm() <= tol * z_new.norm().max(1.0);
        z = z_new;
        fz = f_new;
        if converged {
            return Some(z);
        }
    }
    None
}
