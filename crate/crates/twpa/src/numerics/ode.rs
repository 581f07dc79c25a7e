//! Adaptive Dormand-Prince 5(4) integration for complex-valued systems.
//!
//! The coupled-mode equations integrated throughout this crate have
//! complex amplitudes and oscillatory phase factors, so the integrator
//! works directly on `Complex64` state vectors. Output sampling follows
//! the step-clamping scheme: the adaptive step is shortened whenever it
//! would cross the next requested output abscissa, so every recorded
//! sample is a true accepted step rather than an interpolant.

use num_complex::Complex64;

/// Right-hand side of a first-order complex ODE system.
pub trait OdeSystem {
    /// Writes dy/dx at `(x, y)` into `dydx`. Both slices have the
    /// system dimension.
    fn rhs(&self, x: f64, y: &[Complex64], dydx: &mut [Complex64]);
}

/// Blanket implementation so closures can be integrated directly.
impl<F> OdeSystem for F
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    fn rhs(&self, x: f64, y: &[Complex64], dydx: &mut [Complex64]) {
        self(x, y, dydx)
    }
}

/// Integration controls. The defaults match the accuracy the
/// coupled-mode solvers are validated at.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Hard cap on the step size; infinite by default.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
        }
    }
}

/// Dense trajectory returned by [`integrate`].
#[derive(Debug, Clone)]
pub struct OdeSolution {
    /// Output abscissae, uniformly spaced from `x0` to `x1` inclusive.
    pub x: Vec<f64>,
    /// State at each output abscissa.
    pub y: Vec<Vec<Complex64>>,
    /// Accepted steps.
    pub n_steps: usize,
    /// Rejected (re-tried) steps.
    pub n_rejected: usize,
}

impl OdeSolution {
    /// Final state, at `x1`.
    pub fn last(&self) -> &[Complex64] {
        self.y.last().expect("solution has at least the initial sample")
    }
}

/// Integration failure modes.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    /// Step control drove the step below `f64` resolution at `x`,
    /// which signals a singularity or an inconsistent tolerance.
    StepSizeUnderflow { x: f64 },
    /// The step budget was exhausted before reaching `x1`.
    StepLimit { x: f64 },
    /// The right-hand side returned NaN or an infinity at `x`.
    NonFinite { x: f64 },
}

impl std::fmt::Display for OdeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OdeError::StepSizeUnderflow { x } => write!(f, "step size underflow at x = {x}"),
            OdeError::StepLimit { x } => write!(f, "step limit exhausted at x = {x}"),
            OdeError::NonFinite { x } => write!(f, "right-hand side not finite at x = {x}"),
        }
    }
}

impl std::error::Error for OdeError {}

/// Number of Runge-Kutta stages; stage 7 doubles as the first stage of
/// the next step (first-same-as-last).
const STAGES: usize = 7;

const C: [f64; STAGES] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Difference between the 5th-order propagating weights and the 4th-order
/// embedded weights; contracting the stages with these gives the local
/// error estimate directly.
const E: [f64; STAGES] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;

/// Integrates `sys` from `x0` to `x1` (forward only), recording the state
/// at `n_out` uniformly spaced points including both endpoints.
/// `n_out` must be at least 2.
pub fn integrate<S: OdeSystem>(
    sys: &S,
    x0: f64,
    x1: f64,
    y0: &[Complex64],
    n_out: usize,
    opts: &OdeOptions,
) -> Result<OdeSolution, OdeError> {
    assert!(x1 > x0, "integration interval must be forward and nonempty");
    assert!(n_out >= 2, "need at least the two endpoint samples");
    let dim = y0.len();
    let span = x1 - x0;
    let n_out_f = (n_out - 1) as f64;

    let mut xs = Vec::with_capacity(n_out);
    let mut ys = Vec::with_capacity(n_out);
    xs.push(x0);
    ys.push(y0.to_vec());

    let mut k = vec![vec![Complex64::default(); dim]; STAGES];
    let mut y = y0.to_vec();
    let mut x = x0;
    let mut y_stage = vec![Complex64::default(); dim];
    let mut y_new = vec![Complex64::default(); dim];

    sys.rhs(x, &y, &mut k[0]);
    check_finite(&k[0], x)?;

    let mut h = initial_step(&y, &k[0], span, opts);
    let mut next_out = 1usize;
    let mut n_steps = 0usize;
    let mut n_rejected = 0usize;
    let mut fsal_valid = true;

    while next_out < n_out {
        let x_target = x0 + span * next_out as f64 / n_out_f;
        let x_target = if next_out == n_out - 1 { x1 } else { x_target };
        let mut lands_on_target = false;
        if x + h >= x_target {
            h = x_target - x;
            lands_on_target = true;
        }
        if h <= f64::EPSILON * x.abs().max(span) {
            // The remaining gap to the output point is below resolution;
            // snap the current state onto it.
            xs.push(x_target);
            ys.push(y.clone());
            x = x_target;
            next_out += 1;
            h = span / n_out_f;
            fsal_valid = false;
            continue;
        }
        if n_steps + n_rejected >= MAX_STEPS {
            return Err(OdeError::StepLimit { x });
        }

        if !fsal_valid {
            sys.rhs(x, &y, &mut k[0]);
            check_finite(&k[0], x)?;
            fsal_valid = true;
        }

        for s in 1..STAGES {
            let (done, rest) = k.split_at_mut(s);
            for i in 0..dim {
                let mut acc = Complex64::default();
                for (j, kj) in done.iter().enumerate() {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            sys.rhs(x + C[s] * h, &y_stage, &mut rest[0]);
        }
        check_finite(&k[STAGES - 1], x + h)?;
        // Stage 7 is evaluated at (x + h, y_new), so y_stage already holds
        // the 5th-order solution.
        y_new.copy_from_slice(&y_stage);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = Complex64::default();
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            let tol = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            let r = h * e.norm() / tol;
            err_sq += r * r;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            x += h;
            y.copy_from_slice(&y_new);
            k.swap(0, STAGES - 1);
            n_steps += 1;
            if lands_on_target {
                xs.push(x_target);
                ys.push(y.clone());
                next_out += 1;
            }
            let scale = if err == 0.0 {
                MAX_SCALE
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            };
            h = (h * scale).min(opts.max_step);
        } else {
            n_rejected += 1;
            let scale = (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
            h *= scale;
            if h <= f64::EPSILON * x.abs().max(span) {
                return Err(OdeError::StepSizeUnderflow { x });
            }
        }
    }

    Ok(OdeSolution {
        x: xs,
        y: ys,
        n_steps,
        n_rejected,
    })
}

/// Convenience wrapper that only returns the final state.
pub fn integrate_to<S: OdeSystem>(
    sys: &S,
    x0: f64,
    x1: f64,
    y0: &[Complex64],
    opts: &OdeOptions,
) -> Result<Vec<Complex64>, OdeError> {
    let sol = integrate(sys, x0, x1, y0, 2, opts)?;
    Ok(sol.y.into_iter().next_back().expect("endpoint sample"))
}

fn check_finite(k: &[Complex64], x: f64) -> Result<(), OdeError> {
    if k.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { x })
    }
}

/// Conservative first step: a fraction of the span, shrunk further when
/// the initial slope is steep relative to the state scale.
fn initial_step(y: &[Complex64], dydx: &[Complex64], span: f64, opts: &OdeOptions) -> f64 {
    let y_scale: f64 = y.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-6);
    let d_scale: f64 = dydx.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let h_slope = if d_scale > 0.0 {
        0.01 * y_scale / d_scale
    } else {
        f64::INFINITY
    };
    (span / 100.0).min(h_slope).min(opts.max_step)
}
