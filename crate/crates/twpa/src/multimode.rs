//! Stiff coupled-mode ladders beyond the three-mode picture: pump
//! harmonics, third-harmonic four-wave mixing, and signal/idler sideband
//! ladders riding a harmonic-rich pump.
//!
//! The scaled coordinate is xi = (epsilon kappa_p / 4) x with x in cells,
//! and the dimensionless mismatch parameter is mu = 32 Delta / (epsilon
//! kappa_p), with Delta the degenerate three-mode mismatch. Scaled pump
//! amplitudes are a_m = m A_m / A_p(0), so sum |a_m|^2 is conserved at 1.
//! Cubic wavenumber phase factors exp(i mu xi d) carry integer-triple
//! weights d; the adaptive integrator caps its step at 0.1 / max|mu d| so
//! no phase factor advances more than a tenth of a radian per step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device_models::CellCoefficients;
use crate::dispersion::{
    kappa_of_omega, phase_mismatch, DispersionError, DispersionModel,
};
use crate::numerics::ode::{integrate, OdeError, OdeOptions};

/// Step cap: no phase factor may advance more than this per step.
pub const STEP_CAP: f64 = 0.1;

/// Hard ceiling on the harmonic count searched by [`critical_harmonics`].
pub const HARMONIC_CAP: usize = 16;

/// Errors from the coupled-mode integrators.
#[derive(Debug, Clone, PartialEq)]
pub enum MultimodeError {
    /// The adaptive integrator failed.
    Integration(OdeError),
    /// No truncation below [`HARMONIC_CAP`] met the tolerance.
    TruncationNotConverged { m_cap: usize },
    /// An input is outside its valid range.
    InvalidParameter { name: &'static str, value: f64 },
    /// A harmonic could not be placed on the dispersion law.
    Dispersion(DispersionError),
}

impl std::fmt::Display for MultimodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MultimodeError::Integration(e) => write!(f, "integration: {e}"),
            MultimodeError::TruncationNotConverged { m_cap } => {
                write!(f, "no harmonic truncation below {m_cap} converged")
            }
            MultimodeError::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
            MultimodeError::Dispersion(e) => write!(f, "dispersion: {e}"),
        }
    }
}

impl std::error::Error for MultimodeError {}

impl From<OdeError> for MultimodeError {
    fn from(e: OdeError) -> Self {
        MultimodeError::Integration(e)
    }
}

impl From<DispersionError> for MultimodeError {
    fn from(e: DispersionError) -> Self {
        MultimodeError::Dispersion(e)
    }
}

/// One bilinear term of a coupled-mode right-hand side:
/// dy[tgt] += coeff * y[s1] * (y[s2] or conj y[s2]) * exp(i rate x).
#[derive(Debug, Clone, Copy)]
struct Term {
    tgt: usize,
    s1: usize,
    s2: usize,
    conj2: bool,
    coeff: f64,
    rate: f64,
}

fn apply_terms(terms: &[Term], x: f64, y: &[Complex64], dydx: &mut [Complex64]) {
    for t in terms {
        let b = if t.conj2 { y[t.s2].conj() } else { y[t.s2] };
        dydx[t.tgt] += t.coeff * y[t.s1] * b * Complex64::from_polar(1.0, t.rate * x);
    }
}

fn max_rate(terms: &[Term]) -> f64 {
    terms.iter().fold(0.0, |acc, t| acc.max(t.rate.abs()))
}

fn step_opts(rate: f64) -> OdeOptions {
    OdeOptions {
        max_step: if rate > 0.0 { STEP_CAP / rate } else { f64::INFINITY },
        ..OdeOptions::default()
    }
}

/// Pump-harmonic ladder in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledPumpSystem {
    /// Dimensionless mismatch parameter mu = 32 Delta / (epsilon kappa_p).
    pub mu: f64,
    /// Number of retained harmonics M; modes are m = 1..=M.
    pub m_max: usize,
    /// Scaled length to integrate to.
    pub xi_max: f64,
    /// Number of recorded output points (including both ends).
    pub n_out: usize,
}

impl ScaledPumpSystem {
    pub fn new(mu: f64, m_max: usize, xi_max: f64) -> Self {
        ScaledPumpSystem { mu, m_max, xi_max, n_out: 201 }
    }

    fn validate(&self) -> Result<(), MultimodeError> {
        if self.m_max == 0 {
            return Err(MultimodeError::InvalidParameter { name: "m_max", value: 0.0 });
        }
        if !(self.xi_max > 0.0) || !self.xi_max.is_finite() {
            return Err(MultimodeError::InvalidParameter {
                name: "xi_max",
                value: self.xi_max,
            });
        }
        if !self.mu.is_finite() {
            return Err(MultimodeError::InvalidParameter { name: "mu", value: self.mu });
        }
        if self.n_out < 2 {
            return Err(MultimodeError::InvalidParameter {
                name: "n_out",
                value: self.n_out as f64,
            });
        }
        Ok(())
    }
}

/// Integer-triple phase weight d_{a,b} = a b (a - b) / 2.
#[inline]
fn d_pair(a: usize, b: usize) -> f64 {
    let (a, b) = (a as f64, b as f64);
    0.5 * a * b * (a - b)
}

fn build_pump_terms(mu: f64, m_max: usize, offset: usize) -> Vec<Term> {
    let mut terms = Vec::new();
    for m in 1..=m_max {
        for n in (m + 1)..=m_max {
            terms.push(Term {
                tgt: offset + m - 1,
                s1: offset + n - 1,
                s2: offset + n - m - 1,
                conj2: true,
                coeff: m as f64,
                rate: mu * d_pair(n, m),
            });
        }
        for n in 1..m {
            terms.push(Term {
                tgt: offset + m - 1,
                s1: offset + n - 1,
                s2: offset + m - n - 1,
                conj2: false,
                coeff: -(m as f64) / 2.0,
                rate: -mu * d_pair(m, n),
            });
        }
    }
    terms
}

/// Dense trajectory of a pump-harmonic integration.
#[derive(Debug, Clone)]
pub struct HarmonicTrace {
    /// Scaled positions.
    pub xi: Vec<f64>,
    /// amplitudes[k][m-1] is a_m at xi[k].
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl HarmonicTrace {
    /// |a_m|^2 along the trace for harmonic `m` (1-based).
    pub fn power(&self, m: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a[m - 1].norm_sqr()).collect()
    }

    /// Total scaled power sum |a_m|^2 at output index `k`.
    pub fn total_power(&self, k: usize) -> f64 {
        self.amplitudes[k].iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Integrate the scaled pump-harmonic ladder from a_1 = 1.
pub fn integrate_pump_harmonics(
    sys: &ScaledPumpSystem,
) -> Result<HarmonicTrace, MultimodeError> {
    sys.validate()?;
    let terms = build_pump_terms(sys.mu, sys.m_max, 0);
    let rhs = |x: f64, y: &[Complex64], dydx: &mut [Complex64]| {
        dydx.fill(Complex64::default());
        apply_terms(&terms, x, y, dydx);
    };
    let mut y0 = vec![Complex64::default(); sys.m_max];
    y0[0] = Complex64::new(1.0, 0.0);
    let sol = integrate(&rhs, 0.0, sys.xi_max, &y0, sys.n_out, &step_opts(max_rate(&terms)))?;
    Ok(HarmonicTrace { xi: sol.x, amplitudes: sol.y })
}

/// Smallest harmonic count M whose fundamental depletion curve |a_1|^2
/// agrees with the M + 1 truncation to within `tol` everywhere on
/// [0, xi_ref].
pub fn critical_harmonics(mu: f64, xi_ref: f64, tol: f64) -> Result<usize, MultimodeError> {
    if !(tol > 0.0) {
        return Err(MultimodeError::InvalidParameter { name: "tol", value: tol });
    }
    let run = |m: usize| -> Result<Vec<f64>, MultimodeError> {
        let trace = integrate_pump_harmonics(&ScaledPumpSystem {
            mu,
            m_max: m,
            xi_max: xi_ref,
            n_out: 201,
        })?;
        Ok(trace.power(1))
    };
    let mut prev = run(1)?;
    for m in 1..=HARMONIC_CAP {
        let next = run(m + 1)?;
        let diff = prev
            .iter()
            .zip(&next)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if diff < tol {
            return Ok(m);
        }
        prev = next;
    }
    Err(MultimodeError::TruncationNotConverged { m_cap: HARMONIC_CAP })
}

/// Four-wave pump depletion into the third harmonic, scaled units:
/// a_1' = i (|a_1|^2 a_1 - 3 a_3 (a_1*)^2 e^{i mu xi}),
/// a_3' = i (6 |a_1|^2 a_3 - a_1^3 e^{-i mu xi}).
/// The weighted power |a_1|^2 + 3 |a_3|^2 is conserved.
pub fn integrate_4wm_third_harmonic(
    mu_4wm: f64,
    xi_max: f64,
    n_out: usize,
) -> Result<HarmonicTrace, MultimodeError> {
    if !(xi_max > 0.0) || !xi_max.is_finite() {
        return Err(MultimodeError::InvalidParameter { name: "xi_max", value: xi_max });
    }
    if n_out < 2 {
        return Err(MultimodeError::InvalidParameter {
            name: "n_out",
            value: n_out as f64,
        });
    }
    let i = Complex64::new(0.0, 1.0);
    let rhs = move |x: f64, y: &[Complex64], dydx: &mut [Complex64]| {
        let (a1, a3) = (y[0], y[1]);
        let phase = Complex64::from_polar(1.0, mu_4wm * x);
        dydx[0] = i * (a1.norm_sqr() * a1 - 3.0 * a3 * a1.conj() * a1.conj() * phase);
        dydx[1] = i * (6.0 * a1.norm_sqr() * a3 - a1 * a1 * a1 * phase.conj());
    };
    let y0 = [Complex64::new(1.0, 0.0), Complex64::default()];
    // The self- and cross-phase terms rotate at O(1) rates on top of the
    // explicit mu factor, so cap on their sum.
    let opts = step_opts(mu_4wm.abs() + 6.0);
    let sol = integrate(&rhs, 0.0, xi_max, &y0, n_out, &opts)?;
    Ok(HarmonicTrace { xi: sol.x, amplitudes: sol.y })
}

/// Dimensionless four-wave mismatch for a pump of phase amplitude
/// `theta_p0` at wavenumber `kappa_p`: mu = 8 kappa_p^2 / (chi4
/// theta_p0^2).
pub fn mu_4wm(kappa_p: f64, chi4: f64, theta_p0: f64) -> f64 {
    8.0 * kappa_p * kappa_p / (chi4 * theta_p0 * theta_p0)
}

/// Dimensionless mismatch mu = 32 Delta / (epsilon kappa_p) of a pump at
/// `omega_p` with pumping strength `epsilon`, using the exact degenerate
/// three-mode mismatch Delta of the model.
pub fn mu_from_mismatch(
    model: &DispersionModel,
    omega_p: f64,
    epsilon: f64,
) -> Result<f64, MultimodeError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(MultimodeError::InvalidParameter { name: "epsilon", value: epsilon });
    }
    let delta = phase_mismatch(model, omega_p, 0.0)?;
    let kappa_p = kappa_of_omega(model, omega_p)?;
    Ok(32.0 * delta / (epsilon * kappa_p))
}

/// Signal/idler sideband ladders riding a harmonic-rich pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalIdlerSystem {
    /// Dimensionless mismatch parameter, as in [`ScaledPumpSystem`].
    pub mu: f64,
    /// Sideband detuning: the signal ladder sits at (m + (1+delta)/2)
    /// omega_p, the idler ladder at (m + (1-delta)/2) omega_p.
    pub delta: f64,
    /// Retained pump harmonics (1..=M) and sideband rungs (0..=M-1).
    pub m_max: usize,
    /// Scaled length to integrate to.
    pub xi_max: f64,
    /// Signal seed amplitude relative to the pump.
    pub seed_signal: f64,
    /// Number of recorded output points.
    pub n_out: usize,
}

impl SignalIdlerSystem {
    pub fn new(mu: f64, delta: f64, m_max: usize, xi_max: f64) -> Self {
        SignalIdlerSystem { mu, delta, m_max, xi_max, seed_signal: 1e-6, n_out: 201 }
    }

    fn validate(&self) -> Result<(), MultimodeError> {
        if self.m_max == 0 {
            return Err(MultimodeError::InvalidParameter { name: "m_max", value: 0.0 });
        }
        if !(self.delta.abs() < 1.0) {
            return Err(MultimodeError::InvalidParameter {
                name: "delta",
                value: self.delta,
            });
        }
        if !(self.xi_max > 0.0) || !self.xi_max.is_finite() {
            return Err(MultimodeError::InvalidParameter {
                name: "xi_max",
                value: self.xi_max,
            });
        }
        if !(self.seed_signal > 0.0) || !self.seed_signal.is_finite() {
            return Err(MultimodeError::InvalidParameter {
                name: "seed_signal",
                value: self.seed_signal,
            });
        }
        if self.n_out < 2 {
            return Err(MultimodeError::InvalidParameter {
                name: "n_out",
                value: self.n_out as f64,
            });
        }
        Ok(())
    }
}

/// Cubic phase weight for a pump-mediated sideband conversion,
/// (n^3 - a^3 - b^3) / 6 with fractional mode indices a, b.
#[inline]
fn d_frac(n: f64, a: f64, b: f64) -> f64 {
    (n * n * n - a * a * a - b * b * b) / 6.0
}

/// Build one sideband ladder's terms. `sig` is the ladder being built
/// (state offset `off_sig`, fractional offset `sigma_sig`); `oth` is the
/// partner ladder it converts against.
#[allow(clippy::too_many_arguments)]
fn build_sideband_terms(
    mu: f64,
    m_max: usize,
    off_pump: usize,
    off_sig: usize,
    off_oth: usize,
    sigma_sig: f64,
    sigma_oth: f64,
    terms: &mut Vec<Term>,
) {
    for m in 0..m_max {
        let tgt = off_sig + m;
        let pre = m as f64 + sigma_sig;
        // Pump harmonic n converts partner rung n - m - 1 up into rung m.
        for n in (m + 1)..=m_max {
            let d = d_frac(
                n as f64,
                m as f64 + sigma_sig,
                (n - m - 1) as f64 + sigma_oth,
            );
            terms.push(Term {
                tgt,
                s1: off_pump + n - 1,
                s2: off_oth + n - m - 1,
                conj2: true,
                coeff: pre,
                rate: mu * d,
            });
        }
        // Own rung n falls to rung m against pump harmonic n - m.
        for n in (m + 1)..m_max {
            let d = d_frac(
                n as f64 + sigma_sig,
                m as f64 + sigma_sig,
                (n - m) as f64,
            );
            terms.push(Term {
                tgt,
                s1: off_sig + n,
                s2: off_pump + n - m - 1,
                conj2: true,
                coeff: pre,
                rate: mu * d,
            });
        }
        // Pump harmonic n raises own rung m - n up to rung m.
        for n in 1..=m {
            let d = d_frac(
                m as f64 + sigma_sig,
                (m - n) as f64 + sigma_sig,
                n as f64,
            );
            terms.push(Term {
                tgt,
                s1: off_pump + n - 1,
                s2: off_sig + m - n,
                conj2: false,
                coeff: -pre,
                rate: -mu * d,
            });
        }
    }
}

/// Dense trajectory of a joint pump + signal + idler integration.
#[derive(Debug, Clone)]
pub struct SignalIdlerTrace {
    pub xi: Vec<f64>,
    /// pump[k][m-1] is a_{p,m} at xi[k], m = 1..=M.
    pub pump: Vec<Vec<Complex64>>,
    /// signal[k][m] is a_{s,m} at xi[k], m = 0..=M-1.
    pub signal: Vec<Vec<Complex64>>,
    /// idler[k][m] is a_{i,m} at xi[k].
    pub idler: Vec<Vec<Complex64>>,
    pub seed_signal: f64,
    pub delta: f64,
}

impl SignalIdlerTrace {
    /// Signal power gain at output index `k` in dB, relative to the seed.
    pub fn gain_db(&self, k: usize) -> f64 {
        20.0 * (self.signal[k][0].norm() / self.seed_signal).log10()
    }

    /// Signal power gain at the end of the run, in dB.
    pub fn final_gain_db(&self) -> f64 {
        self.gain_db(self.xi.len() - 1)
    }

    /// Weighted sideband imbalance sum_m |a_{s,m}|^2 / (m + sigma_s)
    /// - sum_m |a_{i,m}|^2 / (m + sigma_i), conserved by the ladder flow.
    pub fn manley_rowe(&self, k: usize) -> f64 {
        let sigma_s = (1.0 + self.delta) / 2.0;
        let sigma_i = (1.0 - self.delta) / 2.0;
        let s: f64 = self.signal[k]
            .iter()
            .enumerate()
            .map(|(m, a)| a.norm_sqr() / (m as f64 + sigma_s))
            .sum();
        let i: f64 = self.idler[k]
            .iter()
            .enumerate()
            .map(|(m, a)| a.norm_sqr() / (m as f64 + sigma_i))
            .sum();
        s - i
    }

    /// Total sideband power at output index `k`.
    pub fn sideband_power(&self, k: usize) -> f64 {
        self.signal[k].iter().chain(&self.idler[k]).map(|a| a.norm_sqr()).sum()
    }
}

/// Integrate the joint pump + signal + idler ladder system with the pump
/// seeded at a_1 = 1 and the signal at `seed_signal` on its lowest rung.
/// The sidebands stay linear (no back-action on the pump).
pub fn integrate_signal_idler(
    sys: &SignalIdlerSystem,
) -> Result<SignalIdlerTrace, MultimodeError> {
    sys.validate()?;
    let m = sys.m_max;
    let sigma_s = (1.0 + sys.delta) / 2.0;
    let sigma_i = (1.0 - sys.delta) / 2.0;
    let mut terms = build_pump_terms(sys.mu, m, 0);
    build_sideband_terms(sys.mu, m, 0, m, 2 * m, sigma_s, sigma_i, &mut terms);
    build_sideband_terms(sys.mu, m, 0, 2 * m, m, sigma_i, sigma_s, &mut terms);
    let rhs = |x: f64, y: &[Complex64], dydx: &mut [Complex64]| {
        dydx.fill(Complex64::default());
        apply_terms(&terms, x, y, dydx);
    };
    let mut y0 = vec![Complex64::default(); 3 * m];
    y0[0] = Complex64::new(1.0, 0.0);
    y0[m] = Complex64::new(sys.seed_signal, 0.0);
    let sol = integrate(&rhs, 0.0, sys.xi_max, &y0, sys.n_out, &step_opts(max_rate(&terms)))?;
    let mut pump = Vec::with_capacity(sol.y.len());
    let mut signal = Vec::with_capacity(sol.y.len());
    let mut idler = Vec::with_capacity(sol.y.len());
    for row in &sol.y {
        pump.push(row[..m].to_vec());
        signal.push(row[m..2 * m].to_vec());
        idler.push(row[2 * m..].to_vec());
    }
    Ok(SignalIdlerTrace {
        xi: sol.x,
        pump,
        signal,
        idler,
        seed_signal: sys.seed_signal,
        delta: sys.delta,
    })
}

/// Mismatch parameter above which the single-harmonic (M = 1) ladder stops
/// growing: mu_threshold = 8 / sqrt(1 - delta^2).
pub fn gain_threshold_mu(delta: f64) -> Result<f64, MultimodeError> {
    if !(delta.abs() < 1.0) {
        return Err(MultimodeError::InvalidParameter { name: "delta", value: delta });
    }
    Ok(8.0 / (1.0 - delta * delta).sqrt())
}

/// Closed-form signal power ratio |a_s(xi) / a_s(0)|^2 for the M = 1
/// ladder (static pump): with beta = mu (1 - delta^2) / 8 and
/// g^2 = (1 - delta^2)/4 - beta^2/4, the envelope is
/// e^{i beta xi / 2} (cosh(g xi) - i (beta / 2g) sinh(g xi)),
/// analytically continued to oscillatory g^2 < 0.
pub fn single_mode_gain_power(mu: f64, delta: f64, xi: f64) -> f64 {
    let beta = mu * (1.0 - delta * delta) / 8.0;
    let g_sq = (1.0 - delta * delta) / 4.0 - beta * beta / 4.0;
    let g = Complex64::new(g_sq, 0.0).sqrt();
    let z = g * xi;
    // sinh(z)/z stays finite at the threshold g -> 0.
    let sinhc = if z.norm() > 1e-8 {
        z.sinh() / z
    } else {
        Complex64::new(1.0, 0.0) + z * z / 6.0
    };
    let a = z.cosh() - Complex64::new(0.0, beta / 2.0) * xi * sinhc;
    a.norm_sqr()
}

/// Pump-harmonic evolution in physical units on a given dispersion law:
/// A_m' = (chi3 / 4) [ sum_{n>m} k_n k_{n-m} A_n A_{n-m}* e^{i D x}
///                   - (1/2) sum_{n<m} k_n k_{m-n} A_n A_{m-n} e^{-i D x} ],
/// with exact wavenumbers k_m and mismatches D = k_n - k_m - k_{n-m}.
#[derive(Debug, Clone)]
pub struct PhysicalHarmonics {
    /// Position along the chain, in cells.
    pub x: Vec<f64>,
    /// amplitudes[k][m-1] is A_m at x[k], in phase units.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Wavenumbers of the retained harmonics.
    pub wavenumbers: Vec<f64>,
    /// Number of harmonics actually integrated.
    pub m_used: usize,
    /// True when harmonics above `m_used` were dropped for lying outside
    /// the dispersion bands.
    pub truncated: bool,
}

/// Integrate the physical pump-harmonic ladder from A_1 = `a_p0`.
/// Harmonics that fall outside the dispersion bands are dropped with the
/// `truncated` flag set rather than failing the run.
pub fn integrate_pump_harmonics_physical(
    coeffs: &CellCoefficients,
    model: &DispersionModel,
    omega_p: f64,
    a_p0: f64,
    m_max: usize,
    x_max: f64,
    n_out: usize,
) -> Result<PhysicalHarmonics, MultimodeError> {
    if m_max == 0 {
        return Err(MultimodeError::InvalidParameter { name: "m_max", value: 0.0 });
    }
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(MultimodeError::InvalidParameter { name: "x_max", value: x_max });
    }
    if n_out < 2 {
        return Err(MultimodeError::InvalidParameter {
            name: "n_out",
            value: n_out as f64,
        });
    }
    let mut wavenumbers = Vec::with_capacity(m_max);
    let mut truncated = false;
    for m in 1..=m_max {
        match kappa_of_omega(model, (m as f64) * omega_p) {
            Ok(k) => wavenumbers.push(k),
            Err(DispersionError::AboveCutoff { .. }) | Err(DispersionError::InGap { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if wavenumbers.is_empty() {
        return Err(MultimodeError::Dispersion(DispersionError::AboveCutoff {
            omega: omega_p,
            cutoff: model.cutoff()?,
        }));
    }
    let m_used = wavenumbers.len();
    let k = &wavenumbers;
    let chi3 = coeffs.chi3;
    let mut terms = Vec::new();
    for m in 1..=m_used {
        for n in (m + 1)..=m_used {
            terms.push(Term {
                tgt: m - 1,
                s1: n - 1,
                s2: n - m - 1,
                conj2: true,
                coeff: chi3 / 4.0 * k[n - 1] * k[n - m - 1],
                rate: k[n - 1] - k[m - 1] - k[n - m - 1],
            });
        }
        for n in 1..m {
            terms.push(Term {
                tgt: m - 1,
                s1: n - 1,
                s2: m - n - 1,
                conj2: false,
                coeff: -chi3 / 8.0 * k[n - 1] * k[m - n - 1],
                rate: -(k[m - 1] - k[n - 1] - k[m - n - 1]),
            });
        }
    }
    let rhs = |x: f64, y: &[Complex64], dydx: &mut [Complex64]| {
        dydx.fill(Complex64::default());
        apply_terms(&terms, x, y, dydx);
    };
    let mut y0 = vec![Complex64::default(); m_used];
    y0[0] = Complex64::new(a_p0, 0.0);
    let sol = integrate(&rhs, 0.0, x_max, &y0, n_out, &step_opts(max_rate(&terms)))?;
    Ok(PhysicalHarmonics {
        x: sol.x,
        amplitudes: sol.y,
        wavenumbers,
        m_used,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_two_harmonic_flow_is_sech_tanh() {
        // At mu = 0, M = 2 the ladder has the closed solution
        // a_1 = sech(xi), a_2 = -tanh(xi).
        let trace = integrate_pump_harmonics(&ScaledPumpSystem {
            mu: 0.0,
            m_max: 2,
            xi_max: 5.0,
            n_out: 101,
        })
        .unwrap();
        for (k, &xi) in trace.xi.iter().enumerate() {
            let a1 = trace.amplitudes[k][0];
            let a2 = trace.amplitudes[k][1];
            assert!((a1.re - 1.0 / xi.cosh()).abs() < 1e-8, "xi = {xi}");
            assert!(a1.im.abs() < 1e-8);
            assert!((a2.re + xi.tanh()).abs() < 1e-8, "xi = {xi}");
            assert!(a2.im.abs() < 1e-8);
        }
    }

    #[test]
    fn pump_ladder_conserves_total_power() {
        for (mu, m) in [(0.5, 6), (2.0, 5), (8.0, 4)] {
            let trace = integrate_pump_harmonics(&ScaledPumpSystem {
                mu,
                m_max: m,
                xi_max: 8.0,
                n_out: 81,
            })
            .unwrap();
            for k in 0..trace.xi.len() {
                let p = trace.total_power(k);
                assert!((p - 1.0).abs() < 1e-8, "mu = {mu}, M = {m}: power {p}");
            }
        }
    }

    #[test]
    fn critical_harmonic_counts_match_landmarks() {
        assert_eq!(critical_harmonics(2.0, 10.0, 0.01).unwrap(), 5);
        assert_eq!(critical_harmonics(8.0, 10.0, 0.01).unwrap(), 3);
    }

    #[test]
    fn stronger_mismatch_needs_fewer_harmonics() {
        let low = critical_harmonics(0.5, 10.0, 0.01).unwrap();
        let mid = critical_harmonics(2.0, 10.0, 0.01).unwrap();
        let high = critical_harmonics(8.0, 10.0, 0.01).unwrap();
        assert!(low >= mid && mid >= high, "{low} >= {mid} >= {high}");
        assert!((10..=11).contains(&low), "M_crit(0.5) = {low}");
    }

    #[test]
    fn third_harmonic_flow_conserves_weighted_power() {
        let trace = integrate_4wm_third_harmonic(2.0, 6.0, 61).unwrap();
        for k in 0..trace.xi.len() {
            let w = trace.amplitudes[k][0].norm_sqr() + 3.0 * trace.amplitudes[k][1].norm_sqr();
            assert!((w - 1.0).abs() < 1e-8, "k = {k}: {w}");
        }
        // Large mismatch freezes the conversion.
        let frozen = integrate_4wm_third_harmonic(500.0, 6.0, 61).unwrap();
        let max3 = frozen
            .amplitudes
            .iter()
            .fold(0.0f64, |acc, a| acc.max(a[1].norm()));
        assert!(max3 < 0.02, "third harmonic grew to {max3}");
    }

    #[test]
    fn single_mode_ladder_matches_the_closed_form() {
        for (mu, delta) in [(0.0, 0.0), (1.0, 0.0), (3.0, 0.3), (7.9, 0.0)] {
            let sys = SignalIdlerSystem {
                seed_signal: 1e-3,
                ..SignalIdlerSystem::new(mu, delta, 1, 6.0)
            };
            let trace = integrate_signal_idler(&sys).unwrap();
            for (k, &xi) in trace.xi.iter().enumerate() {
                let got = (trace.signal[k][0].norm() / sys.seed_signal).powi(2);
                let want = single_mode_gain_power(mu, delta, xi);
                assert!(
                    (got - want).abs() < 1e-6 * want.max(1.0),
                    "mu = {mu}, delta = {delta}, xi = {xi}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn oscillatory_regime_stays_bounded() {
        // Just above the threshold mu = 8 the M = 1 gain oscillates with a
        // bounded envelope instead of growing.
        let mu = 8.1;
        let sys = SignalIdlerSystem { n_out: 601, ..SignalIdlerSystem::new(mu, 0.0, 1, 60.0) };
        let trace = integrate_signal_idler(&sys).unwrap();
        let half = trace.xi.len() / 2;
        let max_first: f64 = (0..half)
            .map(|k| trace.signal[k][0].norm_sqr())
            .fold(0.0, f64::max);
        let max_second: f64 = (half..trace.xi.len())
            .map(|k| trace.signal[k][0].norm_sqr())
            .fold(0.0, f64::max);
        let seed_sq = sys.seed_signal * sys.seed_signal;
        assert!(max_second <= 1.05 * max_first, "late max grew: {max_second} vs {max_first}");
        // The closed-form oscillation crest is (beta / 2 lambda)^2 ~ 40.8.
        assert!(max_second / seed_sq < 45.0, "bound exceeded: {}", max_second / seed_sq);
        assert!(max_first / seed_sq > 30.0, "oscillation never reached its crest");
    }

    #[test]
    fn manley_rowe_imbalance_is_conserved() {
        for (mu, delta, m) in [(1.0, 0.0, 4), (2.0, 0.25, 5), (0.5, -0.4, 3)] {
            let sys = SignalIdlerSystem {
                seed_signal: 1e-3,
                ..SignalIdlerSystem::new(mu, delta, m, 8.0)
            };
            let trace = integrate_signal_idler(&sys).unwrap();
            let start = trace.manley_rowe(0);
            for k in 0..trace.xi.len() {
                let mr = trace.manley_rowe(k);
                let scale = trace.sideband_power(k).max(1e-300);
                assert!(
                    (mr - start).abs() < 1e-8 * scale,
                    "mu = {mu}, delta = {delta}, M = {m}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn sideband_gain_is_linear_in_the_seed() {
        let base = SignalIdlerSystem::new(1.0, 0.1, 3, 10.0);
        let big = SignalIdlerSystem { seed_signal: 1e-5, ..base };
        let g1 = integrate_signal_idler(&base).unwrap().final_gain_db();
        let g2 = integrate_signal_idler(&big).unwrap().final_gain_db();
        assert!((g1 - g2).abs() < 0.1, "gain changed with seed: {g1} vs {g2}");
    }

    #[test]
    fn gain_threshold_matches_the_closed_form() {
        assert!((gain_threshold_mu(0.0).unwrap() - 8.0).abs() < 1e-14);
        let d: f64 = 0.6;
        assert!(
            (gain_threshold_mu(d).unwrap() - 8.0 / (1.0 - d * d).sqrt()).abs() < 1e-12
        );
        assert!(gain_threshold_mu(1.0).is_err());
    }

    /// Worst relative endpoint deviation between the physical ladder at
    /// pump frequency `omega_p` (drive chosen so the mapped mismatch is
    /// exactly `mu`) and the scaled ladder it maps onto via
    /// a_m = m A_m / A_p(0), xi = epsilon kappa_p x / 4.
    fn mapping_error(omega_p: f64, mu: f64, m: usize, xi_max: f64) -> f64 {
        let model = DispersionModel::Uniform { omega0: 1.0 };
        let coeffs = CellCoefficients { theta0: 0.0, omega0: 1.0, chi3: 1.0, chi4: None };
        let kp = kappa_of_omega(&model, omega_p).unwrap();
        let delta = phase_mismatch(&model, omega_p, 0.0).unwrap();
        let eps = 32.0 * delta / (mu * kp);
        let a_p0 = eps / (coeffs.chi3 * kp);
        let x_max = 4.0 * xi_max / (eps * kp);
        let phys = integrate_pump_harmonics_physical(
            &coeffs, &model, omega_p, a_p0, m, x_max, 51,
        )
        .unwrap();
        assert!(!phys.truncated);
        let scaled = integrate_pump_harmonics(&ScaledPumpSystem {
            mu,
            m_max: m,
            xi_max,
            n_out: 51,
        })
        .unwrap();
        let end = phys.x.len() - 1;
        let mut worst = 0.0f64;
        for mode in 1..=m {
            let a_phys = (mode as f64) * phys.amplitudes[end][mode - 1].norm() / a_p0;
            let a_scaled = scaled.amplitudes[end][mode - 1].norm();
            worst = worst.max((a_phys - a_scaled).abs() / a_scaled.max(0.01));
        }
        worst
    }

    #[test]
    fn physical_ladder_matches_the_scaled_one_after_mapping() {
        // The scaled ladder is the long-wavelength limit of the physical
        // one; the mapped endpoint error must be small and shrink roughly
        // quadratically as the pump frequency drops at fixed mu.
        let model = DispersionModel::Uniform { omega0: 1.0 };
        let kp = kappa_of_omega(&model, 0.1).unwrap();
        let eps = 0.2 * kp;
        assert!((eps - 0.020_008_3).abs() < 1e-6);
        let mu = mu_from_mismatch(&model, 0.1, eps).unwrap();
        assert!((mu - 0.500_36).abs() < 5e-4, "mu = {mu}");
        let coarse = mapping_error(0.1, mu, 4, 2.0);
        let fine = mapping_error(0.05, mu, 4, 2.0);
        assert!(coarse < 0.12, "mapping error at omega_p = 0.1: {coarse}");
        assert!(fine < 0.04, "mapping error at omega_p = 0.05: {fine}");
        assert!(fine < coarse / 2.5, "no convergence: {fine} vs {coarse}");
    }

    #[test]
    fn weak_harmonics_scale_perturbatively() {
        // In the perturbative regime |A_m| grows like A_p0^m, so halving
        // the drive scales the second harmonic by 4 and the third by 8.
        let model = DispersionModel::Uniform { omega0: 1.0 };
        let coeffs = CellCoefficients { theta0: 0.0, omega0: 1.0, chi3: 1.0, chi4: None };
        let omega_p = 0.1;
        let x_max = 150.0;
        let full = integrate_pump_harmonics_physical(
            &coeffs, &model, omega_p, 0.1, 3, x_max, 11,
        )
        .unwrap();
        let half = integrate_pump_harmonics_physical(
            &coeffs, &model, omega_p, 0.05, 3, x_max, 11,
        )
        .unwrap();
        let end = full.x.len() - 1;
        let r2 = full.amplitudes[end][1].norm() / half.amplitudes[end][1].norm();
        let r3 = full.amplitudes[end][2].norm() / half.amplitudes[end][2].norm();
        assert!((r2 - 4.0).abs() < 0.2, "second harmonic ratio {r2}");
        assert!((r3 - 8.0).abs() < 0.4, "third harmonic ratio {r3}");
    }

    #[test]
    fn harmonics_above_cutoff_are_dropped_with_a_flag() {
        let model = DispersionModel::Uniform { omega0: 1.0 };
        let coeffs = CellCoefficients { theta0: 0.0, omega0: 1.0, chi3: 1.0, chi4: None };
        // Third harmonic of 0.8 is at 2.4, above the cutoff 2.
        let phys = integrate_pump_harmonics_physical(
            &coeffs, &model, 0.8, 0.1, 5, 50.0, 11,
        )
        .unwrap();
        assert!(phys.truncated);
        assert_eq!(phys.m_used, 2);
        // A pump already above the cutoff is an error, not a truncation.
        assert!(matches!(
            integrate_pump_harmonics_physical(&coeffs, &model, 2.5, 0.1, 3, 50.0, 11),
            Err(MultimodeError::Dispersion(_))
        ));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            integrate_pump_harmonics(&ScaledPumpSystem::new(1.0, 0, 10.0)),
            Err(MultimodeError::InvalidParameter { name: "m_max", .. })
        ));
        assert!(matches!(
            integrate_signal_idler(&SignalIdlerSystem::new(1.0, 1.5, 3, 10.0)),
            Err(MultimodeError::InvalidParameter { name: "delta", .. })
        ));
        assert!(matches!(
            critical_harmonics(1.0, 10.0, 0.0),
            Err(MultimodeError::InvalidParameter { name: "tol", .. })
        ));
    }
}
