//! Brute-force time-domain oracle: direct integration of the discrete
//! chain equation of motion, used to cross-check the coupled-mode solvers
//! at small scale.
//!
//! The chain obeys phi_n'' = omega0^2 [ (phi_{n+1} - 2 phi_n + phi_{n-1})
//! - (chi3 / 2) ((phi_{n+1} - phi_n)^2 - (phi_n - phi_{n-1})^2) ], the
//! quadratic truncation of the junction chain dynamics. Node 0 is driven
//! (Dirichlet) with a ramped multi-tone waveform; a matched right end is
//! realized as a short graded damping tail with the nonlinearity switched
//! off, which absorbs outgoing waves far better than a single resistive
//! node. Steady-state spectra come from Hann-windowed Fourier projections
//! over the last quarter of the run.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device_models::CellCoefficients;
use crate::dispersion::{kappa_of_omega, DispersionError, DispersionModel};

/// Fixed integration step: this many steps per period of the highest tone.
pub const STEPS_PER_PERIOD: usize = 64;

/// Drive amplitude ramp length, in periods of the lowest tone.
pub const RAMP_PERIODS: f64 = 5.0;

/// Minimum run length in transit times of the slowest driven wave.
pub const MIN_TRANSITS: f64 = 50.0;

/// Cells in the graded absorbing tail behind a matched termination.
pub const SPONGE_CELLS: usize = 24;

/// Peak damping rate of the absorbing tail, in units of omega0.
pub const SPONGE_DAMPING_MAX: f64 = 1.2;

/// Fraction of the run (at the end) used for steady-state projections.
const STEADY_FRACTION: f64 = 0.25;

/// Bond phase magnitude beyond which the quadratic truncation is invalid.
const THETA_LIMIT: f64 = 1.0;

/// Errors from chain simulation and post-processing.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    /// A bond phase exceeded the truncation limit during the run.
    InstabilityDetected { node: usize, time: f64, theta: f64 },
    /// The requested duration does not reach steady state.
    DurationTooShort { required_periods: f64 },
    /// An input is outside its valid range.
    InvalidParameter { name: &'static str, value: f64 },
    /// A drive tone cannot propagate on the chain.
    Dispersion(DispersionError),
    /// No drive tone matches the requested frequency.
    MissingTone { omega: f64 },
    /// The projected field is too weak to post-process.
    WeakField { omega: f64 },
}

impl std::fmt::Display for LatticeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LatticeError::InstabilityDetected { node, time, theta } => write!(
                f,
                "bond phase |theta| = {theta} at node {node}, t = {time} exceeds the \
                 quadratic truncation limit"
            ),
            LatticeError::DurationTooShort { required_periods } => write!(
                f,
                "duration below the steady-state requirement of {required_periods} \
                 periods of the lowest tone"
            ),
            LatticeError::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
            LatticeError::Dispersion(e) => write!(f, "dispersion: {e}"),
            LatticeError::MissingTone { omega } => {
                write!(f, "no drive tone at omega = {omega}")
            }
            LatticeError::WeakField { omega } => {
                write!(f, "projected field at omega = {omega} is too weak")
            }
        }
    }
}

impl std::error::Error for LatticeError {}

impl From<DispersionError> for LatticeError {
    fn from(e: DispersionError) -> Self {
        LatticeError::Dispersion(e)
    }
}

/// One boundary drive tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveTone {
    pub omega: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Right-end boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Graded absorbing tail: outgoing waves leave the chain.
    Matched,
    /// Free end: outgoing waves reflect.
    Open,
}

/// A chain simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSim {
    /// Physical cells, node 1 through n_cells; node 0 carries the drive.
    pub n_cells: usize,
    pub coeffs: CellCoefficients,
    pub drive: Vec<DriveTone>,
    /// Run length in periods of the lowest drive tone.
    pub duration_periods: f64,
    pub termination: Termination,
    /// Stored samples per period of the highest drive tone.
    pub sample_rate: usize,
}

impl ChainSim {
    pub fn new(
        n_cells: usize,
        coeffs: CellCoefficients,
        drive: Vec<DriveTone>,
        duration_periods: f64,
    ) -> Self {
        ChainSim {
            n_cells,
            coeffs,
            drive,
            duration_periods,
            termination: Termination::Matched,
            sample_rate: 32,
        }
    }
}

/// Steady-state window of a finished run: node phases (drive node 0
/// through node n_cells, absorbing tail excluded) at uniformly spaced
/// sample times.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub n_cells: usize,
    pub omega0: f64,
    /// Sample times within the steady-state window.
    pub times: Vec<f64>,
    /// phases[k][n] is phi_n at times[k], n = 0..=n_cells.
    pub phases: Vec<Vec<f64>>,
    /// Largest bond phase magnitude seen anywhere in the run.
    pub max_theta: f64,
}

impl ChainRun {
    /// Hann-windowed Fourier projection at `omega`: the complex amplitude
    /// P_n per node, normalized so phi_n = Re[P_n e^{i omega t}] + other
    /// tones.
    pub fn project(&self, omega: f64) -> Vec<Complex64> {
        let n_nodes = self.n_cells + 1;
        let k_max = self.times.len();
        let mut acc = vec![Complex64::default(); n_nodes];
        let mut w_sum = 0.0;
        for (k, (&t, row)) in self.times.iter().zip(&self.phases).enumerate() {
            let w = 0.5
                * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (k_max - 1) as f64).cos());
            let rot = w * Complex64::from_polar(1.0, -omega * t);
            w_sum += w;
            for (a, &phi) in acc.iter_mut().zip(row) {
                *a += phi * rot;
            }
        }
        for a in &mut acc {
            *a *= 2.0 / w_sum;
        }
        acc
    }

    /// Wavenumber of the travelling wave at `omega`, from a least-squares
    /// fit to the unwrapped projection phase over the mid-span nodes.
    pub fn wavenumber(&self, omega: f64) -> Result<f64, LatticeError> {
        let p = self.project(omega);
        let lo = 4;
        let hi = self.n_cells - 3;
        if hi <= lo + 4 {
            return Err(LatticeError::InvalidParameter {
                name: "n_cells",
                value: self.n_cells as f64,
            });
        }
        let peak = p.iter().fold(0.0f64, |m, a| m.max(a.norm()));
        if peak < 1e-12 {
            return Err(LatticeError::WeakField { omega });
        }
        let mut phase = 0.0;
        let mut xs = Vec::with_capacity(hi - lo);
        let mut ys = Vec::with_capacity(hi - lo);
        for n in lo..hi {
            if p[n].norm() < 1e-6 * peak {
                return Err(LatticeError::WeakField { omega });
            }
            if n > lo {
                let mut d = p[n].arg() - p[n - 1].arg();
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                while d < -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                phase += d;
            }
            xs.push(n as f64);
            ys.push(phase);
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Ok(-sxy / sxx)
    }

    /// Standing-wave ratio |b/a| of a two-wave fit
    /// P_n = a e^{-i kappa n} + b e^{+i kappa n} over the physical nodes.
    pub fn reflection_estimate(&self, omega: f64, kappa: f64) -> Result<f64, LatticeError> {
        let p = self.project(omega);
        let lo = 2;
        let hi = self.n_cells;
        let mut guu = Complex64::default();
        let mut guv = Complex64::default();
        let mut gvv = Complex64::default();
        let mut bu = Complex64::default();
        let mut bv = Complex64::default();
        for (n, pn) in p.iter().enumerate().take(hi).skip(lo) {
            let u = Complex64::from_polar(1.0, -kappa * n as f64);
            let v = u.conj();
            guu += u.conj() * u;
            guv += u.conj() * v;
            gvv += v.conj() * v;
            bu += u.conj() * pn;
            bv += v.conj() * pn;
        }
        let det = guu * gvv - guv * guv.conj();
        if det.norm() < 1e-9 * (guu.norm() * gvv.norm()) {
            return Err(LatticeError::InvalidParameter { name: "kappa", value: kappa });
        }
        let a = (gvv * bu - guv * bv) / det;
        let b = (guu * bv - guv.conj() * bu) / det;
        if a.norm() < 1e-12 {
            return Err(LatticeError::WeakField { omega });
        }
        Ok(b.norm() / a.norm())
    }

    /// Time-averaged energy flux through each bond at `omega`, positive
    /// toward larger n. Entry b covers the bond between nodes b and b + 1.
    pub fn bond_flux(&self, omega: f64) -> Vec<f64> {
        let p = self.project(omega);
        let w2 = self.omega0 * self.omega0;
        (0..self.n_cells)
            .map(|b| 0.5 * w2 * omega * (p[b] * (p[b + 1] - p[b]).conj()).im)
            .collect()
    }
}

struct DriveWave {
    tones: Vec<DriveTone>,
    ramp_time: f64,
}

impl DriveWave {
    fn eval(&self, t: f64) -> f64 {
        let ramp = if t < self.ramp_time {
            0.5 * (1.0 - (std::f64::consts::PI * t / self.ramp_time).cos())
        } else {
            1.0
        };
        ramp
            * self
                .tones
                .iter()
                .map(|tone| tone.amplitude * (tone.omega * t + tone.phase).cos())
                .sum::<f64>()
    }
}

/// Integrate the chain to steady state and return the sampled window.
pub fn simulate_chain(sim: &ChainSim) -> Result<ChainRun, LatticeError> {
    let omega0 = sim.coeffs.omega0;
    if !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(LatticeError::InvalidParameter { name: "omega0", value: omega0 });
    }
    if sim.n_cells < 8 {
        return Err(LatticeError::InvalidParameter {
            name: "n_cells",
            value: sim.n_cells as f64,
        });
    }
    if sim.sample_rate < 4 {
        return Err(LatticeError::InvalidParameter {
            name: "sample_rate",
            value: sim.sample_rate as f64,
        });
    }
    if !(sim.duration_periods > 0.0) || !sim.duration_periods.is_finite() {
        return Err(LatticeError::InvalidParameter {
            name: "duration_periods",
            value: sim.duration_periods,
        });
    }
    let model = DispersionModel::Uniform { omega0 };
    let tones: Vec<DriveTone> = sim.drive.iter().copied().filter(|t| t.amplitude != 0.0).collect();
    for tone in &tones {
        if !(tone.amplitude > 0.0) || !tone.amplitude.is_finite() {
            return Err(LatticeError::InvalidParameter {
                name: "amplitude",
                value: tone.amplitude,
            });
        }
        kappa_of_omega(&model, tone.omega)?;
    }
    // Reference period and slowest group velocity over the driven tones;
    // a quiescent run falls back to the cell frequency.
    let (omega_min, omega_max, vg_min) = if tones.is_empty() {
        (omega0, omega0, omega0)
    } else {
        let mut w_lo = f64::INFINITY;
        let mut w_hi = 0.0f64;
        let mut vg = f64::INFINITY;
        for tone in &tones {
            w_lo = w_lo.min(tone.omega);
            w_hi = w_hi.max(tone.omega);
            let kappa = kappa_of_omega(&model, tone.omega)?;
            vg = vg.min(omega0 * (kappa / 2.0).cos());
        }
        (w_lo, w_hi, vg)
    };
    let period_ref = 2.0 * std::f64::consts::PI / omega_min;
    let total_time = sim.duration_periods * period_ref;
    if !tones.is_empty() {
        let required = MIN_TRANSITS * sim.n_cells as f64 / vg_min;
        if total_time < required {
            return Err(LatticeError::DurationTooShort {
                required_periods: required / period_ref,
            });
        }
    }
    let dt = 2.0 * std::f64::consts::PI / (omega_max * STEPS_PER_PERIOD as f64);
    let n_steps = (total_time / dt).ceil() as usize;
    let every = (STEPS_PER_PERIOD / sim.sample_rate).max(1);
    let record_from = ((1.0 - STEADY_FRACTION) * n_steps as f64) as usize;

    let sponge = match sim.termination {
        Termination::Matched => SPONGE_CELLS,
        Termination::Open => 0,
    };
    let m = sim.n_cells + sponge;
    let w2 = omega0 * omega0;
    let chi3 = sim.coeffs.chi3;
    // gamma[s] damps state node s (full node s + 1); only the tail damps.
    let gamma: Vec<f64> = (0..m)
        .map(|s| {
            let full = s + 1;
            if full > sim.n_cells {
                let j = (full - sim.n_cells) as f64 / sponge as f64;
                SPONGE_DAMPING_MAX * omega0 * j * j
            } else {
                0.0
            }
        })
        .collect();
    // chi_bond[b] acts on the bond between full nodes b and b + 1; the
    // tail is linear so absorption adds no mixing.
    let chi_bond: Vec<f64> =
        (0..m).map(|b| if b < sim.n_cells { chi3 } else { 0.0 }).collect();
    let drive = DriveWave { tones, ramp_time: RAMP_PERIODS * period_ref };

    let accel = |phi: &[f64], v: &[f64], phi0: f64, out: &mut [f64]| {
        for s in 0..m {
            let left = if s == 0 { phi0 } else { phi[s - 1] };
            let dl = phi[s] - left;
            let fl = dl - 0.5 * chi_bond[s] * dl * dl;
            let fr = if s + 1 < m {
                let dr = phi[s + 1] - phi[s];
                dr - 0.5 * chi_bond[s + 1] * dr * dr
            } else {
                0.0
            };
            out[s] = w2 * (fr - fl) - gamma[s] * v[s];
        }
    };

    let mut phi = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut kp = vec![vec![0.0; m]; 4];
    let mut kv = vec![vec![0.0; m]; 4];
    let mut tp = vec![0.0; m];
    let mut tv = vec![0.0; m];
    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut max_theta = 0.0f64;

    for step in 0..n_steps {
        let t = step as f64 * dt;
        // Classic fourth-order step; the drive enters through node 0.
        let (d0, d1, d2) = (drive.eval(t), drive.eval(t + 0.5 * dt), drive.eval(t + dt));
        accel(&phi, &v, d0, &mut kv[0]);
        kp[0].copy_from_slice(&v);
        for s in 0..m {
            tp[s] = phi[s] + 0.5 * dt * kp[0][s];
            tv[s] = v[s] + 0.5 * dt * kv[0][s];
        }
        accel(&tp, &tv, d1, &mut kv[1]);
        kp[1].copy_from_slice(&tv);
        for s in 0..m {
            tp[s] = phi[s] + 0.5 * dt * kp[1][s];
            tv[s] = v[s] + 0.5 * dt * kv[1][s];
        }
        accel(&tp, &tv, d1, &mut kv[2]);
        kp[2].copy_from_slice(&tv);
        for s in 0..m {
            tp[s] = phi[s] + dt * kp[2][s];
            tv[s] = v[s] + dt * kv[2][s];
        }
        accel(&tp, &tv, d2, &mut kv[3]);
        kp[3].copy_from_slice(&tv);
        for s in 0..m {
            phi[s] += dt / 6.0 * (kp[0][s] + 2.0 * kp[1][s] + 2.0 * kp[2][s] + kp[3][s]);
            v[s] += dt / 6.0 * (kv[0][s] + 2.0 * kv[1][s] + 2.0 * kv[2][s] + kv[3][s]);
        }
        let t_next = t + dt;
        let d_next = drive.eval(t_next);
        for s in 0..m {
            let left = if s == 0 { d_next } else { phi[s - 1] };
            let theta = (phi[s] - left).abs();
            if !theta.is_finite() || theta > THETA_LIMIT {
                return Err(LatticeError::InstabilityDetected {
                    node: s + 1,
                    time: t_next,
                    theta,
                });
            }
            max_theta = max_theta.max(theta);
        }
        if step + 1 >= record_from && (step + 1) % every == 0 {
            let mut row = Vec::with_capacity(sim.n_cells + 1);
            row.push(d_next);
            row.extend_from_slice(&phi[..sim.n_cells]);
            times.push(t_next);
            rows.push(row);
        }
    }
    if times.len() < 16 {
        return Err(LatticeError::DurationTooShort {
            required_periods: sim.duration_periods.max(1.0) * 2.0,
        });
    }
    Ok(ChainRun {
        n_cells: sim.n_cells,
        omega0,
        times,
        phases: rows,
        max_theta,
    })
}

/// Pump-on over pump-off transmission at the signal frequency, measured at
/// the last physical node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMeasurement {
    pub gain_db: f64,
    pub on_amplitude: Complex64,
    pub off_amplitude: Complex64,
}

/// Run the chain twice, with the full drive and with every tone except the
/// signal removed, and compare the signal amplitude at the output node.
pub fn extract_gain(sim: &ChainSim, signal_omega: f64) -> Result<GainMeasurement, LatticeError> {
    let matched = sim
        .drive
        .iter()
        .filter(|t| {
            (t.omega - signal_omega).abs() <= 1e-9 * signal_omega.abs().max(1.0)
        })
        .copied()
        .collect::<Vec<_>>();
    if matched.is_empty() {
        return Err(LatticeError::MissingTone { omega: signal_omega });
    }
    let off_sim = ChainSim { drive: matched, ..sim.clone() };
    let (run_on, run_off) = rayon::join(|| simulate_chain(sim), || simulate_chain(&off_sim));
    let (run_on, run_off) = (run_on?, run_off?);
    let on = run_on.project(signal_omega)[sim.n_cells];
    let off = run_off.project(signal_omega)[sim.n_cells];
    if off.norm() < 1e-30 {
        return Err(LatticeError::WeakField { omega: signal_omega });
    }
    Ok(GainMeasurement {
        gain_db: 20.0 * (on.norm() / off.norm()).log10(),
        on_amplitude: on,
        off_amplitude: off,
    })
}
