use twpa::device_models::CellCoefficients;
use twpa::dispersion::{kappa_of_omega, DispersionModel};
use twpa::lattice_oracle::{simulate_chain, ChainSim, DriveTone, MIN_TRANSITS};
use twpa::three_mode::{endpoint_gain_prediction, solve_determinant};

fn periods_for(n_cells: usize, omega_lo: f64, omega_slow: f64) -> f64 {
    let model = DispersionModel::Uniform { omega0: 1.0 };
    let kappa = kappa_of_omega(&model, omega_slow).unwrap();
    let vg = (kappa / 2.0).cos();
    let required = MIN_TRANSITS * n_cells as f64 / vg;
    (required * omega_lo / (2.0 * std::f64::consts::PI)).ceil() + 2.0
}

fn main() {
    let chi3 = 1.0;
    for (omega_p, epsilon, delta, n) in [
        (1.37, 0.30, 0.05, 64),
        (1.37, 0.35, 0.05, 64),
        (1.37, 0.40, 0.05, 64),
        (1.40, 0.40, 0.05, 64),
        (1.37, 0.40, 0.05, 96),
    ] {
        let a_p: f64 = epsilon / (chi3 * omega_p);
        let omega_s = (1.0 + delta) * omega_p / 2.0;
        let omega_i = (1.0 - delta) * omega_p / 2.0;
        let coeffs = CellCoefficients { theta0: 0.0, omega0: 1.0, chi3, chi4: None };
        let sim = ChainSim::new(
            n,
            coeffs,
            vec![
                DriveTone { omega: omega_p, amplitude: a_p, phase: 0.0 },
                DriveTone { omega: omega_s, amplitude: a_p * 3e-3, phase: 0.0 },
            ],
            periods_for(n, omega_s, omega_p),
        );
        let on = simulate_chain(&sim).unwrap();
        let off_sim = ChainSim { drive: vec![sim.drive[1]], ..sim.clone() };
        let off = simulate_chain(&off_sim).unwrap();
        let g_lat = 20.0
            * (on.project(omega_s)[n].norm() / off.project(omega_s)[n].norm()).log10();
        // Static tilt per bond from the zero-frequency projection.
        let p0 = on.project(0.0);
        let lo = n / 4;
        let hi = 3 * n / 4;
        let tilt = (p0[hi].re - p0[lo].re) / (2.0 * (hi - lo) as f64);
        let scale = 1.0 - chi3 * tilt;
        let omega0_eff = scale.sqrt();
        let chi_eff = chi3 / scale;
        let eff = DispersionModel::Uniform { omega0: omega0_eff };
        let base = DispersionModel::Uniform { omega0: 1.0 };
        for (tag, model, chi) in [("bare", &base, chi3), ("tilt", &eff, chi_eff)] {
            let kp = kappa_of_omega(model, omega_p).unwrap();
            let ks = kappa_of_omega(model, omega_s).unwrap();
            let ki = kappa_of_omega(model, omega_i).unwrap();
            let sol = solve_determinant(kp, ks, ki, chi * a_p).unwrap();
            let pred = endpoint_gain_prediction(kp, ks, ki, chi * a_p, n).unwrap();
            println!(
                "wp={omega_p} eps={epsilon} N={n} [{tag}]: g={:.5} pred={:+.2} dB lattice={:+.2} dB diff={:+.2} (tilt={tilt:.4})",
                sol.g, pred, g_lat, g_lat - pred
            );
        }
    }
}
