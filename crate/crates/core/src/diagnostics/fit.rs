use serde::Serialize;

use super::energy::DiagnosticsRecord;
use crate::error::{Error, Result};

/// Search interval for the fitted energy constant.
pub const K_LOWER: f64 = 1e-6;
pub const K_UPPER: f64 = 1e12;

/// Smallest constant `K` with `(F_{i+1} − F_i)/dt + D_i/K ≤ K` along a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyFit {
    pub kappa: f64,
    pub k_hat: f64,
    /// `k_hat − (F_{i+1} − F_i)/dt − D_i/k_hat` per step, all nonnegative.
    pub margin_series: Vec<f64>,
}

fn dissipation(r: &DiagnosticsRecord) -> f64 {
    r.dissip_n + r.dissip_c4 + r.dissip_u
}

/// Fit the energy-inequality constant to a run of uniformly spaced records.
pub fn fit_energy_constant(records: &[DiagnosticsRecord], kappa: f64) -> Result<EnergyFit> {
    if records.len() < 10 {
        return Err(Error::InvalidParams(format!("need at least 10 records, got {}", records.len())));
    }
    let dt = (records[records.len() - 1].t - records[0].t) / (records.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::InvalidParams("records must advance in time".into()));
    }
    let tol = 1e-6 * dt;
    if records.windows(2).any(|w| ((w[1].t - w[0].t) - dt).abs() > tol) {
        return Err(Error::InvalidParams("records must be uniformly spaced in time".into()));
    }
    let steps: Vec<(f64, f64)> =
        records.windows(2).map(|w| ((w[1].energy_total - w[0].energy_total) / dt, dissipation(&w[0]))).collect();
    if steps.iter().any(|(x, d)| !x.is_finite() || !d.is_finite()) {
        return Err(Error::NoEnergyConstant { lo: K_LOWER, hi: K_UPPER });
    }
    let holds = |k: f64| steps.iter().all(|&(x, d)| x + d / k <= k);

    let k_hat = if holds(K_LOWER) {
        K_LOWER
    } else if !holds(K_UPPER) {
        return Err(Error::NoEnergyConstant { lo: K_LOWER, hi: K_UPPER });
    } else {
        let (mut lo, mut hi) = (K_LOWER, K_UPPER);
        // geometric bisection; 200 halvings pin hi to a few ulps
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let margin_series = steps.iter().map(|&(x, d)| k_hat - x - d / k_hat).collect();
    Ok(EnergyFit { kappa, k_hat, margin_series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(energy: &[f64], dissip: &[f64], dt: f64) -> Vec<DiagnosticsRecord> {
        energy
            .iter()
            .zip(dissip)
            .enumerate()
            .map(|(i, (&e, &d))| DiagnosticsRecord {
                t: i as f64 * dt,
                energy_total: e,
                dissip_n: d,
                ..Default::default()
            })
            .collect()
    }

    fn closed_form(energy: &[f64], dissip: &[f64], dt: f64) -> f64 {
        energy
            .windows(2)
            .zip(dissip)
            .map(|(w, &d)| {
                let x = (w[1] - w[0]) / dt;
                0.5 * (x + (x * x + 4.0 * d).sqrt())
            })
            .fold(K_LOWER, f64::max)
    }

    #[test]
    fn steady_state_sits_at_lower_bound() {
        let r = series(&[1.5; 12], &[0.0; 12], 0.1);
        let fit = fit_energy_constant(&r, 1.0).unwrap();
        assert_eq!(fit.k_hat, K_LOWER);
        assert!(fit.margin_series.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn energy_jump_is_flagged() {
        let dt = 1e-3;
        let mut e = vec![0.0; 12];
        for v in e.iter_mut().skip(6) {
            *v = 10.0;
        }
        let fit = fit_energy_constant(&series(&e, &[0.0; 12], dt), 1.0).unwrap();
        assert!(fit.k_hat >= 10.0 / dt * (1.0 - 1e-12));
        assert!((fit.k_hat - 10.0 / dt).abs() < 1e-9 * fit.k_hat);
    }

    #[test]
    fn rejects_short_or_uneven_series() {
        assert!(fit_energy_constant(&series(&[0.0; 5], &[0.0; 5], 0.1), 1.0).is_err());
        let mut r = series(&[0.0; 12], &[0.0; 12], 0.1);
        r[4].t += 0.05;
        assert!(fit_energy_constant(&r, 1.0).is_err());
    }

    #[test]
    fn unbounded_growth_has_no_constant() {
        let mut e = vec![0.0; 12];
        e[11] = 1e30;
        assert!(matches!(fit_energy_constant(&series(&e, &[0.0; 12], 0.1), 1.0), Err(Error::NoEnergyConstant { .. })));
    }

    proptest! {
        #[test]
        fn bisection_matches_quadratic_root(
            energy in prop::collection::vec(-5.0f64..5.0, 10..30),
            dissip in prop::collection::vec(0.0f64..50.0, 30),
            dt in 1e-3f64..0.5,
        ) {
            let r = series(&energy, &dissip[..energy.len()], dt);
            let fit = fit_energy_constant(&r, 1.0).unwrap();
            let want = closed_form(&energy, &dissip[..energy.len()], dt);
            prop_assert!((fit.k_hat - want).abs() <= 1e-9 * want.max(1.0));
            prop_assert!(fit.margin_series.iter().all(|&m| m >= -1e-9 * fit.k_hat.max(1.0)));
            // integrated form: F_i ≤ F_0 + k_hat·t_i
            for rec in &r {
                prop_assert!(rec.energy_total <= r[0].energy_total + fit.k_hat * rec.t + 1e-9 * fit.k_hat.max(1.0));
            }
        }
    }
}
