use serde::Serialize;

use super::energy::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::fields::Fourier;
use crate::system::State;

pub const MONITOR_COUNT: usize = 7;

/// Integrands whose time integrals are expected to grow at most like `T + 1`.
pub const MONITOR_NAMES: [&str; MONITOR_COUNT] =
    ["n_pow_5_3", "grad_n_pow_5_4", "u_pow_10_3", "dissip_n", "dissip_c4", "dissip_c2", "dissip_u"];

/// `∫|n|^{5/3}`, `∫|∇n|^{5/4}`, `∫|u|^{10/3}` and the four dissipation terms of `record`.
pub fn growth_sample(state: &State, ops: &Fourier, record: &DiagnosticsRecord) -> [f64; MONITOR_COUNT] {
    let vol = state.grid().cell_volume();
    let n53: f64 = state.n.values().iter().map(|v| v.abs().powf(5.0 / 3.0)).sum();
    let grad_n = ops.gradient(&state.n).norm_sq();
    let gn54: f64 = grad_n.values().iter().map(|g| g.powf(5.0 / 8.0)).sum();
    let u103: f64 = state.u.norm_sq().values().iter().map(|s| s.powf(5.0 / 3.0)).sum();
    [n53 * vol, gn54 * vol, u103 * vol, record.dissip_n, record.dissip_c4, record.dissip_c2, record.dissip_u]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: f64,
    pub cumulative: [f64; MONITOR_COUNT],
    /// `cumulative / (t + 1)`
    pub ratio: [f64; MONITOR_COUNT],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GrowthReport {
    pub checkpoints: Vec<Checkpoint>,
}

impl GrowthReport {
    /// Largest over smallest ratio across checkpoints, per monitor.
    ///
    /// 1 for a monitor that vanishes everywhere, infinite if it vanishes at
    /// some checkpoints only.
    pub fn spread(&self) -> [f64; MONITOR_COUNT] {
        let mut out = [1.0; MONITOR_COUNT];
        for (i, o) in out.iter_mut().enumerate() {
            let vals = self.checkpoints.iter().map(|c| c.ratio[i]);
            let max = vals.clone().fold(0.0, f64::max);
            let min = vals.fold(f64::INFINITY, f64::min);
            if max > 0.0 {
                *o = max / min;
            }
        }
        out
    }
}

/// Trapezoid-rule time integrals of [`growth_sample`], reported at checkpoints.
#[derive(Clone, Debug)]
pub struct GrowthMonitor {
    pending: Vec<f64>,
    cumulative: [f64; MONITOR_COUNT],
    last: (f64, [f64; MONITOR_COUNT]),
    report: GrowthReport,
}

impl GrowthMonitor {
    /// Checkpoints are times after `t0` at which to report.
    pub fn new(checkpoints: &[f64], t0: f64, sample0: [f64; MONITOR_COUNT]) -> Result<Self> {
        if checkpoints.windows(2).any(|w| w[1] <= w[0]) || checkpoints.iter().any(|&c| !(c > t0)) {
            return Err(Error::InvalidParams("checkpoints must increase and follow t0".into()));
        }
        let mut pending = checkpoints.to_vec();
        pending.reverse();
        Ok(Self { pending, cumulative: [0.0; MONITOR_COUNT], last: (t0, sample0), report: GrowthReport::default() })
    }

    pub fn push(&mut self, t: f64, sample: [f64; MONITOR_COUNT]) {
        let (t0, prev) = self.last;
        let h = t - t0;
        for i in 0..MONITOR_COUNT {
            self.cumulative[i] += 0.5 * h * (prev[i] + sample[i]);
        }
        self.last = (t, sample);
        while let Some(&cp) = self.pending.last() {
            if t < cp - 1e-9 * h.abs().max(1e-300) {
                break;
            }
            self.pending.pop();
            let mut ratio = self.cumulative;
            ratio.iter_mut().for_each(|r| *r /= t + 1.0);
            self.report.checkpoints.push(Checkpoint { t, cumulative: self.cumulative, ratio });
        }
    }

    pub fn cumulative(&self) -> [f64; MONITOR_COUNT] {
        self.cumulative
    }

    pub fn report(&self) -> &GrowthReport {
        &self.report
    }
}

/// Growth report for a stored trajectory with matching records.
pub fn apriori_monitors(
    records: &[DiagnosticsRecord],
    trajectory: &[State],
    ops: &Fourier,
    checkpoints: &[f64],
) -> Result<GrowthReport> {
    if records.len() != trajectory.len() || records.is_empty() {
        return Err(Error::InvalidParams("records and trajectory must match and be non-empty".into()));
    }
    let mut m = GrowthMonitor::new(checkpoints, trajectory[0].t, growth_sample(&trajectory[0], ops, &records[0]))?;
    for (s, r) in trajectory.iter().zip(records).skip(1) {
        m.push(s.t, growth_sample(s, ops, r));
    }
    Ok(m.report.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, ScalarField, VectorField};

    fn steady(n: f64, dt: f64, steps: usize) -> (Vec<DiagnosticsRecord>, Vec<State>, Fourier) {
        let ops = Fourier::new(Grid::cube(2, 8, 1.0).unwrap());
        let g = *ops.grid();
        let traj: Vec<State> = (0..=steps)
            .map(|i| {
                State::new(
                    i as f64 * dt,
                    ScalarField::constant(g, n),
                    ScalarField::constant(g, 1.0),
                    VectorField::zeros(g),
                )
                .unwrap()
            })
            .collect();
        let recs = traj.iter().map(|s| DiagnosticsRecord { t: s.t, ..Default::default() }).collect();
        (recs, traj, ops)
    }

    #[test]
    fn zero_trajectory() {
        let (r, t, ops) = steady(0.0, 0.1, 40);
        let rep = apriori_monitors(&r, &t, &ops, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(rep.checkpoints.len(), 3);
        assert!(rep.checkpoints.iter().all(|c| c.cumulative == [0.0; MONITOR_COUNT]));
        assert_eq!(rep.spread(), [1.0; MONITOR_COUNT]);
    }

    #[test]
    fn unit_density_integrates_to_elapsed_time() {
        let (r, t, ops) = steady(1.0, 0.125, 32);
        let rep = apriori_monitors(&r, &t, &ops, &[1.0, 2.0, 4.0]).unwrap();
        for c in &rep.checkpoints {
            assert!((c.cumulative[0] - c.t).abs() < 1e-12);
            assert!((c.ratio[0] - c.t / (c.t + 1.0)).abs() < 1e-12);
            assert!(c.ratio[0] < 1.0);
        }
        assert!((rep.spread()[0] - 0.8 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        assert!(GrowthMonitor::new(&[2.0, 1.0], 0.0, [0.0; MONITOR_COUNT]).is_err());
        assert!(GrowthMonitor::new(&[0.0], 0.0, [0.0; MONITOR_COUNT]).is_err());
    }
}
