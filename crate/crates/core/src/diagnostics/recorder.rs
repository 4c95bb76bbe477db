use std::sync::Arc;

use super::apriori::{growth_sample, GrowthMonitor, GrowthReport};
use super::energy::{full_record, DiagnosticsRecord};
use super::weak::{WeakAccumulator, WeakReport};
use crate::coefficients::DerivedChemo;
use crate::error::{Error, Result};
use crate::fields::{Fourier, VectorField};
use crate::system::{State, Stepper};

/// Everything gathered along one run.
#[derive(Clone, Debug, Default)]
pub struct RunDiagnostics {
    /// One record per state, the initial state first.
    pub records: Vec<DiagnosticsRecord>,
    pub max_divergence: f64,
    /// Largest `c` seen on the grid, including the initial state.
    pub c_peak: f64,
    /// Smallest `c` seen on the grid.
    pub c_floor: f64,
    pub weak: Option<WeakReport>,
    pub growth: Option<GrowthReport>,
}

impl RunDiagnostics {
    /// Largest `|∫n(t) − ∫n(0)| / ∫n(0)`.
    pub fn mass_drift(&self) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        let m0 = first.mass;
        let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
        self.records.iter().map(|r| (r.mass - m0).abs() / scale).fold(0.0, f64::max)
    }
}

/// Step observer that turns every state into a [`DiagnosticsRecord`] and
/// feeds the optional weak-residual and growth accumulators.
pub struct Recorder {
    ops: Arc<Fourier>,
    derived: DerivedChemo,
    grad_phi: VectorField,
    kappa: f64,
    floor: f64,
    dt: f64,
    prev: State,
    prev_dissip_u: f64,
    out: RunDiagnostics,
    weak: Option<WeakAccumulator>,
    growth: Option<GrowthMonitor>,
    error: Option<Error>,
}

impl Recorder {
    pub fn new(stepper: &Stepper, derived: DerivedChemo, kappa: f64, floor: f64, state0: &State) -> Result<Self> {
        let ops = stepper.operator().fourier_arc();
        let grad_phi = stepper.grad_phi().clone();
        let dt = stepper.params().dt;
        let rec = full_record(state0, None, dt, &ops, &derived, &grad_phi, kappa, floor)?;
        let out = RunDiagnostics {
            records: vec![rec],
            max_divergence: state0.divergence_l2(&ops),
            c_peak: state0.c.max(),
            c_floor: state0.c.min(),
            weak: None,
            growth: None,
        };
        Ok(Self {
            ops,
            derived,
            grad_phi,
            kappa,
            floor,
            dt,
            prev_dissip_u: rec.dissip_u,
            prev: state0.clone(),
            out,
            weak: None,
            growth: None,
            error: None,
        })
    }

    /// Accumulate weak residuals with test functions supported on `[0, support)`.
    pub fn with_weak(mut self, stepper: &Stepper, support: f64) -> Result<Self> {
        self.weak =
            Some(WeakAccumulator::new(self.ops.clone(), stepper.coeffs(), self.grad_phi.clone(), support, &self.prev)?);
        Ok(self)
    }

    /// Report cumulative growth integrals at `checkpoints`.
    pub fn with_growth(mut self, checkpoints: &[f64]) -> Result<Self> {
        let sample = growth_sample(&self.prev, &self.ops, &self.out.records[0]);
        self.growth = Some(GrowthMonitor::new(checkpoints, self.prev.t, sample)?);
        Ok(self)
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.out.records
    }

    pub fn observe(&mut self, state: &State) {
        if self.error.is_some() {
            return;
        }
        let rec = match full_record(
            state,
            Some((&self.prev, self.prev_dissip_u)),
            self.dt,
            &self.ops,
            &self.derived,
            &self.grad_phi,
            self.kappa,
            self.floor,
        ) {
            Ok(r) => r,
            Err(e) => {
                self.error = Some(e);
                return;
            }
        };
        let out = &mut self.out;
        out.max_divergence = out.max_divergence.max(state.divergence_l2(&self.ops));
        out.c_peak = out.c_peak.max(rec.c_max);
        out.c_floor = out.c_floor.min(state.c.min());
        if let Some(w) = self.weak.as_mut() {
            w.push(state);
        }
        if let Some(g) = self.growth.as_mut() {
            g.push(state.t, growth_sample(state, &self.ops, &rec));
        }
        out.records.push(rec);
        self.prev_dissip_u = rec.dissip_u;
        self.prev = state.clone();
    }

    pub fn finish(self) -> Result<RunDiagnostics> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let mut out = self.out;
        if let Some(w) = &self.weak {
            out.weak = Some(w.finish()?);
        }
        if let Some(g) = &self.growth {
            out.growth = Some(g.report().clone());
        }
        Ok(out)
    }
}

/// Run `stepper` from `state0` with a [`Recorder`] attached.
pub fn run_recorded(stepper: &Stepper, state0: State, mut recorder: Recorder) -> Result<(State, RunDiagnostics)> {
    let last = stepper.run(state0, |s| recorder.observe(s))?;
    Ok((last, recorder.finish()?))
}

/// CSV with one row per record, columns in field order.
pub fn write_csv(w: impl std::io::Write, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_follows_field_order() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[DiagnosticsRecord { t: 0.5, mass: 2.0, ..Default::default() }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,mass,c_max,u_l2sq,energy_total,energy_entropy,energy_signal,dissip_n,dissip_c4,dissip_c2,dissip_u,fluid_residual"
        );
        assert!(lines.next().unwrap().starts_with("0.5,2.0,"));
    }
}
