//! Joint tracing of both bounds over a direction sweep. The inner solve
//! runs first in each direction; its reconstruction law seeds the outer
//! solve, and adjacent directions warm-start each other.

use crate::inner::{outer_warm_start, scalarized_minimum_inner_with, AuxSizes, InnerCandidateExport};
use crate::instance::ProblemInstance;
use crate::outer::{scalarized_minimum_with, SolveError};
use crate::region::{BoundKind, RateRegion, RegionEntry};
use crate::solver::SolverOptions;

pub struct BothBounds {
    pub inner: RateRegion,
    pub outer: RateRegion,
    /// One exported inner candidate per direction, in sweep order.
    pub inner_candidates: Vec<InnerCandidateExport>,
}

/// Trace inner and outer regions over the same sweep.
pub fn trace_both(
    inst: &ProblemInstance,
    weight_sweep: &[(f64, f64)],
    opts: &SolverOptions,
    aux: AuxSizes,
) -> Result<BothBounds, SolveError> {
    if weight_sweep.is_empty() {
        return Err(SolveError::EmptySweep);
    }
    let mut inner_entries = Vec::with_capacity(weight_sweep.len());
    let mut outer_entries = Vec::with_capacity(weight_sweep.len());
    let mut exports = Vec::with_capacity(weight_sweep.len());
    let mut prev_outer: Option<Vec<f64>> = None;
    let mut prev_inner: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for &mu in weight_sweep {
        let inner = scalarized_minimum_inner_with(inst, mu, opts, aux, &prev_inner)?;
        prev_inner = vec![(
            (0..inst.x_alphabet.size())
                .flat_map(|x| inner.candidate.test_channel_1.row(x).to_vec())
                .collect(),
            (0..inst.y_alphabet.size())
                .flat_map(|y| inner.candidate.test_channel_2.row(y).to_vec())
                .collect(),
        )];
        let mut warm = vec![outer_warm_start(&inner.candidate, inst)];
        if let Some(w) = prev_outer.take() {
            warm.push(w);
        }
        let outer = scalarized_minimum_with(inst, mu, opts, &warm)?;
        prev_outer = Some(crate::outer::kernel_matrix(&outer.candidate.joint, inst));
        inner_entries.push(RegionEntry {
            mu,
            triple: inner.triple,
            support: inner.value,
            support_point: inner.support_point,
            candidate_id: format!("inner-u{}v{}-start{}", aux.u, aux.v, inner.start_index),
            feasibility_residual: (inner.achieved.0 - inst.targets.0)
                .max(inner.achieved.1 - inst.targets.1)
                .max(0.0),
            converged: inner.converged,
        });
        outer_entries.push(RegionEntry {
            mu,
            triple: outer.triple,
            support: outer.value,
            support_point: outer.support_point,
            candidate_id: format!("outer-start{}", outer.start_index),
            feasibility_residual: outer.candidate.residuals.worst(),
            converged: outer.converged,
        });
        exports.push(inner.candidate.export(inst));
    }
    Ok(BothBounds {
        inner: RateRegion::from_entries(BoundKind::Inner, inner_entries),
        outer: RateRegion::from_entries(BoundKind::Outer, outer_entries),
        inner_candidates: exports,
    })
}
