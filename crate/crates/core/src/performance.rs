//! Required bandwidth of every cell in a layout, given per-tenant loads.
//!
//! A [`TenantLoad`] pairs what is known about a tenant's demand with its
//! planning specifications. Both are held at pixel level where possible so
//! they can be re-aggregated over any candidate layout.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::monitor::{requirement_from, Requirement};
use crate::radio::{cell_capacity, PropagationParams, RadioSnapshot};
use crate::scenario::{CellId, GridSpec, NetworkState, ServingMap};

#[derive(Clone, Debug, PartialEq)]
pub enum SpecSource {
    /// `A_{m,i,u}` per pixel, summed over each cell's served pixels.
    Pixel(Vec<f64>),
    /// `a_busy / |U_S|` for every cell of the evaluated layout.
    ScUniform { a_busy: f64 },
    /// `a_busy * D_i / Σ D_p`, with `D_i` the reference pixel demand summed
    /// over each cell of the evaluated layout.
    ScCorrelated { a_busy: f64, basis: Vec<f64> },
}

impl SpecSource {
    pub fn scaled(&self, w: f64) -> SpecSource {
        match self {
            SpecSource::Pixel(p) => SpecSource::Pixel(p.iter().map(|v| v * w).collect()),
            SpecSource::ScUniform { a_busy } => SpecSource::ScUniform { a_busy: a_busy * w },
            SpecSource::ScCorrelated { a_busy, basis } => SpecSource::ScCorrelated {
                a_busy: a_busy * w,
                basis: basis.clone(),
            },
        }
    }

    /// Per-cell specs in `serving.cells()` order.
    pub fn cell_specs(&self, serving: &ServingMap) -> Result<Vec<f64>> {
        let n = serving.cells().len();
        match self {
            SpecSource::Pixel(p) => Ok(serving.aggregate(p)),
            SpecSource::ScUniform { a_busy } => Ok(vec![a_busy / n as f64; n]),
            SpecSource::ScCorrelated { a_busy, basis } => {
                let d = serving.aggregate(basis);
                let total: f64 = d.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::NoCorrelationBasis);
                }
                Ok(d.iter().map(|v| a_busy * v / total).collect())
            }
        }
    }
}

/// One tenant as seen by the performance model.
#[derive(Clone, Debug, PartialEq)]
pub struct TenantLoad {
    pub tenant_id: String,
    /// Pixel demand. `None` when the tenant's traffic is not observable yet,
    /// in which case its specs stand in for its demand.
    pub demand: Option<Vec<f64>>,
    pub spec: SpecSource,
}

impl TenantLoad {
    pub fn scaled(&self, w: f64) -> TenantLoad {
        TenantLoad {
            tenant_id: self.tenant_id.clone(),
            demand: self.demand.as_ref().map(|d| d.iter().map(|v| v * w).collect()),
            spec: self.spec.scaled(w),
        }
    }

    /// Pixel map used to weight spectral efficiency, if any.
    fn pixel_weights(&self) -> Option<&[f64]> {
        match (&self.demand, &self.spec) {
            (Some(d), _) => Some(d),
            (None, SpecSource::Pixel(p)) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellEvaluation {
    pub id: CellId,
    pub channels: usize,
    pub served_pixels: usize,
    pub avg_se: f64,
    /// `Σ_m min(D_{i,m}, A_{m,i})` in Mbps.
    pub capped_demand_mbps: f64,
    pub requirement: Requirement,
    pub capacity_mbps: f64,
}

/// Sum of all loads' pixel weights.
pub fn weight_map(loads: &[TenantLoad], pixels: usize) -> Vec<f64> {
    let mut w = vec![0.0; pixels];
    for load in loads {
        if let Some(p) = load.pixel_weights() {
            for (o, v) in w.iter_mut().zip(p) {
                *o += v;
            }
        }
    }
    w
}

/// Required bandwidth per cell of `state` under `loads`, in state order.
pub fn evaluate(
    state: &NetworkState,
    snapshot: &RadioSnapshot,
    loads: &[TenantLoad],
    params: &PropagationParams,
) -> Result<Vec<CellEvaluation>> {
    let serving = snapshot.serving();
    let weights = weight_map(loads, serving.len());
    let mut capped = vec![0.0; state.len()];
    for load in loads {
        let specs = load.spec.cell_specs(serving)?;
        let demand = match &load.demand {
            Some(d) => serving.aggregate(d),
            None => specs.clone(),
        };
        for (c, (d, a)) in capped.iter_mut().zip(demand.iter().zip(&specs)) {
            *c += d.min(*a);
        }
    }
    Ok(state
        .cells
        .iter()
        .enumerate()
        .map(|(slot, cell)| {
            let avg_se = snapshot.average_se(slot, &weights);
            CellEvaluation {
                id: cell.id,
                channels: cell.channels.len(),
                served_pixels: serving.members(slot).len(),
                avg_se,
                capped_demand_mbps: capped[slot],
                requirement: requirement_from(capped[slot], avg_se),
                capacity_mbps: cell_capacity(cell.channels.len(), avg_se, params),
            }
        })
        .collect())
}

/// Computes the radio snapshot of `state` and evaluates it.
pub fn evaluate_layout(
    state: &NetworkState,
    grid: &GridSpec,
    params: &PropagationParams,
    loads: &[TenantLoad],
    exec: Execution,
) -> Result<(RadioSnapshot, Vec<CellEvaluation>)> {
    let snapshot = RadioSnapshot::compute(state, grid, params, exec)?;
    let evals = evaluate(state, &snapshot, loads, params)?;
    Ok((snapshot, evals))
}

/// `Σ_i B̂_i`, +∞ when any cell is unservable.
pub fn total_requirement(evals: &[CellEvaluation]) -> f64 {
    evals.iter().map(|e| e.requirement.value()).sum()
}
