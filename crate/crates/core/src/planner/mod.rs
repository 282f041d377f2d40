//! Capacity dimensioning and planning.
//!
//! Four sequential loops run once each: add channels to overloaded cells,
//! add cells at the best candidate site, release channels from underloaded
//! cells, and remove nearly idle cells. A closing channel top-up restores the
//! capacity condition for cells touched by the later loops. Every action is
//! followed by power re-configuration and a full re-evaluation of the layout.

mod ledger;
mod search;

use serde::{Deserialize, Serialize};

pub use ledger::{compress_ledger, ActionLedger, LedgerEntry, Phase, PlanningAction};
pub use search::{channel_to_release, select_channel, select_site, SiteChoice};

use crate::error::Result;
use crate::exec::Execution;
use crate::performance::{evaluate_layout, CellEvaluation, TenantLoad};
use crate::radio::{apply_power_configuration, PropagationParams};
use crate::scenario::{CandidateSiteSet, GridSpec, NetworkState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step4Threshold {
    /// `B * |U_S| / (N_max / K_max)`: rises as cells are added.
    #[default]
    Printed,
    /// `B * K_max`.
    Kmax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k_max: usize,
    pub n_max_sc: usize,
    pub step4_threshold: Step4Threshold,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            alpha: 0.9,
            beta: 0.7,
            gamma: 0.05,
            k_max: 2,
            n_max_sc: 10,
            step4_threshold: Step4Threshold::Printed,
            execution: Execution::default(),
        }
    }
}

impl PlannerParams {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("PlannerParams.{name}_range: {name} = {v}"));
            }
        }
        if self.k_max < 1 {
            out.push("PlannerParams.k_max_positive: K_max = 0".into());
        }
        if self.n_max_sc < 1 {
            out.push("PlannerParams.n_max_positive: N_max = 0".into());
        }
        out
    }

    /// Densification bar for a layout of `n_cells` cells, in MHz.
    pub fn densify_threshold(&self, n_cells: usize, bandwidth_mhz: f64) -> f64 {
        match self.step4_threshold {
            Step4Threshold::Printed => bandwidth_mhz * n_cells as f64 / (self.n_max_sc as f64 / self.k_max as f64),
            Step4Threshold::Kmax => bandwidth_mhz * self.k_max as f64,
        }
    }

    pub fn capacity_threshold(&self, channels: usize, bandwidth_mhz: f64) -> f64 {
        self.alpha * channels as f64 * bandwidth_mhz
    }
}

/// Everything the planner reads but never changes.
#[derive(Clone, Copy, Debug)]
pub struct PlanningProblem<'a> {
    pub grid: &'a GridSpec,
    pub candidates: &'a CandidateSiteSet,
    pub radio: &'a PropagationParams,
    pub loads: &'a [TenantLoad],
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub state: NetworkState,
    /// Compressed ledger.
    pub ledger: ActionLedger,
    pub raw_ledger: ActionLedger,
    /// Densification wanted another cell but every candidate site was taken.
    pub saturated: bool,
    pub evaluations: Vec<CellEvaluation>,
}

struct Planner<'a> {
    problem: PlanningProblem<'a>,
    params: &'a PlannerParams,
    state: NetworkState,
    evals: Vec<CellEvaluation>,
    ledger: ActionLedger,
    saturated: bool,
}

impl Planner<'_> {
    fn bandwidth(&self) -> f64 {
        self.problem.radio.channel_bandwidth_mhz
    }

    fn refresh(&mut self) -> Result<()> {
        apply_power_configuration(&mut self.state, self.problem.grid, self.problem.radio);
        let (_, evals) = evaluate_layout(
            &self.state,
            self.problem.grid,
            self.problem.radio,
            self.problem.loads,
            self.params.execution,
        )?;
        self.evals = evals;
        Ok(())
    }

    fn expand_channels(&mut self, phase: Phase) -> Result<()> {
        let limit = self.params.k_max.min(self.problem.radio.num_channels);
        loop {
            let b = self.bandwidth();
            let target = self.state.cells.iter().zip(&self.evals).find(|(cell, e)| {
                cell.channels.len() < limit
                    && e.requirement
                        .exceeds(self.params.capacity_threshold(cell.channels.len(), b))
            });
            let Some((cell, _)) = target else { break };
            let id = cell.id;
            let channel = select_channel(id, &self.state, self.problem.grid, self.problem.radio)?;
            self.state.cell_mut(id).expect("cell exists").channels.insert(channel);
            self.ledger
                .push(phase, PlanningAction::AddChannel { cell: id, channel });
            self.refresh()?;
        }
        Ok(())
    }

    fn add_cells(&mut self) -> Result<()> {
        while self.state.len() < self.params.n_max_sc {
            let bar = self.params.densify_threshold(self.state.len(), self.bandwidth());
            if !self.evals.iter().any(|e| e.requirement.exceeds(bar)) {
                break;
            }
            match select_site(&self.state, &self.problem, self.params.execution) {
                Ok(choice) => {
                    self.ledger.push(
                        Phase::AddCells,
                        PlanningAction::AddCell {
                            cell: choice.cell,
                            site: choice.site,
                            channel: choice.channel,
                        },
                    );
                    self.state = choice.state;
                    self.evals = choice.evaluations;
                }
                Err(crate::Error::SiteSaturated) => {
                    self.saturated = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn trim_channels(&mut self) -> Result<()> {
        loop {
            let b = self.bandwidth();
            let target = self.state.cells.iter().zip(&self.evals).find(|(cell, e)| {
                let n = cell.channels.len();
                n > 1 && e.requirement.below(self.params.beta * (n - 1) as f64 * b)
            });
            let Some((cell, _)) = target else { break };
            let id = cell.id;
            let channel = channel_to_release(id, &self.state, self.problem.grid)?;
            self.state.cell_mut(id).expect("cell exists").channels.remove(channel);
            self.ledger
                .push(Phase::TrimChannels, PlanningAction::RemoveChannel { cell: id, channel });
            self.refresh()?;
        }
        Ok(())
    }

    /// Emptiest cell first; the last remaining cell is never removed.
    fn trim_cells(&mut self) -> Result<()> {
        while self.state.len() > 1 {
            let bar = self.params.gamma * self.bandwidth();
            let target = self
                .evals
                .iter()
                .filter(|e| e.requirement.below(bar))
                .min_by(|a, b| a.requirement.value().total_cmp(&b.requirement.value()));
            let Some(target) = target else { break };
            let id = target.id;
            self.state.remove(id);
            self.ledger
                .push(Phase::TrimCells, PlanningAction::RemoveCell { cell: id });
            self.refresh()?;
        }
        Ok(())
    }
}

/// Runs the planning loops on `state` and returns the new layout together
/// with the compressed action ledger.
pub fn plan(state: &NetworkState, problem: &PlanningProblem<'_>, params: &PlannerParams) -> Result<PlanOutcome> {
    let mut planner = Planner {
        problem: *problem,
        params,
        state: state.clone(),
        evals: Vec::new(),
        ledger: ActionLedger::new(),
        saturated: false,
    };
    planner.refresh()?;
    planner.expand_channels(Phase::ExpandChannels)?;
    planner.add_cells()?;
    planner.trim_channels()?;
    planner.trim_cells()?;
    planner.expand_channels(Phase::TopUp)?;

    Ok(PlanOutcome {
        ledger: planner.ledger.compress(),
        raw_ledger: planner.ledger,
        state: planner.state,
        saturated: planner.saturated,
        evaluations: planner.evals,
    })
}

/// True when every cell carries its requirement within `alpha * |F| * B` or
/// already holds the maximum number of channels.
pub fn capacity_conforms(
    state: &NetworkState,
    evals: &[CellEvaluation],
    params: &PlannerParams,
    bandwidth_mhz: f64,
) -> bool {
    state.cells.iter().zip(evals).all(|(cell, e)| {
        cell.channels.len() >= params.k_max
            || !e
                .requirement
                .exceeds(params.capacity_threshold(cell.channels.len(), bandwidth_mhz))
    })
}
