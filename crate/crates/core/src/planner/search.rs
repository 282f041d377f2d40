//! Channel choice and exhaustive site search.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::performance::{evaluate_layout, total_requirement, CellEvaluation};
use crate::radio::{apply_power_configuration, PropagationParams};
use crate::scenario::{CellId, Channel, ChannelSet, GridSpec, NetworkState, SmallCell};

use super::PlanningProblem;

/// Distance from `cell` to the nearest other cell holding `channel`
/// (+∞ when no other cell holds it).
fn co_channel_distance(state: &NetworkState, grid: &GridSpec, cell: &SmallCell, channel: Channel) -> f64 {
    let here = grid.position(cell.site);
    state
        .cells
        .iter()
        .filter(|c| c.id != cell.id && c.channels.contains(channel))
        .map(|c| here.distance(grid.position(c.site)))
        .fold(f64::INFINITY, f64::min)
}

/// Among the channels `cell` does not hold, the one whose nearest co-channel
/// cell is farthest away. Unused channels win; ties go to the lowest index.
pub fn select_channel(
    cell: CellId,
    state: &NetworkState,
    grid: &GridSpec,
    radio: &PropagationParams,
) -> Result<Channel> {
    let c = state.cell(cell).ok_or(Error::UnknownCell(cell))?;
    let mut best: Option<(Channel, f64)> = None;
    for ch in (0..radio.num_channels as u16).map(Channel) {
        if c.channels.contains(ch) {
            continue;
        }
        let d = co_channel_distance(state, grid, c, ch);
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((ch, d));
        }
    }
    best.map(|(ch, _)| ch).ok_or(Error::ChannelSaturated(cell))
}

/// Among the channels `cell` holds, the one whose nearest co-channel cell is
/// closest (the most interfered). Ties go to the lowest index.
pub fn channel_to_release(cell: CellId, state: &NetworkState, grid: &GridSpec) -> Result<Channel> {
    let c = state.cell(cell).ok_or(Error::UnknownCell(cell))?;
    let mut best: Option<(Channel, f64)> = None;
    for ch in c.channels.iter() {
        let d = co_channel_distance(state, grid, c, ch);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((ch, d));
        }
    }
    best.map(|(ch, _)| ch)
        .ok_or_else(|| Error::InvalidParameter(format!("{cell} holds no channel")))
}

#[derive(Clone, Debug)]
pub struct SiteChoice {
    pub site: usize,
    pub cell: CellId,
    pub channel: Channel,
    /// `Σ_i B̂_i` of the chosen layout, +∞ if any cell is unservable.
    pub total_mhz: f64,
    /// Layout with the new cell deployed and powers re-configured.
    pub state: NetworkState,
    pub evaluations: Vec<CellEvaluation>,
}

/// Places a tentative cell at every free candidate site and keeps the one
/// minimizing the total required bandwidth. Ties go to the lowest pixel.
///
/// Candidates are evaluated independently (in parallel under
/// [`Execution::Parallel`]); the argmin runs sequentially over the ordered
/// results, so both modes return the same site.
pub fn select_site(state: &NetworkState, problem: &PlanningProblem<'_>, exec: Execution) -> Result<SiteChoice> {
    let free: Vec<usize> = problem
        .candidates
        .sites()
        .iter()
        .copied()
        .filter(|&s| !state.occupies(s))
        .collect();
    if free.is_empty() {
        return Err(Error::SiteSaturated);
    }
    let id = state.next_id();
    let inner = if exec.is_parallel() {
        Execution::Sequential
    } else {
        exec
    };

    let trial = |k: usize| -> Result<SiteChoice> {
        let site = free[k];
        let mut s = state.clone();
        s.insert(SmallCell {
            id,
            site,
            channels: ChannelSet::empty(),
            power_dbm: problem.radio.power_max_dbm,
            fixed_power: false,
        });
        let channel = select_channel(id, &s, problem.grid, problem.radio)?;
        s.cell_mut(id).expect("just inserted").channels.insert(channel);
        apply_power_configuration(&mut s, problem.grid, problem.radio);
        let (_, evaluations) = evaluate_layout(&s, problem.grid, problem.radio, problem.loads, inner)?;
        Ok(SiteChoice {
            site,
            cell: id,
            channel,
            total_mhz: total_requirement(&evaluations),
            state: s,
            evaluations,
        })
    };

    let mut best: Option<SiteChoice> = None;
    for result in exec.map(free.len(), trial) {
        let choice = result?;
        if best.as_ref().is_none_or(|b| choice.total_mhz < b.total_mhz) {
            best = Some(choice);
        }
    }
    Ok(best.expect("at least one free site"))
}
