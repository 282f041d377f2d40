//! Planning actions, replay, and compression.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::radio::{apply_power_configuration, PropagationParams};
use crate::scenario::{CellId, Channel, ChannelSet, GridSpec, NetworkState, SmallCell};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanningAction {
    AddChannel {
        cell: CellId,
        channel: Channel,
    },
    RemoveChannel {
        cell: CellId,
        channel: Channel,
    },
    AddCell {
        cell: CellId,
        site: usize,
        channel: Channel,
    },
    RemoveCell {
        cell: CellId,
    },
    /// `from` is taken down and a new cell `to` is deployed at `site`.
    Relocate {
        from: CellId,
        to: CellId,
        site: usize,
        channel: Channel,
    },
}

impl PlanningAction {
    pub fn kind(&self) -> &'static str {
        match self {
            PlanningAction::AddChannel { .. } => "add_channel",
            PlanningAction::RemoveChannel { .. } => "remove_channel",
            PlanningAction::AddCell { .. } => "add_cell",
            PlanningAction::RemoveCell { .. } => "remove_cell",
            PlanningAction::Relocate { .. } => "relocate",
        }
    }
}

impl fmt::Display for PlanningAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PlanningAction::AddChannel { cell, channel } => write!(f, "add channel {channel} to {cell}"),
            PlanningAction::RemoveChannel { cell, channel } => write!(f, "remove channel {channel} from {cell}"),
            PlanningAction::AddCell { cell, site, channel } => {
                write!(f, "deploy {cell} at pixel {site} on channel {channel}")
            }
            PlanningAction::RemoveCell { cell } => write!(f, "remove {cell}"),
            PlanningAction::Relocate {
                from,
                to,
                site,
                channel,
            } => {
                write!(f, "relocate {from} to pixel {site} as {to} on channel {channel}")
            }
        }
    }
}

/// The part of the planning loop that produced an action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    ExpandChannels,
    AddCells,
    TrimChannels,
    TrimCells,
    TopUp,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::ExpandChannels => "expand-channels",
            Phase::AddCells => "add-cells",
            Phase::TrimChannels => "trim-channels",
            Phase::TrimCells => "trim-cells",
            Phase::TopUp => "top-up",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub phase: Phase,
    pub action: PlanningAction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActionLedger {
    entries: Vec<LedgerEntry>,
}

impl ActionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, phase: Phase, action: PlanningAction) {
        self.entries.push(LedgerEntry { phase, action });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: &ActionLedger) {
        self.entries.extend_from_slice(&other.entries);
    }

    /// Applies the structural changes in order. Powers are left untouched.
    pub fn apply(&self, state: &mut NetworkState, max_power_dbm: f64) -> Result<()> {
        for (index, entry) in self.entries.iter().enumerate() {
            apply_action(state, &entry.action, max_power_dbm).map_err(|reason| Error::Replay { index, reason })?;
        }
        Ok(())
    }

    /// Replays the ledger from `initial` and re-derives transmit powers.
    pub fn replay(&self, initial: &NetworkState, grid: &GridSpec, radio: &PropagationParams) -> Result<NetworkState> {
        let mut state = initial.clone();
        self.apply(&mut state, radio.power_max_dbm)?;
        apply_power_configuration(&mut state, grid, radio);
        Ok(state)
    }

    pub fn compress(&self) -> ActionLedger {
        compress_ledger(self)
    }
}

fn apply_action(state: &mut NetworkState, action: &PlanningAction, max_power: f64) -> std::result::Result<(), String> {
    let deploy = |state: &mut NetworkState, cell: CellId, site: usize, channel: Channel| {
        if state.cell(cell).is_some() {
            return Err(format!("{cell} already deployed"));
        }
        if state.occupies(site) {
            return Err(format!("pixel {site} already occupied"));
        }
        state.insert(SmallCell {
            id: cell,
            site,
            channels: ChannelSet::single(channel),
            power_dbm: max_power,
            fixed_power: false,
        });
        Ok(())
    };
    match *action {
        PlanningAction::AddChannel { cell, channel } => {
            let c = state.cell_mut(cell).ok_or_else(|| format!("{cell} not deployed"))?;
            if !c.channels.insert(channel) {
                return Err(format!("{cell} already holds {channel}"));
            }
        }
        PlanningAction::RemoveChannel { cell, channel } => {
            let c = state.cell_mut(cell).ok_or_else(|| format!("{cell} not deployed"))?;
            if !c.channels.remove(channel) {
                return Err(format!("{cell} does not hold {channel}"));
            }
        }
        PlanningAction::AddCell { cell, site, channel } => deploy(state, cell, site, channel)?,
        PlanningAction::RemoveCell { cell } => {
            state.remove(cell).ok_or_else(|| format!("{cell} not deployed"))?;
        }
        PlanningAction::Relocate {
            from,
            to,
            site,
            channel,
        } => {
            state.remove(from).ok_or_else(|| format!("{from} not deployed"))?;
            deploy(state, to, site, channel)?;
        }
    }
    Ok(())
}

/// Removes actions that are undone later in the same ledger and pairs the
/// remaining cell removals with cell additions as relocations.
///
/// * channel actions on a cell that is later removed are dropped, and a cell
///   both added and removed disappears entirely;
/// * an add and a remove of the same channel on the same cell that are
///   adjacent in that (cell, channel) history cancel;
/// * the k-th surviving removal and the k-th surviving addition become one
///   relocation, placed where the addition was, unless another cell is
///   deployed between a removal and its later addition.
///
/// Replaying the compressed ledger yields the same final state as the raw one.
pub fn compress_ledger(ledger: &ActionLedger) -> ActionLedger {
    let entries = &ledger.entries;
    let mut keep = vec![true; entries.len()];

    let mut added_at: BTreeMap<CellId, usize> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        match e.action {
            PlanningAction::AddCell { cell, .. } => {
                added_at.insert(cell, i);
            }
            PlanningAction::RemoveCell { cell } => {
                for (j, earlier) in entries[..i].iter().enumerate() {
                    match earlier.action {
                        PlanningAction::AddChannel { cell: c, .. } | PlanningAction::RemoveChannel { cell: c, .. }
                            if c == cell =>
                        {
                            keep[j] = false
                        }
                        _ => {}
                    }
                }
                if let Some(a) = added_at.remove(&cell) {
                    keep[a] = false;
                    keep[i] = false;
                }
            }
            _ => {}
        }
    }

    let mut open: BTreeMap<(CellId, Channel), Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        let (key, adds) = match e.action {
            PlanningAction::AddChannel { cell, channel } => ((cell, channel), true),
            PlanningAction::RemoveChannel { cell, channel } => ((cell, channel), false),
            _ => continue,
        };
        let stack = open.entry(key).or_default();
        let cancels = stack
            .last()
            .is_some_and(|&j| matches!(entries[j].action, PlanningAction::AddChannel { .. }) != adds);
        if cancels {
            let j = stack.pop().expect("checked non-empty");
            keep[i] = false;
            keep[j] = false;
        } else {
            stack.push(i);
        }
    }

    let removals: Vec<usize> = (0..entries.len())
        .filter(|&i| keep[i] && matches!(entries[i].action, PlanningAction::RemoveCell { .. }))
        .collect();
    let additions: Vec<usize> = (0..entries.len())
        .filter(|&i| keep[i] && matches!(entries[i].action, PlanningAction::AddCell { .. }))
        .collect();
    let mut relocated: BTreeMap<usize, PlanningAction> = BTreeMap::new();
    let mut absorbed = BTreeSet::new();
    for (&r, &a) in removals.iter().zip(&additions) {
        // Folding a removal into a later addition delays it; a deployment in
        // between could be reusing the removed cell's site.
        let deploys = |b: usize| {
            keep[b]
                && matches!(
                    entries[b].action,
                    PlanningAction::AddCell { .. } | PlanningAction::Relocate { .. }
                )
        };
        if r < a && (r + 1..a).any(deploys) {
            continue;
        }
        let (
            PlanningAction::RemoveCell { cell: from },
            PlanningAction::AddCell {
                cell: to,
                site,
                channel,
            },
        ) = (entries[r].action, entries[a].action)
        else {
            unreachable!("filtered above");
        };
        relocated.insert(
            a,
            PlanningAction::Relocate {
                from,
                to,
                site,
                channel,
            },
        );
        absorbed.insert(r);
    }

    let mut out = ActionLedger::new();
    for (i, e) in entries.iter().enumerate() {
        if !keep[i] || absorbed.contains(&i) {
            continue;
        }
        let action = relocated.get(&i).copied().unwrap_or(e.action);
        out.push(e.phase, action);
    }
    out
}
