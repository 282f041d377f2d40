//! Capacity conformance monitoring: required bandwidth per cell, busy-hour
//! detection over a sliding window, and the L-consecutive-step trigger.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{CellId, NetworkState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorParams {
    pub alpha: f64,
    pub window_t: usize,
    pub consecutive_l: usize,
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams {
            alpha: 0.9,
            window_t: 24,
            consecutive_l: 3,
        }
    }
}

impl MonitorParams {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.alpha) {
            out.push(format!("MonitorParams.alpha_range: alpha = {}", self.alpha));
        }
        if self.window_t < 1 {
            out.push("MonitorParams.window_positive: T = 0".to_string());
        }
        if self.consecutive_l < 1 {
            out.push("MonitorParams.consecutive_positive: L = 0".to_string());
        }
        out
    }
}

/// Required bandwidth of a cell. `Unservable` marks a cell with demand but
/// zero spectral efficiency; it exceeds every finite threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Requirement {
    Mhz(f64),
    Unservable,
}

impl Requirement {
    /// MHz, with `Unservable` mapped to +∞.
    pub fn value(self) -> f64 {
        match self {
            Requirement::Mhz(v) => v,
            Requirement::Unservable => f64::INFINITY,
        }
    }

    pub fn exceeds(self, threshold: f64) -> bool {
        match self {
            Requirement::Mhz(v) => v > threshold,
            Requirement::Unservable => true,
        }
    }

    pub fn below(self, threshold: f64) -> bool {
        match self {
            Requirement::Mhz(v) => v < threshold,
            Requirement::Unservable => false,
        }
    }

    pub fn is_unservable(self) -> bool {
        matches!(self, Requirement::Unservable)
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Requirement::Mhz(v) => write!(f, "{v:.4}"),
            Requirement::Unservable => f.write_str("inf"),
        }
    }
}

/// `B̃_i = Σ_m min(D_{i,m}, A_{m,i}) / SE_i`, in MHz.
pub fn required_bandwidth(tenant_demands: &[f64], specs: &[f64], avg_se: f64) -> Result<Requirement> {
    if tenant_demands.len() != specs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} tenant demands but {} specs",
            tenant_demands.len(),
            specs.len()
        )));
    }
    let capped: f64 = tenant_demands.iter().zip(specs).map(|(d, a)| d.min(*a)).sum();
    Ok(requirement_from(capped, avg_se))
}

pub(crate) fn requirement_from(capped_demand: f64, avg_se: f64) -> Requirement {
    if capped_demand <= 0.0 {
        Requirement::Mhz(0.0)
    } else if avg_se > 0.0 {
        Requirement::Mhz(capped_demand / avg_se)
    } else {
        Requirement::Unservable
    }
}

/// Sliding window of required bandwidth per cell plus violation counters.
#[derive(Clone, Debug, Default)]
pub struct DemandHistory {
    window: usize,
    series: BTreeMap<CellId, VecDeque<(usize, Requirement)>>,
    counters: BTreeMap<CellId, usize>,
}

impl DemandHistory {
    pub fn new(window_t: usize) -> Self {
        DemandHistory {
            window: window_t.max(1),
            ..Default::default()
        }
    }

    /// Appends the value for step `t`, dropping entries older than the window.
    pub fn push(&mut self, cell: CellId, t: usize, value: Requirement) {
        let window = self.window;
        let ring = self.series.entry(cell).or_default();
        ring.push_back((t, value));
        while let Some(&(oldest, _)) = ring.front() {
            if oldest + window <= t {
                ring.pop_front();
            } else {
                break;
            }
        }
    }

    /// Replaces a cell's window wholesale, e.g. after the layout changed.
    pub fn rebuild(&mut self, cell: CellId, values: impl IntoIterator<Item = (usize, Requirement)>) {
        let ring: VecDeque<_> = values.into_iter().collect();
        let keep = ring.len().saturating_sub(self.window);
        self.series.insert(cell, ring.into_iter().skip(keep).collect());
    }

    /// Forgets cells that are no longer deployed.
    pub fn retain_cells(&mut self, state: &NetworkState) {
        self.series.retain(|id, _| state.index_of(*id).is_some());
        self.counters.retain(|id, _| state.index_of(*id).is_some());
    }

    pub fn window(&self, cell: CellId) -> Option<&VecDeque<(usize, Requirement)>> {
        self.series.get(&cell)
    }

    pub fn counter(&self, cell: CellId) -> usize {
        self.counters.get(&cell).copied().unwrap_or(0)
    }

    pub fn reset_counters(&mut self) {
        self.counters.clear();
    }
}

/// Step in the window with the largest required bandwidth; ties go to the
/// most recent step.
pub fn busy_hour(history: &DemandHistory, cell: CellId) -> Result<usize> {
    let ring = history
        .series
        .get(&cell)
        .filter(|r| !r.is_empty())
        .ok_or(Error::EmptyHistory(cell))?;
    let mut best = ring[0];
    for &entry in ring.iter().skip(1) {
        if entry.1.value() >= best.1.value() {
            best = entry;
        }
    }
    Ok(best.0)
}

fn busy_value(history: &DemandHistory, cell: CellId) -> Result<(usize, Requirement)> {
    let t = busy_hour(history, cell)?;
    let ring = &history.series[&cell];
    Ok(*ring.iter().find(|(s, _)| *s == t).expect("busy hour is in the window"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorRow {
    pub t: usize,
    pub cell: CellId,
    pub busy_hour: usize,
    pub required: Requirement,
    pub threshold_mhz: f64,
    pub violation: bool,
    pub counter: usize,
    pub fired: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriggerDecision {
    pub fire: bool,
    pub violating_cells: Vec<CellId>,
    pub rows: Vec<MonitorRow>,
}

/// Evaluates the capacity condition at each cell's busy hour and updates the
/// consecutive-violation counters. Fires when any counter reaches `L`; all
/// counters are reset after firing. Call once per time step.
pub fn check_trigger(
    history: &mut DemandHistory,
    state: &NetworkState,
    params: &MonitorParams,
    channel_bandwidth_mhz: f64,
) -> Result<TriggerDecision> {
    let mut violating = Vec::new();
    let mut rows = Vec::new();
    let mut fire = false;
    for cell in &state.cells {
        let (t_busy, required) = busy_value(history, cell.id)?;
        let threshold = params.alpha * cell.channels.len() as f64 * channel_bandwidth_mhz;
        let violation = required.exceeds(threshold);
        let counter = history.counters.entry(cell.id).or_insert(0);
        if violation {
            *counter += 1;
            violating.push(cell.id);
        } else {
            *counter = 0;
        }
        fire |= *counter >= params.consecutive_l;
        rows.push(MonitorRow {
            t: state.t,
            cell: cell.id,
            busy_hour: t_busy,
            required,
            threshold_mhz: threshold,
            violation,
            counter: *counter,
            fired: false,
        });
    }
    if fire {
        history.reset_counters();
        for row in &mut rows {
            row.fired = true;
        }
    }
    Ok(TriggerDecision {
        fire,
        violating_cells: violating,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlaNotice {
    pub t: usize,
    pub tenant_id: String,
    pub demand_mbps: f64,
    pub contracted_mbps: f64,
}

/// Informational notice when a tenant's total demand exceeds its contract.
pub fn sla_exceed_check(t: usize, tenant_id: &str, total_demand: f64, contracted: f64) -> Option<SlaNotice> {
    (total_demand > contracted).then(|| SlaNotice {
        t,
        tenant_id: tenant_id.to_string(),
        demand_mbps: total_demand,
        contracted_mbps: contracted,
    })
}
