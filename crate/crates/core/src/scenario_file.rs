//! Scenario documents (JSON) and the layout fragment emitted after planning.
//!
//! A scenario file is parsed into [`ScenarioFile`], which mirrors the JSON
//! one-to-one and can be checked for invariant violations without failing
//! early. [`ScenarioFile::resolve`] turns it into a [`Scenario`] ready for
//! simulation. Channel indices in the file are 0-based.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::MonitorParams;
use crate::planner::{PlannerParams, Step4Threshold};
use crate::radio::{apply_power_configuration, PropagationParams};
use crate::scenario::{
    select_candidate_sites, CandidateSiteSet, CellId, Channel, GridSpec, NetworkState, SmallCell, SpatialDemand,
    TenantProfile, TrafficMap,
};

pub const DEFAULT_HORIZON: usize = 24;

const BUNDLED: &str = include_str!("../scenarios/new_tenant.json");

/// The indoor new-tenant scenario shipped with the crate.
pub fn bundled_scenario() -> ScenarioFile {
    ScenarioFile::parse(BUNDLED, Path::new("scenarios/new_tenant.json")).expect("bundled scenario parses")
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TenantEntry {
    pub id: String,
    pub contracted_capacity_mbps: f64,
    pub temporal_profile: Vec<f64>,
    /// Busy-hour spatial demand. Absent means the map is unknown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<SpatialDemand>,
}

impl TenantEntry {
    pub fn profile(&self) -> TenantProfile {
        TenantProfile {
            id: self.id.clone(),
            contracted_capacity_mbps: self.contracted_capacity_mbps,
            temporal_profile: self.temporal_profile.clone(),
        }
    }
}

/// Either a seeded random draw (`fraction`, `seed`) or an explicit list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub id: u32,
    pub site: usize,
    pub channels: Vec<u16>,
    /// Fixed transmit power. Cells without one are auto-configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    /// Informational: the auto-configured power when the layout was written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configured_power_dbm: Option<f64>,
}

impl CellEntry {
    pub fn from_cell(cell: &SmallCell) -> Self {
        CellEntry {
            id: cell.id.0,
            site: cell.site,
            channels: cell.channels.iter().map(|c| c.0).collect(),
            power_dbm: cell.fixed_power.then_some(cell.power_dbm),
            configured_power_dbm: (!cell.fixed_power).then_some(cell.power_dbm),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewTenantEntry {
    pub step: usize,
    pub tenant: TenantEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub grid: GridSpec,
    #[serde(default)]
    pub radio: PropagationParams,
    #[serde(default)]
    pub monitor: MonitorParams,
    #[serde(default)]
    pub planner: PlannerParams,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub tenants: Vec<TenantEntry>,
    pub candidate_sites: CandidateEntry,
    pub initial_cells: Vec<CellEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_tenant: Option<NewTenantEntry>,
}

/// Replacement for `initial_cells`, written after planning so runs can be
/// chained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFragment {
    pub initial_cells: Vec<CellEntry>,
}

impl LayoutFragment {
    pub fn from_state(state: &NetworkState) -> Self {
        LayoutFragment {
            initial_cells: state.cells.iter().map(CellEntry::from_cell).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("layout serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let message = match full.rsplit_once(" at line ") {
            Some((head, _)) => head.to_string(),
            None => full,
        };
        Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message,
        }
    })
}

/// Command-line style overrides applied on top of a scenario file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    /// Applies to both the monitor and the planner.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub k_max: Option<usize>,
    pub n_max_sc: Option<usize>,
    pub consecutive_l: Option<usize>,
    pub window_t: Option<usize>,
    pub step4_threshold: Option<Step4Threshold>,
    pub horizon: Option<usize>,
    /// Candidate-site seed; only meaningful for a random draw.
    pub seed: Option<u64>,
    pub layout: Option<LayoutFragment>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// `path` is used only for error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        parse_json(text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.alpha {
            self.planner.alpha = a;
            self.monitor.alpha = a;
        }
        if let Some(v) = o.beta {
            self.planner.beta = v;
        }
        if let Some(v) = o.gamma {
            self.planner.gamma = v;
        }
        if let Some(v) = o.k_max {
            self.planner.k_max = v;
        }
        if let Some(v) = o.n_max_sc {
            self.planner.n_max_sc = v;
        }
        if let Some(v) = o.consecutive_l {
            self.monitor.consecutive_l = v;
        }
        if let Some(v) = o.window_t {
            self.monitor.window_t = v;
        }
        if let Some(v) = o.step4_threshold {
            self.planner.step4_threshold = v;
        }
        if let Some(v) = o.horizon {
            self.horizon = v;
        }
        if let Some(v) = o.seed {
            self.candidate_sites.seed = Some(v);
        }
        if let Some(layout) = &o.layout {
            self.initial_cells = layout.initial_cells.clone();
        }
    }

    fn candidates(&self, grid: &GridSpec) -> std::result::Result<CandidateSiteSet, Vec<String>> {
        let c = &self.candidate_sites;
        match (&c.pixels, c.fraction) {
            (Some(pixels), None) => CandidateSiteSet::from_pixels(grid, pixels.clone()).map_err(|e| match e {
                Error::Invariants(v) => v,
                other => vec![format!("CandidateSiteSet.nonempty: {other}")],
            }),
            (None, Some(fraction)) => {
                select_candidate_sites(grid, fraction, c.seed.unwrap_or(0)).map_err(|e| match e {
                    Error::NoCandidateSites => {
                        vec!["CandidateSiteSet.nonempty: fraction yields no candidate sites".into()]
                    }
                    other => vec![format!("CandidateSiteSet.fraction_range: {other}")],
                })
            }
            _ => Err(vec![
                "CandidateSiteSet.source: give exactly one of `fraction` or `pixels`".into(),
            ]),
        }
    }

    fn initial_state(&self) -> std::result::Result<NetworkState, Vec<String>> {
        let mut out = Vec::new();
        let mut ids = BTreeSet::new();
        let mut cells = Vec::new();
        for c in &self.initial_cells {
            if !ids.insert(c.id) {
                out.push(format!("NetworkState.unique_ids: SC{} listed twice", c.id));
            }
            if let Some(&ch) = c
                .channels
                .iter()
                .find(|&&ch| ch as usize >= crate::scenario::ChannelSet::MAX_CHANNELS)
            {
                out.push(format!(
                    "NetworkState.channel_in_band: SC{} holds channel index {ch}",
                    c.id
                ));
                continue;
            }
            let channels = c.channels.iter().map(|&ch| Channel(ch)).collect();
            cells.push(SmallCell {
                id: CellId(c.id),
                site: c.site,
                channels,
                power_dbm: c.power_dbm.unwrap_or(self.radio.power_max_dbm),
                fixed_power: c.power_dbm.is_some(),
            });
        }
        if out.is_empty() {
            Ok(NetworkState::new(0, cells))
        } else {
            Err(out)
        }
    }

    /// Every violated invariant, by name. Empty for a valid scenario.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.grid.violations();
        let grid_ok = out.is_empty();
        out.extend(self.radio.violations());
        out.extend(self.monitor.violations());
        out.extend(self.planner.violations());
        if self.planner.k_max > self.radio.num_channels {
            out.push(format!(
                "PlannerParams.k_max_within_band: K_max = {} exceeds K = {}",
                self.planner.k_max, self.radio.num_channels
            ));
        }
        if self.horizon < 1 {
            out.push("ExperimentConfig.horizon_positive: horizon = 0".into());
        }

        let mut ids = BTreeSet::new();
        for t in &self.tenants {
            if !ids.insert(t.id.as_str()) {
                out.push(format!("TenantProfile.unique_id: {} listed twice", t.id));
            }
            out.extend(t.profile().violations());
            match &t.spatial {
                Some(s) => out.extend(s.violations(&t.id)),
                None => out.push(format!(
                    "TrafficMap.known_map: existing tenant {} has no spatial demand",
                    t.id
                )),
            }
        }
        if let Some(ev) = &self.new_tenant {
            if ids.contains(ev.tenant.id.as_str()) {
                out.push(format!(
                    "TenantProfile.unique_id: new tenant {} already present",
                    ev.tenant.id
                ));
            }
            out.extend(ev.tenant.profile().violations());
            if let Some(s) = &ev.tenant.spatial {
                out.extend(s.violations(&ev.tenant.id));
            }
            if ev.step >= self.horizon {
                out.push(format!(
                    "ExperimentConfig.event_step_in_horizon: step {} with horizon {}",
                    ev.step, self.horizon
                ));
            }
        }

        if !grid_ok {
            return out;
        }
        let candidates = match self.candidates(&self.grid) {
            Ok(c) => Some(c),
            Err(v) => {
                out.extend(v);
                None
            }
        };
        match self.initial_state() {
            Ok(state) => {
                if state.is_empty() {
                    out.push("NetworkState.nonempty: no initial cells".into());
                }
                if let Some(c) = &candidates {
                    out.extend(state.violations(
                        &self.grid,
                        c,
                        self.radio.num_channels,
                        self.planner.k_max,
                        (self.radio.power_min_dbm, self.radio.power_max_dbm),
                    ));
                }
            }
            Err(v) => out.extend(v),
        }
        out
    }

    /// Validates and builds the simulation inputs.
    pub fn resolve(&self) -> Result<Scenario> {
        let problems = self.violations();
        if !problems.is_empty() {
            return Err(Error::Invariants(problems));
        }
        let grid = self.grid.clone();
        let candidates = self.candidates(&grid).map_err(Error::Invariants)?;
        let mut initial = self.initial_state().map_err(Error::Invariants)?;
        apply_power_configuration(&mut initial, &grid, &self.radio);

        let mut maps = TrafficMap::new(grid.len(), self.horizon);
        for t in &self.tenants {
            let spatial = t.spatial.as_ref().expect("checked by violations");
            maps.add_tenant(t.profile(), spatial.rasterize(&grid))?;
        }
        let new_tenant = self.new_tenant.as_ref().map(|ev| NewTenant {
            step: ev.step,
            profile: ev.tenant.profile(),
            busy_map: ev.tenant.spatial.as_ref().map(|s| s.rasterize(&grid)),
        });
        Ok(Scenario {
            grid,
            radio: self.radio.clone(),
            monitor: self.monitor.clone(),
            planner: self.planner.clone(),
            horizon: self.horizon,
            maps,
            candidates,
            initial,
            new_tenant,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewTenant {
    pub step: usize,
    pub profile: TenantProfile,
    /// Actual busy-hour (weight 1) pixel demand, when known.
    pub busy_map: Option<Vec<f64>>,
}

impl NewTenant {
    /// Actual demand at step `t`, if the map is known.
    pub fn map_at(&self, t: usize) -> Option<Vec<f64>> {
        let w = self.profile.weight(t);
        self.busy_map.as_ref().map(|m| m.iter().map(|v| v * w).collect())
    }
}

/// Resolved simulation inputs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: GridSpec,
    pub radio: PropagationParams,
    pub monitor: MonitorParams,
    pub planner: PlannerParams,
    pub horizon: usize,
    /// Demand of the tenants present from the start.
    pub maps: TrafficMap,
    pub candidates: CandidateSiteSet,
    /// Initial layout with powers configured.
    pub initial: NetworkState,
    pub new_tenant: Option<NewTenant>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_is_valid() {
        let file = bundled_scenario();
        assert_eq!(file.violations(), Vec::<String>::new());
        let s = file.resolve().unwrap();
        assert_eq!(s.grid.len(), 4489);
        assert_eq!(s.candidates.len(), 90);
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let err = ScenarioFile::parse("{\n  \"grid\": 3\n}", Path::new("x.json")).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_reach_both_alphas() {
        let mut file = bundled_scenario();
        file.apply(&Overrides {
            alpha: Some(0.5),
            k_max: Some(3),
            ..Default::default()
        });
        assert_eq!(file.monitor.alpha, 0.5);
        assert_eq!(file.planner.alpha, 0.5);
        assert_eq!(file.planner.k_max, 3);
    }

    #[test]
    fn non_candidate_cell_is_named() {
        let mut file = bundled_scenario();
        let s = file.resolve().unwrap();
        let free = (0..s.grid.len()).find(|u| !s.candidates.contains(*u)).unwrap();
        file.initial_cells[0].site = free;
        let v = file.violations();
        assert!(
            v.iter().any(|m| m.starts_with("NetworkState.site_in_candidates")),
            "{v:?}"
        );
    }

    #[test]
    fn too_many_channels_is_named() {
        let mut file = bundled_scenario();
        file.initial_cells[0].channels = vec![0, 1, 2];
        let v = file.violations();
        assert!(v.iter().any(|m| m.starts_with("NetworkState.channel_count")), "{v:?}");
    }
}
