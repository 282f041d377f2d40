//! The new-tenant experiment.
//!
//! Time runs over the scenario horizon. When the new tenant arrives its SLA
//! is translated into planning specs with the chosen method, and from then on
//! the monitor sees the specs as the tenant's anticipated demand. A trigger
//! runs the planner at the network busy hour. At the end the deployed layout
//! is evaluated against the tenant's actual traffic map.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::monitor::{check_trigger, sla_exceed_check, DemandHistory, MonitorRow, SlaNotice};
use crate::performance::{evaluate, CellEvaluation, SpecSource, TenantLoad};
use crate::planner::{plan, ActionLedger, PlanningProblem};
use crate::radio::RadioSnapshot;
use crate::scenario::{NetworkState, TenantProfile};
use crate::scenario_file::Scenario;
use crate::sla::{
    busy_hour_spec, spread_over_cells, translate_pixel_level, translate_sc_level, Distribution, PlanningSpecSet,
};

/// How the new tenant's SLA becomes planning input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    UniformSc,
    CorrSc,
    UniformPx,
    #[default]
    CorrPx,
    /// Pixel specs shaped like the tenant's real traffic map.
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::UniformSc,
        Method::CorrSc,
        Method::UniformPx,
        Method::CorrPx,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::UniformSc => "uniform-sc",
            Method::CorrSc => "corr-sc",
            Method::UniformPx => "uniform-px",
            Method::CorrPx => "corr-px",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// What happens to SC-level specs when the layout changes during planning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScSpecMode {
    /// Each cell's spec is spread evenly over the pixels it serves at
    /// translation time; the pixel map is re-aggregated over new layouts.
    #[default]
    Spread,
    /// Specs are re-translated against every candidate layout.
    Retranslate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub sc_specs: ScSpecMode,
    pub execution: Execution,
}

/// The new tenant's specs as produced at its arrival.
#[derive(Clone, Debug, PartialEq)]
pub struct Translation {
    pub tenant_id: String,
    pub step: usize,
    pub busy_hour: usize,
    pub specs: PlanningSpecSet,
}

#[derive(Clone, Debug)]
pub struct PlanRecord {
    pub t: usize,
    pub busy_hour: usize,
    pub cells_before: usize,
    pub cells_after: usize,
    pub raw_actions: usize,
    pub ledger: ActionLedger,
    pub saturated: bool,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub method: Method,
    pub grid: crate::scenario::GridSpec,
    pub channel_bandwidth_mhz: f64,
    pub alpha: f64,
    pub horizon: usize,
    pub monitor_log: Vec<MonitorRow>,
    pub notices: Vec<SlaNotice>,
    pub translation: Option<Translation>,
    pub plans: Vec<PlanRecord>,
    pub initial: NetworkState,
    pub final_state: NetworkState,
    /// Step at which the final layout is evaluated.
    pub eval_step: usize,
    /// Whether the new tenant's real map was available for the evaluation.
    pub actual_known: bool,
    pub evaluations: Vec<CellEvaluation>,
    pub rasters: Vec<(String, Vec<f64>)>,
}

impl Report {
    pub fn cell_count(&self) -> usize {
        self.final_state.len()
    }

    /// Σ of the per-cell required bandwidth, +∞ if any cell is unservable.
    pub fn total_required_mhz(&self) -> f64 {
        self.evaluations.iter().map(|e| e.requirement.value()).sum()
    }

    pub fn fired(&self) -> bool {
        !self.plans.is_empty()
    }
}

/// A tenant's load at weight `ref_weight`; other steps scale linearly.
#[derive(Clone, Debug)]
struct TenantTrack {
    profile: TenantProfile,
    load: TenantLoad,
    ref_weight: f64,
}

impl TenantTrack {
    fn at(&self, t: usize) -> TenantLoad {
        self.load.scaled(self.profile.weight(t) / self.ref_weight)
    }
}

/// Existing tenants plan with their real maps; their specs follow the same
/// maps, scaled to the contracted capacity.
fn existing_tracks(s: &Scenario) -> Vec<TenantTrack> {
    s.maps
        .tenants()
        .iter()
        .enumerate()
        .map(|(m, profile)| {
            let busy = s.maps.busy_map(m);
            let total: f64 = busy.iter().sum();
            let spec = if total > 0.0 {
                busy.iter()
                    .map(|v| profile.contracted_capacity_mbps * v / total)
                    .collect()
            } else {
                vec![0.0; busy.len()]
            };
            TenantTrack {
                profile: profile.clone(),
                load: TenantLoad {
                    tenant_id: profile.id.clone(),
                    demand: Some(busy.to_vec()),
                    spec: SpecSource::Pixel(spec),
                },
                ref_weight: 1.0,
            }
        })
        .collect()
}

fn loads_at(tracks: &[TenantTrack], t: usize) -> Vec<TenantLoad> {
    tracks.iter().map(|tr| tr.at(t)).collect()
}

fn existing_total(s: &Scenario, t: usize) -> f64 {
    s.maps
        .tenants()
        .iter()
        .enumerate()
        .map(|(m, p)| p.weight(t) * s.maps.busy_map(m).iter().sum::<f64>())
        .sum()
}

/// Argmax of `f` over `steps`, ties to the latest step.
fn latest_argmax(steps: impl Iterator<Item = usize>, f: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for t in steps {
        let v = f(t);
        if best.is_none_or(|(_, b)| v >= b) {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
}

/// Busy hour of the existing traffic in the monitor window ending at `t`.
pub fn translation_busy_hour(s: &Scenario, t: usize) -> usize {
    let start = (t + 1).saturating_sub(s.monitor.window_t);
    latest_argmax(start..=t, |tau| existing_total(s, tau)).expect("non-empty window")
}

/// Translates the new tenant's SLA on the current layout at `busy_hour`.
fn translate_new_tenant(
    s: &Scenario,
    cfg: &ExperimentConfig,
    state: &NetworkState,
    snapshot: &RadioSnapshot,
    busy_hour: usize,
) -> Result<(Translation, TenantTrack)> {
    let ev = s
        .new_tenant
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("scenario has no new tenant".into()))?;
    let mut weight = ev.profile.weight(busy_hour);
    if !(weight > 0.0) {
        weight = 1.0;
    }
    let a_busy = busy_hour_spec(&ev.profile, weight)?.a_busy_mbps;
    let serving = snapshot.serving();
    let existing = s.maps.total_map(busy_hour)?;

    let (specs, source) = match cfg.method {
        Method::UniformSc | Method::CorrSc => {
            let distribution = if cfg.method == Method::UniformSc {
                Distribution::Uniform
            } else {
                Distribution::Correlated
            };
            let cell_demands = serving.aggregate(&existing);
            let specs = translate_sc_level(a_busy, state, distribution, &cell_demands)?;
            let source = match (cfg.sc_specs, distribution) {
                (ScSpecMode::Spread, _) => SpecSource::Pixel(spread_over_cells(&specs.cells, serving)?),
                (ScSpecMode::Retranslate, Distribution::Uniform) => SpecSource::ScUniform { a_busy },
                (ScSpecMode::Retranslate, Distribution::Correlated) => SpecSource::ScCorrelated {
                    a_busy,
                    basis: existing.clone(),
                },
            };
            (specs, source)
        }
        Method::UniformPx | Method::CorrPx | Method::Oracle => {
            let (distribution, basis) = match cfg.method {
                Method::UniformPx => (Distribution::Uniform, existing),
                Method::CorrPx => (Distribution::Correlated, existing),
                _ => (
                    Distribution::Correlated,
                    ev.map_at(busy_hour).ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "method oracle needs the spatial map of tenant {}",
                            ev.profile.id
                        ))
                    })?,
                ),
            };
            let specs = translate_pixel_level(a_busy, &s.grid, distribution, &basis, serving)?;
            let source = SpecSource::Pixel(specs.pixels.clone().expect("pixel-level specs"));
            (specs, source)
        }
    };
    let track = TenantTrack {
        profile: ev.profile.clone(),
        load: TenantLoad {
            tenant_id: ev.profile.id.clone(),
            demand: None,
            spec: source,
        },
        ref_weight: weight,
    };
    let translation = Translation {
        tenant_id: ev.profile.id.clone(),
        step: ev.step,
        busy_hour,
        specs,
    };
    Ok((translation, track))
}

/// Only the translation step: specs for the new tenant on the initial layout.
pub fn translate_only(s: &Scenario, cfg: &ExperimentConfig) -> Result<Translation> {
    let ev = s
        .new_tenant
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("scenario has no new tenant".into()))?;
    let snapshot = RadioSnapshot::compute(&s.initial, &s.grid, &s.radio, cfg.execution)?;
    let busy = translation_busy_hour(s, ev.step);
    Ok(translate_new_tenant(s, cfg, &s.initial, &snapshot, busy)?.0)
}

/// Planner inputs at the new tenant's arrival: every tenant's load at the
/// arrival busy hour, with the new tenant's specs standing in for its demand.
pub fn arrival_loads(s: &Scenario, cfg: &ExperimentConfig) -> Result<(Translation, Vec<TenantLoad>)> {
    let ev = s
        .new_tenant
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("scenario has no new tenant".into()))?;
    let snapshot = RadioSnapshot::compute(&s.initial, &s.grid, &s.radio, cfg.execution)?;
    let busy = translation_busy_hour(s, ev.step);
    let (translation, track) = translate_new_tenant(s, cfg, &s.initial, &snapshot, busy)?;
    let mut tracks = existing_tracks(s);
    tracks.push(track);
    Ok((translation, loads_at(&tracks, busy)))
}

struct Run<'a> {
    s: &'a Scenario,
    cfg: ExperimentConfig,
    state: NetworkState,
    snapshot: RadioSnapshot,
    tracks: Vec<TenantTrack>,
    translation: Option<Translation>,
    plans: Vec<PlanRecord>,
    monitor_log: Vec<MonitorRow>,
    notices: Vec<SlaNotice>,
}

impl<'a> Run<'a> {
    fn new(s: &'a Scenario, cfg: &ExperimentConfig) -> Result<Self> {
        let snapshot = RadioSnapshot::compute(&s.initial, &s.grid, &s.radio, cfg.execution)?;
        Ok(Run {
            s,
            cfg: *cfg,
            state: s.initial.clone(),
            snapshot,
            tracks: existing_tracks(s),
            translation: None,
            plans: Vec::new(),
            monitor_log: Vec::new(),
            notices: Vec::new(),
        })
    }

    fn admit_new_tenant(&mut self, busy_hour: usize) -> Result<()> {
        let (translation, track) = translate_new_tenant(self.s, &self.cfg, &self.state, &self.snapshot, busy_hour)?;
        self.translation = Some(translation);
        self.tracks.push(track);
        Ok(())
    }

    fn evaluate_at(&self, t: usize) -> Result<Vec<CellEvaluation>> {
        evaluate(&self.state, &self.snapshot, &loads_at(&self.tracks, t), &self.s.radio)
    }

    fn replan(&mut self, t: usize, busy_hour: usize) -> Result<()> {
        let loads = loads_at(&self.tracks, busy_hour);
        let problem = PlanningProblem {
            grid: &self.s.grid,
            candidates: &self.s.candidates,
            radio: &self.s.radio,
            loads: &loads,
        };
        let mut params = self.s.planner.clone();
        params.execution = self.cfg.execution;
        let outcome = plan(&self.state, &problem, &params)?;
        self.plans.push(PlanRecord {
            t,
            busy_hour,
            cells_before: self.state.len(),
            cells_after: outcome.state.len(),
            raw_actions: outcome.raw_ledger.len(),
            ledger: outcome.ledger,
            saturated: outcome.saturated,
        });
        self.state = outcome.state;
        self.state.t = t;
        self.snapshot = RadioSnapshot::compute(&self.state, &self.s.grid, &self.s.radio, self.cfg.execution)?;
        Ok(())
    }

    fn monitor(&mut self) -> Result<()> {
        let s = self.s;
        let window = s.monitor.window_t;
        let mut history = DemandHistory::new(window);
        let mut stale = true;
        for t in 0..s.horizon {
            self.state.t = t;
            if s.new_tenant.as_ref().is_some_and(|ev| ev.step == t) {
                self.admit_new_tenant(translation_busy_hour(s, t))?;
                stale = true;
            }
            if stale {
                // Recompute the whole window under the current layout and
                // tenant set.
                let start = (t + 1).saturating_sub(window);
                let mut columns = Vec::new();
                for tau in start..=t {
                    columns.push((tau, self.evaluate_at(tau)?));
                }
                for (slot, cell) in self.state.cells.iter().enumerate() {
                    history.rebuild(cell.id, columns.iter().map(|(tau, ev)| (*tau, ev[slot].requirement)));
                }
                history.retain_cells(&self.state);
                stale = false;
            } else {
                let evals = self.evaluate_at(t)?;
                for (cell, e) in self.state.cells.iter().zip(&evals) {
                    history.push(cell.id, t, e.requirement);
                }
            }

            for (m, profile) in s.maps.tenants().iter().enumerate() {
                let total = profile.weight(t) * s.maps.busy_map(m).iter().sum::<f64>();
                self.notices.extend(sla_exceed_check(
                    t,
                    &profile.id,
                    total,
                    profile.contracted_capacity_mbps,
                ));
            }

            let decision = check_trigger(&mut history, &self.state, &s.monitor, s.radio.channel_bandwidth_mhz)?;
            self.monitor_log.extend(decision.rows);
            if decision.fire {
                let busy = network_busy_hour(&history, &self.state);
                self.replan(t, busy)?;
                stale = true;
            }
        }
        Ok(())
    }

    /// Evaluates the current layout against actual demand.
    fn finish(self) -> Result<Report> {
        let s = self.s;
        let from = s.new_tenant.as_ref().map_or(0, |ev| ev.step);
        let new_total = |t: usize| {
            s.new_tenant
                .as_ref()
                .and_then(|ev| {
                    ev.busy_map
                        .as_ref()
                        .map(|m| ev.profile.weight(t) * m.iter().sum::<f64>())
                })
                .unwrap_or(0.0)
        };
        let eval_step = latest_argmax(from..s.horizon, |t| existing_total(s, t) + new_total(t)).unwrap_or(0);

        let mut loads = loads_at(&self.tracks[..s.maps.tenants().len()], eval_step);
        let mut demand = s.maps.total_map(eval_step)?;
        let mut actual_known = true;
        if let (Some(ev), Some(track)) = (&s.new_tenant, self.tracks.get(s.maps.tenants().len())) {
            let mut load = track.at(eval_step);
            load.demand = ev.map_at(eval_step);
            match &load.demand {
                Some(d) => demand.iter_mut().zip(d).for_each(|(o, v)| *o += v),
                None => actual_known = false,
            }
            loads.push(load);
        }
        let evaluations = evaluate(&self.state, &self.snapshot, &loads, &s.radio)?;

        let snap = &self.snapshot;
        let n = s.grid.len();
        let rasters = vec![
            ("demand".to_string(), demand),
            (
                "serving".to_string(),
                (0..n).map(|u| snap.serving().cell_of(u).0 as f64).collect(),
            ),
            ("sinr_db".to_string(), (0..n).map(|u| snap.best_sinr_db(u)).collect()),
            ("se".to_string(), (0..n).map(|u| snap.pixel_se(u)).collect()),
        ];

        Ok(Report {
            method: self.cfg.method,
            grid: s.grid.clone(),
            channel_bandwidth_mhz: s.radio.channel_bandwidth_mhz,
            alpha: s.planner.alpha,
            horizon: s.horizon,
            monitor_log: self.monitor_log,
            notices: self.notices,
            translation: self.translation,
            plans: self.plans,
            initial: s.initial.clone(),
            final_state: self.state,
            eval_step,
            actual_known,
            evaluations,
            rasters,
        })
    }
}

/// Network busy hour: the window step with the largest summed requirement,
/// ties to the latest step.
fn network_busy_hour(history: &DemandHistory, state: &NetworkState) -> usize {
    let mut totals: std::collections::BTreeMap<usize, f64> = Default::default();
    for cell in &state.cells {
        if let Some(ring) = history.window(cell.id) {
            for &(tau, r) in ring {
                *totals.entry(tau).or_insert(0.0) += r.value();
            }
        }
    }
    latest_argmax(totals.keys().copied(), |tau| totals[&tau]).unwrap_or(state.t)
}

/// Full run: monitoring, translation at the arrival step, planning on
/// trigger, and the final evaluation.
pub fn run_experiment(s: &Scenario, cfg: &ExperimentConfig) -> Result<Report> {
    let mut run = Run::new(s, cfg)?;
    run.monitor()?;
    run.finish()
}

/// One planner invocation at the arrival busy hour, without monitoring.
pub fn plan_once(s: &Scenario, cfg: &ExperimentConfig) -> Result<Report> {
    let ev = s
        .new_tenant
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("scenario has no new tenant".into()))?;
    let mut run = Run::new(s, cfg)?;
    let busy = translation_busy_hour(s, ev.step);
    run.state.t = ev.step;
    run.admit_new_tenant(busy)?;
    run.replan(ev.step, busy)?;
    run.finish()
}

/// Evaluation of the scenario's layout as given, without planning.
pub fn evaluate_only(s: &Scenario, cfg: &ExperimentConfig) -> Result<Report> {
    let mut run = Run::new(s, cfg)?;
    if let Some(ev) = &s.new_tenant {
        run.admit_new_tenant(translation_busy_hour(s, ev.step))?;
    }
    run.finish()
}
