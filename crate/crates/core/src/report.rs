//! Writes an experiment [`Report`] to a directory.
//!
//! Files are overwritten on every call. Floats use Rust's shortest
//! round-trip formatting, so identical runs produce identical bytes and every
//! number parses back to the value that was written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{Report, Translation};
use crate::planner::PlanningAction;
use crate::raster::{write_pgm, write_raster_csv};
use crate::scenario::{CellId, GridSpec};
use crate::scenario_file::LayoutFragment;

/// One row of the per-cell bandwidth table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub cell: CellId,
    pub site: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub channels: String,
    pub n_channels: usize,
    pub power_dbm: f64,
    pub served_pixels: usize,
    pub avg_se: f64,
    pub demand_mbps: f64,
    pub required_mhz: f64,
    pub threshold_mhz: f64,
    pub capacity_mbps: f64,
}

/// Column sums of the bandwidth table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TableTotals {
    pub n_channels: usize,
    pub served_pixels: usize,
    pub demand_mbps: f64,
    pub required_mhz: f64,
    pub threshold_mhz: f64,
    pub capacity_mbps: f64,
}

pub fn bandwidth_table(report: &Report) -> (Vec<TableRow>, TableTotals) {
    let rows: Vec<TableRow> = report
        .final_state
        .cells
        .iter()
        .zip(&report.evaluations)
        .map(|(cell, e)| {
            let p = report.grid.position(cell.site);
            TableRow {
                cell: cell.id,
                site: cell.site,
                x_m: p.x,
                y_m: p.y,
                channels: cell.channels.to_string(),
                n_channels: cell.channels.len(),
                power_dbm: cell.power_dbm,
                served_pixels: e.served_pixels,
                avg_se: e.avg_se,
                demand_mbps: e.capped_demand_mbps,
                required_mhz: e.requirement.value(),
                threshold_mhz: report.alpha * cell.channels.len() as f64 * report.channel_bandwidth_mhz,
                capacity_mbps: e.capacity_mbps,
            }
        })
        .collect();
    let mut t = TableTotals::default();
    for r in &rows {
        t.n_channels += r.n_channels;
        t.served_pixels += r.served_pixels;
        t.demand_mbps += r.demand_mbps;
        t.required_mhz += r.required_mhz;
        t.threshold_mhz += r.threshold_mhz;
        t.capacity_mbps += r.capacity_mbps;
    }
    (rows, t)
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Error::io(p, e))
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let p = self.path(name);
        let wrap = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&p, io),
            other => Error::InvalidParameter(format!("{}: {other:?}", p.display())),
        };
        let mut w = csv::Writer::from_path(&p).map_err(wrap)?;
        w.write_record(header).map_err(wrap)?;
        for row in rows {
            w.write_record(&row).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io(&p, e))
    }
}

fn describe(action: &PlanningAction, grid: &GridSpec) -> String {
    let at = |site: usize| {
        let p = grid.position(site);
        format!("pixel {site} ({}, {})", p.x, p.y)
    };
    match *action {
        PlanningAction::AddChannel { cell, channel } => format!("add channel {channel} to {cell}"),
        PlanningAction::RemoveChannel { cell, channel } => format!("remove channel {channel} from {cell}"),
        PlanningAction::AddCell { cell, site, channel } => {
            format!("deploy {cell} at {} on channel {channel}", at(site))
        }
        PlanningAction::RemoveCell { cell } => format!("remove {cell}"),
        PlanningAction::Relocate {
            from,
            to,
            site,
            channel,
        } => {
            format!("relocate {from} to {} as {to} on channel {channel}", at(site))
        }
    }
}

fn write_specs(out: &Out<'_>, tr: &Translation) -> Result<()> {
    let mut rows: Vec<Vec<String>> = tr
        .specs
        .cells
        .iter()
        .map(|(id, v)| vec![tr.tenant_id.clone(), "cell".into(), id.to_string(), v.to_string()])
        .collect();
    if let Some(px) = &tr.specs.pixels {
        rows.extend(
            px.iter()
                .enumerate()
                .map(|(u, v)| vec![tr.tenant_id.clone(), "pixel".into(), u.to_string(), v.to_string()]),
        );
    }
    out.csv("specs.csv", &["tenant", "level", "target", "value"], rows)
}

/// Writes only the translated specs (`specs.csv`).
pub fn emit_specs(tr: &Translation, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_specs(&Out { dir }, tr)
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let out = Out { dir };
    let grid = &report.grid;

    let (rows, totals) = bandwidth_table(report);
    let mut table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.cell.to_string(),
                r.site.to_string(),
                r.x_m.to_string(),
                r.y_m.to_string(),
                r.channels.clone(),
                r.n_channels.to_string(),
                r.power_dbm.to_string(),
                r.served_pixels.to_string(),
                r.avg_se.to_string(),
                r.demand_mbps.to_string(),
                r.required_mhz.to_string(),
                r.threshold_mhz.to_string(),
                r.capacity_mbps.to_string(),
            ]
        })
        .collect();
    table.push(vec![
        "total".into(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        totals.n_channels.to_string(),
        String::new(),
        totals.served_pixels.to_string(),
        String::new(),
        totals.demand_mbps.to_string(),
        totals.required_mhz.to_string(),
        totals.threshold_mhz.to_string(),
        totals.capacity_mbps.to_string(),
    ]);
    out.csv(
        "bandwidth_table.csv",
        &[
            "cell",
            "site",
            "x_m",
            "y_m",
            "channels",
            "n_channels",
            "power_dbm",
            "served_pixels",
            "avg_se",
            "demand_mbps",
            "required_mhz",
            "threshold_mhz",
            "capacity_mbps",
        ],
        table,
    )?;

    out.csv(
        "monitor_log.csv",
        &[
            "t",
            "cell",
            "busy_hour",
            "required_mhz",
            "threshold_mhz",
            "violation",
            "counter",
            "fired",
        ],
        report.monitor_log.iter().map(|r| {
            vec![
                r.t.to_string(),
                r.cell.to_string(),
                r.busy_hour.to_string(),
                r.required.to_string(),
                r.threshold_mhz.to_string(),
                r.violation.to_string(),
                r.counter.to_string(),
                r.fired.to_string(),
            ]
        }),
    )?;

    let mut ledger_rows = Vec::new();
    let mut changelog = format!("# planning changelog, method {}\n", report.method);
    for plan in &report.plans {
        let _ = writeln!(
            changelog,
            "\nt={} busy hour {}: {} -> {} cells{}",
            plan.t,
            plan.busy_hour,
            plan.cells_before,
            plan.cells_after,
            if plan.saturated {
                ", candidate sites exhausted"
            } else {
                ""
            }
        );
        for (i, e) in plan.ledger.entries().iter().enumerate() {
            let _ = writeln!(changelog, "  {}. {} [{}]", i + 1, describe(&e.action, grid), e.phase);
            let (cell, channel, site, from) = match e.action {
                PlanningAction::AddChannel { cell, channel } | PlanningAction::RemoveChannel { cell, channel } => {
                    (cell.to_string(), channel.to_string(), None, String::new())
                }
                PlanningAction::AddCell { cell, site, channel } => {
                    (cell.to_string(), channel.to_string(), Some(site), String::new())
                }
                PlanningAction::RemoveCell { cell } => (cell.to_string(), String::new(), None, String::new()),
                PlanningAction::Relocate {
                    from,
                    to,
                    site,
                    channel,
                } => (to.to_string(), channel.to_string(), Some(site), from.to_string()),
            };
            let (site_s, x, y) = match site {
                Some(s) => {
                    let p = grid.position(s);
                    (s.to_string(), p.x.to_string(), p.y.to_string())
                }
                None => Default::default(),
            };
            ledger_rows.push(vec![
                plan.t.to_string(),
                plan.busy_hour.to_string(),
                i.to_string(),
                e.phase.to_string(),
                e.action.kind().to_string(),
                cell,
                channel,
                site_s,
                x,
                y,
                from,
            ]);
        }
    }
    out.csv(
        "ledger.csv",
        &[
            "t",
            "busy_hour",
            "index",
            "phase",
            "action",
            "cell",
            "channel",
            "site",
            "x_m",
            "y_m",
            "from_cell",
        ],
        ledger_rows,
    )?;
    out.text("changelog.txt", &changelog)?;
    out.text(
        "layout.json",
        &LayoutFragment::from_state(&report.final_state).to_json(),
    )?;

    out.csv(
        "notifications.csv",
        &["t", "tenant", "demand_mbps", "contracted_mbps"],
        report.notices.iter().map(|n| {
            vec![
                n.t.to_string(),
                n.tenant_id.clone(),
                n.demand_mbps.to_string(),
                n.contracted_mbps.to_string(),
            ]
        }),
    )?;

    if let Some(tr) = &report.translation {
        write_specs(&out, tr)?;
    }

    for (name, values) in &report.rasters {
        write_raster_csv(&out.path(&format!("{name}.csv")), grid, values)?;
        write_pgm(&out.path(&format!("{name}.pgm")), grid, values)?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "method: {}", report.method);
    let _ = writeln!(summary, "horizon: {}", report.horizon);
    let _ = writeln!(summary, "planner invocations: {}", report.plans.len());
    let _ = writeln!(
        summary,
        "cells: {} -> {}",
        report.initial.len(),
        report.final_state.len()
    );
    let _ = writeln!(
        summary,
        "channels: {} -> {}",
        report.initial.total_channels(),
        report.final_state.total_channels()
    );
    let _ = writeln!(summary, "evaluated at step: {}", report.eval_step);
    let _ = writeln!(summary, "new tenant map known: {}", report.actual_known);
    let _ = writeln!(summary, "total required bandwidth (MHz): {}", totals.required_mhz);
    let _ = writeln!(summary, "total capped demand (Mbps): {}", totals.demand_mbps);
    let _ = writeln!(summary, "SLA notifications: {}", report.notices.len());
    out.text("summary.txt", &summary)
}
