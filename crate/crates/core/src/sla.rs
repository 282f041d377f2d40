//! Translation of a tenant's contracted capacity into per-cell or per-pixel
//! planning specifications at the busy hour.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{CellId, GridSpec, NetworkState, ServingMap, TenantProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// Even split, used when the tenant's spatial demand is unknown.
    Uniform,
    /// Proportional to the demand already observed in the network.
    Correlated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Sc,
    Pixel,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Sc => "sc",
            Level::Pixel => "pixel",
        })
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Correlated => "correlated",
        })
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "correlated" | "corr" => Ok(Distribution::Correlated),
            other => Err(Error::InvalidParameter(format!("unknown distribution {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BusyHourSpec {
    pub tenant_id: String,
    pub a_busy_mbps: f64,
}

/// `A_m^(t_B) = Â_m * busy_weight`, where the weight is the tenant's temporal
/// profile at the network busy hour (pass 1.0 when unknown).
pub fn busy_hour_spec(tenant: &TenantProfile, busy_weight: f64) -> Result<BusyHourSpec> {
    if !(busy_weight > 0.0 && busy_weight <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "busy weight {busy_weight} outside (0, 1]"
        )));
    }
    Ok(BusyHourSpec {
        tenant_id: tenant.id.clone(),
        a_busy_mbps: tenant.contracted_capacity_mbps * busy_weight,
    })
}

/// Planning specifications of one tenant.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningSpecSet {
    pub level: Level,
    pub distribution: Distribution,
    pub a_busy_mbps: f64,
    /// `A_{m,i}` per deployed cell.
    pub cells: Vec<(CellId, f64)>,
    /// `A_{m,i,u}` per pixel, for pixel-level sets.
    pub pixels: Option<Vec<f64>>,
}

impl PlanningSpecSet {
    pub fn cell_total(&self) -> f64 {
        self.cells.iter().map(|(_, v)| v).sum()
    }

    pub fn cell_value(&self, id: CellId) -> Option<f64> {
        self.cells.iter().find(|(c, _)| *c == id).map(|(_, v)| *v)
    }
}

fn proportional(a_busy: f64, basis: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = basis.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoCorrelationBasis);
    }
    Ok(basis.iter().map(|d| a_busy * d / total).collect())
}

/// SC-level specs. `cell_demands[i]` is `D_i^(t_B)` for `state.cells[i]`.
pub fn translate_sc_level(
    a_busy: f64,
    state: &NetworkState,
    distribution: Distribution,
    cell_demands: &[f64],
) -> Result<PlanningSpecSet> {
    if state.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let values = match distribution {
        Distribution::Uniform => vec![a_busy / state.len() as f64; state.len()],
        Distribution::Correlated => {
            if cell_demands.len() != state.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} cell demands for {} cells",
                    cell_demands.len(),
                    state.len()
                )));
            }
            proportional(a_busy, cell_demands)?
        }
    };
    Ok(PlanningSpecSet {
        level: Level::Sc,
        distribution,
        a_busy_mbps: a_busy,
        cells: state.cells.iter().map(|c| c.id).zip(values).collect(),
        pixels: None,
    })
}

/// Pixel-level specs `A_{m,i,u}`, aggregated to cells through `serving`.
/// `pixel_demands[u]` is `d_u^(t_B)`, used by the correlated distribution.
pub fn translate_pixel_level(
    a_busy: f64,
    grid: &GridSpec,
    distribution: Distribution,
    pixel_demands: &[f64],
    serving: &ServingMap,
) -> Result<PlanningSpecSet> {
    let n = grid.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let pixels = match distribution {
        Distribution::Uniform => vec![a_busy / n as f64; n],
        Distribution::Correlated => {
            if pixel_demands.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "{} pixel demands for {} pixels",
                    pixel_demands.len(),
                    n
                )));
            }
            proportional(a_busy, pixel_demands)?
        }
    };
    Ok(PlanningSpecSet {
        level: Level::Pixel,
        distribution,
        a_busy_mbps: a_busy,
        cells: pixel_specs_to_cell(&pixels, serving),
        pixels: Some(pixels),
    })
}

/// `A_{m,i} = Σ_{u served by i} A_{m,i,u}`.
pub fn pixel_specs_to_cell(pixel_specs: &[f64], serving: &ServingMap) -> Vec<(CellId, f64)> {
    serving
        .cells()
        .iter()
        .copied()
        .zip(serving.aggregate(pixel_specs))
        .collect()
}

/// Spreads per-cell values evenly over each cell's served pixels.
///
/// Cell counters carry no information about where inside a cell the demand
/// sits, so an SC-level spec becomes a flat pixel map within each cell. The
/// pixel map sums to the same total and can be re-aggregated over any other
/// layout.
pub fn spread_over_cells(cells: &[(CellId, f64)], serving: &ServingMap) -> Result<Vec<f64>> {
    let mut out = vec![0.0; serving.len()];
    for &(id, value) in cells {
        let members = serving.pixels_of(id).ok_or(Error::UnknownCell(id))?;
        if members.is_empty() {
            continue;
        }
        let share = value / members.len() as f64;
        for &u in members {
            out[u as usize] = share;
        }
    }
    Ok(out)
}
