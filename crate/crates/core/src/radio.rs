//! Network performance model: path loss, power auto-configuration, serving
//! assignment, SINR, spectral efficiency and cell capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::scenario::{CellId, Channel, ChannelSet, GridSpec, NetworkState, Point, ServingMap, SmallCell};

/// Distances below this are clamped before taking the logarithm.
pub const MIN_DISTANCE_M: f64 = 1.0;

const POWER_TOLERANCE_DB: f64 = 0.01;
const POWER_MAX_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathLossVariant {
    Los,
    Nlos,
}

/// Indoor-hotspot link budget parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    pub carrier_ghz: f64,
    pub channel_bandwidth_mhz: f64,
    pub num_channels: usize,
    pub antenna_gain_db: f64,
    pub noise_figure_db: f64,
    pub thermal_noise_dbm_per_hz: f64,
    pub pathloss_variant: PathLossVariant,
    pub se_max_bps_hz: f64,
    pub se_impl_factor: f64,
    pub sinr_min_db: f64,
    pub power_min_dbm: f64,
    pub power_max_dbm: f64,
    pub edge_sinr_target_db: f64,
    pub edge_fraction: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            carrier_ghz: 5.0,
            channel_bandwidth_mhz: 20.0,
            num_channels: 4,
            antenna_gain_db: 2.0,
            noise_figure_db: 9.0,
            thermal_noise_dbm_per_hz: -174.0,
            pathloss_variant: PathLossVariant::Nlos,
            se_max_bps_hz: 4.4,
            se_impl_factor: 0.6,
            sinr_min_db: -10.0,
            power_min_dbm: 10.0,
            power_max_dbm: 24.0,
            edge_sinr_target_db: 9.0,
            edge_fraction: 3f64.sqrt() / 2.0,
        }
    }
}

impl PropagationParams {
    /// Noise power over one channel, in dBm.
    pub fn noise_dbm(&self) -> f64 {
        self.thermal_noise_dbm_per_hz + 10.0 * (self.channel_bandwidth_mhz * 1e6).log10() + self.noise_figure_db
    }

    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.channel_bandwidth_mhz > 0.0) {
            out.push(format!(
                "PropagationParams.bandwidth_positive: B = {}",
                self.channel_bandwidth_mhz
            ));
        }
        if self.num_channels < 1 || self.num_channels > ChannelSet::MAX_CHANNELS {
            out.push(format!("PropagationParams.channel_count: K = {}", self.num_channels));
        }
        if !(self.power_min_dbm <= self.power_max_dbm) {
            out.push(format!(
                "PropagationParams.power_order: min {} > max {}",
                self.power_min_dbm, self.power_max_dbm
            ));
        }
        if !(self.se_max_bps_hz > 0.0) {
            out.push(format!("PropagationParams.se_max_positive: {}", self.se_max_bps_hz));
        }
        if !(self.carrier_ghz > 0.0) {
            out.push(format!("PropagationParams.carrier_positive: {}", self.carrier_ghz));
        }
        out
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Indoor hotspot path loss in dB; `d` in meters, carrier in GHz.
pub fn path_loss(distance_m: f64, params: &PropagationParams) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    let carrier = 20.0 * params.carrier_ghz.log10();
    match params.pathloss_variant {
        PathLossVariant::Nlos => 43.3 * d.log10() + 11.5 + carrier,
        PathLossVariant::Los => 16.9 * d.log10() + 32.8 + carrier,
    }
}

pub fn received_power_at(cell: &SmallCell, grid: &GridSpec, at: Point, params: &PropagationParams) -> f64 {
    let d = grid.position(cell.site).distance(at);
    cell.power_dbm + params.antenna_gain_db - path_loss(d, params)
}

/// Received power from `cell` at the center of `pixel`, in dBm.
pub fn received_power(cell: &SmallCell, pixel: usize, grid: &GridSpec, params: &PropagationParams) -> f64 {
    received_power_at(cell, grid, grid.position(pixel), params)
}

/// Truncated Shannon mapping from SINR to spectral efficiency.
pub fn spectral_efficiency(sinr_db: f64, params: &PropagationParams) -> f64 {
    if sinr_db.is_nan() || sinr_db < params.sinr_min_db {
        return 0.0;
    }
    let linear = 10f64.powf(sinr_db / 10.0);
    (params.se_impl_factor * (1.0 + linear).log2()).min(params.se_max_bps_hz)
}

/// `C_i = |F_i| * B * SE_i`, in Mbps.
pub fn cell_capacity(channels: usize, avg_se: f64, params: &PropagationParams) -> f64 {
    channels as f64 * params.channel_bandwidth_mhz * avg_se
}

/// Index of the strongest cell at `at`; the lowest id wins ties.
fn strongest(state: &NetworkState, grid: &GridSpec, at: Point, params: &PropagationParams) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, cell) in state.cells.iter().enumerate() {
        let rx = received_power_at(cell, grid, at, params);
        if best.is_none_or(|(_, b)| rx > b) {
            best = Some((i, rx));
        }
    }
    best.map(|(i, _)| i)
}

/// Maps every pixel to the deployed cell with the highest received power.
pub fn serving_assignment(state: &NetworkState, grid: &GridSpec, params: &PropagationParams) -> Result<ServingMap> {
    if state.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let assignment = (0..grid.len())
        .map(|u| strongest(state, grid, grid.position(u), params).expect("non-empty network") as u32)
        .collect();
    Ok(ServingMap::new(state.cells.iter().map(|c| c.id).collect(), assignment))
}

/// SINR at an arbitrary point for the link from `serving` on `channel`,
/// with every other co-channel cell as interference.
pub fn sinr_at(
    at: Point,
    serving: CellId,
    channel: Channel,
    state: &NetworkState,
    grid: &GridSpec,
    params: &PropagationParams,
) -> Result<f64> {
    let cell = state.cell(serving).ok_or(Error::UnknownCell(serving))?;
    if !cell.channels.contains(channel) {
        return Err(Error::ChannelNotAllocated { cell: serving, channel });
    }
    let signal = dbm_to_mw(received_power_at(cell, grid, at, params));
    let interference: f64 = state
        .cells
        .iter()
        .filter(|c| c.id != serving && c.channels.contains(channel))
        .map(|c| dbm_to_mw(received_power_at(c, grid, at, params)))
        .sum();
    Ok(mw_to_dbm(signal / (interference + dbm_to_mw(params.noise_dbm()))))
}

/// SINR of `pixel` on `channel` of its serving cell, in dB.
pub fn sinr(
    pixel: usize,
    channel: Channel,
    state: &NetworkState,
    grid: &GridSpec,
    params: &PropagationParams,
) -> Result<f64> {
    let at = grid.position(pixel);
    let s = strongest(state, grid, at, params).ok_or(Error::EmptyNetwork)?;
    sinr_at(at, state.cells[s].id, channel, state, grid, params)
}

/// Point at `edge_fraction * ISD` from cell `i`, on the side facing away from
/// its nearest neighbour. `None` for a lone cell.
pub fn edge_point(state: &NetworkState, grid: &GridSpec, params: &PropagationParams, i: usize) -> Option<(Point, f64)> {
    let here = grid.position(state.cells[i].site);
    let mut nearest: Option<(Point, f64)> = None;
    for (j, other) in state.cells.iter().enumerate() {
        if j == i {
            continue;
        }
        let p = grid.position(other.site);
        let d = here.distance(p);
        if nearest.is_none_or(|(_, best)| d < best) {
            nearest = Some((p, d));
        }
    }
    let (neighbour, isd) = nearest?;
    let range = params.edge_fraction * isd;
    let (ux, uy) = if isd > 0.0 {
        ((here.x - neighbour.x) / isd, (here.y - neighbour.y) / isd)
    } else {
        (1.0, 0.0)
    };
    Some((Point::new(here.x + range * ux, here.y + range * uy), range))
}

/// Transmit powers that give every cell the target SINR at its edge point.
///
/// Each cell sees noise plus its single strongest co-channel interferer at
/// the interferer's current power. The coupled system is iterated (Jacobi)
/// from maximum power until no power moves by 0.01 dB or more, for at most 50
/// rounds, clamping to the allowed range each round. Fixed-power cells keep
/// their power. The result depends only on the layout.
pub fn configure_powers(state: &NetworkState, grid: &GridSpec, params: &PropagationParams) -> Vec<f64> {
    let cells = &state.cells;
    let mut power: Vec<f64> = cells
        .iter()
        .map(|c| {
            if c.fixed_power {
                c.power_dbm
            } else {
                params.power_max_dbm
            }
        })
        .collect();
    if cells.len() < 2 {
        return power;
    }
    let positions: Vec<Point> = cells.iter().map(|c| grid.position(c.site)).collect();
    let edges: Vec<(Point, f64)> = (0..cells.len())
        .map(|i| edge_point(state, grid, params, i).expect("at least two cells"))
        .collect();
    let noise_mw = dbm_to_mw(params.noise_dbm());

    for _ in 0..POWER_MAX_ITERATIONS {
        let next: Vec<f64> = (0..cells.len())
            .map(|i| {
                if cells[i].fixed_power {
                    return power[i];
                }
                let (edge, range) = edges[i];
                let strongest_interferer = (0..cells.len())
                    .filter(|&j| j != i && cells[j].channels.intersects(cells[i].channels))
                    .map(|j| power[j] + params.antenna_gain_db - path_loss(positions[j].distance(edge), params))
                    .fold(f64::NEG_INFINITY, f64::max);
                let interference_mw = if strongest_interferer.is_finite() {
                    dbm_to_mw(strongest_interferer)
                } else {
                    0.0
                };
                let required = params.edge_sinr_target_db + mw_to_dbm(interference_mw + noise_mw)
                    - params.antenna_gain_db
                    + path_loss(range, params);
                required.clamp(params.power_min_dbm, params.power_max_dbm)
            })
            .collect();
        let delta = next.iter().zip(&power).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        power = next;
        if delta < POWER_TOLERANCE_DB {
            break;
        }
    }
    power
}

/// Runs [`configure_powers`] and writes the result into the state.
pub fn apply_power_configuration(state: &mut NetworkState, grid: &GridSpec, params: &PropagationParams) {
    let powers = configure_powers(state, grid, params);
    for (cell, p) in state.cells.iter_mut().zip(powers) {
        cell.power_dbm = p;
    }
}

/// Radio conditions of one layout: serving map, received powers, serving-link
/// SINR per channel and per-pixel spectral efficiency.
#[derive(Clone, Debug)]
pub struct RadioSnapshot {
    serving: ServingMap,
    channels: Vec<ChannelSet>,
    num_channels: usize,
    n_cells: usize,
    rx_dbm: Vec<f64>,
    sinr_db: Vec<Option<f64>>,
    pixel_se: Vec<f64>,
}

struct RowResult {
    rx: Vec<f64>,
    serving: Vec<u32>,
    sinr: Vec<Option<f64>>,
    se: Vec<f64>,
}

impl RadioSnapshot {
    pub fn compute(state: &NetworkState, grid: &GridSpec, params: &PropagationParams, exec: Execution) -> Result<Self> {
        if state.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let n = state.len();
        let k = params.num_channels;
        let nx = grid.nx();
        let noise_mw = dbm_to_mw(params.noise_dbm());
        let sites: Vec<Point> = state.cells.iter().map(|c| grid.position(c.site)).collect();
        let eirp: Vec<f64> = state
            .cells
            .iter()
            .map(|c| c.power_dbm + params.antenna_gain_db)
            .collect();
        let channels: Vec<ChannelSet> = state.cells.iter().map(|c| c.channels).collect();

        let rows = exec.map(grid.ny(), |iy| {
            let mut row = RowResult {
                rx: Vec::with_capacity(nx * n),
                serving: Vec::with_capacity(nx),
                sinr: Vec::with_capacity(nx * k),
                se: Vec::with_capacity(nx),
            };
            let mut lin = vec![0.0; n];
            for ix in 0..nx {
                let at = grid.position(grid.index(ix, iy));
                let mut best = 0;
                for j in 0..n {
                    let rx = eirp[j] - path_loss(sites[j].distance(at), params);
                    row.rx.push(rx);
                    lin[j] = dbm_to_mw(rx);
                }
                let base = row.rx.len() - n;
                for j in 1..n {
                    if row.rx[base + j] > row.rx[base + best] {
                        best = j;
                    }
                }
                row.serving.push(best as u32);
                let mut se_sum = 0.0;
                for ch in 0..k {
                    let ch = Channel(ch as u16);
                    if !channels[best].contains(ch) {
                        row.sinr.push(None);
                        continue;
                    }
                    let interference: f64 = (0..n)
                        .filter(|&j| j != best && channels[j].contains(ch))
                        .map(|j| lin[j])
                        .sum();
                    let s = mw_to_dbm(lin[best] / (interference + noise_mw));
                    se_sum += spectral_efficiency(s, params);
                    row.sinr.push(Some(s));
                }
                let held = channels[best].len();
                row.se.push(if held == 0 { 0.0 } else { se_sum / held as f64 });
            }
            row
        });

        let mut rx_dbm = Vec::with_capacity(grid.len() * n);
        let mut assignment = Vec::with_capacity(grid.len());
        let mut sinr_db = Vec::with_capacity(grid.len() * k);
        let mut pixel_se = Vec::with_capacity(grid.len());
        for row in rows {
            rx_dbm.extend(row.rx);
            assignment.extend(row.serving);
            sinr_db.extend(row.sinr);
            pixel_se.extend(row.se);
        }
        Ok(RadioSnapshot {
            serving: ServingMap::new(state.cells.iter().map(|c| c.id).collect(), assignment),
            channels,
            num_channels: k,
            n_cells: n,
            rx_dbm,
            sinr_db,
            pixel_se,
        })
    }

    pub fn serving(&self) -> &ServingMap {
        &self.serving
    }

    pub fn rx_dbm(&self, pixel: usize, slot: usize) -> f64 {
        self.rx_dbm[pixel * self.n_cells + slot]
    }

    /// Serving-link SINR on `channel`; `None` if the serving cell lacks it.
    pub fn sinr_db(&self, pixel: usize, channel: Channel) -> Option<f64> {
        self.sinr_db
            .get(pixel * self.num_channels + channel.0 as usize)
            .copied()
            .flatten()
    }

    /// Best serving-link SINR over the serving cell's channels.
    pub fn best_sinr_db(&self, pixel: usize) -> f64 {
        self.sinr_db[pixel * self.num_channels..(pixel + 1) * self.num_channels]
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean spectral efficiency over the serving cell's channels.
    pub fn pixel_se(&self, pixel: usize) -> f64 {
        self.pixel_se[pixel]
    }

    pub fn channels(&self, slot: usize) -> ChannelSet {
        self.channels[slot]
    }

    /// Demand-weighted mean of pixel SE over the pixels served by `slot`.
    /// Falls back to uniform weights when the served demand is zero, and
    /// returns 0 for a cell that serves no pixel.
    pub fn average_se(&self, slot: usize, weights: &[f64]) -> f64 {
        let members = self.serving.members(slot);
        if members.is_empty() {
            return 0.0;
        }
        let total: f64 = members.iter().map(|&u| weights[u as usize]).sum();
        if total > 0.0 {
            members
                .iter()
                .map(|&u| weights[u as usize] * self.pixel_se[u as usize])
                .sum::<f64>()
                / total
        } else {
            members.iter().map(|&u| self.pixel_se[u as usize]).sum::<f64>() / members.len() as f64
        }
    }
}
