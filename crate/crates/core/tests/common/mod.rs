//! Instance generators and independent reference implementations shared by
//! the integration tests and the acceptance target.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use scplan::performance::{SpecSource, TenantLoad};
use scplan::radio::{apply_power_configuration, PropagationParams};
use scplan::scenario::{CandidateSiteSet, CellId, Channel, ChannelSet, GridSpec, NetworkState, Point, SmallCell};

pub fn cell(id: u32, site: usize, channels: &[u16]) -> SmallCell {
    let mut set = ChannelSet::empty();
    for &c in channels {
        set.insert(Channel(c));
    }
    SmallCell {
        id: CellId(id),
        site,
        channels: set,
        power_dbm: 24.0,
        fixed_power: false,
    }
}

/// Indoor-hotspot NLOS path loss, written out from the link budget.
pub fn oracle_path_loss(d: f64, carrier_ghz: f64) -> f64 {
    let d = if d < 1.0 { 1.0 } else { d };
    43.3 * d.log10() + 11.5 + 20.0 * carrier_ghz.log10()
}

/// SINR in dB at `at` for `serving` on `channel`, summing every other
/// co-channel cell as interference.
pub fn oracle_sinr_db(
    at: Point,
    serving: &SmallCell,
    channel: Channel,
    cells: &[SmallCell],
    grid: &GridSpec,
    p: &PropagationParams,
) -> f64 {
    let rx_mw = |c: &SmallCell| {
        let s = grid.position(c.site);
        let d = ((s.x - at.x).powi(2) + (s.y - at.y).powi(2)).sqrt();
        10f64.powf((c.power_dbm + p.antenna_gain_db - oracle_path_loss(d, p.carrier_ghz)) / 10.0)
    };
    let noise_dbm = -174.0 + 10.0 * (p.channel_bandwidth_mhz * 1e6).log10() + p.noise_figure_db;
    let interference: f64 = cells
        .iter()
        .filter(|c| c.id != serving.id && c.channels.contains(channel))
        .map(rx_mw)
        .sum();
    10.0 * (rx_mw(serving) / (interference + 10f64.powf(noise_dbm / 10.0))).log10()
}

/// Gaussian hotspots plus a floor, rasterized on `grid`.
pub fn hotspot_map(rng: &mut ChaCha8Rng, grid: &GridSpec, spots: usize, total_mbps: f64) -> Vec<f64> {
    let centers: Vec<(f64, f64, f64)> = (0..spots)
        .map(|_| {
            (
                rng.gen_range(0.0..grid.width_m),
                rng.gen_range(0.0..grid.height_m),
                rng.gen_range(4.0..15.0),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..grid.len())
        .map(|u| {
            let p = grid.position(u);
            0.02 + centers
                .iter()
                .map(|&(x, y, s)| (-((p.x - x).powi(2) + (p.y - y).powi(2)) / (2.0 * s * s)).exp())
                .sum::<f64>()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v * total_mbps / sum).collect()
}

/// A small planning instance: grid, candidate sites, a configured initial
/// layout and per-tenant loads.
pub struct Instance {
    pub grid: GridSpec,
    pub candidates: CandidateSiteSet,
    pub radio: PropagationParams,
    pub initial: NetworkState,
    pub loads: Vec<TenantLoad>,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let side = rng.gen_range(10..=16) as f64 * 5.0;
    let grid = GridSpec::new(side, side, 5.0).unwrap();
    let radio = PropagationParams::default();
    let n_sites = rng.gen_range(12..=24).min(grid.len());
    let sites = rand::seq::index::sample(rng, grid.len(), n_sites).into_vec();
    let candidates = CandidateSiteSet::from_pixels(&grid, sites.clone()).unwrap();
    let n_cells = rng.gen_range(1..=4);
    let cells = (0..n_cells)
        .map(|i| {
            let ch = rng.gen_range(0..radio.num_channels as u16);
            cell(i as u32 + 1, sites[i], &[ch])
        })
        .collect();
    let mut initial = NetworkState::new(0, cells);
    apply_power_configuration(&mut initial, &grid, &radio);
    let tenants = rng.gen_range(1..=2);
    let loads = (0..tenants)
        .map(|m| {
            let total = rng.gen_range(20.0..220.0);
            let spots = rng.gen_range(1..=3);
            let demand = hotspot_map(rng, &grid, spots, total);
            let cap = rng.gen_range(0.6..1.2);
            TenantLoad {
                tenant_id: format!("t{m}"),
                spec: SpecSource::Pixel(demand.iter().map(|v| v * cap).collect()),
                demand: if rng.gen_bool(0.7) { Some(demand) } else { None },
            }
        })
        .collect();
    Instance {
        grid,
        candidates,
        radio,
        initial,
        loads,
    }
}
