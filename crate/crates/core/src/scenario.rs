//! Geographic grid, candidate sites, tenants and their traffic maps, and the
//! deployed network layout.
//!
//! Pixel-level traffic is the single source of truth. Every cell-level
//! demand figure is obtained by summing pixels over a [`ServingMap`].

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular area sampled at a fixed resolution.
///
/// Pixels are indexed row-major (`u = iy * nx + ix`) with `iy = 0` at `y = 0`.
/// A pixel's position is the center of its square, clamped to the area extent
/// when the last row or column overhangs it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub resolution_m: f64,
}

impl GridSpec {
    pub fn new(width_m: f64, height_m: f64, resolution_m: f64) -> Result<Self> {
        let grid = GridSpec {
            width_m,
            height_m,
            resolution_m,
        };
        let problems = grid.violations();
        if problems.is_empty() {
            Ok(grid)
        } else {
            Err(Error::Invariants(problems))
        }
    }

    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.resolution_m > 0.0) {
            out.push(format!(
                "GridSpec.resolution_positive: resolution_m = {}",
                self.resolution_m
            ));
        }
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            out.push(format!(
                "GridSpec.extent_positive: {} x {} m",
                self.width_m, self.height_m
            ));
        }
        out
    }

    fn axis_len(extent: f64, resolution: f64) -> usize {
        // Guard against 30.0 / 0.1 = 300.00000000000006 rounding up a pixel.
        ((extent / resolution) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn nx(&self) -> usize {
        Self::axis_len(self.width_m, self.resolution_m)
    }

    pub fn ny(&self) -> usize {
        Self::axis_len(self.height_m, self.resolution_m)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx() + ix
    }

    pub fn coords(&self, u: usize) -> (usize, usize) {
        let nx = self.nx();
        (u % nx, u / nx)
    }

    pub fn position(&self, u: usize) -> Point {
        let (ix, iy) = self.coords(u);
        Point {
            x: ((ix as f64 + 0.5) * self.resolution_m).min(self.width_m),
            y: ((iy as f64 + 0.5) * self.resolution_m).min(self.height_m),
        }
    }

    /// Pixel whose center is nearest to `p` (clamped to the grid).
    pub fn pixel_at(&self, p: Point) -> usize {
        let clamp = |v: f64, n: usize| ((v / self.resolution_m).floor().max(0.0) as usize).min(n - 1);
        self.index(clamp(p.x, self.nx()), clamp(p.y, self.ny()))
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.len()).map(|u| self.position(u)).collect()
    }
}

/// The pixels at which a small cell may be deployed, in ascending index order.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSiteSet {
    sites: Vec<usize>,
    pub seed: Option<u64>,
}

impl CandidateSiteSet {
    /// Builds a set from an explicit list. Duplicates and out-of-range pixels
    /// are rejected.
    pub fn from_pixels(grid: &GridSpec, mut sites: Vec<usize>) -> Result<Self> {
        let mut problems = Vec::new();
        if let Some(&bad) = sites.iter().find(|&&u| u >= grid.len()) {
            problems.push(format!(
                "CandidateSiteSet.valid_index: pixel {bad} outside grid of {} pixels",
                grid.len()
            ));
        }
        sites.sort_unstable();
        if let Some(w) = sites.windows(2).find(|w| w[0] == w[1]) {
            problems.push(format!("CandidateSiteSet.no_duplicates: pixel {}", w[0]));
        }
        if sites.is_empty() {
            return Err(Error::NoCandidateSites);
        }
        if !problems.is_empty() {
            return Err(Error::Invariants(problems));
        }
        Ok(CandidateSiteSet { sites, seed: None })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, pixel: usize) -> bool {
        self.sites.binary_search(&pixel).is_ok()
    }
}

/// Draws `round(fraction * |U|)` distinct pixels uniformly without
/// replacement. The result depends only on `(grid, fraction, seed)`.
pub fn select_candidate_sites(grid: &GridSpec, fraction: f64, seed: u64) -> Result<CandidateSiteSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "candidate fraction {fraction} outside (0, 1]"
        )));
    }
    let total = grid.len();
    let count = (fraction * total as f64).round() as usize;
    if count == 0 {
        return Err(Error::NoCandidateSites);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites = rand::seq::index::sample(&mut rng, total, count).into_vec();
    sites.sort_unstable();
    Ok(CandidateSiteSet {
        sites,
        seed: Some(seed),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TenantProfile {
    pub id: String,
    pub contracted_capacity_mbps: f64,
    /// Per-step weights, peak exactly 1. Indexed modulo its length, so a
    /// 24-entry profile repeats daily over longer horizons.
    pub temporal_profile: Vec<f64>,
}

impl TenantProfile {
    pub fn weight(&self, t: usize) -> f64 {
        if self.temporal_profile.is_empty() {
            1.0
        } else {
            self.temporal_profile[t % self.temporal_profile.len()]
        }
    }

    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let id = &self.id;
        if !(self.contracted_capacity_mbps >= 0.0) {
            out.push(format!(
                "TenantProfile.capacity_nonnegative: tenant {id} has {}",
                self.contracted_capacity_mbps
            ));
        }
        if self.temporal_profile.is_empty() {
            out.push(format!("TenantProfile.temporal_nonempty: tenant {id}"));
        } else {
            if self.temporal_profile.iter().any(|w| !(0.0..=1.0).contains(w)) {
                out.push(format!(
                    "TenantProfile.temporal_range: tenant {id} has a weight outside [0,1]"
                ));
            }
            let peak = self.temporal_profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if peak != 1.0 {
                out.push(format!("TenantProfile.temporal_peak_one: tenant {id} peaks at {peak}"));
            }
        }
        out
    }
}

/// Gaussian demand bump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub x_m: f64,
    pub y_m: f64,
    pub sigma_m: f64,
    pub peak_mbps: f64,
}

/// Busy-hour spatial demand: a uniform floor plus Gaussian hotspots, per pixel.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialDemand {
    #[serde(default)]
    pub floor_mbps: f64,
    #[serde(default)]
    pub hotspots: Vec<Hotspot>,
}

impl SpatialDemand {
    pub fn rasterize(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.len())
            .map(|u| {
                let p = grid.position(u);
                let bumps: f64 = self
                    .hotspots
                    .iter()
                    .map(|h| {
                        let r2 = (p.x - h.x_m).powi(2) + (p.y - h.y_m).powi(2);
                        h.peak_mbps * (-r2 / (2.0 * h.sigma_m * h.sigma_m)).exp()
                    })
                    .sum();
                self.floor_mbps + bumps
            })
            .collect()
    }

    pub(crate) fn violations(&self, owner: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.floor_mbps >= 0.0) {
            out.push(format!(
                "TrafficMap.nonnegative: tenant {owner} floor {}",
                self.floor_mbps
            ));
        }
        for h in &self.hotspots {
            if !(h.peak_mbps >= 0.0) || !(h.sigma_m > 0.0) {
                out.push(format!(
                    "TrafficMap.nonnegative: tenant {owner} hotspot at ({}, {}) has peak {} sigma {}",
                    h.x_m, h.y_m, h.peak_mbps, h.sigma_m
                ));
            }
        }
        out
    }
}

/// Per-tenant, per-step pixel demand `d_{u,m}^(t) = w_m(t) * s_{u,m}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficMap {
    tenants: Vec<TenantProfile>,
    spatial: Vec<Vec<f64>>,
    horizon: usize,
    pixels: usize,
}

impl TrafficMap {
    pub fn new(pixels: usize, horizon: usize) -> Self {
        TrafficMap {
            tenants: Vec::new(),
            spatial: Vec::new(),
            horizon,
            pixels,
        }
    }

    /// Adds a tenant with its busy-hour (weight 1) pixel map.
    pub fn add_tenant(&mut self, profile: TenantProfile, busy_map: Vec<f64>) -> Result<()> {
        if busy_map.len() != self.pixels {
            return Err(Error::InvalidParameter(format!(
                "traffic map for tenant {} has {} pixels, grid has {}",
                profile.id,
                busy_map.len(),
                self.pixels
            )));
        }
        if busy_map.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Invariants(vec![format!(
                "TrafficMap.nonnegative: tenant {}",
                profile.id
            )]));
        }
        self.tenants.push(profile);
        self.spatial.push(busy_map);
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn tenants(&self) -> &[TenantProfile] {
        &self.tenants
    }

    pub fn tenant_index(&self, id: &str) -> Option<usize> {
        self.tenants.iter().position(|t| t.id == id)
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t >= self.horizon {
            Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            })
        } else {
            Ok(())
        }
    }

    /// A tenant's pixel map at temporal weight 1.
    pub fn busy_map(&self, tenant: usize) -> &[f64] {
        &self.spatial[tenant]
    }

    pub fn value(&self, tenant: usize, u: usize, t: usize) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.tenants[tenant].weight(t) * self.spatial[tenant][u])
    }

    /// Dense map of one tenant at step `t`.
    pub fn tenant_map(&self, tenant: usize, t: usize) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let w = self.tenants[tenant].weight(t);
        Ok(self.spatial[tenant].iter().map(|v| w * v).collect())
    }

    /// `d_u^(t)` summed over all tenants, for every pixel.
    pub fn total_map(&self, t: usize) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let mut out = vec![0.0; self.pixels];
        for (profile, map) in self.tenants.iter().zip(&self.spatial) {
            let w = profile.weight(t);
            for (o, v) in out.iter_mut().zip(map) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// `d_u^(t)`: demand of all tenants at pixel `u`.
pub fn pixel_total_demand(maps: &TrafficMap, u: usize, t: usize) -> Result<f64> {
    maps.check_time(t)?;
    let mut sum = 0.0;
    for m in 0..maps.tenants.len() {
        sum += maps.value(m, u, t)?;
    }
    Ok(sum)
}

/// `D_{i,m}^(t)`: demand of one tenant over the pixels served by `cell`.
pub fn cell_demand(maps: &TrafficMap, serving: &ServingMap, tenant: usize, cell: CellId, t: usize) -> Result<f64> {
    maps.check_time(t)?;
    let slot = serving.slot(cell).ok_or(Error::UnknownCell(cell))?;
    let w = maps.tenants[tenant].weight(t);
    let map = &maps.spatial[tenant];
    Ok(serving.members(slot).iter().map(|&u| w * map[u as usize]).sum())
}

/// `D_i^(t)`: demand of all tenants in `cell`.
pub fn aggregate_cell_demand(maps: &TrafficMap, serving: &ServingMap, cell: CellId, t: usize) -> Result<f64> {
    let mut sum = 0.0;
    for m in 0..maps.tenants.len() {
        sum += cell_demand(maps, serving, m, cell, t)?;
    }
    Ok(sum)
}

/// `D_i^(t)` for every deployed cell; empty when no cell is deployed.
pub fn aggregate_all_cells(maps: &TrafficMap, serving: &ServingMap, t: usize) -> Result<BTreeMap<CellId, f64>> {
    serving
        .cells()
        .iter()
        .map(|&id| Ok((id, aggregate_cell_demand(maps, serving, id, t)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SC{}", self.0)
    }
}

/// Zero-based channel index into the band `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Channel(pub u16);

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0 + 1)
    }
}

/// Set of channels held by a cell, as a bitmask over at most 64 channels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ChannelSet(u64);

impl ChannelSet {
    pub const MAX_CHANNELS: usize = 64;

    pub fn empty() -> Self {
        ChannelSet(0)
    }

    pub fn single(ch: Channel) -> Self {
        let mut s = ChannelSet(0);
        s.insert(ch);
        s
    }

    pub fn insert(&mut self, ch: Channel) -> bool {
        let had = self.contains(ch);
        self.0 |= 1 << ch.0;
        !had
    }

    pub fn remove(&mut self, ch: Channel) -> bool {
        let had = self.contains(ch);
        self.0 &= !(1 << ch.0);
        had
    }

    pub fn contains(&self, ch: Channel) -> bool {
        (ch.0 as usize) < Self::MAX_CHANNELS && self.0 & (1 << ch.0) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersects(&self, other: ChannelSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Channel> + '_ {
        let bits = self.0;
        (0..Self::MAX_CHANNELS as u16)
            .filter(move |i| bits & (1 << i) != 0)
            .map(Channel)
    }
}

impl FromIterator<Channel> for ChannelSet {
    fn from_iter<I: IntoIterator<Item = Channel>>(iter: I) -> Self {
        let mut s = ChannelSet::empty();
        for ch in iter {
            s.insert(ch);
        }
        s
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallCell {
    pub id: CellId,
    pub site: usize,
    pub channels: ChannelSet,
    pub power_dbm: f64,
    /// Excluded from power auto-configuration.
    pub fixed_power: bool,
}

/// Deployed layout `U_S` with per-cell channels `F_i` and powers `P_i`.
/// Cells are kept sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkState {
    pub t: usize,
    pub cells: Vec<SmallCell>,
}

impl NetworkState {
    pub fn new(t: usize, mut cells: Vec<SmallCell>) -> Self {
        cells.sort_by_key(|c| c.id);
        NetworkState { t, cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index_of(&self, id: CellId) -> Option<usize> {
        self.cells.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn cell(&self, id: CellId) -> Option<&SmallCell> {
        self.index_of(id).map(|i| &self.cells[i])
    }

    pub fn cell_mut(&mut self, id: CellId) -> Option<&mut SmallCell> {
        self.index_of(id).map(move |i| &mut self.cells[i])
    }

    pub fn next_id(&self) -> CellId {
        CellId(self.cells.iter().map(|c| c.id.0 + 1).max().unwrap_or(1))
    }

    pub fn occupies(&self, site: usize) -> bool {
        self.cells.iter().any(|c| c.site == site)
    }

    pub fn insert(&mut self, cell: SmallCell) {
        let at = self.cells.partition_point(|c| c.id < cell.id);
        self.cells.insert(at, cell);
    }

    pub fn remove(&mut self, id: CellId) -> Option<SmallCell> {
        self.index_of(id).map(|i| self.cells.remove(i))
    }

    pub fn total_channels(&self) -> usize {
        self.cells.iter().map(|c| c.channels.len()).sum()
    }

    /// Names every violated layout invariant.
    pub fn violations(
        &self,
        grid: &GridSpec,
        candidates: &CandidateSiteSet,
        num_channels: usize,
        k_max: usize,
        power_range: (f64, f64),
    ) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeMap::new();
        for c in &self.cells {
            if let Some(prev) = seen.insert(c.site, c.id) {
                out.push(format!(
                    "NetworkState.distinct_sites: {} and {} share pixel {}",
                    prev, c.id, c.site
                ));
            }
            if c.site >= grid.len() {
                out.push(format!(
                    "NetworkState.valid_site: {} at pixel {} outside grid",
                    c.id, c.site
                ));
            } else if !candidates.contains(c.site) {
                out.push(format!(
                    "NetworkState.site_in_candidates: {} at non-candidate pixel {}",
                    c.id, c.site
                ));
            }
            let n = c.channels.len();
            if n < 1 || n > k_max {
                out.push(format!(
                    "NetworkState.channel_count: {} holds {} channels (allowed 1..={})",
                    c.id, n, k_max
                ));
            }
            if let Some(ch) = c.channels.iter().find(|ch| ch.0 as usize >= num_channels) {
                out.push(format!(
                    "NetworkState.channel_in_band: {} holds {} but the band has {} channels",
                    c.id, ch, num_channels
                ));
            }
            if !(c.power_dbm >= power_range.0 && c.power_dbm <= power_range.1) {
                out.push(format!(
                    "NetworkState.power_range: {} at {} dBm outside [{}, {}]",
                    c.id, c.power_dbm, power_range.0, power_range.1
                ));
            }
        }
        out
    }
}

/// Assignment of every pixel to exactly one deployed cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ServingMap {
    cells: Vec<CellId>,
    assignment: Vec<u32>,
    members: Vec<Vec<u32>>,
}

impl ServingMap {
    /// `assignment[u]` is an index into `cells`.
    pub fn new(cells: Vec<CellId>, assignment: Vec<u32>) -> Self {
        let mut members = vec![Vec::new(); cells.len()];
        for (u, &slot) in assignment.iter().enumerate() {
            members[slot as usize].push(u as u32);
        }
        ServingMap {
            cells,
            assignment,
            members,
        }
    }

    /// A map with no deployed cells and no pixels.
    pub fn empty() -> Self {
        ServingMap::new(Vec::new(), Vec::new())
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn slot(&self, cell: CellId) -> Option<usize> {
        self.cells.iter().position(|&c| c == cell)
    }

    pub fn slot_of_pixel(&self, u: usize) -> usize {
        self.assignment[u] as usize
    }

    pub fn cell_of(&self, u: usize) -> CellId {
        self.cells[self.assignment[u] as usize]
    }

    pub fn members(&self, slot: usize) -> &[u32] {
        &self.members[slot]
    }

    pub fn pixels_of(&self, cell: CellId) -> Option<&[u32]> {
        self.slot(cell).map(|s| self.members(s))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Sums a pixel map per cell, in `cells()` order.
    pub fn aggregate(&self, pixel_values: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.iter().map(|&u| pixel_values[u as usize]).sum())
            .collect()
    }
}
