//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{cell, oracle_sinr_db, random_instance};
use scplan::experiment::arrival_loads;
use scplan::monitor::{check_trigger, DemandHistory, MonitorParams, Requirement};
use scplan::planner::{capacity_conforms, plan, select_channel, PlannerParams, PlanningProblem};
use scplan::radio::{
    configure_powers, serving_assignment, sinr, spectral_efficiency, PropagationParams, RadioSnapshot,
};
use scplan::scenario::{CellId, Channel, GridSpec, NetworkState, Point, TenantProfile};
use scplan::sla::{busy_hour_spec, translate_pixel_level, translate_sc_level, Distribution};
use scplan::{bundled_scenario, emit_report, run_experiment, Execution, ExperimentConfig, Method, Scenario};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn bundled() -> Scenario {
    bundled_scenario().resolve().expect("bundled scenario resolves")
}

fn conservation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let radio = PropagationParams::default();
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let side = rng.gen_range(4..=12) as f64 * 3.0;
        let grid = GridSpec::new(side, side, 3.0).unwrap();
        let n_cells = rng.gen_range(1..=5).min(grid.len());
        let sites = rand::seq::index::sample(&mut rng, grid.len(), n_cells).into_vec();
        let cells = sites
            .iter()
            .enumerate()
            .map(|(i, &s)| cell(i as u32 + 1, s, &[0]))
            .collect();
        let state = NetworkState::new(0, cells);
        let serving = serving_assignment(&state, &grid, &radio).unwrap();
        let profile = TenantProfile {
            id: "m".into(),
            contracted_capacity_mbps: rng.gen_range(1.0..500.0),
            temporal_profile: vec![1.0],
        };
        let a = busy_hour_spec(&profile, rng.gen_range(0.05..=1.0)).unwrap().a_busy_mbps;
        let distribution = if rng.gen_bool(0.5) {
            Distribution::Uniform
        } else {
            Distribution::Correlated
        };
        let specs = if rng.gen_bool(0.5) {
            let demands: Vec<f64> = (0..n_cells).map(|_| rng.gen_range(0.1..50.0)).collect();
            translate_sc_level(a, &state, distribution, &demands).unwrap()
        } else {
            let demands: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
            translate_pixel_level(a, &grid, distribution, &demands, &serving).unwrap()
        };
        let rel = (specs.cell_total() - a).abs() / a;
        worst = worst.max(rel);
        check(rel <= 1e-9, || {
            format!("case {case}: specs sum to {} for A = {a}", specs.cell_total())
        })?;
    }
    within_time(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("200 cases, worst relative error {worst:.1e}"))
}

fn correlated_sc_reproduction() -> Outcome {
    let cells = (0..4).map(|i| cell(i + 1, i as usize, &[0])).collect();
    let state = NetworkState::new(0, cells);
    let demands = [22.5, 27.9, 19.3, 16.6];
    // 100 * D_i / 86.3, evaluated by hand.
    let expected = [26.07, 32.33, 22.36, 19.24];
    let corr = translate_sc_level(100.0, &state, Distribution::Correlated, &demands).map_err(|e| e.to_string())?;
    for ((_, got), want) in corr.cells.iter().zip(expected) {
        check((got - want).abs() <= 0.01, || {
            format!("correlated spec {got} vs {want}")
        })?;
    }
    let uni = translate_sc_level(100.0, &state, Distribution::Uniform, &demands).map_err(|e| e.to_string())?;
    for (_, got) in &uni.cells {
        check(*got == 25.0, || format!("uniform spec {got} vs 25"))?;
    }
    let shown: Vec<String> = corr.cells.iter().map(|(_, v)| format!("{v:.2}")).collect();
    Ok(format!("correlated [{}], uniform 25 each", shown.join(", ")))
}

fn se_function() -> Outcome {
    let p = PropagationParams::default();
    let low = spectral_efficiency(-20.0, &p);
    let mid = spectral_efficiency(9.0, &p);
    let high = spectral_efficiency(30.0, &p);
    // 0.6 * log2(1 + 10^0.9)
    let mid_ref = 0.6 * (1.0 + 10f64.powf(0.9)).log2();
    check(low == 0.0, || format!("SE(-20 dB) = {low}"))?;
    check((mid - 1.897).abs() <= 0.001, || format!("SE(9 dB) = {mid}"))?;
    check((mid - mid_ref).abs() < 1e-12, || {
        format!("SE(9 dB) = {mid}, reference {mid_ref}")
    })?;
    check(high == 4.4, || format!("SE(30 dB) = {high}"))?;
    Ok(format!("SE(-20)={low}, SE(9)={mid:.4}, SE(30)={high}"))
}

/// Closed-form symmetric two-cell power: `p*a / (p*b + n) = target`, where
/// `a` and `b` are the serving and interfering path gains at the edge point.
fn unclamped_power_dbm(isd: f64, p: &PropagationParams) -> Option<f64> {
    let range = p.edge_fraction * isd;
    let gain = |d: f64| 10f64.powf((p.antenna_gain_db - common::oracle_path_loss(d, p.carrier_ghz)) / 10.0);
    let (a, b) = (gain(range), gain(isd + range));
    let t = 10f64.powf(p.edge_sinr_target_db / 10.0);
    let n = 10f64.powf((-174.0 + 10.0 * (p.channel_bandwidth_mhz * 1e6).log10() + p.noise_figure_db) / 10.0);
    let denom = a - t * b;
    (denom > 0.0).then(|| 10.0 * (t * n / denom).log10())
}

fn power_config() -> Outcome {
    let start = Instant::now();
    let p = PropagationParams::default();
    let grid = GridSpec::new(400.0, 10.0, 1.0).unwrap();
    let mut notes = Vec::new();
    let mut branches = (0, 0);
    for isd in [100usize, 40, 60, 80, 120] {
        let state = NetworkState::new(
            0,
            vec![
                cell(1, grid.index(100, 5), &[0]),
                cell(2, grid.index(100 + isd, 5), &[0]),
            ],
        );
        let powers = configure_powers(&state, &grid, &p);
        let mut configured = state.clone();
        for (c, pw) in configured.cells.iter_mut().zip(&powers) {
            c.power_dbm = *pw;
        }
        let range = p.edge_fraction * isd as f64;
        let centers: Vec<Point> = configured.cells.iter().map(|c| grid.position(c.site)).collect();
        let edges = [
            Point::new(centers[0].x - range, centers[0].y),
            Point::new(centers[1].x + range, centers[1].y),
        ];
        let measured: Vec<f64> = (0..2)
            .map(|i| oracle_sinr_db(edges[i], &configured.cells[i], Channel(0), &configured.cells, &grid, &p))
            .collect();
        let want = unclamped_power_dbm(isd as f64, &p);
        match want {
            Some(w) if (p.power_min_dbm..=p.power_max_dbm).contains(&w) => {
                branches.0 += 1;
                for (i, s) in measured.iter().enumerate() {
                    check((s - p.edge_sinr_target_db).abs() <= 0.1, || {
                        format!("ISD {isd}: cell {} edge SINR {s:.3} dB at {:.2} dBm", i + 1, powers[i])
                    })?;
                }
            }
            _ => {
                branches.1 += 1;
                let bound = match want {
                    Some(w) if w < p.power_min_dbm => p.power_min_dbm,
                    _ => p.power_max_dbm,
                };
                for pw in &powers {
                    check(*pw == bound, || {
                        format!("ISD {isd}: power {pw} dBm, expected clamp at {bound}")
                    })?;
                }
            }
        }
        if isd == 100 {
            notes.push(format!(
                "ISD 100: {:.2} dBm, edge SINR {:.2} dB (unclamped {})",
                powers[0],
                measured[0],
                want.map_or("infeasible".into(), |w| format!("{w:.2} dBm"))
            ));
        }
    }
    within_time(start.elapsed(), Duration::from_secs(1))?;
    check(branches.0 > 0 && branches.1 > 0, || {
        format!("branches exercised {branches:?}")
    })?;
    Ok(format!(
        "{}; {} unclamped and {} clamped layouts",
        notes.join(""),
        branches.0,
        branches.1
    ))
}

/// Feeds one value per step and returns the steps at which the trigger fired.
fn fire_steps(series: &[f64], l: usize) -> Vec<usize> {
    let params = MonitorParams {
        alpha: 0.9,
        window_t: 1,
        consecutive_l: l,
    };
    let mut state = NetworkState::new(0, vec![cell(1, 0, &[0])]);
    let mut history = DemandHistory::new(params.window_t);
    let mut fired = Vec::new();
    for (t, v) in series.iter().enumerate() {
        state.t = t;
        history.push(CellId(1), t, Requirement::Mhz(*v));
        if check_trigger(&mut history, &state, &params, 20.0).unwrap().fire {
            fired.push(t);
        }
    }
    fired
}

fn trigger_semantics() -> Outcome {
    let threshold = 0.9 * 20.0;
    for l in 1..=5 {
        let mut almost = Vec::new();
        for _ in 0..3 {
            almost.extend(std::iter::repeat_n(19.0, l - 1));
            almost.push(17.0);
        }
        let f = fire_steps(&almost, l);
        check(f.is_empty(), || {
            format!("L={l}: {} violations in a row fired at {f:?}", l - 1)
        })?;
        let mut exact = vec![17.0];
        exact.extend(std::iter::repeat_n(19.0, l));
        let f = fire_steps(&exact, l);
        check(f == vec![l], || format!("L={l}: fired at {f:?}, expected [{l}]"))?;
    }
    let f = fire_steps(&[threshold; 10], 1);
    check(f.is_empty(), || format!("boundary value fired at {f:?}"))?;
    Ok("L = 1..5; boundary 18 MHz does not violate".into())
}

fn planner_postconditions() -> Outcome {
    let s = bundled();
    let start = Instant::now();
    let mut notes = Vec::new();
    for method in Method::ALL {
        let cfg = ExperimentConfig {
            method,
            ..Default::default()
        };
        let (_, loads) = arrival_loads(&s, &cfg).map_err(|e| e.to_string())?;
        let problem = PlanningProblem {
            grid: &s.grid,
            candidates: &s.candidates,
            radio: &s.radio,
            loads: &loads,
        };
        let t0 = Instant::now();
        let out = plan(&s.initial, &problem, &s.planner).map_err(|e| format!("{method}: {e}"))?;
        let b = s.radio.channel_bandwidth_mhz;
        check(capacity_conforms(&out.state, &out.evaluations, &s.planner, b), || {
            format!("{method}: a cell is over threshold below K_max")
        })?;
        check(out.state.len() <= s.planner.n_max_sc, || {
            format!("{method}: {} cells > N_max", out.state.len())
        })?;
        within_time(t0.elapsed(), Duration::from_secs(60))?;
        notes.push(format!("{method} {}c", out.state.len()));
    }
    Ok(format!("{} in {:.2?}", notes.join(", "), start.elapsed()))
}

fn table_relations() -> Outcome {
    let s = bundled();
    let mut rows = BTreeMap::new();
    for method in Method::ALL {
        let cfg = ExperimentConfig {
            method,
            ..Default::default()
        };
        let r = run_experiment(&s, &cfg).map_err(|e| e.to_string())?;
        rows.insert(method, (r.cell_count(), r.total_required_mhz()));
    }
    let (oc, ot) = rows[&Method::Oracle];
    let shown: Vec<String> = rows.iter().map(|(m, (c, t))| format!("{m} {c}c/{t:.1}")).collect();
    let shown = shown.join(", ");
    for (m, (c, _)) in &rows {
        check(oc <= *c, || format!("(a) oracle {oc} cells > {m} {c} cells; {shown}"))?;
    }
    let (pc, pt) = rows[&Method::CorrPx];
    check((pt - ot).abs() <= 0.1 * ot, || {
        format!("(b) corr-px {pt:.2} vs oracle {ot:.2} MHz; {shown}")
    })?;
    let (uc, _) = rows[&Method::UniformPx];
    check(uc > pc, || {
        format!("(c) uniform-px {uc} cells vs corr-px {pc}; {shown}")
    })?;
    Ok(format!("{shown}; corr-px gap {:.1}%", 100.0 * (pt - ot).abs() / ot))
}

fn brute_force_channel(target: CellId, state: &NetworkState, grid: &GridSpec, k: u16) -> Option<Channel> {
    let me = state.cell(target).unwrap();
    let here = grid.position(me.site);
    let mut options: Vec<(f64, u16)> = Vec::new();
    for ch in 0..k {
        if me.channels.contains(Channel(ch)) {
            continue;
        }
        let mut nearest = f64::INFINITY;
        for other in &state.cells {
            if other.id != target && other.channels.contains(Channel(ch)) {
                nearest = nearest.min(here.distance(grid.position(other.site)));
            }
        }
        options.push((nearest, ch));
    }
    options.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    options.first().map(|o| Channel(o.1))
}

fn oracles() -> Outcome {
    let p = PropagationParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = GridSpec::new(201.0, 201.0, 3.0).unwrap();
    for case in 0..100 {
        let n = rng.gen_range(5..=10);
        let sites = rand::seq::index::sample(&mut rng, grid.len(), n).into_vec();
        let cells = sites
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let chans: Vec<u16> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..4)).collect();
                cell(i as u32 + 1, s, &chans)
            })
            .collect();
        let state = NetworkState::new(0, cells);
        let target = state.cells[rng.gen_range(0..n)].id;
        let got = select_channel(target, &state, &grid, &p).ok();
        let want = brute_force_channel(target, &state, &grid, p.num_channels as u16);
        check(got == want, || {
            format!("case {case}: select_channel {got:?}, brute force {want:?}")
        })?;
    }

    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let side = rng.gen_range(2..=10);
        let res = rng.gen_range(1.0..8.0);
        let grid = GridSpec::new(side as f64 * res, side as f64 * res, res).unwrap();
        let n = rng.gen_range(1..=3).min(grid.len());
        let sites = rand::seq::index::sample(&mut rng, grid.len(), n).into_vec();
        let cells = sites
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut c = cell(i as u32 + 1, s, &[rng.gen_range(0..2), rng.gen_range(0..2)]);
                c.power_dbm = rng.gen_range(10.0..=24.0);
                c
            })
            .collect();
        let state = NetworkState::new(0, cells);
        let snap = RadioSnapshot::compute(&state, &grid, &p, Execution::Sequential).unwrap();
        for u in 0..grid.len() {
            let at = grid.position(u);
            let rx = |c: &scplan::scenario::SmallCell| {
                let s = grid.position(c.site);
                c.power_dbm
                    - common::oracle_path_loss(((s.x - at.x).powi(2) + (s.y - at.y).powi(2)).sqrt(), p.carrier_ghz)
            };
            let mut best = &state.cells[0];
            for c in &state.cells[1..] {
                if rx(c) > rx(best) {
                    best = c;
                }
            }
            for ch in best.channels.iter() {
                let want = oracle_sinr_db(at, best, ch, &state.cells, &grid, &p);
                let got = sinr(u, ch, &state, &grid, &p).map_err(|e| e.to_string())?;
                let snap_got = snap.sinr_db(u, ch).unwrap_or(f64::NAN);
                let err = (got - want).abs().max((snap_got - want).abs());
                worst = worst.max(err);
                check(err <= 1e-9, || {
                    format!("case {case} pixel {u} {ch}: sinr {got}, snapshot {snap_got}, oracle {want}")
                })?;
            }
        }
    }
    Ok(format!("100 channel instances agree; SINR worst error {worst:.1e} dB"))
}

fn ledger_replay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut actions = 0;
    let mut compressed = 0;
    for run in 0..100 {
        let inst = random_instance(&mut rng);
        let problem = PlanningProblem {
            grid: &inst.grid,
            candidates: &inst.candidates,
            radio: &inst.radio,
            loads: &inst.loads,
        };
        let params = PlannerParams {
            n_max_sc: rng.gen_range(3..=10),
            ..Default::default()
        };
        let out = plan(&inst.initial, &problem, &params).map_err(|e| format!("run {run}: {e}"))?;
        actions += out.raw_ledger.len();
        compressed += out.ledger.len();
        for (name, ledger) in [("raw", &out.raw_ledger), ("compressed", &out.ledger)] {
            let replayed = ledger
                .replay(&inst.initial, &inst.grid, &inst.radio)
                .map_err(|e| format!("run {run} {name}: {e}"))?;
            check(replayed.cells == out.state.cells, || {
                format!("run {run}: {name} replay differs")
            })?;
        }
    }
    Ok(format!("100 runs, {actions} raw actions compressed to {compressed}"))
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let s = bundled();
    let cfg = ExperimentConfig::default();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let r = run_experiment(&s, &cfg).map_err(|e| e.to_string())?;
        emit_report(&r, dir).map_err(|e| e.to_string())?;
    }
    let (fa, fb) = (read_dir_bytes(&a), read_dir_bytes(&b));
    check(fa.keys().eq(fb.keys()), || "file sets differ".into())?;
    for (name, bytes) in &fa {
        check(fb[name] == *bytes, || format!("{name} differs"))?;
    }
    Ok(format!("{} files identical", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("conservation", conservation),
        ("correlated SC-level reproduction", correlated_sc_reproduction),
        ("SE function", se_function),
        ("power auto-config", power_config),
        ("trigger semantics", trigger_semantics),
        ("planner post-conditions", planner_postconditions),
        ("qualitative method relations", table_relations),
        ("oracle equivalence", oracles),
        ("ledger replay", ledger_replay),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
