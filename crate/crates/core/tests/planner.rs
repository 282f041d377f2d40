mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_instance, Instance};
use scplan::planner::{
    channel_to_release, compress_ledger, plan, select_channel, select_site, ActionLedger, Phase, PlannerParams,
    PlanningAction, PlanningProblem,
};
use scplan::scenario::{Channel, NetworkState};
use scplan::Execution;

fn problem(inst: &Instance) -> PlanningProblem<'_> {
    PlanningProblem {
        grid: &inst.grid,
        candidates: &inst.candidates,
        radio: &inst.radio,
        loads: &inst.loads,
    }
}

/// A random ledger that is valid step by step from `initial`.
fn random_ledger(rng: &mut ChaCha8Rng, inst: &Instance, len: usize) -> ActionLedger {
    let k = inst.radio.num_channels as u16;
    let mut state = inst.initial.clone();
    let mut next_id = state.next_id();
    let mut ledger = ActionLedger::new();
    for _ in 0..len {
        let pick = rng.gen_range(0..4);
        let action = match pick {
            0 | 1 if !state.is_empty() => {
                let c = &state.cells[rng.gen_range(0..state.len())];
                let ch = Channel(rng.gen_range(0..k));
                if c.channels.contains(ch) {
                    if c.channels.len() < 2 {
                        continue;
                    }
                    PlanningAction::RemoveChannel {
                        cell: c.id,
                        channel: ch,
                    }
                } else {
                    PlanningAction::AddChannel {
                        cell: c.id,
                        channel: ch,
                    }
                }
            }
            2 => {
                let free: Vec<usize> = inst
                    .candidates
                    .sites()
                    .iter()
                    .copied()
                    .filter(|&s| !state.occupies(s))
                    .collect();
                if free.is_empty() {
                    continue;
                }
                let cell = next_id;
                next_id.0 += 1;
                PlanningAction::AddCell {
                    cell,
                    site: free[rng.gen_range(0..free.len())],
                    channel: Channel(rng.gen_range(0..k)),
                }
            }
            _ => {
                if state.len() < 2 {
                    continue;
                }
                PlanningAction::RemoveCell {
                    cell: state.cells[rng.gen_range(0..state.len())].id,
                }
            }
        };
        let mut one = ActionLedger::new();
        one.push(Phase::ExpandChannels, action);
        one.apply(&mut state, inst.radio.power_max_dbm)
            .expect("generated action is valid");
        ledger.push(Phase::ExpandChannels, action);
    }
    ledger
}

fn applied(ledger: &ActionLedger, initial: &NetworkState, p: f64) -> NetworkState {
    let mut s = initial.clone();
    ledger.apply(&mut s, p).expect("ledger applies");
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compressed_random_ledgers_replay_identically(seed in any::<u64>(), len in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let raw = random_ledger(&mut rng, &inst, len);
        let short = compress_ledger(&raw);
        prop_assert!(short.len() <= raw.len());
        let p = inst.radio.power_max_dbm;
        prop_assert_eq!(applied(&short, &inst.initial, p).cells, applied(&raw, &inst.initial, p).cells);
        // Compression is idempotent up to replay.
        let again = compress_ledger(&short);
        prop_assert_eq!(applied(&again, &inst.initial, p).cells, applied(&raw, &inst.initial, p).cells);
    }

    #[test]
    fn planner_ledgers_replay_to_final_state(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let params = PlannerParams { n_max_sc: rng.gen_range(2..=8), ..Default::default() };
        let out = plan(&inst.initial, &problem(&inst), &params).unwrap();
        for ledger in [&out.raw_ledger, &out.ledger] {
            let replayed = ledger.replay(&inst.initial, &inst.grid, &inst.radio).unwrap();
            prop_assert_eq!(&replayed.cells, &out.state.cells);
        }
        prop_assert!(out.state.len() <= params.n_max_sc.max(inst.initial.len()));
        for c in &out.state.cells {
            prop_assert!(!c.channels.is_empty() && c.channels.len() <= params.k_max.max(1));
            prop_assert!(inst.candidates.contains(c.site));
        }
    }

    #[test]
    fn select_channel_prefers_farthest_co_channel(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let state = &inst.initial;
        let target = &state.cells[rng.gen_range(0..state.len())];
        let here = inst.grid.position(target.site);
        let dist = |ch: Channel| {
            state.cells.iter()
                .filter(|c| c.id != target.id && c.channels.contains(ch))
                .map(|c| here.distance(inst.grid.position(c.site)))
                .fold(f64::INFINITY, f64::min)
        };
        let chosen = select_channel(target.id, state, &inst.grid, &inst.radio).unwrap();
        prop_assert!(!target.channels.contains(chosen));
        for ch in (0..inst.radio.num_channels as u16).map(Channel) {
            if target.channels.contains(ch) {
                continue;
            }
            prop_assert!(dist(ch) < dist(chosen) || (dist(ch) == dist(chosen) && ch >= chosen));
        }
        let released = channel_to_release(target.id, state, &inst.grid).unwrap();
        prop_assert!(target.channels.contains(released));
    }
}

#[test]
fn site_search_is_identical_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let inst = random_instance(&mut rng);
        let a = select_site(&inst.initial, &problem(&inst), Execution::Sequential).unwrap();
        let b = select_site(&inst.initial, &problem(&inst), Execution::Parallel).unwrap();
        assert_eq!(
            (a.site, a.channel, a.total_mhz.to_bits()),
            (b.site, b.channel, b.total_mhz.to_bits())
        );
        // Exhaustive: no free site does better.
        let free = inst
            .candidates
            .sites()
            .iter()
            .filter(|&&s| !inst.initial.occupies(s))
            .count();
        assert!(free > 0);
    }
}

#[test]
fn planning_is_identical_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let inst = random_instance(&mut rng);
        let seq = PlannerParams {
            execution: Execution::Sequential,
            ..Default::default()
        };
        let par = PlannerParams {
            execution: Execution::Parallel,
            ..Default::default()
        };
        let a = plan(&inst.initial, &problem(&inst), &seq).unwrap();
        let b = plan(&inst.initial, &problem(&inst), &par).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.raw_ledger, b.raw_ledger);
    }
}

#[test]
fn idle_network_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut inst = random_instance(&mut rng);
    for load in &mut inst.loads {
        load.demand = Some(vec![0.0; inst.grid.len()]);
        load.spec = scplan::performance::SpecSource::Pixel(vec![0.0; inst.grid.len()]);
    }
    inst.initial.cells.truncate(1);
    scplan::radio::apply_power_configuration(&mut inst.initial, &inst.grid, &inst.radio);
    let out = plan(&inst.initial, &problem(&inst), &PlannerParams::default()).unwrap();
    assert!(out.ledger.is_empty());
    assert_eq!(out.state.cells, inst.initial.cells);
}
