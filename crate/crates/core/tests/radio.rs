mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{cell, oracle_path_loss, random_instance};
use scplan::radio::{
    configure_powers, path_loss, serving_assignment, spectral_efficiency, PropagationParams, RadioSnapshot,
};
use scplan::scenario::{GridSpec, NetworkState};
use scplan::Execution;

proptest! {
    #[test]
    fn se_is_monotone_and_bounded(a in -40.0f64..60.0, b in -40.0f64..60.0) {
        let p = PropagationParams::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (s_lo, s_hi) = (spectral_efficiency(lo, &p), spectral_efficiency(hi, &p));
        prop_assert!(s_lo <= s_hi);
        prop_assert!((0.0..=p.se_max_bps_hz).contains(&s_lo));
        prop_assert!((0.0..=p.se_max_bps_hz).contains(&s_hi));
    }

    #[test]
    fn path_loss_matches_reference(d in 0.0f64..500.0) {
        let p = PropagationParams::default();
        prop_assert!((path_loss(d, &p) - oracle_path_loss(d, p.carrier_ghz)).abs() < 1e-9);
    }

    #[test]
    fn serving_map_partitions_the_grid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let p = &inst.radio;
        let serving = serving_assignment(&inst.initial, &inst.grid, p).unwrap();
        let mut seen = vec![0u8; inst.grid.len()];
        for slot in 0..serving.cells().len() {
            for &u in serving.members(slot) {
                seen[u as usize] += 1;
                prop_assert_eq!(serving.slot_of_pixel(u as usize), slot);
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        // The serving cell has the strongest received power.
        for u in 0..inst.grid.len() {
            let at = inst.grid.position(u);
            let rx = |c: &scplan::scenario::SmallCell| {
                c.power_dbm - oracle_path_loss(inst.grid.position(c.site).distance(at), p.carrier_ghz)
            };
            let best = inst.initial.cells.iter().map(rx).fold(f64::NEG_INFINITY, f64::max);
            let chosen = inst.initial.cell(serving.cell_of(u)).unwrap();
            prop_assert!((rx(chosen) - best).abs() < 1e-9);
        }
    }

    #[test]
    fn configured_powers_stay_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let p = &inst.radio;
        for pw in configure_powers(&inst.initial, &inst.grid, p) {
            prop_assert!(pw >= p.power_min_dbm && pw <= p.power_max_dbm);
        }
    }
}

#[test]
fn parallel_and_sequential_snapshots_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let inst = random_instance(&mut rng);
        let a = RadioSnapshot::compute(&inst.initial, &inst.grid, &inst.radio, Execution::Sequential).unwrap();
        let b = RadioSnapshot::compute(&inst.initial, &inst.grid, &inst.radio, Execution::Parallel).unwrap();
        assert_eq!(a.serving(), b.serving());
        for u in 0..inst.grid.len() {
            assert_eq!(a.pixel_se(u).to_bits(), b.pixel_se(u).to_bits());
            assert_eq!(a.best_sinr_db(u).to_bits(), b.best_sinr_db(u).to_bits());
        }
    }
}

#[test]
fn lone_cell_keeps_maximum_power() {
    let grid = GridSpec::new(30.0, 30.0, 3.0).unwrap();
    let p = PropagationParams::default();
    let state = NetworkState::new(0, vec![cell(1, 12, &[0])]);
    assert_eq!(configure_powers(&state, &grid, &p), vec![p.power_max_dbm]);
}

#[test]
fn distinct_channels_fall_to_minimum_power() {
    // Without co-channel interference the edge target is met by noise alone.
    let grid = GridSpec::new(60.0, 30.0, 3.0).unwrap();
    let p = PropagationParams::default();
    let state = NetworkState::new(
        0,
        vec![cell(1, grid.index(3, 5), &[0]), cell(2, grid.index(15, 5), &[1])],
    );
    assert_eq!(configure_powers(&state, &grid, &p), vec![p.power_min_dbm; 2]);
}
