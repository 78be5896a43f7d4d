use std::sync::Arc;

use qudit_threshold::campaign::verify::{enumerate, verify_realization};
use qudit_threshold::disorder::DisorderRealization;
use qudit_threshold::lattice::Lattice;
use qudit_threshold::potts::{metropolis_sweep, PottsSystem, Replica};
use qudit_threshold::rng;
use qudit_threshold::stats;
use qudit_threshold::tempering::{run_sample, Parity, RunParams, SampleRun, TemperatureGrid};

fn with_errors(d: usize, l: usize, errors: &[(usize, u8)]) -> DisorderRealization {
    let lat = Arc::new(Lattice::new(l).unwrap());
    let mut eps = vec![0u8; lat.num_edges()];
    for &(e, v) in errors {
        eps[e] = v;
    }
    DisorderRealization::from_errors(lat, d, eps, 0).unwrap()
}

#[test]
fn single_temperature_tempering_is_plain_metropolis() {
    let dis = with_errors(3, 5, &[(3, 1), (17, 2), (30, 1)]);
    let beta = 1.3;
    let grid = TemperatureGrid::single_beta(beta).unwrap();

    let system = PottsSystem::new(dis.clone());
    let mut r1 = rng::stream(5, 1);
    let mut run = SampleRun::new(system.clone(), &grid, &mut r1);

    let mut r2 = rng::stream(5, 1);
    let mut replica = Replica::random(&system, 0, &mut r2);

    for t in 0..500 {
        run.sweep(&mut r1);
        let parity = if t % 2 == 0 { Parity::Even } else { Parity::Odd };
        assert_eq!(run.exchange(parity, &mut r1), 0);
        metropolis_sweep(&mut replica, &system, beta, &mut r2);
        assert_eq!(run.replica_at(0).spins(), replica.spins());
        assert_eq!(run.replica_at(0).energy(), replica.energy());
    }
}

/// Per-slot thermal means from a tempering run compared with enumeration.
fn check_marginals(dis: &DisorderRealization, temperatures: Vec<f64>, t_eq: u64, seed: u64) {
    let n = dis.lattice().num_vertices() as f64;
    let grid = TemperatureGrid::from_temperatures(temperatures).unwrap();
    let slots = grid.len();
    let mut series = vec![[Vec::new(), Vec::new(), Vec::new()]; slots];
    let mut r = rng::stream(seed, 1);
    let res = run_sample(dis, &grid, RunParams::new(t_eq, 1, 0).unwrap(), &mut r, |rec| {
        let s = &mut series[rec.temperature_index];
        s[0].push(rec.energy as f64);
        s[1].push(rec.chi0_term / n);
        s[2].push(rec.chik_term / n);
    })
    .unwrap();
    assert!(res.all_replicas_traversed);
    for (slot, &beta) in grid.betas().iter().enumerate() {
        let exact = enumerate(dis, beta).unwrap();
        for (k, want) in [exact.energy, exact.chi0, exact.chik].into_iter().enumerate() {
            let xs = &series[slot][k];
            let mean = stats::mean(xs);
            let se = stats::block_standard_error(xs, 64);
            let z = (mean - want) / se;
            assert!(z.abs() < 4.0, "slot {slot} observable {k}: {mean} vs {want} (z = {z:.2})");
        }
        assert!((res.slots[slot].energy - exact.energy).abs() < 5.0 * stats::block_standard_error(&series[slot][0], 64));
    }
}

#[test]
fn tempering_marginals_match_enumeration_qubit() {
    let dis = with_errors(2, 2, &[(1, 1)]);
    check_marginals(&dis, vec![0.5, 0.8, 1.2, 2.0], 1 << 15, 3);
}

#[test]
fn tempering_marginals_match_enumeration_qutrit() {
    let dis = with_errors(3, 2, &[(0, 2), (5, 1)]);
    check_marginals(&dis, vec![0.6, 0.85, 1.1, 1.4], 1 << 15, 4);
}

#[test]
fn clean_qubit_model_at_its_critical_point() {
    let dis = with_errors(2, 3, &[]);
    let beta = (1.0 + 2f64.sqrt()).ln();
    let report = verify_realization(&dis, beta, 9, 1 << 16).unwrap();
    assert!(report.passed(4.0), "{report}");
    // between the ground state and the infinite-temperature value
    assert!(report.exact.energy > -18.0 && report.exact.energy < -9.0);
}
