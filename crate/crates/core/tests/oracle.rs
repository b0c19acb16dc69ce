//! Small-network oracles for the Ψ evaluation and the P_B estimator.
//!
//! The oracles rebuild SINRs from the sampled link states in dBm and
//! enumerate activity outcomes exhaustively, without going through the
//! crate's ranking, activity or SINR code.

use uavloc::localizability::{psi, sample_snapshot, snapshot_rng, SnapshotSet};
use uavloc::{LinkState, NetworkLayout, SimConfig, Site};

fn triangle() -> NetworkLayout {
    let h = 25.0;
    NetworkLayout::from_sites(
        vec![
            Site { x: 0.0, y: 0.0, height: h },
            Site { x: 500.0, y: 0.0, height: h },
            Site { x: 250.0, y: 250.0 * 3f64.sqrt(), height: h },
        ],
        500.0,
    )
    .unwrap()
}

/// Received powers in dBm, strongest mean power first.
fn ranked_rx_dbm(links: &[LinkState], tx_dbm: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..links.len()).collect();
    idx.sort_by(|&a, &b| {
        links[a]
            .path_loss_db
            .partial_cmp(&links[b].path_loss_db)
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.iter()
        .map(|&k| tx_dbm - links[k].path_loss_db + links[k].shadowing_db)
        .collect()
}

fn dbm_sum(values: impl Iterator<Item = f64>) -> f64 {
    10.0 * values.map(|v| 10f64.powf(v / 10.0)).sum::<f64>().log10()
}

/// Probability that the target at `rank` clears `alpha_db` when the top `b`
/// participate, summed over every on/off pattern of the other sites.
fn pass_probability(rx: &[f64], noise_dbm: f64, b: usize, rank: usize, p: f64, q: f64, alpha_db: f64) -> f64 {
    let others: Vec<usize> = (0..rx.len()).filter(|&k| k != rank).collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << others.len()) {
        let mut weight = 1.0;
        let mut active = vec![noise_dbm];
        for (bit, &k) in others.iter().enumerate() {
            let on = mask & (1 << bit) != 0;
            let prob = if k < b { p } else { q };
            weight *= if on { prob } else { 1.0 - prob };
            if on {
                active.push(rx[k]);
            }
        }
        if rx[rank] - dbm_sum(active.into_iter()) >= alpha_db {
            total += weight;
        }
    }
    total
}

/// `Pr(Ψ >= b)` given the channel, with one independent activity draw per (target, B).
fn conditional_pb(rx: &[f64], noise_dbm: f64, p: f64, q: f64, alpha_db: f64, b_min: usize) -> f64 {
    let t = rx.len();
    let none_from_here: f64 = (b_min..=t)
        .map(|b| {
            let all_pass: f64 = (0..b).map(|i| pass_probability(rx, noise_dbm, b, i, p, q, alpha_db)).product();
            1.0 - all_pass
        })
        .product();
    1.0 - none_from_here
}

/// `argmax_B B·∏ 1(SINR_i(B) >= α)` for on/off activity.
fn brute_force_psi(rx: &[f64], noise_dbm: f64, p_on: bool, q_on: bool, alpha_db: f64) -> usize {
    let t = rx.len();
    let mut best = (0, 0);
    for b in 1..=t {
        let ok = (0..b).all(|i| {
            let interferers = (0..t)
                .filter(|&k| k != i && if k < b { p_on } else { q_on })
                .map(|k| rx[k]);
            rx[i] - dbm_sum(std::iter::once(noise_dbm).chain(interferers)) >= alpha_db
        });
        if b * ok as usize > best.0 {
            best = (b * ok as usize, b);
        }
    }
    best.1
}

#[test]
fn psi_agrees_with_enumeration_on_sampled_channels() {
    let layout = triangle();
    let mut config = SimConfig::default();
    let noise = config.radio.noise_power_dbm();
    let mut checked = 0;
    for h in [30.0, 120.0] {
        config.scenario.h_ut_m = h;
        for index in 0..400 {
            let mut rng = snapshot_rng(99, index);
            let snap = sample_snapshot(&layout, &config, &mut rng).unwrap();
            let rx = ranked_rx_dbm(snap.ranked.links(), config.radio.tx_power_dbm);
            for (p, q) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                for alpha in [-20.0, -10.0, -5.0, -2.0, 0.0, 3.0, 10.0, 20.0, 40.0] {
                    let expected = brute_force_psi(&rx, noise, p == 1.0, q == 1.0, alpha);
                    assert_eq!(psi(&snap.ranked, alpha, p, q, &mut rng), expected);
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 2 * 400 * 4 * 9);
}

#[test]
fn estimator_matches_activity_oracle_on_three_sites() {
    let layout = triangle();
    let mut config = SimConfig::default();
    config.scenario.h_ut_m = 60.0;
    config.scenario.p = 0.5;
    config.scenario.q = 0.3;
    config.scenario.n_snapshots = 10_000;
    config.scenario.seed = 314;
    let alpha = -2.0;
    let noise = config.radio.noise_power_dbm();

    let set = SnapshotSet::simulate_on(&layout, &config, Some(2)).unwrap();
    let mut oracle = [0.0; 4];
    for index in 0..config.scenario.n_snapshots as u64 {
        let mut rng = snapshot_rng(config.scenario.seed, index);
        let snap = sample_snapshot(&layout, &config, &mut rng).unwrap();
        let rx = ranked_rx_dbm(snap.ranked.links(), config.radio.tx_power_dbm);
        for b in 1..=3 {
            oracle[b] += conditional_pb(&rx, noise, 0.5, 0.3, alpha, b);
        }
    }
    let mut informative = 0;
    for b in 1..=3 {
        let expected = oracle[b] / config.scenario.n_snapshots as f64;
        let est = set.estimate(alpha, b);
        println!("B={b}: estimate {:.4} ± {:.4}, oracle {:.4}", est.pb, est.half_width(), expected);
        assert!(
            (est.pb - expected).abs() <= 2.0 * est.half_width(),
            "B={b}: {} vs {}",
            est.pb,
            expected
        );
        if (0.05..0.95).contains(&expected) {
            informative += 1;
        }
    }
    assert!(informative >= 1, "threshold leaves every P_B degenerate");
}
