//! Independent brute force for single-antenna, single-user instances.
//!
//! With one antenna the precoder is a unit-modulus scalar, so the received
//! gain and the incident power follow directly from the true channels.

use std::f64::consts::PI;

use num_complex::Complex64;
use uavris_core::agents::{exhaustive_search, ExhaustiveGrid};
use uavris_core::env::{Env, EnvConfig, Strategy};

fn rectifier(p: f64, p_sat: f64, c: f64, d: f64) -> f64 {
    let omega = p_sat / (1.0 + (-c * (p - d)).exp());
    let delta = 1.0 / (1.0 + (c * d).exp());
    ((omega - p_sat * delta) / (1.0 - delta)).clamp(0.0, p_sat)
}

struct Best {
    reward: f64,
    tau: f64,
    power: f64,
    phases: Vec<f64>,
    reflect: Vec<bool>,
}

fn brute_force(env: &Env, taus: &[f64], powers: &[f64], phases: &[f64]) -> Best {
    let cfg = env.config();
    let ch = env.channels();
    let l = cfg.elements();
    let g1: Vec<Complex64> = (0..l).map(|e| ch.g1_true.get(0, e)).collect();
    let gru: Vec<Complex64> = (0..l).map(|e| ch.g_ru_true.get(0, e)).collect();
    let h = &cfg.harvester;
    let noise = 10f64.powf(cfg.noise_power_dbm / 10.0) / 1000.0;
    let psi2 = cfg.hi_level * cfg.hi_level;
    let battery = env.ledger().battery;
    let re = env.renewable_now();

    let mut best = Best {
        reward: f64::NEG_INFINITY,
        tau: 0.0,
        power: 0.0,
        phases: vec![],
        reflect: vec![],
    };
    for &tau in taus {
        for &p in powers {
            let per_el: Vec<f64> = g1.iter().map(|g| p * g.norm_sqr()).collect();
            let total: f64 = per_el.iter().sum();
            for ph in 0..phases.len().pow(l as u32) {
                let theta: Vec<f64> = (0..l)
                    .map(|e| phases[(ph / phases.len().pow(e as u32)) % phases.len()])
                    .collect();
                for mask in 0..(1usize << l) {
                    let reflect: Vec<bool> = (0..l).map(|e| mask >> e & 1 == 1).collect();
                    let mut w = Complex64::new(0.0, 0.0);
                    for e in (0..l).filter(|&e| reflect[e]) {
                        w += gru[e] * Complex64::from_polar(1.0, theta[e]) * g1[e].conj();
                    }
                    let gain = p * w.norm_sqr();
                    let snr = gain / (gain * psi2 + noise);
                    let rate = (1.0 - tau) * cfg.bandwidth_hz * (1.0 + snr).log2();
                    let idle: f64 = (0..l).filter(|&e| !reflect[e]).map(|e| per_el[e]).sum();
                    let n_reflect = reflect.iter().filter(|&&r| r).count();
                    let (rf, consumed) = match cfg.strategy {
                        Strategy::Hera => (
                            (tau * rectifier(total, h.p_sat, h.c, h.d)
                                + (1.0 - tau) * rectifier(idle, h.p_sat, h.c, h.d))
                                * cfg.slot_seconds,
                            (cfg.p_hover_w + n_reflect as f64 * cfg.p_element_w) * cfg.slot_seconds,
                        ),
                        Strategy::Ts => (
                            tau * rectifier(total, h.p_sat, h.c, h.d) * cfg.slot_seconds,
                            (cfg.p_hover_w + l as f64 * cfg.p_element_w) * cfg.slot_seconds,
                        ),
                    };
                    let incident = total * cfg.slot_seconds;
                    let feasible =
                        rate >= cfg.r_min_bps && battery + rf + re >= consumed && incident > 0.0;
                    let reward = if feasible { (rf + re) / incident } else { 0.0 };
                    if reward > best.reward {
                        best = Best {
                            reward,
                            tau,
                            power: p,
                            phases: theta.clone(),
                            reflect,
                        };
                    }
                }
            }
        }
    }
    best
}

#[test]
fn exhaustive_matches_independent_loop() {
    let cfg = EnvConfig {
        antennas: 1,
        users: 1,
        ris_rows: 2,
        ris_cols: 2,
        renewable_enabled: false,
        strategy: Strategy::Hera,
        ..EnvConfig::default()
    };
    let grid = ExhaustiveGrid::uniform(&cfg, 5, 5, 4);
    let mut env = Env::new(cfg, 21).unwrap();
    for _ in 0..3 {
        let fast = exhaustive_search(&env, &grid, 1_000_000).unwrap();
        let slow = brute_force(
            &env,
            &grid.tau,
            &grid.power_w,
            &[0.0, PI / 2.0, PI, 1.5 * PI],
        );
        assert!(
            (fast.outcome.reward - slow.reward).abs() < 1e-12,
            "{} vs {}",
            fast.outcome.reward,
            slow.reward
        );
        assert_eq!(fast.action.tau, slow.tau);
        assert!((fast.action.powers[0] - slow.power).abs() < 1e-9);
        for e in 0..4 {
            assert!((fast.action.phases[e] - slow.phases[e]).abs() < 1e-12);
            assert_eq!(fast.action.assignment.owner(e).is_some(), slow.reflect[e]);
        }
        env.skip_slot().unwrap();
    }
}
