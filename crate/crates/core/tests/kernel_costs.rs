mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracle::double_sum_cost;
use tactics_core::exec_market::{
    block_cost_exponential, block_cost_power, uniform_cost, UniformMode,
};
use tactics_core::{ImpactSpec, KernelSpec};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn blocks(rho_b: f64, d: u64, n_b: u64) -> Vec<(u64, f64)> {
    (1..=n_b).map(|i| (i * d, rho_b)).collect()
}

#[test]
fn closed_forms_match_the_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for draw in 0..100 {
        let rho_b = rng.random_range(1.0..50.0);
        let d = rng.random_range(1..60u64);
        let n_b = rng.random_range(1..40u64);
        let impact =
            ImpactSpec::new(rng.random_range(0.01..1.0), rng.random_range(0.1..1.0)).unwrap();
        let g = rng.random_range(0.1..3.0);
        let rho = rng.random_range(0.001..0.5);
        let gamma = rng.random_range(0.05..0.95);
        let f = |v: f64| impact.zeta * v.powf(impact.beta);
        let trades = blocks(rho_b, d, n_b);

        let want = double_sum_cost(&trades, f, |l| g * (-rho * l as f64).exp());
        let got = block_cost_exponential(rho_b, d as f64, n_b as f64, &impact, g, rho).unwrap();
        assert!(rel(got, want) < 1e-9, "exp draw {draw}: {got} vs {want}");

        let want = double_sum_cost(&trades, f, |l| g * (l as f64).powf(-gamma));
        let got = block_cost_power(rho_b, d as f64, n_b as f64, &impact, g, gamma).unwrap();
        assert!(rel(got, want) < 1e-9, "power draw {draw}: {got} vs {want}");

        let rate = rng.random_range(0.1..5.0);
        let steps = rng.random_range(2..200u64);
        let uni: Vec<(u64, f64)> = (1..=steps).map(|k| (k, rate)).collect();
        for kernel in [
            KernelSpec::exponential(g, rho).unwrap(),
            KernelSpec::power_law(g, gamma).unwrap(),
        ] {
            let want = double_sum_cost(&uni, f, |l| kernel.weight(l));
            let got = uniform_cost(rate, steps, &impact, &kernel, UniformMode::Discrete).unwrap();
            assert!(rel(got, want) < 1e-9, "uniform draw {draw}");
        }
    }
}
