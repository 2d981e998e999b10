use vanet_core::rng;
use vanet_core::sim::estimate_p_succ;
use vanet_core::topology::{poisson_pmf, sample_topology};
use vanet_core::{ConnectionModel, Scenario};

/// 99.9% quantile of chi-square with 13 degrees of freedom.
const CHI2_13_999: f64 = 34.528;

#[test]
fn relay_counts_follow_poisson() {
    let s = Scenario::new(100.0, 0.05, 0.0, ConnectionModel::unit_disk(250.0).unwrap()).unwrap();
    let draws = 100_000;
    let last = 13; // bins 0..=12 and a merged ">= 13" bin
    let mut observed = vec![0u64; last + 1];
    let mut r = rng::stream(31, 0, 0);
    for _ in 0..draws {
        observed[sample_topology(&s, &mut r).len().min(last)] += 1;
    }
    let mut expected: Vec<f64> = (0..last)
        .map(|n| poisson_pmf(0.05, 100.0, n as u64))
        .collect();
    expected.push(1.0 - expected.iter().sum::<f64>());
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &p)| {
            let e = p * draws as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    assert!(stat < CHI2_13_999, "chi-square {stat}");
}

#[test]
fn success_never_falls_below_the_coin_floor() {
    let u = ConnectionModel::unit_disk(250.0).unwrap();
    let ln = ConnectionModel::log_normal(250.0, 2.0, 4.0).unwrap();
    for (l, rho, pm, m) in [
        (1000.0, 0.005, 0.3, u),
        (2000.0, 0.02, 0.6, u),
        (1500.0, 0.01, 0.9, ln),
        (3000.0, 0.05, 1.0, u),
    ] {
        let e = estimate_p_succ(&Scenario::new(l, rho, pm, m).unwrap(), 5000, 12).unwrap();
        assert!(
            e.p_succ >= 0.5 - 3.0 * e.stderr,
            "L={l} rho={rho} pm={pm}: {e:?}"
        );
    }
}
