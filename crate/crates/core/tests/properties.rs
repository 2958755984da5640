use proptest::prelude::*;

use satqkd_core::atmosphere::atml_tau;
use satqkd_core::campaign::slant_range_km;
use satqkd_core::config::{ScenarioConfig, DEFAULT_LUT};
use satqkd_core::extraction::{binary_entropy, cascade_reconcile, skr_analytic, LutTable, DEFAULT_XI};
use satqkd_core::fidelity::{evaluate, fidelity, qber, ChannelBudget, DEPHASED_FIDELITY};
use satqkd_core::source::{state_coefficients, SourceParams};

fn builtin_lut() -> LutTable {
    LutTable::from_csv(DEFAULT_LUT).unwrap()
}

proptest! {
    #[test]
    fn entropy_symmetric_and_bounded(q in 0.0f64..=1.0) {
        let h = binary_entropy(q);
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - q)).abs() < 1e-12);
    }

    #[test]
    fn fidelity_qber_werner_map(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        prop_assume!(a + b + c > 1e-9);
        let f = fidelity(a, b, c).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        if c == 0.0 {
            prop_assert!(f >= DEPHASED_FIDELITY - 1e-12);
        }
        let q = qber(f).unwrap();
        prop_assert!((1.0 - 8.0 * q / 3.0 - f).abs() < 1e-12);
    }

    #[test]
    fn breakdown_in_range(lambda in 1e-4f64..0.3, pa in 0.0f64..=1.0, pb in 0.0f64..=1.0, pd in 0.0f64..1e-2) {
        let src = SourceParams::new(lambda, 1e6, pd).unwrap();
        let bd = evaluate(&src, &ChannelBudget::new(pa, pb, pd).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&bd.accept_prob));
        prop_assert!((0.0..=0.375 + 1e-12).contains(&bd.qber));
        prop_assert!((0.0..=1.0).contains(&bd.fidelity));
    }

    #[test]
    fn mean_pairs_is_twice_lambda(lambda in 0.0f64..0.99) {
        let s = SourceParams::new(lambda, 1e6, 0.0).unwrap();
        prop_assert_eq!(s.mu, 2.0 * s.lambda_sq);
    }

    #[test]
    fn fock_amplitudes_subnormalized(lambda in 1e-4f64..0.5, n_max in 2usize..8) {
        let amps = state_coefficients(&SourceParams::new(lambda, 1e6, 0.0).unwrap(), n_max).unwrap();
        let p = amps.probabilities();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!(amps.squared_norm() <= 1.0 + 1e-12);
        // Successive manifolds fall off for λ < 1/2.
        prop_assert!(p.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn skr_bounded_by_sifted_rate(r in 0.0f64..1e6, q in 0.0f64..0.5) {
        let k = skr_analytic(r, q, DEFAULT_XI).unwrap();
        prop_assert!(k.skr >= 0.0 && k.skr <= r);
    }

    #[test]
    fn lut_lookup_within_table_and_monotone(l in 50.0f64..2e6, q in 0.0f64..0.12, dq in 0.0f64..0.02) {
        let t = builtin_lut();
        let max = t.eta.iter().flatten().cloned().fold(0.0, f64::max);
        let e = t.lookup(l, q).eta;
        prop_assert!((0.0..=max).contains(&e));
        prop_assert!(t.lookup(l, q + dq).eta <= e + 1e-12);
    }

    #[test]
    fn slant_range_geometry(h in 200.0f64..2000.0, z1 in 0.0f64..90.0, z2 in 0.0f64..90.0) {
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        prop_assert!(slant_range_km(h, lo) <= slant_range_km(h, hi) + 1e-9);
        prop_assert!(slant_range_km(h, lo) >= h - 1e-9);
    }

    #[test]
    fn attenuation_decreases_with_zenith(tau in 0.0f64..2.0, z1 in 0.0f64..85.0, z2 in 0.0f64..85.0) {
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let (a, b) = (atml_tau(lo, tau), atml_tau(hi, tau));
        prop_assert!(a <= 1.0 && b > 0.0 && b <= a + 1e-15);
    }

    #[test]
    fn cascade_corrects_or_reports(seed in any::<u64>(), q in 0.005f64..0.08) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<u8> = (0..2000).map(|_| rng.random_range(0..2u8)).collect();
        let b: Vec<u8> = a.iter().map(|&x| x ^ (rng.random::<f64>() < q) as u8).collect();
        let out = cascade_reconcile(&a, &b, q, seed).unwrap();
        let diff = out.corrected.iter().zip(&a).filter(|(x, y)| x != y).count() as u64;
        prop_assert_eq!(diff, out.residual_errors);
    }
}

#[test]
fn config_round_trip() {
    let c = ScenarioConfig::default_config();
    let again = ScenarioConfig::from_toml_str(&c.to_toml(), None).unwrap();
    assert_eq!(c, again);
    assert_eq!(c.hash(), again.hash());
}
