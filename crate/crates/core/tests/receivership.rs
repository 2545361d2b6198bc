use bankruin::receivership::{
    asset_quality_regression, insolvency_flag, insolvency_share_grid, insolvency_share_grid_with, leverage,
    recovery_rate, required_excess_return, required_excess_return_numeric, GridOptions, ReceivershipRecord,
    RunFilter, SolvencyVariant, Utility,
};
use bankruin::synth::{generate_receiverships, DgpConfig, ReceivershipDgp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RHO: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
const V: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];

fn record(assets: f64, collected: f64, claims: f64) -> ReceivershipRecord {
    ReceivershipRecord {
        bank_id: "r".into(),
        assets_at_suspension: assets,
        collected_from_assets: collected,
        claims_proved: claims,
        ..Default::default()
    }
}

fn synthetic(seed: u64, dgp: ReceivershipDgp) -> Vec<ReceivershipRecord> {
    generate_receiverships(&DgpConfig { seed, receiverships: dgp, ..DgpConfig::default() }).unwrap()
}

fn configurations() -> Vec<Vec<ReceivershipRecord>> {
    let mut out = Vec::new();
    for seed in 0..4 {
        out.push(synthetic(seed, ReceivershipDgp::default()));
        out.push(synthetic(
            seed,
            ReceivershipDgp { n_records: 200, leverage_mean: 1.1, recovery_mean: 0.8, run_intercept: 0.0, ..Default::default() },
        ));
    }
    out
}

#[test]
fn grid_matches_per_record_evaluation() {
    for recs in configurations() {
        for filter in [RunFilter::All, RunFilter::RunOnly, RunFilter::NoRunOnly] {
            for variant in [SolvencyVariant::Baseline, SolvencyVariant::WithDoubleLiability] {
                let grid = insolvency_share_grid_with(&recs, &RHO, &V, &GridOptions { filter, variant }).unwrap();
                let kept: Vec<&ReceivershipRecord> = recs
                    .iter()
                    .filter(|r| match filter {
                        RunFilter::All => true,
                        RunFilter::RunOnly => r.run_flag() == Some(true),
                        RunFilter::NoRunOnly => r.run_flag() == Some(false),
                    })
                    .collect();
                assert_eq!(grid.n_records, kept.len());
                for (i, rho) in RHO.iter().enumerate() {
                    for (j, v) in V.iter().enumerate() {
                        let count = kept
                            .iter()
                            .filter(|r| {
                                let l = leverage(r, variant).unwrap();
                                let big_r = recovery_rate(r, variant).unwrap();
                                insolvency_flag(l, big_r, *rho, *v).unwrap()
                            })
                            .count();
                        assert_eq!(grid.insolvent[i][j], count);
                        assert_eq!(grid.shares[i][j], count as f64 / kept.len() as f64);
                    }
                }
            }
        }
    }
}

#[test]
fn shares_are_monotone_in_rho_and_v() {
    for recs in configurations() {
        let grid = insolvency_share_grid(&recs, &RHO, &V, RunFilter::All).unwrap();
        for i in 0..RHO.len() {
            for j in 0..V.len() {
                if i + 1 < RHO.len() {
                    assert!(grid.shares[i + 1][j] <= grid.shares[i][j]);
                }
                if j + 1 < V.len() {
                    assert!(grid.shares[i][j + 1] <= grid.shares[i][j]);
                }
            }
        }
    }
}

#[test]
fn run_partition_adds_up() {
    for recs in configurations() {
        let grid = insolvency_share_grid(&recs, &RHO, &V, RunFilter::All).unwrap();
        let part = grid.run_partition.expect("synthetic records carry deposits");
        let runs = recs.iter().filter(|r| r.run_flag() == Some(true)).count();
        assert_eq!(part.run_count, runs);
        for i in 0..RHO.len() {
            for j in 0..V.len() {
                assert_eq!(part.run_insolvent[i][j] + part.run_solvent[i][j], part.run_count);
            }
        }
    }
}

#[test]
fn recovery_equal_to_leverage_is_never_insolvent() {
    let recs: Vec<_> = (1..50).map(|k| record(100.0 * f64::from(k), 40.0 * f64::from(k), 40.0 * f64::from(k))).collect();
    let grid = insolvency_share_grid(&recs, &RHO, &V, RunFilter::All).unwrap();
    assert!(grid.shares.iter().flatten().all(|s| *s == 0.0));

    let recs: Vec<_> = (1..50).map(|k| record(100.0, 30.0 + f64::from(k) * 0.1, 2.0 * (30.0 + f64::from(k) * 0.1))).collect();
    let grid = insolvency_share_grid(&recs, &RHO, &V, RunFilter::All).unwrap();
    assert!(grid.shares.iter().flatten().all(|s| *s == 1.0));
}

#[test]
fn risk_neutral_root_finder_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let p: f64 = rng.gen_range(0.0..0.5);
        let loss = rng.gen_range(0.0..1.0);
        let r = rng.gen_range(0.0..0.1);
        let closed = p * loss / (1.0 - p) - r;
        let numeric = required_excess_return_numeric(p, loss, r, Utility::RiskNeutral).unwrap();
        assert!((closed - numeric).abs() < 1e-10, "p={p} l={loss} r={r}: {closed} vs {numeric}");
        assert_eq!(required_excess_return(p, loss, r, Utility::RiskNeutral).unwrap(), closed);
    }
}

#[test]
fn log_utility_matches_rearrangement() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..1000 {
        let p: f64 = rng.gen_range(0.0..0.5);
        let loss: f64 = rng.gen_range(0.0..0.95);
        let r = rng.gen_range(0.0..0.1);
        let analytic = (-p * (1.0 - loss).ln() / (1.0 - p)).exp() - 1.0 - r;
        let s = required_excess_return(p, loss, r, Utility::Log).unwrap();
        assert!((s - analytic).abs() < 1e-10, "p={p} l={loss} r={r}: {s} vs {analytic}");
    }
}

#[test]
fn excess_return_increases_with_probability_and_loss() {
    let ps: Vec<f64> = (0..20).map(|i| 0.01 + 0.02 * f64::from(i)).collect();
    let ls: Vec<f64> = (0..20).map(|i| 0.02 + 0.04 * f64::from(i)).collect();
    for u in [Utility::RiskNeutral, Utility::Log, Utility::Crra { gamma: 0.5 }] {
        for w in ps.windows(2) {
            for l in &ls {
                let a = required_excess_return(w[0], *l, 0.01, u).unwrap();
                let b = required_excess_return(w[1], *l, 0.01, u).unwrap();
                assert!(b > a, "{u:?}: p {} -> {}, l {l}", w[0], w[1]);
            }
        }
        for w in ls.windows(2) {
            for p in &ps {
                let a = required_excess_return(*p, w[0], 0.01, u).unwrap();
                let b = required_excess_return(*p, w[1], 0.01, u).unwrap();
                assert!(b > a, "{u:?}: l {} -> {}, p {p}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn asset_quality_exact_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let recs: Vec<ReceivershipRecord> = (0..60)
        .map(|i| {
            let assets = rng.gen_range(1e4..1e6);
            let g: f64 = rng.gen_range(0.1..0.6);
            let d: f64 = rng.gen_range(0.05..(0.9 - g));
            let w = 1.0 - g - d;
            let recovery = 0.9 * g + 0.5 * d + 0.1 * w;
            ReceivershipRecord {
                bank_id: format!("q{i}").into(),
                assets_at_suspension: assets,
                collected_from_assets: recovery * assets,
                claims_proved: assets,
                estimated_good: Some(g * assets),
                estimated_doubtful: Some(d * assets),
                estimated_worthless: Some(w * assets),
                ..Default::default()
            }
        })
        .collect();
    let fit = asset_quality_regression(&recs).unwrap();
    for (name, want) in [("good", 0.9), ("doubtful", 0.5), ("worthless", 0.1)] {
        let got = fit.coefficient(name).unwrap();
        assert!((got - want).abs() < 1e-10, "{name}: {got}");
    }
    assert!((fit.stat.value() - 1.0).abs() < 1e-10);
}
