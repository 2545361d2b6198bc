use bankruin::panel::{
    build_features, load_failures, load_panel, write_failures, write_panel, ColumnMapping, Delimiter, Era,
    FeatureConfig, LoadOptions,
};
use bankruin::receivership::{load_receiverships, write_receiverships};
use bankruin::synth::{generate_panel, generate_receiverships, DgpConfig};

#[test]
fn synthetic_panel_round_trips_without_rejects() {
    for era in [Era::Historical, Era::Modern] {
        let cfg = DgpConfig { n_banks: 60, n_years: 12, seed: 3, era, ..DgpConfig::default() };
        let data = generate_panel(&cfg).unwrap();
        for delim in [Delimiter::Comma, Delimiter::Tab] {
            let mut buf = Vec::new();
            write_panel(&data.panel, &mut buf, delim).unwrap();
            let opts = LoadOptions { delimiter: delim, ..LoadOptions::default() };
            let back = load_panel(buf.as_slice(), &ColumnMapping::default(), &opts).unwrap();
            assert!(back.rejects.is_empty(), "{:?}", back.rejects);
            assert_eq!(back.panel.len(), data.panel.len());
            for (a, b) in back.panel.observations().iter().zip(data.panel.observations()) {
                let mut b = b.clone();
                b.line = a.line;
                assert_eq!(a, &b);
            }

            let mut fbuf = Vec::new();
            write_failures(&data.failures, &mut fbuf, delim).unwrap();
            assert_eq!(load_failures(fbuf.as_slice(), delim).unwrap(), data.failures);
        }
    }
}

#[test]
fn synthetic_receiverships_round_trip() {
    let recs = generate_receiverships(&DgpConfig { seed: 8, ..DgpConfig::default() }).unwrap();
    let mut buf = Vec::new();
    write_receiverships(&recs, &mut buf, Delimiter::Comma).unwrap();
    assert_eq!(load_receiverships(buf.as_slice(), Delimiter::Comma).unwrap(), recs);
}

#[test]
fn synthetic_features_reproduce_generated_fundamentals() {
    let cfg = DgpConfig { n_banks: 80, n_years: 10, seed: 4, ..DgpConfig::default() };
    let data = generate_panel(&cfg).unwrap();
    let mut fcfg = FeatureConfig::new(Era::Historical, vec![1]);
    fcfg.min_age = None;
    let (panel, _) = build_features(&data.panel, &data.failures, &fcfg).unwrap();
    let truth = data.truth_map();
    let mut checked = 0;
    for (o, f) in panel.rows() {
        let (Some(i), Some(n)) = (f.insolvency, f.noncore) else { continue };
        let p = cfg.coefficients.probability(i, n);
        assert!((p - truth[&(o.bank_id.clone(), o.period)]).abs() < 1e-12);
        checked += 1;
    }
    assert!(checked > 500);
}

#[test]
fn labels_mark_failures_within_the_horizon() {
    let cfg = DgpConfig { n_banks: 100, n_years: 15, seed: 6, ..DgpConfig::default() };
    let data = generate_panel(&cfg).unwrap();
    let mut fcfg = FeatureConfig::new(Era::Historical, vec![1, 3]);
    fcfg.min_age = None;
    let (panel, _) = build_features(&data.panel, &data.failures, &fcfg).unwrap();
    for (o, f) in panel.rows() {
        let fail = data.failures.iter().find(|e| e.bank_id == o.bank_id).map(|e| e.failure_date.year);
        for h in [1u32, 3] {
            let expected = fail.is_some_and(|y| y > o.period.year && y <= o.period.year + h as i32);
            assert_eq!(f.labels[&h], expected, "{} {} h={h}", o.bank_id, o.period);
        }
        if let Some(y) = fail {
            assert!(o.period.year < y);
        }
    }
}
