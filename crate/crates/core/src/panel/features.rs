use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::labels::{filter_de_novo, label_failures};
use super::{BankId, BankObservation, BankPanel, FailureEvent};
use crate::error::{Error, Result};
use crate::period::{whole_years_between, Period};

/// Which balance-sheet definitions to use for the fundamentals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Era {
    Historical,
    Modern,
}

impl std::str::FromStr for Era {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "historical" => Ok(Era::Historical),
            "modern" => Ok(Era::Modern),
            _ => Err(Error::Config(format!("unknown era {s:?} (historical|modern)"))),
        }
    }
}

/// Liabilities netted out of assets to form historical noncore funding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoncoreDeduction {
    Deposits,
    Equity,
    NationalBankNotes,
    DueToBanks,
}

impl NoncoreDeduction {
    fn value(&self, o: &BankObservation) -> Option<f64> {
        match self {
            NoncoreDeduction::Deposits => o.deposits,
            NoncoreDeduction::Equity => o.equity,
            NoncoreDeduction::NationalBankNotes => o.national_bank_notes,
            NoncoreDeduction::DueToBanks => o.due_to_banks,
        }
    }

    fn column(&self) -> &'static str {
        match self {
            NoncoreDeduction::Deposits => "deposits",
            NoncoreDeduction::Equity => "equity",
            NoncoreDeduction::NationalBankNotes => "national_bank_notes",
            NoncoreDeduction::DueToBanks => "due_to_banks",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalsConfig {
    pub era: Era,
    /// Historical era only: items subtracted from assets for noncore funding.
    #[serde(default = "default_deductions")]
    pub deductions: Vec<NoncoreDeduction>,
}

fn default_deductions() -> Vec<NoncoreDeduction> {
    vec![
        NoncoreDeduction::Deposits,
        NoncoreDeduction::Equity,
        NoncoreDeduction::NationalBankNotes,
    ]
}

impl FundamentalsConfig {
    pub fn new(era: Era) -> Self {
        FundamentalsConfig { era, deductions: default_deductions() }
    }
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d != 0.0 => Some(n / d),
        _ => None,
    }
}

/// Populate insolvency, noncore funding and their interaction.
pub fn compute_fundamentals(panel: &BankPanel, cfg: &FundamentalsConfig) -> Result<BankPanel> {
    let required: Vec<(&str, fn(&BankObservation) -> Option<f64>)> = match cfg.era {
        Era::Historical => vec![
            ("surplus_profit", |o| o.surplus_profit),
            ("equity", |o| o.equity),
        ],
        Era::Modern => vec![
            ("net_income", |o| o.net_income),
            ("time_deposits", |o| o.time_deposits),
            ("wholesale_funding", |o| o.wholesale_funding),
        ],
    };
    let mut missing: Vec<&str> = required
        .iter()
        .filter(|(_, get)| panel.observations().iter().all(|o| get(o).is_none()))
        .map(|(name, _)| *name)
        .collect();
    if cfg.era == Era::Historical {
        for d in &cfg.deductions {
            if panel.observations().iter().all(|o| d.value(o).is_none())
                && !missing.contains(&d.column())
            {
                missing.push(d.column());
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "{:?} era requires columns absent from the panel: {}",
            cfg.era,
            missing.join(", ")
        )));
    }

    let mut out = panel.clone();
    let features = out.features_mut();
    for (o, f) in panel.observations().iter().zip(features.iter_mut()) {
        let (insolvency, noncore) = fundamentals_of(o, cfg);
        f.insolvency = insolvency;
        f.noncore = noncore;
        f.interaction = insolvency.zip(noncore).map(|(i, n)| i * n);
    }
    Ok(out)
}

/// Insolvency and noncore funding of a single observation.
pub(crate) fn fundamentals_of(o: &BankObservation, cfg: &FundamentalsConfig) -> (Option<f64>, Option<f64>) {
    match cfg.era {
        Era::Historical => {
            let deducted: Option<f64> = cfg.deductions.iter().map(|d| d.value(o)).sum::<Option<f64>>();
            let noncore = deducted.map(|d| (o.assets - d) / o.assets);
            (ratio(o.surplus_profit, o.equity), noncore)
        }
        Era::Modern => {
            let funding = o.time_deposits.zip(o.wholesale_funding).map(|(t, w)| t + w);
            (ratio(o.net_income, Some(o.assets)), ratio(funding, Some(o.assets)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuintileConfig {
    /// Look-back in years for the change in log assets.
    pub window: i32,
    /// Deflate assets by CPI before differencing.
    pub deflate: bool,
}

impl Default for QuintileConfig {
    fn default() -> Self {
        QuintileConfig { window: 3, deflate: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuintileOutcome {
    /// Aligned with the panel rows.
    pub quintiles: Vec<Option<u8>>,
    /// Periods whose cross-section had fewer than five valid banks.
    pub thin_periods: Vec<Period>,
}

/// Position of `(bank, period)` in a panel sorted by `(bank_id, period)`.
fn find_row(panel: &BankPanel, bank: &BankId, period: Period) -> Option<usize> {
    let obs = panel.observations();
    let start = obs.partition_point(|o| &o.bank_id < bank);
    let end = start + obs[start..].partition_point(|o| &o.bank_id == bank);
    obs[start..end]
        .binary_search_by_key(&period.index(), |o| o.period.index())
        .ok()
        .map(|i| start + i)
}

/// Within-period quintiles of the change in (optionally real) log assets.
pub fn asset_growth_quintiles(panel: &BankPanel, cfg: &QuintileConfig) -> Result<QuintileOutcome> {
    if cfg.window < 1 {
        return Err(Error::Validation("growth window must be at least one year".into()));
    }
    if cfg.deflate && panel.observations().iter().all(|o| o.cpi.is_none()) {
        return Err(Error::Config("deflated asset growth requires a cpi column".into()));
    }
    let level = |o: &BankObservation| -> Option<f64> {
        if cfg.deflate {
            o.cpi.filter(|c| *c > 0.0).map(|c| (o.assets / c).ln())
        } else {
            Some(o.assets.ln())
        }
    };

    let mut by_period: BTreeMap<i64, Vec<(f64, usize)>> = BTreeMap::new();
    for (i, o) in panel.observations().iter().enumerate() {
        let lagged = o.period.shifted_years(-cfg.window);
        let growth = find_row(panel, &o.bank_id, lagged)
            .and_then(|j| Some(level(o)? - level(&panel.observations()[j])?));
        if let Some(g) = growth.filter(|g| g.is_finite()) {
            by_period.entry(o.period.index()).or_default().push((g, i));
        }
    }

    let mut quintiles = vec![None; panel.len()];
    let mut thin_periods = Vec::new();
    for (_, mut group) in by_period {
        if group.len() < 5 {
            thin_periods.push(panel.observations()[group[0].1].period);
            continue;
        }
        let obs = panel.observations();
        group.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| obs[a.1].bank_id.cmp(&obs[b.1].bank_id)));
        let n = group.len();
        for (rank, &(_, row)) in group.iter().enumerate() {
            quintiles[row] = Some((5 * rank / n) as u8 + 1);
        }
    }
    Ok(QuintileOutcome { quintiles, thin_periods })
}

/// Fill log age and the three-year macro growth controls.
///
/// Macro series are read per period from the first observation carrying a
/// value; `window` is the look-back in years.
pub fn compute_controls(panel: &BankPanel, window: i32) -> BankPanel {
    let mut gdp: HashMap<i64, f64> = HashMap::new();
    let mut cpi: HashMap<i64, f64> = HashMap::new();
    for o in panel.observations() {
        if let Some(g) = o.gdp {
            gdp.entry(o.period.index()).or_insert(g);
        }
        if let Some(c) = o.cpi {
            cpi.entry(o.period.index()).or_insert(c);
        }
    }
    let growth = |series: &HashMap<i64, f64>, p: Period| -> Option<f64> {
        let now = series.get(&p.index())?;
        let then = series.get(&p.shifted_years(-window).index())?;
        (*then != 0.0).then(|| now / then - 1.0)
    };

    let mut out = panel.clone();
    for (o, f) in panel.observations().iter().zip(out.features_mut()) {
        f.gdp_growth_3y = growth(&gdp, o.period);
        f.inflation_3y = growth(&cpi, o.period);
        f.log_age = o.charter_date.and_then(|c| {
            let age = whole_years_between(c, o.period.end_date());
            (age >= 0).then(|| f64::from(age + 1).ln())
        });
    }
    out
}

/// End-to-end feature construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub fundamentals: FundamentalsConfig,
    #[serde(default)]
    pub quintiles: QuintileConfig,
    /// Failure horizons (years) to label.
    pub horizons: Vec<u32>,
    /// Drop banks younger than this many years; `None` keeps everyone.
    #[serde(default)]
    pub min_age: Option<i32>,
}

impl FeatureConfig {
    pub fn new(era: Era, horizons: Vec<u32>) -> Self {
        FeatureConfig {
            fundamentals: FundamentalsConfig::new(era),
            quintiles: QuintileConfig::default(),
            horizons,
            min_age: Some(3),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeatureReport {
    pub thin_periods: Vec<String>,
    pub dropped_after_failure: usize,
    pub unknown_failure_banks: Vec<String>,
    pub de_novo_removed: usize,
    pub missing_charter: usize,
}

/// Fundamentals, growth quintiles, controls, labels and the de novo filter,
/// in that order.
pub fn build_features(
    panel: &BankPanel,
    events: &[FailureEvent],
    cfg: &FeatureConfig,
) -> Result<(BankPanel, FeatureReport)> {
    let mut report = FeatureReport::default();
    let mut p = compute_fundamentals(panel, &cfg.fundamentals)?;
    let has_cpi = p.observations().iter().any(|o| o.cpi.is_some());
    let qcfg = QuintileConfig { deflate: cfg.quintiles.deflate && has_cpi, ..cfg.quintiles };
    let q = asset_growth_quintiles(&p, &qcfg)?;
    for (f, g) in p.features_mut().iter_mut().zip(q.quintiles) {
        f.growth_quintile = g;
    }
    report.thin_periods = q.thin_periods.iter().map(|p| p.to_string()).collect();
    p = compute_controls(&p, cfg.quintiles.window);

    let mut horizons = cfg.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    for h in horizons {
        let labelled = label_failures(&p, events, h)?;
        report.dropped_after_failure = report.dropped_after_failure.max(labelled.dropped_after_failure);
        if report.unknown_failure_banks.is_empty() {
            report.unknown_failure_banks =
                labelled.unknown_events.iter().map(|b| b.to_string()).collect();
        }
        p = labelled.panel;
    }
    if let Some(min_age) = cfg.min_age {
        let dn = filter_de_novo(&p, min_age);
        report.de_novo_removed = dn.removed;
        report.missing_charter = dn.missing_charter.len();
        p = dn.panel;
    }
    Ok((p, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(assets: f64, deposits: f64, equity: f64, notes: f64, sp: f64) -> BankObservation {
        BankObservation {
            bank_id: "1".into(),
            period: Period::annual(1890),
            assets,
            deposits: Some(deposits),
            equity: Some(equity),
            national_bank_notes: Some(notes),
            surplus_profit: Some(sp),
            ..Default::default()
        }
    }

    #[test]
    fn historical_fundamentals() {
        let panel = BankPanel::new(vec![hist(100.0, 80.0, 12.0, 5.0, 6.0)]).unwrap();
        let out = compute_fundamentals(&panel, &FundamentalsConfig::new(Era::Historical)).unwrap();
        let f = &out.features()[0];
        assert_eq!(f.noncore, Some(3.0 / 100.0));
        assert!((f.noncore.unwrap() - 0.03).abs() < 1e-15);
        assert_eq!(f.insolvency, Some(0.5));
        assert_eq!(f.interaction, Some(0.5 * (3.0 / 100.0)));
    }

    #[test]
    fn due_to_banks_deduction_is_configurable() {
        let mut o = hist(100.0, 80.0, 12.0, 5.0, 6.0);
        o.due_to_banks = Some(2.0);
        let panel = BankPanel::new(vec![o]).unwrap();
        let mut cfg = FundamentalsConfig::new(Era::Historical);
        cfg.deductions.push(NoncoreDeduction::DueToBanks);
        let out = compute_fundamentals(&panel, &cfg).unwrap();
        assert_eq!(out.features()[0].noncore, Some(1.0 / 100.0));
    }

    #[test]
    fn modern_fundamentals() {
        let o = BankObservation {
            bank_id: "1".into(),
            period: Period::annual(2000),
            assets: 200.0,
            time_deposits: Some(30.0),
            wholesale_funding: Some(10.0),
            net_income: Some(2.0),
            ..Default::default()
        };
        let panel = BankPanel::new(vec![o]).unwrap();
        let out = compute_fundamentals(&panel, &FundamentalsConfig::new(Era::Modern)).unwrap();
        assert_eq!(out.features()[0].noncore, Some(0.2));
        assert_eq!(out.features()[0].insolvency, Some(0.01));
    }

    #[test]
    fn missing_inputs_stay_missing() {
        let mut o = hist(100.0, 80.0, 12.0, 5.0, 6.0);
        o.national_bank_notes = None;
        let mut other = hist(100.0, 80.0, 0.0, 5.0, 6.0);
        other.period = Period::annual(1891);
        let panel = BankPanel::new(vec![o, other]).unwrap();
        let out = compute_fundamentals(&panel, &FundamentalsConfig::new(Era::Historical)).unwrap();
        assert_eq!(out.features()[0].noncore, None);
        assert_eq!(out.features()[0].interaction, None);
        assert_eq!(out.features()[1].insolvency, None);
    }

    #[test]
    fn absent_era_columns_name_the_columns() {
        let o = BankObservation { bank_id: "1".into(), assets: 1.0, ..Default::default() };
        let panel = BankPanel::new(vec![o]).unwrap();
        let err = compute_fundamentals(&panel, &FundamentalsConfig::new(Era::Modern)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("net_income") && msg.contains("wholesale_funding"), "{msg}");
    }

    fn growth_panel(growths: &[f64]) -> BankPanel {
        let mut rows = Vec::new();
        for (i, g) in growths.iter().enumerate() {
            let id = format!("b{i:02}");
            rows.push(BankObservation {
                bank_id: id.as_str().into(),
                period: Period::annual(1890),
                assets: 100.0,
                ..Default::default()
            });
            rows.push(BankObservation {
                bank_id: id.as_str().into(),
                period: Period::annual(1893),
                assets: 100.0 * g.exp(),
                ..Default::default()
            });
        }
        BankPanel::new(rows).unwrap()
    }

    fn nominal() -> QuintileConfig {
        QuintileConfig { window: 3, deflate: false }
    }

    #[test]
    fn quintiles_follow_order_statistics() {
        let panel = growth_panel(&[0.2, -0.2, 0.0, 0.1, -0.1]);
        let q = asset_growth_quintiles(&panel, &nominal()).unwrap();
        let at_1893: Vec<_> = panel
            .observations()
            .iter()
            .zip(&q.quintiles)
            .filter(|(o, _)| o.period.year == 1893)
            .map(|(_, q)| q.unwrap())
            .collect();
        assert_eq!(at_1893, vec![5, 1, 3, 4, 2]);
        assert!(q.thin_periods.is_empty());
    }

    #[test]
    fn equal_growth_ties_break_by_bank_id() {
        let panel = growth_panel(&[0.05; 10]);
        let q = asset_growth_quintiles(&panel, &nominal()).unwrap();
        let at_1893: Vec<_> = q.quintiles.iter().skip(1).step_by(2).map(|q| q.unwrap()).collect();
        assert_eq!(at_1893, vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
    }

    #[test]
    fn short_history_gets_missing_quintile() {
        let mut panel = growth_panel(&[0.0, 0.1, 0.2, 0.3, 0.4]);
        panel.retain(|o, _| !(o.bank_id.0 == "b00" && o.period.year == 1890));
        let q = asset_growth_quintiles(&panel, &nominal()).unwrap();
        assert_eq!(q.quintiles[0], None);
        assert!(q.quintiles[1..].iter().all(|q| q.is_none()));
        assert_eq!(q.thin_periods, vec![Period::annual(1893)]);
    }

    #[test]
    fn deflation_needs_cpi() {
        let panel = growth_panel(&[0.0; 5]);
        assert!(asset_growth_quintiles(&panel, &QuintileConfig::default()).is_err());
    }

    #[test]
    fn controls_use_three_year_growth_and_log_age() {
        let rows = (1890..=1893)
            .map(|y| BankObservation {
                bank_id: "a".into(),
                period: Period::annual(y),
                assets: 1.0,
                cpi: Some(100.0 + f64::from(y - 1890) * 10.0),
                gdp: Some(200.0),
                charter_date: crate::period::parse_date("1890").ok(),
                ..Default::default()
            })
            .collect();
        let panel = compute_controls(&BankPanel::new(rows).unwrap(), 3);
        let last = &panel.features()[3];
        assert!((last.inflation_3y.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(last.gdp_growth_3y, Some(0.0));
        assert_eq!(last.log_age, Some(4f64.ln()));
        assert_eq!(panel.features()[0].inflation_3y, None);
        assert_eq!(panel.features()[0].log_age, Some(0.0));
    }
}
