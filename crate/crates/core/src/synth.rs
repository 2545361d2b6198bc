//! Seeded synthetic data with a known data-generating process.
//!
//! Every bank slot, receivership record and the macro series draw from their
//! own ChaCha8 stream derived from the seed, so output does not depend on how
//! work is scheduled across threads.

use std::collections::HashMap;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{AggregateSeries, AggregateYear};
use crate::error::{Error, Result};
use crate::panel::{fundamentals_of, BankId, BankObservation, BankPanel, Era, FailureEvent, FundamentalsConfig};
use crate::period::Period;
use crate::prediction::{ModelEstimator, ModelSpec, Regressor};
use crate::receivership::ReceivershipRecord;

const MACRO_STREAM: u64 = 0;
const RECEIVERSHIP_STREAM_BASE: u64 = 1 << 40;
const NOTES_SHARE: f64 = 0.05;
const NONCORE_CAP: f64 = 0.6;

/// Coefficients of the true one-year failure logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrueCoefficients {
    pub intercept: f64,
    pub insolvency: f64,
    pub noncore: f64,
    pub interaction: f64,
}

impl Default for TrueCoefficients {
    fn default() -> Self {
        TrueCoefficients { intercept: -4.0, insolvency: -3.0, noncore: 5.0, interaction: 0.0 }
    }
}

impl TrueCoefficients {
    pub fn probability(&self, insolvency: f64, noncore: f64) -> f64 {
        let eta = self.intercept
            + self.insolvency * insolvency
            + self.noncore * noncore
            + self.interaction * insolvency * noncore;
        1.0 / (1.0 + (-eta).exp())
    }
}

/// Bivariate normal draws for insolvency and noncore funding (noncore is
/// clipped to `[0, 0.6]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureDistribution {
    pub insolvency_mean: f64,
    pub insolvency_sd: f64,
    pub noncore_mean: f64,
    pub noncore_sd: f64,
    pub correlation: f64,
}

impl Default for FeatureDistribution {
    fn default() -> Self {
        FeatureDistribution {
            insolvency_mean: 0.3,
            insolvency_sd: 0.3,
            noncore_mean: 0.2,
            noncore_sd: 0.1,
            correlation: -0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceivershipDgp {
    pub n_records: usize,
    pub leverage_mean: f64,
    pub leverage_sd: f64,
    pub recovery_mean: f64,
    pub recovery_sd: f64,
    pub correlation: f64,
    /// Run probability is `logistic(run_intercept + run_slope * l / R)`.
    pub run_intercept: f64,
    pub run_slope: f64,
}

impl Default for ReceivershipDgp {
    fn default() -> Self {
        ReceivershipDgp {
            n_records: 500,
            leverage_mean: 0.85,
            leverage_sd: 0.1,
            recovery_mean: 0.55,
            recovery_sd: 0.2,
            correlation: -0.2,
            run_intercept: -2.0,
            run_slope: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub n_banks: usize,
    pub n_years: usize,
    pub seed: u64,
    pub start_year: i32,
    pub era: Era,
    pub coefficients: TrueCoefficients,
    pub features: FeatureDistribution,
    pub receiverships: ReceivershipDgp,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            n_banks: 500,
            n_years: 30,
            seed: 0,
            start_year: 1880,
            era: Era::Historical,
            coefficients: TrueCoefficients::default(),
            features: FeatureDistribution::default(),
            receiverships: ReceivershipDgp::default(),
        }
    }
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_banks == 0 || self.n_years == 0 {
            return Err(Error::Config("n_banks and n_years must be positive".into()));
        }
        let f = &self.features;
        if !(f.insolvency_sd > 0.0) || !(f.noncore_sd > 0.0) {
            return Err(Error::Config("feature standard deviations must be positive".into()));
        }
        if !(f.correlation.abs() < 1.0) {
            return Err(Error::Config("feature correlation must lie in (-1, 1)".into()));
        }
        if !(0.0..NONCORE_CAP).contains(&f.noncore_mean) {
            return Err(Error::Config(format!("noncore mean must lie in [0, {NONCORE_CAP})")));
        }
        let c = &self.coefficients;
        if ![c.intercept, c.insolvency, c.noncore, c.interaction, f.insolvency_mean]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Config("coefficients and means must be finite".into()));
        }
        let r = &self.receiverships;
        if !(r.correlation.abs() < 1.0) || !(r.leverage_sd >= 0.0) || !(r.recovery_sd >= 0.0) {
            return Err(Error::Config("invalid receivership distribution".into()));
        }
        Ok(())
    }

    /// A specification matching the true DGP.
    pub fn matching_spec(&self) -> ModelSpec {
        ModelSpec::new(
            vec![Regressor::Insolvency, Regressor::Noncore, Regressor::Interaction],
            ModelEstimator::Logit,
            1,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: BankPanel,
    pub failures: Vec<FailureEvent>,
    /// True probability of failing within the next year, aligned with panel rows.
    pub probabilities: Vec<f64>,
}

impl SyntheticPanel {
    pub fn truth_map(&self) -> HashMap<(BankId, Period), f64> {
        self.panel
            .observations()
            .iter()
            .zip(&self.probabilities)
            .map(|(o, p)| ((o.bank_id.clone(), o.period), *p))
            .collect()
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn correlated(rng: &mut ChaCha8Rng, rho: f64) -> (f64, f64) {
    let z1 = normal(rng);
    let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * normal(rng);
    (z1, z2)
}

struct Macro {
    cpi: Vec<f64>,
    gdp: Vec<f64>,
}

fn macro_series(cfg: &DgpConfig) -> Macro {
    let mut rng = stream(cfg.seed, MACRO_STREAM);
    let (mut cpi, mut gdp) = (vec![100.0], vec![100.0]);
    for _ in 1..cfg.n_years {
        let c = *cpi.last().unwrap() * (0.01 + 0.03 * normal(&mut rng)).exp();
        let g = *gdp.last().unwrap() * (0.03 + 0.03 * normal(&mut rng)).exp();
        cpi.push(c);
        gdp.push(g);
    }
    Macro { cpi, gdp }
}

fn jan1(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year")
}

type SlotOutput = (Vec<(BankObservation, f64)>, Vec<FailureEvent>);

fn simulate_slot(cfg: &DgpConfig, macros: &Macro, slot: usize) -> SlotOutput {
    let mut rng = stream(cfg.seed, slot as u64 + 1);
    let fcfg = FundamentalsConfig::new(cfg.era);
    let f = &cfg.features;
    let mut rows = Vec::with_capacity(cfg.n_years);
    let mut events = Vec::new();

    let mut generation = 0u32;
    let mut id: BankId = format!("s{slot:06}-{generation}").into();
    let mut charter = jan1(cfg.start_year - rng.gen_range(3..=40));
    let mut assets = (10.0 + 2.0 * normal(&mut rng)).exp().max(1.0);

    for t in 0..cfg.n_years {
        let year = cfg.start_year + t as i32;
        let (z1, z2) = correlated(&mut rng, f.correlation);
        let insolvency = f.insolvency_mean + f.insolvency_sd * z1;
        let noncore = (f.noncore_mean + f.noncore_sd * z2).clamp(0.0, NONCORE_CAP);
        let equity_share: f64 = rng.gen_range(0.08..0.25);

        let mut o = BankObservation {
            bank_id: id.clone(),
            period: Period::annual(year),
            assets,
            charter_date: Some(charter),
            cpi: Some(macros.cpi[t]),
            gdp: Some(macros.gdp[t]),
            loans: Some(assets * rng.gen_range(0.4..0.7)),
            ..Default::default()
        };
        let equity = equity_share * assets;
        match cfg.era {
            Era::Historical => {
                let notes = NOTES_SHARE * assets;
                o.equity = Some(equity);
                o.surplus_profit = Some(insolvency * equity);
                o.national_bank_notes = Some(notes);
                o.deposits = Some(assets - equity - notes - noncore * assets);
            }
            Era::Modern => {
                let wholesale = 0.3 * noncore * assets;
                o.equity = Some(equity);
                o.net_income = Some(insolvency * 0.05 * assets);
                o.time_deposits = Some(0.7 * noncore * assets);
                o.wholesale_funding = Some(wholesale);
                o.deposits = Some(assets - equity - wholesale);
            }
        }
        let (ins, nc) = fundamentals_of(&o, &fcfg);
        let p = cfg.coefficients.probability(ins.unwrap_or(0.0), nc.unwrap_or(0.0));
        let deposits = o.deposits.unwrap_or(0.0);
        rows.push((o, p));

        if rng.gen::<f64>() < p {
            let outflow = (-0.05 + 0.1 * normal(&mut rng)).max(-0.9);
            events.push(FailureEvent {
                bank_id: id.clone(),
                failure_date: Period::annual(year + 1),
                deposits_last_call: Some(deposits),
                deposits_at_failure: Some(deposits * (1.0 + outflow)),
                assets_at_failure: Some(assets * 0.95),
            });
            generation += 1;
            id = format!("s{slot:06}-{generation}").into();
            charter = jan1(year + 1);
            assets = (10.0 + 2.0 * normal(&mut rng)).exp().max(1.0);
        } else {
            assets *= (0.03 + 0.08 * normal(&mut rng)).exp();
        }
    }
    (rows, events)
}

/// Simulate a panel of `n_banks` slots over `n_years`; a failed bank is
/// replaced by a new entrant the following year.
pub fn generate_panel(cfg: &DgpConfig) -> Result<SyntheticPanel> {
    cfg.validate()?;
    let macros = macro_series(cfg);
    let slots: Vec<SlotOutput> = (0..cfg.n_banks)
        .into_par_iter()
        .map(|slot| simulate_slot(cfg, &macros, slot))
        .collect();
    let mut rows = Vec::with_capacity(cfg.n_banks * cfg.n_years);
    let mut failures = Vec::new();
    for (r, e) in slots {
        rows.extend(r);
        failures.extend(e);
    }
    rows.sort_by(|a, b| (&a.0.bank_id, a.0.period).cmp(&(&b.0.bank_id, b.0.period)));
    let (observations, probabilities): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let panel = BankPanel::new(observations)?;
    Ok(SyntheticPanel { panel, failures, probabilities })
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

const CAUSES: [&str; 6] = [
    "Injudicious banking",
    "Fraud",
    "Excessive loans to others",
    "Local financial depression",
    "Incompetent management",
    "Depreciation of securities",
];

fn receivership_record(cfg: &DgpConfig, i: usize) -> ReceivershipRecord {
    let d = &cfg.receiverships;
    let mut rng = stream(cfg.seed, RECEIVERSHIP_STREAM_BASE + i as u64);
    let (z1, z2) = correlated(&mut rng, d.correlation);
    let leverage = (d.leverage_mean + d.leverage_sd * z1).clamp(0.2, 1.5);
    let recovery = (d.recovery_mean + d.recovery_sd * z2).clamp(0.05, 1.2);
    let run = rng.gen::<f64>() < logistic(d.run_intercept + d.run_slope * leverage / recovery);

    let assets = (12.0 + normal(&mut rng)).exp();
    let additional = assets * rng.gen_range(0.0..0.1);
    let base = assets + additional;
    let offsets = 0.02 * base;
    let secured = 0.03 * base;
    let claims = (leverage * base - offsets - secured).max(0.0);
    let deposits_last_call = assets * rng.gen_range(0.5..0.8);
    let growth = if run { -rng.gen_range(0.1..0.4) } else { rng.gen_range(-0.05..0.05) };
    let good = rng.gen_range(0.1..0.7);
    let doubtful = rng.gen_range(0.0..(1.0 - good));
    let worthless = 1.0 - good - doubtful;
    let appointed = jan1(rng.gen_range(1880..1930)) + Duration::days(rng.gen_range(0..365));
    let closed = appointed + Duration::days(rng.gen_range(365..3000));
    let cause = if run { "Closed by run" } else { CAUSES[rng.gen_range(0..CAUSES.len())] };

    ReceivershipRecord {
        bank_id: format!("r{i:06}").into(),
        receiver_appointed: Some(appointed),
        closed: Some(closed),
        assets_at_suspension: assets,
        additional_assets_received: additional,
        collected_from_assets: recovery * base,
        collected_from_shareholders: assets * rng.gen_range(0.0..0.1),
        claims_proved: claims,
        secured_preferred_paid: secured,
        offsets,
        deposits_at_suspension: Some(deposits_last_call * (1.0 + growth)),
        deposits_last_call: Some(deposits_last_call),
        estimated_good: Some(good * assets),
        estimated_doubtful: Some(doubtful * assets),
        estimated_worthless: Some(worthless * assets),
        dividends_paid_pct: Some((recovery / leverage).min(1.0)),
        cause: cause.to_string(),
    }
}

/// Receivership records with correlated leverage and recovery and a run flag
/// linked to `l / R`.
pub fn generate_receiverships(cfg: &DgpConfig) -> Result<Vec<ReceivershipRecord>> {
    cfg.validate()?;
    Ok((0..cfg.receiverships.n_records)
        .into_par_iter()
        .map(|i| receivership_record(cfg, i))
        .collect())
}

/// A well-specified aggregate failure-rate process: the predicted rate `p_t`
/// varies by year and the realized rate is `Binomial(n_banks, p_t) / n_banks`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateDgp {
    pub n_years: usize,
    pub n_banks: u64,
    pub seed: u64,
    pub start_year: i32,
    /// Mean and standard deviation of the log-odds of `p_t`.
    pub logit_mean: f64,
    pub logit_sd: f64,
}

impl Default for AggregateDgp {
    fn default() -> Self {
        AggregateDgp { n_years: 60, n_banks: 5_000, seed: 0, start_year: 1900, logit_mean: -4.0, logit_sd: 0.6 }
    }
}

pub fn generate_aggregate_series(cfg: &AggregateDgp) -> Result<AggregateSeries> {
    if cfg.n_banks == 0 || cfg.n_years == 0 {
        return Err(Error::Config("aggregate DGP needs banks and years".into()));
    }
    let mut rng = stream(cfg.seed, MACRO_STREAM);
    let years = (0..cfg.n_years)
        .map(|t| {
            let p = logistic(cfg.logit_mean + cfg.logit_sd * normal(&mut rng));
            let failures = Binomial::new(cfg.n_banks, p).expect("p in (0, 1)").sample(&mut rng);
            AggregateYear {
                year: cfg.start_year + t as i32,
                predicted: Some(p),
                actual: Some(failures as f64 / cfg.n_banks as f64),
                n_banks: cfg.n_banks as usize,
            }
        })
        .collect();
    Ok(AggregateSeries { years })
}
