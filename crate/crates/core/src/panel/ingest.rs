use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{BankId, BankObservation, BankPanel, FailureEvent};
use crate::error::{Error, Result};
use crate::period::{parse_date, Period};

/// Fields of [`BankObservation`] that can be mapped from input columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    BankId,
    Date,
    Assets,
    Deposits,
    Equity,
    SurplusProfit,
    NationalBankNotes,
    DueToBanks,
    TimeDeposits,
    WholesaleFunding,
    NetIncome,
    Loans,
    CharterDate,
    Cpi,
    Gdp,
    Oreo,
    DemandDeposits,
    BrokeredDeposits,
}

impl Field {
    pub const ALL: [Field; 18] = [
        Field::BankId,
        Field::Date,
        Field::Assets,
        Field::Deposits,
        Field::Equity,
        Field::SurplusProfit,
        Field::NationalBankNotes,
        Field::DueToBanks,
        Field::TimeDeposits,
        Field::WholesaleFunding,
        Field::NetIncome,
        Field::Loans,
        Field::CharterDate,
        Field::Cpi,
        Field::Gdp,
        Field::Oreo,
        Field::DemandDeposits,
        Field::BrokeredDeposits,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Field::BankId => "bank_id",
            Field::Date => "date",
            Field::Assets => "assets",
            Field::Deposits => "deposits",
            Field::Equity => "equity",
            Field::SurplusProfit => "surplus_profit",
            Field::NationalBankNotes => "national_bank_notes",
            Field::DueToBanks => "due_to_banks",
            Field::TimeDeposits => "time_deposits",
            Field::WholesaleFunding => "wholesale_funding",
            Field::NetIncome => "net_income",
            Field::Loans => "loans",
            Field::CharterDate => "charter_date",
            Field::Cpi => "cpi",
            Field::Gdp => "gdp",
            Field::Oreo => "oreo",
            Field::DemandDeposits => "demand_deposits",
            Field::BrokeredDeposits => "brokered_deposits",
        }
    }

    fn is_required(&self) -> bool {
        matches!(self, Field::BankId | Field::Date | Field::Assets)
    }
}

/// Maps observation fields to column names in the input file.
///
/// Serialized as a JSON object `{field: column_name}`. Fields absent from the
/// mapping are treated as absent from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMapping(pub IndexMap<Field, String>);

impl Default for ColumnMapping {
    /// Every field read from the column of the same name.
    fn default() -> Self {
        ColumnMapping(Field::ALL.iter().map(|f| (*f, f.name().to_string())).collect())
    }
}

impl ColumnMapping {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn column(&self, field: Field) -> Option<&str> {
        self.0.get(&field).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Comma,
    Tab,
}

impl Delimiter {
    pub fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub delimiter: Delimiter,
    /// Inclusive calendar-year bounds of the configured era.
    pub year_bounds: Option<(i32, i32)>,
    /// Turn the first malformed row into a hard error instead of a reject.
    pub strict: bool,
}

/// A row that was read but not admitted to the panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub panel: BankPanel,
    pub rejects: Vec<Reject>,
}

impl LoadOutcome {
    /// The reject report: one `line_no<TAB>reason` line per rejected row.
    pub fn reject_report(&self) -> String {
        self.rejects
            .iter()
            .map(|r| format!("{}\t{}\n", r.line, r.reason))
            .collect()
    }
}

fn parse_number(raw: &str) -> std::result::Result<Option<f64>, ()> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t == "." {
        return Ok(None);
    }
    t.parse::<f64>().map(Some).map_err(|_| ())
}

/// Load a bank panel from delimiter-separated text with a header row.
pub fn load_panel<R: Read>(
    source: R,
    mapping: &ColumnMapping,
    opts: &LoadOptions,
) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter.byte())
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let index: HashMap<&str, usize> =
        headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();

    let mut columns: Vec<(Field, usize)> = Vec::new();
    let mut missing = Vec::new();
    for (field, col) in &mapping.0 {
        match index.get(col.as_str()) {
            Some(&i) => columns.push((*field, i)),
            None if field.is_required() => missing.push(format!("{} (column {col:?})", field.name())),
            None => {}
        }
    }
    for f in Field::ALL.iter().filter(|f| f.is_required()) {
        if mapping.column(*f).is_none() {
            missing.push(format!("{} (unmapped)", f.name()));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!("required columns missing: {}", missing.join(", "))));
    }

    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if opts.strict {
                    return Err(Error::Parse { line, reason: e.to_string() });
                }
                rejects.push(Reject { line, reason: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match parse_row(&record, headers.len(), &columns, opts) {
            Ok(mut obs) => {
                obs.line = line;
                rows.push(obs);
            }
            Err(RowError::Malformed(reason)) if opts.strict => {
                return Err(Error::Parse { line, reason })
            }
            Err(RowError::Malformed(reason)) | Err(RowError::Invariant(reason)) => {
                rejects.push(Reject { line, reason })
            }
        }
    }

    let panel = BankPanel::new(rows)?;
    Ok(LoadOutcome { panel, rejects })
}

enum RowError {
    Malformed(String),
    Invariant(String),
}

fn parse_row(
    record: &csv::StringRecord,
    arity: usize,
    columns: &[(Field, usize)],
    opts: &LoadOptions,
) -> std::result::Result<BankObservation, RowError> {
    if record.len() != arity {
        return Err(RowError::Malformed(format!(
            "wrong arity: expected {arity} fields, found {}",
            record.len()
        )));
    }
    let mut obs = BankObservation::default();
    let mut assets = None;
    for &(field, i) in columns {
        let raw = &record[i];
        let num = || {
            parse_number(raw).map_err(|_| {
                RowError::Malformed(format!("unparseable number {:?} in {}", raw, field.name()))
            })
        };
        match field {
            Field::BankId => {
                let id = raw.trim();
                if id.is_empty() {
                    return Err(RowError::Invariant("missing bank_id".into()));
                }
                obs.bank_id = BankId(id.to_string());
            }
            Field::Date => {
                obs.period = raw
                    .parse::<Period>()
                    .map_err(|e| RowError::Malformed(e.to_string()))?;
            }
            Field::CharterDate => {
                if !raw.trim().is_empty() {
                    obs.charter_date =
                        Some(parse_date(raw).map_err(|e| RowError::Malformed(e.to_string()))?);
                }
            }
            Field::Assets => assets = num()?,
            Field::Deposits => obs.deposits = num()?,
            Field::Equity => obs.equity = num()?,
            Field::SurplusProfit => obs.surplus_profit = num()?,
            Field::NationalBankNotes => obs.national_bank_notes = num()?,
            Field::DueToBanks => obs.due_to_banks = num()?,
            Field::TimeDeposits => obs.time_deposits = num()?,
            Field::WholesaleFunding => obs.wholesale_funding = num()?,
            Field::NetIncome => obs.net_income = num()?,
            Field::Loans => obs.loans = num()?,
            Field::Cpi => obs.cpi = num()?,
            Field::Gdp => obs.gdp = num()?,
            Field::Oreo => obs.oreo = num()?,
            Field::DemandDeposits => obs.demand_deposits = num()?,
            Field::BrokeredDeposits => obs.brokered_deposits = num()?,
        }
    }
    match assets {
        None => return Err(RowError::Invariant("missing assets".into())),
        Some(a) if !(a > 0.0) => return Err(RowError::Invariant("nonpositive assets".into())),
        Some(a) => obs.assets = a,
    }
    if let Some((lo, hi)) = opts.year_bounds {
        if obs.period.year < lo || obs.period.year > hi {
            return Err(RowError::Invariant(format!(
                "date {} outside era bounds {lo}..={hi}",
                obs.period
            )));
        }
    }
    Ok(obs)
}

/// Open and load a panel file, naming the path in any i/o error.
pub fn read_panel_file(
    path: &Path,
    mapping: &ColumnMapping,
    opts: &LoadOptions,
) -> Result<LoadOutcome> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_panel(file, mapping, opts)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write a panel using the default column names (the identity mapping).
pub fn write_panel<W: Write>(panel: &BankPanel, out: W, delimiter: Delimiter) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter.byte()).from_writer(out);
    w.write_record(Field::ALL.iter().map(|f| f.name()))?;
    for o in panel.observations() {
        w.write_record([
            o.bank_id.0.clone(),
            o.period.to_string(),
            o.assets.to_string(),
            fmt_opt(o.deposits),
            fmt_opt(o.equity),
            fmt_opt(o.surplus_profit),
            fmt_opt(o.national_bank_notes),
            fmt_opt(o.due_to_banks),
            fmt_opt(o.time_deposits),
            fmt_opt(o.wholesale_funding),
            fmt_opt(o.net_income),
            fmt_opt(o.loans),
            o.charter_date.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default(),
            fmt_opt(o.cpi),
            fmt_opt(o.gdp),
            fmt_opt(o.oreo),
            fmt_opt(o.demand_deposits),
            fmt_opt(o.brokered_deposits),
        ])?;
    }
    w.flush().map_err(|source| Error::Io { path: "<panel output>".into(), source })?;
    Ok(())
}

const FAILURE_COLUMNS: [&str; 5] = [
    "bank_id",
    "failure_date",
    "deposits_last_call",
    "deposits_at_failure",
    "assets_at_failure",
];

/// Load failure events. Columns are matched by name; only `bank_id` and
/// `failure_date` are required.
pub fn load_failures<R: Read>(source: R, delimiter: Delimiter) -> Result<Vec<FailureEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter.byte())
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let pos = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(id_col), Some(date_col)) = (pos("bank_id"), pos("failure_date")) else {
        return Err(Error::Config(
            "failure file needs bank_id and failure_date columns".into(),
        ));
    };
    let optional: Vec<Option<usize>> = FAILURE_COLUMNS[2..].iter().map(|c| pos(c)).collect();

    let mut events = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: Option<usize>| -> Result<Option<f64>> {
            match i {
                None => Ok(None),
                Some(i) => parse_number(&record[i]).map_err(|_| Error::Parse {
                    line,
                    reason: format!("unparseable number {:?}", &record[i]),
                }),
            }
        };
        let failure_date = record[date_col]
            .parse::<Period>()
            .map_err(|e| Error::Parse { line, reason: e.to_string() })?;
        events.push(FailureEvent {
            bank_id: BankId(record[id_col].trim().to_string()),
            failure_date,
            deposits_last_call: get(optional[0])?,
            deposits_at_failure: get(optional[1])?,
            assets_at_failure: get(optional[2])?,
        });
    }
    Ok(events)
}

pub fn write_failures<W: Write>(events: &[FailureEvent], out: W, delimiter: Delimiter) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter.byte()).from_writer(out);
    w.write_record(FAILURE_COLUMNS)?;
    for e in events {
        w.write_record([
            e.bank_id.0.clone(),
            e.failure_date.to_string(),
            fmt_opt(e.deposits_last_call),
            fmt_opt(e.deposits_at_failure),
            fmt_opt(e.assets_at_failure),
        ])?;
    }
    w.flush().map_err(|source| Error::Io { path: "<failure output>".into(), source })?;
    Ok(())
}
