use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CauseCategory {
    EconomicConditions,
    ExcessiveLending,
    Losses,
    Fraud,
    Governance,
    Run,
    Other,
    Unclassified,
}

impl CauseCategory {
    pub const ALL: [CauseCategory; 8] = [
        CauseCategory::EconomicConditions,
        CauseCategory::ExcessiveLending,
        CauseCategory::Losses,
        CauseCategory::Fraud,
        CauseCategory::Governance,
        CauseCategory::Run,
        CauseCategory::Other,
        CauseCategory::Unclassified,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseRule {
    pub pattern: String,
    pub category: CauseCategory,
}

/// Ordered pattern table; earlier rules take precedence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CauseMapping(pub Vec<CauseRule>);

const DEFAULT_RULES: &[(&str, CauseCategory)] = &[
    ("fraud", CauseCategory::Fraud),
    ("fraudulent management", CauseCategory::Fraud),
    ("dishonesty", CauseCategory::Fraud),
    ("dishonesty of officers", CauseCategory::Fraud),
    ("defalcation", CauseCategory::Fraud),
    ("defalcation of officers", CauseCategory::Fraud),
    ("embezzlement", CauseCategory::Fraud),
    ("excessive loans to officers and directors", CauseCategory::Fraud),
    ("excessive loans to insiders", CauseCategory::Fraud),
    ("excessive loans to others", CauseCategory::ExcessiveLending),
    ("excessive loans", CauseCategory::ExcessiveLending),
    ("excessive lending", CauseCategory::ExcessiveLending),
    ("loans in excess of legal limit", CauseCategory::ExcessiveLending),
    ("losses", CauseCategory::Losses),
    ("injudicious banking", CauseCategory::Losses),
    ("injudicious loans", CauseCategory::Losses),
    ("inability to realize on assets", CauseCategory::Losses),
    ("unable to realize on assets", CauseCategory::Losses),
    ("depleted reserves", CauseCategory::Losses),
    ("depreciation of securities", CauseCategory::Losses),
    ("economic conditions", CauseCategory::EconomicConditions),
    ("local financial depression", CauseCategory::EconomicConditions),
    ("general depression", CauseCategory::EconomicConditions),
    ("crop failure", CauseCategory::EconomicConditions),
    ("crop losses", CauseCategory::EconomicConditions),
    ("deflation", CauseCategory::EconomicConditions),
    ("shrinkage in values", CauseCategory::EconomicConditions),
    ("robbery", CauseCategory::EconomicConditions),
    ("incompetent management", CauseCategory::Governance),
    ("bad management", CauseCategory::Governance),
    ("poor management", CauseCategory::Governance),
    ("mismanagement", CauseCategory::Governance),
    ("closed by run", CauseCategory::Run),
    ("closed by a run", CauseCategory::Run),
    ("run", CauseCategory::Run),
    ("heavy withdrawals", CauseCategory::Run),
    ("anticipation of a run", CauseCategory::Run),
    ("rumors of a run", CauseCategory::Run),
    ("lack of public confidence", CauseCategory::Run),
    ("other", CauseCategory::Other),
    ("other causes", CauseCategory::Other),
];

impl Default for CauseMapping {
    fn default() -> Self {
        CauseMapping(
            DEFAULT_RULES
                .iter()
                .map(|(p, c)| CauseRule { pattern: (*p).to_string(), category: *c })
                .collect(),
        )
    }
}

impl CauseMapping {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn normalize(s: &str) -> String {
    let lower = s.to_lowercase();
    let collapsed = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_end_matches(['.', ';', ',']).trim().to_string()
}

/// Map an OCC cause string to a category.
///
/// The string and each of its comma- or semicolon-separated clauses are
/// compared exactly (after case and whitespace normalization) with the rule
/// patterns; the first rule matching any of them decides. Strings no rule
/// matches are `Unclassified`.
pub fn classify_cause(cause: &str, mapping: &CauseMapping) -> CauseCategory {
    let whole = normalize(cause);
    if whole.is_empty() {
        return CauseCategory::Unclassified;
    }
    let mut candidates = vec![whole.clone()];
    candidates.extend(whole.split([',', ';']).map(normalize).filter(|c| !c.is_empty()));
    mapping
        .0
        .iter()
        .find(|rule| {
            let p = normalize(&rule.pattern);
            candidates.contains(&p)
        })
        .map_or(CauseCategory::Unclassified, |r| r.category)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let m = CauseMapping::default();
        assert_eq!(classify_cause("Closed by run", &m), CauseCategory::Run);
        assert_eq!(classify_cause("  CLOSED   by a run. ", &m), CauseCategory::Run);
        assert_eq!(
            classify_cause("Excessive loans to others, injudicious banking", &m),
            CauseCategory::ExcessiveLending
        );
        assert_eq!(classify_cause("Injudicious banking; fraud", &m), CauseCategory::Fraud);
        assert_eq!(classify_cause("", &m), CauseCategory::Unclassified);
        assert_eq!(classify_cause("act of god", &m), CauseCategory::Unclassified);
    }

    #[test]
    fn precedence_follows_config_order() {
        let m = CauseMapping::from_json(
            r#"[{"pattern": "injudicious banking", "category": "losses"},
                {"pattern": "excessive loans to others", "category": "excessive_lending"}]"#,
        )
        .unwrap();
        assert_eq!(classify_cause("Excessive loans to others, injudicious banking", &m), CauseCategory::Losses);
    }

    proptest! {
        #[test]
        fn total_on_arbitrary_text(s in ".{0,60}") {
            let c = classify_cause(&s, &CauseMapping::default());
            prop_assert!(CauseCategory::ALL.contains(&c));
        }
    }
}
