//! Required excess return `s` on deposits solving
//! `(1 - p) u(1 + r + s) + p u(1 - l) = u(1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;
const INITIAL_UPPER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    RiskNeutral,
    Log,
    Crra { gamma: f64 },
}

impl Utility {
    fn u(&self, c: f64) -> f64 {
        match *self {
            Utility::RiskNeutral => c,
            Utility::Log => c.ln(),
            Utility::Crra { gamma } if gamma == 1.0 => c.ln(),
            Utility::Crra { gamma } => (c.powf(1.0 - gamma) - 1.0) / (1.0 - gamma),
        }
    }
}

fn check(p: f64, loss: f64, utility: Utility) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Validation(format!("failure probability must lie in [0, 1), got {p}")));
    }
    if !(0.0..=1.0).contains(&loss) {
        return Err(Error::Validation(format!("loss rate must lie in [0, 1], got {loss}")));
    }
    if let Utility::Crra { gamma } = utility {
        if !(gamma > 0.0) {
            return Err(Error::Validation(format!("CRRA coefficient must be positive, got {gamma}")));
        }
    }
    if loss == 1.0 && utility != Utility::RiskNeutral {
        return Err(Error::Undefined("utility of zero consumption is undefined; loss rate of 1".into()));
    }
    Ok(())
}

/// Closed form for risk neutrality, bisection otherwise.
pub fn required_excess_return(p: f64, loss: f64, r: f64, utility: Utility) -> Result<f64> {
    if utility == Utility::RiskNeutral {
        check(p, loss, utility)?;
        return Ok(p * loss / (1.0 - p) - r);
    }
    required_excess_return_numeric(p, loss, r, utility)
}

/// Bisection on `s` starting from `[-r, 10]`; the upper end doubles until the
/// root is bracketed.
pub fn required_excess_return_numeric(p: f64, loss: f64, r: f64, utility: Utility) -> Result<f64> {
    check(p, loss, utility)?;
    let f = |s: f64| (1.0 - p) * utility.u(1.0 + r + s) + p * utility.u(1.0 - loss) - utility.u(1.0);
    let mut lo = -r;
    let mut hi = INITIAL_UPPER.max(lo + 1.0);
    while f(hi) < 0.0 {
        hi = lo + 2.0 * (hi - lo);
        if !hi.is_finite() {
            return Err(Error::Undefined("required excess return is unbounded".into()));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(hi).abs() < f(lo).abs() { hi } else { lo })
}

/// Excess returns above 100% are reported as 100%.
pub fn trimmed(s: f64) -> f64 {
    s.min(1.0)
}
