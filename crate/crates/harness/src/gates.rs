//! Pass/fail gates over a result record, one set per experiment kind.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::record::ResultRecord;

/// Allowed gap between a measured fraction or rate and its capacity target.
pub const CAPACITY_TOLERANCE: f64 = 0.05;
pub const MAX_BLOCK_ERROR: f64 = 0.05;
pub const MAX_LEAKAGE_PER_USE: f64 = 0.01;
pub const MAX_KEY_MISMATCH: f64 = 0.1;
/// Leakage proxy allowed per key bit.
pub const MAX_LEAKAGE_RATIO: f64 = 0.01;
/// Slack on the privacy-amplification bound, in bits.
pub const PA_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

impl Gate {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("<= {limit}"),
            passed: value <= limit,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!(">= {limit}"),
            passed: value >= limit,
        }
    }

    fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("{target} +/- {tol}"),
            passed: (value - target).abs() <= tol,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            limit: "true".into(),
            passed: ok,
        }
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {} (want {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit
        )
    }
}

pub fn evaluate(record: &ResultRecord) -> Vec<Gate> {
    let m = |k: &str| record.metric_f64(k).unwrap_or(f64::NAN);
    let b = |k: &str| record.metric_bool(k).unwrap_or(false);
    match record.config.kind {
        ExperimentKind::Polarize => {
            let cap = m("capacity");
            vec![
                Gate::holds("fraction_good non-decreasing in n", b("good_nondecreasing")),
                Gate::holds("fraction_bad non-decreasing in n", b("bad_nondecreasing")),
                Gate::within("fraction_good", m("fraction_good"), cap, CAPACITY_TOLERANCE),
                Gate::within(
                    "fraction_bad",
                    m("fraction_bad"),
                    1.0 - cap,
                    CAPACITY_TOLERANCE,
                ),
                Gate::within(
                    "fraction_rate_threshold",
                    m("fraction_rate_threshold"),
                    cap,
                    CAPACITY_TOLERANCE,
                ),
            ]
        }
        ExperimentKind::Construct => match record.metric_f64("pe_hat") {
            Some(pe) => vec![Gate::at_most("pe_hat", pe, m("block_error_bound"))],
            None => Vec::new(),
        },
        ExperimentKind::SimulateWiretap => vec![
            Gate::at_least(
                "secret_rate",
                m("secret_rate"),
                m("secrecy_capacity_ref") - CAPACITY_TOLERANCE,
            ),
            Gate::at_most("pe_hat", m("pe_hat"), MAX_BLOCK_ERROR),
            Gate::at_most(
                "leakage_rate_bits_per_use",
                m("leakage_rate_bits_per_use"),
                MAX_LEAKAGE_PER_USE,
            ),
        ],
        ExperimentKind::Keyagree => vec![
            Gate::at_most(
                "mismatch_frequency",
                m("mismatch_frequency"),
                MAX_KEY_MISMATCH,
            ),
            Gate::within(
                "mean_equivocation_per_use",
                m("mean_equivocation_per_use"),
                m("expected_secrecy"),
                CAPACITY_TOLERANCE,
            ),
            Gate::at_most(
                "max_leakage_proxy_ratio",
                m("max_leakage_proxy_ratio"),
                MAX_LEAKAGE_RATIO,
            ),
            Gate::at_least("min_r_bits", m("min_r_bits"), 1.0),
        ],
        ExperimentKind::HashCheck => record
            .rows
            .iter()
            .flat_map(|row| {
                let g = |k: &str| row.get(k).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
                let r = g("r");
                [
                    Gate::at_least(
                        format!("h_key_given_hash r={r}"),
                        g("h_key_given_hash"),
                        g("pa_bound") - PA_SLACK,
                    ),
                    Gate::at_most(
                        format!("collision_rate r={r}"),
                        g("collision_rate"),
                        g("collision_limit"),
                    ),
                ]
            })
            .collect(),
    }
}

pub fn all_passed(gates: &[Gate]) -> bool {
    gates.iter().all(|g| g.passed)
}
