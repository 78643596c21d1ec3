//! Acceptance suite. Each test prints one PASS/FAIL line for its criterion
//! and then asserts it.

use std::collections::HashMap;
use std::sync::OnceLock;

use polarguard::{run_experiment, ExperimentConfig, ResultRecord};
use polarguard_core::construction::{bec_z_evolution, select_top_k};
use polarguard_core::polar::polar_encode;
use polarguard_core::wiretap::linear_equivocation;

const POLARIZATION_TOL: f64 = 0.05;
const RATE_TOL: f64 = 0.05;
const MIN_SECRET_RATE: f64 = 0.20;
const MAX_PE: f64 = 0.05;
const MAX_LEAKAGE: f64 = 0.01;
const PA_SLACK: f64 = 0.02;
const MAX_MISMATCH: f64 = 0.1;
const EQUIVOCATION_TOL: f64 = 0.05;
const MAX_LEAKAGE_RATIO: f64 = 0.01;

const POLARIZE: &str = r#"{"kind":"polarize","channel":{"kind":"erasure","param":0.5},
    "n":14,"n_min":8,"beta":0.25,"seed":1}"#;
const CONSTRUCT_N12: &str = r#"{"kind":"construct","channel":{"kind":"erasure","param":0.25},
    "n":12,"rate":0.70,"trials":2000,"seed":3}"#;
const CONSTRUCT_N8: &str = r#"{"kind":"construct","channel":{"kind":"erasure","param":0.25},
    "n":8,"rate":0.70,"trials":2000,"seed":3}"#;
const WIRETAP: &str = r#"{"kind":"simulate-wiretap","main":{"kind":"erasure","param":0.25},
    "eve":{"kind":"erasure","param":0.5},"n":12,"trials":2000,"seed":5}"#;
const HASH_CHECK: &str = r#"{"kind":"hash-check","input_bits":10,"key_bits":[1,2,3,4],
    "samples":100000,"seed":7}"#;
const KEYAGREE: &str = r#"{"kind":"keyagree","dist_main":{"values":[0.25]},"dist_eve":{"values":[0.5]},
    "super_blocks":8,"blocks_per_super":8,"n":10,"runs":20,
    "key_rule":{"rule":"margin","margin":0.1},"seed":8}"#;
const KEYAGREE_FADING_EVE: &str = r#"{"kind":"keyagree","dist_main":{"values":[0.3]},
    "dist_eve":{"values":[0.1,0.9]},"super_blocks":8,"blocks_per_super":8,"n":10,"runs":1,
    "key_rule":{"rule":"margin","margin":0.1},"seed":9}"#;
const KEYAGREE_STRONGER_EVE: &str = r#"{"kind":"keyagree","dist_main":{"values":[0.3]},
    "dist_eve":{"values":[0.05,0.5]},"super_blocks":8,"blocks_per_super":8,"n":10,"runs":1,
    "key_rule":{"rule":"margin","margin":0.1},"seed":10}"#;

const ALL_CONFIGS: [&str; 8] = [
    POLARIZE,
    CONSTRUCT_N12,
    CONSTRUCT_N8,
    WIRETAP,
    HASH_CHECK,
    KEYAGREE,
    KEYAGREE_FADING_EVE,
    KEYAGREE_STRONGER_EVE,
];

fn run(config: &str) -> ResultRecord {
    let cfg = ExperimentConfig::from_json_str(config, None, &[]).expect("valid config");
    run_experiment(&cfg).expect("experiment runs")
}

/// First run of each config, shared between its criterion and the
/// determinism check.
fn first_run(config: &'static str) -> &'static ResultRecord {
    static SLOTS: OnceLock<HashMap<&'static str, OnceLock<ResultRecord>>> = OnceLock::new();
    let slots = SLOTS.get_or_init(|| ALL_CONFIGS.iter().map(|c| (*c, OnceLock::new())).collect());
    slots[config].get_or_init(|| run(config))
}

fn m(record: &ResultRecord, name: &str) -> f64 {
    record
        .metric_f64(name)
        .unwrap_or_else(|| panic!("metric {name} missing"))
}

struct Clauses(Vec<(String, bool)>);

impl Clauses {
    fn new() -> Self {
        Clauses(Vec::new())
    }

    fn check(&mut self, text: String, ok: bool) -> &mut Self {
        self.0.push((text, ok));
        self
    }

    fn report(&self, criterion: u32) {
        let passed = self.0.iter().all(|(_, ok)| *ok);
        let body: Vec<String> = self
            .0
            .iter()
            .map(|(t, ok)| format!("{t} [{}]", if *ok { "ok" } else { "FAILED" }))
            .collect();
        println!(
            "{} criterion {criterion}: {}",
            if passed { "PASS" } else { "FAIL" },
            body.join("; ")
        );
        assert!(passed, "criterion {criterion} failed");
    }
}

#[test]
fn criterion_1_polarization() {
    let r = first_run(POLARIZE);
    let good = m(r, "fraction_good");
    let bad = m(r, "fraction_bad");
    let sweep: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("{}", row["fraction_good"]))
        .collect();
    Clauses::new()
        .check(
            format!(
                "fraction{{z<1e-3}} non-decreasing over n=8..14 ({})",
                sweep.join(", ")
            ),
            r.metric_bool("good_nondecreasing") == Some(true),
        )
        .check(
            "fraction{z>1-1e-3} non-decreasing over n=8..14".into(),
            r.metric_bool("bad_nondecreasing") == Some(true),
        )
        .check(
            format!("fraction{{z<1e-3}} at n=14 = {good:.4}, want 0.5 +/- {POLARIZATION_TOL}"),
            (good - 0.5).abs() <= POLARIZATION_TOL,
        )
        .check(
            format!("fraction{{z>1-1e-3}} at n=14 = {bad:.4}, want 0.5 +/- {POLARIZATION_TOL}"),
            (bad - 0.5).abs() <= POLARIZATION_TOL,
        )
        .report(1);
}

#[test]
fn criterion_2_rate_of_polarization() {
    let r = first_run(POLARIZE);
    let frac = m(r, "fraction_rate_threshold");
    // recompute from the exact table as an independent check of the metric
    let z = bec_z_evolution(0.5, 14).unwrap();
    let level = (-(16384f64.powf(0.25))).exp2();
    let direct = z.z.iter().filter(|&&v| v < level).count() as f64 / 16384.0;
    Clauses::new()
        .check(
            format!("metric equals direct count ({frac} vs {direct})"),
            frac == direct,
        )
        .check(
            format!("fraction{{z<2^-N^0.25}} at n=14 = {frac:.4}, want 0.5 +/- {RATE_TOL}"),
            (frac - 0.5).abs() <= RATE_TOL,
        )
        .report(2);
}

#[test]
fn criterion_3_block_error_bound() {
    let r12 = first_run(CONSTRUCT_N12);
    let r8 = first_run(CONSTRUCT_N8);
    let k = m(r12, "k");
    let (pe12, bound, pe8) = (
        m(r12, "pe_hat"),
        m(r12, "block_error_bound"),
        m(r8, "pe_hat"),
    );
    Clauses::new()
        .check(format!("K = {k}, want ceil(0.70*4096) = 2868"), k == 2868.0)
        .check(
            format!("n=12 P_e = {pe12:.4} <= sum Z = {bound:.4}"),
            pe12 <= bound,
        )
        .check(
            format!("n=12 P_e = {pe12:.4} < n=8 P_e = {pe8:.4}"),
            pe12 < pe8,
        )
        .report(3);
}

#[test]
fn criterion_4_degradation_ordering() {
    let mut violations = 0usize;
    for n in 1..=14 {
        let zm = bec_z_evolution(0.25, n).unwrap();
        let ze = bec_z_evolution(0.5, n).unwrap();
        violations += zm.z.iter().zip(&ze.z).filter(|(m, e)| e < m).count();
    }
    Clauses::new()
        .check(
            format!("{violations} positions with z_e < z_m over n=1..14"),
            violations == 0,
        )
        .report(4);
}

#[test]
fn criterion_5_wiretap_secrecy() {
    let r = first_run(WIRETAP);
    let (rate, pe, leak) = (
        m(r, "secret_rate"),
        m(r, "pe_hat"),
        m(r, "leakage_rate_bits_per_use"),
    );
    Clauses::new()
        .check(
            format!(
                "exact leakage oracle used ({})",
                r.metrics["leakage_method"]
            ),
            r.metrics["leakage_method"] == "exact-rank",
        )
        .check(
            format!("secret rate {rate:.4} >= {MIN_SECRET_RATE}"),
            rate >= MIN_SECRET_RATE,
        )
        .check(format!("P_e {pe:.4} <= {MAX_PE}"), pe <= MAX_PE)
        .check(
            format!("leakage {leak:.5} bits/use <= {MAX_LEAKAGE}"),
            leak <= MAX_LEAKAGE,
        )
        .report(5);
}

/// For every `(v_S, v_R)` and pattern `T`, the entropy of the secret given
/// the specific view `y_T`, by enumeration of the joint distribution.
/// Returns `(views checked, mismatches against the rank formula)`.
fn enumerate_code(len: usize, secret: &[usize], random: &[usize]) -> (usize, usize) {
    let free = secret.len() + random.len();
    let codewords: Vec<(u32, Vec<u8>)> = (0..1u32 << free)
        .map(|word| {
            let mut u = vec![0u8; len];
            for (k, &i) in secret.iter().chain(random).enumerate() {
                u[i] = ((word >> k) & 1) as u8;
            }
            (
                word & ((1u32 << secret.len()) - 1),
                polar_encode(&u).unwrap(),
            )
        })
        .collect();
    let mut checked = 0;
    let mut mismatches = 0;
    for pattern in 0..1u32 << len {
        let t: Vec<usize> = (0..len).filter(|j| (pattern >> j) & 1 == 1).collect();
        let formula = linear_equivocation(len, secret, random, &t).unwrap() as f64;
        let mut groups: HashMap<Vec<u8>, HashMap<u32, u32>> = HashMap::new();
        for (s, x) in &codewords {
            let view: Vec<u8> = t.iter().map(|&j| x[j]).collect();
            *groups.entry(view).or_default().entry(*s).or_default() += 1;
        }
        let mut average = 0.0;
        for counts in groups.values() {
            let total: u32 = counts.values().sum();
            let h: f64 = counts
                .values()
                .map(|&c| {
                    let p = f64::from(c) / f64::from(total);
                    -p * p.log2()
                })
                .sum();
            average += f64::from(total) / f64::from(1u32 << free) * h;
            // each view occurs for `total` of the (v_S, v_R) assignments
            checked += total as usize;
            if h != formula {
                mismatches += total as usize;
            }
        }
        if average != formula {
            mismatches += 1;
        }
    }
    (checked, mismatches)
}

fn leakage_oracle_summary() -> (usize, usize, usize) {
    let mut codes = 0;
    let mut checked = 0;
    let mut mismatches = 0;
    // every role assignment at N=4
    for roles in 0..81u32 {
        let (mut secret, mut random) = (Vec::new(), Vec::new());
        for i in 0..4usize {
            match (roles / 3u32.pow(i as u32)) % 3 {
                0 => secret.push(i),
                1 => random.push(i),
                _ => {}
            }
        }
        let (c, bad) = enumerate_code(4, &secret, &random);
        codes += 1;
        checked += c;
        mismatches += bad;
    }
    // every nested top-K pair at N=8
    let z = bec_z_evolution(0.5, 3).unwrap();
    for k_main in 0..=8 {
        for k_eve in 0..=k_main {
            let a_m = select_top_k(&z, k_main).unwrap();
            let a_e = select_top_k(&z, k_eve).unwrap();
            let secret: Vec<usize> = a_m.iter().copied().filter(|i| !a_e.contains(i)).collect();
            let (c, bad) = enumerate_code(8, &secret, &a_e);
            codes += 1;
            checked += c;
            mismatches += bad;
        }
    }
    (codes, checked, mismatches)
}

#[test]
fn criterion_6_leakage_oracle_soundness() {
    let (codes, checked, mismatches) = leakage_oracle_summary();
    Clauses::new()
        .check(
            format!("{codes} codes at N=4,8, {checked} (pattern, secret, randomization) cases, {mismatches} mismatches"),
            mismatches == 0,
        )
        .report(6);
}

#[test]
fn criterion_7_privacy_amplification() {
    let r = first_run(HASH_CHECK);
    let mut clauses = Clauses::new();
    clauses.check(format!("R(X) = {:.4}", m(r, "renyi_entropy")), true);
    for row in &r.rows {
        let g = |k: &str| row[k].as_f64().unwrap();
        let (rr, h, bound) = (g("r"), g("h_key_given_hash"), g("pa_bound"));
        let (coll, limit) = (g("collision_rate"), g("collision_limit"));
        // recompute the 3-sigma limit from r and the sample count
        let p = (-rr).exp2();
        let expected_limit = p + 3.0 * (p * (1.0 - p) / 1e5).sqrt();
        clauses
            .check(
                format!("r={rr}: H(K|G) = {h:.4} >= {bound:.4} - {PA_SLACK}"),
                h >= bound - PA_SLACK,
            )
            .check(
                format!("r={rr}: collisions {coll:.5} <= {limit:.5}"),
                coll <= limit && (limit - expected_limit).abs() < 1e-12,
            );
    }
    clauses.report(7);
}

#[test]
fn criterion_8_key_agreement() {
    let r = first_run(KEYAGREE);
    let fading = first_run(KEYAGREE_FADING_EVE);
    let stronger = first_run(KEYAGREE_STRONGER_EVE);
    let mismatch = m(r, "mismatch_frequency");
    let equiv = m(r, "mean_equivocation_per_use");
    let ratio = m(r, "max_leakage_proxy_ratio");
    Clauses::new()
        .check(
            format!("mismatch frequency {mismatch} <= {MAX_MISMATCH}"),
            mismatch <= MAX_MISMATCH,
        )
        .check(
            format!("equivocation per use {equiv:.4}, want 0.25 +/- {EQUIVOCATION_TOL}"),
            (equiv - 0.25).abs() <= EQUIVOCATION_TOL,
        )
        .check(
            format!("leakage proxy / r = {ratio:.2e} <= {MAX_LEAKAGE_RATIO}"),
            ratio <= MAX_LEAKAGE_RATIO,
        )
        .check(
            format!(
                "fading Eve uniform{{0.1,0.9}}: r = {}",
                m(fading, "min_r_bits")
            ),
            m(fading, "min_r_bits") > 0.0,
        )
        .check(
            format!(
                "Eve stronger on average (E[C_e] = {:.3} > C_m = 0.7): r = {}",
                1.0 - (0.05 + 0.5) / 2.0,
                m(stronger, "min_r_bits")
            ),
            m(stronger, "min_r_bits") > 0.0,
        )
        .report(8);
}

#[test]
fn criterion_9_determinism() {
    let mut differing = Vec::new();
    for config in ALL_CONFIGS {
        let first = first_run(config).metrics_json();
        let again = run(config).metrics_json();
        if first != again {
            differing.push(first_run(config).config.kind.to_string());
        }
    }
    let a = leakage_oracle_summary();
    let b = leakage_oracle_summary();
    Clauses::new()
        .check(
            format!(
                "{} configs re-run byte-identically (differing: {differing:?})",
                ALL_CONFIGS.len()
            ),
            differing.is_empty(),
        )
        .check("leakage oracle summary repeats".into(), a == b)
        .report(9);
}
