//! The acceptance summary keeps its schema and is reproducible.

use fdlab::harness::acceptance::{run_acceptance, AcceptanceOptions};
use fdlab::spectral::lambda_improved;
use fdlab::{Branch, Result};
use serde_json::Value;

fn shape(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let p = format!("{path}.{k}");
                if path.ends_with("metrics") {
                    continue;
                }
                out.push(p.clone());
                shape(x, &p, out);
            }
        }
        Value::Array(items) => {
            if let Some(first) = items.first() {
                shape(first, &format!("{path}[]"), out);
            }
        }
        _ => {}
    }
}

fn quick() -> AcceptanceOptions {
    AcceptanceOptions {
        only: vec![1, 8],
        ..AcceptanceOptions::default()
    }
}

#[test]
fn schema_matches_golden_file() {
    let summary = run_acceptance(&quick());
    let value: Value = serde_json::from_str(&summary.to_json()).unwrap();
    let mut keys = Vec::new();
    shape(&value, "", &mut keys);
    keys.sort();
    let golden = include_str!("golden/acceptance_schema.txt");
    assert_eq!(keys.join("\n"), golden.trim_end());
}

#[test]
fn summary_text_is_reproducible() {
    assert_eq!(run_acceptance(&quick()).to_json(), run_acceptance(&quick()).to_json());
}

fn shifted_continuum(alpha: f64, d: usize) -> Result<(f64, Branch)> {
    lambda_improved(alpha, d).map(|(v, b)| match b {
        Branch::Continuum => (v + 0.5, b),
        _ => (v, b),
    })
}

#[test]
fn corrupted_table_fails_only_the_rate_identity() {
    let opts = AcceptanceOptions {
        lambda_table: shifted_continuum,
        ..quick()
    };
    let summary = run_acceptance(&opts);
    assert!(!summary.passed);
    assert_eq!(summary.failed, ["rate identity"]);
    assert!(summary.criteria.iter().find(|c| c.id == 8).unwrap().passed);
}
