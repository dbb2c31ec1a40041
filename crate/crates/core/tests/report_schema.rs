//! The emitted report must match the committed schema file field-for-field.

use rcf_core::pipeline::{analyze, AnalysisConfig};
use rcf_core::synth::gaussian;
use serde_json::Value;

fn check(actual: &Value, schema: &Value, path: &str, problems: &mut Vec<String>) {
    match schema {
        Value::String(type_name) => {
            let ok = match type_name.as_str() {
                "string" => actual.is_string(),
                "boolean" => actual.is_boolean(),
                "integer" => actual.as_i64().is_some() || actual.as_u64().is_some(),
                "number" => actual.is_number(),
                other => {
                    problems.push(format!("{path}: unknown schema type {other}"));
                    return;
                }
            };
            if !ok {
                problems.push(format!("{path}: expected {type_name}, got {actual}"));
            }
        }
        Value::Array(proto) => {
            let Some(items) = actual.as_array() else {
                problems.push(format!("{path}: expected array"));
                return;
            };
            if let Some(proto) = proto.first() {
                for (i, item) in items.iter().enumerate() {
                    check(item, proto, &format!("{path}[{i}]"), problems);
                }
            }
        }
        Value::Object(fields) => {
            let Some(map) = actual.as_object() else {
                problems.push(format!("{path}: expected object"));
                return;
            };
            for key in fields.keys() {
                if !map.contains_key(key) {
                    problems.push(format!("{path}: missing field {key}"));
                }
            }
            for key in map.keys() {
                if !fields.contains_key(key) {
                    problems.push(format!("{path}: undeclared field {key}"));
                }
            }
            for (key, sub) in fields {
                if let Some(actual_sub) = map.get(key) {
                    check(actual_sub, sub, &format!("{path}.{key}"), problems);
                }
            }
        }
        other => problems.push(format!("{path}: unsupported schema node {other}")),
    }
}

#[test]
fn emitted_report_matches_schema_file() {
    let schema_text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../schema/report_v1.json"
    ))
    .expect("schema file");
    let schema: Value = serde_json::from_str(&schema_text).unwrap();
    assert_eq!(schema["version"], Value::String("1".into()));

    let config = AnalysisConfig {
        bootstrap_draws: 8,
        ..AnalysisConfig::default()
    };
    let report = analyze(&gaussian(2048, 200).unwrap(), &config).unwrap();
    assert_eq!(report.schema_version, schema["version"].as_str().unwrap());

    let actual: Value = serde_json::to_value(&report).unwrap();
    let mut problems = Vec::new();
    check(&actual, &schema["report"], "report", &mut problems);
    assert!(problems.is_empty(), "schema drift:\n{}", problems.join("\n"));
}
