use circleforge::cli::ScenarioConfig;
use serde_json::Value;

fn schema() -> Value {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/scenario.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

// Picks the object branch of a schema node that fits `v`.
fn object_branch<'a>(node: &'a Value, v: &Value) -> Option<&'a Value> {
    if node.get("properties").is_some() {
        return Some(node);
    }
    let branches = node.get("anyOf").or_else(|| node.get("oneOf"))?.as_array()?;
    branches.iter().find_map(|b| {
        let b = object_branch(b, v)?;
        let props = b["properties"].as_object()?;
        let tag_ok = props.iter().all(|(k, p)| match p.get("const") {
            Some(c) => v.get(k) == Some(c),
            None => true,
        });
        tag_ok.then_some(b)
    })
}

fn walk(node: &Value, v: &Value, path: &str) {
    let Some(map) = v.as_object() else { return };
    let branch = object_branch(node, v).unwrap_or_else(|| panic!("{path}: no object schema"));
    let props = branch["properties"].as_object().unwrap();
    let mut want: Vec<_> = props.keys().cloned().collect();
    let mut got: Vec<_> = map.keys().cloned().collect();
    want.sort();
    got.sort();
    assert_eq!(got, want, "{path}: keys differ");
    assert_eq!(branch["additionalProperties"], Value::Bool(false), "{path}");
    for (k, child) in map {
        walk(&props[k], child, &format!("{path}.{k}"));
    }
}

#[test]
fn schema_matches_default_config() {
    let v = serde_json::to_value(ScenarioConfig::default()).unwrap();
    walk(&schema(), &v, "$");
}

#[test]
fn schema_covers_tagged_variants() {
    let cfg = ScenarioConfig::load(
        Some(
            r#"{"set": {"kind": "ellipsephic", "p": 5, "digits": [0, 1, 3]},
                "psi": {"kind": "li", "tau": 10},
                "schmidt": {"sampler": {"kind": "point_mass", "z": 0.5}},
                "predict": {"y": {"q_d": 1, "q_w": 1, "a": 1, "e": 1, "x": 1},
                            "y_variant": {"variant": "mean_value", "r": 2}}}"#,
        ),
        &[],
    )
    .unwrap();
    walk(&schema(), &serde_json::to_value(cfg).unwrap(), "$");
}
