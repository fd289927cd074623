//! Report JSON with deterministic bytes: keys keep insertion order and every
//! float is printed as `{:.16e}` (17 significant digits), so two runs with
//! the same seed emit identical files apart from the isolated `timing`
//! object. The validator checks the schema that downstream tooling relies
//! on; every command validates its own report before writing it.

/// JSON value with ordered object keys.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out, 0);
        out.push('\n');
        out
    }

    fn write_into(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(v) => out.push_str(&v.to_string()),
            Json::UInt(v) => out.push_str(&v.to_string()),
            Json::Float(v) => {
                assert!(v.is_finite(), "reports carry only finite numbers, got {v}");
                out.push_str(&format!("{v:.16e}"));
            }
            Json::Str(s) => write_escaped(out, s),
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline(out, indent + 1);
                    item.write_into(out, indent + 1);
                }
                newline(out, indent);
                out.push(']');
            }
            Json::Object(pairs) => {
                if pairs.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline(out, indent + 1);
                    write_escaped(out, key);
                    out.push_str(": ");
                    value.write_into(out, indent + 1);
                }
                newline(out, indent);
                out.push('}');
            }
        }
    }
}

fn newline(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn obj(pairs: Vec<(&str, Json)>) -> Json {
    Json::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

pub fn float_array(values: &[f64]) -> Json {
    Json::Array(values.iter().map(|&v| Json::Float(v)).collect())
}

const COMMANDS: [&str; 5] = ["train", "grid", "predict", "affinity", "bound"];
const MODES: [&str; 3] = ["ours", "stl", "mtl"];

/// Check a rendered report against the schema. Returns a description of the
/// first violation found.
pub fn validate_report(text: &str) -> Result<(), String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("not valid JSON: {e}"))?;
    let root = value.as_object().ok_or("top level must be an object")?;

    let command = root
        .get("command")
        .and_then(|v| v.as_str())
        .ok_or("missing string field \"command\"")?;
    if !COMMANDS.contains(&command) {
        return Err(format!("unknown command {command:?}"));
    }

    match root.get("mode") {
        Some(serde_json::Value::Null) | None => {}
        Some(serde_json::Value::String(m)) if MODES.contains(&m.as_str()) => {}
        Some(other) => return Err(format!("mode must be ours/stl/mtl or null, got {other}")),
    }

    match root.get("seed") {
        Some(serde_json::Value::Null) | None => {}
        Some(v) if v.is_u64() => {}
        Some(other) => return Err(format!("seed must be a nonnegative integer or null, got {other}")),
    }

    if !root.get("config").map(|v| v.is_object()).unwrap_or(false) {
        return Err("missing object field \"config\"".into());
    }
    let timing = root
        .get("timing")
        .and_then(|v| v.as_object())
        .ok_or("missing object field \"timing\"")?;
    for (key, v) in timing {
        if !v.is_number() {
            return Err(format!("timing.{key} must be a number"));
        }
    }

    if let Some(selected) = root.get("selected").filter(|v| !v.is_null()) {
        let sel = selected.as_object().ok_or("selected must be an object")?;
        let c = sel.get("c").and_then(|v| v.as_f64()).ok_or("selected.c must be a number")?;
        let lambda = sel.get("lambda").and_then(|v| v.as_f64()).ok_or("selected.lambda must be a number")?;
        if !(c > 0.0) {
            return Err(format!("selected.c must be positive, got {c}"));
        }
        if !(lambda >= 0.0) {
            return Err(format!("selected.lambda must be nonnegative, got {lambda}"));
        }
    }

    if let Some(acc) = root.get("accuracy").filter(|v| !v.is_null()) {
        let acc = acc.as_object().ok_or("accuracy must be an object")?;
        let per_task = acc
            .get("per_task")
            .and_then(|v| v.as_array())
            .ok_or("accuracy.per_task must be an array")?;
        if per_task.is_empty() {
            return Err("accuracy.per_task must not be empty".into());
        }
        let mut sum = 0.0;
        for (i, entry) in per_task.iter().enumerate() {
            let entry = entry.as_object().ok_or(format!("accuracy.per_task[{i}] must be an object"))?;
            if !entry.get("task").map(|v| v.is_string()).unwrap_or(false) {
                return Err(format!("accuracy.per_task[{i}].task must be a string"));
            }
            let v = entry
                .get("value")
                .and_then(|v| v.as_f64())
                .ok_or(format!("accuracy.per_task[{i}].value must be a number"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("accuracy.per_task[{i}].value = {v} outside [0,1]"));
            }
            sum += v;
        }
        let mean = acc.get("mean").and_then(|v| v.as_f64()).ok_or("accuracy.mean must be a number")?;
        if !(0.0..=1.0).contains(&mean) {
            return Err(format!("accuracy.mean = {mean} outside [0,1]"));
        }
        let expected = sum / per_task.len() as f64;
        if (mean - expected).abs() > 1e-9 {
            return Err(format!("accuracy.mean = {mean} is not the arithmetic mean {expected}"));
        }
    }

    if let Some(groups) = root.get("groups").filter(|v| !v.is_null()) {
        let groups = groups.as_array().ok_or("groups must be an array")?;
        for g in groups {
            let members = g.as_array().ok_or("each group must be an array")?;
            if members.is_empty() || !members.iter().all(|m| m.is_string()) {
                return Err("each group must be a non-empty array of task names".into());
            }
        }
    }

    if let Some(bound) = root.get("bound").filter(|v| !v.is_null()) {
        let b = bound.as_f64().ok_or("bound must be a number")?;
        if !(b > 0.0) {
            return Err(format!("bound must be positive, got {b}"));
        }
    }

    if let Some(paths) = root.get("paths").filter(|v| !v.is_null()) {
        let paths = paths.as_object().ok_or("paths must be an object")?;
        for (key, v) in paths {
            if !(v.is_string() || v.is_null()) {
                return Err(format!("paths.{key} must be a string or null"));
            }
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_render_with_seventeen_significant_digits() {
        let text = Json::Float(std::f64::consts::PI).render();
        assert_eq!(text.trim(), "3.1415926535897931e0");
        let text = Json::Float(0.0).render();
        assert_eq!(text.trim(), "0.0000000000000000e0");
    }

    #[test]
    fn rendered_reports_parse_and_preserve_key_order() {
        let report = obj(vec![
            ("command", Json::Str("bound".into())),
            ("mode", Json::Null),
            ("seed", Json::UInt(7)),
            ("bound", Json::Float(0.5)),
            ("config", obj(vec![("gamma", Json::Float(1.0))])),
            ("timing", obj(vec![("total_seconds", Json::Float(0.1))])),
        ]);
        let text = report.render();
        validate_report(&text).unwrap();
        let c = text.find("\"command\"").unwrap();
        let s = text.find("\"seed\"").unwrap();
        let t = text.find("\"timing\"").unwrap();
        assert!(c < s && s < t);
    }

    #[test]
    fn strings_are_escaped() {
        let text = Json::Str("a\"b\\c\nd".into()).render();
        assert_eq!(text.trim(), r#""a\"b\\c\nd""#);
        let parsed: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(parsed.as_str().unwrap(), "a\"b\\c\nd");
    }

    #[test]
    fn validator_rejects_schema_violations() {
        let base = |acc: Json| {
            obj(vec![
                ("command", Json::Str("train".into())),
                ("mode", Json::Str("ours".into())),
                ("seed", Json::UInt(0)),
                ("accuracy", acc),
                ("config", Json::Object(vec![])),
                ("timing", Json::Object(vec![])),
            ])
            .render()
        };

        let out_of_range = base(obj(vec![
            ("per_task", Json::Array(vec![obj(vec![
                ("task", Json::Str("a".into())),
                ("value", Json::Float(1.5)),
            ])])),
            ("mean", Json::Float(1.5)),
        ]));
        assert!(validate_report(&out_of_range).unwrap_err().contains("outside [0,1]"));

        let wrong_mean = base(obj(vec![
            ("per_task", Json::Array(vec![
                obj(vec![("task", Json::Str("a".into())), ("value", Json::Float(0.5))]),
                obj(vec![("task", Json::Str("b".into())), ("value", Json::Float(1.0))]),
            ])),
            ("mean", Json::Float(0.9)),
        ]));
        assert!(validate_report(&wrong_mean).unwrap_err().contains("arithmetic mean"));

        assert!(validate_report("{\"command\": \"train\"}").is_err());
        assert!(validate_report("not json").is_err());
    }
}
