use serde_json::{Map, Value};

/// Ordered key/value report, printed as `key=value` lines or one JSON
/// object.
#[derive(Debug, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
    lines: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    /// Free-form line shown only in the human-readable form.
    pub fn line(&mut self, text: impl Into<String>) -> &mut Self {
        self.lines.push(text.into());
        self
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let map: Map<String, Value> = self.entries.iter().cloned().collect();
            let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("report serializes");
            s.push('\n');
            return s;
        }
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        for (k, v) in &self.entries {
            match v {
                Value::String(s) => out.push_str(&format!("{k}={s}\n")),
                v => out.push_str(&format!("{k}={v}\n")),
            }
        }
        out
    }
}
