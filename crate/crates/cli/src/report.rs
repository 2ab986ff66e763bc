//! Report accumulation and rendering. Every report starts with a header
//! echoing the command, seed and fuel.

use serde_json::{json, Map, Value};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Ndjson,
}

pub struct Report {
    command: String,
    seed: u64,
    fuel: u64,
    items: Vec<(String, Value)>,
    failed: Vec<String>,
}

impl Report {
    pub fn new(command: &str, seed: u64, fuel: u64) -> Self {
        Report { command: command.to_string(), seed, fuel, items: Vec::new(), failed: Vec::new() }
    }

    /// Adds a line of text and its record. `fields` must be a JSON object;
    /// the record kind is stored under `record`.
    pub fn add(&mut self, kind: &str, text: impl Into<String>, fields: Value) {
        let mut rec = Map::new();
        rec.insert("record".into(), json!(kind));
        if let Value::Object(m) = fields {
            rec.extend(m);
        }
        self.items.push((text.into(), Value::Object(rec)));
    }

    /// Marks the report as a failure; the command exits with status 1.
    pub fn fail(&mut self, why: impl Into<String>) {
        let why = why.into();
        self.add("failure", format!("failed: {why}"), json!({ "reason": why }));
        self.failed.push(why);
    }

    /// Records a self-test expectation.
    pub fn expect(&mut self, what: &str, holds: bool) {
        self.add(
            "selftest",
            format!("selftest {what}: {}", if holds { "pass" } else { "FAIL" }),
            json!({ "check": what, "pass": holds }),
        );
        if !holds {
            self.failed.push(format!("selftest {what}"));
        }
    }

    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Text => {
                out.push_str(&format!("# paraschema {} seed={} fuel={}\n", self.command, self.seed, self.fuel));
                for (text, _) in &self.items {
                    out.push_str(text);
                    out.push('\n');
                }
                out.push_str(if self.ok() { "status: ok\n" } else { "status: failed\n" });
            }
            Format::Ndjson => {
                let header = json!({
                    "record": "header",
                    "format": "paraschema-report",
                    "version": FORMAT_VERSION,
                    "command": self.command,
                    "seed": self.seed,
                    "fuel": self.fuel,
                });
                out.push_str(&header.to_string());
                out.push('\n');
                for (_, rec) in &self.items {
                    out.push_str(&rec.to_string());
                    out.push('\n');
                }
                out.push_str(&json!({ "record": "status", "ok": self.ok() }).to_string());
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_status() {
        let mut r = Report::new("ring equalize", 3, 10);
        r.add("phase", "phase 1", json!({ "n": 1 }));
        let text = r.render(Format::Text);
        assert!(text.starts_with("# paraschema ring equalize seed=3 fuel=10\nphase 1\n"));
        assert!(text.ends_with("status: ok\n"));
        let nd = r.render(Format::Ndjson);
        let lines: Vec<&str> = nd.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("\"version\":1"));
        assert_eq!(lines[1], r#"{"n":1,"record":"phase"}"#);
        r.fail("bad");
        assert!(!r.ok());
    }
}
