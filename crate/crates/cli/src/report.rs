//! Run reports and their two renderings.
//!
//! The machine-readable form is line-delimited `key=value`, starting with a
//! `format=` version line. Keys come out in a fixed section order and values
//! are escaped so every entry stays on one line. Timing is only shown in the
//! human form, so identical inputs give byte-identical kv output.

use std::fmt::Write as _;
use std::time::Duration;

pub const KV_FORMAT: &str = "condense-kv/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Human,
    Kv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

/// One row of a law-check table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawRow {
    /// which input the law was checked on
    pub scope: String,
    pub law: String,
    pub checked: usize,
    pub exhaustive: bool,
    /// the first counterexample, if any
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub status: Status,
    pub result: Vec<(String, String)>,
    pub laws: Vec<LawRow>,
    pub warnings: Vec<String>,
    pub elapsed: Option<Duration>,
}

impl RunReport {
    pub fn new(command: impl Into<String>, inputs_digest: impl Into<String>) -> Self {
        RunReport {
            command: command.into(),
            inputs_digest: inputs_digest.into(),
            status: Status::Pass,
            result: Vec::new(),
            laws: Vec::new(),
            warnings: Vec::new(),
            elapsed: None,
        }
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        debug_assert!(!key.contains('=') && !key.contains('\n'), "bad report key {key:?}");
        self.result.push((key, value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.result.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Marks the run failed if `ok` is false; never turns a failure back into
    /// a pass.
    pub fn require(&mut self, ok: bool) {
        if !ok {
            self.status = Status::Fail;
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Human => self.render_human(),
            Format::Kv => self.render_kv(),
        }
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &str| {
            let _ = writeln!(out, "{k}={}", escape(v));
        };
        line("format", KV_FORMAT);
        line("command", &self.command);
        line("inputs.sha256", &self.inputs_digest);
        line("verdict", self.status.as_str());
        for (i, w) in self.warnings.iter().enumerate() {
            line(&format!("warning.{i}"), w);
        }
        for (k, v) in &self.result {
            line(&format!("result.{k}"), v);
        }
        for (i, row) in self.laws.iter().enumerate() {
            line(&format!("law.{i}.scope"), &row.scope);
            line(&format!("law.{i}.name"), &row.law);
            line(&format!("law.{i}.checked"), &row.checked.to_string());
            line(&format!("law.{i}.exhaustive"), if row.exhaustive { "yes" } else { "sampled" });
            line(&format!("law.{i}.holds"), if row.witness.is_none() { "yes" } else { "no" });
            if let Some(w) = &row.witness {
                line(&format!("law.{i}.witness"), w);
            }
        }
        out
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "$ condense {}", self.command);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let width = self.result.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.result {
            let mut lines = v.lines();
            let _ = writeln!(out, "{k:width$}  {}", lines.next().unwrap_or(""));
            for rest in lines {
                let _ = writeln!(out, "{:width$}  {rest}", "");
            }
        }
        if !self.laws.is_empty() {
            let lw = self.laws.iter().map(|r| r.law.len()).max().unwrap_or(0);
            let mut scope = None;
            for row in &self.laws {
                if scope != Some(&row.scope) {
                    let _ = writeln!(out, "laws on {}:", row.scope);
                    scope = Some(&row.scope);
                }
                let how = if row.exhaustive { "exhaustive" } else { "sampled" };
                match &row.witness {
                    None => {
                        let _ = writeln!(out, "  {:lw$}  ok    {} instances, {how}", row.law, row.checked);
                    }
                    Some(w) => {
                        let _ = writeln!(out, "  {:lw$}  FAIL  witness: {w}", row.law);
                    }
                }
            }
        }
        let _ = writeln!(out, "verdict: {}", self.status.as_str().to_uppercase());
        if let Some(t) = self.elapsed {
            let _ = writeln!(out, "time: {:.3?}", t);
        }
        out
    }
}

fn escape(v: &str) -> String {
    let mut s = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\r' => s.push_str("\\r"),
            c => s.push(c),
        }
    }
    s
}
