use serde::{Deserialize, Serialize};

/// Outcome of one named check: `{"check", "max_violation", "per_fiber",
/// "pass"}` plus free-form notes when a validator has something to flag
/// (skipped comparisons, rank jumps, trivially-satisfied conditions).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub max_violation: f64,
    pub per_fiber: Vec<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, max_violation: f64, tol: f64) -> Self {
        CheckReport {
            check: check.into(),
            max_violation,
            per_fiber: Vec::new(),
            pass: max_violation <= tol,
            notes: Vec::new(),
        }
    }

    pub fn with_per_fiber(mut self, per_fiber: Vec<f64>) -> Self {
        self.per_fiber = per_fiber;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn failed(mut self) -> Self {
        self.pass = false;
        self
    }
}

/// Full report emitted by one CLI command. Serialized to stdout; wall-clock
/// timing goes to the stderr summary only, so identical inputs produce
/// byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: impl Into<String>, inputs_digest: String, seed: u64, samples: usize) -> Self {
        Report {
            command: command.into(),
            inputs_digest,
            seed,
            samples,
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, check: CheckReport) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckReport>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human summary for stderr, one line per check plus timing.
    pub fn render_human(&self, elapsed: std::time::Duration) -> String {
        let mut out = String::new();
        out.push_str(&format!("== {} ==\n", self.command));
        for c in &self.checks {
            out.push_str(&format!(
                "{}  {:<40} max_violation = {:.3e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.check,
                c.max_violation
            ));
            for n in &c.notes {
                out.push_str(&format!("      note: {n}\n"));
            }
        }
        out.push_str(&format!(
            "{} ({} checks, {:.2}s)\n",
            if self.pass { "ALL PASS" } else { "FAILURES" },
            self.checks.len(),
            elapsed.as_secs_f64()
        ));
        out
    }
}

/// SHA-256 hex digest of the concatenated input bytes, used to tie reports
/// to their inputs.
pub fn inputs_digest(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
    }
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
