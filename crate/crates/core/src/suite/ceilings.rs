use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{DklError, DklResult};

/// Frozen comparability ceilings, one `id ceiling` record per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ceilings {
    entries: BTreeMap<String, f64>,
}

impl Ceilings {
    /// Parses the line format; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> DklResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| DklError::Constants { line: i + 1, reason };
            let mut fields = line.split_whitespace();
            let (id, value) = match (fields.next(), fields.next(), fields.next()) {
                (Some(id), Some(v), None) => (id, v),
                _ => return Err(bad("expected `id ceiling`".into())),
            };
            let c: f64 = value.parse().map_err(|_| bad(format!("`{value}` is not a number")))?;
            if !(c >= 1.0) || !c.is_finite() {
                return Err(bad(format!("ceiling {c} must be finite and >= 1")));
            }
            if entries.insert(id.to_string(), c).is_some() {
                return Err(bad(format!("duplicate id `{id}`")));
            }
        }
        Ok(Ceilings { entries })
    }

    pub fn get(&self, id: &str) -> DklResult<f64> {
        self.entries.get(id).copied().ok_or_else(|| DklError::UnknownId(id.to_string()))
    }

    pub fn insert(&mut self, id: impl Into<String>, ceiling: f64) {
        self.entries.insert(id.into(), ceiling);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the records sorted by id, each value in shortest round-trip form.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (id, c) in &self.entries {
            out.push_str(&format!("{id} {c:?}\n"));
        }
        out
    }
}

/// Rounds `slack * required` up to three significant digits, so the frozen
/// text stays short and never falls below the slack.
pub fn freeze_value(required: f64, slack: f64) -> f64 {
    let v = (required * slack).max(1.0);
    let e = 10f64.powi(v.log10().floor() as i32 - 2);
    let rounded = (v / e).ceil() * e;
    // undo representation noise such as 1.2300000000000002
    format!("{rounded:.3e}").parse().unwrap_or(rounded)
}

static FROZEN: OnceLock<Ceilings> = OnceLock::new();

/// The checked-in ceilings.
pub fn frozen_ceilings() -> &'static Ceilings {
    FROZEN.get_or_init(|| Ceilings::parse(include_str!("../../data/ceilings.txt")).expect("checked-in ceilings parse"))
}
