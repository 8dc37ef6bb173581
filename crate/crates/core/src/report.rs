use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Checked for information only; the declared class does not require it.
    NotRequired,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property: String,
    pub status: Status,
    pub checked: usize,
    pub counterexample: Option<String>,
}

/// Outcome of a sampled axiom suite. Serializes with the field names
/// `property`, `status`, `counterexample` per entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub suite: String,
    pub properties: Vec<PropertyResult>,
}

impl AxiomReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            properties: Vec::new(),
        }
    }

    /// True when no required property failed.
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.status != Status::Fail)
    }

    pub fn get(&self, property: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.property == property)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.properties.iter().filter(|p| p.status == Status::Fail)
    }

    pub(crate) fn record(&mut self, check: Check) {
        self.properties.push(check.finish());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Accumulates one property while sampling: counts checks and keeps the
/// first counterexample.
pub(crate) struct Check {
    name: String,
    checked: usize,
    counterexample: Option<String>,
    required: bool,
}

impl Check {
    pub(crate) fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checked: 0,
            counterexample: None,
            required: true,
        }
    }

    pub(crate) fn informational(mut self) -> Self {
        self.required = false;
        self
    }

    pub(crate) fn observe(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(witness());
        }
    }

    fn finish(self) -> PropertyResult {
        let status = match (self.required, self.counterexample.is_some()) {
            (false, _) => Status::NotRequired,
            (true, false) => Status::Pass,
            (true, true) => Status::Fail,
        };
        PropertyResult {
            property: self.name,
            status,
            checked: self.checked,
            counterexample: self.counterexample,
        }
    }
}
