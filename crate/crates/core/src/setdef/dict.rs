//! Named dictionaries whose entries remember which dictionaries they came
//! from.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    /// Names of the dictionaries that contributed the entry.
    pub genesis: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    pub name: String,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DictError {
    #[error("hierarchy `{0}` needs at least one dimension")]
    NoDimensions(String),
    #[error("dimension `{0}` is empty")]
    EmptyDimension(String),
    #[error("no dictionary named `{0}`")]
    Missing(String),
}

impl Dictionary {
    /// A dictionary whose entries originate in it.
    pub fn new(name: &str, values: &[&str]) -> Self {
        let mut d = Dictionary { name: name.into(), entries: Vec::new() };
        for v in values {
            d.push(v, &BTreeSet::from([name.to_string()]));
        }
        d
    }

    pub fn values(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.value.as_str()).collect()
    }

    fn find(&self, v: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.value == v)
    }

    fn push(&mut self, v: &str, genesis: &BTreeSet<String>) {
        match self.entries.iter_mut().find(|e| e.value == v) {
            Some(e) => e.genesis.extend(genesis.iter().cloned()),
            None => self.entries.push(Entry { value: v.into(), genesis: genesis.clone() }),
        }
    }

    fn derived(&self, op: &str, other: &Dictionary) -> Dictionary {
        Dictionary { name: format!("{} {op} {}", self.name, other.name), entries: Vec::new() }
    }

    /// Entries of both, in order of first appearance, genesis merged.
    pub fn union(&self, other: &Dictionary) -> Dictionary {
        let mut d = self.derived("+", other);
        for e in self.entries.iter().chain(&other.entries) {
            d.push(&e.value, &e.genesis);
        }
        d
    }

    pub fn intersection(&self, other: &Dictionary) -> Dictionary {
        let mut d = self.derived("*", other);
        for e in &self.entries {
            if let Some(o) = other.find(&e.value) {
                d.push(&e.value, &e.genesis);
                d.push(&e.value, &o.genesis);
            }
        }
        d
    }

    pub fn difference(&self, other: &Dictionary) -> Dictionary {
        let mut d = self.derived("-", other);
        for e in self.entries.iter().filter(|e| other.find(&e.value).is_none()) {
            d.push(&e.value, &e.genesis);
        }
        d
    }

    /// Pairs `(a, b)` with the genesis of both parts.
    pub fn product(&self, other: &Dictionary) -> Dictionary {
        let mut d = self.derived("x", other);
        for a in &self.entries {
            for b in &other.entries {
                let g: BTreeSet<String> = a.genesis.union(&b.genesis).cloned().collect();
                d.push(&format!("({}, {})", a.value, b.value), &g);
            }
        }
        d
    }
}

impl fmt::Display for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {{{}}}", self.name, self.values().join(", "))
    }
}

/// Empty dictionaries `A(d1, ..., dk)`, one for each combination of the
/// dimensions' values.
pub fn hierarchy(name: &str, dims: &[&Dictionary]) -> Result<Vec<Dictionary>, DictError> {
    if dims.is_empty() {
        return Err(DictError::NoDimensions(name.into()));
    }
    if let Some(d) = dims.iter().find(|d| d.entries.is_empty()) {
        return Err(DictError::EmptyDimension(d.name.clone()));
    }
    let mut combos: Vec<Vec<&str>> = vec![Vec::new()];
    for d in dims {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                d.entries.iter().map(move |e| {
                    let mut c = c.clone();
                    c.push(e.value.as_str());
                    c
                })
            })
            .collect();
    }
    Ok(combos.into_iter().map(|c| Dictionary { name: format!("{name}({})", c.join(",")), entries: Vec::new() }).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatLine {
    Header(String),
    Item(String),
}

impl fmt::Display for FlatLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlatLine::Header(h) => write!(f, "{h}:"),
            FlatLine::Item(i) => write!(f, "  {i}"),
        }
    }
}

/// `A(B)//members`: for each value of `dim`, a header followed by the
/// entries of `A(value)`.
pub fn flatten(base: &str, dim: &Dictionary, family: &[Dictionary]) -> Result<Vec<FlatLine>, DictError> {
    let mut out = Vec::new();
    for e in &dim.entries {
        let name = format!("{base}({})", e.value);
        let d = family.iter().find(|d| d.name == name).ok_or(DictError::Missing(name))?;
        out.push(FlatLine::Header(e.value.clone()));
        out.extend(d.entries.iter().map(|m| FlatLine::Item(m.value.clone())));
    }
    Ok(out)
}
