use std::collections::BTreeSet;
use std::fmt;

use crate::logic::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Route {
    General,
    Template(String),
}

/// Where a CPT entry came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntrySource {
    /// Taken from a statistic; `overrides` lists less specific rivals and
    /// `midpoint` marks interval statistics.
    Statistic {
        label: String,
        overrides: Vec<String>,
        midpoint: bool,
    },
    /// One minus the other entries of the row.
    Complement {
        labels: Vec<String>,
    },
    NoisyOr {
        causes: Vec<String>,
        leak: Option<String>,
    },
    Uniform,
}

impl EntrySource {
    /// Statistics this entry's value depends on.
    pub fn labels(&self) -> Vec<&str> {
        match self {
            EntrySource::Statistic { label, .. } => vec![label],
            EntrySource::Complement { labels } => labels.iter().map(String::as_str).collect(),
            EntrySource::NoisyOr { causes, leak } => {
                causes.iter().chain(leak).map(String::as_str).collect()
            }
            EntrySource::Uniform => Vec::new(),
        }
    }
}

impl fmt::Display for EntrySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |ls: &[String]| {
            ls.iter()
                .map(|l| format!("@{l}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            EntrySource::Statistic {
                label,
                overrides,
                midpoint,
            } => {
                write!(f, "@{label}")?;
                if *midpoint {
                    write!(f, " (interval midpoint)")?;
                }
                if !overrides.is_empty() {
                    write!(f, " (more specific than {})", at(overrides))?;
                }
                Ok(())
            }
            EntrySource::Complement { labels } if labels.is_empty() => write!(f, "complement"),
            EntrySource::Complement { labels } => write!(f, "complement of {}", at(labels)),
            EntrySource::NoisyOr { causes, leak } => {
                write!(f, "noisy-or over [{}]", at(causes))?;
                match leak {
                    Some(l) => write!(f, ", leak @{l}"),
                    None => write!(f, ", leak 0"),
                }
            }
            EntrySource::Uniform => write!(f, "uniform prior"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CptEntry {
    pub value: String,
    pub prob: Rational,
    pub source: EntrySource,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CptRow {
    /// One value per parent, in parent order.
    pub config: Vec<String>,
    pub entries: Vec<CptEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeReport {
    pub name: String,
    pub parents: Vec<String>,
    /// The statistic justifying each parent edge.
    pub edge_labels: Vec<String>,
    pub rows: Vec<CptRow>,
    /// `(label, literal)` event conditions decided against the knowledge base.
    pub discharged: Vec<(String, String)>,
}

impl NodeReport {
    pub fn entry(&self, config: &[&str], value: &str) -> Option<&CptEntry> {
        self.rows
            .iter()
            .find(|r| {
                r.config
                    .iter()
                    .map(String::as_str)
                    .eq(config.iter().copied())
            })?
            .entries
            .iter()
            .find(|e| e.value == value)
    }
}

/// Human-readable justification of a constructed network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionReport {
    pub event: String,
    pub route: Route,
    pub nodes: Vec<NodeReport>,
    pub warnings: Vec<String>,
}

impl ConstructionReport {
    pub fn node(&self, name: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Labels whose values appear in the CPT of `node`.
    pub fn cited_labels(&self, node: &str) -> BTreeSet<String> {
        self.node(node)
            .into_iter()
            .flat_map(|n| &n.rows)
            .flat_map(|r| &r.entries)
            .flat_map(|e| e.source.labels())
            .map(str::to_string)
            .collect()
    }

    /// `(parent, child, label)` for every edge.
    pub fn edges(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for (p, l) in n.parents.iter().zip(&n.edge_labels) {
                out.push((p.clone(), n.name.clone(), l.clone()));
            }
        }
        out
    }
}

fn literal(node: &str, value: &str) -> String {
    match value {
        "true" => node.to_string(),
        "false" => format!("~{node}"),
        v => format!("{node}={v}"),
    }
}

impl fmt::Display for ConstructionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.route {
            Route::General => writeln!(f, "event {}: local statistics", self.event)?,
            Route::Template(l) => writeln!(f, "event {}: template @{l}", self.event)?,
        }
        for n in &self.nodes {
            writeln!(f, "node {}", n.name)?;
            for (label, lit) in &n.discharged {
                writeln!(f, "  given {lit} (@{label})")?;
            }
            for (p, l) in n.parents.iter().zip(&n.edge_labels) {
                writeln!(f, "  edge {p} -> {} (@{l})", n.name)?;
            }
            for row in &n.rows {
                let cond: Vec<String> = n
                    .parents
                    .iter()
                    .zip(&row.config)
                    .map(|(p, v)| literal(p, v))
                    .collect();
                for e in &row.entries {
                    let lhs = literal(&n.name, &e.value);
                    let given = if cond.is_empty() {
                        String::new()
                    } else {
                        format!(" | {}", cond.join(", "))
                    };
                    writeln!(
                        f,
                        "  P({lhs}{given}) = {}  {}",
                        format_rational(&e.prob),
                        e.source
                    )?;
                }
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
