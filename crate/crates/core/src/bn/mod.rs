//! Discrete Bayesian networks with exact rational CPTs.

mod factor;
mod infer;
pub(crate) mod text;
mod translate;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::logic::{format_rational, Rational};

pub use factor::Factor;
pub use infer::{Joint, Posterior};
pub use text::{from_text, to_dot, to_text, BN_HEADER};
pub use translate::{bn_to_sentences, sentences_to_bn, Translation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BnError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no value `{value}`")]
    UnknownValue { node: String, value: String },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("cycle through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("node `{node}`: {message}")]
    BadCpt { node: String, message: String },
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,
    #[error("`{0}` is both queried and observed")]
    QueryEvidenceOverlap(String),
    #[error("joint has {states} states, over the limit of {cap}")]
    TooLarge { states: u128, cap: u128 },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Translation(String),
}

/// A discrete variable with a CPT. `cpt[row][v]` is `P(node = range[v] | row)`,
/// where rows enumerate parent configurations lexicographically in parent
/// order, last parent fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub range: Vec<String>,
    pub parents: Vec<usize>,
    pub cpt: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BayesNet {
    nodes: Vec<Node>,
    index: BTreeMap<String, usize>,
}

/// All assignments over `cards`, last position fastest.
pub fn configurations(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    if cards.contains(&0) {
        return out;
    }
    let mut cur = vec![0; cards.len()];
    loop {
        out.push(cur.clone());
        let mut i = cards.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < cards[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

impl BayesNet {
    pub fn new() -> Self {
        BayesNet::default()
    }

    /// Builds a network from nodes whose parents are indices into `nodes`.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, BnError> {
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(BnError::DuplicateNode(n.name.clone()));
            }
        }
        let net = BayesNet { nodes, index };
        for (i, n) in net.nodes.iter().enumerate() {
            net.check_node(i).map_err(|message| BnError::BadCpt {
                node: n.name.clone(),
                message,
            })?;
        }
        net.topological_order()?;
        Ok(net)
    }

    /// Appends a node whose parents are already present.
    pub fn add_node(
        &mut self,
        name: &str,
        range: &[&str],
        parents: &[&str],
        cpt: Vec<Vec<Rational>>,
    ) -> Result<usize, BnError> {
        if self.index.contains_key(name) {
            return Err(BnError::DuplicateNode(name.to_string()));
        }
        let parents = parents
            .iter()
            .map(|p| {
                self.index_of(p)
                    .ok_or_else(|| BnError::UnknownNode(p.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let node = Node {
            name: name.to_string(),
            range: range.iter().map(|s| s.to_string()).collect(),
            parents,
            cpt,
        };
        self.nodes.push(node);
        let i = self.nodes.len() - 1;
        if let Err(message) = self.check_node(i) {
            self.nodes.pop();
            return Err(BnError::BadCpt {
                node: name.to_string(),
                message,
            });
        }
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.index_of(name).map(|i| &self.nodes[i])
    }

    pub fn parent_names(&self, name: &str) -> Vec<&str> {
        self.node(name)
            .map(|n| {
                n.parents
                    .iter()
                    .map(|&p| self.nodes[p].name.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// `(parent, child)` index pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            out.extend(n.parents.iter().map(|&p| (p, i)));
        }
        out
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges()
            .into_iter()
            .map(|(p, c)| (self.nodes[p].name.clone(), self.nodes[c].name.clone()))
            .collect()
    }

    pub fn value_index(&self, node: usize, value: &str) -> Option<usize> {
        self.nodes[node].range.iter().position(|v| v == value)
    }

    /// `P(node = v | parents)` where `assignment` holds a value index for
    /// every node of the network.
    pub fn cpt_entry(&self, node: usize, assignment: &[usize]) -> &Rational {
        let n = &self.nodes[node];
        let mut row = 0;
        for &p in &n.parents {
            row = row * self.nodes[p].range.len() + assignment[p];
        }
        &n.cpt[row][assignment[node]]
    }

    fn check_node(&self, i: usize) -> Result<(), String> {
        let n = &self.nodes[i];
        if n.range.is_empty() {
            return Err("empty range".into());
        }
        for (k, v) in n.range.iter().enumerate() {
            if n.range[..k].contains(v) {
                return Err(format!("value `{v}` is repeated"));
            }
        }
        for (k, &p) in n.parents.iter().enumerate() {
            if p >= self.nodes.len() {
                return Err(format!("parent index {p} is out of bounds"));
            }
            if p == i || n.parents[..k].contains(&p) {
                return Err(format!(
                    "parent `{}` is repeated or self-referential",
                    self.nodes[p].name
                ));
            }
        }
        let rows: usize = n
            .parents
            .iter()
            .map(|&p| self.nodes[p].range.len())
            .product();
        if n.cpt.len() != rows {
            return Err(format!("expected {rows} CPT row(s), found {}", n.cpt.len()));
        }
        for (r, row) in n.cpt.iter().enumerate() {
            if row.len() != n.range.len() {
                return Err(format!(
                    "row {r} has {} entries, expected {}",
                    row.len(),
                    n.range.len()
                ));
            }
            if row
                .iter()
                .any(|x| *x < Rational::zero() || *x > Rational::one())
            {
                return Err(format!("row {r} has an entry outside [0, 1]"));
            }
            let sum: Rational = row.iter().sum();
            if !sum.is_one() {
                return Err(format!("row {r} sums to {}", format_rational(&sum)));
            }
        }
        Ok(())
    }

    /// Every structural problem, empty when the network is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..self.nodes.len())
            .filter_map(|i| {
                self.check_node(i)
                    .err()
                    .map(|m| format!("{}: {m}", self.nodes[i].name))
            })
            .collect();
        if let Err(e) = self.topological_order() {
            out.push(e.to_string());
        }
        out
    }

    /// Kahn order, lowest index first among ready nodes.
    pub fn topological_order(&self) -> Result<Vec<usize>, BnError> {
        let n = self.nodes.len();
        let mut indeg: Vec<usize> = self.nodes.iter().map(|x| x.parents.len()).collect();
        let mut children = vec![Vec::new(); n];
        for (p, c) in self.edges() {
            if p < n {
                children[p].push(c);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n)
                .filter(|i| !order.contains(i))
                .map(|i| self.nodes[i].name.clone())
                .collect();
            return Err(BnError::Cycle(stuck));
        }
        Ok(order)
    }

    /// A copy with nodes renamed through `f`.
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Result<BayesNet, BnError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                name: f(&n.name),
                ..n.clone()
            })
            .collect();
        BayesNet::from_nodes(nodes)
    }

    /// A copy with nodes reordered by `order` (a permutation of indices).
    pub fn reordered(&self, order: &[usize]) -> Result<BayesNet, BnError> {
        let mut pos = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old];
                Node {
                    parents: n.parents.iter().map(|&p| pos[p]).collect(),
                    ..n.clone()
                }
            })
            .collect();
        BayesNet::from_nodes(nodes)
    }
}
