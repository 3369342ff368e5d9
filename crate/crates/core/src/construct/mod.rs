//! Event-specific network construction.
//!
//! A request names an event and some ground atoms. If exactly one template
//! decomposition applies to the event, the network is read off the template.
//! Otherwise nodes are the request atoms plus everything on a directed path
//! between them, and each CPT comes from the most specific applicable local
//! statistics.

mod noisy_or;
mod report;
mod select;
mod specificity;
mod template;
mod variables;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bn::{BayesNet, BnError, Node};
use crate::kb::KnowledgeBase;
use crate::logic::{GroundAtom, GroundLiteral};

pub use noisy_or::{complete_cpt_noisy_or, noisy_or, NoisyOrError};
pub use report::{ConstructionReport, CptEntry, CptRow, EntrySource, NodeReport, Route};
pub use select::{select_statistics, Selection};
pub use specificity::{reference_closure, specificity_compare, Specificity};
pub use template::{instantiate_template, template_applies, template_cpts, TemplateCpts};
pub use variables::identify_variables;

/// What to build a network for.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstructionRequest {
    pub event: String,
    pub evidence: Vec<GroundLiteral>,
    pub queries: Vec<GroundAtom>,
    pub interest: Vec<GroundAtom>,
}

impl ConstructionRequest {
    /// Queries, evidence atoms and interest atoms without repeats.
    pub fn seeds(&self) -> Vec<GroundAtom> {
        let mut out: Vec<GroundAtom> = Vec::new();
        for a in self
            .queries
            .iter()
            .chain(self.evidence.iter().map(|l| &l.atom))
            .chain(&self.interest)
        {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("unresolved conflict for {conditional}: @{first} and @{second} disagree and neither is more specific")]
    UnresolvedConflict {
        conditional: String,
        first: String,
        second: String,
    },
    #[error("no statistic determines {conditional}")]
    MissingConditional { conditional: String },
    #[error("noisy-or completion for {node}: {message}")]
    NoisyOr { node: String, message: String },
    #[error("entries for {conditional} sum to {sum}")]
    InconsistentRow { conditional: String, sum: String },
    #[error("selected statistics form a cycle {} (via {})", .nodes.join(" -> "), labels_text(.labels))]
    Cycle {
        nodes: Vec<String>,
        labels: Vec<String>,
    },
    #[error("templates {} all apply to event {event}", labels_text(.labels))]
    AmbiguousTemplate { event: String, labels: Vec<String> },
    #[error("`{atom}` is not a node of template @{template}")]
    Uncovered { atom: String, template: String },
    #[error("the request names no atoms")]
    EmptyRequest,
    #[error(transparent)]
    Bn(#[from] BnError),
}

fn labels_text(labels: &[String]) -> String {
    labels
        .iter()
        .map(|l| format!("@{l}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RouteChoice {
    /// Template route when exactly one template applies, else general.
    #[default]
    Auto,
    General,
}

pub fn build_network(
    kb: &KnowledgeBase,
    req: &ConstructionRequest,
) -> Result<(BayesNet, ConstructionReport), ConstructError> {
    build_network_with(kb, req, RouteChoice::Auto)
}

pub fn build_network_with(
    kb: &KnowledgeBase,
    req: &ConstructionRequest,
    choice: RouteChoice,
) -> Result<(BayesNet, ConstructionReport), ConstructError> {
    let seeds = req.seeds();
    if seeds.is_empty() {
        return Err(ConstructError::EmptyRequest);
    }
    if choice == RouteChoice::Auto {
        let applicable: Vec<_> = kb
            .templates
            .iter()
            .filter(|t| template_applies(kb, t, &req.event))
            .collect();
        match applicable.as_slice() {
            [] => {}
            [t] => return instantiate_template(kb, t, req),
            many => {
                return Err(ConstructError::AmbiguousTemplate {
                    event: req.event.clone(),
                    labels: many.iter().map(|t| t.label.clone()).collect(),
                })
            }
        }
    }
    let included = identify_variables(kb, &req.event, &seeds);
    let atoms: Vec<GroundAtom> = included.iter().cloned().collect();
    let selections = atoms
        .iter()
        .map(|a| select_statistics(kb, a, &req.event, Some(&included)))
        .collect::<Result<Vec<_>, _>>()?;
    let index: BTreeMap<&GroundAtom, usize> =
        atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let parents: Vec<Vec<usize>> = selections
        .iter()
        .map(|s| s.parents.iter().map(|p| index[p]).collect())
        .collect();
    if let Some(cycle) = find_cycle(&parents) {
        let nodes = cycle.iter().map(|&i| atoms[i].to_string()).collect();
        let mut labels = Vec::new();
        for w in 0..cycle.len() {
            // edge cycle[w] -> cycle[w + 1]
            let (p, c) = (cycle[w], cycle[(w + 1) % cycle.len()]);
            let k = parents[c].iter().position(|&x| x == p).unwrap();
            let l = selections[c].edge_labels[k].clone();
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        return Err(ConstructError::Cycle { nodes, labels });
    }
    let order = topological(&parents);
    let mut pos = vec![0; atoms.len()];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let mut nodes = Vec::new();
    let mut reports = Vec::new();
    let mut warnings: Vec<String> = kb.warnings.clone();
    for &i in &order {
        let s = &selections[i];
        nodes.push(Node {
            name: atoms[i].to_string(),
            range: s.range.clone(),
            parents: parents[i].iter().map(|&p| pos[p]).collect(),
            cpt: s
                .rows
                .iter()
                .map(|r| r.entries.iter().map(|e| e.prob.clone()).collect())
                .collect(),
        });
        reports.push(NodeReport {
            name: atoms[i].to_string(),
            parents: s.parents.iter().map(|p| p.to_string()).collect(),
            edge_labels: s.edge_labels.clone(),
            rows: s.rows.clone(),
            discharged: s.discharged.clone(),
        });
        warnings.extend(s.warnings.iter().cloned());
    }
    let net = BayesNet::from_nodes(nodes)?;
    let report = ConstructionReport {
        event: req.event.clone(),
        route: Route::General,
        nodes: reports,
        warnings,
    };
    Ok((net, report))
}

/// A cycle as a node list `v0 -> v1 -> .. -> v0`, if any.
fn find_cycle(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(
        v: usize,
        children: &[Vec<usize>],
        state: &mut [u8],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        state[v] = 1;
        stack.push(v);
        for &c in &children[v] {
            if state[c] == 1 {
                let start = stack.iter().position(|&x| x == c).unwrap();
                return Some(stack[start..].to_vec());
            }
            if state[c] == 0 {
                if let Some(cy) = dfs(c, children, state, stack) {
                    return Some(cy);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }
    (0..n).find_map(|v| {
        if state[v] == 0 {
            dfs(v, &children, &mut state, &mut stack)
        } else {
            None
        }
    })
}

fn topological(parents: &[Vec<usize>]) -> Vec<usize> {
    let n = parents.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
    while let Some(i) = ready.pop_first() {
        placed[i] = true;
        order.push(i);
        for c in 0..n {
            if !placed[c] && !ready.contains(&c) && parents[c].iter().all(|&p| placed[p]) {
                ready.insert(c);
            }
        }
    }
    order
}
