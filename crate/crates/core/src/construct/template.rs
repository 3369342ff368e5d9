use std::collections::BTreeMap;

use num_traits::One;

use super::report::{ConstructionReport, CptEntry, CptRow, EntrySource, NodeReport, Route};
use super::select::{describe, fill_row};
use super::{ConstructError, ConstructionRequest};
use crate::bn::{configurations, BayesNet, Node};
use crate::kb::{Bindings, KnowledgeBase, StatValue, TemplateDecomp};
use crate::logic::{AtomKind, GroundAtom, GroundLiteral, Rational, Term};

/// CPTs of a template's nodes, in decomposition order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateCpts {
    pub symbols: Vec<String>,
    pub ranges: Vec<Vec<String>>,
    pub rows: Vec<Vec<CptRow>>,
    pub warnings: Vec<String>,
}

/// Whether every condition literal of `t` holds for `event`.
/// Statistics found for one (parent configuration, value) cell.
type Labelled = Vec<(String, StatValue)>;

pub fn template_applies(kb: &KnowledgeBase, t: &TemplateDecomp, event: &str) -> bool {
    let b: Bindings = [(t.event_var.clone(), event.to_string())]
        .into_iter()
        .collect();
    t.condition
        .iter()
        .all(|c| c.ground(&b).is_some_and(|g| kb.entails_ground(&g)))
}

fn lit(symbol: &str, value: &str) -> GroundLiteral {
    GroundLiteral::new(
        GroundAtom {
            symbol: symbol.to_string(),
            args: Vec::new(),
            kind: AtomKind::Func,
        },
        value,
    )
}

/// Reads every node's CPT from the parameter statistics attached to `t`.
pub fn template_cpts(
    kb: &KnowledgeBase,
    t: &TemplateDecomp,
) -> Result<TemplateCpts, ConstructError> {
    let ranges: Vec<Vec<String>> = t
        .nodes
        .iter()
        .map(|x| {
            kb.signature
                .func(x)
                .and_then(|d| d.values())
                .map(|v| v.to_vec())
                .unwrap_or_default()
        })
        .collect();
    let mut warnings = Vec::new();
    let mut all_rows = Vec::new();
    for (i, x) in t.nodes.iter().enumerate() {
        let ps = &t.parents[i];
        let mut found: BTreeMap<(Vec<String>, String), Labelled> = BTreeMap::new();
        for &si in &t.params {
            let st = &kb.stats[si];
            if st.target.symbol != *x {
                continue;
            }
            let mut assignments = vec![Bindings::new()];
            for z in &st.placeholders {
                let values = kb
                    .placeholder_ranges(si)
                    .get(z)
                    .cloned()
                    .unwrap_or_default();
                assignments = assignments
                    .into_iter()
                    .flat_map(|b| {
                        values.iter().map(move |v| {
                            let mut nb = b.clone();
                            nb.insert(z.clone(), v.clone());
                            nb
                        })
                    })
                    .collect();
            }
            for b in assignments {
                let value = match &st.target.value {
                    crate::logic::ValueRef::Const(c) => c.clone(),
                    crate::logic::ValueRef::Var(v) => b[v].clone(),
                };
                let mut given: BTreeMap<&str, String> = BTreeMap::new();
                for c in &st.conditions {
                    if c.kind == AtomKind::Func && t.nodes.contains(&c.symbol) {
                        if c.args != [Term::Var(t.event_var.clone())] {
                            continue;
                        }
                        let v = match &c.value {
                            crate::logic::ValueRef::Const(v) => v.clone(),
                            crate::logic::ValueRef::Var(z) => b[z].clone(),
                        };
                        given.insert(c.symbol.as_str(), v);
                    }
                }
                let config: Option<Vec<String>> = ps
                    .iter()
                    .map(|&p| given.get(t.nodes[p].as_str()).cloned())
                    .collect();
                match config {
                    Some(config) if given.len() == ps.len() => {
                        found
                            .entry((config, value))
                            .or_default()
                            .push((st.label.clone(), st.value.clone()));
                    }
                    _ => {
                        let w = format!(
                            "@{} does not condition on exactly the parents of {x}; ignored",
                            st.label
                        );
                        if !warnings.contains(&w) {
                            warnings.push(w);
                        }
                    }
                }
            }
        }
        let pranges: Vec<&Vec<String>> = ps.iter().map(|&p| &ranges[p]).collect();
        let cards: Vec<usize> = pranges.iter().map(|r| r.len()).collect();
        let mut rows = Vec::new();
        for config in configurations(&cards) {
            let values: Vec<String> = config
                .iter()
                .zip(&pranges)
                .map(|(&k, r)| r[k].clone())
                .collect();
            let cond: Vec<GroundLiteral> = ps
                .iter()
                .zip(&values)
                .map(|(&p, v)| lit(&t.nodes[p], v))
                .collect();
            let mut known = Vec::new();
            for v in &ranges[i] {
                let entry = match found.get(&(values.clone(), v.clone())).map(Vec::as_slice) {
                    None | Some([]) => None,
                    Some(list @ [(label, first), ..]) => {
                        if let Some((other, _)) = list.iter().find(|(_, val)| val != first) {
                            return Err(ConstructError::UnresolvedConflict {
                                conditional: describe(x, v, &cond),
                                first: label.clone(),
                                second: other.clone(),
                            });
                        }
                        let midpoint = first.is_interval();
                        if midpoint {
                            warnings
                                .push(format!("@{label} gives an interval; using its midpoint"));
                        }
                        Some(CptEntry {
                            value: v.clone(),
                            prob: first.point(),
                            source: EntrySource::Statistic {
                                label: label.clone(),
                                overrides: Vec::new(),
                                midpoint,
                            },
                        })
                    }
                };
                known.push(entry);
            }
            let entries = match fill_row(x, &ranges[i], &cond, known)? {
                Some(e) => e,
                None if ps.is_empty() => {
                    warnings.push(format!("no parameter for {x}; using a uniform prior"));
                    let p =
                        Rational::one() / Rational::from_integer((ranges[i].len() as i64).into());
                    ranges[i]
                        .iter()
                        .map(|v| CptEntry {
                            value: v.clone(),
                            prob: p.clone(),
                            source: EntrySource::Uniform,
                        })
                        .collect()
                }
                None => {
                    return Err(ConstructError::MissingConditional {
                        conditional: describe(x, &ranges[i][0], &cond),
                    })
                }
            };
            rows.push(CptRow {
                config: values,
                entries,
            });
        }
        all_rows.push(rows);
    }
    Ok(TemplateCpts {
        symbols: t.nodes.clone(),
        ranges,
        rows: all_rows,
        warnings,
    })
}

/// Builds the network for `event` from a template whose condition holds.
/// Every request atom must be one of the template's nodes.
pub fn instantiate_template(
    kb: &KnowledgeBase,
    t: &TemplateDecomp,
    req: &ConstructionRequest,
) -> Result<(BayesNet, ConstructionReport), ConstructError> {
    let event = &req.event;
    let names: Vec<String> = t.nodes.iter().map(|x| format!("{x}({event})")).collect();
    for atom in req
        .queries
        .iter()
        .chain(req.interest.iter())
        .chain(req.evidence.iter().map(|l| &l.atom))
    {
        let covered = atom.kind == AtomKind::Func
            && atom.args == [event.clone()]
            && t.nodes.contains(&atom.symbol);
        if !covered {
            return Err(ConstructError::Uncovered {
                atom: atom.to_string(),
                template: t.label.clone(),
            });
        }
    }
    let cpts = template_cpts(kb, t)?;
    let b: Bindings = [(t.event_var.clone(), event.clone())].into_iter().collect();
    let discharged: Vec<(String, String)> = t
        .condition
        .iter()
        .filter_map(|c| c.ground(&b))
        .map(|g| (t.label.clone(), g.to_string()))
        .collect();
    let mut nodes = Vec::new();
    let mut reports = Vec::new();
    for (i, rows) in cpts.rows.iter().enumerate() {
        nodes.push(Node {
            name: names[i].clone(),
            range: cpts.ranges[i].clone(),
            parents: t.parents[i].clone(),
            cpt: rows
                .iter()
                .map(|r| r.entries.iter().map(|e| e.prob.clone()).collect())
                .collect(),
        });
        reports.push(NodeReport {
            name: names[i].clone(),
            parents: t.parents[i].iter().map(|&p| names[p].clone()).collect(),
            edge_labels: vec![t.label.clone(); t.parents[i].len()],
            rows: rows.clone(),
            discharged: if i == 0 {
                discharged.clone()
            } else {
                Vec::new()
            },
        });
    }
    let net = BayesNet::from_nodes(nodes)?;
    let report = ConstructionReport {
        event: event.clone(),
        route: Route::Template(t.label.clone()),
        nodes: reports,
        warnings: kb.warnings.iter().cloned().chain(cpts.warnings).collect(),
    };
    Ok((net, report))
}
