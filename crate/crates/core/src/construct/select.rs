use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::noisy_or::noisy_or;
use super::report::{CptEntry, CptRow, EntrySource};
use super::specificity::{specificity_compare, Specificity};
use super::ConstructError;
use crate::bn::configurations;
use crate::kb::{applicable_statistics, InstantiatedStat, KnowledgeBase};
use crate::logic::{format_rational, AtomKind, GroundAtom, GroundLiteral, Rational, FALSE, TRUE};

/// The statistics chosen for one node and the CPT they determine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    pub node: GroundAtom,
    pub range: Vec<String>,
    pub parents: Vec<GroundAtom>,
    pub edge_labels: Vec<String>,
    pub rows: Vec<CptRow>,
    pub discharged: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

pub(crate) fn describe(node: &str, value: &str, cond: &[GroundLiteral]) -> String {
    let lhs = match value {
        TRUE => node.to_string(),
        FALSE => format!("~{node}"),
        v => format!("{node}={v}"),
    };
    if cond.is_empty() {
        format!("P({lhs})")
    } else {
        format!(
            "P({lhs} | {})",
            cond.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

/// Completes a row from its known entries: unchanged when all are known,
/// by complement when one is missing. `None` when two or more are missing.
pub(crate) fn fill_row(
    node: &str,
    range: &[String],
    cond: &[GroundLiteral],
    known: Vec<Option<CptEntry>>,
) -> Result<Option<Vec<CptEntry>>, ConstructError> {
    let missing: Vec<usize> = (0..known.len()).filter(|&i| known[i].is_none()).collect();
    let sum: Rational = known.iter().flatten().map(|e| e.prob.clone()).sum();
    match missing.as_slice() {
        [] => {
            if !sum.is_one() {
                return Err(ConstructError::InconsistentRow {
                    conditional: describe(node, &range[0], cond),
                    sum: format_rational(&sum),
                });
            }
            Ok(Some(known.into_iter().flatten().collect()))
        }
        [m] => {
            let rest = Rational::one() - &sum;
            if rest < Rational::zero() {
                return Err(ConstructError::InconsistentRow {
                    conditional: describe(node, &range[*m], cond),
                    sum: format_rational(&sum),
                });
            }
            let mut labels: Vec<String> = Vec::new();
            for e in known.iter().flatten() {
                for l in e.source.labels() {
                    if !labels.iter().any(|x| x == l) {
                        labels.push(l.to_string());
                    }
                }
            }
            let mut out = Vec::with_capacity(known.len());
            for (i, e) in known.into_iter().enumerate() {
                out.push(e.unwrap_or_else(|| CptEntry {
                    value: range[i].clone(),
                    prob: rest.clone(),
                    source: EntrySource::Complement {
                        labels: labels.clone(),
                    },
                }));
            }
            Ok(Some(out))
        }
        _ => Ok(None),
    }
}

/// Picks among statistics that all address the same conditional: the
/// maximally specific ones must agree on their value.
fn pick(
    kb: &KnowledgeBase,
    matches: &[&InstantiatedStat],
    conditional: impl Fn() -> String,
    warnings: &mut Vec<String>,
) -> Result<Option<(Rational, EntrySource)>, ConstructError> {
    if matches.is_empty() {
        return Ok(None);
    }
    let maximal: Vec<&InstantiatedStat> = matches
        .iter()
        .filter(|m| {
            !matches
                .iter()
                .any(|o| specificity_compare(o, m, kb) == Specificity::MoreSpecific)
        })
        .copied()
        .collect();
    let first = maximal[0];
    if let Some(other) = maximal.iter().find(|m| m.value != first.value) {
        return Err(ConstructError::UnresolvedConflict {
            conditional: conditional(),
            first: first.label.clone(),
            second: other.label.clone(),
        });
    }
    let overrides: Vec<String> = matches
        .iter()
        .filter(|m| !maximal.iter().any(|x| x.label == m.label))
        .map(|m| m.label.clone())
        .collect();
    let midpoint = first.value.is_interval();
    if midpoint {
        warnings.push(format!(
            "@{} gives an interval; using its midpoint for {}",
            first.label,
            conditional()
        ));
    }
    Ok(Some((
        first.value.point(),
        EntrySource::Statistic {
            label: first.label.clone(),
            overrides,
            midpoint,
        },
    )))
}

fn same_literals(a: &[GroundLiteral], b: &BTreeSet<GroundLiteral>) -> bool {
    a.len() == b.len() && a.iter().all(|l| b.contains(l))
}

/// Selects statistics for `node` and derives its CPT. When `allowed` is
/// given, statistics with a parent outside it are ignored.
pub fn select_statistics(
    kb: &KnowledgeBase,
    node: &GroundAtom,
    event: &str,
    allowed: Option<&BTreeSet<GroundAtom>>,
) -> Result<Selection, ConstructError> {
    let name = node.to_string();
    let range = kb.node_range(node);
    let cands: Vec<InstantiatedStat> = applicable_statistics(kb, node, event)
        .into_iter()
        .filter(|s| {
            let atoms: BTreeSet<&GroundAtom> = s.parent_atoms().collect();
            atoms.len() == s.parents.len()
                && !atoms.contains(node)
                && s.parent_atoms().all(|a| {
                    allowed.is_none_or(|set| set.contains(a)) && !kb.node_range(a).is_empty()
                })
        })
        .collect();
    let mut parents: Vec<GroundAtom> = Vec::new();
    let mut edge_labels = Vec::new();
    let mut discharged = Vec::new();
    for s in &cands {
        for a in s.parent_atoms() {
            if !parents.contains(a) {
                parents.push(a.clone());
                edge_labels.push(s.label.clone());
            }
        }
        for d in &s.discharged {
            let entry = (s.label.clone(), d.to_string());
            if !discharged.contains(&entry) {
                discharged.push(entry);
            }
        }
    }
    let pranges: Vec<Vec<String>> = parents.iter().map(|p| kb.node_range(p)).collect();
    let cards: Vec<usize> = pranges.iter().map(|r| r.len()).collect();
    let configs = configurations(&cards);
    let mut warnings = Vec::new();

    let row_literals = |config: &[usize]| -> Vec<GroundLiteral> {
        parents
            .iter()
            .zip(config)
            .zip(&pranges)
            .map(|((p, &k), r)| GroundLiteral::new(p.clone(), &r[k]))
            .collect()
    };

    let mut partial: Vec<Option<Vec<CptEntry>>> = Vec::with_capacity(configs.len());
    for config in &configs {
        let cond = row_literals(config);
        let cond_set: BTreeSet<GroundLiteral> = cond.iter().cloned().collect();
        let mut known = Vec::with_capacity(range.len());
        for v in &range {
            let matches: Vec<&InstantiatedStat> = cands
                .iter()
                .filter(|s| s.target.value == *v && same_literals(&s.parents, &cond_set))
                .collect();
            let entry = pick(kb, &matches, || describe(&name, v, &cond), &mut warnings)?.map(
                |(prob, source)| CptEntry {
                    value: v.clone(),
                    prob,
                    source,
                },
            );
            known.push(entry);
        }
        partial.push(fill_row(&name, &range, &cond, known)?);
    }

    let binary = |a: &GroundAtom| a.kind == AtomKind::Pred;
    let mut rows = Vec::with_capacity(configs.len());
    let mut noisy: Option<NoisyParams> = None;
    for (i, config) in configs.iter().enumerate() {
        let cond = row_literals(config);
        let entries = match partial[i].clone() {
            Some(e) => e,
            None if parents.is_empty() => {
                warnings.push(format!("no statistic for {name}; using a uniform prior"));
                let p = Rational::new(1.into(), (range.len() as i64).into());
                range
                    .iter()
                    .map(|v| CptEntry {
                        value: v.clone(),
                        prob: p.clone(),
                        source: EntrySource::Uniform,
                    })
                    .collect()
            }
            None if binary(node) && parents.iter().all(binary) => {
                if noisy.is_none() {
                    noisy = Some(noisy_or_parameters(
                        kb,
                        &name,
                        &parents,
                        &cands,
                        &partial,
                        &mut warnings,
                    )?);
                }
                let (per_cause, labels, leak, leak_label) = noisy.as_ref().unwrap();
                let active: Vec<bool> = config.iter().map(|&k| k == 0).collect();
                let p =
                    noisy_or(per_cause, leak, &active).map_err(|e| ConstructError::NoisyOr {
                        node: name.clone(),
                        message: e.to_string(),
                    })?;
                let causes: Vec<String> = labels
                    .iter()
                    .zip(&active)
                    .filter(|(_, &on)| on)
                    .map(|(l, _)| l.clone())
                    .collect();
                let source = EntrySource::NoisyOr {
                    causes,
                    leak: leak_label.clone(),
                };
                vec![
                    CptEntry {
                        value: TRUE.into(),
                        prob: p.clone(),
                        source: source.clone(),
                    },
                    CptEntry {
                        value: FALSE.into(),
                        prob: Rational::one() - p,
                        source,
                    },
                ]
            }
            None => {
                let v = &range[0];
                return Err(ConstructError::MissingConditional {
                    conditional: describe(&name, v, &cond),
                });
            }
        };
        rows.push(CptRow {
            config: config
                .iter()
                .zip(&pranges)
                .map(|(&k, r)| r[k].clone())
                .collect(),
            entries,
        });
    }
    // justify each edge by a statistic the CPT actually uses, when there is one
    let used: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| &r.entries)
        .flat_map(|e| e.source.labels())
        .collect();
    for (p, label) in parents.iter().zip(edge_labels.iter_mut()) {
        if let Some(s) = cands
            .iter()
            .find(|s| used.contains(s.label.as_str()) && s.parent_atoms().any(|a| a == p))
        {
            *label = s.label.clone();
        }
    }
    Ok(Selection {
        node: node.clone(),
        range,
        parents,
        edge_labels,
        rows,
        discharged,
        warnings,
    })
}

type NoisyParams = (Vec<Rational>, Vec<String>, Rational, Option<String>);

fn noisy_or_parameters(
    kb: &KnowledgeBase,
    name: &str,
    parents: &[GroundAtom],
    cands: &[InstantiatedStat],
    partial: &[Option<Vec<CptEntry>>],
    warnings: &mut Vec<String>,
) -> Result<NoisyParams, ConstructError> {
    let mut per_cause = Vec::new();
    let mut labels = Vec::new();
    for p in parents {
        let cause = GroundLiteral::positive(p.clone());
        let single: BTreeSet<GroundLiteral> = [cause.clone()].into_iter().collect();
        let mut found = None;
        for v in [TRUE, FALSE] {
            let matches: Vec<&InstantiatedStat> = cands
                .iter()
                .filter(|s| s.target.value == v && same_literals(&s.parents, &single))
                .collect();
            if let Some((prob, source)) = pick(
                kb,
                &matches,
                || describe(name, v, std::slice::from_ref(&cause)),
                warnings,
            )? {
                let prob = if v == TRUE {
                    prob
                } else {
                    Rational::one() - prob
                };
                found = Some((prob, source.labels()[0].to_string()));
                break;
            }
        }
        let Some((prob, label)) = found else {
            return Err(ConstructError::MissingConditional {
                conditional: describe(name, TRUE, &[cause]),
            });
        };
        per_cause.push(prob);
        labels.push(label);
    }
    let (leak, leak_label) = match partial.last().and_then(|r| r.as_ref()) {
        Some(entries) => {
            let e = &entries[0];
            (
                e.prob.clone(),
                e.source.labels().first().map(|l| l.to_string()),
            )
        }
        None => {
            warnings.push(format!(
                "no statistic for {name} with every cause absent; noisy-or leak set to 0"
            ));
            (Rational::zero(), None)
        }
    };
    Ok((per_cause, labels, leak, leak_label))
}
