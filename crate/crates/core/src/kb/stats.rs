use std::collections::BTreeSet;

use super::{solve, Bindings, KnowledgeBase, LitPattern, LocalStat, StatValue};
use crate::logic::{GroundAtom, GroundLiteral, Term, ValueRef};

/// A ground literal that remembers which argument positions were written as
/// constants in the statistic it came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PinnedLiteral {
    pub literal: GroundLiteral,
    pub pinned: Vec<bool>,
}

impl PinnedLiteral {
    pub fn from_pattern(p: &LitPattern, b: &Bindings) -> Option<PinnedLiteral> {
        let literal = p.ground(b)?;
        let pinned = p.args.iter().map(|a| matches!(a, Term::Const(_))).collect();
        Some(PinnedLiteral { literal, pinned })
    }
}

/// Value placed on the target atom of a statistic's reference class entry, so
/// that the target contributes its atom but not its value.
pub const ANY_VALUE: &str = "*";

/// A local statistic instantiated for one network node and one event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstantiatedStat {
    pub stat: usize,
    pub label: String,
    pub target: GroundLiteral,
    pub parents: Vec<GroundLiteral>,
    pub discharged: Vec<GroundLiteral>,
    pub context: Vec<GroundLiteral>,
    pub value: StatValue,
    pub binding: Bindings,
    /// Target atom and instantiated condition, used for specificity.
    pub reference: Vec<PinnedLiteral>,
}

impl InstantiatedStat {
    pub fn parent_atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.parents.iter().map(|p| &p.atom)
    }
}

fn placeholder_assignments(kb: &KnowledgeBase, si: usize, base: &Bindings) -> Vec<Bindings> {
    let mut out = vec![base.clone()];
    let ranges = kb.placeholder_ranges(si);
    for z in &kb.stats[si].placeholders {
        let Some(values) = ranges.get(z) else {
            return Vec::new();
        };
        out = out
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
    out
}

/// Splits conditions into those decided against the knowledge base (context
/// and background event conditions) and those that become parents.
fn split<'a>(kb: &KnowledgeBase, st: &'a LocalStat) -> (Vec<&'a LitPattern>, Vec<&'a LitPattern>) {
    st.conditions
        .iter()
        .partition(|c| !c.mentions_var(&st.event_var) || kb.is_background(&c.symbol))
}

fn instantiate(kb: &KnowledgeBase, si: usize, base: &Bindings, out: &mut Vec<InstantiatedStat>) {
    let st = &kb.stats[si];
    let (decided, node_side) = split(kb, st);
    for b in placeholder_assignments(kb, si, base) {
        for sigma in solve(&decided, kb.closure(), &b) {
            let Some(target) = st.target.ground(&sigma) else {
                continue;
            };
            let Some(parents) = node_side
                .iter()
                .map(|p| p.ground(&sigma))
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let ground_all = |ps: &mut dyn Iterator<Item = &LitPattern>| -> Vec<GroundLiteral> {
                ps.filter_map(|p| p.ground(&sigma)).collect()
            };
            let discharged = ground_all(
                &mut decided
                    .iter()
                    .copied()
                    .filter(|c| c.mentions_var(&st.event_var)),
            );
            let context = ground_all(&mut st.context());
            let mut reference = Vec::with_capacity(st.conditions.len() + 1);
            let mut tp = PinnedLiteral::from_pattern(&st.target, &sigma).expect("target is ground");
            tp.literal.value = ANY_VALUE.to_string();
            reference.push(tp);
            reference.extend(
                st.conditions
                    .iter()
                    .filter_map(|c| PinnedLiteral::from_pattern(c, &sigma)),
            );
            let inst = InstantiatedStat {
                stat: si,
                label: st.label.clone(),
                target,
                parents,
                discharged,
                context,
                value: st.value.clone(),
                binding: sigma,
                reference,
            };
            if !out
                .iter()
                .any(|o| o.stat == si && o.target == inst.target && o.parents == inst.parents)
            {
                out.push(inst);
            }
        }
    }
}

/// Statistics applicable to `node` for `event`, in source order. The target
/// must unify with the node with the event variable bound to `event`, and
/// every decided condition must be entailed after instantiation.
pub fn applicable_statistics(
    kb: &KnowledgeBase,
    node: &GroundAtom,
    event: &str,
) -> Vec<InstantiatedStat> {
    let mut out = Vec::new();
    for (si, st) in kb.stats_for(&node.symbol) {
        let mut base = Bindings::new();
        base.insert(st.event_var.clone(), event.to_string());
        let Some(b) = st.target.unify_atom(node, &base) else {
            continue;
        };
        instantiate(kb, si, &b, &mut out);
    }
    out
}

/// Atoms that have `node` among the parents of an applicable statistic.
pub fn children_of(kb: &KnowledgeBase, node: &GroundAtom, event: &str) -> Vec<GroundAtom> {
    let mut candidates = BTreeSet::new();
    for (si, st) in kb.stats.iter().enumerate() {
        let mut base = Bindings::new();
        base.insert(st.event_var.clone(), event.to_string());
        let (decided, node_side) = split(kb, st);
        for p in node_side {
            let Some(b) = p.unify_atom(node, &base) else {
                continue;
            };
            for b in placeholder_assignments(kb, si, &b) {
                for sigma in solve(&decided, kb.closure(), &b) {
                    let mut t = st.target.clone();
                    t.value = ValueRef::Const(String::new());
                    if let Some(g) = t.ground(&sigma) {
                        candidates.insert(g.atom);
                    }
                }
            }
        }
    }
    candidates
        .into_iter()
        .filter(|c| {
            c != node
                && applicable_statistics(kb, c, event)
                    .iter()
                    .any(|s| s.parent_atoms().any(|a| a == node))
        })
        .collect()
}
