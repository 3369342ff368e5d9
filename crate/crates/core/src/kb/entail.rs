use std::collections::{BTreeMap, BTreeSet};

use super::{Bindings, HornRule, LitPattern};
use crate::logic::{GroundAtom, GroundLiteral, ValueRef};

/// Ground literals indexed by symbol.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactIndex {
    by_symbol: BTreeMap<String, BTreeSet<GroundLiteral>>,
}

impl FactIndex {
    pub fn insert(&mut self, lit: GroundLiteral) -> bool {
        self.by_symbol
            .entry(lit.atom.symbol.clone())
            .or_default()
            .insert(lit)
    }

    pub fn contains(&self, lit: &GroundLiteral) -> bool {
        self.by_symbol
            .get(&lit.atom.symbol)
            .is_some_and(|s| s.contains(lit))
    }

    pub fn with_symbol(&self, symbol: &str) -> impl Iterator<Item = &GroundLiteral> {
        self.by_symbol.get(symbol).into_iter().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundLiteral> {
        self.by_symbol.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_symbol.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn match_literal(p: &LitPattern, lit: &GroundLiteral, b: &Bindings) -> Option<Bindings> {
    let atom: &GroundAtom = &lit.atom;
    let mut out = p.unify_atom(atom, b)?;
    match &p.value {
        ValueRef::Const(c) if *c == lit.value => {}
        ValueRef::Var(v) => match out.get(v) {
            Some(x) if *x != lit.value => return None,
            Some(_) => {}
            None => {
                out.insert(v.clone(), lit.value.clone());
            }
        },
        _ => return None,
    }
    Some(out)
}

/// All extensions of `b` satisfying `patterns` against `facts`. Positive
/// literals are joined first; negated predicate literals are then checked by
/// negation as failure and must be ground at that point.
pub fn solve(patterns: &[&LitPattern], facts: &FactIndex, b: &Bindings) -> Vec<Bindings> {
    let (neg, pos): (Vec<&LitPattern>, Vec<&LitPattern>) =
        patterns.iter().partition(|p| p.is_negative());
    let mut current = vec![b.clone()];
    for p in pos {
        let mut next = Vec::new();
        for b in &current {
            if let Some(g) = p.ground(b) {
                if facts.contains(&g) {
                    next.push(b.clone());
                }
                continue;
            }
            for lit in facts.with_symbol(&p.symbol) {
                if let Some(nb) = match_literal(p, lit, b) {
                    next.push(nb);
                }
            }
        }
        current = next;
        if current.is_empty() {
            return current;
        }
    }
    current.retain(|b| {
        neg.iter().all(|p| match p.ground(b) {
            Some(g) => !facts.contains(&GroundLiteral::positive(g.atom)),
            None => false,
        })
    });
    current
}

/// Naive forward chaining to the least fixpoint.
pub(crate) fn forward_chain(facts: &BTreeSet<GroundLiteral>, rules: &[HornRule]) -> FactIndex {
    let mut index = FactIndex::default();
    for f in facts {
        index.insert(f.clone());
    }
    loop {
        let mut added = Vec::new();
        for r in rules {
            let body: Vec<&LitPattern> = r.body.iter().collect();
            for b in solve(&body, &index, &Bindings::new()) {
                if let Some(h) = r.head.ground(&b) {
                    if !index.contains(&h) {
                        added.push(h);
                    }
                }
            }
        }
        if added.is_empty() {
            return index;
        }
        for h in added {
            index.insert(h);
        }
    }
}
