use std::collections::{BTreeSet, VecDeque};

use crate::kb::{applicable_statistics, children_of, KnowledgeBase};
use crate::logic::GroundAtom;

fn reach(
    start: &[GroundAtom],
    step: impl Fn(&GroundAtom) -> Vec<GroundAtom>,
) -> BTreeSet<GroundAtom> {
    let mut seen: BTreeSet<GroundAtom> = start.iter().cloned().collect();
    let mut queue: VecDeque<GroundAtom> = start.iter().cloned().collect();
    while let Some(n) = queue.pop_front() {
        for m in step(&n) {
            if seen.insert(m.clone()) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// The seeds plus every atom on a directed path between two seeds, where an
/// edge `p -> n` means `p` is a parent in some applicable statistic for `n`.
pub fn identify_variables(
    kb: &KnowledgeBase,
    event: &str,
    seeds: &[GroundAtom],
) -> BTreeSet<GroundAtom> {
    let ancestors = reach(seeds, |n| {
        let mut ps: Vec<GroundAtom> = Vec::new();
        for s in applicable_statistics(kb, n, event) {
            for a in s.parent_atoms() {
                if !ps.contains(a) {
                    ps.push(a.clone());
                }
            }
        }
        ps
    });
    let descendants = reach(seeds, |n| children_of(kb, n, event));
    let mut out: BTreeSet<GroundAtom> = ancestors.intersection(&descendants).cloned().collect();
    out.extend(seeds.iter().cloned());
    out
}
