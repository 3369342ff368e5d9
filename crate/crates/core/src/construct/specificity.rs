use std::collections::BTreeMap;

use crate::kb::{HornRule, InstantiatedStat, KnowledgeBase, LitPattern, PinnedLiteral};
use crate::logic::{GroundAtom, GroundLiteral, Term, ValueRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Specificity {
    MoreSpecific,
    LessSpecific,
    Equal,
    Incomparable,
}

type PinBinding = BTreeMap<String, (String, bool)>;

fn match_pinned(p: &LitPattern, l: &PinnedLiteral, b: &PinBinding) -> Option<PinBinding> {
    let lit = &l.literal;
    if p.kind != lit.atom.kind || p.symbol != lit.atom.symbol || p.args.len() != lit.atom.args.len()
    {
        return None;
    }
    match &p.value {
        ValueRef::Const(c) if *c == lit.value => {}
        _ => return None,
    }
    let mut out = b.clone();
    for ((t, a), &pin) in p.args.iter().zip(&lit.atom.args).zip(&l.pinned) {
        match t {
            Term::Const(c) if c == a => {}
            Term::Var(v) => match out.get_mut(v) {
                Some((x, _)) if x != a => return None,
                Some((_, pinned)) => *pinned |= pin,
                None => {
                    out.insert(v.clone(), (a.clone(), pin));
                }
            },
            _ => return None,
        }
    }
    Some(out)
}

fn fire(rule: &HornRule, facts: &[PinnedLiteral]) -> Vec<PinnedLiteral> {
    let mut sols = vec![PinBinding::new()];
    for p in &rule.body {
        sols = sols
            .iter()
            .flat_map(|b| facts.iter().filter_map(move |l| match_pinned(p, l, b)))
            .collect();
    }
    let mut out = Vec::new();
    for b in sols {
        let mut args = Vec::new();
        let mut pinned = Vec::new();
        for t in &rule.head.args {
            match t {
                Term::Const(c) => {
                    args.push(c.clone());
                    pinned.push(true);
                }
                Term::Var(v) => {
                    let (a, pin) = &b[v];
                    args.push(a.clone());
                    pinned.push(*pin);
                }
                Term::App(..) => unreachable!("Horn rules are function-free"),
            }
        }
        let ValueRef::Const(value) = &rule.head.value else {
            continue;
        };
        let atom = GroundAtom {
            symbol: rule.head.symbol.clone(),
            args,
            kind: rule.head.kind,
        };
        out.push(PinnedLiteral {
            literal: GroundLiteral {
                atom,
                value: value.clone(),
            },
            pinned,
        });
    }
    out
}

/// Closes a reference class under the Horn rules, without knowledge base
/// facts. A derived argument is pinned when it comes from a rule constant or
/// from a pinned position.
pub fn reference_closure(reference: &[PinnedLiteral], rules: &[HornRule]) -> Vec<PinnedLiteral> {
    let mut facts = reference.to_vec();
    loop {
        let mut added = false;
        for r in rules {
            for l in fire(r, &facts) {
                if !facts.contains(&l) {
                    facts.push(l);
                    added = true;
                }
            }
        }
        if !added {
            return facts;
        }
    }
}

fn covers(closure: &[PinnedLiteral], lit: &PinnedLiteral) -> bool {
    closure.iter().any(|m| {
        m.literal == lit.literal
            && lit
                .pinned
                .iter()
                .zip(&m.pinned)
                .all(|(&need, &have)| !need || have)
    })
}

/// `a` is more specific than `b` when every literal of `b`'s reference class
/// follows from `a`'s, and a constant written in `b` is also written in `a`.
pub fn specificity_compare(
    a: &InstantiatedStat,
    b: &InstantiatedStat,
    kb: &KnowledgeBase,
) -> Specificity {
    let ca = reference_closure(&a.reference, &kb.rules);
    let cb = reference_closure(&b.reference, &kb.rules);
    let a_in_b = b.reference.iter().all(|l| covers(&ca, l));
    let b_in_a = a.reference.iter().all(|l| covers(&cb, l));
    match (a_in_b, b_in_a) {
        (true, true) => Specificity::Equal,
        (true, false) => Specificity::MoreSpecific,
        (false, true) => Specificity::LessSpecific,
        (false, false) => Specificity::Incomparable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::applicable_statistics;

    const WATSON: &str = "
        sort Event; sort House; sort Person;
        pred ReportsAlarm(Event, Person, House); pred AlarmSound(Event, House);
        pred HouseWithAlarm(House); pred LivesNear(House, Person);
        const MyHouse : House; const Watson, Gibbons : Person; const E002 : Event;
        @item1: stat [ReportsAlarm(e, y, x) | AlarmSound(e, x) & HouseWithAlarm(x) & LivesNear(x, y)]_{e, x, y} = 0.45.
        @item2: stat [ReportsAlarm(e, y, x) | ~AlarmSound(e, x) & HouseWithAlarm(x) & LivesNear(x, y)]_{e, x, y} = 0.05.
        @item3: stat [ReportsAlarm(e, Watson, x) | ~AlarmSound(e, x) & HouseWithAlarm(x) & LivesNear(x, Watson)]_{e, x} = 0.15.
        fact HouseWithAlarm(MyHouse) & LivesNear(MyHouse, Watson).
    ";

    #[test]
    fn written_constant_is_more_specific() {
        let kb = KnowledgeBase::parse(WATSON).unwrap();
        let app = applicable_statistics(
            &kb,
            &GroundAtom::pred("ReportsAlarm", &["E002", "Watson", "MyHouse"]),
            "E002",
        );
        assert_eq!(
            specificity_compare(&app[2], &app[1], &kb),
            Specificity::MoreSpecific
        );
        assert_eq!(
            specificity_compare(&app[1], &app[2], &kb),
            Specificity::LessSpecific
        );
        assert_eq!(
            specificity_compare(&app[1], &app[1], &kb),
            Specificity::Equal
        );
        assert_eq!(
            specificity_compare(&app[0], &app[1], &kb),
            Specificity::Incomparable
        );
    }

    #[test]
    fn horn_rule_widens_the_reference_class() {
        let text = "pred Rains(Thing); pred Wet(Thing); pred Slips(Thing); const E1;
            axiom all e. Rains(e) -> Wet(e).
            @wet: stat [Slips(e) | Wet(e)]_{e} = 0.2.
            @rain: stat [Slips(e) | Rains(e)]_{e} = 0.3.
            @dry: stat [Slips(e) | ~Wet(e)]_{e} = 0.01.
            fact Rains(E1).";
        let kb = KnowledgeBase::parse(text).unwrap();
        let app = applicable_statistics(&kb, &GroundAtom::pred("Slips", &["E1"]), "E1");
        let labels: Vec<&str> = app.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, vec!["wet", "rain"]);
        assert_eq!(
            specificity_compare(&app[1], &app[0], &kb),
            Specificity::MoreSpecific
        );
    }
}
