use std::collections::BTreeSet;

use num_traits::Zero;

use super::{configurations, BayesNet, BnError, Factor};
use crate::logic::Rational;

/// A normalized distribution over the queried nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Posterior {
    pub vars: Vec<String>,
    pub ranges: Vec<Vec<String>>,
    /// Row-major over `vars`, last fastest.
    pub table: Vec<Rational>,
    /// Probability of the evidence.
    pub evidence_probability: Rational,
}

impl Posterior {
    pub fn prob(&self, values: &[&str]) -> Option<&Rational> {
        if values.len() != self.vars.len() {
            return None;
        }
        let mut off = 0;
        for (v, range) in values.iter().zip(&self.ranges) {
            off = off * range.len() + range.iter().position(|x| x == v)?;
        }
        self.table.get(off)
    }

    /// Marginal of one queried variable.
    pub fn marginal(&self, var: &str) -> Option<Vec<(String, Rational)>> {
        let k = self.vars.iter().position(|v| v == var)?;
        let cards: Vec<usize> = self.ranges.iter().map(|r| r.len()).collect();
        let mut out = vec![Rational::zero(); cards[k]];
        for (a, x) in configurations(&cards).iter().zip(&self.table) {
            out[a[k]] += x;
        }
        Some(self.ranges[k].iter().cloned().zip(out).collect())
    }
}

/// Full joint in network node order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Joint {
    pub cards: Vec<usize>,
    pub table: Vec<Rational>,
}

/// Evidence as (node, value index) pairs.
type Evidence = Vec<(usize, usize)>;

impl BayesNet {
    fn resolve_request(
        &self,
        query: &[&str],
        evidence: &[(&str, &str)],
    ) -> Result<(Vec<usize>, Evidence), BnError> {
        let q = query
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| BnError::UnknownNode(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut ev = Vec::new();
        for (n, v) in evidence {
            let i = self
                .index_of(n)
                .ok_or_else(|| BnError::UnknownNode(n.to_string()))?;
            let k = self
                .value_index(i, v)
                .ok_or_else(|| BnError::UnknownValue {
                    node: n.to_string(),
                    value: v.to_string(),
                })?;
            if q.contains(&i) {
                return Err(BnError::QueryEvidenceOverlap(n.to_string()));
            }
            match ev.iter().find(|(j, _)| *j == i) {
                Some((_, k2)) if *k2 != k => return Err(BnError::ZeroProbabilityEvidence),
                Some(_) => {}
                None => ev.push((i, k)),
            }
        }
        Ok((q, ev))
    }

    /// Elimination order for `hidden` by minimum degree in the interaction
    /// graph of `factors`, lowest index on ties.
    pub fn min_degree_order(factors: &[Factor], hidden: &[usize]) -> Vec<usize> {
        let mut scopes: Vec<BTreeSet<usize>> = factors
            .iter()
            .map(|f| f.vars.iter().copied().collect())
            .collect();
        let mut left: BTreeSet<usize> = hidden.iter().copied().collect();
        let mut order = Vec::new();
        while !left.is_empty() {
            let degree = |v: usize| -> usize {
                let mut nb: BTreeSet<usize> = BTreeSet::new();
                for s in scopes.iter().filter(|s| s.contains(&v)) {
                    nb.extend(s.iter().copied());
                }
                nb.len().saturating_sub(1)
            };
            let v = *left.iter().min_by_key(|&&v| (degree(v), v)).unwrap();
            let mut merged = BTreeSet::new();
            scopes.retain(|s| {
                if s.contains(&v) {
                    merged.extend(s.iter().copied());
                    false
                } else {
                    true
                }
            });
            merged.remove(&v);
            scopes.push(merged);
            left.remove(&v);
            order.push(v);
        }
        order
    }

    /// Exact posterior over `query` given `evidence` by variable
    /// elimination with a min-degree order.
    pub fn eliminate(
        &self,
        query: &[&str],
        evidence: &[(&str, &str)],
    ) -> Result<Posterior, BnError> {
        self.eliminate_inner(query, evidence, None)
    }

    /// As [`BayesNet::eliminate`] with an explicit order over the hidden
    /// nodes. Any hidden node missing from `order` is eliminated afterwards.
    pub fn eliminate_with_order(
        &self,
        query: &[&str],
        evidence: &[(&str, &str)],
        order: &[&str],
    ) -> Result<Posterior, BnError> {
        let order = order
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| BnError::UnknownNode(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.eliminate_inner(query, evidence, Some(order))
    }

    fn eliminate_inner(
        &self,
        query: &[&str],
        evidence: &[(&str, &str)],
        order: Option<Vec<usize>>,
    ) -> Result<Posterior, BnError> {
        let (q, ev) = self.resolve_request(query, evidence)?;
        let mut factors: Vec<Factor> = (0..self.len())
            .map(|i| {
                ev.iter()
                    .fold(Factor::from_cpt(self, i), |f, &(v, k)| f.reduce(v, k))
            })
            .collect();
        let hidden: Vec<usize> = (0..self.len())
            .filter(|i| !q.contains(i) && !ev.iter().any(|(j, _)| j == i))
            .collect();
        let order = match order {
            None => BayesNet::min_degree_order(&factors, &hidden),
            Some(mut o) => {
                o.retain(|v| hidden.contains(v));
                o.extend(
                    hidden
                        .iter()
                        .filter(|h| !o.contains(h))
                        .copied()
                        .collect::<Vec<_>>(),
                );
                o
            }
        };
        for v in order {
            let (with, without): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.mentions(v));
            factors = without;
            if let Some(prod) = with.into_iter().reduce(|a, b| a.product(&b)) {
                factors.push(prod.sum_out(v));
            }
        }
        let mut result = factors
            .into_iter()
            .fold(Factor::unit(), |a, b| a.product(&b));
        // each queried node keeps its own CPT factor, so the product covers
        // every queried variable
        let target = Factor {
            vars: q.clone(),
            cards: q.iter().map(|&i| self.nodes()[i].range.len()).collect(),
            table: Vec::new(),
        };
        result = align(&result, &target);
        let z = result.total();
        if z.is_zero() {
            return Err(BnError::ZeroProbabilityEvidence);
        }
        Ok(Posterior {
            vars: q.iter().map(|&i| self.nodes()[i].name.clone()).collect(),
            ranges: q.iter().map(|&i| self.nodes()[i].range.clone()).collect(),
            table: result.table.iter().map(|x| x / &z).collect(),
            evidence_probability: z,
        })
    }

    /// Every joint entry, in node order. Fails when there are more than
    /// `cap` states.
    pub fn joint_brute_force(&self, cap: u128) -> Result<Joint, BnError> {
        let cards: Vec<usize> = self.nodes().iter().map(|n| n.range.len()).collect();
        let states = cards.iter().map(|&c| c as u128).product::<u128>();
        if states > cap {
            return Err(BnError::TooLarge { states, cap });
        }
        let table = configurations(&cards)
            .iter()
            .map(|a| (0..self.len()).map(|i| self.cpt_entry(i, a)).product())
            .collect();
        Ok(Joint { cards, table })
    }

    /// Posterior by summing the full joint.
    pub fn brute_force_query(
        &self,
        query: &[&str],
        evidence: &[(&str, &str)],
        cap: u128,
    ) -> Result<Posterior, BnError> {
        let (q, ev) = self.resolve_request(query, evidence)?;
        let joint = self.joint_brute_force(cap)?;
        let qcards: Vec<usize> = q.iter().map(|&i| joint.cards[i]).collect();
        let mut table = vec![Rational::zero(); qcards.iter().product()];
        for (a, x) in configurations(&joint.cards).iter().zip(&joint.table) {
            if ev.iter().all(|&(i, k)| a[i] == k) {
                let off = q.iter().zip(&qcards).fold(0, |acc, (&i, c)| acc * c + a[i]);
                table[off] += x;
            }
        }
        let z: Rational = table.iter().sum();
        if z.is_zero() {
            return Err(BnError::ZeroProbabilityEvidence);
        }
        Ok(Posterior {
            vars: q.iter().map(|&i| self.nodes()[i].name.clone()).collect(),
            ranges: q.iter().map(|&i| self.nodes()[i].range.clone()).collect(),
            table: table.iter().map(|x| x / &z).collect(),
            evidence_probability: z,
        })
    }
}

/// Reorders `f` to the variable order of `target`, summing out anything
/// `target` does not list.
fn align(f: &Factor, target: &Factor) -> Factor {
    let mut g = f.clone();
    for v in f.vars.iter().filter(|v| !target.vars.contains(v)) {
        g = g.sum_out(*v);
    }
    let mut out = Factor {
        vars: target.vars.clone(),
        cards: target.cards.clone(),
        table: Vec::new(),
    };
    for a in configurations(&target.cards) {
        let sub: Vec<usize> = g
            .vars
            .iter()
            .map(|v| a[target.vars.iter().position(|x| x == v).unwrap()])
            .collect();
        out.table.push(g.get(&sub).clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::holmes;
    use super::*;
    use crate::logic::rational;

    #[test]
    fn joint_entry_is_a_product() {
        let net = holmes();
        let j = net.joint_brute_force(1 << 20).unwrap();
        assert_eq!(
            j.table[0],
            rational(1, 2) * rational(3, 4) * rational(9, 20)
        );
        assert_eq!(j.table.iter().sum::<Rational>(), rational(1, 1));
    }

    #[test]
    fn report_marginal() {
        let net = holmes();
        let p = net.eliminate(&["ReportsAlarm"], &[]).unwrap();
        let want = rational(1, 2)
            * (rational(3, 4) * rational(9, 20) + rational(1, 4) * rational(1, 20))
            + rational(1, 2) * rational(1, 20);
        assert_eq!(p.prob(&["true"]), Some(&want));
        assert_eq!(
            p,
            net.brute_force_query(&["ReportsAlarm"], &[], 1 << 20)
                .unwrap()
        );
    }

    #[test]
    fn posterior_with_evidence_and_orders() {
        let net = holmes();
        let ev = [("ReportsAlarm", "true")];
        let a = net.eliminate(&["Burglary"], &ev).unwrap();
        let b = net
            .eliminate_with_order(&["Burglary"], &ev, &["AlarmSound"])
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a,
            net.brute_force_query(&["Burglary"], &ev, 1 << 20).unwrap()
        );
        let marg = a.marginal("Burglary").unwrap();
        assert_eq!(marg[0].1.clone() + marg[1].1.clone(), rational(1, 1));
    }

    #[test]
    fn request_errors() {
        let net = holmes();
        assert!(matches!(
            net.eliminate(&["Nope"], &[]),
            Err(BnError::UnknownNode(_))
        ));
        assert!(matches!(
            net.eliminate(&["Burglary"], &[("Burglary", "true")]),
            Err(BnError::QueryEvidenceOverlap(_))
        ));
        assert!(matches!(
            net.eliminate(
                &["ReportsAlarm"],
                &[("Burglary", "false"), ("AlarmSound", "true")]
            ),
            Err(BnError::ZeroProbabilityEvidence)
        ));
        assert!(matches!(
            net.joint_brute_force(4),
            Err(BnError::TooLarge { .. })
        ));
    }
}
