//! Networks as statistical sentences and back.
//!
//! Each node becomes a unary finite-valued function of the event. One
//! structure sentence states the product decomposition; one parameter
//! sentence per CPT entry fixes its value.

use std::collections::BTreeSet;

use super::{BayesNet, BnError, Node};
use crate::construct::template_cpts;
use crate::kb::KnowledgeBase;
use crate::logic::{
    Cmp, Formula, FuncResult, NumExpr, Proportion, Sentence, Term, ValueRef, DEFAULT_SORT,
};
use crate::parser::{is_reserved, Decl, SourceKB, Span, Statement, StatementKind};

/// Sentences for a network plus what is needed to restore its original
/// node and value names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translation {
    pub kb: SourceKB,
    /// Function symbol of each original node, by original index.
    pub symbols: Vec<String>,
    /// Value constant names of each original node.
    pub values: Vec<Vec<String>>,
    originals: Vec<(String, Vec<String>)>,
}

fn sanitize(raw: &str, fallback: char) -> String {
    let mut out = String::new();
    for c in raw.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let out = out.trim_matches('_').to_string();
    if out.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
        out
    } else {
        format!("{fallback}{out}")
    }
}

fn fresh(base: String, taken: &BTreeSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) || is_reserved(&name) || name == DEFAULT_SORT {
        name.push('_');
    }
    name
}

fn value_atom(func: &str, event: &str, value: ValueRef) -> Formula {
    Formula::Value(func.to_string(), vec![Term::var(event)], value)
}

fn stat(label: String, formula: Formula) -> Statement {
    Statement {
        label: Some(label),
        kind: StatementKind::Stat,
        sentence: Sentence::new(formula),
        span: Span::default(),
    }
}

pub fn bn_to_sentences(net: &BayesNet) -> Result<Translation, BnError> {
    let order = net.topological_order()?;
    let mut taken = BTreeSet::new();
    let mut symbols = vec![String::new(); net.len()];
    let mut values = vec![Vec::new(); net.len()];
    for &i in &order {
        let n = &net.nodes()[i];
        let s = fresh(sanitize(&n.name, 'X'), &taken);
        taken.insert(s.clone());
        symbols[i] = s;
        let mut local = BTreeSet::new();
        for v in &n.range {
            let name = fresh(sanitize(v, 'v'), &local);
            local.insert(name.clone());
            values[i].push(name);
        }
    }
    let all_values: BTreeSet<String> = values.iter().flatten().cloned().collect();
    let mut vars_taken = all_values.clone();
    let event = fresh("e".to_string(), &vars_taken);
    vars_taken.insert(event.clone());
    let mut zs = vec![String::new(); net.len()];
    for (k, &i) in order.iter().enumerate() {
        let z = fresh(format!("z{}", k + 1), &vars_taken);
        vars_taken.insert(z.clone());
        zs[i] = z;
    }

    let decls: Vec<Decl> = order
        .iter()
        .map(|&i| {
            Decl::Func(
                symbols[i].clone(),
                vec![DEFAULT_SORT.to_string()],
                FuncResult::Values(values[i].clone()),
            )
        })
        .collect();

    let given = |i: usize, vals: &dyn Fn(usize) -> ValueRef| -> Option<Formula> {
        Formula::conjunction(
            net.nodes()[i]
                .parents
                .iter()
                .map(|&p| value_atom(&symbols[p], &event, vals(p)))
                .collect(),
        )
    };
    let zref = |j: usize| ValueRef::Var(zs[j].clone());
    let joint = Formula::conjunction(
        order
            .iter()
            .map(|&i| value_atom(&symbols[i], &event, zref(i)))
            .collect(),
    )
    .ok_or_else(|| BnError::Translation("cannot translate an empty network".into()))?;
    let factors = order
        .iter()
        .map(|&i| {
            NumExpr::Prop(Proportion::new(
                value_atom(&symbols[i], &event, zref(i)),
                given(i, &zref),
                vec![event.clone()],
            ))
        })
        .reduce(|a, b| NumExpr::Mul(Box::new(a), Box::new(b)))
        .unwrap();
    let structure = Formula::ForAll(
        order.iter().map(|&i| zs[i].clone()).collect(),
        Box::new(Formula::Compare(
            NumExpr::Prop(Proportion::new(joint, None, vec![event.clone()])),
            Cmp::Eq,
            factors,
        )),
    );
    let mut statements = vec![stat("structure".into(), structure)];
    let mut k = 0;
    for &i in &order {
        let n = &net.nodes()[i];
        let cards: Vec<usize> = n
            .parents
            .iter()
            .map(|&p| net.nodes()[p].range.len())
            .collect();
        for (config, row) in super::configurations(&cards).iter().zip(&n.cpt) {
            let pick = |p: usize| {
                let slot = n.parents.iter().position(|&x| x == p).unwrap();
                ValueRef::Const(values[p][config[slot]].clone())
            };
            for (v, prob) in values[i].iter().zip(row) {
                k += 1;
                let prop = Proportion::new(
                    value_atom(&symbols[i], &event, ValueRef::Const(v.clone())),
                    given(i, &pick),
                    vec![event.clone()],
                );
                statements.push(stat(
                    format!("p{k}"),
                    Formula::Compare(NumExpr::Prop(prop), Cmp::Eq, NumExpr::Lit(prob.clone())),
                ));
            }
        }
    }
    let kb =
        SourceKB::from_parts(decls, statements).map_err(|e| BnError::Translation(e.to_string()))?;
    let originals = net
        .nodes()
        .iter()
        .map(|n| (n.name.clone(), n.range.clone()))
        .collect();
    Ok(Translation {
        kb,
        symbols,
        values,
        originals,
    })
}

/// Reads a network off a knowledge base holding exactly one structure
/// sentence and its parameters. Nodes are named by their function symbols.
pub fn sentences_to_bn(kb: &SourceKB) -> Result<BayesNet, BnError> {
    let kb = KnowledgeBase::from_source(kb).map_err(|e| BnError::Translation(e.to_string()))?;
    let [t] = kb.templates.as_slice() else {
        return Err(BnError::Translation(format!(
            "expected exactly one structure sentence, found {}",
            kb.templates.len()
        )));
    };
    let cpts = template_cpts(&kb, t).map_err(|e| BnError::Translation(e.to_string()))?;
    let nodes = (0..t.nodes.len())
        .map(|i| Node {
            name: cpts.symbols[i].clone(),
            range: cpts.ranges[i].clone(),
            parents: t.parents[i].clone(),
            cpt: cpts.rows[i]
                .iter()
                .map(|r| r.entries.iter().map(|e| e.prob.clone()).collect())
                .collect(),
        })
        .collect();
    BayesNet::from_nodes(nodes)
}

impl Translation {
    /// Maps a network read back from [`Translation::kb`] onto the original
    /// node names, value names and node order.
    pub fn restore(&self, net: &BayesNet) -> Result<BayesNet, BnError> {
        let mut nodes = Vec::with_capacity(self.symbols.len());
        for (i, sym) in self.symbols.iter().enumerate() {
            let n = net
                .node(sym)
                .ok_or_else(|| BnError::UnknownNode(sym.clone()))?;
            if n.range != self.values[i] {
                return Err(BnError::Translation(format!(
                    "values of `{sym}` do not match"
                )));
            }
            let parents = n
                .parents
                .iter()
                .map(|&p| {
                    let ps = &net.nodes()[p].name;
                    self.symbols
                        .iter()
                        .position(|s| s == ps)
                        .ok_or_else(|| BnError::UnknownNode(ps.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let (name, range) = self.originals[i].clone();
            nodes.push(Node {
                name,
                range,
                parents,
                cpt: n.cpt.clone(),
            });
        }
        BayesNet::from_nodes(nodes)
    }
}
