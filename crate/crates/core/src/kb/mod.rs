//! Classified, indexed knowledge base.
//!
//! Each statement is sorted into one of five kinds. Ground facts and Horn
//! universals feed a forward-chaining closure; local statistics and template
//! decompositions drive construction; everything else is kept for model
//! checking only.

mod entail;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{
    AtomKind, Cmp, Formula, GroundAtom, GroundLiteral, Interval, NumExpr, Proportion, Rational,
    Sentence, Signature, Term, ValueRef, FALSE, TRUE,
};
use crate::parser::{parse_kb, ParseError, SourceKB};

pub use entail::{solve, FactIndex};
pub use stats::{applicable_statistics, children_of, InstantiatedStat, PinnedLiteral};

/// Variable binding to constant or value names.
pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("statistic `@{label}` has value {value} outside [0, 1]")]
    ValueOutOfRange { label: String, value: String },
    #[error("template `@{label}`: {message}")]
    Template { label: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SentenceKind {
    GroundFact,
    HornUniversal,
    LocalStat,
    TemplateDecomp,
    Inert,
}

// ---------------------------------------------------------------------------
// Literal patterns

/// A possibly non-ground literal: `P(t..)`, `~P(t..)` or `F(t..) = v`.
/// Predicate literals carry `true`/`false` as their value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LitPattern {
    pub kind: AtomKind,
    pub symbol: String,
    pub args: Vec<Term>,
    pub value: ValueRef,
}

impl LitPattern {
    /// Accepts function-free literals only.
    pub fn from_formula(f: &Formula) -> Option<LitPattern> {
        let simple = |args: &[Term]| args.iter().all(|a| !matches!(a, Term::App(..)));
        match f {
            Formula::Pred(p, args) if simple(args) => Some(LitPattern {
                kind: AtomKind::Pred,
                symbol: p.clone(),
                args: args.clone(),
                value: ValueRef::Const(TRUE.into()),
            }),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Pred(p, args) if simple(args) => Some(LitPattern {
                    kind: AtomKind::Pred,
                    symbol: p.clone(),
                    args: args.clone(),
                    value: ValueRef::Const(FALSE.into()),
                }),
                _ => None,
            },
            Formula::Value(func, args, v) if simple(args) => Some(LitPattern {
                kind: AtomKind::Func,
                symbol: func.clone(),
                args: args.clone(),
                value: v.clone(),
            }),
            _ => None,
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self.kind {
            AtomKind::Pred if self.is_negative() => {
                Formula::not(Formula::Pred(self.symbol.clone(), self.args.clone()))
            }
            AtomKind::Pred => Formula::Pred(self.symbol.clone(), self.args.clone()),
            AtomKind::Func => {
                Formula::Value(self.symbol.clone(), self.args.clone(), self.value.clone())
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        self.kind == AtomKind::Pred && self.value == ValueRef::Const(FALSE.into())
    }

    pub fn mentions_var(&self, v: &str) -> bool {
        self.args
            .iter()
            .any(|a| matches!(a, Term::Var(x) if x == v))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .args
            .iter()
            .filter_map(|a| match a {
                Term::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect();
        if let ValueRef::Var(v) = &self.value {
            out.insert(v.clone());
        }
        out
    }

    /// The ground literal under `b`, if every variable is bound.
    pub fn ground(&self, b: &Bindings) -> Option<GroundLiteral> {
        let mut args = Vec::with_capacity(self.args.len());
        for a in &self.args {
            match a {
                Term::Var(v) => args.push(b.get(v)?.clone()),
                Term::Const(c) => args.push(c.clone()),
                Term::App(..) => return None,
            }
        }
        let value = match &self.value {
            ValueRef::Const(c) => c.clone(),
            ValueRef::Var(v) => b.get(v)?.clone(),
        };
        Some(GroundLiteral {
            atom: GroundAtom {
                symbol: self.symbol.clone(),
                args,
                kind: self.kind,
            },
            value,
        })
    }

    /// Extends `b` so that the pattern's atom matches `atom`, ignoring values.
    pub fn unify_atom(&self, atom: &GroundAtom, b: &Bindings) -> Option<Bindings> {
        if self.kind != atom.kind
            || self.symbol != atom.symbol
            || self.args.len() != atom.args.len()
        {
            return None;
        }
        let mut out = b.clone();
        for (p, a) in self.args.iter().zip(&atom.args) {
            match p {
                Term::Const(c) if c == a => {}
                Term::Var(v) => match out.get(v) {
                    Some(x) if x != a => return None,
                    Some(_) => {}
                    None => {
                        out.insert(v.clone(), a.clone());
                    }
                },
                _ => return None,
            }
        }
        Some(out)
    }
}

impl fmt::Display for LitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

// ---------------------------------------------------------------------------
// Kinds

/// `all x̄. B1 & ... & Bk -> H` with positive, function-free literals and
/// every head variable occurring in the body. `k` may be zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HornRule {
    pub label: String,
    pub body: Vec<LitPattern>,
    pub head: LitPattern,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StatValue {
    Exact(Rational),
    Interval(Interval),
}

impl StatValue {
    /// The point value used for parameterization; intervals give their
    /// midpoint.
    pub fn point(&self) -> Rational {
        match self {
            StatValue::Exact(r) => r.clone(),
            StatValue::Interval(i) => i.midpoint(),
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, StatValue::Interval(_))
    }
}

impl fmt::Display for StatValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatValue::Exact(r) => write!(f, "{}", crate::logic::format_rational(r)),
            StatValue::Interval(i) => write!(f, "in {i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StatForm {
    PropFirst,
    LitFirst,
    InInterval,
}

/// `[target | c1 & ... & ck]_{vars} = v` (either side) or `... in I`,
/// optionally under `all z..` over value placeholders.
///
/// The event variable is the target's first argument. Conditions mentioning
/// it are parent conditions; the rest are context conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalStat {
    pub label: String,
    pub placeholders: Vec<String>,
    pub vars: Vec<String>,
    pub event_var: String,
    pub target: LitPattern,
    pub conditions: Vec<LitPattern>,
    pub value: StatValue,
    form: StatForm,
}

impl LocalStat {
    pub fn parents(&self) -> impl Iterator<Item = &LitPattern> {
        self.conditions
            .iter()
            .filter(|c| c.mentions_var(&self.event_var))
    }

    pub fn context(&self) -> impl Iterator<Item = &LitPattern> {
        self.conditions
            .iter()
            .filter(|c| !c.mentions_var(&self.event_var))
    }

    pub fn reconstruct(&self) -> Sentence {
        let cond = Formula::conjunction(self.conditions.iter().map(|c| c.to_formula()).collect());
        let prop = NumExpr::Prop(Proportion::new(
            self.target.to_formula(),
            cond,
            self.vars.clone(),
        ));
        let core = match (&self.form, &self.value) {
            (StatForm::InInterval, StatValue::Interval(i)) => Formula::InInterval(prop, i.clone()),
            (StatForm::LitFirst, StatValue::Exact(r)) => {
                Formula::Compare(NumExpr::Lit(r.clone()), Cmp::Eq, prop)
            }
            (_, StatValue::Exact(r)) => Formula::Compare(prop, Cmp::Eq, NumExpr::Lit(r.clone())),
            (_, StatValue::Interval(i)) => Formula::InInterval(prop, i.clone()),
        };
        let f = if self.placeholders.is_empty() {
            core
        } else {
            Formula::ForAll(self.placeholders.clone(), Box::new(core))
        };
        Sentence::new(f)
    }
}

/// `all z1..zn. [X1(e)=z1 & .. & Xn(e)=zn | C]_{e} = Π_i [Xi(e)=zi | parents(i) & C]_{e}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateDecomp {
    pub label: String,
    pub event_var: String,
    /// Node function symbols in decomposition order.
    pub nodes: Vec<String>,
    /// Indices into `nodes`; every parent precedes its child.
    pub parents: Vec<Vec<usize>>,
    /// Event-type condition, possibly empty.
    pub condition: Vec<LitPattern>,
    /// Indices of the local statistics that parameterize this template.
    pub params: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Classified {
    GroundFact(Vec<GroundLiteral>),
    Horn(HornRule),
    Stat(LocalStat),
    Template(TemplateDecomp),
    Inert,
}

impl Classified {
    pub fn kind(&self) -> SentenceKind {
        match self {
            Classified::GroundFact(_) => SentenceKind::GroundFact,
            Classified::Horn(_) => SentenceKind::HornUniversal,
            Classified::Stat(_) => SentenceKind::LocalStat,
            Classified::Template(_) => SentenceKind::TemplateDecomp,
            Classified::Inert => SentenceKind::Inert,
        }
    }
}

pub fn classify_sentence(s: &Sentence) -> SentenceKind {
    analyze(s, "").kind()
}

/// Classifies `s` and extracts its construction data. Purely syntactic.
pub fn analyze(s: &Sentence, label: &str) -> Classified {
    let f = &s.formula;
    if let Some(lits) = ground_literals(f) {
        return Classified::GroundFact(lits);
    }
    if let Some(rule) = horn_rule(f, label) {
        return Classified::Horn(rule);
    }
    if let Some(t) = template(f, label) {
        return Classified::Template(t);
    }
    if let Some(st) = local_stat(f, label) {
        return Classified::Stat(st);
    }
    Classified::Inert
}

fn ground_literals(f: &Formula) -> Option<Vec<GroundLiteral>> {
    if !f.is_ground() {
        return None;
    }
    f.conjuncts()
        .into_iter()
        .map(|c| LitPattern::from_formula(c).and_then(|p| p.ground(&Bindings::new())))
        .collect()
}

fn strip_forall(f: &Formula) -> (Vec<String>, &Formula) {
    match f {
        Formula::ForAll(vars, body) => (vars.clone(), body),
        other => (Vec::new(), other),
    }
}

fn horn_rule(f: &Formula, label: &str) -> Option<HornRule> {
    let (vars, body) = strip_forall(f);
    let (lhs, rhs) = match body {
        Formula::Implies(a, b) => (Some(a.as_ref()), b.as_ref()),
        Formula::Pred(..) | Formula::Value(..) if !vars.is_empty() => (None, body),
        _ => return None,
    };
    let positive = |p: &LitPattern| !p.is_negative() && matches!(p.value, ValueRef::Const(_));
    let head = LitPattern::from_formula(rhs).filter(positive)?;
    let body: Vec<LitPattern> = match lhs {
        Some(l) => l
            .conjuncts()
            .into_iter()
            .map(LitPattern::from_formula)
            .collect::<Option<Vec<_>>>()?,
        None => Vec::new(),
    };
    if !body.iter().all(positive) {
        return None;
    }
    let body_vars: BTreeSet<String> = body.iter().flat_map(|b| b.vars()).collect();
    if !head.vars().is_subset(&body_vars) {
        return None;
    }
    Some(HornRule {
        label: label.to_string(),
        body,
        head,
    })
}

fn proportion_and_value(f: &Formula) -> Option<(&Proportion, StatValue, StatForm)> {
    match f {
        Formula::Compare(NumExpr::Prop(p), Cmp::Eq, NumExpr::Lit(r)) => {
            Some((p, StatValue::Exact(r.clone()), StatForm::PropFirst))
        }
        Formula::Compare(NumExpr::Lit(r), Cmp::Eq, NumExpr::Prop(p)) => {
            Some((p, StatValue::Exact(r.clone()), StatForm::LitFirst))
        }
        Formula::InInterval(NumExpr::Prop(p), i) => {
            Some((p, StatValue::Interval(i.clone()), StatForm::InInterval))
        }
        _ => None,
    }
}

fn condition_literals(p: &Proportion) -> Option<Vec<LitPattern>> {
    match &p.condition {
        None => Some(Vec::new()),
        Some(c) => c
            .conjuncts()
            .into_iter()
            .map(LitPattern::from_formula)
            .collect(),
    }
}

fn local_stat(f: &Formula, label: &str) -> Option<LocalStat> {
    let (placeholders, core) = strip_forall(f);
    let (p, value, form) = proportion_and_value(core)?;
    let target = LitPattern::from_formula(&p.body)?;
    let conditions = condition_literals(p)?;
    let Some(Term::Var(event_var)) = target.args.first() else {
        return None;
    };
    if !p.vars.contains(event_var) {
        return None;
    }
    // placeholders may only occur in value positions
    let in_value = |v: &String| {
        std::iter::once(&target)
            .chain(&conditions)
            .all(|l| !l.args.iter().any(|a| matches!(a, Term::Var(x) if x == v)))
    };
    if placeholders
        .iter()
        .any(|z| p.vars.contains(z) || !in_value(z))
    {
        return None;
    }
    let st = LocalStat {
        label: label.to_string(),
        placeholders,
        vars: p.vars.clone(),
        event_var: event_var.clone(),
        target,
        conditions,
        value,
        form,
    };
    (st.reconstruct().formula == *f).then_some(st)
}

fn product_factors(e: &NumExpr) -> Vec<&NumExpr> {
    match e {
        NumExpr::Mul(a, b) => {
            let mut out = product_factors(a);
            out.extend(product_factors(b));
            out
        }
        other => vec![other],
    }
}

/// `X(e) = z` with `e` and `z` variables.
fn node_atom(l: &LitPattern, event: &str) -> Option<(String, String)> {
    match (&l.kind, l.args.as_slice(), &l.value) {
        (AtomKind::Func, [Term::Var(e)], ValueRef::Var(z)) if e == event => {
            Some((l.symbol.clone(), z.clone()))
        }
        _ => None,
    }
}

fn template(f: &Formula, label: &str) -> Option<TemplateDecomp> {
    let (zs, core) = strip_forall(f);
    let Formula::Compare(NumExpr::Prop(lhs), Cmp::Eq, rhs) = core else {
        return None;
    };
    let [event] = lhs.vars.as_slice() else {
        return None;
    };
    let lhs_lits: Vec<LitPattern> = lhs
        .body
        .conjuncts()
        .into_iter()
        .map(LitPattern::from_formula)
        .collect::<Option<Vec<_>>>()?;
    let mut nodes = Vec::new();
    let mut node_z = Vec::new();
    for l in &lhs_lits {
        let (x, z) = node_atom(l, event)?;
        if nodes.contains(&x) || node_z.contains(&z) {
            return None;
        }
        nodes.push(x);
        node_z.push(z);
    }
    let zset: BTreeSet<&String> = zs.iter().collect();
    if zset.len() != zs.len() || zset != node_z.iter().collect() || nodes.is_empty() {
        return None;
    }
    let condition = condition_literals(lhs)?;
    if condition
        .iter()
        .any(|c| node_z.iter().any(|z| c.vars().contains(z)))
    {
        return None;
    }
    let factors = product_factors(rhs);
    if factors.len() != nodes.len() {
        return None;
    }
    let mut parents = Vec::new();
    for (i, factor) in factors.iter().enumerate() {
        let NumExpr::Prop(p) = factor else {
            return None;
        };
        if p.vars != lhs.vars {
            return None;
        }
        let (x, z) = node_atom(&LitPattern::from_formula(&p.body)?, event)?;
        if x != nodes[i] || z != node_z[i] {
            return None;
        }
        let conds = condition_literals(p)?;
        let mut ps = Vec::new();
        let mut rest = Vec::new();
        for c in conds {
            match node_atom(&c, event) {
                Some((px, pz)) if rest.is_empty() => {
                    let j = nodes.iter().position(|n| *n == px)?;
                    if j >= i || node_z[j] != pz || ps.contains(&j) {
                        return None;
                    }
                    ps.push(j);
                }
                _ => rest.push(c),
            }
        }
        if rest != condition {
            return None;
        }
        parents.push(ps);
    }
    Some(TemplateDecomp {
        label: label.to_string(),
        event_var: event.clone(),
        nodes,
        parents,
        condition,
        params: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Knowledge base

#[derive(Clone, Debug)]
pub struct Entry {
    pub label: String,
    pub sentence: Sentence,
    pub classified: Classified,
}

#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    pub signature: Signature,
    pub entries: Vec<Entry>,
    pub facts: BTreeSet<GroundLiteral>,
    pub negative_facts: BTreeSet<GroundLiteral>,
    pub rules: Vec<HornRule>,
    pub stats: Vec<LocalStat>,
    pub templates: Vec<TemplateDecomp>,
    pub warnings: Vec<String>,
    stat_index: BTreeMap<String, Vec<usize>>,
    closure: FactIndex,
    background: BTreeSet<String>,
    placeholder_ranges: Vec<BTreeMap<String, Vec<String>>>,
}

impl KnowledgeBase {
    pub fn parse(text: &str) -> Result<KnowledgeBase, KbError> {
        KnowledgeBase::from_source(&parse_kb(text)?)
    }

    pub fn from_source(src: &SourceKB) -> Result<KnowledgeBase, KbError> {
        let mut kb = KnowledgeBase {
            signature: src.signature.clone(),
            entries: Vec::new(),
            facts: BTreeSet::new(),
            negative_facts: BTreeSet::new(),
            rules: Vec::new(),
            stats: Vec::new(),
            templates: Vec::new(),
            warnings: Vec::new(),
            stat_index: BTreeMap::new(),
            closure: FactIndex::default(),
            background: BTreeSet::new(),
            placeholder_ranges: Vec::new(),
        };
        for (i, st) in src.statements.iter().enumerate() {
            let label = st.label.clone().unwrap_or_else(|| format!("#{}", i + 1));
            let classified = analyze(&st.sentence, &label);
            match &classified {
                Classified::GroundFact(lits) => {
                    for l in lits {
                        kb.background.insert(l.atom.symbol.clone());
                        if l.is_negated_pred() {
                            kb.negative_facts.insert(l.clone());
                        } else {
                            kb.facts.insert(l.clone());
                        }
                    }
                }
                Classified::Horn(rule) => {
                    kb.background.insert(rule.head.symbol.clone());
                    kb.rules.push(rule.clone());
                }
                Classified::Stat(stat) => {
                    let unit = Rational::from_integer(1.into());
                    let zero = Rational::from_integer(0.into());
                    let ok = match &stat.value {
                        StatValue::Exact(r) => *r >= zero && *r <= unit,
                        StatValue::Interval(i) => i.lo >= zero && i.hi <= unit,
                    };
                    if !ok {
                        return Err(KbError::ValueOutOfRange {
                            label,
                            value: stat.value.to_string(),
                        });
                    }
                    kb.stat_index
                        .entry(stat.target.symbol.clone())
                        .or_default()
                        .push(kb.stats.len());
                    kb.placeholder_ranges
                        .push(placeholder_ranges(stat, &kb.signature));
                    kb.stats.push(stat.clone());
                }
                Classified::Template(t) => kb.templates.push(t.clone()),
                Classified::Inert => {
                    if st.kind == crate::parser::StatementKind::Stat {
                        kb.warnings.push(format!(
                            "statistic `@{label}` matches no construction shape; it is only used for model checking"
                        ));
                    }
                }
            }
            kb.entries.push(Entry {
                label,
                sentence: st.sentence.clone(),
                classified,
            });
        }
        kb.closure = entail::forward_chain(&kb.facts, &kb.rules);
        for neg in &kb.negative_facts {
            if kb
                .closure
                .contains(&GroundLiteral::positive(neg.atom.clone()))
            {
                kb.warnings.push(format!(
                    "fact `{neg}` contradicts the entailed `{}`",
                    neg.atom
                ));
            }
        }
        kb.attach_template_params()?;
        Ok(kb)
    }

    fn attach_template_params(&mut self) -> Result<(), KbError> {
        for t in &mut self.templates {
            let node_set: BTreeSet<&String> = t.nodes.iter().collect();
            for (si, st) in self.stats.iter().enumerate() {
                if !node_set.contains(&st.target.symbol)
                    || st.vars.len() != 1
                    || st.vars[0] != st.event_var
                {
                    continue;
                }
                // params use the template's own event variable name
                if st.event_var != t.event_var {
                    continue;
                }
                let others: Vec<&LitPattern> = st
                    .conditions
                    .iter()
                    .filter(|c| !(c.kind == AtomKind::Func && node_set.contains(&c.symbol)))
                    .collect();
                if others.len() == t.condition.len()
                    && others.iter().zip(&t.condition).all(|(a, b)| *a == b)
                {
                    t.params.push(si);
                }
            }
            for (i, node) in t.nodes.iter().enumerate() {
                match self.signature.func(node).and_then(|d| d.values()) {
                    Some(_) if self.signature.func(node).is_some_and(|d| d.args.len() == 1) => {}
                    _ => {
                        return Err(KbError::Template {
                            label: t.label.clone(),
                            message: format!(
                                "node {} `{node}` must be a finite-valued unary function",
                                i + 1
                            ),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// Statistics whose target uses `symbol`, in source order.
    pub fn stats_for(&self, symbol: &str) -> impl Iterator<Item = (usize, &LocalStat)> {
        self.stat_index
            .get(symbol)
            .into_iter()
            .flatten()
            .map(move |&i| (i, &self.stats[i]))
    }

    pub fn closure(&self) -> &FactIndex {
        &self.closure
    }

    /// Symbols about which the knowledge base holds ground knowledge (facts
    /// or Horn heads). Event conditions over these are decided against the
    /// closure instead of becoming network nodes.
    pub fn is_background(&self, symbol: &str) -> bool {
        self.background.contains(symbol)
    }

    pub fn placeholder_ranges(&self, stat: usize) -> &BTreeMap<String, Vec<String>> {
        &self.placeholder_ranges[stat]
    }

    /// Ground entailment over the forward-chaining closure. Negated predicate
    /// literals hold by negation as failure.
    pub fn entails_ground(&self, lit: &GroundLiteral) -> bool {
        if lit.is_negated_pred() {
            !self
                .closure
                .contains(&GroundLiteral::positive(lit.atom.clone()))
        } else {
            self.closure.contains(lit)
        }
    }

    pub fn label_of(&self, stat: usize) -> &str {
        &self.stats[stat].label
    }

    /// Range of a network node: `[true, false]` or the declared value set.
    pub fn node_range(&self, atom: &GroundAtom) -> Vec<String> {
        match atom.kind {
            AtomKind::Pred => vec![TRUE.to_string(), FALSE.to_string()],
            AtomKind::Func => self
                .signature
                .func(&atom.symbol)
                .and_then(|d| d.values())
                .map(|v| v.to_vec())
                .unwrap_or_default(),
        }
    }
}

fn placeholder_ranges(stat: &LocalStat, sig: &Signature) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    for z in &stat.placeholders {
        for l in std::iter::once(&stat.target).chain(&stat.conditions) {
            if l.value == ValueRef::Var(z.clone()) {
                if let Some(values) = sig.func(&l.symbol).and_then(|d| d.values()) {
                    out.insert(z.clone(), values.to_vec());
                    break;
                }
            }
        }
    }
    out
}
