//! Abstract syntax for the statistical logic: terms, formulas, proportion
//! expressions, sentences, and the signature they are checked against.
//!
//! The AST keeps surface structure exactly. Nothing is simplified on
//! construction, so `~~P(x)` stays a double negation and conjunction trees keep
//! the nesting the parser produced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number used for every literal, proportion and probability.
pub type Rational = BigRational;

/// Range of every predicate node: `[TRUE, FALSE]`.
pub const TRUE: &str = "true";
pub const FALSE: &str = "false";

/// Sort assumed when a signature declares no sorts.
pub const DEFAULT_SORT: &str = "Thing";

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `3`, `0.45` or `1/3` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit())
        || (text.contains('.') && frac_part.is_empty())
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(Rational::new(digits, scale))
}

/// Renders a rational as a finite decimal when one exists, otherwise as `n/d`.
/// The result always parses back to the same value with [`parse_rational`].
pub fn format_rational(r: &Rational) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let r = r.abs();
    let mut den = r.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{sign}{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return format!("{sign}{}", r.numer());
    }
    let scaled =
        (r * Rational::from_integer(num_traits::pow(BigInt::from(10), places))).to_integer();
    let digits = format!("{:0>width$}", scaled.to_string(), width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    format!("{sign}{int_part}.{frac_part}")
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }
}

/// Right-hand side of a value atom `F(t..) = v`: a value constant from the
/// function's range, or a variable ranging over that range.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueRef {
    Const(String),
    Var(String),
}

impl ValueRef {
    pub fn name(&self) -> &str {
        match self {
            ValueRef::Const(n) | ValueRef::Var(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Gt => ">",
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Gt => lhs > rhs,
        }
    }
}

/// Interval with independently open or closed endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn open(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_open {
            x > &self.lo
        } else {
            x >= &self.lo
        };
        let below = if self.hi_open {
            x < &self.hi
        } else {
            x <= &self.hi
        };
        above && below
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `P(t1, ..., tn)`
    Pred(String, Vec<Term>),
    /// `F(t1, ..., tn) = v`
    Value(String, Vec<Term>, ValueRef),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    ForAll(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Compare(NumExpr, Cmp, NumExpr),
    InInterval(NumExpr, Interval),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NumExpr {
    Lit(Rational),
    Prop(Proportion),
    Add(Box<NumExpr>, Box<NumExpr>),
    Mul(Box<NumExpr>, Box<NumExpr>),
}

/// `[body | condition]_{vars}`; the unconditional form has no condition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Proportion {
    pub body: Box<Formula>,
    pub condition: Option<Box<Formula>>,
    pub vars: Vec<String>,
}

impl Proportion {
    pub fn new(body: Formula, condition: Option<Formula>, vars: Vec<String>) -> Self {
        Proportion {
            body: Box::new(body),
            condition: condition.map(Box::new),
            vars,
        }
    }

    fn scope(&self) -> Vec<&Formula> {
        let mut out = vec![self.body.as_ref()];
        if let Some(c) = &self.condition {
            out.push(c.as_ref());
        }
        out
    }
}

impl Formula {
    pub fn pred(name: &str, args: Vec<Term>) -> Formula {
        Formula::Pred(name.to_string(), args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: &[&str], f: Formula) -> Formula {
        Formula::ForAll(vars.iter().map(|v| v.to_string()).collect(), Box::new(f))
    }

    pub fn exists(vars: &[&str], f: Formula) -> Formula {
        Formula::Exists(vars.iter().map(|v| v.to_string()).collect(), Box::new(f))
    }

    /// Left-nested conjunction of `parts`, the shape the parser produces.
    pub fn conjunction(parts: Vec<Formula>) -> Option<Formula> {
        let mut it = parts.into_iter();
        let first = it.next()?;
        Some(it.fold(first, Formula::and))
    }

    /// Flattens nested `And` nodes into their conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        free_vars(self)
    }

    /// True when the formula mentions a proportion term anywhere.
    pub fn has_proportion(&self) -> bool {
        match self {
            Formula::Pred(..) | Formula::Value(..) => false,
            Formula::Not(f) | Formula::ForAll(_, f) | Formula::Exists(_, f) => f.has_proportion(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => a.has_proportion() || b.has_proportion(),
            Formula::Compare(..) | Formula::InInterval(..) => true,
        }
    }

    /// True for quantifier-free, proportion-free formulas without variables.
    pub fn is_ground(&self) -> bool {
        match self {
            Formula::Pred(_, args) => args.iter().all(|t| t.vars().is_empty()),
            Formula::Value(_, args, v) => {
                args.iter().all(|t| t.vars().is_empty()) && matches!(v, ValueRef::Const(_))
            }
            Formula::Not(f) => f.is_ground(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => a.is_ground() && b.is_ground(),
            _ => false,
        }
    }
}

/// A closed formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub formula: Formula,
}

impl Sentence {
    pub fn new(formula: Formula) -> Self {
        Sentence { formula }
    }
}

// ---------------------------------------------------------------------------
// Signature

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FuncResult {
    /// Finite value set, e.g. `{yes, no}`.
    Values(Vec<String>),
    /// Individual of the named sort.
    Sort(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDecl {
    pub args: Vec<String>,
    pub result: FuncResult,
}

impl FuncDecl {
    pub fn values(&self) -> Option<&[String]> {
        match &self.result {
            FuncResult::Values(v) => Some(v),
            FuncResult::Sort(_) => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("`{0}` is already declared")]
    Duplicate(String),
    #[error("function `{0}` must have at least two distinct values")]
    TooFewValues(String),
    #[error("function `{0}` lists value `{1}` twice")]
    RepeatedValue(String, String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    sorts: Vec<String>,
    preds: BTreeMap<String, Vec<String>>,
    funcs: BTreeMap<String, FuncDecl>,
    consts: BTreeMap<String, String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    fn is_declared(&self, name: &str) -> bool {
        self.sorts.iter().any(|s| s == name)
            || self.preds.contains_key(name)
            || self.funcs.contains_key(name)
            || self.consts.contains_key(name)
    }

    fn claim(&self, name: &str) -> Result<(), SignatureError> {
        if self.is_declared(name) {
            Err(SignatureError::Duplicate(name.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn add_sort(&mut self, name: &str) -> Result<(), SignatureError> {
        self.claim(name)?;
        self.sorts.push(name.to_string());
        Ok(())
    }

    pub fn add_pred(&mut self, name: &str, args: &[&str]) -> Result<(), SignatureError> {
        self.claim(name)?;
        self.preds.insert(
            name.to_string(),
            args.iter().map(|s| s.to_string()).collect(),
        );
        Ok(())
    }

    pub fn add_func(
        &mut self,
        name: &str,
        args: &[&str],
        result: FuncResult,
    ) -> Result<(), SignatureError> {
        self.claim(name)?;
        if let FuncResult::Values(values) = &result {
            let mut seen = BTreeSet::new();
            for v in values {
                if !seen.insert(v) {
                    return Err(SignatureError::RepeatedValue(name.to_string(), v.clone()));
                }
            }
            if values.len() < 2 {
                return Err(SignatureError::TooFewValues(name.to_string()));
            }
        }
        let decl = FuncDecl {
            args: args.iter().map(|s| s.to_string()).collect(),
            result,
        };
        self.funcs.insert(name.to_string(), decl);
        Ok(())
    }

    pub fn add_const(&mut self, name: &str, sort: &str) -> Result<(), SignatureError> {
        self.claim(name)?;
        self.consts.insert(name.to_string(), sort.to_string());
        Ok(())
    }

    /// Declared sorts, or the implicit universal sort when none are declared.
    pub fn sorts(&self) -> Vec<String> {
        if self.sorts.is_empty() {
            vec![DEFAULT_SORT.to_string()]
        } else {
            self.sorts.clone()
        }
    }

    pub fn has_sort(&self, name: &str) -> bool {
        if self.sorts.is_empty() {
            name == DEFAULT_SORT
        } else {
            self.sorts.iter().any(|s| s == name)
        }
    }

    pub fn pred(&self, name: &str) -> Option<&[String]> {
        self.preds.get(name).map(|v| v.as_slice())
    }

    pub fn func(&self, name: &str) -> Option<&FuncDecl> {
        self.funcs.get(name)
    }

    pub fn const_sort(&self, name: &str) -> Option<&str> {
        self.consts.get(name).map(|s| s.as_str())
    }

    pub fn preds(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.preds.iter()
    }

    pub fn funcs(&self) -> impl Iterator<Item = (&String, &FuncDecl)> {
        self.funcs.iter()
    }

    pub fn consts(&self) -> impl Iterator<Item = (&String, &String)> {
        self.consts.iter()
    }

    /// Diagnostics for sort references that do not resolve.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |what: &str, sort: &str| {
            if !self.has_sort(sort) {
                out.push(format!("{what} uses undeclared sort `{sort}`"));
            }
        };
        for (p, args) in &self.preds {
            args.iter()
                .for_each(|s| need(&format!("predicate `{p}`"), s));
        }
        for (f, decl) in &self.funcs {
            decl.args
                .iter()
                .for_each(|s| need(&format!("function `{f}`"), s));
            if let FuncResult::Sort(s) = &decl.result {
                need(&format!("function `{f}`"), s);
            }
        }
        for (c, s) in &self.consts {
            need(&format!("constant `{c}`"), s);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Free variables

pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut Vec::new(), &mut out);
    out
}

fn collect_free_term(t: &Term, bound: &[String], out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) if !bound.contains(v) => {
            out.insert(v.clone());
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_free_term(a, bound, out)),
        _ => {}
    }
}

fn collect_free(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match f {
        Formula::Pred(_, args) => args.iter().for_each(|a| collect_free_term(a, bound, out)),
        Formula::Value(_, args, v) => {
            args.iter().for_each(|a| collect_free_term(a, bound, out));
            if let ValueRef::Var(name) = v {
                if !bound.contains(name) {
                    out.insert(name.clone());
                }
            }
        }
        Formula::Not(a) => collect_free(a, bound, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Formula::ForAll(vars, body) | Formula::Exists(vars, body) => {
            let depth = bound.len();
            bound.extend(vars.iter().cloned());
            collect_free(body, bound, out);
            bound.truncate(depth);
        }
        Formula::Compare(a, _, b) => {
            collect_free_num(a, bound, out);
            collect_free_num(b, bound, out);
        }
        Formula::InInterval(a, _) => collect_free_num(a, bound, out),
    }
}

fn collect_free_num(e: &NumExpr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        NumExpr::Lit(_) => {}
        NumExpr::Prop(p) => {
            let depth = bound.len();
            bound.extend(p.vars.iter().cloned());
            for part in p.scope() {
                collect_free(part, bound, out);
            }
            bound.truncate(depth);
        }
        NumExpr::Add(a, b) | NumExpr::Mul(a, b) => {
            collect_free_num(a, bound, out);
            collect_free_num(b, bound, out);
        }
    }
}

pub fn num_free_vars(e: &NumExpr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_num(e, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Substitution

pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("sort mismatch substituting `{term}` for `{var}` at {position}")]
    SortMismatch {
        var: String,
        term: String,
        position: String,
    },
}

/// Capture-avoiding simultaneous substitution of free variable occurrences.
///
/// A variable in value position (`F(e) = z`) may only be replaced by a
/// constant (a value name) or another variable.
pub fn substitute(f: &Formula, binding: &Binding) -> Result<Formula, LogicError> {
    subst_formula(f, binding)
}

/// [`substitute`], after checking every binding that reaches a free occurrence
/// against the sort the signature implies for that occurrence.
pub fn substitute_checked(
    f: &Formula,
    binding: &Binding,
    sig: &Signature,
) -> Result<Formula, LogicError> {
    let free = free_vars(f);
    for (var, term) in binding {
        if !free.contains(var) {
            continue;
        }
        let Ok(expected) = infer_var_type(&[f], var, sig) else {
            continue;
        };
        let ok = match (&expected, term) {
            (_, Term::Var(_)) => true,
            (VarType::Individual(sort), Term::Const(c)) => sig.const_sort(c) == Some(sort.as_str()),
            (VarType::Individual(sort), Term::App(fname, _)) => {
                matches!(sig.func(fname).map(|d| &d.result), Some(FuncResult::Sort(s)) if s == sort)
            }
            (VarType::Value(values), Term::Const(c)) => values.contains(c),
            (VarType::Value(_), Term::App(..)) => false,
        };
        if !ok {
            return Err(LogicError::SortMismatch {
                var: var.clone(),
                term: term.to_string(),
                position: format!("free occurrence of `{var}` expecting {expected}"),
            });
        }
    }
    substitute(f, binding)
}

fn subst_term(t: &Term, b: &Binding) -> Term {
    match t {
        Term::Var(v) => b.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Const(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| subst_term(a, b)).collect()),
    }
}

fn subst_value(v: &ValueRef, b: &Binding, position: &str) -> Result<ValueRef, LogicError> {
    let ValueRef::Var(name) = v else {
        return Ok(v.clone());
    };
    match b.get(name) {
        None => Ok(v.clone()),
        Some(Term::Var(w)) => Ok(ValueRef::Var(w.clone())),
        Some(Term::Const(c)) => Ok(ValueRef::Const(c.clone())),
        Some(t @ Term::App(..)) => Err(LogicError::SortMismatch {
            var: name.clone(),
            term: t.to_string(),
            position: position.to_string(),
        }),
    }
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut candidate = format!("{base}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

/// Restricts the binding to what can reach `bodies` under binder `vars`, and
/// renames binder variables that would capture a substituted term.
fn enter_binder(vars: &[String], bodies: &[&Formula], b: &Binding) -> (Vec<String>, Binding) {
    let body_free: BTreeSet<String> = bodies.iter().flat_map(|f| free_vars(f)).collect();
    let mut inner: Binding = b
        .iter()
        .filter(|(k, _)| !vars.contains(k) && body_free.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let range_vars: BTreeSet<String> = inner.values().flat_map(|t| t.vars()).collect();
    let mut avoid: BTreeSet<String> = body_free.iter().cloned().collect();
    avoid.extend(range_vars.iter().cloned());
    avoid.extend(vars.iter().cloned());
    avoid.extend(inner.keys().cloned());
    let mut renamed = Vec::with_capacity(vars.len());
    for v in vars {
        if range_vars.contains(v) {
            let fresh = fresh_name(v, &avoid);
            avoid.insert(fresh.clone());
            inner.insert(v.clone(), Term::Var(fresh.clone()));
            renamed.push(fresh);
        } else {
            renamed.push(v.clone());
        }
    }
    (renamed, inner)
}

fn subst_formula(f: &Formula, b: &Binding) -> Result<Formula, LogicError> {
    if b.is_empty() {
        return Ok(f.clone());
    }
    let bin = |x: &Formula, y: &Formula| -> Result<(Box<Formula>, Box<Formula>), LogicError> {
        Ok((
            Box::new(subst_formula(x, b)?),
            Box::new(subst_formula(y, b)?),
        ))
    };
    Ok(match f {
        Formula::Pred(p, args) => {
            Formula::Pred(p.clone(), args.iter().map(|a| subst_term(a, b)).collect())
        }
        Formula::Value(func, args, v) => Formula::Value(
            func.clone(),
            args.iter().map(|a| subst_term(a, b)).collect(),
            subst_value(v, b, &format!("value position of `{func}`"))?,
        ),
        Formula::Not(a) => Formula::Not(Box::new(subst_formula(a, b)?)),
        Formula::And(x, y) => {
            let (x, y) = bin(x, y)?;
            Formula::And(x, y)
        }
        Formula::Or(x, y) => {
            let (x, y) = bin(x, y)?;
            Formula::Or(x, y)
        }
        Formula::Implies(x, y) => {
            let (x, y) = bin(x, y)?;
            Formula::Implies(x, y)
        }
        Formula::Iff(x, y) => {
            let (x, y) = bin(x, y)?;
            Formula::Iff(x, y)
        }
        Formula::ForAll(vars, body) => {
            let (vars, inner) = enter_binder(vars, &[body], b);
            Formula::ForAll(vars, Box::new(subst_formula(body, &inner)?))
        }
        Formula::Exists(vars, body) => {
            let (vars, inner) = enter_binder(vars, &[body], b);
            Formula::Exists(vars, Box::new(subst_formula(body, &inner)?))
        }
        Formula::Compare(x, c, y) => Formula::Compare(subst_num(x, b)?, *c, subst_num(y, b)?),
        Formula::InInterval(x, i) => Formula::InInterval(subst_num(x, b)?, i.clone()),
    })
}

fn subst_num(e: &NumExpr, b: &Binding) -> Result<NumExpr, LogicError> {
    Ok(match e {
        NumExpr::Lit(_) => e.clone(),
        NumExpr::Prop(p) => {
            let (vars, inner) = enter_binder(&p.vars, &p.scope(), b);
            let body = subst_formula(&p.body, &inner)?;
            let condition = match &p.condition {
                Some(c) => Some(subst_formula(c, &inner)?),
                None => None,
            };
            NumExpr::Prop(Proportion::new(body, condition, vars))
        }
        NumExpr::Add(x, y) => NumExpr::Add(Box::new(subst_num(x, b)?), Box::new(subst_num(y, b)?)),
        NumExpr::Mul(x, y) => NumExpr::Mul(Box::new(subst_num(x, b)?), Box::new(subst_num(y, b)?)),
    })
}

// ---------------------------------------------------------------------------
// Variable typing

/// What a variable ranges over once its uses are checked against a signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarType {
    /// Individuals of a sort.
    Individual(String),
    /// Values of a finite-valued function.
    Value(Vec<String>),
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarType::Individual(s) => write!(f, "sort `{s}`"),
            VarType::Value(vs) => write!(f, "values {{{}}}", vs.join(", ")),
        }
    }
}

fn term_uses(t: &Term, var: &str, expected: Option<&str>, sig: &Signature, out: &mut Vec<VarType>) {
    match t {
        Term::Var(v) if v == var => {
            if let Some(s) = expected {
                out.push(VarType::Individual(s.to_string()));
            }
        }
        Term::App(fname, args) => {
            let sorts = sig.func(fname).map(|d| d.args.clone());
            for (i, a) in args.iter().enumerate() {
                let exp = sorts.as_ref().and_then(|s| s.get(i)).map(|s| s.as_str());
                term_uses(a, var, exp, sig, out);
            }
        }
        _ => {}
    }
}

fn formula_uses(f: &Formula, var: &str, sig: &Signature, out: &mut Vec<VarType>) {
    match f {
        Formula::Pred(p, args) => {
            let sorts = sig.pred(p);
            for (i, a) in args.iter().enumerate() {
                let exp = sorts.and_then(|s| s.get(i)).map(|s| s.as_str());
                term_uses(a, var, exp, sig, out);
            }
        }
        Formula::Value(fname, args, v) => {
            let decl = sig.func(fname);
            for (i, a) in args.iter().enumerate() {
                let exp = decl.and_then(|d| d.args.get(i)).map(|s| s.as_str());
                term_uses(a, var, exp, sig, out);
            }
            if let ValueRef::Var(name) = v {
                if name == var {
                    if let Some(values) = decl.and_then(|d| d.values()) {
                        out.push(VarType::Value(values.to_vec()));
                    }
                }
            }
        }
        Formula::Not(a) => formula_uses(a, var, sig, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            formula_uses(a, var, sig, out);
            formula_uses(b, var, sig, out);
        }
        Formula::ForAll(vars, body) | Formula::Exists(vars, body) => {
            if !vars.iter().any(|v| v == var) {
                formula_uses(body, var, sig, out);
            }
        }
        Formula::Compare(a, _, b) => {
            num_uses(a, var, sig, out);
            num_uses(b, var, sig, out);
        }
        Formula::InInterval(a, _) => num_uses(a, var, sig, out),
    }
}

fn num_uses(e: &NumExpr, var: &str, sig: &Signature, out: &mut Vec<VarType>) {
    match e {
        NumExpr::Lit(_) => {}
        NumExpr::Prop(p) => {
            if !p.vars.iter().any(|v| v == var) {
                p.scope()
                    .into_iter()
                    .for_each(|part| formula_uses(part, var, sig, out));
            }
        }
        NumExpr::Add(a, b) | NumExpr::Mul(a, b) => {
            num_uses(a, var, sig, out);
            num_uses(b, var, sig, out);
        }
    }
}

/// Infers what `var` ranges over from its free occurrences in `scope`.
///
/// Unused variables default to the only individual sort when there is one.
pub fn infer_var_type(scope: &[&Formula], var: &str, sig: &Signature) -> Result<VarType, String> {
    let mut uses = Vec::new();
    for f in scope {
        formula_uses(f, var, sig, &mut uses);
    }
    let Some(first) = uses.first().cloned() else {
        let sorts = sig.sorts();
        return if sorts.len() == 1 {
            Ok(VarType::Individual(sorts[0].clone()))
        } else {
            Err(format!("cannot infer the sort of variable `{var}`"))
        };
    };
    if let Some(other) = uses.iter().find(|u| **u != first) {
        return Err(format!(
            "variable `{var}` is used both as {first} and as {other}"
        ));
    }
    Ok(first)
}

// ---------------------------------------------------------------------------
// Well-formedness

/// One well-formedness violation. `at` renders the offending subformula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
    pub at: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (in `{}`)", self.message, self.at)
    }
}

struct Checker<'a> {
    sig: &'a Signature,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, message: String, at: impl fmt::Display) {
        self.diags.push(Diagnostic {
            message,
            at: at.to_string(),
        });
    }

    fn sort_matches(&self, actual: &str, expected: Option<&str>) -> bool {
        expected.is_none_or(|e| e == actual)
    }

    fn term(&mut self, t: &Term, expected: Option<&str>, at: &Formula) {
        match t {
            Term::Var(_) => {}
            Term::Const(c) => match self.sig.const_sort(c) {
                None => self.report(format!("undeclared constant `{c}`"), at),
                Some(s) if !self.sort_matches(s, expected) => self.report(
                    format!(
                        "constant `{c}` has sort `{s}` but `{}` is expected",
                        expected.unwrap_or("?")
                    ),
                    at,
                ),
                Some(_) => {}
            },
            Term::App(fname, args) => {
                let Some(decl) = self.sig.func(fname).cloned() else {
                    self.report(format!("undeclared function `{fname}`"), at);
                    return;
                };
                match &decl.result {
                    FuncResult::Values(_) => self.report(
                        format!("finite-valued function `{fname}` can only appear as `{fname}(..) = value`"),
                        at,
                    ),
                    FuncResult::Sort(s) if !self.sort_matches(s, expected) => self.report(
                        format!("`{fname}` returns sort `{s}` but `{}` is expected", expected.unwrap_or("?")),
                        at,
                    ),
                    _ => {}
                }
                self.args(fname, &decl.args, args, at);
            }
        }
    }

    fn args(&mut self, symbol: &str, sorts: &[String], args: &[Term], at: &Formula) {
        if sorts.len() != args.len() {
            self.report(
                format!(
                    "`{symbol}` expects {} argument(s), found {}",
                    sorts.len(),
                    args.len()
                ),
                at,
            );
        }
        for (i, a) in args.iter().enumerate() {
            self.term(a, sorts.get(i).map(|s| s.as_str()), at);
        }
    }

    fn binder(&mut self, vars: &[String], scope: &[&Formula], at: &dyn fmt::Display) {
        if vars.is_empty() {
            self.report("binder with no variables".to_string(), at);
        }
        let mut seen = BTreeSet::new();
        for v in vars {
            if !seen.insert(v) {
                self.report(format!("variable `{v}` bound twice by the same binder"), at);
            }
            if let Err(msg) = infer_var_type(scope, v, self.sig) {
                self.report(msg, at);
            }
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::Pred(p, args) => match self.sig.pred(p) {
                Some(sorts) => {
                    let sorts = sorts.to_vec();
                    self.args(p, &sorts, args, f);
                }
                None => self.report(format!("undeclared predicate `{p}`"), f),
            },
            Formula::Value(fname, args, v) => {
                let Some(decl) = self.sig.func(fname).cloned() else {
                    self.report(format!("undeclared function `{fname}`"), f);
                    return;
                };
                self.args(fname, &decl.args, args, f);
                match (decl.values(), v) {
                    (None, _) => self.report(format!("`{fname}` has no finite value set"), f),
                    (Some(values), ValueRef::Const(c)) if !values.contains(c) => {
                        self.report(format!("`{c}` is not a value of `{fname}`"), f)
                    }
                    _ => {}
                }
            }
            Formula::Not(a) => self.formula(a),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                self.formula(a);
                self.formula(b);
            }
            Formula::ForAll(vars, body) | Formula::Exists(vars, body) => {
                self.binder(vars, &[body], f);
                self.formula(body);
            }
            Formula::Compare(a, _, b) => {
                self.num(a);
                self.num(b);
            }
            Formula::InInterval(a, i) => {
                if i.lo > i.hi {
                    self.report("interval lower bound exceeds upper bound".to_string(), f);
                }
                self.num(a);
            }
        }
    }

    fn num(&mut self, e: &NumExpr) {
        match e {
            NumExpr::Lit(_) => {}
            NumExpr::Prop(p) => {
                self.binder(&p.vars, &p.scope(), e);
                p.scope().into_iter().for_each(|part| self.formula(part));
            }
            NumExpr::Add(a, b) | NumExpr::Mul(a, b) => {
                self.num(a);
                self.num(b);
            }
        }
    }
}

/// Diagnostics for `s` against `sig`; empty iff the sentence is well formed.
pub fn well_formed(s: &Sentence, sig: &Signature) -> Vec<Diagnostic> {
    let mut checker = Checker {
        sig,
        diags: Vec::new(),
    };
    let free = free_vars(&s.formula);
    if !free.is_empty() {
        let names: Vec<_> = free.into_iter().collect();
        checker.report(
            format!(
                "sentence is not closed: free variable(s) {}",
                names.join(", ")
            ),
            &s.formula,
        );
    }
    checker.formula(&s.formula);
    checker.diags
}

// ---------------------------------------------------------------------------
// Ground atoms and literals

/// Whether a ground atom applies a predicate or a finite-valued function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Pred,
    Func,
}

/// A predicate or function applied to constants. Its canonical string, e.g.
/// `ReportsAlarm(E002,Watson,MyHouse)`, is also the network node name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub symbol: String,
    pub args: Vec<String>,
    pub kind: AtomKind,
}

impl GroundAtom {
    pub fn pred(symbol: &str, args: &[&str]) -> Self {
        GroundAtom {
            symbol: symbol.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            kind: AtomKind::Pred,
        }
    }

    pub fn func(symbol: &str, args: &[&str]) -> Self {
        GroundAtom {
            symbol: symbol.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            kind: AtomKind::Func,
        }
    }

    pub fn mentions(&self, constant: &str) -> bool {
        self.args.iter().any(|a| a == constant)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.symbol)
        } else {
            write!(f, "{}({})", self.symbol, self.args.join(","))
        }
    }
}

/// A ground atom together with the value it takes: `true`/`false` for
/// predicates, a range value for functions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub value: String,
}

impl GroundLiteral {
    pub fn new(atom: GroundAtom, value: &str) -> Self {
        GroundLiteral {
            atom,
            value: value.to_string(),
        }
    }

    pub fn positive(atom: GroundAtom) -> Self {
        GroundLiteral {
            atom,
            value: TRUE.to_string(),
        }
    }

    pub fn negative(atom: GroundAtom) -> Self {
        GroundLiteral {
            atom,
            value: FALSE.to_string(),
        }
    }

    pub fn is_negated_pred(&self) -> bool {
        self.atom.kind == AtomKind::Pred && self.value == FALSE
    }

    /// The literal as a formula: `P(..)`, `~P(..)` or `F(..) = v`.
    pub fn to_formula(&self) -> Formula {
        let args = self
            .atom
            .args
            .iter()
            .map(|a| Term::Const(a.clone()))
            .collect();
        match self.atom.kind {
            AtomKind::Pred if self.value == TRUE => Formula::Pred(self.atom.symbol.clone(), args),
            AtomKind::Pred => Formula::not(Formula::Pred(self.atom.symbol.clone(), args)),
            AtomKind::Func => Formula::Value(
                self.atom.symbol.clone(),
                args,
                ValueRef::Const(self.value.clone()),
            ),
        }
    }
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.atom.kind {
            AtomKind::Pred if self.value == TRUE => write!(f, "{}", self.atom),
            AtomKind::Pred => write!(f, "~{}", self.atom),
            AtomKind::Func => write!(f, "{}={}", self.atom, self.value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig_coins() -> Signature {
        let mut sig = Signature::new();
        sig.add_sort("Event").unwrap();
        sig.add_sort("Obj").unwrap();
        sig.add_pred("CoinToss", &["Event"]).unwrap();
        sig.add_pred("Coin", &["Obj"]).unwrap();
        sig.add_pred("Object", &["Event", "Obj"]).unwrap();
        sig.add_pred("Heads", &["Event"]).unwrap();
        sig
    }

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn toss_object_is_coin() -> Formula {
        Formula::forall(
            &["e", "x"],
            Formula::implies(
                Formula::and(
                    Formula::pred("CoinToss", vec![v("e")]),
                    Formula::pred("Object", vec![v("e"), v("x")]),
                ),
                Formula::pred("Coin", vec![v("x")]),
            ),
        )
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("0.45"), Some(rational(9, 20)));
        assert_eq!(parse_rational("3"), Some(rational(3, 1)));
        assert_eq!(parse_rational("1/3"), Some(rational(1, 3)));
        assert_eq!(parse_rational("0.05"), Some(rational(1, 20)));
        assert_eq!(parse_rational("1."), None);
        assert_eq!(parse_rational(".5"), Some(rational(1, 2)));
        assert_eq!(parse_rational("."), None);
        assert_eq!(parse_rational("a"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn rationals_format_round_trip() {
        for (n, d) in [
            (9, 20),
            (1, 3),
            (3, 4),
            (0, 1),
            (7, 1),
            (1, 1024),
            (27, 80),
            (-1, 8),
        ] {
            let r = rational(n, d);
            assert_eq!(
                parse_rational(&format_rational(&r).replace('-', "")).map(|x| if n < 0 {
                    -x
                } else {
                    x
                }),
                Some(r)
            );
        }
        assert_eq!(format_rational(&rational(9, 20)), "0.45");
        assert_eq!(format_rational(&rational(1, 3)), "1/3");
        assert_eq!(format_rational(&rational(1, 20)), "0.05");
    }

    #[test]
    fn free_vars_single() {
        assert_eq!(
            free_vars(&Formula::pred("bird", vec![v("x")])),
            BTreeSet::from(["x".to_string()])
        );
    }

    #[test]
    fn free_vars_quantified() {
        assert!(free_vars(&Formula::forall(
            &["x"],
            Formula::pred("bird", vec![v("x")])
        ))
        .is_empty());
    }

    #[test]
    fn free_vars_proportion_binds_its_vector() {
        let prop = Proportion::new(
            Formula::pred("Heads", vec![v("e")]),
            Some(Formula::and(
                Formula::pred("CoinToss", vec![v("e")]),
                Formula::pred("Object", vec![v("e"), v("x")]),
            )),
            vec!["e".into()],
        );
        let f = Formula::InInterval(
            NumExpr::Prop(prop),
            Interval::open(rational(49, 100), rational(51, 100)),
        );
        assert_eq!(free_vars(&f), BTreeSet::from(["x".to_string()]));
    }

    #[test]
    fn substitute_event_constant() {
        let f = Formula::pred("AbdominalPain", vec![v("e")]);
        let b = Binding::from([("e".to_string(), Term::constant("E001"))]);
        assert_eq!(
            substitute(&f, &b).unwrap(),
            Formula::pred("AbdominalPain", vec![Term::constant("E001")])
        );
    }

    #[test]
    fn substitute_avoids_capture() {
        let f = Formula::forall(&["x"], Formula::pred("R", vec![v("x"), v("y")]));
        let b = Binding::from([("y".to_string(), v("x"))]);
        let expected = Formula::forall(&["x'"], Formula::pred("R", vec![v("x'"), v("x")]));
        assert_eq!(substitute(&f, &b).unwrap(), expected);
    }

    #[test]
    fn substitute_absent_variable_is_identity() {
        let f = Formula::pred("Heads", vec![v("e")]);
        let b = Binding::from([("x".to_string(), Term::constant("c"))]);
        assert_eq!(substitute(&f, &b).unwrap(), f);
    }

    #[test]
    fn substitute_value_variable() {
        let f = Formula::Value("X".into(), vec![v("e")], ValueRef::Var("z".into()));
        let b = Binding::from([("z".to_string(), Term::constant("hi"))]);
        assert_eq!(
            substitute(&f, &b).unwrap(),
            Formula::Value("X".into(), vec![v("e")], ValueRef::Const("hi".into()))
        );
        let bad = Binding::from([("z".to_string(), Term::App("g".into(), vec![]))]);
        assert!(matches!(
            substitute(&f, &bad),
            Err(LogicError::SortMismatch { .. })
        ));
    }

    #[test]
    fn substitute_checked_rejects_ill_sorted_constant() {
        let mut sig = sig_coins();
        sig.add_const("E1", "Event").unwrap();
        sig.add_const("c", "Obj").unwrap();
        let f = Formula::pred("Coin", vec![v("x")]);
        let good = Binding::from([("x".to_string(), Term::constant("c"))]);
        assert!(substitute_checked(&f, &good, &sig).is_ok());
        let bad = Binding::from([("x".to_string(), Term::constant("E1"))]);
        let err = substitute_checked(&f, &bad, &sig).unwrap_err();
        assert!(err.to_string().contains("`x`"));
    }

    #[test]
    fn well_formed_example_one_axiom() {
        let s = Sentence::new(toss_object_is_coin());
        assert_eq!(well_formed(&s, &sig_coins()), vec![]);
    }

    #[test]
    fn well_formed_reports_undeclared_predicate() {
        let mut sig = Signature::new();
        sig.add_sort("Event").unwrap();
        sig.add_sort("Obj").unwrap();
        sig.add_pred("CoinToss", &["Event"]).unwrap();
        sig.add_pred("Object", &["Event", "Obj"]).unwrap();
        let diags = well_formed(&Sentence::new(toss_object_is_coin()), &sig);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(diags[0].message.contains("Coin"));
    }

    #[test]
    fn well_formed_reports_free_variable() {
        let mut sig = Signature::new();
        sig.add_pred("bird", &[DEFAULT_SORT]).unwrap();
        let diags = well_formed(&Sentence::new(Formula::pred("bird", vec![v("x")])), &sig);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("not closed"));
    }

    #[test]
    fn well_formed_checks_value_range() {
        let mut sig = Signature::new();
        sig.add_func(
            "X",
            &[DEFAULT_SORT],
            FuncResult::Values(vec!["a".into(), "b".into()]),
        )
        .unwrap();
        sig.add_const("E", DEFAULT_SORT).unwrap();
        let ok = Formula::Value(
            "X".into(),
            vec![Term::constant("E")],
            ValueRef::Const("a".into()),
        );
        assert!(well_formed(&Sentence::new(ok), &sig).is_empty());
        let bad = Formula::Value(
            "X".into(),
            vec![Term::constant("E")],
            ValueRef::Const("c".into()),
        );
        assert_eq!(well_formed(&Sentence::new(bad), &sig).len(), 1);
    }

    #[test]
    fn signature_rejects_duplicates_and_small_ranges() {
        let mut sig = Signature::new();
        sig.add_pred("P", &[]).unwrap();
        assert!(matches!(
            sig.add_const("P", DEFAULT_SORT),
            Err(SignatureError::Duplicate(_))
        ));
        assert!(matches!(
            sig.add_func("F", &[], FuncResult::Values(vec!["only".into()])),
            Err(SignatureError::TooFewValues(_))
        ));
    }

    #[test]
    fn conflicting_variable_sorts_are_reported() {
        let sig = sig_coins();
        let f = Formula::exists(
            &["x"],
            Formula::and(
                Formula::pred("Coin", vec![v("x")]),
                Formula::pred("Heads", vec![v("x")]),
            ),
        );
        let diags = well_formed(&Sentence::new(f), &sig);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("used both"));
    }
}
