//! Finite-model semantics: truth of formulas and exact values of proportion
//! terms over an explicit interpretation.
//!
//! Every constant denotes the individual with the same name. Proportion and
//! quantifier variables range over the individuals of the sort their uses
//! imply (or over a function's value set for value placeholders); tuples are
//! enumerated in name order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{
    infer_var_type, Formula, FuncResult, NumExpr, Proportion, Rational, Sentence, Signature, Term,
    ValueRef, VarType,
};
use crate::parser::{strip_header, Located, ParseError};

pub const MODEL_HEADER: &str = "kbmc-model 1";

/// Variable assignment: variable name to individual or value name.
pub type Assignment = BTreeMap<String, String>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is unbound")]
    UnboundVariable(String),
    #[error("no tuple satisfies the condition of `{0}`")]
    EmptyConditioningClass(String),
    #[error("`{0}` is not interpreted by the model")]
    Uninterpreted(String),
    #[error("`{symbol}` is undefined on ({args})")]
    Undefined { symbol: String, args: String },
    #[error("cannot determine what `{var}` ranges over: {reason}")]
    Untyped { var: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteModel {
    signature: Signature,
    domains: BTreeMap<String, BTreeSet<String>>,
    preds: BTreeMap<String, BTreeSet<Vec<String>>>,
    funcs: BTreeMap<String, BTreeMap<Vec<String>, String>>,
}

impl FiniteModel {
    /// An empty interpretation of `sig`: empty domains and extensions.
    pub fn new(sig: &Signature) -> Self {
        FiniteModel {
            signature: sig.clone(),
            domains: sig
                .sorts()
                .into_iter()
                .map(|s| (s, BTreeSet::new()))
                .collect(),
            preds: sig
                .preds()
                .map(|(p, _)| (p.clone(), BTreeSet::new()))
                .collect(),
            funcs: sig
                .funcs()
                .map(|(f, _)| (f.clone(), BTreeMap::new()))
                .collect(),
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn add_individual(&mut self, sort: &str, name: &str) {
        self.domains
            .entry(sort.to_string())
            .or_default()
            .insert(name.to_string());
    }

    pub fn domain(&self, sort: &str) -> impl Iterator<Item = &String> {
        self.domains.get(sort).into_iter().flatten()
    }

    pub fn set_pred(&mut self, pred: &str, tuple: &[&str], holds: bool) {
        let ext = self.preds.entry(pred.to_string()).or_default();
        let tuple: Vec<String> = tuple.iter().map(|s| s.to_string()).collect();
        if holds {
            ext.insert(tuple);
        } else {
            ext.remove(&tuple);
        }
    }

    pub fn set_func(&mut self, func: &str, args: &[&str], value: &str) {
        self.funcs.entry(func.to_string()).or_default().insert(
            args.iter().map(|s| s.to_string()).collect(),
            value.to_string(),
        );
    }

    pub fn holds(&self, pred: &str, tuple: &[String]) -> bool {
        self.preds.get(pred).is_some_and(|ext| ext.contains(tuple))
    }

    pub fn extension(&self, pred: &str) -> impl Iterator<Item = &Vec<String>> {
        self.preds.get(pred).into_iter().flatten()
    }

    pub fn func_value(&self, func: &str, args: &[String]) -> Option<&String> {
        self.funcs.get(func).and_then(|m| m.get(args))
    }

    fn all_tuples(&self, sorts: &[String]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for s in sorts {
            let dom: Vec<&String> = self.domain(s).collect();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    dom.iter().map(move |d| {
                        let mut t = prefix.clone();
                        t.push((*d).clone());
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Diagnostics for sort, arity and totality violations; empty iff the
    /// model interprets its signature.
    pub fn validate(&self) -> Vec<String> {
        let sig = &self.signature;
        let mut out = Vec::new();
        for sort in sig.sorts() {
            if self.domain(&sort).next().is_none() {
                out.push(format!("sort `{sort}` has no individuals"));
            }
        }
        for s in self.domains.keys() {
            if !sig.has_sort(s) {
                out.push(format!("domain for undeclared sort `{s}`"));
            }
        }
        let in_sort =
            |ind: &String, sort: &String| self.domains.get(sort).is_some_and(|d| d.contains(ind));
        for (c, sort) in sig.consts() {
            if !in_sort(c, sort) {
                out.push(format!("constant `{c}` has no individual in sort `{sort}`"));
            }
        }
        for (p, ext) in &self.preds {
            let Some(sorts) = sig.pred(p) else {
                out.push(format!("extension for undeclared predicate `{p}`"));
                continue;
            };
            for t in ext {
                if t.len() != sorts.len() || t.iter().zip(sorts).any(|(i, s)| !in_sort(i, s)) {
                    out.push(format!(
                        "`{p}({})` does not respect the declared sorts",
                        t.join(", ")
                    ));
                }
            }
        }
        for (f, decl) in sig.funcs() {
            let map = self.funcs.get(f);
            for args in self.all_tuples(&decl.args) {
                let Some(v) = map.and_then(|m| m.get(&args)) else {
                    out.push(format!("`{f}` is undefined on ({})", args.join(", ")));
                    continue;
                };
                let ok = match &decl.result {
                    FuncResult::Values(vals) => vals.contains(v),
                    FuncResult::Sort(s) => in_sort(v, s),
                };
                if !ok {
                    out.push(format!(
                        "`{f}({})` = `{v}` is outside its range",
                        args.join(", ")
                    ));
                }
            }
            if let Some(m) = map {
                for args in m.keys() {
                    if args.len() != decl.args.len()
                        || args.iter().zip(&decl.args).any(|(i, s)| !in_sort(i, s))
                    {
                        out.push(format!(
                            "`{f}({})` does not respect the declared sorts",
                            args.join(", ")
                        ));
                    }
                }
            }
        }
        out
    }

    fn range_of(&self, var: &str, scope: &[&Formula]) -> Result<Vec<String>, EvalError> {
        match infer_var_type(scope, var, &self.signature) {
            Ok(VarType::Individual(sort)) => Ok(self.domain(&sort).cloned().collect()),
            Ok(VarType::Value(values)) => Ok(values),
            Err(reason) => Err(EvalError::Untyped {
                var: var.to_string(),
                reason,
            }),
        }
    }

    fn term(&self, t: &Term, b: &Assignment) -> Result<String, EvalError> {
        match t {
            Term::Var(v) => b
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            Term::Const(c) => Ok(c.clone()),
            Term::App(f, args) => {
                let args = args
                    .iter()
                    .map(|a| self.term(a, b))
                    .collect::<Result<Vec<_>, _>>()?;
                self.func_value(f, &args)
                    .cloned()
                    .ok_or_else(|| EvalError::Undefined {
                        symbol: f.clone(),
                        args: args.join(", "),
                    })
            }
        }
    }

    /// Calls `visit` with `b` extended by every assignment to `vars`.
    fn for_each_assignment(
        &self,
        vars: &[String],
        scope: &[&Formula],
        b: &Assignment,
        visit: &mut dyn FnMut(&Assignment) -> Result<bool, EvalError>,
    ) -> Result<(), EvalError> {
        let ranges = vars
            .iter()
            .map(|v| self.range_of(v, scope))
            .collect::<Result<Vec<_>, _>>()?;
        let mut inner = b.clone();
        let mut idx = vec![0usize; vars.len()];
        if ranges.iter().any(|r| r.is_empty()) {
            return Ok(());
        }
        loop {
            for (k, v) in vars.iter().enumerate() {
                inner.insert(v.clone(), ranges[k][idx[k]].clone());
            }
            if !visit(&inner)? {
                return Ok(());
            }
            // odometer, last variable fastest
            let mut k = vars.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < ranges[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

impl fmt::Display for FiniteModel {
    /// Renders the model in the `.model` format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{MODEL_HEADER}")?;
        for (sort, inds) in &self.domains {
            let inds: Vec<&str> = inds.iter().map(|s| s.as_str()).collect();
            writeln!(f, "domain {sort}: {}", inds.join(" "))?;
        }
        for (p, ext) in &self.preds {
            writeln!(f, "pred {p}")?;
            for t in ext {
                writeln!(
                    f,
                    "  {}",
                    if t.is_empty() {
                        "()".to_string()
                    } else {
                        t.join(" ")
                    }
                )?;
            }
            writeln!(f, "end")?;
        }
        for (func, map) in &self.funcs {
            writeln!(f, "func {func}")?;
            for (args, v) in map {
                let args = if args.is_empty() {
                    "()".to_string()
                } else {
                    args.join(" ")
                };
                writeln!(f, "  {args} -> {v}")?;
            }
            writeln!(f, "end")?;
        }
        Ok(())
    }
}

/// Parses a `.model` file against the signature it interprets.
pub fn parse_model(text: &str, sig: &Signature) -> Result<FiniteModel, ParseError> {
    let text = strip_header(text, "kbmc-model")?;
    let mut model = FiniteModel::new(sig);
    let mut diags = Vec::new();
    let mut block: Option<(bool, String)> = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("").trim();
        let at = |message: String| Located {
            line: no + 1,
            col: raw.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1,
            message,
        };
        if line.is_empty() {
            continue;
        }
        if let Some((is_pred, name)) = &block {
            if line == "end" {
                block = None;
                continue;
            }
            let (args_part, value) = if *is_pred {
                (line, None)
            } else {
                match line.split_once("->") {
                    Some((a, v)) => (a.trim(), Some(v.trim())),
                    None => {
                        diags.push(at(format!("expected `args -> value` in function `{name}`")));
                        continue;
                    }
                }
            };
            let args: Vec<&str> = if args_part == "()" {
                Vec::new()
            } else {
                args_part.split_whitespace().collect()
            };
            match value {
                None => model.set_pred(name, &args, true),
                Some(v) => model.set_func(name, &args, v),
            }
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("domain") => {
                let rest = line["domain".len()..].trim();
                let Some((sort, inds)) = rest.split_once(':') else {
                    diags.push(at("expected `domain Sort: a b c`".into()));
                    continue;
                };
                let sort = sort.trim();
                if !sig.has_sort(sort) {
                    diags.push(at(format!("unknown sort `{sort}`")));
                    continue;
                }
                for ind in inds.split_whitespace() {
                    model.add_individual(sort, ind);
                }
            }
            Some(kw @ ("pred" | "func")) => {
                let Some(name) = words.next() else {
                    diags.push(at(format!("expected a name after `{kw}`")));
                    continue;
                };
                let known = if kw == "pred" {
                    sig.pred(name).is_some()
                } else {
                    sig.func(name).is_some()
                };
                if !known {
                    diags.push(at(format!(
                        "`{name}` is not a declared {}",
                        if kw == "pred" {
                            "predicate"
                        } else {
                            "function"
                        }
                    )));
                }
                block = Some((kw == "pred", name.to_string()));
            }
            _ => diags.push(at(format!("unexpected line `{line}`"))),
        }
    }
    if let Some((_, name)) = block {
        diags.push(Located {
            line: text.lines().count(),
            col: 1,
            message: format!("block `{name}` is missing `end`"),
        });
    }
    if diags.is_empty() {
        diags.extend(model.validate().into_iter().map(|message| Located {
            line: 0,
            col: 0,
            message,
        }));
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        Err(ParseError { diagnostics: diags })
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Tarskian truth of `f` under `b`.
pub fn eval_formula(m: &FiniteModel, f: &Formula, b: &Assignment) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::Pred(p, args) => {
            let t = args
                .iter()
                .map(|a| m.term(a, b))
                .collect::<Result<Vec<_>, _>>()?;
            m.holds(p, &t)
        }
        Formula::Value(func, args, v) => {
            let t = args
                .iter()
                .map(|a| m.term(a, b))
                .collect::<Result<Vec<_>, _>>()?;
            let actual = m.func_value(func, &t).ok_or_else(|| EvalError::Undefined {
                symbol: func.clone(),
                args: t.join(", "),
            })?;
            let expected = match v {
                ValueRef::Const(c) => c,
                ValueRef::Var(x) => b
                    .get(x)
                    .ok_or_else(|| EvalError::UnboundVariable(x.clone()))?,
            };
            actual == expected
        }
        Formula::Not(a) => !eval_formula(m, a, b)?,
        Formula::And(x, y) => eval_formula(m, x, b)? && eval_formula(m, y, b)?,
        Formula::Or(x, y) => eval_formula(m, x, b)? || eval_formula(m, y, b)?,
        Formula::Implies(x, y) => !eval_formula(m, x, b)? || eval_formula(m, y, b)?,
        Formula::Iff(x, y) => eval_formula(m, x, b)? == eval_formula(m, y, b)?,
        Formula::ForAll(vars, body) => {
            let mut all = true;
            m.for_each_assignment(vars, &[body], b, &mut |inner| {
                all = eval_formula(m, body, inner)?;
                Ok(all)
            })?;
            all
        }
        Formula::Exists(vars, body) => {
            let mut any = false;
            m.for_each_assignment(vars, &[body], b, &mut |inner| {
                any = eval_formula(m, body, inner)?;
                Ok(!any)
            })?;
            any
        }
        Formula::Compare(x, c, y) => c.holds(&eval_num(m, x, b)?, &eval_num(m, y, b)?),
        Formula::InInterval(x, i) => i.contains(&eval_num(m, x, b)?),
    })
}

/// Counts of `(condition, body ∧ condition)` tuples for a proportion.
pub fn proportion_counts(
    m: &FiniteModel,
    p: &Proportion,
    b: &Assignment,
) -> Result<(u64, u64), EvalError> {
    let scope: Vec<&Formula> = match &p.condition {
        Some(c) => vec![p.body.as_ref(), c.as_ref()],
        None => vec![p.body.as_ref()],
    };
    let (mut cond, mut both) = (0u64, 0u64);
    m.for_each_assignment(&p.vars, &scope, b, &mut |inner| {
        let c = match &p.condition {
            Some(c) => eval_formula(m, c, inner)?,
            None => true,
        };
        if c {
            cond += 1;
            if eval_formula(m, &p.body, inner)? {
                both += 1;
            }
        }
        Ok(true)
    })?;
    Ok((cond, both))
}

/// `|{x̄ : β ∧ α}| / |{x̄ : β}|` as an exact rational.
pub fn eval_proportion(
    m: &FiniteModel,
    p: &Proportion,
    b: &Assignment,
) -> Result<Rational, EvalError> {
    let (cond, both) = proportion_counts(m, p, b)?;
    if cond == 0 {
        return Err(EvalError::EmptyConditioningClass(p.to_string()));
    }
    Ok(Rational::new(both.into(), cond.into()))
}

pub fn eval_num(m: &FiniteModel, e: &NumExpr, b: &Assignment) -> Result<Rational, EvalError> {
    Ok(match e {
        NumExpr::Lit(r) => r.clone(),
        NumExpr::Prop(p) => eval_proportion(m, p, b)?,
        NumExpr::Add(x, y) => eval_num(m, x, b)? + eval_num(m, y, b)?,
        NumExpr::Mul(x, y) => eval_num(m, x, b)? * eval_num(m, y, b)?,
    })
}

pub fn check_sentence(m: &FiniteModel, s: &Sentence) -> Result<bool, EvalError> {
    eval_formula(m, &s.formula, &Assignment::new())
}

/// Proportion of assignments to `vars` satisfying `f`; convenience for
/// callers that have a bare formula rather than a `Proportion`.
pub fn fraction(
    m: &FiniteModel,
    f: &Formula,
    vars: &[&str],
    b: &Assignment,
) -> Result<Rational, EvalError> {
    let p = Proportion::new(
        f.clone(),
        None,
        vars.iter().map(|v| v.to_string()).collect(),
    );
    eval_proportion(m, &p, b)
}
