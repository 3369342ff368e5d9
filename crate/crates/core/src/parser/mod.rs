//! Concrete syntax for knowledge bases (`.kb`) and construction requests
//! (`.req`), plus a lossless pretty-printer.
//!
//! ```text
//! kbmc-kb 1
//! sort Event; sort House;
//! pred Burglary(Event, House);
//! const MyHouse : House;
//! @alarm: stat [AlarmSound(e, x) | Burglary(e, x) & HouseWithAlarm(x)]_{e, x} = 0.75.
//! ```

pub mod lexer;
pub mod printer;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::construct::ConstructionRequest;
use crate::logic::{
    parse_rational, well_formed, AtomKind, Cmp, Formula, FuncResult, GroundAtom, GroundLiteral,
    Interval, NumExpr, Proportion, Sentence, Signature, Term, ValueRef, DEFAULT_SORT, FALSE, TRUE,
};
use lexer::{tokenize, Pos, Tok, Token};

pub use printer::pretty_print;

pub const KB_HEADER: &str = "kbmc-kb 1";

const RESERVED: &[&str] = &[
    "all", "ex", "in", "fact", "axiom", "stat", "sort", "pred", "func", "const", "event",
    "evidence", "query", "interest",
];

pub fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name)
}

/// One located message. Lines and columns are 1-based; line 0 marks a
/// message about the whole input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Located {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<Located>,
}

impl ParseError {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            diagnostics: vec![Located {
                line: pos.line,
                col: pos.col,
                message: message.into(),
            }],
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Sort(String),
    Pred(String, Vec<String>),
    Func(String, Vec<String>, FuncResult),
    /// The sort is optional when the signature has a single sort.
    Const(String, Option<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatementKind {
    Fact,
    Axiom,
    Stat,
}

impl StatementKind {
    pub fn keyword(self) -> &'static str {
        match self {
            StatementKind::Fact => "fact",
            StatementKind::Axiom => "axiom",
            StatementKind::Stat => "stat",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
pub struct Statement {
    pub label: Option<String>,
    pub kind: StatementKind,
    pub sentence: Sentence,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.kind == other.kind && self.sentence == other.sentence
    }
}

impl Eq for Statement {}

/// A parsed knowledge base. Equality ignores source spans.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SourceKB {
    pub decls: Vec<Decl>,
    pub statements: Vec<Statement>,
    pub signature: Signature,
}

impl SourceKB {
    /// Builds and checks a knowledge base from parts, as the parser would.
    pub fn from_parts(
        decls: Vec<Decl>,
        statements: Vec<Statement>,
    ) -> Result<SourceKB, ParseError> {
        let signature = build_signature(&decls).map_err(|msgs| ParseError {
            diagnostics: msgs
                .into_iter()
                .map(|message| Located {
                    line: 0,
                    col: 0,
                    message,
                })
                .collect(),
        })?;
        let kb = SourceKB {
            decls,
            statements,
            signature,
        };
        let diags = check_statements(&kb);
        if diags.is_empty() {
            Ok(kb)
        } else {
            Err(ParseError { diagnostics: diags })
        }
    }

    pub fn statement(&self, label: &str) -> Option<&Statement> {
        self.statements
            .iter()
            .find(|s| s.label.as_deref() == Some(label))
    }
}

pub fn build_signature(decls: &[Decl]) -> Result<Signature, Vec<String>> {
    let mut sig = Signature::new();
    let mut errors = Vec::new();
    let push = |errors: &mut Vec<String>, r: Result<(), crate::logic::SignatureError>| {
        if let Err(e) = r {
            errors.push(e.to_string());
        }
    };
    let sorts: Vec<&String> = decls
        .iter()
        .filter_map(|d| match d {
            Decl::Sort(s) => Some(s),
            _ => None,
        })
        .collect();
    for s in &sorts {
        push(&mut errors, sig.add_sort(s));
    }
    for d in decls {
        match d {
            Decl::Sort(_) => {}
            Decl::Pred(p, args) => {
                let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
                push(&mut errors, sig.add_pred(p, &args));
            }
            Decl::Func(f, args, result) => {
                let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
                push(&mut errors, sig.add_func(f, &args, result.clone()));
            }
            Decl::Const(c, sort) => {
                let sort = match sort {
                    Some(s) => s.clone(),
                    None if sorts.is_empty() => DEFAULT_SORT.to_string(),
                    None if sorts.len() == 1 => sorts[0].clone(),
                    None => {
                        errors.push(format!("constant `{c}` needs a sort (`const {c} : S;`)"));
                        continue;
                    }
                };
                push(&mut errors, sig.add_const(c, &sort));
            }
        }
    }
    errors.extend(sig.check());
    if errors.is_empty() {
        Ok(sig)
    } else {
        Err(errors)
    }
}

fn check_statements(kb: &SourceKB) -> Vec<Located> {
    let mut out = Vec::new();
    let mut labels = BTreeSet::new();
    for st in &kb.statements {
        let mut report = |message: String| {
            out.push(Located {
                line: st.span.line,
                col: st.span.col,
                message,
            })
        };
        if let Some(l) = &st.label {
            if !labels.insert(l.clone()) {
                report(format!("duplicate label `@{l}`"));
            }
        }
        let f = &st.sentence.formula;
        match st.kind {
            StatementKind::Fact if !f.is_ground() => {
                report("`fact` requires a ground formula without quantifiers or proportions".into())
            }
            StatementKind::Stat if !f.has_proportion() => {
                report("`stat` requires a proportion term".into())
            }
            _ => {}
        }
        for d in well_formed(&st.sentence, &kb.signature) {
            report(d.to_string());
        }
    }
    out
}

/// Parses a `.kb` file. Either every statement is well formed or the result
/// is an error carrying all diagnostics.
pub fn parse_kb(text: &str) -> Result<SourceKB, ParseError> {
    let text = strip_header(text, "kbmc-kb")?;
    let toks = tokenize(&text).map_err(|e| ParseError::at(e.pos, e.message))?;
    let mut p = Parser::new(toks);
    let (decls, mut statements) = p.kb()?;
    let signature = build_signature(&decls).map_err(|msgs| ParseError {
        diagnostics: msgs
            .into_iter()
            .map(|message| Located {
                line: 1,
                col: 1,
                message,
            })
            .collect(),
    })?;
    for st in &mut statements {
        st.sentence.formula = resolve(&st.sentence.formula, &signature);
    }
    let kb = SourceKB {
        decls,
        statements,
        signature,
    };
    let diags = check_statements(&kb);
    if diags.is_empty() {
        Ok(kb)
    } else {
        Err(ParseError { diagnostics: diags })
    }
}

/// Parses one closed formula against an existing signature.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let toks = tokenize(text).map_err(|e| ParseError::at(e.pos, e.message))?;
    let mut p = Parser::new(toks);
    let f = p.formula(false)?;
    p.expect_eof()?;
    Ok(resolve(&f, sig))
}

/// Blanks a leading `<kind> <version>` header line, keeping positions intact.
pub(crate) fn strip_header(text: &str, kind: &str) -> Result<String, ParseError> {
    for (no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with("//") {
            continue;
        }
        if let Some(rest) = t.strip_prefix(kind) {
            if rest.trim() != "1" {
                return Err(ParseError::at(
                    Pos {
                        line: no + 1,
                        col: 1,
                        offset: 0,
                    },
                    format!("unsupported `{kind}` version `{}`", rest.trim()),
                ));
            }
            let mut out = String::with_capacity(text.len());
            for (i, l) in text.split_inclusive('\n').enumerate() {
                if i == no {
                    out.extend(l.chars().map(|c| if c == '\n' { '\n' } else { ' ' }));
                } else {
                    out.push_str(l);
                }
            }
            return Ok(out);
        }
        break;
    }
    Ok(text.to_string())
}

// ---------------------------------------------------------------------------
// Identifier resolution

fn resolve_term(t: &Term, bound: &[String], sig: &Signature) -> Term {
    match t {
        Term::Var(v) if !bound.contains(v) && sig.const_sort(v).is_some() => Term::Const(v.clone()),
        Term::App(f, args) => Term::App(
            f.clone(),
            args.iter().map(|a| resolve_term(a, bound, sig)).collect(),
        ),
        _ => t.clone(),
    }
}

fn resolve_value(v: &ValueRef, bound: &[String]) -> ValueRef {
    let name = v.name().to_string();
    if bound.contains(&name) {
        ValueRef::Var(name)
    } else {
        ValueRef::Const(name)
    }
}

fn resolve_in(f: &Formula, bound: &mut Vec<String>, sig: &Signature) -> Formula {
    let two = |a: &Formula, b: &Formula, bound: &mut Vec<String>| {
        (
            Box::new(resolve_in(a, bound, sig)),
            Box::new(resolve_in(b, bound, sig)),
        )
    };
    match f {
        Formula::Pred(p, args) => Formula::Pred(
            p.clone(),
            args.iter().map(|a| resolve_term(a, bound, sig)).collect(),
        ),
        Formula::Value(func, args, v) => Formula::Value(
            func.clone(),
            args.iter().map(|a| resolve_term(a, bound, sig)).collect(),
            resolve_value(v, bound),
        ),
        Formula::Not(a) => Formula::Not(Box::new(resolve_in(a, bound, sig))),
        Formula::And(a, b) => {
            let (a, b) = two(a, b, bound);
            Formula::And(a, b)
        }
        Formula::Or(a, b) => {
            let (a, b) = two(a, b, bound);
            Formula::Or(a, b)
        }
        Formula::Implies(a, b) => {
            let (a, b) = two(a, b, bound);
            Formula::Implies(a, b)
        }
        Formula::Iff(a, b) => {
            let (a, b) = two(a, b, bound);
            Formula::Iff(a, b)
        }
        Formula::ForAll(vars, body) | Formula::Exists(vars, body) => {
            let depth = bound.len();
            bound.extend(vars.iter().cloned());
            let body = Box::new(resolve_in(body, bound, sig));
            bound.truncate(depth);
            if matches!(f, Formula::ForAll(..)) {
                Formula::ForAll(vars.clone(), body)
            } else {
                Formula::Exists(vars.clone(), body)
            }
        }
        Formula::Compare(a, c, b) => {
            Formula::Compare(resolve_num(a, bound, sig), *c, resolve_num(b, bound, sig))
        }
        Formula::InInterval(a, i) => Formula::InInterval(resolve_num(a, bound, sig), i.clone()),
    }
}

fn resolve_num(e: &NumExpr, bound: &mut Vec<String>, sig: &Signature) -> NumExpr {
    match e {
        NumExpr::Lit(_) => e.clone(),
        NumExpr::Prop(p) => {
            let depth = bound.len();
            bound.extend(p.vars.iter().cloned());
            let body = resolve_in(&p.body, bound, sig);
            let condition = p.condition.as_ref().map(|c| resolve_in(c, bound, sig));
            bound.truncate(depth);
            NumExpr::Prop(Proportion::new(body, condition, p.vars.clone()))
        }
        NumExpr::Add(a, b) => NumExpr::Add(
            Box::new(resolve_num(a, bound, sig)),
            Box::new(resolve_num(b, bound, sig)),
        ),
        NumExpr::Mul(a, b) => NumExpr::Mul(
            Box::new(resolve_num(a, bound, sig)),
            Box::new(resolve_num(b, bound, sig)),
        ),
    }
}

/// Turns unbound identifiers naming constants into constants and settles
/// whether each value position is a value name or a bound placeholder.
pub fn resolve(f: &Formula, sig: &Signature) -> Formula {
    resolve_in(f, &mut Vec::new(), sig)
}

// ---------------------------------------------------------------------------
// Recursive descent

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

fn err_pos(e: &ParseError) -> (usize, usize) {
    e.diagnostics
        .first()
        .map(|d| (d.line, d.col))
        .unwrap_or((0, 0))
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, i: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::at(
            self.pos(),
            format!("expected {wanted}, found {}", self.peek()),
        )
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => Err(ParseError::at(
                self.pos(),
                format!("`{s}` is a reserved word, expected {what}"),
            )),
            _ => Err(self.unexpected(what)),
        }
    }

    fn ident_list(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut out = vec![self.ident(what)?];
        while self.eat(",") {
            out.push(self.ident(what)?);
        }
        Ok(out)
    }

    // -- file level --------------------------------------------------------

    fn kb(&mut self) -> PResult<(Vec<Decl>, Vec<Statement>)> {
        let mut decls = Vec::new();
        let mut stmts = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(k) if ["sort", "pred", "func", "const"].contains(&k.as_str()) => {
                    self.bump();
                    self.decl(&k, &mut decls)?;
                }
                _ => stmts.push(self.statement()?),
            }
        }
        Ok((decls, stmts))
    }

    fn decl(&mut self, kw: &str, out: &mut Vec<Decl>) -> PResult<()> {
        match kw {
            "sort" => {
                for s in self.ident_list("a sort name")? {
                    out.push(Decl::Sort(s));
                }
            }
            "pred" => {
                let name = self.ident("a predicate name")?;
                let args = self.sort_args()?;
                out.push(Decl::Pred(name, args));
            }
            "func" => {
                let name = self.ident("a function name")?;
                let args = self.sort_args()?;
                self.expect("->")?;
                let result = if self.eat("{") {
                    let values = self.ident_list("a value name")?;
                    self.expect("}")?;
                    FuncResult::Values(values)
                } else {
                    FuncResult::Sort(self.ident("a sort name or `{`")?)
                };
                out.push(Decl::Func(name, args, result));
            }
            _ => {
                let names = self.ident_list("a constant name")?;
                let sort = if self.eat(":") {
                    Some(self.ident("a sort name")?)
                } else {
                    None
                };
                for n in names {
                    out.push(Decl::Const(n, sort.clone()));
                }
            }
        }
        self.expect(";")
    }

    fn sort_args(&mut self) -> PResult<Vec<String>> {
        if !self.eat("(") {
            return Ok(Vec::new());
        }
        if self.eat(")") {
            return Ok(Vec::new());
        }
        let args = self.ident_list("a sort name")?;
        self.expect(")")?;
        Ok(args)
    }

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.toks[self.i].clone();
        let label = match self.peek().clone() {
            Tok::Label(l) => {
                self.bump();
                self.expect(":")?;
                Some(l)
            }
            _ => None,
        };
        let kind = match self.peek() {
            Tok::Ident(k) if k == "fact" => StatementKind::Fact,
            Tok::Ident(k) if k == "axiom" => StatementKind::Axiom,
            Tok::Ident(k) if k == "stat" => StatementKind::Stat,
            _ => return Err(self.unexpected("a declaration or `fact`, `axiom`, `stat`")),
        };
        self.bump();
        let formula = self.formula(false)?;
        let end = self.toks[self.i].end;
        self.expect(".")?;
        Ok(Statement {
            label,
            kind,
            sentence: Sentence::new(formula),
            span: Span {
                line: start.pos.line,
                col: start.pos.col,
                start: start.pos.offset,
                end,
            },
        })
    }

    // -- formulas ----------------------------------------------------------

    /// `no_or` is set inside a proportion body, where the first bare `|`
    /// is the conditioning bar.
    fn formula(&mut self, no_or: bool) -> PResult<Formula> {
        let mut lhs = self.implication(no_or)?;
        while self.eat("<->") {
            let rhs = self.implication(no_or)?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self, no_or: bool) -> PResult<Formula> {
        let lhs = self.disjunction(no_or)?;
        if self.eat("->") {
            let rhs = self.implication(no_or)?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self, no_or: bool) -> PResult<Formula> {
        let mut lhs = self.conjunction(no_or)?;
        while !no_or && self.eat("|") {
            let rhs = self.conjunction(no_or)?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self, no_or: bool) -> PResult<Formula> {
        let mut lhs = self.unary(no_or)?;
        while self.eat("&") {
            let rhs = self.unary(no_or)?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self, no_or: bool) -> PResult<Formula> {
        if self.eat("~") {
            return Ok(Formula::not(self.unary(no_or)?));
        }
        if self.is_keyword("all") || self.is_keyword("ex") {
            let universal = self.is_keyword("all");
            self.bump();
            let vars = self.ident_list("a variable")?;
            self.expect(".")?;
            let body = Box::new(self.formula(no_or)?);
            return Ok(if universal {
                Formula::ForAll(vars, body)
            } else {
                Formula::Exists(vars, body)
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Punct("(") => {
                let save = self.i;
                let numeric = self.comparison();
                match numeric {
                    Ok(f) => Ok(f),
                    Err(num_err) => {
                        self.i = save;
                        self.bump();
                        let inner = self
                            .formula(false)
                            .and_then(|f| self.expect(")").map(|_| f));
                        match inner {
                            Ok(f) => Ok(f),
                            Err(f_err) if err_pos(&num_err) > err_pos(&f_err) => Err(num_err),
                            Err(f_err) => Err(f_err),
                        }
                    }
                }
            }
            Tok::Punct("[") | Tok::Number(_) => self.comparison(),
            Tok::Ident(_) => self.atom(),
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let name = self.ident("a predicate or function name")?;
        let args = if self.eat("(") {
            self.term_args()?
        } else {
            Vec::new()
        };
        if self.eat("=") {
            let value = self.ident("a value name")?;
            return Ok(Formula::Value(name, args, ValueRef::Var(value)));
        }
        Ok(Formula::Pred(name, args))
    }

    /// Arguments after an already consumed `(`.
    fn term_args(&mut self) -> PResult<Vec<Term>> {
        if self.eat(")") {
            return Ok(Vec::new());
        }
        let mut args = vec![self.term()?];
        while self.eat(",") {
            args.push(self.term()?);
        }
        self.expect(")")?;
        Ok(args)
    }

    fn term(&mut self) -> PResult<Term> {
        let name = self.ident("a term")?;
        if self.eat("(") {
            return Ok(Term::App(name, self.term_args()?));
        }
        Ok(Term::Var(name))
    }

    fn cmp_op(&mut self) -> Option<Cmp> {
        let c = match self.peek() {
            Tok::Punct("=") => Cmp::Eq,
            Tok::Punct("<=") => Cmp::Le,
            Tok::Punct(">=") => Cmp::Ge,
            Tok::Punct("<") => Cmp::Lt,
            Tok::Punct(">") => Cmp::Gt,
            _ => return None,
        };
        self.bump();
        Some(c)
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.num_sum()?;
        if self.is_keyword("in") {
            self.bump();
            let interval = self.interval()?;
            return Ok(Formula::InInterval(lhs, interval));
        }
        let Some(op) = self.cmp_op() else {
            return Err(self.unexpected("a comparison (`=`, `<=`, `>=`, `<`, `>`) or `in`"));
        };
        let rhs = self.num_sum()?;
        let mut out = Formula::Compare(lhs, op, rhs.clone());
        // `a <= b <= c` reads as `a <= b & b <= c`
        let mut last = rhs;
        while let Some(op) = self.cmp_op() {
            let next = self.num_sum()?;
            out = Formula::and(out, Formula::Compare(last, op, next.clone()));
            last = next;
        }
        Ok(out)
    }

    fn number(&mut self) -> PResult<crate::logic::Rational> {
        match self.peek().clone() {
            Tok::Number(n) => {
                let pos = self.pos();
                self.bump();
                parse_rational(&n)
                    .ok_or_else(|| ParseError::at(pos, format!("invalid number `{n}`")))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn interval(&mut self) -> PResult<Interval> {
        let lo_open = if self.eat("(") {
            true
        } else if self.eat("[") {
            false
        } else {
            return Err(self.unexpected("`(` or `[` opening an interval"));
        };
        let lo = self.number()?;
        self.expect(",")?;
        let hi = self.number()?;
        let hi_open = if self.eat(")") {
            true
        } else if self.eat("]") {
            false
        } else {
            return Err(self.unexpected("`)` or `]` closing an interval"));
        };
        Ok(Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    fn num_sum(&mut self) -> PResult<NumExpr> {
        let mut lhs = self.num_product()?;
        while self.eat("+") {
            let rhs = self.num_product()?;
            lhs = NumExpr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn num_product(&mut self) -> PResult<NumExpr> {
        let mut lhs = self.num_atom()?;
        while self.eat("*") {
            let rhs = self.num_atom()?;
            lhs = NumExpr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn num_atom(&mut self) -> PResult<NumExpr> {
        match self.peek() {
            Tok::Number(_) => Ok(NumExpr::Lit(self.number()?)),
            Tok::Punct("(") => {
                self.bump();
                let e = self.num_sum()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                let body = self.formula(true)?;
                let condition = if self.eat("|") {
                    Some(self.formula(false)?)
                } else {
                    None
                };
                self.expect("]")?;
                let vars = self.subscript()?;
                Ok(NumExpr::Prop(Proportion::new(body, condition, vars)))
            }
            _ => Err(self.unexpected("a number or proportion")),
        }
    }

    /// `_x`, `_{x, y}`, `_(x, y)` or `_{(x, y)}`.
    fn subscript(&mut self) -> PResult<Vec<String>> {
        self.expect("_")?;
        let close = if self.eat("{") {
            if self.eat("(") {
                let vars = self.ident_list("a variable")?;
                self.expect(")")?;
                self.expect("}")?;
                return Ok(vars);
            }
            "}"
        } else if self.eat("(") {
            ")"
        } else {
            return Ok(vec![self.ident("a variable")?]);
        };
        let vars = self.ident_list("a variable")?;
        self.expect(close)?;
        Ok(vars)
    }

    // -- requests ----------------------------------------------------------

    fn request(&mut self) -> PResult<RawRequest> {
        let mut req = RawRequest::default();
        while !matches!(self.peek(), Tok::Eof) {
            let pos = self.pos();
            let Tok::Ident(kw) = self.peek().clone() else {
                return Err(self.unexpected("`event`, `evidence`, `query` or `interest`"));
            };
            self.bump();
            match kw.as_str() {
                "event" => {
                    if req.event.is_some() {
                        return Err(ParseError::at(pos, "`event` given twice"));
                    }
                    req.event = Some(self.ident("an event constant")?);
                }
                "evidence" => {
                    if !self.is_punct(";") {
                        req.evidence.push(self.raw_literal()?);
                        while self.eat(",") {
                            req.evidence.push(self.raw_literal()?);
                        }
                    }
                }
                "query" | "interest" => {
                    let list = if kw == "query" {
                        &mut req.queries
                    } else {
                        &mut req.interest
                    };
                    let mut atoms = Vec::new();
                    if !self.is_punct(";") {
                        atoms.push(self.raw_atom()?);
                        while self.eat(",") {
                            atoms.push(self.raw_atom()?);
                        }
                    }
                    list.extend(atoms);
                }
                other => {
                    return Err(ParseError::at(
                        pos,
                        format!(
                            "expected `event`, `evidence`, `query` or `interest`, found `{other}`"
                        ),
                    ))
                }
            }
            self.expect(";")?;
        }
        Ok(req)
    }

    fn raw_atom(&mut self) -> PResult<RawAtom> {
        let pos = self.pos();
        let symbol = self.ident("an atom")?;
        let mut args = Vec::new();
        if self.eat("(") && !self.eat(")") {
            args = self.ident_list("a constant")?;
            self.expect(")")?;
        }
        Ok(RawAtom {
            symbol,
            args,
            line: pos.line,
            col: pos.col,
        })
    }

    fn raw_literal(&mut self) -> PResult<RawLiteral> {
        let negated = self.eat("~");
        let atom = self.raw_atom()?;
        let value = if self.eat("=") {
            Some(self.ident("a value name")?)
        } else {
            None
        };
        Ok(RawLiteral {
            atom,
            negated,
            value,
        })
    }
}

// ---------------------------------------------------------------------------
// Requests

/// A request atom before it is checked against a signature or a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAtom {
    pub symbol: String,
    pub args: Vec<String>,
    pub line: usize,
    pub col: usize,
}

impl RawAtom {
    /// Canonical node name, `Sym(a,b)` or `Sym`.
    pub fn node_name(&self) -> String {
        if self.args.is_empty() {
            self.symbol.clone()
        } else {
            format!("{}({})", self.symbol, self.args.join(","))
        }
    }

    fn error(&self, message: String) -> Located {
        Located {
            line: self.line,
            col: self.col,
            message,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawLiteral {
    pub atom: RawAtom,
    pub negated: bool,
    pub value: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawRequest {
    pub event: Option<String>,
    pub evidence: Vec<RawLiteral>,
    pub queries: Vec<RawAtom>,
    pub interest: Vec<RawAtom>,
}

/// Parses a `.req` file without consulting any signature.
pub fn parse_raw_request(text: &str) -> Result<RawRequest, ParseError> {
    let text = strip_header(text, "kbmc-req")?;
    let toks = tokenize(&text).map_err(|e| ParseError::at(e.pos, e.message))?;
    Parser::new(toks).request()
}

fn ground_atom(raw: &RawAtom, sig: &Signature, diags: &mut Vec<Located>) -> Option<GroundAtom> {
    let (kind, sorts) = if let Some(sorts) = sig.pred(&raw.symbol) {
        (AtomKind::Pred, sorts.to_vec())
    } else if let Some(decl) = sig.func(&raw.symbol) {
        if decl.values().is_none() {
            diags.push(raw.error(format!(
                "`{}` is not finite-valued and cannot be a network node",
                raw.symbol
            )));
            return None;
        }
        (AtomKind::Func, decl.args.clone())
    } else {
        diags.push(raw.error(format!("unknown symbol `{}`", raw.symbol)));
        return None;
    };
    if sorts.len() != raw.args.len() {
        diags.push(raw.error(format!(
            "`{}` expects {} argument(s), found {}",
            raw.symbol,
            sorts.len(),
            raw.args.len()
        )));
        return None;
    }
    let mut ok = true;
    for (a, s) in raw.args.iter().zip(&sorts) {
        match sig.const_sort(a) {
            None => {
                diags.push(raw.error(format!(
                    "`{a}` is not a declared constant (request atoms must be ground)"
                )));
                ok = false;
            }
            Some(actual) if actual != s => {
                diags.push(raw.error(format!(
                    "constant `{a}` has sort `{actual}` but `{s}` is expected"
                )));
                ok = false;
            }
            Some(_) => {}
        }
    }
    ok.then(|| GroundAtom {
        symbol: raw.symbol.clone(),
        args: raw.args.clone(),
        kind,
    })
}

/// Parses a `.req` file and checks it against a knowledge base signature.
pub fn parse_request(text: &str, sig: &Signature) -> Result<ConstructionRequest, ParseError> {
    let raw = parse_raw_request(text)?;
    let mut diags = Vec::new();
    let Some(event) = raw.event.clone() else {
        return Err(ParseError {
            diagnostics: vec![Located {
                line: 1,
                col: 1,
                message: "missing `event` clause".into(),
            }],
        });
    };
    if sig.const_sort(&event).is_none() {
        diags.push(Located {
            line: 1,
            col: 1,
            message: format!("event `{event}` is not a declared constant"),
        });
    }
    let check_event = |atom: &GroundAtom, raw: &RawAtom, diags: &mut Vec<Located>| {
        if !atom.mentions(&event) {
            diags.push(raw.error(format!(
                "`{}` does not mention the event `{event}`",
                raw.node_name()
            )));
        }
    };
    let mut evidence = Vec::new();
    for lit in &raw.evidence {
        let Some(atom) = ground_atom(&lit.atom, sig, &mut diags) else {
            continue;
        };
        check_event(&atom, &lit.atom, &mut diags);
        let value = match (atom.kind, &lit.value, lit.negated) {
            (AtomKind::Pred, None, neg) => (if neg { FALSE } else { TRUE }).to_string(),
            (AtomKind::Pred, Some(v), false) if v == TRUE || v == FALSE => v.clone(),
            (AtomKind::Func, Some(v), false) => {
                let values = sig
                    .func(&atom.symbol)
                    .and_then(|d| d.values())
                    .unwrap_or(&[]);
                if !values.contains(v) {
                    diags.push(
                        lit.atom
                            .error(format!("`{v}` is not a value of `{}`", atom.symbol)),
                    );
                    continue;
                }
                v.clone()
            }
            (AtomKind::Func, None, _) => {
                diags.push(lit.atom.error(format!(
                    "evidence on `{}` needs a value: `{}(..) = v`",
                    atom.symbol, atom.symbol
                )));
                continue;
            }
            _ => {
                diags.push(lit.atom.error("malformed evidence literal".to_string()));
                continue;
            }
        };
        evidence.push(GroundLiteral::new(atom, &value));
    }
    let atoms = |list: &[RawAtom], diags: &mut Vec<Located>| -> Vec<GroundAtom> {
        let mut out = Vec::new();
        for r in list {
            if let Some(a) = ground_atom(r, sig, diags) {
                check_event(&a, r, diags);
                out.push(a);
            }
        }
        out
    };
    let queries = atoms(&raw.queries, &mut diags);
    let interest = atoms(&raw.interest, &mut diags);
    if raw.queries.is_empty() && raw.interest.is_empty() {
        diags.push(Located {
            line: 1,
            col: 1,
            message: "a request needs a `query` or an `interest` clause".into(),
        });
    }
    if !diags.is_empty() {
        return Err(ParseError { diagnostics: diags });
    }
    Ok(ConstructionRequest {
        event,
        evidence,
        queries,
        interest,
    })
}
