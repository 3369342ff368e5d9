use std::fmt::{self, Write};

use super::{Decl, SourceKB, KB_HEADER};
use crate::logic::{
    format_rational, Formula, FuncResult, Interval, NumExpr, Proportion, Sentence, Term, ValueRef,
};

const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const UNARY: u8 = 5;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) | Term::Const(n) => f.write_str(n),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                write_terms(f, args)?;
                f.write_str(")")
            }
        }
    }
}

fn write_terms(out: &mut dyn Write, args: &[Term]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        write!(out, "{a}")?;
    }
    Ok(())
}

fn write_formula(out: &mut dyn Write, f: &Formula, ctx: u8, no_or: bool) -> fmt::Result {
    let wrap = match f {
        Formula::Iff(..) => ctx > IFF,
        Formula::Implies(..) => ctx > IMPLIES,
        Formula::Or(..) => ctx > OR || no_or,
        Formula::And(..) => ctx > AND,
        Formula::ForAll(..) | Formula::Exists(..) => ctx > 0,
        _ => false,
    };
    if wrap {
        out.write_str("(")?;
        write_formula(out, f, 0, false)?;
        return out.write_str(")");
    }
    let binary =
        |out: &mut dyn Write, a: &Formula, op: &str, b: &Formula, lp: u8, rp: u8| -> fmt::Result {
            write_formula(out, a, lp, no_or)?;
            write!(out, " {op} ")?;
            write_formula(out, b, rp, no_or)
        };
    match f {
        Formula::Pred(p, args) => {
            out.write_str(p)?;
            if !args.is_empty() {
                out.write_str("(")?;
                write_terms(out, args)?;
                out.write_str(")")?;
            }
            Ok(())
        }
        Formula::Value(func, args, v) => {
            out.write_str(func)?;
            if !args.is_empty() {
                out.write_str("(")?;
                write_terms(out, args)?;
                out.write_str(")")?;
            }
            let name = match v {
                ValueRef::Const(n) | ValueRef::Var(n) => n,
            };
            write!(out, " = {name}")
        }
        Formula::Not(a) => {
            out.write_str("~")?;
            write_formula(out, a, UNARY, no_or)
        }
        Formula::Iff(a, b) => binary(out, a, "<->", b, IFF, IMPLIES),
        Formula::Implies(a, b) => binary(out, a, "->", b, OR, IMPLIES),
        Formula::Or(a, b) => binary(out, a, "|", b, OR, AND),
        Formula::And(a, b) => binary(out, a, "&", b, AND, UNARY),
        Formula::ForAll(vars, body) | Formula::Exists(vars, body) => {
            let q = if matches!(f, Formula::ForAll(..)) {
                "all"
            } else {
                "ex"
            };
            write!(out, "{q} {}. ", vars.join(", "))?;
            write_formula(out, body, 0, no_or)
        }
        Formula::Compare(a, c, b) => {
            write_num(out, a, 0)?;
            write!(out, " {} ", c.symbol())?;
            write_num(out, b, 0)
        }
        Formula::InInterval(a, i) => {
            write_num(out, a, 0)?;
            write!(out, " in {i}")
        }
    }
}

fn write_num(out: &mut dyn Write, e: &NumExpr, ctx: u8) -> fmt::Result {
    match e {
        NumExpr::Lit(r) => out.write_str(&format_rational(r)),
        NumExpr::Prop(p) => write!(out, "{p}"),
        NumExpr::Add(a, b) | NumExpr::Mul(a, b) => {
            let (prec, op) = if matches!(e, NumExpr::Add(..)) {
                (1, "+")
            } else {
                (2, "*")
            };
            if ctx > prec {
                out.write_str("(")?;
            }
            write_num(out, a, prec)?;
            write!(out, " {op} ")?;
            write_num(out, b, prec + 1)?;
            if ctx > prec {
                out.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        write_formula(f, &self.body, 0, true)?;
        if let Some(c) = &self.condition {
            f.write_str(" | ")?;
            write_formula(f, c, 0, false)?;
        }
        write!(f, "]_{{{}}}", self.vars.join(", "))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { "(" } else { "[" },
            format_rational(&self.lo),
            format_rational(&self.hi),
            if self.hi_open { ")" } else { "]" }
        )
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_num(f, self, 0)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 0, false)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.formula)
    }
}

fn decl_line(d: &Decl) -> String {
    match d {
        Decl::Sort(s) => format!("sort {s};"),
        Decl::Pred(p, args) if args.is_empty() => format!("pred {p};"),
        Decl::Pred(p, args) => format!("pred {p}({});", args.join(", ")),
        Decl::Func(name, args, result) => {
            let args = if args.is_empty() {
                String::new()
            } else {
                format!("({})", args.join(", "))
            };
            let result = match result {
                FuncResult::Values(v) => format!("{{{}}}", v.join(", ")),
                FuncResult::Sort(s) => s.clone(),
            };
            format!("func {name}{args} -> {result};")
        }
        Decl::Const(c, Some(s)) => format!("const {c} : {s};"),
        Decl::Const(c, None) => format!("const {c};"),
    }
}

/// Renders a knowledge base in the `.kb` syntax. Parsing the output yields a
/// structurally identical `SourceKB`.
pub fn pretty_print(kb: &SourceKB) -> String {
    let mut out = String::new();
    out.push_str(KB_HEADER);
    out.push('\n');
    for d in &kb.decls {
        out.push_str(&decl_line(d));
        out.push('\n');
    }
    if !kb.decls.is_empty() && !kb.statements.is_empty() {
        out.push('\n');
    }
    for st in &kb.statements {
        if let Some(l) = &st.label {
            let _ = write!(out, "@{l}: ");
        }
        let _ = writeln!(out, "{} {}.", st.kind.keyword(), st.sentence.formula);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_kb;
    use super::*;

    #[test]
    fn ground_fact_round_trip() {
        let text = "pred LivesNear(Thing, Thing);\nconst MyHouse; const Watson;\nfact LivesNear(MyHouse, Watson).";
        let kb = parse_kb(text).unwrap();
        let printed = pretty_print(&kb);
        assert_eq!(parse_kb(&printed).unwrap(), kb);
        assert!(printed.starts_with("kbmc-kb 1\n"));
        assert!(printed.contains("fact LivesNear(MyHouse, Watson)."));
    }

    #[test]
    fn nested_operators_print_minimal_parens() {
        let text = "pred A; pred B; pred C;\naxiom (A | B) & ~(A -> C) | (all x. A).";
        let kb = parse_kb(text).unwrap();
        let printed = pretty_print(&kb);
        assert!(
            printed.contains("axiom (A | B) & ~(A -> C) | (all x. A)."),
            "{printed}"
        );
        assert_eq!(parse_kb(&printed).unwrap(), kb);
    }

    #[test]
    fn disjunction_inside_proportion_body_is_parenthesized() {
        let text = "pred A(Thing); pred B(Thing); pred C(Thing);\nstat [A(x) -> B(x) | C(x) | A(x)]_{x} = 1/3.";
        let kb = parse_kb(text).unwrap();
        let printed = pretty_print(&kb);
        assert!(
            printed.contains("[A(x) -> B(x) | C(x) | A(x)]_{x} = 1/3"),
            "{printed}"
        );
        let Formula::Compare(NumExpr::Prop(p), ..) = &kb.statements[0].sentence.formula else {
            panic!()
        };
        let mut body = String::new();
        write_formula(
            &mut body,
            &Formula::or(*p.body.clone(), Formula::pred("A", vec![])),
            0,
            true,
        )
        .unwrap();
        assert!(body.starts_with('('));
    }
}
