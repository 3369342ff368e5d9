//! The `.bn` text format and DOT export.
//!
//! ```text
//! kbmc-bn 1
//! node AlarmSound(E002,MyHouse) : true false
//! parents Burglary(E002,MyHouse)
//! row true : 3/4 1/4
//! row false : 0/1 1/1
//! end
//! ```
//!
//! Rows may appear in any order but each parent configuration exactly once.
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{configurations, BayesNet, BnError, Node};
use crate::logic::{parse_rational, Rational};

pub const BN_HEADER: &str = "kbmc-bn 1";

pub(crate) fn exact(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn token_ok(s: &str) -> bool {
    !s.is_empty() && s != ":" && !s.contains('#') && !s.chars().any(char::is_whitespace)
}

pub fn to_text(net: &BayesNet) -> Result<String, BnError> {
    let mut out = String::new();
    out.push_str(BN_HEADER);
    out.push('\n');
    for n in net.nodes() {
        for t in std::iter::once(&n.name).chain(&n.range) {
            if !token_ok(t) {
                return Err(BnError::BadCpt {
                    node: n.name.clone(),
                    message: format!("`{t}` cannot be written as a token"),
                });
            }
        }
        let _ = writeln!(out, "node {} : {}", n.name, n.range.join(" "));
        if !n.parents.is_empty() {
            let ps: Vec<&str> = n
                .parents
                .iter()
                .map(|&p| net.nodes()[p].name.as_str())
                .collect();
            let _ = writeln!(out, "parents {}", ps.join(" "));
        }
        let cards: Vec<usize> = n
            .parents
            .iter()
            .map(|&p| net.nodes()[p].range.len())
            .collect();
        for (config, row) in configurations(&cards).iter().zip(&n.cpt) {
            let vals: Vec<&str> = config
                .iter()
                .zip(&n.parents)
                .map(|(&k, &p)| net.nodes()[p].range[k].as_str())
                .collect();
            let probs: Vec<String> = row.iter().map(exact).collect();
            let head = if vals.is_empty() {
                "row".to_string()
            } else {
                format!("row {}", vals.join(" "))
            };
            let _ = writeln!(out, "{head} : {}", probs.join(" "));
        }
        out.push_str("end\n");
    }
    Ok(out)
}

struct Block {
    line: usize,
    name: String,
    range: Vec<String>,
    parents: Vec<String>,
    rows: Vec<(usize, Vec<String>, Vec<Rational>)>,
}

pub fn from_text(text: &str) -> Result<BayesNet, BnError> {
    let err = |line: usize, message: String| BnError::Syntax { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h == BN_HEADER => {}
        Some((n, h)) if h.starts_with("kbmc-bn") => {
            return Err(err(n, format!("unsupported header `{h}`")))
        }
        Some((n, _)) => return Err(err(n, format!("expected `{BN_HEADER}`"))),
        None => return Err(err(1, format!("expected `{BN_HEADER}`"))),
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut open: Option<Block> = None;
    for (n, line) in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match (words[0], open.as_mut()) {
            ("node", None) => {
                let colon = words.iter().position(|w| *w == ":");
                let (Some(c), true) = (colon, words.len() >= 4) else {
                    return Err(err(n, "expected `node NAME : VALUE..`".into()));
                };
                if c != 2 {
                    return Err(err(n, "expected `node NAME : VALUE..`".into()));
                }
                open = Some(Block {
                    line: n,
                    name: words[1].to_string(),
                    range: words[3..].iter().map(|s| s.to_string()).collect(),
                    parents: Vec::new(),
                    rows: Vec::new(),
                });
            }
            ("parents", Some(b)) if b.rows.is_empty() && b.parents.is_empty() => {
                b.parents = words[1..].iter().map(|s| s.to_string()).collect();
            }
            ("row", Some(b)) => {
                let Some(c) = words.iter().position(|w| *w == ":") else {
                    return Err(err(n, "expected `row VALUE.. : PROB..`".into()));
                };
                let probs = words[c + 1..]
                    .iter()
                    .map(|w| {
                        parse_rational(w)
                            .ok_or_else(|| err(n, format!("`{w}` is not a rational number")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                b.rows.push((
                    n,
                    words[1..c].iter().map(|s| s.to_string()).collect(),
                    probs,
                ));
            }
            ("end", Some(_)) => blocks.push(open.take().unwrap()),
            (w, _) => return Err(err(n, format!("unexpected `{w}`"))),
        }
    }
    if let Some(b) = open {
        return Err(err(b.line, format!("node `{}` is missing `end`", b.name)));
    }
    let index: BTreeMap<&str, usize> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name.as_str(), i))
        .collect();
    let mut nodes = Vec::new();
    for b in &blocks {
        let parents = b
            .parents
            .iter()
            .map(|p| {
                index
                    .get(p.as_str())
                    .copied()
                    .ok_or_else(|| err(b.line, format!("unknown parent `{p}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let pranges: Vec<&Vec<String>> = parents.iter().map(|&p| &blocks[p].range).collect();
        let cards: Vec<usize> = pranges.iter().map(|r| r.len()).collect();
        let mut cpt: Vec<Option<Vec<Rational>>> = vec![None; cards.iter().product()];
        for (line, vals, probs) in &b.rows {
            if vals.len() != parents.len() {
                return Err(err(
                    *line,
                    format!("expected {} parent value(s)", parents.len()),
                ));
            }
            let mut off = 0;
            for ((v, r), c) in vals.iter().zip(&pranges).zip(&cards) {
                let k = r
                    .iter()
                    .position(|x| x == v)
                    .ok_or_else(|| err(*line, format!("unknown parent value `{v}`")))?;
                off = off * c + k;
            }
            if cpt[off].replace(probs.clone()).is_some() {
                return Err(err(*line, "duplicate row".into()));
            }
        }
        let cpt = cpt
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| err(b.line, format!("node `{}` is missing a row", b.name)))?;
        nodes.push(Node {
            name: b.name.clone(),
            range: b.range.clone(),
            parents,
            cpt,
        });
    }
    BayesNet::from_nodes(nodes)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn to_dot(net: &BayesNet) -> String {
    let mut out = String::from("digraph bn {\n");
    for n in net.nodes() {
        let _ = writeln!(out, "  {};", quote(&n.name));
    }
    for (p, c) in net.edge_names() {
        let _ = writeln!(out, "  {} -> {};", quote(&p), quote(&c));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::holmes;
    use super::*;

    #[test]
    fn text_round_trip() {
        let net = holmes();
        let text = to_text(&net).unwrap();
        assert!(text.contains("row true : 3/4 1/4"));
        assert_eq!(from_text(&text).unwrap(), net);
    }

    #[test]
    fn rows_in_any_order_and_comments() {
        let text = "kbmc-bn 1\n# prior\nnode A : t f\nrow : 1/3 2/3\nend\nnode B : t f\nparents A\nrow f : 0 1\nrow t : 0.5 0.5 # coin\nend\n";
        let net = from_text(text).unwrap();
        assert_eq!(net.nodes()[1].cpt[1][0], crate::logic::rational(0, 1));
    }

    #[test]
    fn syntax_errors_have_lines() {
        let missing = "kbmc-bn 1\nnode A : t f\nparents B\nrow : 1 0\nend\n";
        assert!(matches!(
            from_text(missing),
            Err(BnError::Syntax { line: 2, .. })
        ));
        let dup = "kbmc-bn 1\nnode A : t f\nrow : 1 0\nrow : 1 0\nend\n";
        assert!(matches!(
            from_text(dup),
            Err(BnError::Syntax { line: 4, .. })
        ));
        assert!(matches!(
            from_text("kbmc-bn 2\n"),
            Err(BnError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn dot_lists_edges() {
        let dot = to_dot(&holmes());
        assert!(dot.contains("\"Burglary\" -> \"AlarmSound\";"));
        assert!(dot.starts_with("digraph"));
    }
}
