use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Label(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Label(s) => write!(f, "label `@{s}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

// longest first
const PUNCT: &[&str] = &[
    "<->", "->", "<=", ">=", "(", ")", "[", "]", "{", "}", ",", ";", ".", ":", "|", "&", "~", "=",
    "<", ">", "+", "*", "_",
];

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn next_is_digit(chars: &[(usize, char)], i: usize) -> bool {
    chars.get(i + 1).is_some_and(|p| p.1.is_ascii_digit())
}

// `.49` is a number unless the dot can end a quantifier prefix or a statement
fn leading_dot_ok(prev: &[Token]) -> bool {
    !matches!(
        prev.last().map(|t| &t.tok),
        Some(Tok::Ident(_))
            | Some(Tok::Number(_))
            | Some(Tok::Punct(")"))
            | Some(Tok::Punct("]"))
            | Some(Tok::Punct("}"))
    )
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);
    let byte_at = |i: usize| chars.get(i).map(|(b, _)| *b).unwrap_or(src.len());

    while i < chars.len() {
        let c = chars[i].1;
        let pos = Pos {
            line,
            col,
            offset: byte_at(i),
        };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1).map(|p| p.1) == Some('/') {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if is_ident_start(c) {
            while i < chars.len() && is_ident_char(chars[i].1) {
                i += 1;
            }
            Tok::Ident(src[byte_at(start)..byte_at(i)].to_string())
        } else if c == '@' {
            i += 1;
            if i >= chars.len() || !is_ident_start(chars[i].1) {
                return Err(LexError {
                    pos,
                    message: "expected a label name after `@`".into(),
                });
            }
            while i < chars.len() && is_ident_char(chars[i].1) {
                i += 1;
            }
            Tok::Label(src[byte_at(start + 1)..byte_at(i)].to_string())
        } else if c.is_ascii_digit()
            || (c == '.' && leading_dot_ok(&out) && next_is_digit(&chars, i))
        {
            if c == '.' {
                i += 1;
            }
            let digits = |i: &mut usize| {
                while *i < chars.len() && chars[*i].1.is_ascii_digit() {
                    *i += 1;
                }
            };
            digits(&mut i);
            if i + 1 < chars.len() && chars[i].1 == '.' && chars[i + 1].1.is_ascii_digit() {
                i += 1;
                digits(&mut i);
            }
            if i + 1 < chars.len() && chars[i].1 == '/' && chars[i + 1].1.is_ascii_digit() {
                i += 1;
                digits(&mut i);
            }
            Tok::Number(src[byte_at(start)..byte_at(i)].to_string())
        } else {
            let rest = &src[byte_at(i)..];
            let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
                return Err(LexError {
                    pos,
                    message: format!("unexpected character `{c}`"),
                });
            };
            i += p.chars().count();
            Tok::Punct(p)
        };
        col += i - start;
        out.push(Token {
            tok,
            pos,
            end: byte_at(i),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos {
            line,
            col,
            offset: src.len(),
        },
        end: src.len(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_numbers() {
        assert_eq!(
            toks("a <-> b -> 0.45 1/3 .5"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("<->"),
                Tok::Ident("b".into()),
                Tok::Punct("->"),
                Tok::Number("0.45".into()),
                Tok::Number("1/3".into()),
                Tok::Punct("."),
                Tok::Number("5".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn sentence_terminator_after_number() {
        assert_eq!(
            toks("= 3."),
            vec![
                Tok::Punct("="),
                Tok::Number("3".into()),
                Tok::Punct("."),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// hi\n  @lbl: x").unwrap();
        assert_eq!(t[0].tok, Tok::Label("lbl".into()));
        assert_eq!((t[0].pos.line, t[0].pos.col), (2, 3));
        assert_eq!((t[2].pos.line, t[2].pos.col), (2, 9));
    }

    #[test]
    fn leading_dot_decimals() {
        assert_eq!(
            toks("(.49, .51)"),
            vec![
                Tok::Punct("("),
                Tok::Number(".49".into()),
                Tok::Punct(","),
                Tok::Number(".51".into()),
                Tok::Punct(")"),
                Tok::Eof
            ]
        );
        assert_eq!(toks("x.5")[1], Tok::Punct("."));
    }

    #[test]
    fn bad_character() {
        let e = tokenize("a\n $").unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (2, 2));
    }
}
