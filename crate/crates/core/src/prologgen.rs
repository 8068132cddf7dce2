//! Implication systems as Prolog programs, and a native solver for them.
//!
//! Each positive object becomes a rule `defect(X) :- is_high(i, X) , ...` over
//! its excesses; the query object becomes facts `is_high(i, z).`. Indices are
//! 1-based in the text and 0-based in memory.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::predicates::IncidenceVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicationSystem {
    /// Number of predicates `s`.
    pub len: usize,
    /// Ascending excess indices per positive object.
    pub rules: Vec<Vec<usize>>,
    /// Ascending excess indices of the query object.
    pub query_facts: Vec<usize>,
}

pub fn build_system(
    positives: &[IncidenceVector],
    query: &IncidenceVector,
) -> Result<ImplicationSystem> {
    for p in positives {
        if p.len() != query.len() {
            return Err(Error::DimensionMismatch {
                expected: query.len(),
                found: p.len(),
            });
        }
    }
    Ok(ImplicationSystem {
        len: query.len(),
        rules: positives.iter().map(|p| p.ones().collect()).collect(),
        query_facts: query.ones().collect(),
    })
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

/// Index of the first rule containing every query fact. A query without
/// facts is never satisfied.
pub fn solve(sys: &ImplicationSystem) -> Option<usize> {
    if sys.query_facts.is_empty() {
        return None;
    }
    sys.rules
        .iter()
        .position(|r| is_subset(&sys.query_facts, r))
}

pub fn emit_prolog(sys: &ImplicationSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "% predicates: {}  rules: {}  facts: {}",
        sys.len,
        sys.rules.len(),
        sys.query_facts.len()
    );
    for rule in &sys.rules {
        if rule.is_empty() {
            out.push_str("defect(X) :- fail.\n");
            continue;
        }
        let body: Vec<String> = rule
            .iter()
            .map(|i| format!("is_high({}, X)", i + 1))
            .collect();
        let _ = writeln!(out, "defect(X) :- {}.", body.join(" , "));
    }
    out.push('\n');
    for i in &sys.query_facts {
        let _ = writeln!(out, "is_high({}, z).", i + 1);
    }
    out.push_str("\n% ?- defect(z).\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Atom(String),
    Var(String),
    Int(usize),
    Open,
    Close,
    Comma,
    Neck,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut toks = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let code = line.split('%').next().unwrap_or("");
        let mut chars = code.char_indices().peekable();
        while let Some((_, c)) = chars.next() {
            let tok = match c {
                c if c.is_whitespace() => continue,
                '(' => Tok::Open,
                ')' => Tok::Close,
                ',' => Tok::Comma,
                '.' => Tok::End,
                ':' => match chars.next() {
                    Some((_, '-')) => Tok::Neck,
                    _ => return Err(syntax(line_no, "expected ':-'")),
                },
                c if c.is_ascii_digit() => {
                    let mut s = c.to_string();
                    while let Some(&(_, d)) = chars.peek() {
                        if !d.is_ascii_digit() {
                            break;
                        }
                        s.push(d);
                        chars.next();
                    }
                    Tok::Int(
                        s.parse()
                            .map_err(|_| syntax(line_no, "integer too large"))?,
                    )
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = c.to_string();
                    while let Some(&(_, d)) = chars.peek() {
                        if !(d.is_ascii_alphanumeric() || d == '_') {
                            break;
                        }
                        s.push(d);
                        chars.next();
                    }
                    if c.is_ascii_uppercase() || c == '_' {
                        Tok::Var(s)
                    } else {
                        Tok::Atom(s)
                    }
                }
                other => return Err(syntax(line_no, &format!("unexpected character {other:?}"))),
            };
            toks.push((tok, line_no));
        }
    }
    Ok(toks)
}

fn syntax(line: usize, msg: &str) -> Error {
    Error::Parse {
        row: line,
        col: 0,
        msg: msg.to_string(),
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(0, |t| t.1)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t.ok_or_else(|| syntax(self.line(), "unexpected end of program"))
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(syntax(
                self.line(),
                &format!("expected {want:?}, found {got:?}"),
            ))
        }
    }

    fn atom(&mut self, name: &str) -> Result<()> {
        self.expect(Tok::Atom(name.to_string()))
    }

    fn index(&mut self) -> Result<usize> {
        match self.next()? {
            Tok::Int(0) => Err(syntax(self.line(), "indices are 1-based")),
            Tok::Int(i) => Ok(i - 1),
            t => Err(syntax(
                self.line(),
                &format!("expected an index, found {t:?}"),
            )),
        }
    }

    /// `is_high(i, <arg>)` with the argument checked by `arg`.
    fn is_high(&mut self, arg: &Tok) -> Result<usize> {
        self.atom("is_high")?;
        self.expect(Tok::Open)?;
        let i = self.index()?;
        self.expect(Tok::Comma)?;
        self.expect(arg.clone())?;
        self.expect(Tok::Close)?;
        Ok(i)
    }
}

/// Reads back the clause shapes written by [`emit_prolog`].
pub fn parse_prolog(text: &str) -> Result<ImplicationSystem> {
    let declared = text.lines().find_map(|l| {
        l.trim()
            .strip_prefix("% predicates:")
            .and_then(|r| r.split_whitespace().next())
            .and_then(|n| n.parse::<usize>().ok())
    });
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut rules = Vec::new();
    let mut facts = Vec::new();
    while p.pos < p.toks.len() {
        match p.toks[p.pos].0.clone() {
            Tok::Atom(a) if a == "defect" => {
                p.next()?;
                p.expect(Tok::Open)?;
                let var = match p.next()? {
                    v @ Tok::Var(_) => v,
                    t => {
                        return Err(syntax(
                            p.line(),
                            &format!("expected a variable, found {t:?}"),
                        ))
                    }
                };
                p.expect(Tok::Close)?;
                p.expect(Tok::Neck)?;
                let mut body = Vec::new();
                if p.toks.get(p.pos).map(|t| &t.0) == Some(&Tok::Atom("fail".into())) {
                    p.next()?;
                } else {
                    body.push(p.is_high(&var)?);
                    while p.toks.get(p.pos).map(|t| &t.0) == Some(&Tok::Comma) {
                        p.next()?;
                        body.push(p.is_high(&var)?);
                    }
                }
                p.expect(Tok::End)?;
                body.sort_unstable();
                body.dedup();
                rules.push(body);
            }
            Tok::Atom(a) if a == "is_high" => {
                facts.push(p.is_high(&Tok::Atom("z".into()))?);
                p.expect(Tok::End)?;
            }
            t => return Err(syntax(p.line(), &format!("unexpected {t:?}"))),
        }
    }
    facts.sort_unstable();
    facts.dedup();
    let max = rules
        .iter()
        .flatten()
        .chain(&facts)
        .max()
        .map_or(0, |m| m + 1);
    let len = declared.unwrap_or(max);
    if max > len {
        return Err(syntax(
            0,
            &format!("index {max} exceeds declared predicate count {len}"),
        ));
    }
    Ok(ImplicationSystem {
        len,
        rules,
        query_facts: facts,
    })
}
