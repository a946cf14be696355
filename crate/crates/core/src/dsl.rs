//! A small rule language for fuzzy rule groups.
//!
//! ```text
//! # moving-average crossover
//! GROUP crossover {
//!     WIDTH 0.01;
//!     GUARD x2 > 0 OR x3 < 0;
//!     IF x1 IS PS THEN ed IS BS;
//!     IF x4 IS NS AND x9 IS N THEN ed IS SM;
//! }
//! ```
//!
//! Grammar:
//!
//! ```text
//! block  := "GROUP" ident "{" ("WIDTH" number ";")? ("GUARD" guard ";")? rule+ "}"
//! rule   := "IF" cond ("AND" cond)* "THEN" "ed" "IS" action ";"
//! cond   := feature "IS" term
//! guard  := pred (("OR" | "AND") pred)*      AND binds tighter than OR
//! pred   := feature ("<" | ">") number
//! ```
//!
//! Features are `x1`..`x10`; terms are `PS PM PL NS NM NL AZ` plus the
//! aggregates `P` and `N`; actions are `BS BM BB SS SM SB N`. Keywords are
//! uppercase and case-sensitive. `#` starts a line comment.
//!
//! Conjunction is the product of memberships. Rules are combined by
//! center-average.

use std::fmt;

use crate::fuzzy::{
    center_average_detail, Action, ConsequentCenters, Firing, Sign, Term, TermFamily,
};
use crate::indicators::{Feature, FeatureVector};
use crate::rules::ExcessDemand;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A problem found in rule source, positioned at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermRef {
    Term(Term),
    Aggregate(Sign),
}

impl TermRef {
    fn parse(s: &str) -> Option<TermRef> {
        match s {
            "P" => Some(TermRef::Aggregate(Sign::Positive)),
            "N" => Some(TermRef::Aggregate(Sign::Negative)),
            _ => s.parse().ok().map(TermRef::Term),
        }
    }

    fn membership(self, family: &TermFamily, x: f64) -> f64 {
        match self {
            TermRef::Term(t) => family.mu(t, x),
            TermRef::Aggregate(s) => family.mu_aggregate(s, x),
        }
    }
}

impl fmt::Display for TermRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermRef::Term(t) => t.fmt(f),
            TermRef::Aggregate(Sign::Positive) => f.write_str("P"),
            TermRef::Aggregate(Sign::Negative) => f.write_str("N"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antecedent {
    pub feature: Feature,
    pub term: TermRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub antecedents: Vec<Antecedent>,
    pub consequent: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predicate {
    pub feature: Feature,
    pub cmp: Cmp,
    pub value: f64,
}

impl Predicate {
    /// False when the feature is absent.
    pub fn holds(&self, fv: &FeatureVector) -> bool {
        match (fv.get(self.feature), self.cmp) {
            (Some(x), Cmp::Lt) => x < self.value,
            (Some(x), Cmp::Gt) => x > self.value,
            (None, _) => false,
        }
    }
}

/// Disjunction of conjunctions of predicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub any_of: Vec<Vec<Predicate>>,
}

impl Guard {
    pub fn holds(&self, fv: &FeatureVector) -> bool {
        self.any_of
            .iter()
            .any(|conj| conj.iter().all(|p| p.holds(fv)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleBlock {
    pub name: String,
    pub width: Option<f64>,
    pub guard: Option<Guard>,
    pub rules: Vec<Rule>,
}

impl RuleBlock {
    /// Features referenced by any rule antecedent, sorted and deduplicated.
    pub fn features(&self) -> Vec<Feature> {
        let mut fs: Vec<Feature> = self
            .rules
            .iter()
            .flat_map(|r| r.antecedents.iter().map(|a| a.feature))
            .collect();
        fs.sort();
        fs.dedup();
        fs
    }

    pub fn compile(&self, family: TermFamily, centers: ConsequentCenters) -> CompiledBlock {
        let family = self
            .width
            .and_then(|w| TermFamily::new(w).ok())
            .unwrap_or(family);
        CompiledBlock {
            block: self.clone(),
            family,
            centers,
        }
    }
}

impl fmt::Display for RuleBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GROUP {} {{", self.name)?;
        if let Some(w) = self.width {
            writeln!(f, "    WIDTH {w:?};")?;
        }
        if let Some(g) = &self.guard {
            let disj: Vec<String> = g
                .any_of
                .iter()
                .map(|conj| {
                    conj.iter()
                        .map(|p| {
                            let op = match p.cmp {
                                Cmp::Lt => "<",
                                Cmp::Gt => ">",
                            };
                            format!("{} {op} {:?}", p.feature, p.value)
                        })
                        .collect::<Vec<_>>()
                        .join(" AND ")
                })
                .collect();
            writeln!(f, "    GUARD {};", disj.join(" OR "))?;
        }
        for r in &self.rules {
            let conds: Vec<String> = r
                .antecedents
                .iter()
                .map(|a| format!("{} IS {}", a.feature, a.term))
                .collect();
            writeln!(
                f,
                "    IF {} THEN ed IS {};",
                conds.join(" AND "),
                r.consequent
            )?;
        }
        writeln!(f, "}}")
    }
}

/// A rule block bound to a term family and consequent centers.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledBlock {
    block: RuleBlock,
    family: TermFamily,
    centers: ConsequentCenters,
}

impl CompiledBlock {
    pub fn block(&self) -> &RuleBlock {
        &self.block
    }

    pub fn family(&self) -> &TermFamily {
        &self.family
    }

    pub fn evaluate(&self, fv: &FeatureVector) -> ExcessDemand {
        if let Some(g) = &self.block.guard {
            if !g.holds(fv) {
                return ExcessDemand::INACTIVE;
            }
        }
        let firings: Vec<Firing> = self
            .block
            .rules
            .iter()
            .map(|r| {
                let degree = r.antecedents.iter().fold(1.0, |acc, a| {
                    acc * fv
                        .get(a.feature)
                        .map_or(0.0, |x| a.term.membership(&self.family, x))
                });
                Firing::new(degree, self.centers.get(r.consequent))
            })
            .collect();
        let inf = center_average_detail(&firings);
        if inf.fired() {
            ExcessDemand::active(inf.value)
        } else {
            ExcessDemand::INACTIVE
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    LBrace,
    RBrace,
    Semi,
    Lt,
    Gt,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
                    line: &mut usize,
                    column: &mut usize| {
            let c = chars.next();
            if c == Some('\n') {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars, &mut line, &mut column);
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars, &mut line, &mut column);
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump(&mut chars, &mut line, &mut column);
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Word(s),
                line: tl,
                column: tc,
            });
        } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            let mut s = String::new();
            let mut prev = '\0';
            while let Some(&c) = chars.peek() {
                let sign_ok =
                    (c == '-' || c == '+') && (s.is_empty() || prev == 'e' || prev == 'E');
                if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || sign_ok {
                    s.push(c);
                    prev = c;
                    bump(&mut chars, &mut line, &mut column);
                } else {
                    break;
                }
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(Token {
                    tok: Tok::Number(v),
                    line: tl,
                    column: tc,
                }),
                _ => diags.push(Diagnostic {
                    line: tl,
                    column: tc,
                    message: format!("malformed number `{s}`"),
                    severity: Severity::Error,
                }),
            }
        } else {
            let tok = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                ';' => Some(Tok::Semi),
                '<' => Some(Tok::Lt),
                '>' => Some(Tok::Gt),
                _ => None,
            };
            bump(&mut chars, &mut line, &mut column);
            match tok {
                Some(tok) => out.push(Token {
                    tok,
                    line: tl,
                    column: tc,
                }),
                None => diags.push(Diagnostic {
                    line: tl,
                    column: tc,
                    message: format!("unexpected character `{}`", c.escape_default()),
                    severity: Severity::Error,
                }),
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    out
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = std::result::Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(s) if s == w)
    }

    fn error_at(&mut self, tok: &Token, message: String) {
        self.diags.push(Diagnostic {
            line: tok.line,
            column: tok.column,
            message,
            severity: Severity::Error,
        });
    }

    fn expected(&mut self, what: &str) {
        let tok = self.peek().clone();
        self.error_at(&tok, format!("expected {what}, found {}", tok.tok));
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.at_word(w) {
            self.advance();
            Ok(())
        } else {
            self.expected(&format!("`{w}`"));
            Err(())
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.peek().tok == tok {
            self.advance();
            Ok(())
        } else {
            self.expected(&tok.to_string());
            Err(())
        }
    }

    fn word(&mut self, what: &str) -> PResult<(String, Token)> {
        let tok = self.peek().clone();
        if let Tok::Word(s) = &tok.tok {
            self.advance();
            Ok((s.clone(), tok))
        } else {
            self.expected(what);
            Err(())
        }
    }

    fn number(&mut self) -> PResult<f64> {
        if let Tok::Number(v) = self.peek().tok {
            self.advance();
            Ok(v)
        } else {
            self.expected("a number");
            Err(())
        }
    }

    fn feature(&mut self) -> PResult<Feature> {
        let (s, tok) = self.word("a feature `x1`..`x10`")?;
        s.parse().map_err(|_| {
            self.error_at(&tok, format!("unknown feature {s}"));
        })
    }

    /// Skip to just past the next `;`, or up to a `}` / end of input.
    fn recover(&mut self) {
        loop {
            match self.peek().tok {
                Tok::Semi => {
                    self.advance();
                    return;
                }
                Tok::RBrace | Tok::Eof => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn block(&mut self) -> Option<RuleBlock> {
        let mut name = String::from("unnamed");
        let mut braced = false;
        if self.at_word("GROUP") {
            self.advance();
            if let Ok((n, _)) = self.word("a group name") {
                name = n;
            }
            if self.expect(Tok::LBrace).is_ok() {
                braced = true;
            }
        } else {
            // keep going so later rules still get checked
            self.expected("`GROUP`");
        }

        let mut width = None;
        let mut guard = None;
        let mut rules = Vec::new();
        let mut attempted = false;
        loop {
            match &self.peek().tok {
                Tok::RBrace | Tok::Eof => break,
                Tok::Word(w) if w == "WIDTH" => {
                    let tok = self.advance();
                    match self
                        .number()
                        .and_then(|v| self.expect(Tok::Semi).map(|_| v))
                    {
                        Ok(v) if v > 0.0 => width = Some(v),
                        Ok(v) => self.error_at(&tok, format!("WIDTH must be positive, got {v}")),
                        Err(()) => self.recover(),
                    }
                }
                Tok::Word(w) if w == "GUARD" => {
                    self.advance();
                    match self.guard().and_then(|g| self.expect(Tok::Semi).map(|_| g)) {
                        Ok(g) => guard = Some(g),
                        Err(()) => self.recover(),
                    }
                }
                Tok::Word(w) if w == "IF" => {
                    attempted = true;
                    match self.rule() {
                        Ok(r) => rules.push(r),
                        Err(()) => self.recover(),
                    }
                }
                _ => {
                    self.expected("`IF`, `GUARD`, `WIDTH` or `}`");
                    self.advance();
                    self.recover();
                }
            }
        }

        let close = self.peek().clone();
        if braced {
            if close.tok == Tok::RBrace {
                self.advance();
            } else {
                self.error_at(&close, "unclosed group, expected `}`".into());
            }
        }
        if rules.is_empty() && !attempted {
            self.error_at(&close, format!("group {name} has no rules"));
        }
        Some(RuleBlock {
            name,
            width,
            guard,
            rules,
        })
    }

    fn guard(&mut self) -> PResult<Guard> {
        let mut any_of = vec![vec![self.predicate()?]];
        loop {
            if self.at_word("OR") {
                self.advance();
                any_of.push(vec![self.predicate()?]);
            } else if self.at_word("AND") {
                self.advance();
                let p = self.predicate()?;
                any_of.last_mut().expect("nonempty").push(p);
            } else {
                return Ok(Guard { any_of });
            }
        }
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        let feature = self.feature()?;
        let cmp = match self.peek().tok {
            Tok::Lt => Cmp::Lt,
            Tok::Gt => Cmp::Gt,
            _ => {
                self.expected("`<` or `>`");
                return Err(());
            }
        };
        self.advance();
        let value = self.number()?;
        Ok(Predicate {
            feature,
            cmp,
            value,
        })
    }

    fn rule(&mut self) -> PResult<Rule> {
        self.expect_word("IF")?;
        let mut antecedents = vec![self.cond()?];
        while self.at_word("AND") {
            self.advance();
            antecedents.push(self.cond()?);
        }
        self.expect_word("THEN")?;
        self.expect_word("ed")?;
        self.expect_word("IS")?;
        let (s, tok) = self.word("an action")?;
        let consequent = match s.parse::<Action>() {
            Ok(a) => a,
            Err(_) => {
                self.error_at(&tok, format!("unknown action {s}"));
                return Err(());
            }
        };
        self.expect(Tok::Semi)?;
        Ok(Rule {
            antecedents,
            consequent,
        })
    }

    fn cond(&mut self) -> PResult<Antecedent> {
        let feature = self.feature();
        self.expect_word("IS")?;
        let (s, tok) = self.word("a term")?;
        let term = TermRef::parse(&s).ok_or_else(|| {
            self.error_at(&tok, format!("unknown term {s}"));
        });
        Ok(Antecedent {
            feature: feature?,
            term: term?,
        })
    }
}

fn parse_blocks(source: &str) -> (Vec<RuleBlock>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let toks = lex(source, &mut diags);
    let mut p = Parser {
        toks,
        pos: 0,
        diags,
    };
    let mut blocks = Vec::new();
    while p.peek().tok != Tok::Eof {
        let before = p.pos;
        if let Some(b) = p.block() {
            blocks.push(b);
        }
        if p.pos == before {
            // stray `}` or similar at top level
            let tok = p.advance();
            p.error_at(&tok, format!("unexpected {}", tok.tok));
        }
    }
    if blocks.is_empty() && p.diags.is_empty() {
        let tok = p.peek().clone();
        p.error_at(&tok, "no rule group found".into());
    }
    p.diags.sort_by_key(|d| (d.line, d.column));
    (blocks, p.diags)
}

/// Parse a file holding one or more rule groups.
pub fn parse_rule_file(source: &str) -> Result<Vec<RuleBlock>, Vec<Diagnostic>> {
    let (blocks, diags) = parse_blocks(source);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        Err(diags)
    } else {
        Ok(blocks)
    }
}

/// Parse exactly one rule group.
pub fn parse_rule_block(source: &str) -> Result<RuleBlock, Vec<Diagnostic>> {
    let mut blocks = parse_rule_file(source)?;
    if blocks.len() != 1 {
        return Err(vec![Diagnostic {
            line: 1,
            column: 1,
            message: format!("expected exactly one rule group, found {}", blocks.len()),
            severity: Severity::Error,
        }]);
    }
    Ok(blocks.remove(0))
}

/// Transliterations of the stateless built-in rule groups.
pub mod library {
    use super::{parse_rule_block, RuleBlock};
    use crate::rules::BuiltinGroup;

    pub const ED1: &str = include_str!("../rules/ed1.frg");
    pub const ED2: &str = include_str!("../rules/ed2.frg");
    pub const ED3: &str = include_str!("../rules/ed3.frg");
    pub const ED4: &str = include_str!("../rules/ed4.frg");
    pub const ED5: &str = include_str!("../rules/ed5.frg");
    pub const ED6: &str = include_str!("../rules/ed6.frg");
    pub const ED7: &str = include_str!("../rules/ed7.frg");
    pub const ED9: &str = include_str!("../rules/ed9.frg");
    pub const ED11: &str = include_str!("../rules/ed11.frg");
    pub const ED12: &str = include_str!("../rules/ed12.frg");

    /// Rule source for a built-in group. The manipulator (`ed8`) switches
    /// between the `ed7` and `ed6` tables by phase, and the stop rules
    /// (`ed10`) need portfolio state, so neither has a source of its own.
    pub fn source(group: BuiltinGroup) -> Option<&'static str> {
        Some(match group {
            BuiltinGroup::Ed1 => ED1,
            BuiltinGroup::Ed2 => ED2,
            BuiltinGroup::Ed3 => ED3,
            BuiltinGroup::Ed4 => ED4,
            BuiltinGroup::Ed5 => ED5,
            BuiltinGroup::Ed6 => ED6,
            BuiltinGroup::Ed7 => ED7,
            BuiltinGroup::Ed9 => ED9,
            BuiltinGroup::Ed11 => ED11,
            BuiltinGroup::Ed12 => ED12,
            BuiltinGroup::Ed8 | BuiltinGroup::Ed10 => return None,
        })
    }

    pub fn block(group: BuiltinGroup) -> Option<RuleBlock> {
        source(group).map(|s| parse_rule_block(s).expect("bundled rule files parse"))
    }
}
