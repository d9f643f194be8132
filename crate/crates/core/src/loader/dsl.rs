//! Line-oriented rule language.
//!
//! ```text
//! # comment
//! init outlet.switch := on
//! rule r5: when insideTemp > 25C then outlet.switch := off
//! rule r1: when presence = present if mode = Home @trigger then iron.switch := on after 10m
//! rule f1: when co2 > 1000ppm then fan.switch := on for 15m then fan.switch := off
//! ```
//!
//! Durations take `s`, `m`/`min`, `h`, or `d` suffixes and are converted to
//! whole steps (rounded up); a bare number is already a step count. Units
//! after comparison constants (`25C`, `38%`) are ignored.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LoadError;
use crate::ir::{
    Assignment, Atom, CmpOp, Literal, Operand, PredExpr, Predicate, Rule, RuleOrigin, Span,
    TimerVar, Trigger,
};

pub const DEFAULT_STEP_SECONDS: u32 = 60;

const KEYWORDS: &[&str] = &["rule", "init", "when", "if", "then", "after", "for"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitAssign {
    pub target: String,
    pub value: Operand,
    pub span: Option<Span>,
}

/// Parsed rule document. Names are still unresolved; see [`super::bind`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub init: Vec<InitAssign>,
    pub timers: Vec<TimerVar>,
}

impl RuleSet {
    /// Copy with all source locations removed, for structural comparison.
    pub fn without_spans(&self) -> RuleSet {
        let mut out = self.clone();
        out.rules.iter_mut().for_each(|r| r.span = None);
        out.init.iter_mut().for_each(|i| i.span = None);
        out
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.init {
            writeln!(f, "init {} := {}", i.target, i.value)?;
        }
        for r in &self.rules {
            write!(f, "rule {}: when ", r.id)?;
            match &r.trigger {
                Trigger::Pred(p) => write!(f, "{p}")?,
                Trigger::Timeout(t) => write!(f, "{t} = 0")?,
            }
            for c in &r.trigger_conditions {
                write!(f, " if {c} @trigger")?;
            }
            for c in &r.action_conditions {
                write!(f, " if {c}")?;
            }
            f.write_str(" then ")?;
            for (k, a) in r.actions.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{} := {}", a.target, a.value)?;
                if let Some(ext) = &a.extended {
                    write!(f, " for {}", ext.duration)?;
                    if let crate::ir::AssignValue::Operand(v) = &ext.terminal.value {
                        write!(f, " then {} := {}", ext.terminal.target, v)?;
                    }
                }
            }
            if r.latency > 0 {
                write!(f, " after {}", r.latency)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn parse_rules(text: &str) -> Result<RuleSet, LoadError> {
    parse_rules_with(text, DEFAULT_STEP_SECONDS)
}

pub fn parse_rules_with(text: &str, step_seconds: u32) -> Result<RuleSet, LoadError> {
    let mut out = RuleSet::default();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = lex(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut p = Parser {
            toks: tokens,
            pos: 0,
            line: line_no,
            eol: raw.chars().count() + 1,
            step_seconds: step_seconds.max(1),
        };
        match p.peek_ident() {
            Some("rule") => {
                let rule = p.rule()?;
                if !seen.insert(rule.id.clone()) {
                    return Err(LoadError::DuplicateRule {
                        id: rule.id,
                        span: rule.span.unwrap(),
                    });
                }
                out.rules.push(rule);
            }
            Some("init") => {
                let span = p.span();
                p.bump();
                let target = p.ident("attribute")?;
                p.expect(&Tok::Assign)?;
                let value = p.value()?;
                p.end()?;
                out.init.push(InitAssign {
                    target,
                    value: Operand::Lit(value),
                    span: Some(span),
                });
            }
            _ => return Err(p.error("expected `rule` or `init`")),
        }
    }
    Ok(out)
}

/// Parses one `target := value` assignment (used for channel affect patterns).
pub fn parse_assignment(text: &str) -> Result<Assignment, LoadError> {
    let toks = lex(text, 1)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line: 1,
        eol: text.chars().count() + 1,
        step_seconds: DEFAULT_STEP_SECONDS,
    };
    let a = p.assignment()?;
    p.end()?;
    Ok(a)
}

/// Parses a standalone predicate expression.
pub fn parse_predicate(text: &str) -> Result<PredExpr, LoadError> {
    parse_predicate_at(text, 1)
}

pub(crate) fn parse_predicate_at(text: &str, line: usize) -> Result<PredExpr, LoadError> {
    let toks = lex(text, line)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        eol: text.chars().count() + 1,
        step_seconds: DEFAULT_STEP_SECONDS,
    };
    let e = p.or_expr()?;
    p.end()?;
    Ok(e)
}

/// Parses a duration token such as `10m` into steps.
pub fn parse_duration(text: &str, step_seconds: u32) -> Result<u32, LoadError> {
    let toks = lex(text, 1)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line: 1,
        eol: text.chars().count() + 1,
        step_seconds: step_seconds.max(1),
    };
    let d = p.duration()?;
    p.end()?;
    Ok(d)
}

/// `8pm` and `6am` become minutes after midnight; other units are dropped.
pub(crate) fn clock_minutes(n: i64, unit: Option<&str>) -> i64 {
    match unit {
        Some("am") => (n % 12) * 60,
        Some("pm") => (n % 12 + 12) * 60,
        _ => n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(i64, Option<String>),
    Colon,
    Assign,
    Comma,
    LParen,
    RParen,
    At,
    Not,
    And,
    Or,
    Cmp(CmpOp),
    Arrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n, u) => write!(f, "`{n}{}`", u.as_deref().unwrap_or("")),
            Tok::Colon => f.write_str("`:`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::At => f.write_str("`@`"),
            Tok::Not => f.write_str("`!`"),
            Tok::And => f.write_str("`&&`"),
            Tok::Or => f.write_str("`||`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Tok::Arrow => f.write_str("`->`"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.' || c == '/'
}

pub(crate) fn lex(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, LoadError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            break;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            ":=" => (Tok::Assign, 2),
            "->" => (Tok::Arrow, 2),
            "&&" => (Tok::And, 2),
            "||" => (Tok::Or, 2),
            "==" => (Tok::Cmp(CmpOp::Eq), 2),
            "!=" | "<>" => (Tok::Cmp(CmpOp::Ne), 2),
            "<=" => (Tok::Cmp(CmpOp::Le), 2),
            ">=" => (Tok::Cmp(CmpOp::Ge), 2),
            _ => match c {
                ':' => (Tok::Colon, 1),
                ',' => (Tok::Comma, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '@' => (Tok::At, 1),
                '!' => (Tok::Not, 1),
                '=' => (Tok::Cmp(CmpOp::Eq), 1),
                '<' => (Tok::Cmp(CmpOp::Lt), 1),
                '>' => (Tok::Cmp(CmpOp::Gt), 1),
                '≠' => (Tok::Cmp(CmpOp::Ne), 1),
                '≤' => (Tok::Cmp(CmpOp::Le), 1),
                '≥' => (Tok::Cmp(CmpOp::Ge), 1),
                _ if c.is_ascii_digit()
                    || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    let start = i;
                    let mut j = i + 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let digits: String = chars[start..j].iter().collect();
                    let n: i64 = digits.parse().map_err(|_| LoadError::Syntax {
                        span: Span { line: line_no, column: col },
                        message: format!("number `{digits}` out of range"),
                    })?;
                    let ustart = j;
                    while j < chars.len()
                        && (chars[j].is_alphabetic() || chars[j] == '%' || chars[j] == '°')
                    {
                        j += 1;
                    }
                    let unit: String = chars[ustart..j].iter().collect();
                    out.push((Tok::Number(n, (!unit.is_empty()).then_some(unit)), col));
                    i = j;
                    continue;
                }
                _ if c.is_alphabetic() || c == '_' => {
                    let mut j = i + 1;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let tok = match word.as_str() {
                        "and" => Tok::And,
                        "or" => Tok::Or,
                        "not" => Tok::Not,
                        _ => Tok::Ident(word),
                    };
                    out.push((tok, col));
                    i = j;
                    continue;
                }
                _ => {
                    return Err(LoadError::Syntax {
                        span: Span { line: line_no, column: col },
                        message: format!("unexpected character `{c}`"),
                    })
                }
            },
        };
        out.push((tok, col));
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    eol: usize,
    step_seconds: u32,
}

impl Parser {
    fn span(&self) -> Span {
        let column = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.eol);
        Span {
            line: self.line,
            column,
        }
    }

    fn error(&self, message: impl Into<String>) -> LoadError {
        let found = match self.toks.get(self.pos) {
            Some((t, _)) => format!(", found {t}"),
            None => ", found end of line".to_owned(),
        };
        LoadError::Syntax {
            span: self.span(),
            message: format!("{}{found}", message.into()),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_ident() == Some(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), LoadError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`")))
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), LoadError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LoadError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn end(&self) -> Result<(), LoadError> {
        if self.pos < self.toks.len() {
            Err(self.error("expected end of line"))
        } else {
            Ok(())
        }
    }

    fn rule(&mut self) -> Result<Rule, LoadError> {
        let span = self.span();
        self.keyword("rule")?;
        let id = self.ident("rule id")?;
        self.expect(&Tok::Colon)?;
        self.keyword("when")?;
        let trigger = self.or_expr()?;
        let mut rule = Rule {
            id,
            trigger: Trigger::Pred(Predicate::trigger(trigger)),
            trigger_conditions: Vec::new(),
            action_conditions: Vec::new(),
            latency: 0,
            actions: Vec::new(),
            arms: Vec::new(),
            origin: RuleOrigin::User,
            span: Some(span),
        };
        while self.eat_keyword("if") {
            let cond = Predicate::state(self.or_expr()?);
            if self.peek() == Some(&Tok::At) {
                self.bump();
                match self.ident("`trigger` or `action`")?.as_str() {
                    "trigger" => rule.trigger_conditions.push(cond),
                    "action" => rule.action_conditions.push(cond),
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected `trigger` or `action`"));
                    }
                }
            } else {
                rule.action_conditions.push(cond);
            }
        }
        self.keyword("then")?;
        rule.actions.push(self.assignment()?);
        let mut latency = None;
        loop {
            if self.eat_keyword("for") {
                let duration = self.duration()?;
                let last = rule.actions.last_mut().unwrap();
                if last.extended.is_some() {
                    return Err(self.error("extended clause given twice"));
                }
                let terminal = if self.eat_keyword("then") {
                    Some(self.assignment()?)
                } else {
                    None
                };
                *last = last.clone().with_extended(duration, terminal);
            } else if self.eat_keyword("after") {
                if latency.is_some() {
                    return Err(self.error("latency given twice"));
                }
                latency = Some(self.duration()?);
            } else if self.peek() == Some(&Tok::Comma) {
                self.bump();
                rule.actions.push(self.assignment()?);
            } else {
                break;
            }
        }
        rule.latency = latency.unwrap_or(0);
        self.end()?;
        Ok(rule)
    }

    fn assignment(&mut self) -> Result<Assignment, LoadError> {
        let target = self.ident("assignment target")?;
        self.expect(&Tok::Assign)?;
        let value = self.value()?;
        Ok(Assignment::new(target, Operand::Lit(value)))
    }

    fn value(&mut self) -> Result<Literal, LoadError> {
        match self.bump() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => Ok(Literal::Ident(s)),
            Some(Tok::Number(n, unit)) => Ok(Literal::Number(clock_minutes(n, unit.as_deref()))),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a value"))
            }
        }
    }

    fn duration(&mut self) -> Result<u32, LoadError> {
        let span = self.span();
        let Some(Tok::Number(n, unit)) = self.peek().cloned() else {
            return Err(self.error("expected a duration"));
        };
        self.pos += 1;
        if n < 0 {
            return Err(LoadError::NegativeLatency {
                text: format!("{n}{}", unit.as_deref().unwrap_or("")),
                span,
            });
        }
        let seconds: i64 = match unit.as_deref() {
            None => return u32::try_from(n).map_err(|_| self.error("duration too large")),
            Some("s" | "sec") => n,
            Some("m" | "min") => n * 60,
            Some("h" | "hr") => n * 3600,
            Some("d") => n * 86_400,
            Some(other) => {
                self.pos -= 1;
                return Err(self.error(format!("unknown duration unit `{other}`")));
            }
        };
        let step = self.step_seconds as i64;
        u32::try_from((seconds + step - 1) / step).map_err(|_| self.error("duration too large"))
    }

    fn or_expr(&mut self) -> Result<PredExpr, LoadError> {
        let mut parts = vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            parts.push(self.and_expr()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PredExpr::Or(parts)
        })
    }

    fn and_expr(&mut self) -> Result<PredExpr, LoadError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PredExpr::And(parts)
        })
    }

    fn unary(&mut self) -> Result<PredExpr, LoadError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(PredExpr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.or_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<PredExpr, LoadError> {
        let lhs = self.value()?;
        let op = match self.bump() {
            Some(Tok::Cmp(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.error("expected a comparison operator"));
            }
        };
        let rhs = self.value()?;
        let atom = match (lhs, rhs) {
            (Literal::Ident(attr), rhs) => Atom::new(attr, op, Operand::Lit(rhs)),
            (Literal::Number(n), Literal::Ident(attr)) => {
                Atom::new(attr, op.flip(), Operand::Lit(Literal::Number(n)))
            }
            (Literal::Number(_), Literal::Number(_)) => {
                self.pos -= 1;
                return Err(self.error("comparison needs an attribute"));
            }
        };
        Ok(PredExpr::Atom(atom))
    }
}
