//! Output values, their type categories, and prediction outcomes.
//!
//! Values are read with a small literal grammar covering what programs print:
//! integers, decimals, booleans, quoted strings, lists, tuples, dicts and sets.
//! Text that is not a single complete literal is treated as a plain string.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PredictionRecord, Problem};

pub const ANSWER_MARKER: &str = "[Output]";
pub const DECIMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ValueCategory {
    Int,
    Decimal,
    String,
    Binary,
    List,
    Tuple,
    Object,
}

impl ValueCategory {
    pub const ALL: [ValueCategory; 7] = [
        ValueCategory::Int,
        ValueCategory::Decimal,
        ValueCategory::String,
        ValueCategory::Binary,
        ValueCategory::List,
        ValueCategory::Tuple,
        ValueCategory::Object,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValueCategory::Int => "Int",
            ValueCategory::Decimal => "Decimal",
            ValueCategory::String => "String",
            ValueCategory::Binary => "Binary",
            ValueCategory::List => "List",
            ValueCategory::Tuple => "Tuple",
            ValueCategory::Object => "Object",
        }
    }
}

impl fmt::Display for ValueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// Canonical decimal digits with an optional leading `-`; arbitrary size.
    Int(String),
    Decimal(f64),
    Str(String),
    Bool(bool),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    Dict(Vec<(Value, Value)>),
    Set(Vec<Value>),
    /// Bare identifier inside a container, e.g. `None`.
    Word(String),
}

impl Value {
    pub fn category(&self) -> ValueCategory {
        match self {
            Value::Int(_) => ValueCategory::Int,
            Value::Decimal(_) => ValueCategory::Decimal,
            Value::Str(_) | Value::Word(_) => ValueCategory::String,
            Value::Bool(_) => ValueCategory::Binary,
            Value::List(_) => ValueCategory::List,
            Value::Tuple(_) => ValueCategory::Tuple,
            Value::Dict(_) | Value::Set(_) => ValueCategory::Object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("unparseable value: {0}")]
    Unparseable(String),
    #[error("cannot compute a rate over an empty cluster")]
    EmptyCluster,
}

/// Parses printed output into a value and its category.
///
/// Only empty text and text with unbalanced brackets or quotes are rejected.
pub fn parse_value(text: &str) -> Result<(Value, ValueCategory), ScoringError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ScoringError::Unparseable("empty text".into()));
    }
    check_balanced(trimmed)?;
    let mut p = Parser {
        s: trimmed.as_bytes(),
        text: trimmed,
        pos: 0,
    };
    let value = match p.value() {
        Some(v) if p.at_end() => match v {
            // A lone identifier at the top level is just text.
            Value::Word(w) => Value::Str(w),
            v => v,
        },
        _ => Value::Str(trimmed.to_string()),
    };
    let category = value.category();
    Ok((value, category))
}

fn check_balanced(text: &str) -> Result<(), ScoringError> {
    let mut stack = Vec::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '\'' | '"' => {
                let mut closed = false;
                while let Some(d) = chars.next() {
                    if d == '\\' {
                        chars.next();
                    } else if d == c {
                        closed = true;
                        break;
                    } else if d == '\n' {
                        break;
                    }
                }
                // An apostrophe in running text ("don't") is not a quote.
                if !closed && c == '"' {
                    return Err(ScoringError::Unparseable("unterminated quote".into()));
                }
                if !closed {
                    return check_balanced_outside_quotes(text);
                }
            }
            '(' | '[' | '{' => stack.push(c),
            ')' | ']' | '}' => {
                let open = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if stack.pop() != Some(open) {
                    return Err(ScoringError::Unparseable(format!("unbalanced `{c}`")));
                }
            }
            _ => {}
        }
    }
    match stack.last() {
        Some(c) => Err(ScoringError::Unparseable(format!("unclosed `{c}`"))),
        None => Ok(()),
    }
}

/// Bracket balance ignoring single quotes entirely.
fn check_balanced_outside_quotes(text: &str) -> Result<(), ScoringError> {
    let mut depth: [i32; 3] = [0; 3];
    for c in text.chars() {
        let (i, d) = match c {
            '(' => (0, 1),
            ')' => (0, -1),
            '[' => (1, 1),
            ']' => (1, -1),
            '{' => (2, 1),
            '}' => (2, -1),
            _ => continue,
        };
        depth[i] += d;
        if depth[i] < 0 {
            return Err(ScoringError::Unparseable(format!("unbalanced `{c}`")));
        }
    }
    if depth.iter().any(|d| *d != 0) {
        return Err(ScoringError::Unparseable("unclosed bracket".into()));
    }
    Ok(())
}

struct Parser<'a> {
    s: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.s.len()
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn value(&mut self) -> Option<Value> {
        self.skip_ws();
        match self.peek()? {
            b'\'' | b'"' => self.string().map(Value::Str),
            b'[' => {
                self.pos += 1;
                self.sequence(b']').map(|(items, _)| Value::List(items))
            }
            b'(' => {
                self.pos += 1;
                let (mut items, trailing_comma) = self.sequence(b')')?;
                if items.len() == 1 && !trailing_comma {
                    items.pop()
                } else {
                    Some(Value::Tuple(items))
                }
            }
            b'{' => {
                self.pos += 1;
                self.braces()
            }
            b'-' | b'+' | b'.' | b'0'..=b'9' => self.number(),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let word = self.word();
                Some(match word {
                    "True" => Value::Bool(true),
                    "False" => Value::Bool(false),
                    "inf" => Value::Decimal(f64::INFINITY),
                    "nan" => Value::Decimal(f64::NAN),
                    w => Value::Word(w.to_string()),
                })
            }
            _ => None,
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_' || c == b'.')
        {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn string(&mut self) -> Option<String> {
        let quote = self.peek()?;
        self.pos += 1;
        let mut out = String::new();
        let rest = &self.text[self.pos..];
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => {
                    let (_, e) = chars.next()?;
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '0' => '\0',
                        other => other,
                    });
                }
                c if c as u32 == quote as u32 => {
                    self.pos += i + 1;
                    return Some(out);
                }
                c => out.push(c),
            }
        }
        None
    }

    /// Comma-separated values up to `close`; also reports a trailing comma.
    fn sequence(&mut self, close: u8) -> Option<(Vec<Value>, bool)> {
        let mut items = Vec::new();
        let mut trailing = false;
        loop {
            if self.eat(close) {
                return Some((items, trailing));
            }
            items.push(self.value()?);
            trailing = self.eat(b',');
            if !trailing {
                return self.eat(close).then_some((items, false));
            }
        }
    }

    fn braces(&mut self) -> Option<Value> {
        if self.eat(b'}') {
            return Some(Value::Dict(Vec::new()));
        }
        let first = self.value()?;
        if self.eat(b':') {
            let mut pairs = vec![(first, self.value()?)];
            while self.eat(b',') {
                if self.eat(b'}') {
                    return Some(Value::Dict(pairs));
                }
                let k = self.value()?;
                if !self.eat(b':') {
                    return None;
                }
                pairs.push((k, self.value()?));
            }
            self.eat(b'}').then_some(Value::Dict(pairs))
        } else {
            let mut items = vec![first];
            if self.eat(b',') {
                let (rest, _) = self.sequence(b'}')?;
                items.extend(rest);
                Some(Value::Set(items))
            } else {
                self.eat(b'}').then_some(Value::Set(items))
            }
        }
    }

    fn number(&mut self) -> Option<Value> {
        let start = self.pos;
        let mut negative = false;
        if let Some(sign @ (b'-' | b'+')) = self.peek() {
            negative = sign == b'-';
            self.pos += 1;
        }
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            let word = self.word();
            let magnitude = match word {
                "inf" => f64::INFINITY,
                "nan" => f64::NAN,
                _ => return None,
            };
            return Some(Value::Decimal(if negative {
                -magnitude
            } else {
                magnitude
            }));
        }
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit() || c == b'_') {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_len = digits(self);
        let mut is_decimal = false;
        let mut frac_len = 0;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            is_decimal = true;
            frac_len = digits(self);
        }
        if int_len == 0 && frac_len == 0 {
            return None;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'-' | b'+')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            } else {
                is_decimal = true;
            }
        }
        // `3x` or `1.2.3` is not a number.
        if matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'.' || c == b'_') {
            return None;
        }
        let literal: String = self.text[start..self.pos]
            .chars()
            .filter(|c| *c != '_')
            .collect();
        if is_decimal {
            literal.parse::<f64>().ok().map(Value::Decimal)
        } else {
            let body = literal
                .trim_start_matches(['-', '+'])
                .trim_start_matches('0');
            Some(Value::Int(match body {
                "" => "0".to_string(),
                b if negative => format!("-{b}"),
                b => b.to_string(),
            }))
        }
    }
}

/// Lines trimmed, whitespace runs collapsed, trailing blank lines dropped.
pub fn normalize_text(text: &str) -> String {
    let mut lines: Vec<String> = text
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

fn decimals_equal(a: f64, b: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= DECIMAL_TOLERANCE
}

/// Reflexive and symmetric; not transitive because of the decimal tolerance.
pub fn canonical_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Decimal(x), Value::Decimal(y)) => decimals_equal(*x, *y),
        (Value::Str(x), Value::Str(y)) => normalize_text(x) == normalize_text(y),
        (Value::Word(x), Value::Word(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::List(x), Value::List(y)) | (Value::Tuple(x), Value::Tuple(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| canonical_equal(p, q))
        }
        (Value::Set(x), Value::Set(y)) => perfect_matching(x, y, canonical_equal),
        (Value::Dict(x), Value::Dict(y)) => perfect_matching(x, y, |(k1, v1), (k2, v2)| {
            canonical_equal(k1, k2) && canonical_equal(v1, v2)
        }),
        _ => false,
    }
}

/// Order-insensitive comparison: is there a bijection pairing equal elements?
fn perfect_matching<T>(xs: &[T], ys: &[T], eq: impl Fn(&T, &T) -> bool) -> bool {
    if xs.len() != ys.len() {
        return false;
    }
    let adj: Vec<Vec<usize>> = xs
        .iter()
        .map(|x| (0..ys.len()).filter(|&j| eq(x, &ys[j])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; ys.len()];
    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    (0..xs.len()).all(|i| augment(i, &adj, &mut vec![false; ys.len()], &mut owner))
}

/// The answer region of a model response: text after the last `[Output]`
/// marker (the whole response when absent), without surrounding code fences.
pub fn extract_answer(response: &str) -> &str {
    let after = match response.rfind(ANSWER_MARKER) {
        Some(i) => &response[i + ANSWER_MARKER.len()..],
        None => response,
    };
    let mut answer = after.trim();
    if let Some(rest) = answer.strip_prefix("```") {
        answer = match rest.find('\n') {
            Some(i) => &rest[i + 1..],
            None => rest,
        };
        answer = answer.trim_end();
        answer = answer.strip_suffix("```").unwrap_or(answer).trim();
    }
    answer
}

/// Compares two raw outputs the way predictions are scored.
pub fn outputs_agree(expected: &str, actual: &str) -> bool {
    let (e, _) = parse_expected(expected);
    match parse_value(actual) {
        Ok((a, _)) => canonical_equal(&e, &a),
        Err(_) => normalize_text(expected).is_empty() && normalize_text(actual).is_empty(),
    }
}

/// Expected outputs always get a category; empty or unbalanced text is a string.
fn parse_expected(text: &str) -> (Value, ValueCategory) {
    parse_value(text).unwrap_or_else(|_| (Value::Str(text.to_string()), ValueCategory::String))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub problem_id: String,
    pub correct: bool,
    pub type_match: bool,
    pub value_match: bool,
    pub expected_category: ValueCategory,
    pub predicted_category: Option<ValueCategory>,
}

pub fn score_prediction(record: &PredictionRecord, problem: &Problem) -> Outcome {
    let (expected, expected_category) = parse_expected(&problem.expected_output);
    let predicted = parse_value(extract_answer(&record.predicted_output)).ok();
    let type_match = predicted
        .as_ref()
        .is_some_and(|(_, c)| *c == expected_category);
    let value_match = type_match
        && predicted
            .as_ref()
            .is_some_and(|(v, _)| canonical_equal(&expected, v));
    Outcome {
        problem_id: problem.problem_id.clone(),
        correct: value_match,
        type_match,
        value_match,
        expected_category,
        predicted_category: predicted.map(|(_, c)| c),
    }
}

pub fn reasoning_rate(outcomes: &[Outcome]) -> Result<f64, ScoringError> {
    if outcomes.is_empty() {
        return Err(ScoringError::EmptyCluster);
    }
    Ok(outcomes.iter().filter(|o| o.correct).count() as f64 / outcomes.len() as f64)
}
