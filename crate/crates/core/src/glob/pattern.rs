use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Matching flags for the glob dialect.
///
/// The default mirrors a plain `fnmatch(pattern, text, 0)` call: `*` crosses
/// `/`, backslash escapes the next byte, and no leading-period handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dialect {
    /// Backslash escapes the following byte (cleared by `FNM_NOESCAPE`).
    pub escape: bool,
    /// Wildcards and bracket expressions never match `/` (`FNM_PATHNAME`).
    pub pathname: bool,
}

impl Dialect {
    pub const POSIX_DEFAULT: Dialect = Dialect {
        escape: true,
        pathname: false,
    };
}

impl Default for Dialect {
    fn default() -> Self {
        Dialect::POSIX_DEFAULT
    }
}

/// Dialect used for every expression parsed out of a permissions document.
pub const DEFAULT_DIALECT: Dialect = Dialect::POSIX_DEFAULT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternErrorKind {
    #[error("empty pattern")]
    Empty,
    #[error("unterminated bracket expression")]
    UnclosedBracket,
    #[error("dangling escape at end of pattern")]
    DanglingEscape,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct PatternError {
    pub offset: usize,
    pub kind: PatternErrorKind,
}

/// Sorted, disjoint, inclusive byte ranges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct ByteClass {
    ranges: Vec<(u8, u8)>,
}

impl ByteClass {
    pub(crate) fn full() -> Self {
        ByteClass {
            ranges: vec![(0, 255)],
        }
    }

    pub(crate) fn single(b: u8) -> Self {
        ByteClass {
            ranges: vec![(b, b)],
        }
    }

    fn from_members(mut members: Vec<(u8, u8)>) -> Self {
        members.retain(|&(lo, hi)| lo <= hi);
        members.sort_unstable();
        let mut ranges: Vec<(u8, u8)> = Vec::with_capacity(members.len());
        for (lo, hi) in members {
            match ranges.last_mut() {
                Some(last) if (last.1 as u16) + 1 >= lo as u16 => last.1 = last.1.max(hi),
                _ => ranges.push((lo, hi)),
            }
        }
        ByteClass { ranges }
    }

    fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut next: u16 = 0;
        for &(lo, hi) in &self.ranges {
            if (lo as u16) > next {
                out.push((next as u8, lo - 1));
            }
            next = hi as u16 + 1;
        }
        if next <= 255 {
            out.push((next as u8, 255));
        }
        ByteClass { ranges: out }
    }

    fn without(&self, b: u8) -> Self {
        self.intersect(&ByteClass::single(b).complement())
    }

    fn intersect(&self, other: &ByteClass) -> Self {
        let mut out = Vec::new();
        for &(a0, a1) in &self.ranges {
            for &(b0, b1) in &other.ranges {
                let lo = a0.max(b0);
                let hi = a1.min(b1);
                if lo <= hi {
                    out.push((lo, hi));
                }
            }
        }
        ByteClass::from_members(out)
    }

    pub(crate) fn contains(&self, b: u8) -> bool {
        self.ranges.iter().any(|&(lo, hi)| lo <= b && b <= hi)
    }

    pub(crate) fn ranges(&self) -> &[(u8, u8)] {
        &self.ranges
    }
}

/// One element of a parsed glob. Every token except `Star` consumes exactly one byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Token {
    Star,
    Byte(ByteClass),
}

/// A parsed topic or partition expression.
#[derive(Clone)]
pub struct GlobPattern {
    source: String,
    dialect: Dialect,
    tokens: Vec<Token>,
}

impl GlobPattern {
    pub fn parse(source: &str) -> Result<Self, PatternError> {
        Self::parse_with(source, DEFAULT_DIALECT)
    }

    pub fn parse_with(source: &str, dialect: Dialect) -> Result<Self, PatternError> {
        if source.is_empty() {
            return Err(PatternError {
                offset: 0,
                kind: PatternErrorKind::Empty,
            });
        }
        let tokens = tokenize(source.as_bytes(), dialect)?;
        Ok(GlobPattern {
            source: source.to_owned(),
            dialect,
            tokens,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    /// True when the pattern contains no wildcard or bracket expression, so
    /// its language is exactly one string.
    pub fn literal(&self) -> Option<Vec<u8>> {
        self.tokens
            .iter()
            .map(|t| match t {
                Token::Byte(class) => match class.ranges() {
                    [(lo, hi)] if lo == hi => Some(*lo),
                    _ => None,
                },
                Token::Star => None,
            })
            .collect()
    }

    pub(crate) fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// `fnmatch(self, text)` under this pattern's dialect.
    pub fn matches(&self, text: &str) -> bool {
        self.matches_bytes(text.as_bytes())
    }

    pub fn matches_bytes(&self, text: &[u8]) -> bool {
        if !self.dialect.pathname {
            return match_segment(&self.tokens, text);
        }
        // '/' can only be consumed by a literal '/', so both sides split on it.
        let slash = Token::Byte(ByteClass::single(b'/'));
        let pattern_parts: Vec<&[Token]> = self.tokens.split(|t| *t == slash).collect();
        let text_parts: Vec<&[u8]> = text.split(|&b| b == b'/').collect();
        pattern_parts.len() == text_parts.len()
            && pattern_parts
                .iter()
                .zip(&text_parts)
                .all(|(p, t)| match_segment(p, t))
    }
}

/// Free-function form of [`GlobPattern::matches`].
pub fn fnmatch(pattern: &GlobPattern, text: &str) -> bool {
    pattern.matches(text)
}

/// Symmetric match used to relate two expressions cheaply: either pattern,
/// read as a literal string, matches the other.
pub fn two_way_match(p: &GlobPattern, q: &GlobPattern) -> bool {
    p.matches(q.source()) || q.matches(p.source())
}

// Greedy single-backtrack matcher; correct because every non-star token is one byte wide.
fn match_segment(tokens: &[Token], text: &[u8]) -> bool {
    let (mut t, mut s) = (0usize, 0usize);
    let mut resume: Option<(usize, usize)> = None;
    while s < text.len() {
        match tokens.get(t) {
            Some(Token::Star) => {
                resume = Some((t, s));
                t += 1;
                continue;
            }
            Some(Token::Byte(class)) if class.contains(text[s]) => {
                t += 1;
                s += 1;
                continue;
            }
            _ => {}
        }
        match resume {
            Some((star, from)) => {
                t = star + 1;
                s = from + 1;
                resume = Some((star, from + 1));
            }
            None => return false,
        }
    }
    tokens[t..].iter().all(|tok| *tok == Token::Star)
}

fn tokenize(src: &[u8], dialect: Dialect) -> Result<Vec<Token>, PatternError> {
    let wildcard = if dialect.pathname {
        ByteClass::full().without(b'/')
    } else {
        ByteClass::full()
    };
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < src.len() {
        match src[i] {
            b'*' => {
                // Consecutive stars denote the same language.
                if tokens.last() != Some(&Token::Star) {
                    tokens.push(Token::Star);
                }
                i += 1;
            }
            b'?' => {
                tokens.push(Token::Byte(wildcard.clone()));
                i += 1;
            }
            b'[' => {
                let (class, next) = parse_bracket(src, i, dialect)?;
                tokens.push(Token::Byte(class));
                i = next;
            }
            b'\\' if dialect.escape => {
                let Some(&b) = src.get(i + 1) else {
                    return Err(PatternError {
                        offset: i,
                        kind: PatternErrorKind::DanglingEscape,
                    });
                };
                tokens.push(Token::Byte(ByteClass::single(b)));
                i += 2;
            }
            b => {
                tokens.push(Token::Byte(ByteClass::single(b)));
                i += 1;
            }
        }
    }
    Ok(tokens)
}

// Returns the class and the index just past the closing ']'.
fn parse_bracket(src: &[u8], open: usize, dialect: Dialect) -> Result<(ByteClass, usize), PatternError> {
    let unclosed = PatternError {
        offset: open,
        kind: PatternErrorKind::UnclosedBracket,
    };
    let mut j = open + 1;
    let negated = matches!(src.get(j), Some(b'!') | Some(b'^'));
    if negated {
        j += 1;
    }
    let mut members = Vec::new();
    let mut first = true;
    loop {
        let Some(&c) = src.get(j) else {
            return Err(unclosed);
        };
        if c == b']' && !first {
            j += 1;
            break;
        }
        first = false;
        let (lo, after_lo) = bracket_byte(src, j, dialect).ok_or_else(|| unclosed.clone())?;
        j = after_lo;
        if src.get(j) == Some(&b'-') && src.get(j + 1).is_some_and(|&b| b != b']') {
            let (hi, after_hi) = bracket_byte(src, j + 1, dialect).ok_or_else(|| unclosed.clone())?;
            members.push((lo, hi));
            j = after_hi;
        } else {
            members.push((lo, lo));
        }
    }
    let mut class = ByteClass::from_members(members);
    if negated {
        class = class.complement();
    }
    if dialect.pathname {
        class = class.without(b'/');
    }
    Ok((class, j))
}

fn bracket_byte(src: &[u8], j: usize, dialect: Dialect) -> Option<(u8, usize)> {
    match src.get(j)? {
        b'\\' if dialect.escape => src.get(j + 1).map(|&b| (b, j + 2)),
        &b => Some((b, j + 1)),
    }
}

impl fmt::Debug for GlobPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GlobPattern({:?})", self.source)
    }
}

impl fmt::Display for GlobPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl PartialEq for GlobPattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.dialect == other.dialect
    }
}

impl Eq for GlobPattern {}

impl Hash for GlobPattern {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.source.hash(state);
        self.dialect.hash(state);
    }
}

impl PartialOrd for GlobPattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GlobPattern {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.source, self.dialect).cmp(&(&other.source, other.dialect))
    }
}

impl Serialize for GlobPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for GlobPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        GlobPattern::parse(&s).map_err(serde::de::Error::custom)
    }
}
