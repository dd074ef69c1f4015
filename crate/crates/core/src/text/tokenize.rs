use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// An ordered list of lowercase tokens, none empty and none containing whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        for tok in &tokens {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("invalid token {tok:?}")));
            }
        }
        Ok(TokenSeq(tokens))
    }

    /// Builds a sequence from string slices; panics on invalid tokens. Test and fixture helper.
    pub fn from_strs(tokens: &[&str]) -> Self {
        Self::new(tokens.iter().map(|t| t.to_string()).collect()).expect("valid tokens")
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}' | '\u{2010}'..='\u{2015}' | '\u{2026}' | '«' | '»' | '¡' | '¿'
        )
}

/// True when every character of the token is punctuation.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punctuation)
}

/// Lowercases, splits on whitespace and peels leading and trailing punctuation
/// characters off each chunk as single-character tokens. Punctuation inside a
/// word (`don't`, `e-mail`) stays attached.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = chunk.to_lowercase();
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars.iter().position(|&c| !is_punctuation(c));
        let Some(start) = start else {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|&c| !is_punctuation(c)).unwrap() + 1;
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    TokenSeq(out)
}
