//! Question tokenization.
//!
//! The default tokenizer splits on whitespace and emits each punctuation
//! character as its own token. Numbers keep an inner decimal point or
//! thousands separator (`1.99`, `7,045,314`), and word-internal apostrophes
//! and hyphens stay attached (`o'neil`, `sci-fi`). Case is preserved; callers
//! that need case-folding lowercase the token text themselves.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the source text.
    pub start: usize,
    pub end: usize,
}

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Token>;

    /// Identifies the tokenizer settings; stored next to token lists so a
    /// change of tokenizer never silently reinterprets saved indices.
    fn version(&self) -> &str;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleTokenizer;

impl Tokenizer for SimpleTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (start, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_alphanumeric() {
                let mut j = i + 1;
                while j < chars.len() {
                    let ch = chars[j].1;
                    if ch.is_alphanumeric() {
                        j += 1;
                        continue;
                    }
                    let next_alnum = chars.get(j + 1).is_some_and(|(_, n)| n.is_alphanumeric());
                    let prev_digit = chars[j - 1].1.is_ascii_digit();
                    let next_digit = chars.get(j + 1).is_some_and(|(_, n)| n.is_ascii_digit());
                    let joins = match ch {
                        '.' | ',' => prev_digit && next_digit,
                        '\'' | '’' | '-' => next_alnum && chars[j - 1].1.is_alphabetic(),
                        _ => false,
                    };
                    if joins {
                        j += 2;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map_or(text.len(), |(b, _)| *b);
                tokens.push(Token {
                    text: text[start..end].to_string(),
                    start,
                    end,
                });
                i = j;
            } else {
                let end = start + c.len_utf8();
                tokens.push(Token {
                    text: text[start..end].to_string(),
                    start,
                    end,
                });
                i += 1;
            }
        }
        tokens
    }

    fn version(&self) -> &str {
        "simple-1"
    }
}

/// Token texts only.
pub fn words(tokenizer: &dyn Tokenizer, text: &str) -> Vec<String> {
    tokenizer
        .tokenize(text)
        .into_iter()
        .map(|t| t.text)
        .collect()
}
