//! Utterance tokenization shared by the utterance relations and the fluency
//! scorer: lowercase, split on whitespace, punctuation marks become their
//! own tokens.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    /// Byte span in the source string.
    pub start: usize,
    pub end: usize,
    pub is_word: bool,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(s: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut iter = s.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() {
            continue;
        }
        if is_word_char(c) {
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = iter.peek() {
                if !is_word_char(d) {
                    break;
                }
                end = j + d.len_utf8();
                iter.next();
            }
            out.push(Token {
                text: s[i..end].to_lowercase(),
                start: i,
                end,
                is_word: true,
            });
        } else {
            let end = i + c.len_utf8();
            out.push(Token {
                text: s[i..end].to_string(),
                start: i,
                end,
                is_word: false,
            });
        }
    }
    out
}

/// Lowercased token strings.
pub fn token_strings(s: &str) -> Vec<String> {
    tokenize(s).into_iter().map(|t| t.text).collect()
}

/// Lowercase and collapse runs of whitespace to single spaces.
pub fn normalize_phrase(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Word tokens of a phrase, for matching against utterance tokens.
pub fn phrase_words(phrase: &str) -> Vec<String> {
    tokenize(phrase)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| t.text)
        .collect()
}

/// Does `words` occur in `tokens` starting at token `at`, with only
/// whitespace between consecutive matched tokens? Returns the index one past
/// the last matched token.
pub fn match_words_at(source: &str, tokens: &[Token], at: usize, words: &[String]) -> Option<usize> {
    if words.is_empty() || at + words.len() > tokens.len() {
        return None;
    }
    for (k, w) in words.iter().enumerate() {
        let t = &tokens[at + k];
        if !t.is_word || &t.text != w {
            return None;
        }
        if k > 0 {
            let gap = &source[tokens[at + k - 1].end..t.start];
            if !gap.chars().all(char::is_whitespace) {
                return None;
            }
        }
    }
    Some(at + words.len())
}
