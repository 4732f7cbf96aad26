use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Backtick- or bracket-quoted identifier; never treated as a keyword.
    Quoted(String),
    Number(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Semi,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "union", "intersect",
    "except", "join", "inner", "on", "as", "and", "or", "not", "in", "like", "between", "asc",
    "desc", "distinct", "left", "right", "outer", "cross",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let simple = |tok| Token { tok, offset: start };
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => out.push(simple(Tok::LParen)),
            b')' => out.push(simple(Tok::RParen)),
            b',' => out.push(simple(Tok::Comma)),
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => out.push(simple(Tok::Dot)),
            b'*' => out.push(simple(Tok::Star)),
            b'+' => out.push(simple(Tok::Plus)),
            b'-' => out.push(simple(Tok::Minus)),
            b'/' => out.push(simple(Tok::Slash)),
            b';' => out.push(simple(Tok::Semi)),
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                }
                out.push(simple(Tok::Eq));
            }
            b'!' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(ParseError::new(start, "unexpected `!`", "`!=`"));
                }
                i += 1;
                out.push(simple(Tok::Ne));
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 1;
                    out.push(simple(Tok::Le));
                }
                Some(b'>') => {
                    i += 1;
                    out.push(simple(Tok::Ne));
                }
                _ => out.push(simple(Tok::Lt)),
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    out.push(simple(Tok::Ge));
                } else {
                    out.push(simple(Tok::Gt));
                }
            }
            b'"' | b'\'' => {
                let (s, next) = quoted(src, i, b)?;
                out.push(Token {
                    tok: Tok::Str(s),
                    offset: start,
                });
                i = next;
                continue;
            }
            b'`' => {
                let (s, next) = quoted(src, i, b'`')?;
                out.push(Token {
                    tok: Tok::Quoted(s),
                    offset: start,
                });
                i = next;
                continue;
            }
            b'[' => {
                let Some(end) = src[i + 1..].find(']') else {
                    return Err(ParseError::new(start, "unterminated `[` identifier", "`]`"));
                };
                out.push(Token {
                    tok: Tok::Quoted(src[i + 1..i + 1 + end].to_string()),
                    offset: start,
                });
                i += end + 2;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut seen_dot = false;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || (bytes[j] == b'.' && !seen_dot)) {
                    seen_dot |= bytes[j] == b'.';
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                out.push(Token {
                    tok: Tok::Number(src[i..j].to_string()),
                    offset: start,
                });
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] >= 0x80)
                {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[i..j].to_string()),
                    offset: start,
                });
                i = j;
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(start, format!("unexpected character `{ch}`"), "a SQL token"));
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Reads a quoted run starting at `start`; a doubled quote is an escape.
fn quoted(src: &str, start: usize, quote: u8) -> Result<(String, usize), ParseError> {
    let bytes = src.as_bytes();
    let mut out = String::new();
    let mut i = start + 1;
    let mut run = i;
    while i < bytes.len() {
        if bytes[i] == quote {
            out.push_str(&src[run..i]);
            if bytes.get(i + 1) == Some(&quote) {
                out.push(quote as char);
                i += 2;
                run = i;
                continue;
            }
            return Ok((out, i + 1));
        }
        i += 1;
    }
    Err(ParseError::new(
        start,
        "unterminated quoted literal",
        format!("closing `{}`", quote as char),
    ))
}
