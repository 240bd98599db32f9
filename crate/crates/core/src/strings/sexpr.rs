//! A minimal SMT-LIB s-expression reader: atoms, lists, `;` comments and
//! string literals with `""` as the escaped quote.

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Symbol or numeral.
    Atom(String),
    /// String literal, decoded.
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SexpError {
    #[error("unbalanced `)` at offset {0}")]
    UnexpectedClose(usize),
    #[error("unclosed `(` opened at offset {0}")]
    Unclosed(usize),
    #[error("unterminated string literal at offset {0}")]
    UnterminatedString(usize),
}

impl SexpError {
    pub fn offset(&self) -> usize {
        match self {
            SexpError::UnexpectedClose(o) | SexpError::Unclosed(o) | SexpError::UnterminatedString(o) => *o,
        }
    }
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    /// `(head ...)` lists.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

/// Quotes a string in SMT-LIB syntax.
pub fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Reads every top-level expression. Also returns the text of `;` comments
/// in order of appearance.
pub fn parse_all(text: &str) -> Result<(Vec<Sexp>, Vec<String>), SexpError> {
    let bytes = text.as_bytes();
    let mut comments = Vec::new();
    let mut stack: Vec<(usize, Vec<Sexp>)> = vec![(0, Vec::new())];
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b';' => {
                let end = text[i..].find('\n').map_or(text.len(), |n| i + n);
                comments.push(text[i + 1..end].trim().to_string());
                i = end;
            }
            b'(' => {
                stack.push((i, Vec::new()));
                i += 1;
            }
            b')' => {
                if stack.len() == 1 {
                    return Err(SexpError::UnexpectedClose(i));
                }
                let (_, items) = stack.pop().unwrap();
                stack.last_mut().unwrap().1.push(Sexp::List(items));
                i += 1;
            }
            b'"' => {
                let mut s = Vec::new();
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => return Err(SexpError::UnterminatedString(i)),
                        Some(b'"') if bytes.get(j + 1) == Some(&b'"') => {
                            s.push(b'"');
                            j += 2;
                        }
                        Some(b'"') => break,
                        Some(&b) => {
                            s.push(b);
                            j += 1;
                        }
                    }
                }
                stack
                    .last_mut()
                    .unwrap()
                    .1
                    .push(Sexp::Str(String::from_utf8_lossy(&s).into_owned()));
                i = j + 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !b"()\";".contains(&bytes[i]) {
                    i += 1;
                }
                stack.last_mut().unwrap().1.push(Sexp::Atom(text[start..i].to_string()));
            }
        }
    }
    if stack.len() > 1 {
        return Err(SexpError::Unclosed(stack.last().unwrap().0));
    }
    Ok((stack.pop().unwrap().1, comments))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_literals() {
        let (v, c) = parse_all("; hi\n(f \"a\"\"b\" (g 1))").unwrap();
        assert_eq!(c, ["hi"]);
        assert_eq!(
            v,
            [Sexp::List(vec![
                Sexp::Atom("f".into()),
                Sexp::Str("a\"b".into()),
                Sexp::List(vec![Sexp::Atom("g".into()), Sexp::Atom("1".into())]),
            ])]
        );
        assert_eq!(quote("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn reports_positions() {
        assert_eq!(parse_all("(a (b)"), Err(SexpError::Unclosed(0)));
        assert_eq!(parse_all("a)"), Err(SexpError::UnexpectedClose(1)));
        assert_eq!(parse_all("(\"x"), Err(SexpError::UnterminatedString(1)));
    }
}
