use super::{Grammar, TermId};

/// Output of [`Grammar::lex`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexed {
    pub tokens: Vec<TermId>,
    /// Byte offset of each token in the input.
    pub offsets: Vec<usize>,
    pub skipped: Vec<SkippedSpan>,
}

/// A stretch of input that matched no terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedSpan {
    pub offset: usize,
    pub text: String,
}

fn is_word(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

pub(super) fn lex(grammar: &Grammar, text: &str) -> Lexed {
    let bytes = text.as_bytes();
    // candidate terminals bucketed by first byte, longest first
    let mut buckets: Vec<Vec<(TermId, &[u8])>> = vec![Vec::new(); 256];
    for (id, t) in grammar.terminals() {
        buckets[t.as_bytes()[0] as usize].push((id, t.as_bytes()));
    }
    for b in &mut buckets {
        b.sort_by(|x, y| y.1.len().cmp(&x.1.len()).then(x.0.cmp(&y.0)));
    }

    let mut out = Lexed::default();
    let mut pending: Option<(usize, usize)> = None;
    let flush = |pending: &mut Option<(usize, usize)>, out: &mut Lexed| {
        if let Some((s, e)) = pending.take() {
            out.skipped.push(SkippedSpan {
                offset: s,
                text: text[s..e].to_string(),
            });
        }
    };

    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            flush(&mut pending, &mut out);
            i += 1;
            continue;
        }
        if c == b'"' {
            // quoted literals are atomic: either the whole literal is a
            // terminal or the whole literal is skipped
            let end = quoted_end(bytes, i);
            let lit = &bytes[i..end];
            if let Some(&(id, _)) = buckets[c as usize].iter().find(|(_, t)| *t == lit) {
                flush(&mut pending, &mut out);
                out.tokens.push(id);
                out.offsets.push(i);
            } else {
                flush(&mut pending, &mut out);
                pending = Some((i, end));
                flush(&mut pending, &mut out);
            }
            i = end;
            continue;
        }
        let rest = &bytes[i..];
        let hit = buckets[c as usize].iter().find(|(_, t)| {
            rest.starts_with(t)
                && !(is_word(t[t.len() - 1]) && rest.len() > t.len() && is_word(rest[t.len()]))
        });
        match hit {
            Some(&(id, t)) => {
                flush(&mut pending, &mut out);
                out.tokens.push(id);
                out.offsets.push(i);
                i += t.len();
            }
            None => {
                let end = if is_word(c) {
                    i + rest.iter().take_while(|b| is_word(**b)).count()
                } else {
                    i + utf8_len(c)
                };
                match pending {
                    Some((s, e)) if e == i => pending = Some((s, end)),
                    _ => {
                        flush(&mut pending, &mut out);
                        pending = Some((i, end));
                    }
                }
                i = end;
            }
        }
    }
    flush(&mut pending, &mut out);
    out
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        0xf0..=0xff => 4,
        _ => 1,
    }
}

/// End offset (exclusive) of a quoted literal starting at `start`; `""` inside
/// the literal is an escaped quote. Unterminated literals run to end of input.
fn quoted_end(bytes: &[u8], start: usize) -> usize {
    let mut j = start + 1;
    while j < bytes.len() {
        if bytes[j] == b'"' {
            if j + 1 < bytes.len() && bytes[j + 1] == b'"' {
                j += 2;
                continue;
            }
            return j + 1;
        }
        j += 1;
    }
    bytes.len()
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny;
    use super::super::GrammarBuilder;

    fn texts(g: &super::Grammar, s: &str) -> Vec<String> {
        g.lex(s)
            .tokens
            .iter()
            .map(|t| g.terminal_text(*t).to_string())
            .collect()
    }

    #[test]
    fn lex_tiny() {
        let g = tiny();
        assert_eq!(texts(&g, "f(a)"), ["f(", "a", ")"]);
        assert!(g.lex("f(a)").skipped.is_empty());
    }

    #[test]
    fn lex_skips_unknown() {
        let g = tiny();
        let l = g.lex("f(b)");
        assert_eq!(texts(&g, "f(b)"), ["f(", ")"]);
        assert_eq!(l.skipped.len(), 1);
        assert_eq!(l.skipped[0].text, "b");
        assert_eq!(l.skipped[0].offset, 2);
    }

    #[test]
    fn longest_match_wins() {
        let mut b = GrammarBuilder::new("S");
        b.rule("$S", &["x", "=", "x"], None).rule("$S", &["x", "==", "x"], None);
        let g = b.build().unwrap();
        assert_eq!(texts(&g, "x==x"), ["x", "==", "x"]);
        assert_eq!(texts(&g, "x=x"), ["x", "=", "x"]);
    }

    #[test]
    fn word_terminals_respect_boundaries() {
        let mut b = GrammarBuilder::new("S");
        b.rule("$S", &["self"], None).rule("$S", &["1"], None);
        let g = b.build().unwrap();
        let l = g.lex("selfish self 10");
        assert_eq!(l.tokens.len(), 1);
        assert_eq!(l.skipped.iter().map(|s| s.text.as_str()).collect::<Vec<_>>(), ["selfish", "10"]);
    }

    #[test]
    fn quoted_literals_are_atomic() {
        let mut b = GrammarBuilder::new("S");
        b.rule("$S", &["\".\""], None).rule("$S", &["concat"], None);
        let g = b.build().unwrap();
        let l = g.lex("\".\" \"concat\" concat");
        assert_eq!(texts(&g, "\".\" \"concat\" concat"), ["\".\"", "concat"]);
        assert_eq!(l.skipped[0].text, "\"concat\"");
    }

    #[test]
    fn adjacent_unknown_chars_merge() {
        let g = tiny();
        let l = g.lex("h(a) ##");
        assert_eq!(l.skipped[0].text, "h(");
        assert_eq!(l.skipped[1].text, "##");
    }
}
