//! Word tokenizer.
//!
//! A token is a maximal run of letters and digits, optionally joined by single
//! internal apostrophes (`don't`, `rock'n'roll`). Typographic apostrophes are
//! folded to `'`. Tokens are lowercased and anything else is a separator.
//! Combining diacritics (U+0300..U+036F) continue a token but never start one.

/// Tokens longer than this many characters are truncated.
pub const MAX_TOKEN_CHARS: usize = 64;

#[inline]
fn is_word_start(c: char) -> bool {
    c.is_alphanumeric()
}

#[inline]
fn is_word_continue(c: char) -> bool {
    c.is_alphanumeric() || ('\u{300}'..='\u{36f}').contains(&c)
}

#[inline]
fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

#[inline]
fn char_at(text: &str, i: usize) -> Option<char> {
    let b = *text.as_bytes().get(i)?;
    if b < 0x80 {
        Some(b as char)
    } else {
        text[i..].chars().next()
    }
}

/// Streaming tokenizer that reuses one scratch buffer across calls.
#[derive(Default, Debug)]
pub struct Tokenizer {
    buf: String,
}

impl Tokenizer {
    pub fn new() -> Self {
        Tokenizer::default()
    }

    /// Calls `emit(token, truncated)` for each token of `text` in order.
    pub fn for_each_token(&mut self, text: &str, mut emit: impl FnMut(&str, bool)) {
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let b = bytes[i];
            if b < 0x80 {
                if !b.is_ascii_alphanumeric() {
                    i += 1;
                    continue;
                }
            } else {
                let c = char_at(text, i).unwrap_or(' ');
                if !is_word_start(c) {
                    i += c.len_utf8();
                    continue;
                }
            }
            i = self.scan_token(text, i, &mut emit);
        }
    }

    /// Consumes one token starting at `start`; returns the offset after it.
    fn scan_token(&mut self, text: &str, start: usize, emit: &mut impl FnMut(&str, bool)) -> usize {
        let bytes = text.as_bytes();
        self.buf.clear();
        let mut chars = 0usize;
        let mut truncated = false;
        let mut i = start;
        while i < bytes.len() {
            let b = bytes[i];
            if b < 0x80 {
                if b.is_ascii_alphanumeric() {
                    if chars < MAX_TOKEN_CHARS {
                        self.buf.push(b.to_ascii_lowercase() as char);
                        chars += 1;
                    } else {
                        truncated = true;
                    }
                    i += 1;
                    continue;
                }
                if b == b'\'' && self.joins_next(text, i + 1) {
                    self.push_apostrophe(&mut chars, &mut truncated);
                    i += 1;
                    continue;
                }
                break;
            }
            let Some(c) = char_at(text, i) else { break };
            if is_word_continue(c) {
                if chars < MAX_TOKEN_CHARS {
                    self.buf.extend(c.to_lowercase());
                    chars += 1;
                } else {
                    truncated = true;
                }
                i += c.len_utf8();
            } else if is_apostrophe(c) && self.joins_next(text, i + c.len_utf8()) {
                self.push_apostrophe(&mut chars, &mut truncated);
                i += c.len_utf8();
            } else {
                break;
            }
        }
        if truncated {
            let kept = self.buf.trim_end_matches('\'').len();
            self.buf.truncate(kept);
        }
        emit(&self.buf, truncated);
        i
    }

    fn joins_next(&self, text: &str, next: usize) -> bool {
        char_at(text, next).is_some_and(is_word_start)
    }

    fn push_apostrophe(&mut self, chars: &mut usize, truncated: &mut bool) {
        if *chars < MAX_TOKEN_CHARS {
            self.buf.push('\'');
            *chars += 1;
        } else {
            *truncated = true;
        }
    }

    pub fn tokenize(&mut self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each_token(text, |t, _| out.push(t.to_string()));
        out
    }
}

/// Tokenizes plain text into lowercase word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::new().tokenize(text)
}

/// Truncates an already-tokenized word to [`MAX_TOKEN_CHARS`] characters.
/// Returns the kept prefix and whether anything was cut.
pub fn truncate_token(token: &str) -> (&str, bool) {
    match token.char_indices().nth(MAX_TOKEN_CHARS) {
        None => (token, false),
        Some((cut, _)) => (token[..cut].trim_end_matches('\''), true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_rules() {
        assert_eq!(
            tokenize("Happy days in Maui!"),
            ["happy", "days", "in", "maui"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize("... !!! -- ?").is_empty());
    }

    #[test]
    fn apostrophes() {
        assert_eq!(tokenize("Don't stop"), ["don't", "stop"]);
        assert_eq!(tokenize("don\u{2019}t"), ["don't"]);
        assert_eq!(tokenize("'quoted' rock'n'roll"), ["quoted", "rock'n'roll"]);
        assert_eq!(tokenize("dogs' bowls"), ["dogs", "bowls"]);
        assert_eq!(tokenize("a''b"), ["a", "b"]);
    }

    #[test]
    fn digits_and_mixed() {
        assert_eq!(
            tokenize("In 2015, 3.14 and mp3s"),
            ["in", "2015", "3", "14", "and", "mp3s"]
        );
        assert_eq!(tokenize("e-mail foo_bar"), ["e", "mail", "foo", "bar"]);
    }

    #[test]
    fn unicode() {
        assert_eq!(tokenize("CAFÉ Ünïcode"), ["café", "ünïcode"]);
        assert_eq!(tokenize("cafe\u{301} x"), ["cafe\u{301}", "x"]);
        assert_eq!(tokenize("\u{301}abc"), ["abc"]);
        assert_eq!(tokenize("日本語 テキスト"), ["日本語", "テキスト"]);
        assert_eq!(tokenize("ΣΟΦΙΑ"), ["σοφια"]);
    }

    #[test]
    fn truncation() {
        let long = "a".repeat(100);
        let mut tk = Tokenizer::new();
        let mut seen = Vec::new();
        tk.for_each_token(&format!("x {long} y"), |t, cut| {
            seen.push((t.to_string(), cut))
        });
        assert_eq!(seen.len(), 3);
        assert_eq!(seen[1].0.chars().count(), MAX_TOKEN_CHARS);
        assert!(seen[1].1);
        assert!(!seen[0].1 && !seen[2].1);

        let (kept, cut) = truncate_token(&long);
        assert_eq!(kept.len(), MAX_TOKEN_CHARS);
        assert!(cut);
        assert_eq!(truncate_token("short"), ("short", false));
    }

    #[test]
    fn truncation_drops_dangling_apostrophe() {
        let text = format!("{}'{}", "b".repeat(63), "c".repeat(10));
        let toks = tokenize(&text);
        assert_eq!(toks, ["b".repeat(63)]);
    }

    proptest! {
        #[test]
        fn tokens_are_clean(text in any::<String>()) {
            for tok in tokenize(&text) {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.chars().any(char::is_whitespace));
                prop_assert_eq!(tok.to_lowercase(), tok.clone());
                prop_assert!(tok.chars().count() <= MAX_TOKEN_CHARS + 1);
            }
        }

        #[test]
        fn order_is_preserved(words in proptest::collection::vec("[a-z]{1,8}", 0..20)) {
            let text = words.join(" , ");
            prop_assert_eq!(tokenize(&text), words);
        }
    }
}
