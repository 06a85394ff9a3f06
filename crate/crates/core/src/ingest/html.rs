//! HTML to plain text.
//!
//! Removes tags and comments, drops `<script>`/`<style>` bodies, decodes the
//! five core named entities plus numeric references, and collapses runs of
//! whitespace. The output is a fixed point: stripping it again returns it
//! unchanged, even when decoded entities spell out markup (`&lt;b&gt;`).

use std::collections::HashMap;

/// Elements whose content is never text.
const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style"];

/// Tags that separate words when removed.
const BLOCK_ELEMENTS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "br",
    "dd",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "img",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "tbody",
    "td",
    "tfoot",
    "th",
    "thead",
    "title",
    "tr",
    "ul",
];

const CORE_ENTITIES: &[(&str, char)] = &[
    ("amp", '&'),
    ("lt", '<'),
    ("gt", '>'),
    ("quot", '"'),
    ("apos", '\''),
];

/// Longest entity body considered, e.g. `#x10FFFF`.
const MAX_ENTITY_LEN: usize = 32;

/// Tag stripper with a configurable named-entity table.
#[derive(Clone, Debug)]
pub struct HtmlStripper {
    entities: HashMap<String, char>,
}

impl Default for HtmlStripper {
    fn default() -> Self {
        HtmlStripper {
            entities: CORE_ENTITIES
                .iter()
                .map(|(name, c)| (name.to_string(), *c))
                .collect(),
        }
    }
}

impl HtmlStripper {
    /// Adds a named entity, e.g. `("nbsp", '\u{a0}')`.
    pub fn with_entity(mut self, name: &str, value: char) -> Self {
        self.entities.insert(name.to_string(), value);
        self
    }

    pub fn strip(&self, html: &str) -> String {
        let mut current = self.pass(html);
        while current.contains(['<', '&']) {
            let next = self.pass(&current);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn pass(&self, input: &str) -> String {
        let mut raw = String::with_capacity(input.len());
        let bytes = input.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'<' => match self.markup_len(input, i) {
                    Markup::Skip { len, separates } => {
                        if separates {
                            raw.push(' ');
                        }
                        i += len;
                    }
                    Markup::Text => {
                        raw.push('<');
                        i += 1;
                    }
                },
                b'&' => match self.entity_at(&input[i..]) {
                    Some((c, len)) => {
                        raw.push(c);
                        i += len;
                    }
                    None => {
                        raw.push('&');
                        i += 1;
                    }
                },
                _ => {
                    // copy the run up to the next markup byte in one go
                    let end = bytes[i..]
                        .iter()
                        .position(|&b| b == b'<' || b == b'&')
                        .map_or(bytes.len(), |p| i + p);
                    raw.push_str(&input[i..end]);
                    i = end;
                }
            }
        }
        collapse_whitespace(&raw)
    }

    fn markup_len(&self, input: &str, start: usize) -> Markup {
        let rest = &input[start..];
        if let Some(body) = rest.strip_prefix("<!--") {
            let len = body.find("-->").map_or(rest.len(), |p| 4 + p + 3);
            return Markup::Skip {
                len,
                separates: false,
            };
        }
        let after = rest.as_bytes().get(1).copied();
        let is_tag = matches!(after, Some(b) if b.is_ascii_alphabetic() || b == b'/' || b == b'!' || b == b'?');
        if !is_tag {
            return Markup::Text;
        }
        let Some(close) = rest.find('>') else {
            // unclosed tag at end of input: drop the remainder
            return Markup::Skip {
                len: rest.len(),
                separates: false,
            };
        };
        let inner = &rest[1..close];
        let closing = inner.starts_with('/');
        let name: String = inner
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let separates = BLOCK_ELEMENTS.contains(&name.as_str());
        let mut len = close + 1;
        if !closing && !inner.ends_with('/') && RAW_TEXT_ELEMENTS.contains(&name.as_str()) {
            len = match find_closing_tag(&rest[len..], &name) {
                Some(end) => len + end,
                None => rest.len(),
            };
            return Markup::Skip {
                len,
                separates: true,
            };
        }
        Markup::Skip { len, separates }
    }

    /// Decodes an entity at the start of `text` (which begins with `&`).
    fn entity_at(&self, text: &str) -> Option<(char, usize)> {
        let limit = text.len().min(MAX_ENTITY_LEN + 2);
        let semi = text.as_bytes()[1..limit].iter().position(|&b| b == b';')?;
        let body = &text[1..1 + semi];
        let decoded = if let Some(num) = body.strip_prefix('#') {
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) if !hex.is_empty() && hex.bytes().all(|b| b.is_ascii_hexdigit()) => {
                    u32::from_str_radix(hex, 16).ok()
                }
                Some(_) => None,
                None if !num.is_empty() && num.bytes().all(|b| b.is_ascii_digit()) => {
                    num.parse::<u32>().ok()
                }
                None => None,
            }?;
            if code == 0 {
                return None;
            }
            char::from_u32(code)?
        } else {
            *self.entities.get(body)?
        };
        Some((decoded, semi + 2))
    }
}

enum Markup {
    Skip { len: usize, separates: bool },
    Text,
}

/// Offset just past `</name ...>` (ASCII case-insensitive), if present.
fn find_closing_tag(text: &str, name: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(p) = text[from..].find("</") {
        let at = from + p;
        let name_end = at + 2 + name.len();
        if name_end <= bytes.len()
            && bytes[at + 2..name_end].eq_ignore_ascii_case(name.as_bytes())
            && !bytes
                .get(name_end)
                .is_some_and(|b| b.is_ascii_alphanumeric())
        {
            return Some(
                text[name_end..]
                    .find('>')
                    .map_or(text.len(), |g| name_end + g + 1),
            );
        }
        from = at + 2;
    }
    None
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Strips markup using the core entity table.
pub fn strip_html(html_body: &str) -> String {
    HtmlStripper::default().strip(html_body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_tags() {
        assert_eq!(strip_html("<p>hello <b>world</b></p>"), "hello world");
        assert_eq!(strip_html("wor<b>ld</b>"), "world");
        assert_eq!(strip_html("<p>one</p><p>two</p>"), "one two");
        assert_eq!(strip_html("line<br/>break"), "line break");
        assert_eq!(strip_html("<A HREF='x'>Link</A>"), "Link");
    }

    #[test]
    fn decodes_entities() {
        assert_eq!(strip_html("a &amp; b"), "a & b");
        assert_eq!(strip_html("&quot;hi&quot; &apos;x&apos;"), "\"hi\" 'x'");
        assert_eq!(strip_html("&#65;&#x42;&#X43;"), "ABC");
        assert_eq!(strip_html("caf&#233;"), "café");
        assert_eq!(strip_html("&nbsp;&mdash;"), "&nbsp;&mdash;");
        assert_eq!(strip_html("&#;&#x;&#0;&#xD800;"), "&#;&#x;&#0;&#xD800;");
        assert_eq!(strip_html("AT&T"), "AT&T");
        assert_eq!(strip_html("a &lt; b"), "a < b");
    }

    #[test]
    fn extra_entities() {
        let stripper = HtmlStripper::default().with_entity("nbsp", '\u{a0}');
        assert_eq!(stripper.strip("a&nbsp;&nbsp;b"), "a b");
    }

    #[test]
    fn removes_comments_scripts_and_styles() {
        assert_eq!(strip_html("a<!-- hidden -->b"), "ab");
        assert_eq!(
            strip_html("x<script type=\"t\">if (a < b) { y(); }</script>z"),
            "x z"
        );
        assert_eq!(strip_html("<STYLE>p { color: red }</Style>text"), "text");
        assert_eq!(strip_html("<script src='a.js'/>kept"), "kept");
        assert_eq!(strip_html("keep<script>never closed"), "keep");
        assert_eq!(strip_html("a<!-- never closed"), "a");
    }

    #[test]
    fn malformed_markup_is_best_effort() {
        assert_eq!(strip_html("a < b and c > d"), "a < b and c > d");
        assert_eq!(strip_html("text <div class="), "text");
        assert_eq!(strip_html("1<2"), "1<2");
        assert_eq!(strip_html(""), "");
        assert_eq!(strip_html("   \n\t "), "");
    }

    #[test]
    fn collapses_whitespace() {
        assert_eq!(strip_html("  a \n\n b\t\tc  "), "a b c");
        assert_eq!(strip_html("a&#32;&#32;&#10;b"), "a b");
    }

    #[test]
    fn escaped_markup_reaches_a_fixed_point() {
        let once = strip_html("see &lt;b&gt;bold&lt;/b&gt; here");
        assert_eq!(strip_html(&once), once);
        let once = strip_html("&amp;lt;p&amp;gt;");
        assert_eq!(strip_html(&once), once);
    }

    proptest! {
        #[test]
        fn idempotent(input in "[<>&#;a-zA-Z0-9/!\\- \\n'\"=]{0,80}") {
            let once = strip_html(&input);
            prop_assert_eq!(strip_html(&once), once);
        }

        #[test]
        fn idempotent_on_arbitrary_text(input in any::<String>()) {
            let once = strip_html(&input);
            prop_assert_eq!(strip_html(&once), once);
        }
    }
}
