//! Word normalization, paragraph splitting and token counting.

use alloc::string::String;
use alloc::vec::Vec;

/// Append the lowercase form of each maximal alphanumeric run of `text` to
/// `sink`, reusing `buf` as scratch space.
pub fn for_each_word(text: &str, buf: &mut String, mut sink: impl FnMut(&str)) {
    buf.clear();
    for c in text.chars() {
        if c.is_alphanumeric() {
            buf.extend(c.to_lowercase());
        } else if !buf.is_empty() {
            sink(buf);
            buf.clear();
        }
    }
    if !buf.is_empty() {
        sink(buf);
        buf.clear();
    }
}

/// Normalized words of `text`, in order, with repeats.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut buf = String::new();
    for_each_word(text, &mut buf, |w| out.push(String::from(w)));
    out
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Split a document into paragraphs separated by one or more blank lines.
///
/// Returned slices borrow from `text` and exclude the line terminator of their
/// last line, so paragraph bytes are never altered.
pub fn split_paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0usize;
    let mut pos = 0usize;
    for line in text.split_inclusive('\n') {
        let body = line.strip_suffix('\n').unwrap_or(line);
        let body = body.strip_suffix('\r').unwrap_or(body);
        if is_blank(body) {
            if let Some(s) = start.take() {
                out.push(&text[s..end]);
            }
        } else {
            if start.is_none() {
                start = Some(pos);
            }
            end = pos + body.len();
        }
        pos += line.len();
    }
    if let Some(s) = start {
        out.push(&text[s..end]);
    }
    out
}

pub const PARAGRAPH_SEPARATOR: &str = "\n\n";

pub fn join_paragraphs<S: AsRef<str>>(paragraphs: &[S]) -> String {
    let mut out = String::new();
    for (i, p) in paragraphs.iter().enumerate() {
        if i > 0 {
            out.push_str(PARAGRAPH_SEPARATOR);
        }
        out.push_str(p.as_ref());
    }
    out
}

/// Counts tokens of a text span.
pub trait TokenCounter {
    fn count(&self, text: &str) -> u64;
}

/// Whitespace-delimited token count.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokens;

impl TokenCounter for WhitespaceTokens {
    fn count(&self, text: &str) -> u64 {
        text.split_whitespace().count() as u64
    }
}

impl<T: TokenCounter + ?Sized> TokenCounter for &T {
    fn count(&self, text: &str) -> u64 {
        (**self).count(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn word_runs() {
        assert_eq!(words("New York's glass-bottle, 2nd!"), vec!["new", "york", "s", "glass", "bottle", "2nd"]);
        assert_eq!(words("ÉCOLE Straße"), vec!["école", "straße"]);
        assert!(words("  ,. ").is_empty());
    }

    #[test]
    fn paragraphs() {
        let doc = "first line\nsecond\n\n  \nthird\r\n\r\nfourth\n";
        assert_eq!(split_paragraphs(doc), vec!["first line\nsecond", "third", "fourth"]);
        assert!(split_paragraphs("").is_empty());
        assert!(split_paragraphs("\n \n").is_empty());
        assert_eq!(split_paragraphs("solo"), vec!["solo"]);
    }

    #[test]
    fn join_round_trip() {
        let ps = vec!["a b", "c\nd"];
        assert_eq!(split_paragraphs(&join_paragraphs(&ps)), ps);
    }

    #[test]
    fn whitespace_count() {
        assert_eq!(WhitespaceTokens.count("The capital of France is Paris"), 6);
        assert_eq!(WhitespaceTokens.count(""), 0);
    }
}
