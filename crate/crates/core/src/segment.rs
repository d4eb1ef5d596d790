//! Period/abbreviation-aware sentence splitting.

use crate::graph_model::{Sentence, SentenceId};

const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "etc", "vs", "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "inc", "ltd", "co", "fig", "no",
    "approx", "u.s", "u.k", "cf", "al",
];

fn is_abbreviation(word: &str) -> bool {
    let trimmed = word
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .trim_end_matches('.')
        .to_lowercase();
    if trimmed.is_empty() {
        return false;
    }
    // Single capital initials such as "J." in "J. Smith".
    if trimmed.chars().count() == 1 && word.trim_start_matches(|c: char| !c.is_alphanumeric()).starts_with(char::is_uppercase) {
        return true;
    }
    ABBREVIATIONS.contains(&trimmed.as_str())
}

/// Splits `text` into sentences with character offsets.
///
/// A sentence ends at `.`, `!` or `?` (plus trailing closing quotes or
/// brackets) followed by whitespace and an uppercase letter, digit or
/// opening quote, or at the end of the text. A period that closes a known
/// abbreviation does not end a sentence. Leading and trailing whitespace is
/// excluded from every sentence.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut bounds = Vec::new();
    let mut start = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        if matches!(c, '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '"' | '\'' | ')' | ']' | '”' | '’' | '.' | '!' | '?') {
                end += 1;
            }
            let next = chars[end..].iter().position(|c| !c.is_whitespace()).map(|p| end + p);
            let boundary = match next {
                None => true,
                Some(n) => {
                    n > end && {
                        let following = chars[n];
                        following.is_uppercase() || following.is_ascii_digit() || matches!(following, '"' | '“' | '(' | '\'')
                    }
                }
            };
            let abbreviation = c == '.' && {
                let word_start = chars[..i].iter().rposition(|c| c.is_whitespace()).map_or(0, |p| p + 1);
                let word: String = chars[word_start..=i].iter().collect();
                is_abbreviation(&word)
            };
            if boundary && !abbreviation {
                bounds.push((start.take().unwrap(), end));
                i = end;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut end = chars.len();
        while end > s && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > s {
            bounds.push((s, end));
        }
    }
    bounds
        .into_iter()
        .enumerate()
        .map(|(order, (start, end))| Sentence {
            id: SentenceId::from_order(order),
            order,
            start,
            end,
        })
        .collect()
}
