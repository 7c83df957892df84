use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Splits text into lowercase, accent-folded tokens of at least two characters.
///
/// Text is lowercased, decomposed (NFKD) and stripped of combining marks, then
/// split on every non-alphanumeric character. There is no stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    let folded: String = text.to_lowercase().nfkd().filter(|&c| !is_combining_mark(c)).collect();
    folded.split(|c: char| !c.is_alphanumeric()).filter(|t| t.chars().count() >= 2).map(str::to_string).collect()
}
