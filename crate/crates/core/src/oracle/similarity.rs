use std::sync::OnceLock;

use regex::Regex;

struct Masks {
    quoted: Regex,
    position: Regex,
    digits: Regex,
    token: Regex,
}

fn masks() -> &'static Masks {
    static MASKS: OnceLock<Masks> = OnceLock::new();
    MASKS.get_or_init(|| Masks {
        quoted: Regex::new(r#"'(?:[^']|'')*'|"[^"]*"|`[^`]*`"#).unwrap(),
        position: Regex::new(r"(?i)\b(line|position|column|character|offset)\s+\d+").unwrap(),
        digits: Regex::new(r"\d+").unwrap(),
        token: Regex::new(r"<\w+>|\w+|[^\w\s]").unwrap(),
    })
}

/// Masks quoted literals, position coordinates and numbers, lowercases,
/// and splits into word and punctuation tokens.
pub fn normalize_error(message: &str) -> Vec<String> {
    let m = masks();
    let s = m.quoted.replace_all(message, " <str> ");
    let s = m.position.replace_all(&s, " <pos> ");
    let s = m.digits.replace_all(&s, " <num> ");
    let s = s.to_lowercase();
    m.token.find_iter(&s).map(|t| t.as_str().to_string()).collect()
}

/// `1 - levenshtein / max_len` over normalized token sequences.
pub fn error_similarity(a: &str, b: &str) -> f64 {
    let (ta, tb) = (normalize_error(a), normalize_error(b));
    let longest = ta.len().max(tb.len());
    if longest == 0 {
        return 1.0;
    }
    let distance = strsim::generic_levenshtein(&ta, &tb);
    1.0 - distance as f64 / longest as f64
}
