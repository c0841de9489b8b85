/// Lowercases, splits on whitespace, and splits leading and trailing ASCII
/// punctuation off each chunk as one-character tokens.
pub fn tokenize(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in raw.split_whitespace() {
        let lower = chunk.to_lowercase();
        let bytes = lower.as_bytes();
        let start = bytes.iter().take_while(|b| b.is_ascii_punctuation()).count();
        if start == bytes.len() {
            out.extend(lower.chars().map(String::from));
            continue;
        }
        let end = bytes.len() - bytes.iter().rev().take_while(|b| b.is_ascii_punctuation()).count();
        out.extend(lower[..start].chars().map(String::from));
        out.push(lower[start..end].to_string());
        out.extend(lower[end..].chars().map(String::from));
    }
    out
}
