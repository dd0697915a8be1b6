/// Counts sentences in a hint.
///
/// A boundary is a run of `.`, `!` or `?` followed by whitespace or the end of
/// the text. Anything inside backticks (inline spans or fenced blocks) is
/// ignored, as is punctuation followed by a non-space, so `v1.count` and
/// `3.5` never split. Any non-blank text counts as at least one sentence.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut pending = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '`' {
            let ticks = chars[i..].iter().take_while(|&&t| t == '`').count();
            let close = (i + ticks..chars.len()).find(|&j| {
                chars[j..].iter().take_while(|&&t| t == '`').count() == ticks
                    && (j == 0 || chars[j - 1] != '`')
            });
            pending = true;
            i = match close {
                Some(j) => j + ticks,
                None => chars.len(),
            };
            continue;
        }
        if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j < chars.len() && matches!(chars[j], '.' | '!' | '?') {
                j += 1;
            }
            if pending && (j == chars.len() || chars[j].is_whitespace()) {
                count += 1;
                pending = false;
            }
            i = j;
            continue;
        }
        if !c.is_whitespace() {
            pending = true;
        }
        i += 1;
    }
    if pending {
        count += 1;
    }
    count.max(1)
}
