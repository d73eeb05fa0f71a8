//! Case-insensitive substring matching with byte offsets into the original
//! string, used for answer-in-context validation and counterfactual rewriting.

/// Per lowered character: where it starts in the lowered string, the byte
/// range of the original character it came from, and whether it is the first
/// character of that original character's lowercase expansion.
struct FoldedChar {
    lowered_start: usize,
    orig_start: usize,
    orig_end: usize,
    expansion_start: bool,
}

fn fold(s: &str) -> (String, Vec<FoldedChar>) {
    let mut lowered = String::with_capacity(s.len());
    let mut map = Vec::with_capacity(s.len());
    for (orig_start, c) in s.char_indices() {
        let orig_end = orig_start + c.len_utf8();
        for (k, lc) in c.to_lowercase().enumerate() {
            map.push(FoldedChar {
                lowered_start: lowered.len(),
                orig_start,
                orig_end,
                expansion_start: k == 0,
            });
            lowered.push(lc);
        }
    }
    (lowered, map)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Non-overlapping, left-to-right occurrences of `needle` in `haystack`,
/// compared after lowercasing both sides. Returned ranges are byte offsets
/// into the original `haystack`. With `word_boundary`, a match is dropped
/// when the adjacent original character on either side is a word character,
/// so "US" never matches inside "USSR".
pub(crate) fn occurrences_ci(haystack: &str, needle: &str, word_boundary: bool) -> Vec<(usize, usize)> {
    if needle.is_empty() {
        return Vec::new();
    }
    let (lowered, map) = fold(haystack);
    let needle_lowered = needle.to_lowercase();
    let mut out = Vec::new();
    for (pos, matched) in lowered.match_indices(needle_lowered.as_str()) {
        let end = pos + matched.len();
        // Matches must cover whole original characters: a match that starts or
        // ends inside one character's lowercase expansion has no counterpart
        // in the original string.
        let Ok(first) = map.binary_search_by_key(&pos, |fc| fc.lowered_start) else {
            continue;
        };
        if !map[first].expansion_start {
            continue;
        }
        let last = match map.binary_search_by_key(&end, |fc| fc.lowered_start) {
            Ok(next) => {
                if !map[next].expansion_start {
                    continue;
                }
                next - 1
            }
            Err(next) if next == map.len() => map.len() - 1,
            Err(_) => continue,
        };
        let (orig_start, orig_end) = (map[first].orig_start, map[last].orig_end);
        if word_boundary {
            let before = haystack[..orig_start].chars().next_back();
            let after = haystack[orig_end..].chars().next();
            if before.is_some_and(is_word_char) || after.is_some_and(is_word_char) {
                continue;
            }
        }
        out.push((orig_start, orig_end));
    }
    out
}

/// Case-insensitive substring containment (no word-boundary requirement).
pub(crate) fn contains_ci(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return true;
    }
    !occurrences_ci(haystack, needle, false).is_empty()
}

/// Replaces every word-boundary occurrence of `needle` (case-insensitive)
/// with `replacement`, inserted verbatim. Returns the rewritten string and
/// the number of occurrences replaced.
pub(crate) fn replace_word_ci(haystack: &str, needle: &str, replacement: &str) -> (String, usize) {
    let ranges = occurrences_ci(haystack, needle, true);
    if ranges.is_empty() {
        return (haystack.to_string(), 0);
    }
    let mut out = String::with_capacity(haystack.len());
    let mut cursor = 0;
    for &(start, end) in &ranges {
        out.push_str(&haystack[cursor..start]);
        out.push_str(replacement);
        cursor = end;
    }
    out.push_str(&haystack[cursor..]);
    (out, ranges.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_case_insensitive_occurrences() {
        assert_eq!(occurrences_ci("Ukraine and UKRAINE", "ukraine", false).len(), 2);
        assert!(contains_ci("Ukraine borders with seven countries", "ukraine"));
        assert!(!contains_ci("Brazil borders with seven countries", "ukraine"));
    }

    #[test]
    fn word_boundary_skips_embedded_matches() {
        assert_eq!(occurrences_ci("the USSR and the US", "US", true).len(), 1);
        assert_eq!(occurrences_ci("USSR", "US", true).len(), 0);
        // Without boundaries the embedded match counts.
        assert_eq!(occurrences_ci("USSR", "US", false).len(), 1);
    }

    #[test]
    fn matches_do_not_overlap() {
        assert_eq!(occurrences_ci("aaaa", "aa", false), vec![(0, 2), (2, 4)]);
    }

    #[test]
    fn replacement_is_verbatim_and_counted() {
        let (out, n) = replace_word_ci("Ukraine borders. Ukraine is large.", "ukraine", "Brazil");
        assert_eq!(out, "Brazil borders. Brazil is large.");
        assert_eq!(n, 2);
    }

    #[test]
    fn replacement_respects_boundaries() {
        let (out, n) = replace_word_ci("the USSR endures", "US", "Canada");
        assert_eq!(out, "the USSR endures");
        assert_eq!(n, 0);
    }

    #[test]
    fn multibyte_text_keeps_offsets() {
        let (out, n) = replace_word_ci("Voilà — Çelik spoke", "çelik", "Østre");
        assert_eq!(out, "Voilà — Østre spoke");
        assert_eq!(n, 1);
        assert!(contains_ci("naïve NAÏVE", "Naïve"));
    }

    #[test]
    fn empty_needle_has_no_occurrences() {
        assert!(occurrences_ci("abc", "", true).is_empty());
        assert!(contains_ci("abc", ""));
    }
}
