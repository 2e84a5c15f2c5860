/// Word characters form maximal runs; every other non-whitespace char is a
/// token of its own.
fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Tokens with their starting byte offset in `text`.
pub fn tokenize_spans(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            if run_start.is_none() {
                run_start = Some(i);
            }
            continue;
        }
        if let Some(s) = run_start.take() {
            out.push((s, &text[s..i]));
        }
        if !c.is_whitespace() {
            out.push((i, &text[i..i + c.len_utf8()]));
        }
    }
    if let Some(s) = run_start {
        out.push((s, &text[s..]));
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|(_, t)| t.to_string()).collect()
}

pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_punctuation() {
        assert_eq!(tokenize("def f(x):"), ["def", "f", "(", "x", ")", ":"]);
        assert_eq!(
            tokenize("will_it_fly(q,w)"),
            ["will_it_fly", "(", "q", ",", "w", ")"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
    }

    #[test]
    fn multibyte_characters() {
        assert_eq!(tokenize("café—ok"), ["café", "—", "ok"]);
    }

    #[test]
    fn detokenize_joins_with_spaces() {
        assert_eq!(detokenize(&["a", "(", "b"]), "a ( b");
    }

    proptest! {
        #[test]
        fn round_trip_is_stable(s in "\\PC{0,60}") {
            let toks = tokenize(&s);
            prop_assert_eq!(tokenize(&detokenize(&toks)), toks);
        }
    }
}
