//! Tokenizer shared by every media profile.
//!
//! A token is a maximal run of letters, digits, `'`, `-`, `&` and `;`
//! containing at least one letter or digit. `&` and `;` are token characters
//! so that HTML entities such as `&gt;` survive as single tokens. Runs are
//! lowercased. Whitespace-delimited chunks that look like URLs are dropped
//! under every profile; the tweet profile additionally drops mentions,
//! hashtags and the retweet marker `RT`.

use super::TokenBag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenProfile {
    Blog,
    Tweet,
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '-' | '&' | ';')
}

fn is_url(chunk: &str) -> bool {
    let head: String = chunk.chars().take(8).collect::<String>().to_lowercase();
    head.starts_with("http://") || head.starts_with("https://") || head.starts_with("www.")
}

fn emit_run(run: &str, out: &mut impl FnMut(&str)) {
    let lowered = run.to_lowercase();
    // Lowercasing can introduce non-token characters (e.g. combining marks).
    for piece in lowered.split(|c: char| !is_token_char(c)) {
        if piece.chars().any(char::is_alphanumeric) {
            out(piece);
        }
    }
}

fn for_each_token(text: &str, profile: TokenProfile, mut out: impl FnMut(&str)) {
    for chunk in text.split_whitespace() {
        if is_url(chunk) {
            continue;
        }
        let mut prev: Option<char> = None;
        let mut run_start: Option<(usize, Option<char>)> = None;
        let flush = |start: usize, end: usize, before: Option<char>, out: &mut dyn FnMut(&str)| {
            let run = &chunk[start..end];
            if profile == TokenProfile::Tweet && (matches!(before, Some('@' | '#')) || run == "RT") {
                return;
            }
            emit_run(run, &mut |t| out(t));
        };
        for (i, c) in chunk.char_indices() {
            if is_token_char(c) {
                if run_start.is_none() {
                    run_start = Some((i, prev));
                }
            } else if let Some((start, before)) = run_start.take() {
                flush(start, i, before, &mut out);
            }
            prev = Some(c);
        }
        if let Some((start, before)) = run_start {
            flush(start, chunk.len(), before, &mut out);
        }
    }
}

/// Tokens in text order.
pub fn token_stream(text: &str, profile: TokenProfile) -> Vec<String> {
    let mut tokens = Vec::new();
    for_each_token(text, profile, |t| tokens.push(t.to_string()));
    tokens
}

pub fn tokenize(text: &str, profile: TokenProfile) -> TokenBag {
    let mut bag = TokenBag::new();
    tokenize_into(text, profile, &mut bag);
    bag
}

pub fn tokenize_into(text: &str, profile: TokenProfile, bag: &mut TokenBag) {
    for_each_token(text, profile, |t| bag.add(t, 1));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bag(tokens: &[&str]) -> TokenBag {
        tokens.iter().collect()
    }

    #[test]
    fn lowercases_and_strips_punctuation() {
        assert_eq!(
            tokenize("Hello from Austin!", TokenProfile::Blog),
            bag(&["hello", "from", "austin"])
        );
    }

    #[test]
    fn tweet_profile_drops_mentions_hashtags_and_retweet_marker() {
        assert_eq!(
            tokenize("@bob RT visiting #NYC today", TokenProfile::Tweet),
            bag(&["visiting", "today"])
        );
        assert_eq!(
            tokenize("@bob RT visiting #NYC today", TokenProfile::Blog),
            bag(&["bob", "rt", "visiting", "nyc", "today"])
        );
        assert_eq!(tokenize("(@bob) hi", TokenProfile::Tweet), bag(&["hi"]));
        assert_eq!(tokenize("RT: ok", TokenProfile::Tweet), bag(&["ok"]));
        // Only the marker itself, not the word.
        assert_eq!(tokenize("rt art", TokenProfile::Tweet), bag(&["rt", "art"]));
    }

    #[test]
    fn street_numbers_short_names_and_entities_survive() {
        assert_eq!(
            tokenize("74th &gt; LA", TokenProfile::Tweet),
            bag(&["74th", "&gt;", "la"])
        );
        assert_eq!(tokenize("rock &amp; roll", TokenProfile::Blog), bag(&["rock", "&amp;", "roll"]));
    }

    #[test]
    fn apostrophes_and_hyphens_stay_inside_tokens() {
        assert_eq!(
            tokenize("Don't stop, Winston-Salem -- ok", TokenProfile::Blog),
            bag(&["don't", "stop", "winston-salem", "ok"])
        );
    }

    #[test]
    fn urls_are_removed_under_both_profiles() {
        for p in [TokenProfile::Blog, TokenProfile::Tweet] {
            assert_eq!(
                tokenize("see https://t.co/xyz and www.example.com now HTTP://X.Y", p),
                bag(&["see", "and", "now"])
            );
        }
    }

    #[test]
    fn empty_and_unicode_input() {
        assert!(tokenize("", TokenProfile::Blog).is_empty());
        assert!(tokenize("  ... !!! ", TokenProfile::Tweet).is_empty());
        assert_eq!(
            tokenize("Café São_Paulo", TokenProfile::Blog),
            bag(&["café", "são", "paulo"])
        );
    }

    #[test]
    fn token_stream_preserves_order() {
        assert_eq!(token_stream("b a b", TokenProfile::Blog), vec!["b", "a", "b"]);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[a-zA-Z0-9 @#&;'\\-.,!:/éÉßñ]{0,80}").unwrap()
    }

    proptest! {
        #[test]
        fn tokenization_is_idempotent(text in text_strategy()) {
            for p in [TokenProfile::Blog, TokenProfile::Tweet] {
                let tokens = token_stream(&text, p);
                let again = token_stream(&tokens.join(" "), p);
                prop_assert_eq!(&tokens, &again);
            }
        }

        #[test]
        fn tweet_output_is_sub_multiset_of_blog_output(text in text_strategy()) {
            let tweet = tokenize(&text, TokenProfile::Tweet);
            let blog = tokenize(&text, TokenProfile::Blog);
            prop_assert!(tweet.is_sub_multiset_of(&blog));
        }

        #[test]
        fn tokens_are_lowercase_and_nonempty(text in text_strategy()) {
            for t in token_stream(&text, TokenProfile::Blog) {
                prop_assert!(!t.is_empty());
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
