use std::sync::LazyLock;

use regex::Regex;

use super::preprocess::USER_PLACEHOLDER;

static TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"https?://\S+",
        // emoticons, both orientations, plus hearts
        r"|<3+",
        r"|[<>]?[:;=8][\-o\*']?[\)\]\(\[dDpP/\}\{@\|\\]+",
        r"|[\)\]\(\[\}\{@\|\\][\-o\*']?[:;=8][<>]?",
        r"|[@#]\w+",
        r"|\d+(?:[.,:]\d+)+",
        r"|\w+(?:[-'’]\w+)*",
        r"|\.{2,}",
        r"|\S",
    ))
    .expect("token regex")
});

static EMOJI_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^:[^\s:]+:$").expect("emoji-name regex"));

/// Social-media-aware tokenization.
///
/// Keeps the mention placeholder, emoji names (`:red_heart:`), emoticons,
/// hashtags, mentions and contractions (`i'm`) as single tokens; splits other
/// punctuation into one-character tokens. Case is left untouched.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk == USER_PLACEHOLDER || EMOJI_NAME.is_match(chunk) {
            tokens.push(chunk.to_string());
            continue;
        }
        tokens.extend(TOKEN.find_iter(chunk).map(|m| m.as_str().to_string()));
    }
    tokens
}
