//! Edge-gating predicates for the layered search.
//!
//! A "word" character is any alphanumeric char. Besides whole words, the
//! only-words predicate also admits a maximal run of non-word characters so
//! that separators such as `://` can be produced before the last layer.

use serde::{Deserialize, Serialize};

fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

fn word_before(k: usize, o: &[char]) -> bool {
    k > 0 && is_word(o[k - 1])
}

fn word_after(l: usize, o: &[char]) -> bool {
    l < o.len() && is_word(o[l])
}

/// `o[k..l]` is one whole word, or one maximal run of separators.
pub fn only_words(k: usize, l: usize, o: &[char]) -> bool {
    if k >= l || l > o.len() {
        return false;
    }
    let span = &o[k..l];
    if span.iter().all(|&c| is_word(c)) {
        return !word_before(k, o) && !word_after(l, o);
    }
    span.iter().all(|&c| !is_word(c)) && (k == 0 || is_word(o[k - 1])) && (l == o.len() || is_word(o[l]))
}

/// Neither neighbour of `o[k..l]` is a word character.
pub fn multiple_words(k: usize, l: usize, o: &[char]) -> bool {
    k < l && l <= o.len() && !word_before(k, o) && !word_after(l, o)
}

/// Every character of `o[k..l]` is a word character.
pub fn inside_words(k: usize, l: usize, o: &[char]) -> bool {
    k < l && l <= o.len() && o[k..l].iter().all(|&c| is_word(c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerFn {
    OnlyWords,
    MultipleWords,
    InsideOrMultiple,
    True,
    False,
}

impl LayerFn {
    pub fn eval(self, k: usize, l: usize, o: &[char]) -> bool {
        match self {
            LayerFn::OnlyWords => only_words(k, l, o),
            LayerFn::MultipleWords => multiple_words(k, l, o),
            LayerFn::InsideOrMultiple => inside_words(k, l, o) || multiple_words(k, l, o),
            LayerFn::True => true,
            LayerFn::False => false,
        }
    }
}

/// Gates for substring/replace atoms, constants and gaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerConfig {
    pub lambda_s: LayerFn,
    pub lambda_c: LayerFn,
    pub lambda_a: LayerFn,
}

impl LayerConfig {
    pub const FULL: LayerConfig =
        LayerConfig { lambda_s: LayerFn::True, lambda_c: LayerFn::True, lambda_a: LayerFn::True };

    pub fn without_gaps(self) -> LayerConfig {
        LayerConfig { lambda_a: LayerFn::False, ..self }
    }
}

/// The four layers, searched in order.
pub fn layer_predicates() -> [LayerConfig; 4] {
    use LayerFn::*;
    [
        LayerConfig { lambda_s: OnlyWords, lambda_c: OnlyWords, lambda_a: OnlyWords },
        LayerConfig { lambda_s: MultipleWords, lambda_c: OnlyWords, lambda_a: OnlyWords },
        LayerConfig { lambda_s: InsideOrMultiple, lambda_c: OnlyWords, lambda_a: OnlyWords },
        LayerConfig::FULL,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn definitions() {
        let o = cs("eur-usd");
        assert!(only_words(0, 3, &o));
        assert!(!only_words(0, 2, &o));
        assert!(only_words(3, 4, &o));
        assert!(multiple_words(0, 7, &o));
        assert!(!multiple_words(1, 7, &o));
        assert!(inside_words(0, 3, &cs("eurusd")));
        assert!(!inside_words(2, 5, &cs("eu-rus")));
    }

    #[test]
    fn separators_are_runs() {
        let o = cs("http://www.x");
        assert!(only_words(4, 7, &o));
        assert!(!only_words(4, 6, &o));
        assert!(!only_words(3, 7, &o));
    }

    #[test]
    fn data_letter_excluded() {
        let o = cs("eur-usd-historical-data");
        assert!(!only_words(19, 20, &o));
        assert!(only_words(19, 23, &o));
    }
}
