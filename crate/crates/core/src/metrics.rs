//! Character error rate scoring: text normalization, Levenshtein distance,
//! corpus and cross-set aggregation, and the presentation rounding rules.

use icu_normalizer::ComposingNormalizer;
use icu_properties::{props::GeneralCategory, props::GeneralCategoryGroup, CodePointMapData};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Controls text normalization ahead of scoring. Compatibility (NFKC)
/// normalization and whitespace removal are always applied; punctuation
/// stripping is optional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NormalizationOptions {
    #[serde(default)]
    pub strip_punctuation: bool,
}

/// Applies NFKC, removes all whitespace, and (optionally) drops
/// punctuation. NFKC runs first so compatibility forms such as ideographic
/// spaces and full-width punctuation are seen by the later filters.
pub fn normalize(text: &str, opts: &NormalizationOptions) -> String {
    let nfkc = ComposingNormalizer::new_nfkc();
    let normalized = nfkc.normalize(text);
    let categories = CodePointMapData::<GeneralCategory>::new();
    normalized
        .chars()
        .filter(|c| !c.is_whitespace())
        .filter(|c| {
            !(opts.strip_punctuation
                && GeneralCategoryGroup::Punctuation.contains(categories.get(*c)))
        })
        .collect()
}

/// A reference transcript paired with a hypothesis.
///
/// An empty reference is almost always an upstream data bug, so it must be
/// requested explicitly via `allowing_empty_reference`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtterancePair {
    pub reference: String,
    pub hypothesis: String,
    #[serde(default)]
    pub allow_empty_reference: bool,
}

impl UtterancePair {
    pub fn new(
        reference: impl Into<String>,
        hypothesis: impl Into<String>,
    ) -> Result<Self, MetricsError> {
        let reference = reference.into();
        if reference.is_empty() {
            return Err(MetricsError::EmptyReference);
        }
        Ok(UtterancePair { reference, hypothesis: hypothesis.into(), allow_empty_reference: false })
    }

    pub fn allowing_empty_reference(
        reference: impl Into<String>,
        hypothesis: impl Into<String>,
    ) -> Self {
        UtterancePair {
            reference: reference.into(),
            hypothesis: hypothesis.into(),
            allow_empty_reference: true,
        }
    }
}

/// Levenshtein distance over Unicode scalar values, unit costs.
pub fn edit_distance(reference: &str, hypothesis: &str) -> usize {
    let r: Vec<char> = reference.chars().collect();
    let h: Vec<char> = hypothesis.chars().collect();
    if r.is_empty() {
        return h.len();
    }
    if h.is_empty() {
        return r.len();
    }
    // Two rows suffice: each cell depends only on the previous row and the
    // cell to the left.
    let mut prev: Vec<usize> = (0..=h.len()).collect();
    let mut cur = vec![0usize; h.len() + 1];
    for (i, rc) in r.iter().enumerate() {
        cur[0] = i + 1;
        for (j, hc) in h.iter().enumerate() {
            let substitution = prev[j] + usize::from(rc != hc);
            let deletion = prev[j + 1] + 1;
            let insertion = cur[j] + 1;
            cur[j + 1] = substitution.min(deletion).min(insertion);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[h.len()]
}

/// Corpus-level CER as a fraction: total edits over total reference length,
/// both counted after normalization. Pairs whose normalized reference is
/// empty contribute their hypothesis length as pure insertions.
pub fn corpus_cer(
    pairs: &[UtterancePair],
    opts: &NormalizationOptions,
) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let mut edits = 0usize;
    let mut ref_len = 0usize;
    for pair in pairs {
        if pair.reference.is_empty() && !pair.allow_empty_reference {
            return Err(MetricsError::EmptyReference);
        }
        let reference = normalize(&pair.reference, opts);
        let hypothesis = normalize(&pair.hypothesis, opts);
        edits += edit_distance(&reference, &hypothesis);
        ref_len += reference.chars().count();
    }
    if ref_len == 0 {
        return Err(MetricsError::UndefinedCer);
    }
    Ok(edits as f64 / ref_len as f64)
}

/// CER of one test set, as a percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetScore {
    pub test_set: String,
    pub cer: f64,
}

impl TestSetScore {
    pub fn new(test_set: impl Into<String>, cer: f64) -> Self {
        TestSetScore { test_set: test_set.into(), cer }
    }
}

/// Unweighted mean CER across test sets, unrounded.
pub fn average_cer(scores: &[TestSetScore]) -> Result<f64, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::NoScores);
    }
    Ok(scores.iter().map(|s| s.cer).sum::<f64>() / scores.len() as f64)
}

/// Fractional improvement of `improved` over `baseline`; positive when the
/// error went down.
pub fn relative_reduction(baseline: f64, improved: f64) -> Result<f64, MetricsError> {
    if !(baseline > 0.0) || !baseline.is_finite() {
        return Err(MetricsError::NonPositiveBaseline);
    }
    if !improved.is_finite() {
        return Err(MetricsError::NonFiniteValue);
    }
    Ok((baseline - improved) / baseline)
}

/// Rounds half away from zero at `decimals` places (at most 12).
///
/// Ties are decided on the value's 12-digit decimal rendering, so a mean
/// like 8.225 whose nearest float sits a hair below the tie still rounds
/// up to 8.23 the way it would by hand.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    assert!(decimals <= 12, "round_half_up supports at most 12 decimals");
    if !value.is_finite() {
        return value;
    }
    let rendered = format!("{:.12}", value.abs());
    let (int_part, frac_part) = rendered.split_once('.').expect("fixed formatting has a point");
    let mut digits: Vec<u8> =
        int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
    let keep = int_part.len() + decimals as usize;
    let mut carry = digits.get(keep).is_some_and(|&d| d >= 5);
    digits.truncate(keep);
    for d in digits.iter_mut().rev() {
        if !carry {
            break;
        }
        *d += 1;
        carry = *d == 10;
        if carry {
            *d = 0;
        }
    }
    let mut out = String::with_capacity(keep + 3);
    if carry {
        out.push('1');
    }
    for (i, d) in digits.iter().enumerate() {
        if i == int_part.len() {
            out.push('.');
        }
        out.push((b'0' + d) as char);
    }
    let magnitude: f64 = out.parse().expect("constructed decimal parses");
    if value < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// `round_half_up` at two decimals, rendered with trailing zeros kept.
pub fn format_cer(value: f64) -> String {
    format!("{:.2}", round_half_up(value, 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("reference text is empty (use allowing_empty_reference to permit this)")]
    EmptyReference,
    #[error("no utterance pairs to score")]
    NoPairs,
    #[error("no test-set scores to average")]
    NoScores,
    #[error("corpus CER undefined: total reference length is zero")]
    UndefinedCer,
    #[error("baseline must be positive")]
    NonPositiveBaseline,
    #[error("value must be finite")]
    NonFiniteValue,
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAIN: NormalizationOptions = NormalizationOptions { strip_punctuation: false };
    const NO_PUNCT: NormalizationOptions = NormalizationOptions { strip_punctuation: true };

    #[test]
    fn edit_distance_textbook_cases() {
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("", ""), 0);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("flaw", "lawn"), 2);
    }

    #[test]
    fn edit_distance_counts_unicode_scalars_not_bytes() {
        assert_eq!(edit_distance("中文", "中分"), 1);
        assert_eq!(edit_distance("日本語", "日本"), 1);
        assert_eq!(edit_distance("héllo", "hello"), 1);
    }

    #[test]
    fn normalization_applies_nfkc_and_removes_whitespace() {
        assert_eq!(normalize("Ａｂｃ", &PLAIN), "Abc");
        assert_eq!(normalize("a b\tc\nd", &PLAIN), "abcd");
        assert_eq!(normalize("a\u{00a0}b\u{3000}c", &PLAIN), "abc");
        assert_eq!(normalize("①", &PLAIN), "1");
    }

    #[test]
    fn punctuation_stripping_is_opt_in() {
        assert_eq!(normalize("你好。", &PLAIN), "你好。");
        assert_eq!(normalize("你好。", &NO_PUNCT), "你好");
        assert_eq!(normalize("it's, fine!", &NO_PUNCT), "itsfine");
        // Full-width punctuation still counts as punctuation after NFKC.
        assert_eq!(normalize("続く，まだ", &NO_PUNCT), "続くまだ");
    }

    #[test]
    fn corpus_cer_pools_edits_over_reference_length() {
        let pairs = vec![
            UtterancePair::new("abc", "abc").unwrap(),
            UtterancePair::new("你好", "你号").unwrap(),
        ];
        // 1 edit over 5 reference characters.
        assert_eq!(corpus_cer(&pairs, &PLAIN).unwrap(), 0.2);
    }

    #[test]
    fn corpus_cer_normalizes_before_scoring() {
        let pairs =
            vec![UtterancePair::new("今天 天气", "今天天气").unwrap()];
        assert_eq!(corpus_cer(&pairs, &PLAIN).unwrap(), 0.0);
        let pairs = vec![UtterancePair::new("你好。", "你好").unwrap()];
        assert_eq!(corpus_cer(&pairs, &NO_PUNCT).unwrap(), 0.0);
        assert!(corpus_cer(&pairs, &PLAIN).unwrap() > 0.0);
    }

    #[test]
    fn corpus_cer_guards_empty_input() {
        assert_eq!(corpus_cer(&[], &PLAIN), Err(MetricsError::NoPairs));
        assert!(UtterancePair::new("", "x").is_err());
        let allowed = vec![UtterancePair::allowing_empty_reference("", "xy")];
        // Only insertions, zero reference length: undefined.
        assert_eq!(corpus_cer(&allowed, &PLAIN), Err(MetricsError::UndefinedCer));
        let mixed = vec![
            UtterancePair::allowing_empty_reference("", "xy"),
            UtterancePair::new("abcd", "abcd").unwrap(),
        ];
        // 2 insertions over 4 reference characters.
        assert_eq!(corpus_cer(&mixed, &PLAIN).unwrap(), 0.5);
    }

    #[test]
    fn average_cer_is_the_unweighted_mean() {
        let scores = vec![TestSetScore::new("MEETING", 9.81), TestSetScore::new("NET", 7.45)];
        assert_eq!(average_cer(&scores).unwrap(), 8.63);
        assert!(average_cer(&[]).is_err());
    }

    #[test]
    fn relative_reduction_examples() {
        assert_eq!(relative_reduction(20.0, 15.0).unwrap(), 0.25);
        assert_eq!(relative_reduction(10.0, 12.0).unwrap(), -0.2);
        assert!(relative_reduction(0.0, 1.0).is_err());
        assert!(relative_reduction(-3.0, 1.0).is_err());
    }

    #[test]
    fn round_half_up_rounds_ties_away_from_zero() {
        assert_eq!(round_half_up(18.405, 2), 18.41);
        assert_eq!(round_half_up(8.225, 2), 8.23);
        assert_eq!(round_half_up(2.675, 2), 2.68);
        assert_eq!(round_half_up(2.665, 2), 2.67);
        assert_eq!(round_half_up(-2.675, 2), -2.68);
        assert_eq!(round_half_up(1.2344999, 2), 1.23);
        assert_eq!(round_half_up(0.995, 2), 1.0);
        assert_eq!(round_half_up(9.994, 2), 9.99);
        assert_eq!(round_half_up(0.5, 0), 1.0);
        assert_eq!(round_half_up(1.5, 0), 2.0);
        assert_eq!(round_half_up(12.0, 2), 12.0);
    }

    #[test]
    fn rounded_means_match_reported_two_decimal_values() {
        // Means of two-decimal inputs routinely land on exact .xx5 ties.
        let cases = [
            ((22.39, 19.33), 20.86),
            ((22.66, 18.54), 20.60),
            ((19.47, 17.34), 18.41),
            ((14.95, 12.75), 13.85),
            ((19.22, 12.34), 15.78),
            ((12.57, 9.49), 11.03),
            ((10.77, 7.86), 9.32),
            ((9.45, 7.00), 8.23),
            ((18.88, 11.48), 15.18),
            ((12.23, 8.58), 10.41),
        ];
        for ((m, n), expected) in cases {
            let avg = average_cer(&[TestSetScore::new("M", m), TestSetScore::new("N", n)]).unwrap();
            assert_eq!(round_half_up(avg, 2), expected, "mean of {m} and {n}");
        }
    }

    #[test]
    fn format_cer_keeps_trailing_zeros() {
        assert_eq!(format_cer(20.6), "20.60");
        assert_eq!(format_cer(8.225), "8.23");
    }
}
