//! String similarity kernels used by the pairwise features.

use std::collections::BTreeSet;

use super::MISSING;

/// Minimum number of single-character insertions, deletions and substitutions.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - |LCS(a, b)| / max(|a|, |b|)`, defined as 0 when both are empty.
pub fn lcs_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    1.0 - lcs_len(&a, &b) as f64 / longest as f64
}

fn jaro(a: &[char], b: &[char]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_used = vec![false; b.len()];
    let mut a_matches = Vec::new();
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_used[j] && b[j] == *ca {
                b_used[j] = true;
                a_matches.push(*ca);
                break;
            }
        }
    }
    let m = a_matches.len();
    if m == 0 {
        return 0.0;
    }
    let b_matches = b
        .iter()
        .zip(&b_used)
        .filter(|(_, used)| **used)
        .map(|(c, _)| *c);
    let half_transpositions = a_matches
        .iter()
        .zip(b_matches)
        .filter(|(x, y)| **x != *y)
        .count();
    let t = half_transpositions as f64 / 2.0;
    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro-Winkler similarity with prefix scale 0.1 and a prefix cap of 4.
///
/// Inputs are put in a canonical order first so the result is symmetric even
/// where greedy matching is order dependent.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let sim = jaro(&a, &b);
    let prefix = a.iter().zip(&b).take(4).take_while(|(x, y)| x == y).count();
    sim + prefix as f64 * 0.1 * (1.0 - sim)
}

/// 0 when the shorter string is a prefix of the longer one, otherwise
/// `1 - common_prefix / len(shorter)`.
pub fn prefix_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let shorter = a.len().min(b.len());
    if shorter == 0 {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    1.0 - common as f64 / shorter as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgramUnit {
    Char,
    Word,
}

pub type NgramSet = BTreeSet<String>;

fn add_char_grams(text: &str, lo: usize, hi: usize, out: &mut NgramSet) {
    let chars: Vec<char> = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .chars()
        .flat_map(char::to_lowercase)
        .collect();
    for n in lo..=hi {
        for w in chars.windows(n) {
            out.insert(w.iter().collect());
        }
    }
}

fn add_word_grams(text: &str, lo: usize, hi: usize, out: &mut NgramSet) {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    for n in lo..=hi {
        for w in words.windows(n) {
            out.insert(w.join(" "));
        }
    }
}

/// Union of all n-grams with `n` in `lo..=hi` over every text in the bag.
/// Grams never span two texts.
pub fn ngram_set<S: AsRef<str>>(
    texts: &[S],
    unit: NgramUnit,
    (lo, hi): (usize, usize),
) -> NgramSet {
    assert!(
        lo >= 1 && lo <= hi,
        "n-gram range must satisfy 1 <= lo <= hi"
    );
    let mut out = NgramSet::new();
    for t in texts {
        match unit {
            NgramUnit::Char => add_char_grams(t.as_ref(), lo, hi, &mut out),
            NgramUnit::Word => add_word_grams(t.as_ref(), lo, hi, &mut out),
        }
    }
    out
}

/// `|A ∩ B| / |A ∪ B|`; missing when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return MISSING;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

pub fn ngram_jaccard<S: AsRef<str>>(
    a: &[S],
    b: &[S],
    unit: NgramUnit,
    range: (usize, usize),
) -> f64 {
    jaccard(&ngram_set(a, unit, range), &ngram_set(b, unit, range))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Edit distance by breadth-first search over single edits; only viable
    /// for tiny strings over a tiny alphabet.
    fn edit_distance_bfs(a: &str, b: &str) -> usize {
        use std::collections::{HashSet, VecDeque};
        let alphabet: BTreeSet<char> = a.chars().chain(b.chars()).collect();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(a.to_string(), 0usize)]);
        seen.insert(a.to_string());
        while let Some((s, d)) = queue.pop_front() {
            if s == b {
                return d;
            }
            let chars: Vec<char> = s.chars().collect();
            let mut next = Vec::new();
            for i in 0..=chars.len() {
                for &c in &alphabet {
                    let mut v = chars.clone();
                    v.insert(i, c);
                    next.push(v);
                }
                if i < chars.len() {
                    let mut v = chars.clone();
                    v.remove(i);
                    next.push(v);
                    for &c in &alphabet {
                        let mut v = chars.clone();
                        v[i] = c;
                        next.push(v);
                    }
                }
            }
            for v in next {
                let s: String = v.into_iter().collect();
                if s.chars().count() <= a.chars().count().max(b.chars().count()) + 1
                    && seen.insert(s.clone())
                {
                    queue.push_back((s, d + 1));
                }
            }
        }
        unreachable!()
    }

    /// Longest common subsequence by enumerating every subsequence of `a`.
    fn lcs_brute(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let is_subseq = |s: &[char]| {
            let mut it = b.iter();
            s.iter().all(|c| it.any(|x| x == c))
        };
        (0u32..1 << a.len())
            .filter_map(|mask| {
                let s: Vec<char> = (0..a.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| a[i])
                    .collect();
                is_subseq(&s).then_some(s.len())
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(edit_distance_bfs("kitten", "sitting"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_distance("abc", "abc"), 0.0);
        assert_eq!(lcs_brute("abcd", "axcy"), 2);
        assert_eq!(lcs_distance("abcd", "axcy"), 0.5);
        assert_eq!(lcs_distance("ab", "cd"), 1.0);
        assert_eq!(lcs_distance("", ""), 0.0);
    }

    /// Textbook Jaro-Winkler written independently: explicit match flags on
    /// both strings, transpositions counted by walking both flag arrays.
    fn jaro_winkler_reference(s1: &str, s2: &str) -> f64 {
        let a: Vec<char> = s1.chars().collect();
        let b: Vec<char> = s2.chars().collect();
        let range = (a.len().max(b.len()) / 2).saturating_sub(1);
        let mut fa = vec![false; a.len()];
        let mut fb = vec![false; b.len()];
        let mut m = 0.0;
        for i in 0..a.len() {
            let start = i.saturating_sub(range);
            let end = (i + range).min(b.len().saturating_sub(1));
            if start > end || b.is_empty() {
                continue;
            }
            for j in start..=end {
                if !fb[j] && a[i] == b[j] {
                    fa[i] = true;
                    fb[j] = true;
                    m += 1.0;
                    break;
                }
            }
        }
        if m == 0.0 {
            return 0.0;
        }
        let mut k = 0;
        let mut trans = 0.0;
        for i in 0..a.len() {
            if fa[i] {
                while !fb[k] {
                    k += 1;
                }
                if a[i] != b[k] {
                    trans += 0.5;
                }
                k += 1;
            }
        }
        let j = (m / a.len() as f64 + m / b.len() as f64 + (m - trans) / m) / 3.0;
        let mut l = 0.0;
        for i in 0..4.min(a.len()).min(b.len()) {
            if a[i] == b[i] {
                l += 1.0;
            } else {
                break;
            }
        }
        j + l * 0.1 * (1.0 - j)
    }

    #[test]
    fn jaro_winkler_examples() {
        let expected = jaro_winkler_reference("martha", "marhta");
        assert!((expected - 0.9611).abs() < 1e-4);
        assert!((jaro_winkler("martha", "marhta") - expected).abs() < 1e-12);
        assert_eq!(jaro_winkler("feldman", "feldman"), 1.0);
        assert_eq!(jaro_winkler("abc", "xyz"), 0.0);
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(prefix_distance("dan", "daniel"), 0.0);
        assert_eq!(prefix_distance("dana", "daniel"), 0.25);
        assert_eq!(prefix_distance("x", "y"), 1.0);
        assert_eq!(prefix_distance("", ""), 0.0);
    }

    #[test]
    fn ngram_examples() {
        let j = |a: &str, b: &str, unit, r| ngram_jaccard(&[a], &[b], unit, r);
        assert_eq!(
            j("graph theory", "graph theory", NgramUnit::Char, (2, 4)),
            1.0
        );
        assert_eq!(j("ab", "cd", NgramUnit::Char, (2, 2)), 0.0);
        assert_eq!(j("abcd", "bcde", NgramUnit::Char, (2, 2)), 0.5);
        assert!(j("", "", NgramUnit::Char, (2, 4)).is_nan());
        assert_eq!(j("", "abc", NgramUnit::Char, (2, 4)), 0.0);
        assert_eq!(
            j(
                "Deep Learning",
                "deep learning models",
                NgramUnit::Word,
                (1, 3)
            ),
            3.0 / 6.0
        );
    }

    proptest! {
        #[test]
        fn levenshtein_matches_bfs(a in "[ab]{0,4}", b in "[ab]{0,4}") {
            prop_assert_eq!(levenshtein(&a, &b), edit_distance_bfs(&a, &b));
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        }

        #[test]
        fn lcs_matches_enumeration(a in "[abc]{0,7}", b in "[abc]{0,7}") {
            let longest = a.len().max(b.len());
            let expected = if longest == 0 { 0.0 } else { 1.0 - lcs_brute(&a, &b) as f64 / longest as f64 };
            prop_assert!((lcs_distance(&a, &b) - expected).abs() < 1e-15);
        }

        #[test]
        fn similarities_are_symmetric_and_bounded(a in "[a-e]{0,8}", b in "[a-e]{0,8}") {
            let jw = jaro_winkler(&a, &b);
            prop_assert_eq!(jw, jaro_winkler(&b, &a));
            prop_assert!((0.0..=1.0).contains(&jw));
            prop_assert_eq!(prefix_distance(&a, &b), prefix_distance(&b, &a));
            let lo = if a <= b { &a } else { &b };
            let hi = if a <= b { &b } else { &a };
            if !(a.is_empty() && b.is_empty()) {
                prop_assert!((jw - jaro_winkler_reference(lo, hi)).abs() < 1e-12);
            }
        }
    }
}
