use serde::Serialize;

use super::Corpus;
use crate::error::{GeolocError, Result};

/// Max, mean, population standard deviation and median of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
    pub median: f64,
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(values: &[usize]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let mean = sorted.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let var = sorted
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
        };
        Some(Summary {
            max: sorted[n - 1] as f64,
            mean,
            stddev: var.sqrt(),
            median,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub users: usize,
    pub documents_per_user: Summary,
    pub chars_per_document: Summary,
    pub chars_per_user: Summary,
}

impl CorpusStats {
    pub fn rows(&self) -> [(&'static str, Summary); 3] {
        [
            ("documents_per_user", self.documents_per_user),
            ("chars_per_document", self.chars_per_document),
            ("chars_per_user", self.chars_per_user),
        ]
    }
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats> {
    let users = corpus.users();
    let docs: Vec<usize> = users.iter().map(|u| u.doc_char_counts.len()).collect();
    let doc_chars: Vec<usize> = users
        .iter()
        .flat_map(|u| u.doc_char_counts.iter().copied())
        .collect();
    let user_chars: Vec<usize> = users.iter().map(|u| u.char_count).collect();
    match (Summary::of(&docs), Summary::of(&doc_chars), Summary::of(&user_chars)) {
        (Some(documents_per_user), Some(chars_per_document), Some(chars_per_user)) => Ok(CorpusStats {
            users: users.len(),
            documents_per_user,
            chars_per_document,
            chars_per_user,
        }),
        _ => Err(GeolocError::EmptyCorpus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Media, UserRecord};

    fn corpus_of(docs: &[&[&str]]) -> Corpus {
        let records: Vec<UserRecord> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| UserRecord {
                user_id: format!("u{i}"),
                state: "TX".parse().unwrap(),
                media: Media::Blog,
                documents: d.iter().map(|s| s.to_string()).collect(),
                gender: None,
                industry: None,
            })
            .collect();
        Corpus::from_records(&records, Media::Blog, 0, "t").unwrap().corpus
    }

    #[test]
    fn single_hundred_char_document() {
        let doc = "a".repeat(100);
        let s = compute_stats(&corpus_of(&[&[doc.as_str()]])).unwrap();
        for (_, q) in s.rows().into_iter().skip(1) {
            assert_eq!(q.mean, 100.0);
            assert_eq!(q.median, 100.0);
            assert_eq!(q.stddev, 0.0);
        }
        assert_eq!(s.documents_per_user.max, 1.0);
    }

    #[test]
    fn lengths_one_two_three() {
        let s = compute_stats(&corpus_of(&[&["a", "bb", "ccc"]])).unwrap();
        let q = s.chars_per_document;
        assert_eq!((q.median, q.mean, q.max), (2.0, 2.0, 3.0));
        assert!((q.stddev - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn even_count_median_averages_middle_pair() {
        let s = Summary::of(&[4, 1, 3, 2]).unwrap();
        assert_eq!(s.median, 2.5);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let c = Corpus::new(vec![], Media::Blog, "e").unwrap();
        assert!(matches!(compute_stats(&c), Err(GeolocError::EmptyCorpus)));
    }
}
