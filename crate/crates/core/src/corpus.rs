//! Bag-of-words corpus with an optional held-out token split.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse `N × V` count matrix, stored per document as sorted `(word, count)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    num_docs: usize,
    vocab_size: usize,
    docs: Vec<Vec<(usize, u32)>>,
    /// Tokens removed from `docs`, as `(doc, word, count)`.
    heldout: Vec<(usize, usize, u32)>,
}

impl Corpus {
    /// Builds a corpus from `(doc, word, count)` triplets. Repeated pairs are
    /// summed and zero counts are dropped.
    pub fn from_triplets(
        num_docs: usize,
        vocab_size: usize,
        triplets: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Result<Self> {
        let mut docs = vec![Vec::new(); num_docs];
        for (n, w, c) in triplets {
            if n >= num_docs {
                return Err(Error::IdOutOfRange {
                    id: n,
                    size: num_docs,
                });
            }
            if w >= vocab_size {
                return Err(Error::IdOutOfRange {
                    id: w,
                    size: vocab_size,
                });
            }
            if c > 0 {
                docs[n].push((w, c));
            }
        }
        for doc in &mut docs {
            *doc = merge_sorted(std::mem::take(doc));
        }
        Ok(Self {
            num_docs,
            vocab_size,
            docs,
            heldout: Vec::new(),
        })
    }

    /// Corpus from dense rows of counts.
    pub fn from_dense(rows: &[Vec<u32>]) -> Result<Self> {
        let v = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != v) {
            return Err(Error::DimensionMismatch("ragged count rows".into()));
        }
        Self::from_triplets(
            rows.len(),
            v,
            rows.iter()
                .enumerate()
                .flat_map(|(n, r)| r.iter().enumerate().map(move |(w, &c)| (n, w, c))),
        )
    }

    #[inline]
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    #[inline]
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn doc(&self, n: usize) -> &[(usize, u32)] {
        &self.docs[n]
    }

    pub fn count(&self, n: usize, w: usize) -> u32 {
        match self.docs[n].binary_search_by_key(&w, |&(w, _)| w) {
            Ok(i) => self.docs[n][i].1,
            Err(_) => 0,
        }
    }

    pub fn doc_total(&self, n: usize) -> u64 {
        self.docs[n].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total_tokens(&self) -> u64 {
        (0..self.num_docs).map(|n| self.doc_total(n)).sum()
    }

    pub fn heldout(&self) -> &[(usize, usize, u32)] {
        &self.heldout
    }

    pub fn heldout_tokens(&self) -> u64 {
        self.heldout.iter().map(|&(_, _, c)| c as u64).sum()
    }

    /// Training triplets in `(doc, word)` order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.docs
            .iter()
            .enumerate()
            .flat_map(|(n, d)| d.iter().map(move |&(w, c)| (n, w, c)))
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        self.docs
            .iter()
            .map(|d| {
                let mut row = vec![0; self.vocab_size];
                for &(w, c) in d {
                    row[w] = c;
                }
                row
            })
            .collect()
    }

    /// Moves `round(fraction · total)` tokens, chosen uniformly without
    /// replacement, from the training counts into the held-out list.
    pub fn split_heldout<R: Rng + ?Sized>(&self, rng: &mut R, fraction: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&fraction) {
            return Err(Error::Config(format!(
                "held-out fraction {fraction} outside [0, 0.5)"
            )));
        }
        let total = self.total_tokens();
        let want = (fraction * total as f64).round() as u64;
        // Flat index space over tokens; rejection-free selection by sampling
        // positions and sorting.
        let picks = rand::seq::index::sample(rng, total as usize, want as usize).into_vec();
        let mut picks: Vec<u64> = picks.into_iter().map(|i| i as u64).collect();
        picks.sort_unstable();

        let mut out = self.clone();
        let mut heldout: Vec<(usize, usize, u32)> = Vec::new();
        let mut offset = 0u64;
        let mut it = picks.into_iter().peekable();
        for (n, doc) in out.docs.iter_mut().enumerate() {
            for (w, c) in doc.iter_mut() {
                let end = offset + *c as u64;
                let mut taken = 0u32;
                while it.peek().is_some_and(|&p| p < end) {
                    it.next();
                    taken += 1;
                }
                if taken > 0 {
                    *c -= taken;
                    heldout.push((n, *w, taken));
                }
                offset = end;
            }
            doc.retain(|&(_, c)| c > 0);
        }
        out.heldout = heldout;
        Ok(out)
    }

    /// Attaches an explicit held-out list (already removed from the counts).
    pub fn with_heldout(mut self, heldout: Vec<(usize, usize, u32)>) -> Result<Self> {
        for &(n, w, _) in &heldout {
            if n >= self.num_docs || w >= self.vocab_size {
                return Err(Error::IdOutOfRange {
                    id: n.max(w),
                    size: self.num_docs.max(self.vocab_size),
                });
            }
        }
        self.heldout = heldout;
        Ok(self)
    }
}

fn merge_sorted(mut entries: Vec<(usize, u32)>) -> Vec<(usize, u32)> {
    entries.sort_unstable_by_key(|&(w, _)| w);
    let mut out: Vec<(usize, u32)> = Vec::with_capacity(entries.len());
    for (w, c) in entries {
        match out.last_mut() {
            Some(last) if last.0 == w => last.1 += c,
            _ => out.push((w, c)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn triplets_merge_and_validate() {
        let c = Corpus::from_triplets(2, 3, [(0, 1, 2), (0, 1, 3), (1, 0, 0), (1, 2, 1)]).unwrap();
        assert_eq!(c.doc(0), &[(1, 5)]);
        assert!(c.doc(1).iter().all(|&(_, n)| n > 0));
        assert_eq!(c.total_tokens(), 6);
        assert!(Corpus::from_triplets(2, 3, [(2, 0, 1)]).is_err());
        assert!(Corpus::from_triplets(2, 3, [(0, 3, 1)]).is_err());
    }

    #[test]
    fn heldout_split_conserves_mass() {
        let rows: Vec<Vec<u32>> = (0..20).map(|n| (0..7).map(|w| ((n * 7 + w) % 5) as u32).collect()).collect();
        let c = Corpus::from_dense(&rows).unwrap();
        let total = c.total_tokens();
        let split = c.split_heldout(&mut RngStream::new(9, 1), 0.1).unwrap();
        assert_eq!(split.heldout_tokens(), (0.1 * total as f64).round() as u64);
        assert_eq!(split.total_tokens() + split.heldout_tokens(), total);
        for &(n, w, k) in split.heldout() {
            assert_eq!(split.count(n, w) + k, c.count(n, w));
        }
        let again = c.split_heldout(&mut RngStream::new(9, 1), 0.1).unwrap();
        assert_eq!(split, again);
        assert!(c.split_heldout(&mut RngStream::new(9, 1), 0.5).is_err());
        let none = c.split_heldout(&mut RngStream::new(9, 1), 0.0).unwrap();
        assert!(none.heldout().is_empty());
    }
}
