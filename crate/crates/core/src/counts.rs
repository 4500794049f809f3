//! Sparse allocation tensors.
//!
//! `nkv[(n, k, w)]` counts tokens of word `w` in document `n` assigned to topic
//! `k`; `kvv[(k, c, w)]` counts tokens of word `w` in topic `k` explained by
//! concept `c`. Both are rebuilt from scratch every sweep.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::ontology::Ontology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub i: u32,
    pub j: u32,
    pub w: u32,
    pub count: u32,
}

/// Dense integer matrix for count marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, c: u64) {
        self.data[i * self.cols + j] += c;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.row(i).iter().sum()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTensors {
    pub num_docs: usize,
    pub num_topics: usize,
    pub vocab_size: usize,
    /// `(doc, topic, word, count)`.
    pub nkv: Vec<Entry>,
    /// `(topic, concept, word, count)`.
    pub kvv: Vec<Entry>,
}

impl CountTensors {
    pub fn new(num_docs: usize, num_topics: usize, vocab_size: usize) -> Self {
        Self {
            num_docs,
            num_topics,
            vocab_size,
            nkv: Vec::new(),
            kvv: Vec::new(),
        }
    }

    /// Topic counts of one document.
    pub fn doc_topic_row(&self, n: usize) -> Vec<u64> {
        let mut out = vec![0u64; self.num_topics];
        for e in self.nkv.iter().filter(|e| e.i as usize == n) {
            out[e.j as usize] += e.count as u64;
        }
        out
    }

    /// Drops the topics with `keep[k] == false` and renumbers the rest.
    /// Panics if a dropped topic still holds counts.
    pub fn retain_topics(&mut self, keep: &[bool]) {
        let mut new_id = vec![u32::MAX; keep.len()];
        let mut next = 0;
        for (k, &kept) in keep.iter().enumerate() {
            if kept {
                new_id[k] = next;
                next += 1;
            }
        }
        for e in &mut self.nkv {
            e.j = new_id[e.j as usize];
            assert!(e.j != u32::MAX, "dropped topic still holds counts");
        }
        for e in &mut self.kvv {
            e.i = new_id[e.i as usize];
            assert!(e.i != u32::MAX, "dropped topic still holds counts");
        }
        self.num_topics = next as usize;
    }

    /// `Σ_w nkv[n, k, w]`, shape `N × K`.
    pub fn doc_topic(&self) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.num_docs, self.num_topics);
        for e in &self.nkv {
            m.add(e.i as usize, e.j as usize, e.count as u64);
        }
        m
    }

    /// `Σ_n nkv[n, k, w]`, shape `K × V`.
    pub fn topic_word(&self) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.num_topics, self.vocab_size);
        for e in &self.nkv {
            m.add(e.j as usize, e.w as usize, e.count as u64);
        }
        m
    }

    /// `Σ_w kvv[k, c, w]`, shape `K × V`.
    pub fn topic_concept(&self) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.num_topics, self.vocab_size);
        for e in &self.kvv {
            m.add(e.i as usize, e.j as usize, e.count as u64);
        }
        m
    }

    /// `Σ_k kvv[k, c, w]`, shape `V × V`.
    pub fn concept_word(&self) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.vocab_size, self.vocab_size);
        for e in &self.kvv {
            m.add(e.j as usize, e.w as usize, e.count as u64);
        }
        m
    }

    /// Checks exact integer conservation against the corpus and ontology
    /// support of the concept tensor. Returns a description of the first
    /// violation.
    pub fn check(&self, corpus: &Corpus, ontology: &Ontology) -> Result<(), String> {
        let mut per_nw: std::collections::BTreeMap<(usize, usize), u64> = Default::default();
        for e in &self.nkv {
            *per_nw.entry((e.i as usize, e.w as usize)).or_default() += e.count as u64;
        }
        for (n, w, x) in corpus.triplets() {
            let got = per_nw.remove(&(n, w)).unwrap_or(0);
            if got != x as u64 {
                return Err(format!("sum_k C_NKV[{n},k,{w}] = {got}, X = {x}"));
            }
        }
        if let Some(((n, w), c)) = per_nw.into_iter().find(|&(_, c)| c > 0) {
            return Err(format!("C_NKV has {c} tokens at ({n}, {w}) where X = 0"));
        }
        let tw = self.topic_word();
        let mut kw = CountMatrix::zeros(self.num_topics, self.vocab_size);
        for e in &self.kvv {
            if !ontology.can_emit(e.j as usize, e.w as usize) {
                return Err(format!(
                    "C_KVV[{}, {}, {}] = {} outside the reach of concept {}",
                    e.i, e.j, e.w, e.count, e.j
                ));
            }
            kw.add(e.i as usize, e.w as usize, e.count as u64);
        }
        for k in 0..self.num_topics {
            for w in 0..self.vocab_size {
                if kw.get(k, w) != tw.get(k, w) {
                    return Err(format!(
                        "sum_c C_KVV[{k},c,{w}] = {} but sum_n C_NKV[n,{k},{w}] = {}",
                        kw.get(k, w),
                        tw.get(k, w)
                    ));
                }
            }
        }
        Ok(())
    }
}
