//! Translation-style metrics over token lists: BLEU-1..4 with brevity
//! penalty, ROUGE-L, and exact-match METEOR, plus corpus aggregation.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BleuLevel {
    Corpus,
    Sentence,
}

/// Corpus-level BLEU is the headline number; sentence BLEU (+1
/// smoothing on orders >= 2) feeds the distribution reports and is
/// emitted alongside, labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_examples: usize,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub sentence_bleu1: f64,
    pub sentence_bleu2: f64,
    pub sentence_bleu3: f64,
    pub sentence_bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
}

/// BLEU-n over aligned candidate/reference lists, as a percentage.
pub fn bleu(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    n: usize,
    level: BleuLevel,
) -> f64 {
    assert_eq!(candidates.len(), references.len(), "unaligned BLEU inputs");
    assert!((1..=4).contains(&n));
    match level {
        BleuLevel::Corpus => corpus_bleu(candidates, references, n),
        BleuLevel::Sentence => {
            if candidates.is_empty() {
                return 0.0;
            }
            let total: f64 = candidates
                .iter()
                .zip(references)
                .map(|(c, r)| sentence_bleu(c, r, n))
                .sum();
            total / candidates.len() as f64
        }
    }
}

fn corpus_bleu(candidates: &[Vec<String>], references: &[Vec<String>], n: usize) -> f64 {
    let mut numer = vec![0usize; n];
    let mut denom = vec![0usize; n];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for (cand, reference) in candidates.iter().zip(references) {
        cand_len += cand.len();
        ref_len += reference.len();
        for k in 1..=n {
            let (num, den) = clipped_counts(cand, reference, k);
            numer[k - 1] += num;
            denom[k - 1] += den;
        }
    }
    if cand_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 0..n {
        if denom[k] == 0 || numer[k] == 0 {
            return 0.0;
        }
        log_sum += (numer[k] as f64 / denom[k] as f64).ln();
    }
    100.0 * brevity_penalty(cand_len, ref_len) * (log_sum / n as f64).exp()
}

/// Single-pair BLEU with +1 smoothing on the numerator and denominator
/// of orders >= 2.
pub fn sentence_bleu(candidate: &[String], reference: &[String], n: usize) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let (mut num, mut den) = clipped_counts(candidate, reference, k);
        if k >= 2 {
            num += 1;
            den += 1;
        }
        if den == 0 || num == 0 {
            return 0.0;
        }
        log_sum += (num as f64 / den as f64).ln();
    }
    100.0 * brevity_penalty(candidate.len(), reference.len()) * (log_sum / n as f64).exp()
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

/// Modified (clipped) n-gram counts: matches capped at the reference
/// count per n-gram, over the total candidate n-grams.
fn clipped_counts(candidate: &[String], reference: &[String], k: usize) -> (usize, usize) {
    if candidate.len() < k {
        return (0, 0);
    }
    let mut ref_grams: HashMap<&[String], usize> = HashMap::new();
    for gram in reference.windows(k) {
        *ref_grams.entry(gram).or_insert(0) += 1;
    }
    let mut cand_grams: HashMap<&[String], usize> = HashMap::new();
    for gram in candidate.windows(k) {
        *cand_grams.entry(gram).or_insert(0) += 1;
    }
    let matched: usize = cand_grams
        .iter()
        .map(|(gram, &count)| count.min(ref_grams.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len() - k + 1)
}

pub const ROUGE_BETA: f64 = 1.2;

/// ROUGE-L F-score (beta = 1.2) as a percentage; zero when the longest
/// common subsequence is empty.
pub fn rouge_l(candidate: &[String], reference: &[String], beta: f64) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    let b2 = beta * beta;
    100.0 * ((1.0 + b2) * p * r) / (r + b2 * p)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub const METEOR_ALPHA: f64 = 0.9;

/// Exact-match METEOR: maximum unigram matches, fewest chunks among
/// maximum alignments, F-mean weighted by alpha = 0.9, and the cubed
/// fragmentation penalty.
pub fn meteor(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (matches, chunks) = align_chunks(candidate, reference);
    if matches == 0 {
        return 0.0;
    }
    let p = matches as f64 / candidate.len() as f64;
    let r = matches as f64 / reference.len() as f64;
    let f_mean = (p * r) / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r);
    let frag = chunks as f64 / matches as f64;
    let penalty = 0.5 * frag.powi(3);
    100.0 * f_mean * (1.0 - penalty)
}

/// Maximum match count and the minimum chunk count over all maximum
/// alignments. Exact via branch-and-bound; a deterministic node budget
/// falls back to the best alignment found on adversarial inputs.
fn align_chunks(candidate: &[String], reference: &[String]) -> (usize, usize) {
    let mut quota: HashMap<&String, usize> = HashMap::new();
    for t in reference {
        *quota.entry(t).or_insert(0) += 1;
    }
    let mut matches = 0usize;
    let mut cand_counts: HashMap<&String, usize> = HashMap::new();
    for t in candidate {
        *cand_counts.entry(t).or_insert(0) += 1;
    }
    for (t, c) in &cand_counts {
        matches += (*c).min(quota.get(t).copied().unwrap_or(0));
    }
    if matches == 0 {
        return (0, 0);
    }

    let mut search = ChunkSearch {
        cand: candidate,
        refr: reference,
        target: matches,
        best: first_fit_chunks(candidate, reference, matches),
        budget: 200_000,
    };
    let mut used_c = vec![false; candidate.len()];
    let mut used_r = vec![false; reference.len()];
    search.dfs(0, 0, 0, &mut used_c, &mut used_r);
    (matches, search.best)
}

/// Left-to-right maximum alignment: each candidate token takes the
/// lowest free reference slot while per-token quotas last. Always
/// feasible, so it seeds the branch-and-bound incumbent.
fn first_fit_chunks(candidate: &[String], reference: &[String], target: usize) -> usize {
    let mut quota: HashMap<&String, usize> = HashMap::new();
    let mut ref_count: HashMap<&String, usize> = HashMap::new();
    for t in reference {
        *ref_count.entry(t).or_insert(0) += 1;
    }
    let mut cand_count: HashMap<&String, usize> = HashMap::new();
    for t in candidate {
        *cand_count.entry(t).or_insert(0) += 1;
    }
    for (t, c) in &cand_count {
        let q = (*c).min(ref_count.get(t).copied().unwrap_or(0));
        quota.insert(t, q);
    }
    let mut used_r = vec![false; reference.len()];
    let mut chunks = 0usize;
    let mut last_r: Option<usize> = None;
    let mut placed = 0usize;
    for t in candidate {
        if placed == target {
            break;
        }
        let q = quota.get_mut(t);
        let Some(q) = q else { continue };
        if *q == 0 {
            last_r = None;
            continue;
        }
        let slot = reference
            .iter()
            .enumerate()
            .position(|(j, rt)| !used_r[j] && rt == t);
        if let Some(j) = slot {
            used_r[j] = true;
            *q -= 1;
            placed += 1;
            if last_r != Some(j.wrapping_sub(1)) {
                chunks += 1;
            }
            last_r = Some(j);
        } else {
            last_r = None;
        }
    }
    chunks.max(1)
}

struct ChunkSearch<'a> {
    cand: &'a [String],
    refr: &'a [String],
    target: usize,
    best: usize,
    budget: usize,
}

impl<'a> ChunkSearch<'a> {
    fn dfs(
        &mut self,
        from: usize,
        covered: usize,
        chunks: usize,
        used_c: &mut [bool],
        used_r: &mut [bool],
    ) {
        if covered == self.target {
            if chunks < self.best {
                self.best = chunks;
            }
            return;
        }
        if self.budget == 0 {
            return;
        }
        self.budget -= 1;

        // longest block still placeable bounds how few chunks can finish
        let longest = self.longest_block(used_c, used_r);
        if longest == 0 {
            return;
        }
        let need = self.target - covered;
        let lower = chunks + need.div_ceil(longest);
        if lower >= self.best {
            return;
        }

        // branch on the first free candidate position: match a block
        // starting there, or leave it unmatched
        let Some(i0) = (from..self.cand.len()).find(|&i| !used_c[i]) else {
            return;
        };

        let mut starts: Vec<(usize, usize)> = Vec::new(); // (max_len, j)
        for j in 0..self.refr.len() {
            if !used_r[j] && self.refr[j] == self.cand[i0] {
                let mut len = 0;
                while i0 + len < self.cand.len()
                    && j + len < self.refr.len()
                    && !used_c[i0 + len]
                    && !used_r[j + len]
                    && self.cand[i0 + len] == self.refr[j + len]
                {
                    len += 1;
                }
                starts.push((len, j));
            }
        }
        starts.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        for &(max_len, j) in &starts {
            for len in (1..=max_len.min(need)).rev() {
                for k in 0..len {
                    used_c[i0 + k] = true;
                    used_r[j + k] = true;
                }
                self.dfs(i0 + len, covered + len, chunks + 1, used_c, used_r);
                for k in 0..len {
                    used_c[i0 + k] = false;
                    used_r[j + k] = false;
                }
            }
        }

        // leave i0 unmatched if enough candidate slack remains
        let free_after = (i0 + 1..self.cand.len()).filter(|&i| !used_c[i]).count();
        if free_after >= need {
            self.dfs(i0 + 1, covered, chunks, used_c, used_r);
        }
    }

    fn longest_block(&self, used_c: &[bool], used_r: &[bool]) -> usize {
        let mut longest = 0;
        for i in 0..self.cand.len() {
            if used_c[i] {
                continue;
            }
            for j in 0..self.refr.len() {
                if used_r[j] || self.refr[j] != self.cand[i] {
                    continue;
                }
                let mut len = 0;
                while i + len < self.cand.len()
                    && j + len < self.refr.len()
                    && !used_c[i + len]
                    && !used_r[j + len]
                    && self.cand[i + len] == self.refr[j + len]
                {
                    len += 1;
                }
                longest = longest.max(len);
            }
        }
        longest
    }
}

/// Corpus-level BLEU plus per-sentence averages of sentence BLEU,
/// ROUGE-L, and METEOR. Inputs must be aligned by record id.
pub fn evaluate_corpus(
    decoded: &[(String, Vec<String>)],
    references: &[(String, Vec<String>)],
) -> Result<ScoreReport> {
    if decoded.is_empty() {
        return Err(Error::Eval("empty evaluation set".into()));
    }
    if decoded.len() != references.len()
        || decoded
            .iter()
            .zip(references)
            .any(|((a, _), (b, _))| a != b)
    {
        let mismatches: Vec<String> = decoded
            .iter()
            .map(|(id, _)| id.clone())
            .zip(references.iter().map(|(id, _)| id.clone()))
            .filter(|(a, b)| a != b)
            .take(5)
            .map(|(a, b)| format!("{a} != {b}"))
            .collect();
        return Err(Error::Eval(format!(
            "record id mismatch between outputs ({}) and references ({}): [{}]",
            decoded.len(),
            references.len(),
            mismatches.join(", ")
        )));
    }
    let cands: Vec<Vec<String>> = decoded.iter().map(|(_, t)| t.clone()).collect();
    let refs: Vec<Vec<String>> = references.iter().map(|(_, t)| t.clone()).collect();
    let n = cands.len() as f64;
    let mean = |f: &dyn Fn(&[String], &[String]) -> f64| -> f64 {
        cands.iter().zip(&refs).map(|(c, r)| f(c, r)).sum::<f64>() / n
    };
    Ok(ScoreReport {
        n_examples: cands.len(),
        bleu1: bleu(&cands, &refs, 1, BleuLevel::Corpus),
        bleu2: bleu(&cands, &refs, 2, BleuLevel::Corpus),
        bleu3: bleu(&cands, &refs, 3, BleuLevel::Corpus),
        bleu4: bleu(&cands, &refs, 4, BleuLevel::Corpus),
        sentence_bleu1: bleu(&cands, &refs, 1, BleuLevel::Sentence),
        sentence_bleu2: bleu(&cands, &refs, 2, BleuLevel::Sentence),
        sentence_bleu3: bleu(&cands, &refs, 3, BleuLevel::Sentence),
        sentence_bleu4: bleu(&cands, &refs, 4, BleuLevel::Sentence),
        meteor: mean(&|c, r| meteor(c, r)),
        rouge_l: mean(&|c, r| rouge_l(c, r, ROUGE_BETA)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(|t| t.to_string()).collect()
    }

    const TOL: f64 = 1e-6;

    #[test]
    fn bleu_identity_is_100_for_all_orders() {
        let s = toks("sets the last modified time");
        for n in 1..=4 {
            assert!((bleu(&[s.clone()], &[s.clone()], n, BleuLevel::Corpus) - 100.0).abs() < TOL);
            assert!((bleu(&[s.clone()], &[s.clone()], n, BleuLevel::Sentence) - 100.0).abs() < TOL);
        }
    }

    #[test]
    fn bleu_clipping_golden() {
        let got = bleu(&[toks("the the the")], &[toks("the cat")], 1, BleuLevel::Corpus);
        assert!((got - 33.33333333333333).abs() < TOL, "got {got}");
    }

    #[test]
    fn bleu_brevity_penalty_golden() {
        let got = bleu(&[toks("a b")], &[toks("a b c d")], 1, BleuLevel::Corpus);
        assert!((got - 36.787944117144235).abs() < TOL, "got {got}");
    }

    #[test]
    fn bleu2_golden() {
        let got = bleu(
            &[toks("the cat sat on mat")],
            &[toks("the cat sat on the mat")],
            2,
            BleuLevel::Corpus,
        );
        assert!((got - 70.90416310250968).abs() < TOL, "got {got}");
    }

    #[test]
    fn bleu4_golden() {
        let got = bleu(&[toks("a b c d e")], &[toks("a b c d f")], 4, BleuLevel::Corpus);
        assert!((got - 66.8740304976422).abs() < TOL, "got {got}");
    }

    #[test]
    fn bleu_two_pair_corpus_golden() {
        let cands = vec![toks("a b c d"), toks("x y")];
        let refs = vec![toks("a b c d"), toks("p q r")];
        let got = bleu(&cands, &refs, 1, BleuLevel::Corpus);
        assert!((got - 56.432114992707604).abs() < TOL, "got {got}");
    }

    #[test]
    fn sentence_bleu_smoothing_goldens() {
        assert!((sentence_bleu(&toks("a b"), &toks("a b"), 4) - 100.0).abs() < TOL);
        assert!((sentence_bleu(&toks("a x"), &toks("a b"), 2) - 50.0).abs() < TOL);
    }

    #[test]
    fn bleu_disjoint_and_empty_edge_cases() {
        assert_eq!(bleu(&[toks("x y")], &[toks("a b")], 1, BleuLevel::Corpus), 0.0);
        assert_eq!(bleu(&[vec![]], &[toks("a b")], 1, BleuLevel::Corpus), 0.0);
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(bleu(&empty, &empty, 1, BleuLevel::Corpus), 0.0);
    }

    #[test]
    fn rouge_identity_and_disjoint() {
        let s = toks("a b c d");
        assert!((rouge_l(&s, &s, ROUGE_BETA) - 100.0).abs() < TOL);
        assert_eq!(rouge_l(&toks("x y"), &toks("a b"), ROUGE_BETA), 0.0);
        assert_eq!(rouge_l(&[], &s, ROUGE_BETA), 0.0);
    }

    #[test]
    fn rouge_goldens() {
        let got = rouge_l(&toks("a b c d"), &toks("a c d"), ROUGE_BETA);
        assert!((got - 87.98076923076923).abs() < TOL, "got {got}");

        let got = rouge_l(&toks("a b"), &toks("b a"), ROUGE_BETA);
        assert!((got - 50.0).abs() < TOL, "got {got}");

        let got = rouge_l(&toks("the cat sat"), &toks("the cat on the mat"), ROUGE_BETA);
        assert!((got - 47.84313725490196).abs() < TOL, "got {got}");
    }

    #[test]
    fn rouge_symmetric_when_lengths_match() {
        let a = toks("a b c d");
        let b = toks("a c b d");
        assert!((rouge_l(&a, &b, ROUGE_BETA) - rouge_l(&b, &a, ROUGE_BETA)).abs() < TOL);
    }

    #[test]
    fn meteor_identity_golden() {
        let s = toks("a b c d");
        let got = meteor(&s, &s);
        assert!((got - 99.21875).abs() < TOL, "got {got}");
    }

    #[test]
    fn meteor_disjoint_is_zero() {
        assert_eq!(meteor(&toks("x y"), &toks("a b")), 0.0);
        assert_eq!(meteor(&[], &toks("a b")), 0.0);
    }

    #[test]
    fn meteor_reorder_goldens() {
        let got = meteor(&toks("a c b d"), &toks("a b c d"));
        assert!((got - 50.0).abs() < TOL, "got {got}");

        let got = meteor(&toks("c d a b"), &toks("a b c d"));
        assert!((got - 93.75).abs() < TOL, "got {got}");
    }

    #[test]
    fn meteor_partial_goldens() {
        let got = meteor(&toks("the cat sat"), &toks("the cat on the mat"));
        assert!((got - 39.0625).abs() < TOL, "got {got}");

        let got = meteor(&toks("a b c"), &toks("a b c d"));
        assert!((got - 75.4985754985755).abs() < TOL, "got {got}");

        let got = meteor(&toks("a b a b"), &toks("a b"));
        assert!((got - 85.22727272727272).abs() < TOL, "got {got}");
    }

    /// Exhaustive oracle over all injective alignments, small inputs only.
    fn oracle_chunks(cand: &[String], refr: &[String]) -> (usize, usize) {
        fn rec(
            cand: &[String],
            refr: &[String],
            ci: usize,
            used: &mut Vec<bool>,
            align: &mut Vec<(usize, usize)>,
            best: &mut Option<(usize, usize)>,
        ) {
            if ci == cand.len() {
                let m = align.len();
                let mut chunks = 0;
                let mut prev: Option<(usize, usize)> = None;
                for &(cp, rp) in align.iter() {
                    // a chunk continues only when adjacent in both
                    if prev != Some((cp.wrapping_sub(1), rp.wrapping_sub(1))) {
                        chunks += 1;
                    }
                    prev = Some((cp, rp));
                }
                let better = match *best {
                    None => true,
                    Some((bm, bc)) => m > bm || (m == bm && chunks < bc),
                };
                if better {
                    *best = Some((m, chunks));
                }
                return;
            }
            rec(cand, refr, ci + 1, used, align, best);
            for rp in 0..refr.len() {
                if !used[rp] && refr[rp] == cand[ci] {
                    used[rp] = true;
                    align.push((ci, rp));
                    rec(cand, refr, ci + 1, used, align, best);
                    align.pop();
                    used[rp] = false;
                }
            }
        }
        let mut best = None;
        rec(
            cand,
            refr,
            0,
            &mut vec![false; refr.len()],
            &mut Vec::new(),
            &mut best,
        );
        best.unwrap_or((0, 0))
    }

    #[test]
    fn chunk_search_matches_exhaustive_oracle() {
        use rand::{Rng, SeedableRng};
        let words = ["a", "b", "c", "d"];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
                let len = rng.random_range(1..=6);
                (0..len)
                    .map(|_| words[rng.random_range(0..words.len())].to_string())
                    .collect()
            };
            let c = gen(&mut rng);
            let r = gen(&mut rng);
            let (m_oracle, chunks_oracle) = oracle_chunks(&c, &r);
            let (m, chunks) = align_chunks(&c, &r);
            assert_eq!(m, m_oracle, "matches differ on {c:?} / {r:?}");
            if m > 0 {
                assert_eq!(chunks, chunks_oracle, "chunks differ on {c:?} / {r:?}");
            }
        }
    }

    #[test]
    fn evaluate_corpus_identity_and_average() {
        let pairs = vec![
            ("a".to_string(), toks("a b c d")),
            ("b".to_string(), toks("e f g h")),
        ];
        let report = evaluate_corpus(&pairs, &pairs).unwrap();
        assert_eq!(report.n_examples, 2);
        for score in [report.bleu1, report.bleu4, report.rouge_l] {
            assert!((score - 100.0).abs() < TOL);
        }
        assert!((report.meteor - 99.21875).abs() < TOL);

        let decoded = vec![
            ("a".to_string(), toks("a b c d")),
            ("b".to_string(), toks("x y")),
        ];
        let refs = vec![
            ("a".to_string(), toks("a b c d")),
            ("b".to_string(), toks("p q r")),
        ];
        let report = evaluate_corpus(&decoded, &refs).unwrap();
        assert!((report.rouge_l - 50.0).abs() < TOL);
        assert!((report.meteor - 49.609375).abs() < TOL);
        assert!((report.bleu1 - 56.432114992707604).abs() < TOL);
    }

    #[test]
    fn evaluate_corpus_rejects_mismatched_ids_and_empty_sets() {
        let a = vec![("x".to_string(), toks("a"))];
        let b = vec![("y".to_string(), toks("a"))];
        assert!(evaluate_corpus(&a, &b).is_err());
        assert!(evaluate_corpus(&[], &[]).is_err());
    }

    #[test]
    fn scores_stay_in_range_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let words = ["a", "b", "c", "d", "e", "f"];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
                let len = rng.random_range(0..=10);
                (0..len)
                    .map(|_| words[rng.random_range(0..words.len())].to_string())
                    .collect()
            };
            let c = gen(&mut rng);
            let r = gen(&mut rng);
            for n in 1..=4 {
                let s = bleu(&[c.clone()], &[r.clone()], n, BleuLevel::Corpus);
                assert!((0.0..=100.0 + TOL).contains(&s));
            }
            assert!((0.0..=100.0 + TOL).contains(&rouge_l(&c, &r, ROUGE_BETA)));
            assert!((0.0..=100.0 + TOL).contains(&meteor(&c, &r)));
        }
    }
}
