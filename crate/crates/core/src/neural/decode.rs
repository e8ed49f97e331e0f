//! Greedy decoding with per-step attention export.

use serde::{Deserialize, Serialize};

use super::model::{bind, decode_step, encode_channels, initial_state, Mode};
use super::params::ModelParams;
use super::tape::Tape;
use crate::textprep::{BOS, EOS, PreparedExample};

/// Attention weights of one decoder step, one vector per channel.
/// Channels with zero positions export an empty vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAttention {
    pub code: Vec<f64>,
    pub ast: Vec<f64>,
    pub desc: Vec<f64>,
    pub def: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedOutput {
    /// Generated token ids without the BOS/EOS frame.
    pub ids: Vec<usize>,
    /// One entry per executed step, including the step that emitted EOS.
    pub attention: Vec<StepAttention>,
}

/// Argmax decoding from BOS and the fused initial state; stops at EOS
/// or `max_len` emitted tokens. Ties resolve to the lowest id, so the
/// output is deterministic.
pub fn greedy_decode(params: &ModelParams, example: &PreparedExample, max_len: usize) -> DecodedOutput {
    let mut tape = Tape::new();
    let model = bind(&mut tape, params);
    let mut mode = Mode::Eval;
    let encs = encode_channels(&mut tape, &model, example, &mut mode);
    let mut state = initial_state(&mut tape, &model, &encs);

    let mut ids = Vec::new();
    let mut attention = Vec::new();
    let mut prev = BOS;
    for _ in 0..max_len {
        let step = decode_step(&mut tape, &model, prev, &state, &encs, &mut mode);
        state = step.state;
        attention.push(StepAttention {
            code: weights_of(&tape, step.attn[0]),
            ast: weights_of(&tape, step.attn[1]),
            desc: weights_of(&tape, step.attn[2]),
            def: weights_of(&tape, step.attn[3]),
        });
        let logits = tape.value(step.logits);
        let mut best = 0;
        for i in 1..logits.rows() {
            if logits.at(i) > logits.at(best) {
                best = i;
            }
        }
        if best == EOS {
            break;
        }
        ids.push(best);
        prev = best;
    }
    DecodedOutput { ids, attention }
}

fn weights_of(tape: &Tape, node: Option<super::tape::NodeId>) -> Vec<f64> {
    node.map(|n| tape.value(n).data().to_vec()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::params::{init_params, CellKind, ModelConfig};

    fn params() -> ModelParams {
        init_params(&ModelConfig {
            src_vocab_size: 12,
            tgt_vocab_size: 9,
            embed_dim: 3,
            hidden_dim: 4,
            cell: CellKind::Gru,
            dropout: 0.0,
            seed: 3,
            ..ModelConfig::default()
        })
        .unwrap()
    }

    fn example() -> PreparedExample {
        PreparedExample {
            id: "d".into(),
            code_ids: vec![4, 5],
            ast_ids: vec![6, 7],
            desc_channels: vec![vec![1, 8, 2]],
            def_channels: vec![vec![1, 9, 2]],
            target_ids: vec![1, 4, 2],
        }
    }

    #[test]
    fn max_len_one_emits_at_most_one_token() {
        let out = greedy_decode(&params(), &example(), 1);
        assert!(out.ids.len() <= 1);
        assert_eq!(out.attention.len(), 1);
    }

    #[test]
    fn decoding_is_deterministic() {
        let p = params();
        let a = greedy_decode(&p, &example(), 16);
        let b = greedy_decode(&p, &example(), 16);
        assert_eq!(a, b);
    }

    #[test]
    fn attention_vectors_match_channel_position_counts() {
        let out = greedy_decode(&params(), &example(), 4);
        let step = &out.attention[0];
        assert_eq!(step.code.len(), 2);
        assert_eq!(step.ast.len(), 2);
        assert_eq!(step.desc.len(), 1);
        assert_eq!(step.def.len(), 1);
    }
}
