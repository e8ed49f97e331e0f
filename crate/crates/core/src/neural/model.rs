//! The four-channel encoder-decoder wired onto the tape: bidirectional
//! code/AST encoders, shared per-API inner encoders with an outer
//! recurrence over channel states, additive attention per channel, and
//! fused initial state and context.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{CellKind, ModelParams};
use super::tape::{NodeId, Tape};
use crate::textprep::PreparedExample;

/// Forward-pass mode: training applies dropout from the given stream,
/// evaluation is deterministic.
pub enum Mode<'r> {
    Train { dropout: f64, rng: &'r mut ChaCha8Rng },
    Eval,
}

#[derive(Clone, Copy)]
pub struct BoundCell {
    pub w_ih: NodeId,
    pub w_hh: NodeId,
    pub b_ih: NodeId,
    pub b_hh: NodeId,
}

#[derive(Clone, Copy)]
pub struct BoundEncoder {
    pub fw: BoundCell,
    pub bw: BoundCell,
    pub proj_w: NodeId,
    pub proj_b: NodeId,
}

#[derive(Clone, Copy)]
pub struct BoundAttn {
    pub w_dec: NodeId,
    pub w_enc: NodeId,
    pub v: NodeId,
}

#[derive(Clone, Copy)]
pub struct BoundAffine {
    pub w: NodeId,
    pub b: NodeId,
}

/// All parameter tensors registered on a tape for one forward pass.
/// `param_nodes` preserves [`ModelParams::visit`] order so gradients
/// can be read back positionally.
pub struct BoundModel {
    pub cell: CellKind,
    pub hidden: usize,
    pub use_api_context: bool,
    pub src_embed: NodeId,
    pub tgt_embed: NodeId,
    pub code_enc: BoundEncoder,
    pub ast_enc: BoundEncoder,
    pub desc_inner: BoundEncoder,
    pub def_inner: BoundEncoder,
    pub desc_outer: BoundCell,
    pub def_outer: BoundCell,
    pub attn_code: BoundAttn,
    pub attn_ast: BoundAttn,
    pub attn_desc: BoundAttn,
    pub attn_def: BoundAttn,
    pub fuse_init: BoundAffine,
    pub fuse_ctx: BoundAffine,
    pub dec_cell: BoundCell,
    pub out_proj: BoundAffine,
    pub param_nodes: Vec<NodeId>,
}

pub fn bind(tape: &mut Tape, params: &ModelParams) -> BoundModel {
    let mut nodes = Vec::new();
    for (_, tensor) in params.visit() {
        nodes.push(tape.leaf(tensor.clone()));
    }
    // same layout as visit(): embeds, 4 encoders, 2 outers, 4 attns,
    // 2 fusions, decoder cell, output projection
    let mut i = 0;
    let mut next = || {
        i += 1;
        nodes[i - 1]
    };
    let cell = |next: &mut dyn FnMut() -> NodeId| BoundCell {
        w_ih: next(),
        w_hh: next(),
        b_ih: next(),
        b_hh: next(),
    };
    let enc = |next: &mut dyn FnMut() -> NodeId| BoundEncoder {
        fw: BoundCell {
            w_ih: next(),
            w_hh: next(),
            b_ih: next(),
            b_hh: next(),
        },
        bw: BoundCell {
            w_ih: next(),
            w_hh: next(),
            b_ih: next(),
            b_hh: next(),
        },
        proj_w: next(),
        proj_b: next(),
    };
    let attn = |next: &mut dyn FnMut() -> NodeId| BoundAttn {
        w_dec: next(),
        w_enc: next(),
        v: next(),
    };

    let src_embed = next();
    let tgt_embed = next();
    let code_enc = enc(&mut next);
    let ast_enc = enc(&mut next);
    let desc_inner = enc(&mut next);
    let def_inner = enc(&mut next);
    let desc_outer = cell(&mut next);
    let def_outer = cell(&mut next);
    let attn_code = attn(&mut next);
    let attn_ast = attn(&mut next);
    let attn_desc = attn(&mut next);
    let attn_def = attn(&mut next);
    let fuse_init = BoundAffine {
        w: next(),
        b: next(),
    };
    let fuse_ctx = BoundAffine {
        w: next(),
        b: next(),
    };
    let dec_cell = cell(&mut next);
    let out_proj = BoundAffine {
        w: next(),
        b: next(),
    };
    debug_assert_eq!(i, nodes.len());

    BoundModel {
        cell: params.config.cell,
        hidden: params.config.hidden_dim,
        use_api_context: params.config.use_api_context,
        src_embed,
        tgt_embed,
        code_enc,
        ast_enc,
        desc_inner,
        def_inner,
        desc_outer,
        def_outer,
        attn_code,
        attn_ast,
        attn_desc,
        attn_def,
        fuse_init,
        fuse_ctx,
        dec_cell,
        out_proj,
        param_nodes: nodes,
    }
}

fn maybe_dropout(tape: &mut Tape, mode: &mut Mode, node: NodeId) -> NodeId {
    match mode {
        Mode::Train { dropout, rng } if *dropout > 0.0 => {
            let len = tape.value(node).len();
            let keep = 1.0 - *dropout;
            let mask: Vec<f64> = (0..len)
                .map(|_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect();
            tape.dropout(node, mask)
        }
        _ => node,
    }
}

/// Recurrent state: hidden vector plus the LSTM cell vector.
#[derive(Clone, Copy)]
pub struct CellState {
    pub h: NodeId,
    pub c: Option<NodeId>,
}

pub fn zero_state(tape: &mut Tape, kind: CellKind, hidden: usize) -> CellState {
    CellState {
        h: tape.zeros(hidden, 1),
        c: match kind {
            CellKind::Gru => None,
            CellKind::Lstm => Some(tape.zeros(hidden, 1)),
        },
    }
}

pub fn cell_step(
    tape: &mut Tape,
    cell: &BoundCell,
    kind: CellKind,
    hidden: usize,
    x: NodeId,
    state: &CellState,
) -> CellState {
    let gi_w = tape.matvec(cell.w_ih, x);
    let gi = tape.add(gi_w, cell.b_ih);
    let gh_w = tape.matvec(cell.w_hh, state.h);
    let gh = tape.add(gh_w, cell.b_hh);
    match kind {
        CellKind::Gru => {
            let ri = tape.slice_rows(gi, 0, hidden);
            let rh = tape.slice_rows(gh, 0, hidden);
            let r_pre = tape.add(ri, rh);
            let r = tape.sigmoid(r_pre);

            let zi = tape.slice_rows(gi, hidden, hidden);
            let zh = tape.slice_rows(gh, hidden, hidden);
            let z_pre = tape.add(zi, zh);
            let z = tape.sigmoid(z_pre);

            let ni = tape.slice_rows(gi, 2 * hidden, hidden);
            let nh = tape.slice_rows(gh, 2 * hidden, hidden);
            let rnh = tape.mul(r, nh);
            let n_pre = tape.add(ni, rnh);
            let n = tape.tanh(n_pre);

            let one_minus_z = tape.affine(z, -1.0, 1.0);
            let new_part = tape.mul(one_minus_z, n);
            let keep_part = tape.mul(z, state.h);
            let h = tape.add(new_part, keep_part);
            CellState { h, c: None }
        }
        CellKind::Lstm => {
            let gates = tape.add(gi, gh);
            let i_pre = tape.slice_rows(gates, 0, hidden);
            let f_pre = tape.slice_rows(gates, hidden, hidden);
            let g_pre = tape.slice_rows(gates, 2 * hidden, hidden);
            let o_pre = tape.slice_rows(gates, 3 * hidden, hidden);
            let i = tape.sigmoid(i_pre);
            let f = tape.sigmoid(f_pre);
            let g = tape.tanh(g_pre);
            let o = tape.sigmoid(o_pre);
            let c_prev = state.c.expect("lstm state carries a cell vector");
            let fc = tape.mul(f, c_prev);
            let ig = tape.mul(i, g);
            let c = tape.add(fc, ig);
            let c_act = tape.tanh(c);
            let h = tape.mul(o, c_act);
            CellState { h, c: Some(c) }
        }
    }
}

/// Per-position states stacked as rows, the final state, and the mask
/// attention honors.
pub struct EncoderOutput {
    pub states: Option<NodeId>,
    pub final_state: NodeId,
    pub mask: Vec<bool>,
}

impl EncoderOutput {
    pub fn empty(tape: &mut Tape, hidden: usize) -> Self {
        EncoderOutput {
            states: None,
            final_state: tape.zeros(hidden, 1),
            mask: Vec::new(),
        }
    }
}

/// Bidirectional encoding of an id sequence: embedding, forward and
/// backward recurrences, and a shared projection of [fw; bw] used both
/// per position and for the final state.
pub fn encode_sequence(
    tape: &mut Tape,
    model: &BoundModel,
    enc: &BoundEncoder,
    ids: &[usize],
    mask: &[bool],
    mode: &mut Mode,
) -> EncoderOutput {
    assert!(!ids.is_empty(), "encoder input must be non-empty");
    assert_eq!(ids.len(), mask.len());
    let hidden = model.hidden;

    let xs: Vec<NodeId> = ids
        .iter()
        .map(|&id| {
            let x = tape.row_select(model.src_embed, id);
            maybe_dropout(tape, mode, x)
        })
        .collect();

    let mut fw_states = Vec::with_capacity(xs.len());
    let mut state = zero_state(tape, model.cell, hidden);
    for &x in &xs {
        state = cell_step(tape, &enc.fw, model.cell, hidden, x, &state);
        fw_states.push(state.h);
    }

    let mut bw_states = vec![0; xs.len()];
    let mut state = zero_state(tape, model.cell, hidden);
    for (t, &x) in xs.iter().enumerate().rev() {
        state = cell_step(tape, &enc.bw, model.cell, hidden, x, &state);
        bw_states[t] = state.h;
    }

    let project = |tape: &mut Tape, fw: NodeId, bw: NodeId| {
        let cat = tape.concat_rows(&[fw, bw]);
        let wx = tape.matvec(enc.proj_w, cat);
        tape.add(wx, enc.proj_b)
    };

    let per_position: Vec<NodeId> = (0..xs.len())
        .map(|t| project(tape, fw_states[t], bw_states[t]))
        .collect();
    let states = tape.stack_rows(&per_position);
    let final_state = project(tape, fw_states[xs.len() - 1], bw_states[0]);

    EncoderOutput {
        states: Some(states),
        final_state,
        mask: mask.to_vec(),
    }
}

pub enum ApiChannelKind {
    Description,
    Definition,
}

/// Encodes each API channel with the shared inner encoder for its kind,
/// then runs the outer cell (no embedding layer) over the per-channel
/// final states in rank order. Positions are one per API.
pub fn encode_api_channel(
    tape: &mut Tape,
    model: &BoundModel,
    kind: ApiChannelKind,
    channels: &[Vec<usize>],
    mode: &mut Mode,
) -> EncoderOutput {
    let (inner, outer) = match kind {
        ApiChannelKind::Description => (&model.desc_inner, &model.desc_outer),
        ApiChannelKind::Definition => (&model.def_inner, &model.def_outer),
    };
    if channels.is_empty() {
        return EncoderOutput::empty(tape, model.hidden);
    }

    let finals: Vec<NodeId> = channels
        .iter()
        .map(|ids| {
            let mask = vec![true; ids.len()];
            encode_sequence(tape, model, inner, ids, &mask, mode).final_state
        })
        .collect();

    let mut outer_states = Vec::with_capacity(finals.len());
    let mut state = zero_state(tape, model.cell, model.hidden);
    for &f in &finals {
        state = cell_step(tape, outer, model.cell, model.hidden, f, &state);
        outer_states.push(state.h);
    }

    let states = tape.stack_rows(&outer_states);
    EncoderOutput {
        states: Some(states),
        final_state: outer_states[outer_states.len() - 1],
        mask: vec![true; outer_states.len()],
    }
}

/// Additive attention from the previous decoder state over encoder
/// positions. Zero positions yield an empty weight vector and a zero
/// context.
pub fn attend(
    tape: &mut Tape,
    attn: &BoundAttn,
    hidden: usize,
    decoder_state_prev: NodeId,
    enc: &EncoderOutput,
) -> (Option<NodeId>, NodeId) {
    let Some(states) = enc.states else {
        let zero = tape.zeros(hidden, 1);
        return (None, zero);
    };
    let keys = tape.matmul_rt(states, attn.w_enc);
    let query = tape.matvec(attn.w_dec, decoder_state_prev);
    let shifted = tape.broadcast_add_row(keys, query);
    let activated = tape.tanh(shifted);
    let scores = tape.matvec(activated, attn.v);
    let weights = tape.softmax_masked(scores, enc.mask.clone());
    let context = tape.matvec_t(states, weights);
    (Some(weights), context)
}

/// Concatenates the four channel vectors and applies the trained affine
/// map.
pub fn fuse(tape: &mut Tape, affine: &BoundAffine, parts: [NodeId; 4]) -> NodeId {
    let cat = tape.concat_rows(&parts);
    let wx = tape.matvec(affine.w, cat);
    tape.add(wx, affine.b)
}

/// All four channel encodings for one example.
pub struct ChannelEncodings {
    pub code: EncoderOutput,
    pub ast: EncoderOutput,
    pub desc: EncoderOutput,
    pub def: EncoderOutput,
}

pub fn encode_channels(
    tape: &mut Tape,
    model: &BoundModel,
    example: &PreparedExample,
    mode: &mut Mode,
) -> ChannelEncodings {
    let code_mask = vec![true; example.code_ids.len()];
    let code = encode_sequence(tape, model, &model.code_enc, &example.code_ids, &code_mask, mode);
    let ast_mask = vec![true; example.ast_ids.len()];
    let ast = encode_sequence(tape, model, &model.ast_enc, &example.ast_ids, &ast_mask, mode);

    // with the ablation switch off the API channels become null inputs,
    // so outputs cannot depend on their content
    let (desc, def) = if model.use_api_context {
        (
            encode_api_channel(tape, model, ApiChannelKind::Description, &example.desc_channels, mode),
            encode_api_channel(tape, model, ApiChannelKind::Definition, &example.def_channels, mode),
        )
    } else {
        (
            EncoderOutput::empty(tape, model.hidden),
            EncoderOutput::empty(tape, model.hidden),
        )
    };
    ChannelEncodings {
        code,
        ast,
        desc,
        def,
    }
}

/// Decoder start state: the four final encoder states through the
/// initial-state fusion.
pub fn initial_state(tape: &mut Tape, model: &BoundModel, encs: &ChannelEncodings) -> CellState {
    let h0 = fuse(
        tape,
        &model.fuse_init,
        [
            encs.code.final_state,
            encs.ast.final_state,
            encs.desc.final_state,
            encs.def.final_state,
        ],
    );
    CellState {
        h: h0,
        c: match model.cell {
            CellKind::Gru => None,
            CellKind::Lstm => Some(tape.zeros(model.hidden, 1)),
        },
    }
}

pub struct StepOutput {
    pub logits: NodeId,
    pub state: CellState,
    /// Attention weight nodes per channel: code, ast, desc, def.
    pub attn: [Option<NodeId>; 4],
}

/// One decoder step: attention with the previous state, context fusion,
/// cell update on [embedded previous token; context], and the output
/// projection of [new state; context].
pub fn decode_step(
    tape: &mut Tape,
    model: &BoundModel,
    prev_token: usize,
    state: &CellState,
    encs: &ChannelEncodings,
    mode: &mut Mode,
) -> StepOutput {
    let h = model.hidden;
    let (w_code, c_code) = attend(tape, &model.attn_code, h, state.h, &encs.code);
    let (w_ast, c_ast) = attend(tape, &model.attn_ast, h, state.h, &encs.ast);
    let (w_desc, c_desc) = attend(tape, &model.attn_desc, h, state.h, &encs.desc);
    let (w_def, c_def) = attend(tape, &model.attn_def, h, state.h, &encs.def);
    let context = fuse(tape, &model.fuse_ctx, [c_code, c_ast, c_desc, c_def]);

    let emb = tape.row_select(model.tgt_embed, prev_token);
    let emb = maybe_dropout(tape, mode, emb);
    let x = tape.concat_rows(&[emb, context]);
    let new_state = cell_step(tape, &model.dec_cell, model.cell, h, x, state);

    let out_in = tape.concat_rows(&[new_state.h, context]);
    let out_in = maybe_dropout(tape, mode, out_in);
    let wx = tape.matvec(model.out_proj.w, out_in);
    let logits = tape.add(wx, model.out_proj.b);

    StepOutput {
        logits,
        state: new_state,
        attn: [w_code, w_ast, w_desc, w_def],
    }
}

/// Teacher-forced cross-entropy, averaged over the predicted positions.
pub fn example_loss(
    tape: &mut Tape,
    model: &BoundModel,
    example: &PreparedExample,
    mode: &mut Mode,
) -> NodeId {
    let encs = encode_channels(tape, model, example, mode);
    let mut state = initial_state(tape, model, &encs);
    let target = &example.target_ids;
    assert!(target.len() >= 2, "target must be BOS..EOS framed");

    let mut total: Option<NodeId> = None;
    for t in 0..target.len() - 1 {
        let step = decode_step(tape, model, target[t], &state, &encs, mode);
        state = step.state;
        let loss_t = tape.cross_entropy(step.logits, target[t + 1]);
        total = Some(match total {
            Some(acc) => tape.add(acc, loss_t),
            None => loss_t,
        });
    }
    let steps = (target.len() - 1) as f64;
    let total = total.expect("at least one prediction step");
    tape.affine(total, 1.0 / steps, 0.0)
}
