//! Model configuration, trainable tensors, seeded initialization, and
//! the versioned parameter file format.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    /// Gate blocks per cell step: GRU packs 3, LSTM packs 4.
    pub fn gate_blocks(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellKind::Gru => write!(f, "gru"),
            CellKind::Lstm => write!(f, "lstm"),
        }
    }
}

impl std::str::FromStr for CellKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(format!("unknown cell kind {other:?} (expected gru or lstm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub src_vocab_size: usize,
    pub tgt_vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub cell: CellKind,
    pub dropout: f64,
    pub n_apis: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub use_api_context: bool,
    /// 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            src_vocab_size: 8000,
            tgt_vocab_size: 4000,
            embed_dim: 256,
            hidden_dim: 512,
            cell: CellKind::Gru,
            dropout: 0.2,
            n_apis: 3,
            lr: 0.1,
            batch_size: 32,
            max_epochs: 100,
            patience: 7,
            seed: 1,
            use_api_context: true,
            clip_norm: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("dimensions must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.lr <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and epochs must be positive".into()));
        }
        if self.src_vocab_size < 5 || self.tgt_vocab_size < 5 {
            return Err(Error::Config(
                "vocabularies must hold the specials plus at least one token".into(),
            ));
        }
        Ok(())
    }
}

const INIT_BOUND: f64 = 0.08;

/// One recurrent cell: packed input and recurrent weights plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub b_ih: Tensor,
    pub b_hh: Tensor,
}

impl CellParams {
    fn zeros(cell: CellKind, input_dim: usize, hidden_dim: usize) -> Self {
        let rows = cell.gate_blocks() * hidden_dim;
        CellParams {
            w_ih: Tensor::zeros(rows, input_dim),
            w_hh: Tensor::zeros(rows, hidden_dim),
            b_ih: Tensor::zeros(rows, 1),
            b_hh: Tensor::zeros(rows, 1),
        }
    }
}

/// Bidirectional encoder: two cells and a shared projection that maps
/// [forward; backward] back to the hidden size.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub fw: CellParams,
    pub bw: CellParams,
    pub proj_w: Tensor,
    pub proj_b: Tensor,
}

impl EncoderParams {
    fn zeros(cell: CellKind, input_dim: usize, hidden_dim: usize) -> Self {
        EncoderParams {
            fw: CellParams::zeros(cell, input_dim, hidden_dim),
            bw: CellParams::zeros(cell, input_dim, hidden_dim),
            proj_w: Tensor::zeros(hidden_dim, 2 * hidden_dim),
            proj_b: Tensor::zeros(hidden_dim, 1),
        }
    }
}

/// Additive attention: score = v . tanh(Wd h' + We h_j).
#[derive(Debug, Clone, PartialEq)]
pub struct AttnParams {
    pub w_dec: Tensor,
    pub w_enc: Tensor,
    pub v: Tensor,
}

impl AttnParams {
    fn zeros(hidden_dim: usize) -> Self {
        AttnParams {
            w_dec: Tensor::zeros(hidden_dim, hidden_dim),
            w_enc: Tensor::zeros(hidden_dim, hidden_dim),
            v: Tensor::zeros(hidden_dim, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl AffineParams {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        AffineParams {
            w: Tensor::zeros(out_dim, in_dim),
            b: Tensor::zeros(out_dim, 1),
        }
    }
}

/// Every trainable tensor of the model.
///
/// The two fused affine maps (initial decoder state and per-step
/// context) are separate parameter sets, as are the two outer API
/// cells; the per-API inner encoders are shared across channels of the
/// same kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub src_embed: Tensor,
    pub tgt_embed: Tensor,
    pub code_enc: EncoderParams,
    pub ast_enc: EncoderParams,
    pub desc_inner: EncoderParams,
    pub def_inner: EncoderParams,
    pub desc_outer: CellParams,
    pub def_outer: CellParams,
    pub attn_code: AttnParams,
    pub attn_ast: AttnParams,
    pub attn_desc: AttnParams,
    pub attn_def: AttnParams,
    pub fuse_init: AffineParams,
    pub fuse_ctx: AffineParams,
    pub dec_cell: CellParams,
    pub out_proj: AffineParams,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let (e, h) = (config.embed_dim, config.hidden_dim);
        let cell = config.cell;
        ModelParams {
            config: config.clone(),
            src_embed: Tensor::zeros(config.src_vocab_size, e),
            tgt_embed: Tensor::zeros(config.tgt_vocab_size, e),
            code_enc: EncoderParams::zeros(cell, e, h),
            ast_enc: EncoderParams::zeros(cell, e, h),
            desc_inner: EncoderParams::zeros(cell, e, h),
            def_inner: EncoderParams::zeros(cell, e, h),
            desc_outer: CellParams::zeros(cell, h, h),
            def_outer: CellParams::zeros(cell, h, h),
            attn_code: AttnParams::zeros(h),
            attn_ast: AttnParams::zeros(h),
            attn_desc: AttnParams::zeros(h),
            attn_def: AttnParams::zeros(h),
            fuse_init: AffineParams::zeros(h, 4 * h),
            fuse_ctx: AffineParams::zeros(h, 4 * h),
            dec_cell: CellParams::zeros(cell, e + h, h),
            out_proj: AffineParams::zeros(config.tgt_vocab_size, 2 * h),
        }
    }

    /// Named views of every tensor, in a fixed order shared with
    /// [`ModelParams::visit_mut`] and the tape binding.
    pub fn visit(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        fn cell<'p>(name: &str, c: &'p CellParams, out: &mut Vec<(String, &'p Tensor)>) {
            out.push((format!("{name}.w_ih"), &c.w_ih));
            out.push((format!("{name}.w_hh"), &c.w_hh));
            out.push((format!("{name}.b_ih"), &c.b_ih));
            out.push((format!("{name}.b_hh"), &c.b_hh));
        }
        fn enc<'p>(name: &str, e: &'p EncoderParams, out: &mut Vec<(String, &'p Tensor)>) {
            cell(&format!("{name}.fw"), &e.fw, out);
            cell(&format!("{name}.bw"), &e.bw, out);
            out.push((format!("{name}.proj_w"), &e.proj_w));
            out.push((format!("{name}.proj_b"), &e.proj_b));
        }
        out.push(("src_embed".into(), &self.src_embed));
        out.push(("tgt_embed".into(), &self.tgt_embed));
        enc("code_enc", &self.code_enc, &mut out);
        enc("ast_enc", &self.ast_enc, &mut out);
        enc("desc_inner", &self.desc_inner, &mut out);
        enc("def_inner", &self.def_inner, &mut out);
        cell("desc_outer", &self.desc_outer, &mut out);
        cell("def_outer", &self.def_outer, &mut out);
        for (name, attn) in [
            ("attn_code", &self.attn_code),
            ("attn_ast", &self.attn_ast),
            ("attn_desc", &self.attn_desc),
            ("attn_def", &self.attn_def),
        ] {
            out.push((format!("{name}.w_dec"), &attn.w_dec));
            out.push((format!("{name}.w_enc"), &attn.w_enc));
            out.push((format!("{name}.v"), &attn.v));
        }
        out.push(("fuse_init.w".into(), &self.fuse_init.w));
        out.push(("fuse_init.b".into(), &self.fuse_init.b));
        out.push(("fuse_ctx.w".into(), &self.fuse_ctx.w));
        out.push(("fuse_ctx.b".into(), &self.fuse_ctx.b));
        cell("dec_cell", &self.dec_cell, &mut out);
        out.push(("out_proj.w".into(), &self.out_proj.w));
        out.push(("out_proj.b".into(), &self.out_proj.b));
        out
    }

    pub fn visit_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        fn cell<'p>(name: &str, c: &'p mut CellParams, out: &mut Vec<(String, &'p mut Tensor)>) {
            out.push((format!("{name}.w_ih"), &mut c.w_ih));
            out.push((format!("{name}.w_hh"), &mut c.w_hh));
            out.push((format!("{name}.b_ih"), &mut c.b_ih));
            out.push((format!("{name}.b_hh"), &mut c.b_hh));
        }
        fn enc<'p>(name: &str, e: &'p mut EncoderParams, out: &mut Vec<(String, &'p mut Tensor)>) {
            cell(&format!("{name}.fw"), &mut e.fw, out);
            cell(&format!("{name}.bw"), &mut e.bw, out);
            out.push((format!("{name}.proj_w"), &mut e.proj_w));
            out.push((format!("{name}.proj_b"), &mut e.proj_b));
        }
        out.push(("src_embed".into(), &mut self.src_embed));
        out.push(("tgt_embed".into(), &mut self.tgt_embed));
        enc("code_enc", &mut self.code_enc, &mut out);
        enc("ast_enc", &mut self.ast_enc, &mut out);
        enc("desc_inner", &mut self.desc_inner, &mut out);
        enc("def_inner", &mut self.def_inner, &mut out);
        cell("desc_outer", &mut self.desc_outer, &mut out);
        cell("def_outer", &mut self.def_outer, &mut out);
        for (name, attn) in [
            ("attn_code", &mut self.attn_code),
            ("attn_ast", &mut self.attn_ast),
            ("attn_desc", &mut self.attn_desc),
            ("attn_def", &mut self.attn_def),
        ] {
            out.push((format!("{name}.w_dec"), &mut attn.w_dec));
            out.push((format!("{name}.w_enc"), &mut attn.w_enc));
            out.push((format!("{name}.v"), &mut attn.v));
        }
        out.push(("fuse_init.w".into(), &mut self.fuse_init.w));
        out.push(("fuse_init.b".into(), &mut self.fuse_init.b));
        out.push(("fuse_ctx.w".into(), &mut self.fuse_ctx.w));
        out.push(("fuse_ctx.b".into(), &mut self.fuse_ctx.b));
        cell("dec_cell", &mut self.dec_cell, &mut out);
        out.push(("out_proj.w".into(), &mut self.out_proj.w));
        out.push(("out_proj.b".into(), &mut self.out_proj.b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.visit().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.visit().iter().all(|(_, t)| t.is_finite())
    }
}

/// Closed-form parameter count for a configuration; kept next to the
/// tensor list so shape changes show up as a test failure.
///
/// With g gate blocks, hidden h, embed e, vocabularies vs/vt:
///   embeddings        vs*e + vt*e
///   4 bidirectional   4 * (2*(g*h*e + g*h*h + 2*g*h) + h*2h + h)
///   2 outer cells     2 * (g*h*h + g*h*h + 2*g*h)
///   4 attention sets  4 * (h*h + h*h + h)
///   2 fused affines   2 * (h*4h + h)
///   decoder cell      g*h*(e+h) + g*h*h + 2*g*h
///   output layer      vt*2h + vt
pub fn expected_param_count(config: &ModelConfig) -> usize {
    let g = config.cell.gate_blocks();
    let h = config.hidden_dim;
    let e = config.embed_dim;
    let (vs, vt) = (config.src_vocab_size, config.tgt_vocab_size);
    let cell = |input: usize| g * h * input + g * h * h + 2 * g * h;
    let bidir = 2 * cell(e) + h * 2 * h + h;
    vs * e
        + vt * e
        + 4 * bidir
        + 2 * cell(h)
        + 4 * (2 * h * h + h)
        + 2 * (4 * h * h + h)
        + cell(e + h)
        + (vt * 2 * h + vt)
}

/// Uniform [-0.08, 0.08] initialization; the same seed reproduces the
/// parameters bit for bit.
pub fn init_params(config: &ModelConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut params = ModelParams::zeros(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for (_, tensor) in params.visit_mut() {
        tensor.fill_uniform(&mut rng, INIT_BOUND);
    }
    Ok(params)
}

const MAGIC: &[u8; 4] = b"CGM1";
const FORMAT_VERSION: u32 = 1;

/// Writes the versioned parameter file: magic, version, config echo,
/// a name/shape table, then all tensor data as little-endian f32.
pub fn save_params(params: &ModelParams, path: &Path) -> Result<()> {
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);

    file.write_all(MAGIC).map_err(io_err)?;
    file.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io_err)?;
    let config_json = serde_json::to_vec(&params.config).expect("config serializes");
    file.write_all(&(config_json.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&config_json).map_err(io_err)?;

    let table = params.visit();
    file.write_all(&(table.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (name, tensor) in &table {
        file.write_all(&(name.len() as u32).to_le_bytes()).map_err(io_err)?;
        file.write_all(name.as_bytes()).map_err(io_err)?;
        file.write_all(&(tensor.rows() as u32).to_le_bytes()).map_err(io_err)?;
        file.write_all(&(tensor.cols() as u32).to_le_bytes()).map_err(io_err)?;
    }
    let mut buf = Vec::new();
    for (_, tensor) in &table {
        for &v in tensor.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    file.write_all(&buf).map_err(io_err)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut cursor = std::io::Cursor::new(bytes);
    let bad = |m: &str| Error::ModelFile(format!("{}: {m}", path.display()));

    let mut magic = [0u8; 4];
    cursor.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut cursor).map_err(|_| bad("truncated version"))?;
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let config_len = read_u32(&mut cursor).map_err(|_| bad("truncated config length"))? as usize;
    let mut config_json = vec![0u8; config_len];
    cursor.read_exact(&mut config_json).map_err(|_| bad("truncated config"))?;
    let config: ModelConfig =
        serde_json::from_slice(&config_json).map_err(|e| bad(&format!("config: {e}")))?;

    let count = read_u32(&mut cursor).map_err(|_| bad("truncated table"))? as usize;
    let mut table: Vec<(String, usize, usize)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut cursor).map_err(|_| bad("truncated name"))? as usize;
        let mut name = vec![0u8; name_len];
        cursor.read_exact(&mut name).map_err(|_| bad("truncated name"))?;
        let rows = read_u32(&mut cursor).map_err(|_| bad("truncated shape"))? as usize;
        let cols = read_u32(&mut cursor).map_err(|_| bad("truncated shape"))? as usize;
        table.push((
            String::from_utf8(name).map_err(|_| bad("name not utf-8"))?,
            rows,
            cols,
        ));
    }

    let mut params = ModelParams::zeros(&config);
    {
        let expected = params.visit_mut();
        if expected.len() != table.len() {
            return Err(bad(&format!(
                "tensor count {} does not match config ({})",
                table.len(),
                expected.len()
            )));
        }
        for ((name, rows, cols), (want_name, tensor)) in table.iter().zip(expected) {
            if name != &want_name {
                return Err(bad(&format!("tensor {name} where {want_name} expected")));
            }
            if (*rows, *cols) != tensor.shape() {
                return Err(bad(&format!(
                    "tensor {name} shape {rows}x{cols} does not match config {:?}",
                    tensor.shape()
                )));
            }
            let mut buf = [0u8; 4];
            for v in tensor.data_mut() {
                cursor.read_exact(&mut buf).map_err(|_| bad("truncated data"))?;
                *v = f32::from_le_bytes(buf) as f64;
            }
        }
    }
    Ok(params)
}

fn read_u32(cursor: &mut std::io::Cursor<Vec<u8>>) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    cursor.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
