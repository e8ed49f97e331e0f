//! Central finite-difference verification of every parameter tensor's
//! analytic gradient on a tiny configuration.

use serde::{Deserialize, Serialize};

use super::model::{bind, example_loss, Mode};
use super::params::{CellKind, ModelConfig, ModelParams};
use super::tape::Tape;
use crate::error::{Error, Result};
use crate::textprep::PreparedExample;

pub const GRADCHECK_STEP: f64 = 1e-4;
pub const GRADCHECK_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub cell: CellKind,
    pub checks: Vec<TensorCheck>,
    pub max_rel_err: f64,
    pub passed: bool,
    /// Tensors over tolerance, worst first.
    pub failures: Vec<String>,
}

/// A configuration small enough for elementwise finite differences.
pub fn tiny_config(cell: CellKind) -> ModelConfig {
    ModelConfig {
        src_vocab_size: 12,
        tgt_vocab_size: 10,
        embed_dim: 3,
        hidden_dim: 5,
        cell,
        dropout: 0.0,
        n_apis: 2,
        seed: 17,
        ..ModelConfig::default()
    }
}

/// The fixed probe example: sequences of length <= 4 and two API
/// channels, ids chosen inside the tiny vocabularies.
fn probe_example() -> PreparedExample {
    PreparedExample {
        id: "probe".into(),
        code_ids: vec![4, 7, 5, 6],
        ast_ids: vec![8, 9, 10],
        desc_channels: vec![vec![1, 11, 4, 2], vec![1, 5, 2]],
        def_channels: vec![vec![1, 6, 9, 2], vec![1, 10, 2]],
        target_ids: vec![1, 4, 7, 5, 2],
    }
}

fn loss_value(params: &ModelParams, example: &PreparedExample) -> f64 {
    let mut tape = Tape::new();
    let model = bind(&mut tape, params);
    let loss = example_loss(&mut tape, &model, example, &mut Mode::Eval);
    tape.value(loss).at(0)
}

pub fn gradcheck(config: &ModelConfig) -> Result<GradCheckReport> {
    gradcheck_impl(config, None)
}

/// `corrupt` adds a bias to the named tensor's analytic gradient; the
/// negative-control tests use it to prove the checker catches a broken
/// backward rule.
pub fn gradcheck_impl(config: &ModelConfig, corrupt: Option<&str>) -> Result<GradCheckReport> {
    config.validate()?;
    if config.hidden_dim > 8 || config.embed_dim > 4 || config.src_vocab_size > 12 {
        return Err(Error::Config(
            "gradcheck needs a tiny configuration (hidden <= 8, embed <= 4, vocab <= 12)".into(),
        ));
    }
    if config.dropout != 0.0 {
        return Err(Error::Config("gradcheck runs with dropout disabled".into()));
    }

    let example = probe_example();
    let mut params = super::params::init_params(config)?;

    // analytic gradients from one backward sweep
    let mut tape = Tape::new();
    let model = bind(&mut tape, &params);
    let loss = example_loss(&mut tape, &model, &example, &mut Mode::Eval);
    let grads = tape.backward(loss);
    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    for ((name, tensor), &node) in params.visit().iter().zip(&model.param_nodes) {
        let g = grads.get(node, tensor);
        analytic.push((name.clone(), g.data().to_vec()));
    }
    drop(tape);

    if let Some(target) = corrupt {
        for (name, g) in &mut analytic {
            if name == target {
                g[0] += 0.5;
            }
        }
    }

    let mut checks = Vec::new();
    let tensor_count = analytic.len();
    for idx in 0..tensor_count {
        let (name, expected) = analytic[idx].clone();
        let mut max_rel = 0.0f64;
        let len = expected.len();
        for e in 0..len {
            let original = params.visit_mut()[idx].1.data()[e];
            params.visit_mut()[idx].1.data_mut()[e] = original + GRADCHECK_STEP;
            let plus = loss_value(&params, &example);
            params.visit_mut()[idx].1.data_mut()[e] = original - GRADCHECK_STEP;
            let minus = loss_value(&params, &example);
            params.visit_mut()[idx].1.data_mut()[e] = original;

            let fd = (plus - minus) / (2.0 * GRADCHECK_STEP);
            let a = expected[e];
            let rel = (a - fd).abs() / (a.abs().max(fd.abs())).max(1e-3);
            max_rel = max_rel.max(rel);
        }
        checks.push(TensorCheck {
            name,
            max_rel_err: max_rel,
        });
    }

    let max_rel_err = checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    let mut failures: Vec<&TensorCheck> = checks
        .iter()
        .filter(|c| c.max_rel_err >= GRADCHECK_TOLERANCE)
        .collect();
    failures.sort_by(|a, b| b.max_rel_err.total_cmp(&a.max_rel_err));
    let failures: Vec<String> = failures.into_iter().map(|c| c.name.clone()).collect();
    Ok(GradCheckReport {
        cell: config.cell,
        passed: failures.is_empty(),
        max_rel_err,
        checks,
        failures,
    })
}
