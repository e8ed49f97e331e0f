//! Scores each matched API against the enclosing method by parameter
//! difference, ranks, and selects the top n.

use serde::{Deserialize, Serialize};

use crate::catalog::{ApiEntry, ApiParam};
use crate::java::{MethodSignature, ParamDecl};

/// One scored API. The score is minus the parameter difference, so it
/// is never positive and is zero exactly when the type multisets match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedApi {
    pub entry: ApiEntry,
    pub score: i64,
    pub order_index: usize,
}

/// APIs for one method, sorted by (score desc, appearance asc).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedApiSet {
    pub ranked: Vec<RankedApi>,
    pub n_selected: usize,
    pub unmatched_count: usize,
}

impl RankedApiSet {
    /// The APIs the model will see: the first `n_selected`.
    pub fn selected(&self) -> &[RankedApi] {
        &self.ranked[..self.n_selected]
    }
}

/// Lowercased type head with generic arguments dropped and leading
/// package segments removed; array suffixes are kept, so `int[]` and
/// `int` stay distinct.
fn normalize_type(type_text: &str) -> String {
    let no_generics = match type_text.split_once('<') {
        Some((head, rest)) => {
            let suffix: String = rest.chars().filter(|&c| c == '[' || c == ']').collect();
            format!("{head}{suffix}")
        }
        None => type_text.to_string(),
    };
    let head = no_generics.rsplit('.').next().unwrap_or(&no_generics);
    head.trim().to_lowercase()
}

/// Size of the multiset symmetric difference between normalized method
/// and API parameter types; order and parameter names are ignored.
pub fn param_diff(method_params: &[ParamDecl], api_params: &[ApiParam]) -> usize {
    let mut counts: std::collections::HashMap<String, i64> = std::collections::HashMap::new();
    for p in method_params {
        *counts.entry(normalize_type(&p.type_text)).or_insert(0) += 1;
    }
    for m in api_params {
        *counts.entry(normalize_type(&m.type_text)).or_insert(0) -= 1;
    }
    counts.values().map(|c| c.unsigned_abs() as usize).sum()
}

/// Scores every matched API and sorts; nothing is discarded here, so
/// `n_selected` starts at the full length.
pub fn score_apis(
    signature: &MethodSignature,
    matched: Vec<(ApiEntry, usize)>,
    unmatched_count: usize,
) -> RankedApiSet {
    let mut ranked: Vec<RankedApi> = matched
        .into_iter()
        .map(|(entry, order_index)| {
            let diff = param_diff(&signature.params, &entry.params);
            RankedApi {
                entry,
                score: -(diff as i64),
                order_index,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(a.order_index.cmp(&b.order_index))
    });
    let n_selected = ranked.len();
    RankedApiSet {
        ranked,
        n_selected,
        unmatched_count,
    }
}

/// Keeps the first `min(n, len)` ranked APIs; `None` keeps everything
/// (the all-APIs configuration).
pub fn select_top_n(mut set: RankedApiSet, n: Option<usize>) -> RankedApiSet {
    let keep = match n {
        Some(n) => n.min(set.ranked.len()),
        None => set.ranked.len(),
    };
    set.ranked.truncate(keep);
    set.n_selected = keep;
    set
}
