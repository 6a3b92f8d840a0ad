//! Token suggestions for `Selection` values by plain string matching.

use otforge_core::tokenize::Tokenizer;
use otforge_core::{NodePath, Op, OperationTree};

use crate::model::TokenAssignment;

/// Suggested tokens for each `Selection` node: the case-insensitive
/// occurrences of its value as a contiguous token span in `tokens`. When
/// several Selections share a value, occurrences are dealt out in pre-order
/// (the k-th such node gets occurrences k, k+n, ...); a node left without
/// one falls back to all of them. Nodes whose value does not occur get no
/// entry.
pub fn prematch(
    tree: &OperationTree,
    tokens: &[String],
    tokenizer: &dyn Tokenizer,
) -> Vec<TokenAssignment> {
    let hay: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut selections = Vec::new();
    for (path, node) in tree.root.preorder() {
        let Op::Selection { value, .. } = &node.op else {
            continue;
        };
        let needle: Vec<String> = tokenizer
            .tokenize(&value.surface())
            .into_iter()
            .map(|t| t.text.to_lowercase())
            .collect();
        selections.push((path, needle));
    }
    let mut out = Vec::new();
    for (path, needle) in &selections {
        let spans = find_spans(&hay, needle);
        if spans.is_empty() {
            continue;
        }
        let sharing: Vec<&NodePath> = selections
            .iter()
            .filter(|(_, n)| n == needle)
            .map(|(p, _)| p)
            .collect();
        let rank = sharing.iter().position(|p| *p == path).unwrap_or(0);
        let mine: Vec<usize> = spans
            .iter()
            .copied()
            .skip(rank)
            .step_by(sharing.len())
            .collect();
        let chosen = if mine.is_empty() { spans } else { mine };
        let mut indices: Vec<usize> = chosen
            .into_iter()
            .flat_map(|s| s..s + needle.len())
            .collect();
        indices.sort_unstable();
        indices.dedup();
        out.push(TokenAssignment {
            node_path: path.clone(),
            token_indices: indices,
        });
    }
    out
}

/// Start positions of `needle` in `hay`.
pub fn find_spans(hay: &[String], needle: &[String]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - needle.len())
        .filter(|&i| hay[i..i + needle.len()] == *needle)
        .collect()
}
