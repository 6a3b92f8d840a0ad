//! Reading trees from files or stdin.
//!
//! Input is a stream of JSON values: newline-delimited trees, a single
//! pretty-printed tree, or exported corpus records (objects with a `tree`
//! field, optionally with a `question`).

use std::io::Read;
use std::path::Path;

use otforge_core::ot::format::from_value;
use otforge_core::OperationTree;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub tree: OperationTree,
    /// Tokens of the record's question, when the input carried one.
    pub question_tokens: Option<Vec<String>>,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::io(path, e))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
    }
}

pub fn parse_items(text: &str) -> Result<Vec<Item>, CliError> {
    let mut out = Vec::new();
    for (i, value) in serde_json::Deserializer::from_str(text)
        .into_iter::<Value>()
        .enumerate()
    {
        let value = value.map_err(|e| CliError::new("parse", format!("record {i}: {e}")))?;
        let (tree_value, question) = match value.get("tree") {
            Some(t) if value.get("op").is_none() => (t, value.get("question")),
            _ => (&value, None),
        };
        let tree = from_value(tree_value)
            .map_err(|e| CliError::new("parse", format!("record {i}: {e}")))?;
        let question_tokens = question
            .and_then(|q| q.get("tokens"))
            .and_then(|t| serde_json::from_value(t.clone()).ok());
        out.push(Item {
            tree,
            question_tokens,
        });
    }
    Ok(out)
}

pub fn read_items(path: &Path) -> Result<Vec<Item>, CliError> {
    parse_items(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use otforge_core::ot::format::{serialize, serialize_pretty};
    use otforge_testkit::trees;

    #[test]
    fn ndjson_and_pretty_input() {
        let t = trees::notebook_cast();
        let nd = format!("{}\n{}\n", serialize(&t), serialize(&trees::jesse_vote()));
        assert_eq!(parse_items(&nd).unwrap().len(), 2);
        let one = parse_items(&serialize_pretty(&t)).unwrap();
        assert_eq!(one[0].tree, t);
        assert!(parse_items("").unwrap().is_empty());
    }

    #[test]
    fn corpus_records_carry_question_tokens() {
        let record = serde_json::json!({
            "task_id": 1,
            "tree": otforge_core::ot::format::to_value(&trees::notebook_cast()),
            "question": {"text": "Who?", "tokens": ["Who", "?"], "tokenizer": "simple-1"},
        });
        let items = parse_items(&record.to_string()).unwrap();
        assert_eq!(
            items[0].question_tokens.as_deref(),
            Some(&["Who".to_string(), "?".to_string()][..])
        );
    }

    #[test]
    fn bad_records_name_their_index() {
        let err = parse_items("{\"op\":\"Nope\"}\n").unwrap_err();
        assert!(err.to_string().starts_with("parse: record 0"), "{err}");
    }
}
