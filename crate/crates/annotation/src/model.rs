use std::fmt;
use std::str::FromStr;

use otforge_core::analysis::Hardness;
use otforge_core::{NodePath, OperationTree};
use serde::{Deserialize, Serialize};

/// Lifecycle of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Phase1Pending,
    Phase1Done,
    Phase2Pending,
    Phase2Done,
    Skipped,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Phase1Pending,
        Phase::Phase1Done,
        Phase::Phase2Pending,
        Phase::Phase2Done,
        Phase::Skipped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Phase1Pending => "Phase1Pending",
            Phase::Phase1Done => "Phase1Done",
            Phase::Phase2Pending => "Phase2Pending",
            Phase::Phase2Done => "Phase2Done",
            Phase::Skipped => "Skipped",
        }
    }

    /// The only edges of the state machine.
    pub fn can_transition(self, to: Phase) -> bool {
        matches!(
            (self, to),
            (Phase::Phase1Pending, Phase::Phase1Done)
                | (Phase::Phase1Pending, Phase::Skipped)
                | (Phase::Phase1Done, Phase::Phase2Pending)
                | (Phase::Phase2Pending, Phase::Phase2Done)
        )
    }

    /// Phases an annotator can lease work from.
    pub fn is_queue(self) -> bool {
        matches!(self, Phase::Phase1Pending | Phase::Phase2Pending)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = String;

    /// Accepts the variant names, their snake-case forms, and `phase1` /
    /// `phase2` as shorthands for the two queues.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "phase1pending" | "phase1" | "1" => Ok(Phase::Phase1Pending),
            "phase1done" => Ok(Phase::Phase1Done),
            "phase2pending" | "phase2" | "2" => Ok(Phase::Phase2Pending),
            "phase2done" => Ok(Phase::Phase2Done),
            "skipped" => Ok(Phase::Skipped),
            _ => Err(format!("unknown phase `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkipReason {
    Nonsensical,
    Contradictory,
    Other,
}

/// Raw question text and its tokens, tagged with the tokenizer that made
/// them. Token assignments index into `tokens`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub tokens: Vec<String>,
    pub tokenizer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAssignment {
    #[serde(with = "path_text")]
    pub node_path: NodePath,
    pub token_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub annotator: String,
    /// Milliseconds since the epoch.
    pub started_at: i64,
    pub expires_at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: Option<Phase>,
    pub to: Phase,
    pub annotator: Option<String>,
    pub at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub reason: SkipReason,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: i64,
    #[serde(with = "tree_json")]
    pub tree: OperationTree,
    #[serde(with = "tree_json")]
    pub original_tree: OperationTree,
    pub phase: Phase,
    pub question: Option<Question>,
    pub token_assignments: Vec<TokenAssignment>,
    pub phase1_annotator: Option<String>,
    pub phase2_annotator: Option<String>,
    /// Everyone who wrote to the task during phase 1.
    pub phase1_touched: Vec<String>,
    pub lease: Option<Lease>,
    pub phase1_seconds: Option<f64>,
    pub phase2_seconds: Option<f64>,
    pub skip: Option<Skip>,
    pub created_at: i64,
    pub transitions: Vec<Transition>,
}

impl Task {
    pub fn active_lease(&self, now_ms: i64) -> Option<&Lease> {
        self.lease.as_ref().filter(|l| l.expires_at > now_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phase1_seconds: Option<f64>,
    pub phase2_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotators {
    pub phase1: Option<String>,
    pub phase2: Option<String>,
}

/// One finished task in exported form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub task_id: i64,
    pub database_id: String,
    #[serde(with = "tree_json")]
    pub tree: OperationTree,
    pub question: Question,
    pub token_assignments: Vec<TokenAssignment>,
    pub hardness: Hardness,
    pub timing: Timing,
    pub annotators: Annotators,
}

pub(crate) mod tree_json {
    use otforge_core::ot::format::{from_value, to_value};
    use otforge_core::OperationTree;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(tree: &OperationTree, s: S) -> Result<S::Ok, S::Error> {
        to_value(tree).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<OperationTree, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        from_value(&v).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod path_text {
    use otforge_core::NodePath;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(path: &NodePath, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(path)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NodePath, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_declared_edges_are_legal() {
        let legal: Vec<(Phase, Phase)> = Phase::ALL
            .iter()
            .flat_map(|a| Phase::ALL.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_transition(*b))
            .collect();
        assert_eq!(legal.len(), 4);
        assert!(!Phase::Skipped.can_transition(Phase::Phase1Pending));
        assert!(!Phase::Phase1Pending.can_transition(Phase::Phase2Pending));
    }

    #[test]
    fn phase_names_parse() {
        for p in Phase::ALL {
            assert_eq!(p.name().parse::<Phase>().unwrap(), p);
        }
        assert_eq!("phase2".parse::<Phase>().unwrap(), Phase::Phase2Pending);
        assert_eq!("phase_1_done".parse::<Phase>().unwrap(), Phase::Phase1Done);
        assert!("phase3".parse::<Phase>().is_err());
    }

    #[test]
    fn assignment_paths_serialize_as_text() {
        let a = TokenAssignment {
            node_path: "/0/1".parse().unwrap(),
            token_indices: vec![2, 3],
        };
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["node_path"], "/0/1");
        assert_eq!(serde_json::from_value::<TokenAssignment>(v).unwrap(), a);
    }
}
