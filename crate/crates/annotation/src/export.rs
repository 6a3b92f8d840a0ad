use otforge_core::analysis::{corpus_report, hardness};
use otforge_core::{CorpusReport, OperationTree};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::model::{Annotators, CorpusRecord, Phase, Timing};
use crate::store::{self, Store};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean_phase1_seconds: Option<f64>,
    pub mean_phase2_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Export {
    pub records: Vec<CorpusRecord>,
    pub report: CorpusReport,
    pub timing: TimingSummary,
}

/// Phases that may be exported. Phase1Done only counts when the store has
/// token assignment switched off.
pub fn exportable_phases(store: &Store) -> Result<Vec<Phase>, ServiceError> {
    Ok(if store.token_assignment()? {
        vec![Phase::Phase2Done]
    } else {
        vec![Phase::Phase1Done, Phase::Phase2Done]
    })
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Finished tasks ordered by id, with the corpus report over them.
pub fn export(store: &Store, phase: Option<Phase>) -> Result<Export, ServiceError> {
    let allowed = exportable_phases(store)?;
    let phases = match phase {
        Some(p) if allowed.contains(&p) => vec![p],
        Some(p) => return Err(ServiceError::NotExportable(p)),
        None => allowed,
    };
    let schema = store
        .bound_schema()?
        .ok_or_else(|| ServiceError::Corrupt("store is not bound to a schema".into()))?;
    let conn = store.connection();
    let mut records = Vec::new();
    for id in store::task_ids(conn, &phases)? {
        let task = store::load_task(conn, id)?;
        let question = task
            .question
            .ok_or_else(|| ServiceError::Corrupt(format!("finished task {id} has no question")))?;
        records.push(CorpusRecord {
            task_id: id,
            database_id: schema.id.clone(),
            hardness: hardness(&task.tree),
            tree: task.tree,
            question,
            token_assignments: task.token_assignments,
            timing: Timing {
                phase1_seconds: task.phase1_seconds,
                phase2_seconds: task.phase2_seconds,
            },
            annotators: Annotators {
                phase1: task.phase1_annotator,
                phase2: task.phase2_annotator,
            },
        });
    }
    let trees: Vec<OperationTree> = records.iter().map(|r| r.tree.clone()).collect();
    let questions: Vec<Vec<String>> = records.iter().map(|r| r.question.tokens.clone()).collect();
    let report = corpus_report(&trees, &schema, &questions)
        .map_err(|e| ServiceError::Corrupt(e.to_string()))?;
    let timing = TimingSummary {
        mean_phase1_seconds: mean(records.iter().map(|r| r.timing.phase1_seconds)),
        mean_phase2_seconds: mean(records.iter().map(|r| r.timing.phase2_seconds)),
    };
    Ok(Export {
        records,
        report,
        timing,
    })
}
