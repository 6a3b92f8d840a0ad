//! Random operation-tree generation.
//!
//! A draw walks through these steps: question type, result table and
//! attributes, join path, optional set operation, optional group-by root,
//! optional extremum, filters. The tree is then assembled bottom-up: joins,
//! set operation, selections, extremum, question root. Selections are placed
//! directly above the `GetData` of the table they filter, which is
//! equivalent to filtering above the joins and keeps each constraint next to
//! its table.
//!
//! [`Sampler::sample_batch`] keeps only trees that execute with a non-empty
//! answer. Draw `i` of a batch uses its own ChaCha stream, so the outcome of
//! a draw does not depend on which worker evaluated it.

mod config;

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ConfigError, CountRange, QuestionType, SampleConfig};

use crate::db::{Database, DbError, ExecLimits, ValueError, ValueSource};
use crate::ot::{validate, AttrRef, Comparator, GroupVariant, Literal, Node, Op, OperationTree};
use crate::schema::{enumerate_join_paths, Attribute, ColumnType, JoinPath, SchemaGraph};
use crate::sql::{execute, is_empty_answer};

/// Why a draw was discarded.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejected {
    #[error("no join path")]
    NoJoinPath,
    #[error("no sampleable value")]
    NoSampleableValue,
    #[error("degenerate aggregation")]
    DegenerateAggregation,
    #[error("execution error: {0}")]
    ExecutionError(String),
    #[error("empty result")]
    EmptyResult,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

impl Rejected {
    /// Histogram key.
    pub fn reason(&self) -> &'static str {
        match self {
            Rejected::NoJoinPath => "no join path",
            Rejected::NoSampleableValue => "no sampleable value",
            Rejected::DegenerateAggregation => "degenerate aggregation",
            Rejected::ExecutionError(_) => "execution error",
            Rejected::EmptyResult => "empty result",
            Rejected::InvalidTree(_) => "invalid tree",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub seed: u64,
    pub requested: usize,
    pub accepted: usize,
    pub attempts: usize,
    pub acceptance_rate: f64,
    pub rejections: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub trees: Vec<OperationTree>,
    pub stats: BatchStats,
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("draw budget exhausted after {} attempts: {} of {} trees accepted", .0.stats.attempts, .0.stats.accepted, .0.stats.requested)]
    BudgetExhausted(Box<Batch>),
    #[error(transparent)]
    Database(#[from] DbError),
}

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown result table `{0}`")]
    UnknownResultTable(String),
    #[error("unknown result attribute `{0}`")]
    UnknownResultAttribute(String),
}

enum RootChoice {
    Question(QuestionType),
    GroupBy,
}

struct Occurrence {
    table: String,
    relation: String,
}

struct Filter {
    occurrence: usize,
    attribute: String,
    comparator: Comparator,
    value: Literal,
}

/// A validated config bound to a schema, with join paths precomputed.
pub struct Sampler<'s> {
    config: SampleConfig,
    schema: &'s SchemaGraph,
    paths: BTreeMap<(String, usize), Vec<JoinPath>>,
}

impl<'s> Sampler<'s> {
    pub fn new(config: SampleConfig, schema: &'s SchemaGraph) -> Result<Self, SamplerError> {
        config.validate()?;
        if let Some(t) = &config.result_table {
            let table = schema
                .table(t)
                .ok_or_else(|| SamplerError::UnknownResultTable(t.clone()))?;
            for a in config.result_attributes.iter().flatten() {
                let column = a.split_once('.').map_or("", |(_, c)| c);
                if table.attribute(column).is_none() {
                    return Err(SamplerError::UnknownResultAttribute(a.clone()));
                }
            }
        }
        let mut paths = BTreeMap::new();
        for table in &schema.tables {
            for len in config.path_length.min()..=config.path_length.max() {
                let found = enumerate_join_paths(schema, &table.name, len).unwrap_or_default();
                paths.insert((table.name.clone(), len), found);
            }
        }
        Ok(Sampler {
            config,
            schema,
            paths,
        })
    }

    pub fn config(&self) -> &SampleConfig {
        &self.config
    }

    /// One draw. The tree is grammar- and schema-valid but not executed.
    pub fn sample_tree<R: Rng>(
        &self,
        source: &dyn ValueSource,
        rng: &mut R,
    ) -> Result<OperationTree, Rejected> {
        let cfg = &self.config;

        let root = match cfg.question_type {
            Some(q) => RootChoice::Question(q),
            None if rng.random_bool(cfg.group_by_probability) => RootChoice::GroupBy,
            None => RootChoice::Question(*QuestionType::ALL.choose(rng).expect("non-empty")),
        };
        let numeric_root = matches!(
            root,
            RootChoice::Question(QuestionType::Sum | QuestionType::Average)
        );

        let result_table = self.result_table(numeric_root, rng)?;
        let result_columns = self.result_columns(&result_table, &root, rng)?;

        let len = cfg.path_length.sample(rng);
        let path = self
            .paths
            .get(&(result_table.clone(), len))
            .and_then(|p| p.choose(rng))
            .ok_or(Rejected::NoJoinPath)?;
        let occurrences = name_relations(path);

        let set_op = if rng.random_bool(cfg.set_op_probability) {
            let op = [Op::Union, Op::Intersect, Op::Diff]
                .choose(rng)
                .expect("non-empty")
                .clone();
            Some((op, self.differing_filters(&occurrences, source, rng)?))
        } else {
            None
        };

        let distinct = len > 1 && set_op.is_none() && rng.random_bool(cfg.distinct_probability);
        // Set operations and Distinct only pass the result table's columns on.
        let visible: Vec<usize> = if set_op.is_some() || distinct {
            vec![0]
        } else {
            (0..occurrences.len()).collect()
        };

        let group_by = match root {
            RootChoice::GroupBy => Some(self.group_by_args(&occurrences, &visible, rng)?),
            RootChoice::Question(_) => None,
        };

        let extremum = if rng.random_bool(cfg.extremum_probability) {
            let ordered =
                self.visible_attributes(&occurrences, &visible, |a| a.column_type.is_ordered());
            ordered.choose(rng).map(|attr| {
                if rng.random_bool(0.5) {
                    Op::Min {
                        attribute: attr.clone(),
                    }
                } else {
                    Op::Max {
                        attribute: attr.clone(),
                    }
                }
            })
        } else {
            None
        };

        let filters = self.filters(&occurrences, source, rng)?;

        let chain = |extra: Option<&Filter>| {
            let leaf = |i: usize| {
                let occ = &occurrences[i];
                let mut node = if occ.relation == occ.table {
                    Node::get_data(&occ.table)
                } else {
                    Node::get_data_as(&occ.table, &occ.relation)
                };
                for f in filters.iter().chain(extra).filter(|f| f.occurrence == i) {
                    node = Node::selection(
                        AttrRef::new(&occ.relation, &f.attribute),
                        f.comparator,
                        f.value.clone(),
                        node,
                    );
                }
                node
            };
            let mut acc = leaf(0);
            for (i, hop) in path.hops.iter().enumerate() {
                acc = Node::join(
                    AttrRef::new(&occurrences[i].relation, &hop.left.column),
                    AttrRef::new(&occurrences[i + 1].relation, &hop.right.column),
                    acc,
                    leaf(i + 1),
                );
            }
            acc
        };

        let mut t = match &set_op {
            Some((op, (a, b))) => Node::binary(op.clone(), chain(Some(a)), chain(Some(b))),
            None => chain(None),
        };
        if let Some(op) = extremum {
            t = Node::unary(op, t);
        }
        if distinct {
            t = Node::unary(Op::Distinct, t);
        }

        let rel0 = occurrences[0].relation.clone();
        let root = match (root, group_by) {
            (RootChoice::GroupBy, Some(op)) => Node::unary(op, t),
            (RootChoice::Question(QuestionType::List), _) => Node::done(Node::projection(
                result_columns
                    .iter()
                    .map(|c| AttrRef::new(&rel0, c))
                    .collect(),
                t,
            )),
            (RootChoice::Question(QuestionType::Count), _) => Node::unary(Op::Count, t),
            (RootChoice::Question(QuestionType::Boolean), _) => Node::unary(Op::IsEmpty, t),
            (RootChoice::Question(QuestionType::Sum), _) => Node::unary(
                Op::Sum {
                    attribute: AttrRef::new(&rel0, &result_columns[0]),
                },
                t,
            ),
            (RootChoice::Question(QuestionType::Average), _) => Node::unary(
                Op::Average {
                    attribute: AttrRef::new(&rel0, &result_columns[0]),
                },
                t,
            ),
            (RootChoice::GroupBy, None) => {
                unreachable!("group-by arguments are drawn for group-by roots")
            }
        };

        let tree = OperationTree::new(root).with_schema(&self.schema.id);
        if let Some(v) = validate(&tree, self.schema).into_iter().next() {
            return Err(Rejected::InvalidTree(v.to_string()));
        }
        Ok(tree)
    }

    fn result_table<R: Rng>(&self, numeric_root: bool, rng: &mut R) -> Result<String, Rejected> {
        let has_numeric = |t: &str| {
            self.schema
                .non_key_attributes(t)
                .iter()
                .any(|a| a.column_type.is_numeric())
        };
        if let Some(t) = &self.config.result_table {
            if numeric_root && self.config.result_attributes.is_none() && !has_numeric(t) {
                return Err(Rejected::DegenerateAggregation);
            }
            return Ok(t.clone());
        }
        let entity: Vec<&str> = self
            .schema
            .tables
            .iter()
            .filter(|t| !t.is_bridge && !self.schema.non_key_attributes(&t.name).is_empty())
            .map(|t| t.name.as_str())
            .collect();
        let pool: Vec<&str> = if entity.is_empty() {
            self.schema.tables.iter().map(|t| t.name.as_str()).collect()
        } else {
            entity
        };
        let pool: Vec<&str> = if numeric_root {
            pool.into_iter().filter(|t| has_numeric(t)).collect()
        } else {
            pool
        };
        match pool.choose(rng) {
            Some(t) => Ok(t.to_string()),
            None if numeric_root => Err(Rejected::DegenerateAggregation),
            None => Err(Rejected::NoJoinPath),
        }
    }

    fn result_columns<R: Rng>(
        &self,
        table: &str,
        root: &RootChoice,
        rng: &mut R,
    ) -> Result<Vec<String>, Rejected> {
        let numeric_root = matches!(
            root,
            RootChoice::Question(QuestionType::Sum | QuestionType::Average)
        );
        if let Some(attrs) = &self.config.result_attributes {
            let cols: Vec<String> = attrs
                .iter()
                .map(|a| a.split_once('.').map_or(a.as_str(), |(_, c)| c).to_string())
                .collect();
            if numeric_root {
                let numeric = self
                    .schema
                    .table(table)
                    .and_then(|t| t.attribute(&cols[0]))
                    .is_some_and(|a| a.column_type.is_numeric());
                if !numeric {
                    return Err(Rejected::DegenerateAggregation);
                }
            }
            return Ok(cols);
        }
        let mut pool: Vec<&Attribute> = self.schema.non_key_attributes(table);
        if pool.is_empty() {
            pool = self
                .schema
                .table(table)
                .map(|t| t.attributes.iter().collect())
                .unwrap_or_default();
        }
        match root {
            RootChoice::Question(QuestionType::List) => {
                let k = self
                    .config
                    .result_attribute_count
                    .sample(rng)
                    .clamp(1, pool.len().max(1));
                let mut picked =
                    rand::seq::index::sample(rng, pool.len(), k.min(pool.len())).into_vec();
                picked.sort_unstable();
                Ok(picked.into_iter().map(|i| pool[i].name.clone()).collect())
            }
            _ if numeric_root => {
                let numeric: Vec<&&Attribute> =
                    pool.iter().filter(|a| a.column_type.is_numeric()).collect();
                numeric
                    .choose(rng)
                    .map(|a| vec![a.name.clone()])
                    .ok_or(Rejected::DegenerateAggregation)
            }
            _ => Ok(Vec::new()),
        }
    }

    fn visible_attributes(
        &self,
        occurrences: &[Occurrence],
        visible: &[usize],
        keep: impl Fn(&Attribute) -> bool,
    ) -> Vec<AttrRef> {
        visible
            .iter()
            .flat_map(|&i| {
                let occ = &occurrences[i];
                self.schema
                    .non_key_attributes(&occ.table)
                    .into_iter()
                    .filter(|a| keep(a))
                    .map(|a| AttrRef::new(&occ.relation, &a.name))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn group_by_args<R: Rng>(
        &self,
        occurrences: &[Occurrence],
        visible: &[usize],
        rng: &mut R,
    ) -> Result<Op, Rejected> {
        let all = self.visible_attributes(occurrences, visible, |_| true);
        let group_attribute = all
            .choose(rng)
            .ok_or(Rejected::DegenerateAggregation)?
            .clone();
        let numeric: Vec<AttrRef> = self
            .visible_attributes(occurrences, visible, |a| a.column_type.is_numeric())
            .into_iter()
            .filter(|a| *a != group_attribute)
            .collect();
        let mut variants = vec![GroupVariant::Count];
        if !numeric.is_empty() {
            variants.extend([GroupVariant::Avg, GroupVariant::Sum]);
        }
        let variant = *variants.choose(rng).expect("non-empty");
        let aggregation_attribute = match variant {
            GroupVariant::Count => {
                // Counting over a key column counts rows per group.
                let mut pool: Vec<AttrRef> = all
                    .iter()
                    .filter(|a| **a != group_attribute)
                    .cloned()
                    .collect();
                if pool.is_empty() {
                    let occ = &occurrences[visible[0]];
                    pool = self
                        .schema
                        .table(&occ.table)
                        .map(|t| {
                            t.attributes
                                .iter()
                                .map(|a| AttrRef::new(&occ.relation, &a.name))
                                .filter(|a| *a != group_attribute)
                                .collect()
                        })
                        .unwrap_or_default();
                }
                pool.choose(rng)
                    .ok_or(Rejected::DegenerateAggregation)?
                    .clone()
            }
            GroupVariant::Avg | GroupVariant::Sum => {
                numeric.choose(rng).expect("non-empty").clone()
            }
        };
        Ok(Op::GroupBy {
            variant,
            group_attribute,
            aggregation_attribute,
        })
    }

    fn comparator_for<R: Rng>(column_type: ColumnType, rng: &mut R) -> Comparator {
        match column_type {
            ColumnType::Text => *[Comparator::Eq, Comparator::Contains]
                .choose(rng)
                .expect("non-empty"),
            ColumnType::Boolean => *[Comparator::Eq, Comparator::Ne]
                .choose(rng)
                .expect("non-empty"),
            _ => *Comparator::ORDERING.choose(rng).expect("non-empty"),
        }
    }

    fn draw_value<R: Rng>(
        source: &dyn ValueSource,
        table: &str,
        attribute: &Attribute,
        rng: &mut R,
    ) -> Result<Option<Literal>, Rejected> {
        match source.sample_value(table, attribute, rng) {
            Ok(v) => Ok(Some(v)),
            Err(ValueError::NoValueAvailable { .. }) => Ok(None),
            Err(e) => Err(Rejected::ExecutionError(e.to_string())),
        }
    }

    /// Two filters on the same attribute with different values, one per
    /// set-operation branch.
    fn differing_filters<R: Rng>(
        &self,
        occurrences: &[Occurrence],
        source: &dyn ValueSource,
        rng: &mut R,
    ) -> Result<(Filter, Filter), Rejected> {
        let candidates: Vec<(usize, &Attribute)> = occurrences
            .iter()
            .enumerate()
            .flat_map(|(i, occ)| {
                self.schema
                    .non_key_attributes(&occ.table)
                    .into_iter()
                    .map(move |a| (i, a))
            })
            .collect();
        for _ in 0..3 {
            let Some(&(occ, attr)) = candidates.choose(rng) else {
                break;
            };
            let table = &occurrences[occ].table;
            let Some(first) = Self::draw_value(source, table, attr, rng)? else {
                continue;
            };
            for _ in 0..8 {
                match Self::draw_value(source, table, attr, rng)? {
                    Some(second) if second != first => {
                        let comparator = Self::comparator_for(attr.column_type, rng);
                        let make = |value| Filter {
                            occurrence: occ,
                            attribute: attr.name.clone(),
                            comparator,
                            value,
                        };
                        return Ok((make(first), make(second)));
                    }
                    Some(_) => continue,
                    None => break,
                }
            }
        }
        Err(Rejected::NoSampleableValue)
    }

    fn filters<R: Rng>(
        &self,
        occurrences: &[Occurrence],
        source: &dyn ValueSource,
        rng: &mut R,
    ) -> Result<Vec<Filter>, Rejected> {
        let cfg = &self.config;
        let target = if cfg.min_total_filters >= cfg.max_total_filters {
            cfg.min_total_filters
        } else {
            rng.random_range(cfg.min_total_filters..=cfg.max_total_filters)
        };
        // Per occurrence: attributes not yet filtered or found empty.
        let mut open: Vec<Vec<&Attribute>> = occurrences
            .iter()
            .map(|o| self.schema.non_key_attributes(&o.table))
            .collect();
        let mut used = vec![0usize; occurrences.len()];
        let mut out = Vec::new();
        while out.len() < target {
            let eligible: Vec<usize> = (0..occurrences.len())
                .filter(|&i| used[i] < cfg.max_filters_per_table && !open[i].is_empty())
                .collect();
            let Some(&occ) = eligible.choose(rng) else {
                break;
            };
            let idx = rng.random_range(0..open[occ].len());
            let attr = open[occ].swap_remove(idx);
            if let Some(value) = Self::draw_value(source, &occurrences[occ].table, attr, rng)? {
                used[occ] += 1;
                out.push(Filter {
                    occurrence: occ,
                    attribute: attr.name.clone(),
                    comparator: Self::comparator_for(attr.column_type, rng),
                    value,
                });
            }
        }
        if out.len() < cfg.min_total_filters {
            return Err(Rejected::NoSampleableValue);
        }
        Ok(out)
    }

    /// Draw `index` of a batch seeded with `seed`, executed against `db`.
    pub fn draw(
        &self,
        db: &Database,
        seed: u64,
        index: u64,
        limits: ExecLimits,
    ) -> Result<OperationTree, Rejected> {
        let mut rng = draw_rng(seed, index);
        let tree = self
            .sample_tree(db, &mut rng)?
            .with_id(format!("{}-{}-{}", self.schema.id, seed, index));
        let result = execute(&tree, self.schema, db, limits)
            .map_err(|e| Rejected::ExecutionError(e.to_string()))?;
        if is_empty_answer(tree.root_kind(), &result) {
            return Err(Rejected::EmptyResult);
        }
        Ok(tree)
    }

    fn budget(&self, n: usize) -> usize {
        self.config.max_attempts.saturating_mul(n)
    }

    /// Draws until `n` trees execute with a non-empty answer, or the budget
    /// of `max_attempts * n` draws runs out.
    pub fn sample_batch(
        &self,
        db: &Database,
        n: usize,
        seed: u64,
        limits: ExecLimits,
    ) -> Result<Batch, BatchError> {
        let mut merge = Merge::new(n, seed);
        for index in 0..self.budget(n) {
            if merge.push(self.draw(db, seed, index as u64, limits)) {
                break;
            }
        }
        merge.finish()
    }

    /// Same result as [`Sampler::sample_batch`], evaluating draws on `jobs`
    /// worker threads. `open` creates one connection per worker.
    pub fn sample_batch_parallel<F>(
        &self,
        open: F,
        n: usize,
        seed: u64,
        limits: ExecLimits,
        jobs: usize,
    ) -> Result<Batch, BatchError>
    where
        F: Fn() -> Result<Database, DbError> + Sync,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("thread pool");
        // Surfaces connection errors before any worker starts.
        open()?;
        let budget = self.budget(n);
        let wave = (jobs.max(1) * 8).max(n.min(256));
        let mut merge = Merge::new(n, seed);
        let mut start = 0;
        while start < budget {
            let end = (start + wave).min(budget);
            let outcomes: Result<Vec<_>, DbError> = pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map_init(&open, |db, index| match db {
                        Ok(db) => Ok(self.draw(db, seed, index as u64, limits)),
                        Err(e) => Err(DbError::Unreachable {
                            path: String::new(),
                            message: e.to_string(),
                        }),
                    })
                    .collect()
            });
            for outcome in outcomes? {
                if merge.push(outcome) {
                    return merge.finish();
                }
            }
            start = end;
        }
        merge.finish()
    }
}

/// The generator for draw `index` of a batch.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Accepts outcomes in draw order.
struct Merge {
    trees: Vec<OperationTree>,
    requested: usize,
    attempts: usize,
    seed: u64,
    rejections: BTreeMap<String, usize>,
}

impl Merge {
    fn new(requested: usize, seed: u64) -> Self {
        Merge {
            trees: Vec::with_capacity(requested),
            requested,
            attempts: 0,
            seed,
            rejections: BTreeMap::new(),
        }
    }

    /// Returns true once enough trees are accepted.
    fn push(&mut self, outcome: Result<OperationTree, Rejected>) -> bool {
        if self.trees.len() >= self.requested {
            return true;
        }
        self.attempts += 1;
        match outcome {
            Ok(t) => self.trees.push(t),
            Err(r) => *self.rejections.entry(r.reason().to_string()).or_insert(0) += 1,
        }
        self.trees.len() >= self.requested
    }

    fn finish(self) -> Result<Batch, BatchError> {
        let accepted = self.trees.len();
        let stats = BatchStats {
            seed: self.seed,
            requested: self.requested,
            accepted,
            attempts: self.attempts,
            acceptance_rate: if self.attempts == 0 {
                0.0
            } else {
                accepted as f64 / self.attempts as f64
            },
            rejections: self.rejections,
        };
        let batch = Batch {
            trees: self.trees,
            stats,
        };
        if accepted < batch.stats.requested {
            Err(BatchError::BudgetExhausted(Box::new(batch)))
        } else {
            Ok(batch)
        }
    }
}

/// Relation names for the tables of a path: the table name for its first
/// occurrence, `table_2`, `table_3`, ... for later ones.
fn name_relations(path: &JoinPath) -> Vec<Occurrence> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    path.tables
        .iter()
        .map(|t| {
            let n = seen.entry(t.as_str()).or_insert(0);
            *n += 1;
            Occurrence {
                table: t.clone(),
                relation: if *n == 1 {
                    t.clone()
                } else {
                    format!("{t}_{n}")
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::OperationKind;
    use rusqlite::Connection;

    fn db() -> Database {
        let conn = Connection::open_in_memory().unwrap();
        conn.execute_batch(
            "CREATE TABLE genre(id INTEGER PRIMARY KEY, name TEXT);
             CREATE TABLE track(id INTEGER PRIMARY KEY, title TEXT, ms INTEGER,
                                genre_id INTEGER REFERENCES genre(id));
             INSERT INTO genre VALUES (1,'Rock'),(2,'Jazz');
             INSERT INTO track VALUES (1,'A',100,1),(2,'B',200,1),(3,'C',300,2),(4,'D',300,2);",
        )
        .unwrap();
        Database::from_connection(conn)
    }

    #[test]
    fn relation_names_for_revisits() {
        let path = JoinPath {
            tables: vec!["e".into(), "e".into(), "d".into(), "e".into()],
            hops: vec![],
        };
        let names: Vec<String> = name_relations(&path)
            .into_iter()
            .map(|o| o.relation)
            .collect();
        assert_eq!(names, vec!["e", "e_2", "d", "e_3"]);
    }

    #[test]
    fn fixed_question_type_fixes_root() {
        let db = db();
        let schema = db.load_schema().unwrap();
        for q in QuestionType::ALL {
            let cfg = SampleConfig {
                question_type: Some(q),
                ..Default::default()
            };
            let sampler = Sampler::new(cfg, &schema).unwrap();
            for i in 0..30 {
                if let Ok(t) = sampler.sample_tree(&db, &mut draw_rng(1, i)) {
                    assert_eq!(t.root_kind(), q.root_kind());
                }
            }
        }
    }

    #[test]
    fn minimal_config_gives_minimal_tree() {
        let db = db();
        let schema = db.load_schema().unwrap();
        let cfg = SampleConfig {
            question_type: Some(QuestionType::List),
            result_table: Some("track".into()),
            result_attribute_count: CountRange::Fixed(1),
            path_length: CountRange::Fixed(1),
            max_total_filters: 0,
            max_filters_per_table: 0,
            set_op_probability: 0.0,
            extremum_probability: 0.0,
            ..Default::default()
        };
        let sampler = Sampler::new(cfg, &schema).unwrap();
        let t = sampler.sample_tree(&db, &mut draw_rng(3, 0)).unwrap();
        assert_eq!(t.root.kind(), OperationKind::Done);
        assert_eq!(t.root.children[0].kind(), OperationKind::Projection);
        assert_eq!(
            t.root.children[0].children[0].kind(),
            OperationKind::GetData
        );
    }

    #[test]
    fn unknown_result_table_is_rejected_up_front() {
        let db = db();
        let schema = db.load_schema().unwrap();
        let cfg = SampleConfig {
            result_table: Some("nope".into()),
            ..Default::default()
        };
        assert!(matches!(
            Sampler::new(cfg, &schema),
            Err(SamplerError::UnknownResultTable(_))
        ));
    }

    #[test]
    fn batch_is_non_empty_and_reported() {
        let db = db();
        let schema = db.load_schema().unwrap();
        let sampler = Sampler::new(SampleConfig::default(), &schema).unwrap();
        let batch = sampler
            .sample_batch(&db, 20, 5, ExecLimits::default())
            .unwrap();
        assert_eq!(batch.trees.len(), 20);
        assert_eq!(batch.stats.accepted, 20);
        let rejected: usize = batch.stats.rejections.values().sum();
        assert_eq!(batch.stats.attempts, 20 + rejected);
    }

    #[test]
    fn impossible_aggregation_is_degenerate() {
        let conn = Connection::open_in_memory().unwrap();
        conn.execute_batch("CREATE TABLE t(name TEXT); INSERT INTO t VALUES ('x');")
            .unwrap();
        let db = Database::from_connection(conn);
        let schema = db.load_schema().unwrap();
        let cfg = SampleConfig {
            question_type: Some(QuestionType::Sum),
            ..Default::default()
        };
        let sampler = Sampler::new(cfg, &schema).unwrap();
        assert_eq!(
            sampler.sample_tree(&db, &mut draw_rng(0, 0)),
            Err(Rejected::DegenerateAggregation)
        );
    }
}
