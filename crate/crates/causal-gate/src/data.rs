//! Typed tabular data: schemas, CSV ingestion, splits, scaling, prediction
//! substitution, and extreme-value holdouts.
//!
//! A [`Table`] is column-major and fully typed: continuous columns hold
//! `f64`, discrete columns hold category codes `0..cardinality`. Tables are
//! immutable once built; every transformation returns a new table. Column
//! names tie tables to DAG nodes, so the same [`NodeKind`] enum describes
//! both.

use std::collections::BTreeSet;
use std::io::{Read, Write as IoWrite};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::graph::NodeKind;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("table must have at least one row")]
    EmptyTable,
    #[error("column {column:?} has {got} rows, expected {expected}")]
    ColumnLengthMismatch {
        column: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate column name {name:?}")]
    DuplicateColumn { name: String },
    #[error("column {column:?} declares cardinality {cardinality} but {got} categories")]
    CategoriesMismatch {
        column: String,
        cardinality: usize,
        got: usize,
    },
    #[error("column {column:?} row {row}: code {code} exceeds cardinality {cardinality}")]
    CodeOutOfRange {
        column: String,
        row: usize,
        code: u32,
        cardinality: usize,
    },
    #[error("column {name:?} not found")]
    MissingColumn { name: String },
    #[error("row {row}, column {column:?}: cannot parse {value:?}")]
    UnparseableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column:?}: unknown category {value:?}")]
    UnknownCategory {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column:?}: missing value")]
    MissingValue { row: usize, column: String },
    #[error("need at least {needed} rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("invalid split: {detail}")]
    InvalidSplit { detail: String },
    #[error("column {column:?} is not continuous")]
    NotContinuous { column: String },
    #[error("column {column:?} is not discrete")]
    NotDiscrete { column: String },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("column {column:?}: value kind does not match schema")]
    KindMismatch { column: String },
    #[error("column {column:?} row {row}: non-finite value")]
    NonFinite { column: String, row: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

// ── Schema ──────────────────────────────────────────────────────────────────

/// One column: a name, a kind, and (for discrete columns read from CSV) the
/// category strings in code order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

impl ColumnSpec {
    pub fn continuous(name: &str) -> ColumnSpec {
        ColumnSpec {
            name: name.to_string(),
            kind: NodeKind::Continuous,
            categories: None,
        }
    }

    pub fn discrete(name: &str, cardinality: usize) -> ColumnSpec {
        ColumnSpec {
            name: name.to_string(),
            kind: NodeKind::Discrete(cardinality),
            categories: None,
        }
    }
}

/// Ordered column declarations; the order fixes the column order of every
/// table built from this schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Schema, DataError> {
        let schema = Schema { columns };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = BTreeSet::new();
        for spec in &self.columns {
            if !seen.insert(spec.name.as_str()) {
                return Err(DataError::DuplicateColumn {
                    name: spec.name.clone(),
                });
            }
            if let Some(cats) = &spec.categories {
                let card = spec.kind.cardinality().unwrap_or(0);
                if cats.len() != card {
                    return Err(DataError::CategoriesMismatch {
                        column: spec.name.clone(),
                        cardinality: card,
                        got: cats.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn load(path: &Path) -> Result<Schema, DataError> {
        let text = std::fs::read_to_string(path)?;
        let schema: Schema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

// ── Table ───────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<f64>),
    Discrete(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Discrete(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An immutable column-major table with at least one row and no missing
/// values. Discrete cells always satisfy `code < cardinality`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Table, DataError> {
        schema.validate()?;
        if columns.len() != schema.columns.len() {
            return Err(DataError::LengthMismatch {
                expected: schema.columns.len(),
                got: columns.len(),
            });
        }
        let n_rows = columns.first().map_or(0, Column::len);
        if n_rows == 0 {
            return Err(DataError::EmptyTable);
        }
        for (spec, col) in schema.columns.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(DataError::ColumnLengthMismatch {
                    column: spec.name.clone(),
                    expected: n_rows,
                    got: col.len(),
                });
            }
            match (spec.kind, col) {
                (NodeKind::Continuous, Column::Continuous(values)) => {
                    for (row, &v) in values.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(DataError::NonFinite {
                                column: spec.name.clone(),
                                row: row + 1,
                            });
                        }
                    }
                }
                (NodeKind::Discrete(card), Column::Discrete(codes)) => {
                    for (row, &code) in codes.iter().enumerate() {
                        if code as usize >= card {
                            return Err(DataError::CodeOutOfRange {
                                column: spec.name.clone(),
                                row: row + 1,
                                code,
                                cardinality: card,
                            });
                        }
                    }
                }
                _ => {
                    return Err(DataError::KindMismatch {
                        column: spec.name.clone(),
                    })
                }
            }
        }
        Ok(Table {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.column_index(name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize, DataError> {
        self.column_index(name).ok_or_else(|| DataError::MissingColumn {
            name: name.to_string(),
        })
    }

    pub fn continuous(&self, index: usize) -> Result<&[f64], DataError> {
        match &self.columns[index] {
            Column::Continuous(v) => Ok(v),
            Column::Discrete(_) => Err(DataError::NotContinuous {
                column: self.schema.columns[index].name.clone(),
            }),
        }
    }

    pub fn discrete(&self, index: usize) -> Result<&[u32], DataError> {
        match &self.columns[index] {
            Column::Discrete(v) => Ok(v),
            Column::Continuous(_) => Err(DataError::NotDiscrete {
                column: self.schema.columns[index].name.clone(),
            }),
        }
    }

    /// Column values as `f64`, casting discrete codes.
    pub fn numeric(&self, index: usize) -> Vec<f64> {
        match &self.columns[index] {
            Column::Continuous(v) => v.clone(),
            Column::Discrete(v) => v.iter().map(|&c| f64::from(c)).collect(),
        }
    }

    /// New table containing `rows` in the given order. Panics on
    /// out-of-range indices; callers produce indices from `0..n_rows`.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Table, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptyTable);
        }
        let columns = self
            .columns
            .iter()
            .map(|col| match col {
                Column::Continuous(v) => {
                    Column::Continuous(rows.iter().map(|&r| v[r]).collect())
                }
                Column::Discrete(v) => {
                    Column::Discrete(rows.iter().map(|&r| v[r]).collect())
                }
            })
            .collect();
        Ok(Table {
            schema: self.schema.clone(),
            columns,
            n_rows: rows.len(),
        })
    }

    /// Feature rows for model input: every column except `target`, in schema
    /// order, as `f64`. Returns the row-major buffer and the feature count.
    pub fn feature_rows(&self, target: &str) -> Result<(Vec<f64>, usize), DataError> {
        let target_idx = self.require_column(target)?;
        let features: Vec<Vec<f64>> = (0..self.columns.len())
            .filter(|&i| i != target_idx)
            .map(|i| self.numeric(i))
            .collect();
        let width = features.len();
        let mut rows = Vec::with_capacity(self.n_rows * width);
        for r in 0..self.n_rows {
            for col in &features {
                rows.push(col[r]);
            }
        }
        Ok((rows, width))
    }

    /// Target column as `f64` (discrete codes cast).
    pub fn target_values(&self, target: &str) -> Result<Vec<f64>, DataError> {
        let idx = self.require_column(target)?;
        Ok(self.numeric(idx))
    }
}

// ── CSV ─────────────────────────────────────────────────────────────────────

/// What to do with rows that have missing (empty) cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    Error,
    DropRows,
}

#[derive(Debug)]
pub struct CsvLoad {
    pub table: Table,
    pub dropped_rows: usize,
}

/// Reads a typed table from CSV. The header row is required; schema columns
/// are matched to header names, extra file columns are ignored. Discrete
/// columns parse via their category list when present, otherwise as integer
/// codes. Row numbers in errors are 1-based data rows.
pub fn read_csv<R: Read>(
    reader: R,
    schema: &Schema,
    missing: MissingPolicy,
) -> Result<CsvLoad, DataError> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for spec in &schema.columns {
        let pos = headers
            .iter()
            .position(|h| h.trim() == spec.name)
            .ok_or_else(|| DataError::MissingColumn {
                name: spec.name.clone(),
            })?;
        positions.push(pos);
    }
    let mut builders: Vec<Column> = schema
        .columns
        .iter()
        .map(|spec| match spec.kind {
            NodeKind::Continuous => Column::Continuous(Vec::new()),
            NodeKind::Discrete(_) => Column::Discrete(Vec::new()),
        })
        .collect();
    let mut dropped = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cells: Vec<&str> = positions
            .iter()
            .map(|&p| record.get(p).unwrap_or("").trim())
            .collect();
        if let Some(missing_at) = cells.iter().position(|c| c.is_empty()) {
            match missing {
                MissingPolicy::DropRows => {
                    dropped += 1;
                    continue;
                }
                MissingPolicy::Error => {
                    return Err(DataError::MissingValue {
                        row,
                        column: schema.columns[missing_at].name.clone(),
                    })
                }
            }
        }
        for ((spec, cell), builder) in
            schema.columns.iter().zip(&cells).zip(builders.iter_mut())
        {
            match (spec.kind, builder) {
                (NodeKind::Continuous, Column::Continuous(values)) => {
                    let parsed: f64 =
                        cell.parse().map_err(|_| DataError::UnparseableValue {
                            row,
                            column: spec.name.clone(),
                            value: cell.to_string(),
                        })?;
                    if !parsed.is_finite() {
                        return Err(DataError::UnparseableValue {
                            row,
                            column: spec.name.clone(),
                            value: cell.to_string(),
                        });
                    }
                    values.push(parsed);
                }
                (NodeKind::Discrete(card), Column::Discrete(codes)) => {
                    let code = match &spec.categories {
                        Some(cats) => cats
                            .iter()
                            .position(|c| c == cell)
                            .ok_or_else(|| DataError::UnknownCategory {
                                row,
                                column: spec.name.clone(),
                                value: cell.to_string(),
                            })? as u32,
                        None => {
                            let code: u32 =
                                cell.parse().map_err(|_| DataError::UnparseableValue {
                                    row,
                                    column: spec.name.clone(),
                                    value: cell.to_string(),
                                })?;
                            if code as usize >= card {
                                return Err(DataError::UnknownCategory {
                                    row,
                                    column: spec.name.clone(),
                                    value: cell.to_string(),
                                });
                            }
                            code
                        }
                    };
                    codes.push(code);
                }
                _ => unreachable!("builders are created from the same schema"),
            }
        }
    }
    let table = Table::new(schema.clone(), builders)?;
    Ok(CsvLoad {
        table,
        dropped_rows: dropped,
    })
}

pub fn load_csv(
    path: &Path,
    schema: &Schema,
    missing: MissingPolicy,
) -> Result<CsvLoad, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), schema, missing)
}

/// Writes a table as CSV. Continuous cells use the shortest representation
/// that parses back to the identical `f64`; discrete cells use their
/// category string when the schema has one, otherwise the numeric code.
pub fn write_csv<W: IoWrite>(table: &Table, writer: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let names: Vec<&str> = table
        .schema()
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    wtr.write_record(&names)?;
    for row in 0..table.n_rows() {
        let mut record = Vec::with_capacity(names.len());
        for (spec, col) in table.schema.columns.iter().zip(&table.columns) {
            let cell = match col {
                Column::Continuous(v) => v[row].to_string(),
                Column::Discrete(v) => match &spec.categories {
                    Some(cats) => cats[v[row] as usize].clone(),
                    None => v[row].to_string(),
                },
            };
            record.push(cell);
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(table: &Table, path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_csv(table, std::io::BufWriter::new(file))
}

// ── Splits ──────────────────────────────────────────────────────────────────

/// Train / validation / selection fractions. Each must be positive and they
/// must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub sel: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.6,
            val: 0.2,
            sel: 0.2,
            seed: 0,
        }
    }
}

/// Row indices of each split part, ascending within a part. Serializable so
/// a split can be reproduced exactly against the source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub sel: Vec<usize>,
}

pub struct Split {
    pub train: Table,
    pub val: Table,
    pub sel: Table,
}

/// Shuffles `0..n_rows` with the spec seed and cuts it into three parts.
/// Part sizes are the floors of `fraction * n`; leftover rows go to train,
/// then val, then sel. Every part must end up non-empty.
pub fn split_indices(n_rows: usize, spec: &SplitSpec) -> Result<SplitIndices, DataError> {
    for (name, f) in [("train", spec.train), ("val", spec.val), ("sel", spec.sel)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(DataError::InvalidSplit {
                detail: format!("{name} fraction {f} not in (0, 1)"),
            });
        }
    }
    let sum = spec.train + spec.val + spec.sel;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::InvalidSplit {
            detail: format!("fractions sum to {sum}, expected 1"),
        });
    }
    let mut sizes = [
        (spec.train * n_rows as f64).floor() as usize,
        (spec.val * n_rows as f64).floor() as usize,
        (spec.sel * n_rows as f64).floor() as usize,
    ];
    let mut leftover = n_rows - sizes.iter().sum::<usize>();
    for size in sizes.iter_mut() {
        if leftover == 0 {
            break;
        }
        *size += 1;
        leftover -= 1;
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(DataError::TooFewRows {
            rows: n_rows,
            needed: 3,
        });
    }
    let mut perm: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    perm.shuffle(&mut rng);
    let take = |count: usize, offset: &mut usize| {
        let mut part: Vec<usize> = perm[*offset..*offset + count].to_vec();
        *offset += count;
        part.sort_unstable();
        part
    };
    let mut offset = 0;
    Ok(SplitIndices {
        train: take(sizes[0], &mut offset),
        val: take(sizes[1], &mut offset),
        sel: take(sizes[2], &mut offset),
    })
}

pub fn split(table: &Table, spec: &SplitSpec) -> Result<(Split, SplitIndices), DataError> {
    let indices = split_indices(table.n_rows(), spec)?;
    let split = Split {
        train: table.select_rows(&indices.train)?,
        val: table.select_rows(&indices.val)?,
        sel: table.select_rows(&indices.sel)?,
    };
    Ok((split, indices))
}

// ── Scaling ─────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerColumn {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Min-max scaler fitted on one table (normally the training split) and
/// applied to any table sharing the fitted columns; applied values outside
/// the fitted range land outside `[0, 1]`, which is intentional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub columns: Vec<ScalerColumn>,
}

impl Scaler {
    /// Fits every continuous column of the table.
    pub fn fit(table: &Table) -> Scaler {
        let names: Vec<&str> = table
            .schema()
            .columns
            .iter()
            .filter(|c| c.kind == NodeKind::Continuous)
            .map(|c| c.name.as_str())
            .collect();
        Scaler::fit_columns(table, &names).expect("continuous columns exist by filter")
    }

    /// Fits every continuous column except the prediction target, which
    /// stays in its original units through `apply`.
    pub fn fit_features(table: &Table, target: &str) -> Result<Scaler, DataError> {
        table.require_column(target)?;
        let names: Vec<&str> = table
            .schema()
            .columns
            .iter()
            .filter(|c| c.kind == NodeKind::Continuous && c.name != target)
            .map(|c| c.name.as_str())
            .collect();
        Scaler::fit_columns(table, &names)
    }

    pub fn fit_columns(table: &Table, names: &[&str]) -> Result<Scaler, DataError> {
        let mut columns = Vec::with_capacity(names.len());
        for &name in names {
            let idx = table.require_column(name)?;
            let values = table.continuous(idx)?;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            columns.push(ScalerColumn {
                name: name.to_string(),
                min,
                max,
            });
        }
        Ok(Scaler { columns })
    }

    /// Rescales every fitted column that exists in `table` as continuous;
    /// other columns pass through untouched. Constant fitted columns map
    /// to 0.0.
    pub fn apply(&self, table: &Table) -> Table {
        let mut columns = table.columns.clone();
        for fitted in &self.columns {
            let Some(idx) = table.column_index(&fitted.name) else {
                continue;
            };
            let Column::Continuous(values) = &mut columns[idx] else {
                continue;
            };
            let range = fitted.max - fitted.min;
            for v in values.iter_mut() {
                *v = if range == 0.0 {
                    0.0
                } else {
                    (*v - fitted.min) / range
                };
            }
        }
        Table {
            schema: table.schema.clone(),
            columns,
            n_rows: table.n_rows,
        }
    }

    pub fn load(path: &Path) -> Result<Scaler, DataError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Standardization of a continuous target column, fitted on the training
/// split. Mechanism scales vary over orders of magnitude across generated
/// graphs, so squared losses on the raw column can overflow useful ranges;
/// centring and dividing by the training standard deviation keeps them
/// O(1). Discrete targets pass through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

impl TargetStats {
    pub fn fit(table: &Table, target: &str) -> Result<TargetStats, DataError> {
        let idx = table.require_column(target)?;
        let identity = TargetStats {
            name: target.to_string(),
            mean: 0.0,
            std: 1.0,
        };
        let Column::Continuous(values) = &table.columns[idx] else {
            return Ok(identity);
        };
        if values.is_empty() {
            return Ok(identity);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        Ok(TargetStats {
            name: target.to_string(),
            mean,
            std: var.sqrt().max(1e-12),
        })
    }

    /// Standardizes the fitted column if it exists in `table` as continuous;
    /// everything else passes through, so tables without the target (or with
    /// a discrete one) come back unchanged.
    pub fn apply(&self, table: &Table) -> Table {
        let mut columns = table.columns.clone();
        if let Some(idx) = table.column_index(&self.name) {
            if let Column::Continuous(values) = &mut columns[idx] {
                for v in values.iter_mut() {
                    *v = (*v - self.mean) / self.std;
                }
            }
        }
        Table {
            schema: table.schema.clone(),
            columns,
            n_rows: table.n_rows,
        }
    }
}

/// Feature scaler and target standardization fitted together on the training
/// split and applied as one step to every other table in a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub features: Scaler,
    pub target: TargetStats,
}

impl Preprocessor {
    pub fn fit(train: &Table, target: &str) -> Result<Preprocessor, DataError> {
        Ok(Preprocessor {
            features: Scaler::fit_features(train, target)?,
            target: TargetStats::fit(train, target)?,
        })
    }

    pub fn apply(&self, table: &Table) -> Table {
        self.target.apply(&self.features.apply(table))
    }
}

// ── Holdouts and substitution ───────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoldoutSide {
    High,
    Low,
}

/// Splits off the most extreme `ceil(fraction * N)` rows of a continuous
/// column as `(held_out, remainder)`. Rows tied with the cutoff value are
/// all held out, so the held-out part can exceed the requested size. Row
/// order is preserved in both parts.
pub fn ood_holdout(
    table: &Table,
    column: &str,
    side: HoldoutSide,
    fraction: f64,
) -> Result<(Table, Table), DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidSplit {
            detail: format!("holdout fraction {fraction} not in (0, 1)"),
        });
    }
    let idx = table.require_column(column)?;
    let values = table.continuous(idx)?;
    let n = table.n_rows();
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let (cutoff, held): (f64, Vec<usize>) = match side {
        HoldoutSide::High => {
            let cutoff = sorted[n - k];
            (cutoff, (0..n).filter(|&r| values[r] >= cutoff).collect())
        }
        HoldoutSide::Low => {
            let cutoff = sorted[k - 1];
            (cutoff, (0..n).filter(|&r| values[r] <= cutoff).collect())
        }
    };
    let _ = cutoff;
    let remainder: Vec<usize> = (0..n).filter(|r| !held.contains(r)).collect();
    if remainder.is_empty() {
        return Err(DataError::TooFewRows { rows: 0, needed: 1 });
    }
    Ok((table.select_rows(&held)?, table.select_rows(&remainder)?))
}

/// Replaces the `target` column with model predictions, leaving every other
/// column untouched. The predictions must match the column's kind, length,
/// and (for discrete targets) cardinality.
pub fn substitute_predictions(
    table: &Table,
    target: &str,
    predictions: &Column,
) -> Result<Table, DataError> {
    let idx = table.require_column(target)?;
    let spec = &table.schema.columns[idx];
    if predictions.len() != table.n_rows() {
        return Err(DataError::LengthMismatch {
            expected: table.n_rows(),
            got: predictions.len(),
        });
    }
    match (spec.kind, predictions) {
        (NodeKind::Continuous, Column::Continuous(values)) => {
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    column: spec.name.clone(),
                    row: row + 1,
                });
            }
        }
        (NodeKind::Discrete(card), Column::Discrete(codes)) => {
            if let Some(row) = codes.iter().position(|&c| c as usize >= card) {
                return Err(DataError::CodeOutOfRange {
                    column: spec.name.clone(),
                    row: row + 1,
                    code: codes[row],
                    cardinality: card,
                });
            }
        }
        _ => {
            return Err(DataError::KindMismatch {
                column: spec.name.clone(),
            })
        }
    }
    let mut columns = table.columns.clone();
    columns[idx] = predictions.clone();
    Ok(Table {
        schema: table.schema.clone(),
        columns,
        n_rows: table.n_rows,
    })
}
