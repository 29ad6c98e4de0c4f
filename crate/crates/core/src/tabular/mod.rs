//! Tabular data model shared by every stage of the release pipeline.
//!
//! A [`Dataset`] is an ordered list of typed [`Column`]s with equal length.
//! Operations never mutate in place; they return new datasets.

mod binning;
mod csv_io;
mod impute;
mod triage;

pub use binning::{bin_numeric, rescale_minmax, BinnedView, Rescaled};
pub(crate) use binning::{bin_index, rescale_values};
pub use csv_io::{load_csv, read_csv, write_csv, CsvOptions, MISSING_TOKENS};
pub use impute::{impute_missing, ImputePolicy, NumericFill};
pub use triage::{triage_attributes, DEFAULT_UNIQUENESS_THRESHOLD};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Role of an attribute in the release.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Identifier,
    Quasi,
    Sensitive,
    /// Identifier removed before release.
    Dropped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        }
    }
}

/// Cell storage. `None` marks a missing cell.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
    pub role: Option<Role>,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values.into_iter().map(Some).collect()),
            role: None,
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: Vec<S>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values.into_iter().map(|s| Some(s.into())).collect()),
            role: None,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnData::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    /// Observed `(min, max)` over non-missing numeric cells.
    pub fn observed_range(&self) -> Option<(f64, f64)> {
        match &self.data {
            ColumnData::Numeric(v) => v.iter().flatten().fold(None, |acc, &x| match acc {
                None => Some((x, x)),
                Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
            }),
            ColumnData::Categorical(_) => None,
        }
    }

    /// Numeric values; errors on categorical columns or missing cells.
    pub fn numeric_values(&self) -> Result<Vec<f64>> {
        match &self.data {
            ColumnData::Numeric(v) => v
                .iter()
                .map(|c| c.ok_or_else(|| Error::InvalidArgument(format!("column `{}` has missing cells", self.name))))
                .collect(),
            ColumnData::Categorical(_) => Err(Error::ColumnKind {
                column: self.name.clone(),
                expected: "numeric",
                found: "categorical",
            }),
        }
    }

    /// Renders cell `row` the way it is written to CSV.
    pub fn render(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            ColumnData::Categorical(v) => v[row].clone().unwrap_or_default(),
        }
    }

    pub fn distinct_count(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.iter().flatten().map(|x| x.to_bits()).collect::<HashSet<_>>().len(),
            ColumnData::Categorical(v) => v.iter().flatten().collect::<HashSet<_>>().len(),
        }
    }
}

/// A cell that was filled in by imputation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub column: String,
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    columns: Vec<Column>,
    n_rows: usize,
    class_label: Option<String>,
    /// Identifier columns removed by triage.
    pub dropped: Vec<String>,
    pub imputed: Vec<ImputedCell>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map(Column::len).unwrap_or(0);
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} values, expected {n_rows}",
                    c.name,
                    c.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            columns,
            n_rows,
            class_label: None,
            dropped: Vec::new(),
            imputed: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.index_of(name).map(|i| &self.columns[i])
    }

    pub fn class_label(&self) -> Option<&str> {
        self.class_label.as_deref()
    }

    /// Marks `name` as the class label. Numeric labels are converted to
    /// categorical tokens so synthesizers never produce fractional classes.
    pub fn with_class_label(mut self, name: &str) -> Result<Self> {
        let idx = self.index_of(name)?;
        let col = &mut self.columns[idx];
        if let ColumnData::Numeric(v) = &col.data {
            col.data = ColumnData::Categorical(v.iter().map(|c| c.map(|x| x.to_string())).collect());
        }
        self.class_label = Some(name.to_string());
        Ok(self)
    }

    pub(crate) fn replace_columns(&self, columns: Vec<Column>) -> Result<Self> {
        let mut out = Dataset::new(self.name.clone(), columns)?;
        out.class_label = self
            .class_label
            .clone()
            .filter(|l| out.columns.iter().any(|c| &c.name == l));
        out.dropped = self.dropped.clone();
        out.imputed = self.imputed.clone();
        Ok(out)
    }

    /// Projection onto `names`, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        self.replace_columns(cols)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.role == Some(role))
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn quasi(&self) -> Vec<String> {
        self.names_with_role(Role::Quasi)
    }

    pub fn sensitive(&self) -> Vec<String> {
        self.names_with_role(Role::Sensitive)
    }

    /// Returns a copy with the listed columns re-assigned to `role`.
    pub fn with_roles(&self, names: &[String], role: Role) -> Result<Self> {
        for n in names {
            self.index_of(n)?;
        }
        let cols = self
            .columns
            .iter()
            .cloned()
            .map(|mut c| {
                if names.contains(&c.name) {
                    c.role = Some(role);
                }
                c
            })
            .collect();
        self.replace_columns(cols)
    }

    pub fn metadata(&self) -> DatasetMeta {
        let mut columns: Vec<ColumnMeta> = self
            .columns
            .iter()
            .map(|c| {
                let range = c.observed_range();
                ColumnMeta {
                    name: c.name.clone(),
                    kind: c.kind(),
                    role: c.role,
                    observed_min: range.map(|r| r.0),
                    observed_max: range.map(|r| r.1),
                    missing: c.missing_count(),
                    distinct: c.distinct_count(),
                }
            })
            .collect();
        columns.extend(self.dropped.iter().map(|d| ColumnMeta {
            name: d.clone(),
            kind: ColumnKind::Categorical,
            role: Some(Role::Dropped),
            observed_min: None,
            observed_max: None,
            missing: 0,
            distinct: 0,
        }));
        DatasetMeta {
            name: self.name.clone(),
            n_rows: self.n_rows,
            class_label: self.class_label.clone(),
            columns,
            imputed: self.imputed.clone(),
        }
    }
}

/// JSON-serializable description of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub n_rows: usize,
    pub class_label: Option<String>,
    pub columns: Vec<ColumnMeta>,
    pub imputed: Vec<ImputedCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Option<Role>,
    pub observed_min: Option<f64>,
    pub observed_max: Option<f64>,
    pub missing: usize,
    pub distinct: usize,
}
