use super::{Column, ColumnData, Dataset, Role};
use crate::{Error, Result};

pub const DEFAULT_UNIQUENESS_THRESHOLD: f64 = 0.95;

/// Identifier shape: categorical, or numeric with only integral values.
/// Continuous measurements are never treated as identifiers, however unique.
fn id_shaped(col: &Column) -> bool {
    match &col.data {
        ColumnData::Categorical(_) => true,
        ColumnData::Numeric(v) => v.iter().flatten().all(|x| x.fract() == 0.0),
    }
}

fn is_identifier(col: &Column, n_rows: usize, threshold: f64) -> bool {
    n_rows > 1 && id_shaped(col) && col.distinct_count() as f64 / n_rows as f64 >= threshold
}

/// Assigns attribute roles and removes identifiers.
///
/// Columns listed in `gq` become quasi identifiers, highly unique id-shaped
/// columns are dropped, and everything else is sensitive. The class label is
/// never considered an identifier.
pub fn triage_attributes(dataset: &Dataset, gq: &[String], uniqueness_threshold: f64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&uniqueness_threshold) {
        return Err(Error::InvalidArgument(format!(
            "uniqueness threshold {uniqueness_threshold} outside [0, 1]"
        )));
    }
    for name in gq {
        dataset.index_of(name)?;
    }
    let n = dataset.n_rows();
    let mut kept = Vec::new();
    let mut dropped = dataset.dropped.clone();
    for col in dataset.columns() {
        let is_label = dataset.class_label() == Some(col.name.as_str());
        let ident = !is_label && is_identifier(col, n, uniqueness_threshold);
        let quasi = gq.contains(&col.name);
        match (quasi, ident) {
            (true, true) => return Err(Error::RoleConflict(col.name.clone())),
            (true, false) => kept.push(col.clone().with_role(Role::Quasi)),
            (false, true) => {
                log::info!("dropping identifier column `{}`", col.name);
                dropped.push(col.name.clone());
            }
            (false, false) => kept.push(col.clone().with_role(Role::Sensitive)),
        }
    }
    let mut out = dataset.replace_columns(kept)?;
    out.dropped = dropped;
    Ok(out)
}
