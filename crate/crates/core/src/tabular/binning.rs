use serde::{Deserialize, Serialize};

use super::{Column, ColumnData, ColumnKind};
use crate::{Error, Result};

/// Equal-width discretization of a numeric column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedView {
    pub column: String,
    pub bin_count: usize,
    /// `bin_count + 1` ascending edges.
    pub bin_edges: Vec<f64>,
    /// Bin index per row; `None` for missing cells.
    pub codes: Vec<Option<u32>>,
}

impl BinnedView {
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.bin_count];
        for c in self.codes.iter().flatten() {
            h[*c as usize] += 1;
        }
        h
    }
}

/// Index of `x` among `bins` equal-width bins over `[lo, hi]`; the maximum
/// lands in the last bin and out-of-range values are clamped.
pub(crate) fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> u32 {
    if hi <= lo || bins <= 1 {
        return 0;
    }
    let pos = ((x - lo) / (hi - lo) * bins as f64).floor();
    pos.clamp(0.0, (bins - 1) as f64) as u32
}

pub fn bin_numeric(column: &Column, bins: usize) -> Result<BinnedView> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("bin count must be at least 2, got {bins}")));
    }
    let ColumnData::Numeric(values) = &column.data else {
        return Err(Error::ColumnKind {
            column: column.name.clone(),
            expected: ColumnKind::Numeric.as_str(),
            found: ColumnKind::Categorical.as_str(),
        });
    };
    let Some((lo, hi)) = column.observed_range() else {
        return Ok(BinnedView {
            column: column.name.clone(),
            bin_count: 1,
            bin_edges: vec![0.0, 0.0],
            codes: vec![None; values.len()],
        });
    };
    if lo == hi {
        return Ok(BinnedView {
            column: column.name.clone(),
            bin_count: 1,
            bin_edges: vec![lo, hi],
            codes: values.iter().map(|c| c.map(|_| 0)).collect(),
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    bin_edges.push(hi);
    let codes = values.iter().map(|c| c.map(|x| bin_index(x, lo, hi, bins))).collect();
    Ok(BinnedView {
        column: column.name.clone(),
        bin_count: bins,
        bin_edges,
        codes,
    })
}

/// Result of [`rescale_minmax`]; `degenerate` is set when the perturbed column
/// was constant and every value was mapped to the original midpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Rescaled {
    pub column: Column,
    pub degenerate: bool,
}

/// Maps values with observed range `[plo, phi]` onto `[olo, ohi]`, pinning
/// the extrema exactly. A constant input maps to the target midpoint and is
/// reported as degenerate when the target range is non-trivial.
pub(crate) fn rescale_values(values: &[f64], plo: f64, phi: f64, olo: f64, ohi: f64) -> (Vec<f64>, bool) {
    if plo == phi {
        let mid = olo + (ohi - olo) / 2.0;
        return (vec![mid; values.len()], olo != ohi);
    }
    let scale = (ohi - olo) / (phi - plo);
    let out = values
        .iter()
        .map(|&v| {
            if v == plo {
                olo
            } else if v == phi {
                ohi
            } else {
                (olo + (v - plo) * scale).clamp(olo, ohi)
            }
        })
        .collect();
    (out, false)
}

/// Affine map of `perturbed` onto the observed range of `original`. The
/// output extrema equal the original extrema exactly.
pub fn rescale_minmax(perturbed: &Column, original: &Column) -> Result<Rescaled> {
    let values = perturbed.numeric_values()?;
    original.numeric_values()?;
    let (olo, ohi) = original
        .observed_range()
        .ok_or_else(|| Error::AllMissing(original.name.clone()))?;
    let Some((plo, phi)) = perturbed.observed_range() else {
        return Err(Error::AllMissing(perturbed.name.clone()));
    };
    let (out, degenerate) = rescale_values(&values, plo, phi, olo, ohi);
    if degenerate {
        log::warn!("perturbed column `{}` is constant; mapping to original midpoint", perturbed.name);
    }
    Ok(Rescaled {
        column: Column {
            name: perturbed.name.clone(),
            data: ColumnData::Numeric(out.into_iter().map(Some).collect()),
            role: perturbed.role,
        },
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn codes(v: &BinnedView) -> Vec<u32> {
        v.codes.iter().map(|c| c.unwrap()).collect()
    }

    #[test]
    fn ten_values_ten_bins() {
        let c = Column::numeric("x", (0..10).map(f64::from).collect());
        assert_eq!(codes(&bin_numeric(&c, 10).unwrap()), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn two_values_two_bins() {
        let c = Column::numeric("x", vec![0.0, 10.0]);
        assert_eq!(codes(&bin_numeric(&c, 2).unwrap()), vec![0, 1]);
    }

    #[test]
    fn constant_column_single_bin() {
        let c = Column::numeric("x", vec![3.0; 5]);
        let v = bin_numeric(&c, 10).unwrap();
        assert_eq!(v.bin_count, 1);
        assert_eq!(codes(&v), vec![0; 5]);
    }

    #[test]
    fn rejects_one_bin() {
        assert!(bin_numeric(&Column::numeric("x", vec![1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn rescale_examples() {
        let orig = Column::numeric("o", vec![10.0, 20.0]);
        let r = rescale_minmax(&Column::numeric("p", vec![0.0, 0.5, 1.0]), &orig).unwrap();
        assert_eq!(r.column.numeric_values().unwrap(), vec![10.0, 15.0, 20.0]);

        let orig = Column::numeric("o", vec![0.0, 4.0]);
        let r = rescale_minmax(&Column::numeric("p", vec![2.0; 3]), &orig).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.column.numeric_values().unwrap(), vec![2.0; 3]);

        let orig = Column::numeric("o", vec![0.0, 1.0]);
        let r = rescale_minmax(&Column::numeric("p", vec![-3.0, 0.0, 3.0]), &orig).unwrap();
        assert_eq!(r.column.numeric_values().unwrap(), vec![0.0, 0.5, 1.0]);
    }

    proptest! {
        #[test]
        fn rescale_hits_original_extrema_exactly(
            p in prop::collection::vec(-1e6f64..1e6, 2..50),
            lo in -1e3f64..1e3,
            span in 1e-3f64..1e3,
        ) {
            prop_assume!(p.iter().any(|&x| x != p[0]));
            let orig = Column::numeric("o", vec![lo, lo + span]);
            let out = rescale_minmax(&Column::numeric("p", p), &orig).unwrap();
            let (a, b) = out.column.observed_range().unwrap();
            prop_assert_eq!(a, lo);
            prop_assert_eq!(b, lo + span);
        }

        #[test]
        fn every_value_gets_one_bin(v in prop::collection::vec(-1e4f64..1e4, 1..200), bins in 2usize..40) {
            let c = Column::numeric("x", v.clone());
            let b = bin_numeric(&c, bins).unwrap();
            prop_assert!(b.codes.iter().all(|c| (c.unwrap() as usize) < b.bin_count));
            prop_assert_eq!(b.histogram().iter().sum::<usize>(), v.len());
        }
    }
}
