//! Window features: the 54-entry per-axis catalog, 162-column window vectors,
//! three-location fusion, normalization and ReliefF ranking.

mod axis;
mod catalog;
pub mod io;
mod normalize;
mod relieff;
pub mod spectrum;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SensorLocation, Window, WindowOrigin, NOMINAL_RATE_HZ};

pub use axis::{compute_axis_features, dfa_box_sizes, lz76_complexity, ricker, AxisFeatures};
pub use axis::{DFA_SCALES, HIGUCHI_KMAX, HISTOGRAM_BINS, HUMAN_RANGE_HZ, NEIGHBOURHOOD, WAVELET_WIDTHS};
pub use catalog::{Domain, FeatureKind, FEATURES_PER_AXIS};
pub use normalize::{apply_normalizer, fit_normalizer, NormalizerState};
pub use relieff::{relieff_rank, relieff_scores, select_top, RankedFeature, RankedFeatures, SelectionConfig};

/// Columns per sensor window: 54 features on each of three axes.
pub const FEATURES_PER_WINDOW: usize = 3 * FEATURES_PER_AXIS;
/// Columns after fusing all three locations.
pub const FUSED_FEATURES: usize = 3 * FEATURES_PER_WINDOW;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("series too short: {0} samples, need at least 2")]
    SeriesTooShort(usize),
    #[error("invalid sample rate {0}")]
    InvalidRate(f64),
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("empty feature matrix")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("missing location {0}")]
    MissingLocation(SensorLocation),
    #[error("fused vectors come from different windows")]
    OriginMismatch,
    #[error("class {class} has {members} members, ReliefF with k={k} needs at least {}", k + 1)]
    DegenerateClass { class: usize, members: usize, k: usize },
    #[error("k = {k} exceeds the {available} ranked features")]
    KTooLarge { k: usize, available: usize },
    #[error("label count {labels} does not match row count {rows}")]
    LabelMismatch { labels: usize, rows: usize },
    #[error("malformed feature file: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    X,
    Y,
    Z,
}

impl AxisName {
    pub const ALL: [AxisName; 3] = [AxisName::X, AxisName::Y, AxisName::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::X => "x",
            AxisName::Y => "y",
            AxisName::Z => "z",
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(AxisName::X),
            "y" => Ok(AxisName::Y),
            "z" => Ok(AxisName::Z),
            other => Err(format!("unknown axis `{other}`")),
        }
    }
}

/// Identifies one column of a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub kind: FeatureKind,
    pub axis: AxisName,
    pub location: SensorLocation,
}

impl FeatureDescriptor {
    pub fn domain(&self) -> Domain {
        self.kind.domain()
    }

    /// `<feature>__<axis>__<location>`
    pub fn column_name(&self) -> String {
        format!("{}__{}__{}", self.kind.name(), self.axis, self.location.file_stem())
    }

    pub fn parse_column_name(s: &str) -> Result<Self, String> {
        let mut parts = s.split("__");
        let (Some(k), Some(a), Some(l), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(format!("bad column name `{s}`"));
        };
        Ok(FeatureDescriptor { kind: k.parse()?, axis: a.parse()?, location: l.parse()? })
    }

    /// e.g. `Mean Squared Error (LRC, Z)`
    pub fn table_label(&self) -> String {
        format!(
            "{} ({}, {})",
            self.kind.display_name(),
            self.location.short_label(),
            self.axis.as_str().to_ascii_uppercase()
        )
    }
}

/// Column layout of one location's window vector: name-major, then X, Y, Z.
pub fn window_columns(location: SensorLocation) -> Vec<FeatureDescriptor> {
    FeatureKind::ALL
        .iter()
        .flat_map(|&kind| AxisName::ALL.iter().map(move |&axis| FeatureDescriptor { kind, axis, location }))
        .collect()
}

/// Column layout of a fused vector: chin, upper-left cheek, lower-right cheek.
pub fn fused_columns() -> Vec<FeatureDescriptor> {
    SensorLocation::ALL.iter().flat_map(|&l| window_columns(l)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub columns: Vec<FeatureDescriptor>,
    pub origin: WindowOrigin,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 162 features of one window at the nominal sensor rate.
pub fn compute_window_features(window: &Window) -> Result<FeatureVector, FeatureError> {
    compute_window_features_at(window, NOMINAL_RATE_HZ)
}

pub fn compute_window_features_at(window: &Window, rate: f64) -> Result<FeatureVector, FeatureError> {
    let per_axis = AxisName::ALL
        .iter()
        .map(|a| compute_axis_features(&window.axis(a.index()), rate))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(FEATURES_PER_WINDOW);
    for kind in FeatureKind::ALL {
        for f in &per_axis {
            values.push(f.get(kind));
        }
    }
    Ok(FeatureVector { values, columns: window_columns(window.location), origin: window.origin.clone() })
}

/// Features of many windows in parallel; output order matches input order.
pub fn compute_many(windows: &[Window]) -> Result<Vec<FeatureVector>, FeatureError> {
    windows.par_iter().map(compute_window_features).collect()
}

/// Concatenates per-location vectors in the fixed location order.
pub fn fuse(per_location: &BTreeMap<SensorLocation, FeatureVector>) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(FUSED_FEATURES);
    let mut columns = Vec::with_capacity(FUSED_FEATURES);
    let mut origin: Option<&WindowOrigin> = None;
    for loc in SensorLocation::ALL {
        let v = per_location.get(&loc).ok_or(FeatureError::MissingLocation(loc))?;
        match origin {
            Some(o) if o != &v.origin => return Err(FeatureError::OriginMismatch),
            _ => origin = Some(&v.origin),
        }
        values.extend_from_slice(&v.values);
        columns.extend_from_slice(&v.columns);
    }
    Ok(FeatureVector { values, columns, origin: origin.expect("three locations").clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(location: SensorLocation, f: impl Fn(usize) -> [f64; 3]) -> Window {
        Window { location, data: (0..250).map(f).collect(), origin: WindowOrigin::untagged(0) }
    }

    #[test]
    fn window_vector_shape_and_order() {
        let w = window(SensorLocation::BelowChin, |i| [0.0, (i as f64 * 0.3).sin(), i as f64]);
        let v = compute_window_features(&w).unwrap();
        assert_eq!(v.len(), FEATURES_PER_WINDOW);
        assert_eq!(v.columns.len(), 162);
        assert_eq!(v.columns[0].column_name(), "standard_deviation__x__chin");
        assert_eq!(v.columns[4].column_name(), "minimum_value__y__chin");
        let ys = compute_axis_features(&w.axis(1), 100.0).unwrap();
        assert_eq!(v.values[3 * FeatureKind::SpectralEntropy.index() + 1], ys.get(FeatureKind::SpectralEntropy));
    }

    #[test]
    fn zero_window_has_no_energy() {
        let w = window(SensorLocation::BelowChin, |_| [0.0; 3]);
        let v = compute_window_features(&w).unwrap();
        for (c, x) in v.columns.iter().zip(&v.values) {
            if matches!(
                c.kind,
                FeatureKind::AbsoluteEnergy
                    | FeatureKind::StandardDeviation
                    | FeatureKind::PeakToPeak
                    | FeatureKind::AveragePower
                    | FeatureKind::SumAbsoluteDifferences
            ) {
                assert_eq!(*x, 0.0);
            }
            assert!(x.is_finite());
        }
    }

    #[test]
    fn fusion_order_is_fixed() {
        let mut map = BTreeMap::new();
        for (i, loc) in SensorLocation::ALL.iter().enumerate() {
            let w = window(*loc, |j| [(i * j) as f64, 1.0, 0.0]);
            map.insert(*loc, compute_window_features(&w).unwrap());
        }
        let fused = fuse(&map).unwrap();
        assert_eq!(fused.len(), FUSED_FEATURES);
        assert_eq!(fused.columns, fused_columns());
        assert_eq!(fused.columns[200].location, SensorLocation::UpperLeftCheek);

        let rebuilt: BTreeMap<_, _> = map.clone().into_iter().rev().collect();
        assert_eq!(fuse(&rebuilt).unwrap(), fused);

        map.remove(&SensorLocation::LowerRightCheek);
        assert!(matches!(fuse(&map), Err(FeatureError::MissingLocation(SensorLocation::LowerRightCheek))));
    }

    #[test]
    fn column_names_round_trip() {
        for c in fused_columns() {
            assert_eq!(FeatureDescriptor::parse_column_name(&c.column_name()).unwrap(), c);
        }
        let d = FeatureDescriptor {
            kind: FeatureKind::MeanSquaredError,
            axis: AxisName::Z,
            location: SensorLocation::LowerRightCheek,
        };
        assert_eq!(d.table_label(), "Mean Squared Error (LRC, Z)");
    }
}
