//! The closed per-axis feature catalog: 54 statistical, temporal and spectral
//! descriptors. Order here is the column order of every feature matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Statistical,
    Temporal,
    Spectral,
}

macro_rules! catalog {
    ($( $variant:ident => ($name:literal, $display:literal, $domain:ident) ),* $(,)?) => {
        /// One entry of the per-axis catalog.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum FeatureKind {
            $( $variant, )*
        }

        impl FeatureKind {
            pub const ALL: [FeatureKind; catalog!(@count $($variant)*)] = [ $( FeatureKind::$variant, )* ];

            /// snake_case identifier used in file headers.
            pub fn name(self) -> &'static str {
                match self { $( FeatureKind::$variant => $name, )* }
            }

            /// Human-readable name as printed in ranking tables.
            pub fn display_name(self) -> &'static str {
                match self { $( FeatureKind::$variant => $display, )* }
            }

            pub fn domain(self) -> Domain {
                match self { $( FeatureKind::$variant => Domain::$domain, )* }
            }
        }
    };
    (@count) => { 0usize };
    (@count $head:ident $($tail:ident)*) => { 1usize + catalog!(@count $($tail)*) };
}

catalog! {
    StandardDeviation => ("standard_deviation", "Standard Deviation", Statistical),
    MinimumValue => ("minimum_value", "Minimum Value", Statistical),
    MeanAbsoluteDeviation => ("mean_absolute_deviation", "Mean Absolute Deviation", Statistical),
    MedianAbsoluteDeviation => ("median_absolute_deviation", "Median Absolute Deviation", Statistical),
    MeanAbsoluteDifference => ("mean_absolute_difference", "Mean Absolute Difference", Temporal),
    SumAbsoluteDifferences => ("sum_of_absolute_differences", "Sum of Absolute Differences", Temporal),
    SignalDistance => ("signal_distance", "Signal Distance", Temporal),
    PeakToPeak => ("peak_to_peak_distance", "Peak-to-Peak Distance", Statistical),
    AbsoluteEnergy => ("absolute_energy", "Absolute Energy", Statistical),
    AveragePower => ("average_power", "Average Power", Statistical),
    MeanSquaredError => ("mean_squared_error", "Mean Squared Error", Statistical),
    HistogramMode => ("histogram_mode", "Histogram Mode", Statistical),
    EcdfSlope => ("ecdf_slope", "ECDF Slope", Statistical),
    TemporalCentroid => ("temporal_centroid", "Temporal Centroid", Temporal),
    PetrosianFractalDimension => ("petrosian_fractal_dimension", "Petrosian Fractal Dimension", Temporal),
    HiguchiFractalDimension => ("higuchi_fractal_dimension", "Higuchi Fractal Dimension", Temporal),
    DetrendedFluctuation => ("detrended_fluctuation_analysis", "Detrended Fluctuation Analysis", Temporal),
    LempelZivComplexity => ("lempel_ziv_complexity", "Lempel-Ziv Complexity", Temporal),
    WaveletEntropy => ("wavelet_entropy", "Wavelet Entropy", Spectral),
    SpectralEntropy => ("spectral_entropy", "Spectral Entropy", Spectral),
    SpectralSlope => ("spectral_slope", "Spectral Slope", Spectral),
    SpectralSkewness => ("spectral_skewness", "Spectral Skewness", Spectral),
    SpectralKurtosis => ("spectral_kurtosis", "Spectral Kurtosis", Spectral),
    SpectralRollOff => ("spectral_roll_off", "Spectral Roll-Off", Spectral),
    SpectralVariation => ("spectral_variation", "Spectral Variation", Spectral),
    SpectralPositiveTurning => ("spectral_positive_turning", "Spectral Positive Turning", Spectral),
    HumanRangeEnergy => ("human_range_energy", "Human Range Energy", Spectral),
    Mean => ("mean", "Mean", Statistical),
    Median => ("median", "Median", Statistical),
    MaximumValue => ("maximum_value", "Maximum Value", Statistical),
    Variance => ("variance", "Variance", Statistical),
    RootMeanSquare => ("root_mean_square", "Root Mean Square", Statistical),
    Skewness => ("skewness", "Skewness", Statistical),
    Kurtosis => ("kurtosis", "Kurtosis", Statistical),
    InterquartileRange => ("interquartile_range", "Interquartile Range", Statistical),
    ZeroCrossings => ("zero_crossing_count", "Zero Crossing Count", Temporal),
    PositiveTurnings => ("positive_turning_count", "Positive Turning Count", Temporal),
    NegativeTurnings => ("negative_turning_count", "Negative Turning Count", Temporal),
    Autocorrelation => ("autocorrelation_lag1", "Autocorrelation", Temporal),
    LinearTrendSlope => ("linear_trend_slope", "Slope", Temporal),
    TotalEnergy => ("total_energy", "Total Energy", Temporal),
    HistogramEntropy => ("histogram_entropy", "Histogram Entropy", Statistical),
    AreaUnderCurve => ("area_under_curve", "Area Under the Curve", Temporal),
    MeanDiff => ("mean_diff", "Mean Diff", Temporal),
    MedianDiff => ("median_diff", "Median Diff", Temporal),
    NeighbourhoodPeaks => ("neighbourhood_peaks", "Neighbourhood Peaks", Temporal),
    SpectralCentroid => ("spectral_centroid", "Spectral Centroid", Spectral),
    SpectralSpread => ("spectral_spread", "Spectral Spread", Spectral),
    SpectralDecrease => ("spectral_decrease", "Spectral Decrease", Spectral),
    MedianFrequency => ("median_frequency", "Median Frequency", Spectral),
    MaxFrequency => ("max_frequency", "Maximum Frequency", Spectral),
    FundamentalFrequency => ("fundamental_frequency", "Fundamental Frequency", Spectral),
    MaxPowerSpectrum => ("max_power_spectrum", "Max Power Spectrum", Spectral),
    PowerBandwidth => ("power_bandwidth", "Power Bandwidth", Spectral),
}

/// Number of features computed per axis.
pub const FEATURES_PER_AXIS: usize = FeatureKind::ALL.len();

impl FeatureKind {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_is_closed_and_unique() {
        assert_eq!(FEATURES_PER_AXIS, 54);
        let names: HashSet<_> = FeatureKind::ALL.iter().map(|k| k.name()).collect();
        assert_eq!(names.len(), 54);
        for (i, k) in FeatureKind::ALL.iter().enumerate() {
            assert_eq!(k.index(), i);
            assert_eq!(k.name().parse::<FeatureKind>().unwrap(), *k);
        }
    }
}
