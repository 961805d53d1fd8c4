//! Labeled environmental dataset: schema, CSV ingest, preprocessing and splitting.
//!
//! The on-disk schema has fifteen columns (fourteen numeric measurements plus
//! the `class` label). Only temperature, relative humidity and oxygen level are
//! used as predictors; the remaining columns are carried through untouched.

mod csv_io;
mod preprocess;
pub mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use preprocess::{
    apply_scaler, fit_scaler, impute_missing, remove_outliers, select_features, split,
    validate_records, ScalingParams, SplitResult, SPLIT_TRAIN_FRACTION,
};

/// Number of predictors kept after feature selection.
pub const N_FEATURES: usize = 3;

pub const TEMP_RANGE: (f64, f64) = (-50.0, 60.0);
pub const RH_RANGE: (f64, f64) = (0.0, 100.0);
pub const OXY_RANGE: (f64, f64) = (0.0, 100.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unparsable cell at row {row}, column `{col}`")]
    UnparsableCell { row: usize, col: String },
    #[error("unknown class label at row {0}")]
    UnknownClassLabel(usize),
    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),
    #[error("all records were dropped as outliers")]
    EmptyAfterFiltering,
    #[error("n = {n} is too small; need at least {min} rows")]
    InvalidN { n: usize, min: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("row {row}: `{column}` is missing")]
    MissingValue { row: usize, column: String },
    #[error("`{column}` = {value} is outside [{min}, {max}]")]
    OutOfRange {
        column: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

impl From<csv::Error> for DatasetError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) => DatasetError::Io(io.to_string()),
            _ => DatasetError::Csv(e.to_string()),
        }
    }
}

/// Binary fire label. `Fire` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    NotFire,
    Fire,
}

impl Label {
    pub fn from_bool(fire: bool) -> Self {
        if fire {
            Label::Fire
        } else {
            Label::NotFire
        }
    }

    pub fn is_fire(self) -> bool {
        self == Label::Fire
    }

    /// 1 for fire, 0 otherwise.
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        self.as_u8() as f64
    }

    /// +1 for fire, -1 otherwise (SVM convention).
    pub fn sign(self) -> f64 {
        if self.is_fire() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn flipped(self) -> Self {
        Label::from_bool(!self.is_fire())
    }

    /// Text used in CSV files and API responses.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fire => "fire",
            Label::NotFire => "not fire",
        }
    }

    /// Parses "fire" / "not fire", ignoring case and surrounding or repeated whitespace.
    pub fn parse(s: &str) -> Option<Self> {
        let norm = s
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase();
        match norm.as_str() {
            "fire" => Some(Label::Fire),
            "not fire" => Some(Label::NotFire),
            _ => None,
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::NotFire),
            1 => Ok(Label::Fire),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The fourteen numeric columns, in canonical file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    Day,
    Mon,
    Yr,
    Temp,
    Rh,
    Ws,
    Rain,
    Oxy,
    Ffmc,
    Dmc,
    Dc,
    Isi,
    Bui,
    Fwi,
}

impl Column {
    pub const ALL: [Column; 14] = [
        Column::Day,
        Column::Mon,
        Column::Yr,
        Column::Temp,
        Column::Rh,
        Column::Ws,
        Column::Rain,
        Column::Oxy,
        Column::Ffmc,
        Column::Dmc,
        Column::Dc,
        Column::Isi,
        Column::Bui,
        Column::Fwi,
    ];

    /// Predictor columns kept by feature selection.
    pub const SELECTED: [Column; N_FEATURES] = [Column::Temp, Column::Rh, Column::Oxy];

    pub const CLASS_HEADER: &'static str = "class";

    pub fn name(self) -> &'static str {
        match self {
            Column::Day => "day",
            Column::Mon => "mon",
            Column::Yr => "yr",
            Column::Temp => "temp",
            Column::Rh => "rh",
            Column::Ws => "ws",
            Column::Rain => "rain",
            Column::Oxy => "oxy",
            Column::Ffmc => "ffmc",
            Column::Dmc => "dmc",
            Column::Dc => "dc",
            Column::Isi => "isi",
            Column::Bui => "bui",
            Column::Fwi => "fwi",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let name = name.trim().to_ascii_lowercase();
        Column::ALL.into_iter().find(|c| c.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Valid closed range for the column, if it is bounded.
    pub fn bounds(self) -> Option<(f64, f64)> {
        match self {
            Column::Day => Some((1.0, 31.0)),
            Column::Mon => Some((1.0, 12.0)),
            Column::Temp => Some(TEMP_RANGE),
            Column::Rh => Some(RH_RANGE),
            Column::Oxy => Some(OXY_RANGE),
            Column::Ws | Column::Rain => Some((0.0, f64::INFINITY)),
            _ => None,
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Column::Day | Column::Mon | Column::Yr)
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the source dataset. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    values: [Option<f64>; 14],
    pub class: Label,
}

impl RawRecord {
    /// Builds a complete record from values in canonical column order.
    pub fn from_values(values: [f64; 14], class: Label) -> Self {
        RawRecord {
            values: values.map(Some),
            class,
        }
    }

    pub fn with_missing(values: [Option<f64>; 14], class: Label) -> Self {
        RawRecord { values, class }
    }

    pub fn get(&self, col: Column) -> Option<f64> {
        self.values[col.index()]
    }

    pub fn set(&mut self, col: Column, value: Option<f64>) {
        self.values[col.index()] = value;
    }

    pub fn values(&self) -> &[Option<f64>; 14] {
        &self.values
    }

    pub fn temp(&self) -> Option<f64> {
        self.get(Column::Temp)
    }

    pub fn rh(&self) -> Option<f64> {
        self.get(Column::Rh)
    }

    pub fn oxy(&self) -> Option<f64> {
        self.get(Column::Oxy)
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }

    /// Checks the record is complete and every bounded column is in range.
    /// `row` is the 1-based data row used in error messages.
    pub fn validate(&self, row: usize) -> Result<(), DatasetError> {
        for col in Column::ALL {
            let v = self.get(col).ok_or_else(|| DatasetError::MissingValue {
                row,
                column: col.name().to_string(),
            })?;
            let bad_int = col.is_integer() && v.fract() != 0.0;
            let out = match col.bounds() {
                Some((lo, hi)) => !(lo..=hi).contains(&v),
                None => !v.is_finite(),
            };
            if bad_int || out {
                let (min, max) = col.bounds().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
                return Err(DatasetError::OutOfRange {
                    column: col.name().to_string(),
                    value: v,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }
}

/// The three selected predictors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub temp: f64,
    pub rh: f64,
    pub oxy: f64,
}

impl FeatureVector {
    /// Range-checked constructor.
    pub fn new(temp: f64, rh: f64, oxy: f64) -> Result<Self, DatasetError> {
        let v = FeatureVector { temp, rh, oxy };
        v.check()?;
        Ok(v)
    }

    pub fn check(&self) -> Result<(), DatasetError> {
        for (name, value, (min, max)) in [
            ("temp", self.temp, TEMP_RANGE),
            ("rh", self.rh, RH_RANGE),
            ("oxy", self.oxy, OXY_RANGE),
        ] {
            if !(min..=max).contains(&value) {
                return Err(DatasetError::OutOfRange {
                    column: name.to_string(),
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; N_FEATURES] {
        [self.temp, self.rh, self.oxy]
    }
}

impl From<[f64; N_FEATURES]> for FeatureVector {
    fn from(a: [f64; N_FEATURES]) -> Self {
        FeatureVector {
            temp: a[0],
            rh: a[1],
            oxy: a[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(features: FeatureVector, label: Label) -> Self {
        LabeledSample { features, label }
    }
}
