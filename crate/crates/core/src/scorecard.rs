//! Indicator normalization, categorical scoring rubrics and the scorecard
//! CSV format.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScorecardError {
    #[error("degenerate normalization range: min == max == {0}")]
    DegenerateRange(f64),
    #[error("invalid normalization bounds: min {min} > max {max}")]
    InvalidBounds { min: f64, max: f64 },
    #[error("non-finite or negative value {value} for indicator `{indicator}`")]
    BadValue { indicator: String, value: f64 },
    #[error("unknown category `{label}` for indicator `{indicator}`")]
    UnknownCategory { indicator: String, label: String },
    #[error("no cohort bounds registered for cohort `{0}`")]
    UnknownCohort(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: field `{field}` = {value} outside [0, 1]")]
    OutOfRange {
        line: usize,
        field: &'static str,
        value: f64,
    },
    #[error("line {line}: duplicate model_id `{model_id}`")]
    Duplicate { line: usize, model_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Min-max normalization onto the unit interval.
///
/// Values outside `[min, max]` are clamped. With `invert`, returns `1 - s`.
pub fn normalize_minmax(x: f64, min: f64, max: f64, invert: bool) -> Result<f64, ScorecardError> {
    if !x.is_finite() {
        return Err(ScorecardError::BadValue {
            indicator: "<minmax>".into(),
            value: x,
        });
    }
    if min == max {
        return Err(ScorecardError::DegenerateRange(min));
    }
    if min > max || !min.is_finite() || !max.is_finite() {
        return Err(ScorecardError::InvalidBounds { min, max });
    }
    let s = ((x - min) / (max - min)).clamp(0.0, 1.0);
    Ok(if invert { 1.0 - s } else { s })
}

/// Like [`normalize_minmax`] but returns `default` for a degenerate cohort.
pub fn normalize_minmax_or(x: f64, min: f64, max: f64, invert: bool, default: f64) -> Result<f64, ScorecardError> {
    match normalize_minmax(x, min, max, invert) {
        Err(ScorecardError::DegenerateRange(_)) => Ok(default),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Benefit,
    Cost,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IndicatorValue {
    Numeric(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawIndicator {
    pub indicator_id: String,
    pub value: IndicatorValue,
    pub direction: Direction,
    pub cohort_id: String,
    pub source_note: String,
}

/// Published discrete scoring maps plus per-cohort normalization bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringRubric {
    pub license_map: BTreeMap<String, f64>,
    pub pricing_map: BTreeMap<String, f64>,
    /// Raw (pre-inversion) misuse-risk scores.
    pub misuse_map: BTreeMap<String, f64>,
    /// Allowed range of the qualitative bias score (pre-inversion).
    pub bias_range: (f64, f64),
    pub cohort_bounds: BTreeMap<String, (f64, f64)>,
}

impl Default for ScoringRubric {
    fn default() -> Self {
        let map = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self {
            license_map: map(&[("Proprietary", 0.0), ("Restricted", 0.5), ("Open", 1.0)]),
            pricing_map: map(&[("Paid", 0.2), ("Freemium", 0.6), ("Free", 1.0)]),
            misuse_map: map(&[("HighRisk", 0.8), ("Med", 0.6), ("Low", 0.4)]),
            bias_range: (0.3, 0.9),
            cohort_bounds: BTreeMap::new(),
        }
    }
}

impl ScoringRubric {
    pub fn with_cohort(mut self, cohort: &str, min: f64, max: f64) -> Self {
        self.cohort_bounds.insert(cohort.to_string(), (min, max));
        self
    }

    fn map_for(&self, indicator_id: &str) -> Option<&BTreeMap<String, f64>> {
        match indicator_id {
            "license" => Some(&self.license_map),
            "pricing" => Some(&self.pricing_map),
            "misuse" => Some(&self.misuse_map),
            _ => None,
        }
    }
}

/// Looks up a categorical label. Misuse scores come back pre-inversion.
pub fn score_categorical(indicator_id: &str, label: &str, rubric: &ScoringRubric) -> Result<f64, ScorecardError> {
    rubric
        .map_for(indicator_id)
        .and_then(|m| m.get(label))
        .copied()
        .ok_or_else(|| ScorecardError::UnknownCategory {
            indicator: indicator_id.to_string(),
            label: label.to_string(),
        })
}

/// Scores one raw indicator into the "higher = more public" orientation.
///
/// Numeric values are min-max normalized within their cohort (inverted for
/// cost indicators). Categorical misuse labels and numeric bias scores are
/// inverted after lookup.
pub fn score_raw(ind: &RawIndicator, rubric: &ScoringRubric) -> Result<f64, ScorecardError> {
    match &ind.value {
        IndicatorValue::Category(label) => {
            let s = score_categorical(&ind.indicator_id, label, rubric)?;
            Ok(if ind.indicator_id == "misuse" { 1.0 - s } else { s })
        }
        IndicatorValue::Numeric(x) => {
            if !x.is_finite() || *x < 0.0 {
                return Err(ScorecardError::BadValue {
                    indicator: ind.indicator_id.clone(),
                    value: *x,
                });
            }
            if ind.indicator_id == "bias" {
                let (lo, hi) = rubric.bias_range;
                if *x < lo || *x > hi {
                    return Err(ScorecardError::BadValue {
                        indicator: ind.indicator_id.clone(),
                        value: *x,
                    });
                }
                return Ok(1.0 - x);
            }
            let (min, max) = rubric
                .cohort_bounds
                .get(&ind.cohort_id)
                .copied()
                .ok_or_else(|| ScorecardError::UnknownCohort(ind.cohort_id.clone()))?;
            normalize_minmax(*x, min, max, ind.direction == Direction::Cost)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessMode {
    #[serde(rename = "open")]
    OpenWeight,
    #[serde(rename = "closed")]
    ClosedApi,
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessMode::OpenWeight => "open",
            AccessMode::ClosedApi => "closed",
        })
    }
}

impl FromStr for AccessMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(AccessMode::OpenWeight),
            "closed" => Ok(AccessMode::ClosedApi),
            other => Err(format!("access_mode must be `open` or `closed`, got `{other}`")),
        }
    }
}

/// One model's normalized sub-indicator scores. Negative-externality
/// scores are stored post-inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub model_id: String,
    pub access_mode: AccessMode,
    pub load_score: f64,
    pub capacity_score: f64,
    pub legal_score: f64,
    pub economic_score: f64,
    pub citation_score: f64,
    pub download_score: f64,
    pub misuse_inv: f64,
    pub bias_inv: f64,
    pub env_inv: f64,
    pub cx_override: Option<f64>,
    /// Published (c_q, c_e, c_x); not part of the CSV schema.
    #[serde(skip)]
    pub dimension_overrides: Option<(f64, f64, f64)>,
}

impl Scorecard {
    fn unit_fields(&self) -> [(&'static str, f64); 9] {
        [
            ("load_score", self.load_score),
            ("capacity_score", self.capacity_score),
            ("legal_score", self.legal_score),
            ("economic_score", self.economic_score),
            ("citation_score", self.citation_score),
            ("download_score", self.download_score),
            ("misuse_inv", self.misuse_inv),
            ("bias_inv", self.bias_inv),
            ("env_inv", self.env_inv),
        ]
    }

    /// Checks every score lies in the unit interval; `line` is used for reporting.
    pub fn validate(&self, line: usize) -> Result<(), ScorecardError> {
        let extra = self.cx_override.map(|v| ("cx_override", v));
        let overrides = self
            .dimension_overrides
            .map(|(a, b, c)| [("c_q", a), ("c_e", b), ("c_x", c)]);
        let all = self
            .unit_fields()
            .into_iter()
            .chain(extra)
            .chain(overrides.into_iter().flatten());
        for (field, value) in all {
            if !(0.0..=1.0).contains(&value) {
                return Err(ScorecardError::OutOfRange { line, field, value });
            }
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "model_id",
    "access_mode",
    "load_score",
    "capacity_score",
    "legal_score",
    "economic_score",
    "citation_score",
    "download_score",
    "misuse_inv",
    "bias_inv",
    "env_inv",
    "cx_override",
];

pub fn read_scorecards<R: Read>(reader: R) -> Result<Vec<Scorecard>, ScorecardError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ScorecardError::Malformed {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            ScorecardError::Malformed {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let card: Scorecard = rec.deserialize(Some(&headers)).map_err(|e| ScorecardError::Malformed {
            line,
            message: e.to_string(),
        })?;
        card.validate(line)?;
        if !seen.insert(card.model_id.clone()) {
            return Err(ScorecardError::Duplicate {
                line,
                model_id: card.model_id,
            });
        }
        out.push(card);
    }
    Ok(out)
}

pub fn load_scorecards(path: &Path) -> Result<Vec<Scorecard>, ScorecardError> {
    read_scorecards(std::fs::File::open(path)?)
}

pub fn write_scorecards<W: Write>(writer: W, cards: &[Scorecard]) -> Result<(), ScorecardError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for c in cards {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_examples() {
        assert_eq!(normalize_minmax(3.0, 1.0, 5.0, false).unwrap(), 0.5);
        assert_eq!(normalize_minmax(5.0, 1.0, 5.0, true).unwrap(), 0.0);
        assert_eq!(normalize_minmax(1.0, 1.0, 5.0, false).unwrap(), 0.0);
        assert_eq!(normalize_minmax(5.0, 1.0, 5.0, false).unwrap(), 1.0);
        // clamped
        assert_eq!(normalize_minmax(-4.0, 1.0, 5.0, false).unwrap(), 0.0);
        assert_eq!(normalize_minmax(9.0, 1.0, 5.0, false).unwrap(), 1.0);
    }

    #[test]
    fn minmax_grid_matches_direct_formula() {
        for k in 0..100 {
            let x = 10.0 * k as f64 / 99.0;
            let oracle = (x - 0.0) / (10.0 - 0.0);
            assert!((normalize_minmax(x, 0.0, 10.0, false).unwrap() - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_cohort() {
        assert!(matches!(
            normalize_minmax(2.0, 2.0, 2.0, false),
            Err(ScorecardError::DegenerateRange(_))
        ));
        assert_eq!(normalize_minmax_or(2.0, 2.0, 2.0, false, 0.5).unwrap(), 0.5);
        assert!(normalize_minmax(f64::NAN, 0.0, 1.0, false).is_err());
    }

    #[test]
    fn categorical_examples() {
        let r = ScoringRubric::default();
        assert_eq!(score_categorical("license", "Proprietary", &r).unwrap(), 0.0);
        assert_eq!(score_categorical("license", "Open", &r).unwrap(), 1.0);
        assert_eq!(score_categorical("pricing", "Freemium", &r).unwrap(), 0.6);
        assert_eq!(score_categorical("misuse", "HighRisk", &r).unwrap(), 0.8);
        let err = score_categorical("license", "GPL-ish", &r).unwrap_err();
        assert!(err.to_string().contains("license") && err.to_string().contains("GPL-ish"));
    }

    #[test]
    fn raw_scoring_inverts_negative_externalities() {
        let r = ScoringRubric::default().with_cohort("closed", 0.0, 2.0e9);
        let misuse = RawIndicator {
            indicator_id: "misuse".into(),
            value: IndicatorValue::Category("HighRisk".into()),
            direction: Direction::Cost,
            cohort_id: "closed".into(),
            source_note: String::new(),
        };
        assert!((score_raw(&misuse, &r).unwrap() - 0.2).abs() < 1e-12);
        let bias = RawIndicator {
            indicator_id: "bias".into(),
            value: IndicatorValue::Numeric(0.7),
            ..misuse.clone()
        };
        assert!((score_raw(&bias, &r).unwrap() - 0.3).abs() < 1e-12);
        let load = RawIndicator {
            indicator_id: "load".into(),
            value: IndicatorValue::Numeric(1.6e9),
            ..misuse.clone()
        };
        assert!((score_raw(&load, &r).unwrap() - 0.2).abs() < 1e-12);
        let neg = RawIndicator {
            value: IndicatorValue::Numeric(-1.0),
            ..load.clone()
        };
        assert!(score_raw(&neg, &r).is_err());
        let orphan = RawIndicator {
            cohort_id: "nowhere".into(),
            ..load
        };
        assert!(matches!(score_raw(&orphan, &r), Err(ScorecardError::UnknownCohort(_))));
    }

    #[test]
    fn header_only_is_empty() {
        let text = CSV_HEADER.join(",") + "\n";
        assert!(read_scorecards(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        let head = CSV_HEADER.join(",");
        let bad = format!("{head}\nX,closed,0,1,1.2,0.6,0.8,0,0.6,0.4,0.3,\n");
        let err = read_scorecards(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, ScorecardError::OutOfRange { line: 2, field: "legal_score", .. }));
        let dup = format!("{head}\nX,closed,0,1,0,0.6,0.8,0,0.6,0.4,0.3,\nX,open,0,1,0,0.6,0.8,0,0.6,0.4,0.3,0.5\n");
        assert!(matches!(
            read_scorecards(dup.as_bytes()).unwrap_err(),
            ScorecardError::Duplicate { line: 3, .. }
        ));
        let malformed = format!("{head}\nX,closed,zero,1,0,0.6,0.8,0,0.6,0.4,0.3,\n");
        assert!(matches!(
            read_scorecards(malformed.as_bytes()).unwrap_err(),
            ScorecardError::Malformed { line: 2, .. }
        ));
    }
}
