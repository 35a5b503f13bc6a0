//! CSV reports over an [`Analysis`].

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use interest_core::model::{present_2dp, ParseEnumError};
use interest_core::stats::BUCKET_LABELS;

use crate::analysis::Analysis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReportKind {
    Indicators,
    Correlations,
    Aggregate,
    Predictions,
}

impl ReportKind {
    pub const ALL: [ReportKind; 4] = [
        ReportKind::Indicators,
        ReportKind::Correlations,
        ReportKind::Aggregate,
        ReportKind::Predictions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Indicators => "indicators",
            ReportKind::Correlations => "correlations",
            ReportKind::Aggregate => "aggregate",
            ReportKind::Predictions => "predictions",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.as_str())
    }

    pub fn header(self) -> Vec<&'static str> {
        match self {
            ReportKind::Indicators => {
                vec!["user_id", "session_id", "page_id", "fragment_id", "indicator_kind", "value"]
            }
            ReportKind::Correlations => vec!["user_id", "indicator_kind", "page_class", "n", "r", "r_2dp", "p"],
            ReportKind::Aggregate => {
                let mut h = vec!["indicator_kind", "page_class", "n_significant", "mean_r", "mean_r_2dp"];
                h.extend(BUCKET_LABELS);
                h
            }
            ReportKind::Predictions => vec![
                "user_id",
                "content_id",
                "predicted",
                "predicted_2dp",
                "terms_used",
                "explicit",
                "explicit_2dp",
            ],
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ParseEnumError::new("report kind", s))
    }
}

fn rows(kind: ReportKind, analysis: &Analysis) -> Vec<Vec<String>> {
    match kind {
        ReportKind::Indicators => analysis
            .values
            .iter()
            .map(|v| {
                vec![
                    v.user_id.to_string(),
                    v.session_id.to_string(),
                    v.page_id.to_string(),
                    v.fragment_id.as_ref().map(ToString::to_string).unwrap_or_default(),
                    v.indicator_kind.as_str().to_owned(),
                    v.value.to_string(),
                ]
            })
            .collect(),
        ReportKind::Correlations => analysis
            .correlations
            .iter()
            .map(|c| {
                vec![
                    c.user_id.to_string(),
                    c.indicator_kind.as_str().to_owned(),
                    c.page_class.as_str().to_owned(),
                    c.n.to_string(),
                    c.r.to_string(),
                    present_2dp(c.r),
                    c.p.to_string(),
                ]
            })
            .collect(),
        ReportKind::Aggregate => analysis
            .aggregate
            .iter()
            .map(|row| {
                let mut out = vec![
                    row.indicator_kind.as_str().to_owned(),
                    row.page_class.as_str().to_owned(),
                    row.n_significant.to_string(),
                    row.mean_r.to_string(),
                    present_2dp(row.mean_r),
                ];
                out.extend(row.buckets.iter().map(ToString::to_string));
                out
            })
            .collect(),
        ReportKind::Predictions => analysis
            .predictions
            .iter()
            .map(|p| {
                vec![
                    p.user_id.to_string(),
                    p.content_id.to_string(),
                    p.prediction.value.to_string(),
                    present_2dp(p.prediction.value),
                    p.prediction.terms_used.to_string(),
                    p.explicit.map(|e| e.to_string()).unwrap_or_default(),
                    p.explicit.map(present_2dp).unwrap_or_default(),
                ]
            })
            .collect(),
    }
}

/// Writes one report; an empty analysis gives a header-only file.
pub fn write_report(kind: ReportKind, analysis: &Analysis, out: impl Write) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(kind.header())?;
    for row in rows(kind, analysis) {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn report_bytes(kind: ReportKind, analysis: &Analysis) -> Vec<u8> {
    let mut buf = Vec::new();
    write_report(kind, analysis, &mut buf).expect("writing to memory");
    buf
}

/// Writes all four reports into `dir`, returning the paths.
pub fn write_all(analysis: &Analysis, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    ReportKind::ALL
        .into_iter()
        .map(|kind| {
            let path = dir.join(kind.file_name());
            fs::write(&path, report_bytes(kind, analysis))?;
            Ok(path)
        })
        .collect()
}
