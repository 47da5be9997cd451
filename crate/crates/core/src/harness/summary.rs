use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{Cell, TrialResult};
use crate::error::{Error, Result};
use crate::estimators::{Clip, EstimatorId};

/// Error statistics of one `(estimator, cell, n)` group of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: EstimatorId,
    pub num_abstract: Option<usize>,
    pub clip_c: Option<Clip>,
    pub n: usize,
    pub trials: usize,
    pub mse: f64,
    pub bias: f64,
    /// Population variance of the estimates.
    pub variance: f64,
    /// Standard error of the MSE.
    pub stderr: f64,
}

impl SummaryRow {
    pub fn cell(&self) -> Cell {
        Cell {
            num_abstract: self.num_abstract,
            clip: self.clip_c,
        }
    }

    /// `|mse - (bias^2 + variance)|`.
    pub fn identity_gap(&self) -> f64 {
        (self.mse - (self.bias * self.bias + self.variance)).abs()
    }
}

type Key = (usize, EstimatorId, Option<usize>, Option<Clip>);

/// Groups results by `(n, estimator, |Z|, c)` and summarizes each group.
/// Rows come out sorted by that key.
pub fn summarize(results: &[TrialResult]) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<Key, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.n, r.estimator, r.num_abstract, r.clip_c)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, estimator, num_abstract, clip_c), group)| {
            if group.len() < 2 {
                return Err(Error::TooFewTrials {
                    key: format!("{estimator} |Z|={num_abstract:?} c={clip_c:?} n={n}"),
                    count: group.len(),
                });
            }
            let truth = group[0].truth;
            if group.iter().any(|r| r.truth != truth) {
                return Err(Error::InvalidArgument(format!("mixed truths within {estimator} n={n}")));
            }
            let m = group.len() as f64;
            let mse = group.iter().map(|r| r.sq_error).sum::<f64>() / m;
            let mean = group.iter().map(|r| r.estimate).sum::<f64>() / m;
            let variance = group.iter().map(|r| (r.estimate - mean).powi(2)).sum::<f64>() / m;
            let sq_var = group.iter().map(|r| (r.sq_error - mse).powi(2)).sum::<f64>() / (m - 1.0);
            Ok(SummaryRow {
                estimator,
                num_abstract,
                clip_c,
                n,
                trials: group.len(),
                mse,
                bias: mean - truth,
                variance,
                stderr: (sq_var / m).sqrt(),
            })
        })
        .collect()
}

/// log10 MSE of every STAR cell at size `n`: rows `|Z|`, columns `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub n: usize,
    pub num_abstract: Vec<usize>,
    pub clip: Vec<Clip>,
    /// `values[row][col]`, `None` where the cell has no summary.
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn heatmaps(summary: &[SummaryRow]) -> Vec<Heatmap> {
    let star: Vec<&SummaryRow> = summary.iter().filter(|r| r.estimator == EstimatorId::Star).collect();
    let mut sizes: Vec<usize> = star.iter().map(|r| r.n).collect();
    sizes.dedup();
    sizes.sort();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let rows: Vec<&&SummaryRow> = star.iter().filter(|r| r.n == n).collect();
            let mut num_abstract: Vec<usize> = rows.iter().filter_map(|r| r.num_abstract).collect();
            num_abstract.sort();
            num_abstract.dedup();
            let mut clip: Vec<Clip> = rows.iter().filter_map(|r| r.clip_c).collect();
            clip.sort();
            clip.dedup();
            let values = num_abstract
                .iter()
                .map(|&k| {
                    clip.iter()
                        .map(|&c| {
                            rows.iter()
                                .find(|r| r.num_abstract == Some(k) && r.clip_c == Some(c))
                                .map(|r| r.mse.log10())
                        })
                        .collect()
                })
                .collect();
            Heatmap {
                n,
                num_abstract,
                clip,
                values,
            }
        })
        .collect()
}

impl Heatmap {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["num_abstract".to_string()];
        header.extend(self.clip.iter().map(|c| format!("c={c}")));
        w.write_record(&header)?;
        for (k, row) in self.num_abstract.iter().zip(&self.values) {
            let mut record = vec![k.to_string()];
            record.extend(row.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(Path::new("<heatmap>"), e))?;
        Ok(())
    }
}

/// Best (lowest MSE) and median STAR cell at one dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub n: usize,
    pub selection: String,
    pub num_abstract: Option<usize>,
    pub clip_c: Option<Clip>,
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
    pub stderr: f64,
}

/// The median of an even number of cells is the lower of the two middle
/// cells. Ties in MSE keep summary order.
pub fn select_star(summary: &[SummaryRow]) -> Vec<Selection> {
    let mut by_n: BTreeMap<usize, Vec<&SummaryRow>> = BTreeMap::new();
    for r in summary.iter().filter(|r| r.estimator == EstimatorId::Star) {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut out = Vec::new();
    for (n, mut rows) in by_n {
        rows.sort_by(|a, b| a.mse.total_cmp(&b.mse));
        for (label, r) in [("best", rows[0]), ("median", rows[(rows.len() - 1) / 2])] {
            out.push(Selection {
                n,
                selection: label.to_string(),
                num_abstract: r.num_abstract,
                clip_c: r.clip_c,
                mse: r.mse,
                bias: r.bias,
                variance: r.variance,
                stderr: r.stderr,
            });
        }
    }
    out
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `rows` as CSV with a header even when there are no rows.
pub fn write_csv_file<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    } else {
        write_csv(rows, &mut buf)?;
    }
    super::write_atomic(path, &buf)
}

pub fn read_csv_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

pub const TRIAL_COLUMNS: [&str; 9] = ["estimator", "num_abstract", "clip_c", "n", "trial", "seed", "estimate", "truth", "sq_error"];
pub const SUMMARY_COLUMNS: [&str; 9] = ["estimator", "num_abstract", "clip_c", "n", "trials", "mse", "bias", "variance", "stderr"];
pub const FAILURE_COLUMNS: [&str; 6] = ["estimator", "num_abstract", "clip_c", "n", "trial", "error"];
pub const SELECTION_COLUMNS: [&str; 8] = ["n", "selection", "num_abstract", "clip_c", "mse", "bias", "variance", "stderr"];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn results(estimates: &[f64], truth: f64) -> Vec<TrialResult> {
        estimates
            .iter()
            .enumerate()
            .map(|(i, &e)| TrialResult::new(EstimatorId::Is, Cell::NONE, 10, i, i as u64, e, truth))
            .collect()
    }

    fn one(estimates: &[f64], truth: f64) -> SummaryRow {
        summarize(&results(estimates, truth)).unwrap().remove(0)
    }

    #[test]
    fn hand_computed_summaries() {
        let r = one(&[1.0, 1.0], 1.0);
        assert_eq!((r.mse, r.bias, r.variance), (0.0, 0.0, 0.0));
        let r = one(&[0.0, 2.0], 1.0);
        assert_eq!((r.mse, r.bias, r.variance), (1.0, 0.0, 1.0));
        let r = one(&[2.0, 2.0], 1.0);
        assert_eq!((r.mse, r.bias, r.variance), (1.0, 1.0, 0.0));
    }

    #[test]
    fn single_trial_groups_are_rejected() {
        assert!(matches!(summarize(&results(&[1.0], 0.0)), Err(Error::TooFewTrials { count: 1, .. })));
    }

    #[test]
    fn trial_csv_round_trip() {
        let mut rows = results(&[0.1, 0.25], 0.3);
        rows.push(TrialResult::new(EstimatorId::Star, Cell::star(4, Clip::Unclipped), 10, 0, 9, 1.0 / 3.0, 0.3));
        rows.push(TrialResult::new(EstimatorId::Star, Cell::star(4, Clip::Window(2)), 10, 0, 9, -2.5e-17, 0.3));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&TRIAL_COLUMNS.join(",")));
        assert!(text.contains("star,4,unclipped,10,0,9,"));
        assert!(text.contains("is,,,10,1,1,"));
        let back: Vec<TrialResult> = read_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn heatmap_and_selection() {
        let mut rows = Vec::new();
        for (k, c, e) in [(2, 1, 0.5), (2, 2, 0.1), (4, 1, 1.0), (4, 2, 2.0)] {
            for t in 0..2 {
                rows.push(TrialResult::new(EstimatorId::Star, Cell::star(k, Clip::Window(c)), 100, t, 0, e, 0.0));
            }
        }
        let summary = summarize(&rows).unwrap();
        let maps = heatmaps(&summary);
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].num_abstract, vec![2, 4]);
        assert!((maps[0].values[0][1].unwrap() - 0.01f64.log10()).abs() < 1e-12);
        let sel = select_star(&summary);
        assert_eq!((sel[0].num_abstract, sel[0].clip_c), (Some(2), Some(Clip::Window(2))));
        // sorted MSEs 0.01, 0.25, 1, 4: lower middle is 0.25
        assert_eq!((sel[1].num_abstract, sel[1].clip_c), (Some(2), Some(Clip::Window(1))));
        let mut buf = Vec::new();
        maps[0].write(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("num_abstract,c=1,c=2\n2,"));
    }

    proptest! {
        #[test]
        fn bias_variance_identity(estimates in prop::collection::vec(-1e3f64..1e3, 2..40), truth in -1e3f64..1e3) {
            let r = one(&estimates, truth);
            prop_assert!(r.identity_gap() <= 1e-12 * r.mse.max(1.0));
            prop_assert!(r.variance >= 0.0 && r.stderr >= 0.0);
        }
    }
}
