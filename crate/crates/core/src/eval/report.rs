use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalResult};
use crate::io::write_string_atomic;
use crate::synth::TaskKind;

/// Test accuracies in percent, one column per requested task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub columns: Vec<(TaskKind, f64)>,
    /// Present only when all seven tasks are reported.
    pub avg: Option<f64>,
}

/// Builds a report for `tasks` in benchmark column order. A task evaluated
/// on several datasets (domains) is their unweighted mean.
pub fn make_report(results: &[EvalResult], tasks: &[TaskKind]) -> Result<Report, EvalError> {
    let mut columns = Vec::new();
    for task in TaskKind::ALL.into_iter().filter(|t| tasks.contains(t)) {
        let accs: Vec<f64> = results
            .iter()
            .filter(|r| r.task == task)
            .map(|r| 100.0 * r.test_accuracy)
            .collect();
        if accs.is_empty() {
            return Err(EvalError::MissingTask(task.column().to_string()));
        }
        columns.push((task, accs.iter().sum::<f64>() / accs.len() as f64));
    }
    let avg = (columns.len() == TaskKind::ALL.len())
        .then(|| columns.iter().map(|(_, v)| v).sum::<f64>() / columns.len() as f64);
    Ok(Report { columns, avg })
}

impl Report {
    fn cells(&self) -> Vec<(String, String)> {
        let mut cells: Vec<(String, String)> = self
            .columns
            .iter()
            .map(|(t, v)| (t.column().to_string(), format!("{v:.1}")))
            .collect();
        if let Some(a) = self.avg {
            cells.push(("avg".to_string(), format!("{a:.1}")));
        }
        cells
    }

    pub fn to_csv(&self) -> String {
        let (head, vals): (Vec<String>, Vec<String>) = self.cells().into_iter().unzip();
        format!("{}\n{}\n", head.join(","), vals.join(","))
    }

    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut head = String::new();
        let mut vals = String::new();
        for (i, (h, v)) in cells.iter().enumerate() {
            let w = h.len().max(v.len());
            if i > 0 {
                head.push_str("  ");
                vals.push_str("  ");
            }
            head.push_str(&format!("{h:>w$}"));
            vals.push_str(&format!("{v:>w$}"));
        }
        format!("{head}\n{vals}\n")
    }
}

/// Writes `report.csv` and `report.txt` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let csv = dir.join("report.csv");
    let txt = dir.join("report.txt");
    write_string_atomic(&csv, &report.to_csv())?;
    write_string_atomic(&txt, &report.to_text())?;
    Ok(vec![csv, txt])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(task: TaskKind, dataset: &str, pct: f64) -> EvalResult {
        EvalResult {
            dataset: dataset.to_string(),
            task,
            dev_accuracy: 0.0,
            test_accuracy: pct / 100.0,
            l2: 0.0,
            seed: 0,
            feature_dim: 0,
        }
    }

    fn row(values: [f64; 7]) -> Vec<EvalResult> {
        TaskKind::ALL
            .into_iter()
            .zip(values)
            .map(|(t, v)| result(t, t.name(), v))
            .collect()
    }

    #[test]
    fn benchmark_rows_average() {
        let r = make_report(&row([47.3, 63.8, 61.0, 77.8, 36.5, 39.1, 56.7]), &TaskKind::ALL).unwrap();
        assert_eq!(format!("{:.1}", r.avg.unwrap()), "54.6");
        let r = make_report(&row([53.8, 69.3, 59.6, 80.4, 44.3, 43.6, 59.1]), &TaskKind::ALL).unwrap();
        assert_eq!(format!("{:.1}", r.avg.unwrap()), "58.6");
        assert_eq!(
            r.to_csv(),
            "SP,BSO,DC,SSP,PDTB-E,PDTB-I,RST-DT,avg\n53.8,69.3,59.6,80.4,44.3,43.6,59.1,58.6\n"
        );
    }

    #[test]
    fn domains_averaged_within_task() {
        let results = vec![
            result(TaskKind::Sp, "sp_wiki", 40.0),
            result(TaskKind::Sp, "sp_arxiv", 50.0),
            result(TaskKind::Sp, "sp_roc", 60.0),
        ];
        let r = make_report(&results, &[TaskKind::Sp]).unwrap();
        assert_eq!(r.columns, vec![(TaskKind::Sp, 50.0)]);
        assert_eq!(r.avg, None);
        assert_eq!(r.to_csv(), "SP\n50.0\n");
    }

    #[test]
    fn missing_task() {
        let err = make_report(&[result(TaskKind::Sp, "sp", 1.0)], &[TaskKind::Sp, TaskKind::Rst]).unwrap_err();
        assert!(matches!(err, EvalError::MissingTask(t) if t == "RST-DT"));
    }
}
