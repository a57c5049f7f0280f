//! Trajectory CSV.
//!
//! Header `t,schedule,<status_1>,...,<status_n>`, one row per (schedule, t)
//! with `t` ascending from 0, schedules in order, values fixed to six
//! decimals, `\n` line endings.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::ecm::{StateVector, Trajectory};

/// Name of the file holding every schedule.
pub const COMBINED_FILE: &str = "trajectories.csv";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsvError {
    #[error("FileNotFound: {0}")]
    FileNotFound(String),
    #[error("IoError: {path}: {message}")]
    Io { path: String, message: String },
    #[error("HeaderMismatch: {0}")]
    HeaderMismatch(String),
    #[error("ParseError at row {row}: {message}")]
    Parse { row: u64, message: String },
    #[error("InconsistentTrajectories: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CsvError {
    CsvError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn check_consistent(trajs: &[Trajectory]) -> Result<(), CsvError> {
    let Some(first) = trajs.first() else {
        return Ok(());
    };
    for t in trajs {
        if t.status_names() != first.status_names() {
            return Err(CsvError::Inconsistent(format!(
                "{} has different status names",
                t.schedule_label
            )));
        }
        if t.states.len() != first.states.len() {
            return Err(CsvError::Inconsistent(format!(
                "{} has length {}, expected {}",
                t.schedule_label,
                t.length(),
                first.length()
            )));
        }
    }
    Ok(())
}

fn fmt_value(v: f64) -> String {
    // Avoid "-0.000000" for values that round to zero from below.
    let s = format!("{v:.6}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Renders trajectories in the CSV contract. `status_names` supplies the
/// header when `trajs` is empty.
pub fn trajectories_to_csv(trajs: &[Trajectory], status_names: &[String]) -> Result<String, CsvError> {
    check_consistent(trajs)?;
    let names: &[String] = trajs.first().map_or(status_names, |t| t.status_names());
    if names.is_empty() {
        return Err(CsvError::Inconsistent("no status columns to write".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header = ["t", "schedule"]
        .into_iter()
        .map(str::to_string)
        .chain(names.iter().cloned());
    let to_err = |e: csv::Error| CsvError::Inconsistent(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for traj in trajs {
        for (t, s) in traj.states.iter().enumerate() {
            let row = [t.to_string(), traj.schedule_label.clone()]
                .into_iter()
                .chain(s.counts().iter().map(|&v| fmt_value(v)));
            w.write_record(row).map_err(to_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CsvError::Inconsistent(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CsvError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(contents).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// File name for one schedule's CSV: position plus a filesystem-safe name.
pub fn schedule_file_name(index: usize, label: &str) -> String {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .take(64)
        .collect();
    format!("{:03}_{safe}.csv", index + 1)
}

/// Writes one CSV per trajectory plus [`COMBINED_FILE`] into `dir`,
/// creating it if needed. Returns the written paths, combined file first.
pub fn write_trajectories(trajs: &[Trajectory], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, CsvError> {
    let dir = dir.as_ref();
    check_consistent(trajs)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let mut written: Vec<PathBuf> = trajs
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let path = dir.join(schedule_file_name(i, &t.schedule_label));
            let text = trajectories_to_csv(std::slice::from_ref(t), &[])?;
            write_atomic(&path, text.as_bytes())?;
            Ok(path)
        })
        .collect::<Result<_, CsvError>>()?;

    let combined = dir.join(COMBINED_FILE);
    write_atomic(&combined, trajectories_to_csv(trajs, &[])?.as_bytes())?;
    written.insert(0, combined);
    Ok(written)
}

pub fn read_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>, CsvError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CsvError::FileNotFound(path.display().to_string()),
        _ => io_err(path, e),
    })?;
    parse_trajectories(&text)
}

/// Parses CSV text in the contract; rows are numbered from 1 at the header.
pub fn parse_trajectories(text: &str) -> Result<Vec<Trajectory>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| CsvError::HeaderMismatch(e.to_string()))?
        .clone();
    if header.len() < 3 || &header[0] != "t" || &header[1] != "schedule" {
        return Err(CsvError::HeaderMismatch(format!(
            "expected t,schedule,<statuses...>, found {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let names: Arc<[String]> = header.iter().skip(2).map(str::to_string).collect();
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() || names[..i].contains(n) {
            return Err(CsvError::HeaderMismatch(format!(
                "status column {} is empty or repeated",
                i + 3
            )));
        }
    }

    let mut trajs: Vec<Trajectory> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            match e.kind() {
                csv::ErrorKind::UnequalLengths { .. } => CsvError::HeaderMismatch(format!(
                    "row {row} does not have {} fields",
                    names.len() + 2
                )),
                _ => CsvError::Parse {
                    row,
                    message: e.to_string(),
                },
            }
        })?;
        let row = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| CsvError::Parse { row, message };

        let t: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("t = \"{}\" is not a non-negative integer", &rec[0])))?;
        let label = &rec[1];
        let counts = rec
            .iter()
            .skip(2)
            .zip(names.iter())
            .map(|(cell, name)| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("{name} = \"{cell}\" is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let state = StateVector::new(Arc::clone(&names), counts).map_err(|e| bad(e.to_string()))?;

        match trajs.last_mut() {
            Some(cur) if cur.schedule_label == label && t != 0 => {
                if t != cur.states.len() {
                    return Err(bad(format!(
                        "t = {t} out of sequence, expected {}",
                        cur.states.len()
                    )));
                }
                cur.states.push(state);
            }
            _ => {
                if t != 0 {
                    return Err(bad(format!("schedule {label} starts at t = {t}, expected 0")));
                }
                trajs.push(Trajectory {
                    schedule_label: label.to_string(),
                    states: vec![state],
                });
            }
        }
    }
    if let Some(first) = trajs.first() {
        let len = first.states.len();
        if let Some(odd) = trajs.iter().find(|t| t.states.len() != len) {
            return Err(CsvError::Inconsistent(format!(
                "schedule {} has {} rows, expected {len}",
                odd.schedule_label,
                odd.states.len()
            )));
        }
    }
    Ok(trajs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecm::{EcmMatrix, SimulationModel};
    use crate::schedule::{NamedSchedule, Schedule};

    fn worked_run(length: usize) -> Vec<Trajectory> {
        let m = EcmMatrix::from_rows(
            "sample",
            &[[0.70, 0.50, 0.10], [0.20, 0.30, 0.20], [0.10, 0.20, 0.70]],
        )
        .unwrap();
        SimulationModel::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![m],
            vec![100.0; 3],
            length,
        )
        .unwrap()
        .with_schedule(NamedSchedule::new(
            "sample",
            Schedule::constant("sample", length).unwrap(),
        ))
        .unwrap()
        .evolve_all(Some(1))
        .unwrap()
    }

    #[test]
    fn header_needs_statuses() {
        assert!(matches!(trajectories_to_csv(&[], &[]), Err(CsvError::Inconsistent(_))));
        let names = vec!["a".to_string()];
        let text = trajectories_to_csv(&[], &names).unwrap();
        assert_eq!(text, "t,schedule,a\n");
        assert!(parse_trajectories(&text).unwrap().is_empty());
    }

    #[test]
    fn ragged_schedules_are_rejected() {
        let text = "t,schedule,a\n0,x,1\n1,x,2\n0,y,3\n";
        let err = parse_trajectories(text).unwrap_err();
        assert!(matches!(err, CsvError::Inconsistent(ref m) if m.contains("schedule y")), "{err}");
    }

    #[test]
    fn worked_example_rows() {
        let text = trajectories_to_csv(&worked_run(2), &[]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "t,schedule,a,b,c");
        assert_eq!(lines[1], "0,sample,100.000000,100.000000,100.000000");
        assert_eq!(lines[2], "1,sample,130.000000,70.000000,100.000000");
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn round_trip() {
        let trajs = worked_run(40);
        let back = parse_trajectories(&trajectories_to_csv(&trajs, &[]).unwrap()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].schedule_label, "sample");
        for (a, b) in trajs[0].states.iter().zip(&back[0].states) {
            for (x, y) in a.counts().iter().zip(b.counts()) {
                assert!((x - y).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn files_are_written_atomically_and_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_trajectories(&worked_run(5), dir.path()).unwrap();
        assert_eq!(paths[0], dir.path().join(COMBINED_FILE));
        assert_eq!(paths[1], dir.path().join("001_sample.csv"));
        let first = fs::read(&paths[0]).unwrap();
        write_trajectories(&worked_run(5), dir.path()).unwrap();
        assert_eq!(fs::read(&paths[0]).unwrap(), first);
        assert_eq!(fs::read(&paths[1]).unwrap(), first);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn header_mismatch() {
        assert!(matches!(
            parse_trajectories("t,a,b\n0,x,1\n"),
            Err(CsvError::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse_trajectories("t,schedule,a,b\n0,x,1\n"),
            Err(CsvError::HeaderMismatch(_))
        ));
    }

    #[test]
    fn parse_error_has_row() {
        let err = parse_trajectories("t,schedule,a\n0,x,1\n1,x,abc\n").unwrap_err();
        assert_eq!(
            err,
            CsvError::Parse {
                row: 3,
                message: "a = \"abc\" is not a number".into()
            }
        );
        assert!(matches!(
            parse_trajectories("t,schedule,a\n0,x,1\n2,x,1\n"),
            Err(CsvError::Parse { row: 3, .. })
        ));
        assert!(matches!(
            parse_trajectories("t,schedule,a\n0,x,-1\n"),
            Err(CsvError::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn several_schedules() {
        let text = "t,schedule,a\n0,x,1\n1,x,2\n0,y,3\n1,y,4\n0,x,5\n1,x,6\n";
        let trajs = parse_trajectories(text).unwrap();
        let labels: Vec<_> = trajs.iter().map(|t| t.schedule_label.as_str()).collect();
        assert_eq!(labels, ["x", "y", "x"]);
    }

    #[test]
    fn negative_zero_is_printed_as_zero() {
        assert_eq!(fmt_value(-1e-9), "0.000000");
        assert_eq!(fmt_value(-0.5), "-0.500000");
    }

    #[test]
    fn file_names() {
        assert_eq!(schedule_file_name(0, "schedule 1/a"), "001_schedule_1_a.csv");
    }
}
