use std::io::Write;

use super::{Mode, TrialRecord};
use crate::error::{Error, Result};

/// Column names for records with `margins` hypothesis lines.
pub fn csv_header(margins: usize) -> Vec<String> {
    let mut h = vec!["trial".to_string(), "premises_hold".to_string()];
    h.extend((1..=margins).map(|i| format!("margin_{i}")));
    h.extend(["eq_defect", "conclusion_margin", "violation"].map(String::from));
    h
}

/// Number of hypothesis lines per record in a campaign mode.
pub(crate) fn margins_for(mode: Mode, n: usize) -> usize {
    match mode {
        Mode::Conjecture => n - 1,
        Mode::Theorem3 => 2,
        Mode::Optimality => 0,
    }
}

/// Streams one CSV row per trial. Floats use the shortest representation
/// that round-trips.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
    margins: usize,
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W, mode: Mode, n: usize) -> Result<Self> {
        let margins = margins_for(mode, n);
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(csv_header(margins)).map_err(io)?;
        Ok(Self { writer, margins })
    }

    pub fn write(&mut self, rec: &TrialRecord) -> Result<()> {
        if rec.hypothesis_margins.len() != self.margins {
            return Err(Error::arg(format!(
                "record has {} margins, header has {}",
                rec.hypothesis_margins.len(),
                self.margins
            )));
        }
        let mut row = vec![rec.trial_index.to_string(), rec.premises_hold.to_string()];
        row.extend(rec.hypothesis_margins.iter().map(|v| format!("{v:?}")));
        row.push(format!("{:?}", rec.eq_defect));
        row.push(format!("{:?}", rec.conclusion_margin));
        row.push(rec.violation.to_string());
        self.writer.write_record(&row).map_err(io)
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush().map_err(io)?;
        self.writer.into_inner().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::search::{run_trial_range, CampaignConfig};

    #[test]
    fn header_and_rows() {
        assert_eq!(
            csv_header(2),
            ["trial", "premises_hold", "margin_1", "margin_2", "eq_defect", "conclusion_margin", "violation"]
        );
        let cfg = CampaignConfig::new(Mode::Conjecture, 4, 10, 1, 1.0);
        let mut sink = CsvSink::new(Vec::new(), cfg.mode, cfg.n).unwrap();
        let mut f = |r: &TrialRecord| sink.write(r);
        run_trial_range(&cfg, 0..10, Exec::Sequential, Some(&mut f)).unwrap();
        let text = String::from_utf8(sink.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert!(lines[0].starts_with("trial,premises_hold,margin_1,margin_2,margin_3,eq_defect"));
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0], "0");
        let parsed: f64 = cells[2].parse().unwrap();
        assert!(parsed.is_finite());
    }
}
