//! CSV rendering with `#` provenance lines.

use crate::config::ExperimentConfig;

/// A header and rows of already-formatted fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip form, so output is stable across platforms.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

pub fn render(config: &ExperimentConfig, table: &Table) -> csv::Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(
        format!(
            "# tool: mmtrain {}\n# experiment: {}\n# seed: {}\n# config-sha256: {}\n",
            env!("CARGO_PKG_VERSION"),
            config.experiment,
            config.seed,
            config.hash()
        )
        .as_bytes(),
    );
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(&table.header)?;
    for row in &table.rows {
        writer.write_record(row)?;
    }
    writer.into_inner().map_err(|e| e.into_error().into())
}
