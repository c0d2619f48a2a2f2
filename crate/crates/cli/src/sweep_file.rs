//! Sweep CSV files.
//!
//! ```text
//! # twinphoton sweep
//! # variant = unentangled
//! # ...every RunConfig key...
//! theta1_deg,theta2_deg,duration_s,counts
//! 45,0,1,497
//! ...
//! # visibility = 0.9981
//! ```
//!
//! The last column is `counts` for Poisson-sampled files and `rate_cps`
//! for noiseless ones.

use twinphoton::estimation::MeasurementRecord;

use crate::config::RunConfig;
use crate::format::sig;
use crate::CliError;

pub const COUNT_COLUMNS: [&str; 4] = ["theta1_deg", "theta2_deg", "duration_s", "counts"];
pub const RATE_COLUMNS: [&str; 4] = ["theta1_deg", "theta2_deg", "duration_s", "rate_cps"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueColumn {
    Counts,
    RateCps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub duration_s: f64,
    /// Counts or counts per second, depending on the file's value column.
    pub value: f64,
}

impl SweepRow {
    pub fn record(&self, column: ValueColumn) -> Result<MeasurementRecord, CliError> {
        let counts = match column {
            ValueColumn::Counts => self.value,
            ValueColumn::RateCps => self.value * self.duration_s,
        };
        Ok(MeasurementRecord::new(
            self.theta1_deg.to_radians(),
            self.theta2_deg.to_radians(),
            self.duration_s,
            counts,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFile {
    pub config: RunConfig,
    pub column: ValueColumn,
    pub rows: Vec<SweepRow>,
    /// Footer lines, written as `# key = value` after the data.
    pub footer: Vec<(String, String)>,
}

impl SweepFile {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut out = String::from("# twinphoton sweep\n");
        for (k, v) in self.config.echo() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let columns = match self.column {
            ValueColumn::Counts => COUNT_COLUMNS,
            ValueColumn::RateCps => RATE_COLUMNS,
        };
        w.write_record(columns).map_err(csv_error)?;
        for row in &self.rows {
            let value = match self.column {
                ValueColumn::Counts => format!("{}", row.value as u64),
                ValueColumn::RateCps => sig(row.value),
            };
            w.write_record([
                sig(row.theta1_deg),
                sig(row.theta2_deg),
                sig(row.duration_s),
                value,
            ])
            .map_err(csv_error)?;
        }
        let body = w
            .into_inner()
            .map_err(|e| CliError::Config(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        for (k, v) in &self.footer {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        Ok(out)
    }

    /// Parses a sweep file. Header comments are read as configuration.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let Some(comment) = trimmed.strip_prefix('#') else {
                break;
            };
            if let Some((k, v)) = comment.split_once('=') {
                config
                    .set(k.trim(), v.trim())
                    .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", i + 1)))?;
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CliError::Config(format!("{origin}: {e}")))?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        let column = if names == COUNT_COLUMNS {
            ValueColumn::Counts
        } else if names == RATE_COLUMNS {
            ValueColumn::RateCps
        } else {
            return Err(CliError::Config(format!(
                "{origin}: expected columns {} or {}, got {}",
                COUNT_COLUMNS.join(","),
                RATE_COLUMNS.join(","),
                names.join(",")
            )));
        };

        let mut rows = Vec::new();
        for result in reader.records() {
            let record = result.map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let mut values = [0.0f64; 4];
            for (j, slot) in values.iter_mut().enumerate() {
                let field = record.get(j).unwrap_or("");
                *slot = field.parse().map_err(|_| {
                    CliError::Config(format!(
                        "{origin}:{line}: column `{}`: expected a number, got `{field}`",
                        names[j]
                    ))
                })?;
            }
            if column == ValueColumn::Counts && values[3].fract() != 0.0 {
                return Err(CliError::Config(format!(
                    "{origin}:{line}: column `counts` must hold integers, got {}",
                    values[3]
                )));
            }
            rows.push(SweepRow {
                theta1_deg: values[0],
                theta2_deg: values[1],
                duration_s: values[2],
                value: values[3],
            });
        }
        Ok(Self {
            config,
            column,
            rows,
            footer: Vec::new(),
        })
    }

    pub fn records(&self) -> Result<Vec<MeasurementRecord>, CliError> {
        self.rows.iter().map(|r| r.record(self.column)).collect()
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(e.to_string())
}
