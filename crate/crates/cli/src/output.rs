//! Artifact writers. Every float leaves the program with 17 significant
//! digits, and every file written is recorded with its digest.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use randwave::experiments::{McReport, Table};
use randwave::io::write_field;
use randwave::SpectralField;

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        self != Format::Csv
    }

    pub fn csv(self) -> bool {
        self != Format::Json
    }
}

/// `x` with 17 significant digits; `NaN`, `inf`, `-inf` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON whose floats carry 17 significant digits. Non-finite floats
/// become `null`.
struct Json17(PrettyFormatter<'static>);

impl Formatter for Json17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Json17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// CSV with a header row. Cells are preformatted strings.
pub fn to_csv(columns: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn table_csv(table: &Table) -> Vec<u8> {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| r.iter().map(|&x| fmt_f64(x)).collect())
        .collect();
    to_csv(&table.columns, &rows)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of_file(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&std::fs::read(path)?),
        })
    }
}

/// Output directory plus the list of files written into it.
pub struct Outputs {
    dir: PathBuf,
    pub format: Format,
    written: Vec<Artifact>,
}

impl Outputs {
    pub fn create(dir: &Path, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.written.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &to_json(value)?)
    }

    pub fn field(&mut self, name: &str, field: &SpectralField) -> Result<()> {
        let mut bytes = Vec::new();
        write_field(&mut bytes, field)?;
        self.write(name, &bytes)
    }

    /// `report.json` and/or `report.csv` (the table) plus
    /// `estimates.csv`, as the format asks.
    pub fn report(&mut self, report: &McReport) -> Result<()> {
        if self.format.json() {
            self.json("report.json", report)?;
        }
        if self.format.csv() {
            self.write("report.csv", &table_csv(&report.table))?;
            let rows: Vec<Vec<String>> = report
                .estimates
                .iter()
                .map(|e| vec![e.name.clone(), fmt_f64(e.value), fmt_f64(e.se)])
                .collect();
            let cols = ["name", "value", "se"].map(String::from);
            self.write("estimates.csv", &to_csv(&cols, &rows))?;
        }
        Ok(())
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.written
    }
}
