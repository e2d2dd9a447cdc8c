//! Results CSV: one row per run plus one `AGG` row per (scenario, node
//! count).

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{RunReport, ScenarioSummary};

pub const COLUMNS: [&str; 9] = [
    "scenario",
    "nodes",
    "seed",
    "pdr",
    "avg_delay_s",
    "sent",
    "received",
    "collisions",
    "discoveries",
];

/// Third column: a seed, or the aggregate marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    Seed(u64),
    Aggregate,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKind::Seed(s) => write!(f, "{s}"),
            RowKind::Aggregate => f.write_str("AGG"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub nodes: usize,
    pub kind: RowKind,
    pub pdr: f64,
    pub avg_delay: f64,
    pub sent: u64,
    pub received: u64,
    pub collisions: u64,
    pub discoveries: u64,
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        Self {
            scenario: r.scenario.clone(),
            nodes: r.node_count,
            kind: RowKind::Seed(r.seed),
            pdr: r.pdr,
            avg_delay: r.avg_delay,
            sent: r.packets_sent,
            received: r.packets_received,
            collisions: r.collisions,
            discoveries: r.discoveries,
        }
    }
}

/// Aggregate rows carry mean PDR and delay and summed counters.
impl From<&ScenarioSummary> for CsvRow {
    fn from(s: &ScenarioSummary) -> Self {
        Self {
            scenario: s.scenario.clone(),
            nodes: s.node_count,
            kind: RowKind::Aggregate,
            pdr: s.pdr.mean,
            avg_delay: s.avg_delay.mean,
            sent: s.packets_sent,
            received: s.packets_received,
            collisions: s.collisions,
            discoveries: s.discoveries,
        }
    }
}

impl CsvRow {
    fn fields(&self) -> [String; 9] {
        [
            self.scenario.clone(),
            self.nodes.to_string(),
            self.kind.to_string(),
            format!("{:.12}", self.pdr),
            format!("{:.6}", self.avg_delay),
            self.sent.to_string(),
            self.received.to_string(),
            self.collisions.to_string(),
            self.discoveries.to_string(),
        ]
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Streams rows to any writer; the header goes out on construction.
pub struct ResultsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(COLUMNS).map_err(csv_err)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &CsvRow) -> Result<()> {
        self.inner.write_record(row.fields()).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Renders rows, header included, to a string.
pub fn to_csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut w = ResultsWriter::new(Vec::new())?;
    for r in rows {
        w.write(r)?;
    }
    let bytes = w.into_inner()?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses results CSV. Columns are located by header name, so extra columns
/// and reordering are tolerated; a missing one is an error naming it.
pub fn read_rows<R: Read>(input: R, source: &str) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_err)?,
        None => return Err(Error::NoData(source.to_string())),
    };
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut rows = Vec::new();
    for (k, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let field = |c: usize| -> Result<&str> {
            rec.get(idx[c])
                .map(str::trim)
                .ok_or_else(|| Error::Csv(format!("{source} line {line}: missing `{}` field", COLUMNS[c])))
        };
        let bad = |c: usize, v: &str| Error::Csv(format!("{source} line {line}: bad `{}` value {v:?}", COLUMNS[c]));
        macro_rules! num {
            ($c:expr, $t:ty) => {{
                let v = field($c)?;
                v.parse::<$t>().map_err(|_| bad($c, v))?
            }};
        }
        let kind = match field(2)? {
            "AGG" => RowKind::Aggregate,
            v => RowKind::Seed(v.parse().map_err(|_| bad(2, v))?),
        };
        rows.push(CsvRow {
            scenario: field(0)?.to_string(),
            nodes: num!(1, usize),
            kind,
            pdr: num!(3, f64),
            avg_delay: num!(4, f64),
            sent: num!(5, u64),
            received: num!(6, u64),
            collisions: num!(7, u64),
            discoveries: num!(8, u64),
        });
    }
    if rows.is_empty() {
        return Err(Error::NoData(source.to_string()));
    }
    Ok(rows)
}

pub fn read_rows_from_path(path: &Path) -> Result<Vec<CsvRow>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(f, &path.display().to_string())
}
