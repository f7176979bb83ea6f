use std::io::Write;

use crate::error::{Error, Result};

/// A record type that can be emitted as one CSV row.
pub trait CsvRow {
    const HEADER: &'static [&'static str];

    fn fields(&self) -> Vec<String>;
}

/// Writes a header line and one line per row.
pub fn write_csv<W: Write, R: CsvRow>(writer: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(R::HEADER).map_err(err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn to_csv_string<R: CsvRow>(rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}

pub(crate) fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}
