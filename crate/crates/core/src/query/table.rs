//! Integer tables: CSV input, validation and encryption.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Backend, CipherHandle, Evaluator};

/// Rows a per-row (one value per ciphertext) table may hold.
pub const MAX_PER_ROW_ROWS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    /// Values lie in `[0, 2^bits)`.
    pub bits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub columns: Vec<ColumnSpec>,
    pub rows: usize,
}

impl TableSpec {
    pub fn new(columns: Vec<ColumnSpec>, rows: usize) -> Self {
        Self { columns, rows }
    }

    /// Every column `bits` wide.
    pub fn uniform(names: &[&str], bits: u32, rows: usize) -> Self {
        let columns = names
            .iter()
            .map(|n| ColumnSpec {
                name: (*n).to_string(),
                bits,
            })
            .collect();
        Self { columns, rows }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("no column named {name:?}")))
    }

    pub fn column(&self, name: &str) -> Result<&ColumnSpec> {
        Ok(&self.columns[self.column_index(name)?])
    }

    /// Widest column.
    pub fn max_bits(&self) -> u32 {
        self.columns.iter().map(|c| c.bits).max().unwrap_or(0)
    }

    fn check_cell(&self, row: usize, col: usize, v: i64) -> Result<()> {
        let c = &self.columns[col];
        if v < 0 || (v as u64) >> c.bits != 0 {
            return Err(Error::Data {
                row,
                msg: format!("column {}: {v} does not fit {} bits", c.name, c.bits),
            });
        }
        Ok(())
    }
}

/// Plaintext rows in column order. Row numbers in errors count data rows
/// from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub spec: TableSpec,
    pub rows: Vec<Vec<i64>>,
}

impl Table {
    pub fn new(spec: TableSpec, rows: Vec<Vec<i64>>) -> Result<Self> {
        if rows.len() != spec.rows {
            return Err(Error::InvalidParameter(format!(
                "spec declares {} rows, table has {}",
                spec.rows,
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != spec.columns.len() {
                return Err(Error::Data {
                    row: i + 1,
                    msg: format!("expected {} cells, found {}", spec.columns.len(), row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                spec.check_cell(i + 1, j, v)?;
            }
        }
        Ok(Self { spec, rows })
    }

    /// Reads a CSV with a header row. Columns are looked up in `spec` by name
    /// and may appear in any order; `spec.rows` is checked against the data.
    pub fn read_csv<R: Read>(rd: R, spec: &TableSpec) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rd);
        let header = reader
            .headers()
            .map_err(|e| Error::Format(format!("header: {e}")))?
            .clone();
        let order = spec
            .columns
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c.name)
                    .ok_or_else(|| Error::Format(format!("header lacks column {:?}", c.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data {
                row: i + 1,
                msg: e.to_string(),
            })?;
            let row = order
                .iter()
                .zip(&spec.columns)
                .map(|(&k, c)| {
                    let cell = rec.get(k).unwrap_or("");
                    cell.parse::<i64>().map_err(|_| Error::Data {
                        row: i + 1,
                        msg: format!("column {}: {cell:?} is not an integer", c.name),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(spec.clone(), rows)
    }

    /// Reads a CSV, taking column names from the header and giving every
    /// column `bits` bits.
    pub fn read_csv_uniform<R: Read>(rd: R, bits: u32) -> Result<Self> {
        let mut data = Vec::new();
        let mut rd = rd;
        rd.read_to_end(&mut data)?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&data[..]);
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Format(format!("header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader.records().count();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::read_csv(&data[..], &TableSpec::uniform(&names, bits, rows))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wr.write_record(self.spec.columns.iter().map(|c| c.name.as_str()))
            .map_err(io)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(i64::to_string)).map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn column(&self, idx: usize) -> Vec<i64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

/// One column after encryption: a single packed handle, or one handle per
/// row when the backend holds a single value per ciphertext.
#[derive(Clone, Debug)]
pub enum ColumnHandles<V> {
    Packed(CipherHandle<V>),
    PerRow(Vec<CipherHandle<V>>),
}

impl<V> ColumnHandles<V> {
    pub fn handle_count(&self) -> usize {
        match self {
            ColumnHandles::Packed(_) => 1,
            ColumnHandles::PerRow(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncryptedTable<V> {
    pub spec: TableSpec,
    pub columns: Vec<ColumnHandles<V>>,
}

impl<V> EncryptedTable<V> {
    pub fn column(&self, name: &str) -> Result<&ColumnHandles<V>> {
        Ok(&self.columns[self.spec.column_index(name)?])
    }

    pub fn is_packed(&self) -> bool {
        matches!(self.columns.first(), Some(ColumnHandles::Packed(_)))
    }
}

/// Encrypts column by column, rows in table order.
pub fn encrypt_table<B: Backend>(ev: &Evaluator<B>, table: &Table) -> Result<EncryptedTable<B::Value>> {
    let half = (ev.modulus() / 2) as i64;
    for c in &table.spec.columns {
        if (1i64 << c.bits) - 1 > half {
            return Err(Error::InvalidParameter(format!(
                "{}-bit column {} exceeds the balanced range of {}",
                c.bits,
                c.name,
                ev.modulus()
            )));
        }
    }
    let rows = table.rows.len();
    let slots = ev.backend().max_slots();
    let packed = slots > 1;
    if rows == 0 {
        return Err(Error::EmptyPacking);
    }
    if packed && rows > slots {
        return Err(Error::TooManySlots { count: rows, max: slots });
    }
    if !packed && rows > MAX_PER_ROW_ROWS {
        return Err(Error::TooManySlots {
            count: rows,
            max: MAX_PER_ROW_ROWS,
        });
    }
    let columns = (0..table.spec.columns.len())
        .map(|j| {
            let values = table.column(j);
            if packed {
                Ok(ColumnHandles::Packed(ev.encode(&values)?))
            } else {
                values
                    .iter()
                    .map(|&v| ev.encode(&[v]))
                    .collect::<Result<Vec<_>>>()
                    .map(ColumnHandles::PerRow)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncryptedTable {
        spec: table.spec.clone(),
        columns,
    })
}

/// Reads `path` against `spec` and encrypts it.
pub fn ingest_csv<B: Backend>(
    path: impl AsRef<Path>,
    spec: &TableSpec,
    ev: &Evaluator<B>,
) -> Result<EncryptedTable<B::Value>> {
    let file = std::fs::File::open(path)?;
    let table = Table::read_csv(file, spec)?;
    encrypt_table(ev, &table)
}

/// Decrypts every column back into a plaintext table.
pub fn decrypt_table<B: Backend>(ev: &Evaluator<B>, enc: &EncryptedTable<B::Value>) -> Result<Table> {
    let cols = enc
        .columns
        .iter()
        .map(|c| match c {
            ColumnHandles::Packed(h) => ev.decode(h),
            ColumnHandles::PerRow(hs) => hs.iter().map(|h| Ok(ev.decode(h)?[0])).collect(),
        })
        .collect::<Result<Vec<Vec<i64>>>>()?;
    let rows = (0..enc.spec.rows)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    Table::new(enc.spec.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ClearEval;

    const CSV: &str = "qty,price\n3,17\n24,255\n0,9\n";

    fn spec() -> TableSpec {
        TableSpec::uniform(&["qty", "price"], 8, 3)
    }

    #[test]
    fn three_rows_two_columns_packed() {
        let table = Table::read_csv(CSV.as_bytes(), &spec()).unwrap();
        let ev = Evaluator::new(ClearEval::new(1), 5, 4, 4).unwrap();
        let enc = encrypt_table(&ev, &table).unwrap();
        assert_eq!(enc.columns.len(), 2);
        for c in &enc.columns {
            assert_eq!(c.handle_count(), 1);
            let ColumnHandles::Packed(h) = c else { panic!("expected packing") };
            assert_eq!(ev.decode(h).unwrap().len(), 3);
        }
        assert_eq!(decrypt_table(&ev, &enc).unwrap(), table);
    }

    #[test]
    fn out_of_range_value_names_the_row() {
        let err = Table::read_csv("qty,price\n1,2\n3,256\n".as_bytes(), &TableSpec::uniform(&["qty", "price"], 8, 2))
            .unwrap_err();
        match err {
            Error::Data { row, msg } => {
                assert_eq!(row, 2);
                assert!(msg.contains("price"), "{msg}");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            Table::read_csv("qty,price\n1,-1\n".as_bytes(), &TableSpec::uniform(&["qty", "price"], 8, 1)),
            Err(Error::Data { row: 1, .. })
        ));
    }

    #[test]
    fn parse_failures_report_row_and_column() {
        let err = Table::read_csv("qty,price\n1,2\n3,x\n".as_bytes(), &TableSpec::uniform(&["qty", "price"], 8, 2))
            .unwrap_err();
        assert!(matches!(&err, Error::Data { row: 2, msg } if msg.contains("price")), "{err}");
        assert!(matches!(
            Table::read_csv("qty\n1\n".as_bytes(), &spec()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn columns_are_matched_by_name() {
        let t = Table::read_csv("price,qty\n17,3\n255,24\n9,0\n".as_bytes(), &spec()).unwrap();
        assert_eq!(t, Table::read_csv(CSV.as_bytes(), &spec()).unwrap());
        let u = Table::read_csv_uniform(CSV.as_bytes(), 8).unwrap();
        assert_eq!(u.rows, t.rows);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), CSV);
    }

    #[test]
    fn too_wide_for_modulus_is_rejected() {
        let table = Table::read_csv(CSV.as_bytes(), &spec()).unwrap();
        let ev = Evaluator::new(ClearEval::new(1), 7, 3, 4).unwrap();
        assert!(encrypt_table(&ev, &table).is_err());
    }

    #[test]
    fn slot_capacity_is_enforced() {
        let table = Table::read_csv(CSV.as_bytes(), &spec()).unwrap();
        let ev = Evaluator::new(ClearEval::new(1).with_max_slots(2), 5, 4, 4).unwrap();
        assert!(matches!(encrypt_table(&ev, &table), Err(Error::TooManySlots { .. })));
    }
}
