use std::io::{Read, Write};
use std::path::Path;

use super::{Column, DatasetError, Label, RawRecord};

/// Loads a dataset file. See [`read_csv`] for the accepted layout.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecord>, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file))
}

/// Parses comma-separated records with a header row naming all fifteen
/// columns in any order (case-insensitive). Empty numeric cells are missing
/// values; extra columns are ignored.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RawRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let mut numeric_cols = [0usize; 14];
    for col in Column::ALL {
        numeric_cols[col as usize] =
            position(col.name()).ok_or_else(|| DatasetError::MissingColumn(col.name().into()))?;
    }
    let class_col = position(Column::CLASS_HEADER)
        .ok_or_else(|| DatasetError::MissingColumn(Column::CLASS_HEADER.into()))?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |idx: usize| row.get(idx).unwrap_or("").trim();

        let mut values = [None; 14];
        for col in Column::ALL {
            let text = cell(numeric_cols[col as usize]);
            if text.is_empty() {
                continue;
            }
            let v: f64 = text.parse().map_err(|_| DatasetError::UnparsableCell {
                row: row_no,
                col: col.name().into(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::UnparsableCell {
                    row: row_no,
                    col: col.name().into(),
                });
            }
            values[col as usize] = Some(v);
        }
        let class = Label::parse(cell(class_col)).ok_or(DatasetError::UnknownClassLabel(row_no))?;
        records.push(RawRecord::with_missing(values, class));
    }
    Ok(records)
}

/// Writes records with the canonical header and column order. Missing cells
/// are written empty.
pub fn write_csv<W: Write>(records: &[RawRecord], writer: W) -> Result<(), DatasetError> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<&str> = Column::ALL.iter().map(|c| c.name()).collect();
    header.push(Column::CLASS_HEADER);
    wtr.write_record(&header)?;

    for r in records {
        let mut fields: Vec<String> = r
            .values()
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        fields.push(r.class.as_str().to_string());
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}
