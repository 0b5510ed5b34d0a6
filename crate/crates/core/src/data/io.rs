use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Named(String),
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, &name, label)
}

/// Parses comma-separated text with a header row. The rarer label value
/// becomes class 1; on equal counts the lexicographically larger raw value
/// does.
pub fn read_csv(reader: impl Read, name: &str, label: &LabelColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.len() < 2 {
        return Err(Error::Contract(format!(
            "expected a label column and at least one feature, found {} columns",
            headers.len()
        )));
    }
    let label_idx = match label {
        LabelColumn::Last => headers.len() - 1,
        LabelColumn::Named(col) => headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::Label(format!("label column `{col}` not found")))?,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: "*".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[j].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &raw_labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    let positive = match counts.len() {
        0 | 1 => {
            return Err(Error::DegenerateDataset(format!(
                "`{name}` contains a single label class"
            )))
        }
        2 => {
            let mut it = counts.iter();
            let (a, ca) = it.next().unwrap();
            let (b, cb) = it.next().unwrap();
            // BTreeMap order: a < b lexicographically, so ties go to b.
            if ca < cb { *a } else { *b }
        }
        k => {
            return Err(Error::Label(format!(
                "`{name}` has {k} distinct labels; binary labels are required"
            )))
        }
    }
    .to_string();

    let labels: Vec<u8> = raw_labels.iter().map(|l| u8::from(*l == positive)).collect();
    let features = Matrix::new(labels.len(), feature_names.len(), values)?;
    Dataset::new(name, features, labels)?.with_feature_names(feature_names)
}

/// Writes features and 0/1 labels with a header row; the label is the last
/// column.
pub fn write_csv(ds: &Dataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, &l) in ds.features.iter_rows().zip(&ds.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(l.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), "t", &LabelColumn::Last)
    }

    #[test]
    fn rarer_label_is_positive() {
        let d = parse("f,y\n1,a\n2,a\n3,a\n4,b\n").unwrap();
        assert_eq!(d.labels, vec![0, 0, 0, 1]);
        assert_eq!(d.class_counts(), (3, 1));
    }

    #[test]
    fn ties_go_to_larger_label() {
        let d = parse("f,y\n1,b\n2,a\n3,a\n4,b\n").unwrap();
        assert_eq!(d.labels, vec![1, 0, 0, 1]);
    }

    #[test]
    fn nan_cell_is_a_parse_error() {
        match parse("f,g,y\n1,2,a\n3,NaN,b\n") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "g");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn text_cell_is_a_parse_error() {
        assert!(matches!(parse("f,y\nx,a\n1,b\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn three_labels_rejected() {
        assert!(matches!(parse("f,y\n1,a\n2,b\n3,c\n"), Err(Error::Label(_))));
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(parse("f,y\n1,a\n2,a\n"), Err(Error::DegenerateDataset(_))));
    }

    #[test]
    fn named_label_column() {
        let d = read_csv(
            "y,f,g\nn,1,2\np,3,4\nn,5,6\n".as_bytes(),
            "t",
            &LabelColumn::Named("y".into()),
        )
        .unwrap();
        assert_eq!(d.feature_names, vec!["f", "g"]);
        assert_eq!(d.features.row(1), &[3.0, 4.0]);
        assert_eq!(d.labels, vec![0, 1, 0]);
    }

    #[test]
    fn write_then_read() {
        let d = parse("a,b,y\n1.5,2,n\n-3,4e-3,p\n0,1,n\n").unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.features, d.features);
        assert_eq!(back.labels, d.labels);
    }
}
