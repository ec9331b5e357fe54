use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{curate, CurateConfig, CurationReport, FeatureMatrix, MoleculeRecord};
use crate::error::{Error, Result};

const RESERVED: [&str; 4] = ["id", "smiles", "group_key", "pa"];

/// Records plus their feature rows, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<MoleculeRecord>,
    pub features: FeatureMatrix,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.pa).collect()
    }

    /// Curate the records and carry the feature rows along. Merged
    /// stereoisomer groups get the mean of their members' feature rows.
    pub fn curate(&self, cfg: &CurateConfig) -> Result<(Dataset, CurationReport)> {
        let out = curate(&self.records, cfg);
        let src = self.features.values();
        let mut values = Array2::zeros((out.records.len(), self.features.n_cols()));
        for (i, rows) in out.sources.iter().enumerate() {
            for &r in rows {
                values.row_mut(i).zip_mut_with(&src.row(r), |a, b| *a += b);
            }
            if rows.len() > 1 {
                let k = rows.len() as f64;
                values.row_mut(i).mapv_inplace(|v| v / k);
            }
        }
        let features = FeatureMatrix::new(self.features.column_names().to_vec(), values)?;
        Ok((
            Dataset {
                records: out.records,
                features,
            },
            out.report,
        ))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            records: rows.iter().map(|&r| self.records[r].clone()).collect(),
            features: self.features.select_rows(rows),
        }
    }
}

fn parse_value(field: &str, line: u64, column: &str) -> Result<f64> {
    let t = field.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    t.parse::<f64>().map_err(|_| Error::Csv {
        line,
        message: format!("column `{column}`: cannot parse `{t}` as a number"),
    })
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset_from(File::open(path)?)
}

/// Read a dataset CSV: a header row containing `id`, `smiles`, `group_key`
/// and `pa`, with every other column treated as a feature. Empty cells and
/// `nan` are read as missing (NaN).
pub fn read_dataset_from<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            return Ok(Dataset {
                records: Vec::new(),
                features: FeatureMatrix::empty(0),
            })
        }
        Some(h) => h?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for n in &names {
        if n.is_empty() {
            return Err(Error::Csv {
                line: 1,
                message: "empty column name in header".into(),
            });
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::Csv {
                line: 1,
                message: format!("duplicate column `{n}` in header"),
            });
        }
    }
    let mut idx = [0usize; 4];
    for (k, r) in RESERVED.iter().enumerate() {
        idx[k] = names.iter().position(|n| n == r).ok_or_else(|| Error::Csv {
            line: 1,
            message: format!("header is missing required column `{r}`"),
        })?;
    }
    let feature_cols: Vec<usize> = (0..names.len())
        .filter(|c| !idx.contains(c))
        .collect();

    let mut records = Vec::new();
    let mut flat = Vec::new();
    let mut ids = HashSet::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        let id = row[idx[0]].to_string();
        if id.is_empty() {
            return Err(Error::Csv {
                line,
                message: "empty id".into(),
            });
        }
        if !ids.insert(id.clone()) {
            return Err(Error::Csv {
                line,
                message: format!("duplicate id `{id}`"),
            });
        }
        records.push(MoleculeRecord {
            id,
            smiles: row[idx[1]].to_string(),
            group_key: row[idx[2]].to_string(),
            pa: parse_value(&row[idx[3]], line, "pa")?,
        });
        for &c in &feature_cols {
            flat.push(parse_value(&row[c], line, &names[c])?);
        }
    }
    let values = Array2::from_shape_vec((records.len(), feature_cols.len()), flat)
        .map_err(|e| Error::invalid(e.to_string()))?;
    let features = FeatureMatrix::new(feature_cols.iter().map(|&c| names[c].clone()).collect(), values)?;
    Ok(Dataset { records, features })
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let file = File::create(path)?;
    write_dataset_to(file, data)
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        v.to_string()
    }
}

pub fn write_dataset_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = RESERVED.to_vec();
    header.extend(data.features.column_names().iter().map(String::as_str));
    w.write_record(&header)?;
    let values = data.features.values();
    for (i, r) in data.records.iter().enumerate() {
        let mut row = vec![r.id.clone(), r.smiles.clone(), r.group_key.clone(), fmt_value(r.pa)];
        row.extend(values.row(i).iter().map(|&v| fmt_value(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "id,smiles,group_key,pa,x1,x2\n\
        m1,CCN,k1,210.5,1.0,2\n\
        m2,CCO,k2,190,,3.5\n\
        m3,CCO,k2,190.4,nan,4\n";

    #[test]
    fn reads_reserved_and_feature_columns() {
        let d = read_dataset_from(SAMPLE.as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.features.column_names(), &["x1".to_string(), "x2".to_string()]);
        assert_eq!(d.records[0].pa, 210.5);
        assert!(d.features.values()[[1, 0]].is_nan());
        assert!(d.features.values()[[2, 0]].is_nan());
    }

    #[test]
    fn missing_reserved_column_reports_line_one() {
        let err = read_dataset_from("id,smiles,pa\nm1,C,200\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 1, .. }), "{err}");
    }

    #[test]
    fn bad_number_reports_its_line() {
        let err = read_dataset_from("id,smiles,group_key,pa\nm1,C,a,200\nm2,C,b,x\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = read_dataset_from("id,smiles,group_key,pa\nm1,C,a,200\nm1,C,b,201\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }));
    }

    #[test]
    fn empty_input_is_empty_dataset() {
        assert!(read_dataset_from("".as_bytes()).unwrap().is_empty());
        assert!(read_dataset_from("id,smiles,group_key,pa\n".as_bytes())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn write_then_read_is_identity() {
        let d = read_dataset_from(SAMPLE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &d).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert_eq!(back.records, d.records);
        for (a, b) in back.features.values().iter().zip(d.features.values().iter()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn curate_averages_feature_rows_of_merged_groups() {
        let d = read_dataset_from(SAMPLE.as_bytes()).unwrap();
        let (out, report) = d.curate(&CurateConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(report.counts.merged_groups, 1);
        assert!((out.records[1].pa - 190.2).abs() < 1e-12);
        assert_eq!(out.features.values()[[1, 1]], 3.75);
    }
}
