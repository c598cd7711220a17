//! Column-major numeric tables with named columns, plus CSV I/O.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(first) = columns.first() {
            if let Some((i, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != first.len()) {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {}",
                    names[i],
                    c.len(),
                    first.len()
                )));
            }
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::Schema(format!("duplicate column name `{a}`")));
            }
        }
        Ok(Self { names, columns })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Schema(format!(
                    "row {r} has {} values, expected {d}",
                    row.len()
                )));
            }
            for (c, v) in row.iter().enumerate() {
                columns[c].push(*v);
            }
        }
        Self::new(names, columns)
    }

    /// Default names `x1..xd`.
    pub fn with_default_names(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=columns.len()).map(|i| format!("x{i}")).collect();
        Self::new(names, columns)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.column(i))
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.n_rows()).map(move |r| self.row(r))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Dataset {
            names: self.names.clone(),
            columns,
        }
    }

    /// Columns in the order of `names`.
    pub fn select_columns(&self, names: &[String]) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(names.len());
        for n in names {
            let i = self
                .index_of(n)
                .ok_or_else(|| Error::Schema(format!("missing column `{n}`")))?;
            columns.push(self.columns[i].clone());
        }
        Dataset::new(names.to_vec(), columns)
    }

    pub fn drop_column(&self, name: &str) -> Dataset {
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&i| self.names[i] != name).collect();
        Dataset {
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
        }
    }

    /// Appends the rows of `other`, which must have the same column names.
    pub fn vstack(&self, other: &Dataset) -> Result<Dataset> {
        if self.names != other.names {
            return Err(Error::Schema(format!(
                "cannot stack {:?} onto {:?}",
                other.names, self.names
            )));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(Dataset {
            names: self.names.clone(),
            columns,
        })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(format!("header: {e}")))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        if names.is_empty() || names.iter().all(String::is_empty) {
            return Err(Error::Parse("missing header row".into()));
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (r, record) in rdr.records().enumerate() {
            // header is line 1
            let line = r + 2;
            let record = record.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            if record.len() != names.len() {
                return Err(Error::Parse(format!(
                    "line {line}: {} fields, expected {}",
                    record.len(),
                    names.len()
                )));
            }
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Parse(format!(
                        "line {line}, column `{}`: non-numeric value {field:?}",
                        names[c]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!(
                        "line {line}, column `{}`: non-finite value {field:?}",
                        names[c]
                    )));
                }
                columns[c].push(v);
            }
        }
        Dataset::new(names, columns)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wtr.write_record(&self.names).map_err(io)?;
        for r in 0..self.n_rows() {
            wtr.write_record(self.columns.iter().map(|c| c[r].to_string()))
                .map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }
}

/// Per-column z-scoring with statistics from a training table.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    names: Vec<String>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for (name, col) in data.names().iter().zip(data.columns()) {
            let sd = sample_std(col);
            if !(sd > 0.0) {
                return Err(Error::degenerate(name.clone()));
            }
            means.push(mean(col));
            sds.push(sd);
        }
        Ok(Self {
            names: data.names().to_vec(),
            means,
            sds,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Standardizes every column of `data` that the standardizer knows.
    pub fn apply(&self, data: &Dataset) -> Dataset {
        let columns = data
            .names()
            .iter()
            .zip(data.columns())
            .map(|(name, col)| match self.names.iter().position(|n| n == name) {
                Some(i) => col.iter().map(|v| (v - self.means[i]) / self.sds[i]).collect(),
                None => col.clone(),
            })
            .collect();
        Dataset {
            names: data.names().to_vec(),
            columns,
        }
    }

    pub fn invert_column(&self, name: &str, values: &[f64]) -> Vec<f64> {
        match self.names.iter().position(|n| n == name) {
            Some(i) => values.iter().map(|v| v * self.sds[i] + self.means[i]).collect(),
            None => values.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_diagnostics() {
        let text = "a,b\n1,2.5\n-3,4e-3\n";
        let d = Dataset::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.column(1), &[2.5, 0.004]);
        let mut out = Vec::new();
        d.write_csv_to(&mut out).unwrap();
        let back = Dataset::from_csv_reader(out.as_slice()).unwrap();
        assert_eq!(back, d);

        let err = Dataset::from_csv_reader("a,b\n1,2\n3,x\n".as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("`b`"), "{msg}");
        assert!(Dataset::from_csv_reader("a,b\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn schema_checks() {
        assert!(Dataset::new(vec!["a".into()], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(Dataset::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]).is_err());
        let a = Dataset::with_default_names(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Dataset::new(vec!["x2".into(), "x1".into()], vec![vec![0.0], vec![0.0]]).unwrap();
        assert!(a.vstack(&b).is_err());
        let b = b.select_columns(a.names()).unwrap();
        assert_eq!(a.vstack(&b).unwrap().n_rows(), 3);
        assert_eq!(a.drop_column("x1").names(), &["x2".to_string()]);
    }

    #[test]
    fn standardizer() {
        let a = Dataset::with_default_names(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let s = Standardizer::fit(&a).unwrap();
        let z = s.apply(&a);
        assert_eq!(z.column(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.invert_column("x1", z.column(0)), vec![1.0, 2.0, 3.0]);
    }
}
