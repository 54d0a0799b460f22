use std::path::Path;

use crate::AnalysisError;

/// Tasks × training-conditions grid of test accuracies.
///
/// Construction enforces the shape and range invariants, so every consumer
/// in this crate can assume a rectangular grid of finite values in [0, 1]
/// (the range check rejects NaN along the way).
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<AccuracyMatrix, AnalysisError> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(AnalysisError::EmptyMatrix);
        }
        if values.len() != row_labels.len() {
            return Err(AnalysisError::RaggedMatrix);
        }
        for row in &values {
            if row.len() != col_labels.len() {
                return Err(AnalysisError::RaggedMatrix);
            }
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(AnalysisError::OutOfRange(v));
                }
            }
        }
        Ok(AccuracyMatrix { row_labels, col_labels, values })
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// First cell is ignored on read and written as `task`; remaining header
    /// cells are the condition labels.
    pub fn from_csv(path: &Path) -> Result<AccuracyMatrix, AnalysisError> {
        let mut reader = csv::Reader::from_path(path)?;
        let header = reader.headers()?.clone();
        let col_labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            let mut fields = record.iter();
            row_labels.push(fields.next().unwrap_or_default().to_owned());
            let row: Vec<f64> = fields
                .map(|f| f.trim().parse::<f64>().map_err(|_| AnalysisError::BadNumber(f.into())))
                .collect::<Result<_, _>>()?;
            values.push(row);
        }
        AccuracyMatrix::new(row_labels, col_labels, values)
    }

    pub fn to_csv(&self, path: &Path) -> Result<(), AnalysisError> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["task".to_owned()];
        header.extend(self.col_labels.iter().cloned());
        writer.write_record(&header)?;
        for (label, row) in self.row_labels.iter().zip(&self.values) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|v| v.to_string()));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}
