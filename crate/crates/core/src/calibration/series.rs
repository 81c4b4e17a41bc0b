use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use super::CalibrationError;

/// Monthly repayment probabilities. `months` is a month index (for
/// `YYYY-MM` labels, `12 * year + month - 1`); `labels` keeps the text as
/// read so that export reproduces the input.
#[derive(Debug, Clone, PartialEq)]
pub struct RepaymentSeries {
    pub months: Vec<i64>,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl RepaymentSeries {
    /// Consecutive integer months starting at 0.
    pub fn from_values(values: Vec<f64>) -> Result<Self, CalibrationError> {
        let months: Vec<i64> = (0..values.len() as i64).collect();
        let labels = months.iter().map(|m| m.to_string()).collect();
        Self::new(months, labels, values)
    }

    pub fn new(months: Vec<i64>, labels: Vec<String>, values: Vec<f64>) -> Result<Self, CalibrationError> {
        if months.len() != values.len() || labels.len() != values.len() {
            return Err(CalibrationError::Config("months, labels and values differ in length".into()));
        }
        // Header is line 1, so observation k sits on line k + 2.
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(CalibrationError::ValueRange { line: k + 2, value: v });
            }
        }
        if let Some(k) = months.windows(2).position(|w| w[1] <= w[0]) {
            return Err(CalibrationError::NonMonotone { line: k + 3 });
        }
        Ok(RepaymentSeries { months, labels, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Months elapsed since the first observation.
    pub fn offsets(&self) -> Vec<f64> {
        let first = self.months.first().copied().unwrap_or(0);
        self.months.iter().map(|m| (m - first) as f64).collect()
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, CalibrationError> {
        let mut months = Vec::new();
        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut seen_header = false;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            if !seen_header {
                let cols: Vec<&str> = text.split(',').map(str::trim).collect();
                if cols != ["month", "value"] {
                    return Err(CalibrationError::Parse {
                        line: lineno,
                        message: format!("expected header \"month,value\", found \"{text}\""),
                    });
                }
                seen_header = true;
                continue;
            }
            let parse_err = |message: String| CalibrationError::Parse { line: lineno, message };
            let mut cols = text.split(',').map(str::trim);
            let (Some(month), Some(value), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(parse_err(format!("expected 2 columns in \"{text}\"")));
            };
            let index = parse_month(month).ok_or_else(|| parse_err(format!("bad month \"{month}\"")))?;
            let v: f64 = value.parse().map_err(|_| parse_err(format!("bad value \"{value}\"")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(CalibrationError::ValueRange { line: lineno, value: v });
            }
            if months.last().is_some_and(|&last| index <= last) {
                return Err(CalibrationError::NonMonotone { line: lineno });
            }
            months.push(index);
            labels.push(month.to_string());
            values.push(v);
        }
        if !seen_header {
            return Err(CalibrationError::Parse { line: 1, message: "missing header \"month,value\"".into() });
        }
        Ok(RepaymentSeries { months, labels, values })
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "month,value")?;
        for (label, v) in self.labels.iter().zip(&self.values) {
            writeln!(out, "{label},{v}")?;
        }
        out.flush()
    }
}

pub fn load_series(path: impl AsRef<Path>) -> Result<RepaymentSeries, CalibrationError> {
    RepaymentSeries::read(BufReader::new(File::open(path)?))
}

fn parse_month(s: &str) -> Option<i64> {
    if let Ok(i) = s.parse::<i64>() {
        return Some(i);
    }
    let (y, m) = s.split_once('-')?;
    if y.len() != 4 || m.len() != 2 {
        return None;
    }
    let y: i64 = y.parse().ok()?;
    let m: i64 = m.parse().ok()?;
    (1..=12).contains(&m).then_some(12 * y + m - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<RepaymentSeries, CalibrationError> {
        RepaymentSeries::read(s.as_bytes())
    }

    #[test]
    fn two_rows() {
        let s = read("month,value\n0,0.98\n1,0.97\n").unwrap();
        assert_eq!(s.values, vec![0.98, 0.97]);
        assert_eq!(s.months, vec![0, 1]);
    }

    #[test]
    fn calendar_labels() {
        let s = read("month,value\n2002-12,0.9\n2003-01,0.91\n2003-03,0.92\n").unwrap();
        assert_eq!(s.offsets(), vec![0.0, 1.0, 3.0]);
        let mut out = Vec::new();
        s.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "month,value\n2002-12,0.9\n2003-01,0.91\n2003-03,0.92\n");
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(read("month,value\n0,0.5\n1,1.2\n"), Err(CalibrationError::ValueRange { line: 3, value: 1.2 }));
        assert_eq!(read("month,value\n3,0.5\n2,0.6\n"), Err(CalibrationError::NonMonotone { line: 3 }));
        assert!(matches!(read("month,value\n0,abc\n"), Err(CalibrationError::Parse { line: 2, .. })));
        assert!(matches!(read("month,value\n2002-13,0.5\n"), Err(CalibrationError::Parse { line: 2, .. })));
        assert!(matches!(read("t,f\n0,0.5\n"), Err(CalibrationError::Parse { line: 1, .. })));
        assert!(matches!(read("month,value\n0,0.5,1\n"), Err(CalibrationError::Parse { line: 2, .. })));
    }

    #[test]
    fn long_round_trip() {
        let values: Vec<f64> = (0..128).map(|k| 0.97 + 0.0001 * (k % 17) as f64).collect();
        let s = RepaymentSeries::from_values(values.clone()).unwrap();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let back = read(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.len(), 128);
        assert_eq!(back.values, values);
    }
}
