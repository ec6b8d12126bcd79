use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_core::{hermite_cubic, hermite_cubic_slope, pchip_slopes};

/// Tabulated level `c(t)`, monotone cubic in `t`, constant beyond the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRecord", into = "TableRecord")]
pub struct TablePotential {
    t: Vec<f64>,
    c: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableRecord {
    t: Vec<f64>,
    c: Vec<f64>,
}

impl TryFrom<TableRecord> for TablePotential {
    type Error = Error;

    fn try_from(r: TableRecord) -> Result<Self> {
        TablePotential::new(r.t, r.c)
    }
}

impl From<TablePotential> for TableRecord {
    fn from(p: TablePotential) -> Self {
        TableRecord { t: p.t, c: p.c }
    }
}

impl TablePotential {
    pub fn new(t: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if t.len() != c.len() || t.is_empty() {
            return Err(Error::InvalidInput(format!(
                "table needs matching non-empty t and c columns, got {} and {}",
                t.len(),
                c.len()
            )));
        }
        if t.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "table contains non-finite entries".into(),
            ));
        }
        if !t.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "table t column must be strictly increasing".into(),
            ));
        }
        if *t.last().expect("non-empty") > 0.0 {
            return Err(Error::InvalidInput(
                "table t values must not exceed 0".into(),
            ));
        }
        let slopes = pchip_slopes(&t, &c);
        Ok(TablePotential { t, c, slopes })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    fn interval(&self, t: f64) -> Option<usize> {
        if t <= self.t[0] || t >= *self.t.last().expect("non-empty") {
            return None;
        }
        Some(self.t.partition_point(|x| *x <= t) - 1)
    }

    pub fn level(&self, t: f64) -> f64 {
        match self.interval(t) {
            Some(i) => hermite_cubic(
                self.t[i],
                self.t[i + 1],
                self.c[i],
                self.c[i + 1],
                self.slopes[i],
                self.slopes[i + 1],
                t,
            ),
            None if t <= self.t[0] => self.c[0],
            None => *self.c.last().expect("non-empty"),
        }
    }

    pub fn level_slope(&self, t: f64) -> f64 {
        match self.interval(t) {
            Some(i) => hermite_cubic_slope(
                self.t[i],
                self.t[i + 1],
                self.c[i],
                self.c[i + 1],
                self.slopes[i],
                self.slopes[i + 1],
                t,
            ),
            None => 0.0,
        }
    }
}
