//! `check,name,value,bound,pass` rows.

use std::fmt::Write as _;

pub const HEADER: &str = "check,name,value,bound,pass";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub check: String,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Row {
    pub fn new(check: &str, name: impl Into<String>, value: f64, bound: f64, pass: bool) -> Self {
        Self {
            check: check.to_string(),
            name: name.into(),
            value,
            bound,
            pass,
        }
    }

    /// Passes iff `value <= bound`.
    pub fn at_most(check: &str, name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(check, name, value, bound, value <= bound)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        self.rows.extend(rows);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.check, r.name, r.value, r.bound, r.pass
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = Report::default();
        r.push(Row::at_most("mass", "t=0.1", 2.5e-13, 1e-10));
        r.push(Row::at_most("mass", "t=1", 1.0, 0.5));
        assert!(!r.all_pass());
        assert_eq!(
            r.to_csv(),
            "check,name,value,bound,pass\nmass,t=0.1,0.00000000000025,0.0000000001,true\nmass,t=1,1,0.5,false\n"
        );
    }
}
