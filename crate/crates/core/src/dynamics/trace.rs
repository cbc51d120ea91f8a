use std::fmt::Write;

use thiserror::Error;

/// Uniformly sampled simulation output. Series are indexed `[item][sample]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub times: Vec<f64>,
    /// Non-ground nodes in model order.
    pub node_names: Vec<String>,
    pub voltages: Vec<Vec<f64>>,
    pub dea_names: Vec<String>,
    pub strains: Vec<Vec<f64>>,
    pub des_names: Vec<String>,
    pub resistances: Vec<Vec<f64>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceCsvError {
    #[error("empty trace file")]
    Empty,
    #[error("header must start with 't', got '{0}'")]
    BadHeader(String),
    #[error("column '{0}' has no V_, s_ or R_ prefix")]
    BadColumn(String),
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount { line: usize, expected: usize, got: usize },
    #[error("line {line}: '{text}' is not a number")]
    BadNumber { line: usize, text: String },
    #[error("line {line}: sample times must increase")]
    NonIncreasing { line: usize },
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        let i = self.node_names.iter().position(|n| n == node)?;
        Some(&self.voltages[i])
    }

    pub fn strain(&self, dea: &str) -> Option<&[f64]> {
        let i = self.dea_names.iter().position(|n| n == dea)?;
        Some(&self.strains[i])
    }

    /// Sample interval, assuming uniform sampling.
    pub fn sample_interval(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x < t)
    }

    /// CSV with header `t,V_<node>...,s_<dea>...,R_<des>...`; values use the
    /// shortest representation that parses back to the same float.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.node_names {
            let _ = write!(out, ",V_{n}");
        }
        for n in &self.dea_names {
            let _ = write!(out, ",s_{n}");
        }
        for n in &self.des_names {
            let _ = write!(out, ",R_{n}");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for series in self.voltages.iter().chain(&self.strains).chain(&self.resistances) {
                let _ = write!(out, ",{}", series[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trace, TraceCsvError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(TraceCsvError::Empty)?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols[0] != "t" {
            return Err(TraceCsvError::BadHeader(cols[0].to_string()));
        }
        let mut trace = Trace::default();
        // 0 = voltage, 1 = strain, 2 = resistance
        let mut kinds = Vec::new();
        for c in &cols[1..] {
            let (kind, names) = match c.split_once('_') {
                Some(("V", n)) => (0, n),
                Some(("s", n)) => (1, n),
                Some(("R", n)) => (2, n),
                _ => return Err(TraceCsvError::BadColumn(c.to_string())),
            };
            match kind {
                0 => trace.node_names.push(names.to_string()),
                1 => trace.dea_names.push(names.to_string()),
                _ => trace.des_names.push(names.to_string()),
            }
            kinds.push(kind);
        }
        trace.voltages = vec![Vec::new(); trace.node_names.len()];
        trace.strains = vec![Vec::new(); trace.dea_names.len()];
        trace.resistances = vec![Vec::new(); trace.des_names.len()];
        for (idx, line) in lines {
            let line_no = idx + 1;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != cols.len() {
                return Err(TraceCsvError::FieldCount {
                    line: line_no,
                    expected: cols.len(),
                    got: fields.len(),
                });
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| TraceCsvError::BadNumber {
                    line: line_no,
                    text: s.to_string(),
                })
            };
            let t = parse(fields[0])?;
            if trace.times.last().is_some_and(|&last| t <= last) {
                return Err(TraceCsvError::NonIncreasing { line: line_no });
            }
            trace.times.push(t);
            let mut counters = [0usize; 3];
            for (k, field) in fields[1..].iter().enumerate() {
                let v = parse(field)?;
                let kind = kinds[k];
                let slot = counters[kind];
                counters[kind] += 1;
                match kind {
                    0 => trace.voltages[slot].push(v),
                    1 => trace.strains[slot].push(v),
                    _ => trace.resistances[slot].push(v),
                }
            }
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        Trace {
            times: vec![0.0, 0.001, 0.002],
            node_names: vec!["n1".into(), "vs_rail".into()],
            voltages: vec![vec![0.0, 1.5, 2.0 / 3.0], vec![3000.0; 3]],
            dea_names: vec!["DEA1".into()],
            strains: vec![vec![0.0, 1e-9, 0.1]],
            des_names: vec!["DES1".into()],
            resistances: vec![vec![1e12, 9.99e11, 2e6]],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let csv = t.to_csv();
        assert!(csv.starts_with("t,V_n1,V_vs_rail,s_DEA1,R_DES1\n"));
        assert_eq!(Trace::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert_eq!(Trace::from_csv(""), Err(TraceCsvError::Empty));
        assert!(matches!(Trace::from_csv("x,y\n"), Err(TraceCsvError::BadHeader(_))));
        assert!(matches!(
            Trace::from_csv("t,s_A\n0,1\n0,2\n"),
            Err(TraceCsvError::NonIncreasing { line: 3 })
        ));
        assert!(matches!(
            Trace::from_csv("t,s_A\n0\n"),
            Err(TraceCsvError::FieldCount { .. })
        ));
    }
}
