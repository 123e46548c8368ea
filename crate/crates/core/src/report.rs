//! Self-describing reports: ordered key/value fields and tables, rendered as
//! plain text or as JSON.
//!
//! Floats are printed with 17 significant digits so every value round-trips.

use serde_json::{Map, Value};

/// Formats a float losslessly; non-finite values print as `inf`, `-inf`, `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// A scalar cell of a report.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) if v.is_finite() => Value::from(*v),
            Cell::Float(v) => Value::from(fmt_f64(*v)),
            Cell::Bool(v) => Value::from(*v),
            Cell::Text(v) => Value::from(v.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(i64::try_from(v).expect("integer fits in i64"))
            }
        }
    )*};
}
int_cell!(i32, i64, u32, u64, usize);

#[derive(Clone, Debug, PartialEq)]
enum Field {
    Scalar(Cell),
    Table { columns: Vec<String>, rows: Vec<Vec<Cell>> },
}

/// Ordered report. Text output keeps insertion order; JSON output sorts keys.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    title: String,
    fields: Vec<(String, Field)>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            fields: Vec::new(),
        }
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl Into<Cell>) -> &mut Self {
        self.fields.push((key.into(), Field::Scalar(value.into())));
        self
    }

    pub fn table(&mut self, key: impl Into<String>, columns: &[&str], rows: Vec<Vec<Cell>>) -> &mut Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        self.fields.push((
            key.into(),
            Field::Table {
                columns: columns.iter().map(|c| c.to_string()).collect(),
                rows,
            },
        ));
        self
    }

    /// Appends every field of `other` under `prefix.`.
    pub fn merge(&mut self, prefix: &str, other: Report) -> &mut Self {
        for (k, f) in other.fields {
            self.fields.push((format!("{prefix}.{k}"), f));
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.fields.iter().find_map(|(k, f)| match f {
            Field::Scalar(c) if k == key => Some(c),
            _ => None,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.title);
        for (key, field) in &self.fields {
            match field {
                Field::Scalar(c) => out.push_str(&format!("{key}: {}\n", c.render())),
                Field::Table { columns, rows } => {
                    out.push_str(&format!("[{key}]\n{}\n", columns.join("\t")));
                    for row in rows {
                        let cells: Vec<String> = row.iter().map(Cell::render).collect();
                        out.push_str(&cells.join("\t"));
                        out.push('\n');
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        map.insert("title".into(), Value::from(self.title.clone()));
        for (key, field) in &self.fields {
            let value = match field {
                Field::Scalar(c) => c.to_json(),
                Field::Table { columns, rows } => Value::Array(
                    rows.iter()
                        .map(|row| {
                            let obj: Map<String, Value> =
                                columns.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                            Value::Object(obj)
                        })
                        .collect(),
                ),
            };
            map.insert(key.clone(), value);
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 12345.678901234567] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn text_and_json() {
        let mut r = Report::new("demo");
        r.field("n", 3usize).field("ok", true);
        r.table("rows", &["s", "w"], vec![vec!["a".into(), 0.5.into()]]);
        let text = r.to_text();
        assert!(text.starts_with("# demo\nn: 3\nok: true\n[rows]\ns\tw\na\t5.0000000000000000e-1\n"));
        let json: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["rows"][0]["w"], 0.5);
        assert_eq!(r.get("n"), Some(&Cell::Int(3)));
    }
}
