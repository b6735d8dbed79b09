//! CSV and JSON table writers.
//!
//! Numbers are printed with 17 significant digits (`{:.16e}`) so every cell
//! round-trips; non-finite values become `inf`, `-inf` and `nan`, quoted as
//! strings in JSON. The JSON is written by hand so that numbers keep exactly
//! the CSV spelling.

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        // Drops the sign of -0.0.
        format!("{:.16e}", 0.0)
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format_num(*v),
            Cell::Num(v) => quote(&format_num(*v)),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => quote(s),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {}\n", v.csv()));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let object = |pairs: Vec<(String, String)>, indent: &str| -> String {
            if pairs.is_empty() {
                return "{}".into();
            }
            let body: Vec<String> = pairs
                .into_iter()
                .map(|(k, v)| format!("{indent}  {}: {v}", quote(&k)))
                .collect();
            format!("{{\n{}\n{indent}}}", body.join(",\n"))
        };
        let meta = object(self.meta.iter().map(|(k, v)| (k.clone(), v.json())).collect(), "  ");
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|row| {
                let pairs = self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                format!("    {}", object(pairs, "    "))
            })
            .collect();
        let rows = if rows.is_empty() {
            "[]".to_string()
        } else {
            format!("[\n{}\n  ]", rows.join(",\n"))
        };
        format!("{{\n  \"meta\": {meta},\n  \"rows\": {rows}\n}}\n")
    }
}
