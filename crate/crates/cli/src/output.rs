use std::io::Write;

use serde_json::{Map, Value};

use crate::error::CliError;

pub const VERSION: &str = env!("STREAMDIST_VERSION");

/// Significant digits for every float written to a report.
const DIGITS: i32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
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

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(v as i128)
            }
        }
    )*};
}
int_cell!(u8, u32, u64, usize, i32, i64);

/// `x` with 12 significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit, e.g. 9.99..9 -> 10.00..0
        if s.trim_start_matches('-')
            .trim_start_matches('0')
            .trim_start_matches('.')
            .len()
            > DIGITS as usize + 1
        {
            return format!("{x:.prec$e}", prec = (DIGITS - 1) as usize);
        }
        s
    } else {
        format!("{x:.prec$e}", prec = (DIGITS - 1) as usize)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => match i64::try_from(*v) {
                Ok(v) => Value::from(v),
                Err(_) => Value::from(v.to_string()),
            },
            Cell::Float(v) => format_float(*v)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rows sharing one header. Every row is prefixed with the version, the
/// master seed, the command and the parameter echo.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    prefix: Vec<Cell>,
}

pub const PREFIX_COLUMNS: [&str; 4] = ["version", "seed", "command", "params"];

impl Table {
    pub fn new(command: &str, seed: u64, params: &str, columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            prefix: vec![VERSION.into(), seed.into(), command.into(), params.into()],
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(Vec::new());
                w.write_record(
                    PREFIX_COLUMNS
                        .iter()
                        .copied()
                        .chain(self.columns.iter().map(String::as_str)),
                )?;
                for row in &self.rows {
                    w.write_record(self.prefix.iter().chain(row).map(Cell::render))?;
                }
                w.into_inner().map_err(|e| CliError::Io(e.into_error()))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut m = Map::new();
                        for (name, cell) in PREFIX_COLUMNS.iter().zip(&self.prefix) {
                            m.insert(name.to_string(), cell.json());
                        }
                        for (name, cell) in self.columns.iter().zip(row) {
                            m.insert(name.clone(), cell.json());
                        }
                        Value::Object(m)
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| CliError::Io(e.into()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

pub fn write_output(bytes: &[u8], path: Option<&std::path::Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}
