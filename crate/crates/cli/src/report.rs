//! Report values, 15-significant-digit rounding and the two output formats.

use mroot_core::{DenseTensor, SymValueTensor};
use serde::Serialize;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Table,
}

/// Rounds a float to 15 significant digits.
pub fn round15(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.14e}").parse().expect("formatted float parses")
}

/// Applies `round15` to every number in a JSON tree.
pub fn rounded(value: Value) -> Value {
    match value {
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (None, None, Some(f)) => Number::from_f64(round15(f)).map(Value::Number).unwrap_or(Value::Null),
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(rounded).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Dense tensor as nested arrays, first index outermost.
pub fn nested(t: &DenseTensor) -> Value {
    fn build(data: &[f64], n: usize, order: usize) -> Value {
        if order == 0 {
            return to_value(&data[0]);
        }
        let stride = data.len() / n;
        Value::Array((0..n).map(|i| build(&data[i * stride..(i + 1) * stride], n, order - 1)).collect())
    }
    build(t.data(), t.n(), t.order())
}

pub fn nested_sym(t: &SymValueTensor) -> Value {
    nested(&t.to_dense())
}

/// Builds a JSON object from `(key, value)` pairs; keys come out sorted.
pub fn object<I, K>(pairs: I) -> Value
where
    I: IntoIterator<Item = (K, Value)>,
    K: Into<String>,
{
    Value::Object(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect::<Map<_, _>>())
}

/// A command's result: exit code, the report tree, and the chosen format.
#[derive(Debug, Clone)]
pub struct Report {
    pub code: i32,
    pub value: Value,
    pub format: Format,
    /// Plain text that replaces the report (help and version output).
    pub text: Option<String>,
}

impl Report {
    pub fn render(&self) -> String {
        if let Some(t) = &self.text {
            return t.clone();
        }
        let value = rounded(self.value.clone());
        match self.format {
            Format::Json => serde_json::to_string_pretty(&value).expect("report serializes") + "\n",
            Format::Table => render_table(&value),
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn is_row_list(items: &[Value]) -> bool {
    !items.is_empty()
        && items.iter().all(|v| {
            v.as_object().is_some_and(|o| o.values().all(|x| !x.is_object()))
        })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>, tables: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out, tables);
            }
        }
        Value::Array(items) if is_row_list(items) => tables.push((prefix.to_string(), row_table(items))),
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let cells: Vec<String> = items.iter().map(scalar_text).collect();
            out.push((prefix.to_string(), cells.join("  ")));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out, tables);
            }
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

/// Column table for a list of flat records; array cells are joined.
fn row_table(items: &[Value]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for item in items {
        for k in item.as_object().expect("row").keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let cell = |v: Option<&Value>| match v {
        Some(Value::Array(xs)) => xs.iter().map(scalar_text).collect::<Vec<_>>().join(","),
        Some(x) => scalar_text(x),
        None => String::new(),
    };
    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|item| columns.iter().map(|c| cell(item.get(c))).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| rows.iter().map(|r| r[i].len()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    let mut s = line(&columns) + "\n";
    for r in &rows {
        s += &line(r);
        s.push('\n');
    }
    s
}

pub fn render_table(v: &Value) -> String {
    let mut lines = Vec::new();
    let mut tables = Vec::new();
    flatten("", v, &mut lines, &mut tables);
    let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in &lines {
        s += &format!("{k:<width$}  {v}\n");
    }
    for (name, t) in tables {
        s += &format!("\n[{name}]\n{t}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fifteen_digits() {
        assert_eq!(serde_json::to_string(&rounded(json!(1.0 / 6.0))).unwrap(), "0.166666666666667");
        assert_eq!(round15(2.080_083_823_051_904), 2.0800838230519);
        assert_eq!(rounded(json!(3)), json!(3));
        assert_eq!(round15(0.0), 0.0);
    }

    #[test]
    fn nested_layout() {
        let t = DenseTensor::from_fn(2, 2, |ij| (10 * ij[0] + ij[1]) as f64);
        assert_eq!(nested(&t), json!([[0.0, 1.0], [10.0, 11.0]]));
    }

    #[test]
    fn table_rendering() {
        let v = json!({"a": 1.5, "b": {"c": [1, 2]}, "rows": [{"t": 0, "x": [1, 2]}, {"t": 1, "x": [3, 4]}]});
        let s = render_table(&v);
        assert!(s.contains("b.c  1  2"));
        assert!(s.contains("[rows]\nt  x\n0  1,2\n1  3,4\n"), "{s}");
    }
}
