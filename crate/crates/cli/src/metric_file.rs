//! JSON metric documents: one representative per symmetry orbit, 1-based
//! indices, polynomial coefficients as exponent/coefficient terms.

use std::path::Path;

use mroot_core::symtensor::{build_from_representatives, MultiIndex};
use mroot_core::{Error, MetricSpec, PolyField, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub indices: Vec<usize>,
    pub poly: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub coefficients: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Term>>,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn poly_from(terms: &[Term], n: usize, location: &str) -> Result<PolyField> {
    for (t, term) in terms.iter().enumerate() {
        if term.exps.len() != n {
            return Err(parse_err(
                format!("{location}[{t}].exps"),
                format!("expected {n} exponents, found {}", term.exps.len()),
            ));
        }
        if !term.coef.is_finite() {
            return Err(parse_err(format!("{location}[{t}].coef"), "coefficient must be finite"));
        }
    }
    Ok(PolyField::from_terms(n, terms.iter().map(|t| (t.exps.clone(), t.coef))))
}

fn terms_of(poly: &PolyField) -> Vec<Term> {
    poly.terms().map(|(e, c)| Term { exps: e.to_vec(), coef: c }).collect()
}

impl MetricDocument {
    pub fn to_spec(&self, origin: &str) -> Result<MetricSpec> {
        let (n, m) = (self.n, self.m);
        let mut reps = Vec::with_capacity(self.coefficients.len());
        for (k, entry) in self.coefficients.iter().enumerate() {
            let at = format!("{origin}: coefficients[{k}]");
            if entry.indices.len() != m {
                return Err(parse_err(
                    format!("{at}.indices"),
                    format!("expected {m} indices, found {}", entry.indices.len()),
                ));
            }
            let mut zero_based = Vec::with_capacity(m);
            for &i in &entry.indices {
                if i == 0 || i > n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                zero_based.push(i - 1);
            }
            reps.push((MultiIndex(zero_based), poly_from(&entry.poly, n, &format!("{at}.poly"))?));
        }
        let a = build_from_representatives(n, m, reps).map_err(|e| match e {
            // report the orbit in the document's 1-based convention
            Error::DuplicateOrbit(idx) => Error::DuplicateOrbit(idx.into_iter().map(|i| i + 1).collect()),
            other => other,
        })?;
        let sigma = self
            .sigma
            .as_ref()
            .map(|s| poly_from(s, n, &format!("{origin}: sigma")))
            .transpose()?;
        let spec = MetricSpec::new(a, sigma)?;
        Ok(match &self.name {
            Some(name) => spec.with_name(name.clone()),
            None => spec,
        })
    }

    pub fn from_spec(spec: &MetricSpec) -> Self {
        let coefficients = spec
            .coefficients()
            .entries()
            .map(|(idx, poly)| Entry { indices: idx.iter().map(|i| i + 1).collect(), poly: terms_of(poly) })
            .collect();
        Self {
            name: spec.name().map(str::to_string),
            n: spec.n(),
            m: spec.m(),
            coefficients,
            sigma: spec.sigma().map(terms_of),
        }
    }
}

/// Parses a metric document held in memory; `origin` names it in errors.
pub fn parse_metric_str(text: &str, origin: &str) -> Result<MetricSpec> {
    let doc: MetricDocument = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("{origin}:{}:{}", e.line(), e.column()), e.to_string()))?;
    doc.to_spec(origin)
}

pub fn parse_metric_file(path: &Path) -> Result<MetricSpec> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(origin.clone(), e.to_string()))?;
    parse_metric_str(&text, &origin)
}

pub fn to_json(spec: &MetricSpec) -> String {
    serde_json::to_string_pretty(&MetricDocument::from_spec(spec)).expect("document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_x_document() {
        let text = r#"{"n": 2, "m": 3, "coefficients": [
            {"indices": [1,1,1], "poly": [{"exps": [0,0], "coef": 1}, {"exps": [1,0], "coef": 1}]},
            {"indices": [2,2,2], "poly": [{"exps": [0,0], "coef": 1}]}]}"#;
        let spec = parse_metric_str(text, "doc").unwrap();
        assert_eq!((spec.n(), spec.m()), (2, 3));
        assert_eq!(spec.coefficients(), mroot_core::fixtures::m_x().coefficients());
    }

    #[test]
    fn wrong_index_length() {
        let text = r#"{"n": 2, "m": 3, "coefficients": [{"indices": [1,1], "poly": []}]}"#;
        match parse_metric_str(text, "doc") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "doc: coefficients[0].indices"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        match parse_metric_str("{\n  \"n\": 2,\n  oops }", "doc") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "doc:3:3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_orbit_and_range() {
        let dup = r#"{"n": 2, "m": 2, "coefficients": [
            {"indices": [1,2], "poly": [{"exps": [0,0], "coef": 1}]},
            {"indices": [2,1], "poly": [{"exps": [0,0], "coef": 2}]}]}"#;
        assert_eq!(parse_metric_str(dup, "doc"), Err(Error::DuplicateOrbit(vec![1, 2])));
        let range = r#"{"n": 2, "m": 2, "coefficients": [{"indices": [1,3], "poly": []}]}"#;
        assert_eq!(parse_metric_str(range, "doc"), Err(Error::IndexOutOfRange { index: 3, n: 2 }));
    }

    #[test]
    fn fixtures_round_trip() {
        for spec in mroot_core::fixtures::all() {
            let again = parse_metric_str(&to_json(&spec), "doc").unwrap();
            assert_eq!(again, spec);
        }
    }
}
