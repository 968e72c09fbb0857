//! Byte-stable JSON encoding of polynomials:
//! `{"degree": k, "terms": [{"im": y, "re": x, "u": [...], "ubar": [...]}, ...]}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{HomPoly, MonomialKey};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub u: Vec<u32>,
    pub ubar: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub degree: usize,
    pub terms: Vec<TermJson>,
}

impl From<&HomPoly> for PolyJson {
    fn from(p: &HomPoly) -> Self {
        PolyJson {
            degree: p.degree(),
            terms: p
                .terms()
                .map(|(k, c)| TermJson {
                    u: k.u().to_vec(),
                    ubar: k.ubar().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<PolyJson> for HomPoly {
    type Error = Error;

    fn try_from(doc: PolyJson) -> Result<Self> {
        HomPoly::from_terms(
            doc.degree,
            doc.terms.into_iter().map(|t| {
                (
                    MonomialKey::new(t.u, t.ubar),
                    Complex64::new(t.re, t.im),
                )
            }),
        )
    }
}

/// Serializes through `serde_json::Value`, whose maps keep keys sorted.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

impl HomPoly {
    pub fn to_json(&self) -> Result<String> {
        to_sorted_json(&PolyJson::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolyJson = serde_json::from_str(text)?;
        HomPoly::try_from(doc)
    }
}
