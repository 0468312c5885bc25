//! Method coefficient files.
//!
//! Layout: `{"k":..,"p":..,"epsilon":..,"beta":[..],"ell":..,"error_const":..}`,
//! floats written with 17 significant digits so a file reads back bit-exact.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::MethodSpec;
use crate::error::{Error, Result};
use crate::polycore::AdamsCoefficients;

/// Serialized form of a [`MethodSpec`]; field order is the file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodJson {
    pub k: usize,
    pub p: usize,
    pub epsilon: f64,
    pub beta: Vec<f64>,
    pub ell: f64,
    pub error_const: f64,
}

/// Formats `x` with 17 significant digits in scientific notation.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sig17Formatter;

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }
}

impl From<&MethodSpec> for MethodJson {
    fn from(m: &MethodSpec) -> Self {
        Self {
            k: m.k,
            p: m.p,
            epsilon: m.epsilon,
            beta: m.beta().to_vec(),
            ell: m.ell,
            error_const: m.error_const,
        }
    }
}

impl TryFrom<MethodJson> for MethodSpec {
    type Error = Error;

    fn try_from(j: MethodJson) -> Result<Self> {
        if j.beta.len() != j.k {
            return Err(Error::InvalidInput(format!(
                "k = {} but beta has {} entries",
                j.k,
                j.beta.len()
            )));
        }
        if j.p == 0 || j.p > j.k {
            return Err(Error::InvalidInput(format!("order {} outside 1..={}", j.p, j.k)));
        }
        if !(j.epsilon >= 0.0) {
            return Err(Error::InvalidInput("epsilon must be >= 0".into()));
        }
        Ok(MethodSpec {
            k: j.k,
            p: j.p,
            beta: AdamsCoefficients::new(j.beta)?,
            ell: j.ell,
            error_const: j.error_const,
            epsilon: j.epsilon,
        })
    }
}

impl MethodSpec {
    pub fn to_json(&self) -> Result<String> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter);
        MethodJson::from(self).serialize(&mut ser)?;
        Ok(String::from_utf8(out).expect("serializer emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<MethodJson>(text)?.try_into()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
