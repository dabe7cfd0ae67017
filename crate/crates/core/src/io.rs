//! JSON input formats.
//!
//! * operator: `{"dim": d, "re": [[..]], "im": [[..]]}`, `im` optional
//! * observable: an operator (taken as the yes-effect) or `{"yes": op, "no": op}`
//! * state: an operator, or `{"ket": {"re": [..], "im": [..]}}`
//! * settings: `{"a1": obs, "a2": obs, "b1": obs, "b2": obs}`
//! * box: see [`crate::bell::BoxJson`]

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::bell::{BoxJson, NoSignalingBox, Settings};
use crate::error::{Error, Result};
use crate::operators::{ComplexMatrix, DensityMatrix, DichotomicObservable, Effect, C64};

fn field<T: DeserializeOwned>(v: &Value, name: &str) -> Result<T> {
    let inner = v.get(name).ok_or_else(|| Error::Parse(format!("missing field `{name}`")))?;
    T::deserialize(inner).map_err(|e| Error::Parse(format!("field `{name}`: {e}")))
}

pub fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_value(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn operator_from_value(v: &Value) -> Result<ComplexMatrix> {
    ComplexMatrix::deserialize(v).map_err(|e| Error::Parse(e.to_string()))
}

pub fn observable_from_value(v: &Value) -> Result<DichotomicObservable> {
    if v.get("yes").is_some() {
        let yes: ComplexMatrix = field(v, "yes")?;
        let no: ComplexMatrix = field(v, "no")?;
        DichotomicObservable::new(Effect::new(yes)?, Effect::new(no)?)
    } else {
        Ok(DichotomicObservable::from_yes(Effect::new(operator_from_value(v)?)?))
    }
}

#[derive(Deserialize)]
struct KetJson {
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
}

pub fn state_from_value(v: &Value) -> Result<DensityMatrix> {
    if v.get("ket").is_some() {
        let k: KetJson = field(v, "ket")?;
        let im = k.im.unwrap_or_else(|| vec![0.0; k.re.len()]);
        if im.len() != k.re.len() {
            return Err(Error::Parse(format!("ket has {} real and {} imaginary parts", k.re.len(), im.len())));
        }
        let psi: Vec<C64> = k.re.iter().zip(&im).map(|(r, i)| C64::new(*r, *i)).collect();
        DensityMatrix::from_ket(&psi)
    } else {
        DensityMatrix::new(operator_from_value(v)?)
    }
}

pub fn settings_from_value(v: &Value) -> Result<Settings> {
    let obs = |name: &str| {
        let inner = v.get(name).ok_or_else(|| Error::Parse(format!("missing field `{name}`")))?;
        observable_from_value(inner).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("field `{name}`: {m}")),
            other => other,
        })
    };
    Ok(Settings {
        a1: obs("a1")?,
        a2: obs("a2")?,
        b1: obs("b1")?,
        b2: obs("b2")?,
    })
}

pub fn box_from_value(v: &Value) -> Result<NoSignalingBox> {
    let json = BoxJson::deserialize(v).map_err(|e| Error::Parse(e.to_string()))?;
    NoSignalingBox::try_from(&json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_operator_is_yes_effect() {
        let v = parse_value(r#"{"dim": 2, "re": [[1, 0], [0, 0]]}"#).unwrap();
        let o = observable_from_value(&v).unwrap();
        assert_eq!(o.no().matrix(), &ComplexMatrix::diag(&[0.0, 1.0]));
    }

    #[test]
    fn explicit_pair_must_complement() {
        let v = parse_value(
            r#"{"yes": {"dim": 1, "re": [[0.5]]}, "no": {"dim": 1, "re": [[0.4]]}}"#,
        )
        .unwrap();
        assert!(matches!(observable_from_value(&v), Err(Error::NotComplementary { .. })));
    }

    #[test]
    fn ket_state() {
        let v = parse_value(r#"{"ket": {"re": [0, 0.6], "im": [0.8, 0]}}"#).unwrap();
        let rho = state_from_value(&v).unwrap();
        assert!((rho.matrix().get(0, 0).re - 0.64).abs() < 1e-15);
    }

    #[test]
    fn syntax_error_reports_position() {
        let e = parse_value("{\"dim\": 2,\n \"re\": [1, }").unwrap_err();
        assert!(matches!(e, Error::Parse(m) if m.contains("line 2")));
    }

    #[test]
    fn missing_settings_field_is_named() {
        let v = parse_value(r#"{"a1": {"dim": 1, "re": [[1]]}}"#).unwrap();
        assert!(matches!(settings_from_value(&v), Err(Error::Parse(m)) if m.contains("a2")));
    }
}
