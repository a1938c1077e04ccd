//! Fixed 17-significant-digit float formatting shared by the JSON and CSV
//! writers. Seventeen digits round-trip every IEEE-754 double.

use serde::Serializer;
use serde_json::value::RawValue;

/// `v` in scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::Error;
    use serde::Serialize;
    if !v.is_finite() {
        return Err(S::Error::custom(format!("non-finite float {v}")));
    }
    let raw = RawValue::from_string(fmt_f64(*v)).map_err(S::Error::custom)?;
    raw.serialize(s)
}

pub fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f64(x, s),
        None => s.serialize_none(),
    }
}

pub fn ser_f64_pair<S: Serializer>(v: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for x in v {
        seq.serialize_element(&F64(*x))?;
    }
    seq.end()
}

/// Newtype that serializes with [`ser_f64`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F64(pub f64);

impl serde::Serialize for F64 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_f64(&self.0, s)
    }
}

impl<'de> serde::Deserialize<'de> for F64 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(F64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17, 0.0] {
            let s = fmt_f64(v);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn json_float_is_raw_and_parses_back() {
        let json = serde_json::to_string(&F64(0.5)).unwrap();
        assert_eq!(json, "5.0000000000000000e-1");
        let back: f64 = serde_json::from_str(&json).unwrap();
        assert_eq!(back, 0.5);
    }
}
