//! Fixed-precision text output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Significant digits of every emitted number.
pub const SIG_DIGITS: usize = 6;

/// `x` rounded to six significant digits, printed without trailing zeros.
/// Plain notation for 1e-4 ≤ |x| < 1e6, scientific otherwise.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mant.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// `x` rounded to six significant digits, as a number.
pub fn round6(x: f64) -> f64 {
    fmt6(x).parse().unwrap_or(x)
}

/// Flat JSON object with sorted keys.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct FlatJson(BTreeMap<String, serde_json::Value>);

impl FlatJson {
    pub fn num(&mut self, key: impl Into<String>, x: f64) -> &mut Self {
        let v = serde_json::Number::from_f64(round6(x))
            .map_or(serde_json::Value::Null, serde_json::Value::Number);
        self.0.insert(key.into(), v);
        self
    }

    pub fn int(&mut self, key: impl Into<String>, x: u64) -> &mut Self {
        self.0.insert(key.into(), x.into());
        self
    }

    pub fn text(&mut self, key: impl Into<String>, s: impl Into<String>) -> &mut Self {
        self.0
            .insert(key.into(), serde_json::Value::String(s.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&serde_json::Value> {
        self.0.get(key)
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.0).expect("plain values serialize");
        s.push('\n');
        s
    }
}

/// CSV with a header row and numeric cells.
pub struct Csv {
    out: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            out: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[f64]) {
        self.text_row(&cells.iter().map(|&x| fmt6(x)).collect::<Vec<_>>());
    }

    pub fn text_row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        let _ = writeln!(self.out, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(1345.4178), "1345.42");
        assert_eq!(fmt6(20.47287), "20.4729");
        assert_eq!(fmt6(2.0e-5), "2e-5");
        assert_eq!(fmt6(-0.00123456789), "-0.00123457");
        assert_eq!(fmt6(123456789.0), "1.23457e8");
        assert_eq!(fmt6(999999.7), "1e6");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(-1e-30), "-1e-30");
        assert_eq!(round6(1.0 / 3.0), 0.333333);
    }

    #[test]
    fn json_is_sorted() {
        let mut j = FlatJson::default();
        j.num("b", 2.0).num("a", 1.0 / 3.0).text("c", "x");
        assert_eq!(
            j.render(),
            "{\n  \"a\": 0.333333,\n  \"b\": 2.0,\n  \"c\": \"x\"\n}\n"
        );
    }
}
