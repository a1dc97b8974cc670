use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};

/// Closed-form success probabilities of schemes too large to simulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Formula {
    /// d-dimensional Bell state from symmetric multiports: `d·2^{d−1}/3^{2d−1}`.
    BellSms { d: u32 },
    /// The same with bleeding: `d(2 + 2^{d−1})/3^d`.
    BellSmsBled { d: u32 },
    /// GHZ from boson subtractors: `1/2^{2N}`.
    SubtractorGhz { n: u32 },
    /// With feed-forward: `1/2^{2N−1}`.
    SubtractorGhzFeedForward { n: u32 },
    /// W state from boson subtractors: `1/(N·2^{2N+1})`.
    SubtractorW { n: u32 },
    /// With feed-forward: `1/2^{2N}`.
    SubtractorWFeedForward { n: u32 },
    /// GHZ from 4-mode multiports: `(1/2)^{2N−1}` for even N, `(1/2)^{2N}` for odd N.
    SmsGhz { n: u32 },
    /// d-dimensional three-party GHZ: `d·3^{d−1}/2^{5d−3}`.
    QuditGhz { d: u32 },
    /// The same with bleeding: `d·3^{d−1}/2^{3d−1}`.
    QuditGhzBled { d: u32 },
    /// GHZ from repeated unit cells: `1/2^{2n−1}`.
    CellGhz { n: u32 },
    /// The same with bleeding: `1/2^{n−1}`.
    CellGhzBled { n: u32 },
    /// Three-photon GHZ from a 25-mode DFT, reported only as `~10⁻¹⁰`.
    DftGhz,
}

/// Names accepted by [`formula`], with their parameter.
pub const FORMULA_NAMES: &[(&str, &str)] = &[
    ("bell-sms", "d"),
    ("bell-sms-bled", "d"),
    ("subtractor-ghz", "n"),
    ("subtractor-ghz-feed-forward", "n"),
    ("subtractor-w", "n"),
    ("subtractor-w-feed-forward", "n"),
    ("sms-ghz", "n"),
    ("qudit-ghz", "d"),
    ("qudit-ghz-bled", "d"),
    ("cell-ghz", "n"),
    ("cell-ghz-bled", "n"),
    ("dft-ghz", "-"),
];

/// A formula's value: exact when the formula is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaValue {
    #[serde(with = "rational_opt")]
    pub exact: Option<Rational>,
    pub value: f64,
}

mod rational_opt {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&exact::display(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| exact::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn two_pow(e: i64) -> Rational {
    exact::pow(&exact::int(2), e)
}

fn at_least(name: &str, v: u32, min: u32) -> Result<()> {
    if v < min {
        return Err(Error::invalid(format!("{name} must be at least {min}, got {v}")));
    }
    Ok(())
}

impl Formula {
    pub fn parse(name: &str, param: Option<u32>) -> Result<Self> {
        let p = || {
            param.ok_or_else(|| Error::invalid(format!("formula {name} needs a parameter")))
        };
        Ok(match name {
            "bell-sms" => Formula::BellSms { d: p()? },
            "bell-sms-bled" => Formula::BellSmsBled { d: p()? },
            "subtractor-ghz" => Formula::SubtractorGhz { n: p()? },
            "subtractor-ghz-feed-forward" => Formula::SubtractorGhzFeedForward { n: p()? },
            "subtractor-w" => Formula::SubtractorW { n: p()? },
            "subtractor-w-feed-forward" => Formula::SubtractorWFeedForward { n: p()? },
            "sms-ghz" => Formula::SmsGhz { n: p()? },
            "qudit-ghz" => Formula::QuditGhz { d: p()? },
            "qudit-ghz-bled" => Formula::QuditGhzBled { d: p()? },
            "cell-ghz" => Formula::CellGhz { n: p()? },
            "cell-ghz-bled" => Formula::CellGhzBled { n: p()? },
            "dft-ghz" => Formula::DftGhz,
            _ => return Err(Error::invalid(format!("unknown formula {name:?}"))),
        })
    }

    pub fn evaluate(&self) -> Result<FormulaValue> {
        let exact = |r: Rational| FormulaValue {
            value: exact::to_f64(&r),
            exact: Some(r),
        };
        Ok(match *self {
            Formula::BellSms { d } => {
                at_least("d", d, 2)?;
                let d = d as i64;
                exact(exact::int(d) * two_pow(d - 1) / exact::pow(&exact::int(3), 2 * d - 1))
            }
            Formula::BellSmsBled { d } => {
                at_least("d", d, 2)?;
                let d = d as i64;
                exact(exact::int(d) * (exact::int(2) + two_pow(d - 1)) / exact::pow(&exact::int(3), d))
            }
            Formula::SubtractorGhz { n } => {
                at_least("n", n, 2)?;
                exact(two_pow(-2 * n as i64))
            }
            Formula::SubtractorGhzFeedForward { n } => {
                at_least("n", n, 2)?;
                exact(two_pow(-(2 * n as i64 - 1)))
            }
            Formula::SubtractorW { n } => {
                at_least("n", n, 2)?;
                exact(two_pow(-(2 * n as i64 + 1)) / exact::int(n as i64))
            }
            Formula::SubtractorWFeedForward { n } => {
                at_least("n", n, 2)?;
                exact(two_pow(-2 * n as i64))
            }
            Formula::SmsGhz { n } => {
                at_least("n", n, 2)?;
                let n = n as i64;
                exact(if n % 2 == 0 { two_pow(-(2 * n - 1)) } else { two_pow(-2 * n) })
            }
            Formula::QuditGhz { d } => {
                at_least("d", d, 2)?;
                let d = d as i64;
                exact(exact::int(d) * exact::pow(&exact::int(3), d - 1) / two_pow(5 * d - 3))
            }
            Formula::QuditGhzBled { d } => {
                at_least("d", d, 2)?;
                let d = d as i64;
                exact(exact::int(d) * exact::pow(&exact::int(3), d - 1) / two_pow(3 * d - 1))
            }
            Formula::CellGhz { n } => {
                at_least("n", n, 2)?;
                exact(two_pow(-(2 * n as i64 - 1)))
            }
            Formula::CellGhzBled { n } => {
                at_least("n", n, 2)?;
                exact(two_pow(-(n as i64 - 1)))
            }
            Formula::DftGhz => FormulaValue {
                exact: None,
                value: 1e-10,
            },
        })
    }
}

/// Evaluates a named formula.
pub fn formula(name: &str, param: Option<u32>) -> Result<FormulaValue> {
    Formula::parse(name, param)?.evaluate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use exact::ratio;

    fn ex(name: &str, p: u32) -> Rational {
        formula(name, Some(p)).unwrap().exact.unwrap()
    }

    #[test]
    fn reported_values() {
        assert_eq!(ex("bell-sms", 2), ratio(4, 27));
        assert_eq!(ex("bell-sms", 3), ratio(4, 81));
        assert_eq!(ex("bell-sms-bled", 2), ratio(8, 9));
        assert_eq!(ex("subtractor-ghz", 3), ratio(1, 64));
        assert_eq!(ex("subtractor-ghz-feed-forward", 3), ratio(1, 32));
        assert_eq!(ex("cell-ghz", 3), ratio(1, 32));
        assert_eq!(ex("cell-ghz-bled", 3), ratio(1, 4));
        assert_eq!(ex("subtractor-w", 3), ratio(1, 384));
        assert_eq!(ex("subtractor-w-feed-forward", 3), ratio(1, 64));
        assert_eq!(ex("sms-ghz", 3), ratio(1, 64));
        assert_eq!(ex("sms-ghz", 4), ratio(1, 128));
        assert_eq!(ex("qudit-ghz", 2), ratio(3, 64));
        assert_eq!(ex("qudit-ghz-bled", 2), ratio(3, 16));
    }

    #[test]
    fn every_name_parses() {
        for (name, p) in FORMULA_NAMES {
            let param = (*p != "-").then_some(3);
            let v = formula(name, param).unwrap();
            assert!(v.value > 0.0 && v.value <= 1.0, "{name}");
        }
        assert!(formula("bell-sms", None).is_err());
        assert!(formula("bell-sms", Some(1)).is_err());
        assert!(formula("nope", Some(2)).is_err());
    }

    #[test]
    fn serializes_as_fraction() {
        let v = formula("bell-sms", Some(2)).unwrap();
        let j = serde_json::to_string(&v).unwrap();
        assert!(j.contains("\"4/27\""));
        let back: FormulaValue = serde_json::from_str(&j).unwrap();
        assert_eq!(back, v);
    }
}
