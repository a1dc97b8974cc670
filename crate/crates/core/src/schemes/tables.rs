use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{builtin, formula, load_slot, run, scheme_slots, SchemeDefinition};
use crate::enhance::multiplex;
use crate::error::Result;
use crate::exact;

/// Where a table value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSource {
    /// Full simulation of a runnable scheme.
    Simulated,
    /// Closed-form expression.
    Formula,
    /// Published value, circuit not available here.
    External,
    /// No value was published.
    NotProvided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// `bell`, `noon` or `ghz`.
    pub table: String,
    pub scheme: String,
    pub photons: Option<usize>,
    pub modes: Option<String>,
    pub detector: String,
    /// The published success probability as written.
    pub reported: String,
    pub source: ValueSource,
    pub value: Option<f64>,
    pub exact: Option<String>,
    /// `1 − (1 − p)^N` for the requested N.
    pub multiplexed: Option<f64>,
}

struct Spec {
    table: &'static str,
    scheme: &'static str,
    photons: Option<usize>,
    modes: Option<&'static str>,
    detector: &'static str,
    reported: &'static str,
    how: How,
}

enum How {
    Builtin(&'static str),
    Slot(&'static str),
    Formula(&'static str, Option<u32>),
    Reported(Option<&'static str>),
}

const fn row(
    table: &'static str,
    scheme: &'static str,
    photons: Option<usize>,
    modes: Option<&'static str>,
    detector: &'static str,
    reported: &'static str,
    how: How,
) -> Spec {
    Spec {
        table,
        scheme,
        photons,
        modes,
        detector,
        reported,
        how,
    }
}

fn specs() -> Vec<Spec> {
    use How::*;
    vec![
        row("bell", "Barz 2010", Some(6), Some("8"), "threshold", "varies with splitter transmission", Reported(None)),
        row("bell", "Wagenknecht 2010", Some(6), Some("14"), "threshold", "varies with splitter transmission", Reported(None)),
        row("bell", "Carolan 2015 (4P6M)", Some(4), Some("6"), "threshold", "2/27", Slot("bell-4p6m")),
        row("bell", "Bartolucci 2021 (4P8M)", Some(4), Some("8"), "threshold", "3/16", Slot("bell-4p8m")),
        row("bell", "Paesani 2021 (5P5M)", Some(5), Some("5"), "pnr", "12/125", Builtin("bell-5p5m")),
        row("bell", "Bhatti 2024 (6P6M)", Some(6), Some("6"), "pnr", "4/27", Builtin("bell-6p6m")),
        row("bell", "Bhatti 2024 d=2 formula", Some(6), Some("6"), "pnr", "4/27", Formula("bell-sms", Some(2))),
        row("bell", "Bhatti 2024 d=3 formula", Some(12), None, "pnr", "d·2^(d-1)/3^(2d-1)", Formula("bell-sms", Some(3))),
        row("bell", "Bhatti 2024 d=2 with bleeding", Some(6), Some("6"), "pnr", "d(2+2^(d-1))/3^d", Formula("bell-sms-bled", Some(2))),
        row("bell", "Fldzhyan 2021 (4P5M)", Some(4), Some("5"), "pnr", "1/9", Slot("bell-4p5m")),
        row("bell", "Fldzhyan 2021 with feed-forward (4P6M)", Some(4), Some("6"), "threshold", "2/27", Reported(Some("2/27"))),
        row("noon", "HOM NOON(2)", Some(2), Some("2"), "none", "1", Builtin("hom-noon2")),
        row("noon", "Fiurasek 2002 (N=4)", Some(4), Some("N+2 (N even), 2N+2 (N odd)"), "threshold", "3/16", Reported(Some("3/16"))),
        row("noon", "Lee 2012 (N=4)", Some(4), Some("4"), "threshold", "3/16", Reported(Some("3/16"))),
        row("noon", "Pryde 2003", None, Some("N"), "threshold", "not provided", Reported(None)),
        row("noon", "Hofmann 2004 (N=4)", Some(4), Some("2N"), "threshold", "3/256", Reported(Some("3/256"))),
        row("noon", "VanMeter 2007 (N=5)", Some(6), Some("4"), "pnr", "5.64%", Reported(Some("0.0564"))),
        row("noon", "Lee 2002 (N=4)", Some(6), Some("4"), "pnr", "3/64", Reported(Some("3/64"))),
        row("noon", "Zou 2002", None, Some("N/2+2"), "pnr", "not provided", Reported(None)),
        row("noon", "Kok 2002", None, Some("N+2 (N even), 2N+2 (N odd)"), "pnr", "not provided", Reported(None)),
        row("ghz", "Varnava 2008", Some(6), Some("12"), "threshold", "1/64", Slot("ghz-6p12m")),
        row("ghz", "Gubarev 2020", Some(6), Some("10"), "threshold", "1/54", Slot("ghz-6p10m")),
        row("ghz", "Walther 2007", Some(12), Some("24"), "threshold", "N/A", Reported(None)),
        row("ghz", "Niu 2009", Some(10), Some("16"), "pnr", "1/16", Reported(Some("1/16"))),
        row("ghz", "Krenn 2021", Some(10), Some("13"), "threshold", "N/A", Reported(None)),
        row("ghz", "Chin 2024", Some(6), Some("12"), "threshold", "1/64", Formula("subtractor-ghz", Some(3))),
        row("ghz", "Chin 2024 with feed-forward", Some(6), Some("12"), "threshold", "1/32", Formula("subtractor-ghz-feed-forward", Some(3))),
        row("ghz", "Chin 2024 W state", Some(6), Some("12"), "threshold", "1/(N·2^(2N+1))", Formula("subtractor-w", Some(3))),
        row("ghz", "Paesani 2021 (25 photons)", Some(25), Some("25"), "pnr", "~1e-10", Formula("dft-ghz", None)),
        row("ghz", "Bhatti 2024", Some(8), Some("8"), "threshold", "1/64", Formula("sms-ghz", Some(3))),
        row("ghz", "Bhatti 2024 qudit d=2", Some(8), None, "pnr", "d·3^(d-1)/2^(5d-3)", Formula("qudit-ghz", Some(2))),
        row("ghz", "Bartolucci 2021", Some(6), Some("12"), "threshold", "1/32", Formula("cell-ghz", Some(3))),
        row("ghz", "Bartolucci 2021 with bleeding", Some(6), Some("12"), "threshold", "1/2^(n-1)", Formula("cell-ghz-bled", Some(3))),
    ]
}

fn simulated(s: &SchemeDefinition) -> Result<(ValueSource, Option<f64>, Option<String>)> {
    let r = run(s, None)?;
    Ok((
        ValueSource::Simulated,
        Some(r.success_prob),
        exact::rational_string(r.success_prob),
    ))
}

/// Regenerates the comparison tables: simulated where a circuit is available
/// (built in, or found in `scheme_dir`), closed form where one exists and the
/// published value otherwise.
pub fn comparison_tables(multiplex_n: Option<u64>, scheme_dir: Option<&Path>) -> Result<Vec<TableRow>> {
    let slots = scheme_slots();
    let mut rows = Vec::new();
    for spec in specs() {
        let (source, value, ex) = match spec.how {
            How::Builtin(name) => simulated(&builtin(name).expect("builtin exists"))?,
            How::Slot(name) => {
                let slot = slots.iter().find(|s| s.name == name).expect("slot exists");
                let found = match scheme_dir {
                    Some(dir) => load_slot(slot, dir)?,
                    None => None,
                }
                .or_else(|| builtin(name));
                match found {
                    Some(s) => simulated(&s)?,
                    None => {
                        let r = exact::parse(slot.success)?;
                        (ValueSource::External, Some(exact::to_f64(&r)), Some(exact::display(&r)))
                    }
                }
            }
            How::Formula(name, p) => {
                let v = formula(name, p)?;
                (ValueSource::Formula, Some(v.value), v.exact.as_ref().map(exact::display))
            }
            How::Reported(Some(v)) => match exact::parse(v) {
                Ok(r) => (ValueSource::External, Some(exact::to_f64(&r)), Some(exact::display(&r))),
                Err(_) => (ValueSource::External, v.parse().ok(), None),
            },
            How::Reported(None) => (ValueSource::NotProvided, None, None),
        };
        rows.push(TableRow {
            table: spec.table.into(),
            scheme: spec.scheme.into(),
            photons: spec.photons,
            modes: spec.modes.map(String::from),
            detector: spec.detector.into(),
            reported: spec.reported.into(),
            source,
            value,
            exact: ex,
            multiplexed: match (multiplex_n, value) {
                (Some(n), Some(p)) => Some(multiplex(p, n)),
                _ => None,
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_match_reported_values() {
        let rows = comparison_tables(Some(10), None).unwrap();
        let get = |s: &str| rows.iter().find(|r| r.scheme == s).unwrap();
        assert_eq!(get("Paesani 2021 (5P5M)").exact.as_deref(), Some("12/125"));
        assert_eq!(get("Paesani 2021 (5P5M)").source, ValueSource::Simulated);
        assert_eq!(get("Bhatti 2024 (6P6M)").exact.as_deref(), Some("4/27"));
        assert_eq!(get("Bhatti 2024 d=2 formula").exact.as_deref(), Some("4/27"));
        assert_eq!(get("Chin 2024").exact.as_deref(), Some("1/64"));
        assert_eq!(get("Bhatti 2024").exact.as_deref(), Some("1/64"));
        assert_eq!(get("Bartolucci 2021 (4P8M)").source, ValueSource::External);
        let m = get("Chin 2024").multiplexed.unwrap();
        assert!((m - (1.0 - (63.0f64 / 64.0).powi(10))).abs() < 1e-12);
        for r in &rows {
            if let (Some(v), Some(e)) = (r.value, &r.exact) {
                assert!((exact::to_f64(&exact::parse(e).unwrap()) - v).abs() < 1e-9, "{}", r.scheme);
            }
        }
    }
}
