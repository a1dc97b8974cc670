use std::path::PathBuf;

use clap::Args;
use heraldiq_core::schemes::{comparison_tables, ValueSource};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{cell, cell_num, envelope, render, Csv, Format};
use crate::Common;

#[derive(Args, Debug)]
pub struct TablesArgs {
    /// Adds a column with the success after multiplexing N attempts.
    #[arg(long, value_name = "N")]
    pub multiplex: Option<u64>,
    /// Directory searched for scheme files of externally published circuits.
    #[arg(long, value_name = "DIR")]
    pub scheme_dir: Option<PathBuf>,
}

fn source_name(s: ValueSource) -> &'static str {
    match s {
        ValueSource::Simulated => "simulated",
        ValueSource::Formula => "formula",
        ValueSource::External => "external",
        ValueSource::NotProvided => "not_provided",
    }
}

pub fn execute(args: &TablesArgs, common: &Common) -> CliResult<String> {
    let rows = comparison_tables(args.multiplex, args.scheme_dir.as_deref())?;
    let mut csv = Csv::new(vec![
        "table", "scheme", "photons", "modes", "detector", "reported", "source", "value", "exact", "multiplexed",
    ]);
    for r in &rows {
        csv.push(vec![
            r.table.clone(),
            r.scheme.clone(),
            cell(r.photons),
            cell(r.modes.as_ref()),
            r.detector.clone(),
            r.reported.clone(),
            source_name(r.source).into(),
            cell_num(r.value),
            cell(r.exact.as_ref()),
            cell_num(r.multiplexed),
        ]);
    }
    #[derive(Serialize)]
    struct Report<'a> {
        multiplex: Option<u64>,
        rows: &'a [heraldiq_core::schemes::TableRow],
    }
    let json = envelope(
        "tables",
        Report {
            multiplex: args.multiplex,
            rows: &rows,
        },
    )?;
    render(common.format.unwrap_or(Format::Csv), &json, &csv)
}
