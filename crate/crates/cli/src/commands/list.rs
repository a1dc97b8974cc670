use heraldiq_core::schemes::{builtin_registry, scheme_slots, SchemeStatus};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{cell, envelope, render, Csv, Format};
use crate::Common;

#[derive(Serialize)]
struct Entry {
    name: String,
    kind: &'static str,
    photons: usize,
    modes: usize,
    expected_success: Option<String>,
    status: Option<SchemeStatus>,
    provenance: Option<String>,
    file: Option<String>,
}

/// Built-in schemes followed by the slots that take external scheme files.
pub fn execute(common: &Common) -> CliResult<String> {
    let mut entries: Vec<Entry> = builtin_registry()
        .into_iter()
        .map(|s| Entry {
            photons: s.photons(),
            modes: s.modes,
            expected_success: s.expected_success.clone(),
            status: Some(s.status),
            provenance: Some(s.provenance.clone()),
            name: s.name,
            kind: "builtin",
            file: None,
        })
        .collect();
    for slot in scheme_slots() {
        entries.push(Entry {
            name: slot.name.into(),
            kind: "slot",
            photons: slot.photons,
            modes: slot.modes,
            expected_success: Some(slot.success.into()),
            status: None,
            provenance: None,
            file: Some(slot.file.into()),
        });
    }
    let mut csv = Csv::new(vec!["name", "kind", "photons", "modes", "expected_success", "provenance", "file"]);
    for e in &entries {
        csv.push(vec![
            e.name.clone(),
            e.kind.into(),
            e.photons.to_string(),
            e.modes.to_string(),
            cell(e.expected_success.as_ref()),
            cell(e.provenance.as_ref()),
            cell(e.file.as_ref()),
        ]);
    }
    #[derive(Serialize)]
    struct Report {
        schemes: Vec<Entry>,
    }
    render(common.format.unwrap_or(Format::Json), &envelope("list", Report { schemes: entries })?, &csv)
}
