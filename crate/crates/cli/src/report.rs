use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;

use chm2u_core::io::{read_certificate, Certificate};

use crate::ReportArgs;

#[derive(Default)]
struct Row {
    defect: Option<String>,
    butson: Option<String>,
    symmetric: Option<String>,
    two_unitary: Option<String>,
    chm: Option<String>,
}

fn mark(pass: bool) -> String {
    if pass {
        "yes".into()
    } else {
        "no".into()
    }
}

fn absorb(row: &mut Row, cert: &Certificate) {
    for check in &cert.checks {
        match check.name.as_str() {
            "defect" => {
                row.defect = Some(match check.value {
                    Some(v) => format!("{}", v as i64),
                    None => "indeterminate".into(),
                });
            }
            "butson" => {
                row.butson = Some(match check.value {
                    Some(q) => format!("BH(36, {})", q as i64),
                    None => "-".into(),
                });
            }
            "symmetric" => {
                row.symmetric = Some(if check.pass {
                    "M = Mᵀ".into()
                } else {
                    "-".into()
                })
            }
            "two-unitary" => row.two_unitary = Some(mark(check.pass)),
            "chm" => row.chm = Some(mark(check.pass)),
            _ => {}
        }
    }
}

/// Aggregates the certificates of a directory into a per-subject summary
/// table. Missing checks render as "not run".
pub fn report(args: ReportArgs) -> Result<bool> {
    let rows = collect(&args.dir)?;
    let na = || "not run".to_string();
    println!(
        "{:<18} {:>14} {:>12} {:>10} {:>12} {:>6}",
        "subject", "defect", "butson", "symmetric", "2-unitarity", "chm"
    );
    for (subject, row) in &rows {
        println!(
            "{:<18} {:>14} {:>12} {:>10} {:>12} {:>6}",
            subject,
            row.defect.clone().unwrap_or_else(na),
            row.butson.clone().unwrap_or_else(na),
            row.symmetric.clone().unwrap_or_else(na),
            row.two_unitary.clone().unwrap_or_else(na),
            row.chm.clone().unwrap_or_else(na),
        );
    }
    Ok(true)
}

fn collect(dir: &Path) -> Result<BTreeMap<String, Row>> {
    let mut rows: BTreeMap<String, Row> = BTreeMap::new();
    if !dir.exists() {
        return Ok(rows);
    }
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().ends_with(".cert.json"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    for path in paths {
        match read_certificate(&path) {
            Ok(cert) => absorb(rows.entry(cert.subject.clone()).or_default(), &cert),
            Err(err) => eprintln!("skipping {}: {err}", path.display()),
        }
    }
    Ok(rows)
}
