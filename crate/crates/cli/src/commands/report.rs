use std::fmt::Write;

use anyhow::Result;
use myopic_core::eval::markdown_table;
use myopic_core::EvalReport;

use super::eval::read_report;
use super::write_output;
use crate::args::ReportArgs;
use crate::exit::InputError;

fn csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("run,group,label,ndcg10,n\n");
    for r in reports {
        for (i, g) in r.groups.iter().enumerate() {
            writeln!(out, "{},{i},{},{:.6},{}", r.run_tag, g.label, g.ndcg, g.query_count).unwrap();
        }
    }
    out
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let reports = args.inputs.iter().map(|p| read_report(p)).collect::<Result<Vec<_>>>()?;
    let text = match args.format.as_str() {
        "markdown" | "markdown-table" | "md" => markdown_table(&reports)?,
        "csv" => csv(&reports),
        "json" => serde_json::to_string_pretty(&reports)? + "\n",
        other => return Err(InputError::new(format!("unknown format {other:?}; expected markdown, csv or json")).into()),
    };
    match &args.out {
        Some(path) => write_output(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
