use crate::args::FrameworkChoice;
use crate::commands::Output;
use crate::error::CliError;
use crate::run_config::RunConfig;

pub fn run(cfg: &RunConfig, out: &Output, choice: FrameworkChoice) -> Result<(), CliError> {
    let report = cfg.core.cost_report(&choice.frameworks())?;
    let text = report.render_text();
    out.write("cost_report.txt", &text)?;
    out.write("cost_report.kv", &report.render_kv())?;
    print!("{text}");
    Ok(())
}
