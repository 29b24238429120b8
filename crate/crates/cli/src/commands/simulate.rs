use synergy_core::latency_sim::{compare_frameworks, simulate, summarize, Comparison};

use crate::args::{FrameworkChoice, SimulateArgs};
use crate::commands::Output;
use crate::error::CliError;
use crate::run_config::RunConfig;

pub fn run(cfg: &RunConfig, out: &Output, args: &SimulateArgs) -> Result<(), CliError> {
    let mut p = cfg.core.sim_params()?;
    if let Some(n) = args.n {
        p.n_requests = n;
    }
    if let Some(seed) = args.seed {
        p.rng_seed = seed;
    }
    p.validate().map_err(CliError::config)?;

    let mut rows = Vec::new();
    for f in args.choice().frameworks() {
        let trace = simulate(f, &p).map_err(CliError::config)?;
        let summary = summarize(&trace);
        out.write(&format!("sim_{f}_trace.tsv"), &trace.to_event_log())?;
        out.write(&format!("sim_{f}_summary.kv"), &summary.render_kv())?;
        rows.push(summary);
    }
    let cmp = Comparison { rows };
    if args.choice() == FrameworkChoice::All {
        debug_assert_eq!(cmp, compare_frameworks(&p).expect("params validated"));
        out.write("sim_comparison.txt", &cmp.render_text())?;
        out.write("sim_comparison.kv", &cmp.render_kv())?;
    }
    print!("{}", cmp.render_text());
    Ok(())
}
