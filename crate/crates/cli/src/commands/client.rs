use std::time::Duration;

use synergy_serve::client::{parse_prompt_file, send_prompts, ClientError};

use crate::args::ClientArgs;
use crate::commands::{read_input, runtime, Output};
use crate::error::CliError;
use crate::run_config::RunConfig;

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r")
}

pub fn run(cfg: &RunConfig, out: &Output, args: &ClientArgs) -> Result<(), CliError> {
    let prompts = parse_prompt_file(&read_input(&args.send)?, &args.bs_id);
    if prompts.is_empty() {
        return Err(CliError::data(format!("{}: no prompts", args.send.display())));
    }
    let addr = args.edge.clone().unwrap_or_else(|| cfg.edge.listen.clone());
    let timeout = args.timeout.unwrap_or(cfg.edge.request_timeout_s);
    if !(timeout > 0.0 && timeout.is_finite()) {
        return Err(CliError::config("--timeout must be positive"));
    }
    let responses = runtime()?
        .block_on(send_prompts(&addr, &prompts, Duration::from_secs_f64(timeout)))
        .map_err(|e| match e {
            ClientError::Protocol(_) => CliError::data(e),
            _ => CliError::transport(e),
        })?;

    let mut tsv = String::from("# request_id\tbs_id\tterminated_at_edge\ttext\n");
    let mut errors = 0;
    for r in &responses {
        errors += usize::from(r.is_error());
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.request_id,
            escape(&r.origin_bs_id),
            r.terminated_at_edge,
            escape(&r.text)
        ));
    }
    out.write("client_responses.tsv", &tsv)?;
    println!("{} responses ({} errors)", responses.len(), errors);
    Ok(())
}
