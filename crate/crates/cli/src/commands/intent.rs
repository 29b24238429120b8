use synergy_core::netmgmt::{
    extract_intent_rules, parse_intent_dataset, parse_keyword_list, render_keyword_list, score_intents, KeywordSet,
};
use synergy_serve::backend::intent_prompt;

use crate::args::{Extractor, IntentArgs};
use crate::commands::{read_input, runtime, serve, Output};
use crate::error::CliError;
use crate::run_config::RunConfig;

fn extract_all(cfg: &RunConfig, args: &IntentArgs, utterances: &[&str]) -> Result<Vec<KeywordSet>, CliError> {
    match args.extractor {
        Extractor::Rules => Ok(utterances.iter().map(|u| extract_intent_rules(u)).collect()),
        Extractor::Backend => {
            let backend = serve::backend(cfg, args.backend.unwrap_or(cfg.edge.backend))?;
            let reqs: Vec<_> = utterances.iter().map(|u| cfg.generation.request(intent_prompt(u))).collect();
            let results = runtime()?
                .block_on(backend.generate_batch(&reqs))
                .map_err(|e| CliError::data(format!("backend: {e}")))?;
            Ok(results.iter().map(|r| parse_keyword_list(&r.text)).collect())
        }
    }
}

pub fn run(cfg: &RunConfig, out: &Output, args: &IntentArgs) -> Result<(), CliError> {
    if let Some(u) = &args.utterance {
        let kw = extract_all(cfg, args, &[u.as_str()])?;
        println!("{}", render_keyword_list(&kw[0]));
        return Ok(());
    }
    let path = args.dataset.as_ref().expect("clap requires --dataset without --utterance");
    let samples = parse_intent_dataset(&read_input(path)?).map_err(CliError::data)?;
    if samples.is_empty() {
        return Err(CliError::data(format!("{}: no samples", path.display())));
    }
    let utterances: Vec<&str> = samples.iter().map(|s| s.utterance.as_str()).collect();
    let pred = extract_all(cfg, args, &utterances)?;
    let gold: Vec<KeywordSet> = samples.iter().map(|s| s.keywords.clone()).collect();
    let s = score_intents(&pred, &gold).map_err(CliError::data)?;

    let extractor = match args.extractor {
        Extractor::Rules => "rules",
        Extractor::Backend => "backend",
    };
    let mut text = format!(
        "intent extraction ({extractor}) on {} samples\nexact match {:.4}\nprecision   {:.4}\nrecall      {:.4}\nf1          {:.4}\n",
        s.samples, s.exact_match, s.precision, s.recall, s.f1
    );
    let misses: Vec<usize> = (0..samples.len()).filter(|&i| pred[i] != gold[i]).collect();
    if !misses.is_empty() {
        text.push_str(&format!("\n{} mismatches\n", misses.len()));
        for i in misses {
            text.push_str(&format!(
                "  {}\n    want {}\n    got  {}\n",
                samples[i].utterance,
                render_keyword_list(&gold[i]),
                render_keyword_list(&pred[i])
            ));
        }
    }
    out.write("intent_report.txt", &text)?;
    out.write("intent_report.kv", &format!("extractor={extractor}\n{}", s.render_kv()))?;
    print!("{text}");
    Ok(())
}
