use std::collections::HashMap;
use std::fs::File;
use std::sync::Arc;

use synergy_core::netmgmt::{
    bucketize, load_viewing_csv, parse_template, predict_baseline, render_template_line, score, split_train_test,
    Baseline, IntervalDataset, PopularityScore, TemplateEntry, Window, BLOCK_BEGIN, BLOCK_END,
};
use synergy_serve::backend::{Backend, GenerationSettings};

use crate::args::{PopularityArgs, PopularityMethod};
use crate::commands::{runtime, serve, Output};
use crate::error::CliError;
use crate::run_config::RunConfig;

fn block(titles: &[String], interval: u64, labels: &[bool]) -> Result<String, CliError> {
    let mut out = format!("{BLOCK_BEGIN}\n");
    for (title, &label) in titles.iter().zip(labels) {
        let line = render_template_line(&TemplateEntry {
            interval,
            title: title.clone(),
            label,
        })
        .map_err(CliError::data)?;
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(BLOCK_END);
    out.push('\n');
    Ok(out)
}

/// Rolls the backend forward from the last training interval, feeding each
/// prediction back as the next history block. Titles the backend leaves
/// out of its answer are predicted absent.
pub async fn predict_with_backend(
    backend: &dyn Backend,
    gen: &GenerationSettings,
    train: &IntervalDataset,
    horizon: usize,
) -> Result<Vec<Vec<bool>>, CliError> {
    let Some(&last) = train.intervals.last() else {
        return Ok(vec![vec![false; train.titles.len()]; horizon]);
    };
    let index: HashMap<&str, usize> = train.titles.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut state = train.labels[train.len() - 1].clone();
    let mut out = Vec::with_capacity(horizon);
    for step in 0..horizon as u64 {
        let prompt = block(&train.titles, last + step, &state)?;
        let mut req = gen.request(prompt);
        // the answer is a block as long as the prompt
        let needed = req.prompt.split_whitespace().count() as u32;
        req.max_new_tokens = req.max_new_tokens.max(needed);
        let text = backend
            .generate(&req)
            .await
            .map_err(|e| CliError::data(format!("backend: {e}")))?
            .text;
        let entries = parse_template(&text).map_err(|e| CliError::data(format!("backend output: {e}")))?;
        let mut next = vec![false; train.titles.len()];
        for e in entries {
            if let Some(&i) = index.get(e.title.as_str()) {
                next[i] = e.label;
            }
        }
        out.push(next.clone());
        state = next;
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig, out: &Output, args: &PopularityArgs) -> Result<(), CliError> {
    let nm = &cfg.core.netmgmt;
    let hours = args.interval_hours.unwrap_or(nm.interval_hours);
    let top = args.top.unwrap_or(nm.top_k);
    let split = args.split.unwrap_or(nm.split);
    if !(hours > 0.0 && hours.is_finite()) {
        return Err(CliError::config("--interval-hours must be positive"));
    }
    if !(nm.window_days > 0.0 && nm.window_days.is_finite()) {
        return Err(CliError::config("netmgmt.window_days must be positive"));
    }
    let file = File::open(&args.csv).map_err(|e| CliError::data(format!("{}: {e}", args.csv.display())))?;
    let records = load_viewing_csv(file, &nm.timestamp_column, &nm.title_column).map_err(CliError::data)?;
    let interval_s = (hours * 3600.0).round() as i64;
    let window = Window::Last((nm.window_days * 86_400.0).round() as i64);
    let ds = bucketize(&records, interval_s, top, window).map_err(CliError::data)?;
    let (train, test) = split_train_test(&ds, split).map_err(CliError::data)?;

    let methods: Vec<PopularityMethod> = match args.method {
        PopularityMethod::All => vec![PopularityMethod::Frequency, PopularityMethod::Markov1, PopularityMethod::Backend],
        m => vec![m],
    };
    let mut results: Vec<(&str, PopularityScore)> = Vec::new();
    for m in methods {
        let (name, pred) = match m {
            PopularityMethod::Frequency => ("frequency", predict_baseline(&train, Baseline::Frequency, test.len())),
            PopularityMethod::Markov1 => ("markov1", predict_baseline(&train, Baseline::Markov1, test.len())),
            PopularityMethod::Backend => {
                let backend: Arc<dyn Backend> = serve::backend(cfg, args.backend.unwrap_or(cfg.edge.backend))?;
                let pred = runtime()?.block_on(predict_with_backend(&*backend, &cfg.generation, &train, test.len()))?;
                ("backend", pred)
            }
            PopularityMethod::All => unreachable!("expanded above"),
        };
        results.push((name, score(&pred, &test.labels).map_err(CliError::data)?));
    }

    let mut kv = format!(
        "interval_hours={hours}\ntop_k={}\nsplit={split}\nintervals={}\ntrain_intervals={}\ntest_intervals={}\n",
        ds.titles.len(),
        ds.len(),
        train.len(),
        test.len()
    );
    let mut text = format!(
        "popularity prediction: {} intervals of {hours} h, top {} titles, {} train / {} test\n\n{:<10} {:>9}\n",
        ds.len(),
        ds.titles.len(),
        train.len(),
        test.len(),
        "method",
        "accuracy"
    );
    for (name, s) in &results {
        kv.push_str(&format!("{name}.accuracy={:.4}\n", s.accuracy));
        text.push_str(&format!("{name:<10} {:>9.4}\n", s.accuracy));
    }
    text.push_str(&format!("\n{:<30}", "per-title accuracy"));
    for (name, _) in &results {
        text.push_str(&format!(" {name:>9}"));
    }
    text.push('\n');
    for (i, title) in ds.titles.iter().enumerate() {
        text.push_str(&format!("  {title:<28}"));
        for (_, s) in &results {
            text.push_str(&format!(" {:>9.4}", s.per_title[i]));
        }
        text.push('\n');
    }
    out.write("popularity_report.txt", &text)?;
    out.write("popularity_report.kv", &kv)?;
    print!("{text}");
    Ok(())
}
