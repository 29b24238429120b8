//! Prompt layouts the edge sends to its completer. The mock backend parses
//! them back; a real model just reads them as text.

pub const INTENT_HEADER: &str = "### intent\n";

const REGION: &str = "### region\n";
const FACTS: &str = "\n### facts\n";
const REQUEST: &str = "\n### request\n";

/// Asks the completer to rewrite `request` using local `facts`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnhancementPrompt {
    pub region: String,
    pub facts: Vec<String>,
    pub request: String,
}

impl EnhancementPrompt {
    pub fn render(&self) -> String {
        let mut out = String::from(REGION);
        out.push_str(&self.region);
        out.push_str(FACTS);
        for f in &self.facts {
            out.push_str("- ");
            out.push_str(f);
            out.push('\n');
        }
        out.push_str(REQUEST.trim_start_matches('\n'));
        out.push_str(&self.request);
        out
    }

    /// Inverse of [`render`](Self::render); `None` for any other text.
    pub fn parse(text: &str) -> Option<Self> {
        let rest = text.strip_prefix(REGION)?;
        let (region, rest) = rest.split_once(FACTS.trim_end_matches('\n'))?;
        let rest = rest.strip_prefix('\n')?;
        let (facts_block, request) = match rest.strip_prefix(REQUEST.trim_start_matches('\n')) {
            Some(req) => ("", req),
            None => rest.split_once(REQUEST)?,
        };
        let facts = facts_block
            .lines()
            .map(|l| l.strip_prefix("- ").map(str::to_string))
            .collect::<Option<Vec<_>>>()?;
        if region.contains('\n') {
            return None;
        }
        Some(EnhancementPrompt {
            region: region.to_string(),
            facts,
            request: request.to_string(),
        })
    }
}

pub fn intent_prompt(utterance: &str) -> String {
    format!("{INTENT_HEADER}{utterance}")
}
