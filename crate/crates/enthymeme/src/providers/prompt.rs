//! The generation prompt and the parser for its two-line answer format.

use super::{ChainKind, GenerationRequest, ProviderError, Result};

const TEMPLATE: &str = include_str!("../../data/prompt.txt");

fn count_word(steps: u8) -> &'static str {
    match steps {
        1 => "one",
        2 => "two",
        _ => "three",
    }
}

/// The prompt text for `req`. Both chains are always requested; the caller
/// keeps the one named by `req.kind`.
pub fn render_prompt(req: &GenerationRequest) -> String {
    TEMPLATE
        .replace("{count}", count_word(req.steps))
        .replace("{premise}", &req.premise)
        .replace("{claim}", &req.claim)
}

/// Sentences split on full stops, each ending with one.
pub fn split_sentences(chain: &str) -> Vec<String> {
    chain
        .split('.')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| format!("{s}."))
        .collect()
}

/// Extracts the chain of the requested kind from a model answer. Both the
/// `Helpful:` and the `Non-Helpful:` line must be present and the chain
/// must contain exactly `steps` sentences.
pub fn parse_response(text: &str, steps: u8, kind: ChainKind) -> Result<Vec<String>> {
    let line = |prefix: &str| {
        text.lines()
            .map(str::trim)
            .find_map(|l| l.strip_prefix(prefix))
            .map(str::trim)
            .ok_or_else(|| ProviderError::UnparseableResponse(format!("no {prefix:?} line")))
    };
    let helpful = line("Helpful:")?;
    let unhelpful = line("Non-Helpful:")?;
    let sentences = split_sentences(match kind {
        ChainKind::Helpful => helpful,
        ChainKind::Unhelpful => unhelpful,
    });
    if sentences.len() != steps as usize {
        return Err(ProviderError::UnparseableResponse(format!(
            "{kind} chain has {} sentences, expected {steps}",
            sentences.len()
        )));
    }
    Ok(sentences)
}
