use async_trait::async_trait;
use sha2::{Digest, Sha256};

use super::{CompletionBackend, CompletionRequest, CompletionResponse, LlmError, Usage};

const OPENERS: [&str; 8] = [
    "Good start",
    "You are on the right track",
    "Nice progress so far",
    "Take a look at your code",
    "Think about the input",
    "Consider what your program prints",
    "Look at the loop you wrote",
    "Check your variables",
];

const ACTIONS: [&str; 8] = [
    "now try to read all the input values first",
    "try to keep track of the previous value",
    "think about which condition tells you a new group starts",
    "try converting the amounts to a single unit",
    "consider using a counter that you update inside the loop",
    "make sure the output has exactly the requested format",
    "try splitting the problem into two smaller steps",
    "think about what should happen at the end of the input",
];

const CLOSINGS: [&str; 6] = [
    "Test it with the example from the description",
    "Print intermediate values if you are unsure",
    "Try it on a small input first",
    "Compare your output with the expected output",
    "Think about an edge case as well",
    "Run your program to see what happens",
];

/// Deterministic stand-in for a completion endpoint.
///
/// The reply is a function of `(seed, prompt_text, temperature)` only: one or
/// two sentences picked from fixed phrase lists, with a short digest tag so
/// different prompts give different replies.
#[derive(Debug, Clone, Copy)]
pub struct MockBackend {
    seed: u64,
}

pub fn make_mock(seed: u64) -> MockBackend {
    MockBackend { seed }
}

impl MockBackend {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn reply(&self, prompt_text: &str, temperature: f64, max_tokens: u32) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(temperature.to_bits().to_le_bytes());
        hasher.update(prompt_text.as_bytes());
        let digest = hasher.finalize();
        let tag = hex::encode(&digest[..4]);
        let first = format!(
            "{} ({tag}): {}.",
            OPENERS[digest[4] as usize % OPENERS.len()],
            ACTIONS[digest[5] as usize % ACTIONS.len()]
        );
        let mut sentences = vec![first];
        if digest[6] % 2 == 0 {
            sentences.push(format!("{}.", CLOSINGS[digest[7] as usize % CLOSINGS.len()]));
        }
        truncate_to_tokens(&sentences, max_tokens as usize)
    }
}

/// Keeps whole sentences while they fit in `max_tokens` whitespace tokens; a
/// first sentence that is already too long is cut and closed with a period.
fn truncate_to_tokens(sentences: &[String], max_tokens: usize) -> String {
    let mut out: Vec<&str> = Vec::new();
    let mut used = 0;
    for s in sentences {
        let n = s.split_whitespace().count();
        if used + n > max_tokens {
            break;
        }
        used += n;
        out.push(s);
    }
    if out.is_empty() {
        let words: Vec<&str> = sentences[0].split_whitespace().take(max_tokens.max(1)).collect();
        let mut cut = words.join(" ");
        cut = cut.trim_end_matches(['.', ',', ':']).to_string();
        cut.push('.');
        return cut;
    }
    out.join(" ")
}

#[async_trait]
impl CompletionBackend for MockBackend {
    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let text = self.reply(&request.prompt_text, request.temperature, request.max_tokens);
        let prompt_tokens = request.prompt_text.split_whitespace().count() as u32;
        let completion_tokens = text.split_whitespace().count() as u32;
        Ok(CompletionResponse {
            text,
            model_id: request.model_id.clone(),
            latency_ms: 0,
            usage: Some(Usage {
                prompt_tokens,
                completion_tokens,
                total_tokens: prompt_tokens + completion_tokens,
            }),
        })
    }

    fn name(&self) -> &str {
        "mock"
    }
}
