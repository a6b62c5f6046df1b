//! The three orchestration prompts and their user-message renderers.
//!
//! The system prompts are protocol constants: transcripts recorded against
//! them replay bit-identically, so any wording change invalidates existing
//! transcript fixtures.

use super::{BasicFactor, PrimingCodebook};

/// Stage 1: extract concrete factors from one response.
pub const FACTOR_EXTRACTION_SYSTEM_PROMPT: &str = "\
Please identify and list distinct, concrete factors from the following tennis post-match interview response, following these rules:
1. Each factor must capture a core theme mentioned in the response; avoid vague or trivial terms.
2. Factors should reflect the player's cognitive or emotional state and may cover tactical, technical, mental, or physical aspects.
3. Each factor should correspond to a specific behavioral or psychological characteristic with a clear positive or negative emotional bias.
4. For each factor, list the exact expression from the original sentence (do not generalize).
Output **strictly** in JSON format, for example:
{\"distinct factor 1\": [\"exact expression from the original sentence\"], \"distinct factor 2\": [\"exact expression\"], ...}";

/// Stage 2: summarize one factor cluster into a named priming factor.
pub const CODEBOOK_SUMMARY_SYSTEM_PROMPT: &str = "\
Based on the input factor clusters, summarize a single priming factor that organizes a tennis player's post-match interview language.
Do not repeat any factors that have appeared in the history factors list.
The priming factor should be a neutral, widely recognized, established word or phrase. Avoid hyphenated terms, uncommon constructions, or vague words like 'orientation.' Following these rules:
1. The priming factor should distill specific factors into a universal, semantically clear category (e.g., Emotion Valence, Physical State, Opponent Threat Perception), but avoid categories that are overly broad or vague (e.g., Resilience)
2. Priming factor should represent the player's cognitive or emotional state; avoid detailed or context-specific categories
3. Priming factor should correspond to a specific behavioral or psychological characteristic with a clear positive or negative emotional bias
Output **strictly** in JSON format, for example:
{\"Priming factor\": \"Emotion Valence\", \"Explanation\": \"Indicates the emotional valence in the player's response, reflecting a positive (happy) or negative (upset) state\", \"Value\": \"1 represents positive emotion (joy), -1 represents negative emotion (upset)\"}";

/// Stage 3: assign an activation vector for one response under a codebook.
pub const VECTOR_ASSIGNMENT_SYSTEM_PROMPT: &str = "\
Given a factor book containing a list of priming factors, assign a priming activation probability vector for a given tennis player post-match interview text.
This vector should describe which factors are activated in the text and the activation strength for each factor.
1. Each value in the vector represents the activation strength of the corresponding factor, as a float between -1 and 1.
2. Assign activation values based on the 'value' in the factor book. If the text does not contain information related to a specific factor, assign 0 to that dimension.
3. Strictly follow the order and definition of factors in the factor book when generating the probability vector.
4. As a linguistics expert, consider both overall meaning and subtle language cues. Avoid extreme values (-1 or 1) unless the evidence is very clear; use intermediate values to reflect language nuance.
Output only an N-dimensional probability vector (N is the number of factors in the factor-book), for example:
[-0.9, 0.5, 0.8, -0.5, 0.7, 0, -0.6, 1.0, -0.7, 0.9, 0, -1.0, 0, 0, 0.9, ...]";

/// User message for stage 2: the cluster's member factors with their verbatim
/// evidence, followed by the names already used.
pub fn render_cluster_user_text(members: &[&BasicFactor], history: &[String]) -> String {
    let mut out = String::from("Factor cluster:\n");
    for factor in members {
        out.push_str("- ");
        out.push_str(&factor.label);
        if !factor.evidence.is_empty() {
            out.push_str(": ");
            let quoted: Vec<String> = factor.evidence.iter().map(|e| format!("{e:?}")).collect();
            out.push_str(&quoted.join("; "));
        }
        out.push('\n');
    }
    out.push_str("History factors: [");
    out.push_str(&history.join(", "));
    out.push(']');
    out
}

/// User message for stage 3: the factor book in codebook order, then the
/// response text to score.
pub fn render_vector_user_text(codebook: &PrimingCodebook, response_text: &str) -> String {
    let mut out = String::from("Factor book:\n");
    for (idx, factor) in codebook.factors().iter().enumerate() {
        out.push_str(&format!(
            "{}. {}: {} Value: {}\n",
            idx + 1,
            factor.name,
            factor.explanation,
            factor.polarity_schema
        ));
    }
    out.push_str("Interview text:\n");
    out.push_str(response_text);
    out
}
