//! Parsers for the line-oriented reply formats the prompts ask for.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseProblem {
    NoMarker(&'static str),
    EmptyAnswer(&'static str),
    WrongCount { expected: usize, got: usize },
    HypothesisCount { got: usize },
    InvalidHypothesis { index: usize, problem: Box<ParseProblem> },
    BadVerdict(String),
}

impl fmt::Display for ParseProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseProblem::NoMarker(m) => write!(f, "no line starting with \"{m}:\" was found"),
            ParseProblem::EmptyAnswer(m) => write!(f, "the \"{m}:\" line is empty"),
            ParseProblem::WrongCount { expected, got } => {
                write!(f, "expected exactly {expected} distinct molecules but found {got}")
            }
            ParseProblem::HypothesisCount { got } => write!(f, "expected exactly 3 hypotheses but found {got}"),
            ParseProblem::InvalidHypothesis { index, problem } => write!(f, "hypothesis {index}: {problem}"),
            ParseProblem::BadVerdict(v) => write!(f, "the verdict {v:?} is neither SELECT <1-3> nor REJECT"),
        }
    }
}

/// The text after `MARKER:` if `line` starts with it, ignoring case and
/// markdown emphasis around the marker.
pub(crate) fn strip_marker<'a>(line: &'a str, marker: &str) -> Option<&'a str> {
    let line = line.trim().trim_start_matches(['*', '#', '-', '>', ' ']);
    let head = line.get(..marker.len())?;
    if !head.eq_ignore_ascii_case(marker) {
        return None;
    }
    let rest = line[marker.len()..].trim_start_matches('*').trim_start();
    rest.strip_prefix(':').map(|r| r.trim_start_matches('*').trim())
}

fn last_marked<'a>(text: &'a str, markers: &[&str]) -> Option<&'a str> {
    text.lines().rev().find_map(|l| markers.iter().find_map(|m| strip_marker(l, m)))
}

fn clean_value(v: &str) -> String {
    v.trim().trim_end_matches('.').trim_matches(['"', '\'', '`', '*']).trim().to_string()
}

/// MFP reply: the category on the last `ANSWER:` (or `CATEGORY:`) line,
/// plus the optional `FOOD:` guess.
pub fn parse_category(text: &str) -> Result<(String, Option<String>), ParseProblem> {
    let raw = last_marked(text, &["answer", "category"]).ok_or(ParseProblem::NoMarker("ANSWER"))?;
    let answer = clean_value(raw);
    if answer.is_empty() {
        return Err(ParseProblem::EmptyAnswer("ANSWER"));
    }
    let food = last_marked(text, &["food"]).map(clean_value).filter(|f| !f.is_empty());
    Ok((answer, food))
}

/// Molecule names separated by semicolons, deduplicated case-insensitively
/// in first-seen order.
pub fn split_molecules(raw: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    raw.split(';').map(clean_value).filter(|m| !m.is_empty()).filter(|m| seen.insert(m.to_lowercase())).collect()
}

/// MPC reply: exactly `n` molecules on the last `MOLECULES:` line.
pub fn parse_molecules(text: &str, n: usize) -> Result<Vec<String>, ParseProblem> {
    let raw = last_marked(text, &["molecules"]).ok_or(ParseProblem::NoMarker("MOLECULES"))?;
    let names = split_molecules(raw);
    if names.len() != n {
        return Err(ParseProblem::WrongCount { expected: n, got: names.len() });
    }
    Ok(names)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHypothesis {
    pub answer: String,
    pub rationale: String,
}

/// Every `HYPOTHESIS k:` block in order of appearance. `RATIONALE:` text
/// runs until the next marker line.
pub fn parse_hypotheses(text: &str) -> Vec<RawHypothesis> {
    let mut out: Vec<RawHypothesis> = Vec::new();
    let mut in_rationale = false;
    for line in text.lines() {
        let trimmed = line.trim().trim_start_matches(['*', '#', '-', ' ']);
        if trimmed.len() >= 10 && trimmed[..10].eq_ignore_ascii_case("hypothesis") {
            if let Some(colon) = trimmed.find(':') {
                let label = trimmed[10..colon].trim().trim_matches('*').trim();
                if label.chars().all(|c| c.is_ascii_digit()) {
                    out.push(RawHypothesis { answer: clean_value(&trimmed[colon + 1..]), rationale: String::new() });
                    in_rationale = false;
                    continue;
                }
            }
        }
        if let Some(r) = strip_marker(line, "rationale") {
            if let Some(h) = out.last_mut() {
                h.rationale = r.to_string();
                in_rationale = true;
            }
            continue;
        }
        if in_rationale && strip_marker(line, "verdict").is_none() {
            if let Some(h) = out.last_mut() {
                if !line.trim().is_empty() {
                    h.rationale.push('\n');
                    h.rationale.push_str(line.trim());
                }
            }
        }
    }
    for h in &mut out {
        h.rationale = h.rationale.trim().to_string();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// 1-based hypothesis number.
    Select(usize),
    Reject,
}

/// Reviewer reply: the last `VERDICT:` line.
pub fn parse_verdict(text: &str, choices: usize) -> Result<Verdict, ParseProblem> {
    let raw = last_marked(text, &["verdict"]).ok_or(ParseProblem::NoMarker("VERDICT"))?;
    let v = clean_value(raw).to_ascii_lowercase();
    if v.starts_with("reject") {
        return Ok(Verdict::Reject);
    }
    let rest = v.strip_prefix("select").map(str::trim).ok_or_else(|| ParseProblem::BadVerdict(raw.to_string()))?;
    let rest = rest.strip_prefix("hypothesis").map_or(rest, str::trim).trim_start_matches('#');
    match rest.parse::<usize>() {
        Ok(k) if (1..=choices).contains(&k) => Ok(Verdict::Select(k)),
        _ => Err(ParseProblem::BadVerdict(raw.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_markers() {
        assert_eq!(parse_category("Category: Fruit").unwrap().0, "Fruit");
        assert_eq!(
            parse_category("I think...\n**ANSWER:** Spices.\nFOOD: clove").unwrap(),
            ("Spices".to_string(), Some("clove".to_string()))
        );
        assert_eq!(parse_category("It is probably a fruit."), Err(ParseProblem::NoMarker("ANSWER")));
        assert_eq!(parse_category("ANSWER:   "), Err(ParseProblem::EmptyAnswer("ANSWER")));
    }

    #[test]
    fn molecule_counts() {
        assert_eq!(
            parse_molecules("MOLECULES: hexanal; 2,3-butanedione; ", 2).unwrap(),
            ["hexanal", "2,3-butanedione"]
        );
        assert_eq!(parse_molecules("MOLECULES: a; A; b", 3), Err(ParseProblem::WrongCount { expected: 3, got: 2 }));
        assert!(parse_molecules("hexanal", 1).is_err());
    }

    #[test]
    fn hypotheses_with_multiline_rationales() {
        let text = "Intro\nHYPOTHESIS 1: Fruit\nRATIONALE: esters\nand more\n\nHypothesis 2: Spice\nRationale: phenols\n**HYPOTHESIS 3:** Herb\nRATIONALE: terpenes";
        let h = parse_hypotheses(text);
        assert_eq!(h.len(), 3);
        assert_eq!(h[0], RawHypothesis { answer: "Fruit".into(), rationale: "esters\nand more".into() });
        assert_eq!(h[2].answer, "Herb");
        assert!(parse_hypotheses("The hypothesis: none").is_empty());
    }

    #[test]
    fn verdicts() {
        assert_eq!(parse_verdict("blah\nVERDICT: SELECT 2", 3), Ok(Verdict::Select(2)));
        assert_eq!(parse_verdict("VERDICT: select hypothesis 3", 3), Ok(Verdict::Select(3)));
        assert_eq!(parse_verdict("VERDICT: REJECT", 3), Ok(Verdict::Reject));
        assert!(parse_verdict("VERDICT: SELECT 4", 3).is_err());
        assert!(parse_verdict("I pick 2", 3).is_err());
    }
}
