//! Scoring: category equivalence for MFP, functional-group F1 for MPC, and
//! the summary reports.

mod judge;
mod report;
mod score;

pub use judge::{
    judge_category, parse_yes_no, rule_equivalent, JudgeMode, JudgeVerdict, LlmJudge, SynonymError, SynonymTable,
};
pub use report::{
    evaluate, render_csv, render_table, write_reports, EvalError, EvalOptions, EvalReport, Exclusion, InstanceScore,
    SummaryRow, EVAL_FILE, REPORT_FORMAT_VERSION,
};
pub use score::{score_mpc, MpcScore, DEFAULT_MAX_MISSING_SMILES};
