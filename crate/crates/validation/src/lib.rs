//! Pass/fail bookkeeping for the acceptance run.

use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2}  {}  {}: {} [{:.2} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// A check either produces a verdict with details or an error message.
pub type Verdict = Result<(bool, String), String>;

#[derive(Debug, Default)]
pub struct Scorecard {
    outcomes: Vec<Outcome>,
}

impl Scorecard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `check`, prints its line immediately and records it. A panic
    /// inside the check counts as a failure.
    pub fn run(&mut self, id: u32, title: &'static str, check: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let (passed, detail) = match verdict {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let outcome = Outcome {
            id,
            title,
            passed,
            detail,
            elapsed: start.elapsed(),
        };
        println!("{outcome}");
        self.outcomes.push(outcome);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<u32> {
        self.outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_verdicts_errors_and_panics() {
        let mut card = Scorecard::new();
        card.run(1, "ok", || Ok((true, "fine".into())));
        card.run(2, "bad", || Ok((false, "off".into())));
        card.run(3, "error", || Err("boom".into()));
        card.run(4, "panic", || panic!("kaput"));
        assert_eq!(card.failures(), vec![2, 3, 4]);
        assert!(card.outcomes()[3].detail.contains("kaput"));
        assert!(card.outcomes()[0].to_string().starts_with("criterion  1  PASS  ok: fine"));
    }
}
