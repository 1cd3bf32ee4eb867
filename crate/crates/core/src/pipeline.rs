use std::time::{Duration, Instant};

use crate::geom::Label;

/// Point labels as they stood after one pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSnapshot {
    pub stage: &'static str,
    pub labels: Vec<Label>,
}

/// Output of a filter run: final per-point labels plus diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ClassificationResult {
    pub labels: Vec<Label>,
    pub stages: Vec<StageSnapshot>,
    /// Wall-clock time of each stage, in execution order.
    pub timings: Vec<(&'static str, Duration)>,
}

impl ClassificationResult {
    pub fn stage(&self, name: &str) -> Option<&[Label]> {
        self.stages
            .iter()
            .find(|s| s.stage == name)
            .map(|s| s.labels.as_slice())
    }

    pub fn ground_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_ground()).count()
    }
}

/// Records consecutive stage durations on a monotonic clock.
pub(crate) struct StageTimer {
    last: Instant,
    timings: Vec<(&'static str, Duration)>,
}

impl StageTimer {
    pub fn start() -> Self {
        Self {
            last: Instant::now(),
            timings: Vec::new(),
        }
    }

    pub fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push((stage, now - self.last));
        self.last = now;
    }

    pub fn finish(self) -> Vec<(&'static str, Duration)> {
        self.timings
    }
}
