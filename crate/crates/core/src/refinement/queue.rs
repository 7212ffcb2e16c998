/// Specification steps awaiting refinement.
///
/// Selection refines the coarsest step first and, among equally refined steps, the one whose
/// last refinement (or insertion) is the oldest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefineQueue {
    entries: Vec<QueueEntry>,
    clock: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueueEntry {
    pub step: usize,
    /// Number of times the step has been refined.
    pub depth: usize,
    pub stamp: u64,
}

impl RefineQueue {
    pub fn new() -> Self {
        Self::default()
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Inserts `step` unless it is already queued.
    pub fn add(&mut self, step: usize) {
        if self.entries.iter().all(|e| e.step != step) {
            let stamp = self.tick();
            self.entries.push(QueueEntry { step, depth: 0, stamp });
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn depth(&self, step: usize) -> Option<usize> {
        self.entries.iter().find(|e| e.step == step).map(|e| e.depth)
    }

    /// Minimal depth, then oldest stamp, among entries accepted by `eligible`.
    pub fn first(&self, mut eligible: impl FnMut(&QueueEntry) -> bool) -> Option<QueueEntry> {
        self.entries
            .iter()
            .filter(|e| eligible(e))
            .min_by_key(|e| (e.depth, e.stamp))
            .copied()
    }

    /// Records a refinement of `step`: one level deeper and a fresh stamp.
    pub fn mark_refined(&mut self, step: usize) -> usize {
        let stamp = self.tick();
        let e = self.entries.iter_mut().find(|e| e.step == step).expect("refined step is queued");
        e.depth += 1;
        e.stamp = stamp;
        e.depth
    }
}
