/// Running count of floating-point operations, used to compare iteration
/// costs across reduction factors independently of the machine.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlopCounter {
    total: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        FlopCounter::default()
    }

    #[inline]
    pub fn add(&mut self, flops: u64) {
        self.total = self.total.saturating_add(flops);
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}
