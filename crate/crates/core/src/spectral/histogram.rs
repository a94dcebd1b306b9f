use std::fmt::Write as _;

use super::SpectrumRecord;

/// Uniform-bin histogram over `[lo, hi)` with separate under/overflow tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Default for Histogram {
    /// 200 bins on `(0.9, 1.1)`.
    fn default() -> Self {
        Self::new(200, 0.9, 1.1).expect("valid default range")
    }
}

impl Histogram {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Option<Self> {
        (bins >= 1 && lo < hi && lo.is_finite() && hi.is_finite()).then(|| Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn add(&mut self, value: f64) {
        if value < self.lo {
            self.underflow += 1;
        } else if value >= self.hi || value.is_nan() {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let b = ((value - self.lo) / (self.hi - self.lo) * bins as f64) as usize;
            self.counts[b.min(bins - 1)] += 1;
        }
    }

    pub fn add_record(&mut self, record: &SpectrumRecord) {
        record.eigenvalues.iter().for_each(|&v| self.add(v));
    }

    pub fn extend<'a, I: IntoIterator<Item = &'a SpectrumRecord>>(&mut self, records: I) {
        records.into_iter().for_each(|r| self.add_record(r));
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * self.bin_width()
    }

    /// Counts in bins whose lower edge is at or above `threshold`, plus overflow.
    pub fn mass_from(&self, threshold: f64) -> u64 {
        let w = self.bin_width();
        self.counts
            .iter()
            .enumerate()
            .filter(|(b, _)| self.lo + *b as f64 * w >= threshold)
            .map(|(_, &c)| c)
            .sum::<u64>()
            + self.overflow
    }

    /// Two-column `center count` table; under/overflow as comment lines.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# bin_center count");
        let _ = writeln!(out, "# underflow {}", self.underflow);
        let _ = writeln!(out, "# overflow {}", self.overflow);
        for (b, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{:.16e} {}", self.center(b), c);
        }
        out
    }
}
