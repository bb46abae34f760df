use super::{Batch, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Reshuffle at each epoch boundary and walk the permutation in order. The
    /// last batch of an epoch may be short.
    ShuffleEpoch,
    WithReplacement,
}

/// Seeded mini-batch index generator over a dataset of fixed size.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    n: usize,
    batch_size: usize,
    mode: SamplingMode,
    rng: Stream,
    perm: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub fn new(n: usize, batch_size: usize, mode: SamplingMode, rng: Stream) -> Result<Self> {
        if n == 0 || batch_size == 0 {
            return Err(Error::config("sampler needs n >= 1 and batch_size >= 1"));
        }
        Ok(BatchSampler {
            n,
            batch_size: batch_size.min(n),
            mode,
            rng,
            perm: (0..n).collect(),
            cursor: n,
        })
    }

    /// Batches per epoch in shuffle-epoch mode.
    pub fn batches_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    pub fn next_indices(&mut self) -> Vec<usize> {
        match self.mode {
            SamplingMode::WithReplacement => (0..self.batch_size)
                .map(|_| self.rng.below(self.n as u64) as usize)
                .collect(),
            SamplingMode::ShuffleEpoch => {
                if self.cursor >= self.n {
                    self.perm = (0..self.n).collect();
                    self.rng.shuffle(&mut self.perm);
                    self.cursor = 0;
                }
                let end = (self.cursor + self.batch_size).min(self.n);
                let out = self.perm[self.cursor..end].to_vec();
                self.cursor = end;
                out
            }
        }
    }

    pub fn next_batch(&mut self, ds: &LabeledDataset) -> Batch {
        debug_assert_eq!(ds.len(), self.n);
        let idx = self.next_indices();
        ds.batch(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_visits_every_index_once() {
        let mut s =
            BatchSampler::new(23, 5, SamplingMode::ShuffleEpoch, Stream::new(1, 2)).unwrap();
        for _ in 0..3 {
            let mut seen: Vec<usize> = (0..s.batches_per_epoch())
                .flat_map(|_| s.next_indices())
                .collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..23).collect::<Vec<_>>());
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let mk =
            || BatchSampler::new(50, 8, SamplingMode::WithReplacement, Stream::new(9, 2)).unwrap();
        let (mut a, mut b) = (mk(), mk());
        for _ in 0..20 {
            assert_eq!(a.next_indices(), b.next_indices());
        }
    }

    #[test]
    fn oversized_batch_is_clamped() {
        let mut s =
            BatchSampler::new(4, 10, SamplingMode::ShuffleEpoch, Stream::new(0, 0)).unwrap();
        assert_eq!(s.next_indices().len(), 4);
    }
}
