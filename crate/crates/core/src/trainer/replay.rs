use std::collections::VecDeque;

use rand::Rng;

use super::TrainError;
use crate::world::Observation;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub s: Observation<T>,
    /// Control actually applied, after clamping.
    pub a: T,
    pub s_next: Observation<T>,
    pub r: T,
    /// True when the episode ended in a way the value should not bootstrap past.
    pub terminal: bool,
}

/// Fixed-capacity FIFO memory of transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer<T> {
    items: VecDeque<Transition<T>>,
    capacity: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition<T>) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition<T>> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        self.items.iter()
    }

    /// Uniform indices drawn with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<usize>, TrainError> {
        if self.items.len() < k || k == 0 {
            return Err(TrainError::Underfilled {
                have: self.items.len(),
                need: k,
            });
        }
        let n = self.items.len();
        Ok((0..k).map(|_| rng.random_range(0..n)).collect())
    }
}

/// `k` transitions drawn uniformly with replacement.
pub fn sample_batch<'a, T, R: Rng + ?Sized>(
    buffer: &'a ReplayBuffer<T>,
    k: usize,
    rng: &mut R,
) -> Result<Vec<&'a Transition<T>>, TrainError> {
    let idx = buffer.sample_indices(k, rng)?;
    Ok(idx.into_iter().map(|i| &buffer.items[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(i: usize) -> Transition<f64> {
        Transition {
            s: Observation(vec![i as f64]),
            a: 0.0,
            s_next: Observation(vec![0.0]),
            r: -(i as f64),
            terminal: false,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(5);
        for i in 0..8 {
            b.push(tr(i));
        }
        assert_eq!(b.len(), 5);
        let kept: Vec<f64> = b.iter().map(|t| t.s.0[0]).collect();
        assert_eq!(kept, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn single_item_batch() {
        let mut b = ReplayBuffer::new(10);
        b.push(tr(42));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = sample_batch(&b, 1, &mut rng).unwrap();
        assert_eq!(batch[0], &tr(42));
    }

    #[test]
    fn underfilled_is_an_error() {
        let mut b = ReplayBuffer::new(2000);
        for i in 0..63 {
            b.push(tr(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_batch(&b, 64, &mut rng),
            Err(TrainError::Underfilled { have: 63, need: 64 })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut b = ReplayBuffer::new(100);
        for i in 0..100 {
            b.push(tr(i));
        }
        let a = b.sample_indices(64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let c = b.sample_indices(64, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, c);
    }
}
