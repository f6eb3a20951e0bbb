use rand::Rng;

/// One environment transition. Actions are stored in the squashed (-1, 1)
/// space the agent works in, not as heading/speed commands.
#[derive(Clone, Debug)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: [f64; 2],
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// True only for genuine terminal states (goal). Time-limit truncation
    /// keeps bootstrapping, so it stays false.
    pub done: bool,
}

/// Fixed-capacity ring buffer with uniform random sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, storage: Vec::with_capacity(capacity.min(4096)), next: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.storage[i]
    }

    /// Uniform indices with replacement.
    pub fn sample_indices(&self, batch: usize, rng: &mut impl Rng) -> Vec<usize> {
        assert!(!self.storage.is_empty(), "cannot sample from an empty buffer");
        (0..batch).map(|_| rng.gen_range(0..self.storage.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng_from_seed;

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for k in 0..5 {
            buf.push(Transition {
                obs: vec![k as f64],
                action: [0.0, 0.0],
                reward: k as f64,
                next_obs: vec![],
                done: false,
            });
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| buf.get(i).reward).collect();
        // Slots 0 and 1 were overwritten by items 3 and 4.
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_is_roughly_uniform() {
        let mut buf = ReplayBuffer::new(8);
        for k in 0..8 {
            buf.push(Transition {
                obs: vec![],
                action: [0.0, 0.0],
                reward: k as f64,
                next_obs: vec![],
                done: false,
            });
        }
        let mut rng = rng_from_seed(7);
        let mut counts = [0usize; 8];
        let draws = 16_000;
        for i in buf.sample_indices(draws, &mut rng) {
            counts[i] += 1;
        }
        // Chi-squared test against uniform, df = 7, p = 0.01 critical 18.48.
        let expected = draws as f64 / 8.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 18.48, "chi2 = {chi2}");
    }
}
