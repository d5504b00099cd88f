/// Fixed-capacity sample ring keeping the most recent samples.
#[derive(Debug, Clone)]
pub struct RingBuffer {
    data: Vec<f64>,
    head: usize,
    len: usize,
}

impl RingBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring capacity must be positive");
        RingBuffer { data: vec![0.0; capacity], head: 0, len: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.data.len()
    }

    /// Appends `x`; returns how many old samples were evicted.
    pub fn extend(&mut self, x: &[f64]) -> usize {
        let cap = self.data.len();
        let x = if x.len() > cap { &x[x.len() - cap..] } else { x };
        let evicted = (self.len + x.len()).saturating_sub(cap);
        for &v in x {
            self.data[self.head] = v;
            self.head = (self.head + 1) % cap;
        }
        self.len = (self.len + x.len()).min(cap);
        evicted
    }

    /// Contents oldest first.
    pub fn snapshot(&self) -> Vec<f64> {
        let cap = self.data.len();
        let start = (self.head + cap - self.len) % cap;
        let mut out = Vec::with_capacity(self.len);
        if start + self.len <= cap {
            out.extend_from_slice(&self.data[start..start + self.len]);
        } else {
            out.extend_from_slice(&self.data[start..]);
            out.extend_from_slice(&self.data[..self.head]);
        }
        out
    }

    pub fn clear(&mut self) {
        self.head = 0;
        self.len = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keeps_the_latest() {
        let mut r = RingBuffer::new(4);
        assert_eq!(r.extend(&[1.0, 2.0, 3.0]), 0);
        assert_eq!(r.snapshot(), vec![1.0, 2.0, 3.0]);
        assert_eq!(r.extend(&[4.0, 5.0]), 1);
        assert_eq!(r.snapshot(), vec![2.0, 3.0, 4.0, 5.0]);
        assert!(r.is_full());
        r.extend(&[6.0, 7.0, 8.0, 9.0, 10.0]);
        assert_eq!(r.snapshot(), vec![7.0, 8.0, 9.0, 10.0]);
    }

    proptest! {
        #[test]
        fn snapshot_is_tail_of_input(chunks in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 0..30), 0..20), cap in 1usize..50) {
            let mut r = RingBuffer::new(cap);
            let mut all = Vec::new();
            for c in &chunks {
                r.extend(c);
                all.extend_from_slice(c);
            }
            let tail = &all[all.len().saturating_sub(cap)..];
            prop_assert_eq!(r.snapshot(), tail.to_vec());
            prop_assert!(r.len() <= cap);
        }
    }
}
