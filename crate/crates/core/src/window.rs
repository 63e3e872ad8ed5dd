/// Fixed-capacity ring of equal-length rows; the newest row is lag 0.
#[derive(Debug, Clone)]
pub(crate) struct RingWindow {
    width: usize,
    capacity: usize,
    data: Vec<f64>,
    next: usize,
    len: usize,
}

impl RingWindow {
    pub(crate) fn new(width: usize, capacity: usize) -> Self {
        RingWindow {
            width,
            capacity,
            data: vec![0.0; width * capacity],
            next: 0,
            len: 0,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        if self.capacity == 0 {
            return;
        }
        let start = self.next * self.width;
        self.data[start..start + self.width].copy_from_slice(row);
        self.next = (self.next + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Row pushed `lag` pushes ago, if still retained.
    #[inline]
    pub(crate) fn back(&self, lag: usize) -> Option<&[f64]> {
        if lag >= self.len {
            return None;
        }
        let idx = (self.next + self.capacity - 1 - lag) % self.capacity;
        Some(&self.data[idx * self.width..(idx + 1) * self.width])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_and_indexes_from_newest() {
        let mut w = RingWindow::new(2, 3);
        assert!(w.back(0).is_none());
        for k in 0..5 {
            w.push(&[k as f64, -(k as f64)]);
        }
        assert_eq!(w.len(), 3);
        assert_eq!(w.back(0), Some(&[4.0, -4.0][..]));
        assert_eq!(w.back(2), Some(&[2.0, -2.0][..]));
        assert!(w.back(3).is_none());
    }
}
