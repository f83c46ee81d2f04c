//! Activity-ordered variable heap for the learning search.

#[derive(Clone, Debug, Default)]
pub struct VarOrder {
    activity: Vec<f64>,
    heap: Vec<u32>,
    pos: Vec<usize>,
    inc: f64,
}

const ABSENT: usize = usize::MAX;

impl VarOrder {
    pub fn new() -> VarOrder {
        VarOrder { inc: 1.0, ..Default::default() }
    }

    pub fn add_var(&mut self) {
        self.activity.push(0.0);
        self.pos.push(ABSENT);
    }

    /// Ties go to the lower variable id, keeping the order deterministic.
    fn better(&self, a: u32, b: u32) -> bool {
        let (x, y) = (self.activity[a as usize], self.activity[b as usize]);
        x > y || (x == y && a < b)
    }

    fn up(&mut self, mut i: usize) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if !self.better(v, self.heap[p]) {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = i;
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn down(&mut self, mut i: usize) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && self.better(self.heap[r], self.heap[l]) { r } else { l };
            if !self.better(self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    pub fn insert(&mut self, v: u32) {
        if self.pos[v as usize] != ABSENT {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = i;
        self.up(i);
    }

    pub fn pop(&mut self) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0);
        }
        Some(top)
    }

    pub fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.inc *= 1e-100;
        }
        let p = self.pos[v as usize];
        if p != ABSENT {
            self.up(p);
        }
    }

    pub fn decay(&mut self) {
        self.inc /= 0.95;
    }
}

/// The Luby sequence 1 1 2 1 1 2 4 ...
pub fn luby(mut i: u64) -> u64 {
    let mut size = 1;
    let mut seq = 0;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luby_prefix() {
        let v: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(v, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn heap_orders_by_activity_then_id() {
        let mut o = VarOrder::new();
        for v in 0..5 {
            o.add_var();
            o.insert(v);
        }
        o.bump(3);
        o.bump(3);
        o.bump(1);
        let got: Vec<u32> = std::iter::from_fn(|| o.pop()).collect();
        assert_eq!(got, vec![3, 1, 0, 2, 4]);
    }
}
