//! Self-adjusting index over gaps.
//!
//! A splay tree whose nodes are gaps in key order. Each node carries the gap's
//! element count and the sum of counts in its subtree, so the same tree can
//! be descended by key (against the gap's upper boundary key) or by global
//! rank. Nodes live in an arena and are addressed by [`GapId`]; ids are stable
//! for as long as a node stays in the same index.
//!
//! Routing convention: a key belongs to the first gap whose upper boundary is
//! `>=` the key, so a key equal to a boundary goes to the lower gap. The last
//! gap accepts everything above the previous boundary.

use crate::compare::Comparator;
use crate::error::{Error, Result};

pub type GapId = u32;

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Link {
    parent: u32,
    left: u32,
    right: u32,
    size: usize,
    subtree: usize,
}

impl Link {
    const fn detached(size: usize) -> Self {
        Link {
            parent: NIL,
            left: NIL,
            right: NIL,
            size,
            subtree: size,
        }
    }
}

#[derive(Debug)]
struct Payload<K, G> {
    low: Option<K>,
    high: Option<K>,
    data: G,
}

/// A gap removed from an index together with its boundary keys, ready to be
/// re-inserted elsewhere.
#[derive(Debug)]
pub struct Detached<K, G> {
    pub size: usize,
    pub low: Option<K>,
    pub high: Option<K>,
    pub data: G,
}

/// Result of a key descent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyHit {
    pub gap: GapId,
    /// The key is above the upper boundary of every gap; `gap` is the last one.
    pub beyond: bool,
}

#[derive(Debug)]
pub struct GapIndex<K, G> {
    links: Vec<Link>,
    slots: Vec<Option<Payload<K, G>>>,
    free: Vec<u32>,
    root: u32,
    len: usize,
    rotations: u64,
    accesses: u64,
}

impl<K, G> Default for GapIndex<K, G> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K, G> GapIndex<K, G> {
    pub fn new() -> Self {
        GapIndex {
            links: Vec::new(),
            slots: Vec::new(),
            free: Vec::new(),
            root: NIL,
            len: 0,
            rotations: 0,
            accesses: 0,
        }
    }

    /// Number of gaps.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum of all gap sizes.
    pub fn total(&self) -> usize {
        if self.root == NIL {
            0
        } else {
            self.links[self.root as usize].subtree
        }
    }

    /// Total splay rotations performed.
    pub fn rotations(&self) -> u64 {
        self.rotations
    }

    /// Number of splay accesses performed.
    pub fn accesses(&self) -> u64 {
        self.accesses
    }

    pub fn root(&self) -> Option<GapId> {
        (self.root != NIL).then_some(self.root)
    }

    fn payload(&self, id: GapId) -> &Payload<K, G> {
        self.slots[id as usize].as_ref().expect("live gap id")
    }

    fn payload_mut(&mut self, id: GapId) -> &mut Payload<K, G> {
        self.slots[id as usize].as_mut().expect("live gap id")
    }

    pub fn contains(&self, id: GapId) -> bool {
        self.slots.get(id as usize).is_some_and(Option::is_some)
    }

    pub fn size(&self, id: GapId) -> usize {
        self.links[id as usize].size
    }

    pub fn low(&self, id: GapId) -> Option<&K> {
        self.payload(id).low.as_ref()
    }

    pub fn high(&self, id: GapId) -> Option<&K> {
        self.payload(id).high.as_ref()
    }

    pub fn set_low(&mut self, id: GapId, key: Option<K>) {
        self.payload_mut(id).low = key;
    }

    pub fn set_high(&mut self, id: GapId, key: Option<K>) {
        self.payload_mut(id).high = key;
    }

    pub fn data(&self, id: GapId) -> &G {
        &self.payload(id).data
    }

    pub fn data_mut(&mut self, id: GapId) -> &mut G {
        &mut self.payload_mut(id).data
    }

    fn alloc(&mut self, size: usize, payload: Payload<K, G>) -> u32 {
        self.len += 1;
        match self.free.pop() {
            Some(id) => {
                self.links[id as usize] = Link::detached(size);
                self.slots[id as usize] = Some(payload);
                id
            }
            None => {
                self.links.push(Link::detached(size));
                self.slots.push(Some(payload));
                (self.links.len() - 1) as u32
            }
        }
    }

    fn release(&mut self, id: u32) -> Detached<K, G> {
        self.len -= 1;
        let p = self.slots[id as usize].take().expect("live gap id");
        self.free.push(id);
        Detached {
            size: self.links[id as usize].size,
            low: p.low,
            high: p.high,
            data: p.data,
        }
    }

    #[inline]
    fn sub(&self, x: u32) -> usize {
        if x == NIL {
            0
        } else {
            self.links[x as usize].subtree
        }
    }

    #[inline]
    fn update(&mut self, x: u32) {
        let l = self.links[x as usize];
        self.links[x as usize].subtree = l.size + self.sub(l.left) + self.sub(l.right);
    }

    fn rotate(&mut self, x: u32) {
        let p = self.links[x as usize].parent;
        let g = self.links[p as usize].parent;
        if self.links[p as usize].left == x {
            let b = self.links[x as usize].right;
            self.links[p as usize].left = b;
            if b != NIL {
                self.links[b as usize].parent = p;
            }
            self.links[x as usize].right = p;
        } else {
            let b = self.links[x as usize].left;
            self.links[p as usize].right = b;
            if b != NIL {
                self.links[b as usize].parent = p;
            }
            self.links[x as usize].left = p;
        }
        self.links[p as usize].parent = x;
        self.links[x as usize].parent = g;
        if g == NIL {
            self.root = x;
        } else if self.links[g as usize].left == p {
            self.links[g as usize].left = x;
        } else {
            self.links[g as usize].right = x;
        }
        self.update(p);
        self.update(x);
        self.rotations += 1;
    }

    fn splay(&mut self, x: u32) {
        self.accesses += 1;
        loop {
            let p = self.links[x as usize].parent;
            if p == NIL {
                break;
            }
            let g = self.links[p as usize].parent;
            if g != NIL {
                let zigzig =
                    (self.links[g as usize].left == p) == (self.links[p as usize].left == x);
                if zigzig {
                    self.rotate(p);
                } else {
                    self.rotate(x);
                }
            }
            self.rotate(x);
        }
    }

    /// Bring `id` to the root.
    pub fn access(&mut self, id: GapId) {
        self.splay(id);
    }

    fn subtree_min(&self, mut x: u32) -> u32 {
        while self.links[x as usize].left != NIL {
            x = self.links[x as usize].left;
        }
        x
    }

    fn subtree_max(&self, mut x: u32) -> u32 {
        while self.links[x as usize].right != NIL {
            x = self.links[x as usize].right;
        }
        x
    }

    pub fn first(&mut self) -> Option<GapId> {
        let r = self.root()?;
        let m = self.subtree_min(r);
        self.splay(m);
        Some(m)
    }

    pub fn last(&mut self) -> Option<GapId> {
        let r = self.root()?;
        let m = self.subtree_max(r);
        self.splay(m);
        Some(m)
    }

    /// Predecessor in key order. Leaves `id` at the root.
    pub fn prev(&mut self, id: GapId) -> Option<GapId> {
        self.splay(id);
        let l = self.links[id as usize].left;
        (l != NIL).then(|| self.subtree_max(l))
    }

    /// Successor in key order. Leaves `id` at the root.
    pub fn next(&mut self, id: GapId) -> Option<GapId> {
        self.splay(id);
        let r = self.links[id as usize].right;
        (r != NIL).then(|| self.subtree_min(r))
    }

    /// Sum of the sizes of all gaps left of `id`. Leaves `id` at the root.
    pub fn offset(&mut self, id: GapId) -> usize {
        self.splay(id);
        self.sub(self.links[id as usize].left)
    }

    /// Gap ids in key order. Does not restructure.
    pub fn ids(&self) -> Vec<GapId> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = Vec::new();
        let mut x = self.root;
        while x != NIL || !stack.is_empty() {
            while x != NIL {
                stack.push(x);
                x = self.links[x as usize].left;
            }
            let y = stack.pop().unwrap();
            out.push(y);
            x = self.links[y as usize].right;
        }
        out
    }

    /// Gap sizes in key order.
    pub fn sizes(&self) -> Vec<usize> {
        self.ids().into_iter().map(|id| self.size(id)).collect()
    }

    /// Find the gap containing `key`: the first gap whose upper boundary is
    /// `>= key` (or `> key` when `strict`). If the key exceeds every boundary
    /// the last gap is returned with `beyond` set. The result is splayed.
    pub fn find_by_key(&mut self, key: &K, strict: bool, cmp: &Comparator) -> Result<KeyHit>
    where
        K: Ord,
    {
        if self.root == NIL {
            return Err(Error::EmptyIndex);
        }
        let mut x = self.root;
        let mut found = NIL;
        let mut last = NIL;
        while x != NIL {
            last = x;
            let ord = cmp.cmp_upper(key, self.payload(x).high.as_ref());
            let go_left = if strict { ord.is_lt() } else { ord.is_le() };
            if go_left {
                found = x;
                x = self.links[x as usize].left;
            } else {
                x = self.links[x as usize].right;
            }
        }
        self.splay(last);
        if found == NIL {
            return Ok(KeyHit {
                gap: last,
                beyond: true,
            });
        }
        if found != last {
            self.splay(found);
        }
        Ok(KeyHit {
            gap: found,
            beyond: false,
        })
    }

    /// Find the gap holding global rank `rank` (1-based). Returns the gap and
    /// the rank within it. The result is splayed.
    pub fn find_by_rank(&mut self, rank: usize) -> Result<(GapId, usize)> {
        let total = self.total();
        if rank == 0 || rank > total {
            return Err(Error::RankOutOfRange { rank, len: total });
        }
        let mut x = self.root;
        let mut r = rank;
        loop {
            let l = self.links[x as usize];
            let left = self.sub(l.left);
            if r <= left {
                x = l.left;
            } else if r <= left + l.size {
                r -= left;
                break;
            } else {
                r -= left + l.size;
                x = l.right;
            }
        }
        self.splay(x);
        Ok((x, r))
    }

    /// Change the size of a gap by `delta`.
    pub fn add_size(&mut self, id: GapId, delta: isize) {
        self.splay(id);
        let l = &mut self.links[id as usize];
        l.size = l.size.checked_add_signed(delta).expect("gap size underflow");
        l.subtree = l.subtree.checked_add_signed(delta).expect("gap size underflow");
    }

    pub fn set_size(&mut self, id: GapId, size: usize) {
        self.splay(id);
        self.links[id as usize].size = size;
        self.update(id);
    }

    /// Insert the first gap of an empty index.
    pub fn insert_only(&mut self, size: usize, low: Option<K>, high: Option<K>, data: G) -> GapId {
        assert!(self.root == NIL, "index not empty");
        let id = self.alloc(size, Payload { low, high, data });
        self.root = id;
        id
    }

    /// Insert a new gap immediately after `id` in key order.
    pub fn insert_after(
        &mut self,
        id: GapId,
        size: usize,
        low: Option<K>,
        high: Option<K>,
        data: G,
    ) -> GapId {
        self.splay(id);
        let y = self.alloc(size, Payload { low, high, data });
        let r = self.links[id as usize].right;
        self.links[y as usize].right = r;
        if r != NIL {
            self.links[r as usize].parent = y;
        }
        self.links[y as usize].parent = id;
        self.links[id as usize].right = y;
        self.update(y);
        self.update(id);
        y
    }

    /// Insert a new gap immediately before `id` in key order.
    pub fn insert_before(
        &mut self,
        id: GapId,
        size: usize,
        low: Option<K>,
        high: Option<K>,
        data: G,
    ) -> GapId {
        self.splay(id);
        let y = self.alloc(size, Payload { low, high, data });
        let l = self.links[id as usize].left;
        self.links[y as usize].left = l;
        if l != NIL {
            self.links[l as usize].parent = y;
        }
        self.links[y as usize].parent = id;
        self.links[id as usize].left = y;
        self.update(y);
        self.update(id);
        y
    }

    /// Append a gap after the current last gap.
    pub fn push_back(&mut self, size: usize, low: Option<K>, high: Option<K>, data: G) -> GapId {
        match self.last() {
            None => self.insert_only(size, low, high, data),
            Some(m) => self.insert_after(m, size, low, high, data),
        }
    }

    /// Remove a gap and return it. Neighbouring gaps become adjacent.
    pub fn remove(&mut self, id: GapId) -> Detached<K, G> {
        self.splay(id);
        let Link { left, right, .. } = self.links[id as usize];
        if left == NIL {
            self.root = right;
            if right != NIL {
                self.links[right as usize].parent = NIL;
            }
        } else {
            self.links[left as usize].parent = NIL;
            self.root = left;
            let m = self.subtree_max(left);
            self.splay(m);
            self.links[m as usize].right = right;
            if right != NIL {
                self.links[right as usize].parent = m;
            }
            self.update(m);
        }
        self.release(id)
    }

    fn collect_subtree(&self, top: u32, out: &mut Vec<u32>) {
        let mut stack = Vec::new();
        let mut x = top;
        while x != NIL || !stack.is_empty() {
            while x != NIL {
                stack.push(x);
                x = self.links[x as usize].left;
            }
            let y = stack.pop().unwrap();
            out.push(y);
            x = self.links[y as usize].right;
        }
    }

    /// Remove every gap after `id` and return them in key order.
    pub fn drain_after(&mut self, id: GapId) -> Vec<Detached<K, G>> {
        self.splay(id);
        let r = self.links[id as usize].right;
        self.links[id as usize].right = NIL;
        self.update(id);
        let mut ids = Vec::new();
        self.collect_subtree(r, &mut ids);
        ids.into_iter().map(|x| self.release(x)).collect()
    }

    /// Remove `id` and every gap before it and return them in key order.
    pub fn drain_through(&mut self, id: GapId) -> Vec<Detached<K, G>> {
        self.splay(id);
        let Link { left, right, .. } = self.links[id as usize];
        self.root = right;
        if right != NIL {
            self.links[right as usize].parent = NIL;
        }
        let mut ids = Vec::new();
        self.collect_subtree(left, &mut ids);
        ids.push(id);
        ids.into_iter().map(|x| self.release(x)).collect()
    }

    /// Remove every gap, in key order.
    pub fn drain_all(&mut self) -> Vec<Detached<K, G>> {
        let mut ids = Vec::new();
        self.collect_subtree(self.root, &mut ids);
        self.root = NIL;
        ids.into_iter().map(|x| self.release(x)).collect()
    }

    /// Build a balanced detached subtree from gaps in key order.
    fn build(&mut self, items: Vec<Detached<K, G>>) -> (u32, Vec<GapId>) {
        let ids: Vec<u32> = items
            .into_iter()
            .map(|d| {
                self.alloc(
                    d.size,
                    Payload {
                        low: d.low,
                        high: d.high,
                        data: d.data,
                    },
                )
            })
            .collect();
        let top = self.link_range(&ids, NIL);
        (top, ids)
    }

    fn link_range(&mut self, ids: &[u32], parent: u32) -> u32 {
        if ids.is_empty() {
            return NIL;
        }
        let mid = ids.len() / 2;
        let x = ids[mid];
        self.links[x as usize].parent = parent;
        let l = self.link_range(&ids[..mid], x);
        let r = self.link_range(&ids[mid + 1..], x);
        self.links[x as usize].left = l;
        self.links[x as usize].right = r;
        self.update(x);
        x
    }

    /// Append gaps (in key order) after the current last gap. Returns their
    /// new ids.
    pub fn extend_back(&mut self, items: Vec<Detached<K, G>>) -> Vec<GapId> {
        let (top, ids) = self.build(items);
        if top == NIL {
            return ids;
        }
        match self.last() {
            None => self.root = top,
            Some(m) => {
                self.links[m as usize].right = top;
                self.links[top as usize].parent = m;
                self.update(m);
            }
        }
        ids
    }

    /// Prepend gaps (in key order) before the current first gap.
    pub fn extend_front(&mut self, items: Vec<Detached<K, G>>) -> Vec<GapId> {
        let (top, ids) = self.build(items);
        if top == NIL {
            return ids;
        }
        match self.first() {
            None => self.root = top,
            Some(m) => {
                self.links[m as usize].left = top;
                self.links[top as usize].parent = m;
                self.update(m);
            }
        }
        ids
    }

    /// Build an index from gaps in key order.
    pub fn from_sorted(items: Vec<Detached<K, G>>) -> (Self, Vec<GapId>) {
        let mut index = Self::new();
        let ids = index.extend_back(items);
        (index, ids)
    }

    /// Split into the gaps up to and including `id`, and the rest.
    pub fn split_at_boundary(mut self, id: GapId) -> (Self, Self) {
        let right = self.drain_after(id);
        (self, Self::from_sorted(right).0)
    }

    /// Concatenate two indices. Every boundary of `left` must be `<=` every
    /// boundary of `right`; only the facing boundaries are checked.
    pub fn join(mut left: Self, mut right: Self, cmp: &Comparator) -> Result<Self>
    where
        K: Ord,
    {
        if left.is_empty() {
            return Ok(right);
        }
        if right.is_empty() {
            return Ok(left);
        }
        let l = left.last().unwrap();
        let r = right.first().unwrap();
        match (left.high(l), right.low(r)) {
            (Some(h), Some(lo)) if cmp.le(h, lo) => {}
            _ => return Err(Error::OrderViolation),
        }
        let items = right.drain_all();
        left.extend_back(items);
        Ok(left)
    }

    /// Recompute every aggregate and compare against the stored one, check
    /// parent links and boundary monotonicity. Returns violations.
    pub fn check(&self, cmp: &Comparator) -> Vec<String>
    where
        K: Ord,
    {
        let mut errs = Vec::new();
        if self.root != NIL && self.links[self.root as usize].parent != NIL {
            errs.push("root has a parent".into());
        }
        let ids = self.ids();
        if ids.len() != self.len {
            errs.push(format!("in-order count {} != len {}", ids.len(), self.len));
        }
        for &x in &ids {
            let l = self.links[x as usize];
            let want = l.size + self.sub(l.left) + self.sub(l.right);
            if want != l.subtree {
                errs.push(format!("gap {x}: subtree {} != recomputed {want}", l.subtree));
            }
            for c in [l.left, l.right] {
                if c != NIL && self.links[c as usize].parent != x {
                    errs.push(format!("gap {x}: child {c} has wrong parent"));
                }
            }
        }
        for w in ids.windows(2) {
            let (a, b) = (w[0], w[1]);
            match (self.high(a), self.low(b)) {
                (Some(h), Some(lo)) => {
                    if cmp.cmp(h, lo).is_gt() {
                        errs.push(format!("gaps {a},{b}: boundaries out of order"));
                    }
                }
                _ => errs.push(format!("gaps {a},{b}: interior boundary is unbounded")),
            }
        }
        errs
    }
}
