//! Disjoint-set cells mapping chunks to the interval that owns them.
//!
//! Each chunk points at a cell; merging two intervals unions their cells, so
//! records never need to be touched when intervals merge. The root of each
//! set carries the owning interval id.

const FREED: u32 = u32::MAX - 1;

#[derive(Clone, Copy, Debug)]
struct Cell {
    parent: u32,
    rank: u8,
    owner: u32,
}

#[derive(Debug, Default)]
pub struct Cells {
    cells: Vec<Cell>,
    free: Vec<u32>,
}

impl Cells {
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh singleton set owned by `owner`.
    pub fn make(&mut self, owner: u32) -> u32 {
        let cell = Cell {
            parent: 0,
            rank: 0,
            owner,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.cells[id as usize] = cell;
                id
            }
            None => {
                self.cells.push(cell);
                (self.cells.len() - 1) as u32
            }
        };
        self.cells[id as usize].parent = id;
        id
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.cells[root as usize].parent != root {
            root = self.cells[root as usize].parent;
        }
        let mut y = x;
        while y != root {
            let next = self.cells[y as usize].parent;
            self.cells[y as usize].parent = root;
            y = next;
        }
        root
    }

    pub fn owner(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.cells[r as usize].owner
    }

    /// Union the sets of `a` and `b`; the result is owned by `owner`.
    /// Returns the new root.
    pub fn union(&mut self, a: u32, b: u32, owner: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let root = if ra == rb {
            ra
        } else {
            let (ka, kb) = (self.cells[ra as usize].rank, self.cells[rb as usize].rank);
            let (child, root) = if ka < kb { (ra, rb) } else { (rb, ra) };
            self.cells[child as usize].parent = root;
            if ka == kb {
                self.cells[root as usize].rank += 1;
            }
            root
        };
        self.cells[root as usize].owner = owner;
        root
    }

    /// Release every cell on the path from `x` to its root. Once all chunks
    /// of a set have been released this way the whole set is recycled, since
    /// every cell was created together with a chunk that points at it or at
    /// a descendant.
    pub fn release_path(&mut self, x: u32) {
        let mut y = x;
        loop {
            let p = self.cells[y as usize].parent;
            if p == FREED {
                return;
            }
            self.cells[y as usize].parent = FREED;
            self.free.push(y);
            if p == y {
                return;
            }
            y = p;
        }
    }

    /// Cells currently allocated.
    pub fn live(&self) -> usize {
        self.cells.len() - self.free.len()
    }
}
