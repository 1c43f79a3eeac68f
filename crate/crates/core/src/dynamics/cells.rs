//! Linked-cell neighbour search over a rectangular (non-periodic) grid.

const EMPTY: u32 = u32::MAX;

pub(crate) struct CellList {
    nx: usize,
    ny: usize,
    head: Vec<u32>,
    next: Vec<u32>,
}

impl CellList {
    /// `cell(i)` must return coordinates within `nx × ny`.
    pub(crate) fn build(n: usize, nx: usize, ny: usize, cell: impl Fn(usize) -> (usize, usize)) -> Self {
        let mut head = vec![EMPTY; nx * ny];
        let mut next = vec![EMPTY; n];
        // Iterate in reverse so each cell's chain is in ascending index order.
        for i in (0..n).rev() {
            let (cx, cy) = cell(i);
            let c = cy * nx + cx;
            next[i] = head[c];
            head[c] = i as u32;
        }
        Self { nx, ny, head, next }
    }

    /// Calls `f(i, j)` with `i < j` for every pair in the same or adjacent cells.
    pub(crate) fn for_each_pair(&self, mut f: impl FnMut(usize, usize)) {
        const HALF_STENCIL: [(isize, isize); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];
        for cy in 0..self.ny {
            for cx in 0..self.nx {
                let c = cy * self.nx + cx;
                let mut i = self.head[c];
                while i != EMPTY {
                    let mut j = self.next[i as usize];
                    while j != EMPTY {
                        f(i as usize, j as usize);
                        j = self.next[j as usize];
                    }
                    for (ox, oy) in HALF_STENCIL {
                        let (nx, ny) = (cx as isize + ox, cy as isize + oy);
                        if nx < 0 || ny < 0 || nx >= self.nx as isize || ny >= self.ny as isize {
                            continue;
                        }
                        let mut j = self.head[ny as usize * self.nx + nx as usize];
                        while j != EMPTY {
                            let (a, b) = if i < j { (i, j) } else { (j, i) };
                            f(a as usize, b as usize);
                            j = self.next[j as usize];
                        }
                    }
                    i = self.next[i as usize];
                }
            }
        }
    }
}

/// Number of cells along an axis of length `extent` with cells no smaller
/// than `cutoff`.
pub(crate) fn cells_along(extent: f64, cutoff: f64) -> usize {
    ((extent / cutoff).floor() as usize).clamp(1, 4096)
}

/// Merges cells pairwise until the grid has at most a few cells per
/// particle, so sparse systems in large boxes do not pay for empty cells.
/// Merged cells stay no smaller than the cutoff.
pub(crate) fn coarsen(cells: [usize; 2], n: usize) -> [usize; 2] {
    let [mut nx, mut ny] = cells;
    let budget = 4 * n.max(1);
    while nx * ny > budget && (nx > 1 || ny > 1) {
        nx = (nx / 2).max(1);
        ny = (ny / 2).max(1);
    }
    [nx, ny]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_every_adjacent_pair_once() {
        // 3×3 grid, one particle per cell: each unordered adjacent pair once.
        let cells: Vec<(usize, usize)> = (0..9).map(|i| (i % 3, i / 3)).collect();
        let list = CellList::build(9, 3, 3, |i| cells[i]);
        let mut pairs = Vec::new();
        list.for_each_pair(|i, j| pairs.push((i, j)));
        pairs.sort();
        let mut expected = Vec::new();
        for i in 0..9 {
            for j in i + 1..9 {
                let (a, b) = (cells[i], cells[j]);
                if a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1 {
                    expected.push((i, j));
                }
            }
        }
        assert_eq!(pairs, expected);
    }

    #[test]
    fn coarsening_halves_until_within_budget() {
        assert_eq!(coarsen([64, 64], 1024), [64, 64]);
        assert_eq!(coarsen([256, 256], 500), [32, 32]);
        assert_eq!(coarsen([256, 3], 2), [8, 1]);
        assert_eq!(coarsen([5, 5], 0), [2, 2]);
    }
}
