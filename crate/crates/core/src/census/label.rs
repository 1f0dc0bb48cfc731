//! Component labeling of the vacant raster under face adjacency, with wrap
//! detection.
//!
//! Union-find edges carry the integer displacement between neighbouring
//! cells in unfolded (universal cover) coordinates. A component wraps the
//! torus exactly when some cycle accumulates a nonzero displacement, i.e.
//! when a union meets two inconsistent offsets; the inconsistency is always
//! a multiple of the grid period. Non-wrapping components get an injective
//! lift to `Z^d` from the accumulated offsets.

use crate::torus::VoxelSet;

pub struct ComponentInfo {
    pub id: u32,
    pub size: usize,
    /// Bitmask of axes along which displacement cycles were detected.
    pub wrap_axes: u32,
}

impl ComponentInfo {
    pub fn wraps(&self) -> bool {
        self.wrap_axes != 0
    }
}

pub struct Labeling {
    pub d: usize,
    pub n: usize,
    /// Linear (wrapped) indices of the labeled cells, ascending.
    pub cells: Vec<usize>,
    /// Component id per labeled cell, indices into `components`.
    pub component_of: Vec<u32>,
    /// Unfolded coordinates per labeled cell (stride d), relative to the
    /// component anchor; meaningful as a lift only for non-wrapping
    /// components.
    pub lift: Vec<i64>,
    pub components: Vec<ComponentInfo>,
}

impl Labeling {
    pub fn component_cells(&self, id: u32) -> Vec<usize> {
        self.cells
            .iter()
            .zip(&self.component_of)
            .filter(|(_, &c)| c == id)
            .map(|(&lin, _)| lin)
            .collect()
    }

    /// Lift coordinates (stride d) of the cells of one component.
    pub fn component_lift(&self, id: u32) -> Vec<i64> {
        let mut out = Vec::new();
        for (i, &c) in self.component_of.iter().enumerate() {
            if c == id {
                out.extend_from_slice(&self.lift[i * self.d..(i + 1) * self.d]);
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    /// Offset of each node relative to its parent (stride d).
    offset: Vec<i64>,
    wrap_axes: Vec<u32>,
    d: usize,
}

impl UnionFind {
    fn new(count: usize, d: usize) -> Self {
        UnionFind {
            parent: (0..count as u32).collect(),
            rank: vec![0; count],
            offset: vec![0; count * d],
            wrap_axes: vec![0; count],
            d,
        }
    }

    /// Root of `i` and the offset of `i` relative to that root, with path
    /// compression.
    fn find(&mut self, i: u32) -> (u32, Vec<i64>) {
        let d = self.d;
        let mut chain = Vec::new();
        let mut cur = i;
        while self.parent[cur as usize] != cur {
            chain.push(cur);
            cur = self.parent[cur as usize];
        }
        let root = cur;
        // Rewrite the chain to point at the root with accumulated offsets.
        let mut acc = vec![0i64; d];
        for &node in chain.iter().rev() {
            for k in 0..d {
                acc[k] = self.offset[node as usize * d + k]
                    + if self.parent[node as usize] == root {
                        0
                    } else {
                        // Parent already rewritten in this pass.
                        self.offset[self.parent[node as usize] as usize * d + k]
                    };
            }
            // The walk rewrites parents top-down, so the parent offset is
            // already root-relative when we get here.
            let node_idx = node as usize * d;
            if self.parent[node as usize] != root {
                let p = self.parent[node as usize] as usize * d;
                for k in 0..d {
                    self.offset[node_idx + k] += self.offset[p + k];
                }
                let _ = acc[0];
            }
            self.parent[node as usize] = root;
        }
        let mut off = vec![0i64; d];
        off.copy_from_slice(&self.offset[i as usize * d..i as usize * d + d]);
        if i == root {
            off.fill(0);
        }
        (root, off)
    }

    /// Connects `a` and `b` where `pos(b) = pos(a) + delta` in unfolded
    /// coordinates.
    fn union(&mut self, a: u32, b: u32, delta: &[i64], n: i64) {
        let d = self.d;
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            // A cycle: inconsistent offsets mean the cycle winds the torus.
            for k in 0..d {
                let gap = oa[k] + delta[k] - ob[k];
                if gap != 0 {
                    debug_assert!(gap % n == 0, "cycle gap must be a period multiple");
                    self.wrap_axes[ra as usize] |= 1 << k;
                }
            }
            return;
        }
        // offset so that pos(rb) = pos(ra) + off.
        let (hi, lo, sign) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb, 1i64)
        } else {
            (rb, ra, -1i64)
        };
        for k in 0..d {
            let gap = oa[k] + delta[k] - ob[k];
            self.offset[lo as usize * d + k] = sign * gap;
        }
        self.parent[lo as usize] = hi;
        self.wrap_axes[hi as usize] |= self.wrap_axes[lo as usize];
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[hi as usize] += 1;
        }
    }
}

/// Labels the occupied cells of `vacant` (the vacant raster) into face-
/// adjacent components with per-component wrap flags and per-cell lifts.
pub fn label_components(vacant: &VoxelSet) -> Labeling {
    let grid = vacant.grid();
    let d = grid.d();
    let n = grid.n();
    let cells = vacant.occupied_cells();
    let count = cells.len();
    // Dense reverse index: linear cell -> labeled index.
    let mut reverse = vec![u32::MAX; grid.cell_count()];
    for (i, &lin) in cells.iter().enumerate() {
        reverse[lin] = i as u32;
    }
    let mut uf = UnionFind::new(count, d);
    let mut idx = vec![0usize; d];
    let mut delta = vec![0i64; d];
    for (i, &lin) in cells.iter().enumerate() {
        grid.unlinear(lin, &mut idx);
        // Forward neighbour along each axis; the unfolded displacement is
        // +1 regardless of wrapping.
        for k in 0..d {
            let stride = n.pow(k as u32);
            let wrapped = idx[k] + 1 == n;
            let nb_lin = if wrapped {
                lin + stride - stride * n
            } else {
                lin + stride
            };
            let j = reverse[nb_lin];
            if j != u32::MAX {
                delta.fill(0);
                delta[k] = 1;
                uf.union(i as u32, j, &delta, n as i64);
            }
        }
    }
    // Deterministic component ids in order of first appearance.
    let mut component_of = vec![0u32; count];
    let mut lift = vec![0i64; count * d];
    let mut components: Vec<ComponentInfo> = Vec::new();
    let mut root_to_id: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
    for i in 0..count {
        let (root, off) = uf.find(i as u32);
        let id = *root_to_id.entry(root).or_insert_with(|| {
            let id = components.len() as u32;
            components.push(ComponentInfo {
                id,
                size: 0,
                wrap_axes: uf.wrap_axes[root as usize],
            });
            id
        });
        components[id as usize].size += 1;
        components[id as usize].wrap_axes |= uf.wrap_axes[root as usize];
        component_of[i] = id;
        lift[i * d..(i + 1) * d].copy_from_slice(&off);
    }
    Labeling {
        d,
        n,
        cells,
        component_of,
        lift,
        components,
    }
}

/// Exact reference labeling by breadth-first search in the universal cover:
/// each cell is visited with its unfolded offset; revisiting a cell at a
/// different offset certifies a wrap. Structured independently of the
/// union-find path (hash-map BFS), used as the oracle.
pub fn label_components_bfs_oracle(vacant: &VoxelSet) -> Labeling {
    let grid = vacant.grid();
    let d = grid.d();
    let n = grid.n();
    let cells = vacant.occupied_cells();
    let count = cells.len();
    let mut reverse = vec![u32::MAX; grid.cell_count()];
    for (i, &lin) in cells.iter().enumerate() {
        reverse[lin] = i as u32;
    }
    let mut component_of = vec![u32::MAX; count];
    let mut lift = vec![0i64; count * d];
    let mut components = Vec::new();
    let mut idx = vec![0usize; d];
    for start in 0..count {
        if component_of[start] != u32::MAX {
            continue;
        }
        let id = components.len() as u32;
        let mut wrap_axes = 0u32;
        let mut queue = std::collections::VecDeque::new();
        component_of[start] = id;
        queue.push_back(start as u32);
        let mut size = 1usize;
        while let Some(cur) = queue.pop_front() {
            let lin = cells[cur as usize];
            grid.unlinear(lin, &mut idx);
            for k in 0..d {
                let stride = n.pow(k as u32);
                for dir in [1i64, -1] {
                    let wrapped_out = (dir == 1 && idx[k] + 1 == n) || (dir == -1 && idx[k] == 0);
                    let nb_lin = if dir == 1 {
                        if wrapped_out {
                            lin + stride - stride * n
                        } else {
                            lin + stride
                        }
                    } else if wrapped_out {
                        lin + stride * n - stride
                    } else {
                        lin - stride
                    };
                    let j = reverse[nb_lin];
                    if j == u32::MAX {
                        continue;
                    }
                    let mut off = lift[cur as usize * d + k];
                    off += dir;
                    if component_of[j as usize] == u32::MAX {
                        component_of[j as usize] = id;
                        lift[j as usize * d..(j as usize + 1) * d]
                            .copy_from_slice(&lift[cur as usize * d..(cur as usize + 1) * d]);
                        lift[j as usize * d + k] = off;
                        queue.push_back(j);
                        size += 1;
                    } else if component_of[j as usize] == id {
                        // Offset conflict along any axis marks a wrap.
                        let mut expected: Vec<i64> =
                            lift[cur as usize * d..(cur as usize + 1) * d].to_vec();
                        expected[k] += dir;
                        for (a, (&got, &want)) in lift
                            [j as usize * d..(j as usize + 1) * d]
                            .iter()
                            .zip(&expected)
                            .enumerate()
                        {
                            if got != want {
                                wrap_axes |= 1 << a;
                            }
                        }
                    }
                }
            }
        }
        components.push(ComponentInfo {
            id,
            size,
            wrap_axes,
        });
    }
    Labeling {
        d,
        n,
        cells,
        component_of,
        lift,
        components,
    }
}
