//! k-th nearest-neighbor distances on a uniform cell grid.

use rayon::prelude::*;

use crate::geometry::Vec3;

struct Grid {
    lo: Vec3,
    h: f64,
    dims: [i64; 3],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Grid {
    fn new(points: &[Vec3], per_cell: f64) -> Grid {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        let ext = hi - lo;
        let vol = (ext.x * ext.y * ext.z).max(1e-300);
        let mut h = (vol * per_cell / points.len() as f64).cbrt();
        let max_side = ext.x.max(ext.y).max(ext.z);
        if !(h > 0.0) || !h.is_finite() {
            h = max_side.max(1.0);
        }
        // keep the cell count bounded for thin or degenerate clouds
        h = h.max(max_side / 256.0);
        let dims = [
            (ext.x / h) as i64 + 1,
            (ext.y / h) as i64 + 1,
            (ext.z / h) as i64 + 1,
        ];
        let ncell = (dims[0] * dims[1] * dims[2]) as usize;
        let mut grid = Grid {
            lo,
            h,
            dims,
            start: vec![0; ncell + 1],
            items: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell(*p))).collect();
        for &c in &cells {
            grid.start[c + 1] += 1;
        }
        for c in 0..ncell {
            grid.start[c + 1] += grid.start[c];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn cell(&self, p: Vec3) -> [i64; 3] {
        let d = p - self.lo;
        [
            ((d.x / self.h) as i64).clamp(0, self.dims[0] - 1),
            ((d.y / self.h) as i64).clamp(0, self.dims[1] - 1),
            ((d.z / self.h) as i64).clamp(0, self.dims[2] - 1),
        ]
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        ((c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]) as usize
    }

    fn members(&self, c: [i64; 3]) -> &[usize] {
        let f = self.flat(c);
        &self.items[self.start[f]..self.start[f + 1]]
    }
}

/// Distance from each point to its `k`-th nearest other point.
pub fn kth_neighbor_distances(points: &[Vec3], k: usize) -> Vec<f64> {
    let grid = Grid::new(points, 2.0 * k as f64);
    let max_ring = grid.dims.iter().copied().max().unwrap_or(1);
    points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let c = grid.cell(p);
            // sorted list of the k smallest squared distances seen so far
            let mut best: Vec<f64> = Vec::with_capacity(k + 1);
            for ring in 0..=max_ring {
                for dx in -ring..=ring {
                    for dy in -ring..=ring {
                        for dz in -ring..=ring {
                            if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                                continue;
                            }
                            let q = [c[0] + dx, c[1] + dy, c[2] + dz];
                            if (0..3).any(|a| q[a] < 0 || q[a] >= grid.dims[a]) {
                                continue;
                            }
                            for &j in grid.members(q) {
                                if j == i {
                                    continue;
                                }
                                let d2 = (points[j] - p).norm2();
                                if best.len() < k || d2 < best[k - 1] {
                                    let pos = best.partition_point(|&b| b <= d2);
                                    best.insert(pos, d2);
                                    best.truncate(k);
                                }
                            }
                        }
                    }
                }
                // every point within ring·h of p has now been visited
                let reach = ring as f64 * grid.h;
                if best.len() == k && best[k - 1] <= reach * reach {
                    break;
                }
            }
            best.get(k - 1).copied().unwrap_or(f64::INFINITY).sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let pts: Vec<Vec3> = (0..300)
            .map(|i| {
                let t = i as f64;
                Vec3::new((t * 0.37).sin() * 3.0, (t * 1.3).cos(), (t * 0.011).sin() * t / 100.0)
            })
            .collect();
        for k in [1, 4] {
            let fast = kth_neighbor_distances(&pts, k);
            for (i, p) in pts.iter().enumerate() {
                let mut d: Vec<f64> = pts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| (*q - *p).norm())
                    .collect();
                d.sort_by(f64::total_cmp);
                assert_eq!(fast[i], d[k - 1]);
            }
        }
    }
}
