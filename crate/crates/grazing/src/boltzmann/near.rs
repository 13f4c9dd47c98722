//! Neighbor lookup in velocity space by sorted cell keys.

use crate::geometry::Vec3;

pub struct NearGrid {
    h: f64,
    keys: Vec<([i64; 3], usize)>,
}

impl NearGrid {
    pub fn new(points: &[Vec3], h: f64) -> NearGrid {
        let mut keys: Vec<([i64; 3], usize)> = points.iter().enumerate().map(|(i, p)| (cell(*p, h), i)).collect();
        keys.sort_unstable();
        NearGrid { h, keys }
    }

    /// Indices `j ≠ i` with `|points[j] - p| < radius`, in increasing index order.
    /// `radius` must not exceed the cell size.
    pub fn within(&self, points: &[Vec3], i: usize, p: Vec3, radius: f64, out: &mut Vec<usize>) {
        debug_assert!(radius <= self.h);
        out.clear();
        let c = cell(p, self.h);
        let r2 = radius * radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let q = [c[0] + dx, c[1] + dy, c[2] + dz];
                    let start = self.keys.partition_point(|(k, _)| *k < q);
                    for &(k, j) in &self.keys[start..] {
                        if k != q {
                            break;
                        }
                        if j != i && (points[j] - p).norm2() < r2 {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

fn cell(p: Vec3, h: f64) -> [i64; 3] {
    [(p.x / h).floor() as i64, (p.y / h).floor() as i64, (p.z / h).floor() as i64]
}
