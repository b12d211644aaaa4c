//! Candidate-pair collection: uniform spatial hash over primitive bounding
//! boxes, with a brute-force mode that serves as the correctness oracle.

use std::collections::BTreeMap;

/// Axis-aligned box; unused axes (dim < 3) stay at zero width.
#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn empty() -> Self {
        Self { min: [f64::INFINITY; 3], max: [f64::NEG_INFINITY; 3] }
    }

    pub fn of_points<'a>(dim: usize, pts: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            for k in 0..dim {
                b.min[k] = b.min[k].min(p[k]);
                b.max[k] = b.max[k].max(p[k]);
            }
        }
        for k in dim..3 {
            b.min[k] = 0.0;
            b.max[k] = 0.0;
        }
        b
    }

    pub fn inflate(mut self, r: f64) -> Self {
        for k in 0..3 {
            self.min[k] -= r;
            self.max[k] += r;
        }
        self
    }

    pub fn union(mut self, o: &Aabb) -> Self {
        for k in 0..3 {
            self.min[k] = self.min[k].min(o.min[k]);
            self.max[k] = self.max[k].max(o.max[k]);
        }
        self
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.max[k] && self.max[k] >= o.min[k])
    }
}

/// Uniform grid hash over inserted AABBs. Query results are sorted and
/// deduplicated, so downstream iteration order is deterministic.
pub struct SpatialHash {
    cell: f64,
    map: BTreeMap<[i64; 3], Vec<usize>>,
    boxes: Vec<Aabb>,
}

impl SpatialHash {
    pub fn build(boxes: Vec<Aabb>, cell: f64) -> Self {
        let cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        let mut map: BTreeMap<[i64; 3], Vec<usize>> = BTreeMap::new();
        for (i, b) in boxes.iter().enumerate() {
            let lo = Self::grid_of(b.min, cell);
            let hi = Self::grid_of(b.max, cell);
            for gx in lo[0]..=hi[0] {
                for gy in lo[1]..=hi[1] {
                    for gz in lo[2]..=hi[2] {
                        map.entry([gx, gy, gz]).or_default().push(i);
                    }
                }
            }
        }
        Self { cell, map, boxes }
    }

    fn grid_of(p: [f64; 3], cell: f64) -> [i64; 3] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    }

    /// Indices of inserted boxes overlapping `q`.
    pub fn query(&self, q: &Aabb) -> Vec<usize> {
        let lo = Self::grid_of(q.min, self.cell);
        let hi = Self::grid_of(q.max, self.cell);
        let mut out = Vec::new();
        for gx in lo[0]..=hi[0] {
            for gy in lo[1]..=hi[1] {
                for gz in lo[2]..=hi[2] {
                    if let Some(v) = self.map.get(&[gx, gy, gz]) {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out.retain(|&i| self.boxes[i].overlaps(q));
        out
    }
}

/// Brute-force oracle: all indices whose box overlaps `q`.
pub fn brute_query(boxes: &[Aabb], q: &Aabb) -> Vec<usize> {
    boxes
        .iter()
        .enumerate()
        .filter(|(_, b)| b.overlaps(q))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hash_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let boxes: Vec<Aabb> = (0..300)
            .map(|_| {
                let c = [
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                ];
                let e = rng.random_range(0.01..0.4);
                Aabb {
                    min: [c[0] - e, c[1] - e, c[2] - e],
                    max: [c[0] + e, c[1] + e, c[2] + e],
                }
            })
            .collect();
        let hash = SpatialHash::build(boxes.clone(), 0.5);
        for _ in 0..100 {
            let c = [
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ];
            let q = Aabb { min: c, max: c }.inflate(rng.random_range(0.05..1.0));
            assert_eq!(hash.query(&q), brute_query(&boxes, &q));
        }
    }
}
