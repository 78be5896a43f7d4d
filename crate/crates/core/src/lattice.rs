//! Geometry of the periodic L×L square lattice.
//!
//! Vertices are indexed row-major, `v = y·L + x`. Every vertex owns two
//! edges: the right-going edge `2v` from `(x, y)` to `(x+1, y)` and the
//! down-going edge `2v + 1` from `(x, y)` to `(x, y+1)`, all coordinates
//! taken mod L. The first endpoint of an edge is its origin, so the edge
//! difference is `S(second) − S(first)`.
//!
//! Plaquette `y·L + x` is the face whose top-left corner is vertex
//! `(x, y)`. Its four edges are listed as
//!
//! ```text
//!   (x,y) ──top(+)──▶ (x+1,y)
//!     │                  │
//!  left(−)            right(+)
//!     ▼                  ▼
//!  (x,y+1) ─bottom(−)▶ (x+1,y+1)
//! ```
//!
//! i.e. `[top, right, bottom, left]` with signs `[+1, +1, −1, −1]`. With this
//! choice the signed sum of edge differences around any plaquette is the
//! circulation `(S₁₀−S₀₀) + (S₁₁−S₁₀) − (S₁₁−S₀₁) − (S₀₁−S₀₀) = 0`.

use crate::error::{Error, Result};

/// The L×L torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    size: usize,
    // Per-vertex neighbours, [right, down, left, up].
    neighbors: Vec<[u32; 4]>,
}

impl Lattice {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid(format!(
                "lattice size must be at least 2, got {size}"
            )));
        }
        if size * size > u32::MAX as usize / 2 {
            return Err(Error::invalid(format!("lattice size {size} is too large")));
        }
        let n = size * size;
        let neighbors = (0..n)
            .map(|v| {
                let (x, y) = (v % size, v / size);
                let at = |x: usize, y: usize| (y * size + x) as u32;
                [
                    at((x + 1) % size, y),
                    at(x, (y + 1) % size),
                    at((x + size - 1) % size, y),
                    at(x, (y + size - 1) % size),
                ]
            })
            .collect();
        Ok(Self { size, neighbors })
    }

    /// Linear size L.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_vertices(&self) -> usize {
        self.size * self.size
    }

    pub fn num_edges(&self) -> usize {
        2 * self.size * self.size
    }

    pub fn num_plaquettes(&self) -> usize {
        self.size * self.size
    }

    pub fn vertex_index(&self, x: usize, y: usize) -> usize {
        (y % self.size) * self.size + (x % self.size)
    }

    /// Coordinates `(x, y)` of a vertex.
    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.size, v / self.size)
    }

    /// Neighbours of `v` as `[right, down, left, up]`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> [u32; 4] {
        self.neighbors[v]
    }

    pub fn right_edge(&self, v: usize) -> usize {
        2 * v
    }

    pub fn down_edge(&self, v: usize) -> usize {
        2 * v + 1
    }

    /// Ordered endpoints `(origin, target)` of an edge.
    pub fn edge_endpoints(&self, edge: usize) -> Result<(usize, usize)> {
        if edge >= self.num_edges() {
            return Err(Error::OutOfRange {
                index: edge,
                limit: self.num_edges(),
            });
        }
        let v = edge / 2;
        let nb = self.neighbors[v];
        let target = if edge % 2 == 0 { nb[0] } else { nb[1] };
        Ok((v, target as usize))
    }

    /// The four `(edge, sign)` pairs of a plaquette in the order
    /// top, right, bottom, left with signs `+1, +1, −1, −1`.
    pub fn incidence(&self, plaquette: usize) -> Result<[(usize, i8); 4]> {
        if plaquette >= self.num_plaquettes() {
            return Err(Error::OutOfRange {
                index: plaquette,
                limit: self.num_plaquettes(),
            });
        }
        let v = plaquette;
        let nb = self.neighbors[v];
        let right_of = nb[0] as usize;
        let below = nb[1] as usize;
        Ok([
            (self.right_edge(v), 1),
            (self.down_edge(right_of), 1),
            (self.right_edge(below), -1),
            (self.down_edge(v), -1),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let lat = Lattice::new(2).unwrap();
        assert_eq!(
            (lat.num_vertices(), lat.num_edges(), lat.num_plaquettes()),
            (4, 8, 4)
        );
        let lat = Lattice::new(16).unwrap();
        assert_eq!((lat.num_vertices(), lat.num_edges()), (256, 512));
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(Lattice::new(0).is_err());
        assert!(Lattice::new(1).is_err());
    }

    #[test]
    fn origin_plaquette_l3() {
        let lat = Lattice::new(3).unwrap();
        // top = right edge of (0,0); right = down edge of (1,0);
        // bottom = right edge of (0,1); left = down edge of (0,0)
        assert_eq!(
            lat.incidence(0).unwrap(),
            [(0, 1), (3, 1), (6, -1), (1, -1)]
        );
        assert!(lat.incidence(9).is_err());
    }

    #[test]
    fn endpoints_follow_convention() {
        let lat = Lattice::new(4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let v = lat.vertex_index(x, y);
                assert_eq!(
                    lat.edge_endpoints(lat.right_edge(v)).unwrap(),
                    (v, lat.vertex_index(x + 1, y))
                );
                assert_eq!(
                    lat.edge_endpoints(lat.down_edge(v)).unwrap(),
                    (v, lat.vertex_index(x, y + 1))
                );
            }
        }
        assert!(lat.edge_endpoints(32).is_err());
    }

    #[test]
    fn every_vertex_has_degree_four() {
        for l in 2..8 {
            let lat = Lattice::new(l).unwrap();
            let mut degree = vec![0; lat.num_vertices()];
            for e in 0..lat.num_edges() {
                let (a, b) = lat.edge_endpoints(e).unwrap();
                degree[a] += 1;
                degree[b] += 1;
            }
            assert!(degree.iter().all(|&k| k == 4));
        }
    }

    #[test]
    fn each_edge_appears_twice_with_opposite_signs() {
        for l in 2..9 {
            let lat = Lattice::new(l).unwrap();
            let mut signed = vec![0i32; lat.num_edges()];
            let mut count = vec![0u32; lat.num_edges()];
            for p in 0..lat.num_plaquettes() {
                for (e, s) in lat.incidence(p).unwrap() {
                    signed[e] += s as i32;
                    count[e] += 1;
                }
            }
            assert!(signed.iter().all(|&s| s == 0), "L={l}");
            assert!(count.iter().all(|&c| c == 2), "L={l}");
        }
    }

    #[test]
    fn shared_edges_have_opposite_signs() {
        let lat = Lattice::new(5).unwrap();
        // vertical neighbours share a horizontal edge
        let above = lat.incidence(lat.vertex_index(2, 1)).unwrap();
        let below = lat.incidence(lat.vertex_index(2, 2)).unwrap();
        assert_eq!(above[2].0, below[0].0);
        assert_eq!(above[2].1, -below[0].1);
        // horizontal neighbours share a vertical edge
        let left = lat.incidence(lat.vertex_index(1, 3)).unwrap();
        let right = lat.incidence(lat.vertex_index(2, 3)).unwrap();
        assert_eq!(left[1].0, right[3].0);
        assert_eq!(left[1].1, -right[3].1);
    }
}
