//! Periodic grid on the unit 4-torus.
//!
//! Points are stored lexicographically in `(i1, i2, i3, i4)` with `i1`
//! varying slowest. Every lookup wraps around periodically.

use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS_PER_AXIS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_POINTS_PER_AXIS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS_PER_AXIS} points per axis, got {n}"
            )));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Lattice spacing `1/n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(4)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^4`, the flat cell volume.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(4)
    }

    #[inline]
    pub fn index(&self, c: [usize; 4]) -> usize {
        let n = self.n;
        ((c[0] * n + c[1]) * n + c[2]) * n + c[3]
    }

    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; 4] {
        let n = self.n;
        let mut c = [0; 4];
        for axis in (0..4).rev() {
            c[axis] = idx % n;
            idx /= n;
        }
        c
    }

    /// Index of the point `c + offset` with periodic wraparound.
    #[inline]
    pub fn offset(&self, c: [usize; 4], offset: [isize; 4]) -> usize {
        let n = self.n as isize;
        let mut w = [0usize; 4];
        for a in 0..4 {
            let v = c[a] as isize + offset[a];
            w[a] = if (0..n).contains(&v) {
                v
            } else if (-n..0).contains(&v) {
                v + n
            } else if (n..2 * n).contains(&v) {
                v - n
            } else {
                v.rem_euclid(n)
            } as usize;
        }
        self.index(w)
    }

    /// Index of the neighbor `steps` points away along `axis`.
    #[inline]
    pub fn shift(&self, c: [usize; 4], axis: usize, steps: isize) -> usize {
        let mut o = [0isize; 4];
        o[axis] = steps;
        self.offset(c, o)
    }

    /// Position of a grid point in `[0,1)^4`.
    #[inline]
    pub fn position(&self, c: [usize; 4]) -> [f64; 4] {
        let h = self.spacing();
        [c[0] as f64 * h, c[1] as f64 * h, c[2] as f64 * h, c[3] as f64 * h]
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// Minimum-image displacement `x - center` on the unit torus, componentwise in `[-1/2, 1/2)`.
#[inline]
pub fn torus_displacement(x: [f64; 4], center: [f64; 4]) -> [f64; 4] {
    let mut d = [0.0; 4];
    for a in 0..4 {
        let mut v = x[a] - center[a];
        v -= v.round();
        if v >= 0.5 {
            v -= 1.0;
        }
        d[a] = v;
    }
    d
}

#[inline]
pub fn norm4(v: [f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::new(8).unwrap();
        for idx in [0, 1, 77, 4095] {
            assert_eq!(g.index(g.coords(idx)), idx);
        }
        assert_eq!(g.len(), 4096);
        assert_eq!(g.spacing() * g.n() as f64, 1.0);
    }

    #[test]
    fn wraparound() {
        let g = Grid::new(8).unwrap();
        assert_eq!(g.shift([0, 0, 0, 0], 0, -1), g.index([7, 0, 0, 0]));
        assert_eq!(g.shift([7, 3, 0, 0], 0, 2), g.index([1, 3, 0, 0]));
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::new(4).is_err());
    }

    #[test]
    fn displacement_is_minimum_image() {
        let d = torus_displacement([0.95, 0.1, 0.5, 0.0], [0.05, 0.9, 0.0, 0.0]);
        assert!((d[0] + 0.1).abs() < 1e-12);
        assert!((d[1] - 0.2).abs() < 1e-12);
        assert!((d[2] + 0.5).abs() < 1e-12);
    }
}
