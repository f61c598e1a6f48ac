//! Periodic N×N lattice on the unit flat torus.

use crate::error::{invalid, Result};

/// Direction index: 0 = x̂, 1 = ŷ.
pub const DIRS: [usize; 2] = [0, 1];

/// N×N periodic grid with spacing 1/N and total area 1. Sites are numbered
/// row-major: site(x, y) = y·N + x.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusLattice {
    n: usize,
}

pub fn build_torus(n: usize) -> Result<TorusLattice> {
    if n < 4 {
        return invalid(format!("lattice size {n} is below the minimum of 4"));
    }
    Ok(TorusLattice { n })
}

impl TorusLattice {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.n * self.n
    }

    pub fn plaquettes(&self) -> usize {
        self.n * self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell area a².
    pub fn cell_area(&self) -> f64 {
        let a = self.spacing();
        a * a
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        (y % self.n) * self.n + (x % self.n)
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.n, s / self.n)
    }

    /// Neighbour of `s` one step forward in direction `dir`.
    pub fn fwd(&self, s: usize, dir: usize) -> usize {
        let (x, y) = self.coords(s);
        if dir == 0 {
            self.site(x + 1, y)
        } else {
            self.site(x, y + 1)
        }
    }

    /// Neighbour of `s` one step backward in direction `dir`.
    pub fn bwd(&self, s: usize, dir: usize) -> usize {
        let (x, y) = self.coords(s);
        if dir == 0 {
            self.site(x + self.n - 1, y)
        } else {
            self.site(x, y + self.n - 1)
        }
    }

    /// Site average of a scalar field, summed in site order.
    pub fn average(&self, values: &[f64]) -> f64 {
        crate::par::ordered_sum(values) / self.sites() as f64
    }
}
