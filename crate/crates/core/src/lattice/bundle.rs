//! Link fields of vector bundles on the lattice torus.
//!
//! A link U_μ(x) transports the fibre at x to the fibre at x+μ̂. Complex gauge
//! transformations act by V_μ(x) = g(x+μ̂)·U_μ(x)·g(x)⁻¹; the accumulated g is
//! kept as the frame, and the Hermitian metric is h = g†g.

use std::f64::consts::PI;

use super::torus::{TorusLattice, DIRS};
use crate::error::{invalid, Result};
use crate::linalg::{self, cr};
use crate::{CMat, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBundle {
    rank: usize,
    links: [Vec<CMat>; 2],
    frame: Vec<CMat>,
}

impl LatticeBundle {
    pub fn from_links(lat: &TorusLattice, rank: usize, links: [Vec<CMat>; 2]) -> Result<Self> {
        for dir in DIRS {
            if links[dir].len() != lat.sites() {
                return invalid(format!(
                    "direction {dir} has {} links for {} sites",
                    links[dir].len(),
                    lat.sites()
                ));
            }
            if links[dir].iter().any(|l| l.nrows() != rank || l.ncols() != rank) {
                return invalid(format!("direction {dir} has a link of the wrong rank"));
            }
        }
        Ok(Self {
            rank,
            links,
            frame: vec![linalg::identity(rank); lat.sites()],
        })
    }

    /// Replace the accumulated frames g(x) (used when restoring snapshots).
    pub fn with_frames(mut self, frames: Vec<CMat>) -> Result<Self> {
        if frames.len() != self.frame.len() || frames.iter().any(|g| g.nrows() != self.rank || g.ncols() != self.rank) {
            return invalid("frame array does not match the bundle");
        }
        self.frame = frames;
        Ok(self)
    }

    pub fn trivial(lat: &TorusLattice, rank: usize) -> Self {
        let one = vec![linalg::identity(rank); lat.sites()];
        Self {
            rank,
            links: [one.clone(), one.clone()],
            frame: one,
        }
    }

    /// Abelian bundle of degree 2π·d with uniform plaquette phase 2πd/N².
    pub fn constant_curvature_line(lat: &TorusLattice, d: i64) -> Result<Self> {
        let n = lat.n();
        if (d.unsigned_abs() as usize) * 4 > n * n {
            return invalid(format!("degree {d} too large for an {n}×{n} lattice (|d| ≤ N²/4)"));
        }
        let theta = 2.0 * PI * d as f64 / (n * n) as f64;
        let mut lx = Vec::with_capacity(lat.sites());
        let mut ly = Vec::with_capacity(lat.sites());
        for s in 0..lat.sites() {
            let (i, j) = lat.coords(s);
            let ux = if i == n - 1 {
                C64::from_polar(1.0, -theta * (n * j) as f64)
            } else {
                cr(1.0)
            };
            lx.push(CMat::from_element(1, 1, ux));
            ly.push(CMat::from_element(1, 1, C64::from_polar(1.0, theta * i as f64)));
        }
        Self::from_links(lat, 1, [lx, ly])
    }

    /// Direct sum of constant-curvature line bundles.
    pub fn split(lat: &TorusLattice, degrees: &[i64]) -> Result<Self> {
        let parts = degrees
            .iter()
            .map(|&d| Self::constant_curvature_line(lat, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::direct_sum(&parts))
    }

    pub fn direct_sum(parts: &[LatticeBundle]) -> Self {
        let rank: usize = parts.iter().map(|p| p.rank).sum();
        let sites = parts[0].frame.len();
        let block = |get: &dyn Fn(&LatticeBundle) -> &CMat| -> CMat {
            let mut m = CMat::zeros(rank, rank);
            let mut at = 0;
            for p in parts {
                m.view_mut((at, at), (p.rank, p.rank)).copy_from(get(p));
                at += p.rank;
            }
            m
        };
        let links = [0, 1].map(|dir| (0..sites).map(|s| block(&|p| &p.links[dir][s])).collect());
        let frame = (0..sites).map(|s| block(&|p| &p.frame[s])).collect();
        Self { rank, links, frame }
    }

    /// Tensor product (links and frames multiply by Kronecker product).
    pub fn tensor(&self, other: &LatticeBundle) -> Self {
        let links = [0, 1].map(|dir| {
            self.links[dir]
                .iter()
                .zip(&other.links[dir])
                .map(|(a, b)| linalg::kron(a, b))
                .collect()
        });
        let frame = self
            .frame
            .iter()
            .zip(&other.frame)
            .map(|(a, b)| linalg::kron(a, b))
            .collect();
        Self {
            rank: self.rank * other.rank,
            links,
            frame,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn link(&self, dir: usize, s: usize) -> &CMat {
        &self.links[dir][s]
    }

    pub fn links(&self, dir: usize) -> &[CMat] {
        &self.links[dir]
    }

    pub fn frame(&self, s: usize) -> &CMat {
        &self.frame[s]
    }

    pub fn frames(&self) -> &[CMat] {
        &self.frame
    }

    /// h(x) = g(x)†g(x).
    pub fn metric(&self, s: usize) -> CMat {
        self.frame[s].adjoint() * &self.frame[s]
    }

    /// V_μ(x) ← γ(x+μ̂)·V_μ(x)·γ(x)⁻¹ and g ← γ·g. `gamma_inv` holds γ⁻¹.
    pub fn apply_gauge(&mut self, lat: &TorusLattice, gamma: &[CMat], gamma_inv: &[CMat]) {
        for dir in DIRS {
            let old = std::mem::take(&mut self.links[dir]);
            self.links[dir] =
                crate::par::map_indexed(lat.sites(), |s| &gamma[lat.fwd(s, dir)] * &old[s] * &gamma_inv[s]);
        }
        let old = std::mem::take(&mut self.frame);
        self.frame = old.iter().zip(gamma).map(|(g, c)| c * g).collect();
    }

    /// Plaquette W_y(x)⁻¹ W_x(x+ŷ)⁻¹ W_y(x+x̂) W_x(x) of the current links.
    pub fn plaquette(&self, lat: &TorusLattice, s: usize) -> CMat {
        plaquette_of(lat, &self.links, s)
    }

    /// Largest σ_max/σ_min over all links.
    pub fn link_condition(&self) -> f64 {
        self.links
            .iter()
            .flatten()
            .map(|l| {
                if l.nrows() == 1 {
                    return 1.0;
                }
                let sv = l.singular_values();
                let max = sv.iter().cloned().fold(0.0, f64::max);
                let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
                max / min
            })
            .fold(1.0, f64::max)
    }

    /// Whether every metric is positive definite.
    pub fn metric_positive(&self) -> bool {
        (0..self.frame.len()).all(|s| self.metric(s).cholesky().is_some())
    }
}

fn inv(m: &CMat) -> CMat {
    linalg::inverse(m).unwrap_or_else(|| CMat::from_element(m.nrows(), m.ncols(), C64::new(f64::NAN, f64::NAN)))
}

pub(crate) fn plaquette_of(lat: &TorusLattice, links: &[Vec<CMat>; 2], s: usize) -> CMat {
    let wx = &links[0][s];
    let wy = &links[1][s];
    let wx_up = &links[0][lat.fwd(s, 1)];
    let wy_right = &links[1][lat.fwd(s, 0)];
    inv(wy) * inv(wx_up) * wy_right * wx
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeInfo {
    /// Σ arg det(plaquette), i.e. 2π·c₁.
    pub degree: f64,
    pub max_abs_phase: f64,
    /// Some plaquette phase is within 0.1π of the branch cut.
    pub branch_warning: bool,
}

pub fn degree_info(lat: &TorusLattice, b: &LatticeBundle) -> DegreeInfo {
    let phases: Vec<f64> = crate::par::map_indexed(lat.sites(), |s| {
        let p = b.plaquette(lat, s);
        let det = if p.nrows() == 1 { p[(0, 0)] } else { p.determinant() };
        det.arg()
    });
    let max_abs_phase = phases.iter().map(|p| p.abs()).fold(0.0, f64::max);
    DegreeInfo {
        degree: crate::par::ordered_sum(&phases),
        max_abs_phase,
        branch_warning: max_abs_phase > 0.9 * PI,
    }
}

/// Degree in 2π-normalised units (2π for the degree-one line bundle).
pub fn lattice_degree(lat: &TorusLattice, b: &LatticeBundle) -> f64 {
    degree_info(lat, b).degree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::torus::build_torus;
    use crate::random;

    #[test]
    fn trivial_and_line_degrees() {
        let lat = build_torus(16).unwrap();
        assert_eq!(lattice_degree(&lat, &LatticeBundle::trivial(&lat, 2)), 0.0);
        let l0 = LatticeBundle::constant_curvature_line(&lat, 0).unwrap();
        assert!(l0.links(0).iter().chain(l0.links(1)).all(|l| l[(0, 0)] == cr(1.0)));
        let l1 = LatticeBundle::constant_curvature_line(&lat, 1).unwrap();
        let info = degree_info(&lat, &l1);
        assert!((info.degree - 2.0 * PI).abs() < 1e-10);
        for s in 0..lat.sites() {
            let ph = l1.plaquette(&lat, s)[(0, 0)].arg();
            assert!((ph - 2.0 * PI / 256.0).abs() < 1e-12);
        }
        let lm2 = LatticeBundle::constant_curvature_line(&lat, -2).unwrap();
        assert!((lattice_degree(&lat, &lm2) + 4.0 * PI).abs() < 1e-10);
        assert!(LatticeBundle::constant_curvature_line(&lat, 65).is_err());
    }

    #[test]
    fn degree_additive_under_tensor() {
        let lat = build_torus(8).unwrap();
        let a = LatticeBundle::constant_curvature_line(&lat, 2).unwrap();
        let b = LatticeBundle::constant_curvature_line(&lat, -3).unwrap();
        let ab = a.tensor(&b);
        let sum = lattice_degree(&lat, &a) + lattice_degree(&lat, &b);
        assert!((lattice_degree(&lat, &ab) - sum).abs() < 1e-10);
        let direct = LatticeBundle::constant_curvature_line(&lat, -1).unwrap();
        for s in 0..lat.sites() {
            for dir in DIRS {
                assert!((ab.link(dir, s)[(0, 0)] - direct.link(dir, s)[(0, 0)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn complex_gauge_keeps_degree() {
        let lat = build_torus(8).unwrap();
        let mut b = LatticeBundle::split(&lat, &[1, -2]).unwrap();
        let mut rng = random::rng(4);
        let gamma: Vec<CMat> = (0..lat.sites())
            .map(|_| linalg::expm(&(random::matrix(&mut rng, 2, 2) * cr(0.3))))
            .collect();
        let gi: Vec<CMat> = gamma.iter().map(|g| linalg::inverse(g).unwrap()).collect();
        let before = lattice_degree(&lat, &b);
        b.apply_gauge(&lat, &gamma, &gi);
        assert!((lattice_degree(&lat, &b) - before).abs() < 1e-9);
        assert!(b.metric_positive());
        assert!(b.link_condition() >= 1.0);
    }
}
