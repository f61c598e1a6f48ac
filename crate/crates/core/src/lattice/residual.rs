//! Chern curvature of lattice link fields and the pointwise vortex residual.
//!
//! Each complexified link is split as V = Ŵ·(V†V)^{1/2} with Ŵ unitary. With
//! P_μ(x) = ½log(V_μ(x)†V_μ(x)), P̃_μ(x) = ½log(V_μ(x−μ̂)V_μ(x−μ̂)†) and
//! H_μ = −(P_μ + P̃_μ)/(2a), the Hermitian curvature is
//!
//! √−1ΛF(x) = −√−1·log(plaq_Ŵ(x))/a² + Σ_μ(P̃_μ(x) − P_μ(x))/a² − √−1[H_x, H_y].
//!
//! For a unitary link field this is the plaquette curvature; for an abelian
//! complex gauge e^u it adds −Δu. The trace of the second term telescopes, so
//! the site sum of Tr √−1ΛF·a² equals the lattice degree.

use super::bundle::{plaquette_of, LatticeBundle};
use super::state::LatticePairState;
use super::torus::{TorusLattice, DIRS};
use crate::algebra::{AlgebraElement, FactorMode};
use crate::error::Result;
use crate::linalg::{self, cr, I};
use crate::moment::mu_full;
use crate::{par, CMat};

/// Polar data of one link field.
pub struct PolarLinks {
    /// Unitary parts Ŵ_μ(x), direction-major.
    pub w: [Vec<CMat>; 2],
    /// P_μ(x) = ½log(V†V).
    pub p: [Vec<CMat>; 2],
}

pub fn polar_links(b: &LatticeBundle) -> PolarLinks {
    let mut w: [Vec<CMat>; 2] = [Vec::new(), Vec::new()];
    let mut p: [Vec<CMat>; 2] = [Vec::new(), Vec::new()];
    for dir in DIRS {
        let parts: Vec<(CMat, CMat)> = par::map_slice(b.links(dir), linalg::polar_log);
        let (ws, ps): (Vec<CMat>, Vec<CMat>) = parts.into_iter().unzip();
        w[dir] = ws;
        p[dir] = ps;
    }
    PolarLinks { w, p }
}

/// √−1ΛF per site (Hermitian).
pub fn chern_curvature(lat: &TorusLattice, b: &LatticeBundle) -> Vec<CMat> {
    let pl = polar_links(b);
    chern_from_polar(lat, &pl)
}

pub fn chern_from_polar(lat: &TorusLattice, pl: &PolarLinks) -> Vec<CMat> {
    let a = lat.spacing();
    let inv_a2 = 1.0 / (a * a);
    par::map_indexed(lat.sites(), |s| {
        let plaq = plaquette_of(lat, &pl.w, s);
        let mut f = linalg::unitary_log(&plaq) * (-I * inv_a2);
        let mut h = [CMat::zeros(0, 0), CMat::zeros(0, 0)];
        for dir in DIRS {
            let t = lat.bwd(s, dir);
            let wt = &pl.w[dir][t];
            let pt = wt * &pl.p[dir][t] * wt.adjoint();
            let p = &pl.p[dir][s];
            f += (&pt - p) * cr(inv_a2);
            h[dir] = (p + &pt) * cr(-0.5 / a);
        }
        if f.nrows() > 1 {
            f -= (&h[0] * &h[1] - &h[1] * &h[0]) * I;
        }
        linalg::herm_part(&f)
    })
}

/// Pointwise residual √−1·(π_𝔥(ΛF + μ(Φ)) − c_ℋ) per site and factor, as
/// Hermitian matrices; constant-mode factors carry their site average and
/// frozen factors are zero.
#[derive(Clone, Debug)]
pub struct ResidualField {
    /// herm[s][i]: factor i at site s.
    pub herm: Vec<Vec<CMat>>,
    /// √((1/N²)Σ_x Σ_i ‖·‖²).
    pub l2: f64,
    /// max_x √(Σ_i ‖·‖²).
    pub linf: f64,
    /// Per-factor L² norms.
    pub factor_l2: Vec<f64>,
}

impl ResidualField {
    /// R(x) as an element of the compact algebra: −√−1 times the Hermitian form.
    pub fn algebra_at(&self, s: usize) -> AlgebraElement {
        AlgebraElement::compact_unchecked(self.herm[s].iter().map(|h| h * (-I)).collect())
    }

    /// Site average of Tr of factor i (real part).
    pub fn average_trace(&self, i: usize) -> f64 {
        let v: Vec<f64> = self.herm.iter().map(|h| linalg::trace(&h[i]).re).collect();
        par::ordered_sum(&v) / self.herm.len() as f64
    }

    /// Per-site Frobenius norm over all factors.
    pub fn site_norms(&self) -> Vec<f64> {
        self.herm
            .iter()
            .map(|h| h.iter().map(|m| linalg::re_inner(m, m)).sum::<f64>().sqrt())
            .collect()
    }
}

/// Hermitian pieces per site and factor before averaging: (√−1ΛF_i, √−1μ_i).
pub fn residual_parts(state: &LatticePairState) -> Result<(Vec<Option<Vec<CMat>>>, Vec<Vec<CMat>>)> {
    let lat = *state.lattice();
    let curv: Vec<Option<Vec<CMat>>> = state
        .factors()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if state.setting().mode(i) == FactorMode::Frozen {
                None
            } else {
                Some(chern_curvature(&lat, b))
            }
        })
        .collect();
    let mus: Vec<Result<Vec<CMat>>> = par::map_slice(state.section(), |phi| {
        Ok(mu_full(phi, state.rep())?
            .into_blocks()
            .into_iter()
            .map(|b| linalg::herm_part(&(b * I)))
            .collect())
    });
    let mus = mus.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((curv, mus))
}

pub fn pointwise_residual(state: &LatticePairState) -> Result<ResidualField> {
    let lat = *state.lattice();
    let (curv, mus) = residual_parts(state)?;
    let setting = state.setting();
    let dims = state.rep().group().dims().to_vec();
    let sites = lat.sites();
    let mut herm: Vec<Vec<CMat>> = (0..sites)
        .map(|s| {
            dims.iter()
                .enumerate()
                .map(|(i, &n)| match &curv[i] {
                    None => CMat::zeros(n, n),
                    Some(c) => &c[s] + &mus[s][i] - linalg::identity(n) * cr(setting.c_values()[i]),
                })
                .collect()
        })
        .collect();
    for (i, &n) in dims.iter().enumerate() {
        if setting.mode(i) != FactorMode::Constant {
            continue;
        }
        let mut avg = CMat::zeros(n, n);
        for h in &herm {
            avg += &h[i];
        }
        avg *= cr(1.0 / sites as f64);
        for h in herm.iter_mut() {
            h[i] = avg.clone();
        }
    }
    let per_site: Vec<Vec<f64>> = herm
        .iter()
        .map(|h| h.iter().map(|m| linalg::re_inner(m, m)).collect())
        .collect();
    let factor_l2 = (0..dims.len())
        .map(|i| {
            let v: Vec<f64> = per_site.iter().map(|p| p[i]).collect();
            (par::ordered_sum(&v) / sites as f64).sqrt()
        })
        .collect();
    let totals: Vec<f64> = per_site.iter().map(|p| p.iter().sum()).collect();
    let l2 = (par::ordered_sum(&totals) / sites as f64).sqrt();
    let linf = totals.iter().fold(0.0f64, |a, &b| a.max(b.sqrt()));
    Ok(ResidualField {
        herm,
        l2,
        linf,
        factor_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::bundle::lattice_degree;
    use crate::lattice::torus::build_torus;
    use crate::random;

    #[test]
    fn unitary_line_bundle_curvature_is_constant() {
        let lat = build_torus(8).unwrap();
        let b = LatticeBundle::constant_curvature_line(&lat, 2).unwrap();
        let f = chern_curvature(&lat, &b);
        for m in &f {
            assert!((m[(0, 0)].re - 4.0 * std::f64::consts::PI).abs() < 1e-10);
        }
    }

    #[test]
    fn abelian_complex_gauge_adds_laplacian() {
        let lat = build_torus(8).unwrap();
        let mut b = LatticeBundle::constant_curvature_line(&lat, 1).unwrap();
        let mut rng = random::rng(3);
        let u: Vec<f64> = (0..lat.sites()).map(|_| 0.3 * random::gauss(&mut rng)).collect();
        let g: Vec<CMat> = u.iter().map(|&x| CMat::from_element(1, 1, cr(x.exp()))).collect();
        let gi: Vec<CMat> = u.iter().map(|&x| CMat::from_element(1, 1, cr((-x).exp()))).collect();
        b.apply_gauge(&lat, &g, &gi);
        let f = chern_curvature(&lat, &b);
        let lap = crate::lattice::spectral::neg_laplacian(&lat, &u);
        for s in 0..lat.sites() {
            assert!((f[s][(0, 0)].re - (2.0 * std::f64::consts::PI + lap[s])).abs() < 1e-9);
        }
    }

    #[test]
    fn nonabelian_trace_integrates_to_degree() {
        let lat = build_torus(8).unwrap();
        let mut b = LatticeBundle::split(&lat, &[1, -3]).unwrap();
        let mut rng = random::rng(6);
        let g: Vec<CMat> = (0..lat.sites())
            .map(|_| linalg::expm(&(random::matrix(&mut rng, 2, 2) * cr(0.2))))
            .collect();
        let gi: Vec<CMat> = g.iter().map(|m| linalg::inverse(m).unwrap()).collect();
        b.apply_gauge(&lat, &g, &gi);
        let f = chern_curvature(&lat, &b);
        let tr: Vec<f64> = f.iter().map(|m| linalg::trace(m).re * lat.cell_area()).collect();
        assert!((par::ordered_sum(&tr) - lattice_degree(&lat, &b)).abs() < 1e-10);
        for m in &f {
            assert!(linalg::fro_norm(&(m - m.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn curvature_is_unitarily_covariant() {
        let lat = build_torus(6).unwrap();
        let mut b = LatticeBundle::split(&lat, &[2, 0]).unwrap();
        let mut rng = random::rng(8);
        let g: Vec<CMat> = (0..lat.sites())
            .map(|_| linalg::expm(&(random::matrix(&mut rng, 2, 2) * cr(0.2))))
            .collect();
        let gi: Vec<CMat> = g.iter().map(|m| linalg::inverse(m).unwrap()).collect();
        b.apply_gauge(&lat, &g, &gi);
        let f0 = chern_curvature(&lat, &b);
        let k: Vec<CMat> = (0..lat.sites()).map(|_| random::unitary(&mut rng, 2)).collect();
        let kt: Vec<CMat> = k.iter().map(|m| m.adjoint()).collect();
        b.apply_gauge(&lat, &k, &kt);
        let f1 = chern_curvature(&lat, &b);
        for s in 0..lat.sites() {
            let expect = &k[s] * &f0[s] * &kt[s];
            assert!(linalg::fro_norm(&(&f1[s] - expect)) < 1e-9);
        }
    }
}
