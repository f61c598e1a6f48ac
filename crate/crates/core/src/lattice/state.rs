//! A pair (links per factor, section Φ) on the lattice torus.

use super::bundle::{lattice_degree, LatticeBundle};
use super::torus::{TorusLattice, DIRS};
use crate::algebra::{FactorMode, GroupElement, SubgroupSetting};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, I};
use crate::moment::{act, RepSpec};
use crate::{par, CMat, CVec};

#[derive(Clone, Debug)]
pub struct LatticePairState {
    lattice: TorusLattice,
    rep: RepSpec,
    setting: SubgroupSetting,
    factors: Vec<LatticeBundle>,
    section: Vec<CVec>,
    construction_tol: f64,
    holomorphic: bool,
    notes: Vec<String>,
}

impl LatticePairState {
    pub fn new(
        lattice: TorusLattice,
        rep: RepSpec,
        setting: SubgroupSetting,
        factors: Vec<LatticeBundle>,
        section: Vec<CVec>,
    ) -> Result<Self> {
        let dims = rep.group().dims();
        if factors.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                factor: factors.len().min(dims.len()),
                expected: dims.len(),
                got: factors.len(),
            });
        }
        for (i, (b, &n)) in factors.iter().zip(dims).enumerate() {
            if b.rank() != n {
                return Err(Error::DimensionMismatch {
                    factor: i,
                    expected: n,
                    got: b.rank(),
                });
            }
            if b.frames().len() != lattice.sites() {
                return invalid(format!("factor {i} lives on a different lattice"));
            }
        }
        if setting.modes().len() != dims.len() {
            return invalid("subgroup setting does not match the representation");
        }
        if section.len() != lattice.sites() || section.iter().any(|v| v.len() != rep.dim()) {
            return invalid("section field does not match lattice and representation");
        }
        let mut st = Self {
            lattice,
            rep,
            setting,
            factors,
            section,
            construction_tol: 0.0,
            holomorphic: true,
            notes: Vec::new(),
        };
        st.construction_tol = st.dbar_norm() * 10.0 + 1e-10 * (1.0 + st.section_norm());
        Ok(st)
    }

    /// Mark the section as a smooth (not holomorphic) field.
    pub fn mark_smooth(&mut self, note: impl Into<String>) {
        self.holomorphic = false;
        self.notes.push(note.into());
    }

    pub(crate) fn restore_meta(&mut self, construction_tol: f64, holomorphic: bool, notes: Vec<String>) {
        self.construction_tol = construction_tol;
        self.holomorphic = holomorphic;
        self.notes = notes;
    }

    pub fn add_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn rep(&self) -> &RepSpec {
        &self.rep
    }

    pub fn setting(&self) -> &SubgroupSetting {
        &self.setting
    }

    pub fn factors(&self) -> &[LatticeBundle] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &LatticeBundle {
        &self.factors[i]
    }

    pub fn section(&self) -> &[CVec] {
        &self.section
    }

    pub fn construction_tol(&self) -> f64 {
        self.construction_tol
    }

    pub fn is_holomorphic(&self) -> bool {
        self.holomorphic
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Replace the central constants of the subgroup setting.
    pub fn set_c(&mut self, c: &[f64]) -> Result<()> {
        self.setting = SubgroupSetting::new(self.rep.group(), self.setting.modes().to_vec(), c)?;
        Ok(())
    }

    /// √(a²Σ|Φ|²).
    pub fn section_norm(&self) -> f64 {
        let a2 = self.lattice.cell_area();
        let v: Vec<f64> = self.section.iter().map(|p| p.norm_squared()).collect();
        (a2 * par::ordered_sum(&v)).sqrt()
    }

    /// Group element of the links at (dir, site) across all factors.
    pub fn link_element(&self, dir: usize, s: usize) -> GroupElement {
        GroupElement::complexified(self.factors.iter().map(|b| b.link(dir, s).clone()).collect())
    }

    /// ρ(V_μ(x))⁻¹ as a matrix on 𝕍.
    pub fn induced_inverse_link(&self, dir: usize, s: usize) -> Result<CMat> {
        let inv = self.link_element(dir, s).inverse()?;
        rep_matrix(&self.rep, &inv)
    }

    /// ∂̄Φ(x) = ([ρ(V_x)⁻¹Φ(x+x̂) − Φ(x)] + √−1[ρ(V_y)⁻¹Φ(x+ŷ) − Φ(x)])/a.
    pub fn dbar(&self, field: &[CVec]) -> Result<Vec<CVec>> {
        let lat = self.lattice;
        let inv_a = 1.0 / lat.spacing();
        let out: Vec<Result<CVec>> = par::map_indexed(lat.sites(), |s| {
            let tx = self.induced_inverse_link(0, s)?;
            let ty = self.induced_inverse_link(1, s)?;
            let dx = &tx * &field[lat.fwd(s, 0)] - &field[s];
            let dy = &ty * &field[lat.fwd(s, 1)] - &field[s];
            Ok((dx + dy * I) * linalg::cr(inv_a))
        });
        out.into_iter().collect()
    }

    /// L² norm of ∂̄Φ for the current section.
    pub fn dbar_norm(&self) -> f64 {
        match self.dbar(&self.section) {
            Ok(d) => {
                let v: Vec<f64> = d.iter().map(|p| p.norm_squared()).collect();
                (self.lattice.cell_area() * par::ordered_sum(&v)).sqrt()
            }
            Err(_) => f64::INFINITY,
        }
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.factors.iter().map(|b| lattice_degree(&self.lattice, b)).collect()
    }

    /// Apply per-factor gauge fields (None = identity) to links, frames and Φ.
    pub fn apply_gauge(&mut self, gamma: &[Option<(Vec<CMat>, Vec<CMat>)>]) -> Result<()> {
        let lat = self.lattice;
        for (i, g) in gamma.iter().enumerate() {
            if let Some((g, gi)) = g {
                if self.setting.mode(i) == FactorMode::Frozen {
                    return invalid(format!("factor {i} is frozen"));
                }
                self.factors[i].apply_gauge(&lat, g, gi);
            }
        }
        let dims = self.rep.group().dims().to_vec();
        let section = std::mem::take(&mut self.section);
        let updated: Vec<Result<CVec>> = par::map_indexed(lat.sites(), |s| {
            let blocks: Vec<CMat> = gamma
                .iter()
                .zip(&dims)
                .map(|(g, &n)| match g {
                    Some((g, _)) => g[s].clone(),
                    None => linalg::identity(n),
                })
                .collect();
            act(&GroupElement::complexified(blocks), &section[s], &self.rep)
        });
        self.section = updated.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    /// Apply a unitary gauge transformation k(x) to every non-frozen factor.
    pub fn apply_unitary_gauge(&mut self, k: &[Option<Vec<CMat>>]) -> Result<()> {
        let g: Vec<Option<(Vec<CMat>, Vec<CMat>)>> = k
            .iter()
            .map(|f| f.as_ref().map(|v| (v.clone(), v.iter().map(|m| m.adjoint()).collect())))
            .collect();
        self.apply_gauge(&g)
    }

    /// Largest |eigenvalue| of log h over non-frozen factors and sites.
    pub fn sup_log_metric(&self) -> f64 {
        let mut sup = 0.0f64;
        for (i, b) in self.factors.iter().enumerate() {
            if self.setting.mode(i) == FactorMode::Frozen {
                continue;
            }
            let v: Vec<f64> = par::map_indexed(self.lattice.sites(), |s| {
                let h = b.metric(s);
                if h.nrows() == 1 {
                    let x = h[(0, 0)].re;
                    return if x > 0.0 { x.ln().abs() } else { f64::INFINITY };
                }
                let (vals, _) = linalg::herm_eig(&h);
                vals.iter()
                    .map(|&x| if x > 0.0 { x.ln().abs() } else { f64::INFINITY })
                    .fold(0.0, f64::max)
            });
            sup = v
                .into_iter()
                .fold(sup, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        }
        sup
    }

    /// Per-site links of every factor, direction-major (for hygiene checks).
    pub fn factor_fingerprint(&self, i: usize) -> Vec<u64> {
        let b = &self.factors[i];
        let mut out = Vec::new();
        for dir in DIRS {
            for l in b.links(dir) {
                out.extend(l.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
            }
        }
        for s in 0..self.lattice.sites() {
            out.extend(b.metric(s).iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
        }
        out
    }
}

/// Matrix of ρ(g) on 𝕍 (columns are images of basis vectors).
pub fn rep_matrix(rep: &RepSpec, g: &GroupElement) -> Result<CMat> {
    let d = rep.dim();
    let mut m = CMat::zeros(d, d);
    for k in 0..d {
        let mut e = CVec::zeros(d);
        e[k] = linalg::cr(1.0);
        m.set_column(k, &act(g, &e, rep)?);
    }
    Ok(m)
}
