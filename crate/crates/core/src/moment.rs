//! Linear representations of product unitary groups on tensor spaces
//! 𝕍 = 𝕍₁⊗…⊗𝕍_q and their moment maps.
//!
//! Vectors are flat coefficient arrays in row-major multi-index order (the
//! last slot varies fastest). Adjoint slots hold an n×n matrix flattened row-major.

use crate::algebra::{project_subalgebra, AlgebraElement, GroupElement, ProductGroupSpec, SubgroupSetting};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, I};
use crate::{CMat, CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotAction {
    /// v ↦ g v.
    Standard,
    /// v ↦ (g⁻¹)ᵗ v.
    Dual,
    /// B ↦ g B g⁻¹ on n×n matrices.
    Adjoint,
    /// No action.
    Trivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub factor: usize,
    pub action: SlotAction,
    pub dim: usize,
}

/// How each group factor acts on each tensor slot.
#[derive(Clone, Debug, PartialEq)]
pub struct RepSpec {
    spec: ProductGroupSpec,
    slots: Vec<Slot>,
}

impl RepSpec {
    /// `slots` lists (factor, action); slot dimensions follow from the factor
    /// dimension (n² for adjoint slots).
    pub fn new(spec: ProductGroupSpec, slots: Vec<(usize, SlotAction)>) -> Result<Self> {
        if slots.is_empty() {
            return invalid("a representation needs at least one slot");
        }
        let mut out = Vec::with_capacity(slots.len());
        for (k, &(factor, action)) in slots.iter().enumerate() {
            let Some(&n) = spec.dims().get(factor) else {
                return invalid(format!("slot {k} refers to missing factor {factor}"));
            };
            let dim = if action == SlotAction::Adjoint { n * n } else { n };
            out.push(Slot { factor, action, dim });
        }
        Ok(Self { spec, slots: out })
    }

    /// ℂⁿ with the standard U(n) action.
    pub fn fundamental(n: usize) -> Result<Self> {
        Self::new(ProductGroupSpec::new(vec![n])?, vec![(0, SlotAction::Standard)])
    }

    /// 𝕍₁⊗𝕍₂ with U(n₁)×U(n₂) acting by standard representations.
    pub fn tensor(n1: usize, n2: usize) -> Result<Self> {
        Self::new(
            ProductGroupSpec::new(vec![n1, n2])?,
            vec![(0, SlotAction::Standard), (1, SlotAction::Standard)],
        )
    }

    /// Hom(ℂ^{n₂}, ℂ^{n₁}) = ℂ^{n₁}⊗(ℂ^{n₂})*, T ↦ C₁ T C₂⁻¹.
    pub fn hom(n1: usize, n2: usize) -> Result<Self> {
        Self::new(
            ProductGroupSpec::new(vec![n1, n2])?,
            vec![(0, SlotAction::Standard), (1, SlotAction::Dual)],
        )
    }

    /// Hom(ℂ^{n₂}⊗ℂ^{n_F}, ℂ^{n₁}) for U(n₁)×U(n₂)×U(n_F).
    pub fn twisted_hom(n1: usize, n2: usize, nf: usize) -> Result<Self> {
        Self::new(
            ProductGroupSpec::new(vec![n1, n2, nf])?,
            vec![(0, SlotAction::Standard), (1, SlotAction::Dual), (2, SlotAction::Dual)],
        )
    }

    /// End(ℂᵐ)⊗ℂ for U(m)×U(1): adjoint action tensored with a line.
    pub fn higgs(m: usize) -> Result<Self> {
        Self::new(
            ProductGroupSpec::new(vec![m, 1])?,
            vec![(0, SlotAction::Adjoint), (1, SlotAction::Standard)],
        )
    }

    pub fn group(&self) -> &ProductGroupSpec {
        &self.spec
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn dim(&self) -> usize {
        self.slots.iter().map(|s| s.dim).product()
    }

    /// Whether factor i acts non-trivially on some slot.
    pub fn factor_acts(&self, i: usize) -> bool {
        self.slots
            .iter()
            .any(|s| s.factor == i && s.action != SlotAction::Trivial)
    }

    fn check_vec(&self, x: &CVec) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                factor: 0,
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// (outer, inner) sizes around slot k.
    fn split(&self, k: usize) -> (usize, usize) {
        let outer = self.slots[..k].iter().map(|s| s.dim).product();
        let inner = self.slots[k + 1..].iter().map(|s| s.dim).product();
        (outer, inner)
    }

    /// Apply a d×d matrix to slot k.
    pub fn apply_slot(&self, k: usize, m: &CMat, x: &CVec) -> CVec {
        let d = self.slots[k].dim;
        let (outer, inner) = self.split(k);
        let mut out = CVec::zeros(x.len());
        for o in 0..outer {
            let base = o * d * inner;
            for r in 0..d {
                for c in 0..d {
                    let a = m[(r, c)];
                    if a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for t in 0..inner {
                        out[base + r * inner + t] += a * x[base + c * inner + t];
                    }
                }
            }
        }
        out
    }

    /// Slice matrix of slot k: d × (outer·inner), column j = the slot
    /// vector with the other indices fixed.
    pub fn slice_matrix(&self, k: usize, x: &CVec) -> CMat {
        let d = self.slots[k].dim;
        let (outer, inner) = self.split(k);
        CMat::from_fn(d, outer * inner, |r, j| {
            let (o, t) = (j / inner, j % inner);
            x[o * d * inner + r * inner + t]
        })
    }

    /// Matrix by which the group block `g` (and its inverse) acts on slot k.
    fn slot_group_matrix(&self, k: usize, g: &CMat, g_inv: &CMat) -> CMat {
        let slot = self.slots[k];
        match slot.action {
            SlotAction::Standard => g.clone(),
            SlotAction::Dual => g_inv.transpose(),
            SlotAction::Adjoint => linalg::kron(g, &g_inv.transpose()),
            SlotAction::Trivial => linalg::identity(slot.dim),
        }
    }

    /// Matrix by which the algebra block `s` acts on slot k.
    pub fn slot_algebra_matrix(&self, k: usize, s: &CMat) -> CMat {
        let slot = self.slots[k];
        match slot.action {
            SlotAction::Standard => s.clone(),
            SlotAction::Dual => -s.transpose(),
            SlotAction::Adjoint => {
                let n = s.nrows();
                linalg::kron(s, &linalg::identity(n)) - linalg::kron(&linalg::identity(n), &s.transpose())
            }
            SlotAction::Trivial => CMat::zeros(slot.dim, slot.dim),
        }
    }

    /// Full dim𝕍 × dim𝕍 matrix of the infinitesimal action of s.
    pub fn algebra_matrix(&self, s: &AlgebraElement) -> CMat {
        let mut total = CMat::zeros(self.dim(), self.dim());
        for (k, slot) in self.slots.iter().enumerate() {
            let m = self.slot_algebra_matrix(k, s.block(slot.factor));
            let (outer, inner) = self.split(k);
            let full = linalg::kron(&linalg::kron(&linalg::identity(outer), &m), &linalg::identity(inner));
            total += full;
        }
        total
    }
}

/// ρ(g)x.
pub fn act(g: &GroupElement, x: &CVec, rep: &RepSpec) -> Result<CVec> {
    rep.check_vec(x)?;
    rep.spec.check_blocks(g.blocks())?;
    let inv = g.inverse()?;
    let mut y = x.clone();
    for k in 0..rep.slots.len() {
        let f = rep.slots[k].factor;
        if rep.slots[k].action == SlotAction::Trivial {
            continue;
        }
        let m = rep.slot_group_matrix(k, g.block(f), inv.block(f));
        y = rep.apply_slot(k, &m, &y);
    }
    Ok(y)
}

/// d/dt|₀ ρ(exp(ts))x.
pub fn infinitesimal_act(s: &AlgebraElement, x: &CVec, rep: &RepSpec) -> Result<CVec> {
    rep.check_vec(x)?;
    rep.spec.check_blocks(s.blocks())?;
    let mut y = CVec::zeros(x.len());
    for (k, slot) in rep.slots.iter().enumerate() {
        if slot.action == SlotAction::Trivial {
            continue;
        }
        let m = rep.slot_algebra_matrix(k, s.block(slot.factor));
        y += rep.apply_slot(k, &m, x);
    }
    Ok(y)
}

/// −√−1·x x†.
pub fn mu_fundamental(x: &CVec) -> CMat {
    (x * x.adjoint()) * (-I)
}

/// Moment-map contribution of slot k to its factor.
fn mu_slot(rep: &RepSpec, k: usize, x: &CVec) -> CMat {
    let slot = rep.slots[k];
    let m = rep.slice_matrix(k, x);
    match slot.action {
        SlotAction::Standard => (&m * m.adjoint()) * (-I),
        SlotAction::Dual => (&m * m.adjoint()).transpose() * I,
        SlotAction::Adjoint => {
            let n = rep.spec.dims()[slot.factor];
            let mut acc = CMat::zeros(n, n);
            for j in 0..m.ncols() {
                let a = CMat::from_fn(n, n, |r, c| m[(r * n + c, j)]);
                acc += &a * a.adjoint() - a.adjoint() * &a;
            }
            acc * (-I)
        }
        SlotAction::Trivial => CMat::zeros(rep.spec.dims()[slot.factor], rep.spec.dims()[slot.factor]),
    }
}

/// Moment map of factor i: sum over the slots it acts on.
pub fn mu_factor(x: &CVec, rep: &RepSpec, factor: usize) -> Result<CMat> {
    rep.check_vec(x)?;
    if factor >= rep.spec.num_factors() {
        return invalid(format!("factor {factor} out of range"));
    }
    if !rep.factor_acts(factor) {
        return Err(Error::TrivialFactor { factor });
    }
    let n = rep.spec.dims()[factor];
    let mut acc = CMat::zeros(n, n);
    for (k, slot) in rep.slots.iter().enumerate() {
        if slot.factor == factor && slot.action != SlotAction::Trivial {
            acc += mu_slot(rep, k, x);
        }
    }
    Ok(acc)
}

/// (μ₁(x),…,μ_p(x)), zero on factors acting trivially.
pub fn mu_full(x: &CVec, rep: &RepSpec) -> Result<AlgebraElement> {
    rep.check_vec(x)?;
    let mut blocks: Vec<CMat> = rep.spec.dims().iter().map(|&n| CMat::zeros(n, n)).collect();
    for (k, slot) in rep.slots.iter().enumerate() {
        if slot.action != SlotAction::Trivial {
            blocks[slot.factor] += mu_slot(rep, k, x);
        }
    }
    Ok(AlgebraElement::compact_unchecked(blocks))
}

/// π_𝔥(μ(x)) − c_ℋ.
pub fn mu_shifted(x: &CVec, rep: &RepSpec, setting: &SubgroupSetting) -> Result<AlgebraElement> {
    let mu = mu_full(x, rep)?;
    Ok(project_subalgebra(&mu, setting)?.sub(setting.central_shift()))
}

/// ω(a,b) = (⟨a,b⟩ − ⟨b,a⟩)/(2√−1) with ⟨a,b⟩ = a†b.
pub fn omega(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{exp_element, inner_product, FactorMode};
    use crate::linalg::cr;
    use crate::random;

    fn all_reps() -> Vec<RepSpec> {
        vec![
            RepSpec::tensor(2, 3).unwrap(),
            RepSpec::hom(2, 3).unwrap(),
            RepSpec::hom(2, 2).unwrap(),
            RepSpec::twisted_hom(2, 2, 2).unwrap(),
            RepSpec::higgs(2).unwrap(),
        ]
    }

    #[test]
    fn hom_action_is_conjugation() {
        let rep = RepSpec::hom(2, 3).unwrap();
        let mut rng = random::rng(1);
        let c1 = random::matrix(&mut rng, 2, 2);
        let c2 = random::matrix(&mut rng, 3, 3);
        let t = random::matrix(&mut rng, 2, 3);
        let x = CVec::from_fn(6, |i, _| t[(i / 3, i % 3)]);
        let g = GroupElement::complexified(vec![c1.clone(), c2.clone()]);
        let y = act(&g, &x, &rep).unwrap();
        let expect = &c1 * &t * linalg::inverse(&c2).unwrap();
        for i in 0..6 {
            assert!((y[i] - expect[(i / 3, i % 3)]).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_law() {
        let mut rng = random::rng(2);
        for rep in all_reps() {
            for _ in 0..10 {
                let g = random::complex_element(&mut rng, rep.group(), 0.4);
                let h = random::complex_element(&mut rng, rep.group(), 0.4);
                let x = random::vector(&mut rng, rep.dim());
                let lhs = act(&g, &act(&h, &x, &rep).unwrap(), &rep).unwrap();
                let rhs = act(&g.mul(&h), &x, &rep).unwrap();
                assert!((lhs - rhs).norm() < 1e-11 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn infinitesimal_matches_finite_difference() {
        let mut rng = random::rng(3);
        for rep in all_reps() {
            let s = random::compact_element(&mut rng, rep.group());
            let x = random::vector(&mut rng, rep.dim());
            let eps = 1e-6;
            let fd = (act(&exp_element(&s, eps), &x, &rep).unwrap() - &x) / cr(eps);
            let exact = infinitesimal_act(&s, &x, &rep).unwrap();
            assert!((fd - &exact).norm() < 1e-4 * exact.norm());
            let via_matrix = rep.algebra_matrix(&s) * &x;
            assert!((via_matrix - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn fundamental_examples() {
        let e1 = CVec::from_vec(vec![cr(1.0), cr(0.0)]);
        let m = mu_fundamental(&e1);
        assert_eq!(m[(0, 0)], -I);
        assert_eq!(linalg::fro_norm(&mu_fundamental(&CVec::zeros(2))), 0.0);
    }

    #[test]
    fn hom_one_by_one() {
        let rep = RepSpec::hom(1, 1).unwrap();
        let x = CVec::from_vec(vec![cr(1.0)]);
        assert!((mu_factor(&x, &rep, 0).unwrap()[(0, 0)] + I).norm() < 1e-15);
        assert!((mu_factor(&x, &rep, 1).unwrap()[(0, 0)] - I).norm() < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let rep = RepSpec::higgs(2).unwrap();
        let x = CVec::from_vec(vec![cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        let m = mu_factor(&x, &rep, 0).unwrap();
        let expect = CMat::from_diagonal(&nalgebra::dvector![-I, I]);
        assert!(linalg::fro_norm(&(m - expect)) < 1e-15);
        let normal = CVec::from_vec(vec![cr(2.0), I, -I, cr(3.0)]);
        assert!(linalg::fro_norm(&mu_factor(&normal, &rep, 0).unwrap()) < 1e-14);
    }

    #[test]
    fn trivial_factor_is_an_error() {
        let rep = RepSpec::new(
            ProductGroupSpec::new(vec![2, 2]).unwrap(),
            vec![(0, SlotAction::Standard), (1, SlotAction::Trivial)],
        )
        .unwrap();
        let x = CVec::zeros(4);
        assert!(matches!(
            mu_factor(&x, &rep, 1),
            Err(Error::TrivialFactor { factor: 1 })
        ));
    }

    #[test]
    fn twisted_factor_one_block() {
        let rep = RepSpec::twisted_hom(2, 1, 2).unwrap();
        let mut rng = random::rng(4);
        let x = random::vector(&mut rng, rep.dim());
        let phi0 = CVec::from_vec(vec![x[0], x[2]]);
        let phi1 = CVec::from_vec(vec![x[1], x[3]]);
        let expect = mu_fundamental(&phi0) + mu_fundamental(&phi1);
        let got = mu_full(&x, &rep).unwrap();
        assert!(linalg::fro_norm(&(got.block(0) - expect)) < 1e-14);
    }

    #[test]
    fn shifted_examples() {
        let rep = RepSpec::fundamental(1).unwrap();
        let setting = SubgroupSetting::full(rep.group(), &[4.0]).unwrap();
        let x = CVec::from_vec(vec![C64::new(0.0, 2.0)]);
        assert!(mu_shifted(&x, &rep, &setting).unwrap().norm() < 1e-15);

        let rep = RepSpec::tensor(2, 2).unwrap();
        let setting =
            SubgroupSetting::new(rep.group(), vec![FactorMode::Full, FactorMode::Frozen], &[1.0, 7.0]).unwrap();
        let mut rng = random::rng(6);
        let x = random::vector(&mut rng, 4);
        assert_eq!(linalg::fro_norm(mu_shifted(&x, &rep, &setting).unwrap().block(1)), 0.0);
    }

    #[test]
    fn hamiltonian_identity() {
        let mut rng = random::rng(8);
        for rep in all_reps() {
            let x = random::vector(&mut rng, rep.dim());
            let v = random::vector(&mut rng, rep.dim());
            let s = random::compact_element(&mut rng, rep.group());
            let h = |y: &CVec| inner_product(&mu_full(y, &rep).unwrap(), &s, rep.group()).unwrap();
            let eps = 1e-5;
            let fd = (h(&(&x + &v * cr(eps))) - h(&(&x - &v * cr(eps)))) / (2.0 * eps);
            let xi = infinitesimal_act(&s, &x, &rep).unwrap();
            let exact = 2.0 * omega(&xi, &v);
            assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1e-3));
        }
    }
}
