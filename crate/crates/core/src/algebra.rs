//! Product unitary groups U(n₁)×…×U(n_p), their Lie algebras and complexifications,
//! and subgroup settings (full / frozen / constant factors with a central shift).

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, cr, I};
use crate::{CMat, C64};

/// K = U(n₁)×…×U(n_p) with ρ_a the direct sum of the standard representations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductGroupSpec {
    factor_dims: Vec<usize>,
}

impl ProductGroupSpec {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return invalid("a product group needs at least one factor");
        }
        if let Some(i) = factor_dims.iter().position(|&n| n == 0) {
            return invalid(format!("factor {i} has dimension 0"));
        }
        Ok(Self { factor_dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    /// Dimension of the auxiliary representation ρ_a.
    pub fn aux_dim(&self) -> usize {
        self.factor_dims.iter().sum()
    }

    pub(crate) fn check_blocks(&self, blocks: &[CMat]) -> Result<()> {
        if blocks.len() != self.factor_dims.len() {
            return Err(Error::DimensionMismatch {
                factor: blocks.len().min(self.factor_dims.len()),
                expected: self.factor_dims.len(),
                got: blocks.len(),
            });
        }
        for (i, (b, &n)) in blocks.iter().zip(&self.factor_dims).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    factor: i,
                    expected: n,
                    got: if b.nrows() != n { b.nrows() } else { b.ncols() },
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraFlavor {
    /// Skew-Hermitian blocks (𝔨).
    Compact,
    /// Arbitrary complex blocks (𝔤).
    General,
}

/// A p-tuple of square matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<CMat>,
    flavor: AlgebraFlavor,
}

fn is_skew(b: &CMat) -> bool {
    linalg::skew_defect(b) < 1e-12 * (1.0 + linalg::fro_norm(b))
}

impl AlgebraElement {
    pub fn new(blocks: Vec<CMat>, flavor: AlgebraFlavor) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() {
                return Err(Error::DimensionMismatch {
                    factor: i,
                    expected: b.nrows(),
                    got: b.ncols(),
                });
            }
            if flavor == AlgebraFlavor::Compact && !is_skew(b) {
                return invalid(format!("block {i} is not skew-Hermitian"));
            }
        }
        Ok(Self { blocks, flavor })
    }

    pub fn compact(blocks: Vec<CMat>) -> Result<Self> {
        Self::new(blocks, AlgebraFlavor::Compact)
    }

    /// Compact element from blocks known to be skew-Hermitian up to rounding;
    /// the blocks are re-symmetrised.
    pub fn compact_unchecked(blocks: Vec<CMat>) -> Self {
        Self {
            blocks: blocks.iter().map(linalg::skew_part).collect(),
            flavor: AlgebraFlavor::Compact,
        }
    }

    pub fn general(blocks: Vec<CMat>) -> Self {
        Self {
            blocks,
            flavor: AlgebraFlavor::General,
        }
    }

    pub fn zeros(spec: &ProductGroupSpec) -> Self {
        Self {
            blocks: spec.dims().iter().map(|&n| CMat::zeros(n, n)).collect(),
            flavor: AlgebraFlavor::Compact,
        }
    }

    /// Central element with blocks −√−1·cᵢ·I.
    pub fn central(spec: &ProductGroupSpec, c: &[f64]) -> Result<Self> {
        if c.len() != spec.num_factors() {
            return Err(Error::DimensionMismatch {
                factor: c.len().min(spec.num_factors()),
                expected: spec.num_factors(),
                got: c.len(),
            });
        }
        Ok(Self {
            blocks: spec
                .dims()
                .iter()
                .zip(c)
                .map(|(&n, &ci)| linalg::identity(n) * (-I * ci))
                .collect(),
            flavor: AlgebraFlavor::Compact,
        })
    }

    /// Diagonal compact element: block i is diag(−√−1·αᵢ) so that √−1·s has
    /// eigenvalues αᵢ.
    pub fn from_weights(weights: &[Vec<f64>]) -> Self {
        Self {
            blocks: weights
                .iter()
                .map(|w| {
                    let n = w.len();
                    CMat::from_fn(n, n, |r, c| if r == c { -I * w[r] } else { cr(0.0) })
                })
                .collect(),
            flavor: AlgebraFlavor::Compact,
        }
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMat> {
        self.blocks
    }

    pub fn flavor(&self) -> AlgebraFlavor {
        self.flavor
    }

    pub fn num_factors(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_compact(&self) -> bool {
        self.flavor == AlgebraFlavor::Compact
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        let flavor = if self.is_compact() && other.is_compact() {
            AlgebraFlavor::Compact
        } else {
            AlgebraFlavor::General
        };
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
            flavor,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * cr(t)).collect(),
            flavor: self.flavor,
        }
    }

    /// Multiply every block by √−1 (maps 𝔨 to √−1𝔨).
    pub fn times_i(&self) -> Self {
        Self::general(self.blocks.iter().map(|b| b * I).collect())
    }

    /// Ad_g(s) = g s g⁻¹ blockwise.
    pub fn conjugate(&self, g: &GroupElement) -> Result<Self> {
        let inv = g.inverse()?;
        let blocks: Vec<CMat> = self
            .blocks
            .iter()
            .zip(g.blocks().iter().zip(inv.blocks()))
            .map(|(s, (gb, gi))| gb * s * gi)
            .collect();
        Ok(if self.is_compact() && g.is_unitary() {
            Self::compact_unchecked(blocks)
        } else {
            Self::general(blocks)
        })
    }

    /// √(Σᵢ Tr(sᵢsᵢ†)).
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::re_inner(b, b)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupFlavor {
    Unitary,
    Complexified,
}

/// A p-tuple of invertible matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    blocks: Vec<CMat>,
    flavor: GroupFlavor,
}

impl GroupElement {
    pub fn identity(spec: &ProductGroupSpec) -> Self {
        Self {
            blocks: spec.dims().iter().map(|&n| linalg::identity(n)).collect(),
            flavor: GroupFlavor::Unitary,
        }
    }

    pub fn unitary(blocks: Vec<CMat>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if linalg::unitarity_defect(b) >= 1e-10 {
                return invalid(format!("block {i} is not unitary"));
            }
        }
        Ok(Self {
            blocks,
            flavor: GroupFlavor::Unitary,
        })
    }

    pub fn unitary_unchecked(blocks: Vec<CMat>) -> Self {
        Self {
            blocks,
            flavor: GroupFlavor::Unitary,
        }
    }

    pub fn complexified(blocks: Vec<CMat>) -> Self {
        Self {
            blocks,
            flavor: GroupFlavor::Complexified,
        }
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn flavor(&self) -> GroupFlavor {
        self.flavor
    }

    pub fn is_unitary(&self) -> bool {
        self.flavor == GroupFlavor::Unitary
    }

    /// Largest per-block ‖B†B − I‖.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks.iter().map(linalg::unitarity_defect).fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let flavor = if self.is_unitary() && other.is_unitary() {
            GroupFlavor::Unitary
        } else {
            GroupFlavor::Complexified
        };
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect(),
            flavor,
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            if self.is_unitary() {
                blocks.push(b.adjoint());
            } else {
                blocks.push(linalg::inverse(b).ok_or(Error::Singular { factor: i })?);
            }
        }
        Ok(Self {
            blocks,
            flavor: self.flavor,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
            flavor: self.flavor,
        }
    }
}

/// ⟨u,v⟩ = Σᵢ Re Tr(uᵢ vᵢ†).
pub fn inner_product(u: &AlgebraElement, v: &AlgebraElement, spec: &ProductGroupSpec) -> Result<f64> {
    spec.check_blocks(&u.blocks)?;
    spec.check_blocks(&v.blocks)?;
    Ok(u.blocks
        .iter()
        .zip(&v.blocks)
        .map(|(a, b)| linalg::re_inner(a, b))
        .sum())
}

/// Blockwise exp(t·s).
pub fn exp_element(s: &AlgebraElement, t: f64) -> GroupElement {
    let blocks: Vec<CMat> = s.blocks.iter().map(|b| linalg::expm(&(b * cr(t)))).collect();
    if s.is_compact() {
        GroupElement::unitary_unchecked(blocks)
    } else {
        GroupElement::complexified(blocks)
    }
}

/// g ↦ (g†)⁻¹.
pub fn cartan_involution(g: &GroupElement) -> Result<GroupElement> {
    if g.is_unitary() {
        return Ok(g.clone());
    }
    let mut blocks = Vec::with_capacity(g.blocks.len());
    for (i, b) in g.blocks.iter().enumerate() {
        blocks.push(linalg::inverse(&b.adjoint()).ok_or(Error::Singular { factor: i })?);
    }
    Ok(GroupElement::complexified(blocks))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorMode {
    /// Gauge-varying.
    Full,
    /// Restricted to the identity.
    Frozen,
    /// Global constant transformations only.
    Constant,
}

impl FactorMode {
    pub fn is_frozen(self) -> bool {
        self == FactorMode::Frozen
    }
}

/// Subgroup ℋ ⊂ 𝒢 given by per-factor modes, together with the central shift c_ℋ.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgroupSetting {
    modes: Vec<FactorMode>,
    c: Vec<f64>,
    shift: AlgebraElement,
}

impl SubgroupSetting {
    /// `c[i]` is the real scalar with c_ℋ block −√−1·cᵢ·I; ignored (set to 0)
    /// on frozen factors.
    pub fn new(spec: &ProductGroupSpec, modes: Vec<FactorMode>, c: &[f64]) -> Result<Self> {
        if modes.len() != spec.num_factors() {
            return Err(Error::DimensionMismatch {
                factor: modes.len().min(spec.num_factors()),
                expected: spec.num_factors(),
                got: modes.len(),
            });
        }
        if modes.iter().all(|m| m.is_frozen()) {
            return invalid("at least one factor must not be frozen");
        }
        if let Some(i) = c.iter().position(|x| !x.is_finite()) {
            return invalid(format!("central value {i} is not finite"));
        }
        let c: Vec<f64> = modes
            .iter()
            .zip(c)
            .map(|(m, &ci)| if m.is_frozen() { 0.0 } else { ci })
            .collect();
        let shift = AlgebraElement::central(spec, &c)?;
        Ok(Self { modes, c, shift })
    }

    /// Every factor full.
    pub fn full(spec: &ProductGroupSpec, c: &[f64]) -> Result<Self> {
        Self::new(spec, vec![FactorMode::Full; spec.num_factors()], c)
    }

    pub fn modes(&self) -> &[FactorMode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> FactorMode {
        self.modes[i]
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c
    }

    pub fn central_shift(&self) -> &AlgebraElement {
        &self.shift
    }
}

/// π_𝔥: zero the frozen blocks, keep the others.
pub fn project_subalgebra(s: &AlgebraElement, setting: &SubgroupSetting) -> Result<AlgebraElement> {
    if s.num_factors() != setting.modes.len() {
        return Err(Error::DimensionMismatch {
            factor: s.num_factors().min(setting.modes.len()),
            expected: setting.modes.len(),
            got: s.num_factors(),
        });
    }
    let blocks = s
        .blocks
        .iter()
        .zip(&setting.modes)
        .map(|(b, m)| {
            if m.is_frozen() {
                CMat::zeros(b.nrows(), b.ncols())
            } else {
                b.clone()
            }
        })
        .collect();
    Ok(AlgebraElement {
        blocks,
        flavor: s.flavor,
    })
}

/// Scalar z as a 1×1 block.
pub fn scalar_block(z: C64) -> CMat {
    CMat::from_element(1, 1, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn spec23() -> ProductGroupSpec {
        ProductGroupSpec::new(vec![2, 3]).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let spec = ProductGroupSpec::new(vec![2]).unwrap();
        let u = AlgebraElement::compact(vec![CMat::from_diagonal(&nalgebra::dvector![I, -I])]).unwrap();
        assert!((inner_product(&u, &u, &spec).unwrap() - 2.0).abs() < 1e-15);
        let z = AlgebraElement::zeros(&spec);
        assert_eq!(inner_product(&z, &u, &spec).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_reports_bad_factor() {
        let spec = spec23();
        let bad = AlgebraElement::general(vec![CMat::zeros(2, 2), CMat::zeros(2, 2)]);
        let ok = AlgebraElement::zeros(&spec);
        match inner_product(&bad, &ok, &spec) {
            Err(Error::DimensionMismatch { factor, expected, got }) => {
                assert_eq!((factor, expected, got), (1, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compact_rejects_hermitian() {
        assert!(AlgebraElement::compact(vec![linalg::identity(2)]).is_err());
    }

    #[test]
    fn random_symmetry_and_positivity() {
        let spec = spec23();
        let mut rng = random::rng(7);
        for _ in 0..50 {
            let u = random::compact_element(&mut rng, &spec);
            let v = random::compact_element(&mut rng, &spec);
            let uv = inner_product(&u, &v, &spec).unwrap();
            let vu = inner_product(&v, &u, &spec).unwrap();
            assert!((uv - vu).abs() < 1e-14);
            assert!(inner_product(&u, &u, &spec).unwrap() > 0.0);
        }
    }

    #[test]
    fn projection_zeroes_frozen() {
        let spec = spec23();
        let setting = SubgroupSetting::new(&spec, vec![FactorMode::Full, FactorMode::Frozen], &[1.0, 5.0]).unwrap();
        let mut rng = random::rng(3);
        let s = random::compact_element(&mut rng, &spec);
        let p = project_subalgebra(&s, &setting).unwrap();
        assert_eq!(p.block(0), s.block(0));
        assert_eq!(linalg::fro_norm(p.block(1)), 0.0);
        assert_eq!(project_subalgebra(&p, &setting).unwrap(), p);
        assert_eq!(linalg::fro_norm(setting.central_shift().block(1)), 0.0);

        let all = SubgroupSetting::full(&spec, &[0.0, 0.0]).unwrap();
        assert_eq!(project_subalgebra(&s, &all).unwrap(), s);
    }

    #[test]
    fn projection_self_adjoint_and_orthogonal() {
        let spec = spec23();
        let setting = SubgroupSetting::new(&spec, vec![FactorMode::Frozen, FactorMode::Constant], &[0.0, 1.0]).unwrap();
        let mut rng = random::rng(11);
        for _ in 0..20 {
            let s = random::compact_element(&mut rng, &spec);
            let t = random::compact_element(&mut rng, &spec);
            let ps = project_subalgebra(&s, &setting).unwrap();
            let pt = project_subalgebra(&t, &setting).unwrap();
            let a = inner_product(&ps, &t, &spec).unwrap();
            let b = inner_product(&s, &pt, &spec).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(inner_product(&ps, &t.sub(&pt), &spec).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn all_frozen_rejected() {
        let spec = spec23();
        assert!(SubgroupSetting::new(&spec, vec![FactorMode::Frozen; 2], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn exp_examples() {
        let spec = ProductGroupSpec::new(vec![2]).unwrap();
        let z = exp_element(&AlgebraElement::zeros(&spec), 1.0);
        assert!(linalg::fro_norm(&(z.block(0) - linalg::identity(2))) < 1e-15);
        let s = AlgebraElement::compact(vec![CMat::from_diagonal(&nalgebra::dvector![I, -I])]).unwrap();
        let g = exp_element(&s, std::f64::consts::PI);
        assert!(linalg::fro_norm(&(g.block(0) + linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn exp_inverse_and_one_parameter() {
        let spec = spec23();
        let mut rng = random::rng(5);
        for _ in 0..20 {
            let s = random::compact_element(&mut rng, &spec);
            let prod = exp_element(&s, 1.0).mul(&exp_element(&s, -1.0));
            assert!(prod.unitarity_defect() < 1e-12);
            for (b, &n) in prod.blocks().iter().zip(spec.dims()) {
                assert!(linalg::fro_norm(&(b - linalg::identity(n))) < 1e-12);
            }
            let (a, b) = (1.3, -0.7);
            let lhs = exp_element(&s, a).mul(&exp_element(&s, b));
            let rhs = exp_element(&s, a + b);
            for (x, y) in lhs.blocks().iter().zip(rhs.blocks()) {
                assert!(linalg::fro_norm(&(x - y)) < 1e-10);
            }
        }
    }

    #[test]
    fn cartan_examples() {
        let mut rng = random::rng(9);
        let spec = spec23();
        let k = random::unitary_element(&mut rng, &spec);
        let fixed = cartan_involution(&GroupElement::complexified(k.blocks().to_vec())).unwrap();
        for (a, b) in fixed.blocks().iter().zip(k.blocks()) {
            assert!(linalg::fro_norm(&(a - b)) < 1e-12);
        }
        let two = GroupElement::complexified(vec![scalar_block(cr(2.0))]);
        assert!((cartan_involution(&two).unwrap().block(0)[(0, 0)] - cr(0.5)).norm() < 1e-15);
        let g = random::complex_element(&mut rng, &spec, 0.5);
        let back = cartan_involution(&cartan_involution(&g).unwrap()).unwrap();
        for (a, b) in back.blocks().iter().zip(g.blocks()) {
            assert!(linalg::fro_norm(&(a - b)) < 1e-10 * (1.0 + linalg::fro_norm(b)));
        }
        let sing = GroupElement::complexified(vec![CMat::zeros(1, 1)]);
        assert!(matches!(cartan_involution(&sing), Err(Error::Singular { factor: 0 })));
    }
}
