//! The finite sub-object lattice of a decomposable fixture, two-step SSC
//! generators on it and their exact slacks.

use num_traits::{One, Zero};

use super::fixture::CurveFixture;
use super::Rational;
use crate::algebra::FactorMode;
use crate::error::Result;
use crate::kempf_ness::WeightedFiltration;
use crate::lattice::examples::ExampleKind;
use crate::linalg::cr;
use crate::moment::SlotAction;
use crate::CMat;

/// A sub-object: a summand subset (bit mask) for every gauge-varying
/// factor with summand structure and, for the 𝒪ᵏ factor of a coherent
/// system, a subspace of ℂᵏ given by rational basis vectors. Masks of frozen
/// factors are unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubObject {
    pub masks: Vec<u64>,
    pub kernel: Option<Vec<Vec<Rational>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenType {
    /// α = −1 on the sub-object, 0 on the quotient.
    F,
    /// α = 0 on the sub-object, +1 on the quotient.
    G,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub label: String,
    pub sub: SubObject,
    pub ty: GenType,
    pub slack: Rational,
}

pub(crate) fn full_mask(n: usize) -> u64 {
    (1u64 << n) - 1
}

pub(crate) fn mask_members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Factors whose sub-objects are summand subsets.
pub(crate) fn summand_factors(f: &CurveFixture) -> Vec<usize> {
    f.kind
        .modes()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m == FactorMode::Full)
        .map(|(i, _)| i)
        .collect()
}

fn is_coherent(f: &CurveFixture) -> bool {
    f.kind == ExampleKind::CoherentSystem
}

impl SubObject {
    pub fn zero(f: &CurveFixture) -> Self {
        Self {
            masks: vec![0; f.degrees.len()],
            kernel: is_coherent(f).then(Vec::new),
        }
    }

    pub fn whole(f: &CurveFixture) -> Self {
        let k = f.degrees.last().map_or(0, |d| d.len());
        Self {
            masks: f.degrees.iter().map(|d| full_mask(d.len())).collect(),
            kernel: is_coherent(f).then(|| identity_basis(k)),
        }
    }

    pub fn rank(&self, f: &CurveFixture, i: usize) -> i64 {
        if is_coherent(f) && i == 1 {
            return self.kernel.as_ref().map_or(0, |k| k.len() as i64);
        }
        self.masks[i].count_ones() as i64
    }

    pub fn degree(&self, f: &CurveFixture, i: usize) -> i64 {
        if is_coherent(f) && i == 1 {
            return 0;
        }
        mask_members(self.masks[i], f.degrees[i].len())
            .iter()
            .map(|&k| f.degrees[i][k])
            .sum()
    }

    fn active_factors(f: &CurveFixture) -> Vec<usize> {
        f.kind
            .modes()
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_frozen())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_zero(&self, f: &CurveFixture) -> bool {
        Self::active_factors(f).iter().all(|&i| self.rank(f, i) == 0)
    }

    pub fn is_whole(&self, f: &CurveFixture) -> bool {
        Self::active_factors(f)
            .iter()
            .all(|&i| self.rank(f, i) == f.degrees[i].len() as i64)
    }

    /// Whether `self` ⊆ `other` factorwise.
    pub fn contained_in(&self, other: &Self) -> bool {
        let masks = self.masks.iter().zip(&other.masks).all(|(a, b)| a & !b == 0);
        let kern = match (&self.kernel, &other.kernel) {
            (Some(a), Some(b)) => rational_rank(&[a.clone(), b.clone()].concat()) == b.len(),
            _ => true,
        };
        masks && kern
    }

    pub fn label(&self, f: &CurveFixture) -> String {
        let mut parts = Vec::new();
        for i in Self::active_factors(f) {
            if is_coherent(f) && i == 1 {
                parts.push(format!("k'={}", self.rank(f, 1)));
                continue;
            }
            let degs: Vec<String> = mask_members(self.masks[i], f.degrees[i].len())
                .iter()
                .map(|&k| format!("L({})", f.degrees[i][k]))
                .collect();
            parts.push(if degs.is_empty() {
                "0".to_string()
            } else {
                degs.join("+")
            });
        }
        format!("({})", parts.join(", "))
    }
}

/// Sum over active factors of c_i·rk_i − deg_i.
pub fn slack_sub(f: &CurveFixture, sub: &SubObject) -> Rational {
    SubObject::active_factors(f)
        .into_iter()
        .map(|i| f.c[i] * sub.rank(f, i) - Rational::from_integer(sub.degree(f, i)))
        .fold(Rational::zero(), |a, b| a + b)
}

/// Exact total weight (without the λ term) of the generator of type `ty`
/// on `sub`: f gives Σ(c_i rk′_i − deg′_i), g gives Σ(deg_i(Q) − c_i rk_i(Q)).
pub fn generator_slack(f: &CurveFixture, sub: &SubObject, ty: GenType) -> Rational {
    match ty {
        GenType::F => slack_sub(f, sub),
        GenType::G => slack_sub(f, sub) - slack_sub(f, &SubObject::whole(f)),
    }
}

/// Sum of slot signs over active factors: the weight by which the central
/// direction of all active factors acts on 𝕍.
pub(crate) fn central_shift(f: &CurveFixture) -> Result<i64> {
    let rep = f.rep()?;
    let modes = f.kind.modes();
    Ok(rep
        .slots()
        .iter()
        .filter(|s| !modes[s.factor].is_frozen())
        .map(|s| match s.action {
            SlotAction::Standard => 1,
            SlotAction::Dual => -1,
            _ => 0,
        })
        .sum())
}

/// Integer weights α per summand index of every active summand factor,
/// evaluated on the components of Φ: the weight of each supported component.
pub(crate) fn component_weights(f: &CurveFixture, alpha: &[Vec<Rational>]) -> Result<Vec<Rational>> {
    let rep = f.rep()?;
    let modes = f.kind.modes();
    let mut out = Vec::with_capacity(f.support.len());
    for e in &f.support {
        let mut w = Rational::zero();
        for (slot, &idx) in rep.slots().iter().zip(&e.component) {
            if modes[slot.factor].is_frozen() {
                continue;
            }
            let a = &alpha[slot.factor];
            w += match slot.action {
                SlotAction::Standard => a[idx],
                SlotAction::Dual => -a[idx],
                SlotAction::Adjoint => {
                    let m = f.degrees[slot.factor].len();
                    a[idx / m] - a[idx % m]
                }
                SlotAction::Trivial => Rational::zero(),
            };
        }
        out.push(w);
    }
    Ok(out)
}

/// Rows (summand a, section σ) and columns j of Φ viewed as a map
/// ℂᵏ → H⁰(ℰ) for a coherent system.
pub(crate) fn section_matrix(f: &CurveFixture) -> (Vec<(usize, usize)>, Vec<Vec<Rational>>) {
    let k = f.degrees[1].len();
    let mut rows: Vec<(usize, usize)> = Vec::new();
    let mut m: Vec<Vec<Rational>> = Vec::new();
    for e in &f.support {
        let key = (e.component[0], e.section);
        let r = match rows.iter().position(|&x| x == key) {
            Some(r) => r,
            None => {
                rows.push(key);
                m.push(vec![Rational::zero(); k]);
                rows.len() - 1
            }
        };
        m[r][e.component[1]] += Rational::from_integer(e.coeff);
    }
    (rows, m)
}

/// dim S for a coherent system: the rank of Φ on sections.
pub fn section_span_dim(f: &CurveFixture) -> usize {
    rational_rank(&section_matrix(f).1)
}

/// Largest subspace K ⊂ ℂᵏ with Φ(K) ⊂ ℰ_A.
pub fn compatible_kernel(f: &CurveFixture, mask: u64) -> Vec<Vec<Rational>> {
    let (rows, m) = section_matrix(f);
    let outside: Vec<Vec<Rational>> = rows
        .iter()
        .zip(m)
        .filter(|((a, _), _)| mask >> a & 1 == 0)
        .map(|(_, r)| r)
        .collect();
    nullspace(&outside, f.degrees[1].len())
}

/// dim(H⁰(ℰ_A) ∩ S) for a coherent system.
pub fn sections_in(f: &CurveFixture, mask: u64) -> usize {
    let (rows, m) = section_matrix(f);
    let outside: Vec<Vec<Rational>> = rows
        .iter()
        .zip(&m)
        .filter(|((a, _), _)| mask >> a & 1 == 0)
        .map(|(_, r)| r.clone())
        .collect();
    rational_rank(&m) - rational_rank(&outside)
}

/// Whether Φ ∈ H⁰(V⁻) for the generator of type `ty` on `sub`.
pub fn admissible(f: &CurveFixture, sub: &SubObject, ty: GenType) -> Result<bool> {
    if is_coherent(f) {
        let (rows, m) = section_matrix(f);
        let kernel = sub.kernel.clone().unwrap_or_default();
        for ((a, _), row) in rows.iter().zip(&m) {
            if sub.masks[0] >> a & 1 == 1 {
                continue;
            }
            for v in &kernel {
                let dot = row.iter().zip(v).fold(Rational::zero(), |s, (x, y)| s + x * y);
                if !dot.is_zero() {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }
    let shift = match ty {
        GenType::F => Rational::zero(),
        GenType::G => Rational::one(),
    };
    let alpha: Vec<Vec<Rational>> = f
        .degrees
        .iter()
        .enumerate()
        .map(|(i, d)| {
            (0..d.len())
                .map(|k| if sub.masks[i] >> k & 1 == 1 { -Rational::one() } else { Rational::zero() } + shift)
                .collect()
        })
        .collect();
    Ok(component_weights(f, &alpha)?.iter().all(|w| *w <= Rational::zero()))
}

/// Every sub-object of the fixture lattice: products of summand subsets, and
/// for coherent systems the K-parts {largest compatible, 0}.
pub fn sub_objects(f: &CurveFixture) -> Vec<SubObject> {
    let factors = summand_factors(f);
    let sizes: Vec<usize> = factors.iter().map(|&i| f.degrees[i].len()).collect();
    let total: usize = sizes.iter().map(|&n| 1usize << n).product();
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut masks: Vec<u64> = f.degrees.iter().map(|d| full_mask(d.len())).collect();
        for (&i, &n) in factors.iter().zip(&sizes) {
            masks[i] = (code % (1 << n)) as u64;
            code >>= n;
        }
        if is_coherent(f) {
            let kmax = compatible_kernel(f, masks[0]);
            let empty = kmax.is_empty();
            out.push(SubObject {
                masks: masks.clone(),
                kernel: Some(kmax),
            });
            if !empty {
                out.push(SubObject {
                    masks,
                    kernel: Some(Vec::new()),
                });
            }
        } else {
            out.push(SubObject { masks, kernel: None });
        }
    }
    out
}

/// All admissible, non-trivial two-step generators with their exact slacks.
/// f on 0 and g on the whole object are α = 0 and dropped; f on the whole
/// object and g on 0 are dropped when the central direction acts trivially.
pub fn generators(f: &CurveFixture) -> Result<Vec<Generator>> {
    let central_trivial = central_shift(f)? == 0;
    let mut out = Vec::new();
    for sub in sub_objects(f) {
        let zero = sub.is_zero(f);
        let whole = sub.is_whole(f);
        for ty in [GenType::F, GenType::G] {
            let trivial = match ty {
                GenType::F => zero || (whole && central_trivial),
                GenType::G => whole || (zero && central_trivial),
            };
            if trivial || !admissible(f, &sub, ty)? {
                continue;
            }
            let tag = if ty == GenType::F { "f" } else { "g" };
            out.push(Generator {
                label: format!("{tag}{}", sub.label(f)),
                slack: generator_slack(f, &sub, ty),
                sub: sub.clone(),
                ty,
            });
        }
    }
    Ok(out)
}

/// Per-factor filtrations of the generator (weights, degrees in 2π units).
pub fn generator_filtrations(f: &CurveFixture, sub: &SubObject, ty: GenType) -> Result<Vec<WeightedFiltration>> {
    let (lo, hi) = match ty {
        GenType::F => (-1.0, 0.0),
        GenType::G => (0.0, 1.0),
    };
    let mut out = Vec::new();
    for i in SubObject::active_factors(f) {
        let n = f.degrees[i].len();
        let total = SubObject::whole(f).degree(f, i) as f64;
        let (basis, rank) = factor_basis(f, sub, i);
        let full = crate::linalg::identity(n);
        out.push(if rank == 0 {
            WeightedFiltration::with_degrees(i, n, &[full], &[hi], &[total])?
        } else if rank == n {
            WeightedFiltration::with_degrees(i, n, &[full], &[lo], &[total])?
        } else {
            WeightedFiltration::with_degrees(i, n, &[basis, full], &[lo, hi], &[sub.degree(f, i) as f64, total])?
        });
    }
    Ok(out)
}

/// Basis (columns) of the sub-object's part in factor i, and its rank.
pub(crate) fn factor_basis(f: &CurveFixture, sub: &SubObject, i: usize) -> (CMat, usize) {
    let n = f.degrees[i].len();
    if is_coherent(f) && i == 1 {
        let k = sub.kernel.clone().unwrap_or_default();
        let m = CMat::from_fn(n, k.len(), |r, c| cr(super::fixture::ratio_f64(k[c][r])));
        return (m, k.len());
    }
    let idx = mask_members(sub.masks[i], n);
    (crate::kempf_ness::coordinate_basis(n, &idx), idx.len())
}

fn identity_basis(k: usize) -> Vec<Vec<Rational>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect()
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let lead = m[row][col];
        for x in m[row].iter_mut() {
            *x /= lead;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col];
                let pivot_row = m[row].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                    *x -= factor * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    pivots
}

pub fn rational_rank(rows: &[Vec<Rational>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of {x ∈ ℚⁿ : rows·x = 0}.
pub fn nullspace(rows: &[Vec<Rational>], n: usize) -> Vec<Vec<Rational>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Rational::zero(); n];
            v[fc] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][fc];
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::fixture::FixtureEntry;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn rank_and_nullspace() {
        let rows = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        assert_eq!(rational_rank(&rows), 1);
        let ns = nullspace(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let dot = rows[0].iter().zip(v).fold(q(0), |s, (a, b)| s + a * b);
            assert!(dot.is_zero());
        }
        assert_eq!(nullspace(&[], 2).len(), 2);
    }

    #[test]
    fn coherent_kernel_bookkeeping() {
        // φ₁ = φ₂ = s on L(2): dim S = 1, Φ not injective.
        let f = CurveFixture::new(
            ExampleKind::CoherentSystem,
            vec![vec![2, 1], vec![0, 0]],
            vec![FixtureEntry::at(&[0, 0]), FixtureEntry::at(&[0, 1])],
            vec![q(2), Rational::new(-1, 2)],
        )
        .unwrap();
        assert_eq!(section_span_dim(&f), 1);
        assert_eq!(compatible_kernel(&f, 0b10).len(), 1);
        assert_eq!(compatible_kernel(&f, 0b01).len(), 2);
        assert_eq!(sections_in(&f, 0b01), 1);
        assert_eq!(sections_in(&f, 0b10), 0);
    }

    #[test]
    fn pair_generators_cover_both_conditions() {
        let f = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![2, 0], vec![0]],
            vec![FixtureEntry::at(&[1, 0])],
            vec![q(1), q(0)],
        )
        .unwrap();
        let gens = generators(&f).unwrap();
        let labels: Vec<&str> = gens.iter().map(|g| g.label.as_str()).collect();
        // f on every non-zero sub-object, g on proper ones containing the support.
        assert_eq!(gens.iter().filter(|g| g.ty == GenType::F).count(), 3);
        assert!(labels.contains(&"g(L(0))"));
        assert!(!labels.contains(&"g(L(2))"));
        let f_l2 = gens.iter().find(|g| g.label == "f(L(2))").unwrap();
        assert_eq!(f_l2.slack, q(-1));
    }

    #[test]
    fn containment() {
        let a = SubObject {
            masks: vec![0b01, 1],
            kernel: None,
        };
        let b = SubObject {
            masks: vec![0b11, 1],
            kernel: None,
        };
        assert!(a.contained_in(&b));
        assert!(!b.contained_in(&a));
    }
}
