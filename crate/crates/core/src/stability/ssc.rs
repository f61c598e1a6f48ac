//! Brute-force check of the reduction to two-step generators: random
//! multi-step filtrations in the admissible cone are evaluated through the
//! full total weight deg(χ) + λ(Φ;χ) − ⟨χ,c⟩ and compared with the
//! generator data.

use num_traits::Zero;
use rand::Rng;

use super::fixture::{ratio_f64, CurveFixture};
use super::sublattice::{
    admissible, central_shift, compatible_kernel, component_weights, factor_basis, generator_slack, generators,
    section_matrix, summand_factors, GenType, SubObject,
};
use super::Rational;
use crate::algebra::{AlgebraElement, SubgroupSetting};
use crate::error::Result;
use crate::kempf_ness::{total_weight, WeightedFiltration};
use crate::lattice::examples::{flat_index, ExampleKind};
use crate::linalg::{cr, I};
use crate::moment::{infinitesimal_act, RepSpec};
use crate::{random, CMat, CVec};

#[derive(Clone, Debug, PartialEq)]
pub struct SscReport {
    /// Every trial agreed.
    pub agree: bool,
    pub trials: usize,
    /// Trials whose filtration lies in the admissible cone (finite weight).
    pub admissible: usize,
    pub generator_stable: bool,
    /// All sampled cone elements (and the generator witness, if any) have
    /// positive total weight.
    pub cone_stable: bool,
    /// Some generator has slack exactly 0; the verdict comparison is skipped.
    pub marginal: bool,
    pub min_generator_slack: f64,
    /// Smallest sampled total weight per unit of non-central cone coefficient.
    pub min_normalized_sample: f64,
    pub max_abs_error: f64,
    pub failures: Vec<String>,
}

/// A pointwise vector of 𝕍 with the fixture's support and generic values.
/// For coherent systems the values follow the section bookkeeping so that
/// kernels of Φ on ℂᵏ are reproduced.
pub fn representative(f: &CurveFixture, rep: &RepSpec, rng: &mut impl Rng) -> CVec {
    let mut x = CVec::zeros(rep.dim());
    if f.kind == ExampleKind::CoherentSystem {
        let (rows, m) = section_matrix(f);
        let k = f.degrees[1].len();
        for ((a, _), row) in rows.iter().zip(&m) {
            let p = random::complex(rng);
            for (j, r) in row.iter().enumerate() {
                x[a * k + j] += p * ratio_f64(*r);
            }
        }
        return x;
    }
    for e in &f.support {
        x[flat_index(rep, &e.component)] += random::complex(rng) * e.coeff as f64;
    }
    x
}

fn real_nullity(columns: &[Vec<f64>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let rows = columns[0].len();
    let m = nalgebra::DMatrix::<f64>::from_fn(rows, columns.len(), |r, c| columns[c][r]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&v| v > 1e-9 * smax.max(1e-300)).count();
    columns.len() - rank
}

/// Simplicity of a fixture: no constant skew-Hermitian endomorphism of the
/// split bundles (block diagonal over summands of equal degree, zero on
/// frozen factors) kills Φ, apart from those acting trivially on 𝕍.
/// Evaluated at a generic pointwise representative.
pub fn fixture_is_simple(f: &CurveFixture, seed: u64) -> Result<bool> {
    f.validate()?;
    let rep = f.rep()?;
    let mut rng = random::rng(seed);
    let x = representative(f, &rep, &mut rng);
    let dims: Vec<usize> = f.degrees.iter().map(Vec::len).collect();
    let mut on_x = Vec::new();
    let mut on_rep = Vec::new();
    for (i, mode) in f.kind.modes().iter().enumerate() {
        if mode.is_frozen() {
            continue;
        }
        let n = dims[i];
        let deg = &f.degrees[i];
        for a in 0..n {
            for b in a..n {
                if deg[a] != deg[b] {
                    continue;
                }
                let shapes: Vec<CMat> = if a == b {
                    let mut m = CMat::zeros(n, n);
                    m[(a, a)] = I;
                    vec![m]
                } else {
                    let mut re = CMat::zeros(n, n);
                    re[(a, b)] = cr(1.0);
                    re[(b, a)] = cr(-1.0);
                    let mut im = CMat::zeros(n, n);
                    im[(a, b)] = I;
                    im[(b, a)] = I;
                    vec![re, im]
                };
                for blk in shapes {
                    let mut blocks: Vec<CMat> = dims.iter().map(|&m| CMat::zeros(m, m)).collect();
                    blocks[i] = blk;
                    let s = AlgebraElement::compact_unchecked(blocks);
                    let v = infinitesimal_act(&s, &x, &rep)?;
                    on_x.push(v.iter().flat_map(|z| [z.re, z.im]).collect());
                    on_rep.push(rep.algebra_matrix(&s).iter().flat_map(|z| [z.re, z.im]).collect());
                }
            }
        }
    }
    Ok(real_nullity(&on_x) == real_nullity(&on_rep))
}

fn random_chain(f: &CurveFixture, rng: &mut impl Rng) -> (Vec<SubObject>, Vec<Rational>) {
    let factors = summand_factors(f);
    let r = rng.gen_range(1..=4usize);
    let levels: Vec<Vec<usize>> = factors
        .iter()
        .map(|&i| (0..f.degrees[i].len()).map(|_| rng.gen_range(1..=r)).collect())
        .collect();
    let mut chain: Vec<SubObject> = Vec::new();
    for k in 1..=r {
        let mut sub = SubObject::whole(f);
        for (fi, &i) in factors.iter().enumerate() {
            sub.masks[i] = levels[fi]
                .iter()
                .enumerate()
                .filter(|(_, &l)| l <= k)
                .fold(0, |m, (s, _)| m | 1 << s);
        }
        if f.kind == ExampleKind::CoherentSystem {
            sub.kernel = Some(compatible_kernel(f, sub.masks[0]));
        }
        if sub.is_zero(f) || chain.last().map_or(false, |p| same(f, p, &sub)) {
            continue;
        }
        chain.push(sub);
    }
    let mut alpha: Vec<Rational> = (0..chain.len())
        .map(|_| Rational::from_integer(rng.gen_range(-4..=4)))
        .collect();
    alpha.sort();
    let mut out_c = Vec::new();
    let mut out_a = Vec::new();
    for k in 0..chain.len() {
        if k + 1 < chain.len() && alpha[k] == alpha[k + 1] {
            continue;
        }
        out_c.push(chain[k].clone());
        out_a.push(alpha[k]);
    }
    (out_c, out_a)
}

fn same(f: &CurveFixture, a: &SubObject, b: &SubObject) -> bool {
    (0..f.degrees.len()).all(|i| a.rank(f, i) == b.rank(f, i)) && a.masks == b.masks
}

fn chain_admissible(f: &CurveFixture, chain: &[SubObject], alpha: &[Rational]) -> Result<bool> {
    if f.kind == ExampleKind::CoherentSystem {
        for sub in chain {
            if !admissible(f, sub, GenType::F)? {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let weights: Vec<Vec<Rational>> = f
        .degrees
        .iter()
        .enumerate()
        .map(|(i, d)| {
            (0..d.len())
                .map(|s| {
                    chain
                        .iter()
                        .position(|sub| sub.masks[i] >> s & 1 == 1)
                        .map_or(Rational::zero(), |k| alpha[k])
                })
                .collect()
        })
        .collect();
    Ok(component_weights(f, &weights)?.iter().all(|w| *w <= Rational::zero()))
}

fn chain_filtrations(f: &CurveFixture, chain: &[SubObject], alpha: &[Rational]) -> Result<Vec<WeightedFiltration>> {
    let mut out = Vec::new();
    for (i, mode) in f.kind.modes().iter().enumerate() {
        if mode.is_frozen() {
            continue;
        }
        let n = f.degrees[i].len();
        let mut bases = Vec::new();
        let mut weights = Vec::new();
        let mut degrees = Vec::new();
        let mut prev = 0;
        for (sub, a) in chain.iter().zip(alpha) {
            let (basis, rank) = factor_basis(f, sub, i);
            if rank > prev {
                bases.push(basis);
                weights.push(ratio_f64(*a));
                degrees.push(sub.degree(f, i) as f64);
                prev = rank;
            }
        }
        out.push(WeightedFiltration::with_degrees(i, n, &bases, &weights, &degrees)?);
    }
    Ok(out)
}

/// Compare generator slacks with full total weights on `trials` random
/// cone elements.
pub fn ssc_reduction_equiv(fixture: &CurveFixture, trials: usize, seed: u64) -> Result<SscReport> {
    fixture.validate()?;
    let mut f = fixture.clone();
    if f.kind == ExampleKind::Higgs {
        f.c[0] = f.slope(0);
    }
    let constrained = f.satisfies_constraint();
    let rep = f.rep()?;
    let c: Vec<f64> = f.c.iter().map(|r| ratio_f64(*r)).collect();
    let setting = SubgroupSetting::new(rep.group(), f.kind.modes(), &c)?;
    let shift = setting.central_shift();
    let central_trivial = central_shift(&f)? == 0;
    let mut rng = random::rng(seed);
    let x = representative(&f, &rep, &mut rng);

    let gens = generators(&f)?;
    let min_gen = gens.iter().map(|g| g.slack).min();
    let generator_stable = min_gen.map_or(true, |s| s > Rational::zero());
    let marginal = gens.iter().any(|g| g.slack.is_zero());
    let min_generator_slack = min_gen.map_or(f64::INFINITY, ratio_f64);

    let mut failures = Vec::new();
    let mut admissible_count = 0;
    let mut cone_stable = true;
    let mut min_norm = f64::INFINITY;
    let mut max_err: f64 = 0.0;
    for t in 0..trials {
        let (chain, alpha) = random_chain(&f, &mut rng);
        if chain.is_empty() {
            continue;
        }
        let m = chain.len();
        let exact_ok = chain_admissible(&f, &chain, &alpha)?;
        let filts = chain_filtrations(&f, &chain, &alpha)?;
        let w = total_weight(&x, &filts, shift, &rep)?;
        if exact_ok != w.is_finite() {
            failures.push(format!("trial {t}: cone membership {exact_ok} but total weight {w}"));
            continue;
        }
        if !exact_ok {
            continue;
        }
        admissible_count += 1;
        let neg: Vec<Rational> = alpha.iter().map(|a| (*a).min(Rational::zero())).collect();
        let pos: Vec<Rational> = alpha.iter().map(|a| (*a).max(Rational::zero())).collect();
        let zero = SubObject::zero(&f);
        let mut q = Rational::zero();
        let mut nontrivial = Rational::zero();
        let mut terms: Vec<(Rational, &SubObject, GenType)> = Vec::new();
        for i in 0..m {
            let a = if i + 1 < m { neg[i + 1] - neg[i] } else { -neg[i] };
            terms.push((a, &chain[i], GenType::F));
        }
        for j in 0..m {
            let b = if j == 0 { pos[0] } else { pos[j] - pos[j - 1] };
            terms.push((b, if j == 0 { &zero } else { &chain[j - 1] }, GenType::G));
        }
        for (coef, sub, ty) in terms {
            if coef.is_zero() {
                continue;
            }
            if !admissible(&f, sub, ty)? {
                failures.push(format!("trial {t}: cone element uses an inadmissible generator"));
            }
            q += coef * generator_slack(&f, sub, ty);
            let central = match ty {
                GenType::F => sub.is_whole(&f),
                GenType::G => sub.is_zero(&f),
            } && central_trivial;
            if !central {
                nontrivial += coef;
            }
        }
        let qf = ratio_f64(q);
        let err = (w - qf).abs();
        max_err = max_err.max(err);
        if err > 1e-8 * (1.0 + qf.abs()) {
            failures.push(format!("trial {t}: total weight {w} but generator combination {qf}"));
        }
        if !constrained || nontrivial.is_zero() {
            continue;
        }
        let norm = w / ratio_f64(nontrivial);
        min_norm = min_norm.min(norm);
        if w <= 0.0 {
            cone_stable = false;
        }
        if norm < min_generator_slack - 1e-9 * (1.0 + min_generator_slack.abs()) {
            failures.push(format!(
                "trial {t}: normalized weight {norm} below the generator minimum"
            ));
        }
    }
    if constrained && !generator_stable {
        let witness = gens
            .iter()
            .min_by(|a, b| a.slack.cmp(&b.slack))
            .expect("unstable verdict has a witness");
        let filts = super::sublattice::generator_filtrations(&f, &witness.sub, witness.ty)?;
        let w = total_weight(&x, &filts, shift, &rep)?;
        if w <= 0.0 {
            cone_stable = false;
        }
    }
    if constrained && !marginal && generator_stable != cone_stable {
        failures.push(format!(
            "generator verdict stable={generator_stable}, cone verdict stable={cone_stable}"
        ));
    }
    Ok(SscReport {
        agree: failures.is_empty(),
        trials,
        admissible: admissible_count,
        generator_stable,
        cone_stable,
        marginal,
        min_generator_slack,
        min_normalized_sample: min_norm,
        max_abs_error: max_err,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::fixture::{random_fixture, FixtureEntry};

    #[test]
    fn agreement_on_random_fixtures() {
        let mut rng = random::rng(61);
        for kind in ExampleKind::ALL {
            for s in 0..6 {
                let f = random_fixture(kind, &mut rng);
                let r = ssc_reduction_equiv(&f, 300, s).unwrap();
                assert!(r.agree, "{kind:?} {f:?}: {:?}", r.failures);
                assert!(r.admissible > 0);
            }
        }
    }

    #[test]
    fn stable_fixture_is_cone_extremal() {
        let f = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![1, 0], vec![0]],
            vec![FixtureEntry::at(&[0, 0]), FixtureEntry::at(&[1, 0])],
            vec![Rational::new(3, 2), Rational::zero()],
        )
        .unwrap();
        let r = ssc_reduction_equiv(&f, 500, 3).unwrap();
        assert!(r.agree && r.generator_stable && r.cone_stable && !r.marginal);
        assert!(r.min_normalized_sample >= r.min_generator_slack - 1e-12);
    }

    #[test]
    fn simplicity_of_fixtures() {
        let q = Rational::from_integer;
        let line = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![1], vec![0]],
            vec![FixtureEntry::at(&[0, 0])],
            vec![q(2), q(0)],
        )
        .unwrap();
        assert!(fixture_is_simple(&line, 1).unwrap());
        let empty = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![1], vec![0]],
            vec![],
            vec![q(2), q(0)],
        )
        .unwrap();
        assert!(!fixture_is_simple(&empty, 1).unwrap());
        let split = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![0, 0], vec![0]],
            vec![FixtureEntry::at(&[0, 0])],
            vec![q(1), q(0)],
        )
        .unwrap();
        assert!(!fixture_is_simple(&split, 1).unwrap());
        let distinct = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![1, 0], vec![0]],
            vec![FixtureEntry::at(&[0, 0]), FixtureEntry::at(&[1, 0])],
            vec![q(1), q(0)],
        )
        .unwrap();
        assert!(fixture_is_simple(&distinct, 1).unwrap());
        let theta = CurveFixture {
            kind: ExampleKind::Higgs,
            degrees: vec![vec![1, -1], vec![0]],
            support: vec![FixtureEntry::at(&[2, 0])],
            c: vec![q(0), q(0)],
            smooth: true,
        };
        assert!(fixture_is_simple(&theta, 1).unwrap());
        let zero = CurveFixture {
            support: vec![],
            ..theta
        };
        assert!(!fixture_is_simple(&zero, 1).unwrap());
    }

    #[test]
    fn marginal_fixture_flagged() {
        let f = CurveFixture::new(
            ExampleKind::PairTensor,
            vec![vec![1], vec![0]],
            vec![FixtureEntry::at(&[0, 0])],
            vec![Rational::from_integer(1), Rational::zero()],
        )
        .unwrap();
        let r = ssc_reduction_equiv(&f, 100, 1).unwrap();
        assert!(r.marginal && r.agree);
    }
}
