//! Finite-dimensional Kempf–Ness model: negative subspaces, maximal weights,
//! weighted filtrations, SSC generators, stability tests, the integrated
//! moment map Ψ and the gradient flow towards μ_ℋ = c_ℋ.
//!
//! Filtration convention: on the k-th graded piece of W¹⊂…⊂W^r the element χ
//! acts as −√−1·α_k, so √−1χ has eigenvalue α_k there and
//! V⁻(χ) is spanned by eigenvectors of √−1χ with eigenvalue ≤ 0.

use rand::Rng;

use crate::algebra::{
    exp_element, inner_product, AlgebraElement, FactorMode, GroupElement, ProductGroupSpec, SubgroupSetting,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, cr, I};
use crate::moment::{act, mu_shifted, RepSpec, SlotAction};
use crate::{random, CMat, CVec};

const EIG_TOL: f64 = 1e-12;
const MEMBERSHIP_TOL: f64 = 1e-10;

/// Orthonormal basis of V⁻(s) ⊂ 𝕍 (columns).
pub fn negative_subspace(s: &AlgebraElement, rep: &RepSpec) -> Result<CMat> {
    rep.group().check_blocks(s.blocks())?;
    let scale = 1.0 + s.max_abs();
    let mut slot_eigs: Vec<(Vec<f64>, CMat)> = Vec::new();
    for (k, slot) in rep.slots().iter().enumerate() {
        if slot.action == SlotAction::Trivial {
            slot_eigs.push((vec![0.0; slot.dim], linalg::identity(slot.dim)));
            continue;
        }
        let h = rep.slot_algebra_matrix(k, s.block(slot.factor)) * I;
        slot_eigs.push(linalg::herm_eig(&h));
    }
    let dims: Vec<usize> = rep.slots().iter().map(|s| s.dim).collect();
    let total: usize = dims.iter().product();
    let mut cols: Vec<CVec> = Vec::new();
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        let lambda: f64 = idx.iter().enumerate().map(|(k, &i)| slot_eigs[k].0[i]).sum();
        if lambda <= EIG_TOL * scale {
            let mut v = CMat::from_element(1, 1, cr(1.0));
            for (k, &i) in idx.iter().enumerate() {
                v = linalg::kron(&v, &slot_eigs[k].1.columns(i, 1).into_owned());
            }
            cols.push(CVec::from_column_slice(v.as_slice()));
        }
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    if cols.is_empty() {
        return Ok(CMat::zeros(total, 0));
    }
    Ok(CMat::from_columns(&cols))
}

/// Component of x orthogonal to the column span of an orthonormal basis.
fn outside(basis: &CMat, x: &CVec) -> f64 {
    if basis.ncols() == 0 {
        return x.norm();
    }
    (x - basis * (basis.adjoint() * x)).norm()
}

/// λ(x;s): 0 if x ∈ V⁻(s), +∞ otherwise.
pub fn maximal_weight(x: &CVec, s: &AlgebraElement, rep: &RepSpec) -> Result<f64> {
    let nx = x.norm();
    if nx == 0.0 {
        return Ok(0.0);
    }
    let basis = negative_subspace(s, rep)?;
    Ok(if outside(&basis, x) < MEMBERSHIP_TOL * nx {
        0.0
    } else {
        f64::INFINITY
    })
}

/// A filtration W¹⊂…⊊W^r = ℂⁿ of one factor with weights α₁<…<α_r and
/// optional degrees deg W^k.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFiltration {
    factor: usize,
    dim: usize,
    /// Orthonormal bases of the graded pieces W^k ⊖ W^{k−1}.
    pieces: Vec<CMat>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl WeightedFiltration {
    /// `chain[k]` spans W^{k+1}; the last entry must span ℂⁿ. Equal adjacent
    /// weights are merged; decreasing weights are an error.
    pub fn new(factor: usize, dim: usize, chain: &[CMat], weights: &[f64]) -> Result<Self> {
        Self::with_degrees(factor, dim, chain, weights, &vec![0.0; chain.len()])
    }

    pub fn with_degrees(factor: usize, dim: usize, chain: &[CMat], weights: &[f64], degrees: &[f64]) -> Result<Self> {
        if chain.is_empty() || chain.len() != weights.len() || chain.len() != degrees.len() {
            return invalid("chain, weights and degrees must have equal non-zero length");
        }
        if weights.iter().chain(degrees).any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("filtration weight or degree".into()));
        }
        if weights.windows(2).any(|w| w[1] < w[0]) {
            return invalid("filtration weights must be non-decreasing");
        }
        let mut pieces: Vec<CMat> = Vec::new();
        let mut acc = CMat::zeros(dim, 0);
        for (k, w) in chain.iter().enumerate() {
            if w.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    factor,
                    expected: dim,
                    got: w.nrows(),
                });
            }
            let mut joined = acc.clone().resize_horizontally(acc.ncols() + w.ncols(), cr(0.0));
            joined.columns_mut(acc.ncols(), w.ncols()).copy_from(w);
            let q = linalg::orthonormal_columns(&joined, 1e-10);
            if q.ncols() <= acc.ncols() {
                return invalid(format!("chain step {k} does not enlarge the subspace"));
            }
            pieces.push(q.columns(acc.ncols(), q.ncols() - acc.ncols()).into_owned());
            acc = q;
        }
        if acc.ncols() != dim {
            return invalid("last subspace of the chain must be the whole space");
        }
        let mut merged_pieces: Vec<CMat> = Vec::new();
        let mut merged_w: Vec<f64> = Vec::new();
        let mut merged_d: Vec<f64> = Vec::new();
        for (k, p) in pieces.into_iter().enumerate() {
            if merged_w.last() == Some(&weights[k]) {
                let last = merged_pieces.pop().unwrap_or_else(|| CMat::zeros(dim, 0));
                let mut joined = last.clone().resize_horizontally(last.ncols() + p.ncols(), cr(0.0));
                joined.columns_mut(last.ncols(), p.ncols()).copy_from(&p);
                merged_pieces.push(joined);
                *merged_d.last_mut().unwrap() = degrees[k];
            } else {
                merged_pieces.push(p);
                merged_w.push(weights[k]);
                merged_d.push(degrees[k]);
            }
        }
        Ok(Self {
            factor,
            dim,
            pieces: merged_pieces,
            weights: merged_w,
            degrees: merged_d,
        })
    }

    /// Filtration of ℂⁿ by coordinate subspaces: W^k spanned by e_i for
    /// i in `chain[k]`.
    pub fn coordinate(
        factor: usize,
        dim: usize,
        chain: &[Vec<usize>],
        weights: &[f64],
        degrees: &[f64],
    ) -> Result<Self> {
        let bases: Vec<CMat> = chain.iter().map(|idx| coordinate_basis(dim, idx)).collect();
        Self::with_degrees(factor, dim, &bases, weights, degrees)
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// dim W^k for k = 1..r.
    pub fn chain_dims(&self) -> Vec<usize> {
        self.pieces
            .iter()
            .scan(0, |acc, p| {
                *acc += p.ncols();
                Some(*acc)
            })
            .collect()
    }

    /// Orthonormal basis of W^k (1-based k).
    pub fn subspace(&self, k: usize) -> CMat {
        let cols: usize = self.pieces[..k].iter().map(|p| p.ncols()).sum();
        let mut out = CMat::zeros(self.dim, cols);
        let mut at = 0;
        for p in &self.pieces[..k] {
            out.columns_mut(at, p.ncols()).copy_from(p);
            at += p.ncols();
        }
        out
    }

    /// χ block: −√−1·α_k on the k-th graded piece.
    pub fn chi_block(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (p, &a) in self.pieces.iter().zip(&self.weights) {
            m += (p * p.adjoint()) * (-I * a);
        }
        linalg::skew_part(&m)
    }

    /// deg(χ) = α_r deg W + Σ_{k<r}(α_k − α_{k+1}) deg W^k.
    pub fn degree_of_chi(&self) -> f64 {
        let r = self.weights.len();
        let mut d = self.weights[r - 1] * self.degrees[r - 1];
        for k in 0..r - 1 {
            d += (self.weights[k] - self.weights[k + 1]) * self.degrees[k];
        }
        d
    }
}

/// Orthonormal basis of span{e_i : i ∈ idx}.
pub fn coordinate_basis(dim: usize, idx: &[usize]) -> CMat {
    CMat::from_fn(dim, idx.len(), |r, c| if idx[c] == r { cr(1.0) } else { cr(0.0) })
}

/// The element χ of a family of per-factor filtrations (zero on absent factors).
pub fn chi_of(filts: &[WeightedFiltration], spec: &ProductGroupSpec) -> Result<AlgebraElement> {
    let mut blocks: Vec<CMat> = spec.dims().iter().map(|&n| CMat::zeros(n, n)).collect();
    for f in filts {
        if f.factor >= blocks.len() || blocks[f.factor].nrows() != f.dim {
            return Err(Error::DimensionMismatch {
                factor: f.factor,
                expected: spec.dims().get(f.factor).copied().unwrap_or(0),
                got: f.dim,
            });
        }
        blocks[f.factor] += f.chi_block();
    }
    Ok(AlgebraElement::compact_unchecked(blocks))
}

/// deg(χ) + λ(x;χ) − ⟨χ,c⟩.
pub fn total_weight(x: &CVec, filts: &[WeightedFiltration], c: &AlgebraElement, rep: &RepSpec) -> Result<f64> {
    let chi = chi_of(filts, rep.group())?;
    let deg: f64 = filts.iter().map(|f| f.degree_of_chi()).sum();
    let lambda = maximal_weight(x, &chi, rep)?;
    Ok(deg + lambda - inner_product(&chi, c, rep.group())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    /// f_i = −Σ_{k≤i} e_k.
    F(usize),
    /// g_j = Σ_{k≥j} e_k.
    G(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SscGenerator {
    pub kind: GeneratorKind,
    /// Weight vector over the r graded pieces.
    pub alpha: Vec<f64>,
    pub filtration: WeightedFiltration,
}

/// Generators of the cone Λ = {α non-decreasing, α_p ≤ 0}: f_i for every
/// i ≤ r and g_j for j > p. Each is a filtration with eigenvalues in {0, ±1}.
pub fn ssc_generators(factor: usize, dim: usize, chain: &[CMat], p_phi: usize) -> Result<Vec<SscGenerator>> {
    let r = chain.len();
    if p_phi < 1 || p_phi > r {
        return invalid(format!("p = {p_phi} outside 1..={r}"));
    }
    let mut out = Vec::new();
    for i in 1..=r {
        let alpha: Vec<f64> = (1..=r).map(|k| if k <= i { -1.0 } else { 0.0 }).collect();
        let filtration = WeightedFiltration::new(factor, dim, chain, &alpha)?;
        out.push(SscGenerator {
            kind: GeneratorKind::F(i),
            alpha,
            filtration,
        });
    }
    for j in p_phi + 1..=r {
        let alpha: Vec<f64> = (1..=r).map(|k| if k >= j { 1.0 } else { 0.0 }).collect();
        let filtration = WeightedFiltration::new(factor, dim, chain, &alpha)?;
        out.push(SscGenerator {
            kind: GeneratorKind::G(j),
            alpha,
            filtration,
        });
    }
    Ok(out)
}

/// Non-negative coefficients (a_1..a_r, b_{p+1}..b_r) with
/// α = Σ a_i f_i + Σ b_j g_j, or None if α ∉ Λ.
pub fn cone_decompose(alpha: &[f64], p_phi: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let r = alpha.len();
    if p_phi < 1 || p_phi > r || alpha.windows(2).any(|w| w[1] < w[0]) || alpha[p_phi - 1] > 0.0 {
        return None;
    }
    let neg: Vec<f64> = alpha.iter().map(|&a| a.min(0.0)).collect();
    let pos: Vec<f64> = alpha.iter().map(|&a| a.max(0.0)).collect();
    let mut a = vec![0.0; r];
    for i in 0..r - 1 {
        a[i] = neg[i + 1] - neg[i];
    }
    a[r - 1] = -neg[r - 1];
    let b: Vec<f64> = (p_phi..r).map(|j| pos[j] - pos[j - 1]).collect();
    Some((a, b))
}

/// Outcome of a stability test.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Minimum over tested directions of the stability quantity.
    pub slack: f64,
    /// Some tested direction has slack zero (strictly semistable).
    pub marginal: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub label: String,
    pub filtrations: Vec<WeightedFiltration>,
    pub weight: f64,
}

impl StabilityVerdict {
    pub(crate) fn from_candidates(cands: Vec<(String, Vec<WeightedFiltration>, f64)>, zero_tol: f64) -> Self {
        let mut best: Option<(String, Vec<WeightedFiltration>, f64)> = None;
        let mut marginal = false;
        for (label, f, w) in cands {
            if w.abs() <= zero_tol {
                marginal = true;
            }
            if best.as_ref().map_or(true, |b| w < b.2) {
                best = Some((label, f, w));
            }
        }
        match best {
            None => Self {
                stable: true,
                slack: f64::INFINITY,
                marginal: false,
                witness: None,
            },
            Some((label, filtrations, weight)) => Self {
                stable: weight > zero_tol,
                slack: weight,
                marginal,
                witness: Some(Witness {
                    label,
                    filtrations,
                    weight,
                }),
            },
        }
    }
}

/// Candidate subspaces per factor for exhaustive enumeration (proper, non-zero).
#[derive(Clone, Debug, Default)]
pub struct SubspaceLattice {
    pub per_factor: Vec<Vec<CMat>>,
}

impl SubspaceLattice {
    /// All coordinate subspaces of every factor.
    pub fn coordinate(spec: &ProductGroupSpec) -> Self {
        let per_factor = spec
            .dims()
            .iter()
            .map(|&n| {
                (1..(1usize << n) - 1)
                    .map(|mask| {
                        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                        coordinate_basis(n, &idx)
                    })
                    .collect()
            })
            .collect();
        Self { per_factor }
    }
}

const MAX_COMBOS: usize = 1 << 20;

/// The per-factor two-step generator choices: none, f on W (α = −1 on W, 0
/// elsewhere) and g on W (α = 0 on W, +1 on W^⊥).
fn factor_choices(factor: usize, n: usize, lattice: &[CMat]) -> Result<Vec<Option<(String, WeightedFiltration)>>> {
    let mut out = vec![None];
    let full = linalg::identity(n);
    out.push(Some((
        format!("f[{factor}](full)"),
        WeightedFiltration::new(factor, n, &[full.clone()], &[-1.0])?,
    )));
    out.push(Some((
        format!("g[{factor}](0)"),
        WeightedFiltration::new(factor, n, &[full.clone()], &[1.0])?,
    )));
    for (k, w) in lattice.iter().enumerate() {
        let chain = [w.clone(), full.clone()];
        out.push(Some((
            format!("f[{factor}](W{k})"),
            WeightedFiltration::new(factor, n, &chain, &[-1.0, 0.0])?,
        )));
        out.push(Some((
            format!("g[{factor}](W{k})"),
            WeightedFiltration::new(factor, n, &chain, &[0.0, 1.0])?,
        )));
    }
    Ok(out)
}

/// Exhaustive (ℋ,c_ℋ)-stability test over SSC generators built from the
/// caller's subspace lattice; frozen factors contribute nothing.
pub fn stability_test(
    x: &CVec,
    rep: &RepSpec,
    setting: &SubgroupSetting,
    lattice: &SubspaceLattice,
) -> Result<StabilityVerdict> {
    let spec = rep.group();
    let mut choices: Vec<Vec<Option<(String, WeightedFiltration)>>> = Vec::new();
    let mut combos: usize = 1;
    for (i, &n) in spec.dims().iter().enumerate() {
        if setting.mode(i) == FactorMode::Frozen {
            choices.push(vec![None]);
            continue;
        }
        let lat = lattice.per_factor.get(i).map(|v| v.as_slice()).unwrap_or(&[]);
        let c = factor_choices(i, n, lat)?;
        combos = combos.saturating_mul(c.len());
        choices.push(c);
    }
    if combos > MAX_COMBOS {
        return invalid(format!(
            "subspace lattice yields {combos} generator combinations; use sampled_stability_test instead"
        ));
    }
    let c = setting.central_shift();
    let mut cands = Vec::new();
    let mut idx = vec![0usize; choices.len()];
    for _ in 0..combos {
        let picked: Vec<&(String, WeightedFiltration)> = idx
            .iter()
            .enumerate()
            .filter_map(|(f, &k)| choices[f][k].as_ref())
            .collect();
        if !picked.is_empty() {
            let filts: Vec<WeightedFiltration> = picked.iter().map(|p| p.1.clone()).collect();
            let w = total_weight(x, &filts, c, rep)?;
            if w.is_finite() {
                let label = picked.iter().map(|p| p.0.as_str()).collect::<Vec<_>>().join("+");
                cands.push((label, filts, w));
            }
        }
        for f in (0..idx.len()).rev() {
            idx[f] += 1;
            if idx[f] < choices[f].len() {
                break;
            }
            idx[f] = 0;
        }
    }
    Ok(StabilityVerdict::from_candidates(cands, 1e-9))
}

/// Stability test over randomly rotated coordinate flags of every
/// non-frozen factor; for lattices too large to enumerate.
pub fn sampled_stability_test(
    x: &CVec,
    rep: &RepSpec,
    setting: &SubgroupSetting,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<StabilityVerdict> {
    let spec = rep.group();
    let mut cands = Vec::new();
    for t in 0..samples {
        let mut filts = Vec::new();
        for (i, &n) in spec.dims().iter().enumerate() {
            if setting.mode(i) == FactorMode::Frozen {
                continue;
            }
            let u = random::unitary(rng, n);
            let cut = rng.gen_range(0..=n);
            let sign = if rng.gen::<bool>() { -1.0 } else { 1.0 };
            let chain: Vec<CMat> = if cut == 0 || cut == n {
                vec![u.clone()]
            } else {
                vec![u.columns(0, cut).into_owned(), u.clone()]
            };
            let weights: Vec<f64> = if chain.len() == 1 {
                vec![sign]
            } else if sign < 0.0 {
                vec![-1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            };
            filts.push(WeightedFiltration::new(i, n, &chain, &weights)?);
        }
        let w = total_weight(x, &filts, setting.central_shift(), rep)?;
        if w.is_finite() {
            cands.push((format!("sample{t}"), filts, w));
        }
    }
    Ok(StabilityVerdict::from_candidates(cands, 1e-9))
}

/// Whether no non-zero s ∈ 𝔥 annihilates x (trivial infinitesimal stabilizer).
pub fn is_simple(x: &CVec, rep: &RepSpec, setting: &SubgroupSetting) -> Result<bool> {
    let spec = rep.group();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (i, &n) in spec.dims().iter().enumerate() {
        if setting.mode(i) == FactorMode::Frozen {
            continue;
        }
        for a in 0..n {
            for b in 0..n {
                let mut blk = CMat::zeros(n, n);
                if a == b {
                    blk[(a, a)] = I;
                } else if a < b {
                    blk[(a, b)] = cr(1.0);
                    blk[(b, a)] = cr(-1.0);
                } else {
                    blk[(a, b)] = I;
                    blk[(b, a)] = I;
                }
                let mut blocks: Vec<CMat> = spec.dims().iter().map(|&m| CMat::zeros(m, m)).collect();
                blocks[i] = blk;
                let s = AlgebraElement::compact_unchecked(blocks);
                let v = crate::moment::infinitesimal_act(&s, x, rep)?;
                columns.push(v.iter().flat_map(|z| [z.re, z.im]).collect());
            }
        }
    }
    if columns.is_empty() {
        return Ok(true);
    }
    let rows = columns[0].len();
    let m = nalgebra::DMatrix::<f64>::from_fn(rows, columns.len(), |r, c| columns[c][r]);
    if rows < columns.len() {
        return Ok(false);
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(smax > 0.0 && smin > 1e-8 * smax.max(x.norm()))
}

/// Ψ(x, e^{√−1 s}) = ∫₀¹⟨μ_ℋ(e^{√−1ts}x) − c_ℋ, s⟩dt by composite 4-point
/// Gauss–Legendre quadrature over `panels` panels.
pub fn kn_functional(
    x: &CVec,
    s: &AlgebraElement,
    rep: &RepSpec,
    setting: &SubgroupSetting,
    panels: usize,
) -> Result<f64> {
    let panels = panels.max(1);
    let is = s.times_i();
    let nodes = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for &(z, w) in &nodes {
            let t = mid + 0.5 * h * z;
            let g = exp_element(&is, t);
            let y = act(&g, x, rep)?;
            let m = mu_shifted(&y, rep, setting)?;
            total += 0.5 * h * w * inner_product(&m, s, rep.group())?;
        }
    }
    Ok(total)
}

/// Ψ(x, g) for a general g, via the polar decomposition g = k·e^{√−1u}.
pub fn kn_functional_group(
    x: &CVec,
    g: &GroupElement,
    rep: &RepSpec,
    setting: &SubgroupSetting,
    panels: usize,
) -> Result<f64> {
    let u = polar_exponent(g);
    kn_functional(x, &u, rep, setting, panels)
}

/// u ∈ 𝔨 with g = k·e^{√−1u}, k unitary.
pub fn polar_exponent(g: &GroupElement) -> AlgebraElement {
    AlgebraElement::compact_unchecked(
        g.blocks()
            .iter()
            .map(|b| linalg::herm_log(&(b.adjoint() * b)) * (-I * 0.5))
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub max_iter: usize,
    pub step: f64,
    pub tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_iter: 20000,
            step: 0.1,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Residual after each accepted step, starting with the initial one.
    pub trajectory: Vec<f64>,
    /// Iterations at which a step was rejected and halved.
    pub rejections: Vec<usize>,
    pub final_group_element: GroupElement,
    pub sup_log_metric: f64,
}

/// max over blocks of the largest |eigenvalue| of log(h†h).
pub fn sup_log_metric(h: &GroupElement) -> f64 {
    h.blocks()
        .iter()
        .map(|b| {
            let (vals, _) = linalg::herm_eig(&(b.adjoint() * b));
            vals.iter()
                .map(|&v| if v > 0.0 { v.ln().abs() } else { f64::INFINITY })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub(crate) struct StepControl {
    pub step: f64,
    accepted_run: usize,
}

impl StepControl {
    pub(crate) fn new(step: f64) -> Self {
        Self {
            step: step.min(1.0),
            accepted_run: 0,
        }
    }

    pub(crate) fn accept(&mut self) {
        self.accepted_run += 1;
        if self.accepted_run >= 5 {
            self.step = (self.step * 2.0).min(1.0);
            self.accepted_run = 0;
        }
    }

    pub(crate) fn reject(&mut self) {
        self.step *= 0.5;
        self.accepted_run = 0;
    }
}

/// Descent h ← exp(−√−1·step·(μ_ℋ(hx) − c_ℋ))·h from h = 1.
pub fn gradient_flow(x: &CVec, rep: &RepSpec, setting: &SubgroupSetting, opts: &FlowOptions) -> Result<FlowResult> {
    gradient_flow_from(x, &GroupElement::identity(rep.group()), rep, setting, opts)
}

pub fn gradient_flow_from(
    x: &CVec,
    h0: &GroupElement,
    rep: &RepSpec,
    setting: &SubgroupSetting,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    if !(opts.tol > 0.0) {
        return invalid("flow tolerance must be positive");
    }
    let mut h = h0.clone();
    let residual = |h: &GroupElement| -> Result<(AlgebraElement, f64)> {
        let r = mu_shifted(&act(h, x, rep)?, rep, setting)?;
        let n = r.norm();
        Ok((r, n))
    };
    let (mut r, mut norm) = residual(&h)?;
    let mut trajectory = vec![norm];
    let mut rejections = Vec::new();
    let mut ctl = StepControl::new(opts.step);
    let mut iterations = 0;
    let mut diverged = false;
    while norm >= opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let gamma = exp_element(&r.times_i(), -ctl.step);
        let cand = GroupElement::complexified(gamma.blocks().iter().zip(h.blocks()).map(|(a, b)| a * b).collect());
        let (cr_, cn) = residual(&cand)?;
        if !cn.is_finite() || !cr_.is_finite() {
            diverged = true;
            break;
        }
        if cn > norm {
            rejections.push(iterations);
            ctl.reject();
            if ctl.step < 1e-14 {
                break;
            }
            continue;
        }
        ctl.accept();
        h = cand;
        r = cr_;
        norm = cn;
        trajectory.push(norm);
        if sup_log_metric(&h) > 50.0 {
            diverged = true;
            break;
        }
    }
    let sup = sup_log_metric(&h);
    Ok(FlowResult {
        converged: norm < opts.tol && !diverged,
        diverged: diverged || sup > 50.0,
        iterations,
        final_residual: norm,
        trajectory,
        rejections,
        final_group_element: h,
        sup_log_metric: sup,
    })
}
