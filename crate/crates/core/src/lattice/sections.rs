//! Numerical holomorphic sections: the near-kernel of the lattice ∂̄ operator.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::bundle::LatticeBundle;
use super::state::LatticePairState;
use super::torus::TorusLattice;
use crate::algebra::SubgroupSetting;
use crate::error::{invalid, Result};
use crate::linalg::{self, cr, I};
use crate::moment::RepSpec;
use crate::{CMat, CVec, C64};

/// Largest dense ∂̄ operator handled (rows = sites × dim 𝕍).
pub const MAX_DENSE: usize = 4096;

#[derive(Clone, Debug)]
pub struct SectionBasis {
    /// Sections normalised to unit L² norm (a²Σ|Φ|² = 1).
    pub fields: Vec<Vec<CVec>>,
    /// ‖∂̄Φ‖_{L²} of each returned section.
    pub residuals: Vec<f64>,
    /// Smallest singular values of ∂̄, ascending.
    pub singular_values: Vec<f64>,
    /// Number of smooth modes below the dominant singular-value gap.
    pub kernel_dim: usize,
    /// Near-kernel modes at the lattice doubler momentum, excluded from
    /// `kernel_dim`.
    pub doublers: usize,
    /// σ at the kernel edge over the one below it; NaN when no gap exceeds
    /// `KERNEL_GAP`.
    pub gap_ratio: f64,
}

/// Minimum ratio between consecutive singular values that separates the
/// numerical kernel from the rest of the spectrum.
pub const KERNEL_GAP: f64 = 1e3;
const KERNEL_SCAN: usize = 64;
const DOUBLER_ENERGY: f64 = 1.0;

/// Locates the kernel edge among the smallest singular values (ascending):
/// the last index where consecutive values jump by more than `KERNEL_GAP`.
pub fn kernel_split(sv: &[f64]) -> (usize, f64) {
    let smax = sv.last().copied().unwrap_or(0.0);
    let floor = 1e-14 * smax.max(f64::MIN_POSITIVE);
    let mut edge = (0, f64::NAN);
    for k in 1..sv.len().min(KERNEL_SCAN + 1) {
        let r = sv[k] / sv[k - 1].max(floor);
        if r > KERNEL_GAP {
            edge = (k, r);
        }
    }
    edge
}

/// Sparse rows of ∂̄: for each row, (column, value) entries.
fn dbar_rows(state: &LatticePairState) -> Result<Vec<Vec<(usize, C64)>>> {
    let lat = state.lattice();
    let d = state.rep().dim();
    let inv_a = 1.0 / lat.spacing();
    let mut rows = vec![Vec::new(); lat.sites() * d];
    for s in 0..lat.sites() {
        let tx = state.induced_inverse_link(0, s)?;
        let ty = state.induced_inverse_link(1, s)?;
        let (sx, sy) = (lat.fwd(s, 0), lat.fwd(s, 1));
        for v in 0..d {
            let row = &mut rows[s * d + v];
            row.push((s * d + v, C64::new(-inv_a, -inv_a)));
            for w in 0..d {
                if tx[(v, w)] != cr(0.0) {
                    row.push((sx * d + w, tx[(v, w)] * inv_a));
                }
                if ty[(v, w)] != cr(0.0) {
                    row.push((sy * d + w, ty[(v, w)] * I * inv_a));
                }
            }
        }
    }
    Ok(rows)
}

/// Dense matrix of ∂̄ on section fields (index = site·dim𝕍 + component).
pub fn dbar_matrix(state: &LatticePairState) -> Result<CMat> {
    let n = state.lattice().sites() * state.rep().dim();
    if n > MAX_DENSE {
        return invalid(format!("dense ∂̄ of size {n} exceeds {MAX_DENSE}"));
    }
    let mut m = CMat::zeros(n, n);
    for (r, row) in dbar_rows(state)?.into_iter().enumerate() {
        for (c, v) in row {
            m[(r, c)] += v;
        }
    }
    Ok(m)
}

fn normal_matrix(state: &LatticePairState) -> Result<CMat> {
    let n = state.lattice().sites() * state.rep().dim();
    if n > MAX_DENSE {
        return invalid(format!("dense ∂̄ of size {n} exceeds {MAX_DENSE}"));
    }
    let mut m = CMat::zeros(n, n);
    for row in dbar_rows(state)? {
        for &(j, a) in &row {
            for &(k, b) in &row {
                m[(j, k)] += a.conj() * b;
            }
        }
    }
    Ok(m)
}

fn to_field(v: &CVec, sites: usize, d: usize, scale: f64) -> Vec<CVec> {
    (0..sites)
        .map(|s| CVec::from_fn(d, |i, _| v[s * d + i] * scale))
        .collect()
}

/// Covariant gradient energy Σ_μ‖ρ(V_μ)⁻¹Φ(x+μ̂) − Φ(x)‖² as a quadratic form on
/// the columns of `basis`.
fn gradient_gram(state: &LatticePairState, basis: &CMat) -> Result<CMat> {
    let lat = state.lattice();
    let d = state.rep().dim();
    let m = basis.ncols();
    let mut grads: Vec<CMat> = vec![CMat::zeros(lat.sites() * d, m); 2];
    for s in 0..lat.sites() {
        for dir in 0..2 {
            let t = state.induced_inverse_link(dir, s)?;
            let nb = lat.fwd(s, dir);
            for c in 0..m {
                let here = basis.view((s * d, c), (d, 1)).into_owned();
                let there = basis.view((nb * d, c), (d, 1)).into_owned();
                let g = &t * there - here;
                grads[dir].view_mut((s * d, c), (d, 1)).copy_from(&g);
            }
        }
    }
    Ok(grads
        .iter()
        .map(|g| g.adjoint() * g)
        .fold(CMat::zeros(m, m), |a, b| a + b))
}

/// The k lowest right singular vectors of ∂̄, selected within the numerical
/// kernel by lowest gradient energy. With `require_exact`, asking for more
/// sections than the kernel holds is an error.
pub fn holomorphic_sections(state: &LatticePairState, k: usize, require_exact: bool) -> Result<SectionBasis> {
    if k == 0 {
        return invalid("at least one section must be requested");
    }
    let lat = state.lattice();
    let d = state.rep().dim();
    let normal = normal_matrix(state)?;
    let (vals, vecs) = linalg::herm_eig(&normal);
    let sv: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let (raw_dim, gap_ratio) = kernel_split(&sv);
    // Lowest-energy basis of the raw kernel; species doublers sit at energy ~ 4
    // per direction for unit vectors and are moved to the end.
    let mut basis = vecs.columns(0, raw_dim).into_owned();
    let mut kernel_dim = raw_dim;
    if raw_dim > 0 {
        let gram = gradient_gram(state, &basis)?;
        let (energy, rot) = linalg::herm_eig(&gram);
        basis = &basis * rot;
        kernel_dim = energy.iter().filter(|&&e| e < DOUBLER_ENERGY).count();
    }
    if require_exact && k > kernel_dim {
        return invalid(format!(
            "requested {k} holomorphic sections but the numerical kernel has dimension {kernel_dim} \
             ({} doubler modes, σ = {:?})",
            raw_dim - kernel_dim,
            &sv[..(k + 1).min(sv.len())]
        ));
    }
    let pool = raw_dim.max(k);
    if pool > raw_dim {
        let extra = vecs.columns(raw_dim, pool - raw_dim).into_owned();
        let mut all = CMat::zeros(basis.nrows().max(extra.nrows()), pool);
        if raw_dim > 0 {
            all.columns_mut(0, raw_dim).copy_from(&basis);
        }
        all.columns_mut(raw_dim, pool - raw_dim).copy_from(&extra);
        basis = all;
    }
    let scale = 1.0 / lat.spacing();
    let mut fields = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for c in 0..k {
        let v = basis.column(c).into_owned();
        let field = to_field(&v, lat.sites(), d, scale);
        let dv = state.dbar(&field)?;
        let r: f64 = dv.iter().map(|p| p.norm_squared()).sum::<f64>() * lat.cell_area();
        residuals.push(r.sqrt());
        fields.push(field);
    }
    Ok(SectionBasis {
        fields,
        residuals,
        singular_values: sv.iter().take(pool + 4).copied().collect(),
        kernel_dim,
        doublers: raw_dim - kernel_dim,
        gap_ratio,
    })
}

/// A state holding one line bundle and the zero section of its standard rep.
pub fn line_state(lat: &TorusLattice, bundle: LatticeBundle) -> Result<LatticePairState> {
    let rep = RepSpec::fundamental(1)?;
    let setting = SubgroupSetting::full(rep.group(), &[0.0])?;
    LatticePairState::new(*lat, rep, setting, vec![bundle], vec![CVec::zeros(1); lat.sites()])
}

type Cache = Mutex<HashMap<(usize, i64), Arc<SectionBasis>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Holomorphic sections of the constant-curvature line bundle of degree d
/// (max(d,1) of them), cached per (N, d).
pub fn line_bundle_sections(lat: &TorusLattice, d: i64) -> Result<Arc<SectionBasis>> {
    if d < 0 {
        return invalid(format!("degree {d} line bundle has no holomorphic sections"));
    }
    let key = (lat.n(), d);
    if let Some(b) = cache()
        .lock()
        .map_err(|_| crate::Error::Invalid("poisoned cache".into()))?
        .get(&key)
    {
        return Ok(b.clone());
    }
    let st = line_state(lat, LatticeBundle::constant_curvature_line(lat, d)?)?;
    let basis = Arc::new(holomorphic_sections(&st, (d as usize).max(1), true)?);
    cache()
        .lock()
        .map_err(|_| crate::Error::Invalid("poisoned cache".into()))?
        .insert(key, basis.clone());
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::torus::build_torus;

    #[test]
    fn trivial_bundle_gives_constant() {
        let lat = build_torus(8).unwrap();
        let b = line_bundle_sections(&lat, 0).unwrap();
        assert!(b.residuals[0] < 1e-12);
        assert_eq!((b.kernel_dim, b.doublers), (1, 1));
        let f = &b.fields[0];
        for p in f {
            assert!((p[0] - f[0][0]).norm() < 1e-10);
        }
    }

    #[test]
    fn kernel_dimension_matches_degree_small_lattice() {
        let lat = build_torus(16).unwrap();
        for d in 1..=2 {
            let b = line_bundle_sections(&lat, d).unwrap();
            assert_eq!(b.kernel_dim, d as usize, "d = {d}: {:?}", b.singular_values);
            assert!(b.gap_ratio > 1e3);
            let next = b.singular_values[b.kernel_dim];
            assert!(b.residuals.iter().all(|&r| r * KERNEL_GAP < next));
        }
    }

    #[test]
    fn dbar_is_linear_and_kills_constants() {
        let lat = build_torus(6).unwrap();
        let st = line_state(&lat, LatticeBundle::trivial(&lat, 1)).unwrap();
        let c: Vec<CVec> = vec![CVec::from_element(1, C64::new(0.3, -1.0)); lat.sites()];
        assert!(st.dbar(&c).unwrap().iter().all(|v| v.norm() < 1e-14));
        let m = dbar_matrix(&st).unwrap();
        assert_eq!(m.nrows(), 36);
    }

    #[test]
    fn negative_degree_has_no_sections() {
        let lat = build_torus(8).unwrap();
        assert!(line_bundle_sections(&lat, -1).is_err());
        let st = line_state(&lat, LatticeBundle::constant_curvature_line(&lat, -1).unwrap()).unwrap();
        let b = holomorphic_sections(&st, 1, false).unwrap();
        assert_eq!(b.kernel_dim, 0, "{:?}", b.singular_values);
        assert_eq!(b.doublers, 1);
        assert!(holomorphic_sections(&st, 1, true).is_err());
    }
}
