//! Assembly of lattice states for the five example classes on split bundles.

use serde::{Deserialize, Serialize};

use super::bundle::LatticeBundle;
use super::sections::line_bundle_sections;
use super::state::LatticePairState;
use super::torus::build_torus;
use crate::algebra::{FactorMode, SubgroupSetting};
use crate::error::{invalid, Result};
use crate::moment::{RepSpec, SlotAction};
use crate::{CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    /// Φ ∈ H⁰(𝒱₁⊗𝒱₂) with 𝒱₂ fixed.
    PairTensor,
    /// Φ ∈ H⁰(Hom(ℰ₂, ℰ₁)) with ℰ₂ fixed.
    TripleFixedE2,
    /// Φ ∈ H⁰(Hom(𝒪ᵏ, ℰ)), constant gauge on 𝒪ᵏ.
    CoherentSystem,
    /// Φ ∈ H⁰(Hom(ℰ₂⊗ℱ, ℰ₁)) with ℱ fixed.
    TwistedTriple,
    /// Θ ∈ H⁰(End ℰ ⊗ T*) with the (trivial) cotangent line fixed.
    Higgs,
}

impl ExampleKind {
    pub const ALL: [ExampleKind; 5] = [
        ExampleKind::PairTensor,
        ExampleKind::TripleFixedE2,
        ExampleKind::CoherentSystem,
        ExampleKind::TwistedTriple,
        ExampleKind::Higgs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleKind::PairTensor => "pair_tensor",
            ExampleKind::TripleFixedE2 => "triple_fixed_e2",
            ExampleKind::CoherentSystem => "coherent_system",
            ExampleKind::TwistedTriple => "twisted_triple",
            ExampleKind::Higgs => "higgs",
        }
    }

    pub fn num_factors(self) -> usize {
        match self {
            ExampleKind::TwistedTriple => 3,
            _ => 2,
        }
    }

    /// Representation for the given factor ranks.
    pub fn rep(self, ranks: &[usize]) -> Result<RepSpec> {
        if ranks.len() != self.num_factors() {
            return invalid(format!(
                "{} needs {} factors, got {}",
                self.name(),
                self.num_factors(),
                ranks.len()
            ));
        }
        match self {
            ExampleKind::PairTensor => RepSpec::tensor(ranks[0], ranks[1]),
            ExampleKind::TripleFixedE2 | ExampleKind::CoherentSystem => RepSpec::hom(ranks[0], ranks[1]),
            ExampleKind::TwistedTriple => RepSpec::twisted_hom(ranks[0], ranks[1], ranks[2]),
            ExampleKind::Higgs => {
                if ranks[1] != 1 {
                    return invalid("the cotangent factor of a Higgs example has rank 1");
                }
                RepSpec::higgs(ranks[0])
            }
        }
    }

    pub fn modes(self) -> Vec<FactorMode> {
        use FactorMode::*;
        match self {
            ExampleKind::PairTensor | ExampleKind::TripleFixedE2 | ExampleKind::Higgs => vec![Full, Frozen],
            ExampleKind::CoherentSystem => vec![Full, Constant],
            ExampleKind::TwistedTriple => vec![Full, Full, Frozen],
        }
    }
}

/// One nonzero component of Φ: a per-slot multi-index (adjoint slots use the
/// row-major index i·m + j of the (i, j) entry), the section of the induced
/// line bundle to use, and a coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    pub component: Vec<usize>,
    #[serde(default)]
    pub section: usize,
    #[serde(default = "one")]
    pub coeff: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleParams {
    pub kind: ExampleKind,
    /// Lattice sites per side.
    pub n: usize,
    /// Summand degrees of each factor (a direct sum of line bundles).
    pub degrees: Vec<Vec<i64>>,
    /// Central constants per factor (ignored on frozen factors).
    pub c: Vec<f64>,
    pub support: Vec<SupportEntry>,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Allow components on negative-degree summands, filled with the
    /// conjugate of a holomorphic section (a smooth, non-holomorphic field).
    #[serde(default)]
    pub smooth: bool,
}

impl ExampleParams {
    pub fn ranks(&self) -> Vec<usize> {
        self.degrees.iter().map(|d| d.len()).collect()
    }
}

/// Degree of the induced line summand at a per-slot multi-index.
pub fn component_degree(rep: &RepSpec, degrees: &[Vec<i64>], component: &[usize]) -> Result<i64> {
    if component.len() != rep.slots().len() {
        return invalid(format!(
            "component {component:?} needs {} slot indices",
            rep.slots().len()
        ));
    }
    let mut total = 0;
    for (slot, &k) in rep.slots().iter().zip(component) {
        if k >= slot.dim {
            return invalid(format!(
                "component index {k} out of range for a slot of dimension {}",
                slot.dim
            ));
        }
        let d = &degrees[slot.factor];
        total += match slot.action {
            SlotAction::Standard => d[k],
            SlotAction::Dual => -d[k],
            SlotAction::Adjoint => {
                let m = d.len();
                d[k / m] - d[k % m]
            }
            SlotAction::Trivial => 0,
        };
    }
    Ok(total)
}

/// Flat 𝕍 index of a per-slot multi-index (row-major, last slot fastest).
pub fn flat_index(rep: &RepSpec, component: &[usize]) -> usize {
    rep.slots()
        .iter()
        .zip(component)
        .fold(0, |acc, (slot, &k)| acc * slot.dim + k)
}

/// Degree of each factor in units of 2π.
pub fn factor_degrees(params: &ExampleParams) -> Vec<f64> {
    params
        .degrees
        .iter()
        .map(|d| std::f64::consts::TAU * d.iter().sum::<i64>() as f64)
        .collect()
}

/// Global trace constraint slack of the kind, if any: coherent systems
/// deg ℰ − c₁n − c₂k; twisted triples deg ℰ₁ + deg ℰ₂ − n₁c₁ − n₂c₂; Higgs
/// deg ℰ − m·c_m.
pub fn constraint_slack(params: &ExampleParams) -> Option<f64> {
    let deg = factor_degrees(params);
    let r = params.ranks();
    let c = &params.c;
    match params.kind {
        ExampleKind::CoherentSystem => Some(deg[0] - c[0] * r[0] as f64 - c[1] * r[1] as f64),
        ExampleKind::TwistedTriple => Some(deg[0] + deg[1] - c[0] * r[0] as f64 - c[1] * r[1] as f64),
        ExampleKind::Higgs => Some(deg[0] - c[0] * r[0] as f64),
        _ => None,
    }
}

pub fn assemble_example(params: &ExampleParams) -> Result<LatticePairState> {
    let kind = params.kind;
    let lat = build_torus(params.n)?;
    let ranks = params.ranks();
    let rep = kind.rep(&ranks)?;
    if params.c.len() != ranks.len() {
        return invalid(format!("expected {} c-values, got {}", ranks.len(), params.c.len()));
    }
    match kind {
        ExampleKind::CoherentSystem if params.degrees[1].iter().any(|&d| d != 0) => {
            return invalid("the 𝒪ᵏ factor of a coherent system has degree-0 summands only");
        }
        ExampleKind::Higgs if params.degrees[1] != [0] => {
            return invalid("the cotangent line of a Higgs example is trivial");
        }
        _ => {}
    }
    let factors = params
        .degrees
        .iter()
        .map(|d| LatticeBundle::split(&lat, d))
        .collect::<Result<Vec<_>>>()?;
    let setting = SubgroupSetting::new(rep.group(), kind.modes(), &params.c)?;
    let mut section = vec![CVec::zeros(rep.dim()); lat.sites()];
    let mut notes = Vec::new();
    let mut smooth_used = false;
    for entry in &params.support {
        let e = component_degree(&rep, &params.degrees, &entry.component)?;
        let idx = flat_index(&rep, &entry.component);
        let (basis, conj) = if e >= 0 {
            (line_bundle_sections(&lat, e)?, false)
        } else if params.smooth {
            smooth_used = true;
            (line_bundle_sections(&lat, -e)?, true)
        } else {
            return invalid(format!(
                "component {:?} lives on a degree {e} summand, which has no holomorphic sections",
                entry.component
            ));
        };
        if entry.section >= basis.fields.len() {
            return invalid(format!(
                "component {:?}: section index {} but only {} sections",
                entry.component,
                entry.section,
                basis.fields.len()
            ));
        }
        if e == 0 {
            notes.push(format!(
                "component {:?} uses the flat structure of a degree-0 summand",
                entry.component
            ));
        }
        let k = entry.coeff * params.amplitude;
        for (phi, s) in section.iter_mut().zip(&basis.fields[entry.section]) {
            let z = if conj { s[0].conj() } else { s[0] };
            phi[idx] += z * C64::new(k, 0.0);
        }
    }
    let mut state = LatticePairState::new(lat, rep, setting, factors, section)?;
    if smooth_used {
        state.mark_smooth("Φ has components on negative-degree summands (conjugate sections): smooth, not holomorphic");
    }
    for n in notes {
        state.add_note(n);
    }
    if let Some(slack) = constraint_slack(params) {
        if kind != ExampleKind::Higgs && slack.abs() > 1e-12 {
            state.add_note(format!("warning: global constraint violated, slack {slack:e}"));
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::residual::pointwise_residual;
    use crate::linalg;
    use std::f64::consts::TAU;

    fn entry(c: &[usize]) -> SupportEntry {
        SupportEntry {
            component: c.to_vec(),
            section: 0,
            coeff: 1.0,
        }
    }

    #[test]
    fn coherent_constraint_zero_slack() {
        let p = ExampleParams {
            kind: ExampleKind::CoherentSystem,
            n: 8,
            degrees: vec![vec![0], vec![0]],
            c: vec![1.5, -1.5],
            support: vec![entry(&[0, 0])],
            amplitude: 1.0,
            smooth: false,
        };
        assert_eq!(constraint_slack(&p), Some(0.0));
        let st = assemble_example(&p).unwrap();
        assert!(st.notes().iter().all(|n| !n.starts_with("warning")));
        let r = pointwise_residual(&st).unwrap();
        let total = r.average_trace(0) + r.average_trace(1);
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn higgs_theta_traceless_term() {
        let p = ExampleParams {
            kind: ExampleKind::Higgs,
            n: 16,
            degrees: vec![vec![1, -1], vec![0]],
            c: vec![0.0, 0.0],
            support: vec![entry(&[2, 0])],
            amplitude: 1.0,
            smooth: true,
        };
        let st = assemble_example(&p).unwrap();
        assert!(!st.is_holomorphic());
        for phi in st.section() {
            let mu = crate::moment::mu_full(phi, st.rep()).unwrap();
            assert!(linalg::trace(mu.block(0)).norm() < 1e-13);
        }
        let mut strict = p.clone();
        strict.smooth = false;
        assert!(assemble_example(&strict).is_err());
    }

    #[test]
    fn pair_tensor_with_trivial_line_matches_plain_vortex() {
        let p = ExampleParams {
            kind: ExampleKind::PairTensor,
            n: 8,
            degrees: vec![vec![1], vec![0]],
            c: vec![2.0 * TAU, 0.0],
            support: vec![entry(&[0, 0])],
            amplitude: 0.7,
            smooth: false,
        };
        let st = assemble_example(&p).unwrap();
        let plain = LatticePairState::new(
            *st.lattice(),
            RepSpec::fundamental(1).unwrap(),
            SubgroupSetting::full(RepSpec::fundamental(1).unwrap().group(), &[2.0 * TAU]).unwrap(),
            vec![st.factor(0).clone()],
            st.section().to_vec(),
        )
        .unwrap();
        let a = pointwise_residual(&st).unwrap();
        let b = pointwise_residual(&plain).unwrap();
        for (x, y) in a.herm.iter().zip(&b.herm) {
            assert!(linalg::max_abs(&(&x[0] - &y[0])) < 1e-14);
            assert!(linalg::max_abs(&x[1]) == 0.0);
        }
    }

    #[test]
    fn component_degrees_follow_actions() {
        let rep = RepSpec::twisted_hom(2, 1, 1).unwrap();
        let d = vec![vec![3, 1], vec![-1], vec![2]];
        assert_eq!(component_degree(&rep, &d, &[1, 0, 0]).unwrap(), 1 + 1 - 2);
        let h = RepSpec::higgs(2).unwrap();
        assert_eq!(component_degree(&h, &[vec![1, -1], vec![0]], &[2, 0]).unwrap(), -2);
        assert_eq!(flat_index(&rep, &[1, 0, 0]), 1);
    }
}
