//! Decomposable curve fixtures: every factor is a direct sum of line bundles
//! of integer degree (in 2π units) and Φ is described by its support.

use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Rational;
use crate::error::{invalid, Result};
use crate::lattice::examples::{component_degree, ExampleKind, ExampleParams, SupportEntry};
use crate::moment::RepSpec;

/// Upper bound on the number of summands of a single factor.
pub const MAX_SUMMANDS: usize = 8;

/// One nonzero component of Φ. `component` holds one index per tensor slot
/// (adjoint slots use the row-major index i·m + j); `section` selects a
/// section of the induced line summand and `coeff` is an integer weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub component: Vec<usize>,
    #[serde(default)]
    pub section: usize,
    #[serde(default = "one")]
    pub coeff: i64,
}

fn one() -> i64 {
    1
}

impl FixtureEntry {
    pub fn at(component: &[usize]) -> Self {
        Self {
            component: component.to_vec(),
            section: 0,
            coeff: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFixture {
    pub kind: ExampleKind,
    /// Summand degrees of each factor.
    pub degrees: Vec<Vec<i64>>,
    pub support: Vec<FixtureEntry>,
    /// Central constants per factor in 2π units; entries on frozen factors
    /// are ignored.
    #[serde(serialize_with = "ser_ratios", deserialize_with = "de_ratios")]
    pub c: Vec<Rational>,
    /// Allow support on negative-degree summands (a flat twist on the torus).
    #[serde(default)]
    pub smooth: bool,
}

fn ser_ratios<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    let strings: Vec<String> = v.iter().map(|r| r.to_string()).collect();
    strings.serialize(s)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RatioRepr {
    Int(i64),
    Text(String),
}

fn de_ratios<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
    let raw = Vec::<RatioRepr>::deserialize(d)?;
    raw.into_iter()
        .map(|r| match r {
            RatioRepr::Int(i) => Ok(Rational::from_integer(i)),
            RatioRepr::Text(t) => parse_ratio(&t).map_err(serde::de::Error::custom),
        })
        .collect()
}

/// Parses "p", "-p" or "p/q".
pub fn parse_ratio(text: &str) -> std::result::Result<Rational, String> {
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let p: i64 = num.parse().map_err(|_| format!("bad rational `{text}`"))?;
    let q: i64 = den.parse().map_err(|_| format!("bad rational `{text}`"))?;
    if q == 0 {
        return Err(format!("zero denominator in `{text}`"));
    }
    Ok(Rational::new(p, q))
}

impl CurveFixture {
    pub fn new(
        kind: ExampleKind,
        degrees: Vec<Vec<i64>>,
        support: Vec<FixtureEntry>,
        c: Vec<Rational>,
    ) -> Result<Self> {
        let f = Self {
            kind,
            degrees,
            support,
            c,
            smooth: false,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_smooth(mut self, smooth: bool) -> Result<Self> {
        self.smooth = smooth;
        self.validate()?;
        Ok(self)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.degrees.iter().map(|d| d.len()).collect()
    }

    pub fn rep(&self) -> Result<RepSpec> {
        self.kind.rep(&self.ranks())
    }

    pub fn validate(&self) -> Result<()> {
        let nf = self.kind.num_factors();
        if self.degrees.len() != nf {
            return invalid(format!(
                "{} needs {nf} factors, got {}",
                self.kind.name(),
                self.degrees.len()
            ));
        }
        if self.c.len() != nf {
            return invalid(format!(
                "{} needs {nf} c-values, got {}",
                self.kind.name(),
                self.c.len()
            ));
        }
        for (i, d) in self.degrees.iter().enumerate() {
            if d.is_empty() || d.len() > MAX_SUMMANDS {
                return invalid(format!("factor {i} must have 1..={MAX_SUMMANDS} summands"));
            }
        }
        match self.kind {
            ExampleKind::CoherentSystem if self.degrees[1].iter().any(|&d| d != 0) => {
                return invalid("the 𝒪ᵏ factor of a coherent system has degree-0 summands only");
            }
            ExampleKind::Higgs if self.degrees[1] != [0] => {
                return invalid("the cotangent line of a Higgs fixture is trivial of rank 1");
            }
            _ => {}
        }
        let rep = self.rep()?;
        for e in &self.support {
            let d = component_degree(&rep, &self.degrees, &e.component)?;
            if e.coeff == 0 {
                return invalid(format!("component {:?} has coefficient 0", e.component));
            }
            if d < 0 && !self.smooth {
                return invalid(format!(
                    "component {:?} lies on a degree {d} summand without holomorphic sections (set smooth for a flat twist)",
                    e.component
                ));
            }
            if d >= 0 && e.section >= (d.max(1) as usize) {
                return invalid(format!(
                    "component {:?}: section {} but the summand has {} sections",
                    e.component,
                    e.section,
                    d.max(1)
                ));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    /// Notes on degree-0 (flat structure) and negative-degree support.
    pub fn flags(&self) -> Vec<String> {
        let Ok(rep) = self.rep() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for e in &self.support {
            match component_degree(&rep, &self.degrees, &e.component) {
                Ok(0) => out.push(format!(
                    "component {:?} needs the flat structure of a degree-0 summand",
                    e.component
                )),
                Ok(d) if d < 0 => out.push(format!(
                    "component {:?} has degree {d}: smooth flat twist, not holomorphic",
                    e.component
                )),
                _ => {}
            }
        }
        out
    }

    pub fn factor_degree(&self, i: usize) -> i64 {
        self.degrees[i].iter().sum()
    }

    /// Global trace constraint slack (in 2π units) of kinds that have one.
    pub fn constraint_slack(&self) -> Option<Rational> {
        let r = self.ranks();
        let deg = |i: usize| Rational::from_integer(self.factor_degree(i));
        let n = |i: usize| Rational::from_integer(r[i] as i64);
        match self.kind {
            ExampleKind::CoherentSystem => Some(deg(0) - self.c[0] * n(0) - self.c[1] * n(1)),
            ExampleKind::TwistedTriple => Some(deg(0) + deg(1) - self.c[0] * n(0) - self.c[1] * n(1)),
            ExampleKind::Higgs => Some(deg(0) - self.c[0] * n(0)),
            _ => None,
        }
    }

    pub fn satisfies_constraint(&self) -> bool {
        self.constraint_slack().map_or(true, |s| s.is_zero())
    }

    /// Slope μ(ℰ) of factor i.
    pub fn slope(&self, i: usize) -> Rational {
        Rational::new(self.factor_degree(i), self.degrees[i].len() as i64)
    }

    /// The same fixture with the summands of factor `i` permuted:
    /// summand `perm[k]` of the result is summand k of `self`.
    pub fn permuted(&self, factor: usize, perm: &[usize]) -> Result<Self> {
        let n = self.degrees[factor].len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return invalid("not a permutation");
        }
        let rep = self.rep()?;
        let mut out = self.clone();
        for (k, &p) in perm.iter().enumerate() {
            out.degrees[factor][p] = self.degrees[factor][k];
        }
        for e in &mut out.support {
            for (slot, idx) in rep.slots().iter().zip(e.component.iter_mut()) {
                if slot.factor != factor {
                    continue;
                }
                *idx = match slot.action {
                    crate::moment::SlotAction::Adjoint => perm[*idx / n] * n + perm[*idx % n],
                    _ => perm[*idx],
                };
            }
        }
        Ok(out)
    }

    /// Lattice example parameters with c scaled to absolute units (2π·c).
    pub fn to_example(&self, n: usize, amplitude: f64) -> ExampleParams {
        let tau = std::f64::consts::TAU;
        ExampleParams {
            kind: self.kind,
            n,
            degrees: self.degrees.clone(),
            c: self.c.iter().map(|r| tau * ratio_f64(*r)).collect(),
            support: self
                .support
                .iter()
                .map(|e| SupportEntry {
                    component: e.component.clone(),
                    section: e.section,
                    coeff: e.coeff as f64,
                })
                .collect(),
            amplitude,
            smooth: self.smooth,
        }
    }
}

pub fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Random fixture of the given kind with small ranks and degrees. Supported
/// components always have non-negative degree. For coherent systems,
/// twisted triples and Higgs fixtures the constraint is met: c is solved
/// from the degrees (c₂ of a coherent system is drawn negative).
pub fn random_fixture(kind: ExampleKind, rng: &mut impl Rng) -> CurveFixture {
    loop {
        if let Some(f) = try_random(kind, rng) {
            return f;
        }
    }
}

fn small_c(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-8..=8), rng.gen_range(1..=3))
}

fn try_random(kind: ExampleKind, rng: &mut impl Rng) -> Option<CurveFixture> {
    let degs = |n: usize, lo: i64, hi: i64, rng: &mut dyn rand::RngCore| -> Vec<i64> {
        (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
    };
    let degrees: Vec<Vec<i64>> = match kind {
        ExampleKind::PairTensor => vec![
            degs(rng.gen_range(1..=3), -1, 3, rng),
            degs(rng.gen_range(1..=2), 0, 1, rng),
        ],
        ExampleKind::TripleFixedE2 => vec![
            degs(rng.gen_range(1..=3), -1, 3, rng),
            degs(rng.gen_range(1..=2), -1, 1, rng),
        ],
        ExampleKind::CoherentSystem => vec![degs(rng.gen_range(1..=3), 0, 3, rng), vec![0; rng.gen_range(1..=2)]],
        ExampleKind::TwistedTriple => vec![
            degs(rng.gen_range(1..=2), -1, 3, rng),
            degs(rng.gen_range(1..=2), -1, 1, rng),
            degs(rng.gen_range(1..=2), -1, 1, rng),
        ],
        ExampleKind::Higgs => vec![degs(rng.gen_range(1..=3), -2, 2, rng), vec![0]],
    };
    let rep = kind.rep(&degrees.iter().map(|d| d.len()).collect::<Vec<_>>()).ok()?;
    let mut support = Vec::new();
    let dims: Vec<usize> = rep.slots().iter().map(|s| s.dim).collect();
    let total: usize = dims.iter().product();
    for flat in 0..total {
        let mut comp = vec![0; dims.len()];
        let mut rem = flat;
        for k in (0..dims.len()).rev() {
            comp[k] = rem % dims[k];
            rem /= dims[k];
        }
        let d = component_degree(&rep, &degrees, &comp).ok()?;
        if d >= 0 && rng.gen_bool(0.45) {
            support.push(FixtureEntry {
                component: comp,
                section: rng.gen_range(0..d.max(1) as usize),
                coeff: *[1, 1, 2, -1].get(rng.gen_range(0..4)).unwrap_or(&1),
            });
        }
    }
    let n: Vec<i64> = degrees.iter().map(|d| d.len() as i64).collect();
    let deg: Vec<i64> = degrees.iter().map(|d| d.iter().sum()).collect();
    let c = match kind {
        ExampleKind::PairTensor | ExampleKind::TripleFixedE2 => vec![small_c(rng), Rational::zero()],
        ExampleKind::CoherentSystem => {
            let c2 = -Rational::new(rng.gen_range(1..=6), rng.gen_range(1..=2));
            let c1 = (Rational::from_integer(deg[0]) - c2 * n[1]) / n[0];
            vec![c1, c2]
        }
        ExampleKind::TwistedTriple => {
            let c1 = small_c(rng);
            let c2 = (Rational::from_integer(deg[0] + deg[1]) - c1 * n[0]) / n[1];
            vec![c1, c2, Rational::zero()]
        }
        ExampleKind::Higgs => vec![Rational::new(deg[0], n[0]), Rational::zero()],
    };
    let f = CurveFixture {
        kind,
        degrees,
        support,
        c,
        smooth: false,
    };
    if f.c.iter().any(|r| r.abs() > Rational::from_integer(1 << 20)) {
        return None;
    }
    f.validate().ok()?;
    Some(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_ratio("3/2").unwrap(), Rational::new(3, 2));
        assert_eq!(parse_ratio(" -4 ").unwrap(), Rational::from_integer(-4));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
    }

    #[test]
    fn validation_rejects_bad_support() {
        let bad = CurveFixture::new(
            ExampleKind::Higgs,
            vec![vec![1, -1], vec![0]],
            vec![FixtureEntry::at(&[2, 0])],
            vec![Rational::zero(), Rational::zero()],
        );
        assert!(bad.is_err());
        let ok = CurveFixture {
            kind: ExampleKind::Higgs,
            degrees: vec![vec![1, -1], vec![0]],
            support: vec![FixtureEntry::at(&[2, 0])],
            c: vec![Rational::zero(), Rational::zero()],
            smooth: true,
        };
        assert!(ok.validate().is_ok());
        assert_eq!(ok.flags().len(), 1);
        assert!(CurveFixture::new(ExampleKind::PairTensor, vec![vec![1]], vec![], vec![Rational::zero()]).is_err());
    }

    #[test]
    fn random_fixtures_validate_and_meet_constraints() {
        let mut rng = random::rng(4);
        for kind in ExampleKind::ALL {
            for _ in 0..30 {
                let f = random_fixture(kind, &mut rng);
                assert!(f.validate().is_ok());
                assert!(f.satisfies_constraint());
            }
        }
    }

    #[test]
    fn permutation_moves_support() {
        let f = CurveFixture::new(
            ExampleKind::Higgs,
            vec![vec![2, 0, 1], vec![0]],
            vec![FixtureEntry::at(&[1, 0])],
            vec![Rational::from_integer(1), Rational::zero()],
        )
        .unwrap();
        let p = f.permuted(0, &[2, 0, 1]).unwrap();
        assert_eq!(p.degrees[0], vec![0, 1, 2]);
        // Θ entry (0,1) maps summand 1 into summand 0; after the permutation
        // summand 1 sits at 0 and summand 0 at 2.
        assert_eq!(p.support[0].component, vec![2 * 3, 0]);
    }
}
