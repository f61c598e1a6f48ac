//! The GPWB1 text container used for lattice snapshots and curve fixtures.
//!
//! Every file starts with the header line `GPWB1 <type>`. The body is a
//! sequence of `key = value` lines and, in snapshots, array blocks opened by a
//! line `[name args...]` and followed by one line per lattice site. Blank
//! lines and lines starting with `#` are ignored outside blocks. Floats are
//! written in Rust's shortest round-trip form, complex entries as `re im`.
//! The field list is documented in `docs/FORMAT.md`.

use std::path::Path;

use crate::algebra::{FactorMode, ProductGroupSpec, SubgroupSetting};
use crate::error::{Error, Result};
use crate::lattice::bundle::LatticeBundle;
use crate::lattice::examples::ExampleKind;
use crate::lattice::state::LatticePairState;
use crate::lattice::torus::{build_torus, DIRS};
use crate::moment::{RepSpec, SlotAction};
use crate::stability::{parse_ratio, CurveFixture, FixtureEntry};
use crate::{CMat, CVec, C64};

pub const MAGIC: &str = "GPWB1";

fn err<T>(line: usize, msg: impl AsRef<str>) -> Result<T> {
    Err(Error::Format(format!("line {line}: {}", msg.as_ref())))
}

fn mode_name(m: FactorMode) -> &'static str {
    match m {
        FactorMode::Full => "full",
        FactorMode::Frozen => "frozen",
        FactorMode::Constant => "constant",
    }
}

fn parse_mode(s: &str) -> Option<FactorMode> {
    match s {
        "full" => Some(FactorMode::Full),
        "frozen" => Some(FactorMode::Frozen),
        "constant" => Some(FactorMode::Constant),
        _ => None,
    }
}

fn action_name(a: SlotAction) -> &'static str {
    match a {
        SlotAction::Standard => "standard",
        SlotAction::Dual => "dual",
        SlotAction::Adjoint => "adjoint",
        SlotAction::Trivial => "trivial",
    }
}

fn parse_action(s: &str) -> Option<SlotAction> {
    match s {
        "standard" => Some(SlotAction::Standard),
        "dual" => Some(SlotAction::Dual),
        "adjoint" => Some(SlotAction::Adjoint),
        "trivial" => Some(SlotAction::Trivial),
        _ => None,
    }
}

fn parse_kind(s: &str) -> Option<ExampleKind> {
    ExampleKind::ALL.into_iter().find(|k| k.name() == s)
}

fn push_complex(out: &mut String, z: C64) {
    out.push_str(&format!("{:?} {:?}", z.re, z.im));
}

fn push_row(out: &mut String, values: impl Iterator<Item = C64>) {
    let mut first = true;
    for z in values {
        if !first {
            out.push(' ');
        }
        first = false;
        push_complex(out, z);
    }
    out.push('\n');
}

fn parse_complex_row(line: usize, text: &str, len: usize) -> Result<Vec<C64>> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 2 * len {
        return err(line, format!("expected {} numbers, found {}", 2 * len, parts.len()));
    }
    let mut out = Vec::with_capacity(len);
    for pair in parts.chunks(2) {
        let re: f64 = pair[0]
            .parse()
            .or_else(|_| err(line, format!("bad number {:?}", pair[0])))?;
        let im: f64 = pair[1]
            .parse()
            .or_else(|_| err(line, format!("bad number {:?}", pair[1])))?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

fn matrix_row_major(m: &CMat) -> impl Iterator<Item = C64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

fn split_kv(line: usize, text: &str) -> Result<(&str, &str)> {
    match text.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => err(line, format!("expected `key = value`, found {text:?}")),
    }
}

/// Lines with their 1-based numbers, comments and blanks removed.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let r = self.inner.next();
        if let Some((n, _)) = r {
            self.last = n;
        }
        r
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.next() {
            Some(x) => Ok(x),
            None => err(self.last + 1, format!("unexpected end of file, expected {what}")),
        }
    }

    fn header(&mut self, ty: &str) -> Result<()> {
        let (n, l) = self.expect("header")?;
        let want = format!("{MAGIC} {ty}");
        if l != want {
            return err(n, format!("expected header {want:?}, found {l:?}"));
        }
        Ok(())
    }
}

/// Serialize a lattice state.
pub fn write_snapshot(state: &LatticePairState) -> String {
    let lat = state.lattice();
    let rep = state.rep();
    let setting = state.setting();
    let degrees = state.degrees();
    let mut out = format!("{MAGIC} snapshot\n");
    out.push_str(&format!("n = {}\n", lat.n()));
    let slots: Vec<String> = rep
        .slots()
        .iter()
        .map(|s| format!("{}:{}", s.factor, action_name(s.action)))
        .collect();
    out.push_str(&format!("slots = {}\n", slots.join(" ")));
    for (i, b) in state.factors().iter().enumerate() {
        out.push_str(&format!(
            "factor = {i} rank={} mode={} degree={:?}\n",
            b.rank(),
            mode_name(setting.mode(i)),
            degrees[i]
        ));
    }
    let c: Vec<String> = setting.c_values().iter().map(|x| format!("{x:?}")).collect();
    out.push_str(&format!("c = {}\n", c.join(" ")));
    out.push_str(&format!("holomorphic = {}\n", state.is_holomorphic()));
    out.push_str(&format!("construction_tol = {:?}\n", state.construction_tol()));
    for note in state.notes() {
        out.push_str(&format!("note = {}\n", note.replace('\n', " ")));
    }
    for (i, b) in state.factors().iter().enumerate() {
        for dir in DIRS {
            out.push_str(&format!("[links {i} {dir}]\n"));
            for l in b.links(dir) {
                push_row(&mut out, matrix_row_major(l));
            }
        }
        out.push_str(&format!("[frames {i}]\n"));
        for g in b.frames() {
            push_row(&mut out, matrix_row_major(g));
        }
    }
    out.push_str("[section]\n");
    for v in state.section() {
        push_row(&mut out, v.iter().copied());
    }
    out.push_str("end\n");
    out
}

struct FactorHeader {
    rank: usize,
    mode: FactorMode,
    degree: f64,
}

fn read_block(lines: &mut Lines, sites: usize, width: usize) -> Result<Vec<Vec<C64>>> {
    (0..sites)
        .map(|_| {
            let (n, l) = lines.expect("array row")?;
            parse_complex_row(n, l, width)
        })
        .collect()
}

fn to_matrices(rows: Vec<Vec<C64>>, r: usize) -> Vec<CMat> {
    rows.into_iter().map(|v| CMat::from_row_slice(r, r, &v)).collect()
}

/// Parse a snapshot written by [`write_snapshot`].
pub fn read_snapshot(text: &str) -> Result<LatticePairState> {
    let mut lines = Lines::new(text);
    lines.header("snapshot")?;
    let mut n = None;
    let mut slots: Option<Vec<(usize, SlotAction)>> = None;
    let mut factors: Vec<FactorHeader> = Vec::new();
    let mut c: Option<Vec<f64>> = None;
    let mut holomorphic = true;
    let mut tol = None;
    let mut notes = Vec::new();
    let mut first_block = None;
    while let Some((ln, l)) = lines.next() {
        if l.starts_with('[') {
            first_block = Some((ln, l));
            break;
        }
        let (k, v) = split_kv(ln, l)?;
        match k {
            "n" => {
                n = Some(
                    v.parse::<usize>()
                        .or_else(|_| err(ln, "n must be a positive integer"))?,
                )
            }
            "slots" => {
                let mut out = Vec::new();
                for item in v.split_whitespace() {
                    let parsed = item
                        .split_once(':')
                        .and_then(|(f, a)| Some((f.parse::<usize>().ok()?, parse_action(a)?)));
                    match parsed {
                        Some(p) => out.push(p),
                        None => return err(ln, format!("bad slot {item:?}")),
                    }
                }
                slots = Some(out);
            }
            "factor" => {
                let mut parts = v.split_whitespace();
                let idx: usize = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .map_or_else(|| err(ln, "factor index missing"), Ok)?;
                if idx != factors.len() {
                    return err(ln, format!("factor {idx} out of order"));
                }
                let mut rank = None;
                let mut mode = None;
                let mut degree = None;
                for p in parts {
                    match p.split_once('=') {
                        Some(("rank", x)) => rank = x.parse().ok(),
                        Some(("mode", x)) => mode = parse_mode(x),
                        Some(("degree", x)) => degree = x.parse().ok(),
                        _ => return err(ln, format!("unknown factor field {p:?}")),
                    }
                }
                match (rank, mode, degree) {
                    (Some(rank), Some(mode), Some(degree)) => factors.push(FactorHeader { rank, mode, degree }),
                    _ => return err(ln, "factor needs rank, mode and degree"),
                }
            }
            "c" => {
                let vals: std::result::Result<Vec<f64>, _> = v.split_whitespace().map(str::parse).collect();
                c = Some(vals.or_else(|_| err(ln, "bad c value"))?);
            }
            "holomorphic" => {
                holomorphic = v.parse().or_else(|_| err(ln, "holomorphic must be true or false"))?;
            }
            "construction_tol" => tol = Some(v.parse::<f64>().or_else(|_| err(ln, "bad construction_tol"))?),
            "note" => notes.push(v.to_string()),
            _ => return err(ln, format!("unknown key {k:?}")),
        }
    }
    let missing = |what: &str| Error::Format(format!("missing field {what:?}"));
    let n = n.ok_or_else(|| missing("n"))?;
    let slots = slots.ok_or_else(|| missing("slots"))?;
    let c = c.ok_or_else(|| missing("c"))?;
    let tol = tol.ok_or_else(|| missing("construction_tol"))?;
    if factors.is_empty() {
        return Err(missing("factor"));
    }
    let lat = build_torus(n)?;
    let spec = ProductGroupSpec::new(factors.iter().map(|f| f.rank).collect())?;
    let rep = RepSpec::new(spec.clone(), slots)?;
    let setting = SubgroupSetting::new(&spec, factors.iter().map(|f| f.mode).collect(), &c)?;
    let sites = lat.sites();

    let mut block = first_block;
    let mut bundles = Vec::new();
    for (i, fh) in factors.iter().enumerate() {
        let r = fh.rank;
        let mut links: Vec<Vec<CMat>> = Vec::new();
        for dir in DIRS {
            let want = format!("[links {i} {dir}]");
            match block.take().or_else(|| lines.next()) {
                Some((_, l)) if l == want => {}
                Some((ln, l)) => return err(ln, format!("expected {want:?}, found {l:?}")),
                None => return err(lines.last + 1, format!("missing block {want:?}")),
            }
            links.push(to_matrices(read_block(&mut lines, sites, r * r)?, r));
        }
        let want = format!("[frames {i}]");
        match lines.next() {
            Some((_, l)) if l == want => {}
            Some((ln, l)) => return err(ln, format!("expected {want:?}, found {l:?}")),
            None => return err(lines.last + 1, format!("missing block {want:?}")),
        }
        let frames = to_matrices(read_block(&mut lines, sites, r * r)?, r);
        let ly = links.pop().expect("two directions");
        let lx = links.pop().expect("two directions");
        bundles.push(LatticeBundle::from_links(&lat, r, [lx, ly])?.with_frames(frames)?);
    }
    match lines.next() {
        Some((_, "[section]")) => {}
        Some((ln, l)) => return err(ln, format!("expected \"[section]\", found {l:?}")),
        None => return err(lines.last + 1, "missing block \"[section]\""),
    }
    let section: Vec<CVec> = read_block(&mut lines, sites, rep.dim())?
        .into_iter()
        .map(CVec::from_vec)
        .collect();
    match lines.next() {
        Some((_, "end")) => {}
        Some((ln, l)) => return err(ln, format!("expected \"end\", found {l:?}")),
        None => return err(lines.last + 1, "missing \"end\""),
    }
    if let Some((ln, _)) = lines.next() {
        return err(ln, "content after \"end\"");
    }
    let mut state = LatticePairState::new(lat, rep, setting, bundles, section)?;
    for (i, (fh, d)) in factors.iter().zip(state.degrees()).enumerate() {
        if (fh.degree - d).abs() > 1e-9 * (1.0 + d.abs()) {
            return Err(Error::Format(format!(
                "factor {i}: recorded degree {} but links give {d}",
                fh.degree
            )));
        }
    }
    state.restore_meta(tol, holomorphic, notes);
    Ok(state)
}

/// Serialize a curve fixture.
pub fn write_fixture(f: &CurveFixture) -> String {
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
    let mut out = format!("{MAGIC} fixture\n");
    out.push_str(&format!("kind = {}\n", f.kind.name()));
    out.push_str(&format!(
        "ranks = {}\n",
        join(&mut f.ranks().iter().map(|r| r.to_string()))
    ));
    for (i, d) in f.degrees.iter().enumerate() {
        out.push_str(&format!(
            "degrees = {i}: {}\n",
            join(&mut d.iter().map(|x| x.to_string()))
        ));
    }
    out.push_str(&format!("c = {}\n", join(&mut f.c.iter().map(|r| r.to_string()))));
    out.push_str(&format!("smooth = {}\n", f.smooth));
    for e in &f.support {
        let comp: Vec<String> = e.component.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!(
            "support = {} section={} coeff={}\n",
            comp.join(","),
            e.section,
            e.coeff
        ));
    }
    out
}

/// Parse a fixture written by [`write_fixture`] (or by hand).
pub fn read_fixture(text: &str) -> Result<CurveFixture> {
    let mut lines = Lines::new(text);
    lines.header("fixture")?;
    let mut kind = None;
    let mut ranks: Option<(usize, Vec<usize>)> = None;
    let mut degrees: Vec<Vec<i64>> = Vec::new();
    let mut c = None;
    let mut smooth = false;
    let mut support = Vec::new();
    while let Some((ln, l)) = lines.next() {
        let (k, v) = split_kv(ln, l)?;
        match k {
            "kind" => kind = Some(parse_kind(v).map_or_else(|| err(ln, format!("unknown kind {v:?}")), Ok)?),
            "ranks" => {
                let r: std::result::Result<Vec<usize>, _> = v.split_whitespace().map(str::parse).collect();
                ranks = Some((ln, r.or_else(|_| err(ln, "bad rank"))?));
            }
            "degrees" => {
                let (idx, list) = v
                    .split_once(':')
                    .map_or_else(|| err(ln, "expected `degrees = i: d ...`"), Ok)?;
                let idx: usize = idx.trim().parse().or_else(|_| err(ln, "bad factor index"))?;
                if idx != degrees.len() {
                    return err(ln, format!("degrees for factor {idx} out of order"));
                }
                let d: std::result::Result<Vec<i64>, _> = list.split_whitespace().map(str::parse).collect();
                degrees.push(d.or_else(|_| err(ln, "bad degree"))?);
            }
            "c" => {
                let vals: std::result::Result<Vec<_>, String> = v.split_whitespace().map(parse_ratio).collect();
                c = Some(vals.or_else(|e| err(ln, e))?);
            }
            "smooth" => smooth = v.parse().or_else(|_| err(ln, "smooth must be true or false"))?,
            "support" => {
                let mut parts = v.split_whitespace();
                let comp = parts.next().map_or_else(|| err(ln, "empty support entry"), Ok)?;
                let component: std::result::Result<Vec<usize>, _> = comp.split(',').map(str::parse).collect();
                let mut entry = FixtureEntry::at(&component.or_else(|_| err(ln, format!("bad component {comp:?}")))?);
                for p in parts {
                    match p.split_once('=') {
                        Some(("section", x)) => entry.section = x.parse().or_else(|_| err(ln, "bad section"))?,
                        Some(("coeff", x)) => entry.coeff = x.parse().or_else(|_| err(ln, "bad coeff"))?,
                        _ => return err(ln, format!("unknown support field {p:?}")),
                    }
                }
                support.push(entry);
            }
            _ => return err(ln, format!("unknown key {k:?}")),
        }
    }
    let kind = kind.ok_or_else(|| Error::Format("missing field \"kind\"".into()))?;
    let c = c.ok_or_else(|| Error::Format("missing field \"c\"".into()))?;
    if let Some((ln, r)) = &ranks {
        let got: Vec<usize> = degrees.iter().map(Vec::len).collect();
        if *r != got {
            return err(*ln, format!("ranks {r:?} do not match the degree lists {got:?}"));
        }
    }
    let f = CurveFixture {
        kind,
        degrees,
        support,
        c,
        smooth,
    };
    f.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(f)
}

pub fn load(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::examples::{assemble_example, ExampleParams, SupportEntry};
    use crate::random;
    use crate::stability::{random_fixture, Rational};

    fn twisted_state() -> LatticePairState {
        let p = ExampleParams {
            kind: ExampleKind::TwistedTriple,
            n: 8,
            degrees: vec![vec![1, 0], vec![0], vec![0]],
            c: vec![0.3, -0.2, 0.0],
            support: vec![SupportEntry {
                component: vec![0, 0, 0],
                section: 0,
                coeff: 1.0,
            }],
            amplitude: 0.7,
            smooth: false,
        };
        assemble_example(&p).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mut st = twisted_state();
        let mut rng = random::rng(4);
        let sites = st.lattice().sites();
        let gamma: Vec<CMat> = (0..sites)
            .map(|_| {
                random::complex_element(&mut rng, &ProductGroupSpec::new(vec![2]).unwrap(), 0.3).blocks()[0].clone()
            })
            .collect();
        let inv: Vec<CMat> = gamma.iter().map(|g| g.clone().try_inverse().unwrap()).collect();
        st.apply_gauge(&[Some((gamma, inv)), None, None]).unwrap();
        st.add_note("gauged");
        let text = write_snapshot(&st);
        assert!(text.starts_with("GPWB1 snapshot\n"));
        let back = read_snapshot(&text).unwrap();
        assert_eq!(write_snapshot(&back), text);
        for i in 0..3 {
            assert_eq!(back.factor(i), st.factor(i));
        }
        assert_eq!(back.section(), st.section());
        assert_eq!(back.notes(), st.notes());
        assert_eq!(back.construction_tol(), st.construction_tol());
        assert_eq!(back.setting(), st.setting());
        assert_eq!(back.rep(), st.rep());
    }

    #[test]
    fn snapshot_errors_carry_line_numbers() {
        let text = write_snapshot(&twisted_state());
        let broken = text.replacen("holomorphic = true", "holomorphic = maybe", 1);
        let e = read_snapshot(&broken).unwrap_err().to_string();
        assert!(e.contains("line "), "{e}");
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(read_snapshot(&truncated).is_err());
        let bad_header = text.replacen("GPWB1", "GPWB0", 1);
        assert!(read_snapshot(&bad_header).unwrap_err().to_string().contains("line 1"));
        let tampered = text.replacen("degree=", "degree=1", 1);
        assert!(read_snapshot(&tampered).is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let mut rng = random::rng(8);
        for kind in ExampleKind::ALL {
            for _ in 0..20 {
                let f = random_fixture(kind, &mut rng);
                let text = write_fixture(&f);
                assert_eq!(read_fixture(&text).unwrap(), f, "{text}");
            }
        }
    }

    #[test]
    fn hand_written_fixture() {
        let text = "GPWB1 fixture\n# split bundle\nkind = pair_tensor\nranks = 2 1\ndegrees = 0: 2 0\ndegrees = 1: 0\nc = 1 0\nsupport = 1,0\n";
        let f = read_fixture(text).unwrap();
        assert_eq!(f.degrees, vec![vec![2, 0], vec![0]]);
        assert_eq!(f.c[0], Rational::from_integer(1));
        assert_eq!(f.support, vec![FixtureEntry::at(&[1, 0])]);
        let bad = text.replace("ranks = 2 1", "ranks = 3 1");
        assert!(read_fixture(&bad).unwrap_err().to_string().contains("line 4"));
        let unknown = format!("{text}colour = red\n");
        assert!(read_fixture(&unknown).unwrap_err().to_string().contains("line 9"));
    }
}
