//! Finitely generated groups of isometries, their representations, orbits
//! and cusp subgroups.
//!
//! Words are integer sequences: `i > 0` stands for generator `i - 1`, and
//! `-i` for its inverse.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::hypgeo::{
    classify_isometry, common_fixed_set, dist, BoundaryPoint, FixedSet, FixedSetKind, Isometry,
    IsometryKind, Matrix, Point,
};

pub type Word = Vec<i32>;

/// Default cap on the number of orbit entries.
pub const DEFAULT_ORBIT_CAP: usize = 1_000_000;
/// Two group elements are identified when both orbit points are this close.
pub const DEDUP_TOL: f64 = 1e-8;
/// Relators must evaluate to the identity within this (Frobenius) residual.
pub const RELATOR_TOL: f64 = 1e-9;

/// A peripheral subgroup, given by words in the domain generators.
#[derive(Clone, Debug)]
pub struct CuspData {
    pub parabolic_gens: Vec<Word>,
    /// Filled in by [`cusp_fixed_point`]; `None` until computed.
    pub fixed_point: Option<BoundaryPoint>,
}

impl CuspData {
    pub fn new(parabolic_gens: Vec<Word>) -> Self {
        CuspData {
            parabolic_gens,
            fixed_point: None,
        }
    }
}

/// A group acting on `H^k` by `domain_gens` and a representation of it into
/// `Isom(H^n)` given on generators.
#[derive(Clone, Debug)]
pub struct RepresentationData {
    pub k: usize,
    pub n: usize,
    pub domain_gens: Vec<Isometry>,
    pub target_images: Vec<Isometry>,
    pub relators: Vec<Word>,
    pub cusps: Vec<CuspData>,
}

impl RepresentationData {
    pub fn new(
        k: usize,
        n: usize,
        domain_gens: Vec<Isometry>,
        target_images: Vec<Isometry>,
        relators: Vec<Word>,
        cusps: Vec<CuspData>,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidRepresentation(format!(
                "domain dimension {k} < 2"
            )));
        }
        if n < k {
            return Err(Error::SubspaceTooLarge { k, n });
        }
        if domain_gens.len() != target_images.len() {
            return Err(Error::InvalidRepresentation(format!(
                "{} domain generators but {} target images",
                domain_gens.len(),
                target_images.len()
            )));
        }
        for g in &domain_gens {
            if g.dim() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: g.dim(),
                });
            }
        }
        for g in &target_images {
            if g.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.dim(),
                });
            }
        }
        let data = RepresentationData {
            k,
            n,
            domain_gens,
            target_images,
            relators,
            cusps,
        };
        for w in data
            .relators
            .iter()
            .chain(data.cusps.iter().flat_map(|c| &c.parabolic_gens))
        {
            data.check_word(w)?;
        }
        Ok(data)
    }

    pub fn rank(&self) -> usize {
        self.domain_gens.len()
    }

    fn check_word(&self, word: &[i32]) -> Result<()> {
        for &letter in word {
            if letter == 0 || letter.unsigned_abs() as usize > self.rank() {
                return Err(Error::InvalidRepresentation(format!(
                    "letter {letter} outside 1..={}",
                    self.rank()
                )));
            }
        }
        Ok(())
    }

    pub fn eval_domain(&self, word: &[i32]) -> Result<Isometry> {
        self.check_word(word)?;
        Ok(eval_word(&self.domain_gens, word, self.k))
    }

    pub fn eval_target(&self, word: &[i32]) -> Result<Isometry> {
        self.check_word(word)?;
        Ok(eval_word(&self.target_images, word, self.n))
    }
}

/// Product of generators along a word (left to right), in `Isom(H^m)`.
pub fn eval_word(gens: &[Isometry], word: &[i32], m: usize) -> Isometry {
    let inverses: Vec<Isometry> = gens.iter().map(Isometry::inverse).collect();
    let mut acc = Isometry::identity(m);
    for &letter in word {
        let i = letter.unsigned_abs() as usize - 1;
        let g = if letter > 0 { &gens[i] } else { &inverses[i] };
        acc = acc.compose(g);
    }
    acc
}

/// Frobenius distance of `g` from the identity.
fn identity_residual(g: &Isometry) -> f64 {
    g.frobenius_distance(&Isometry::identity(g.dim()))
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub domain_residual: f64,
    pub target_residual: f64,
    /// The larger of the two residuals.
    pub residual: f64,
    pub passes: bool,
    /// Types of each generator and of its image.
    pub generator_types: Vec<(IsometryKind, IsometryKind)>,
}

/// Checks that every relator holds in both the domain group and the image.
pub fn validate_representation(data: &RepresentationData) -> Result<ValidationReport> {
    if data.domain_gens.len() != data.target_images.len() {
        return Err(Error::InvalidRepresentation(
            "mismatched generator counts".into(),
        ));
    }
    let mut domain_residual: f64 = 0.0;
    let mut target_residual: f64 = 0.0;
    for r in &data.relators {
        domain_residual = domain_residual.max(identity_residual(&data.eval_domain(r)?));
        target_residual = target_residual.max(identity_residual(&data.eval_target(r)?));
    }
    let generator_types = data
        .domain_gens
        .iter()
        .zip(&data.target_images)
        .map(|(a, b)| (classify_isometry(a).kind, classify_isometry(b).kind))
        .collect();
    let residual = domain_residual.max(target_residual);
    Ok(ValidationReport {
        domain_residual,
        target_residual,
        residual,
        passes: residual <= RELATOR_TOL,
        generator_types,
    })
}

#[derive(Clone, Debug)]
pub struct OrbitEntry {
    pub word: Word,
    /// `gamma O` in `H^k`.
    pub domain_point: Point,
    /// `rho(gamma) O'` in `H^n`.
    pub target_point: Point,
    /// `d(O, gamma O)`.
    pub length: f64,
}

/// A deduplicated finite piece of the orbit of `O` (and of `O'` under the
/// representation), sorted by displacement.
#[derive(Clone, Debug)]
pub struct WeightedOrbit {
    pub entries: Vec<OrbitEntry>,
    pub base: Point,
    pub target_base: Point,
    /// Maximal word length used.
    pub cutoff: usize,
}

impl WeightedOrbit {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries whose domain point lies within distance `radius` of `O`.
    pub fn within_radius(&self, radius: f64) -> WeightedOrbit {
        WeightedOrbit {
            entries: self
                .entries
                .iter()
                .filter(|e| e.length <= radius)
                .cloned()
                .collect(),
            base: self.base.clone(),
            target_base: self.target_base.clone(),
            cutoff: self.cutoff,
        }
    }

    /// The orbit moved by `(g, rho(g))`: entries `g gamma O`, `rho(g) rho(gamma) O'`.
    /// Lengths are still measured from the original `O`.
    pub fn translate(&self, g: &Isometry, rho_g: &Isometry) -> WeightedOrbit {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let domain_point = g.apply(&e.domain_point);
                OrbitEntry {
                    word: e.word.clone(),
                    length: dist(&self.base, &domain_point),
                    domain_point,
                    target_point: rho_g.apply(&e.target_point),
                }
            })
            .collect();
        WeightedOrbit {
            entries,
            base: self.base.clone(),
            target_base: self.target_base.clone(),
            cutoff: self.cutoff,
        }
    }
}

/// Spatial index of orbit points keyed on the time coordinate of the
/// domain point (`cosh d(O, .)`), for proximity queries.
struct DedupIndex {
    map: BTreeMap<u64, Vec<usize>>,
}

impl DedupIndex {
    fn new() -> Self {
        DedupIndex {
            map: BTreeMap::new(),
        }
    }

    fn key(t: f64) -> u64 {
        // positive floats order like their bit patterns
        t.max(0.0).to_bits()
    }

    fn find(&self, domain: &Point, target: &Point, entries: &[(Point, Point)]) -> Option<usize> {
        let t = domain.coords()[0];
        // |dt| <= sinh(d) * |dx| for nearby points; pad generously
        let pad = 4.0 * DEDUP_TOL * t + 1e-12;
        let range = Self::key(t - pad)..=Self::key(t + pad);
        for (_, ids) in self.map.range(range) {
            for &i in ids {
                let (d, tg) = &entries[i];
                if dist(d, domain) < DEDUP_TOL && dist(tg, target) < DEDUP_TOL {
                    return Some(i);
                }
            }
        }
        None
    }

    fn insert(&mut self, domain: &Point, id: usize) {
        self.map
            .entry(Self::key(domain.coords()[0]))
            .or_default()
            .push(id);
    }
}

/// Generator letters in the order `1, -1, 2, -2, ...`.
fn letters(rank: usize) -> Vec<i32> {
    (1..=rank as i32).flat_map(|i| [i, -i]).collect()
}

struct Element {
    word: Word,
    domain: Isometry,
    target: Isometry,
}

/// Collects orbit entries, rejecting elements that coincide with an earlier
/// one in both orbits.
struct OrbitBuilder {
    points: Vec<(Point, Point)>,
    words: Vec<Word>,
    index: DedupIndex,
    cap: usize,
    base: Point,
    target_base: Point,
}

impl OrbitBuilder {
    fn new(k: usize, n: usize, cap: usize) -> Self {
        OrbitBuilder {
            points: Vec::new(),
            words: Vec::new(),
            index: DedupIndex::new(),
            cap,
            base: Point::origin(k),
            target_base: Point::origin(n),
        }
    }

    /// Returns true when the element was new.
    fn offer(&mut self, e: &Element) -> Result<bool> {
        let domain = e.domain.apply(&self.base);
        let target = e.target.apply(&self.target_base);
        if self.index.find(&domain, &target, &self.points).is_some() {
            return Ok(false);
        }
        if self.points.len() >= self.cap {
            return Err(Error::OrbitTooLarge { cap: self.cap });
        }
        self.index.insert(&domain, self.points.len());
        self.points.push((domain, target));
        self.words.push(e.word.clone());
        Ok(true)
    }

    fn finish(self, cutoff: usize) -> WeightedOrbit {
        let base = self.base;
        let mut entries: Vec<OrbitEntry> = self
            .points
            .into_iter()
            .zip(self.words)
            .map(|((domain_point, target_point), word)| OrbitEntry {
                length: dist(&base, &domain_point),
                word,
                domain_point,
                target_point,
            })
            .collect();
        entries.sort_by(|a, b| a.length.total_cmp(&b.length));
        WeightedOrbit {
            entries,
            base,
            target_base: self.target_base,
            cutoff,
        }
    }
}

/// All group elements represented by freely reduced words of length at
/// most `max_len`, as pairs `(gamma O, rho(gamma) O')`.
pub fn enumerate_orbit(data: &RepresentationData, max_len: usize) -> Result<WeightedOrbit> {
    enumerate_orbit_with_cap(data, max_len, DEFAULT_ORBIT_CAP)
}

pub fn enumerate_orbit_with_cap(
    data: &RepresentationData,
    max_len: usize,
    cap: usize,
) -> Result<WeightedOrbit> {
    let mut builder = OrbitBuilder::new(data.k, data.n, cap);
    word_ball(data, max_len, &mut builder)?;
    Ok(builder.finish(max_len))
}

/// Breadth-first enumeration of the word ball. Only elements that were new
/// when first reached are extended; this still reaches every element of
/// word length `<= max_len`, since prefixes of shortest words are shortest.
fn word_ball(
    data: &RepresentationData,
    max_len: usize,
    builder: &mut OrbitBuilder,
) -> Result<Vec<Element>> {
    let gens_dom: Vec<(i32, Isometry)> = letters(data.rank())
        .into_iter()
        .map(|l| (l, data.eval_domain(&[l]).expect("valid letter")))
        .collect();
    let gens_tgt: Vec<Isometry> = gens_dom
        .iter()
        .map(|(l, _)| data.eval_target(&[*l]).expect("valid letter"))
        .collect();

    let identity = Element {
        word: Vec::new(),
        domain: Isometry::identity(data.k),
        target: Isometry::identity(data.n),
    };
    builder.offer(&identity)?;
    let mut all = Vec::new();
    let mut frontier = VecDeque::from([identity]);
    for _ in 0..max_len {
        let mut next = VecDeque::new();
        while let Some(e) = frontier.pop_front() {
            for ((letter, gd), gt) in gens_dom.iter().zip(&gens_tgt) {
                if e.word.last() == Some(&-letter) {
                    continue;
                }
                let mut word = e.word.clone();
                word.push(*letter);
                let child = Element {
                    word,
                    domain: e.domain.compose(gd),
                    target: e.target.compose(gt),
                };
                if builder.offer(&child)? {
                    next.push_back(child);
                }
            }
            all.push(e);
        }
        frontier = next;
    }
    all.extend(frontier);
    Ok(all)
}

/// An orbit adapted to a cusp: products `c w` where `c` runs over the
/// patch `p^i q^j` (`|i| <= patch.0`, `|j| <= patch.1`) of the rank-two
/// cusp subgroup generated by words `p, q`, and `w` over the word ball of
/// radius `max_len`.
///
/// Along a ray into the cusp the Poincaré weights concentrate on these
/// elements, which a plain word ball of any feasible radius misses.
pub fn enumerate_cusp_orbit(
    data: &RepresentationData,
    cusp: &CuspData,
    patch: (usize, usize),
    max_len: usize,
) -> Result<WeightedOrbit> {
    if cusp.parabolic_gens.len() != 2 {
        return Err(Error::BadCusp(format!(
            "expected two peripheral generators, found {}",
            cusp.parabolic_gens.len()
        )));
    }
    let mut scratch = OrbitBuilder::new(data.k, data.n, DEFAULT_ORBIT_CAP);
    let ball = word_ball(data, max_len, &mut scratch)?;

    let p = (
        data.eval_domain(&cusp.parabolic_gens[0])?,
        data.eval_target(&cusp.parabolic_gens[0])?,
    );
    let q = (
        data.eval_domain(&cusp.parabolic_gens[1])?,
        data.eval_target(&cusp.parabolic_gens[1])?,
    );
    let power = |g: &(Isometry, Isometry), e: i64, word: &[i32]| -> (Isometry, Isometry, Word) {
        let mut w = Vec::new();
        for _ in 0..e.unsigned_abs() {
            if e >= 0 {
                w.extend_from_slice(word);
            } else {
                w.extend(word.iter().rev().map(|l| -l));
            }
        }
        (isometry_power(&g.0, e), isometry_power(&g.1, e), w)
    };

    let mut builder = OrbitBuilder::new(data.k, data.n, DEFAULT_ORBIT_CAP);
    let (pi, qi) = (patch.0 as i64, patch.1 as i64);
    let mut lattice = Vec::new();
    for i in -pi..=pi {
        let (pd, pt, pw) = power(&p, i, &cusp.parabolic_gens[0]);
        for j in -qi..=qi {
            let (qd, qt, qw) = power(&q, j, &cusp.parabolic_gens[1]);
            let mut word = pw.clone();
            word.extend_from_slice(&qw);
            lattice.push((
                i.abs() + j.abs(),
                Element {
                    word,
                    domain: pd.compose(&qd),
                    target: pt.compose(&qt),
                },
            ));
        }
    }
    // offer the lattice in order of size so that short words win ties
    lattice.sort_by_key(|(size, _)| *size);
    for (_, c) in &lattice {
        for w in &ball {
            let mut word = c.word.clone();
            word.extend_from_slice(&w.word);
            let e = Element {
                word,
                domain: c.domain.compose(&w.domain),
                target: c.target.compose(&w.target),
            };
            builder.offer(&e)?;
        }
    }
    Ok(builder.finish(max_len))
}

/// `g^e`. Unipotent `g = I + N` (pure parabolics, `N^3 = 0`) use the
/// binomial formula, which keeps long powers free of accumulated rounding;
/// other elements use repeated squaring.
pub fn isometry_power(g: &Isometry, e: i64) -> Isometry {
    let m = g.dim();
    let size = m + 1;
    let nil = g.matrix() - Matrix::identity(size, size);
    let nil2 = &nil * &nil;
    let scale = g.matrix().amax().max(1.0);
    if (&nil2 * &nil).amax() <= 1e-12 * scale * scale * scale {
        let e = e as f64;
        let mat = Matrix::identity(size, size) + &nil * e + &nil2 * (0.5 * e * (e - 1.0));
        return Isometry::from_matrix_unchecked(mat);
    }
    let mut base = if e >= 0 { g.clone() } else { g.inverse() };
    let mut acc = Isometry::identity(m);
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.compose(&base);
        }
        base = base.compose(&base);
        k >>= 1;
    }
    acc
}

/// Truncated Poincaré series `sum exp(-s d(x, gamma O))` and a heuristic
/// tail estimate from the ratio of the two outermost word-length shells.
pub fn poincare_series(orbit: &WeightedOrbit, s: f64, x: &Point) -> Result<(f64, f64)> {
    if orbit.is_empty() {
        return Err(Error::EmptyOrbit);
    }
    let mut shells: BTreeMap<usize, f64> = BTreeMap::new();
    for e in &orbit.entries {
        *shells.entry(e.word.len()).or_default() += (-s * dist(x, &e.domain_point)).exp();
    }
    let value: f64 = shells.values().sum();
    Ok((value, shell_tail(&shells)))
}

/// `M_L r / (1 - r)` with `r = M_L / M_{L-1}`, or infinity when the shells
/// do not shrink.
pub(crate) fn shell_tail(shells: &BTreeMap<usize, f64>) -> f64 {
    let mut it = shells.values().rev();
    match (it.next(), it.next()) {
        (Some(&last), Some(&prev)) if shells.len() >= 2 => {
            let r = last / prev;
            if r < 1.0 {
                last * r / (1.0 - r)
            } else {
                f64::INFINITY
            }
        }
        _ => 0.0,
    }
}

/// Mass of the outermost shell relative to the whole truncated series.
pub fn last_shell_fraction(orbit: &WeightedOrbit, s: f64, x: &Point) -> Result<f64> {
    if orbit.is_empty() {
        return Err(Error::EmptyOrbit);
    }
    let top = orbit
        .entries
        .iter()
        .map(|e| e.word.len())
        .max()
        .unwrap_or(0);
    let (mut total, mut last) = (0.0, 0.0);
    for e in &orbit.entries {
        let w = (-s * dist(x, &e.domain_point)).exp();
        total += w;
        if e.word.len() == top {
            last += w;
        }
    }
    Ok(if top == 0 { 0.0 } else { last / total })
}

/// The fixed point of a cusp subgroup in `dH^k` and the fixed set of its image.
pub fn cusp_fixed_point(
    data: &RepresentationData,
    cusp: &CuspData,
) -> Result<(BoundaryPoint, FixedSet)> {
    if cusp.parabolic_gens.is_empty() {
        return Err(Error::BadCusp("no generators".into()));
    }
    let domain: Vec<Isometry> = cusp
        .parabolic_gens
        .iter()
        .map(|w| data.eval_domain(w))
        .collect::<Result<_>>()?;
    for (i, g) in domain.iter().enumerate() {
        let kind = classify_isometry(g).kind;
        if kind != IsometryKind::Parabolic {
            return Err(Error::BadCusp(format!("generator {i} is {kind}")));
        }
    }
    let fixed = common_fixed_set(&domain).map_err(|e| match e {
        Error::NotAbelian { .. } => Error::BadCusp(e.to_string()),
        other => other,
    })?;
    if fixed.description != FixedSetKind::Ideal || fixed.boundary_points.len() != 1 {
        return Err(Error::BadCusp(format!(
            "domain fixed set is {:?} with {} ideal points",
            fixed.description,
            fixed.boundary_points.len()
        )));
    }
    let xi = fixed.boundary_points[0].clone();
    let target: Vec<Isometry> = cusp
        .parabolic_gens
        .iter()
        .map(|w| data.eval_target(w))
        .collect::<Result<_>>()?;
    let target_fix = common_fixed_set(&target)?;
    Ok((xi, target_fix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgeo::{upper_half_space_ideal, Isometry};

    fn z2_data() -> RepresentationData {
        // two commuting parabolics fixing the same ideal point
        let one = num_complex::Complex64::new(1.0, 0.0);
        let zero = num_complex::Complex64::new(0.0, 0.0);
        let a = crate::hypgeo::sl2c_to_lorentz(&[[one, one], [zero, one]]).unwrap();
        let b = crate::hypgeo::sl2c_to_lorentz(&[
            [one, num_complex::Complex64::new(0.0, 1.0)],
            [zero, one],
        ])
        .unwrap();
        RepresentationData::new(
            3,
            3,
            vec![a.clone(), b.clone()],
            vec![a, b],
            vec![vec![1, 2, -1, -2]],
            vec![CuspData::new(vec![vec![1], vec![2]])],
        )
        .unwrap()
    }

    #[test]
    fn trivial_group_orbit() {
        let data = RepresentationData::new(3, 3, vec![], vec![], vec![], vec![]).unwrap();
        let orbit = enumerate_orbit(&data, 5).unwrap();
        assert_eq!(orbit.len(), 1);
        assert!(orbit.entries[0].word.is_empty());
        let (value, tail) = poincare_series(&orbit, 2.2, &Point::origin(3)).unwrap();
        assert_eq!((value, tail), (1.0, 0.0));
    }

    #[test]
    fn free_group_first_shell() {
        let a = Isometry::translation(3, 1, 2.0);
        let b = Isometry::translation(3, 2, 2.0);
        let data =
            RepresentationData::new(3, 3, vec![a.clone(), b.clone()], vec![a, b], vec![], vec![])
                .unwrap();
        assert_eq!(enumerate_orbit(&data, 1).unwrap().len(), 5);
        // 1 + 4 + 12 reduced words (a Schottky-like pair stays free at this scale)
        assert_eq!(enumerate_orbit(&data, 2).unwrap().len(), 17);
    }

    #[test]
    fn z2_dedup_against_brute_force() {
        let data = z2_data();
        let orbit = enumerate_orbit(&data, 2).unwrap();
        // lattice points with |i| + |j| <= 2
        assert_eq!(orbit.len(), 13);
        // brute force over all reduced words, pairwise dedup
        let mut pts: Vec<(Point, Point)> = Vec::new();
        let letters = [1, -1, 2, -2];
        let mut words: Vec<Vec<i32>> = vec![vec![]];
        for len in 1..=4 {
            let prev: Vec<Vec<i32>> = words
                .iter()
                .filter(|w| w.len() == len - 1)
                .cloned()
                .collect();
            for w in prev {
                for l in letters {
                    if w.last() != Some(&-l) {
                        let mut v = w.clone();
                        v.push(l);
                        words.push(v);
                    }
                }
            }
        }
        for w in words.iter().filter(|w| w.len() <= 2) {
            let p = data.eval_domain(w).unwrap().apply(&Point::origin(3));
            let q = data.eval_target(w).unwrap().apply(&Point::origin(3));
            if !pts
                .iter()
                .any(|(a, b)| dist(a, &p) < DEDUP_TOL && dist(b, &q) < DEDUP_TOL)
            {
                pts.push((p, q));
            }
        }
        assert_eq!(pts.len(), orbit.len());
        // the commutator is the identity
        let c = data.eval_domain(&[1, 2, -1, -2]).unwrap();
        assert!(c.distance_from_identity() < 1e-12);
    }

    #[test]
    fn orbit_sorted_and_deterministic() {
        let data = z2_data();
        let a = enumerate_orbit(&data, 4).unwrap();
        let b = enumerate_orbit(&data, 4).unwrap();
        assert!(a.entries.windows(2).all(|w| w[0].length <= w[1].length));
        let wa: Vec<_> = a.entries.iter().map(|e| e.word.clone()).collect();
        let wb: Vec<_> = b.entries.iter().map(|e| e.word.clone()).collect();
        assert_eq!(wa, wb);
    }

    #[test]
    fn orbit_cap_is_enforced() {
        let data = z2_data();
        assert!(matches!(
            enumerate_orbit_with_cap(&data, 6, 10),
            Err(Error::OrbitTooLarge { cap: 10 })
        ));
    }

    #[test]
    fn poincare_series_monotonicity() {
        let data = z2_data();
        let x = Point::from_polar(0.3, &[1.0, 0.5, -0.2]).unwrap();
        let orbit = enumerate_orbit(&data, 5).unwrap();
        let mut prev = f64::INFINITY;
        for s in [2.0, 2.5, 3.0, 4.0] {
            let (v, _) = poincare_series(&orbit, s, &x).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = 0.0;
        for l in 0..=5 {
            let (v, _) = poincare_series(&enumerate_orbit(&data, l).unwrap(), 2.2, &x).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn validation_detects_perturbation() {
        let data = z2_data();
        let report = validate_representation(&data).unwrap();
        assert!(report.passes);
        assert!(report.residual < 1e-12);
        let mut m = data.target_images[0].matrix().clone();
        m[(1, 2)] += 1e-3;
        let mut bad = data.clone();
        bad.target_images[0] = Isometry::from_matrix_unchecked(m);
        let report = validate_representation(&bad).unwrap();
        assert!(!report.passes);
        assert!(report.residual > 1e-9);
    }

    #[test]
    fn trivial_representation_validates() {
        let mut data = z2_data();
        data.target_images = vec![Isometry::identity(3); 2];
        let report = validate_representation(&data).unwrap();
        assert_eq!(report.target_residual, 0.0);
    }

    #[test]
    fn cusp_of_parabolic_lattice() {
        let data = z2_data();
        let (xi, target_fix) = cusp_fixed_point(&data, &data.cusps[0]).unwrap();
        assert!(xi.chordal_distance(&upper_half_space_ideal(None)) < 1e-12);
        assert_eq!(target_fix.description, FixedSetKind::Ideal);

        let mut trivial = data.clone();
        trivial.target_images = vec![Isometry::identity(3); 2];
        let (_, fix) = cusp_fixed_point(&trivial, &trivial.cusps[0]).unwrap();
        assert_eq!(fix.description, FixedSetKind::Pointwise);

        let mut axial = data.clone();
        axial.target_images = vec![
            Isometry::translation(3, 1, 0.7),
            Isometry::translation(3, 1, 1.9),
        ];
        let (_, fix) = cusp_fixed_point(&axial, &axial.cusps[0]).unwrap();
        assert_eq!(fix.invariant_geodesics.len(), 1);
    }

    #[test]
    fn cusp_rejects_hyperbolic_generator() {
        let mut data = z2_data();
        data.domain_gens[1] = Isometry::translation(3, 3, 1.0);
        data.cusps = vec![CuspData::new(vec![vec![2]])];
        assert!(matches!(
            cusp_fixed_point(&data, &data.cusps[0]),
            Err(Error::BadCusp(_))
        ));
    }

    #[test]
    fn cusp_orbit_covers_lattice_patch() {
        let data = z2_data();
        let orbit = enumerate_cusp_orbit(&data, &data.cusps[0], (3, 2), 0).unwrap();
        assert_eq!(orbit.len(), 7 * 5);
        let orbit = enumerate_cusp_orbit(&data, &data.cusps[0], (3, 2), 1).unwrap();
        // the ball adds one layer around the rectangle
        assert_eq!(orbit.len(), 9 * 7 - 4);
    }
}
