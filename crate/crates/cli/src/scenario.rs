//! Scenario files: a JSON object tree describing a group, its
//! representation, an optional fundamental domain and natural-map defaults.
//!
//! Real numbers inside matrices and vertices are decimal strings, parsed
//! with `f64::from_str`; complex entries are `[re, im]` pairs. The schema is
//! documented in `scenarios/README.md`.

use std::path::Path;

use natmap_core::groups::{validate_representation, ValidationReport};
use natmap_core::hypgeo::{
    include_isometry, sl2c_to_lorentz, upper_half_space_ideal, Isometry, Matrix,
};
use natmap_core::volume::{FacePairing, FundamentalDomain};
use natmap_core::{
    BoundaryPoint, CuspData, DevelopingMapSpec, Endpoint, NaturalMapConfig, Point,
    RepresentationData, Word,
};
use num_complex::Complex64;
use serde::Deserialize;

use crate::CliError;

const BUNDLED: &[(&str, &str)] = &[
    (
        "figure-eight",
        include_str!("../scenarios/figure_eight.json"),
    ),
    (
        "figure-eight-trivial",
        include_str!("../scenarios/figure_eight_trivial.json"),
    ),
    (
        "figure-eight-h4",
        include_str!("../scenarios/figure_eight_h4.json"),
    ),
    ("z2-cusp", include_str!("../scenarios/z2_cusp.json")),
];

/// Prefix selecting a bundled scenario instead of a file path.
pub const BUNDLED_PREFIX: &str = "bundled:";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: String,
    k: usize,
    n: usize,
    domain_group: GroupFile,
    #[serde(default)]
    relators: Vec<Word>,
    #[serde(default)]
    cusps: Vec<CuspFile>,
    natmap: NatmapDefaults,
    seed: u64,
    target: TargetFile,
    #[serde(default)]
    domain: Option<DomainFile>,
    #[serde(default)]
    expected_invalid: bool,
}

#[derive(Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum MatrixKind {
    Sl2c,
    Lorentz,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    matrix_kind: MatrixKind,
    generators: Vec<Vec<Vec<Entry>>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(String),
    Complex([String; 2]),
}

#[derive(Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// `ρ = id`, requires `n = k`.
    Identity,
    /// Every generator maps to the identity of `Isom(H^n)`.
    Trivial,
    /// The standard inclusion `Isom(H^k) → Isom(H^n)`.
    Include,
    /// Images given explicitly.
    Explicit,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    mode: TargetMode,
    #[serde(default)]
    generators: Option<GroupFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CuspFile {
    generators: Vec<Word>,
    #[serde(default)]
    patch: Option<[usize; 2]>,
    #[serde(default)]
    ball: usize,
}

/// Defaults for the natural-map and volume commands.
#[derive(Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NatmapDefaults {
    pub epsilon: f64,
    /// Orbit truncation `L` for evaluations and Jacobians.
    pub word_length: usize,
    /// Orbit truncation used inside `vol-natmap`.
    pub volume_word_length: usize,
    /// Horoball cut for sampling and `vol-natmap`.
    pub truncation: f64,
    pub samples: usize,
    pub quad_orders: Vec<usize>,
    pub fd_step: f64,
    pub sweep_epsilons: Vec<f64>,
    pub ray_times: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    vertices: Vec<VertexFile>,
    simplices: Vec<Vec<usize>>,
    #[serde(default)]
    pairings: Vec<PairingFile>,
    truncation: f64,
    developing_map: DevelopingFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexFile {
    /// Ideal point of upper half-space: `"inf"` or `[re, im]`.
    #[serde(default)]
    uhs_ideal: Option<UhsIdeal>,
    /// Ideal point given by a direction in the ball model.
    #[serde(default)]
    ball_ideal: Option<Vec<String>>,
    /// Interior point in hyperboloid coordinates.
    #[serde(default)]
    hyperboloid: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum UhsIdeal {
    Named(String),
    Finite([String; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairingFile {
    simplex: usize,
    /// Vertex id omitted by the face.
    opposite: usize,
    target_simplex: usize,
    target_opposite: usize,
    word: Word,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DevelopingFile {
    kind: DevelopingKind,
}

#[derive(Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DevelopingKind {
    /// Vertices map to themselves, embedded in `H^n`.
    Identity,
    /// Every vertex maps to `O'`.
    Collapse,
}

/// Orbit used along the ray into a cusp: a `patch` of the rank-two cusp
/// lattice times the word ball of radius `ball`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CuspOrbitSpec {
    pub patch: (usize, usize),
    pub ball: usize,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// File path or `bundled:<name>`.
    pub source: String,
    pub representation: RepresentationData,
    pub target_mode: TargetMode,
    pub domain: Option<FundamentalDomain>,
    pub developing: Option<DevelopingKind>,
    /// One entry per cusp; `None` when the cusp has no patch.
    pub cusp_orbits: Vec<Option<CuspOrbitSpec>>,
    pub natmap: NatmapDefaults,
    pub seed: u64,
    pub expected_invalid: bool,
    pub validation: ValidationReport,
}

impl Scenario {
    pub fn k(&self) -> usize {
        self.representation.k
    }

    pub fn n(&self) -> usize {
        self.representation.n
    }

    /// The representation is (the inclusion of) the domain group itself.
    pub fn is_fuchsian(&self) -> bool {
        matches!(self.target_mode, TargetMode::Identity | TargetMode::Include)
    }

    pub fn natmap_config(
        &self,
        epsilon: f64,
        word_length: usize,
    ) -> Result<NaturalMapConfig, CliError> {
        let mut cfg = NaturalMapConfig::new(self.k(), self.n(), epsilon, word_length)?;
        cfg.fd_step = self.natmap.fd_step;
        Ok(cfg)
    }

    /// The developing map described by the scenario, if it has a domain.
    pub fn developing_spec(&self) -> Result<Option<DevelopingMapSpec>, CliError> {
        let (Some(domain), Some(kind)) = (&self.domain, self.developing) else {
            return Ok(None);
        };
        let spec = match kind {
            DevelopingKind::Identity => DevelopingMapSpec::identity(domain.clone(), self.n())?,
            DevelopingKind::Collapse => {
                DevelopingMapSpec::collapse(domain.clone(), Point::origin(self.n()))?
            }
        };
        Ok(Some(spec))
    }
}

/// Names of the scenarios compiled into the binary.
pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Every bundled scenario, loaded and validated.
pub fn bundled_scenarios() -> Result<Vec<Scenario>, CliError> {
    BUNDLED
        .iter()
        .map(|(name, text)| parse_scenario(text, &format!("{BUNDLED_PREFIX}{name}")))
        .collect()
}

/// Loads `bundled:<name>` or a file path.
pub fn load_scenario(path: &str) -> Result<Scenario, CliError> {
    if let Some(name) = path.strip_prefix(BUNDLED_PREFIX) {
        let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            CliError::Input(format!(
                "unknown bundled scenario '{name}' (available: {})",
                bundled_names().join(", ")
            ))
        })?;
        return parse_scenario(text, path);
    }
    let text = std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::Io {
        path: path.to_string(),
        source: e,
    })?;
    parse_scenario(&text, path)
}

/// Parses and validates scenario text; `source` labels diagnostics.
pub fn parse_scenario(text: &str, source: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Input(format!(
            "{source}:{}:{}: field '{}': {}",
            inner.line(),
            inner.column(),
            e.path(),
            inner
        ))
    })?;
    build(file, source)
}

fn field_err(source: &str, field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{source}: field '{field}': {msg}"))
}

fn real(s: &str, source: &str, field: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|e| {
        field_err(
            source,
            field,
            format!("'{s}' is not a decimal number ({e})"),
        )
    })?;
    if !v.is_finite() {
        return Err(field_err(source, field, format!("'{s}' is not finite")));
    }
    Ok(v)
}

fn complex(e: &Entry, source: &str, field: &str) -> Result<Complex64, CliError> {
    match e {
        Entry::Complex([re, im]) => Ok(Complex64::new(
            real(re, source, &format!("{field}[0]"))?,
            real(im, source, &format!("{field}[1]"))?,
        )),
        Entry::Real(s) => Ok(Complex64::new(real(s, source, field)?, 0.0)),
    }
}

fn generators(
    group: &GroupFile,
    dim: usize,
    source: &str,
    field: &str,
) -> Result<Vec<Isometry>, CliError> {
    let mut out = Vec::with_capacity(group.generators.len());
    for (g, rows) in group.generators.iter().enumerate() {
        let here = format!("{field}.generators[{g}]");
        let iso = match group.matrix_kind {
            MatrixKind::Sl2c => {
                if dim != 3 {
                    return Err(field_err(
                        source,
                        &here,
                        format!("sl2c matrices act on H^3, not H^{dim}"),
                    ));
                }
                if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                    return Err(field_err(source, &here, "expected a 2x2 matrix"));
                }
                let mut a = [[Complex64::new(0.0, 0.0); 2]; 2];
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        a[i][j] = complex(e, source, &format!("{here}[{i}][{j}]"))?;
                    }
                }
                sl2c_to_lorentz(&a).map_err(|e| field_err(source, &here, e))?
            }
            MatrixKind::Lorentz => {
                let m = dim + 1;
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(field_err(
                        source,
                        &here,
                        format!("expected a {m}x{m} matrix"),
                    ));
                }
                let mut mat = Matrix::zeros(m, m);
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        let f = format!("{here}[{i}][{j}]");
                        mat[(i, j)] = match e {
                            Entry::Real(s) => real(s, source, &f)?,
                            Entry::Complex(_) => {
                                return Err(field_err(source, &f, "lorentz entries are real"))
                            }
                        };
                    }
                }
                Isometry::new(mat).map_err(|e| field_err(source, &here, e))?
            }
        };
        out.push(iso);
    }
    Ok(out)
}

fn check_natmap(d: &NatmapDefaults, source: &str) -> Result<(), CliError> {
    let bad = |f: &str, m: &str| Err(field_err(source, &format!("natmap.{f}"), m));
    if !(d.epsilon > 0.0) || !d.epsilon.is_finite() {
        return bad("epsilon", "must be positive");
    }
    if !(d.truncation > 0.0) {
        return bad("truncation", "must be positive");
    }
    if d.samples == 0 {
        return bad("samples", "must be at least 1");
    }
    if d.quad_orders.is_empty()
        || d.quad_orders.contains(&0)
        || d.quad_orders.windows(2).any(|w| w[0] >= w[1])
    {
        return bad(
            "quad_orders",
            "must be a nonempty increasing list of positive orders",
        );
    }
    if !(d.fd_step > 0.0) {
        return bad("fd_step", "must be positive");
    }
    if d.sweep_epsilons.iter().any(|&e| !(e > 0.0))
        || d.sweep_epsilons.windows(2).any(|w| w[0] <= w[1])
    {
        return bad("sweep_epsilons", "must be positive and strictly decreasing");
    }
    if d.ray_times.windows(2).any(|w| w[0] >= w[1]) {
        return bad("ray_times", "must be strictly increasing");
    }
    Ok(())
}

fn vertex(v: &VertexFile, k: usize, source: &str, field: &str) -> Result<Endpoint, CliError> {
    let given = [
        v.uhs_ideal.is_some(),
        v.ball_ideal.is_some(),
        v.hyperboloid.is_some(),
    ];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(field_err(
            source,
            field,
            "give exactly one of uhs_ideal, ball_ideal, hyperboloid",
        ));
    }
    if let Some(u) = &v.uhs_ideal {
        if k != 3 {
            return Err(field_err(source, field, "uhs_ideal needs k = 3"));
        }
        let z = match u {
            UhsIdeal::Named(s) if s == "inf" => None,
            UhsIdeal::Named(s) => {
                return Err(field_err(
                    source,
                    field,
                    format!("'{s}' is neither \"inf\" nor [re, im]"),
                ))
            }
            UhsIdeal::Finite([re, im]) => Some(Complex64::new(
                real(re, source, &format!("{field}.uhs_ideal[0]"))?,
                real(im, source, &format!("{field}.uhs_ideal[1]"))?,
            )),
        };
        return Ok(Endpoint::Ideal(upper_half_space_ideal(z)));
    }
    let parse_all = |xs: &[String], name: &str| -> Result<Vec<f64>, CliError> {
        xs.iter()
            .enumerate()
            .map(|(i, s)| real(s, source, &format!("{field}.{name}[{i}]")))
            .collect()
    };
    if let Some(b) = &v.ball_ideal {
        let dir = parse_all(b, "ball_ideal")?;
        if dir.len() != k {
            return Err(field_err(
                source,
                field,
                format!("ball_ideal needs {k} entries"),
            ));
        }
        let p = BoundaryPoint::from_direction(&dir).map_err(|e| field_err(source, field, e))?;
        return Ok(Endpoint::Ideal(p));
    }
    let c = parse_all(
        v.hyperboloid.as_ref().expect("checked above"),
        "hyperboloid",
    )?;
    let p = Point::from_slice(&c).map_err(|e| field_err(source, field, e))?;
    if p.dim() != k {
        return Err(field_err(
            source,
            field,
            format!("point of H^{} in H^{k}", p.dim()),
        ));
    }
    Ok(Endpoint::Interior(p))
}

fn domain(
    d: &DomainFile,
    data: &RepresentationData,
    source: &str,
) -> Result<FundamentalDomain, CliError> {
    let k = data.k;
    let vertices = d
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| vertex(v, k, source, &format!("domain.vertices[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pairings = Vec::with_capacity(d.pairings.len());
    for (i, p) in d.pairings.iter().enumerate() {
        let field = format!("domain.pairings[{i}]");
        let slot = |s: usize, v: usize, what: &str| -> Result<usize, CliError> {
            d.simplices
                .get(s)
                .and_then(|simplex| simplex.iter().position(|&x| x == v))
                .ok_or_else(|| {
                    field_err(
                        source,
                        &field,
                        format!("{what}: vertex {v} is not in simplex {s}"),
                    )
                })
        };
        let isometry = data
            .eval_domain(&p.word)
            .map_err(|e| field_err(source, &format!("{field}.word"), e))?;
        pairings.push(FacePairing {
            simplex: p.simplex,
            face: slot(p.simplex, p.opposite, "opposite")?,
            target_simplex: p.target_simplex,
            target_face: slot(p.target_simplex, p.target_opposite, "target_opposite")?,
            isometry,
            word: Some(p.word.clone()),
        });
    }
    FundamentalDomain::new(k, vertices, d.simplices.clone(), pairings, d.truncation)
        .map_err(|e| field_err(source, "domain", e))
}

fn build(file: ScenarioFile, source: &str) -> Result<Scenario, CliError> {
    let (k, n) = (file.k, file.n);
    if k < 2 || n < k {
        return Err(field_err(
            source,
            "k",
            format!("need 2 <= k <= n, got k = {k}, n = {n}"),
        ));
    }
    check_natmap(&file.natmap, source)?;
    let domain_gens = generators(&file.domain_group, k, source, "domain_group")?;
    let target_images = match file.target.mode {
        TargetMode::Identity => {
            if n != k {
                return Err(field_err(
                    source,
                    "target.mode",
                    "identity needs n = k; use include",
                ));
            }
            domain_gens.clone()
        }
        TargetMode::Include => domain_gens
            .iter()
            .map(|g| include_isometry(g, n))
            .collect::<natmap_core::Result<Vec<_>>>()?,
        TargetMode::Trivial => vec![Isometry::identity(n); domain_gens.len()],
        TargetMode::Explicit => {
            let group = file.target.generators.as_ref().ok_or_else(|| {
                field_err(source, "target.generators", "required for mode explicit")
            })?;
            generators(group, n, source, "target")?
        }
    };
    if file.target.mode != TargetMode::Explicit && file.target.generators.is_some() {
        return Err(field_err(
            source,
            "target.generators",
            "only allowed for mode explicit",
        ));
    }
    let cusps = file
        .cusps
        .iter()
        .map(|c| CuspData::new(c.generators.clone()))
        .collect();
    let representation = RepresentationData::new(
        k,
        n,
        domain_gens,
        target_images,
        file.relators.clone(),
        cusps,
    )
    .map_err(|e| field_err(source, "relators", e))?;
    let validation = validate_representation(&representation)?;
    if !validation.passes && !file.expected_invalid {
        return Err(CliError::Input(format!(
            "{source}: relator residual {:e} exceeds tolerance; representation is invalid",
            validation.residual
        )));
    }
    let (domain, developing) = match &file.domain {
        Some(d) => (
            Some(domain(d, &representation, source)?),
            Some(d.developing_map.kind),
        ),
        None => (None, None),
    };
    let cusp_orbits = file
        .cusps
        .iter()
        .map(|c| {
            c.patch.map(|[p, q]| CuspOrbitSpec {
                patch: (p, q),
                ball: c.ball,
            })
        })
        .collect();
    Ok(Scenario {
        name: file.name,
        description: file.description,
        source: source.to_string(),
        representation,
        target_mode: file.target.mode,
        domain,
        developing,
        cusp_orbits,
        natmap: file.natmap,
        seed: file.seed,
        expected_invalid: file.expected_invalid,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_load() {
        let all = bundled_scenarios().unwrap();
        assert_eq!(all.len(), 4);
        for s in &all {
            assert!(
                s.validation.residual <= 1e-12,
                "{}: {}",
                s.name,
                s.validation.residual
            );
        }
    }

    #[test]
    fn unknown_field_reports_position() {
        let text = include_str!("../scenarios/z2_cusp.json").replacen("\"seed\"", "\"sead\"", 1);
        let err = parse_scenario(&text, "x.json").unwrap_err().to_string();
        assert!(err.contains("x.json:"), "{err}");
        assert!(err.contains("sead"), "{err}");
    }

    #[test]
    fn bad_decimal_names_field() {
        let text =
            include_str!("../scenarios/z2_cusp.json").replacen("\"0\", \"1\"", "\"0\", \"1x\"", 1);
        let err = parse_scenario(&text, "x.json").unwrap_err().to_string();
        assert!(err.contains("domain_group.generators[1][0][1][1]"), "{err}");
    }

    #[test]
    fn broken_relator_is_rejected_unless_flagged() {
        let text =
            include_str!("../scenarios/z2_cusp.json").replace("[[1, 2, -1, -2]]", "[[1, 2]]");
        assert!(matches!(
            parse_scenario(&text, "x"),
            Err(CliError::Input(_))
        ));
        let flagged = text.replacen(
            "\"seed\": 11",
            "\"seed\": 11, \"expected_invalid\": true",
            1,
        );
        let s = parse_scenario(&flagged, "x").unwrap();
        assert!(!s.validation.passes);
    }

    #[test]
    fn bundled_prefix() {
        assert_eq!(load_scenario("bundled:z2-cusp").unwrap().name, "z2-cusp");
        assert!(load_scenario("bundled:nope").is_err());
    }
}
