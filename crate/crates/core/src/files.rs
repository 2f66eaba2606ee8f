//! Text formats: kinematic model, plant spec and model file (TOML), and
//! datasets (CSV with a `# key: value` header block).
//!
//! Floats are written in shortest round-trip form, so every write/read cycle
//! is value-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::disturbance::{DirectionTag, DisturbanceBasis, PolyDisturbance};
use crate::error::{Error, Result};
use crate::estimation::{Dataset, DatasetMeta, Method, ParamSet, Provenance, Sample, StepReport};
use crate::gcc::GccConfig;
use crate::gravity::{GravityConstants, GravityRegressorSpec, LinkMass, LinkMassParams};
use crate::kinematics::{Chain, Coupling, DhRow, FrameRef, JointLimit, JointRef, KinematicModel};
use crate::plant::{Curve, CurvePair, DriftDynamics, PlantSpec};

pub const FORMAT_VERSION: u32 = 1;

fn parse_err(path: impl Into<PathBuf>, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        reason: reason.into(),
    }
}

fn check_format(format: u32, path: &Path) -> Result<()> {
    if format != FORMAT_VERSION {
        return Err(parse_err(
            path,
            format!("unsupported format {format}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, text).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

// ---------------------------------------------------------------------------
// kinematic model

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum JointDoc {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CouplingDoc {
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RowDoc {
    a: f64,
    alpha: f64,
    d: f64,
    theta_offset: f64,
    joint: JointDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupling: Option<CouplingDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AttachDoc {
    chain: String,
    frame: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainDoc {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    attach: Option<AttachDoc>,
    row: Vec<RowDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: u32,
    name: String,
    angle_unit: String,
    joints: usize,
    gravity_direction: [f64; 3],
    joint_limits: Vec<[f64; 2]>,
    chain: Vec<ChainDoc>,
}

fn angle_scale(unit: &str, path: &Path) -> Result<f64> {
    match unit {
        "rad" => Ok(1.0),
        "deg" => Ok(std::f64::consts::PI / 180.0),
        other => Err(parse_err(path, format!("angle_unit `{other}` is not `deg` or `rad`"))),
    }
}

fn model_from_doc(doc: ModelDoc, path: &Path) -> Result<KinematicModel> {
    check_format(doc.format, path)?;
    let s = angle_scale(&doc.angle_unit, path)?;
    let n = doc.joints;
    let joint_index = |j: usize, ctx: &str| -> Result<usize> {
        if j == 0 || j > n {
            Err(parse_err(path, format!("{ctx}: joint {j} outside 1..={n}")))
        } else {
            Ok(j - 1)
        }
    };
    let mut chains = Vec::with_capacity(doc.chain.len());
    for (ci, c) in doc.chain.iter().enumerate() {
        let attach = match &c.attach {
            None => None,
            Some(a) => {
                let chain = doc.chain[..ci].iter().position(|p| p.name == a.chain).ok_or_else(|| {
                    parse_err(
                        path,
                        format!("chain `{}` attaches to unknown chain `{}`", c.name, a.chain),
                    )
                })?;
                Some(FrameRef { chain, frame: a.frame })
            }
        };
        let mut rows = Vec::with_capacity(c.row.len());
        let mut couplings = Vec::with_capacity(c.row.len());
        for (ri, r) in c.row.iter().enumerate() {
            let ctx = format!("chain `{}` row {}", c.name, ri + 1);
            let joint = match &r.joint {
                JointDoc::Index(j) => JointRef::Actuated(joint_index(*j, &ctx)?),
                JointDoc::Name(v) if v == "fixed" => JointRef::Fixed,
                JointDoc::Name(v) => {
                    return Err(parse_err(
                        path,
                        format!("{ctx}: joint `{v}` is not an index or `fixed`"),
                    ))
                }
            };
            let coupling = match (&r.coupling, joint) {
                (Some(cd), _) => Coupling {
                    offset: cd.offset * s,
                    terms: cd
                        .terms
                        .iter()
                        .map(|&(j, c)| Ok((joint_index(j, &ctx)?, c)))
                        .collect::<Result<_>>()?,
                },
                (None, JointRef::Actuated(j)) => Coupling::identity(j),
                (None, JointRef::Fixed) => Coupling::fixed(0.0),
            };
            rows.push(DhRow::new(r.a, r.alpha * s, r.d, r.theta_offset * s, joint));
            couplings.push(coupling);
        }
        chains.push(Chain::new(c.name.clone(), attach, rows).with_couplings(couplings));
    }
    let limits = doc
        .joint_limits
        .iter()
        .map(|l| JointLimit::new(l[0] * s, l[1] * s))
        .collect();
    let g = doc.gravity_direction;
    KinematicModel::new(doc.name, chains, n, limits, Vector3::new(g[0], g[1], g[2]))
}

fn model_to_doc(model: &KinematicModel) -> ModelDoc {
    let chain = model
        .chains
        .iter()
        .map(|c| ChainDoc {
            name: c.name.clone(),
            attach: c.attach.map(|a| AttachDoc {
                chain: model.chains[a.chain].name.clone(),
                frame: a.frame,
            }),
            row: c
                .rows
                .iter()
                .zip(&c.couplings)
                .map(|(r, cp)| {
                    let implied = match r.joint {
                        JointRef::Actuated(j) => Coupling::identity(j),
                        JointRef::Fixed => Coupling::fixed(0.0),
                    };
                    RowDoc {
                        a: r.a,
                        alpha: r.alpha,
                        d: r.d,
                        theta_offset: r.theta_offset,
                        joint: match r.joint {
                            JointRef::Actuated(j) => JointDoc::Index(j + 1),
                            JointRef::Fixed => JointDoc::Name("fixed".into()),
                        },
                        coupling: (*cp != implied).then(|| CouplingDoc {
                            offset: cp.offset,
                            terms: cp.terms.iter().map(|&(j, c)| (j + 1, c)).collect(),
                        }),
                    }
                })
                .collect(),
        })
        .collect();
    ModelDoc {
        format: FORMAT_VERSION,
        name: model.name.clone(),
        angle_unit: "rad".into(),
        joints: model.n_joints,
        gravity_direction: [
            model.gravity_direction.x,
            model.gravity_direction.y,
            model.gravity_direction.z,
        ],
        joint_limits: model.limits.iter().map(|l| [l.lo, l.hi]).collect(),
        chain,
    }
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("document types always serialize")
}

pub fn parse_kinematic_model(text: &str, path: impl AsRef<Path>) -> Result<KinematicModel> {
    let path = path.as_ref();
    let doc: ModelDoc = toml::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    model_from_doc(doc, path)
}

/// Canonical text of a model (radians).
pub fn kinematic_model_to_toml(model: &KinematicModel) -> String {
    to_toml(&model_to_doc(model))
}

pub fn read_kinematic_model(path: &Path) -> Result<KinematicModel> {
    parse_kinematic_model(&read_text(path)?, path)
}

/// SHA-256 (hex, first 16 digits) of the canonical model text.
pub fn model_hash(model: &KinematicModel) -> String {
    let digest = Sha256::digest(kinematic_model_to_toml(model).as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

// ---------------------------------------------------------------------------
// plant spec

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum CurveDoc {
    Polynomial {
        coefficients: Vec<f64>,
    },
    PiecewiseLinear {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    SinusoidPolynomial {
        amplitude: f64,
        frequency: f64,
        phase: f64,
        coefficients: Vec<f64>,
    },
}

impl From<&Curve> for CurveDoc {
    fn from(c: &Curve) -> Self {
        match c {
            Curve::Polynomial(c) => CurveDoc::Polynomial {
                coefficients: c.clone(),
            },
            Curve::PiecewiseLinear { knots, values } => CurveDoc::PiecewiseLinear {
                knots: knots.clone(),
                values: values.clone(),
            },
            Curve::SinusoidPoly {
                amplitude,
                frequency,
                phase,
                poly,
            } => CurveDoc::SinusoidPolynomial {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                coefficients: poly.clone(),
            },
        }
    }
}

impl From<CurveDoc> for Curve {
    fn from(c: CurveDoc) -> Self {
        match c {
            CurveDoc::Polynomial { coefficients } => Curve::Polynomial(coefficients),
            CurveDoc::PiecewiseLinear { knots, values } => Curve::PiecewiseLinear { knots, values },
            CurveDoc::SinusoidPolynomial {
                amplitude,
                frequency,
                phase,
                coefficients,
            } => Curve::SinusoidPoly {
                amplitude,
                frequency,
                phase,
                poly: coefficients,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MassDoc {
    mass: f64,
    com: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurvePairDoc {
    plus: CurveDoc,
    minus: CurveDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftDoc {
    inertia: Vec<f64>,
    damping: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantDoc {
    format: u32,
    /// `mtm-in-class` or `mtm-order6`; explicit sections override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    /// Kinematic model file, relative to the plant file.
    #[serde(skip_serializing_if = "Option::is_none")]
    kinematics_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<DriftDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<Vec<MassDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disturbance: Option<Vec<CurvePairDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kinematics: Option<ModelDoc>,
}

pub const PRESET_IN_CLASS: &str = "mtm-in-class";
pub const PRESET_ORDER6: &str = "mtm-order6";

/// Parses a plant spec. `base_dir` resolves `kinematics_file`.
pub fn parse_plant_spec(text: &str, path: impl AsRef<Path>, base_dir: Option<&Path>) -> Result<PlantSpec> {
    let path = path.as_ref();
    let doc: PlantDoc = toml::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    check_format(doc.format, path)?;
    let seed = doc.seed.unwrap_or(0);
    let sigma = doc.noise_sigma.unwrap_or(0.0);
    let mut spec = match doc.preset.as_deref() {
        Some(PRESET_IN_CLASS) => PlantSpec::mtm_in_class(seed, sigma),
        Some(PRESET_ORDER6) => PlantSpec::mtm_order6(seed, sigma),
        Some(other) => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (known: {PRESET_IN_CLASS}, {PRESET_ORDER6})"),
            ))
        }
        None => {
            let model = KinematicModel::mtm_default();
            let n = model.n_joints;
            PlantSpec {
                masses: LinkMassParams::zeros(model.link_count()),
                disturbance: vec![CurvePair::zero(); n],
                noise_sigma: sigma,
                drift: DriftDynamics::uniform(n, PlantSpec::DEFAULT_INERTIA, PlantSpec::DEFAULT_DAMPING),
                seed,
                gravity: GravityConstants::default(),
                model,
            }
        }
    };
    if let Some(k) = doc.kinematics {
        spec.model = model_from_doc(k, path)?;
    } else if let Some(file) = &doc.kinematics_file {
        let p = base_dir.map_or_else(|| PathBuf::from(file), |d| d.join(file));
        spec.model = read_kinematic_model(&p)?;
    }
    if let Some(g) = doc.g {
        spec.gravity = GravityConstants::new(g).map_err(|_| Error::config("g", "must be positive"))?;
    }
    if let Some(d) = doc.drift {
        spec.drift = DriftDynamics {
            inertia: d.inertia,
            damping: d.damping,
        };
    }
    if let Some(m) = doc.mass {
        spec.masses = LinkMassParams {
            links: m
                .iter()
                .map(|m| LinkMass::new(m.mass, Vector3::new(m.com[0], m.com[1], m.com[2])))
                .collect(),
        };
    }
    if let Some(d) = doc.disturbance {
        spec.disturbance = d
            .into_iter()
            .map(|p| CurvePair {
                plus: p.plus.into(),
                minus: p.minus.into(),
            })
            .collect();
    }
    spec.validate()?;
    Ok(spec)
}

pub fn read_plant_spec(path: &Path) -> Result<PlantSpec> {
    parse_plant_spec(&read_text(path)?, path, path.parent())
}

/// Fully explicit plant text (no preset, kinematics embedded).
pub fn plant_spec_to_toml(spec: &PlantSpec) -> String {
    let doc = PlantDoc {
        format: FORMAT_VERSION,
        preset: None,
        seed: Some(spec.seed),
        noise_sigma: Some(spec.noise_sigma),
        g: Some(spec.gravity.g),
        kinematics_file: None,
        drift: Some(DriftDoc {
            inertia: spec.drift.inertia.clone(),
            damping: spec.drift.damping.clone(),
        }),
        mass: Some(
            spec.masses
                .links
                .iter()
                .map(|m| MassDoc {
                    mass: m.mass,
                    com: [m.com.x, m.com.y, m.com.z],
                })
                .collect(),
        ),
        disturbance: Some(
            spec.disturbance
                .iter()
                .map(|p| CurvePairDoc {
                    plus: (&p.plus).into(),
                    minus: (&p.minus).into(),
                })
                .collect(),
        ),
        kinematics: Some(model_to_doc(&spec.model)),
    };
    to_toml(&doc)
}

// ---------------------------------------------------------------------------
// datasets

fn dir_code(d: DirectionTag) -> &'static str {
    match d {
        DirectionTag::Positive => "1",
        DirectionTag::Negative => "-1",
    }
}

pub fn dataset_to_csv(ds: &Dataset, n_joints: usize) -> String {
    let m = &ds.meta;
    let mut s = String::new();
    let _ = writeln!(s, "# format: {FORMAT_VERSION}");
    let _ = writeln!(s, "# model_hash: {}", m.model_hash);
    let _ = writeln!(s, "# joints: {n_joints}");
    let _ = writeln!(s, "# source: {}", m.source);
    let _ = writeln!(
        s,
        "# estimated_joint: {}",
        m.estimated_joint.map_or("none".to_string(), |j| (j + 1).to_string())
    );
    let _ = writeln!(s, "# sweep: {}", m.sweep);
    let _ = writeln!(
        s,
        "# plant_seed: {}",
        m.plant_seed.map_or("none".to_string(), |v| v.to_string())
    );
    let _ = writeln!(
        s,
        "# orders_hint: {}",
        m.orders_hint.as_ref().map_or("none".to_string(), |o| {
            o.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
        })
    );
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<String> = ["q", "dir", "tau"]
        .iter()
        .flat_map(|p| (1..=n_joints).map(move |j| format!("{p}{j}")))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for smp in &ds.samples {
        let rec: Vec<String> = smp
            .q
            .iter()
            .map(|v| format!("{v:?}"))
            .chain(smp.dir.iter().map(|d| dir_code(*d).to_string()))
            .chain(smp.tau.iter().map(|v| format!("{v:?}")))
            .collect();
        w.write_record(&rec).expect("in-memory write");
    }
    s.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output"));
    s
}

fn header_value<'a>(h: &'a BTreeMap<String, String>, key: &str, path: &Path) -> Result<&'a str> {
    h.get(key)
        .map(String::as_str)
        .ok_or_else(|| parse_err(path, format!("missing header key `{key}`")))
}

fn optional<T: std::str::FromStr>(v: &str, key: &str, path: &Path) -> Result<Option<T>> {
    if v == "none" {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| parse_err(path, format!("bad `{key}` value `{v}`")))
}

pub fn parse_dataset(text: &str, path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut header = BTreeMap::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        body_start += line.len();
        if let Some((k, v)) = rest.trim().split_once(':') {
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let format: u32 = header_value(&header, "format", path)?
        .parse()
        .map_err(|_| parse_err(path, "bad format"))?;
    check_format(format, path)?;
    let n: usize = header_value(&header, "joints", path)?
        .parse()
        .map_err(|_| parse_err(path, "bad joint count"))?;
    let estimated_joint: Option<usize> =
        optional(header_value(&header, "estimated_joint", path)?, "estimated_joint", path)?;
    if estimated_joint == Some(0) || estimated_joint.is_some_and(|j| j > n) {
        return Err(parse_err(path, "estimated_joint outside 1..=joints"));
    }
    let orders_hint = match header.get("orders_hint").map(String::as_str) {
        None | Some("none") => None,
        Some(v) => Some(
            v.split_whitespace()
                .map(|k| k.parse().map_err(|_| parse_err(path, format!("bad orders_hint `{v}`"))))
                .collect::<Result<Vec<usize>>>()?,
        ),
    };
    let meta = DatasetMeta {
        source: header.get("source").cloned().unwrap_or_default(),
        estimated_joint: estimated_joint.map(|j| j - 1),
        sweep: header.get("sweep").cloned().unwrap_or_default(),
        plant_seed: match header.get("plant_seed") {
            Some(v) => optional(v, "plant_seed", path)?,
            None => None,
        },
        model_hash: header.get("model_hash").cloned().unwrap_or_default(),
        orders_hint,
    };
    let mut rdr = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start..]);
    let width = rdr.headers().map_err(|e| parse_err(path, e.to_string()))?.len();
    if width != 3 * n {
        return Err(parse_err(path, format!("{width} columns, expected {}", 3 * n)));
    }
    let mut samples = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, format!("row {}: {e}", r + 1)))?;
        if rec.len() != 3 * n {
            return Err(parse_err(
                path,
                format!("row {}: {} fields, expected {}", r + 1, rec.len(), 3 * n),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, format!("row {}: bad number `{}`", r + 1, &rec[i])))
        };
        let q = (0..n).map(num).collect::<Result<Vec<_>>>()?;
        let dir = (n..2 * n)
            .map(|i| {
                rec[i]
                    .trim()
                    .parse::<i64>()
                    .ok()
                    .and_then(DirectionTag::from_sign)
                    .ok_or_else(|| parse_err(path, format!("row {}: direction must be 1 or -1", r + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let tau = (2 * n..3 * n).map(num).collect::<Result<Vec<_>>>()?;
        samples.push(Sample { q, dir, tau });
    }
    Ok(Dataset { samples, meta })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&read_text(path)?, path)
}

pub fn write_dataset(path: &Path, ds: &Dataset, n_joints: usize) -> Result<()> {
    write_text(path, &dataset_to_csv(ds, n_joints))
}

// ---------------------------------------------------------------------------
// model file

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GravityDoc {
    g: f64,
    full_param_count: usize,
    independent: Vec<usize>,
    dependent: Vec<usize>,
    /// Row-major, `base x dependent`.
    combination: Vec<Vec<f64>>,
    base: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointCoeffDoc {
    joint: usize,
    order: usize,
    center: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GccDoc {
    dead_band: Vec<f64>,
    saturation: Vec<f64>,
    alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    /// 1-based joint, 0 for a single global solve.
    joint: usize,
    rows: usize,
    params: usize,
    residual_norm: f64,
    condition: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceDoc {
    method: String,
    step: Vec<StepDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFileDoc {
    format: u32,
    gravity: GravityDoc,
    disturbance: Vec<JointCoeffDoc>,
    gcc: GccDoc,
    provenance: ProvenanceDoc,
    kinematics: ModelDoc,
}

/// Everything a controller needs: kinematics, parameters, and its settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: KinematicModel,
    pub params: ParamSet,
    pub gcc: GccConfig,
}

pub fn model_file_to_toml(mf: &ModelFile) -> String {
    let p = &mf.params;
    let gs = &p.gravity;
    let d = &p.disturbance;
    let doc = ModelFileDoc {
        format: FORMAT_VERSION,
        gravity: GravityDoc {
            g: gs.constants.g,
            full_param_count: gs.full_param_count,
            independent: gs.independent.clone(),
            dependent: gs.dependent.clone(),
            combination: gs.combination.row_iter().map(|r| r.iter().copied().collect()).collect(),
            base: p.gravity_base.iter().copied().collect(),
        },
        disturbance: (0..d.n_joints())
            .map(|j| JointCoeffDoc {
                joint: j + 1,
                order: d.basis.orders[j],
                center: d.basis.centers[j],
                plus: d.plus[j].clone(),
                minus: d.minus[j].clone(),
            })
            .collect(),
        gcc: GccDoc {
            dead_band: mf.gcc.dead_band.clone(),
            saturation: mf.gcc.saturation.clone(),
            alpha: mf.gcc.alpha,
        },
        provenance: ProvenanceDoc {
            method: p.provenance.method.label().into(),
            step: p
                .provenance
                .steps
                .iter()
                .map(|s| StepDoc {
                    joint: s.joint.map_or(0, |j| j + 1),
                    rows: s.rows,
                    params: s.params,
                    residual_norm: s.residual_norm,
                    condition: s.condition,
                })
                .collect(),
        },
        kinematics: model_to_doc(&mf.model),
    };
    to_toml(&doc)
}

pub fn parse_model_file(text: &str, path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let doc: ModelFileDoc = toml::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    check_format(doc.format, path)?;
    let model = model_from_doc(doc.kinematics, path)?;
    let g = doc.gravity;
    let b = g.independent.len();
    if g.combination.len() != b || g.combination.iter().any(|r| r.len() != g.dependent.len()) {
        return Err(parse_err(path, "gravity.combination must be base x dependent"));
    }
    if g.independent.len() + g.dependent.len() != g.full_param_count || g.base.len() != b {
        return Err(parse_err(path, "gravity column sets do not match full_param_count"));
    }
    let combination = DMatrix::from_fn(b, g.dependent.len(), |r, c| g.combination[r][c]);
    let gravity = GravityRegressorSpec {
        full_param_count: g.full_param_count,
        independent: g.independent,
        dependent: g.dependent,
        combination,
        constants: GravityConstants::new(g.g)?,
    };
    let mut dist = doc.disturbance;
    dist.sort_by_key(|j| j.joint);
    if dist.iter().enumerate().any(|(i, j)| j.joint != i + 1) {
        return Err(parse_err(path, "disturbance entries must cover joints 1..=n once each"));
    }
    let basis = DisturbanceBasis::with_centers(
        dist.iter().map(|j| j.order).collect(),
        dist.iter().map(|j| j.center).collect(),
    )?;
    let disturbance = PolyDisturbance::new(
        basis,
        dist.iter().map(|j| j.plus.clone()).collect(),
        dist.iter().map(|j| j.minus.clone()).collect(),
    )?;
    let method = Method::parse(&doc.provenance.method)
        .ok_or_else(|| parse_err(path, format!("unknown method `{}`", doc.provenance.method)))?;
    let params = ParamSet {
        gravity,
        gravity_base: DVector::from_vec(g.base),
        disturbance,
        provenance: Provenance {
            method,
            steps: doc
                .provenance
                .step
                .into_iter()
                .map(|s| StepReport {
                    joint: s.joint.checked_sub(1),
                    rows: s.rows,
                    params: s.params,
                    residual_norm: s.residual_norm,
                    condition: s.condition,
                })
                .collect(),
        },
    };
    params.validate(&model)?;
    let gcc = GccConfig {
        dead_band: doc.gcc.dead_band,
        saturation: doc.gcc.saturation,
        alpha: doc.gcc.alpha,
    };
    gcc.validate(model.n_joints)?;
    Ok(ModelFile { model, params, gcc })
}

pub fn read_model_file(path: &Path) -> Result<ModelFile> {
    parse_model_file(&read_text(path)?, path)
}

pub fn write_model_file(path: &Path, mf: &ModelFile) -> Result<()> {
    write_text(path, &model_file_to_toml(mf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::DEFAULT_MODEL_TOML;

    #[test]
    fn default_model_round_trips() {
        let m = parse_kinematic_model(DEFAULT_MODEL_TOML, "x").unwrap();
        let text = kinematic_model_to_toml(&m);
        let back = parse_kinematic_model(&text, "y").unwrap();
        assert_eq!(m, back);
        assert_eq!(text, kinematic_model_to_toml(&back));
        assert_eq!(model_hash(&m), model_hash(&back));
        assert_eq!(model_hash(&m).len(), 16);
    }

    #[test]
    fn unknown_unit_and_format_rejected() {
        let bad = DEFAULT_MODEL_TOML.replace("angle_unit = \"deg\"", "angle_unit = \"grad\"");
        assert!(matches!(parse_kinematic_model(&bad, "m"), Err(Error::Parse { .. })));
        let bad = DEFAULT_MODEL_TOML.replace("format = 1", "format = 2");
        assert!(parse_kinematic_model(&bad, "m").is_err());
    }

    #[test]
    fn plant_preset_round_trips() {
        let spec = parse_plant_spec(
            "format = 1\npreset = \"mtm-order6\"\nseed = 9\nnoise_sigma = 0.01\n",
            "p",
            None,
        )
        .unwrap();
        assert_eq!(spec, PlantSpec::mtm_order6(9, 0.01));
        let text = plant_spec_to_toml(&spec);
        assert_eq!(parse_plant_spec(&text, "p", None).unwrap(), spec);
    }

    #[test]
    fn plant_error_names_key() {
        let err =
            parse_plant_spec("format = 1\npreset = \"mtm-in-class\"\nnoise_sigma = -1.0\n", "p", None).unwrap_err();
        assert!(err.to_string().contains("noise_sigma"), "{err}");
        let err = parse_plant_spec("format = 1\npreset = \"cad\"\n", "p", None).unwrap_err();
        assert!(err.to_string().contains("preset"), "{err}");
    }

    #[test]
    fn curve_kinds_round_trip() {
        let mut spec = PlantSpec::mtm_in_class(1, 0.0);
        spec.disturbance[0].plus = Curve::PiecewiseLinear {
            knots: vec![-1.0, 0.1, 2.0],
            values: vec![0.0, 0.3, -0.1],
        };
        spec.disturbance[1].minus = Curve::SinusoidPoly {
            amplitude: 0.1,
            frequency: 3.0,
            phase: 0.2,
            poly: vec![0.01, 1e-17],
        };
        let back = parse_plant_spec(&plant_spec_to_toml(&spec), "p", None).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let ds = Dataset {
            samples: vec![
                Sample {
                    q: vec![0.1 + 0.2, -1e-300],
                    dir: vec![DirectionTag::Positive, DirectionTag::Negative],
                    tau: vec![std::f64::consts::PI, -0.0],
                },
                Sample {
                    q: vec![1.0 / 3.0, 2.0],
                    dir: vec![DirectionTag::Negative, DirectionTag::Negative],
                    tau: vec![1e-17, 123456.789],
                },
            ],
            meta: DatasetMeta {
                source: "plant-sim".into(),
                estimated_joint: Some(1),
                sweep: "two-joint joint=2".into(),
                plant_seed: Some(42),
                model_hash: "abc".into(),
                orders_hint: Some(vec![4, 1]),
            },
        };
        let text = dataset_to_csv(&ds, 2);
        let back = parse_dataset(&text, "d.csv").unwrap();
        assert_eq!(back, ds);
        assert!(back.samples[0].tau[1].is_sign_negative());
        assert_eq!(dataset_to_csv(&back, 2), text);
    }

    #[test]
    fn dataset_width_checked() {
        let text = "# format: 1\n# joints: 2\n# estimated_joint: none\nq1,q2,dir1,dir2,tau1\n0,0,1,1,0\n";
        assert!(matches!(parse_dataset(text, "d"), Err(Error::Parse { .. })));
        let text = "# format: 1\n# joints: 1\n# estimated_joint: none\nq1,dir1,tau1\n0,0,0\n";
        assert!(parse_dataset(text, "d").unwrap_err().to_string().contains("direction"));
    }
}
