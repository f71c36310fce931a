//! Scenario files: JSON (with `//` line comments) describing generators,
//! states, projections, operators and measure tables over one dimension.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{Caps, Context, ContextPoset};
use crate::error::{Error, Result};
use crate::families::{bundled_asset, frame_contexts, ContextAsset};
use crate::linalg::{CMatrix, CVector, DensityState, HermitianMatrix, MatrixJson, Projection, Tolerances, C64};
use crate::measure::{Measure, TableEntryJson};

/// A matrix given inline, by file, as a real diagonal, as a real matrix, or
/// as the projector onto a ket.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Inline(MatrixJson),
    File {
        file: String,
    },
    Diag {
        diag: Vec<f64>,
    },
    Real {
        real: Vec<Vec<f64>>,
    },
    Ket {
        ket: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    Density(MatrixSpec),
    Vector(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableSpec {
    File { file: String },
    Inline(Vec<TableEntryJson>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub generators: BTreeMap<String, Vec<MatrixSpec>>,
    /// Bundled asset names or paths to context-family files.
    #[serde(default)]
    pub context_assets: Vec<String>,
    #[serde(default)]
    pub close_under_intersection: bool,
    #[serde(default)]
    pub include_frame_contexts: bool,
    #[serde(default)]
    pub states: BTreeMap<String, StateSpec>,
    #[serde(default)]
    pub projections: BTreeMap<String, MatrixSpec>,
    #[serde(default)]
    pub operators: BTreeMap<String, MatrixSpec>,
    #[serde(default)]
    pub tabulated_measures: BTreeMap<String, TableSpec>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub caps: Caps,
}

/// Blanks out `//` comments outside string literals, keeping line and
/// column positions intact for error messages.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut in_comment = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if in_comment {
            if c == '\n' {
                in_comment = false;
                out.push('\n');
            } else {
                out.push(' ');
            }
            continue;
        }
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            out.push(c);
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
            }
            '/' if chars.peek() == Some(&'/') => {
                in_comment = true;
                out.push(' ');
            }
            _ => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    base_dir: PathBuf,
    tolerances: Tolerances,
    hash: String,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses scenario text; file references resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let stripped = strip_comments(text);
        let file: ScenarioFile = serde_json::from_str(&stripped).map_err(|e| Error::Scenario(e.to_string()))?;
        let mut tolerances = Tolerances::default();
        for (name, value) in &file.tolerances {
            tolerances.set(name, *value)?;
        }
        tolerances.validate()?;
        let mut scenario = Self {
            file,
            base_dir: base_dir.to_path_buf(),
            tolerances,
            hash: String::new(),
        };
        scenario.hash = scenario.content_hash()?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn content_hash(&self) -> Result<String> {
        let canonical = serde_json::to_value(&self.file).map_err(|e| Error::Scenario(e.to_string()))?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.to_string().as_bytes());
        for path in self.referenced_files() {
            hasher.update(b"|");
            if let Ok(bytes) = fs::read(self.base_dir.join(&path)) {
                hasher.update(&bytes);
            }
        }
        Ok(hex::encode(&hasher.finalize()[..16]))
    }

    fn referenced_files(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |m: &MatrixSpec| {
            if let MatrixSpec::File { file } = m {
                out.push(file.clone());
            }
        };
        self.file.generators.values().flatten().for_each(&mut push);
        self.file.projections.values().for_each(&mut push);
        self.file.operators.values().for_each(&mut push);
        for s in self.file.states.values() {
            if let StateSpec::Density(m) = s {
                push(m);
            }
        }
        for t in self.file.tabulated_measures.values() {
            if let TableSpec::File { file } = t {
                out.push(file.clone());
            }
        }
        out.extend(self.file.context_assets.iter().filter(|a| bundled_asset(a).is_none()).cloned());
        out
    }

    /// Resolves every name once so that later lookups only fail on unknown names.
    fn validate(&self) -> Result<()> {
        let dim = self.file.dim;
        if dim == 0 || dim > self.file.caps.max_dim.min(crate::context::HARD_MAX_DIM) {
            return Err(Error::UnsupportedDimension {
                dim,
                max: self.file.caps.max_dim.min(crate::context::HARD_MAX_DIM),
            });
        }
        for (name, ops) in &self.file.generators {
            if ops.is_empty() {
                return Err(Error::Scenario(format!("generator set {name} is empty")));
            }
            for m in ops {
                self.hermitian(m).map_err(|e| named(&format!("generator set {name}"), e))?;
            }
        }
        for name in self.file.states.keys() {
            self.state(name)?;
        }
        for name in self.file.projections.keys() {
            self.projection(name)?;
        }
        for name in self.file.operators.keys() {
            self.operator(name)?;
        }
        for name in &self.file.context_assets {
            self.asset(name)?;
        }
        if self.file.generators.is_empty() && self.file.context_assets.is_empty() && !self.file.include_frame_contexts {
            return Err(Error::Scenario("scenario defines no contexts".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn dim(&self) -> usize {
        self.file.dim
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Hash of everything that determines the built poset: the scenario
    /// content plus the effective tolerances and caps.
    pub fn poset_key(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.hash.as_bytes());
        hasher.update(serde_json::to_string(&self.tolerances).unwrap_or_default().as_bytes());
        hasher.update(serde_json::to_string(&self.file.caps).unwrap_or_default().as_bytes());
        hex::encode(&hasher.finalize()[..16])
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn set_tolerances(&mut self, tols: Tolerances) -> Result<()> {
        tols.validate()?;
        self.tolerances = tols;
        Ok(())
    }

    pub fn caps(&self) -> &Caps {
        &self.file.caps
    }

    fn read(&self, file: &str) -> Result<String> {
        let path = self.base_dir.join(file);
        fs::read_to_string(&path).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    fn matrix(&self, spec: &MatrixSpec) -> Result<CMatrix> {
        let m = match spec {
            MatrixSpec::Inline(json) => json.to_matrix()?,
            MatrixSpec::File { file } => {
                let json: MatrixJson = serde_json::from_str(&strip_comments(&self.read(file)?))
                    .map_err(|e| Error::Scenario(format!("{file}: {e}")))?;
                json.to_matrix()?
            }
            MatrixSpec::Diag { diag } => CMatrix::from_diagonal(&CVector::from_iterator(
                diag.len(),
                diag.iter().map(|&x| C64::new(x, 0.0)),
            )),
            MatrixSpec::Real { real } => {
                let n = real.len();
                if real.iter().any(|r| r.len() != n) {
                    return Err(Error::MalformedMatrix("real matrix is not square".into()));
                }
                CMatrix::from_fn(n, n, |i, j| C64::new(real[i][j], 0.0))
            }
            MatrixSpec::Ket { ket } => {
                let v = ket_vector(ket);
                Projection::rank_one(&v)?.matrix().clone()
            }
        };
        if m.nrows() != self.file.dim {
            return Err(Error::DimensionMismatch {
                expected: self.file.dim,
                found: m.nrows(),
            });
        }
        Ok(m)
    }

    fn hermitian(&self, spec: &MatrixSpec) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.matrix(spec)?, &self.tolerances)
    }

    pub fn generator_sets(&self) -> Result<Vec<(String, Vec<HermitianMatrix>)>> {
        self.file
            .generators
            .iter()
            .map(|(name, ops)| {
                let ms = ops.iter().map(|m| self.hermitian(m)).collect::<Result<Vec<_>>>()?;
                Ok((name.clone(), ms))
            })
            .collect()
    }

    fn asset(&self, name: &str) -> Result<ContextAsset> {
        let asset = match bundled_asset(name) {
            Some(text) => ContextAsset::parse(text)?,
            None => ContextAsset::parse(&strip_comments(&self.read(name)?))?,
        };
        if asset.dim != self.file.dim {
            return Err(Error::DimensionMismatch {
                expected: self.file.dim,
                found: asset.dim,
            });
        }
        Ok(asset)
    }

    /// Every context the scenario asks for, before deduplication and closure.
    pub fn contexts(&self) -> Result<Vec<Context>> {
        let tols = &self.tolerances;
        let mut out = Vec::new();
        for (name, ops) in self.generator_sets()? {
            out.push(Context::from_generators(&ops, tols).map_err(|e| named(&format!("generator set {name}"), e))?);
        }
        for name in &self.file.context_assets {
            out.extend(self.asset(name)?.contexts(tols)?);
        }
        if self.file.include_frame_contexts {
            out.extend(frame_contexts(self.file.dim, tols)?);
        }
        Ok(out)
    }

    pub fn build_poset(&self) -> Result<ContextPoset> {
        ContextPoset::from_contexts(
            self.contexts()?,
            self.file.close_under_intersection,
            &self.tolerances,
            &self.file.caps,
        )
    }

    pub fn state_names(&self) -> impl Iterator<Item = &String> {
        self.file.states.keys()
    }

    pub fn state(&self, name: &str) -> Result<DensityState> {
        let spec = self
            .file
            .states
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown state {name}")))?;
        let state = match spec {
            StateSpec::Density(m) => DensityState::new(self.hermitian(m)?, &self.tolerances),
            StateSpec::Vector(v) => {
                if v.len() != self.file.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.file.dim,
                        found: v.len(),
                    });
                }
                DensityState::pure(&ket_vector(v), &self.tolerances)
            }
        };
        state.map_err(|e| named(&format!("state {name}"), e))
    }

    /// The unit vector of a vector state.
    pub fn vector(&self, name: &str) -> Result<CVector> {
        match self.file.states.get(name) {
            Some(StateSpec::Vector(v)) => Ok(ket_vector(v)),
            Some(_) => Err(Error::Scenario(format!("state {name} is not a vector state"))),
            None => Err(Error::Scenario(format!("unknown state {name}"))),
        }
    }

    pub fn projection_names(&self) -> impl Iterator<Item = &String> {
        self.file.projections.keys()
    }

    pub fn projection(&self, name: &str) -> Result<Projection> {
        let spec = self
            .file
            .projections
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown projection {name}")))?;
        Projection::new(self.matrix(spec)?, &self.tolerances).map_err(|e| named(&format!("projection {name}"), e))
    }

    pub fn operator_names(&self) -> impl Iterator<Item = &String> {
        self.file.operators.keys()
    }

    pub fn operator(&self, name: &str) -> Result<HermitianMatrix> {
        let spec = self
            .file
            .operators
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown operator {name}")))?;
        self.hermitian(spec).map_err(|e| named(&format!("operator {name}"), e))
    }

    pub fn table_names(&self) -> impl Iterator<Item = &String> {
        self.file.tabulated_measures.keys()
    }

    /// A tabulated measure, checked with the table tolerance (`tol_order`
    /// at least `1e-6` unless the scenario overrides it).
    pub fn tabulated_measure(&self, name: &str, poset: &ContextPoset) -> Result<Measure> {
        let spec = self
            .file
            .tabulated_measures
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown tabulated measure {name}")))?;
        let entries: Vec<TableEntryJson> = match spec {
            TableSpec::Inline(rows) => rows.clone(),
            TableSpec::File { file } => serde_json::from_str(&strip_comments(&self.read(file)?))
                .map_err(|e| Error::Scenario(format!("{file}: {e}")))?,
        };
        Measure::from_table_json(&entries, poset, &self.table_tolerances())
    }

    pub fn table_tolerances(&self) -> Tolerances {
        let mut t = self.tolerances;
        if !self.file.tolerances.contains_key("tol_order") {
            t.tol_order = t.tol_order.max(Tolerances::for_tabulated().tol_order);
        }
        t
    }
}

fn ket_vector(v: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|[re, im]| C64::new(*re, *im)))
}

fn named(what: &str, e: Error) -> Error {
    match e {
        Error::Scenario(msg) => Error::Scenario(format!("{what}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUTRIT: &str = r#"{
        // diagonal and block contexts
        "name": "qutrit",
        "dim": 3,
        "generators": {
            "diag": [{"diag": [1, 2, 3]}],
            "block": [{"diag": [1, 1, 2]}]
        },
        "states": {
            "mixed": {"density": {"diag": [0.5, 0.3, 0.2]}},
            "psi": {"vector": [[1, 0], [0, 0], [0, 0]]}
        },
        "projections": {"e11": {"ket": [[1, 0], [0, 0], [0, 0]]}},
        "operators": {"a": {"real": [[2, 0, 0], [0, 5, 0], [0, 0, 7]]}},
        "tolerances": {"tol_order": 1e-8}
    }"#;

    #[test]
    fn comments_keep_positions() {
        let s = "{\"a\": \"x//y\", // note\n\"b\": 1}";
        let out = strip_comments(s);
        assert_eq!(out.len(), s.len());
        assert!(out.contains("x//y"));
        assert!(!out.contains("note"));
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn parses_and_builds() {
        let s = Scenario::parse(QUTRIT, Path::new(".")).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.tolerances().tol_order, 1e-8);
        let poset = s.build_poset().unwrap();
        assert_eq!(poset.len(), 2);
        assert_eq!(poset.arrows().len(), 1);
        assert!((s.state("mixed").unwrap().probability(&s.projection("e11").unwrap()) - 0.5).abs() < 1e-15);
        assert!(s.operator("a").is_ok());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Scenario::parse(QUTRIT, Path::new(".")).unwrap();
        let b = Scenario::parse(&QUTRIT.replace("// diagonal", "// the diagonal"), Path::new(".")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Scenario::parse(&QUTRIT.replace("0.3, 0.2", "0.2, 0.3"), Path::new(".")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn errors_report_positions_and_names() {
        let err = Scenario::parse("{\n\"dim\": 3,\n\"bogus\": 1}", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let s = Scenario::parse(QUTRIT, Path::new(".")).unwrap();
        assert!(s.state("nope").unwrap_err().to_string().contains("nope"));
        let bad = QUTRIT.replace("[0.5, 0.3, 0.2]", "[0.5, 0.3, 0.3]");
        assert!(matches!(
            Scenario::parse(&bad, Path::new(".")),
            Err(Error::NotDensityState { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let bad = QUTRIT.replace("[1, 1, 2]", "[1, 2]");
        assert!(matches!(
            Scenario::parse(&bad, Path::new(".")),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }
}
