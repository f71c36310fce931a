use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context as _};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use specsheaf_core::logic::SearchResult;
use specsheaf_core::measure::TableEntryJson;
use specsheaf_core::reconstruct::ReconstructionReport;
use specsheaf_core::subobject::enumerate_subobjects;
use specsheaf_core::{
    check_axioms, default_frame, expectation_via_measure, global_section_search, pseudo_state, reconstruct_state,
    report, sampling, AxiomReport, ClopenSubobject, ContextId, ContextPoset, Error, ExpectationReport, MatrixJson,
    Measure, PosetJson, Projection, Scenario, SearchCertificate, SubobjectJson, Tolerances,
};

use crate::cache::{load_or_build, CacheStatus};
use crate::{Command, GlobalArgs};

/// Largest subobject lattice tabulated in full by `--emit-table`.
const FULL_TABLE_CAP: usize = 4096;

/// Round-trip tolerance on the Frobenius distance of reconstructed states.
const ROUND_TRIP_TOL: f64 = 1e-6;

/// Errors that mean the inputs are fine but a checked property does not hold.
pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::WellDefinednessViolation { .. }
            | Error::InfeasibleMeasure { .. }
            | Error::PseudoStateMismatch { .. }
            | Error::SearchBudgetExceeded(_),
        ) => 1,
        _ => 2,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub command: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub cache: CacheStatus,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildSummary {
    pub contexts: usize,
    pub arrows: usize,
    pub hasse_edges: Vec<(ContextId, ContextId)>,
    pub context_sizes: BTreeMap<ContextId, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildReport {
    #[serde(flatten)]
    pub header: Header,
    pub summary: BuildSummary,
    pub poset: PosetJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureReport {
    #[serde(flatten)]
    pub header: Header,
    pub state: String,
    pub subobject: SubobjectJson,
    pub values: BTreeMap<ContextId, f64>,
    pub order_violation: f64,
    pub table: Option<TableSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSummary {
    pub path: String,
    pub entries: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DaseiniseReport {
    #[serde(flatten)]
    pub header: Header,
    pub projection: String,
    pub subobject: SubobjectJson,
    pub components: BTreeMap<ContextId, MatrixJson>,
    /// Contexts containing the projection, where daseinisation is exact.
    pub exact_at: Vec<ContextId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructReport {
    #[serde(flatten)]
    pub header: Header,
    pub source: String,
    pub reconstruction: ReconstructionReport,
    pub round_trip_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsReport {
    #[serde(flatten)]
    pub header: Header,
    pub contexts: usize,
    pub certificate: SearchCertificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectReport {
    #[serde(flatten)]
    pub header: Header,
    pub operator: String,
    pub state: String,
    pub expectation: ExpectationReport,
    pub direct: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomsCmdReport {
    #[serde(flatten)]
    pub header: Header,
    pub source: String,
    pub seed: u64,
    pub report: AxiomReport,
}

struct Session {
    scenario: Scenario,
    poset: ContextPoset,
    cache: CacheStatus,
}

impl Session {
    fn open(global: &GlobalArgs) -> anyhow::Result<Self> {
        let path = global
            .scenario
            .as_ref()
            .ok_or_else(|| anyhow!("--scenario is required"))?;
        let mut scenario = Scenario::load(path)?;
        if !global.tol_override.is_empty() {
            let mut tols = *scenario.tolerances();
            for item in &global.tol_override {
                let (name, value) = item
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--tol-override expects NAME=VALUE, got {item}"))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .with_context(|| format!("--tol-override {item}"))?;
                tols.set(name.trim(), value)?;
            }
            scenario.set_tolerances(tols)?;
        }
        let (poset, cache) = load_or_build(&scenario, global.cache_dir.as_deref())?;
        Ok(Self { scenario, poset, cache })
    }

    fn tols(&self) -> &Tolerances {
        self.scenario.tolerances()
    }

    fn header(&self, command: &str, passed: bool) -> Header {
        Header {
            command: command.to_string(),
            scenario: self.scenario.name().to_string(),
            scenario_hash: self.scenario.hash().to_string(),
            cache: self.cache,
            passed,
        }
    }

    fn projection(&self, spec: &str) -> anyhow::Result<Projection> {
        if let Some(k) = spec.strip_prefix("frame:") {
            let k: usize = k.parse().with_context(|| format!("bad frame index in {spec}"))?;
            let frame = default_frame(self.scenario.dim());
            return frame
                .get(k)
                .cloned()
                .ok_or_else(|| anyhow!("frame index {k} out of range (frame has {} projections)", frame.len()));
        }
        Ok(self.scenario.projection(spec)?)
    }

    fn subobject(&self, spec: &str) -> anyhow::Result<ClopenSubobject> {
        let tols = self.tols();
        match spec.split_once(':') {
            None if spec == "top" => Ok(ClopenSubobject::top(&self.poset)),
            None if spec == "bottom" => Ok(ClopenSubobject::empty(&self.poset)),
            Some(("dasein", p)) => Ok(ClopenSubobject::daseinise(&self.projection(p)?, &self.poset, tols)?),
            Some(("pseudo", s)) => Ok(pseudo_state(&self.scenario.vector(s)?, &self.poset, tols)?
                .subobject()
                .clone()),
            Some(("file", path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                let json: SubobjectJson = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
                Ok(ClopenSubobject::from_json(&json, &self.poset)?)
            }
            _ => bail!("malformed subobject spec {spec:?}: expected top, bottom, dasein:<projection>, pseudo:<state> or file:<path>"),
        }
    }

    fn measure(&self, state: Option<&str>, table: Option<&str>) -> anyhow::Result<(Measure, String, Tolerances)> {
        match (state, table) {
            (Some(s), _) => Ok((
                Measure::from_state(&self.scenario.state(s)?, &self.poset)?,
                format!("state:{s}"),
                *self.tols(),
            )),
            (None, Some(t)) => Ok((
                self.scenario.tabulated_measure(t, &self.poset)?,
                format!("table:{t}"),
                self.scenario.table_tolerances(),
            )),
            (None, None) => bail!("either --state or --table is required"),
        }
    }

    /// The subobjects a tabulated measure should cover: the whole lattice
    /// when small, else the daseinised frame and scenario projections.
    fn table_pool(&self) -> anyhow::Result<(Vec<ClopenSubobject>, bool)> {
        if let Ok(all) = enumerate_subobjects(&self.poset, FULL_TABLE_CAP) {
            return Ok((all, true));
        }
        let tols = self.tols();
        let dim = self.scenario.dim();
        let mut projections = default_frame(dim);
        for name in self.scenario.projection_names() {
            projections.push(self.scenario.projection(name)?);
        }
        projections.push(Projection::zero(dim));
        projections.push(Projection::identity(dim));
        let mut pool: Vec<ClopenSubobject> = Vec::new();
        for p in &projections {
            let s = ClopenSubobject::daseinise(p, &self.poset, tols)?;
            if !pool.contains(&s) {
                pool.push(s);
            }
        }
        Ok((pool, false))
    }
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let text = report::to_canonical_string(report)?;
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs one command; `Ok(false)` signals a property failure.
pub fn run(global: &GlobalArgs, command: &Command) -> anyhow::Result<bool> {
    let session = Session::open(global)?;
    let out = global.out.as_deref();
    let tols = *session.tols();
    let poset = &session.poset;
    match command {
        Command::Build => {
            let ids = |(a, b): (usize, usize)| (poset.context(a).id().clone(), poset.context(b).id().clone());
            let report = BuildReport {
                header: session.header("build", true),
                summary: BuildSummary {
                    contexts: poset.len(),
                    arrows: poset.arrows().len(),
                    hasse_edges: poset.hasse_edges().into_iter().map(ids).collect(),
                    context_sizes: poset.contexts().iter().map(|c| (c.id().clone(), c.len())).collect(),
                },
                poset: poset.to_json(),
            };
            emit(&report, out)?;
            Ok(true)
        }
        Command::Measure {
            state,
            subobject,
            emit_table,
        } => {
            let s = session.subobject(subobject)?;
            let (mu, _, _) = session.measure(Some(state), None)?;
            let f = mu.evaluate(&s)?;
            let order_violation = f.order_violation(poset).max(0.0);
            let table = match emit_table {
                Some(path) => {
                    let (pool, complete) = session.table_pool()?;
                    let tabulated = mu.tabulate(&pool, poset, &session.scenario.table_tolerances())?;
                    let rows: Vec<TableEntryJson> = tabulated.to_table_json(poset).expect("tabulated measure");
                    fs::write(path, report::to_canonical_string(&rows)?)
                        .with_context(|| format!("writing {}", path.display()))?;
                    Some(TableSummary {
                        path: path.display().to_string(),
                        entries: rows.len(),
                        complete,
                    })
                }
                None => None,
            };
            let passed = order_violation <= tols.tol_order;
            emit(
                &MeasureReport {
                    header: session.header("measure", passed),
                    state: state.clone(),
                    subobject: s.to_json(poset),
                    values: f.to_map(poset),
                    order_violation,
                    table,
                },
                out,
            )?;
            Ok(passed)
        }
        Command::Daseinise { projection } => {
            let p = session.projection(projection)?;
            let s = ClopenSubobject::daseinise(&p, poset, &tols)?;
            emit(
                &DaseiniseReport {
                    header: session.header("daseinise", true),
                    projection: projection.clone(),
                    subobject: s.to_json(poset),
                    components: (0..poset.len())
                        .map(|k| {
                            (
                                poset.context(k).id().clone(),
                                s.component_projection(poset, k).to_json(),
                            )
                        })
                        .collect(),
                    exact_at: poset
                        .containing(&p, &tols)
                        .into_iter()
                        .map(|(k, _)| poset.context(k).id().clone())
                        .collect(),
                },
                out,
            )?;
            Ok(true)
        }
        Command::Reconstruct {
            state,
            table,
            round_trip,
        } => {
            let (mu, source, mtols) = session.measure(state.as_deref(), table.as_deref())?;
            let pool = default_frame(session.scenario.dim());
            let r = reconstruct_state(&mu, &pool, poset, &mtols)?;
            let round_trip_error = match (round_trip, mu.state()) {
                (true, Some(rho)) => Some(r.state.frobenius_distance(rho)),
                _ => None,
            };
            let passed = round_trip_error.is_none_or(|e| e <= ROUND_TRIP_TOL);
            emit(
                &ReconstructReport {
                    header: session.header("reconstruct", passed),
                    source,
                    reconstruction: r.report(pool.len()),
                    round_trip_error,
                },
                out,
            )?;
            Ok(passed)
        }
        Command::Ks { budget } => {
            let budget = budget.unwrap_or(session.scenario.caps().search_nodes);
            let certificate = global_section_search(poset, budget, &tols)?;
            if let Some(w) = &certificate.witness {
                if !w.is_compatible(poset)? {
                    bail!("search returned an incompatible witness");
                }
            }
            debug_assert!(certificate.result == SearchResult::Found || certificate.witness.is_none());
            emit(
                &KsReport {
                    header: session.header("ks", true),
                    contexts: poset.len(),
                    certificate,
                },
                out,
            )?;
            Ok(true)
        }
        Command::Expect { operator, state } => {
            let a = session.scenario.operator(operator)?;
            let rho = session.scenario.state(state)?;
            let mu = Measure::from_state(&rho, poset)?;
            let expectation = expectation_via_measure(&a, &mu, poset, &tols)?;
            let direct = rho.expectation(a.matrix());
            let error = (expectation.value - direct).abs();
            let passed = expectation.degraded_accuracy || error <= 1e-9 * (1.0 + expectation.abs_eigenvalue_sum);
            emit(
                &ExpectReport {
                    header: session.header("expect", passed),
                    operator: operator.clone(),
                    state: state.clone(),
                    expectation,
                    direct,
                    error,
                },
                out,
            )?;
            Ok(passed)
        }
        Command::CheckAxioms {
            state,
            table,
            pairs,
            seed,
        } => {
            let (mu, source, mtols) = session.measure(state.as_deref(), table.as_deref())?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let sample: Vec<(ClopenSubobject, ClopenSubobject)> = if mu.is_tabulated() {
                let rows = mu.to_table_json(poset).expect("tabulated measure");
                let subs = rows
                    .iter()
                    .map(|r| ClopenSubobject::from_json(&r.subobject, poset))
                    .collect::<Result<Vec<_>, _>>()?;
                if subs.is_empty() {
                    Vec::new()
                } else {
                    (0..*pairs)
                        .map(|_| {
                            let a = rng.random_range(0..subs.len());
                            let b = rng.random_range(0..subs.len());
                            (subs[a].clone(), subs[b].clone())
                        })
                        .collect()
                }
            } else {
                (0..*pairs)
                    .map(|_| (sampling::subobject(&mut rng, poset), sampling::subobject(&mut rng, poset)))
                    .collect()
            };
            let report = check_axioms(&mu, &sample, poset, &mtols);
            let passed = report.passed;
            emit(
                &AxiomsCmdReport {
                    header: session.header("check-axioms", passed),
                    source,
                    seed: *seed,
                    report,
                },
                out,
            )?;
            Ok(passed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::de::DeserializeOwned;

    fn round_trip<T: DeserializeOwned + Serialize>(command: Command, scenario: &str) -> T {
        let dir = tempfile::TempDir::new().unwrap();
        let out = dir.path().join("report.json");
        let global = GlobalArgs {
            scenario: Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(scenario)),
            out: Some(out.clone()),
            tol_override: Vec::new(),
            cache_dir: None,
        };
        run(&global, &command).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let parsed: T = serde_json::from_str(&text).unwrap();
        assert_eq!(report::to_canonical_string(&parsed).unwrap(), text);
        parsed
    }

    #[test]
    fn reports_parse_back() {
        let b: BuildReport = round_trip(Command::Build, "qutrit_blocks.json");
        assert_eq!(b.summary.contexts, 4);
        let m: MeasureReport = round_trip(
            Command::Measure {
                state: "mixed".into(),
                subobject: "dasein:e11".into(),
                emit_table: None,
            },
            "qutrit_blocks.json",
        );
        assert_eq!(m.values.len(), 4);
        let _: DaseiniseReport = round_trip(Command::Daseinise { projection: "frame:0".into() }, "qutrit_frame.json");
        let _: ReconstructReport = round_trip(
            Command::Reconstruct {
                state: Some("mixed".into()),
                table: None,
                round_trip: true,
            },
            "qutrit_frame.json",
        );
        let k: KsReport = round_trip(Command::Ks { budget: None }, "ks_cabello18.json");
        assert_eq!(k.certificate.result, SearchResult::None);
        let _: ExpectReport = round_trip(
            Command::Expect {
                operator: "a".into(),
                state: "mixed".into(),
            },
            "qutrit_blocks.json",
        );
        let _: AxiomsCmdReport = round_trip(
            Command::CheckAxioms {
                state: Some("mixed".into()),
                table: None,
                pairs: 20,
                seed: 3,
            },
            "qutrit_blocks.json",
        );
    }
}
