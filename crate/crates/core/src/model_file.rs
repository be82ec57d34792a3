//! JSON model files.
//!
//! A file holds exactly one of
//!
//! * a realization: `{"A": [[..]], "B": [[..]], "C": [[..]], "D": [[..]]}` (`D` optional),
//! * a transfer-function grid: `{"tf_blocks": [[block, ..], ..]}`,
//! * a diagonal of SISO blocks: `{"tf_diag": [block, ..]}`,
//! * an identity gain: `{"identity": n}`,
//! * an interconnection recipe: `{"subsystems": {..}, "steps": [..], "output": name}`.
//!
//! Blocks are tagged by `"type"`: `second_order {k, wn, zeta}`, `first_order {k, wc}`,
//! `biquad {num, den}` (descending powers), `pd {kp, kd, tk}`, `gain {k}`.
//!
//! Recipe subsystems are inline models or `{"file": "relative/path.json"}`. Steps
//! run in order and each binds a new name:
//!
//! ```json
//! {"op": "series", "name": "loop", "chain": ["sensor", "controller", "plant"]}
//! {"op": "feedback", "name": "cl", "plant": "unity", "feedback": "loop", "sign": -1}
//! {"op": "select_outputs", "name": "p", "model": "cl", "indices": [0, 2]}
//! {"op": "sum_at_output", "name": "y", "model": "plant", "disturbance": "filter"}
//! {"op": "append_inputs", "name": "g", "model": "plant", "count": 2}
//! {"op": "block_diagonal", "name": "g", "models": ["a", "b"]}
//! ```
//!
//! Output indices are 0-based.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::Matrix;
use crate::model::StateSpace;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: line {line}, column {column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: {message}")]
    Schema { origin: String, message: String },
    #[error("{origin}: {source}")]
    Model { origin: String, source: Error },
}

impl ModelFileError {
    /// The model error underneath, if assembly failed on the numbers rather than the
    /// file.
    pub fn model_error(&self) -> Option<&Error> {
        match self {
            Self::Model { source, .. } => Some(source),
            _ => None,
        }
    }
}

type FileResult<T> = std::result::Result<T, ModelFileError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TfBlock {
    SecondOrder { k: f64, wn: f64, zeta: f64 },
    FirstOrder { k: f64, wc: f64 },
    Biquad { num: [f64; 3], den: [f64; 3] },
    Pd { kp: f64, kd: f64, tk: f64 },
    Gain { k: f64 },
}

impl TfBlock {
    pub fn realize(&self) -> crate::Result<StateSpace> {
        match *self {
            Self::SecondOrder { k, wn, zeta } => StateSpace::second_order(k, wn, zeta),
            Self::FirstOrder { k, wc } => StateSpace::first_order(k, wc),
            Self::Biquad { num, den } => StateSpace::biquad(num, den),
            Self::Pd { kp, kd, tk } => StateSpace::pd_controller(kp, kd, tk),
            Self::Gain { k } => StateSpace::gain(Matrix::from_element(1, 1, k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubsystemSpec {
    File { file: String },
    Inline(Box<ModelSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Series {
        name: String,
        chain: Vec<String>,
    },
    Feedback {
        name: String,
        plant: String,
        feedback: String,
        sign: f64,
    },
    SelectOutputs {
        name: String,
        model: String,
        indices: Vec<usize>,
    },
    SumAtOutput {
        name: String,
        model: String,
        disturbance: String,
    },
    AppendInputs {
        name: String,
        model: String,
        count: usize,
    },
    BlockDiagonal {
        name: String,
        models: Vec<String>,
    },
}

impl Step {
    fn name(&self) -> &str {
        match self {
            Self::Series { name, .. }
            | Self::Feedback { name, .. }
            | Self::SelectOutputs { name, .. }
            | Self::SumAtOutput { name, .. }
            | Self::AppendInputs { name, .. }
            | Self::BlockDiagonal { name, .. } => name,
        }
    }

    fn op(&self) -> &'static str {
        match self {
            Self::Series { .. } => "series",
            Self::Feedback { .. } => "feedback",
            Self::SelectOutputs { .. } => "select_outputs",
            Self::SumAtOutput { .. } => "sum_at_output",
            Self::AppendInputs { .. } => "append_inputs",
            Self::BlockDiagonal { .. } => "block_diagonal",
        }
    }
}

/// Raw contents of a model file. Exactly one form must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf_blocks: Option<Vec<Vec<TfBlock>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf_diag: Option<Vec<TfBlock>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystems: Option<BTreeMap<String, SubsystemSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<Step>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_labels: Option<Vec<String>>,
}

/// One evaluated recipe step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub name: String,
    pub op: &'static str,
    pub n_states: usize,
    pub n_inputs: usize,
    pub n_outputs: usize,
    /// `|det(I − sign D_fb D_plant)|` for feedback steps.
    pub well_posedness: Option<f64>,
}

/// What was built while loading, for diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssemblyReport {
    /// `(name, n_states)` of every recipe subsystem, in load order.
    pub subsystems: Vec<(String, usize)>,
    pub steps: Vec<StepRecord>,
}

/// A parsed and assembled model file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub origin: String,
    pub spec: ModelSpec,
    pub model: StateSpace,
    pub report: AssemblyReport,
}

/// Reads referenced files.
pub trait Resolver {
    fn read(&self, reference: &str) -> FileResult<(String, Box<dyn Resolver + '_>)>;
}

struct DirResolver {
    dir: PathBuf,
}

impl Resolver for DirResolver {
    fn read(&self, reference: &str) -> FileResult<(String, Box<dyn Resolver + '_>)> {
        let path = self.dir.join(reference);
        let text = std::fs::read_to_string(&path).map_err(|source| ModelFileError::Io {
            path: path.clone(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((text, Box::new(DirResolver { dir })))
    }
}

/// Resolves references against a fixed table of `(name, contents)`.
pub struct TableResolver(pub &'static [(&'static str, &'static str)]);

impl Resolver for TableResolver {
    fn read(&self, reference: &str) -> FileResult<(String, Box<dyn Resolver + '_>)> {
        self.0
            .iter()
            .find(|(name, _)| *name == reference)
            .map(|(_, text)| {
                (
                    text.to_string(),
                    Box::new(TableResolver(self.0)) as Box<dyn Resolver>,
                )
            })
            .ok_or_else(|| ModelFileError::Schema {
                origin: reference.to_string(),
                message: "unknown bundled file".into(),
            })
    }
}

fn parse(origin: &str, text: &str) -> FileResult<ModelSpec> {
    serde_json::from_str(text).map_err(|e| ModelFileError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn to_matrix(
    origin: &str,
    what: &str,
    rows: &[Vec<f64>],
    n_cols_if_empty: usize,
) -> FileResult<Matrix> {
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, n_cols_if_empty));
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(ModelFileError::Schema {
            origin: origin.to_string(),
            message: format!("{what} has ragged rows"),
        });
    }
    Ok(Matrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

struct Builder<'a> {
    origin: &'a str,
    report: AssemblyReport,
}

impl Builder<'_> {
    fn model_err(&self, source: Error) -> ModelFileError {
        ModelFileError::Model {
            origin: self.origin.to_string(),
            source,
        }
    }

    fn schema(&self, message: impl Into<String>) -> ModelFileError {
        ModelFileError::Schema {
            origin: self.origin.to_string(),
            message: message.into(),
        }
    }

    fn build(&mut self, spec: &ModelSpec, resolver: &dyn Resolver) -> FileResult<StateSpace> {
        let forms = [
            spec.a.is_some() || spec.b.is_some() || spec.c.is_some() || spec.d.is_some(),
            spec.tf_blocks.is_some(),
            spec.tf_diag.is_some(),
            spec.identity.is_some(),
            spec.subsystems.is_some() || spec.steps.is_some() || spec.output.is_some(),
        ];
        match forms.iter().filter(|f| **f).count() {
            0 => {
                return Err(self.schema(
                    "no model given (expected A/B/C, tf_blocks, tf_diag, identity or a recipe)",
                ))
            }
            1 => {}
            _ => return Err(self.schema("more than one model form given")),
        }
        let model = if forms[0] {
            self.realization(spec)?
        } else if let Some(grid) = &spec.tf_blocks {
            let blocks = grid
                .iter()
                .map(|row| {
                    row.iter()
                        .map(TfBlock::realize)
                        .collect::<crate::Result<Vec<_>>>()
                })
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|e| self.model_err(e))?;
            StateSpace::mimo_from_blocks(&blocks).map_err(|e| self.model_err(e))?
        } else if let Some(diag) = &spec.tf_diag {
            let blocks = diag
                .iter()
                .map(TfBlock::realize)
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|e| self.model_err(e))?;
            StateSpace::block_diagonal(&blocks).map_err(|e| self.model_err(e))?
        } else if let Some(n) = spec.identity {
            StateSpace::identity(n).map_err(|e| self.model_err(e))?
        } else {
            self.recipe(spec, resolver)?
        };
        if spec.input_labels.is_some() || spec.output_labels.is_some() {
            model
                .with_labels(spec.input_labels.clone(), spec.output_labels.clone())
                .map_err(|e| self.model_err(e))
        } else {
            Ok(model)
        }
    }

    fn realization(&self, spec: &ModelSpec) -> FileResult<StateSpace> {
        let (Some(a), Some(b), Some(c)) = (&spec.a, &spec.b, &spec.c) else {
            return Err(self.schema("a realization needs A, B and C"));
        };
        let a = to_matrix(self.origin, "A", a, 0)?;
        let b = to_matrix(self.origin, "B", b, 0)?;
        let c = to_matrix(self.origin, "C", c, a.nrows())?;
        let d = match &spec.d {
            Some(d) => to_matrix(self.origin, "D", d, b.ncols())?,
            None => Matrix::zeros(c.nrows(), b.ncols()),
        };
        StateSpace::new(a, b, c, d).map_err(|e| self.model_err(e))
    }

    fn recipe(&mut self, spec: &ModelSpec, resolver: &dyn Resolver) -> FileResult<StateSpace> {
        let (Some(subs), Some(steps), Some(output)) = (&spec.subsystems, &spec.steps, &spec.output)
        else {
            return Err(self.schema("a recipe needs subsystems, steps and output"));
        };
        let mut env: BTreeMap<String, StateSpace> = BTreeMap::new();
        for (name, sub) in subs {
            let model = match sub {
                SubsystemSpec::Inline(inner) => self.build(inner, resolver)?,
                SubsystemSpec::File { file } => {
                    let (text, nested) = resolver.read(file)?;
                    let inner = parse(file, &text)?;
                    let mut child = Builder {
                        origin: file,
                        report: AssemblyReport::default(),
                    };
                    let m = child.build(&inner, nested.as_ref())?;
                    self.report.steps.extend(child.report.steps);
                    m
                }
            };
            self.report
                .subsystems
                .push((name.clone(), model.n_states()));
            env.insert(name.clone(), model);
        }

        for step in steps {
            let get = |n: &String| {
                env.get(n).ok_or_else(|| {
                    self.schema(format!(
                        "step '{}' refers to unknown model '{n}'",
                        step.name()
                    ))
                })
            };
            let mut well_posedness = None;
            let built = match step {
                Step::Series { chain, .. } => {
                    let (first, rest) = chain
                        .split_first()
                        .ok_or_else(|| self.schema("series needs at least one model"))?;
                    let mut acc = get(first)?.clone();
                    for n in rest {
                        acc = acc.series(get(n)?).map_err(|e| self.model_err(e))?;
                    }
                    acc
                }
                Step::Feedback {
                    plant,
                    feedback,
                    sign,
                    ..
                } => {
                    let (g, h) = (get(plant)?, get(feedback)?);
                    if h.n_inputs() == g.n_outputs() && h.n_outputs() == g.n_inputs() {
                        let n = g.n_inputs();
                        let m = Matrix::identity(n, n) - h.d() * g.d() * *sign;
                        well_posedness = Some(m.determinant().abs());
                    }
                    g.feedback(h, *sign).map_err(|e| self.model_err(e))?
                }
                Step::SelectOutputs { model, indices, .. } => get(model)?
                    .select_outputs(indices)
                    .map_err(|e| self.model_err(e))?,
                Step::SumAtOutput {
                    model, disturbance, ..
                } => get(model)?
                    .sum_at_output(get(disturbance)?)
                    .map_err(|e| self.model_err(e))?,
                Step::AppendInputs { model, count, .. } => get(model)?
                    .append_inputs(*count)
                    .map_err(|e| self.model_err(e))?,
                Step::BlockDiagonal { models, .. } => {
                    let ms = models
                        .iter()
                        .map(|n| get(n).cloned())
                        .collect::<FileResult<Vec<_>>>()?;
                    StateSpace::block_diagonal(&ms).map_err(|e| self.model_err(e))?
                }
            };
            self.report.steps.push(StepRecord {
                name: step.name().to_string(),
                op: step.op(),
                n_states: built.n_states(),
                n_inputs: built.n_inputs(),
                n_outputs: built.n_outputs(),
                well_posedness,
            });
            env.insert(step.name().to_string(), built);
        }
        env.remove(output)
            .ok_or_else(|| self.schema(format!("output '{output}' is not defined")))
    }
}

impl ModelFile {
    /// Loads a model file; `{"file": ..}` references resolve relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> FileResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(&path.display().to_string(), &text, &DirResolver { dir })
    }

    /// Parses and assembles `text`, resolving references with `resolver`.
    pub fn from_text(origin: &str, text: &str, resolver: &dyn Resolver) -> FileResult<Self> {
        let spec = parse(origin, text)?;
        let mut b = Builder {
            origin,
            report: AssemblyReport::default(),
        };
        let model = b.build(&spec, resolver)?;
        Ok(Self {
            origin: origin.to_string(),
            spec,
            model,
            report: b.report,
        })
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// The realization as a self-contained model file. Numbers are written with
/// shortest round-trip formatting, so reloading gives bit-identical matrices.
pub fn dump_model(sys: &StateSpace) -> String {
    let spec = ModelSpec {
        a: Some(rows(sys.a())),
        b: Some(rows(sys.b())),
        c: Some(rows(sys.c())),
        d: Some(rows(sys.d())),
        input_labels: sys.input_labels().map(<[String]>::to_vec),
        output_labels: sys.output_labels().map(<[String]>::to_vec),
        ..ModelSpec::default()
    };
    let mut s = serde_json::to_string_pretty(&spec).expect("plain data serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NoFiles;
    impl Resolver for NoFiles {
        fn read(&self, reference: &str) -> FileResult<(String, Box<dyn Resolver + '_>)> {
            Err(ModelFileError::Schema {
                origin: reference.into(),
                message: "no files".into(),
            })
        }
    }

    fn load(text: &str) -> FileResult<ModelFile> {
        ModelFile::from_text("test", text, &NoFiles)
    }

    #[test]
    fn realization_with_default_d() {
        let f = load(r#"{"A": [[-1]], "B": [[2]], "C": [[1], [3]]}"#).unwrap();
        assert_eq!(f.model.d(), &Matrix::zeros(2, 1));
        assert_eq!(f.model.c()[(1, 0)], 3.0);
    }

    #[test]
    fn tf_grid_matches_constructors() {
        let f = load(
            r#"{"tf_blocks": [[{"type": "second_order", "k": 1, "wn": 10, "zeta": 0.07},
                               {"type": "first_order", "k": 2, "wc": 5}]]}"#,
        )
        .unwrap();
        assert_eq!(
            (f.model.n_states(), f.model.n_inputs(), f.model.n_outputs()),
            (3, 2, 1)
        );
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = load("{\n  \"A\": [[1, ]]\n}").unwrap_err();
        match err {
            ModelFileError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_and_mixed_forms_rejected() {
        assert!(matches!(
            load(r#"{"A": [[1]], "Q": 1}"#),
            Err(ModelFileError::Parse { .. })
        ));
        let both = r#"{"A": [[-1]], "B": [[1]], "C": [[1]], "identity": 2}"#;
        assert!(matches!(load(both), Err(ModelFileError::Schema { .. })));
        assert!(matches!(load("{}"), Err(ModelFileError::Schema { .. })));
        assert!(matches!(
            load(r#"{"A": [[1, 2], [3]], "B": [[1]], "C": [[1]]}"#),
            Err(ModelFileError::Schema { .. })
        ));
    }

    #[test]
    fn recipe_records_steps() {
        let f = load(
            r#"{
              "subsystems": {
                "g": {"tf_diag": [{"type": "first_order", "k": 1, "wc": 2}]},
                "k": {"tf_diag": [{"type": "gain", "k": 3}]}
              },
              "steps": [
                {"op": "series", "name": "l", "chain": ["k", "g"]},
                {"op": "feedback", "name": "cl", "plant": "l", "feedback": "k", "sign": -1}
              ],
              "output": "cl"
            }"#,
        )
        .unwrap();
        assert_eq!(f.report.steps.len(), 2);
        assert_eq!(f.report.steps[1].well_posedness, Some(1.0));
        assert_eq!(f.report.subsystems, vec![("g".into(), 1), ("k".into(), 0)]);
        // 3·2/(s + 2) with loop gain 3: pole at −(2 + 18)
        assert!((f.model.a()[(0, 0)] + 20.0).abs() < 1e-12);
    }

    #[test]
    fn recipe_unknown_reference() {
        let err = load(
            r#"{"subsystems": {"a": {"identity": 1}},
                "steps": [{"op": "series", "name": "x", "chain": ["a", "b"]}],
                "output": "x"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown model 'b'"), "{err}");
    }

    #[test]
    fn ill_posed_loop_is_a_model_error() {
        let err = load(
            r#"{"subsystems": {"a": {"identity": 1}},
                "steps": [{"op": "feedback", "name": "x", "plant": "a", "feedback": "a", "sign": 1}],
                "output": "x"}"#,
        )
        .unwrap_err();
        assert!(matches!(err.model_error(), Some(Error::IllPosed { .. })));
    }

    #[test]
    fn dump_round_trips_exactly() {
        let sys = StateSpace::second_order(0.3, 7.1, 0.013)
            .unwrap()
            .series(&StateSpace::pd_controller(1.1, 0.7, 0.3).unwrap())
            .unwrap();
        let f = load(&dump_model(&sys)).unwrap();
        assert_eq!(f.model.a(), sys.a());
        assert_eq!(f.model.b(), sys.b());
        assert_eq!(f.model.c(), sys.c());
        assert_eq!(f.model.d(), sys.d());
    }
}
