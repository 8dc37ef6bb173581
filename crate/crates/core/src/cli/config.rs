//! Problem files: TOML with an explicit `schema_version`, one table per mode.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::fredholm::KernelSpec;
use crate::instances::RealDistance;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub eps_level: Option<usize>,
    pub max_iter: Option<usize>,
    pub solve: Option<SolveSection>,
    pub multiple: Option<MultipleSection>,
    pub fredholm: Option<FredholmSection>,
    pub verify: Option<VerifySection>,
    pub probe: Option<ProbeSection>,
}

/// `λ` as written in a problem file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LambdaSpec {
    Scalar { q: f64 },
    Matrix { values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSpec {
    #[default]
    General,
    Orbital,
}

/// Affine map `x ↦ A·x + b` on `ℝᵈ`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    /// Defaults to `|a|` for `d = 1` and the entrywise `|A|` otherwise.
    pub lambda: Option<LambdaSpec>,
    #[serde(default)]
    pub variant: VariantSpec,
    /// Scalar distance; only `d = 1` accepts a non-metric choice.
    #[serde(default = "absolute")]
    pub distance: RealDistance,
    /// Extra seeded starts for the uniqueness check.
    #[serde(default)]
    pub starts: usize,
    #[serde(default = "default_span")]
    pub start_span: f64,
}

/// `f(x₀, …, x_{m−1}) = Σ cⱼ·xⱼ + constant` on `ℝ`, lifted by `sigma`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipleSection {
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
    /// 0-based index maps, one per coordinate.
    pub sigma: Vec<Vec<usize>>,
    /// 0-based coordinates ordered forwards.
    pub p: Vec<usize>,
    pub x0: Vec<f64>,
    /// Defaults to `L[i][k] = Σ_{j: σᵢ(j) = k} |cⱼ|`.
    pub lambda: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub starts: usize,
    #[serde(default = "default_span")]
    pub start_span: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RhsSpec {
    Constant {
        value: f64,
    },
    /// `Σ cₖ tᵏ`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// Values at the nodes.
    Table {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureTable {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub measure: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FredholmSection {
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Replaces the midpoint rule.
    pub quadrature: Option<QuadratureTable>,
    pub kernel: KernelSpec,
    pub rhs: RhsSpec,
    pub series_terms: Option<usize>,
    #[serde(default)]
    pub starts: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntourageSpec {
    pub size: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub instances: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_grid_nodes")]
    pub grid_nodes: usize,
    #[serde(default = "absolute")]
    pub distance: RealDistance,
    /// Partition chain for the `entourage` instance.
    pub entourage: Option<EntourageSpec>,
    /// Base file for the `entourage` instance, relative to the problem file.
    pub entourage_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub distance: RealDistance,
    #[serde(default)]
    pub subdivisions: Vec<usize>,
    #[serde(default)]
    pub random_paths: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_probe_span")]
    pub span: f64,
    pub chain_level: usize,
    #[serde(default = "one_level")]
    pub endpoint_level: usize,
}

fn absolute() -> RealDistance {
    RealDistance::Absolute
}
fn default_span() -> f64 {
    10.0
}
fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_nodes() -> usize {
    64
}
fn default_samples() -> usize {
    1000
}
fn default_dim() -> usize {
    3
}
fn default_grid_nodes() -> usize {
    8
}
fn default_max_steps() -> usize {
    200
}
fn default_probe_span() -> f64 {
    1.0
}
fn one_level() -> usize {
    1
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            CliError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema {
                found: file.schema_version,
            });
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_positions() {
        let err = ProblemFile::parse("schema_version = 1\n[solve]\na = [[0.5]] !\nb = [1.0]\n")
            .unwrap_err();
        let CliError::Parse { line, .. } = err else {
            panic!("{err:?}")
        };
        assert_eq!(line, 3);
        let err = ProblemFile::parse("schema_version = 1\nbogus = 3\n").unwrap_err();
        assert!(
            matches!(
                err,
                CliError::Parse {
                    line: 2,
                    column: 1,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn schema_version_is_required_and_checked() {
        assert!(matches!(
            ProblemFile::parse("[solve]\n"),
            Err(CliError::Parse { .. })
        ));
        assert_eq!(
            ProblemFile::parse("schema_version = 2\n").unwrap_err(),
            CliError::Schema { found: 2 }
        );
    }

    #[test]
    fn sections_parse() {
        let text = r#"
schema_version = 1
[solve]
a = [[0.5]]
b = [1.0]
x0 = [0.0]
lambda = { kind = "scalar", q = 0.5 }
[fredholm]
kernel = { kind = "constant", c = 0.5 }
rhs = { kind = "constant", value = 1.0 }
"#;
        let f = ProblemFile::parse(text).unwrap();
        let s = f.solve.unwrap();
        assert_eq!(s.lambda, Some(LambdaSpec::Scalar { q: 0.5 }));
        assert_eq!(s.variant, VariantSpec::General);
        let fr = f.fredholm.unwrap();
        assert_eq!(fr.nodes, 64);
        assert_eq!(fr.kernel, KernelSpec::Constant { c: 0.5 });
    }
}
