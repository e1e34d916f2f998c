//! Flat `key = value` experiment files. Lists are comma separated, `#` starts
//! a comment line, and command-line overrides replace file entries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ldgap_core::estimators::LowDimBackend;
use ldgap_core::{ModelKind, ModelSpec};
use num_rational::Rational64;

use crate::error::{config_err, HarnessResult};

const KNOWN_KEYS: &[&str] = &[
    "model",
    "n",
    "p",
    "k",
    "l",
    "s",
    "delta2",
    "sigma2",
    "estimator",
    "backend",
    "restarts",
    "budget",
    "trials",
    "seed",
    "out",
    "format",
    "guard",
    "d",
    "sw",
    "empirical",
    "train",
    "test",
];

/// Key/value pairs with the line each came from (0 for overrides).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> HarnessResult<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let Some((k, v)) = t.split_once('=') else {
                return config_err(line, format!("expected key = value, got {t:?}"));
            };
            let key = k.trim().to_ascii_lowercase();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return config_err(line, format!("unknown key {key:?}"));
            }
            if entries.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                return config_err(line, format!("duplicate key {key:?}"));
            }
        }
        Ok(RawConfig { entries })
    }

    /// Flag override; flags win over the file.
    pub fn set(&mut self, key: &str, value: &str) -> HarnessResult<()> {
        let key = key.trim().to_ascii_lowercase();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return config_err(0, format!("unknown key {key:?}"));
        }
        self.entries.insert(key, (0, value.trim().to_string()));
        Ok(())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    fn one<T: FromStr>(&self, key: &str) -> HarnessResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .or_else(|e| config_err(self.line(key), format!("{key}: {e}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> HarnessResult<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .or_else(|e| config_err(self.line(key), format!("{key}: {s:?}: {e}")))
            })
            .collect::<HarnessResult<Vec<T>>>()?;
        if items.is_empty() {
            return config_err(self.line(key), format!("{key}: empty list"));
        }
        Ok(Some(items))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            _ => Err(format!("unknown format {s:?} (csv | json-lines)")),
        }
    }
}

/// Estimators reachable from the phase harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorName {
    ExactKmeans,
    Lloyd,
    ProjectHc,
    SparseTwoStep,
    SparseExhaustive,
    BikmeansExhaustive,
    BikmeansAlternating,
}

impl EstimatorName {
    pub const ALL: [EstimatorName; 7] = [
        EstimatorName::ExactKmeans,
        EstimatorName::Lloyd,
        EstimatorName::ProjectHc,
        EstimatorName::SparseTwoStep,
        EstimatorName::SparseExhaustive,
        EstimatorName::BikmeansExhaustive,
        EstimatorName::BikmeansAlternating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorName::ExactKmeans => "exact_kmeans",
            EstimatorName::Lloyd => "lloyd",
            EstimatorName::ProjectHc => "project_hc",
            EstimatorName::SparseTwoStep => "sparse_two_step",
            EstimatorName::SparseExhaustive => "sparse_exhaustive",
            EstimatorName::BikmeansExhaustive => "bikmeans_exhaustive",
            EstimatorName::BikmeansAlternating => "bikmeans_alternating",
        }
    }
}

impl FromStr for EstimatorName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EstimatorName::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<&str> = EstimatorName::ALL.iter().map(|e| e.name()).collect();
            format!("unknown estimator {s:?} (one of {})", names.join(", "))
        })
    }
}

/// Fully parsed experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ModelKind,
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    pub k: Vec<usize>,
    pub l: Vec<usize>,
    /// expected active columns (sparse only): ρ = s/p
    pub s: Vec<usize>,
    pub delta2: Vec<f64>,
    pub sigma2: f64,
    pub estimator: EstimatorName,
    pub backend: LowDimBackend,
    /// column budget for the sparse estimators; defaults to s
    pub budget: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub guard: u64,
    pub degrees: Vec<u32>,
    pub sw: bool,
    pub empirical: bool,
    pub train: usize,
    pub test: usize,
}

/// One grid point: the model spec plus the axis values it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub spec: ModelSpec,
    pub s: usize,
    pub delta2: f64,
}

impl ExperimentConfig {
    pub fn from_text(text: &str, overrides: &[(String, String)]) -> HarnessResult<Self> {
        let mut raw = RawConfig::parse(text)?;
        for (k, v) in overrides {
            raw.set(k, v)?;
        }
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> HarnessResult<Self> {
        let kind: ModelKind = match raw.one::<String>("model")? {
            Some(m) => m.parse().or_else(|e| config_err(raw.line("model"), format!("{e}")))?,
            None => return config_err(0, "missing key \"model\""),
        };
        let need = |key: &str| -> HarnessResult<Vec<usize>> {
            raw.list(key)?
                .map_or_else(|| config_err(0, format!("missing key {key:?}")), Ok)
        };
        let n = need("n")?;
        let p = need("p")?;
        let k = need("k")?;
        let l = match kind {
            ModelKind::Biclustering => need("l")?,
            _ => raw.list("l")?.unwrap_or_else(|| vec![1]),
        };
        let s = match kind {
            ModelKind::SparseClustering => need("s")?,
            _ => Vec::new(),
        };
        let delta2: Vec<f64> = raw.list("delta2")?.unwrap_or_else(|| vec![0.0]);
        if let Some(bad) = delta2.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return config_err(raw.line("delta2"), format!("delta2 must be finite and >= 0, got {bad}"));
        }
        let default_est = match kind {
            ModelKind::Clustering => EstimatorName::ProjectHc,
            ModelKind::SparseClustering => EstimatorName::SparseTwoStep,
            ModelKind::Biclustering => EstimatorName::BikmeansAlternating,
        };
        let estimator = match raw.one::<String>("estimator")? {
            Some(e) => e.parse().or_else(|m| config_err(raw.line("estimator"), m))?,
            None => default_est,
        };
        let restarts: usize = raw.one("restarts")?.unwrap_or(5);
        if restarts == 0 {
            return config_err(raw.line("restarts"), "restarts must be >= 1");
        }
        let backend = match raw.one::<String>("backend")?.as_deref() {
            None | Some("single_linkage") => LowDimBackend::SingleLinkage,
            Some("lloyd") => LowDimBackend::LloydMulti { restarts },
            Some(other) => {
                return config_err(
                    raw.line("backend"),
                    format!("unknown backend {other:?} (single_linkage | lloyd)"),
                )
            }
        };
        let trials: usize = raw.one("trials")?.unwrap_or(1);
        if trials == 0 {
            return config_err(raw.line("trials"), "trials must be >= 1");
        }
        let cfg = ExperimentConfig {
            kind,
            n,
            p,
            k,
            l,
            s,
            delta2,
            sigma2: raw.one("sigma2")?.unwrap_or(1.0),
            estimator,
            backend,
            budget: raw.one("budget")?,
            trials,
            seed: raw.one("seed")?.unwrap_or(0),
            out: raw.one::<String>("out")?.map(PathBuf::from),
            format: match raw.one::<String>("format")? {
                Some(f) => f.parse().or_else(|m| config_err(raw.line("format"), m))?,
                None => OutputFormat::Csv,
            },
            guard: raw.one("guard")?.unwrap_or(20_000_000),
            degrees: raw.list("d")?.unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
            sw: raw.one("sw")?.unwrap_or(false),
            empirical: raw.one("empirical")?.unwrap_or(false),
            train: raw.one("train")?.unwrap_or(20_000),
            test: raw.one("test")?.unwrap_or(20_000),
        };
        if !(cfg.sigma2.is_finite() && cfg.sigma2 > 0.0) {
            return config_err(raw.line("sigma2"), "sigma2 must be positive");
        }
        cfg.grid()?;
        Ok(cfg)
    }

    /// Grid in (n, p, K, L, s, Δ̄²) order, last axis fastest. Every point is validated.
    pub fn grid(&self) -> HarnessResult<Vec<GridPoint>> {
        let s_axis: Vec<Option<usize>> = if self.kind == ModelKind::SparseClustering {
            self.s.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for &n in &self.n {
            for &p in &self.p {
                for &k in &self.k {
                    for &l in &self.l {
                        for &s in &s_axis {
                            for &d2 in &self.delta2 {
                                let base = match self.kind {
                                    ModelKind::Clustering => ModelSpec::clustering(n, p, k),
                                    ModelKind::Biclustering => ModelSpec::biclustering(n, p, k, l),
                                    ModelKind::SparseClustering => {
                                        let s = s.expect("sparse grid has s");
                                        if s == 0 || s > p {
                                            return config_err(0, format!("need 1 <= s <= p, got s={s}, p={p}"));
                                        }
                                        ModelSpec::sparse(n, p, k, Rational64::new(s as i64, p as i64))
                                    }
                                };
                                let spec = base.with_sigma2(self.sigma2).with_delta_bar2(d2);
                                spec.validate()
                                    .or_else(|e| config_err(0, format!("grid point n={n} p={p} K={k}: {e}")))?;
                                out.push(GridPoint {
                                    index: out.len(),
                                    spec,
                                    s: s.unwrap_or(p),
                                    delta2: d2,
                                });
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return config_err(0, "empty grid");
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "# demo\nmodel = clustering\nn = 20, 40\np = 10\nk = 2\ndelta2 = 1, 4\ntrials = 3\nseed = 7\n";

    #[test]
    fn parses_and_expands_grid() {
        let cfg = ExperimentConfig::from_text(BASIC, &[]).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.estimator, EstimatorName::ProjectHc);
        let g = cfg.grid().unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!((g[1].spec.n, g[1].delta2), (20, 4.0));
        assert_eq!((g[2].spec.n, g[2].delta2), (40, 1.0));
        assert!((g[1].spec.delta_bar2() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_win() {
        let cfg = ExperimentConfig::from_text(BASIC, &[("seed".into(), "99".into())]).unwrap();
        assert_eq!(cfg.seed, 99);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentConfig::from_text("model = clustering\nn = x\n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RawConfig::parse("model = a\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(RawConfig::parse("n = 1\nn = 2\n").is_err());
        assert!(ExperimentConfig::from_text("model = clustering\nn = 4\np = 2\nk = 2\ntrials = 0\n", &[]).is_err());
    }

    #[test]
    fn sparse_needs_s() {
        let t = "model = sparse\nn = 10\np = 20\nk = 2\n";
        assert!(ExperimentConfig::from_text(t, &[]).is_err());
        let cfg = ExperimentConfig::from_text(&format!("{t}s = 5\n"), &[]).unwrap();
        let g = cfg.grid().unwrap();
        assert_eq!(g[0].spec.rho, Rational64::new(1, 4));
        assert!(ExperimentConfig::from_text(&format!("{t}s = 30\n"), &[]).is_err());
    }

    #[test]
    fn invalid_grid_point_rejected() {
        let t = "model = biclustering\nn = 10\np = 2\nk = 2\nl = 3\n";
        assert!(ExperimentConfig::from_text(t, &[]).is_err());
    }
}
