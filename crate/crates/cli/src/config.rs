//! Run configuration: a TOML file with a top-level `system` key and
//! `[lorenz]`, `[grid]`, `[lambda]`, `[options]`, `[output]` sections.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dissipa::analysis::AnalysisOptions;
use dissipa::dynamics::{builtin_by_name, circumradius, load_vector_field, lorenz, LorenzParams};
use dissipa::{CubicalGrid, EscapePolicy, ParametrizedFlow};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in family name or path to an expression file, relative to the
    /// config file.
    pub system: String,
    pub lorenz: Option<LorenzSection>,
    pub grid: GridSection,
    pub lambda: LambdaSection,
    #[serde(default)]
    pub options: OptionsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzSection {
    pub sigma: Option<f64>,
    pub b: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Divisions {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub divisions: Divisions,
    /// Use the bounding box of the family's trapping ellipsoid, widened by
    /// this fraction of its side on each end, instead of `lo`/`hi`.
    pub fit_trapping_ellipsoid: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    pub values: Option<Vec<f64>>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    pub tau: Option<f64>,
    pub samples_per_axis: Option<usize>,
    pub bloat: Option<usize>,
    pub tol: Option<f64>,
    pub escape_radius: Option<f64>,
    pub collar: Option<usize>,
    pub pair_collar: Option<usize>,
    pub sharpen_taus: Option<Vec<f64>>,
    pub sharpen_collar: Option<usize>,
    pub sharpen_tol: Option<f64>,
    pub sharpen_final_samples: Option<usize>,
    pub attraction_samples: Option<usize>,
    pub attraction_time: Option<f64>,
    pub attraction_collar: Option<usize>,
    pub polarity_levels: Option<Vec<f64>>,
    pub polarity_time: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub svg: Option<bool>,
}

/// A validated configuration, ready to run.
pub struct Run {
    pub flow: ParametrizedFlow,
    pub grid: Arc<CubicalGrid>,
    pub lambdas: Vec<f64>,
    pub opts: AnalysisOptions,
    pub out_dir: PathBuf,
    pub svg: bool,
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn positive(name: &str, v: Option<f64>) -> Result<(), Failure> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(bad(format!("options.{name} must be positive and finite, got {x}"))),
        _ => Ok(()),
    }
}

fn at_least_one(name: &str, v: Option<usize>) -> Result<(), Failure> {
    match v {
        Some(0) => Err(bad(format!("options.{name} must be at least 1"))),
        _ => Ok(()),
    }
}

pub fn parse(text: &str) -> Result<RunConfig, Failure> {
    toml::from_str(text).map_err(|e| bad(format!("config: {e}")))
}

pub fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl RunConfig {
    fn flow(&self, base: &Path) -> Result<ParametrizedFlow, Failure> {
        if self.system == "lorenz" {
            let d = LorenzParams::default();
            let p = match &self.lorenz {
                Some(s) => LorenzParams {
                    sigma: s.sigma.unwrap_or(d.sigma),
                    b: s.b.unwrap_or(d.b),
                    r_min: s.r_min.unwrap_or(d.r_min),
                    r_max: s.r_max.unwrap_or(d.r_max),
                },
                None => d,
            };
            return lorenz(p).map_err(|e| bad(format!("lorenz: {e}")));
        }
        if self.lorenz.is_some() {
            return Err(bad("[lorenz] only applies to system = \"lorenz\""));
        }
        if let Some(f) = builtin_by_name(&self.system) {
            return Ok(f);
        }
        let path = base.join(&self.system);
        if !path.is_file() {
            return Err(bad(format!("system '{}' is neither a built-in family nor a readable file", self.system)));
        }
        load_vector_field(&path).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    fn grid(&self, flow: &ParametrizedFlow) -> Result<Arc<CubicalGrid>, Failure> {
        let g = &self.grid;
        let dim = flow.dim();
        let (lo, hi) = match (g.fit_trapping_ellipsoid, &g.lo, &g.hi) {
            (Some(pad), None, None) => {
                if !(pad.is_finite() && pad >= 0.0) {
                    return Err(bad(format!("grid.fit_trapping_ellipsoid must be a nonnegative fraction, got {pad}")));
                }
                let e = flow
                    .trapping_ellipsoid()
                    .ok_or_else(|| bad(format!("system '{}' has no trapping ellipsoid to fit", self.system)))?;
                let (lo, hi) = e.bounding_box();
                let w: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| pad * (b - a)).collect();
                (lo.iter().zip(&w).map(|(a, p)| a - p).collect(), hi.iter().zip(&w).map(|(b, p)| b + p).collect())
            }
            (None, Some(lo), Some(hi)) => (lo.clone(), hi.clone()),
            (Some(_), _, _) => return Err(bad("grid: give either lo/hi or fit_trapping_ellipsoid, not both")),
            _ => return Err(bad("grid: lo and hi are required")),
        };
        if lo.len() != dim || hi.len() != dim {
            return Err(bad(format!("grid: lo and hi need {dim} entries for system '{}'", self.system)));
        }
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite()) {
                return Err(bad(format!("grid: axis {a} has a non-finite bound")));
            }
            if lo[a] >= hi[a] {
                return Err(bad(format!("grid: axis {a} has lo = {} not below hi = {}", lo[a], hi[a])));
            }
        }
        let divisions = match &g.divisions {
            Divisions::Uniform(n) => vec![*n; dim],
            Divisions::PerAxis(v) => v.clone(),
        };
        if divisions.len() != dim {
            return Err(bad(format!("grid: divisions need {dim} entries")));
        }
        if let Some(a) = divisions.iter().position(|&n| n == 0) {
            return Err(bad(format!("grid: axis {a} has zero divisions")));
        }
        CubicalGrid::new(lo, hi, divisions).map(Arc::new).map_err(|e| bad(format!("grid: {e}")))
    }

    fn lambdas(&self, flow: &ParametrizedFlow) -> Result<Vec<f64>, Failure> {
        let l = &self.lambda;
        let values = match (&l.values, l.min, l.max, l.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(min), Some(max), Some(count)) => {
                if count == 0 || (count == 1 && min != max) || min > max {
                    return Err(bad(format!("lambda: cannot space {count} points from {min} to {max}")));
                }
                if count == 1 {
                    vec![min]
                } else {
                    (0..count).map(|i| min + (max - min) * i as f64 / (count - 1) as f64).collect()
                }
            }
            _ => return Err(bad("lambda: give either values or min, max and count")),
        };
        if let Some(v) = values.iter().find(|v| !flow.contains_param(**v)) {
            let (a, b) = flow.param_range();
            return Err(bad(format!("lambda: {v} lies outside the parameter range [{a}, {b}]")));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() != values.len() {
            return Err(bad("lambda: duplicate values"));
        }
        Ok(sorted)
    }

    fn options(&self, grid: &CubicalGrid) -> Result<AnalysisOptions, Failure> {
        let o = &self.options;
        for (name, v) in [
            ("tau", o.tau),
            ("tol", o.tol),
            ("escape_radius", o.escape_radius),
            ("sharpen_tol", o.sharpen_tol),
            ("attraction_time", o.attraction_time),
            ("polarity_time", o.polarity_time),
        ] {
            positive(name, v)?;
        }
        for (name, v) in [
            ("samples_per_axis", o.samples_per_axis),
            ("collar", o.collar),
            ("pair_collar", o.pair_collar),
            ("sharpen_final_samples", o.sharpen_final_samples),
            ("attraction_samples", o.attraction_samples),
            ("attraction_collar", o.attraction_collar),
        ] {
            at_least_one(name, v)?;
        }
        if let Some(taus) = &o.sharpen_taus {
            for &t in taus {
                positive("sharpen_taus", Some(t))?;
            }
        }
        if let Some(levels) = &o.polarity_levels {
            for &l in levels {
                positive("polarity_levels", Some(l))?;
            }
            if levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("options.polarity_levels must be strictly increasing"));
            }
            let r = circumradius(grid.lo(), grid.hi());
            if let Some(l) = levels.iter().find(|&&l| l >= r) {
                return Err(bad(format!("options.polarity_levels: {l} is not below the box circumradius {r}")));
            }
        }
        if let Some(r) = o.escape_radius {
            EscapePolicy::new(r)
                .and_then(|p| p.validate_for_box(grid.lo(), grid.hi()))
                .map_err(|e| bad(format!("options.escape_radius: {e}")))?;
        }
        let d = AnalysisOptions::default();
        Ok(AnalysisOptions {
            tau: o.tau.unwrap_or(d.tau),
            samples_per_axis: o.samples_per_axis.unwrap_or(d.samples_per_axis),
            bloat: o.bloat.or(d.bloat),
            tol: o.tol.unwrap_or(d.tol),
            escape_radius: o.escape_radius.or(d.escape_radius),
            collar: o.collar.unwrap_or(d.collar),
            pair_collar: o.pair_collar.unwrap_or(d.pair_collar),
            sharpen_taus: o.sharpen_taus.clone().unwrap_or(d.sharpen_taus),
            sharpen_collar: o.sharpen_collar.unwrap_or(d.sharpen_collar),
            sharpen_tol: o.sharpen_tol.unwrap_or(d.sharpen_tol),
            sharpen_final_samples: o.sharpen_final_samples.unwrap_or(d.sharpen_final_samples),
            attraction_samples: o.attraction_samples.unwrap_or(d.attraction_samples),
            attraction_time: o.attraction_time.unwrap_or(d.attraction_time),
            attraction_collar: o.attraction_collar.unwrap_or(d.attraction_collar),
            polarity_levels: o.polarity_levels.clone().unwrap_or(d.polarity_levels),
            polarity_time: o.polarity_time.unwrap_or(d.polarity_time),
        })
    }

    /// Resolves the system, grid, parameters and options. `base` is the
    /// directory that relative paths in the config refer to; `out` overrides
    /// the configured output directory.
    pub fn resolve(&self, base: &Path, out: Option<&Path>) -> Result<Run, Failure> {
        let flow = self.flow(base)?;
        let grid = self.grid(&flow)?;
        let lambdas = self.lambdas(&flow)?;
        let opts = self.options(&grid)?;
        let out_dir = match (out, &self.output.dir) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(d)) => base.join(d),
            (None, None) => PathBuf::from("out"),
        };
        Ok(Run { flow, grid, lambdas, opts, out_dir, svg: self.output.svg.unwrap_or(true) })
    }
}
