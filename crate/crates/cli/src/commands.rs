use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dissipa::analysis::{report, separator_pipeline, FamilyVerdict, InvariantSetRecord};
use dissipa::CellSet;

use crate::config::Run;
use crate::Failure;

/// What a command produced.
pub struct Outputs {
    pub verdict: FamilyVerdict,
    pub files: Vec<PathBuf>,
}

/// Global attractor and index at one parameter; above the bottom of the
/// range also the continued attractor and the separator around it.
pub fn analyze(run: &Run) -> Result<Outputs, Failure> {
    if run.lambdas.len() != 1 {
        return Err(Failure::Config(format!("analyze needs exactly one lambda, got {}", run.lambdas.len())));
    }
    let verdict = separator_pipeline(&run.flow, &run.lambdas, &run.grid, &run.opts)?;
    let files = write_outputs(run, &verdict, false)?;
    Ok(Outputs { verdict, files })
}

/// The full family verdict over the configured parameters.
pub fn sweep(run: &Run) -> Result<Outputs, Failure> {
    if run.lambdas.len() < 2 {
        return Err(Failure::Config(format!("sweep needs at least two lambda values, got {}", run.lambdas.len())));
    }
    let verdict = separator_pipeline(&run.flow, &run.lambdas, &run.grid, &run.opts)?;
    let files = write_outputs(run, &verdict, true)?;
    Ok(Outputs { verdict, files })
}

fn put(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn cells_plot(layers: &[(Option<&CellSet>, &str)]) -> Result<Option<String>, Failure> {
    let present: Vec<(&CellSet, &str)> = layers.iter().filter_map(|(s, c)| s.filter(|s| !s.is_empty()).map(|s| (s, *c))).collect();
    let Some((first, _)) = present.first() else { return Ok(None) };
    // Refined continuations live on a finer grid than the box attractor.
    let same: Vec<(&CellSet, &str)> = present.iter().copied().filter(|(s, _)| s.same_grid(first)).collect();
    Ok(Some(report::cells_svg(&same)?))
}

fn write_outputs(run: &Run, v: &FamilyVerdict, diameter_plot: bool) -> Result<Vec<PathBuf>, Failure> {
    let dir = &run.out_dir;
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    put(dir, "verdict.json", &report::to_json(v)?, &mut files)?;
    put(dir, "sweep.csv", &report::to_csv(v), &mut files)?;
    if !run.svg {
        return Ok(files);
    }
    if diameter_plot {
        put(dir, "diameter.svg", &report::diameter_svg(v), &mut files)?;
    }
    if run.grid.dim() == 2 {
        if let Some(seed) = &v.seed {
            if let Some(svg) = cells_plot(&[(Some(&seed.cells), "crimson")])? {
                put(dir, &format!("cells_lambda_{}.svg", seed.lambda), &svg, &mut files)?;
            }
        }
        for r in &v.per_lambda {
            let layers = [
                (r.ambient.as_ref().map(|a| &a.cells), "lightgray"),
                (r.separator.as_ref().map(|s| &s.record.cells), "steelblue"),
                (r.attractor.as_ref().map(|k| &k.cells), "crimson"),
            ];
            if let Some(svg) = cells_plot(&layers)? {
                put(dir, &format!("cells_lambda_{}.svg", r.lambda), &svg, &mut files)?;
            }
        }
    }
    Ok(files)
}

fn record_line(label: &str, r: &InvariantSetRecord) -> String {
    let mut s = format!("{label} at lambda = {}: {} cells", r.lambda, r.cells.len());
    if let Some(d) = r.diameter {
        let _ = write!(s, ", diameter {d:.4}");
    }
    if let Some(i) = &r.index {
        let _ = write!(s, ", CH = {}", i.cohomological);
    }
    s
}

/// Human-readable digest of a verdict.
pub fn summary(v: &FamilyVerdict) -> String {
    let mut out = String::new();
    let divs: Vec<String> = v.grid.divisions.iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "{}: {} parameter(s) on a {} grid", v.system, v.lambda_grid.len(), divs.join("x"));
    if let Some(seed) = &v.seed {
        let _ = writeln!(out, "{}", record_line("global attractor", seed));
    }
    for r in &v.per_lambda {
        if let Some(k) = &r.attractor {
            let _ = writeln!(out, "{}", record_line("continued attractor", k));
        }
        if let Some(s) = &r.separator {
            let _ = writeln!(out, "{}", record_line("separator", &s.record));
        }
        if let Some(sig) = &r.signature {
            let _ = writeln!(
                out,
                "  separates {}, sphere homology {}, attracts outside and repels inside {}",
                sig.separates, sig.sphere_homology, sig.attracts_outside_repels_inside
            );
        }
        for n in &r.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    let ud = &v.uniform_dissipative;
    match &ud.failure_mode {
        Some(m) => {
            let _ = writeln!(out, "uniformly dissipative: false ({m})");
        }
        None => {
            let _ = writeln!(out, "uniformly dissipative: {}", ud.verdict);
        }
    }
    let _ = writeln!(out, "polar: {}", v.polar.verdict);
    let _ = writeln!(out, "coercive: {}", v.coercive.verdict);
    match &v.separator_analysis.reason {
        Some(r) => {
            let _ = writeln!(out, "separator analysis: {r}");
        }
        None => {
            let s = &v.separator_analysis;
            let _ = writeln!(
                out,
                "separator analysis: nonempty and isolated {}, index trivial {}, exact sequence {}",
                s.nonempty_and_isolated, s.index_trivial, s.exact_sequence
            );
        }
    }
    for n in &v.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}
