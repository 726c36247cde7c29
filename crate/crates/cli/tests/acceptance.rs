//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails.

use std::fmt::Write as _;
use std::fs;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use dissipa::analysis::*;
use dissipa::cubegrid::components;
use dissipa::dynamics::{builtin_lorenz, eqn1};
use dissipa::homology::{check_exact_sequence, GradedGroup};
use dissipa::{CubicalGrid, ParametrizedFlow};
use dissipa_cli::selftest;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Accumulates named checks; the criterion passes when all of them do.
#[derive(Default)]
struct Checks {
    ok: bool,
    failed: Vec<String>,
    info: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { ok: true, ..Default::default() }
    }

    fn check(&mut self, cond: bool, what: impl Into<String>) {
        if !cond {
            self.ok = false;
            self.failed.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.info.push(s.into());
    }

    fn finish(self) -> Outcome {
        let mut detail = self.info.join("; ");
        if !self.failed.is_empty() {
            let _ = write!(detail, " | failed: {}", self.failed.join("; "));
        }
        Outcome::new(self.ok, detail)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

struct RingRun {
    lambda: f64,
    seconds: f64,
    verdict: FamilyVerdict,
}

impl RingRun {
    fn report(&self) -> &LambdaReport {
        &self.verdict.per_lambda[0]
    }
}

fn ring_options() -> AnalysisOptions {
    let mut o = AnalysisOptions::default();
    o.bloat = Some(1);
    o.sharpen_taus = vec![50.0, 200.0, 800.0];
    o.polarity_levels = vec![1.0];
    o
}

/// The planar family at one parameter on [-6, 6]^2 with 512 cells per
/// axis, timed on its own.
fn ring_run(lambda: f64) -> Result<RingRun, String> {
    let g = Arc::new(CubicalGrid::cube(2, -6.0, 6.0, 512).map_err(|e| e.to_string())?);
    let t = Instant::now();
    let verdict = separator_pipeline(&eqn1(), &[lambda], &g, &ring_options()).map_err(|e| e.to_string())?;
    let seconds = t.elapsed().as_secs_f64();
    if verdict.per_lambda.len() != 1 {
        return Err(format!("no report at lambda = {lambda}"));
    }
    Ok(RingRun { lambda, seconds, verdict })
}

fn criterion1(runs: &[RingRun]) -> Outcome {
    let mut c = Checks::new();
    for r in runs {
        let l = r.lambda;
        let rep = r.report();
        let Some(k) = &rep.attractor else {
            c.check(false, format!("no continued attractor at {l}"));
            continue;
        };
        let kg = k.cells.grid();
        let origin = kg.cell_of_point(&[0.0, 0.0]).map(|o| k.cells.contains(o)).unwrap_or(false);
        let k_reach = k.cells.iter().map(|i| norm(&kg.cell_center(i))).fold(0.0, f64::max);
        c.check(origin && components(&k.cells).len() == 1 && k_reach < 0.5, format!("K at {l} is not an origin cluster"));
        let Some(sep) = &rep.separator else {
            c.check(false, format!("no separator at {l}"));
            continue;
        };
        let cells = &sep.record.cells;
        let h = cells.grid().max_cell_size();
        let radial = cells.iter().map(|i| (norm(&cells.grid().cell_center(i)) - 1.0 / l).abs()).fold(0.0, f64::max);
        let d = sep.record.diameter.unwrap_or(f64::NAN);
        let tol = 2.0 * h;
        c.check(!cells.is_empty() && radial <= 4.0 * h, format!("C at {l} is not a thin ring about r = {}", 1.0 / l));
        c.check((d - 2.0 / l).abs() <= tol, format!("diameter at {l} is {d:.4}, want {} +- {tol:.4}", 2.0 / l));
        c.check(r.seconds < 60.0, format!("lambda {l} took {:.1} s", r.seconds));
        c.note(format!(
            "lambda {l}: |K| {} (max radius {k_reach:.3}), |C| {} (max |r - 1/lambda| {radial:.4}), diameter {d:.4} vs {:.1} +- {tol:.4}, {:.1} s",
            k.cells.len(),
            cells.len(),
            2.0 / l,
            r.seconds
        ));
    }
    if runs.len() == 2 {
        let d: Vec<f64> = runs.iter().filter_map(|r| r.report().separator.as_ref()?.record.diameter).collect();
        c.check(d.len() == 2 && d[0] < d[1], "diameter does not shrink as lambda grows");
    }
    c.finish()
}

fn criterion2(runs: &[RingRun]) -> Outcome {
    let mut c = Checks::new();
    for r in runs {
        let l = r.lambda;
        let idx = r.report().separator.as_ref().and_then(|s| s.record.index.as_ref());
        let Some(idx) = idx else {
            c.check(false, format!("no separator index at {l}"));
            continue;
        };
        let fwd = idx.cohomological.same_as(&GradedGroup::zero(2));
        let rev = idx.reverse.as_ref().is_some_and(|r| r.is_trivial());
        let dual = idx.time_duality == Some(true);
        c.check(fwd, format!("forward index at {l} is {}", idx.cohomological));
        c.check(rev, format!("reverse index at {l} is not trivial"));
        c.check(dual, format!("time duality at {l}: {:?}", idx.time_duality));
        c.note(format!(
            "lambda {l}: CH = {}, reverse {}, duality {:?}",
            idx.cohomological,
            idx.reverse.as_ref().map(|r| r.cohomological.to_string()).unwrap_or_default(),
            idx.time_duality
        ));
    }
    c.finish()
}

fn criterion3(runs: &[RingRun]) -> Outcome {
    let mut c = Checks::new();
    for r in runs {
        let l = r.lambda;
        let Some(sig) = &r.report().signature else {
            c.check(false, format!("no signature at {l}"));
            continue;
        };
        let h = sig.homology.clone().unwrap_or_else(|| GradedGroup::zero(2));
        c.check(h.same_as(&GradedGroup::sphere(1, 2)), format!("H(C) at {l} is {h}"));
        c.check(sig.complement_components == 2 && sig.k_in_bounded_component, format!("separation at {l}"));
        for (side, s) in [("outside", &sig.outside), ("inside", &sig.inside)] {
            match s {
                Some(s) => {
                    c.check(s.samples >= 100 && s.ok(), format!("{side} at {l}: {}/{}", s.passed, s.samples));
                    c.check(s.entry_time_bound.is_some(), format!("{side} at {l}: no entry-time bound"));
                    c.note(format!(
                        "lambda {l} {side}: {}/{} within T = {:.1}",
                        s.passed,
                        s.samples,
                        s.entry_time_bound.unwrap_or(f64::NAN)
                    ));
                }
                None => c.check(false, format!("{side} at {l} not sampled")),
            }
        }
        c.note(format!("lambda {l}: H(C) = {h}, {} complement components", sig.complement_components));
    }
    c.finish()
}

fn criterion8(runs: &[RingRun]) -> Outcome {
    let mut c = Checks::new();
    let Some(r) = runs.iter().find(|r| r.lambda == 0.5) else {
        return Outcome::new(false, "no run at lambda = 0.5".into());
    };
    let rep = r.report();
    let k = rep.attractor.as_ref().and_then(|k| k.index.clone());
    let a = rep.ambient.as_ref().and_then(|a| a.index.clone());
    let s = rep.separator.as_ref().and_then(|s| s.record.index.clone());
    let (Some(k), Some(a), Some(s)) = (k, a, s) else {
        return Outcome::new(false, "an index of the triple is missing".into());
    };
    let v = check_exact_sequence(&k.cohomological, &a.cohomological, &s.cohomological);
    c.check(v.pass, format!("computed triple fails at degree {:?}", v.first_failing_degree));
    c.note(format!("CH(K) = {}, CH(A) = {}, CH(C) = {}: pass {}", k.cohomological, a.cohomological, s.cohomological, v.pass));
    let corrupted = check_exact_sequence(
        &GradedGroup::from_ranks(&[1, 0, 0]),
        &GradedGroup::from_ranks(&[2, 0, 0]),
        &GradedGroup::zero(2),
    );
    c.check(!corrupted.pass && corrupted.first_failing_degree == Some(0), "corrupted triple was accepted");
    // The computed triple with the total index doubled in degree 0.
    let mut ranks = a.cohomological.ranks();
    ranks[0] += 1;
    let doubled = check_exact_sequence(&k.cohomological, &GradedGroup::from_ranks(&ranks), &s.cohomological);
    c.check(!doubled.pass, "computed triple with a corrupted total index was accepted");
    c.note(format!("corrupted (Z, Z^2, 0) fails at {:?}", corrupted.first_failing_degree));
    c.finish()
}

fn lorenz_grid(flow: &ParametrizedFlow) -> Result<Arc<CubicalGrid>, String> {
    let (lo, hi) = flow.trapping_ellipsoid().ok_or("no trapping ellipsoid")?.bounding_box();
    let pad: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.05 * (b - a)).collect();
    let lo = lo.iter().zip(&pad).map(|(a, p)| a - p).collect();
    let hi = hi.iter().zip(&pad).map(|(b, p)| b + p).collect();
    CubicalGrid::new(lo, hi, vec![64; 3]).map(Arc::new).map_err(|e| e.to_string())
}

fn lorenz_options() -> AnalysisOptions {
    let mut o = AnalysisOptions::default();
    o.tau = 0.1;
    o.bloat = Some(1);
    o
}

fn lorenz_lambdas() -> Vec<f64> {
    (0..9).map(|i| i as f64 / 8.0).collect()
}

fn criterion4() -> Result<Outcome, String> {
    let mut c = Checks::new();
    let g = Arc::new(CubicalGrid::cube(2, -6.0, 6.0, 512).map_err(|e| e.to_string())?);
    let ga = find_global_attractor(&eqn1(), 0.0, &g, &ring_options()).map_err(|e| e.to_string())?;
    let ch = ga.record.index.as_ref().map(|i| i.cohomological.clone()).ok_or("no index")?;
    c.check(ch.same_as(&GradedGroup::point(2)), format!("planar family at 0: CH = {ch}"));
    c.note(format!("eqn1 at 0: {} cells, CH = {ch}", ga.record.cells.len()));

    let flow = builtin_lorenz();
    let g = lorenz_grid(&flow)?;
    let t = Instant::now();
    let ga = find_global_attractor(&flow, 1.0, &g, &lorenz_options()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let ch = ga.record.index.as_ref().map(|i| i.cohomological.clone()).ok_or("no index")?;
    c.check(ch.same_as(&GradedGroup::point(3)), format!("Lorenz r = 28: CH = {ch}"));
    c.check(secs < 300.0, format!("Lorenz took {secs:.1} s"));
    c.note(format!("Lorenz r = 28 on 64^3: {} cells, CH = {ch}, {secs:.1} s", ga.record.cells.len()));
    Ok(c.finish())
}

fn criterion5() -> Result<(Outcome, bool), String> {
    let mut c = Checks::new();
    let flow = builtin_lorenz();
    let g = lorenz_grid(&flow)?;
    let opts = lorenz_options();
    let lambdas = lorenz_lambdas();
    let ud = uniform_dissipativity(&flow, &lambdas, &g, &opts).map_err(|e| e.to_string())?;
    c.check(ud.verdict && ud.witness_box.is_some(), format!("not uniformly dissipative: {:?}", ud.offending));
    c.note(format!("one box traps r = 20..28 ({} points): {}", lambdas.len(), ud.verdict));
    let seed = find_global_attractor(&flow, 0.5, &g, &opts).map_err(|e| e.to_string())?.record;
    match track_continuation(&flow, &lambdas, &seed, &opts) {
        Ok(cont) => {
            c.check(cont.index_constant && cont.records.len() == lambdas.len(), "index changes along the continuation");
            let sizes: Vec<usize> = cont.records.iter().map(|r| r.cells.len()).collect();
            c.note(format!("continuation from r = 24: constant index {}, cells {sizes:?}", cont.index_constant));
        }
        Err(e) => c.check(false, format!("continuation: {e}")),
    }
    let verdict = ud.verdict;
    Ok((c.finish(), verdict))
}

fn criterion6(lorenz_ud: Option<bool>) -> Result<Outcome, String> {
    let mut c = Checks::new();
    let flow = eqn1();
    let g = Arc::new(CubicalGrid::cube(2, -20.0, 20.0, 256).map_err(|e| e.to_string())?);
    let mut opts = AnalysisOptions::default();
    opts.bloat = Some(1);
    let lambdas = [0.0625, 0.125, 0.25];
    let polar = polarity_test(&flow, &lambdas, &[3.0, 6.0, 9.0], &g, &opts).map_err(|e| e.to_string())?;
    c.check(polar.verdict, format!("eqn1 not polar: missing {:?}", polar.missing));
    c.check(polar.witnesses.iter().all(PolarityWitness::tail_exceeds_level), "a witness tail drops below its level");
    let ud = uniform_dissipativity(&flow, &lambdas, &g, &opts).map_err(|e| e.to_string())?;
    let track = track_global_attractors(&flow, &[0.0, 0.0625, 0.125, 0.25], &g, &opts).map_err(|e| e.to_string())?;
    let mut modes = Vec::new();
    if !ud.verdict {
        modes.push(format!("box not trapping at {:?}", ud.offending.iter().map(|o| o.0).collect::<Vec<_>>()));
    }
    if !track.unbroken {
        modes.push(format!(
            "global attractors break at {} ({})",
            track.broken_at.unwrap_or(f64::NAN),
            track.reason.as_deref().unwrap_or("")
        ));
    }
    c.check(!modes.is_empty(), "neither failure mode shows on a polar family");
    c.check(!(ud.verdict && track.unbroken && polar.verdict), "eqn1 is both uniformly dissipative and polar");
    c.note(format!("eqn1 polar {} with lambda_hat {:?}; failure: {}", polar.verdict, polar.lambda_hat, modes.join(" and ")));

    let lorenz = builtin_lorenz();
    let lg = lorenz_grid(&lorenz)?;
    let lp = polarity_test(&lorenz, &lorenz_lambdas(), &[30.0, 60.0], &lg, &lorenz_options()).map_err(|e| e.to_string())?;
    match lorenz_ud {
        Some(ud) => {
            c.check(!(ud && lp.verdict), "Lorenz is both uniformly dissipative and polar");
            c.note(format!("Lorenz uniformly dissipative {ud}, polar {}", lp.verdict));
        }
        None => c.check(false, "Lorenz dissipativity verdict unavailable"),
    }
    Ok(c.finish())
}

fn criterion7() -> Outcome {
    let mut c = Checks::new();
    for r in selftest::run() {
        let secs = r.elapsed.as_secs_f64();
        c.check(r.passed(), format!("{}: {:?}", r.name, r.failures.first()));
        c.check(secs < 30.0, format!("{} took {secs:.1} s", r.name));
        c.note(format!("{} ({} cases) {:.2} s", r.name, r.cases, secs));
    }
    c.finish()
}

const SWEEP_CONFIG: &str = r#"
system = "eqn1"

[grid]
lo = [-3.0, -3.0]
hi = [3.0, 3.0]
divisions = 128

[lambda]
values = [0.4, 0.5]

[options]
bloat = 1
sharpen_taus = [50.0]
polarity_levels = [1.0]
"#;

fn criterion9() -> Result<Outcome, String> {
    let mut c = Checks::new();
    let dir = std::env::temp_dir().join(format!("dissipa-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cfg = dir.join("sweep.toml");
    fs::write(&cfg, SWEEP_CONFIG).map_err(|e| e.to_string())?;
    let mut docs = Vec::new();
    for threads in ["1", "4", "1"] {
        let out = dir.join(format!("run{}", docs.len()));
        let status = Command::new(env!("CARGO_BIN_EXE_dissipa"))
            .args(["--quiet", "--threads", threads, "sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        c.check(status.success(), format!("sweep with {threads} threads exited {status}"));
        docs.push(fs::read(out.join("verdict.json")).unwrap_or_default());
    }
    c.check(!docs[0].is_empty() && docs.iter().all(|d| *d == docs[0]), "verdict.json differs between runs");
    c.note(format!("3 runs (threads 1, 4, 1), verdict.json {} bytes, identical {}", docs[0].len(), docs.iter().all(|d| *d == docs[0])));
    let _ = fs::remove_dir_all(&dir);
    Ok(c.finish())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut lines: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut emit = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        lines.push((n, name, o));
    };
    let flat = |r: Result<Outcome, String>| r.unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));

    let runs: Vec<Result<RingRun, String>> = [0.5, 0.25].into_iter().map(ring_run).collect();
    let errors: Vec<String> = runs.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    let runs: Vec<RingRun> = runs.into_iter().filter_map(Result::ok).collect();
    let ring = |f: fn(&[RingRun]) -> Outcome| {
        if errors.is_empty() {
            f(&runs)
        } else {
            Outcome::new(false, format!("error: {}", errors.join("; ")))
        }
    };
    emit(1, "attractor cluster and ring of diameter 2/lambda", ring(criterion1));
    emit(2, "separator index trivial both ways", ring(criterion2));
    emit(3, "separator is a circle that attracts outside and repels inside", ring(criterion3));
    emit(4, "global attractor index is a point", flat(criterion4()));
    let (c5, lorenz_ud) = match criterion5() {
        Ok((o, ud)) => (o, Some(ud)),
        Err(e) => (Outcome::new(false, format!("error: {e}")), None),
    };
    emit(5, "Lorenz family uniformly dissipative with constant index", c5);
    emit(6, "polar family shows a dissipativity failure", flat(criterion6(lorenz_ud)));
    emit(7, "oracle suites", criterion7());
    emit(8, "attractor-repeller exact sequence", ring(criterion8));
    emit(9, "sweep output independent of thread count", flat(criterion9()));

    let failed: Vec<u32> = lines.iter().filter(|l| !l.2.pass).map(|l| l.0).collect();
    println!(
        "acceptance: {}/{} criteria pass in {:.1} s",
        lines.len() - failed.len(),
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing: {failed:?}");
        ExitCode::FAILURE
    }
}
