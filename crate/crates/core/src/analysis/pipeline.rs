use std::sync::Arc;

use serde::Serialize;

use super::attractor::{attractor_on, box_attractor, UniformDissipativity};
use super::continuation::{global_continues, track_continuation, Continuation, GlobalTrack};
use super::polarity::{assemble, witnesses_at, PolarityWitness};
use super::separator::{coercivity_signature, extract_separator_with, CoercivitySignature, Separator};
use super::{AnalysisOptions, InvariantSetRecord};
use crate::cubegrid::{invariant_part, outer_approximation, CubicalGrid};
use crate::dynamics::{circumradius, ParametrizedFlow};
use crate::error::{Error, Result};
use crate::homology::{check_exact_sequence, ExactnessVerdict};

pub const SCHEMA: &str = "dissipa.family_verdict";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub divisions: Vec<usize>,
    pub cell_sizes: Vec<f64>,
}

impl GridSummary {
    pub fn of(g: &CubicalGrid) -> Self {
        Self { lo: g.lo().to_vec(), hi: g.hi().to_vec(), divisions: g.divisions().to_vec(), cell_sizes: g.cell_sizes() }
    }
}

/// Everything computed at one parameter above the bottom of the range.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaReport {
    pub lambda: f64,
    /// Continued attractor `K`.
    pub attractor: Option<InvariantSetRecord>,
    /// Global attractor `A` of the box.
    pub ambient: Option<InvariantSetRecord>,
    pub separator: Option<Separator>,
    pub index_trivial: Option<bool>,
    pub time_duality: Option<bool>,
    pub signature: Option<CoercivitySignature>,
    pub exact_sequence: Option<ExactnessVerdict>,
    /// Witnesses exist at every polarity level.
    pub polar_here: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipativityVerdict {
    pub verdict: bool,
    pub box_trapping: UniformDissipativity,
    pub global_attractors: GlobalTrack,
    /// Which of the two conditions failed, when one did.
    pub failure_mode: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarVerdict {
    pub verdict: bool,
    pub levels: Vec<f64>,
    pub lambda_hat: Vec<(f64, Option<f64>)>,
    pub missing: Vec<(f64, f64)>,
    pub witnesses: Vec<PolarityWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatorAnalysis {
    pub applicable: bool,
    pub reason: Option<String>,
    /// Largest sampled parameter up to which every separator is nonempty
    /// and isolated.
    pub lambda_hat: Option<f64>,
    pub nonempty_and_isolated: bool,
    pub index_trivial: bool,
    pub exact_sequence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoerciveVerdict {
    pub verdict: bool,
    pub signatures_valid: bool,
    /// Separator diameters strictly decrease as the parameter grows.
    pub diameters_decreasing: bool,
    pub diameters: Vec<(f64, f64)>,
}

/// The family-level outcome, serialized as one JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyVerdict {
    pub schema: &'static str,
    pub schema_version: u32,
    pub system: String,
    pub dim: usize,
    pub grid: GridSummary,
    pub options: AnalysisOptions,
    pub lambda_grid: Vec<f64>,
    pub seed: Option<InvariantSetRecord>,
    pub continuation: Option<Continuation>,
    pub uniform_dissipative: DissipativityVerdict,
    pub polar: PolarVerdict,
    pub separator_analysis: SeparatorAnalysis,
    pub coercive: CoerciveVerdict,
    pub per_lambda: Vec<LambdaReport>,
    pub notes: Vec<String>,
}

fn strictly_decreasing(v: &[(f64, f64)]) -> bool {
    v.windows(2).all(|w| w[1].1 < w[0].1)
}

/// Runs every analysis over the sampled parameters: dissipativity of the
/// box, continuation of the global attractors and of the bottom attractor,
/// polarity, and, for polar families, the separator with its index, exact
/// sequence and coercivity signature.
pub fn separator_pipeline(
    flow: &ParametrizedFlow,
    lambdas: &[f64],
    grid: &Arc<CubicalGrid>,
    opts: &AnalysisOptions,
) -> Result<FamilyVerdict> {
    if let Some(&bad) = lambdas.iter().find(|&&l| !flow.contains_param(l)) {
        return Err(Error::InvalidArgument(format!("lambda {bad} outside the family's parameter range")));
    }
    let max_level = opts.polarity_levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_level >= circumradius(grid.lo(), grid.hi()) {
        return Err(Error::InvalidArgument(format!("polarity level {max_level} does not fit inside the grid box")));
    }
    let mut lambda_grid = lambdas.to_vec();
    lambda_grid.sort_by(f64::total_cmp);
    lambda_grid.dedup();
    let bottom = flow.param_range().0;
    let small: Vec<f64> = lambda_grid.iter().copied().filter(|&l| l > bottom).collect();
    let mut notes = Vec::new();

    let mut verdict = FamilyVerdict {
        schema: SCHEMA,
        schema_version: SCHEMA_VERSION,
        system: flow.name().to_string(),
        dim: flow.dim(),
        grid: GridSummary::of(grid),
        options: opts.clone(),
        lambda_grid: lambda_grid.clone(),
        seed: None,
        continuation: None,
        uniform_dissipative: DissipativityVerdict {
            verdict: false,
            box_trapping: UniformDissipativity {
                verdict: false,
                witness_box: None,
                offending: Vec::new(),
                attractor_cells: Vec::new(),
            },
            global_attractors: GlobalTrack { unbroken: false, broken_at: None, reason: None, attractors: Vec::new() },
            failure_mode: None,
        },
        polar: PolarVerdict {
            verdict: false,
            levels: opts.polarity_levels.clone(),
            lambda_hat: Vec::new(),
            missing: Vec::new(),
            witnesses: Vec::new(),
        },
        separator_analysis: SeparatorAnalysis {
            applicable: false,
            reason: None,
            lambda_hat: None,
            nonempty_and_isolated: false,
            index_trivial: false,
            exact_sequence: false,
        },
        coercive: CoerciveVerdict { verdict: false, signatures_valid: false, diameters_decreasing: false, diameters: Vec::new() },
        per_lambda: Vec::new(),
        notes: Vec::new(),
    };
    if lambda_grid.is_empty() {
        verdict.notes.push("empty parameter grid".into());
        verdict.separator_analysis.reason = Some("empty parameter grid".into());
        return Ok(verdict);
    }

    // Global attractors on the whole box, bottom of the range first.
    let mut sweep = vec![bottom];
    sweep.extend(small.iter().copied());
    let mut trapping = UniformDissipativity { verdict: true, witness_box: None, offending: Vec::new(), attractor_cells: Vec::new() };
    let mut track = GlobalTrack { unbroken: true, broken_at: None, reason: None, attractors: Vec::new() };
    let mut prev_a = None;
    let mut seed = None;
    let mut continuation = None;
    let mut per_lambda_witnesses = Vec::new();
    for &lambda in &sweep {
        let map = outer_approximation(flow, lambda, grid, &opts.map_options())?;
        let ambient = match attractor_on(flow, lambda, &map, opts) {
            Ok((rec, _)) => {
                trapping.attractor_cells.push((lambda, rec.cells.len()));
                track.attractors.push((lambda, rec.cells.len(), rec.diameter.unwrap_or(0.0)));
                if track.unbroken {
                    if let Some(p) = &prev_a {
                        if !global_continues(p, &map, &rec.cells, opts) {
                            track.unbroken = false;
                            track.broken_at = Some(lambda);
                            track.reason = Some(format!(
                                "no collar of the previous global attractor ({} cells) isolates the new one ({} cells)",
                                p.len(),
                                rec.cells.len()
                            ));
                        }
                    }
                }
                prev_a = Some(rec.cells.clone());
                Some(rec)
            }
            Err(Error::NotTrapping { offending }) => {
                trapping.offending.push((lambda, offending.len()));
                if track.unbroken {
                    track.unbroken = false;
                    track.broken_at = Some(lambda);
                    track.reason = Some("no global attractor certified".into());
                }
                box_attractor(lambda, &map, opts)?
            }
            Err(e) => return Err(e),
        };

        if lambda == bottom {
            // The attractor at the bottom of the range seeds the continuation.
            continuation = match &ambient {
                Some(s) => match track_continuation(flow, &small, s, opts) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        notes.push(format!("continuation of the bottom attractor failed: {e}"));
                        None
                    }
                },
                None => {
                    notes.push("no global attractor at the bottom of the range to continue".into());
                    None
                }
            };
            seed = ambient;
            continue;
        }

        let mut rep = LambdaReport {
            lambda,
            attractor: continuation.as_ref().and_then(|c: &Continuation| c.at(lambda)).cloned(),
            ambient,
            separator: None,
            index_trivial: None,
            time_duality: None,
            signature: None,
            exact_sequence: None,
            polar_here: false,
            notes: Vec::new(),
        };
        let Some(k) = rep.attractor.as_ref().map(|r| r.cells.clone()) else {
            rep.notes.push("no continued attractor".into());
            per_lambda_witnesses.push((lambda, opts.polarity_levels.iter().map(|&l| (l, None)).collect()));
            verdict.per_lambda.push(rep);
            continue;
        };
        let kg = k.grid().clone();
        let refined;
        let map = if *kg == **grid {
            &map
        } else {
            refined = outer_approximation(flow, lambda, &kg, &opts.map_options())?;
            &refined
        };
        let found = witnesses_at(flow, lambda, map, &k, &opts.polarity_levels, opts)?;
        rep.polar_here = !found.is_empty() && found.iter().all(|f| f.1.is_some());
        per_lambda_witnesses.push((lambda, found));

        let region = k.collar(opts.collar).complement();
        let rev = if invariant_part(map, &region)?.is_empty() {
            None
        } else {
            Some(outer_approximation(flow, lambda, &kg, &opts.reverse_map_options())?)
        };
        let sep = extract_separator_with(flow, lambda, &k, map, rev.as_ref(), opts)?;
        if let Some(e) = &sep.index_error {
            rep.notes.push(format!("separator index: {e}"));
        }
        if let Some(idx) = &sep.record.index {
            rep.index_trivial = Some(idx.is_trivial());
            rep.time_duality = idx.time_duality;
            let k_idx = rep.attractor.as_ref().and_then(|r| r.index.as_ref());
            let a_idx = rep.ambient.as_ref().and_then(|r| r.index.as_ref());
            match (k_idx, a_idx) {
                (Some(ki), Some(ai)) => {
                    rep.exact_sequence = Some(check_exact_sequence(&ki.cohomological, &ai.cohomological, &idx.cohomological))
                }
                _ => rep.notes.push("exact sequence skipped: attractor indices unavailable".into()),
            }
        }
        if !sep.record.cells.is_empty() {
            rep.signature = Some(coercivity_signature(flow, lambda, &sep.record.cells, &k, opts)?);
        }
        rep.separator = Some(sep);
        verdict.per_lambda.push(rep);
    }
    trapping.verdict = trapping.offending.is_empty();
    trapping.witness_box = trapping.verdict.then(|| (grid.lo().to_vec(), grid.hi().to_vec()));
    let failure_mode = if !trapping.verdict {
        Some("the box is not trapping for every parameter".to_string())
    } else if !track.unbroken {
        Some(format!("the global attractors do not continue (broken at lambda = {})", track.broken_at.unwrap_or(f64::NAN)))
    } else {
        None
    };
    verdict.uniform_dissipative =
        DissipativityVerdict { verdict: failure_mode.is_none(), box_trapping: trapping, global_attractors: track, failure_mode };

    let polar = assemble(per_lambda_witnesses, &opts.polarity_levels, Vec::new());
    verdict.polar = PolarVerdict {
        verdict: polar.verdict,
        levels: opts.polarity_levels.clone(),
        lambda_hat: polar.lambda_hat,
        missing: polar.missing,
        witnesses: polar.witnesses,
    };
    if opts.polarity_levels.is_empty() {
        notes.push("no polarity levels configured".into());
    }

    let reports = &verdict.per_lambda;
    let good = |r: &LambdaReport| r.separator.as_ref().is_some_and(|s| !s.record.cells.is_empty() && s.isolated);
    let mut hat = None;
    for r in reports {
        if !good(r) {
            break;
        }
        hat = Some(r.lambda);
    }
    let tested = !reports.is_empty();
    verdict.separator_analysis = SeparatorAnalysis {
        applicable: verdict.polar.verdict,
        reason: (!verdict.polar.verdict).then(|| "family is not polar; separator analysis does not apply".to_string()),
        lambda_hat: hat,
        nonempty_and_isolated: tested && reports.iter().all(good),
        index_trivial: tested && reports.iter().all(|r| r.index_trivial == Some(true)),
        exact_sequence: tested && reports.iter().all(|r| r.exact_sequence.as_ref().is_some_and(|e| e.pass)),
    };

    let diameters: Vec<(f64, f64)> =
        reports.iter().filter_map(|r| r.separator.as_ref()?.record.diameter.map(|d| (r.lambda, d))).collect();
    let signatures_valid = tested && reports.iter().all(|r| r.signature.as_ref().is_some_and(|s| s.valid));
    let diameters_decreasing = diameters.len() == reports.len() && strictly_decreasing(&diameters);
    verdict.coercive = CoerciveVerdict {
        verdict: verdict.polar.verdict && signatures_valid && diameters_decreasing,
        signatures_valid,
        diameters_decreasing,
        diameters,
    };
    if verdict.uniform_dissipative.verdict && verdict.polar.verdict {
        notes.push("inconsistent: uniformly dissipative and polar on the same grid".into());
    }
    verdict.seed = seed;
    verdict.continuation = continuation;
    verdict.notes = notes;
    Ok(verdict)
}
