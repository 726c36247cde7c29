//! Oracle suites compiled into the binary: brute-force invariant sets,
//! flood-fill components, hand-reduced homology pairs and exact-sequence
//! cases.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dissipa::cubegrid::{components, invariant_part};
use dissipa::homology::{check_exact_sequence, homology, relative_homology_sets, GradedGroup};
use dissipa::{CellSet, CubicalGrid, MultivaluedMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_map(rng: &mut ChaCha8Rng) -> MultivaluedMap {
    let dim = rng.gen_range(1..=2);
    let divs: Vec<usize> = (0..dim).map(|_| rng.gen_range(1..=5)).collect();
    let g = Arc::new(CubicalGrid::new(vec![0.0; dim], vec![1.0; dim], divs).expect("valid grid"));
    let n = g.len();
    let density = rng.gen_range(0.05..0.4);
    let mut images = Vec::with_capacity(n);
    let mut esc = Vec::with_capacity(n);
    for _ in 0..n {
        let escaping = rng.gen_bool(0.15);
        let mut img: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
        if img.is_empty() && !escaping {
            img.push(rng.gen_range(0..n));
        }
        images.push(img);
        esc.push(escaping);
    }
    MultivaluedMap::from_images(&g, images, &esc).expect("valid images")
}

/// Cells of `s` lying on a bi-infinite path inside `s`: those that reach a
/// cycle inside `s` forward and are reached from one backward.
fn brute_invariant(map: &MultivaluedMap, s: &[bool]) -> Vec<usize> {
    let n = map.len();
    let ok = |c: usize| s[c] && !map.is_escaping(c);
    let mut reach = vec![vec![false; n]; n];
    for c in 0..n {
        if ok(c) {
            for &t in map.image(c) {
                if ok(t as usize) {
                    reach[c][t as usize] = true;
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let on_cycle: Vec<bool> = (0..n).map(|c| reach[c][c]).collect();
    (0..n)
        .filter(|&c| {
            ok(c)
                && (on_cycle[c] || (0..n).any(|d| on_cycle[d] && reach[c][d]))
                && (on_cycle[c] || (0..n).any(|d| on_cycle[d] && reach[d][c]))
        })
        .collect()
}

fn invariant_suite() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    let cases = 1000;
    for case in 0..cases {
        let map = random_map(&mut rng);
        let n = map.len();
        let s: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        let set = CellSet::from_indices(map.grid(), (0..n).filter(|&c| s[c])).expect("in range");
        match invariant_part(&map, &set) {
            Ok(got) if got.to_vec() == brute_invariant(&map, &s) => {}
            Ok(got) => failures.push(format!("case {case}: got {:?}", got.to_vec())),
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    SuiteResult { name: "invariant part vs brute force", cases, failures, elapsed: Duration::ZERO }
}

fn flood_fill(set: &[bool], side: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    for start in 0..set.len() {
        if !set[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(c) = queue.pop_front() {
            comp.push(c);
            let (x, y) = (c % side, c / side);
            let mut nb = Vec::with_capacity(4);
            if x > 0 {
                nb.push(c - 1);
            }
            if x + 1 < side {
                nb.push(c + 1);
            }
            if y > 0 {
                nb.push(c - side);
            }
            if y + 1 < side {
                nb.push(c + side);
            }
            for d in nb {
                if set[d] && !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn components_suite() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let side = 8;
    let g = Arc::new(CubicalGrid::cube(2, 0.0, side as f64, side).expect("valid grid"));
    let mut failures = Vec::new();
    let cases = 1000;
    for case in 0..cases {
        let p = rng.gen_range(0.2..0.8);
        let bits: Vec<bool> = (0..side * side).map(|_| rng.gen_bool(p)).collect();
        let set = CellSet::from_indices(&g, (0..side * side).filter(|&c| bits[c])).expect("in range");
        let got: Vec<Vec<usize>> = components(&set).iter().map(CellSet::to_vec).collect();
        if got != flood_fill(&bits, side) {
            failures.push(format!("case {case}"));
        }
    }
    SuiteResult { name: "components vs flood fill", cases, failures, elapsed: Duration::ZERO }
}

fn block(g: &Arc<CubicalGrid>, lo: &[usize], hi: &[usize]) -> CellSet {
    CellSet::from_indices(
        g,
        (0..g.len()).filter(|&c| g.coords(c).iter().enumerate().all(|(a, &v)| v >= lo[a] && v < hi[a])),
    )
    .expect("in range")
}

fn homology_suite() -> SuiteResult {
    let g2 = Arc::new(CubicalGrid::cube(2, 0.0, 8.0, 8).expect("valid grid"));
    let g3 = Arc::new(CubicalGrid::cube(3, 0.0, 5.0, 5).expect("valid grid"));
    let g5 = Arc::new(CubicalGrid::cube(2, 0.0, 5.0, 5).expect("valid grid"));
    let disk_grid = Arc::new(CubicalGrid::cube(2, -1.0, 1.0, 20).expect("valid grid"));
    let diff = |a: CellSet, b: CellSet| a.difference(&b).expect("same grid");

    let hole = block(&g2, &[3, 3], &[5, 5]);
    let annulus = diff(block(&g2, &[1, 1], &[7, 7]), hole.clone());
    let inner = diff(block(&g2, &[2, 2], &[6, 6]), hole);
    let disk = CellSet::from_centers(&disk_grid, |p| p[0].hypot(p[1]) < 0.7);
    let square = block(&g5, &[1, 1], &[4, 4]);
    let sides = block(&g5, &[1, 1], &[2, 4]).union(&block(&g5, &[3, 1], &[4, 4])).expect("same grid");
    let shell = diff(block(&g3, &[1, 1, 1], &[4, 4, 4]), block(&g3, &[2, 2, 2], &[3, 3, 3]));

    let cases: Vec<(&str, dissipa::Result<GradedGroup>, GradedGroup)> = vec![
        ("annulus rel inner ring", relative_homology_sets(&annulus, &inner), GradedGroup::zero(2)),
        ("annulus", homology(&annulus), GradedGroup::sphere(1, 2)),
        ("disk rel empty", relative_homology_sets(&disk, &CellSet::empty(&disk_grid)), GradedGroup::point(2)),
        ("saddle square rel sides", relative_homology_sets(&square, &sides), GradedGroup::from_ranks(&[0, 1, 0])),
        ("hollow cube shell", homology(&shell), GradedGroup::sphere(2, 3)),
    ];
    let mut failures = Vec::new();
    let n = cases.len();
    for (name, got, want) in cases {
        match got {
            Ok(h) if h.same_as(&want) => {}
            Ok(h) => failures.push(format!("{name}: got {h}, expected {want}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    SuiteResult { name: "hand-reduced homology pairs", cases: n, failures, elapsed: Duration::ZERO }
}

fn exact_suite() -> SuiteResult {
    let z0 = GradedGroup::from_ranks(&[1, 0, 0]);
    let zero = GradedGroup::zero(2);
    let z2 = GradedGroup::from_ranks(&[2, 0, 0]);
    let circle_rep = GradedGroup::from_ranks(&[0, 1, 0]);
    let cases = [
        ("point attractor, point total, trivial repeller", &z0, &z0, &zero, true),
        ("all zero", &zero, &zero, &zero, true),
        ("rank-two total over a point", &z0, &z2, &zero, false),
        ("connecting map onto the repeller", &z0, &zero, &circle_rep, true),
    ];
    let mut failures = Vec::new();
    for (name, a, s, r, pass) in cases {
        let v = check_exact_sequence(a, s, r);
        if v.pass != pass {
            failures.push(format!("{name}: pass = {}", v.pass));
        }
    }
    SuiteResult { name: "exact sequence cases", cases: cases.len(), failures, elapsed: Duration::ZERO }
}

/// Runs every suite, timing each.
pub fn run() -> Vec<SuiteResult> {
    let suites: [fn() -> SuiteResult; 4] = [invariant_suite, components_suite, homology_suite, exact_suite];
    suites
        .iter()
        .map(|s| {
            let t = Instant::now();
            let mut r = s();
            r.elapsed = t.elapsed();
            r
        })
        .collect()
}

/// Pass/fail table without timings, so repeated runs print the same bytes.
pub fn table(results: &[SuiteResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<32} {:>6}  result", "suite", "cases");
    for r in results {
        let _ = writeln!(out, "{:<32} {:>6}  {}", r.name, r.cases, if r.passed() { "pass" } else { "FAIL" });
        for f in r.failures.iter().take(5) {
            let _ = writeln!(out, "    {f}");
        }
    }
    out
}
