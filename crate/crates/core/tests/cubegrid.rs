use std::collections::VecDeque;
use std::sync::Arc;

use dissipa::cubegrid::*;
use dissipa::dynamics::{eqn1, eqn1_radial_velocity, saddle, zero_field};
use dissipa::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng) -> MultivaluedMap {
    let dim = rng.gen_range(1..=2);
    let divs: Vec<usize> = (0..dim).map(|_| rng.gen_range(1..=5)).collect();
    let g = Arc::new(CubicalGrid::new(vec![0.0; dim], vec![1.0; dim], divs).unwrap());
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
    MultivaluedMap::from_images(&g, images, &esc).unwrap()
}

/// Cells of `s` on a bi-infinite path inside `s`, via transitive closure.
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
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                for j in 0..n {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let cyclic: Vec<usize> = (0..n).filter(|&u| reach[u][u]).collect();
    (0..n)
        .filter(|&c| ok(c))
        .filter(|&c| cyclic.iter().any(|&u| u == c || reach[c][u]) && cyclic.iter().any(|&v| v == c || reach[v][c]))
        .collect()
}

#[test]
fn invariant_part_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let map = random_map(&mut rng);
        let n = map.len();
        let s: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.8)).collect();
        let set = CellSet::from_indices(map.grid(), (0..n).filter(|&c| s[c])).unwrap();
        let got = invariant_part(&map, &set).unwrap().to_vec();
        assert_eq!(got, brute_invariant(&map, &s), "case {case}");
    }
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
            let mut nb = Vec::new();
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

#[test]
fn components_match_flood_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Arc::new(CubicalGrid::cube(2, 0.0, 8.0, 8).unwrap());
    for case in 0..1000 {
        let p = rng.gen_range(0.2..0.8);
        let bits: Vec<bool> = (0..64).map(|_| rng.gen_bool(p)).collect();
        let set = CellSet::from_indices(&g, (0..64).filter(|&c| bits[c])).unwrap();
        let got: Vec<Vec<usize>> = components(&set).iter().map(CellSet::to_vec).collect();
        assert_eq!(got, flood_fill(&bits, 8), "case {case}");
    }
}

#[test]
fn diameter_matches_all_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Arc::new(CubicalGrid::new(vec![-1.0, 0.0], vec![2.0, 1.0], vec![9, 7]).unwrap());
    for _ in 0..200 {
        let set = CellSet::from_indices(&g, (0..g.len()).filter(|_| rng.gen_bool(0.3))).unwrap();
        if set.is_empty() {
            continue;
        }
        let cs = set.centers();
        let mut best = 0.0f64;
        for a in &cs {
            for b in &cs {
                best = best.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        assert!((diameter(&set).unwrap() - best).abs() < 1e-12);
    }
}

#[test]
fn empty_and_mismatched_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let map = random_map(&mut rng);
    assert!(invariant_part(&map, &CellSet::empty(map.grid())).unwrap().is_empty());
    let (iso, inv) = is_isolating(&map, &CellSet::empty(map.grid())).unwrap();
    assert!(iso && inv.is_empty());
    let other = Arc::new(CubicalGrid::cube(3, 0.0, 1.0, 2).unwrap());
    assert_eq!(invariant_part(&map, &CellSet::full(&other)), Err(Error::GridMismatch));
}

fn eqn1_map(lambda: f64, lo: f64, hi: f64, div: usize, opts: MapOptions) -> MultivaluedMap {
    let g = Arc::new(CubicalGrid::cube(2, lo, hi, div).unwrap());
    outer_approximation(&eqn1(), lambda, &g, &opts).unwrap()
}

#[test]
fn eqn1_lambda0_full_grid_isolates_origin() {
    let m = eqn1_map(0.0, -3.0, 3.0, 64, MapOptions::new(0.5));
    let (iso, inv) = is_isolating(&m, &CellSet::full(m.grid())).unwrap();
    assert!(iso);
    assert!(!inv.is_empty());
    // At lambda = 0 the radius contracts by exp(-tau). An invariant cell at
    // center distance d has a predecessor no farther out, and sample spread
    // plus one bloat layer add at most 1.5 diagonals:
    // d <= (d + diag / 2) e^-tau + 1.5 diag.
    let diag = m.grid().cell_diagonal();
    let q = (-0.5f64).exp();
    let bound = diag * (0.5 * q + 1.5) / (1.0 - q);
    for c in inv.centers() {
        assert!(c[0].hypot(c[1]) <= bound, "{c:?} beyond {bound}");
    }
    assert_eq!(components(&inv).len(), 1);
    let pair = index_pair(&m, &inv, 2).unwrap();
    assert!(pair.exit.is_empty());
    assert!(pair.positive_invariance_violations(&m).is_empty());
}

#[test]
fn eqn1_lambda0_images_drift_to_origin() {
    let m = eqn1_map(0.0, -3.0, 3.0, 128, MapOptions::new(0.5));
    let g = m.grid().clone();
    let origin = CellSet::covering(&g, |p| p[0].hypot(p[1]) < 0.05);
    let mut reach = CellSet::from_centers(&g, |p| p[0].hypot(p[1]) > 2.5);
    // Iterated images of the outer shell shrink into a small disk.
    for _ in 0..60 {
        reach = m.image_of(&reach).unwrap();
    }
    let rmax = reach.centers().iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
    assert!(rmax < 0.5, "{rmax}");
    assert!(!reach.is_disjoint(&origin).unwrap());
}

#[test]
fn eqn1_radial_sign_of_images() {
    let lambda = 0.5;
    let m = eqn1_map(lambda, -4.0, 4.0, 64, MapOptions::new(0.5).bloat(0));
    let g = m.grid().clone();
    let diag = g.cell_diagonal();
    let mut checked = 0;
    for c in 0..g.len() {
        let p = g.cell_center(c);
        let r = p[0].hypot(p[1]);
        // Cells whose whole square lies off the circle and off the origin,
        // with a clear radial decrease over tau.
        if m.is_escaping(c) || r < 0.5 || (r - 2.0).abs() < 0.6 || r > 3.5 {
            continue;
        }
        assert!(eqn1_radial_velocity(r, lambda) < 0.0);
        let rmax_img = m
            .image(c)
            .iter()
            .map(|&t| {
                let q = g.cell_center(t as usize);
                q[0].hypot(q[1])
            })
            .fold(0.0, f64::max);
        let rmin_cell = r - diag / 2.0;
        if r > 2.0 {
            assert!(rmax_img < r + diag, "cell at {r} maps out to {rmax_img}");
        } else {
            assert!(rmax_img <= rmin_cell + diag, "cell at {r} maps out to {rmax_img}");
        }
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn eqn1_ring_is_invariant() {
    let m = eqn1_map(0.5, -4.0, 4.0, 96, MapOptions::new(0.5));
    let g = m.grid().clone();
    let s = CellSet::from_centers(&g, |p| (1.0..=3.0).contains(&p[0].hypot(p[1])));
    let inv = invariant_part(&m, &s).unwrap();
    assert!(!inv.is_empty());
    let ring = CellSet::covering(&g, |p| (p[0].hypot(p[1]) - 2.0).abs() < 1e-9);
    assert!(ring.is_subset(&inv).unwrap());
}

/// Cells whose closed square meets the closed annulus `|r - 2| <= half`.
fn annulus(g: &Arc<CubicalGrid>, half: f64) -> CellSet {
    CellSet::from_indices(
        g,
        (0..g.len()).filter(|&c| {
            let (lo, hi) = g.cell_bounds(c);
            let near: f64 = (0..2).map(|a| (lo[a].max(0.0).min(hi[a])).powi(2)).sum::<f64>().sqrt();
            let far: f64 = (0..2).map(|a| lo[a].abs().max(hi[a].abs()).powi(2)).sum::<f64>().sqrt();
            near <= 2.0 + half && far >= 2.0 - half
        }),
    )
    .unwrap()
}

#[test]
fn thin_ring_isolates_only_when_refined() {
    // The annulus |r - 2| <= h/2 for the coarse cell size h: about one
    // coarse cell wide, two to three fine cells wide. A cell at distance d
    // outside the circle keeps a predecessor in itself while d * tau / 2 < 1,
    // so a long flow time pins the invariant part to the cells meeting the
    // circle. On the fine grid all their face neighbors lie in the annulus,
    // on the coarse grid not.
    let coarse = Arc::new(CubicalGrid::cube(2, -4.0, 4.0, 64).unwrap());
    let fine = Arc::new(coarse.refine(2).unwrap());
    let half = coarse.cell_sizes()[0] / 2.0;
    let opts = MapOptions::new(3000.0).bloat(0).tol(1e-6);
    let run = |g: &Arc<CubicalGrid>| {
        let n = annulus(g, half);
        let m = outer_approximation(&eqn1(), 0.5, g, &opts.clone().domain(n.collar(2))).unwrap();
        is_isolating(&m, &n).unwrap()
    };
    let (iso_c, inv_c) = run(&coarse);
    let (iso_f, inv_f) = run(&fine);
    assert!(!inv_c.is_empty() && !inv_f.is_empty());
    assert!(!iso_c, "coarse ring unexpectedly isolating ({} cells)", inv_c.len());
    assert!(iso_f, "refined ring not isolating ({} cells)", inv_f.len());
}

#[test]
fn saddle_exit_is_left_and_right() {
    let g = Arc::new(CubicalGrid::cube(2, -1.0, 1.0, 32).unwrap());
    let m = outer_approximation(&saddle(), 0.0, &g, &MapOptions::new(1.0).bloat(1)).unwrap();
    let n0 = CellSet::from_centers(&g, |p| p[0].abs() < 0.5 && p[1].abs() < 0.5);
    let (iso, k) = is_isolating(&m, &n0).unwrap();
    assert!(iso);
    let pair = index_pair(&m, &k, 2).unwrap();
    assert!(!pair.exit.is_empty());
    for c in pair.exit.iter() {
        let p = g.cell_center(c);
        assert!(p[0].abs() >= p[1].abs(), "exit cell {p:?} is not on a side strip");
        // Oracle: an exit cell maps out of N or onto further exit cells.
        assert!(m.is_escaping(c) || m.image(c).iter().any(|&t| !pair.n.contains(t as usize) || pair.exit.contains(t as usize)));
    }
    let left = pair.exit.iter().any(|c| g.cell_center(c)[0] < 0.0);
    let right = pair.exit.iter().any(|c| g.cell_center(c)[0] > 0.0);
    assert!(left && right);
    assert!(pair.positive_invariance_violations(&m).is_empty());
    assert!(pair.exit.is_subset(&pair.n).unwrap() && pair.entrance.is_subset(&pair.n).unwrap());
    let layer = pair.n.boundary_layer();
    assert!(layer.is_subset(&pair.exit.union(&pair.entrance).unwrap()).unwrap());
}

#[test]
fn zero_field_maps_into_own_collar() {
    let g = Arc::new(CubicalGrid::cube(2, 0.0, 1.0, 6).unwrap());
    let m = outer_approximation(&zero_field(2).unwrap(), 0.0, &g, &MapOptions::new(1.0).bloat(1)).unwrap();
    for c in 0..g.len() {
        let img: Vec<usize> = m.image(c).iter().map(|&t| t as usize).collect();
        assert!(img.contains(&c));
        let single = CellSet::from_indices(&g, [c]).unwrap();
        assert!(CellSet::from_indices(&g, img).unwrap().is_subset(&single.collar(1)).unwrap());
    }
}

#[test]
fn bloat_nesting_and_worker_independence() {
    let g = Arc::new(CubicalGrid::cube(2, -3.0, 3.0, 40).unwrap());
    let m1 = outer_approximation(&eqn1(), 0.5, &g, &MapOptions::new(0.5).bloat(1)).unwrap();
    let m2 = outer_approximation(&eqn1(), 0.5, &g, &MapOptions::new(0.5).bloat(2)).unwrap();
    for c in 0..g.len() {
        if !m1.is_escaping(c) && !m2.is_escaping(c) {
            assert!(m1.image(c).iter().all(|t| m2.image(c).contains(t)));
        }
        assert!(!m1.is_escaping(c) || m2.is_escaping(c));
    }
    // Clipped balls make extra cells escape under the larger bloat, so the
    // comparison runs where neither map escapes.
    let s = m2.escaping().complement();
    assert!(invariant_part(&m1, &s).unwrap().is_subset(&invariant_part(&m2, &s).unwrap()).unwrap());

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| outer_approximation(&eqn1(), 0.5, &g, &MapOptions::new(0.5).bloat(1)).unwrap());
    for c in 0..g.len() {
        assert_eq!(single.image(c), m1.image(c));
        assert_eq!(single.is_escaping(c), m1.is_escaping(c));
    }
}

#[test]
fn reversed_map_swaps_exit_and_entrance_on_ring() {
    let g = Arc::new(CubicalGrid::cube(2, -3.0, 3.0, 128).unwrap());
    let opts = MapOptions::new(0.5).bloat(1);
    let mean_r = |s: &CellSet| {
        let cs = s.centers();
        cs.iter().map(|c| c[0].hypot(c[1])).sum::<f64>() / cs.len() as f64
    };
    let ring_pair = |m: &MultivaluedMap| {
        let origin = invariant_part(m, &CellSet::from_centers(&g, |p| p[0].hypot(p[1]) < 0.3)).unwrap();
        let region = CellSet::full(&g).difference(&origin.collar(2)).unwrap();
        let (iso, c) = is_isolating(m, &region).unwrap();
        assert!(iso && !c.is_empty());
        index_pair(m, &c, 2).unwrap()
    };
    let pf = ring_pair(&outer_approximation(&eqn1(), 0.5, &g, &opts).unwrap());
    let pr = ring_pair(&outer_approximation(&eqn1(), 0.5, &g, &opts.reversed()).unwrap());
    // Forward: points inside fall away from the circle, so the exit is on
    // the inner side; reversed, it is on the outer side.
    assert!(mean_r(&pf.exit) < 2.0 && mean_r(&pf.entrance) > 2.0);
    assert!(mean_r(&pr.exit) > 2.0 && mean_r(&pr.entrance) < 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn invariant_part_is_idempotent_and_monotone(seed in any::<u64>(), a in proptest::collection::vec(any::<bool>(), 25), b in proptest::collection::vec(any::<bool>(), 25)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng);
        let n = map.len();
        let s = CellSet::from_indices(map.grid(), (0..n).filter(|&c| a[c])).unwrap();
        let t = CellSet::from_indices(map.grid(), (0..n).filter(|&c| a[c] || b[c])).unwrap();
        let inv_s = invariant_part(&map, &s).unwrap();
        prop_assert!(inv_s.is_subset(&s).unwrap());
        prop_assert_eq!(invariant_part(&map, &inv_s).unwrap(), inv_s.clone());
        prop_assert!(inv_s.is_subset(&invariant_part(&map, &t).unwrap()).unwrap());
    }

    #[test]
    fn index_pairs_are_positively_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng);
        let full = CellSet::full(map.grid());
        let inv = invariant_part(&map, &full).unwrap();
        for k in components(&inv) {
            if let Ok(p) = index_pair(&map, &k, 1) {
                prop_assert!(p.positive_invariance_violations(&map).is_empty());
                prop_assert!(p.exit.is_disjoint(&k).unwrap());
            }
        }
    }
}
