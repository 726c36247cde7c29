//! Integer homology of a finite chain complex.
//!
//! Three stages: free-face collapses, sparse elimination of unit pivots in
//! checked `i64` arithmetic, and a dense arbitrary-precision Smith normal
//! form of whatever is left. Every stage preserves the homology.

use std::collections::VecDeque;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::complex::ChainComplex;
use super::group::{Group, GradedGroup};

struct Sparse {
    /// `bd[k][j]`: sorted boundary of generator `j` in dimension `k`.
    bd: Vec<Vec<Vec<(u32, i64)>>>,
    /// Candidate cofaces; may hold stale entries, `count` is exact.
    cob: Vec<Vec<Vec<u32>>>,
    count: Vec<Vec<u32>>,
    alive: Vec<Vec<bool>>,
}

impl Sparse {
    fn new(cc: &ChainComplex) -> Self {
        let dims = cc.boundary.len();
        let mut bd = Vec::with_capacity(dims);
        let mut cob: Vec<Vec<Vec<u32>>> = cc.boundary.iter().map(|b| vec![Vec::new(); b.len()]).collect();
        let mut count: Vec<Vec<u32>> = cc.boundary.iter().map(|b| vec![0; b.len()]).collect();
        for k in 0..dims {
            let cols: Vec<Vec<(u32, i64)>> = cc.boundary[k]
                .iter()
                .map(|col| col.iter().filter(|(_, c)| *c != 0).map(|&(i, c)| (i as u32, c)).collect())
                .collect();
            if k > 0 {
                for (j, col) in cols.iter().enumerate() {
                    for &(i, _) in col {
                        cob[k - 1][i as usize].push(j as u32);
                        count[k - 1][i as usize] += 1;
                    }
                }
            }
            bd.push(cols);
        }
        let alive = cc.boundary.iter().map(|b| vec![true; b.len()]).collect();
        Self { bd, cob, count, alive }
    }

    fn coef(&self, k: usize, j: usize, i: usize) -> i64 {
        let col = &self.bd[k][j];
        match col.binary_search_by_key(&(i as u32), |&(f, _)| f) {
            Ok(p) => col[p].1,
            Err(_) => 0,
        }
    }

    /// Live cofaces of generator `i` in dimension `k`.
    fn cofaces(&self, k: usize, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.cob[k][i]
            .iter()
            .map(|&c| c as usize)
            .filter(|&c| self.alive[k + 1][c] && self.coef(k + 1, c, i) != 0)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Removes the pair (`a` in dim `k`, `b` in dim `k + 1`), where
    /// `<d b, a> = +-1`, after clearing `a` from every other coface. Returns
    /// false (and changes nothing) on coefficient overflow. Faces whose
    /// coface count dropped to one are pushed to `free`.
    fn reduce(&mut self, k: usize, a: usize, b: usize, free: &mut VecDeque<(usize, usize)>) -> bool {
        let pivot = self.coef(k + 1, b, a);
        debug_assert!(pivot == 1 || pivot == -1);
        let others: Vec<usize> = self.cofaces(k, a).into_iter().filter(|&c| c != b).collect();
        let mut updates = Vec::with_capacity(others.len());
        for &c in &others {
            let q = match self.coef(k + 1, c, a).checked_mul(pivot) {
                Some(q) => q,
                None => return false,
            };
            match axpy(&self.bd[k + 1][c], -q, &self.bd[k + 1][b]) {
                Some(col) => updates.push((c, col)),
                None => return false,
            }
        }
        for (c, col) in updates {
            let old = std::mem::take(&mut self.bd[k + 1][c]);
            // Coface bookkeeping for entries that appeared or vanished.
            let (mut i, mut j) = (0, 0);
            while i < old.len() || j < col.len() {
                let fo = old.get(i).map(|e| e.0);
                let fn_ = col.get(j).map(|e| e.0);
                match (fo, fn_) {
                    (Some(x), Some(y)) if x == y => {
                        i += 1;
                        j += 1;
                    }
                    (Some(x), y) if y.is_none() || x < y.unwrap() => {
                        self.count[k][x as usize] -= 1;
                        if self.count[k][x as usize] == 1 {
                            free.push_back((k, x as usize));
                        }
                        i += 1;
                    }
                    (_, Some(y)) => {
                        self.count[k][y as usize] += 1;
                        self.cob[k][y as usize].push(c as u32);
                        j += 1;
                    }
                    _ => unreachable!(),
                }
            }
            self.bd[k + 1][c] = col;
        }
        // Drop b: its faces lose a coface.
        let col_b = std::mem::take(&mut self.bd[k + 1][b]);
        for &(f, _) in &col_b {
            let f = f as usize;
            self.count[k][f] -= 1;
            if f != a && self.count[k][f] == 1 {
                free.push_back((k, f));
            }
        }
        self.alive[k + 1][b] = false;
        // Drop b from the boundaries of its own cofaces.
        if k + 2 < self.bd.len() {
            let cofs = self.cofaces(k + 1, b);
            for d in cofs {
                let col = &mut self.bd[k + 2][d];
                if let Ok(p) = col.binary_search_by_key(&(b as u32), |&(f, _)| f) {
                    col.remove(p);
                }
            }
            self.count[k + 1][b] = 0;
        }
        // Drop a: after the updates, b was its only coface.
        if k > 0 {
            for &(f, _) in &std::mem::take(&mut self.bd[k][a]) {
                let f = f as usize;
                self.count[k - 1][f] -= 1;
                if self.count[k - 1][f] == 1 {
                    free.push_back((k - 1, f));
                }
            }
        }
        self.alive[k][a] = false;
        self.count[k][a] = 0;
        true
    }

    fn collapse(&mut self, free: &mut VecDeque<(usize, usize)>) {
        while let Some((k, a)) = free.pop_front() {
            if !self.alive[k][a] || self.count[k][a] != 1 {
                continue;
            }
            let cof = self.cofaces(k, a);
            debug_assert_eq!(cof.len(), 1);
            let b = cof[0];
            let c = self.coef(k + 1, b, a);
            if c == 1 || c == -1 {
                self.reduce(k, a, b, free);
            }
        }
    }

    fn run(&mut self) {
        let dims = self.bd.len();
        let mut free = VecDeque::new();
        for k in 0..dims.saturating_sub(1) {
            for a in 0..self.count[k].len() {
                if self.count[k][a] == 1 {
                    free.push_back((k, a));
                }
            }
        }
        self.collapse(&mut free);

        // Unit pivots anywhere, fewest cofaces first to limit fill-in.
        loop {
            let mut progressed = false;
            for k in (0..dims.saturating_sub(1)).rev() {
                for b in 0..self.bd[k + 1].len() {
                    if !self.alive[k + 1][b] {
                        continue;
                    }
                    let pick = self.bd[k + 1][b]
                        .iter()
                        .filter(|&&(_, c)| c == 1 || c == -1)
                        .min_by_key(|&&(f, _)| (self.count[k][f as usize], f))
                        .map(|&(f, _)| f as usize);
                    if let Some(a) = pick {
                        if self.reduce(k, a, b, &mut free) {
                            progressed = true;
                            self.collapse(&mut free);
                        }
                    }
                }
            }
            if !progressed {
                break;
            }
        }
    }
}

/// `x + q * y` on sorted sparse columns, `None` on overflow.
fn axpy(x: &[(u32, i64)], q: i64, y: &[(u32, i64)]) -> Option<Vec<(u32, i64)>> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
        if take_x {
            out.push(x[i]);
            i += 1;
        } else if take_y {
            out.push((y[j].0, q.checked_mul(y[j].1)?));
            j += 1;
        } else {
            let v = x[i].1.checked_add(q.checked_mul(y[j].1)?)?;
            if v != 0 {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    Some(out)
}

/// Rank and nonzero invariant factors (ascending, each dividing the next)
/// of an integer matrix given by rows.
pub fn smith_normal_form(mut a: Vec<Vec<BigInt>>) -> (usize, Vec<BigUint>) {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut diag: Vec<BigInt> = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Smallest nonzero entry of the trailing block as pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    for j in t..cols {
                        let v = &q * &a[t][j];
                        a[i][j] -= v;
                    }
                    dirty |= !a[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for row in a.iter_mut().take(rows).skip(t) {
                        let v = &q * &row[t];
                        row[j] -= v;
                    }
                    dirty |= !a[t][j].is_zero();
                }
            }
            if dirty {
                // A remainder smaller than the pivot: move it to the corner.
                let mut best = (t, t);
                for i in t..rows {
                    if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t..cols {
                    if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                a.swap(t, best.0);
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
                continue;
            }
            // Pivot must divide the rest of the block.
            let mut fix = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&a[i][j] % &a[t][t]).is_zero() {
                        fix = Some(i);
                        break 'scan;
                    }
                }
            }
            match fix {
                Some(i) => {
                    for j in t..cols {
                        let v = a[i][j].clone();
                        a[t][j] += v;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    let factors = diag.into_iter().map(|d| d.magnitude().clone()).collect();
    (t, factors)
}

/// Integer homology of `cc` in degrees `0..=top_dim`.
pub fn homology_of(cc: &ChainComplex) -> GradedGroup {
    let dims = cc.boundary.len();
    if dims == 0 {
        return GradedGroup::zero(0);
    }
    let mut sp = Sparse::new(cc);
    sp.run();

    let live: Vec<Vec<usize>> =
        sp.alive.iter().map(|a| a.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i).collect()).collect();
    let mut rank = vec![0usize; dims + 1];
    let mut factors: Vec<Vec<BigUint>> = vec![Vec::new(); dims + 1];
    for k in 1..dims {
        if live[k].is_empty() || live[k - 1].is_empty() {
            continue;
        }
        let row_of = |f: usize| live[k - 1].binary_search(&f).ok();
        let mut m = vec![vec![BigInt::zero(); live[k].len()]; live[k - 1].len()];
        let mut nonzero = false;
        for (j, &b) in live[k].iter().enumerate() {
            for &(f, c) in &sp.bd[k][b] {
                if let Some(i) = row_of(f as usize) {
                    m[i][j] = BigInt::from(c);
                    nonzero = true;
                }
            }
        }
        if nonzero {
            let (r, inv) = smith_normal_form(m);
            rank[k] = r;
            factors[k] = inv;
        }
    }
    let groups = (0..dims)
        .map(|k| Group {
            rank: live[k].len() - rank[k] - rank[k + 1],
            torsion: factors[k + 1].iter().filter(|d| !d.is_one()).cloned().collect(),
        })
        .collect();
    GradedGroup::new(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
    }

    #[test]
    fn snf_small_cases() {
        assert_eq!(smith_normal_form(m(&[&[2, 4], &[6, 8]])), (2, vec![2u32.into(), 4u32.into()]));
        assert_eq!(smith_normal_form(m(&[&[0, 0], &[0, 0]])).0, 0);
        let (r, f) = smith_normal_form(m(&[&[2, 0], &[0, 3]]));
        assert_eq!((r, f), (2, vec![1u32.into(), 6u32.into()]));
        let (r, f) = smith_normal_form(m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]));
        assert_eq!((r, f), (2, vec![1u32.into(), 3u32.into()]));
    }

    #[test]
    fn projective_plane_has_two_torsion() {
        // Minimal CW structure: one cell per dimension, d2 = 2, d1 = 0.
        let cc = ChainComplex { boundary: vec![vec![vec![]], vec![vec![]], vec![vec![(0, 2)]]] };
        let h = homology_of(&cc);
        assert_eq!(h.rank(0), 1);
        assert_eq!(h.rank(1), 0);
        assert_eq!(h.torsion(1), &[BigUint::from(2u32)]);
        assert_eq!(h.rank(2), 0);
    }

    #[test]
    fn circle_from_triangle() {
        // Vertices 0,1,2; edges 01, 12, 20.
        let cc = ChainComplex {
            boundary: vec![
                vec![vec![], vec![], vec![]],
                vec![vec![(0, -1), (1, 1)], vec![(1, -1), (2, 1)], vec![(0, 1), (2, -1)]],
            ],
        };
        let h = homology_of(&cc);
        assert_eq!((h.rank(0), h.rank(1)), (1, 1));
    }
}
