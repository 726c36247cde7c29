use serde::Serialize;

use super::group::GradedGroup;

/// Image ranks of the three maps leaving degree `k` of the sequence
/// `CH^k(R) -> CH^k(S) -> CH^k(A) -> CH^{k+1}(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequenceLabels {
    pub repeller_to_total: i64,
    pub total_to_attractor: i64,
    pub connecting: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactnessVerdict {
    pub pass: bool,
    pub first_failing_degree: Option<usize>,
    /// Labels for the degrees checked before any failure.
    pub labels: Vec<SequenceLabels>,
    /// Torsion was present and only ranks were compared.
    pub torsion_ignored: bool,
}

/// Rank-level exactness of the attractor-repeller sequence
/// `... -> CH^k(R) -> CH^k(S) -> CH^k(A) -> CH^{k+1}(R) -> ...`.
///
/// The sequence starts at `0 -> CH^0(R)`, so exactness fixes every image
/// rank in turn; the check is that each one fits between zero and the ranks
/// of its source and target, and that the sequence ends at zero.
pub fn check_exact_sequence(attractor: &GradedGroup, total: &GradedGroup, repeller: &GradedGroup) -> ExactnessVerdict {
    let top = attractor.top().max(total.top()).max(repeller.top());
    let torsion_ignored = attractor.has_torsion() || total.has_torsion() || repeller.has_torsion();
    let r = |g: &GradedGroup, k: usize| g.rank(k) as i64;
    let mut labels = Vec::new();
    let mut prev_delta = 0i64;
    for k in 0..=top {
        let (c, a, kk) = (r(repeller, k), r(total, k), r(attractor, k));
        let f = c - prev_delta;
        let g = a - f;
        let d = kk - g;
        let next_c = r(repeller, k + 1);
        let ok = (0..=c.min(a)).contains(&f)
            && (0..=a.min(kk)).contains(&g)
            && (0..=kk.min(next_c)).contains(&d)
            && (k < top || d == 0);
        if !ok {
            return ExactnessVerdict { pass: false, first_failing_degree: Some(k), labels, torsion_ignored };
        }
        labels.push(SequenceLabels { repeller_to_total: f, total_to_attractor: g, connecting: d });
        prev_delta = d;
    }
    ExactnessVerdict { pass: true, first_failing_degree: None, labels, torsion_ignored }
}
