use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

/// One finitely generated abelian group `Z^rank + sum Z/t_i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Group {
    pub rank: usize,
    /// Torsion coefficients, each > 1 and dividing the next.
    pub torsion: Vec<BigUint>,
}

impl Group {
    pub fn free(rank: usize) -> Self {
        Self { rank, torsion: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

/// Groups in degrees `0..=top`; higher degrees are zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GradedGroup {
    groups: Vec<Group>,
}

impl GradedGroup {
    pub fn new(groups: Vec<Group>) -> Self {
        Self { groups }
    }

    pub fn zero(top: usize) -> Self {
        Self { groups: vec![Group::default(); top + 1] }
    }

    /// Free groups of the given ranks.
    pub fn from_ranks(ranks: &[usize]) -> Self {
        Self { groups: ranks.iter().map(|&r| Group::free(r)).collect() }
    }

    /// Homology of a point, padded to degree `top`.
    pub fn point(top: usize) -> Self {
        let mut g = Self::zero(top);
        g.groups[0].rank = 1;
        g
    }

    /// Homology of the sphere `S^k`, padded to degree `top >= k`.
    pub fn sphere(k: usize, top: usize) -> Self {
        let mut g = Self::zero(top.max(k));
        g.groups[0].rank += 1;
        g.groups[k].rank += 1;
        g
    }

    /// Highest stored degree.
    pub fn top(&self) -> usize {
        self.groups.len().saturating_sub(1)
    }

    pub fn group(&self, k: usize) -> Option<&Group> {
        self.groups.get(k)
    }

    pub fn rank(&self, k: usize) -> usize {
        self.groups.get(k).map_or(0, |g| g.rank)
    }

    pub fn torsion(&self, k: usize) -> &[BigUint] {
        self.groups.get(k).map_or(&[], |g| g.torsion.as_slice())
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.rank).collect()
    }

    pub fn has_torsion(&self) -> bool {
        self.groups.iter().any(|g| !g.torsion.is_empty())
    }

    /// Zero in every degree.
    pub fn is_trivial(&self) -> bool {
        self.groups.iter().all(Group::is_zero)
    }

    /// Equal as graded groups, ignoring trailing zero degrees.
    pub fn same_as(&self, other: &Self) -> bool {
        let top = self.groups.len().max(other.groups.len());
        (0..top).all(|k| {
            let z = Group::default();
            self.groups.get(k).unwrap_or(&z) == other.groups.get(k).unwrap_or(&z)
        })
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.groups.iter().enumerate().map(|(k, g)| if k % 2 == 0 { g.rank as i64 } else { -(g.rank as i64) }).sum()
    }

    /// Cohomology from homology by universal coefficients: `H^k` has the
    /// rank of `H_k` and the torsion of `H_{k-1}`.
    pub fn cohomology(&self) -> Self {
        let groups = (0..self.groups.len())
            .map(|k| Group {
                rank: self.groups[k].rank,
                torsion: if k == 0 { Vec::new() } else { self.groups[k - 1].torsion.clone() },
            })
            .collect();
        Self { groups }
    }
}

impl fmt::Display for GradedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .groups
            .iter()
            .map(|g| {
                let mut terms = Vec::new();
                match g.rank {
                    0 => {}
                    1 => terms.push("Z".to_string()),
                    r => terms.push(format!("Z^{r}")),
                }
                terms.extend(g.torsion.iter().map(|t| format!("Z/{t}")));
                if terms.is_empty() {
                    "0".to_string()
                } else {
                    terms.join("+")
                }
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

struct Coeff<'a>(&'a BigUint);

impl Serialize for Coeff<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_u64() {
            Some(v) => s.serialize_u64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

struct Entry<'a>(usize, &'a Group);

impl Serialize for Entry<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("dim", &self.0)?;
        m.serialize_entry("rank", &self.1.rank)?;
        let t: Vec<Coeff<'_>> = self.1.torsion.iter().map(Coeff).collect();
        m.serialize_entry("torsion", &t)?;
        m.end()
    }
}

impl Serialize for GradedGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.groups.len()))?;
        for (k, g) in self.groups.iter().enumerate() {
            seq.serialize_element(&Entry(k, g))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let mut g = GradedGroup::sphere(1, 2);
        g.groups[1].torsion.push(BigUint::from(2u32));
        let j = serde_json::to_string(&g).unwrap();
        assert_eq!(
            j,
            r#"[{"dim":0,"rank":1,"torsion":[]},{"dim":1,"rank":1,"torsion":[2]},{"dim":2,"rank":0,"torsion":[]}]"#
        );
        assert_eq!(g.to_string(), "(Z, Z+Z/2, 0)");
    }

    #[test]
    fn universal_coefficients() {
        let mut g = GradedGroup::from_ranks(&[1, 0, 0]);
        g.groups[1].torsion.push(BigUint::from(2u32));
        let c = g.cohomology();
        assert_eq!(c.rank(0), 1);
        assert!(c.torsion(1).is_empty());
        assert_eq!(c.torsion(2), &[BigUint::from(2u32)]);
    }
}
