//! Orbit counts of subgroups on coset spaces, and the resulting type counts.

use alloc::vec;
use alloc::vec::Vec;

use crate::arith::sl2_order;
use crate::congruence::{enumerate_sl2_with_limit, image_at_level, CongruenceError, GroupDescriptor, Subgroup};
use crate::galois::{GoursatCertificate, GoursatVerdict, ImageCertificate, ImageVerdict};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypesError {
    #[error("the evidence does not bound the image")]
    EvidenceInsufficient,
    #[error("subgroups live in different ambient groups")]
    AmbientMismatch,
    #[error(transparent)]
    Level(#[from] CongruenceError),
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Number of `H`-orbits on the left cosets `G/K` under left translation.
pub fn count_orbits(h: &Subgroup<'_>, k: &Subgroup<'_>) -> Result<usize, TypesError> {
    let g = h.parent();
    if !core::ptr::eq(g, k.parent()) {
        return Err(TypesError::AmbientMismatch);
    }
    // label each coset x K by a dense id
    let mut label = vec![usize::MAX; g.order()];
    let kel: Vec<_> = k.elements().collect();
    let mut reps = Vec::new();
    for i in 0..g.order() {
        if label[i] != usize::MAX {
            continue;
        }
        let x = g.element(i);
        let id = reps.len();
        reps.push(x);
        for y in &kel {
            let j = g.index_of(&g.mul(&x, y)).expect("closed");
            label[j] = id;
        }
    }
    let mut uf = UnionFind((0..reps.len()).collect());
    for (id, x) in reps.iter().enumerate() {
        for s in h.generators() {
            let j = g.index_of(&g.mul(s, x)).expect("closed");
            uf.union(id, label[j]);
        }
    }
    Ok((0..reps.len()).filter(|&i| uf.find(i) == i).count())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeCountReport {
    pub level: u64,
    pub m: u32,
    pub ambient_order: u64,
    pub subgroup_order: Option<u64>,
    /// Exact index, when the subgroup is known exactly.
    pub index: Option<u64>,
    /// Lower bound on the index assuming the image lies in the asserted class.
    pub lower_bound: Option<u64>,
    /// Lower bound using the largest class not excluded by the evidence.
    pub conservative_lower_bound: Option<u64>,
    /// `(level, index)` for each level examined.
    pub orbit_counts_by_level: Vec<(u64, u64)>,
    /// The orbit count grew at the last level step.
    pub strict_growth: bool,
}

fn growth(seq: &[(u64, u64)]) -> bool {
    seq.len() >= 2 && seq[seq.len() - 1].1 > seq[seq.len() - 2].1
}

/// Exact report for an enumerated subgroup, cross-checked against the orbit
/// count on the regular coset space.
pub fn report_for_subgroup(h: &Subgroup<'_>) -> TypeCountReport {
    let g = h.parent();
    let trivial = Subgroup::trivial(g);
    let orbits = count_orbits(h, &trivial).expect("same ambient") as u64;
    let index = (g.order() / h.order()) as u64;
    debug_assert_eq!(orbits, index);
    let level = g.modulus() as u64;
    TypeCountReport {
        level,
        m: 1,
        ambient_order: g.order() as u64,
        subgroup_order: Some(h.order() as u64),
        index: Some(orbits),
        lower_bound: None,
        conservative_lower_bound: None,
        orbit_counts_by_level: vec![(level, orbits)],
        strict_growth: false,
    }
}

/// Exact indices of the image of `g` at each level, in the order given.
pub fn report_for_descriptor(g: &GroupDescriptor, levels: &[u64], limit: u64) -> Result<TypeCountReport, TypesError> {
    let mut seq = Vec::new();
    let mut last = None;
    for &n in levels {
        let parent = enumerate_sl2_with_limit(n, limit)?;
        let h = image_at_level(g, &parent)?;
        let trivial = Subgroup::trivial(&parent);
        let orbits = count_orbits(&h, &trivial)? as u64;
        seq.push((n, orbits));
        last = Some((n, parent.order() as u64, h.order() as u64, orbits));
    }
    let (level, ambient, sub, idx) = last.ok_or(TypesError::EvidenceInsufficient)?;
    Ok(TypeCountReport {
        level,
        m: 1,
        ambient_order: ambient,
        subgroup_order: Some(sub),
        index: Some(idx),
        lower_bound: None,
        conservative_lower_bound: None,
        strict_growth: growth(&seq),
        orbit_counts_by_level: seq,
    })
}

/// Bounds from a mod-`p` image certificate (`m = 1`).
pub fn report_for_certificate(cert: &ImageCertificate) -> Result<TypeCountReport, TypesError> {
    let p = cert.p;
    let ambient = sl2_order(p);
    let mut r = TypeCountReport {
        level: p,
        m: 1,
        ambient_order: ambient,
        subgroup_order: None,
        index: None,
        lower_bound: None,
        conservative_lower_bound: None,
        orbit_counts_by_level: Vec::new(),
        strict_growth: false,
    };
    match cert.verdict {
        ImageVerdict::Inconclusive => return Err(TypesError::EvidenceInsufficient),
        ImageVerdict::Surjective => {
            r.subgroup_order = Some(ambient);
            r.index = Some(1);
            r.orbit_counts_by_level.push((p, 1));
        }
        v => {
            let class = v.class().expect("containment verdict");
            let lb = ambient / class.order_in_sl2(p);
            let largest = cert
                .remaining
                .iter()
                .map(|c| c.order_in_sl2(p))
                .max()
                .expect("nonempty");
            r.lower_bound = Some(lb);
            r.conservative_lower_bound = Some(ambient / largest);
            r.orbit_counts_by_level.push((p, lb));
        }
    }
    Ok(r)
}

/// Bounds for a pair of curves at `p` (`m = 2`, ambient `SL_2(F_p)^2`).
pub fn report_for_pair(cert: &GoursatCertificate) -> Result<TypeCountReport, TypesError> {
    let p = cert.p;
    let ambient = sl2_order(p) * sl2_order(p);
    let base = TypeCountReport {
        level: p,
        m: 2,
        ambient_order: ambient,
        subgroup_order: None,
        index: None,
        lower_bound: None,
        conservative_lower_bound: None,
        orbit_counts_by_level: Vec::new(),
        strict_growth: false,
    };
    match cert.verdict {
        GoursatVerdict::FullProduct => Ok(TypeCountReport {
            subgroup_order: Some(ambient),
            index: Some(1),
            orbit_counts_by_level: vec![(p, 1)],
            ..base
        }),
        // the full product is still consistent with the evidence
        GoursatVerdict::GraphPossible => Ok(TypeCountReport {
            lower_bound: Some(1),
            conservative_lower_bound: Some(1),
            orbit_counts_by_level: vec![(p, 1)],
            ..base
        }),
        GoursatVerdict::Inconclusive => Err(TypesError::EvidenceInsufficient),
    }
}
