//! Congruence subgroups of `SL_2(Z)` described symbolically, the finite groups
//! `SL_2(Z/N)`, and images of the former in the latter.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{ext_gcd, gcd_i64};
use crate::linear::RatMatrix;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CongruenceError {
    #[error("level {level} exceeds the enumeration limit {limit}")]
    LevelTooLarge { level: u64, limit: u64 },
    #[error("level {level} is not a multiple of the required level {required}")]
    IncompatibleLevel { level: u64, required: u64 },
    #[error("determinant is not 1 modulo {0}")]
    BadDeterminant(u64),
    #[error("first group is not contained in the second")]
    NotContained,
    #[error("element set is not closed under multiplication")]
    NotClosed,
    #[error("cannot parse group descriptor: {0}")]
    Parse(String),
}

/// Default bound on `N` for enumerating `SL_2(Z/N)`.
pub const DEFAULT_LEVEL_LIMIT: u64 = 30;

/// A congruence subgroup given by its defining congruences.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupDescriptor {
    Full,
    Principal(u64),
    Gamma0(u64),
    Gamma1(u64),
    /// `{gamma in base : g gamma g^-1 in base for every g}`.
    Cap(Box<GroupDescriptor>, Vec<RatMatrix>),
}

fn integral_sl2(g: &RatMatrix) -> Option<[BigInt; 4]> {
    if !g.det().is_one() {
        return None;
    }
    g.to_integers()
}

fn divides(n: u64, x: &BigInt) -> bool {
    (x % BigInt::from(n)).is_zero()
}

impl GroupDescriptor {
    pub fn cap(base: GroupDescriptor, tuple: Vec<RatMatrix>) -> Self {
        GroupDescriptor::Cap(Box::new(base), tuple)
    }

    pub fn contains(&self, g: &RatMatrix) -> bool {
        let Some([a, b, c, d]) = integral_sl2(g) else {
            return false;
        };
        let one = BigInt::one();
        match self {
            GroupDescriptor::Full => true,
            GroupDescriptor::Principal(n) => {
                divides(*n, &b) && divides(*n, &c) && divides(*n, &(&a - &one)) && divides(*n, &(&d - &one))
            }
            GroupDescriptor::Gamma0(n) => divides(*n, &c),
            GroupDescriptor::Gamma1(n) => divides(*n, &c) && divides(*n, &(&a - &one)) && divides(*n, &(&d - &one)),
            GroupDescriptor::Cap(base, tuple) => {
                base.contains(g) && tuple.iter().all(|h| base.contains(&(&(h * g) * &h.inverse())))
            }
        }
    }

    /// A level `N` such that membership depends only on `gamma mod N` and the
    /// group contains `Gamma(N)`. For an intersection of conjugates this is the
    /// base level times the lcm of the determinants of the tuple scaled to
    /// coprime integers.
    pub fn required_level(&self) -> u64 {
        match self {
            GroupDescriptor::Full => 1,
            GroupDescriptor::Principal(n) | GroupDescriptor::Gamma0(n) | GroupDescriptor::Gamma1(n) => *n,
            GroupDescriptor::Cap(base, tuple) => {
                let l = tuple
                    .iter()
                    .fold(BigInt::one(), |acc, h| acc.lcm(&h.normalized().det().to_integer()));
                base.required_level() * l.to_u64().expect("tuple determinants fit in u64")
            }
        }
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Full => write!(f, "Gamma"),
            GroupDescriptor::Principal(n) => write!(f, "Gamma({n})"),
            GroupDescriptor::Gamma0(n) => write!(f, "Gamma0({n})"),
            GroupDescriptor::Gamma1(n) => write!(f, "Gamma1({n})"),
            GroupDescriptor::Cap(base, tuple) => {
                write!(f, "Cap({base}, [")?;
                for (i, h) in tuple.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{h}")?;
                }
                write!(f, "])")
            }
        }
    }
}

/// Splits at commas outside any bracket or parenthesis.
fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl FromStr for GroupDescriptor {
    type Err = CongruenceError;

    fn from_str(s: &str) -> Result<Self, CongruenceError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || CongruenceError::Parse(s.to_string());
        let level = |inner: &str| -> Result<u64, CongruenceError> {
            let n: u64 = inner.parse().map_err(|_| err())?;
            if n == 0 {
                return Err(err());
            }
            Ok(n)
        };
        if compact == "Gamma" || compact == "Gamma(1)" {
            return Ok(GroupDescriptor::Full);
        }
        if let Some(inner) = compact.strip_prefix("Cap(").and_then(|r| r.strip_suffix(')')) {
            let parts = split_top(inner);
            if parts.len() != 2 {
                return Err(err());
            }
            let base: GroupDescriptor = parts[0].parse()?;
            let list = parts[1]
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(err)?;
            let mut tuple = Vec::new();
            if !list.is_empty() {
                for m in split_top(list) {
                    tuple.push(m.parse::<RatMatrix>().map_err(|_| err())?);
                }
            }
            return Ok(GroupDescriptor::cap(base, tuple));
        }
        for (prefix, ctor) in [
            ("Gamma0(", GroupDescriptor::Gamma0 as fn(u64) -> GroupDescriptor),
            ("Gamma1(", GroupDescriptor::Gamma1),
            ("Gamma(", GroupDescriptor::Principal),
        ] {
            if let Some(inner) = compact.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')) {
                return Ok(ctor(level(inner)?));
            }
        }
        Err(err())
    }
}

/// A matrix over `Z/N` as `[a, b, c, d]` with entries in `0..N`.
pub type ModMatrix = [u16; 4];

pub fn mod_mul(x: &ModMatrix, y: &ModMatrix, n: u16) -> ModMatrix {
    let n = n as u32;
    let [a, b, c, d] = x.map(u32::from);
    let [e, f, g, h] = y.map(u32::from);
    [
        ((a * e + b * g) % n) as u16,
        ((a * f + b * h) % n) as u16,
        ((c * e + d * g) % n) as u16,
        ((c * f + d * h) % n) as u16,
    ]
}

/// Inverse of a determinant-one matrix mod `n`.
pub fn mod_inv_sl2(x: &ModMatrix, n: u16) -> ModMatrix {
    let neg = |v: u16| if v == 0 { 0 } else { n - v };
    [x[3], neg(x[1]), neg(x[2]), x[0]]
}

pub fn reduce_mod(g: &RatMatrix, n: u16) -> Option<ModMatrix> {
    let ints = g.to_integers()?;
    let m = BigInt::from(n);
    let r = |v: &BigInt| v.mod_floor(&m).to_u16().expect("residue fits");
    Some([r(&ints[0]), r(&ints[1]), r(&ints[2]), r(&ints[3])])
}

/// An integral determinant-one matrix reducing to `m` modulo `n`.
pub fn lift_to_sl2z(m: &ModMatrix, n: u64) -> Result<RatMatrix, CongruenceError> {
    let ni = n as i64;
    let [a, b, c, d] = m.map(|v| (v as i64).rem_euclid(ni));
    if (a * d - b * c - 1).rem_euclid(ni) != 0 {
        return Err(CongruenceError::BadDeterminant(n));
    }
    if n == 1 {
        return Ok(RatMatrix::identity());
    }
    let sym = |v: i64| if 2 * v > ni { v - ni } else { v };
    let (a, b, mut c1, mut d1) = (sym(a), sym(b), sym(c), sym(d));
    // bottom row: coprime integers congruent to (c, d)
    if gcd_i64(c1, d1) != 1 {
        if c1 == 0 {
            c1 = ni;
        }
        while gcd_i64(c1, d1) != 1 {
            d1 += ni;
        }
    }
    let (_, x, y) = ext_gcd(d1, -c1);
    // x d1 - y c1 = 1; the other solutions are (x + k c1, y + k d1)
    let size = |k: i64| (x + k * c1).abs().max((y + k * d1).abs());
    for k in 0..ni {
        let a1 = x + k * c1;
        let b1 = y + k * d1;
        if (a1 - a).rem_euclid(ni) == 0 && (b1 - b).rem_euclid(ni) == 0 {
            let k = if size(k - ni) < size(k) { k - ni } else { k };
            return Ok(RatMatrix::from_ints(x + k * c1, y + k * d1, c1, d1).expect("determinant one"));
        }
    }
    unreachable!("the top row is determined up to multiples of the bottom row")
}

/// `SL_2(Z/N)` with a dense index for constant-time lookup.
#[derive(Clone, Debug)]
pub struct FiniteMatrixGroup {
    modulus: u16,
    elements: Vec<ModMatrix>,
    index: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl FiniteMatrixGroup {
    fn key(&self, m: &ModMatrix) -> usize {
        let n = self.modulus as usize;
        ((m[0] as usize * n + m[1] as usize) * n + m[2] as usize) * n + m[3] as usize
    }

    pub fn modulus(&self) -> u16 {
        self.modulus
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ModMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> ModMatrix {
        self.elements[i]
    }

    pub fn index_of(&self, m: &ModMatrix) -> Option<usize> {
        if m.iter().any(|&v| v >= self.modulus) {
            return None;
        }
        let i = self.index[self.key(m)];
        (i != ABSENT).then_some(i as usize)
    }

    pub fn identity(&self) -> ModMatrix {
        if self.modulus == 1 {
            [0; 4]
        } else {
            [1, 0, 0, 1]
        }
    }

    pub fn mul(&self, x: &ModMatrix, y: &ModMatrix) -> ModMatrix {
        mod_mul(x, y, self.modulus)
    }

    pub fn inv(&self, x: &ModMatrix) -> ModMatrix {
        mod_inv_sl2(x, self.modulus)
    }

    /// Images of `S` and `T`, which generate.
    pub fn standard_generators(&self) -> [ModMatrix; 2] {
        let n = self.modulus;
        if n == 1 {
            return [[0; 4], [0; 4]];
        }
        [[0, n - 1, 1, 0], [1, 1 % n, 0, 1]]
    }
}

pub fn enumerate_sl2(n: u64) -> Result<FiniteMatrixGroup, CongruenceError> {
    enumerate_sl2_with_limit(n, DEFAULT_LEVEL_LIMIT)
}

/// All determinant-one matrices modulo `n`, in lexicographic order.
pub fn enumerate_sl2_with_limit(n: u64, limit: u64) -> Result<FiniteMatrixGroup, CongruenceError> {
    if n == 0 || n > limit || n > 255 {
        return Err(CongruenceError::LevelTooLarge { level: n, limit });
    }
    let m = n as u32;
    let mut elements = Vec::new();
    let mut index = vec![ABSENT; (m * m * m * m) as usize];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    if (a * d + m * m - b * c % m) % m == 1 % m {
                        let k = (((a * m + b) * m + c) * m + d) as usize;
                        index[k] = elements.len() as u32;
                        elements.push([a as u16, b as u16, c as u16, d as u16]);
                    }
                }
            }
        }
    }
    Ok(FiniteMatrixGroup {
        modulus: n as u16,
        elements,
        index,
    })
}

/// A subgroup of an enumerated `SL_2(Z/N)`.
#[derive(Clone, Debug)]
pub struct Subgroup<'a> {
    parent: &'a FiniteMatrixGroup,
    generators: Vec<ModMatrix>,
    mask: Vec<bool>,
    order: usize,
}

impl<'a> Subgroup<'a> {
    fn closure_mask(parent: &FiniteMatrixGroup, gens: &[ModMatrix]) -> Vec<bool> {
        let mut mask = vec![false; parent.order()];
        let e = parent.identity();
        let ie = parent.index_of(&e).expect("identity");
        mask[ie] = true;
        let mut queue = VecDeque::from([e]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = parent.mul(&x, g);
                let iy = parent.index_of(&y).expect("closed under products");
                if !mask[iy] {
                    mask[iy] = true;
                    queue.push_back(y);
                }
            }
        }
        mask
    }

    fn from_parts(parent: &'a FiniteMatrixGroup, generators: Vec<ModMatrix>, mask: Vec<bool>) -> Self {
        let order = mask.iter().filter(|b| **b).count();
        Subgroup {
            parent,
            generators,
            mask,
            order,
        }
    }

    pub fn generated(parent: &'a FiniteMatrixGroup, gens: &[ModMatrix]) -> Self {
        let gens: Vec<ModMatrix> = gens.iter().map(|g| g.map(|v| v % parent.modulus().max(1))).collect();
        let mask = Self::closure_mask(parent, &gens);
        Self::from_parts(parent, gens, mask)
    }

    pub fn full(parent: &'a FiniteMatrixGroup) -> Self {
        Self::generated(parent, &parent.standard_generators())
    }

    pub fn trivial(parent: &'a FiniteMatrixGroup) -> Self {
        Self::generated(parent, &[])
    }

    /// Builds the subgroup with the given members, extracting a generating
    /// set greedily; fails if the set is not a subgroup.
    pub fn from_mask(parent: &'a FiniteMatrixGroup, mask: Vec<bool>) -> Result<Self, CongruenceError> {
        assert_eq!(mask.len(), parent.order());
        let mut gens = Vec::new();
        let mut current = Self::closure_mask(parent, &gens);
        for (i, &inside) in mask.iter().enumerate() {
            if inside && !current[i] {
                gens.push(parent.element(i));
                current = Self::closure_mask(parent, &gens);
                if current.iter().zip(&mask).any(|(c, m)| *c && !*m) {
                    return Err(CongruenceError::NotClosed);
                }
            }
        }
        if current != mask {
            return Err(CongruenceError::NotClosed);
        }
        Ok(Self::from_parts(parent, gens, mask))
    }

    pub fn parent(&self) -> &'a FiniteMatrixGroup {
        self.parent
    }

    pub fn generators(&self) -> &[ModMatrix] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn index(&self) -> usize {
        self.parent.order() / self.order
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, m: &ModMatrix) -> bool {
        self.parent.index_of(m).is_some_and(|i| self.mask[i])
    }

    pub fn elements(&self) -> impl Iterator<Item = ModMatrix> + '_ {
        self.parent
            .elements()
            .iter()
            .zip(&self.mask)
            .filter_map(|(m, inside)| inside.then_some(*m))
    }

    pub fn is_subgroup_of(&self, other: &Subgroup<'_>) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    pub fn intersection(&self, other: &Subgroup<'a>) -> Subgroup<'a> {
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        Subgroup::from_mask(self.parent, mask).expect("intersection of subgroups")
    }

    /// `g H g^-1`.
    pub fn conjugate(&self, g: &ModMatrix) -> Subgroup<'a> {
        let gi = self.parent.inv(g);
        let gens: Vec<ModMatrix> = self
            .generators
            .iter()
            .map(|h| self.parent.mul(&self.parent.mul(g, h), &gi))
            .collect();
        Subgroup::generated(self.parent, &gens)
    }

    pub fn is_normal(&self) -> bool {
        self.parent.standard_generators().iter().all(|s| {
            let si = self.parent.inv(s);
            self.generators
                .iter()
                .all(|h| self.contains(&self.parent.mul(&self.parent.mul(s, h), &si)))
        })
    }

    /// The largest subgroup of `self` normal in the parent.
    pub fn normal_core(&self) -> Subgroup<'a> {
        let mut core = self.clone();
        loop {
            let mut next = core.clone();
            for s in self.parent.standard_generators() {
                let si = self.parent.inv(&s);
                next = next.intersection(&core.conjugate(&s));
                next = next.intersection(&core.conjugate(&si));
            }
            if next.order == core.order {
                return core;
            }
            core = next;
        }
    }
}

/// `{gamma mod N : gamma in G}` inside `parent = SL_2(Z/N)`, by lifting every
/// element and testing membership exactly.
pub fn image_at_level<'a>(g: &GroupDescriptor, parent: &'a FiniteMatrixGroup) -> Result<Subgroup<'a>, CongruenceError> {
    let n = parent.modulus() as u64;
    let required = g.required_level();
    if !n.is_multiple_of(required) {
        return Err(CongruenceError::IncompatibleLevel { level: n, required });
    }
    let mask = parent
        .elements()
        .iter()
        .map(|m| {
            let lift = lift_to_sl2z(m, n).expect("parent elements have determinant one");
            g.contains(&lift)
        })
        .collect();
    Subgroup::from_mask(parent, mask)
}

/// `[inn : g]`, computed at the least common level.
pub fn index(g: &GroupDescriptor, inn: &GroupDescriptor, limit: u64) -> Result<u64, CongruenceError> {
    let level = g.required_level().lcm(&inn.required_level());
    let parent = enumerate_sl2_with_limit(level, limit)?;
    let small = image_at_level(g, &parent)?;
    let big = image_at_level(inn, &parent)?;
    if !small.is_subgroup_of(&big) {
        return Err(CongruenceError::NotContained);
    }
    Ok((big.order() / small.order()) as u64)
}

/// Human-readable summary of a matrix mod `N`.
pub fn format_mod_matrix(m: &ModMatrix) -> String {
    format!("[[{},{}],[{},{}]]", m[0], m[1], m[2], m[3])
}
