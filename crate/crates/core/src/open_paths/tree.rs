use rand_core::RngCore;
use serde::Serialize;

use crate::dist::ModelSpec;
use crate::error::{Error, Result};

/// Default cap on leaves per sampled tree.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 26;

/// Largest tree `enumerate_definitional` will materialize.
pub const DEFINITIONAL_LEAF_CAP: u64 = 729;

/// Values at one vertex of the critical tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct YnSample {
    pub y: u64,
    /// Number of open paths from generation 0 to this vertex.
    pub n: u64,
}

/// Values at one vertex of the coupled subcritical / critical tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CoupledSample {
    pub x: u64,
    pub y: u64,
    pub n: u64,
}

trait Vertex: Copy {
    type Acc: Copy;
    const EMPTY: Self::Acc;
    fn add(acc: &mut Self::Acc, child: Self);
    fn finish(acc: Self::Acc) -> Self;
}

impl Vertex for YnSample {
    type Acc = (u64, u64);
    const EMPTY: Self::Acc = (0, 0);

    #[inline(always)]
    fn add(acc: &mut Self::Acc, c: Self) {
        acc.0 += c.y;
        acc.1 += c.n;
    }

    #[inline(always)]
    fn finish((s, n): Self::Acc) -> Self {
        // Branch-free: leaf sums are random, so a branch here mispredicts.
        let open = u64::from(s >= 1);
        YnSample {
            y: s - open,
            n: n * open,
        }
    }
}

impl Vertex for CoupledSample {
    type Acc = (u64, u64, u64);
    const EMPTY: Self::Acc = (0, 0, 0);

    #[inline(always)]
    fn add(acc: &mut Self::Acc, c: Self) {
        acc.0 += c.x;
        acc.1 += c.y;
        acc.2 += c.n;
    }

    #[inline(always)]
    fn finish((sx, sy, n): Self::Acc) -> Self {
        let YnSample { y, n } = YnSample::finish((sy, n));
        CoupledSample {
            x: sx.saturating_sub(1),
            y,
            n,
        }
    }
}

/// Depth-first evaluation of a depth-`n`, arity-`m` tree, drawing leaves on
/// demand. Memory is one accumulator per level.
fn fold_tree<V: Vertex>(m: u32, n: u32, mut leaf: impl FnMut() -> V) -> V {
    if n == 0 {
        return leaf();
    }
    // Generation 1 is built in a tight loop; the stack handles the rest.
    let mut bottom = || {
        let mut a = V::EMPTY;
        for _ in 0..m {
            V::add(&mut a, leaf());
        }
        V::finish(a)
    };
    let depth = n as usize - 1;
    let mut acc = vec![V::EMPTY; depth + 1];
    let mut count = vec![0u32; depth + 1];
    loop {
        let mut v = bottom();
        let mut d = 1;
        loop {
            if d > depth {
                return v;
            }
            V::add(&mut acc[d], v);
            count[d] += 1;
            if count[d] < m {
                break;
            }
            v = V::finish(acc[d]);
            acc[d] = V::EMPTY;
            count[d] = 0;
            d += 1;
        }
    }
}

/// Inverse-CDF sampler for a finitely supported law, on 64-bit uniforms.
#[derive(Debug, Clone)]
struct Discrete {
    values: Vec<u64>,
    upper: Vec<u64>,
}

impl Discrete {
    fn new(atoms: &[(u64, f64)]) -> Self {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mut cum = 0.0;
        let mut values = Vec::new();
        let mut upper = Vec::new();
        for &(v, q) in atoms.iter().filter(|a| a.1 > 0.0) {
            cum += q / total;
            values.push(v);
            // float-to-int casts saturate, so the last bound is u64::MAX
            upper.push((cum * 18446744073709551616.0) as u64);
        }
        *upper.last_mut().expect("law has an atom") = u64::MAX;
        Self { values, upper }
    }

    #[inline(always)]
    fn draw(&self, rng: &mut impl RngCore) -> u64 {
        let u = rng.next_u64();
        let last = self.upper.len() - 1;
        let idx: usize = self.upper[..last]
            .iter()
            .map(|&b| usize::from(u >= b))
            .sum();
        self.values[idx]
    }
}

fn initial_atoms(spec: &ModelSpec) -> Vec<(u64, f64)> {
    std::iter::once((0, 1.0 - spec.p()))
        .chain(
            spec.star()
                .atoms()
                .iter()
                .map(|&(v, q)| (u64::from(v), spec.p() * q)),
        )
        .collect()
}

fn check_budget(m: u32, n: u32, budget: u64) -> Result<()> {
    let leaves = u128::from(m).checked_pow(n).unwrap_or(u128::MAX);
    if leaves > u128::from(budget) {
        return Err(Error::NodeBudgetExceeded {
            depth: n,
            leaves,
            budget,
        });
    }
    Ok(())
}

/// Largest number of atoms kept in the law of a bottom block.
pub const BLOCK_ATOM_CAP: usize = 4096;

/// Exact joint law of `(Y_d, N_d)` at a generation-`d` vertex of the critical
/// tree, as a list of atoms sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    pub depth: u32,
    pub atoms: Vec<(YnSample, f64)>,
}

impl JointLaw {
    /// Generation 0: `Y_0` from the initial law and `N_0 = 1`.
    pub fn initial(critical: &ModelSpec) -> Self {
        let atoms = initial_atoms(critical)
            .into_iter()
            .filter(|a| a.1 > 0.0)
            .map(|(y, q)| (YnSample { y, n: 1 }, q))
            .collect();
        Self { depth: 0, atoms }
    }

    /// Law one generation up, or `None` if it would need more than
    /// `max_atoms` atoms at any stage.
    pub fn step(&self, m: u32, max_atoms: usize) -> Option<Self> {
        use std::collections::BTreeMap;
        let mut sums: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        sums.insert((0, 0), 1.0);
        for _ in 0..m {
            let mut next = BTreeMap::new();
            for (&(s, n), &p) in &sums {
                for &(v, q) in &self.atoms {
                    *next.entry((s + v.y, n + v.n)).or_insert(0.0) += p * q;
                }
            }
            if next.len() > max_atoms {
                return None;
            }
            sums = next;
        }
        let mut up: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for ((s, n), p) in sums {
            let v = YnSample::finish((s, n));
            *up.entry((v.y, v.n)).or_insert(0.0) += p;
        }
        Some(Self {
            depth: self.depth + 1,
            atoms: up
                .into_iter()
                .map(|((y, n), p)| (YnSample { y, n }, p))
                .collect(),
        })
    }

    /// Deepest law up to `max_depth` that fits in `max_atoms` atoms.
    pub fn deepest(critical: &ModelSpec, max_depth: u32, max_atoms: usize) -> Self {
        let mut law = Self::initial(critical);
        while law.depth < max_depth {
            match law.step(critical.m(), max_atoms) {
                Some(next) => law = next,
                None => break,
            }
        }
        law
    }
}

/// Inverse-CDF table with a guide index, for laws with many atoms.
#[derive(Debug, Clone)]
struct GuidedTable<T> {
    values: Vec<T>,
    upper: Vec<u64>,
    guide: Vec<u32>,
    shift: u32,
}

impl<T: Copy> GuidedTable<T> {
    fn new(atoms: &[(T, f64)]) -> Self {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mut cum = 0.0;
        let mut values = Vec::with_capacity(atoms.len());
        let mut upper = Vec::with_capacity(atoms.len());
        for &(v, q) in atoms {
            cum += q / total;
            values.push(v);
            upper.push((cum * 18446744073709551616.0) as u64);
        }
        *upper.last_mut().expect("law has an atom") = u64::MAX;
        let bits = (4 * atoms.len())
            .next_power_of_two()
            .trailing_zeros()
            .max(1);
        let shift = 64 - bits;
        let mut guide = Vec::with_capacity(1 << bits);
        let mut i = 0usize;
        for g in 0..(1u64 << bits) {
            let start = g << shift;
            while upper[i] <= start {
                i += 1;
            }
            guide.push(i as u32);
        }
        Self {
            values,
            upper,
            guide,
            shift,
        }
    }

    #[inline(always)]
    fn draw(&self, rng: &mut impl RngCore) -> T {
        let u = rng.next_u64();
        let mut i = self.guide[(u >> self.shift) as usize] as usize;
        while u >= self.upper[i] {
            i += 1;
        }
        self.values[i]
    }
}

/// Draws the joint value of `(Y_n, N_n)` of the critical system at the root of
/// independent trees.
///
/// The lowest generations of each tree are not drawn leaf by leaf: every
/// vertex at the top of a bottom block is drawn at once from the exact
/// [`JointLaw`] of its subtree, and the tree is folded from there.
/// [`CriticalSampler::sample_leafwise`] draws every leaf instead.
#[derive(Debug, Clone)]
pub struct CriticalSampler {
    m: u32,
    n: u32,
    leaf: Discrete,
    block_depth: u32,
    block: GuidedTable<YnSample>,
}

impl CriticalSampler {
    pub fn new(spec: &ModelSpec, n: u32, budget: u64) -> Result<Self> {
        check_budget(spec.m(), n, budget)?;
        let critical = spec.at_criticality();
        let law = JointLaw::deepest(&critical, n, BLOCK_ATOM_CAP);
        Ok(Self {
            m: spec.m(),
            n,
            leaf: Discrete::new(&initial_atoms(&critical)),
            block_depth: law.depth,
            block: GuidedTable::new(&law.atoms),
        })
    }

    /// Generations drawn at once at the bottom of each tree.
    pub fn block_depth(&self) -> u32 {
        self.block_depth
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> YnSample {
        let block = &self.block;
        fold_tree(self.m, self.n - self.block_depth, || block.draw(rng))
    }

    /// Same law as [`CriticalSampler::sample`], one draw per leaf.
    pub fn sample_leafwise(&self, rng: &mut impl RngCore) -> YnSample {
        let leaf = &self.leaf;
        fold_tree(self.m, self.n, || YnSample {
            y: leaf.draw(rng),
            n: 1,
        })
    }
}

/// Draws `(X_n, Y_n, N_n)` on one tree, with leaves `X = Y Z` and `Z` an
/// independent Bernoulli(`p / p_c`).
#[derive(Debug, Clone)]
pub struct CoupledSampler {
    m: u32,
    n: u32,
    leaf: Discrete,
    keep: u64,
    keep_all: bool,
}

impl CoupledSampler {
    pub fn new(spec: &ModelSpec, n: u32, budget: u64) -> Result<Self> {
        if !(spec.p() > 0.0 && spec.p() <= spec.p_c()) {
            return Err(Error::InvalidModel(format!(
                "coupled sampling needs 0 < p <= p_c, got p = {}",
                spec.p()
            )));
        }
        check_budget(spec.m(), n, budget)?;
        let ratio = spec.p() / spec.p_c();
        Ok(Self {
            m: spec.m(),
            n,
            leaf: Discrete::new(&initial_atoms(&spec.at_criticality())),
            keep: (ratio * 18446744073709551616.0) as u64,
            keep_all: ratio >= 1.0,
        })
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> CoupledSample {
        fold_tree(self.m, self.n, || {
            let y = self.leaf.draw(rng);
            // Z only matters when Y > 0, so it is drawn only then.
            let x = if y > 0 && (self.keep_all || rng.next_u64() < self.keep) {
                y
            } else {
                0
            };
            CoupledSample { x, y, n: 1 }
        })
    }
}

/// One sample of `(Y_n, N_n)` of the critical system of `spec`.
pub fn sample_yn_pair(spec: &ModelSpec, n: u32, rng: &mut impl RngCore) -> Result<YnSample> {
    Ok(CriticalSampler::new(spec, n, DEFAULT_NODE_BUDGET)?.sample(rng))
}

/// One coupled sample of `(X_n, Y_n, N_n)`.
pub fn sample_coupled(spec: &ModelSpec, n: u32, rng: &mut impl RngCore) -> Result<CoupledSample> {
    Ok(CoupledSampler::new(spec, n, DEFAULT_NODE_BUDGET)?.sample(rng))
}

/// Root values of the tree whose generation-0 values are `leaves`, by the
/// local recursion.
pub fn fold_leaves(m: u32, n: u32, leaves: &[u64]) -> Result<YnSample> {
    check_len(m, n, leaves)?;
    let mut it = leaves.iter();
    Ok(fold_tree(m, n, || YnSample {
        y: *it.next().expect("length checked"),
        n: 1,
    }))
}

fn check_len(m: u32, n: u32, leaves: &[u64]) -> Result<()> {
    let want = u128::from(m).checked_pow(n).unwrap_or(u128::MAX);
    if want != leaves.len() as u128 {
        return Err(Error::InvalidArgument(format!(
            "a depth-{n} tree of arity {m} has {want} leaves, got {}",
            leaves.len()
        )));
    }
    Ok(())
}

/// A fully materialized tree. Generation `g` has `m^{n-g}` vertices; vertex
/// `i` of generation `g` feeds vertex `i / m` of generation `g + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeSample {
    pub m: u32,
    pub n: u32,
    pub leaf_values: Vec<u64>,
    /// `y[g][i]`.
    pub y: Vec<Vec<u64>>,
    /// `xi[g][i]`: sum of `Y` over the other vertices feeding the same child.
    /// Defined for generations `0..n`.
    pub xi: Vec<Vec<u64>>,
    /// `open[g][i]`: open paths from generation 0 to the vertex.
    pub open: Vec<Vec<u64>>,
}

impl TreeSample {
    pub fn from_leaves(m: u32, n: u32, leaves: &[u64]) -> Result<Self> {
        check_len(m, n, leaves)?;
        let width = m as usize;
        let mut y = vec![leaves.to_vec()];
        let mut open = vec![vec![1u64; leaves.len()]];
        let mut xi = Vec::with_capacity(n as usize);
        for g in 0..n as usize {
            let (yg, og) = (&y[g], &open[g]);
            let sums: Vec<u64> = yg.chunks(width).map(|c| c.iter().sum()).collect();
            xi.push(
                yg.iter()
                    .enumerate()
                    .map(|(i, &v)| sums[i / width] - v)
                    .collect(),
            );
            let next_open = og
                .chunks(width)
                .zip(&sums)
                .map(|(c, &s)| if s >= 1 { c.iter().sum() } else { 0 })
                .collect();
            y.push(sums.iter().map(|&s| s.saturating_sub(1)).collect());
            open.push(next_open);
        }
        Ok(Self {
            m,
            n,
            leaf_values: leaves.to_vec(),
            y,
            xi,
            open,
        })
    }

    pub fn root(&self) -> YnSample {
        let g = self.n as usize;
        YnSample {
            y: self.y[g][0],
            n: self.open[g][0],
        }
    }

    /// Whether the path starting at leaf `leaf` satisfies every partial-sum
    /// condition `Y(v_0) + ξ(v_0) + ... + ξ(v_i) >= i + 1`.
    pub fn path_is_open(&self, leaf: usize) -> bool {
        let mut running = self.leaf_values[leaf];
        let mut idx = leaf;
        for i in 0..self.n as usize {
            running += self.xi[i][idx];
            if running < i as u64 + 1 {
                return false;
            }
            idx /= self.m as usize;
        }
        true
    }
}

/// Counts open paths to the root by checking every leaf-to-root path against
/// the partial-sum condition. Independent of the local recursion.
pub fn enumerate_definitional(n: u32, m: u32, leaves: &[u64]) -> Result<u64> {
    let size = u128::from(m).checked_pow(n).unwrap_or(u128::MAX);
    if size > u128::from(DEFINITIONAL_LEAF_CAP) {
        return Err(Error::NodeBudgetExceeded {
            depth: n,
            leaves: size,
            budget: DEFINITIONAL_LEAF_CAP,
        });
    }
    let tree = TreeSample::from_leaves(m, n, leaves)?;
    Ok((0..leaves.len()).filter(|&i| tree.path_is_open(i)).count() as u64)
}
