//! Incidence matrices and the asymptotic growth classes of iterated images.
//!
//! For a letter `a`, `|φ^{Tk}(a)|` behaves like `G·(Tk)^l·α^{Tk}` and each
//! letter count `|φ^{Tk}(a)|_b` like `G'·(Tk)^m·β^{Tk}` (up to peripheral
//! oscillation). The exponents are read off the condensation of the letter
//! dependency graph: `α` is the largest Perron value among components reachable
//! from `a`, and `l + 1` is the largest number of components attaining it on a
//! single directed path. `T` is the lcm of the cyclicities of those components.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::words::{Letter, MorphicSystem, Morphism};

/// Relative tolerance for declaring two Perron values equal.
pub const PERRON_EQ_TOL: f64 = 1e-9;
/// Relative accuracy requested from [`perron_value`].
pub const PERRON_REL_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITER: usize = 100_000;

/// Iterations beyond which `G` estimates are skipped.
const MAX_ESTIMATE_ITER: u64 = 20_000;

/// `entry(i, j)` is the number of occurrences of letter `i` in `φ(letter j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrix {
    dim: usize,
    entries: Vec<BigUint>,
}

impl IncidenceMatrix {
    pub fn from_morphism(m: &Morphism) -> Self {
        let dim = m.alphabet().len();
        let mut entries = vec![BigUint::zero(); dim * dim];
        for (j, image) in m.images().iter().enumerate() {
            for c in image {
                entries[c.index() * dim + j] += 1u32;
            }
        }
        IncidenceMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![BigUint::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = BigUint::one();
        }
        IncidenceMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.dim + j]
    }

    pub fn column_sum(&self, j: usize) -> BigUint {
        (0..self.dim).map(|i| self.entry(i, j)).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[BigUint]> {
        self.entries.chunks(self.dim)
    }

    pub fn mul(&self, other: &IncidenceMatrix) -> IncidenceMatrix {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut entries = vec![BigUint::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = &self.entries[i * d + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = &other.entries[k * d + j];
                    if !b.is_zero() {
                        entries[i * d + j] += a * b;
                    }
                }
            }
        }
        IncidenceMatrix { dim: d, entries }
    }

    /// `M^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> IncidenceMatrix {
        let mut result = IncidenceMatrix::identity(self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact `|φ^k(source)|_target`.
    pub fn power_count(&self, k: u64, source: Letter, target: Letter) -> BigUint {
        self.pow(k).entry(target.index(), source.index()).clone()
    }

    pub fn unit_vector(&self, a: Letter) -> Vec<BigUint> {
        let mut v = vec![BigUint::zero(); self.dim];
        v[a.index()] = BigUint::one();
        v
    }

    /// Count vector of `φ(w)` from the count vector of `w`.
    pub fn step(&self, v: &[BigUint]) -> Vec<BigUint> {
        let d = self.dim;
        let mut out = vec![BigUint::zero(); d];
        for (j, vj) in v.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let e = &self.entries[i * d + j];
                if !e.is_zero() {
                    *o += e * vj;
                }
            }
        }
        out
    }

    /// Letter-count vectors of `φ^k(source)` for `k = 0..=kmax`.
    pub fn count_vectors(&self, source: Letter, kmax: u32) -> Vec<Vec<BigUint>> {
        let mut v = vec![BigUint::zero(); self.dim];
        v[source.index()] = BigUint::one();
        let mut out = Vec::with_capacity(kmax as usize + 1);
        for _ in 0..kmax {
            let next = self.step(&v);
            out.push(v);
            v = next;
        }
        out.push(v);
        out
    }

    /// Letter-count vectors of `φ^k(source)` at the requested iteration
    /// indices (ascending), without keeping the intermediate vectors.
    pub fn count_vectors_at(&self, source: Letter, ks: &[u64]) -> Vec<Vec<BigUint>> {
        let mut v = vec![BigUint::zero(); self.dim];
        v[source.index()] = BigUint::one();
        let mut k = 0;
        let mut out = Vec::with_capacity(ks.len());
        for &want in ks {
            assert!(want >= k, "indices must be ascending");
            while k < want {
                v = self.step(&v);
                k += 1;
            }
            out.push(v.clone());
        }
        out
    }

    fn submatrix_f64(&self, letters: &[Letter]) -> Vec<Vec<f64>> {
        letters
            .iter()
            .map(|r| {
                letters
                    .iter()
                    .map(|c| {
                        self.entry(r.index(), c.index())
                            .to_f64()
                            .unwrap_or(f64::INFINITY)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Exact `|φ^k(source)|_target` via repeated squaring of the incidence matrix.
pub fn matrix_power_count(m: &IncidenceMatrix, k: u64, source: Letter, target: Letter) -> BigUint {
    m.power_count(k, source, target)
}

/// Natural logarithm of a positive big integer.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().expect("finite below 2^1000").ln()
    } else {
        let shift = bits - 64;
        (x >> shift).to_f64().expect("64-bit mantissa").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Spectral radius of a nonnegative irreducible matrix.
///
/// Power iteration on `A + I` (primitive whenever `A` is irreducible), stopped
/// once the Collatz-Wielandt bounds `min (Bx)_i/x_i <= ρ(B) <= max (Bx)_i/x_i`
/// agree to [`PERRON_REL_TOL`].
pub fn perron_value(sub: &[Vec<f64>]) -> Result<f64> {
    perron_value_with(sub, PERRON_MAX_ITER)
}

pub fn perron_value_with(sub: &[Vec<f64>], max_iter: usize) -> Result<f64> {
    let n = sub.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0f64; n];
    let mut y = vec![0.0f64; n];
    for _ in 0..max_iter {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = x[i] + sub[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (yi, xi) in y.iter().zip(&x) {
            if *xi > 0.0 {
                let r = yi / xi;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        if hi - lo <= PERRON_REL_TOL * (lo - 1.0).max(1.0) {
            return Ok(((lo + hi) / 2.0 - 1.0).max(0.0));
        }
        let scale = y.iter().cloned().fold(0.0, f64::max);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / scale;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
    })
}

fn successors(m: &Morphism, c: Letter) -> Vec<Letter> {
    let mut s: Vec<Letter> = m.image(c).to_vec();
    s.sort();
    s.dedup();
    s
}

/// Index of imprimitivity of a strongly connected letter set: the gcd of
/// cycle lengths through any of its letters. A single letter without a
/// self-loop reports 1.
pub fn cyclicity(m: &Morphism, component: &[Letter]) -> u32 {
    let d = m.alphabet().len();
    let mut member = vec![false; d];
    for c in component {
        member[c.index()] = true;
    }
    let mut level: Vec<Option<u64>> = vec![None; d];
    let root = component[0];
    level[root.index()] = Some(0);
    let mut queue = std::collections::VecDeque::from([root]);
    let mut g: u64 = 0;
    while let Some(u) = queue.pop_front() {
        let lu = level[u.index()].expect("visited");
        for v in successors(m, u) {
            if !member[v.index()] {
                continue;
            }
            match level[v.index()] {
                None => {
                    level[v.index()] = Some(lu + 1);
                    queue.push_back(v);
                }
                Some(lv) => g = g.gcd(&(lu + 1).abs_diff(lv)),
            }
        }
    }
    // Tree edges contribute lu + 1 - lv = 0; g == 0 means no cycle at all.
    if g == 0 {
        1
    } else {
        g as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub letters: Vec<Letter>,
    pub rho: f64,
    pub cyclicity: u32,
    pub has_cycle: bool,
}

/// Condensation of the dependency digraph (edge `c -> d` iff `d` occurs in
/// `φ(c)`) restricted to letters reachable from a root.
#[derive(Clone, Debug)]
pub struct ComponentDag {
    components: Vec<Component>,
    successors: Vec<Vec<usize>>,
    component_of: Vec<Option<usize>>,
    root: usize,
}

impl ComponentDag {
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn successors(&self, c: usize) -> &[usize] {
        &self.successors[c]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(u, s)| s.iter().map(move |&v| (u, v)))
            .collect()
    }

    pub fn component_of(&self, a: Letter) -> Option<usize> {
        self.component_of[a.index()]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Components in an order where every edge goes forward.
    fn topological_order(&self) -> Vec<usize> {
        let n = self.components.len();
        let mut seen = vec![false; n];
        let mut post = Vec::with_capacity(n);
        fn visit(dag: &ComponentDag, c: usize, seen: &mut [bool], post: &mut Vec<usize>) {
            seen[c] = true;
            for &s in &dag.successors[c] {
                if !seen[s] {
                    visit(dag, s, seen, post);
                }
            }
            post.push(c);
        }
        for c in 0..n {
            if !seen[c] {
                visit(self, c, &mut seen, &mut post);
            }
        }
        post.reverse();
        post
    }
}

struct Tarjan<'a> {
    graph: &'a [Vec<Letter>],
    index: usize,
    idx: Vec<Option<usize>>,
    low: Vec<usize>,
    stack: Vec<usize>,
    on_stack: Vec<bool>,
    comps: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn connect(&mut self, v: usize) {
        self.idx[v] = Some(self.index);
        self.low[v] = self.index;
        self.index += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
        for w in self.graph[v].iter().map(|l| l.index()) {
            match self.idx[w] {
                None => {
                    self.connect(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(self.low[v]) == self.idx[v] {
            let mut comp = Vec::new();
            loop {
                let w = self.stack.pop().expect("tarjan stack");
                self.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            self.comps.push(comp);
        }
    }
}

/// Strongly connected components of the letters reachable from `root`,
/// ordered by smallest letter index, with their Perron values and cyclicities.
pub fn scc_dag(m: &Morphism, root: Letter) -> Result<ComponentDag> {
    let d = m.alphabet().len();
    let graph: Vec<Vec<Letter>> = m.alphabet().letters().map(|c| successors(m, c)).collect();
    let mut tarjan = Tarjan {
        graph: &graph,
        index: 0,
        idx: vec![None; d],
        low: vec![0; d],
        stack: Vec::new(),
        on_stack: vec![false; d],
        comps: Vec::new(),
    };
    // Only letters reachable from root are ever visited.
    tarjan.connect(root.index());
    let mut comps = tarjan.comps;
    comps.sort_by_key(|c| c[0]);

    let mut component_of = vec![None; d];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            component_of[v] = Some(ci);
        }
    }
    let mut succ = vec![Vec::new(); comps.len()];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            for w in &graph[v] {
                let cw = component_of[w.index()].expect("reachable");
                if cw != ci {
                    succ[ci].push(cw);
                }
            }
        }
        succ[ci].sort_unstable();
        succ[ci].dedup();
    }

    let matrix = IncidenceMatrix::from_morphism(m);
    let mut components = Vec::with_capacity(comps.len());
    for comp in &comps {
        let letters: Vec<Letter> = comp.iter().map(|&i| Letter::new(i)).collect();
        let has_cycle = letters.len() > 1 || graph[comp[0]].contains(&letters[0]);
        let rho = if has_cycle {
            perron_value(&matrix.submatrix_f64(&letters))?
        } else {
            0.0
        };
        components.push(Component {
            cyclicity: cyclicity(m, &letters),
            letters,
            rho,
            has_cycle,
        });
    }
    let root_comp = component_of[root.index()].expect("root visited");
    Ok(ComponentDag {
        components,
        successors: succ,
        component_of,
        root: root_comp,
    })
}

fn same_rate(x: f64, y: f64) -> bool {
    (x - y).abs() <= PERRON_EQ_TOL * x.abs().max(y.abs()).max(1.0)
}

/// Dominant rate along root-to-target paths of the condensation.
struct DominantChain {
    rate: f64,
    /// Largest number of rate-attaining components on one path, minus one.
    degree: u32,
    period: u32,
}

fn dominant_chain(dag: &ComponentDag, is_target: &[bool]) -> Option<DominantChain> {
    let n = dag.components.len();
    let order = dag.topological_order();

    let mut relevant = vec![false; n];
    for &c in order.iter().rev() {
        relevant[c] = is_target[c] || dag.successors[c].iter().any(|&s| relevant[s]);
    }
    if !relevant[dag.root] {
        return None;
    }
    let rate = (0..n)
        .filter(|&c| relevant[c])
        .map(|c| dag.components[c].rho)
        .fold(0.0, f64::max);
    let hit: Vec<u32> = (0..n)
        .map(|c| u32::from(relevant[c] && same_rate(dag.components[c].rho, rate)))
        .collect();

    // Best attaining-count from c down to some target, inclusive of c.
    let mut below: Vec<Option<u32>> = vec![None; n];
    for &c in order.iter().rev() {
        if !relevant[c] {
            continue;
        }
        let mut best = is_target[c].then_some(0);
        for &s in &dag.successors[c] {
            if let Some(b) = below[s] {
                best = Some(best.map_or(b, |x: u32| x.max(b)));
            }
        }
        below[c] = best.map(|b| b + hit[c]);
    }
    // Best attaining-count from the root down to c, inclusive of c.
    let mut above: Vec<Option<u32>> = vec![None; n];
    above[dag.root] = Some(hit[dag.root]);
    for &c in &order {
        let Some(a) = above[c] else { continue };
        for &s in &dag.successors[c] {
            if relevant[s] {
                let cand = a + hit[s];
                above[s] = Some(above[s].map_or(cand, |x| x.max(cand)));
            }
        }
    }

    let total = below[dag.root].expect("root is relevant");
    let mut period: u64 = 1;
    for c in 0..n {
        if hit[c] == 1 {
            if let (Some(a), Some(b)) = (above[c], below[c]) {
                if a + b - 1 == total {
                    period = period.lcm(&u64::from(dag.components[c].cyclicity));
                }
            }
        }
    }
    Some(DominantChain {
        rate,
        degree: total.saturating_sub(1),
        period: period as u32,
    })
}

/// `|φ^{Tk}(a)| ~ G (Tk)^l α^{Tk}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthClass {
    pub alpha: f64,
    pub l: u32,
    #[serde(rename = "T")]
    pub period: u32,
    #[serde(rename = "G_estimate")]
    pub g_estimate: Option<f64>,
}

/// `|φ^{Tk}(a)|_b ~ G' (Tk)^m Σ β_i^{Tk}` with `|β_i| = β`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LetterGrowthClass {
    pub beta: f64,
    pub m: u32,
    #[serde(rename = "T")]
    pub period: u32,
    #[serde(rename = "Gp_estimate")]
    pub gp_estimate: Option<f64>,
    pub eventually_zero: bool,
}

/// Mean of `count / (n^degree · rate^n)` over `n = 10T, 11T, …, 20T`.
fn estimate_constant(
    matrix: &IncidenceMatrix,
    source: Letter,
    targets: Option<&[Letter]>,
    rate: f64,
    degree: u32,
    period: u32,
) -> Option<f64> {
    let period = u64::from(period);
    if 20 * period > MAX_ESTIMATE_ITER || rate <= 0.0 {
        return None;
    }
    let ks: Vec<u64> = (10..=20).map(|k| k * period).collect();
    let vectors = matrix.count_vectors_at(source, &ks);
    let mut ratios = Vec::new();
    for (n, v) in ks.iter().zip(&vectors) {
        let count: BigUint = match targets {
            None => v.iter().sum(),
            Some(t) => t.iter().map(|b| &v[b.index()]).sum(),
        };
        if count.is_zero() {
            continue;
        }
        let n = *n as f64;
        let log_ratio = big_ln(&count) - f64::from(degree) * n.ln() - n * rate.ln();
        ratios.push(log_ratio.exp());
    }
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

pub fn growth_class(m: &Morphism, a: Letter) -> Result<GrowthClass> {
    let dag = scc_dag(m, a)?;
    let all = vec![true; dag.components.len()];
    let chain = dominant_chain(&dag, &all).expect("root reaches itself");
    let matrix = IncidenceMatrix::from_morphism(m);
    Ok(GrowthClass {
        alpha: chain.rate,
        l: chain.degree,
        period: chain.period,
        g_estimate: estimate_constant(&matrix, a, None, chain.rate, chain.degree, chain.period),
    })
}

pub fn letter_growth_class(m: &Morphism, a: Letter, b: Letter) -> Result<LetterGrowthClass> {
    targets_growth_class(m, a, &[b])
}

/// Growth class of the total count of a set of letters (e.g. all letters
/// sharing one output symbol).
pub fn targets_growth_class(
    m: &Morphism,
    a: Letter,
    targets: &[Letter],
) -> Result<LetterGrowthClass> {
    let dag = scc_dag(m, a)?;
    let mut is_target = vec![false; dag.components.len()];
    for &b in targets {
        if let Some(c) = dag.component_of(b) {
            is_target[c] = true;
        }
    }
    let matrix = IncidenceMatrix::from_morphism(m);
    let zero = LetterGrowthClass {
        beta: 0.0,
        m: 0,
        period: 1,
        gp_estimate: None,
        eventually_zero: true,
    };
    if eventually_zero(&matrix, a, targets) {
        return Ok(zero);
    }
    let Some(chain) = dominant_chain(&dag, &is_target) else {
        return Ok(zero);
    };
    Ok(LetterGrowthClass {
        beta: chain.rate,
        m: chain.degree,
        period: chain.period,
        gp_estimate: estimate_constant(
            &matrix,
            a,
            Some(targets),
            chain.rate,
            chain.degree,
            chain.period,
        ),
        eventually_zero: false,
    })
}

/// True iff no target letter occurs in `φ^k(a)` for any `k >= d`.
///
/// A walk of length at least `d` repeats a vertex; if one exists, pumping its
/// cycle yields one of length in `[d, 2d)`, so checking that window suffices.
fn eventually_zero(matrix: &IncidenceMatrix, a: Letter, targets: &[Letter]) -> bool {
    let d = matrix.dim() as u64;
    let ks: Vec<u64> = (d..2 * d).collect();
    matrix
        .count_vectors_at(a, &ks)
        .iter()
        .all(|v| targets.iter().all(|b| v[b.index()].is_zero()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub letters: Vec<String>,
    pub rho: f64,
    pub cyclicity: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolGrowth {
    pub symbol: String,
    pub beta: f64,
    pub m: u32,
    #[serde(rename = "T")]
    pub period: u32,
    pub eventually_zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisConfig {
    pub perron_rel_tol: f64,
    pub perron_equality_rel_tol: f64,
}

/// Everything `morphism analyze` reports about a system.
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub alphabet: Vec<String>,
    pub start: String,
    pub incidence_matrix: Vec<Vec<String>>,
    pub components: Vec<ComponentReport>,
    pub growth: GrowthClass,
    pub letter_growth: Vec<SymbolGrowth>,
    pub config: AnalysisConfig,
}

pub fn analyze(sys: &MorphicSystem) -> Result<AnalysisReport> {
    let m = sys.morphism();
    let alphabet = m.alphabet();
    let matrix = IncidenceMatrix::from_morphism(m);
    let dag = scc_dag(m, sys.start())?;
    let components = dag
        .components()
        .iter()
        .map(|c| ComponentReport {
            letters: c
                .letters
                .iter()
                .map(|&l| alphabet.id(l).to_string())
                .collect(),
            rho: c.rho,
            cyclicity: c.cyclicity,
        })
        .collect();
    let mut letter_growth = Vec::new();
    for symbol in sys.symbols() {
        let letters = sys.letters_coded_as(symbol)?;
        let class = targets_growth_class(m, sys.start(), &letters)?;
        letter_growth.push(SymbolGrowth {
            symbol: symbol.clone(),
            beta: class.beta,
            m: class.m,
            period: class.period,
            eventually_zero: class.eventually_zero,
        });
    }
    Ok(AnalysisReport {
        alphabet: alphabet.ids().to_vec(),
        start: alphabet.id(sys.start()).to_string(),
        incidence_matrix: matrix
            .rows()
            .map(|r| r.iter().map(|e| e.to_string()).collect())
            .collect(),
        components,
        growth: growth_class(m, sys.start())?,
        letter_growth,
        config: AnalysisConfig {
            perron_rel_tol: PERRON_REL_TOL,
            perron_equality_rel_tol: PERRON_EQ_TOL,
        },
    })
}
