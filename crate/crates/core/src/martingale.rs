//! Finite martingale trees.
//!
//! A tree stores the states `(x, y, z)` of a simple martingale: `x` is the
//! conditional mean, `y` the conditional second moment, and `z` the square
//! function accumulated so far. Each internal node with its children is a
//! [`SplitEvent`]; leaves sit on the lower boundary `y = x²`, so the leaf
//! abscissas are the terminal values `φ_∞`.
//!
//! The extremizers build trees whose expected payoff approaches the Bellman
//! value. They are payoff-independent; apply a payoff with
//! [`MartingaleTree::expectation`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{in_omega, parabolic_shift, shift_state, Point2, SplitEvent, State3};

/// Split residual accepted by [`MartingaleTree::validate`].
pub const SPLIT_TOL: f64 = 1e-12;

/// Stop offset of the roof chain: the chain ends where `x/c = −1 + η`.
pub const ROOF_ETA: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub w: f64,
    #[serde(rename = "ref")]
    pub node: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub state: State3,
    pub children: Vec<Edge>,
}

/// Arena-backed tree; node 0 is the root and children always have larger
/// indices than their parent.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleTree {
    nodes: Vec<Node>,
}

#[derive(Serialize, Deserialize)]
struct LeafDoc {
    value: f64,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    version: u32,
    root: State3,
    nodes: Vec<Node>,
    leaves: Vec<LeafDoc>,
}

const DOC_VERSION: u32 = 1;

impl MartingaleTree {
    pub fn new(root: State3) -> Self {
        Self { nodes: vec![Node { state: root, children: Vec::new() }] }
    }

    pub fn root(&self) -> State3 {
        self.nodes[0].state
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Attaches weighted children to `parent` and returns their indices.
    pub fn split(&mut self, parent: usize, children: &[(f64, State3)]) -> Vec<usize> {
        let mut ids = Vec::with_capacity(children.len());
        for &(w, s) in children {
            let id = self.nodes.len();
            self.nodes.push(Node { state: s, children: Vec::new() });
            self.nodes[parent].children.push(Edge { w, node: id });
            ids.push(id);
        }
        ids
    }

    pub fn split_event(&self, id: usize) -> Option<SplitEvent> {
        let n = &self.nodes[id];
        if n.children.is_empty() {
            return None;
        }
        Some(SplitEvent::new(
            n.state,
            n.children.iter().map(|e| (e.w, self.nodes[e.node].state)).collect(),
        ))
    }

    pub fn max_split_residual(&self) -> f64 {
        (0..self.nodes.len())
            .filter_map(|i| self.split_event(i))
            .map(|e| e.residual())
            .fold(0.0, f64::max)
    }

    /// Structural and splitting-rule checks: a proper tree rooted at 0,
    /// weights in `(0, 1]`, split residuals within [`SPLIT_TOL`], all states
    /// in `Ω`, and leaves on `y = x²`.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        seen[0] = true;
        for (i, n) in self.nodes.iter().enumerate() {
            if !in_omega(n.state) {
                let s = n.state;
                return Err(Error::InvalidTree(format!("node {i} at ({}, {}, {}) lies outside the domain", s.x, s.y, s.z)));
            }
            for e in &n.children {
                if e.node <= i || e.node >= self.nodes.len() {
                    return Err(Error::InvalidTree(format!("node {i} has bad child reference {}", e.node)));
                }
                if seen[e.node] {
                    return Err(Error::InvalidTree(format!("node {} has two parents", e.node)));
                }
                seen[e.node] = true;
                if !(e.w > 0.0 && e.w <= 1.0) {
                    return Err(Error::InvalidTree(format!("node {i} has weight {}", e.w)));
                }
            }
            if n.children.is_empty() {
                if n.state.gap().abs() > SPLIT_TOL * (1.0 + n.state.y.abs()) {
                    return Err(Error::InvalidTree(format!("leaf {i} is off the lower boundary")));
                }
            } else {
                let r = self.split_event(i).expect("internal node").residual();
                if r > SPLIT_TOL {
                    return Err(Error::InvalidTree(format!("split at node {i} has residual {r:e}")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidTree(format!("node {i} is unreachable")));
        }
        Ok(())
    }

    /// Leaf indices with their probability masses, in depth-first order.
    pub fn leaf_masses(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 1.0f64)];
        while let Some((i, m)) = stack.pop() {
            let n = &self.nodes[i];
            if n.children.is_empty() {
                out.push((i, m));
            } else {
                for e in n.children.iter().rev() {
                    stack.push((e.node, m * e.w));
                }
            }
        }
        out
    }

    /// `(φ_∞, mass)` for every leaf.
    pub fn leaves(&self) -> Vec<(f64, f64)> {
        self.leaf_masses()
            .into_iter()
            .map(|(i, m)| (self.nodes[i].state.x, m))
            .collect()
    }

    /// `E g(φ_∞)`.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.leaf_masses()
            .into_iter()
            .map(|(i, m)| m * g(self.nodes[i].state.x))
            .sum()
    }

    /// `sup Sφ`: the largest root-to-leaf `√(Σ (Δx)²)`.
    pub fn square_function_sup(&self) -> f64 {
        let mut best = 0.0f64;
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((i, s2)) = stack.pop() {
            let n = &self.nodes[i];
            if n.children.is_empty() {
                best = best.max(s2);
            }
            for e in &n.children {
                let d = self.nodes[e.node].state.x - n.state.x;
                stack.push((e.node, s2 + d * d));
            }
        }
        best.sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TreeDoc {
            version: DOC_VERSION,
            root: self.root(),
            nodes: self.nodes.clone(),
            leaves: self.leaves().into_iter().map(|(value, mass)| LeafDoc { value, mass }).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses and validates a tree document. The `leaves` array is derived
    /// data and is checked against the nodes.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(s)?;
        if doc.version != DOC_VERSION {
            return Err(Error::InvalidTree(format!("unsupported document version {}", doc.version)));
        }
        if doc.nodes.is_empty() || doc.nodes[0].state != doc.root {
            return Err(Error::InvalidTree("root does not match node 0".into()));
        }
        let tree = Self { nodes: doc.nodes };
        tree.validate()?;
        let leaves = tree.leaves();
        let consistent = leaves.len() == doc.leaves.len()
            && leaves
                .iter()
                .zip(&doc.leaves)
                .all(|(a, b)| a.0 == b.value && (a.1 - b.mass).abs() <= 1e-12);
        if !consistent {
            return Err(Error::InvalidTree("leaf table does not match the nodes".into()));
        }
        Ok(tree)
    }
}

fn lower(x: f64, z2: f64) -> State3 {
    State3::new(x, x * x, z2.max(0.0).sqrt())
}

/// Children of the symmetric split `x ± √(y − x²)`.
fn symmetric_children(s: State3) -> Vec<(f64, State3)> {
    let r = s.gap().max(0.0).sqrt();
    let z2 = s.z * s.z + r * r;
    vec![(0.5, lower(s.x - r, z2)), (0.5, lower(s.x + r, z2))]
}

fn require_omega(s: State3) -> Result<()> {
    if in_omega(s) {
        Ok(())
    } else {
        Err(Error::OutsideDomain { x: s.x, y: s.y, z: s.z })
    }
}

/// One symmetric split to `x ± √(y − x²)`; a leaf when `y = x²`.
pub fn extremize_two_point(s: State3) -> Result<MartingaleTree> {
    require_omega(s)?;
    let mut t = MartingaleTree::new(s);
    if s.gap() > 0.0 {
        t.split(0, &symmetric_children(s));
    }
    Ok(t)
}

/// The chain along the parabola `y − x² = ε_n²` from `s0` to `x_target`.
///
/// Each of the `N` steps moves by `t = (x_target − x0)/N` and leaks mass
/// `|t|/(|t| + ε_n)` to the lower boundary at distance `ε_n` behind the
/// direction of motion; `ε_n² = ε² − n t²` shrinks as the budget is spent.
/// The terminal node splits symmetrically.
pub fn extremize_parabola_chain(s0: State3, x_target: f64, n_steps: usize) -> Result<MartingaleTree> {
    require_omega(s0)?;
    let eps2 = s0.gap();
    if !(eps2 > 0.0) {
        return Err(Error::InvalidParameter("chain start must lie above the lower boundary".into()));
    }
    if n_steps == 0 || !x_target.is_finite() || x_target == s0.x {
        return Err(Error::InvalidParameter("chain needs N >= 1 and a target different from the start".into()));
    }
    let t = (x_target - s0.x) / n_steps as f64;
    let (step, dir) = (t.abs(), t.signum());
    if eps2 - n_steps as f64 * t * t <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "N = {n_steps} is too small: the strip closes before reaching {x_target}"
        )));
    }

    let mut tree = MartingaleTree::new(s0);
    let (mut id, mut s) = (0usize, s0);
    // z² and the gap are both recomputed from n so that rounding does not
    // accumulate over long chains.
    let z02 = s0.z * s0.z;
    for n in 0..n_steps {
        let en2 = eps2 - n as f64 * t * t;
        let en = en2.sqrt();
        let zn2 = z02 + n as f64 * t * t;
        let xn = s0.x + n as f64 * t;
        let x_next = if n + 1 == n_steps { x_target } else { s0.x + (n + 1) as f64 * t };
        let next = State3::new(x_next, x_next * x_next + en2 - t * t, (zn2 + t * t).sqrt());
        let leak = lower(xn - dir * en, zn2 + en2);
        let w_next = en / (step + en);
        let ids = tree.split(id, &[(w_next, next), (step / (step + en), leak)]);
        id = ids[0];
        s = next;
    }
    tree.split(id, &symmetric_children(s));
    Ok(tree)
}

/// The geometric chain toward `target` anchored at `(t, t²)`.
///
/// In coordinates shifted so that the anchor is the origin, the chain visits
/// `A_n = λ^{n/N}·A_0` with `A_0 = s0` and `A_N = target`; each step keeps
/// weight `λ^{−1/N}` on the next node and sends the rest to the anchor leaf.
/// The anchor collects total mass exactly `1 − α`, `α = 1/λ`. The target
/// node splits symmetrically.
pub fn extremize_scaling_chain(s0: State3, target: Point2, anchor: f64, n_steps: usize) -> Result<MartingaleTree> {
    require_omega(s0)?;
    if n_steps == 0 {
        return Err(Error::InvalidParameter("scaling chain needs N >= 1".into()));
    }
    let a0 = parabolic_shift(s0.point(), anchor);
    let tg = parabolic_shift(target, anchor);
    if tg.y < 2.0 * tg.x * tg.x - 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "target ({}, {}) violates the anchor condition y - 2tx + t^2 >= 2(x - t)^2",
            target.x, target.y
        )));
    }
    // s0 must sit on the segment from the anchor to the target.
    let scale = if tg.y.abs() > tg.x.abs() { a0.y / tg.y } else { a0.x / tg.x };
    let on_segment = (a0.x - scale * tg.x).abs() <= 1e-12 * (1.0 + tg.x.abs())
        && (a0.y - scale * tg.y).abs() <= 1e-12 * (1.0 + tg.y.abs());
    if !(scale > 0.0 && scale <= 1.0 + 1e-12) || !on_segment {
        return Err(Error::InvalidParameter("start must lie on the segment from the anchor to the target".into()));
    }

    let origin = State3::new(0.0, 0.0, 0.0);
    let mut tree = MartingaleTree::new(shift_state(s0, anchor));
    let mut id = 0usize;
    let mut cur = tree.root();
    let mut z2 = cur.z * cur.z;
    if scale < 1.0 {
        let lambda = 1.0 / scale;
        let keep = lambda.powf(-1.0 / n_steps as f64);
        for n in 1..=n_steps {
            let f = if n == n_steps { 1.0 } else { lambda.powf(n as f64 / n_steps as f64) * scale };
            let (x, y) = (f * tg.x, f * tg.y);
            let dx = x - cur.x;
            let next = State3::new(x, y, (z2 + dx * dx).sqrt());
            let leaf = State3 { z: (z2 + cur.x * cur.x).sqrt(), ..origin };
            let ids = tree.split(id, &[(keep, next), (1.0 - keep, leaf)]);
            id = ids[0];
            cur = next;
            z2 += dx * dx;
        }
    }
    tree.split(id, &symmetric_children(cur));
    for n in &mut tree.nodes {
        n.state = shift_state(n.state, -anchor);
    }
    // Pin anchor leaves exactly at (t, t²).
    for n in &mut tree.nodes {
        if n.children.is_empty() && (n.state.x - anchor).abs() <= 1e-12 * (1.0 + anchor.abs()) {
            n.state.x = anchor;
            n.state.y = anchor * anchor;
        }
    }
    tree.validate()?;
    Ok(tree)
}

/// The roof chain for `f = χ_[0,∞)` from `(c0·v0, c0²(v0² + 1))`.
///
/// At a roof state with abscissa `x` and `c² = y − x²` the chain splits
/// along the tangent of slope `2x` into `φ = (x + √(2c² − x²))/2`, which
/// then splits into leaves at `0` and `2φ`, and the moved point `x − Δ`.
/// It stops at `x/c = −1 + η`, where a symmetric split has exactly half its
/// mass at a non-negative leaf. The expectation tends to `Ψ(v0)`.
pub fn extremize_roof_indicator(v0: f64, c0: f64, n_steps: usize) -> Result<MartingaleTree> {
    if !(-1.0..1.0).contains(&v0) {
        return Err(Error::InvalidParameter(format!("v0 = {v0} outside [-1, 1)")));
    }
    if !(c0 > 0.0 && c0 <= 1.0) {
        return Err(Error::InvalidParameter(format!("c0 = {c0} outside (0, 1]")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter("roof chain needs N >= 1".into()));
    }
    let x0 = c0 * v0;
    let start = State3::new(x0, x0 * x0 + c0 * c0, (1.0 - c0 * c0).max(0.0).sqrt());
    let mut tree = MartingaleTree::new(start);
    // Children stay on the roof, so z follows from the gap there; carrying
    // z through repeated square roots drifts over long chains.
    let roof_child = |p: State3, x: f64| {
        let y = p.y + 2.0 * p.x * (x - p.x);
        State3::new(x, y, (1.0 - (y - x * x)).clamp(0.0, 1.0).sqrt())
    };
    let terminal = |tree: &mut MartingaleTree, id: usize, s: State3| {
        let c = s.gap().max(0.0).sqrt();
        let z2 = s.z * s.z + c * c;
        // At v0 = −1 the right leaf is exactly 0.
        let right = if (s.x + c).abs() <= 1e-15 { 0.0 } else { s.x + c };
        tree.split(id, &[(0.5, lower(s.x - c, z2)), (0.5, lower(right, z2))]);
    };
    if v0 <= -1.0 + ROOF_ETA {
        terminal(&mut tree, 0, start);
        return Ok(tree);
    }

    let n = n_steps as f64;
    let mut x_end = -c0 * (1.0 - ROOF_ETA);
    for _ in 0..200 {
        let c_end = (c0 * c0 - (x0 - x_end).powi(2) / n).sqrt();
        let next = (-1.0 + ROOF_ETA) * c_end;
        if (next - x_end).abs() <= 1e-17 {
            x_end = next;
            break;
        }
        x_end = next;
    }
    let delta = (x0 - x_end) / n;
    if c0 * c0 - n * delta * delta <= 0.0 {
        return Err(Error::InvalidParameter(format!("N = {n_steps} is too small for the roof chain")));
    }

    let (mut id, mut s) = (0usize, start);
    for _ in 0..n_steps {
        let c2 = s.gap();
        let disc = 2.0 * c2 - s.x * s.x;
        if disc < 0.0 {
            return Err(Error::InvalidParameter("roof step left the smile".into()));
        }
        let phi = 0.5 * (s.x + disc.sqrt());
        let w_phi = delta / (phi - s.x + delta);
        let phi_node = roof_child(s, phi);
        let moved = roof_child(s, s.x - delta);
        let ids = tree.split(id, &[(w_phi, phi_node), (1.0 - w_phi, moved)]);
        let zl2 = phi_node.z * phi_node.z + phi * phi;
        tree.split(ids[0], &[(0.5, lower(0.0, zl2)), (0.5, lower(2.0 * phi, zl2))]);
        id = ids[1];
        s = moved;
    }
    terminal(&mut tree, id, s);
    Ok(tree)
}

/// A finite distribution: atoms `(value, mass)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub atoms: Vec<(f64, f64)>,
}

impl DistributionTable {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("atom masses sum to {total}")));
        }
        if atoms.iter().any(|&(v, m)| !v.is_finite() || !(m > 0.0 && m <= 1.0)) {
            return Err(Error::InvalidParameter("atoms need finite values and masses in (0, 1]".into()));
        }
        Ok(Self { atoms })
    }
}

/// The non-increasing rearrangement of `φ_∞`: atoms sorted by value, largest
/// first, laid on `[0, 1)` in that order.
pub fn rearrangement(tree: &MartingaleTree) -> DistributionTable {
    let mut atoms = tree.leaves();
    atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
    DistributionTable { atoms }
}

/// Lower estimate of the `BMO([0, 1])` seminorm of the rearranged step
/// function: the largest root-mean-square oscillation over subintervals with
/// endpoints on the grid `k/M` and on every atom breakpoint.
pub fn bmo_norm_estimate(d: &DistributionTable, grid: usize) -> f64 {
    let total: f64 = d.atoms.iter().map(|a| a.1).sum();
    let mean: f64 = d.atoms.iter().map(|a| a.0 * a.1).sum::<f64>() / total;
    // Step function on [0, 1): breakpoints and centered values.
    let mut breaks = vec![0.0];
    let mut vals = Vec::with_capacity(d.atoms.len());
    for &(v, m) in &d.atoms {
        breaks.push(breaks.last().unwrap() + m / total);
        vals.push(v - mean);
    }
    *breaks.last_mut().unwrap() = 1.0;

    let mut cand: Vec<f64> = (0..=grid.max(1)).map(|k| k as f64 / grid.max(1) as f64).collect();
    cand.extend_from_slice(&breaks);
    cand.sort_by(f64::total_cmp);
    cand.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    // Prefix integrals of ψ and ψ² at the candidates.
    let (mut p1, mut p2) = (Vec::with_capacity(cand.len()), Vec::with_capacity(cand.len()));
    let (mut i1, mut i2, mut j, mut last) = (0.0, 0.0, 0usize, 0.0);
    for &s in &cand {
        while j < vals.len() && breaks[j + 1] <= s {
            let w = breaks[j + 1] - last;
            i1 += vals[j] * w;
            i2 += vals[j] * vals[j] * w;
            last = breaks[j + 1];
            j += 1;
        }
        let (mut a1, mut a2) = (i1, i2);
        if j < vals.len() && s > last {
            a1 += vals[j] * (s - last);
            a2 += vals[j] * vals[j] * (s - last);
        }
        p1.push(a1);
        p2.push(a2);
    }

    let mut best = 0.0f64;
    for a in 0..cand.len() {
        for b in a + 1..cand.len() {
            let len = cand[b] - cand[a];
            if len <= 1e-14 {
                continue;
            }
            let m1 = (p1[b] - p1[a]) / len;
            let m2 = (p2[b] - p2[a]) / len;
            best = best.max(m2 - m1 * m1);
        }
    }
    best.max(0.0).sqrt()
}

/// A random tree with root `z = 0` whose every path has `Sφ ≤ 1`.
///
/// Nodes split into 2 to `max_children` children with increments bounded by
/// the remaining budget `√(1 − z²)`; the second moments are filled in from
/// the leaves up, so every node is in `Ω`.
pub fn random_tree<R: Rng>(rng: &mut R, max_depth: usize, max_children: usize) -> MartingaleTree {
    let x0 = rng.gen_range(-1.0..1.0);
    let mut tree = MartingaleTree::new(State3::new(x0, x0 * x0, 0.0));
    let mut frontier = vec![(0usize, 0usize)];
    while let Some((id, depth)) = frontier.pop() {
        let s = tree.nodes[id].state;
        let r = (1.0 - s.z * s.z).max(0.0).sqrt();
        if depth >= max_depth || r < 1e-6 || (depth > 0 && rng.gen_bool(0.25)) {
            continue;
        }
        let k = rng.gen_range(2..=max_children.max(2));
        let offsets = loop {
            if let Some(o) = balanced_offsets(rng, k, r) {
                break o;
            }
        };
        let children: Vec<(f64, State3)> = offsets
            .iter()
            .map(|&(w, d)| (w, State3::new(s.x + d, 0.0, (s.z * s.z + d * d).min(1.0).sqrt())))
            .collect();
        for c in tree.split(id, &children) {
            frontier.push((c, depth + 1));
        }
    }
    // Bottom-up second moments; children have larger indices than parents.
    for i in (0..tree.nodes.len()).rev() {
        let y = if tree.nodes[i].children.is_empty() {
            tree.nodes[i].state.x.powi(2)
        } else {
            tree.nodes[i]
                .children
                .iter()
                .map(|e| e.w * tree.nodes[e.node].state.y)
                .sum()
        };
        tree.nodes[i].state.y = y;
    }
    tree
}

/// `k` weights and offsets in `[−r, r]` with zero weighted mean.
fn balanced_offsets<R: Rng>(rng: &mut R, k: usize, r: f64) -> Option<Vec<(f64, f64)>> {
    let mut w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let tw: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= tw);
    let full = rng.gen_bool(0.3);
    let mut d: Vec<f64> = (0..k - 1)
        .map(|_| if full { r * if rng.gen_bool(0.5) { 1.0 } else { -1.0 } } else { rng.gen_range(-r..=r) })
        .collect();
    let last = -d.iter().zip(&w).map(|(d, w)| d * w).sum::<f64>() / w[k - 1];
    if last.abs() > r || d.iter().chain(std::iter::once(&last)).all(|v| v.abs() < 1e-9) {
        return None;
    }
    d.push(last);
    Some(w.into_iter().zip(d).collect())
}
