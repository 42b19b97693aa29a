//! Exact-split regression trees shared by boosting and random forests.
//!
//! Both builders work on per-column presorted row lists. Every list is
//! partitioned the same way at each split, so a node owns the same
//! `[start, end)` range in each column's list and split search is a single
//! linear scan per candidate column. Boosting trees (one column sample per
//! tree) grow level by level; forest trees (a fresh sample at every node) grow
//! depth first and switch to sorting just the drawn columns once a node is
//! small enough that this beats keeping every list partitioned.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;

const LEAF: u32 = u32::MAX;

/// Column-major copy of a training matrix plus row orderings by each column.
pub(crate) struct ColumnIndex {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    sorted: Vec<Vec<u32>>,
    /// Dense value ranks per column (equal values share a rank), column-major.
    ranks: Vec<u32>,
}

impl ColumnIndex {
    pub fn new(x: &Matrix) -> Self {
        let (n_rows, n_cols) = (x.n_rows(), x.n_cols());
        let mut values = vec![0.0; n_rows * n_cols];
        for (i, row) in x.rows().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values[j * n_rows + i] = v;
            }
        }
        let sorted = (0..n_cols)
            .map(|j| {
                let col = &values[j * n_rows..(j + 1) * n_rows];
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect::<Vec<Vec<u32>>>();
        let mut ranks = vec![0u32; n_rows * n_cols];
        for (j, idx) in sorted.iter().enumerate() {
            let col = &values[j * n_rows..(j + 1) * n_rows];
            let mut rank = 0u32;
            for (pos, &r) in idx.iter().enumerate() {
                if pos > 0 && col[r as usize] != col[idx[pos - 1] as usize] {
                    rank += 1;
                }
                ranks[j * n_rows + r as usize] = rank;
            }
        }
        Self {
            n_rows,
            n_cols,
            values,
            sorted,
            ranks,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    fn ranks(&self, j: usize) -> &[u32] {
        &self.ranks[j * self.n_rows..(j + 1) * self.n_rows]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    /// Split column, or `LEAF`.
    feature: u32,
    left: u32,
    right: u32,
    /// Threshold for splits (`x <= threshold` goes left), mean target for leaves.
    value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut n = &self.nodes[0];
        while n.feature != LEAF {
            n = if row[n.feature as usize] <= n.value {
                &self.nodes[n.left as usize]
            } else {
                &self.nodes[n.right as usize]
            };
        }
        n.value
    }

    /// Number of splits on the path from the root to `row`'s leaf.
    pub fn path_length(&self, row: &[f64]) -> usize {
        let mut n = &self.nodes[0];
        let mut len = 0;
        while n.feature != LEAF {
            len += 1;
            n = if row[n.feature as usize] <= n.value {
                &self.nodes[n.left as usize]
            } else {
                &self.nodes[n.right as usize]
            };
        }
        len
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }
}

/// How candidate columns are chosen at each node.
pub(crate) enum ColumnSampling<'a> {
    /// Every node considers exactly these columns (boosting's per-tree subset).
    Fixed(&'a [usize]),
    /// Each node draws `per_node` columns at random; if none of them separates
    /// the node, further columns are drawn until one does.
    PerNode { per_node: usize },
}

pub(crate) struct GrowSpec<'a> {
    pub max_depth: Option<usize>,
    pub sampling: ColumnSampling<'a>,
}

struct Frontier {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Number of (distinct) rows going left within the node's segment.
    n_left: usize,
    gain: f64,
}

/// Grows one tree. `weights[i]` is the multiplicity of row `i` (0 excludes it);
/// `None` means every row counts once.
pub(crate) fn grow<R: Rng>(
    index: &ColumnIndex,
    targets: &[f64],
    weights: Option<&[u32]>,
    spec: &GrowSpec<'_>,
    rng: &mut R,
) -> RegressionTree {
    if let ColumnSampling::PerNode { per_node } = spec.sampling {
        return grow_deep(index, targets, weights, spec.max_depth, per_node, rng);
    }
    let n = index.n_rows();
    debug_assert_eq!(targets.len(), n);
    let w = |i: u32| -> f64 { weights.map_or(1.0, |w| f64::from(w[i as usize])) };

    let columns: Vec<usize> = match spec.sampling {
        ColumnSampling::Fixed(cols) => cols.to_vec(),
        ColumnSampling::PerNode { .. } => (0..index.n_cols()).collect(),
    };
    // order[k] lists the active rows sorted by column `columns[k]`.
    let mut order: Vec<Vec<u32>> = columns
        .iter()
        .map(|&c| match weights {
            None => index.sorted[c].clone(),
            Some(wt) => index.sorted[c].iter().copied().filter(|&r| wt[r as usize] > 0).collect(),
        })
        .collect();
    let n_active = order.first().map_or(0, Vec::len);
    let mut slot_of_column = vec![usize::MAX; index.n_cols()];
    for (k, &c) in columns.iter().enumerate() {
        slot_of_column[c] = k;
    }

    let mut nodes = vec![Node {
        feature: LEAF,
        left: LEAF,
        right: LEAF,
        value: 0.0,
    }];
    if n_active == 0 {
        return RegressionTree { nodes };
    }

    let mut goes_left = vec![false; n];
    let mut scratch: Vec<u32> = Vec::with_capacity(n_active);
    let mut perm: Vec<usize> = Vec::new();
    let mut frontier = vec![Frontier {
        node: 0,
        start: 0,
        end: n_active,
        depth: 0,
    }];

    while !frontier.is_empty() {
        let mut next = Vec::new();
        let mut splits: Vec<(usize, Split)> = Vec::new();
        for (fi, f) in frontier.iter().enumerate() {
            let seg = &order[0][f.start..f.end];
            let (mut sw, mut sy) = (0.0, 0.0);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in seg {
                let t = targets[r as usize];
                sw += w(r);
                sy += w(r) * t;
                lo = lo.min(t);
                hi = hi.max(t);
            }
            nodes[f.node].value = sy / sw;
            let depth_ok = spec.max_depth.is_none_or(|d| f.depth < d);
            if !depth_ok || lo == hi || f.end - f.start < 2 {
                continue;
            }
            let mut best: Option<Split> = None;
            let consider = |c: usize, best: &mut Option<Split>| {
                let k = slot_of_column[c];
                if let Some(s) = best_split_on(index.column(c), &order[k][f.start..f.end], targets, &w, sw, sy) {
                    if best.as_ref().is_none_or(|b| s.gain > b.gain) {
                        *best = Some(Split { feature: c, ..s });
                    }
                }
            };
            match spec.sampling {
                ColumnSampling::Fixed(cols) => {
                    for &c in cols {
                        consider(c, &mut best);
                    }
                }
                ColumnSampling::PerNode { per_node } => {
                    perm.clear();
                    perm.extend(0..index.n_cols());
                    let mut drawn = 0;
                    while drawn < perm.len() && (drawn < per_node || best.is_none()) {
                        let pick = rng.gen_range(drawn..perm.len());
                        perm.swap(drawn, pick);
                        consider(perm[drawn], &mut best);
                        drawn += 1;
                    }
                }
            }
            if let Some(s) = best {
                splits.push((fi, s));
            }
        }

        for (fi, s) in &splits {
            let f = &frontier[*fi];
            let k = slot_of_column[s.feature];
            for (pos, &r) in order[k][f.start..f.end].iter().enumerate() {
                goes_left[r as usize] = pos < s.n_left;
            }
            let left = nodes.len();
            for _ in 0..2 {
                nodes.push(Node {
                    feature: LEAF,
                    left: LEAF,
                    right: LEAF,
                    value: 0.0,
                });
            }
            nodes[f.node] = Node {
                feature: s.feature as u32,
                left: left as u32,
                right: left as u32 + 1,
                value: s.threshold,
            };
            next.push(Frontier {
                node: left,
                start: f.start,
                end: f.start + s.n_left,
                depth: f.depth + 1,
            });
            next.push(Frontier {
                node: left + 1,
                start: f.start + s.n_left,
                end: f.end,
                depth: f.depth + 1,
            });
        }
        if !splits.is_empty() {
            for list in order.iter_mut() {
                for (fi, _) in &splits {
                    let f = &frontier[*fi];
                    stable_partition(&mut list[f.start..f.end], &goes_left, &mut scratch);
                }
            }
        }
        frontier = next;
    }
    RegressionTree { nodes }
}

fn stable_partition(seg: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut l = 0;
    for i in 0..seg.len() {
        let r = seg[i];
        if goes_left[r as usize] {
            seg[l] = r;
            l += 1;
        } else {
            scratch.push(r);
        }
    }
    seg[l..].copy_from_slice(scratch);
}

/// Sort-on-demand growth of the subtree rooted at `root` over `rows`.
#[allow(clippy::too_many_arguments)]
fn grow_subtree_sorted<R: Rng>(
    index: &ColumnIndex,
    targets: &[f64],
    wt: &[f64],
    max_depth: Option<usize>,
    per_node: usize,
    rng: &mut R,
    nodes: &mut Vec<Node>,
    rows: &mut [u32],
    root: (usize, usize),
    keys: &mut Vec<u64>,
    perm: &mut Vec<usize>,
) {
    // (node, start, end, depth); the right child is pushed first so left subtrees are built first.
    let mut stack = vec![(root.0, 0usize, rows.len(), root.1)];
    while let Some((node, start, end, depth)) = stack.pop() {
        let seg = &rows[start..end];
        let (mut sw, mut sy) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in seg {
            let (w, t) = (wt[r as usize], targets[r as usize]);
            sw += w;
            sy += w * t;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        nodes[node].value = sy / sw;
        if max_depth.is_some_and(|d| depth >= d) || lo == hi || seg.len() < 2 {
            continue;
        }
        let parent = sy * sy / sw;
        // (column, rank of the last left value, threshold, gain)
        let mut best: Option<(usize, u64, f64, f64)> = None;
        perm.clear();
        perm.extend(0..index.n_cols());
        let mut drawn = 0;
        while drawn < perm.len() && (drawn < per_node || best.is_none()) {
            let pick = rng.gen_range(drawn..perm.len());
            perm.swap(drawn, pick);
            let c = perm[drawn];
            drawn += 1;
            let ranks = index.ranks(c);
            keys.clear();
            keys.extend(seg.iter().map(|&r| (u64::from(ranks[r as usize]) << 32) | u64::from(r)));
            keys.sort_unstable();
            let col = index.column(c);
            let (mut lw, mut ly) = (0.0, 0.0);
            for i in 0..keys.len() - 1 {
                let r = (keys[i] & 0xffff_ffff) as usize;
                lw += wt[r];
                ly += wt[r] * targets[r];
                let (ka, kb) = (keys[i] >> 32, keys[i + 1] >> 32);
                if ka == kb {
                    continue;
                }
                let (rw, ry) = (sw - lw, sy - ly);
                let gain = ly * ly / lw + ry * ry / rw - parent;
                if best.is_none_or(|b| gain > b.3) {
                    let a = col[r];
                    let b = col[(keys[i + 1] & 0xffff_ffff) as usize];
                    let mid = a + (b - a) / 2.0;
                    best = Some((c, ka, if mid < b { mid } else { a }, gain));
                }
            }
        }
        let Some((feature, split_rank, threshold, _)) = best else {
            continue;
        };
        let ranks = index.ranks(feature);
        let seg = &mut rows[start..end];
        let mut n_left = 0;
        for i in 0..seg.len() {
            if u64::from(ranks[seg[i] as usize]) <= split_rank {
                seg.swap(i, n_left);
                n_left += 1;
            }
        }
        let left = push_children(nodes, node, feature, threshold);
        stack.push((left + 1, start + n_left, end, depth + 1));
        stack.push((left, start, start + n_left, depth + 1));
    }
}

/// Turns `node` into a split and appends two placeholder children; returns the left child's id.
fn push_children(nodes: &mut Vec<Node>, node: usize, feature: usize, threshold: f64) -> usize {
    let left = nodes.len();
    for _ in 0..2 {
        nodes.push(Node {
            feature: LEAF,
            left: LEAF,
            right: LEAF,
            value: 0.0,
        });
    }
    nodes[node] = Node {
        feature: feature as u32,
        left: left as u32,
        right: left as u32 + 1,
        value: threshold,
    };
    left
}

/// Node size below which sorting the drawn columns beats partitioning every
/// presorted column: roughly where `per_node * log2(size)` drops under `p`.
fn sorted_cutoff(per_node: usize, p: usize) -> usize {
    let bits = p as f64 / per_node.max(1) as f64;
    if bits >= 30.0 {
        usize::MAX
    } else {
        2f64.powf(bits) as usize
    }
}

/// Depth-first growth for per-node column sampling. Large nodes partition
/// presorted per-column row lists; small subtrees switch to sorting only the
/// drawn columns, which is cheaper once few rows remain.
fn grow_deep<R: Rng>(
    index: &ColumnIndex,
    targets: &[f64],
    weights: Option<&[u32]>,
    max_depth: Option<usize>,
    per_node: usize,
    rng: &mut R,
) -> RegressionTree {
    let n = index.n_rows();
    let p = index.n_cols();
    let wt: Vec<f64> = match weights {
        Some(w) => w.iter().map(|&c| f64::from(c)).collect(),
        None => vec![1.0; n],
    };
    // All columns' active-row orderings, back to back: column c owns [c*m, (c+1)*m).
    let mut lists: Vec<u32> = Vec::new();
    for c in 0..p {
        lists.extend(index.sorted[c].iter().copied().filter(|&r| wt[r as usize] > 0.0));
    }
    let m = lists.len() / p.max(1);
    let mut nodes = vec![Node {
        feature: LEAF,
        left: LEAF,
        right: LEAF,
        value: 0.0,
    }];
    if m == 0 {
        return RegressionTree { nodes };
    }
    let mut goes_left = vec![false; n];
    let mut scratch: Vec<u32> = vec![0; m];
    let mut perm: Vec<usize> = Vec::with_capacity(p);
    let mut keys: Vec<u64> = Vec::with_capacity(m);
    let mut rows: Vec<u32> = Vec::with_capacity(m);
    let cutoff = sorted_cutoff(per_node, p);
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    while let Some((node, start, end, depth)) = stack.pop() {
        if end - start <= cutoff {
            rows.clear();
            rows.extend_from_slice(&lists[start..end]);
            grow_subtree_sorted(
                index,
                targets,
                &wt,
                max_depth,
                per_node,
                rng,
                &mut nodes,
                &mut rows,
                (node, depth),
                &mut keys,
                &mut perm,
            );
            continue;
        }
        let seg = &lists[start..end];
        let (mut sw, mut sy) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in seg {
            let (w, t) = (wt[r as usize], targets[r as usize]);
            sw += w;
            sy += w * t;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        nodes[node].value = sy / sw;
        if max_depth.is_some_and(|d| depth >= d) || lo == hi || seg.len() < 2 {
            continue;
        }
        let parent = sy * sy / sw;
        let mut best: Option<(usize, usize, f64, f64)> = None;
        perm.clear();
        perm.extend(0..p);
        let mut drawn = 0;
        while drawn < p && (drawn < per_node || best.is_none()) {
            let pick = rng.gen_range(drawn..p);
            perm.swap(drawn, pick);
            let c = perm[drawn];
            drawn += 1;
            let seg = &lists[c * m + start..c * m + end];
            let col = index.column(c);
            let (mut lw, mut ly) = (0.0, 0.0);
            let mut a = col[seg[0] as usize];
            for i in 0..seg.len() - 1 {
                let r = seg[i] as usize;
                lw += wt[r];
                ly += wt[r] * targets[r];
                let b = col[seg[i + 1] as usize];
                if a != b {
                    let (rw, ry) = (sw - lw, sy - ly);
                    let gain = ly * ly / lw + ry * ry / rw - parent;
                    if best.is_none_or(|s| gain > s.3) {
                        let mid = a + (b - a) / 2.0;
                        best = Some((c, i + 1, if mid < b { mid } else { a }, gain));
                    }
                }
                a = b;
            }
        }
        let Some((feature, n_left, threshold, _)) = best else {
            continue;
        };
        let split = &lists[feature * m + start..feature * m + end];
        for (i, &r) in split.iter().enumerate() {
            goes_left[r as usize] = i < n_left;
        }
        for c in 0..p {
            if c == feature {
                continue;
            }
            let seg = &mut lists[c * m + start..c * m + end];
            let (mut l, mut rc) = (0, 0);
            for i in 0..seg.len() {
                let r = seg[i];
                let g = goes_left[r as usize];
                seg[l] = r;
                scratch[rc] = r;
                l += usize::from(g);
                rc += usize::from(!g);
            }
            seg[l..].copy_from_slice(&scratch[..rc]);
        }
        let left = push_children(&mut nodes, node, feature, threshold);
        stack.push((left + 1, start + n_left, end, depth + 1));
        stack.push((left, start, start + n_left, depth + 1));
    }
    RegressionTree { nodes }
}

/// Best squared-error split of a node along one column; `None` if the column
/// is constant within the node.
#[inline]
fn best_split_on(
    col: &[f64],
    seg: &[u32],
    targets: &[f64],
    w: &impl Fn(u32) -> f64,
    sw: f64,
    sy: f64,
) -> Option<Split> {
    let parent = sy * sy / sw;
    let (mut lw, mut ly) = (0.0, 0.0);
    let mut best: Option<Split> = None;
    for i in 0..seg.len() - 1 {
        let r = seg[i];
        lw += w(r);
        ly += w(r) * targets[r as usize];
        let a = col[r as usize];
        let b = col[seg[i + 1] as usize];
        if a == b {
            continue;
        }
        let rw = sw - lw;
        let ry = sy - ly;
        let gain = ly * ly / lw + ry * ry / rw - parent;
        if best.as_ref().is_none_or(|s| gain > s.gain) {
            let mid = a + (b - a) / 2.0;
            best = Some(Split {
                feature: 0,
                threshold: if mid < b { mid } else { a },
                n_left: i + 1,
                gain,
            });
        }
    }
    best
}

/// Samples `k` distinct columns out of `p`, returned in ascending order.
pub(crate) fn sample_columns<R: Rng>(p: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..p).collect();
    cols.partial_shuffle(rng, k);
    let mut picked = cols[..k].to_vec();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit(x: &Matrix, y: &[f64], depth: Option<usize>) -> RegressionTree {
        let index = ColumnIndex::new(x);
        let cols: Vec<usize> = (0..x.n_cols()).collect();
        let spec = GrowSpec {
            max_depth: depth,
            sampling: ColumnSampling::Fixed(&cols),
        };
        grow(&index, y, None, &spec, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn stump_splits_at_midpoint() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        let t = fit(&x, &[0.0, 1.0], Some(1));
        assert_eq!(t.predict_row(&[0.0]), 0.0);
        assert_eq!(t.predict_row(&[1.0]), 1.0);
        assert_eq!(t.predict_row(&[0.5]), 0.0);
        assert_eq!(t.predict_row(&[0.51]), 1.0);
    }

    #[test]
    fn brute_force_best_stump() {
        // Compare against exhaustive search over all (column, threshold) pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<[f64; 3]> = (0..25).map(|_| [rng.gen(), rng.gen::<f64>().round(), rng.gen()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 3.0 + r[1] + rng.gen::<f64>()).collect();
        let x = Matrix::from_rows(&rows);
        let tree = fit(&x, &y, Some(1));
        let sse = |pred: &dyn Fn(&[f64]) -> f64| -> f64 {
            rows.iter().zip(&y).map(|(r, t)| (pred(r) - t).powi(2)).sum()
        };
        let mut best = f64::INFINITY;
        for c in 0..3 {
            for r in &rows {
                let thr = r[c];
                let (l, rr): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| rows[i][c] <= thr);
                if l.is_empty() || rr.is_empty() {
                    continue;
                }
                let mean = |ix: &[usize]| ix.iter().map(|&i| y[i]).sum::<f64>() / ix.len() as f64;
                let (ml, mr) = (mean(&l), mean(&rr));
                best = best.min(sse(&|row: &[f64]| if row[c] <= thr { ml } else { mr }));
            }
        }
        let got = sse(&|row: &[f64]| tree.predict_row(row));
        assert!((got - best).abs() < 1e-9, "{got} vs {best}");
    }

    #[test]
    fn unlimited_depth_memorizes_distinct_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 2]> = (0..60).map(|_| [rng.gen(), rng.gen()]).collect();
        let y: Vec<f64> = (0..60).map(|_| rng.gen_range(0..13) as f64).collect();
        let x = Matrix::from_rows(&rows);
        let tree = fit(&x, &y, None);
        for (r, t) in rows.iter().zip(&y) {
            assert_eq!(tree.predict_row(r), *t);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let rows: Vec<[f64; 1]> = (0..64).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| (i * 7 % 13) as f64).collect();
        let tree = fit(&Matrix::from_rows(&rows), &y, Some(3));
        assert!(tree.depth() <= 3);
        assert!(tree.n_leaves() <= 8);
    }

    #[test]
    fn weights_act_as_multiplicities() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let y = [0.0, 10.0, 4.0];
        let index = ColumnIndex::new(&x);
        let cols = [0];
        let spec = GrowSpec {
            max_depth: Some(0),
            sampling: ColumnSampling::Fixed(&cols),
        };
        let t = grow(&index, &y, Some(&[2, 0, 1]), &spec, &mut ChaCha8Rng::seed_from_u64(0));
        assert!((t.predict_row(&[1.0]) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn per_node_sampling_falls_back_to_informative_columns() {
        // Column 0 is constant, so a one-column draw that lands on it must keep drawing.
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let index = ColumnIndex::new(&Matrix::from_rows(&rows));
        let spec = GrowSpec {
            max_depth: None,
            sampling: ColumnSampling::PerNode { per_node: 1 },
        };
        for seed in 0..8 {
            let t = grow(&index, &y, None, &spec, &mut ChaCha8Rng::seed_from_u64(seed));
            for (r, v) in rows.iter().zip(&y) {
                assert_eq!(t.predict_row(r), *v);
            }
        }
    }
}
