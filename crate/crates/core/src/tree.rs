//! Weighted CART regression tree, the weak learner behind every boosting
//! routine in this crate.

use std::fmt::Write as _;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Growth limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::param("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
    config: TreeConfig,
}

/// Variance below which a node counts as pure.
const PURE_VARIANCE: f64 = 1e-12;
/// Relative slack when comparing split scores, so that rounding noise does
/// not override the lowest-feature/lowest-threshold tie-break.
const SCORE_TIE: f64 = 1e-12;
/// Tolerance on the weight simplex.
pub(crate) const SIMPLEX_TOL: f64 = 1e-9;

pub(crate) fn check_simplex(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidWeights(format!(
            "expected {n} weights, got {}",
            w.len()
        )));
    }
    if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weight {i} is {} (must be finite and nonnegative)",
            w[i]
        )));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// Fits a tree by greedy weighted-variance reduction. Thresholds are
/// midpoints between consecutive distinct values; ties between candidate
/// splits go to the lowest feature index, then the lowest threshold.
pub fn fit_tree(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    w: &[f64],
    config: TreeConfig,
) -> Result<RegressionTree> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Empty("cannot fit a tree on zero rows".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    config.validate()?;
    check_simplex(w, n)?;
    Ok(grow(x, y, w, config))
}

struct Builder<'a> {
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    w: &'a [f64],
    config: TreeConfig,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

pub(crate) fn grow(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    w: &[f64],
    config: TreeConfig,
) -> RegressionTree {
    let (n, d) = x.dim();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j).to_vec()).collect();
    let sorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            idx
        })
        .collect();
    let mut builder = Builder {
        columns,
        y: y.to_vec(),
        w,
        config,
        nodes: Vec::new(),
        goes_left: vec![false; n],
    };
    builder.build(sorted, 0);
    RegressionTree {
        nodes: builder.nodes,
        n_features: d,
        config,
    }
}

impl Builder<'_> {
    fn build(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });

        let rows = &sorted[0];
        let (mut sw, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &r in rows {
            let (wi, yi) = (self.w[r as usize], self.y[r as usize]);
            sw += wi;
            s1 += wi * yi;
            s2 += wi * yi * yi;
        }
        let value = if sw > 0.0 {
            s1 / sw
        } else {
            rows.iter().map(|&r| self.y[r as usize]).sum::<f64>() / rows.len() as f64
        };
        self.nodes[id] = Node::Leaf { value };

        let variance = if sw > 0.0 {
            (s2 / sw - (s1 / sw).powi(2)).max(0.0)
        } else {
            0.0
        };
        let min_leaf = self.config.min_samples_leaf;
        if depth >= self.config.max_depth || variance < PURE_VARIANCE || rows.len() < 2 * min_leaf {
            return id;
        }

        let Some(best) = self.best_split(&sorted, sw, s1) else {
            return id;
        };
        if best.score - s1 * s1 / sw <= 0.0 {
            return id;
        }

        let col = &self.columns[best.feature];
        for &r in rows {
            self.goes_left[r as usize] = col[r as usize] <= best.threshold;
        }
        let mut left = Vec::with_capacity(sorted.len());
        let mut right = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| self.goes_left[r as usize]);
            left.push(l);
            right.push(r);
        }
        let left_id = self.build(left, depth + 1);
        let right_id = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: left_id,
            right: right_id,
        };
        id
    }

    /// Maximises `S_L^2 / W_L + S_R^2 / W_R`, which is the weighted SSE
    /// reduction up to the constant `S^2 / W`.
    fn best_split(&self, sorted: &[Vec<u32>], sw: f64, s1: f64) -> Option<Candidate> {
        let min_leaf = self.config.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        for (feature, list) in sorted.iter().enumerate() {
            let col = &self.columns[feature];
            let n = list.len();
            let (mut wl, mut sl) = (0.0, 0.0);
            for i in 0..n - 1 {
                let r = list[i] as usize;
                wl += self.w[r];
                sl += self.w[r] * self.y[r];
                let left_count = i + 1;
                if left_count < min_leaf || n - left_count < min_leaf {
                    continue;
                }
                let (a, b) = (col[r], col[list[i + 1] as usize]);
                if a >= b {
                    continue;
                }
                let wr = sw - wl;
                if wl <= 0.0 || wr <= 0.0 {
                    continue;
                }
                let sr = s1 - sl;
                let score = sl * sl / wl + sr * sr / wr;
                let better = match &best {
                    None => true,
                    Some(c) => score > c.score + SCORE_TIE * c.score.abs(),
                };
                if better {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(a, b),
                        score,
                    });
                }
            }
        }
        best
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

impl RegressionTree {
    /// A single-leaf tree.
    pub fn constant(value: f64, n_features: usize) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
            n_features,
            config: TreeConfig {
                max_depth: 0,
                min_samples_leaf: 1,
            },
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn config(&self) -> TreeConfig {
        self.config
    }

    /// `(feature, threshold)` of the root, if it splits.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.predict_unchecked(r)).collect())
    }

    /// Indented text dump, one node per line. Debug aid only.
    pub fn dump(&self) -> String {
        fn walk(nodes: &[Node], id: usize, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match nodes[id] {
                Node::Leaf { value } => {
                    let _ = writeln!(out, "{pad}leaf {value}");
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "{pad}x[{feature}] <= {threshold}");
                    walk(nodes, left, depth + 1, out);
                    walk(nodes, right, depth + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(&self.nodes, 0, 0, &mut out);
        out
    }
}
