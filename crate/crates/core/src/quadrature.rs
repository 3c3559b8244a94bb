//! Gauss–Legendre grids: single intervals, composite panels and geometrically
//! graded panels for integrands with an endpoint singularity.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes per panel used by the composite rules.
pub const PANEL_ORDER: usize = 16;

/// Quadrature nodes and weights on some interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Weighted sum of precomputed values.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn append(&mut self, other: Grid) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }

    /// Mirror image x ↦ −x, nodes kept increasing.
    pub fn reflected(&self) -> Grid {
        Grid {
            nodes: self.nodes.iter().rev().map(|x| -x).collect(),
            weights: self.weights.iter().rev().copied().collect(),
        }
    }
}

/// Gauss–Legendre rule with `n` nodes mapped to [a, b], nodes increasing.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Grid {
    let n = NonZeroUsize::new(n).expect("quadrature order must be positive");
    let rule = GaussLegendre::new(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Grid { nodes, weights }
}

/// Composite rule: `n_panels` equal panels of `order` nodes each.
pub fn panels(a: f64, b: f64, n_panels: usize, order: usize) -> Grid {
    let n_panels = n_panels.max(1);
    let h = (b - a) / n_panels as f64;
    let base = gauss_legendre(order, 0.0, 1.0);
    let mut g = Grid {
        nodes: Vec::with_capacity(n_panels * order),
        weights: Vec::with_capacity(n_panels * order),
    };
    for k in 0..n_panels {
        let left = a + k as f64 * h;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            g.nodes.push(left + h * x);
            g.weights.push(h * w);
        }
    }
    g
}

/// Composite rule with panels no wider than `max_width`.
pub fn panels_by_width(a: f64, b: f64, max_width: f64, order: usize) -> Grid {
    let n = ((b - a) / max_width).ceil().max(1.0) as usize;
    panels(a, b, n, order)
}

/// Panels on [a, b] halving in width toward `a` down to `min_width`,
/// so that a singularity at `a` is resolved.
pub fn graded_toward_left(a: f64, b: f64, min_width: f64, order: usize) -> Grid {
    let mut edges = vec![b];
    let mut w = b - a;
    while w > min_width {
        w *= 0.5;
        edges.push(a + w);
    }
    edges.push(a);
    edges.reverse();
    let base = gauss_legendre(order, 0.0, 1.0);
    let mut g = Grid::default();
    for pair in edges.windows(2) {
        let (l, r) = (pair[0], pair[1]);
        if r <= l {
            continue;
        }
        for (x, wt) in base.nodes.iter().zip(&base.weights) {
            g.nodes.push(l + (r - l) * x);
            g.weights.push((r - l) * wt);
        }
    }
    g
}
