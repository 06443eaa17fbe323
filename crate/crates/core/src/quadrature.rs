//! Gauss–Legendre rules mapped to arbitrary intervals, and the graded
//! panel layouts used around kernel singularities.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre rule stored on the reference interval [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let points = NonZeroUsize::new(points.max(1)).expect("nonzero");
        let rule = GaussLegendre::new(points);
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (a + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Panel edges `0 = e_0 < first = e_1 < 2 e_1 < 4 e_1 < ... < end` with
/// geometric growth `ratio`, the last edge clipped to `end`.
///
/// With `first >= end` the layout degenerates to the single panel [0, end].
pub fn geometric_edges(first: f64, end: f64, ratio: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut e = first.min(end);
    edges.push(e);
    while e < end {
        e = (e * ratio).min(end);
        // merge a sliver panel into its neighbour
        if end - e < 1e-3 * (e - edges[edges.len() - 1]) {
            e = end;
        }
        edges.push(e);
    }
    edges
}
