//! Gauss-Legendre rules and their tensor products.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange {
                name: "quad_order",
                value: n as f64,
                expected: "at least 2 nodes",
            });
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th largest root, refined by Newton
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes mapped to `[-half_width, half_width]` with weights normalized to sum to one,
    /// i.e. the rule for the mean under a uniform distribution on that interval.
    pub fn uniform_average(&self, half_width: f64) -> (Vec<f64>, Vec<f64>) {
        let nodes = self.nodes.iter().map(|x| x * half_width).collect();
        let weights = self.weights.iter().map(|w| w / 2.0).collect();
        (nodes, weights)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One node of a 4-fold tensor-product rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node4 {
    pub point: [f64; 4],
    pub weight: f64,
}

/// All `n⁴` nodes of the uniform-average rule on `[-δ, δ]⁴`, in lexicographic order.
pub fn tensor_nodes4(rule: &GaussLegendre, half_width: f64) -> Vec<Node4> {
    let (x, w) = rule.uniform_average(half_width);
    let n = x.len();
    let mut out = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out.push(Node4 {
                        point: [x[i], x[j], x[k], x[l]],
                        weight: w[i] * w[j] * w[k] * w[l],
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matches_tabulated_rule() {
        let r = GaussLegendre::new(3).unwrap();
        assert_abs_diff_eq!(r.nodes[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[1], 0.0);
        assert_abs_diff_eq!(r.weights[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[1], 8.0 / 9.0, epsilon = 1e-15);
        let r = GaussLegendre::new(8).unwrap();
        assert_abs_diff_eq!(r.nodes[7], 0.960_289_856_497_536_3, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[0], 0.101_228_536_290_376_3, epsilon = 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 2..=16 {
            let r = GaussLegendre::new(n).unwrap();
            for deg in 0..(2 * n) {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_abs_diff_eq!(q, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn rejects_order_below_two() {
        assert!(GaussLegendre::new(1).is_err());
    }

    #[test]
    fn tensor_weights_sum_to_one() {
        let r = GaussLegendre::new(4).unwrap();
        let nodes = tensor_nodes4(&r, 0.3);
        assert_eq!(nodes.len(), 256);
        assert_abs_diff_eq!(nodes.iter().map(|n| n.weight).sum::<f64>(), 1.0, epsilon = 1e-14);
        assert!(nodes.iter().all(|n| n.point.iter().all(|x| x.abs() < 0.3)));
    }
}
