//! Gauss–Legendre rules and a panel-doubling composite integrator.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on `P_n`.
pub fn gauss_legendre<S: Scalar>(n: usize) -> (Vec<S>, Vec<S>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![S::zero(); n];
    let mut weights = vec![S::zero(); n];
    let nf = S::from_count(n);
    let two = S::lit(2.0);
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess
        let mut x = (S::PI() * (S::from_count(i) + S::lit(0.75)) / (nf + S::lit(0.5))).cos();
        let mut dp = S::one();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= S::epsilon() * S::lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != S::zero() {
            dp = d;
        }
        let w = two / ((S::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = S::zero();
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre<S: Scalar>(n: usize, x: S) -> (S, S) {
    let mut p0 = S::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = S::from_count(k);
        let p2 = ((S::lit(2.0) * kf - S::one()) * x * p1 - (kf - S::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = S::from_count(n);
    (p1, nf * (x * p1 - p0) / (x * x - S::one()))
}

/// Fixed composite rule: `panels` equal panels, `order`-point rule on each.
#[derive(Debug, Clone)]
pub struct CompositeRule<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> CompositeRule<S> {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        CompositeRule { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(S) -> S, a: S, b: S, panels: usize) -> S {
        let width = (b - a) / S::from_count(panels);
        let half = width / S::lit(2.0);
        let mut total = S::zero();
        for p in 0..panels {
            let mid = a + (S::from_count(p) + S::lit(0.5)) * width;
            let mut acc = S::zero();
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += *w * f(mid + half * *x);
            }
            total += acc * half;
        }
        total
    }

    /// Nodes and weights over `[a, b]` split into `panels`.
    pub fn points(&self, a: S, b: S, panels: usize) -> Vec<(S, S)> {
        let width = (b - a) / S::from_count(panels);
        let half = width / S::lit(2.0);
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + (S::from_count(p) + S::lit(0.5)) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * *x, *w * half));
            }
        }
        out
    }
}

/// Doubles the panel count of an 8-point composite rule until successive
/// results differ by at most `tol` (absolute, scaled by max(1, |I|)).
pub fn integrate_adaptive<S: Scalar>(f: impl Fn(S) -> S, a: S, b: S, tol: S, max_panels: usize) -> Result<S> {
    if a == b {
        return Ok(S::zero());
    }
    let rule = CompositeRule::new(8);
    let mut panels = 1;
    let mut previous = rule.integrate(&f, a, b, panels);
    let mut before = previous;
    while panels < max_panels {
        panels *= 2;
        let current = rule.integrate(&f, a, b, panels);
        if (current - previous).abs() <= tol * current.abs().max(S::one()) {
            return Ok(current);
        }
        before = previous;
        previous = current;
    }
    Err(Error::NonConvergence {
        what: "Gauss–Legendre panel doubling",
        previous: before.as_f64(),
        last: previous.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre::<f64>(n);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n = {n}");
            // degree 2n − 1 is exact
            let d = 2 * n - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            assert!((integral - 2.0 / (d as f64 + 1.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn adaptive_sine() {
        let v = integrate_adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1 << 10).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        assert!(integrate_adaptive(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, 1e-14, 4).is_err());
    }
}
