//! Composite Gauss–Legendre quadrature for complex-valued integrands.
//!
//! An interval is split into equal panels and a fixed-order Gauss–Legendre
//! rule is applied on each. Panel sums are combined with a pairwise tree in
//! panel order, so a given spec and integrand always produce bitwise
//! identical results.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::Region;
use crate::error::{Error, Result};

pub const MIN_RULE_ORDER: usize = 2;
pub const MAX_RULE_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss nodes per panel.
    pub rule_order: usize,
    pub panels_x: usize,
    pub panels_t: usize,
}

impl QuadratureSpec {
    pub fn new(rule_order: usize, panels_x: usize, panels_t: usize) -> Result<Self> {
        let spec = Self {
            rule_order,
            panels_x,
            panels_t,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_RULE_ORDER..=MAX_RULE_ORDER).contains(&self.rule_order) {
            return Err(Error::InvalidInput(format!(
                "rule_order {} outside [{MIN_RULE_ORDER}, {MAX_RULE_ORDER}]",
                self.rule_order
            )));
        }
        if self.panels_x == 0 || self.panels_t == 0 {
            return Err(Error::InvalidInput("panel counts must be at least 1".into()));
        }
        Ok(())
    }

    /// Composite nodes along x over `[a, b]`.
    pub fn x_nodes(&self, a: f64, b: f64) -> NodeSet {
        composite_nodes(a, b, self.rule_order, self.panels_x)
    }

    /// Composite nodes along t over `[a, b]`.
    pub fn t_nodes(&self, a: f64, b: f64) -> NodeSet {
        composite_nodes(a, b, self.rule_order, self.panels_t)
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule_order: 16,
            panels_x: 8,
            panels_t: 2,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    fn compute(order: usize) -> Self {
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule of the given order.
pub fn gauss_legendre(order: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(GaussLegendre::compute(order)))
        .clone()
}

/// Quadrature points and weights for some measure, in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeSet {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Nodes per panel; panel sums are reduced pairwise.
    pub panel_len: usize,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ wᵢ vᵢ`, panel by panel, panels combined pairwise.
    pub fn weighted_sum(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.weights.len());
        let chunk = self.panel_len.max(1);
        let panels: Vec<Complex64> = values
            .chunks(chunk)
            .zip(self.weights.chunks(chunk))
            .map(|(v, w)| v.iter().zip(w).fold(Complex64::new(0.0, 0.0), |acc, (v, w)| acc + v * w))
            .collect();
        pairwise_sum(&panels)
    }
}

/// Composite Gauss–Legendre nodes on `[a, b]`. A zero-width interval yields
/// an empty set.
pub fn composite_nodes(a: f64, b: f64, order: usize, panels: usize) -> NodeSet {
    if b <= a {
        return NodeSet {
            panel_len: order,
            ..Default::default()
        };
    }
    let rule = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut points = Vec::with_capacity(order * panels);
    let mut weights = Vec::with_capacity(order * panels);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { a + width * (p + 1) as f64 };
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            points.push(mid + half * x);
            weights.push(half * w);
        }
    }
    NodeSet {
        points,
        weights,
        panel_len: order,
    }
}

/// Nodes for `∫_{lo}^{hi} ds ∫_{s}^{hi} dt g(t)`: a square rule mapped onto
/// the triangle `lo < s < t < hi` by `t = s + (hi − s) v`.
pub fn triangle_nodes(lo: f64, hi: f64, order: usize, panels: usize) -> NodeSet {
    let outer = composite_nodes(lo, hi, order, panels);
    let unit = composite_nodes(0.0, 1.0, order, panels);
    let mut points = Vec::with_capacity(outer.len() * unit.len());
    let mut weights = Vec::with_capacity(outer.len() * unit.len());
    for (s, ws) in outer.iter() {
        let span = hi - s;
        for (v, wv) in unit.iter() {
            points.push(s + span * v);
            weights.push(ws * wv * span);
        }
    }
    NodeSet {
        points,
        weights,
        panel_len: unit.len().max(1),
    }
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

fn check_finite(v: Complex64, at: f64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { at })
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("integration interval [{a}, {b}] is empty")))
    }
}

/// `∫ₐᵇ f` with `spec.panels_x` panels.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    integrate_1d_panels(f, a, b, spec.rule_order, spec.panels_x)
}

pub fn integrate_1d_panels<F>(f: F, a: f64, b: f64, order: usize, panels: usize) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    check_interval(a, b)?;
    let nodes = composite_nodes(a, b, order, panels);
    let values = nodes
        .points
        .iter()
        .map(|&x| check_finite(f(x), x))
        .collect::<Result<Vec<_>>>()?;
    Ok(nodes.weighted_sum(&values))
}

/// Tensor-product rule over the rectangle; `f` takes `(x, t)`.
pub fn integrate_2d<F>(f: F, rect: &Region, spec: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    spec.validate()?;
    rect.validate()?;
    let xs = spec.x_nodes(rect.x_lo, rect.x_hi);
    let ts = spec.t_nodes(rect.t_lo, rect.t_hi);
    let rows = ts
        .points
        .iter()
        .map(|&t| {
            let inner = xs
                .points
                .iter()
                .map(|&x| check_finite(f(x, t), x))
                .collect::<Result<Vec<_>>>()?;
            Ok(xs.weighted_sum(&inner))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ts.weighted_sum(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rule_is_symmetric_and_normalized() {
        for order in [2, 3, 7, 16, 33, 64] {
            let r = gauss_legendre(order);
            let total: f64 = r.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "order {order}: {total}");
            for i in 0..order {
                assert!((r.nodes[i] + r.nodes[order - 1 - i]).abs() < 1e-15);
                assert!(r.nodes[i].abs() < 1.0);
            }
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        let two = gauss_legendre(2);
        assert!((two.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_examples() {
        let spec = QuadratureSpec::new(8, 4, 1).unwrap();
        let one = integrate_1d(|_| c(1.0, 0.0), 0.0, 1.0, &spec).unwrap();
        assert!((one - c(1.0, 0.0)).norm() < 1e-14);
        let sin = integrate_1d(|x| c(x.sin(), 0.0), 0.0, PI, &spec).unwrap();
        assert!((sin - c(2.0, 0.0)).norm() < 1e-13);
        let osc = integrate_1d(Complex64::cis, 0.0, 1.0, &spec).unwrap();
        let exact = c(1f64.sin(), 1.0 - 1f64.cos());
        assert!((osc - exact).norm() < 1e-14);
    }

    #[test]
    fn two_dimensional_examples() {
        let spec = QuadratureSpec::new(6, 2, 3).unwrap();
        let unit = Region::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let one = integrate_2d(|_, _| c(1.0, 0.0), &unit, &spec).unwrap();
        assert!((one - c(1.0, 0.0)).norm() < 1e-14);
        let xt = integrate_2d(|x, t| c(x * t, 0.0), &unit, &spec).unwrap();
        assert!((xt - c(0.25, 0.0)).norm() < 1e-14);

        let rect = Region::new(-0.5, 2.0, 0.3, 1.7).unwrap();
        let g = |x: f64| Complex64::cis(3.0 * x) * x;
        let h = |t: f64| c(t.cos(), t * t);
        let joint = integrate_2d(|x, t| g(x) * h(t), &rect, &spec).unwrap();
        let gx = integrate_1d_panels(g, -0.5, 2.0, 6, 2).unwrap();
        let ht = integrate_1d_panels(h, 0.3, 1.7, 6, 3).unwrap();
        assert!((joint - gx * ht).norm() <= 1e-12 * joint.norm());
    }

    #[test]
    fn polynomial_exactness_on_single_panel() {
        for order in [2, 5, 10, 16, 24] {
            let degree = 2 * order - 1;
            // ∫_{-0.3}^{1.1} x^d dx
            let (a, b) = (-0.3f64, 1.1f64);
            let exact = (b.powi(degree as i32 + 1) - a.powi(degree as i32 + 1)) / (degree as f64 + 1.0);
            let got = integrate_1d_panels(|x| c(x.powi(degree as i32), 0.0), a, b, order, 1).unwrap();
            assert!((got.re - exact).abs() <= 1e-12 * exact.abs(), "order {order}: {} vs {exact}", got.re);
        }
    }

    #[test]
    fn refinement_converges_on_oscillatory_exponential() {
        for omega in [5.0, 12.0, 20.0] {
            let exact = (Complex64::cis(omega) - 1.0) / c(0.0, omega);
            let mut last = f64::INFINITY;
            let mut resolved = false;
            for panels in [1, 2, 4, 8, 16] {
                let got = integrate_1d_panels(|x| Complex64::cis(omega * x), 0.0, 1.0, 4, panels).unwrap();
                let err = (got - exact).norm();
                if resolved {
                    assert!(err < last || err < 1e-14, "omega {omega} panels {panels}: {err} !< {last}");
                }
                // Beyond about one panel per radian the error must keep falling.
                resolved = panels as f64 >= omega / 4.0;
                last = err;
            }
        }
    }

    #[test]
    fn results_are_bitwise_deterministic() {
        let spec = QuadratureSpec::new(11, 7, 3).unwrap();
        let f = |x: f64| Complex64::cis(13.0 * x * x) / (1.0 + x * x);
        let a = integrate_1d(f, -2.0, 3.0, &spec).unwrap();
        let b = integrate_1d(f, -2.0, 3.0, &spec).unwrap();
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn triangle_rule_integrates_over_the_triangle() {
        // ∫_0^2 ds ∫_s^2 t² dt = ∫_0^2 t³ dt = 4
        let nodes = triangle_nodes(0.0, 2.0, 4, 2);
        let values: Vec<_> = nodes.points.iter().map(|t| c(t * t, 0.0)).collect();
        assert!((nodes.weighted_sum(&values).re - 4.0).abs() < 1e-13);
    }

    #[test]
    fn non_finite_and_bad_input_rejected() {
        let spec = QuadratureSpec::new(4, 1, 1).unwrap();
        assert!(matches!(
            integrate_1d(|_| c(f64::NAN, 0.0), 0.0, 1.0, &spec),
            Err(Error::NonFiniteIntegrand { .. })
        ));
        assert!(integrate_1d(|_| c(1.0, 0.0), 1.0, 1.0, &spec).is_err());
        assert!(QuadratureSpec::new(1, 1, 1).is_err());
        assert!(QuadratureSpec::new(65, 1, 1).is_err());
        assert!(QuadratureSpec::new(4, 0, 1).is_err());
    }
}
