//! Gauss-Legendre rules and composite rules on graded panels.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    type Rules = HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>;
    static CACHE: OnceLock<Mutex<Rules>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(compute_gauss_legendre(n))).clone()
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A flat list of quadrature nodes and weights on the real line.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn push_panel(&mut self, a: f64, b: f64, order: usize) {
        if !(b > a) {
            return;
        }
        let gl = gauss_legendre(order);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in gl.0.iter().zip(&gl.1) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Panels on `[a, b]` whose lengths grow geometrically away from `a`,
    /// starting at `first` (clamped into the interval). `order_for(len)` picks
    /// the Gauss order per panel.
    pub fn graded_from_left(a: f64, b: f64, first: f64, order_for: impl Fn(f64) -> usize) -> Rule {
        let mut rule = Rule::default();
        if !(b > a) {
            return rule;
        }
        let mut lo = a;
        let mut len = first.min(b - a).max((b - a) * 1e-14);
        loop {
            let hi = (lo + len).min(b);
            // absorb a tiny remainder into the last panel
            let hi = if b - hi < 0.5 * len { b } else { hi };
            rule.push_panel(lo, hi, order_for(hi - lo));
            if hi >= b {
                break;
            }
            lo = hi;
            len *= 2.0;
        }
        rule
    }

    /// Like [`Rule::graded_from_left`] with every panel capped at `max_len`
    /// and a fixed Gauss order.
    pub fn graded_capped(a: f64, b: f64, first: f64, max_len: f64, order: usize) -> Rule {
        let mut rule = Rule::default();
        if !(b > a) {
            return rule;
        }
        let mut lo = a;
        let mut len = first.min(max_len).min(b - a).max((b - a) * 1e-14);
        loop {
            let mut hi = (lo + len).min(b);
            if b - hi < 0.25 * len {
                hi = b;
            }
            rule.push_panel(lo, hi, order);
            if hi >= b {
                break;
            }
            lo = hi;
            len = (len * 2.0).min(max_len);
        }
        rule
    }

    /// Mirror image of [`Rule::graded_from_left`]: panels refine toward `b`.
    pub fn graded_to_right(a: f64, b: f64, first: f64, order_for: impl Fn(f64) -> usize) -> Rule {
        let left = Rule::graded_from_left(0.0, b - a, first, order_for);
        Rule {
            nodes: left.nodes.iter().map(|&t| b - t).collect(),
            weights: left.weights,
        }
    }

    pub fn extend(&mut self, other: Rule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}
