//! Quadrature rules on triangles (barycentric points, weights summing to 1)
//! and on edges (parameter in [0, 1], weights summing to 1).

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Symmetric 6-point rule, exact to degree 4.
    pub fn degree4() -> Self {
        let a1 = 0.445948490915964886318329253883;
        let w1 = 0.223381589678011465944806356;
        let a2 = 0.091576213509770743459571463402;
        let w2 = 0.109951743655321867388526976;
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            points.extend([[b, a, a], [a, b, a], [a, a, b]]);
            weights.extend([w; 3]);
        }
        QuadratureRule {
            points,
            weights,
            degree: 4,
        }
    }

    /// Collapsed Gauss product rule (5 x 4 points), exact to degree 7.
    pub fn degree7() -> Self {
        let gu = gauss_legendre(5);
        let gv = gauss_legendre(4);
        let mut points = Vec::with_capacity(20);
        let mut weights = Vec::with_capacity(20);
        for &(su, wu) in &gu {
            let u = 0.5 * (su + 1.0);
            for &(sv, wv) in &gv {
                let v = 0.5 * (sv + 1.0);
                let x = u;
                let y = v * (1.0 - u);
                points.push([1.0 - x - y, x, y]);
                // reference-triangle area 1/2, interval maps contribute 1/4
                weights.push(2.0 * 0.25 * wu * wv * (1.0 - u));
            }
        }
        QuadratureRule {
            points,
            weights,
            degree: 7,
        }
    }
}

impl EdgeRule {
    /// 3-point Gauss rule, exact to degree 5.
    pub fn gauss3() -> Self {
        let g = gauss_legendre(3);
        EdgeRule {
            points: g.iter().map(|&(s, _)| 0.5 * (s + 1.0)).collect(),
            weights: g.iter().map(|&(_, w)| 0.5 * w).collect(),
            degree: 5,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] for n = 1..=5.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    match n {
        1 => vec![(0.0, 2.0)],
        2 => {
            let x = 1.0 / 3f64.sqrt();
            vec![(-x, 1.0), (x, 1.0)]
        }
        3 => {
            let x = (0.6f64).sqrt();
            vec![(-x, 5.0 / 9.0), (0.0, 8.0 / 9.0), (x, 5.0 / 9.0)]
        }
        4 => {
            let r = 2.0 / 7.0 * (6.0f64 / 5.0).sqrt();
            let x1 = (3.0 / 7.0 - r).sqrt();
            let x2 = (3.0 / 7.0 + r).sqrt();
            let w1 = (18.0 + 30f64.sqrt()) / 36.0;
            let w2 = (18.0 - 30f64.sqrt()) / 36.0;
            vec![(-x2, w2), (-x1, w1), (x1, w1), (x2, w2)]
        }
        5 => {
            let r = 2.0 * (10.0f64 / 7.0).sqrt();
            let x1 = (5.0 - r).sqrt() / 3.0;
            let x2 = (5.0 + r).sqrt() / 3.0;
            let w1 = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let w2 = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            vec![
                (-x2, w2),
                (-x1, w1),
                (0.0, 128.0 / 225.0),
                (x1, w1),
                (x2, w2),
            ]
        }
        _ => panic!("gauss_legendre: n = {n} not tabulated"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact mean of x^i y^j over the reference triangle.
    fn monomial_mean(i: u32, j: u32) -> f64 {
        2.0 * factorial(i) * factorial(j) / factorial(i + j + 2)
    }

    fn check_cell(rule: &QuadratureRule) {
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for i in 0..=rule.degree as u32 {
            for j in 0..=(rule.degree as u32 - i) {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[1].powi(i as i32) * p[2].powi(j as i32))
                    .sum();
                let exact = monomial_mean(i, j);
                assert!(
                    (q - exact).abs() <= 1e-14 * exact.max(1e-3),
                    "x^{i} y^{j}: {q} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn degree4_rule_is_exact() {
        check_cell(&QuadratureRule::degree4());
        assert_eq!(QuadratureRule::degree4().len(), 6);
    }

    #[test]
    fn degree7_rule_is_exact() {
        check_cell(&QuadratureRule::degree7());
    }

    #[test]
    fn degree4_rule_is_not_exact_for_degree6() {
        let rule = QuadratureRule::degree4();
        let q: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1].powi(6))
            .sum();
        assert!((q - monomial_mean(6, 0)).abs() > 1e-8);
    }

    #[test]
    fn edge_rule_is_exact_to_degree5() {
        let rule = EdgeRule::gauss3();
        for k in 0..=5 {
            let q: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(s, w)| w * s.powi(k))
                .sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_legendre_tables_integrate_their_degree() {
        for n in 1..=5 {
            let g = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = g.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }
}
