/// The quintic matching value, slope and curvature at both ends of
/// `[x0, x0 + h]`, stored as monomial coefficients in the local coordinate
/// `s = (x − x0)/h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quintic {
    x0: f64,
    h: f64,
    c: [f64; 6],
}

impl Quintic {
    /// `left` and `right` are `(value, first, second)` derivatives in `x`.
    pub fn hermite(x0: f64, left: [f64; 3], x1: f64, right: [f64; 3]) -> Self {
        let h = x1 - x0;
        let c0 = left[0];
        let c1 = left[1] * h;
        let c2 = 0.5 * left[2] * h * h;
        let r0 = right[0] - (c0 + c1 + c2);
        let r1 = right[1] * h - (c1 + 2.0 * c2);
        let r2 = right[2] * h * h - 2.0 * c2;
        let c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let c4 = -15.0 * r0 + 7.0 * r1 - r2;
        let c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Self {
            x0,
            h,
            c: [c0, c1, c2, c3, c4, c5],
        }
    }

    /// Value and first two derivatives in `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let s = (x - self.x0) / self.h;
        let c = &self.c;
        let v = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        let d = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
        let dd = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
        [v, d / self.h, dd / (self.h * self.h)]
    }

    pub fn start(&self) -> f64 {
        self.x0
    }

    pub fn end(&self) -> f64 {
        self.x0 + self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix6, Vector6};

    // Independent route: assemble the 6×6 conditions in x directly and solve.
    fn solve_direct(x0: f64, l: [f64; 3], x1: f64, r: [f64; 3]) -> Vector6<f64> {
        let mut m = Matrix6::zeros();
        let mut rhs = Vector6::zeros();
        for (row, (x, cond, val)) in [
            (x0, 0, l[0]),
            (x0, 1, l[1]),
            (x0, 2, l[2]),
            (x1, 0, r[0]),
            (x1, 1, r[1]),
            (x1, 2, r[2]),
        ]
        .into_iter()
        .enumerate()
        {
            for k in 0..6 {
                let coef = match cond {
                    0 => x.powi(k as i32),
                    1 if k >= 1 => k as f64 * x.powi(k as i32 - 1),
                    2 if k >= 2 => (k * (k - 1)) as f64 * x.powi(k as i32 - 2),
                    _ => 0.0,
                };
                m[(row, k)] = coef;
            }
            rhs[row] = val;
        }
        m.lu().solve(&rhs).unwrap()
    }

    #[test]
    fn matches_linear_solve() {
        let (x0, x1) = (0.7, 1.3);
        let l = [0.2, 0.05, -0.3];
        let r = [0.45, 0.1, 0.0];
        let q = Quintic::hermite(x0, l, x1, r);
        let coeffs = solve_direct(x0, l, x1, r);
        for &x in &[0.7f64, 0.8, 1.0, 1.25, 1.3] {
            let direct: f64 = (0..6).map(|k| coeffs[k] * x.powi(k as i32)).sum();
            assert!((q.eval(x)[0] - direct).abs() < 1e-11, "{x}");
        }
    }

    #[test]
    fn edge_conditions_hold() {
        let l = [1.0, -2.0, 3.0];
        let r = [-0.5, 0.25, 4.0];
        let q = Quintic::hermite(2.0, l, 2.5, r);
        let a = q.eval(2.0);
        let b = q.eval(2.5);
        for k in 0..3 {
            assert!((a[k] - l[k]).abs() < 1e-12);
            assert!((b[k] - r[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_quintics() {
        let p = |x: f64| {
            [
                1.0 + x - 2.0 * x.powi(3) + 0.5 * x.powi(5),
                1.0 - 6.0 * x * x + 2.5 * x.powi(4),
                -12.0 * x + 10.0 * x.powi(3),
            ]
        };
        let q = Quintic::hermite(0.1, p(0.1), 0.9, p(0.9));
        for &x in &[0.2, 0.5, 0.77] {
            let (a, b) = (q.eval(x), p(x));
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }
}
