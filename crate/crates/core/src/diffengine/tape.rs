//! Reverse-mode differentiation over a recorded scalar graph.
//!
//! Every operation on a [`Var`] appends one node holding the local partials
//! to its (at most two) parents. A single backward sweep over the node list
//! then yields the gradient of one output with respect to every leaf. Each
//! evaluation owns its tape; nothing is shared across threads.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::{sigmoid, sign0, Real};
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Ln,
    Sqrt,
    Powi,
    Recip,
    Abs,
    Relu,
    Sigmoid,
    Coth,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Const => "const",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Exp => "exp",
            Op::Ln => "log",
            Op::Sqrt => "sqrt",
            Op::Powi => "power",
            Op::Recip => "reciprocal",
            Op::Abs => "abs",
            Op::Relu => "relu",
            Op::Sigmoid => "sigmoid",
            Op::Coth => "coth",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    kinks: RefCell<Vec<f64>>,
}

#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}({})", self.idx, self.val)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
            kinks: RefCell::new(Vec::new()),
        }
    }

    fn push(&self, val: f64, op: Op, parents: [u32; 2], partials: [f64; 2]) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node { parents, partials, op });
        Var { tape: self, idx, val }
    }

    pub fn var(&self, val: f64) -> Var<'_> {
        self.push(val, Op::Leaf, [NONE, NONE], [0.0, 0.0])
    }

    pub fn constant(&self, val: f64) -> Var<'_> {
        self.push(val, Op::Const, [NONE, NONE], [0.0, 0.0])
    }

    pub fn vars(&self, vals: &[f64]) -> Vec<Var<'_>> {
        vals.iter().map(|&v| self.var(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Arguments of every `abs`/`relu` evaluated so far, in order.
    pub fn kinks(&self) -> Vec<f64> {
        self.kinks.borrow().clone()
    }

    /// Gradient of `output` with respect to `wrt`.
    ///
    /// A non-finite entry is reported with the first primitive (in backward
    /// order) whose local contribution turned non-finite.
    pub fn gradient(&self, output: Var<'_>, wrt: &[Var<'_>]) -> Result<Vec<f64>> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        let mut culprit: Option<Op> = None;
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            for k in 0..2 {
                let p = node.parents[k];
                if p == NONE {
                    continue;
                }
                let contrib = a * node.partials[k];
                if !contrib.is_finite() && a.is_finite() && culprit.is_none() {
                    culprit = Some(node.op);
                }
                adj[p as usize] += contrib;
            }
        }
        let grad: Vec<f64> = wrt.iter().map(|v| adj[v.idx as usize]).collect();
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            let primitive = culprit
                .or_else(|| (!output.val.is_finite()).then_some(nodes[output.idx as usize].op))
                .unwrap_or(Op::Leaf)
                .name();
            return Err(Error::NonFiniteGradient { index, primitive });
        }
        Ok(grad)
    }
}

impl<'t> Var<'t> {
    fn unary(self, val: f64, op: Op, d: f64) -> Self {
        self.tape.push(val, op, [self.idx, NONE], [d, 0.0])
    }

    fn binary(self, o: Self, val: f64, op: Op, da: f64, db: f64) -> Self {
        self.tape.push(val, op, [self.idx, o.idx], [da, db])
    }

    pub fn val(&self) -> f64 {
        self.val
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, self.val + o.val, Op::Add, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, self.val - o.val, Op::Sub, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, self.val * o.val, Op::Mul, o.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.val / o.val;
        self.binary(o, q, Op::Div, 1.0 / o.val, -q / o.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.val, Op::Neg, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        self.unary(self.val + c, Op::Add, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        self.unary(self.val - c, Op::Sub, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.unary(self.val * c, Op::Mul, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self.unary(self.val / c, Op::Div, 1.0 / c)
    }
}

impl<'t> Real for Var<'t> {
    fn cst(&self, v: f64) -> Self {
        self.tape.constant(v)
    }

    fn value(&self) -> f64 {
        self.val
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, Op::Exp, e)
    }

    fn ln(self) -> Self {
        self.unary(self.val.ln(), Op::Ln, 1.0 / self.val)
    }

    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(s, Op::Sqrt, 0.5 / s)
    }

    fn powi(self, n: i32) -> Self {
        let d = n as f64 * self.val.powi(n - 1);
        self.unary(self.val.powi(n), Op::Powi, d)
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.val;
        self.unary(r, Op::Recip, -r * r)
    }

    fn abs(self) -> Self {
        self.tape.kinks.borrow_mut().push(self.val);
        self.unary(self.val.abs(), Op::Abs, sign0(self.val))
    }

    fn relu(self) -> Self {
        self.tape.kinks.borrow_mut().push(self.val);
        let d = if self.val > 0.0 { 1.0 } else { 0.0 };
        self.unary(self.val.max(0.0), Op::Relu, d)
    }

    fn sigmoid(self) -> Self {
        let s = sigmoid(self.val);
        self.unary(s, Op::Sigmoid, s * (1.0 - s))
    }

    fn coth(self) -> Self {
        let c = crate::thermo::coth(self.val);
        self.unary(c, Op::Coth, 1.0 - c * c)
    }
}

/// Value and exact gradient of a tape-recorded scalar objective.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub kinks: Vec<f64>,
}

/// Exact gradient of `objective` at `theta` by one reverse sweep.
pub fn param_gradient<F>(objective: F, theta: &[f64]) -> Result<Evaluated>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let vars = tape.vars(theta);
    let out = objective(&vars);
    let gradient = tape.gradient(out, &vars)?;
    Ok(Evaluated {
        value: out.val,
        gradient,
        kinks: tape.kinks(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sum_of_squares() {
        let e = param_gradient(|x| x[0] * x[0] + x[1] * x[1], &[1.0, -2.0]).unwrap();
        assert_eq!(e.value, 5.0);
        assert_eq!(e.gradient, vec![2.0, -4.0]);
    }

    #[test]
    fn constant_objective_has_zero_gradient() {
        let e = param_gradient(|x| x[0].cst(4.2), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.gradient, vec![0.0; 3]);
    }

    #[test]
    fn primitives_against_closed_forms() {
        let x = 0.8;
        let cases: Vec<(fn(Var<'_>) -> Var<'_>, f64)> = vec![
            (|v| v.exp(), x.exp()),
            (|v| v.ln(), 1.0 / x),
            (|v| v.sqrt(), 0.5 / x.sqrt()),
            (|v| v.powi(3), 3.0 * x * x),
            (|v| v.recip(), -1.0 / (x * x)),
            (|v| (-v).abs(), 1.0),
            (|v| (v - 1.0).relu(), 0.0),
            (|v| v.sigmoid(), sigmoid(x) * (1.0 - sigmoid(x))),
            (|v| v.coth(), 1.0 - crate::thermo::coth(x).powi(2)),
            (|v| v.cst(2.0) / v, -2.0 / (x * x)),
        ];
        for (f, expected) in cases {
            let e = param_gradient(|p| f(p[0]), &[x]).unwrap();
            assert_relative_eq!(e.gradient[0], expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn kinks_are_recorded() {
        let e = param_gradient(|p| p[0].abs() + (p[1] - 0.5).relu(), &[0.0, 0.2]).unwrap();
        assert_eq!(e.kinks, vec![0.0, 0.2 - 0.5]);
        assert_eq!(e.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_gradient_names_primitive() {
        let err = param_gradient(|p| p[0].sqrt(), &[0.0]).unwrap_err();
        match err {
            Error::NonFiniteGradient { index, primitive } => {
                assert_eq!(index, 0);
                assert_eq!(primitive, "sqrt");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = param_gradient(|p| p[1] * p[0].ln(), &[0.0, 1.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFiniteGradient { primitive: "log", .. } | Error::NonFiniteGradient { primitive: "mul", .. }
        ));
    }

    fn objective<'t>(x: &[Var<'t>]) -> Var<'t> {
        (x[0] * x[1]).sigmoid() + x[2].exp() * x[0] - x[1] / (x[2] * x[2] + 1.0)
    }

    proptest! {
        #[test]
        fn gradient_of_sum_is_sum_of_gradients(a in proptest::collection::vec(-2.0..2.0f64, 3)) {
            let f = param_gradient(objective, &a).unwrap();
            let g = param_gradient(|x| x[0] * x[1] * x[2], &a).unwrap();
            let fg = param_gradient(|x| objective(x) + x[0] * x[1] * x[2], &a).unwrap();
            for i in 0..3 {
                prop_assert!((fg.gradient[i] - f.gradient[i] - g.gradient[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn matches_central_differences(a in proptest::collection::vec(-2.0..2.0f64, 3)) {
            let f = |v: &[f64]| {
                let s = sigmoid(v[0] * v[1]);
                s + v[2].exp() * v[0] - v[1] / (v[2] * v[2] + 1.0)
            };
            let e = param_gradient(objective, &a).unwrap();
            for i in 0..3 {
                let h = 1e-6;
                let mut p = a.clone();
                p[i] += h;
                let fp = f(&p);
                p[i] -= 2.0 * h;
                let fm = f(&p);
                let fd = (fp - fm) / (2.0 * h);
                prop_assert!((fd - e.gradient[i]).abs() < 1e-7 * (1.0 + fd.abs()));
            }
        }
    }
}
