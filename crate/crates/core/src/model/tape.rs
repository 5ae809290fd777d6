//! Reverse-mode automatic differentiation over a scalar computation tape.
//!
//! The tape is an append-only record of scalar operations. Each node stores
//! its value and the local partial derivative with respect to each parent;
//! [`Tape::backward`] walks the records once in reverse and accumulates
//! adjoints, so fan-out (a value consumed by several later nodes) is handled
//! by summation. Branching control flow is resolved at record time, which is
//! what the clamped transcendentals below rely on.
//!
//! All tensor-level structure (layers, losses) is composed from these scalar
//! nodes; n-ary primitives (`dot`, `sqnorm`, `wsum`, ...) exist to keep node
//! counts low on hot paths rather than to add semantics.

/// Handle to a scalar recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(u32);

impl Var {
    /// Index of the record on its tape.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Append-only record of scalar operations with reverse-mode backward.
#[derive(Default)]
pub struct Tape {
    vals: Vec<f64>,
    edge_start: Vec<u32>,
    edge_count: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

/// Adjoints produced by [`Tape::backward`].
pub struct Grads {
    adj: Vec<f64>,
}

impl Grads {
    /// d(root)/d(v). Zero for any var the root does not depend on.
    pub fn get(&self, v: Var) -> f64 {
        self.adj[v.index()]
    }
}

const ARTANH_CLAMP: f64 = 1.0 - 1e-12;

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Drops all records but keeps allocations for reuse across epochs.
    pub fn clear(&mut self) {
        self.vals.clear();
        self.edge_start.clear();
        self.edge_count.clear();
        self.parents.clear();
        self.partials.clear();
    }

    /// Current value of a recorded scalar.
    pub fn val(&self, v: Var) -> f64 {
        self.vals[v.index()]
    }

    fn push(&mut self, value: f64, edges: &[(Var, f64)]) -> Var {
        let idx = self.vals.len() as u32;
        self.vals.push(value);
        self.edge_start.push(self.parents.len() as u32);
        self.edge_count.push(edges.len() as u32);
        for &(p, d) in edges {
            self.parents.push(p.0);
            self.partials.push(d);
        }
        Var(idx)
    }

    /// A leaf: inputs and parameters. Gradient flows into it, nothing below.
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(value, &[])
    }

    /// A constant; structurally identical to a leaf, named for intent.
    pub fn constant(&mut self, value: f64) -> Var {
        self.push(value, &[])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.push(self.val(a) + self.val(b), &[(a, 1.0), (b, 1.0)])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.push(self.val(a) - self.val(b), &[(a, 1.0), (b, -1.0)])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va * vb, &[(a, vb), (b, va)])
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va / vb, &[(a, 1.0 / vb), (b, -va / (vb * vb))])
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.push(-self.val(a), &[(a, -1.0)])
    }

    pub fn recip(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(1.0 / v, &[(a, -1.0 / (v * v))])
    }

    /// c * a for a constant c.
    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.push(c * self.val(a), &[(a, c)])
    }

    /// a + c for a constant c.
    pub fn add_c(&mut self, a: Var, c: f64) -> Var {
        self.push(self.val(a) + c, &[(a, 1.0)])
    }

    /// a*b + c in one record.
    pub fn fma(&mut self, a: Var, b: Var, c: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va * vb + self.val(c), &[(a, vb), (b, va), (c, 1.0)])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let e = self.val(a).exp();
        self.push(e, &[(a, e)])
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.ln(), &[(a, 1.0 / v)])
    }

    pub fn log2(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.log2(), &[(a, 1.0 / (v * std::f64::consts::LN_2))])
    }

    /// log2(max(1, a)): flat (zero value, zero gradient) below 1.
    pub fn log2_clamp1(&mut self, a: Var) -> Var {
        let v = self.val(a);
        if v <= 1.0 {
            self.push(0.0, &[(a, 0.0)])
        } else {
            self.push(v.log2(), &[(a, 1.0 / (v * std::f64::consts::LN_2))])
        }
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.val(a);
        if v <= 0.0 {
            return self.push(0.0, &[(a, 0.0)]);
        }
        let s = v.sqrt();
        self.push(s, &[(a, 0.5 / s)])
    }

    pub fn sqr(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v * v, &[(a, 2.0 * v)])
    }

    pub fn cosh(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.cosh(), &[(a, v.sinh())])
    }

    pub fn sinh(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.sinh(), &[(a, v.cosh())])
    }

    /// arcosh with the argument clamped below at 1 (flat in the clamp).
    pub fn arcosh_c(&mut self, a: Var) -> Var {
        let v = self.val(a);
        if v <= 1.0 {
            self.push(0.0, &[(a, 0.0)])
        } else {
            self.push(v.acosh(), &[(a, 1.0 / ((v * v - 1.0).sqrt().max(1e-150)))])
        }
    }

    /// artanh with the argument clamped above at 1 - 1e-12 (flat in the clamp).
    pub fn artanh_c(&mut self, a: Var) -> Var {
        let v = self.val(a);
        if v >= ARTANH_CLAMP {
            self.push(ARTANH_CLAMP.atanh(), &[(a, 0.0)])
        } else {
            self.push(v.atanh(), &[(a, 1.0 / (1.0 - v * v))])
        }
    }

    /// Leaky rectifier with the given negative slope.
    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.val(a);
        if v >= 0.0 {
            self.push(v, &[(a, 1.0)])
        } else {
            self.push(slope * v, &[(a, slope)])
        }
    }

    /// Sum of all vars.
    pub fn sum(&mut self, xs: &[Var]) -> Var {
        let v: f64 = xs.iter().map(|&x| self.val(x)).sum();
        let idx = self.vals.len() as u32;
        self.vals.push(v);
        self.edge_start.push(self.parents.len() as u32);
        self.edge_count.push(xs.len() as u32);
        for &x in xs {
            self.parents.push(x.0);
            self.partials.push(1.0);
        }
        Var(idx)
    }

    /// Weighted sum with constant weights: sum_i w_i x_i.
    pub fn wsum(&mut self, xs: &[Var], ws: &[f64]) -> Var {
        debug_assert_eq!(xs.len(), ws.len());
        let v: f64 = xs.iter().zip(ws).map(|(&x, &w)| self.val(x) * w).sum();
        let idx = self.vals.len() as u32;
        self.vals.push(v);
        self.edge_start.push(self.parents.len() as u32);
        self.edge_count.push(xs.len() as u32);
        for (&x, &w) in xs.iter().zip(ws) {
            self.parents.push(x.0);
            self.partials.push(w);
        }
        Var(idx)
    }

    /// Euclidean dot product of two equal-length var slices.
    pub fn dot(&mut self, xs: &[Var], ys: &[Var]) -> Var {
        debug_assert_eq!(xs.len(), ys.len());
        let v: f64 = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| self.val(x) * self.val(y))
            .sum();
        let idx = self.vals.len() as u32;
        self.vals.push(v);
        self.edge_start.push(self.parents.len() as u32);
        self.edge_count.push(2 * xs.len() as u32);
        for (&x, &y) in xs.iter().zip(ys) {
            let (vx, vy) = (self.vals[x.index()], self.vals[y.index()]);
            self.parents.push(x.0);
            self.partials.push(vy);
            self.parents.push(y.0);
            self.partials.push(vx);
        }
        Var(idx)
    }

    /// Squared Euclidean norm of a var slice.
    pub fn sqnorm(&mut self, xs: &[Var]) -> Var {
        let v: f64 = xs.iter().map(|&x| self.val(x) * self.val(x)).sum();
        let idx = self.vals.len() as u32;
        self.vals.push(v);
        self.edge_start.push(self.parents.len() as u32);
        self.edge_count.push(xs.len() as u32);
        for &x in xs {
            self.parents.push(x.0);
            self.partials.push(2.0 * self.vals[x.index()]);
        }
        Var(idx)
    }

    /// Minkowski inner product <x,y> = -x0 y0 + sum_{i>=1} x_i y_i.
    pub fn minkowski_dot(&mut self, xs: &[Var], ys: &[Var]) -> Var {
        debug_assert_eq!(xs.len(), ys.len());
        debug_assert!(xs.len() >= 2);
        let mut v = -self.val(xs[0]) * self.val(ys[0]);
        for (&x, &y) in xs.iter().zip(ys).skip(1) {
            v += self.val(x) * self.val(y);
        }
        let idx = self.vals.len() as u32;
        self.vals.push(v);
        self.edge_start.push(self.parents.len() as u32);
        self.edge_count.push(2 * xs.len() as u32);
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            let (vx, vy) = (self.vals[x.index()], self.vals[y.index()]);
            self.parents.push(x.0);
            self.partials.push(sign * vy);
            self.parents.push(y.0);
            self.partials.push(sign * vx);
        }
        Var(idx)
    }

    /// First component of softmax((s1,s2,s3)/t). The max shift is detached,
    /// which leaves the softmax Jacobian unchanged (shift invariance).
    pub fn softmax3_first(&mut self, s: [Var; 3], t: f64) -> Var {
        let v = [self.val(s[0]), self.val(s[1]), self.val(s[2])];
        let m = v[0].max(v[1]).max(v[2]);
        let e = [
            ((v[0] - m) / t).exp(),
            ((v[1] - m) / t).exp(),
            ((v[2] - m) / t).exp(),
        ];
        let z = e[0] + e[1] + e[2];
        let p = [e[0] / z, e[1] / z, e[2] / z];
        self.push(
            p[0],
            &[
                (s[0], p[0] * (1.0 - p[0]) / t),
                (s[1], -p[0] * p[1] / t),
                (s[2], -p[0] * p[2] / t),
            ],
        )
    }

    /// Reverse accumulation from `root`. Each record is visited exactly once.
    pub fn backward(&self, root: Var) -> Grads {
        let n = self.vals.len();
        let mut adj = vec![0.0; n];
        adj[root.index()] = 1.0;
        for i in (0..n).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let s = self.edge_start[i] as usize;
            let c = self.edge_count[i] as usize;
            for e in s..s + c {
                adj[self.parents[e] as usize] += a * self.partials[e];
            }
        }
        Grads { adj }
    }
}
