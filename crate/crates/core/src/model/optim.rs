//! Adam optimizer with Euclidean and Lorentz-manifold parameter modes.

use crate::geometry::{expmap, renormalize, tangent_project, ManifoldConfig};

use super::params::{ParamError, ParamId, ParamStore};

/// How the optimizer treats one tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    /// Plain coordinates in a vector space.
    Euclidean,
    /// Each row is a point on the Lorentz manifold (ambient = cols).
    ///
    /// Gradients are pulled back to the tangent space (time component sign
    /// flip, then projection), first/second moments run on tangent vectors,
    /// and the update is applied through the exponential map followed by a
    /// renormalization of the time coordinate.
    LorentzRows,
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// Adam over all tensors of one [`ParamStore`].
pub struct Adam {
    cfg: AdamConfig,
    manifold: ManifoldConfig,
    step_count: u64,
    modes: Vec<ParamMode>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(store: &ParamStore, cfg: AdamConfig) -> Self {
        let m = store
            .ids()
            .map(|id| vec![0.0; store.values(id).len()])
            .collect::<Vec<_>>();
        let v = m.clone();
        Self {
            cfg,
            manifold: ManifoldConfig::default(),
            step_count: 0,
            modes: vec![ParamMode::Euclidean; store.len()],
            m,
            v,
        }
    }

    pub fn set_mode(&mut self, id: ParamId, mode: ParamMode) {
        self.modes[id.index()] = mode;
    }

    pub fn set_manifold(&mut self, manifold: ManifoldConfig) {
        self.manifold = manifold;
    }

    /// Apply one update from per-tensor gradients (store order, as returned
    /// by [`ParamStore::collect_grads`]).
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Vec<f64>]) -> Result<(), ParamError> {
        assert_eq!(grads.len(), store.len(), "gradient/tensor count mismatch");
        self.step_count += 1;
        let bc1 = 1.0 - self.cfg.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.cfg.beta2.powi(self.step_count as i32);
        for (i, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let g = &grads[i];
            if g.iter().any(|x| !x.is_finite()) {
                return Err(ParamError::NonFiniteGrad(store.name(id).to_string()));
            }
            match self.modes[i] {
                ParamMode::Euclidean => {
                    let vals = store.values_mut(id);
                    for k in 0..vals.len() {
                        let m = &mut self.m[i][k];
                        let v = &mut self.v[i][k];
                        *m = self.cfg.beta1 * *m + (1.0 - self.cfg.beta1) * g[k];
                        *v = self.cfg.beta2 * *v + (1.0 - self.cfg.beta2) * g[k] * g[k];
                        let mh = *m / bc1;
                        let vh = *v / bc2;
                        vals[k] -= self.cfg.lr * mh / (vh.sqrt() + self.cfg.eps);
                    }
                }
                ParamMode::LorentzRows => {
                    let (rows, cols) = store.shape(id);
                    let name = store.name(id).to_string();
                    let vals = store.values_mut(id);
                    for r in 0..rows {
                        let span = r * cols..(r + 1) * cols;
                        let x = &vals[span.clone()];
                        // Minkowski metric inverse flips the time component.
                        let mut h = g[span.clone()].to_vec();
                        h[0] = -h[0];
                        let rg = tangent_project(x, &h, &self.manifold);
                        let mut u = vec![0.0; cols];
                        for k in 0..cols {
                            let m = &mut self.m[i][r * cols + k];
                            let v = &mut self.v[i][r * cols + k];
                            *m = self.cfg.beta1 * *m + (1.0 - self.cfg.beta1) * rg[k];
                            *v = self.cfg.beta2 * *v + (1.0 - self.cfg.beta2) * rg[k] * rg[k];
                            u[k] = -self.cfg.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.cfg.eps);
                        }
                        // Moments mix tangent spaces across steps; re-project
                        // before leaving through the exponential map.
                        let ut = tangent_project(x, &u, &self.manifold);
                        let mut nx = expmap(x, &ut, &self.manifold);
                        renormalize(&mut nx, &self.manifold);
                        if !nx[0].is_finite() {
                            return Err(ParamError::ManifoldDrift(name));
                        }
                        vals[span].copy_from_slice(&nx);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::lorentz_inner;
    use crate::model::tape::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn euclidean_adam_minimizes_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let w = store.matrix("w", 1, 1, &mut rng);
        let mut opt = Adam::new(&store, AdamConfig::with_lr(0.1));
        for _ in 0..500 {
            let mut tape = Tape::new();
            let bound = store.bind(&mut tape);
            let wv = bound.vars(w)[0];
            let d = tape.add_c(wv, -3.0);
            let loss = tape.sqr(d);
            let grads = tape.backward(loss);
            let g = store.collect_grads(&bound, &grads).unwrap();
            opt.step(&mut store, &g).unwrap();
        }
        assert!((store.values(w)[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn manifold_adam_converges_on_hyperboloid() {
        let r: f64 = 0.5;
        let target = vec![r.cosh(), r.sinh() * 0.6, r.sinh() * 0.8];

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let x = store.matrix("x", 1, 3, &mut rng);
        store.values_mut(x).copy_from_slice(&[1.0, 0.0, 0.0]);

        let mut opt = Adam::new(&store, AdamConfig::with_lr(0.05));
        opt.set_mode(x, ParamMode::LorentzRows);
        for _ in 0..400 {
            let mut tape = Tape::new();
            let bound = store.bind(&mut tape);
            let xv = bound.vars(x).to_vec();
            let yv: Vec<_> = target.iter().map(|&t| tape.constant(t)).collect();
            let md = tape.minkowski_dot(&xv, &yv);
            let loss = tape.neg(md);
            let grads = tape.backward(loss);
            let g = store.collect_grads(&bound, &grads).unwrap();
            opt.step(&mut store, &g).unwrap();
        }
        let xf = store.values(x);
        let inner = lorentz_inner(xf, xf).unwrap();
        assert!((inner + 1.0).abs() < 1e-9, "left the manifold: {inner}");
        let gap = -lorentz_inner(xf, &target).unwrap();
        assert!(gap.acosh() < 1e-2, "did not reach target, d = {}", gap.acosh());
    }
}
