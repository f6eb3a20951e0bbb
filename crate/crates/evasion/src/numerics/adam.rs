use super::{DenseNet, NumericsError};

/// Adam optimizer state for one parameter vector.
///
/// The update direction is descent: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// Apply one update to a flat parameter slice.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NumericsError> {
        assert_eq!(params.len(), self.m.len(), "adam: parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "adam: gradient count mismatch");
        self.check_finite(grads)?;
        let (c1, c2) = self.advance();
        for i in 0..params.len() {
            params[i] -= self.update_one(i, grads[i], c1, c2);
        }
        Ok(())
    }

    /// Apply one update directly to a network's parameters, avoiding the
    /// flatten/unflatten round trip.
    pub fn step_net(&mut self, net: &mut DenseNet, grads: &[f64]) -> Result<(), NumericsError> {
        assert_eq!(net.param_count(), self.m.len(), "adam: parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "adam: gradient count mismatch");
        self.check_finite(grads)?;
        let (c1, c2) = self.advance();
        // Borrow-splitting: capture the moment vectors locally so the closure
        // does not re-borrow self.
        let m = &mut self.m;
        let v = &mut self.v;
        let (beta1, beta2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        net.for_each_param_mut(|i, p| {
            let g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
        Ok(())
    }

    fn check_finite(&self, grads: &[f64]) -> Result<(), NumericsError> {
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NumericsError::NonFiniteGradient(i));
        }
        Ok(())
    }

    /// Advance the step counter and return the bias-correction denominators.
    fn advance(&mut self) -> (f64, f64) {
        self.step += 1;
        let t = self.step as i32;
        (1.0 - self.beta1.powi(t), 1.0 - self.beta2.powi(t))
    }

    #[inline]
    fn update_one(&mut self, i: usize, g: f64, c1: f64, c2: f64) -> f64 {
        self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
        self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
        let m_hat = self.m[i] / c1;
        let v_hat = self.v[i] / c2;
        self.lr * m_hat / (v_hat.sqrt() + self.eps)
    }
}
