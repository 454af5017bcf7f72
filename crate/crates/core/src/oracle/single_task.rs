//! Plain-scalar single-entity reference recursions.
//!
//! This is the K=1 method written with bare `f64` arithmetic and `Vec`s —
//! no shared linear-algebra code with the multi-entity implementation — so
//! the reduction tests compare two genuinely independent routes.

/// Single-entity conditional model: weight vector η, standard deviation σ,
/// state matrix P (row-major), effective sample size γ.
#[derive(Debug, Clone)]
pub struct SingleTaskModel {
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub state: Vec<Vec<f64>>,
    pub effective_samples: f64,
    pub forgetting: f64,
}

impl SingleTaskModel {
    pub fn new(dim: usize, forgetting: f64) -> Self {
        let mut state = vec![vec![0.0; dim]; dim];
        for (i, row) in state.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        SingleTaskModel {
            weights: vec![0.0; dim],
            sigma: 0.0,
            state,
            effective_samples: 0.0,
            forgetting,
        }
    }

    pub fn predict_mean(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, x)| w * x).sum()
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// One recursive update of (η, σ, P, γ) for a scalar target.
    pub fn update(&mut self, u: &[f64], target: f64) {
        let d = self.weights.len();
        assert_eq!(u.len(), d);
        let lambda = self.forgetting;

        // P u and the gain denominator λ + uᵀ P u.
        let mut pu = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                pu[i] += self.state[i][j] * u[j];
            }
        }
        let quad: f64 = u.iter().zip(&pu).map(|(a, b)| a * b).sum();
        let g = lambda + quad;

        let error = target - self.predict_mean(u);

        self.effective_samples = lambda * self.effective_samples + 1.0;

        for i in 0..d {
            self.weights[i] += error * pu[i] / g;
        }

        let variance = self.sigma * self.sigma;
        let next_variance =
            variance - (variance - lambda * lambda * error * error / (g * g)) / self.effective_samples;
        self.sigma = next_variance.max(0.0).sqrt();

        for i in 0..d {
            for j in 0..d {
                self.state[i][j] = (self.state[i][j] - pu[i] * pu[j] / g) / lambda;
            }
        }
    }
}

/// Scalar multi-horizon fusion forecast. For each step `i`, caller supplies
/// the load model, the observation model, and the observation features of
/// the calendar type at `t+i`. Returns `(mean, variance)` per step,
/// starting from the last observed load with zero variance.
pub fn scalar_horizon(
    load_models: &[&SingleTaskModel],
    obs_models: &[&SingleTaskModel],
    obs_features: &[Vec<f64>],
    last_load: f64,
) -> Vec<(f64, f64)> {
    assert_eq!(load_models.len(), obs_models.len());
    assert_eq!(load_models.len(), obs_features.len());
    let mut mean = last_load;
    let mut variance = 0.0;
    let mut out = Vec::with_capacity(load_models.len());
    for ((load, obs), u_r) in load_models.iter().zip(obs_models).zip(obs_features) {
        let slope = load.weights[1];
        let w1 = load.variance() + slope * slope * variance;
        let w2 = obs.variance();
        let mu_s = load.predict_mean(&[1.0, mean]);
        let mu_r = obs.predict_mean(u_r);
        mean = (w2 * mu_s + w1 * mu_r) / (w1 + w2);
        variance = w1 * w2 / (w1 + w2);
        out.push((mean, variance));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_update_matches_hand_evaluation() {
        let mut m = SingleTaskModel::new(1, 1.0);
        m.update(&[1.0], 5.0);
        assert_relative_eq!(m.weights[0], 2.5, max_relative = 1e-15);
        assert_relative_eq!(m.state[0][0], 0.5, max_relative = 1e-15);
        assert_eq!(m.effective_samples, 1.0);
        assert_relative_eq!(m.variance(), 6.25, max_relative = 1e-12);
    }

    #[test]
    fn scalar_fusion_balances_precisions() {
        let mut load = SingleTaskModel::new(2, 1.0);
        load.weights = vec![0.0, 1.0];
        load.sigma = 1.0;
        let mut obs = SingleTaskModel::new(1, 1.0);
        obs.weights = vec![4.0];
        obs.sigma = 1.0;
        let out = scalar_horizon(&[&load], &[&obs], &[vec![1.0]], 2.0);
        // Equal variances: halfway between μ_s = 2 and μ_r = 4.
        assert_relative_eq!(out[0].0, 3.0, max_relative = 1e-15);
        assert_relative_eq!(out[0].1, 0.5, max_relative = 1e-15);
    }
}
