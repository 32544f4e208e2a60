//! Bias-corrected Adam with coupled weight decay: the decay term
//! `lambda * w` is added to the gradient before the moment updates, which
//! matches the stock optimizer behavior the training defaults assume.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// Per-parameter first/second moments plus the shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    pub hyper: AdamHyper,
    first_moment: Vec<Tensor<F>>,
    second_moment: Vec<Tensor<F>>,
    step_count: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(params: &ModelParams<F>, hyper: AdamHyper) -> Self {
        let shapes: Vec<Tensor<F>> = params
            .flat_params()
            .iter()
            .map(|t| Tensor::zeros_like(t))
            .collect();
        Self {
            hyper,
            first_moment: shapes.clone(),
            second_moment: shapes,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update over all parameters. `grads` must align with
/// `params.flat_params()`.
pub fn adam_step<F: Scalar>(
    params: &mut ModelParams<F>,
    grads: &[Tensor<F>],
    state: &mut AdamState<F>,
) -> Result<()> {
    let tensors = params.flat_params_mut()?;
    if tensors.len() != grads.len() || tensors.len() != state.first_moment.len() {
        return Err(CoreError::InvalidConfig(format!(
            "gradient list ({}) does not align with parameters ({})",
            grads.len(),
            tensors.len()
        )));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let h = state.hyper;
    let beta1 = F::of(h.beta1);
    let beta2 = F::of(h.beta2);
    let one = F::one();
    let lr = F::of(h.learning_rate);
    let eps = F::of(h.epsilon);
    let decay = F::of(h.weight_decay);
    let corr1 = one - beta1.powi(t);
    let corr2 = one - beta2.powi(t);

    for ((param, grad), (m, v)) in tensors
        .into_iter()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(&mut state.second_moment))
    {
        param.check_same_shape(grad)?;
        let p = param.data_mut();
        let g = grad.data();
        let mv = m.data_mut();
        let vv = v.data_mut();
        for i in 0..p.len() {
            let gi = g[i] + decay * p[i];
            mv[i] = beta1 * mv[i] + (one - beta1) * gi;
            vv[i] = beta2 * vv[i] + (one - beta2) * gi * gi;
            let m_hat = mv[i] / corr1;
            let v_hat = vv[i] / corr2;
            p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Layer, LayerSpec, ModelParams};

    fn scalar_model(w: f64) -> ModelParams<f64> {
        ModelParams::new(
            vec![Layer::Dense {
                weight: Tensor::new(vec![1, 1], vec![w]),
                bias: Tensor::new(vec![1], vec![0.0]),
            }],
            true,
        )
    }

    #[test]
    fn zero_gradient_zero_decay_leaves_params_unchanged() {
        let mut model = scalar_model(1.5);
        let mut state = AdamState::new(
            &model,
            AdamHyper {
                weight_decay: 0.0,
                ..AdamHyper::default()
            },
        );
        let grads = vec![Tensor::zeros(vec![1, 1]), Tensor::zeros(vec![1])];
        adam_step(&mut model, &grads, &mut state).unwrap();
        assert_eq!(model.flat_params()[0].data(), &[1.5]);
        assert_eq!(model.flat_params()[1].data(), &[0.0]);
    }

    #[test]
    fn single_step_matches_hand_formula() {
        // w=1, g=1, defaults: g' = 1 + 1e-4, m_hat = g', v_hat = g'^2,
        // w' = 1 - lr * g' / (|g'| + eps)
        let mut model = scalar_model(1.0);
        let hyper = AdamHyper::default();
        let mut state = AdamState::new(&model, hyper);
        let grads = vec![
            Tensor::new(vec![1, 1], vec![1.0]),
            Tensor::zeros(vec![1]),
        ];
        adam_step(&mut model, &grads, &mut state).unwrap();

        let gp: f64 = 1.0 + hyper.weight_decay * 1.0;
        let m = (1.0 - hyper.beta1) * gp;
        let v = (1.0 - hyper.beta2) * gp * gp;
        let m_hat = m / (1.0 - hyper.beta1);
        let v_hat = v / (1.0 - hyper.beta2);
        let expected = 1.0 - hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
        let got = model.flat_params()[0].data()[0];
        assert!((got - expected).abs() < 1e-15, "got {got}, want {expected}");
    }

    #[test]
    fn step_count_increases_by_one_per_call() {
        let mut model = scalar_model(1.0);
        let mut state = AdamState::new(&model, AdamHyper::default());
        let grads = vec![
            Tensor::new(vec![1, 1], vec![0.5]),
            Tensor::new(vec![1], vec![0.1]),
        ];
        adam_step(&mut model, &grads, &mut state).unwrap();
        assert_eq!(state.step_count(), 1);
        adam_step(&mut model, &grads, &mut state).unwrap();
        assert_eq!(state.step_count(), 2);
    }

    #[test]
    fn frozen_model_is_rejected() {
        let mut model = ModelParams::init(&[LayerSpec::dense(2, 2)], false, 7);
        let mut state = AdamState::new(&model, AdamHyper::default());
        let grads = vec![Tensor::zeros(vec![2, 2]), Tensor::zeros(vec![2])];
        let err = adam_step(&mut model, &grads, &mut state).unwrap_err();
        assert!(matches!(err, CoreError::NotTrainable));
    }
}
