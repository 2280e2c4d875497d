// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! A desk-scale rectified-flow kernel: linear interpolation paths between
//! data and noise, the constant velocity target along each path, the
//! mean-squared training loss, and an explicit Euler sampler that
//! integrates a pluggable velocity field from t = 1 back to t = 0. No
//! network, no optimizer — just the math, in f64 so exactness properties
//! hold to tight tolerances.

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {a:?} vs {b:?}")]
    ShapeMismatch { a: Vec<usize>, b: Vec<usize> },
    #[error("t = {0} outside [0, 1]")]
    TOutOfRange(f64),
    #[error("non-finite state at integration step {step}")]
    NonFiniteState { step: usize },
    #[error("{0} values for shape {1:?}")]
    BadLength(usize, Vec<usize>),
    #[error("non-finite input value")]
    NonFiniteInput,
}

/// A dense tensor: a shape and `product(shape)` finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBuf {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl TensorBuf {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<TensorBuf, Error> {
        let need: usize = shape.iter().product();
        if values.len() != need {
            return Err(Error::BadLength(values.len(), shape));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(TensorBuf { shape, values })
    }

    pub fn scalar(v: f64) -> TensorBuf {
        TensorBuf::new(vec![1], vec![v]).expect("scalar is finite")
    }

    pub fn zeros_like(other: &TensorBuf) -> TensorBuf {
        TensorBuf { shape: other.shape.clone(), values: vec![0.0; other.values.len()] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &TensorBuf) -> Result<f64, Error> {
        check_shapes(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Opaque conditioning handle passed through to velocity functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CondToken(pub u64);

/// A velocity field: given the current state, the time in [0,1], and a
/// conditioning token, produce dx/dt with the same shape as the state.
pub trait VelocityFn {
    fn velocity(&self, x: &TensorBuf, t: f64, cond: CondToken) -> TensorBuf;
}

impl<F> VelocityFn for F
where
    F: Fn(&TensorBuf, f64, CondToken) -> TensorBuf,
{
    fn velocity(&self, x: &TensorBuf, t: f64, cond: CondToken) -> TensorBuf {
        self(x, t, cond)
    }
}

fn check_shapes(a: &TensorBuf, b: &TensorBuf) -> Result<(), Error> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch { a: a.shape.clone(), b: b.shape.clone() });
    }
    Ok(())
}

/// The straight path between data and noise: elementwise
/// `(1 − t)·x0 + t·eps`.
pub fn interpolate(x0: &TensorBuf, eps: &TensorBuf, t: f64) -> Result<TensorBuf, Error> {
    check_shapes(x0, eps)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TOutOfRange(t));
    }
    let values = x0
        .values
        .iter()
        .zip(&eps.values)
        .map(|(a, e)| (1.0 - t) * a + t * e)
        .collect();
    Ok(TensorBuf { shape: x0.shape.clone(), values })
}

/// The path's constant velocity: elementwise `eps − x0`.
pub fn velocity_target(x0: &TensorBuf, eps: &TensorBuf) -> Result<TensorBuf, Error> {
    check_shapes(x0, eps)?;
    let values = x0.values.iter().zip(&eps.values).map(|(a, e)| e - a).collect();
    Ok(TensorBuf { shape: x0.shape.clone(), values })
}

/// Mean squared elementwise difference between a prediction and its
/// target.
pub fn fm_loss(pred: &TensorBuf, target: &TensorBuf) -> Result<f64, Error> {
    check_shapes(pred, target)?;
    let n = pred.values.len() as f64;
    Ok(pred
        .values
        .iter()
        .zip(&target.values)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Explicit Euler integration of `dx/dt = vfn(x, t, cond)` from t = 1
/// down to t = 0 in `steps` uniform steps:
/// `x ← x − (1/steps)·vfn(x, 1 − k/steps, cond)` for k = 0..steps−1.
pub fn euler_sample(vfn: &dyn VelocityFn, x_t: &TensorBuf, steps: usize, cond: CondToken) -> Result<TensorBuf, Error> {
    assert!(steps >= 1, "need at least one integration step");
    let dt = 1.0 / steps as f64;
    let mut x = x_t.clone();
    for k in 0..steps {
        let t = 1.0 - k as f64 * dt;
        let v = vfn.velocity(&x, t, cond);
        check_shapes(&x, &v)?;
        for (xi, vi) in x.values.iter_mut().zip(&v.values) {
            *xi -= dt * vi;
        }
        if x.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: k });
        }
    }
    Ok(x)
}

/// One training step's data path, given the sampled noise and time: the
/// noisy state, the velocity target, and the loss a zero predictor would
/// incur. Pure and deterministic.
pub fn train_step_oracle(x0: &TensorBuf, eps: &TensorBuf, t: f64) -> Result<(TensorBuf, TensorBuf, f64), Error> {
    let x_t = interpolate(x0, eps, t)?;
    let target = velocity_target(x0, eps)?;
    let zero = TensorBuf::zeros_like(&target);
    let loss = fm_loss(&zero, &target)?;
    Ok((x_t, target, loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_pair(seed: u64, n: usize) -> (TensorBuf, TensorBuf) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mk = |rng: &mut ChaCha8Rng| {
            TensorBuf::new(vec![n], (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap()
        };
        (mk(&mut rng), mk(&mut rng))
    }

    #[test]
    fn interpolation_boundaries_and_midpoint() {
        let (x0, eps) = rand_pair(1, 16);
        assert_eq!(interpolate(&x0, &eps, 0.0).unwrap(), x0);
        assert_eq!(interpolate(&x0, &eps, 1.0).unwrap(), eps);

        let mid = interpolate(&TensorBuf::scalar(2.0), &TensorBuf::scalar(-1.0), 0.5).unwrap();
        assert_eq!(mid.values(), &[0.5]);

        assert_eq!(interpolate(&x0, &eps, 1.5).unwrap_err(), Error::TOutOfRange(1.5));
        let wide = TensorBuf::new(vec![2, 8], vec![0.0; 16]).unwrap();
        assert!(matches!(interpolate(&x0, &wide, 0.5), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn velocity_is_path_derivative() {
        let (x0, eps) = rand_pair(2, 32);
        assert_eq!(velocity_target(&x0, &x0).unwrap().values(), vec![0.0; 32].as_slice());
        assert_eq!(
            velocity_target(&TensorBuf::scalar(2.0), &TensorBuf::scalar(-1.0)).unwrap().values(),
            &[-3.0]
        );

        // Finite-difference oracle at t = 0.3.
        let target = velocity_target(&x0, &eps).unwrap();
        let h = 1e-6;
        let hi = interpolate(&x0, &eps, 0.3 + h).unwrap();
        let lo = interpolate(&x0, &eps, 0.3 - h).unwrap();
        for ((a, b), v) in hi.values().iter().zip(lo.values()).zip(target.values()) {
            assert!(((a - b) / (2.0 * h) - v).abs() < 1e-4);
        }
    }

    #[test]
    fn path_consistency_identity() {
        let (x0, eps) = rand_pair(3, 64);
        let target = velocity_target(&x0, &eps).unwrap();
        for (t1, t2) in [(0.0, 1.0), (0.2, 0.7), (0.35, 0.36), (0.5, 0.5)] {
            let a = interpolate(&x0, &eps, t1).unwrap();
            let b = interpolate(&x0, &eps, t2).unwrap();
            for ((xb, xa), v) in b.values().iter().zip(a.values()).zip(target.values()) {
                assert!((xb - xa - (t2 - t1) * v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn loss_arithmetic() {
        let (x0, eps) = rand_pair(4, 8);
        assert_eq!(fm_loss(&x0, &x0).unwrap(), 0.0);
        let shifted = TensorBuf::new(vec![8], x0.values().iter().map(|v| v + 2.0).collect()).unwrap();
        assert!((fm_loss(&shifted, &x0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(fm_loss(&x0, &eps).unwrap(), fm_loss(&eps, &x0).unwrap());

        // Zero iff equal.
        let target = velocity_target(&x0, &eps).unwrap();
        assert_eq!(fm_loss(&target, &target).unwrap(), 0.0);
        let mut nudged = target.values().to_vec();
        nudged[3] += 1e-6;
        let nudged = TensorBuf::new(vec![8], nudged).unwrap();
        assert!(fm_loss(&nudged, &target).unwrap() > 0.0);
    }

    #[test]
    fn euler_zero_field_is_identity() {
        let (x, _) = rand_pair(5, 16);
        let zero = |x: &TensorBuf, _t: f64, _c: CondToken| TensorBuf::zeros_like(x);
        let out = euler_sample(&zero, &x, 13, CondToken(0)).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn euler_recovers_endpoint_exactly_on_constant_fields() {
        let (x0, eps) = rand_pair(6, 24);
        let target = velocity_target(&x0, &eps).unwrap();
        let constant = move |x: &TensorBuf, _t: f64, _c: CondToken| {
            TensorBuf::new(x.shape().to_vec(), target.values().to_vec()).unwrap()
        };
        let x1 = interpolate(&x0, &eps, 1.0).unwrap();
        for steps in [1usize, 7, 50] {
            let out = euler_sample(&constant, &x1, steps, CondToken(9)).unwrap();
            assert!(
                out.max_abs_diff(&x0).unwrap() <= 1e-12,
                "steps {steps}: {:e}",
                out.max_abs_diff(&x0).unwrap()
            );
        }
    }

    #[test]
    fn euler_error_halves_on_linear_field() {
        // dx/dt = -x integrated from t=1 to t=0: x(0) = x(1)·e.
        let field = |x: &TensorBuf, _t: f64, _c: CondToken| {
            TensorBuf::new(x.shape().to_vec(), x.values().iter().map(|v| -v).collect()).unwrap()
        };
        let x1 = TensorBuf::scalar(1.0);
        let exact = std::f64::consts::E;
        let run = |steps: usize| {
            let out = euler_sample(&field, &x1, steps, CondToken(0)).unwrap();
            (out.values()[0] - exact).abs()
        };
        let (e10, e20) = (run(10), run(20));
        let ratio = e10 / e20;
        assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
    }

    #[test]
    fn euler_flags_divergence() {
        let explode = |x: &TensorBuf, _t: f64, _c: CondToken| {
            TensorBuf { shape: x.shape().to_vec(), values: x.values().iter().map(|v| v * 1e155).collect() }
        };
        let err = euler_sample(&explode, &TensorBuf::scalar(1.0), 4, CondToken(0)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }

    #[test]
    fn train_step_pieces() {
        let (x_t, target, loss) = train_step_oracle(&TensorBuf::scalar(1.0), &TensorBuf::scalar(3.0), 0.25).unwrap();
        assert_eq!(x_t.values(), &[1.5]);
        assert_eq!(target.values(), &[2.0]);
        assert_eq!(loss, 4.0);

        let (x0, _) = rand_pair(7, 8);
        let (xt, target, loss) = train_step_oracle(&x0, &x0, 0.6).unwrap();
        assert_eq!(xt, x0);
        assert_eq!(target.values(), vec![0.0; 8].as_slice());
        assert_eq!(loss, 0.0);

        let (x0, eps) = rand_pair(8, 8);
        let (xt, _, _) = train_step_oracle(&x0, &eps, 0.4).unwrap();
        assert_eq!(xt, interpolate(&x0, &eps, 0.4).unwrap());
    }

    #[test]
    fn tensor_validation() {
        assert!(matches!(TensorBuf::new(vec![2, 3], vec![0.0; 5]), Err(Error::BadLength(5, _))));
        assert_eq!(TensorBuf::new(vec![2], vec![1.0, f64::INFINITY]).unwrap_err(), Error::NonFiniteInput);
        let t = TensorBuf::new(vec![2, 3], vec![0.5; 6]).unwrap();
        assert_eq!(t.shape(), &[2, 3]);
    }
}
