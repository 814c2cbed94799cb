//! Helpers shared by the integration test targets.

use progress_reward::nn::{cross_entropy_loss, ProgressModel, ProgressShape};
use progress_reward::rng::seeded;
use progress_reward::{Frame, TwoHotCodec};
use rand::Rng;

fn random_frame(rng: &mut impl Rng) -> Frame {
    Frame::from_values(3, 3, 3, (0..27).map(|_| rng.gen_range(-1.0..1.0f32)).collect()).unwrap()
}

/// Max relative error between analytic and central-difference gradients.
/// Relative error is `|a - n| / max(|a| + |n|, 1e-6)`; the floor keeps
/// near-zero gradients from dividing roundoff by roundoff.
pub fn max_gradient_error(seed: u64) -> (f64, usize) {
    let mut rng = seeded(seed);
    let shape = ProgressShape { input_width: 27, hidden: vec![16], embedding: 8, outputs: 5 };
    let mut model = ProgressModel::new(&shape, &mut rng).unwrap();
    // Non-zero head so every encoder weight receives gradient.
    for w in model.head.weights.iter_mut() {
        *w = rng.gen_range(-0.5..0.5);
    }
    let (a, b) = (random_frame(&mut rng), random_frame(&mut rng));
    let target = TwoHotCodec::new(5).unwrap().encode(0.3).unwrap();
    let (_, grad) = model.backward(&a, &b, &target).unwrap();
    let analytic: Vec<f64> = grad.tensors().iter().flat_map(|t| t.iter().copied()).collect();

    let h = 1e-4;
    let mut worst = 0.0f64;
    let mut index = 0;
    let tensor_count = model.tensors().len();
    for t in 0..tensor_count {
        let len = model.tensors()[t].len();
        for i in 0..len {
            let orig = model.tensors()[t][i];
            model.tensors_mut()[t][i] = orig + h;
            let plus = cross_entropy_loss(&model.predict_logits(&a, &b).unwrap(), &target).unwrap();
            model.tensors_mut()[t][i] = orig - h;
            let minus = cross_entropy_loss(&model.predict_logits(&a, &b).unwrap(), &target).unwrap();
            model.tensors_mut()[t][i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[index];
            worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6));
            index += 1;
        }
    }
    (worst, index)
}
