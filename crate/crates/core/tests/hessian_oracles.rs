//! HVP and power iteration against the dense finite-difference oracle.

use unlearn_core::hessian::{
    dense_hessian, hvp, hvp_of, top_singular_value, top_singular_value_of, HvpConfig,
};
use unlearn_core::nn::{Activation, Batch, LossSpec, Model, ModelSpec};
use unlearn_core::objective::Quadratic;
use unlearn_core::rng;
use unlearn_core::ParamVector;

fn tanh_case(seed: u64) -> (Model, Batch) {
    // 2 -> 4 -> 2 tanh: 26 parameters, comfortably inside the dense guard.
    let spec = ModelSpec::mlp(&[2, 4, 2], Activation::Tanh).unwrap();
    let model = Model::init(spec, seed);
    let mut stream = rng::seeded(seed ^ 0x99);
    let rows = 3;
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..rows {
        inputs.push(rng::standard_normal(&mut stream));
        inputs.push(rng::standard_normal(&mut stream));
        labels.push(i % 2);
    }
    (model, Batch::new(inputs, 2, labels).unwrap())
}

#[test]
fn hvp_matches_dense_product_on_tanh_models() {
    for seed in [3u64, 11, 29] {
        let (model, batch) = tanh_case(seed);
        let spec = LossSpec::ce();
        let dense = dense_hessian(&model, &batch, &spec).unwrap();
        let mut stream = rng::seeded(seed ^ 0x1234);
        let v = ParamVector::new(rng::unit_sphere(&mut stream, model.params().len())).unwrap();
        let fast = hvp(&model, &batch, &spec, &v, &HvpConfig::default()).unwrap();
        let exact = dense.matrix.mul_vec(v.as_slice());
        let num: f64 = fast
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = exact.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(num / den.max(1e-12) <= 1e-3, "seed {seed}: rel {}", num / den);
    }
}

#[test]
fn sigma_matches_dense_spectrum_on_tanh_models() {
    for seed in [5u64, 17, 41] {
        let (model, batch) = tanh_case(seed);
        let spec = LossSpec::ce();
        let dense = dense_hessian(&model, &batch, &spec).unwrap();
        let reference = dense.matrix.max_abs_eigenvalue();
        let est = top_singular_value(&model, &batch, &spec, &HvpConfig::default()).unwrap();
        let rel = (est.sigma - reference).abs() / reference.max(1e-12);
        assert!(rel <= 1e-3, "seed {seed}: sigma {} vs dense {reference}", est.sigma);
    }
}

#[test]
fn dense_hessian_symmetry_residual_is_small() {
    let (model, batch) = tanh_case(7);
    let dense = dense_hessian(&model, &batch, &LossSpec::ce()).unwrap();
    assert!(dense.symmetry_residual <= 1e-4, "{}", dense.symmetry_residual);
}

#[test]
fn hvp_is_additive_on_smooth_models() {
    let (model, batch) = tanh_case(13);
    let spec = LossSpec::ce();
    let cfg = HvpConfig::default();
    let mut stream = rng::seeded(99);
    let n = model.params().len();
    let u = ParamVector::new(rng::unit_sphere(&mut stream, n)).unwrap();
    let v = ParamVector::new(rng::unit_sphere(&mut stream, n)).unwrap();
    let combined = u.add_scaled(1.0, &v).unwrap();
    let lhs = hvp(&model, &batch, &spec, &combined, &cfg).unwrap();
    let hu = hvp(&model, &batch, &spec, &u, &cfg).unwrap();
    let hv = hvp(&model, &batch, &spec, &v, &cfg).unwrap();
    let rhs = hu.add_scaled(1.0, &hv).unwrap();
    let gap = lhs.distance(&rhs).unwrap();
    assert!(gap <= 1e-6 * (u.l2_norm() + v.l2_norm()), "{gap}");
}

#[test]
fn sigma_scales_with_the_loss() {
    // Scaling the objective by κ scales every eigenvalue by κ.
    let kappa = 3.5;
    let base = Quadratic::new(vec![1.0, -2.0, 0.7], vec![0.1, 0.0, -0.4]).unwrap();
    let scaled = Quadratic::new(
        base.curvature().iter().map(|a| a * kappa).collect(),
        base.center().to_vec(),
    )
    .unwrap();
    let w = ParamVector::new(vec![0.3, 0.2, -0.1]).unwrap();
    let cfg = HvpConfig::default();
    let s1 = top_singular_value_of(&base, &w, &cfg).unwrap().sigma;
    let s2 = top_singular_value_of(&scaled, &w, &cfg).unwrap().sigma;
    assert!((s2 - kappa * s1).abs() / (kappa * s1) <= 1e-6, "{s1} {s2}");
}

#[test]
fn random_quadratics_match_dense_eigenvalues() {
    let mut stream = rng::seeded(2024);
    for _ in 0..5 {
        let dim = 20;
        let curvature: Vec<f64> =
            (0..dim).map(|_| 4.0 * rng::standard_normal(&mut stream)).collect();
        let center: Vec<f64> = (0..dim).map(|_| rng::standard_normal(&mut stream)).collect();
        let q = Quadratic::new(curvature.clone(), center).unwrap();
        let w = ParamVector::new(rng::unit_sphere(&mut stream, dim)).unwrap();
        let est = top_singular_value_of(&q, &w, &HvpConfig::default()).unwrap();
        let expected = q.spectral_norm();
        assert!(
            (est.sigma - expected).abs() / expected.max(1e-12) <= 1e-3,
            "sigma {} vs {}",
            est.sigma,
            expected
        );
    }
}

#[test]
fn hvp_exact_on_quadratics() {
    let q = Quadratic::new(vec![2.0, -1.0], vec![0.0, 0.0]).unwrap();
    let w = ParamVector::new(vec![5.0, 5.0]).unwrap();
    let v = ParamVector::new(vec![1.0, 2.0]).unwrap();
    let hv = hvp_of(&q, &w, &v, &HvpConfig::default()).unwrap();
    assert!((hv[0] - 2.0).abs() < 1e-8 && (hv[1] + 2.0).abs() < 1e-8, "{hv:?}");
}

#[test]
fn hvp_matches_dense_on_identity_linear_model() {
    // Linear (identity-activation) model under CE: the softmax Hessian is
    // exercised without any activation curvature.
    let spec = ModelSpec::mlp(&[3, 3], Activation::Identity).unwrap();
    let model = Model::init(spec, 21);
    let batch = Batch::new(vec![0.4, -0.9, 1.2, 0.1, 0.8, -0.5], 3, vec![2, 0]).unwrap();
    let loss = LossSpec::ce();
    let dense = dense_hessian(&model, &batch, &loss).unwrap();
    let mut stream = rng::seeded(404);
    let v = ParamVector::new(rng::unit_sphere(&mut stream, model.params().len())).unwrap();
    let fast = hvp(&model, &batch, &loss, &v, &HvpConfig::default()).unwrap();
    let exact = dense.matrix.mul_vec(v.as_slice());
    let num: f64 = fast.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = exact.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(num / den.max(1e-12) <= 1e-3, "rel {}", num / den);
}

#[test]
fn directional_curvature_between_eigenvalues() {
    use unlearn_core::hessian::directional_curvature;
    let spec = ModelSpec::mlp(&[2, 4, 2], Activation::Tanh).unwrap();
    let model = Model::init(spec, 31);
    let batch = Batch::new(vec![0.7, -0.4, -1.1, 0.2], 2, vec![0, 1]).unwrap();
    let loss = LossSpec::ce();
    let cfg = HvpConfig::default();
    let dense = dense_hessian(&model, &batch, &loss).unwrap();
    let mut eigs = dense.matrix.eigenvalues();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut stream = rng::seeded(77);
    let d = ParamVector::new(rng::unit_sphere(&mut stream, model.params().len())).unwrap();
    let kappa = directional_curvature(&model, &batch, &loss, &d, &cfg).unwrap();
    let (lo, hi) = (eigs[0], *eigs.last().unwrap());
    assert!(kappa >= lo - 1e-6 && kappa <= hi + 1e-6, "{kappa} outside [{lo}, {hi}]");
    // Scaling the direction leaves the quotient unchanged.
    let kappa2 = directional_curvature(&model, &batch, &loss, &d.scaled(3.0).unwrap(), &cfg).unwrap();
    assert!((kappa - kappa2).abs() < 1e-9);
}
