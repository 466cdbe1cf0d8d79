//! Curvature probes evaluated on a real model loss rather than an injected
//! quadratic: symmetry of the differenced Hessian and seed determinism.

use liprnn_core::autodiff::Target;
use liprnn_core::cell::{CellSpec, LipschitzCell, Scheme, Sequence, Variant};
use liprnn_core::rng::{stream, stream_rng};
use liprnn_core::robustness::{hessian_metrics, hvp};
use rand::Rng;

fn setup() -> (LipschitzCell, Vec<Sequence>, Vec<Target>) {
    let spec = CellSpec {
        n: 4,
        p: 2,
        d_out: 3,
        beta: 0.75,
        gamma_a: 0.1,
        gamma_w: 0.05,
        alpha: 1.0,
        dt: 0.1,
        scheme: Scheme::Euler,
        variant: Variant::Lipschitz,
        init_sigma: 0.5,
    };
    let mut rng = stream_rng(21, stream::INIT);
    let cell = LipschitzCell::random(&spec, &mut rng).unwrap();
    let seqs: Vec<Sequence> = (0..3)
        .map(|_| Sequence::new(2, (0..12).map(|_| rng.gen_range(0.0..1.0)).collect()))
        .collect();
    let targets: Vec<Target> = (0..3).map(|i| Target::Class(i % 3)).collect();
    (cell, seqs, targets)
}

#[test]
fn hvp_is_symmetric_as_a_bilinear_form() {
    let (cell, seqs, targets) = setup();
    let batch: Vec<(&Sequence, &Target)> = seqs.iter().zip(&targets).collect();
    let dim = cell.param_count();
    let mut rng = stream_rng(22, stream::TASK_GEN);
    for _ in 0..3 {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hu = hvp(&cell, &batch, &u).unwrap();
        let hv = hvp(&cell, &batch, &v).unwrap();
        let uhv: f64 = u.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let vhu: f64 = v.iter().zip(&hu).map(|(a, b)| a * b).sum();
        let scale = uhv.abs().max(vhu.abs()).max(1e-10);
        assert!(
            (uhv - vhu).abs() / scale < 1e-4,
            "asymmetry: {uhv} vs {vhu}"
        );
    }
}

#[test]
fn metrics_on_model_loss_are_seed_deterministic_and_finite() {
    let (cell, seqs, targets) = setup();
    let batch: Vec<(&Sequence, &Target)> = seqs.iter().zip(&targets).collect();
    let a = hessian_metrics(&cell, &batch, 10, 40, 9).unwrap();
    let b = hessian_metrics(&cell, &batch, 10, 40, 9).unwrap();
    assert_eq!(a.lambda_max, b.lambda_max);
    assert_eq!(a.lambda_min, b.lambda_min);
    assert_eq!(a.trace_estimate, b.trace_estimate);
    assert!(a.lambda_max.is_finite());
    assert!(a.lambda_min <= a.lambda_max + 1e-9);
    assert!(a.trace_stderr >= 0.0);
}
