//! Checks the input-space attack against finite-difference input gradients
//! and its statistical effect on the loss of a fixed model.

use liprnn_core::autodiff::{loss_and_dy, Target};
use liprnn_core::cell::{forward, CellSpec, LipschitzCell, Scheme, Sequence, Variant};
use liprnn_core::rng::{stream, stream_rng};
use liprnn_core::robustness::pgd_attack;
use rand::Rng;

fn small_classifier(seed: u64) -> LipschitzCell {
    let spec = CellSpec {
        n: 6,
        p: 2,
        d_out: 3,
        beta: 0.75,
        gamma_a: 0.1,
        gamma_w: 0.05,
        alpha: 1.0,
        dt: 0.1,
        scheme: Scheme::Rk2,
        variant: Variant::Lipschitz,
        init_sigma: 0.6,
    };
    let mut rng = stream_rng(seed, stream::INIT);
    LipschitzCell::random(&spec, &mut rng).unwrap()
}

fn loss_of(cell: &LipschitzCell, seq: &Sequence, label: usize) -> f64 {
    let (_, y) = forward(cell, seq, None).unwrap();
    loss_and_dy(&y, &Target::Class(label)).unwrap().0
}

#[test]
fn zero_radius_returns_the_input() {
    let cell = small_classifier(1);
    let x0 = Sequence::new(2, vec![0.5; 16]);
    let adv = pgd_attack(&cell, &x0, 0, 0.0, 0.01, 7).unwrap();
    assert_eq!(adv, x0);
}

#[test]
fn single_step_from_interior_follows_the_gradient_sign() {
    let cell = small_classifier(2);
    let x0 = Sequence::new(2, vec![0.5; 12]);
    let label = 1;
    let step = 0.01;
    let adv = pgd_attack(&cell, &x0, label, 0.1, step, 1).unwrap();

    let fd = 1e-6;
    for i in 0..x0.data.len() {
        let mut plus = x0.clone();
        plus.data[i] += fd;
        let mut minus = x0.clone();
        minus.data[i] -= fd;
        let g = (loss_of(&cell, &plus, label) - loss_of(&cell, &minus, label)) / (2.0 * fd);
        if g.abs() < 1e-8 {
            continue; // sign too close to call for a finite difference
        }
        let want = 0.5 + step * g.signum();
        assert!(
            (adv.data[i] - want).abs() < 1e-12,
            "coordinate {i}: moved to {} but fd gradient {g} wants {want}",
            adv.data[i]
        );
    }
}

#[test]
fn mean_loss_increases_over_samples() {
    let cell = small_classifier(3);
    let mut rng = stream_rng(4, stream::TASK_GEN);
    let mut clean_sum = 0.0;
    let mut adv_sum = 0.0;
    for _ in 0..100 {
        let x0 = Sequence::new(2, (0..16).map(|_| rng.gen_range(0.0..1.0)).collect());
        let label = rng.gen_range(0..3);
        let adv = pgd_attack(&cell, &x0, label, 0.1, 0.01, 7).unwrap();
        clean_sum += loss_of(&cell, &x0, label);
        adv_sum += loss_of(&cell, &adv, label);
    }
    assert!(
        adv_sum > clean_sum,
        "attack failed to raise mean loss: {adv_sum} vs {clean_sum}"
    );
}

#[test]
fn iterates_respect_ball_and_box() {
    let cell = small_classifier(5);
    let mut rng = stream_rng(6, stream::TASK_GEN);
    // start at the box edge so the clamps actually bite
    let x0 = Sequence::new(2, (0..20).map(|_| if rng.gen::<bool>() { 0.995 } else { 0.005 }).collect());
    let eps = 0.03;
    let adv = pgd_attack(&cell, &x0, 0, eps, 0.02, 10).unwrap();
    for (a, o) in adv.data.iter().zip(&x0.data) {
        assert!((a - o).abs() <= eps + 1e-12);
        assert!((0.0..=1.0).contains(a));
    }
}
