// SPDX-License-Identifier: Apache-2.0

use projcore_demo::{hull_coreset, loss_curve, loss_factor, sensitivities, sensitivity_sample};

fn square_with_center() -> Vec<f64> {
    vec![0.0, 0.0, 4.0, 0.0, 4.0, 4.0, 0.0, 4.0, 2.0, 2.0, 1.0, 3.0]
}

#[test]
fn hull_coreset_lists_indices_then_ellipse() {
    let out = hull_coreset(&square_with_center()).unwrap();
    let count = out[0] as usize;
    assert!((1..=6).contains(&count));
    assert!(out[1..=count].iter().all(|&i| (0.0..6.0).contains(&i) && i.fract() == 0.0));
    assert_eq!(out.len(), 1 + count + 5);
    // Centered at (2, 2) by symmetry of the corners.
    let (cx, cy) = (out[count + 1], out[count + 2]);
    assert!((cx - 2.0).abs() < 1e-3 && (cy - 2.0).abs() < 1e-3, "{cx} {cy}");
}

#[test]
fn odd_length_input_is_rejected() {
    assert!(hull_coreset(&[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn sample_is_seeded_and_weights_sum_near_n() {
    let xy: Vec<f64> = (0..50).flat_map(|i| [(i % 10) as f64, (i / 10) as f64]).collect();
    let a = sensitivity_sample(&xy, 1, 1, 400, 7).unwrap();
    let b = sensitivity_sample(&xy, 1, 1, 400, 7).unwrap();
    assert_eq!(a, b);
    let total: f64 = a.chunks(2).map(|c| c[1]).sum();
    let s = sensitivities(&xy, 1, 1).unwrap();
    assert_eq!(s.len(), 50);
    // Weights are unbiased for the count, so their sum is n in expectation.
    assert!((total - 50.0).abs() < 15.0, "{total}");
}

#[test]
fn loss_curve_is_symmetric_and_zero_at_origin() {
    let ys = loss_curve("cauchy", 1.0, 1.0, 3.0, 6).unwrap();
    assert_eq!(ys.len(), 7);
    assert!(ys[3].abs() < 1e-12);
    assert!((ys[0] - ys[6]).abs() < 1e-12);
    assert!(loss_curve("nope", 1.0, 1.0, 3.0, 6).is_err());
    assert!(loss_factor("huber", 1.0, 1.0, 2).unwrap() > 0.0);
}
