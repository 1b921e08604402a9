use mnolab_demo::plots::{axis, convergence, cube_curve, lift_curve, pou_bumps};

#[test]
fn axis_includes_endpoints() {
    assert_eq!(axis(5), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    assert_eq!(axis(1), vec![0.0]);
}

#[test]
fn bumps_sum_to_one() {
    let n = 101;
    let b = pou_bumps(0.25, n).unwrap();
    assert_eq!(b.len() % n, 0);
    for j in 0..n {
        let s: f64 = b.iter().skip(j).step_by(n).sum();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }
    assert!(b.iter().all(|&w| w >= 0.0));
}

#[test]
fn cube_samples_respect_the_class_bound() {
    let v = cube_curve(2.5, &[1.0, 1.0, 1.0, 1.0], 201).unwrap();
    assert!(v.iter().all(|x| x.abs() <= 1.0 + 1e-12));
    assert!(v.iter().any(|x| x.abs() > 0.1));
    assert!(cube_curve(2.5, &[2.0], 10).is_err());
}

#[test]
fn finer_lift_is_closer() {
    let y = [0.3, 0.9, 0.5, 0.1];
    let err = |delta: f64| {
        let v = lift_curve(delta, 2.5, &y, 201).unwrap();
        let (f, l) = v.split_at(201);
        f.iter().zip(l).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(0.5), err(0.05));
    assert!(fine < coarse, "{fine} {coarse}");
    assert!(fine <= 0.05 * 1.0 + 1e-12);
}

#[test]
fn convergence_error_decreases() {
    let v = convergence(3, 30, 7).unwrap();
    assert_eq!(v.len(), 6);
    assert!(v[0] < v[2] && v[2] < v[4]);
    assert!(v[5] < v[1], "{v:?}");
    assert!(convergence(0, 30, 7).is_err());
}
