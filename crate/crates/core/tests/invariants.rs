use pixlayout::grad::backward_per_pixel;
use pixlayout::{
    backward, deform_inverse, simulate_cached, AnalyticField, LayoutKind, LayoutParams, Point, Rgb,
    SamplingConfig, SensorGrid,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = LayoutKind> {
    prop_oneof![Just(LayoutKind::Curvilinear), Just(LayoutKind::Rectangular)]
}

fn theta() -> impl Strategy<Value = [f64; 2]> {
    [-0.99f64..0.99, -0.99f64..0.99]
}

fn point() -> impl Strategy<Value = Point> {
    (-1.0f64..=1.0, -1.0f64..=1.0).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_undoes_deform(kind in kind(), theta in theta(), p in point()) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        let q = params.apply(p);
        prop_assert!(q.x.abs() <= 1.0 && q.y.abs() <= 1.0);
        let back = deform_inverse(q, &params).unwrap();
        prop_assert!((back - p).norm() < 1e-9, "{:?} -> {:?} -> {:?}", p, q, back);
    }

    #[test]
    fn sensor_boundary_maps_to_itself(kind in kind(), theta in theta(), s in -1.0f64..=1.0, side in 0usize..4) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        let p = match side {
            0 => Point::new(-1.0, s),
            1 => Point::new(1.0, s),
            2 => Point::new(s, -1.0),
            _ => Point::new(s, 1.0),
        };
        let q = params.apply(p);
        let (fixed_p, fixed_q, along) = if side < 2 { (p.x, q.x, q.y) } else { (p.y, q.y, q.x) };
        prop_assert!((fixed_q - fixed_p).abs() < 1e-15);
        prop_assert!(along.abs() <= 1.0);
    }

    #[test]
    fn jacobian_preserves_orientation(kind in kind(), theta in theta(), p in point()) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        prop_assert!(params.jacobian_det(p) > 0.0);
    }

    #[test]
    fn raw_parameters_round_trip(kind in kind(), theta in theta()) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        let again = LayoutParams::from_raw(kind, params.theta_raw()).unwrap();
        prop_assert!((again.theta()[0] - theta[0]).abs() < 1e-12);
        prop_assert!((again.theta()[1] - theta[1]).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn volumes_partition_the_sensor(kind in kind(), theta in theta(), r1 in 1usize..7, r2 in 1usize..7) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        let grid = SensorGrid::new(r1, r2).unwrap();
        let field = AnalyticField::constant(0.3, 0.6, 0.9);
        let (image, _) = simulate_cached(&field, grid, params, SamplingConfig::quadrature()).unwrap();
        prop_assert!(image.volumes.iter().all(|v| *v > 0.0));
        prop_assert!((image.volumes_sum() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_fields_are_invariant(kind in kind(), theta in theta(), seed in any::<u64>(), r in 1usize..6) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        let grid = SensorGrid::new(r, r + 1).unwrap();
        let field = AnalyticField::constant(0.25, 0.5, 0.75);
        let cfg = SamplingConfig::default().with_seed(seed);
        let (image, cache) = simulate_cached(&field, grid, params, cfg).unwrap();
        prop_assert!(image.pixels.iter().all(|p| *p == Rgb::new(0.25, 0.5, 0.75)));
        let up = vec![Rgb::new(1.0, 2.0, 3.0); grid.pixel_count()];
        let g = backward(&image, &up, &field, &cache).unwrap();
        prop_assert!(g.dloss_dtheta.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn shared_edges_match_per_pixel_integration(
        kind in kind(),
        theta in [-0.8f64..0.8, -0.8f64..0.8],
        r in 2usize..6,
        cx in -0.5f64..0.5,
        cy in -0.5f64..0.5,
    ) {
        let params = LayoutParams::from_theta(kind, theta).unwrap();
        let grid = SensorGrid::new(r, r).unwrap();
        let field = AnalyticField::blob([cx, cy], 0.4);
        let (image, cache) = simulate_cached(&field, grid, params, SamplingConfig::quadrature()).unwrap();
        let up: Vec<Rgb> = (0..grid.pixel_count())
            .map(|i| Rgb::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos(), 0.5))
            .collect();
        let shared = backward(&image, &up, &field, &cache).unwrap();
        let separate = backward_per_pixel(&image, &up, &field, &cache).unwrap();
        for j in 0..2 {
            let scale = 1.0 + separate.dloss_dtheta[j].abs();
            prop_assert!((shared.dloss_dtheta[j] - separate.dloss_dtheta[j]).abs() < 1e-10 * scale);
        }
    }
}

#[test]
fn deformed_grid_lines_stay_ordered() {
    for kind in [LayoutKind::Curvilinear, LayoutKind::Rectangular] {
        for theta in [[0.9, -0.9], [-0.6, 0.3], [0.56, 0.38]] {
            let params = LayoutParams::from_theta(kind, theta).unwrap();
            for y in [-0.9, -0.3, 0.0, 0.4] {
                let xs: Vec<f64> = (0..=40).map(|i| params.apply(Point::new(-1.0 + i as f64 / 20.0, y)).x).collect();
                assert!(xs.windows(2).all(|w| w[0] < w[1]), "{kind} {theta:?} y={y}");
            }
        }
    }
}
