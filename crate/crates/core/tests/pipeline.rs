use std::sync::Arc;

use pixlayout::layout::{layout_json, layout_svg, LayoutRecord};
use pixlayout::radiance::write_ppm;
use pixlayout::train::write_idx;
use pixlayout::{
    backwarp, load_image, load_mnist, simulate, synthetic_dataset, train_joint, BoundaryPlan,
    Checkpoint, LabelImage, LayoutKind, LayoutParams, Rgb, SamplePlan, SamplingConfig, SensorGrid,
    TrainConfig,
};

#[test]
fn image_file_to_sensor_and_back() {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (16usize, 16usize);
    let rgb: Vec<f64> = (0..w * h)
        .flat_map(|i| {
            let (x, y) = ((i % w) as f64 / w as f64, (i / w) as f64 / h as f64);
            [x, y, 0.5 * (x + y)]
        })
        .collect();
    let file = dir.path().join("ramp.ppm");
    write_ppm(&file, w, h, &rgb).unwrap();
    let image = load_image(&file, None).unwrap();

    let grid = SensorGrid::new(8, 8).unwrap();
    let params = LayoutParams::from_theta(LayoutKind::Curvilinear, [0.5, 0.5]).unwrap();
    let sensor = simulate(&image, grid, params, SamplingConfig::quadrature()).unwrap();
    // The red channel grows with x, so it must increase along every sensor row.
    for k2 in 0..8 {
        let row: Vec<f64> = (0..8).map(|k1| sensor.pixels[k2 * 8 + k1].x).collect();
        assert!(row.windows(2).all(|p| p[0] < p[1]), "row {k2}: {row:?}");
    }

    let cells: Vec<usize> = (0..grid.pixel_count()).collect();
    let labels = LabelImage::new(8, 8, cells).unwrap();
    let warped = backwarp(&labels, &params, 64, 64).unwrap();
    let mut counts = vec![0usize; 64];
    for v in warped.values() {
        counts[*v] += 1;
    }
    // Center-densifying layout: central pixels cover fewer output cells than corners.
    assert!(counts[3 * 8 + 3] < counts[0]);
    assert_eq!(counts.iter().sum::<usize>(), 64 * 64);
}

#[test]
fn reused_plans_match_fresh_simulation() {
    let data = synthetic_dataset(4, 1);
    let grid = SensorGrid::new(4, 4).unwrap();
    let params = LayoutParams::from_theta(LayoutKind::Rectangular, [0.3, 0.1]).unwrap();
    let cfg = SamplingConfig::default().with_seed(5);
    let plan = Arc::new(SamplePlan::new(grid, params, cfg).unwrap());
    let boundary = BoundaryPlan::new(Arc::clone(&plan)).unwrap();
    for i in 0..data.len() {
        let image = data.image(i);
        let fresh = simulate(&image, grid, params, cfg).unwrap();
        let (reused, _) = plan.render_serial(&image);
        assert_eq!(fresh, reused);
        let up = vec![Rgb::new(1.0, 1.0, 1.0); 16];
        let serial = boundary.backward(&image, &reused, &up, false).unwrap();
        let parallel = boundary.backward(&image, &reused, &up, true).unwrap();
        assert_eq!(serial, parallel);
    }
}

#[test]
fn training_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_dataset(300, 21);
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    write_idx(&data, &img, &lab).unwrap();
    let loaded = load_mnist(&img, &lab).unwrap();
    assert_eq!(loaded, data);

    let train = loaded.take(240);
    let test = loaded.slice(240, 300);
    let grid = SensorGrid::new(4, 4).unwrap();
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 24,
        ..TrainConfig::seeded(4)
    };
    let sampling = SamplingConfig {
        interior_strata: 4,
        boundary_samples: 8,
        ..SamplingConfig::default()
    };
    let report = train_joint(&train, Some(&test), grid, LayoutKind::Curvilinear, &cfg, &sampling).unwrap();
    let acc = report.final_test_accuracy().unwrap();
    assert!(acc > 0.5, "accuracy {acc}");
    assert_ne!(report.layout.theta(), [0.0, 0.0]);

    let ckpt = Checkpoint::new(&report, grid, cfg.input_channels, sampling.with_seed(cfg.eval_seed));
    let path = dir.path().join("ckpt.json");
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ckpt);
    assert_eq!(back.evaluate(&test).unwrap(), acc);
}

#[test]
fn layout_exports_describe_the_layout() {
    let grid = SensorGrid::new(6, 4).unwrap();
    let params = LayoutParams::from_theta(LayoutKind::Curvilinear, [0.56, 0.38]).unwrap();
    let record: LayoutRecord = serde_json::from_str(&layout_json(&grid, &params).unwrap()).unwrap();
    let (g, p) = record.params().unwrap();
    assert_eq!(g, grid);
    assert!((p.theta()[0] - 0.56).abs() < 1e-15 && (p.theta()[1] - 0.38).abs() < 1e-15);
    let svg = layout_svg(&grid, &params, 300);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 7 + 5);
}
