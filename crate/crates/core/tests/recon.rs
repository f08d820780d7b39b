use spect_core::phantom::default_phantom;
use spect_core::recon::{reconstruct, rmse, simulate, NoiseConfig, Region, DEFAULT_TRUNCATION_BOX};
use spect_core::sinogram::apply_truncation;
use spect_core::{Ellipse, Error, Phantom, ReconConfig, Rect, Sinogram};

fn small(mu0: f64) -> ReconConfig {
    ReconConfig {
        mu0,
        grid_n: 96,
        n_views: 240,
        n_rays: 160,
        ..ReconConfig::default()
    }
}

fn second_phantom() -> Phantom {
    Phantom::new(
        vec![
            Ellipse::new([0.2, -0.1], 0.4, 0.25, 30.0, 0.6).unwrap(),
            Ellipse::new([-0.35, 0.3], 0.15, 0.3, -15.0, -0.25).unwrap(),
        ],
        1.0,
    )
    .unwrap()
}

#[test]
fn reconstruction_is_linear_in_the_phantom() {
    let cfg = small(1.2);
    let a = default_phantom();
    let b = second_phantom();
    let both = Phantom::new([a.ellipses.clone(), b.ellipses.clone()].concat(), 1.0).unwrap();
    let rec = |p: &Phantom| reconstruct(&cfg, &simulate(&cfg, p).unwrap()).unwrap().0;
    let (ra, rb, rs) = (rec(&a), rec(&b), rec(&both));
    for ((x, y), s) in ra.values.iter().zip(&rb.values).zip(&rs.values) {
        assert!((x + y - s).abs() <= 1e-8, "{x} + {y} vs {s}");
    }
}

#[test]
fn error_grows_with_attenuation() {
    // the full acceptance geometry
    let truth = default_phantom().rasterize(256, 1.0).unwrap();
    let errs: Vec<f64> = [0.0, 0.5, 1.5, 3.0]
        .iter()
        .map(|&mu0| {
            let cfg = ReconConfig {
                mu0,
                ..ReconConfig::default()
            };
            let (img, report) =
                reconstruct(&cfg, &simulate(&cfg, &default_phantom()).unwrap()).unwrap();
            if mu0 == 0.0 {
                assert_eq!(report.condition_max, 1.0);
            }
            rmse(&img, &truth, &Region::interior(1.0)).unwrap()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[0] <= w[1]), "{errs:?}");
    assert!(errs[2] <= 0.05);
}

#[test]
fn report_covers_every_column() {
    let cfg = small(1.5);
    let (_, report) = reconstruct(&cfg, &simulate(&cfg, &default_phantom()).unwrap()).unwrap();
    assert_eq!(report.columns_reconstructed, 96);
    assert_eq!(report.columns_skipped, 0);
    assert!(report.mu1_max <= 1.5 && report.mu1_max > 1.49);
    assert!(report.mu1_min > 0.0 && report.mu1_min < 0.3);
    assert!(report.condition_max > 1.0 && report.condition_max < 100.0);
    assert_eq!(report.nodes_per_line, 192);
}

#[test]
fn truncated_reconstruction_matches_inside_box() {
    let cfg = small(1.5);
    let full = reconstruct(&cfg, &simulate(&cfg, &default_phantom()).unwrap())
        .unwrap()
        .0;
    let tcfg = ReconConfig {
        truncation: Some(DEFAULT_TRUNCATION_BOX),
        ..cfg
    };
    let (cut, report) = reconstruct(&tcfg, &simulate(&tcfg, &default_phantom()).unwrap()).unwrap();
    assert!(report.columns_skipped > 0);
    for i2 in 0..96 {
        for i1 in 0..96 {
            let (x1, x2) = (cut.x1(i1), cut.x2(i2));
            if DEFAULT_TRUNCATION_BOX.contains([x1, x2]) {
                assert!((cut.get(i1, i2) - full.get(i1, i2)).abs() < 1e-2);
            } else if x1.abs() > 0.6 {
                assert_eq!(cut.get(i1, i2), 0.0);
            }
        }
    }
}

#[test]
fn interior_problem_rejected() {
    let cfg = ReconConfig {
        truncation: Some(Rect::new(-0.3, -0.5, 0.3, 0.5).unwrap()),
        ..small(1.0)
    };
    assert!(matches!(cfg.validate(), Err(Error::InteriorProblem(_))));
    let cfg = small(1.0);
    let g = simulate(&cfg, &default_phantom()).unwrap();
    let cut = apply_truncation(&g, &DEFAULT_TRUNCATION_BOX).unwrap();
    assert!(matches!(
        reconstruct(&cfg, &cut),
        Err(Error::InteriorProblem(_))
    ));
}

#[test]
fn noisy_runs_are_reproducible() {
    let cfg = ReconConfig {
        noise: Some(NoiseConfig {
            total_counts: 1e6,
            seed: 11,
        }),
        ..small(1.0)
    };
    let run = || {
        reconstruct(&cfg, &simulate(&cfg, &default_phantom()).unwrap())
            .unwrap()
            .0
    };
    assert_eq!(run(), run());
    let other = ReconConfig {
        noise: Some(NoiseConfig {
            total_counts: 1e6,
            seed: 12,
        }),
        ..cfg.clone()
    };
    let b = reconstruct(&other, &simulate(&other, &default_phantom()).unwrap())
        .unwrap()
        .0;
    assert_ne!(run(), b);
}

#[test]
fn zero_data_and_geometry_checks() {
    let cfg = small(0.7);
    let zero = Sinogram::zeros(cfg.n_views, cfg.n_rays, cfg.s_max, cfg.mu0).unwrap();
    assert!(reconstruct(&cfg, &zero)
        .unwrap()
        .0
        .values
        .iter()
        .all(|&v| v == 0.0));
    let wrong = Sinogram::zeros(cfg.n_views, cfg.n_rays + 2, cfg.s_max, cfg.mu0).unwrap();
    assert!(matches!(
        reconstruct(&cfg, &wrong),
        Err(Error::GridMismatch(_))
    ));
    let bad = ReconConfig {
        nodes_per_line: Some(5),
        ..small(0.7)
    };
    assert!(bad.validate().is_err());
}

#[test]
fn config_json_round_trip() {
    let cfg = ReconConfig {
        truncation: Some(DEFAULT_TRUNCATION_BOX),
        noise: Some(NoiseConfig {
            total_counts: 5e6,
            seed: 9,
        }),
        ..small(1.1)
    };
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<ReconConfig>(&text).unwrap(), cfg);
    let partial: ReconConfig = serde_json::from_str(r#"{"mu0": 0.4}"#).unwrap();
    assert_eq!(partial.mu0, 0.4);
    assert_eq!(partial.grid_n, ReconConfig::default().grid_n);
    assert!(serde_json::from_str::<ReconConfig>(r#"{"mu": 0.4}"#).is_err());
}
