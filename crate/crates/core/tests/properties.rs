use nalgebra::DMatrix;
use proptest::prelude::*;
use spiking_reservoir::dataset::{self, MadelonParams};
use spiking_reservoir::encoding::{self, DriveConfig, DriveScale, DriveSignal, MaskDistribution};
use spiking_reservoir::eval::{self, CvConfig};
use spiking_reservoir::reservoir::{self, NeuronParams, SpikeRaster};
use spiking_reservoir::training::{self, Method, TrainingSet, BINARY_CLASSES};

const THETA: f64 = 250e-12;

fn signal(values: Vec<f64>, n_pad: usize) -> DriveSignal {
    let mut node_values = values;
    node_values.extend(std::iter::repeat_n(0.0, n_pad));
    DriveSignal {
        node_values,
        theta_s: THETA,
        n_pad,
        scale: DriveScale::IDENTITY,
    }
}

fn drives(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, 1..max_len)
}

fn binary_rows(rows: usize, n_v: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..=1, n_v), rows)
}

fn alternating(n: usize) -> Vec<i32> {
    (0..n).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn masking_is_linear(
        x in prop::collection::vec(-3.0f64..3.0, 12),
        y in prop::collection::vec(-3.0f64..3.0, 12),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let mask = encoding::make_mask(12, 9, MaskDistribution::UniformPm1, seed).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = encoding::mask_features(&combo, &mask).unwrap();
        let mx = encoding::mask_features(&x, &mask).unwrap();
        let my = encoding::mask_features(&y, &mask).unwrap();
        for j in 0..9 {
            prop_assert!((lhs[j] - (a * mx[j] + b * my[j])).abs() < 1e-9);
        }
    }

    #[test]
    fn padding_is_pure_reset(
        x in prop::collection::vec(-3.0f64..3.0, 6),
        n_pad in 0usize..12,
        reset in -1.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let mask = encoding::make_mask(6, 5, MaskDistribution::Uniform01, seed).unwrap();
        let cfg = DriveConfig { n_pad, reset_level: reset, ..DriveConfig::default() };
        let scale = DriveScale { gain: 0.3, offset: 0.1 };
        let s = encoding::encode_datapoint(&x, &mask, &cfg, scale).unwrap();
        prop_assert_eq!(s.len(), 5 + n_pad);
        prop_assert!(s.node_values[5..].iter().all(|&v| v == reset));
    }

    #[test]
    fn raster_excludes_padding(values in drives(40), n_pad in 0usize..10) {
        let n_v = values.len();
        let s = signal(values, n_pad);
        let r = reservoir::run_reservoir(&[s], &NeuronParams::default(), 0).unwrap();
        prop_assert_eq!(r.n_v(), n_v);
    }

    #[test]
    fn spikes_are_causal(prefix in drives(30), a in drives(20), b in drives(20)) {
        let cut = prefix.len() as f64 * THETA;
        let p = NeuronParams { threshold: 0.4, ..NeuronParams::default() };
        let sa = reservoir::spike_times(&signal([prefix.clone(), a].concat(), 8), &p, 0).unwrap();
        let sb = reservoir::spike_times(&signal([prefix, b].concat(), 8), &p, 0).unwrap();
        let before = |s: &[f64]| s.iter().copied().filter(|&t| t < cut).collect::<Vec<_>>();
        prop_assert_eq!(before(&sa), before(&sb));
    }

    #[test]
    fn predecessor_does_not_leak(
        a in prop::collection::vec(0.0f64..2.0, 30),
        b in prop::collection::vec(0.0f64..2.0, 30),
        c in prop::collection::vec(0.0f64..2.0, 30),
        noise in 0.0f64..0.2) {
        let p = NeuronParams { threshold: 0.35, noise_sigma: noise, ..NeuronParams::default() };
        let r1 = reservoir::run_reservoir(&[signal(a, 8), signal(c.clone(), 8)], &p, 9).unwrap();
        let r2 = reservoir::run_reservoir(&[signal(b, 8), signal(c, 8)], &p, 9).unwrap();
        prop_assert_eq!(r1.row(1), r2.row(1));
    }

    #[test]
    fn refractory_bounds_spike_rate(values in drives(60), refr_steps in 1usize..80) {
        let p = NeuronParams {
            threshold: 0.2,
            refractory_s: refr_steps as f64 * 25e-12,
            ..NeuronParams::default()
        };
        let s = signal(values, 8);
        let spikes = reservoir::spike_times(&s, &p, 0).unwrap();
        for w in spikes.windows(2) {
            prop_assert!(w[1] - w[0] >= p.refractory_s * (1.0 - 1e-12));
        }
        let bound = (s.duration_s() / p.refractory_s).floor() as usize + 1;
        prop_assert!(spikes.len() <= bound);
    }

    #[test]
    fn duplicating_rows_doubles_significance(rows in binary_rows(12, 16), n_n in 1usize..16) {
        let labels = alternating(12);
        let once = TrainingSet::new(SpikeRaster::from_rows(&rows).unwrap(), labels.clone(), BINARY_CLASSES.to_vec()).unwrap();
        let doubled_rows = [rows.clone(), rows].concat();
        let twice = TrainingSet::new(
            SpikeRaster::from_rows(&doubled_rows).unwrap(),
            [labels.clone(), labels].concat(),
            BINARY_CLASSES.to_vec(),
        ).unwrap();
        let t1 = training::score(training::count_spikes(&once));
        let t2 = training::score(training::count_spikes(&twice));
        prop_assert_eq!(&t1.s * 2, t2.s.clone());
        prop_assert_eq!(&t1.z * 2.0, t2.z.clone());
        let w1 = training::train_significance(&once, n_n).unwrap();
        let w2 = training::train_significance(&twice, n_n).unwrap();
        prop_assert_eq!(&w1.w, &w2.w);
        prop_assert!(w1.w.iter().filter(|&&x| x == 1.0).count() <= 2 * n_n);
        prop_assert!(w1.w.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn significance_grows_with_concentration(total in 1u64..500, k in 0u64..499) {
        prop_assume!(k < total);
        prop_assert!(training::significance(k + 1, total) > training::significance(k, total));
    }

    #[test]
    fn ols_beats_perturbations(rows in binary_rows(10, 24), dirs in prop::collection::vec(-1.0f64..1.0, 48)) {
        let train = TrainingSet::new(SpikeRaster::from_rows(&rows).unwrap(), alternating(10), BINARY_CLASSES.to_vec()).unwrap();
        let w = training::train_ols(&train).unwrap().w;
        let x = train.design_matrix();
        let y = train.targets();
        let loss = |w: &DMatrix<f64>| (&y - &x * w).norm_squared();
        let base = loss(&w);
        let delta = DMatrix::from_column_slice(24, 2, &dirs);
        for eps in [1e-3, 0.1, 1.0] {
            prop_assert!(base <= loss(&(&w + &delta * eps)) + 1e-9);
        }
        prop_assert!((x.transpose() * (&y - &x * &w)).abs().max() < 1e-8);
    }

    #[test]
    fn training_and_test_sets_are_disjoint(n_t in 1usize..20, seed in any::<u64>()) {
        let labels = alternating(42);
        let raster = SpikeRaster::zeros(42, 3);
        let t = TrainingSet::select(&raster, &labels, &BINARY_CLASSES, n_t, seed).unwrap();
        let mut idx = t.indices.clone();
        idx.sort_unstable();
        idx.dedup();
        prop_assert_eq!(idx.len(), 2 * n_t);
        for &c in &BINARY_CLASSES {
            prop_assert_eq!(t.indices.iter().filter(|&&i| labels[i] == c).count(), n_t);
        }
        prop_assert!(t.indices.len() < labels.len());
    }

    #[test]
    fn temporal_map_round_trips(rows in binary_rows(9, 7), flips in prop::collection::vec(any::<bool>(), 9)) {
        let labels: Vec<i32> = flips.iter().map(|&f| if f { 1 } else { -1 }).collect();
        let raster = SpikeRaster::from_rows(&rows).unwrap();
        let map = eval::temporal_map(&raster, &labels).unwrap();
        prop_assert_eq!(map.boundary, labels.iter().filter(|&&l| l == -1).count());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.csv");
        map.write_csv(&path).unwrap();
        let back = eval::TemporalMap::read_csv(&path).unwrap();
        prop_assert_eq!(back.original_raster(), raster);
        prop_assert_eq!(back.original_labels(), labels);
    }
}

fn shuffled_raster() -> (SpikeRaster, Vec<i32>) {
    let mut rng = spiking_reservoir::seed::rng(77);
    let raw = dataset::generate_madelon(&MadelonParams {
        n_points: 200,
        seed: 3,
        ..MadelonParams::default()
    })
    .unwrap();
    let (ds, _) = dataset::standardize(&raw);
    let mask = encoding::make_mask(ds.n_features(), 128, MaskDistribution::Uniform01, 4).unwrap();
    let enc = encoding::encode_dataset(&ds, &mask, &DriveConfig::default()).unwrap();
    let p = NeuronParams {
        threshold: 0.22,
        ..NeuronParams::default()
    };
    let raster = reservoir::run_reservoir(&enc.signals, &p, 0).unwrap();
    let mut labels = ds.labels;
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    (raster, labels)
}

#[test]
fn shuffled_labels_stay_near_chance() {
    let (raster, labels) = shuffled_raster();
    for (method, n_n) in [(Method::Ols, None), (Method::Significance, Some(10))] {
        let r = eval::cross_validate(
            &raster,
            &labels,
            &CvConfig {
                method,
                n_t: 15,
                n_n,
                repeats: 20,
                seed: 5,
            },
        )
        .unwrap();
        assert!(
            (0.4..=0.6).contains(&r.mean_accuracy),
            "{method}: {}",
            r.mean_accuracy
        );
    }
}

#[test]
fn evaluation_is_seed_deterministic() {
    let (raster, labels) = shuffled_raster();
    let cfg = CvConfig {
        method: Method::Significance,
        n_t: 10,
        n_n: Some(5),
        repeats: 6,
        seed: 11,
    };
    let a = eval::cross_validate(&raster, &labels, &cfg).unwrap();
    let b = eval::cross_validate(&raster, &labels, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.total(), a.confusion.iter().flatten().sum::<u64>());
    let expected_tests = (raster.n_rows() - 20) as u64 * 6;
    assert_eq!(a.total(), expected_tests);
}

#[test]
fn parallel_raster_matches_sequential() {
    let (raster, _) = shuffled_raster();
    let raw = dataset::generate_madelon(&MadelonParams {
        n_points: 200,
        seed: 3,
        ..MadelonParams::default()
    })
    .unwrap();
    let (ds, _) = dataset::standardize(&raw);
    let mask = encoding::make_mask(ds.n_features(), 128, MaskDistribution::Uniform01, 4).unwrap();
    let enc = encoding::encode_dataset(&ds, &mask, &DriveConfig::default()).unwrap();
    let p = NeuronParams {
        threshold: 0.22,
        ..NeuronParams::default()
    };
    for (i, s) in enc.signals.iter().enumerate() {
        let times = reservoir::spike_times(s, &p, reservoir::datapoint_noise_seed(0, i)).unwrap();
        assert_eq!(reservoir::binarize(&times, s), raster.row(i));
    }
}
