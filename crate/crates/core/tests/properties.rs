//! Cross-module invariants on random instances: objective monotonicity and
//! invariances, physical bounds of the front-end models, and the
//! T-parameter-vs-direct-propagation oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trihybrid::dma::{self, DmaConfig, DmaGeometry};
use trihybrid::linalg::{frob_norm_sq, random_cn_matrix, random_unitary};
use trihybrid::model::{
    generate_channel, mutual_information, ArrayDescriptor, ChannelTensor, MultipathParams,
    NoiseModel, PathComponent, PrecoderSet,
};
use trihybrid::parasitic::scalar_weight_locus;
use trihybrid::pass::amplitudes;
use trihybrid::pixel::{
    fra_from_selection, nearest_state, radiated_power_for_state, FeedDictionary, PowerMode,
    SelectionState, StateDictionary,
};
use trihybrid::sim::{cascade, propagation_from_transmission, MetaLayer, SimStack};

type CMat = DMatrix<Complex64>;

fn random_setup(seed: u64) -> (ChannelTensor, PrecoderSet<()>, NoiseModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 3;
    let mats: Vec<CMat> = (0..k).map(|_| random_cn_matrix(&mut rng, 3, 4)).collect();
    let h = ChannelTensor::new(mats, vec![0.0; k]).unwrap();
    let analog: Vec<CMat> = (0..k).map(|_| random_cn_matrix(&mut rng, 4, 2)).collect();
    let digital: Vec<CMat> = (0..k).map(|_| random_cn_matrix(&mut rng, 2, 2)).collect();
    let p = PrecoderSet::new(digital, analog, ()).unwrap();
    (h, p, NoiseModel::new(0.3).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mi_nondecreasing_under_digital_scaling(seed in 0u64..1000, c in 1.0f64..10.0) {
        let (h, p, noise) = random_setup(seed);
        let base = mutual_information(&h, &p, &noise).unwrap();
        let scaled = PrecoderSet::new(
            p.digital.iter().map(|f| f.scale(c)).collect(),
            p.analog.clone(),
            (),
        )
        .unwrap();
        let boosted = mutual_information(&h, &scaled, &noise).unwrap();
        prop_assert!(boosted >= base - 1e-10, "c = {c}: {boosted} < {base}");
    }

    #[test]
    fn mi_invariant_under_unitary_stream_rotation(seed in 0u64..1000) {
        let (h, p, noise) = random_setup(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
        let u = random_unitary(&mut rng, 2);
        let rotated = PrecoderSet::new(
            p.digital.iter().map(|f| f * &u).collect(),
            p.analog.clone(),
            (),
        )
        .unwrap();
        let a = mutual_information(&h, &p, &noise).unwrap();
        let b = mutual_information(&h, &rotated, &noise).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn parasitic_circle_locus(r in 0.1f64..500.0, x in -2000.0f64..2000.0) {
        let w = scalar_weight_locus(r, &[x]).unwrap()[0];
        let center = 1.0 / (2.0 * r);
        let d = (w - Complex64::new(center, 0.0)).norm();
        prop_assert!((d - center).abs() < 1e-12);
    }

    #[test]
    fn pass_telescoping_identity(seed in 0u64..5000, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deltas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.98)).collect();
        let alpha = amplitudes(&deltas).unwrap();
        let sum_sq: f64 = alpha.iter().map(|a| a * a).sum();
        let residual: f64 = deltas.iter().map(|d| 1.0 - d * d).product();
        prop_assert!((sum_sq + residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dma_residual_energy_bounded(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = DmaGeometry::half_wavelength(6, 1, 1, 0.01, 500.0, rng.gen_range(0.05..1.0))
            .unwrap();
        let phases: Vec<f64> = (0..6)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let s12 = dma::residual_transmission(&geom, &DmaConfig::new(phases).unwrap(), 0).unwrap();
        let e = s12.norm_sqr();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&e), "|S12|^2 = {e}");
    }
}

#[test]
fn single_path_channel_is_rank_one() {
    for seed in 0..20 {
        let params = MultipathParams {
            paths: vec![PathComponent {
                gain: None,
                delay_s: 2e-9,
                aod_az_rad: 0.4,
                aod_el_rad: 0.1,
                aoa_az_rad: -0.7,
                aoa_el_rad: 0.0,
            }],
            carrier_freq_hz: 28e9,
            bandwidth_hz: 1e8,
            num_subcarriers: 4,
        };
        let lambda = 3e8 / 28e9;
        let tx = ArrayDescriptor::line_array(4, lambda / 2.0, lambda).unwrap();
        let rx = ArrayDescriptor::line_array(3, lambda / 2.0, lambda).unwrap();
        let h = generate_channel(&params, &tx, &rx, seed).unwrap();
        for k in 0..4 {
            let sv = h.matrix(k).clone().singular_values();
            assert!(
                sv[1] < 1e-10 * sv[0],
                "seed {seed} subcarrier {k}: second singular value {} vs {}",
                sv[1],
                sv[0]
            );
        }
    }
}

#[test]
fn pixel_power_bounded_by_efficiency_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let n_states = rng.gen_range(2..5);
        let feeds: Vec<FeedDictionary> = (0..2)
            .map(|_| {
                let mut m = CMat::zeros(3, n_states);
                for s in 0..n_states {
                    let col = random_cn_matrix(&mut rng, 3, 1);
                    let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    for r in 0..3 {
                        m[(r, s)] = col[(r, 0)] / Complex64::new(norm, 0.0);
                    }
                }
                let etas: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.2..1.0)).collect();
                FeedDictionary::new(m, (0..n_states).collect(), etas).unwrap()
            })
            .collect();
        let eta_bounds: (f64, f64) = feeds
            .iter()
            .flat_map(|f| (0..f.num_states()).map(|s| f.efficiency(s)).collect::<Vec<_>>())
            .fold((f64::MAX, f64::MIN), |acc, e| (acc.0.min(e), acc.1.max(e)));
        let dict = StateDictionary::new(feeds).unwrap();
        let state = SelectionState::new(vec![
            rng.gen_range(0..n_states),
            rng.gen_range(0..n_states),
        ]);
        let f_ana = random_cn_matrix(&mut rng, 2, 2);
        let f_dig = random_cn_matrix(&mut rng, 2, 2);
        let p = radiated_power_for_state(&dict, &state, &f_ana, &f_dig, PowerMode::Exact).unwrap();
        let norm = frob_norm_sq(&(&f_ana * &f_dig));
        assert!(p <= eta_bounds.1 * norm + 1e-12);
        assert!(p >= eta_bounds.0 * norm - 1e-12);
    }
}

#[test]
fn pixel_round_trip_full_enumeration() {
    // every state of every dictionary shape up to N_p = 3, N_sub = 4
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for n_p in 1..=3usize {
        for n_sub in 1..=4usize {
            let feeds: Vec<FeedDictionary> = (0..n_p)
                .map(|_| {
                    let mut m = CMat::zeros(2, n_sub);
                    for s in 0..n_sub {
                        let col = random_cn_matrix(&mut rng, 2, 1);
                        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                        for r in 0..2 {
                            m[(r, s)] = col[(r, 0)] / Complex64::new(norm, 0.0);
                        }
                    }
                    FeedDictionary::new(m, (0..n_sub).collect(), vec![1.0; n_sub]).unwrap()
                })
                .collect();
            let dict = StateDictionary::new(feeds).unwrap();
            let mut counters = vec![0usize; n_p];
            loop {
                let state = SelectionState::new(counters.clone());
                let f = fra_from_selection(&dict, &state).unwrap();
                assert_eq!(nearest_state(&dict, &f).unwrap(), state);
                let mut p = 0;
                loop {
                    if p == n_p {
                        break;
                    }
                    counters[p] += 1;
                    if counters[p] < n_sub {
                        break;
                    }
                    counters[p] = 0;
                    p += 1;
                }
                if p == n_p {
                    break;
                }
            }
        }
    }
}

/// Direct field propagation through a reflectionless stack, written from the
/// physics: apply each layer's diagonal phases, then the interlayer
/// transmission, layer by layer. Independent of the T-parameter cascade.
fn direct_propagation_oracle(phases: &[Vec<f64>], w: &CMat) -> CMat {
    let n = phases[0].len();
    let mut field = CMat::identity(n, n);
    for (l, layer_phases) in phases.iter().enumerate() {
        let theta = CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, layer_phases[i])
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        field = theta * field;
        if l + 1 < phases.len() {
            field = w * field;
        }
    }
    field
}

#[test]
fn sim_cascade_matches_direct_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    for n_m in 1..=4usize {
        for layers in 1..=3usize {
            let w = random_unitary(&mut rng, n_m);
            let phases: Vec<Vec<f64>> = (0..layers)
                .map(|_| {
                    (0..n_m)
                        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                        .collect()
                })
                .collect();
            let stack = SimStack::ideal(
                phases.clone(),
                propagation_from_transmission(&w).unwrap(),
                CMat::identity(n_m, n_m),
            )
            .unwrap();
            let psi = cascade(&stack).unwrap();
            let direct = direct_propagation_oracle(&phases, &w);
            let err: f64 = (psi - direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "N_m = {n_m}, L = {layers}: max error {err}");
        }
    }
}

#[test]
fn sim_reflective_stack_still_cascades() {
    // reflective layers are representable; only the lossless invariants
    // exclude them
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let n = 3;
    let layer = MetaLayer::Scattering {
        transmission: (0..n)
            .map(|_| Complex64::from_polar(0.9, rng.gen_range(-1.0..1.0)))
            .collect(),
        reflection: (0..n)
            .map(|_| Complex64::from_polar(0.2, rng.gen_range(-1.0..1.0)))
            .collect(),
    };
    let stack = SimStack::new(
        vec![layer.clone(), layer],
        vec![propagation_from_transmission(&random_unitary(&mut rng, n)).unwrap()],
        CMat::identity(n, n),
    )
    .unwrap();
    let psi = cascade(&stack).unwrap();
    assert!(psi.iter().all(|z| z.norm().is_finite()));
}

#[test]
fn frobenius_matching_self_residual_negligible() {
    use trihybrid::model::{frobenius_matching, ConventionalFrontEnd};
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for _ in 0..50 {
        let fa = random_cn_matrix(&mut rng, 4, 3);
        let fd = random_cn_matrix(&mut rng, 3, 2);
        let product = &fa * &fd;
        let f_opt = ChannelTensor::new(vec![product], vec![0.0]).unwrap();
        let fe = ConventionalFrontEnd {
            channel: ChannelTensor::new(vec![CMat::zeros(1, 4)], vec![0.0]).unwrap(),
        };
        let p = PrecoderSet::new(vec![fd], vec![fa], ()).unwrap();
        let r = frobenius_matching(&f_opt, &p, &fe).unwrap();
        assert!(r < 1e-24, "self residual {r}");
    }
}
