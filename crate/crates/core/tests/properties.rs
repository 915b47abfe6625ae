mod common;

use bm3::association::{contingency, cramers_v};
use bm3::diagnostics::{aligned_rmse, ari, subtype_table, waic_from_loglik, PosteriorModes};
use bm3::io::{ingest_long_csv, write_long_csv};
use bm3::math::permutations;
use bm3::params::LatentState;
use bm3::sampler::{apply_profile_permutation, Draw};
use bm3::simulate::{builtin_setting, draw_dataset, Setting};
use bm3::{brute_force_loglik, complete_data_loglik, cond_loglik_given_pi, ParamSet};
use common::{
    cellwise_blocks, grade_of_membership_loglik, latent_class_loglik, random_instance, random_tables, rel_close,
    Instance, Shape,
};
use proptest::prelude::*;

fn small_shape() -> impl Strategy<Value = Shape> {
    (
        1usize..=3,
        1usize..=4,
        1usize..=4,
        1usize..=3,
        1usize..=2,
        any::<bool>(),
    )
        .prop_flat_map(|(n, p, t, k, c, balanced)| {
            (1..=p.min(2), 1..=t.min(2)).prop_map(move |(g, r)| Shape {
                n,
                p,
                t_max: t,
                groups: g,
                periods: r,
                profiles: k,
                subpops: c.min(n),
                balanced,
            })
        })
}

fn state_of(inst: &Instance) -> LatentState {
    LatentState {
        n_profiles: inst.lambda.n_profiles(),
        n_groups: inst.blocks.n_groups,
        n_periods: inst.blocks.n_periods,
        pi: inst.pi.concat(),
        z: inst.z.clone(),
    }
}

proptest! {
    #[test]
    fn fast_likelihood_matches_enumeration(shape in small_shape(), seed in any::<u64>()) {
        let inst = random_instance(shape, seed);
        for i in 0..inst.data.n() {
            let fast = cond_loglik_given_pi(&inst.data, &inst.blocks, &inst.lambda, &inst.pi[i], i);
            let slow = brute_force_loglik(&inst.data, &inst.blocks, &inst.lambda, &inst.pi[i], i).unwrap();
            prop_assert!(rel_close(fast, slow, 1e-12), "{fast} vs {slow}");
        }
    }

    #[test]
    fn single_block_is_a_latent_class_mixture(shape in small_shape(), seed in any::<u64>()) {
        let shape = Shape { groups: 1, periods: 1, ..shape };
        let inst = random_instance(shape, seed);
        for i in 0..inst.data.n() {
            let direct = latent_class_loglik(&inst, i);
            let fast = cond_loglik_given_pi(&inst.data, &inst.blocks, &inst.lambda, &inst.pi[i], i);
            prop_assert!(rel_close(fast, direct, 1e-12));
        }
    }

    #[test]
    fn cellwise_blocks_are_grade_of_membership(shape in small_shape(), seed in any::<u64>()) {
        let shape = Shape { balanced: true, groups: 1, periods: 1, ..shape };
        let mut inst = random_instance(shape, seed);
        cellwise_blocks(&mut inst);
        for i in 0..inst.data.n() {
            let direct = grade_of_membership_loglik(&inst, i);
            let fast = cond_loglik_given_pi(&inst.data, &inst.blocks, &inst.lambda, &inst.pi[i], i);
            prop_assert!(rel_close(fast, direct, 1e-12));
        }
    }

    #[test]
    fn group_relabeling_leaves_likelihoods_unchanged(shape in small_shape(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let inst = random_instance(shape, seed);
        let perms = permutations(shape.groups);
        let sigma = pick.get(&perms);
        let (g_n, r_n, c_n) = (shape.groups, shape.periods, shape.subpops);
        let mut blocks = inst.blocks.clone();
        blocks.groups = inst.blocks.groups.iter().map(|&g| sigma[g]).collect();
        for g in 0..g_n {
            for c in 0..c_n {
                blocks.cutpoints[sigma[g] * c_n + c] = inst.blocks.cutpoints[g * c_n + c].clone();
            }
        }
        let mut moved = state_of(&inst);
        for i in 0..shape.n {
            for g in 0..g_n {
                for r in 0..r_n {
                    moved.z[(i * g_n + sigma[g]) * r_n + r] = inst.z[(i * g_n + g) * r_n + r];
                }
            }
        }
        let before = complete_data_loglik(&inst.data, &inst.blocks, &inst.lambda, &state_of(&inst));
        let after = complete_data_loglik(&inst.data, &blocks, &inst.lambda, &moved);
        prop_assert!(rel_close(before, after, 1e-12));
        for i in 0..shape.n {
            let a = cond_loglik_given_pi(&inst.data, &inst.blocks, &inst.lambda, &inst.pi[i], i);
            let b = cond_loglik_given_pi(&inst.data, &blocks, &inst.lambda, &inst.pi[i], i);
            prop_assert!(rel_close(a, b, 1e-12));
        }
    }

    #[test]
    fn profile_relabeling_leaves_likelihoods_unchanged(shape in small_shape(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let inst = random_instance(shape, seed);
        let perms = permutations(shape.profiles);
        let perm = pick.get(&perms);
        let state = state_of(&inst);
        let mut draw = Draw {
            params: ParamSet {
                lambda: inst.lambda.clone(),
                alpha: (1..=shape.profiles).map(|k| k as f64).collect(),
                xi: vec![1.0 / shape.groups as f64; shape.groups],
                kappa: vec![],
            },
            blocks: inst.blocks.clone(),
            state: state.clone(),
        };
        apply_profile_permutation(&mut draw, perm);
        let before = complete_data_loglik(&inst.data, &inst.blocks, &inst.lambda, &state);
        let after = complete_data_loglik(&inst.data, &draw.blocks, &draw.params.lambda, &draw.state);
        prop_assert!(rel_close(before, after, 1e-12));
        for i in 0..shape.n {
            let a = cond_loglik_given_pi(&inst.data, &inst.blocks, &inst.lambda, &inst.pi[i], i);
            let b = cond_loglik_given_pi(&inst.data, &draw.blocks, &draw.params.lambda, draw.state.pi_of(i), i);
            prop_assert!(rel_close(a, b, 1e-12));
        }
    }

    #[test]
    fn complete_likelihood_is_a_plain_sum(shape in small_shape(), seed in any::<u64>()) {
        let inst = random_instance(shape, seed);
        let mut naive = 0.0;
        for i in 0..shape.n {
            let c = inst.data.subpop[i];
            for t in 0..inst.data.visits[i] {
                for j in 0..shape.p {
                    let g = inst.blocks.groups[j];
                    let r = inst.blocks.period_of(g, c, t);
                    let k = inst.z[(i * shape.groups + g) * shape.periods + r];
                    naive += inst.lambda.get(j, inst.data.response(i, j, t).unwrap(), k).ln();
                }
            }
        }
        let fast = complete_data_loglik(&inst.data, &inst.blocks, &inst.lambda, &state_of(&inst));
        prop_assert!(rel_close(fast, naive, 1e-12));
    }

    #[test]
    fn accepted_files_always_validate(shape in small_shape(), seed in any::<u64>()) {
        let inst = random_instance(shape, seed);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_long_csv(&inst.data, &path).unwrap();
        let back = ingest_long_csv(&path, Some(&inst.data.categories)).unwrap();
        prop_assert!(back.validate().is_ok());
        if inst.data.n_subpops == 1 || back.n_subpops == inst.data.n_subpops {
            prop_assert_eq!(back, inst.data);
        }
    }

    #[test]
    fn ari_is_bounded_and_label_free(a in prop::collection::vec(0usize..4, 2..30), shift in 1usize..4, seed in any::<u64>()) {
        let relabeled: Vec<usize> = a.iter().map(|x| (x + shift) % 4).collect();
        prop_assert!((ari(&a, &relabeled).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = bm3::rng::Streams::new(seed).rng(bm3::rng::Purpose::Test, 0, 0);
        let b: Vec<usize> = a.iter().map(|_| rand::Rng::random_range(&mut rng, 0..3)).collect();
        let v = ari(&a, &b).unwrap();
        prop_assert!(v <= 1.0 + 1e-12);
        prop_assert!((v - ari(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn alignment_is_optimal_over_all_permutations(k in 1usize..=4, seed in any::<u64>()) {
        let mut rng = bm3::rng::Streams::new(seed).rng(bm3::rng::Purpose::Test, 1, 0);
        let cats = vec![3, 2, 4];
        let truth = random_tables(&cats, k, &mut rng);
        let est = random_tables(&cats, k, &mut rng);
        let ta: Vec<f64> = (0..k).map(|x| 1.0 + x as f64).collect();
        let ea: Vec<f64> = (0..k).map(|x| 2.0 - 0.3 * x as f64).collect();
        let got = aligned_rmse(&est, &ea, &truth, &ta).unwrap();
        let len = truth.as_slice().len() as f64;
        let rmse = |perm: &[usize]| {
            let e = est.permute_profiles(perm);
            (e.as_slice().iter().zip(truth.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / len).sqrt()
        };
        let best = permutations(k).iter().map(|p| rmse(p)).fold(f64::INFINITY, f64::min);
        prop_assert!((got.lambda - best).abs() < 1e-12);
        let identity: Vec<usize> = (0..k).collect();
        prop_assert!(got.lambda <= rmse(&identity) + 1e-15);
    }

    #[test]
    fn subtype_counts_partition_subjects(n in 1usize..40, g_n in 1usize..4, k_n in 1usize..4, seed in any::<u64>()) {
        let mut rng = bm3::rng::Streams::new(seed).rng(bm3::rng::Purpose::Test, 2, 0);
        let modes = PosteriorModes {
            groups: vec![0; g_n],
            cutpoints: vec![vec![]; g_n],
            z: (0..n * g_n).map(|_| rand::Rng::random_range(&mut rng, 0..k_n)).collect(),
            n_groups: g_n,
            n_periods: 1,
            n_subpops: 1,
            n_profiles: k_n,
            t_max: 3,
        };
        let table = subtype_table(&modes, 0, None).unwrap();
        prop_assert_eq!(table.total(), n);
        prop_assert!(table.rows.windows(2).all(|w| w[0].count >= w[1].count));
    }

    #[test]
    fn waic_terms_are_finite_with_nonnegative_penalty(
        ll in prop::collection::vec(prop::collection::vec(-50.0f64..0.0, 5), 2..8)
    ) {
        let w = waic_from_loglik(&ll).unwrap();
        prop_assert!(w.lppd.is_finite() && w.penalty.is_finite() && w.waic.is_finite());
        prop_assert!(w.penalty >= 0.0);
    }

    #[test]
    fn cramers_v_is_in_unit_interval(a in prop::collection::vec(0usize..3, 1..60), seed in any::<u64>()) {
        let mut rng = bm3::rng::Streams::new(seed).rng(bm3::rng::Purpose::Test, 3, 0);
        let b: Vec<usize> = a.iter().map(|_| rand::Rng::random_range(&mut rng, 0..4)).collect();
        let v = cramers_v(&contingency(&a, &b, 3, 4)).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_is_a_function_of_the_seed(seed in any::<u64>(), which in 0usize..3) {
        let setting = [Setting::I, Setting::II, Setting::III][which];
        let (cfg, blocks, params) = builtin_setting(setting);
        let cfg = cfg.with_n(20).with_seed(seed);
        let a = draw_dataset(&cfg, &blocks, &params.lambda, &params.alpha).unwrap();
        let b = draw_dataset(&cfg, &blocks, &params.lambda, &params.alpha).unwrap();
        prop_assert_eq!(a, b);
    }
}
