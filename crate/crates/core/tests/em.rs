mod common;

use common::*;
use mixfan::classifier::FeatureCpd;
use mixfan::data::{Case, Cell, Dataset, VariableDecl};
use mixfan::estimation::*;
use mixfan::{Classifier, ModelKind, ModelStructure, Schema};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn max_drop(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

/// FM with one binary feature whose hidden posterior at (c=0, x=0) is (0.25, 0.75).
fn quarter_model() -> Classifier {
    let structure = ModelStructure::new(ModelKind::Fm, binary_schema(1), 2).unwrap();
    Classifier::new(
        structure,
        MultinomialCpd::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], 1.0).unwrap(),
        Some(MultinomialCpd::from_rows(&[vec![0.5, 0.5]], 1.0).unwrap()),
        vec![FeatureCpd::Discrete(
            MultinomialCpd::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4]], 1.0).unwrap(),
        )],
    )
    .unwrap()
}

fn single_case(cells: Vec<Cell>, schema: &Schema, copies: usize) -> Dataset {
    Dataset::new(schema.clone(), vec![Case(cells); copies]).unwrap()
}

#[test]
fn expected_stats_hand_example() {
    let m = quarter_model();
    let ds = single_case(vec![Cell::Discrete(0), Cell::Discrete(0)], m.schema(), 1);
    let s = expected_stats(&ds, &m).unwrap();
    let mixing = s.mixing.as_ref().unwrap();
    assert!((mixing.count(0, 0) - 0.25).abs() < 1e-15);
    assert!((mixing.count(0, 1) - 0.75).abs() < 1e-15);
    let x = s.features[0].as_discrete().unwrap();
    assert!((x.row(0)[0] - 0.25).abs() < 1e-15 && x.row(0)[1] == 0.0);
    assert!((x.row(1)[0] - 0.75).abs() < 1e-15 && x.row(1)[1] == 0.0);

    let hard = cem_stats(&ds, &m).unwrap();
    assert_eq!(hard.mixing.as_ref().unwrap().row(0), &[0.0, 1.0]);
}

#[test]
fn cem_ties_go_to_the_first_component() {
    let mut m = quarter_model();
    m = Classifier::new(
        m.structure().clone(),
        m.class_cpd().clone(),
        m.mixing().cloned(),
        vec![FeatureCpd::Discrete(
            MultinomialCpd::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]], 1.0).unwrap(),
        )],
    )
    .unwrap();
    let ds = single_case(vec![Cell::Discrete(1), Cell::Discrete(0)], m.schema(), 1);
    let hard = cem_stats(&ds, &m).unwrap();
    assert_eq!(hard.mixing.as_ref().unwrap().row(0), &[1.0, 0.0]);
    let soft = expected_stats(&ds, &m).unwrap();
    assert!(soft.mixing.as_ref().unwrap().row(0).iter().all(|v| (v - 0.5).abs() < 1e-15));
}

#[test]
fn duplicating_a_case_doubles_expected_stats() {
    let schema = mixed_schema(2, 1);
    let m = random_model(ModelKind::Fan, &schema, 3, 8);
    let one = m.sample(1, 2).unwrap();
    let two = one.concat(&one).unwrap();
    let s1 = expected_stats(&one, &m).unwrap();
    let s2 = expected_stats(&two, &m).unwrap();
    let mut doubled = s1.clone();
    doubled.class.merge(&s1.class);
    doubled.mixing.as_mut().unwrap().merge(s1.mixing.as_ref().unwrap());
    for (d, s) in doubled.features.iter_mut().zip(&s1.features) {
        d.merge(s);
    }
    assert_eq!(doubled, s2);
}

#[test]
fn no_hidden_variable_reduces_to_counting() {
    let schema = mixed_schema(3, 0);
    let m = random_model(ModelKind::Nb, &schema, 1, 4);
    let ds = random_model(ModelKind::Nb, &schema, 1, 5).sample(200, 1).unwrap();
    let soft = expected_stats(&ds, &m).unwrap();
    let hard = cem_stats(&ds, &m).unwrap();
    assert_eq!(soft, hard);
    let class = count_stats(&ds, 0, &[]).unwrap();
    assert_eq!(&soft.class, class.as_discrete().unwrap());
    for (i, f) in soft.features.iter().enumerate() {
        assert_eq!(f, &count_stats(&ds, i + 1, &[0]).unwrap());
    }
}

#[test]
fn training_data_must_be_complete() {
    let schema = binary_schema(1);
    let m = random_model(ModelKind::Fm, &schema, 2, 1);
    let ds = single_case(vec![Cell::Discrete(0), Cell::Missing], &schema, 3);
    assert!(expected_stats(&ds, &m).is_err());
    let structure = ModelStructure::new(ModelKind::Fm, schema, 2).unwrap();
    assert!(fit_em(&ds, &structure, &EmConfig::default()).is_err());
}

#[test]
fn single_component_fit_is_closed_form() {
    let schema = mixed_schema(2, 1);
    let ds = random_model(ModelKind::Fan, &schema, 2, 3).sample(300, 3).unwrap();
    for kind in [ModelKind::Nb, ModelKind::Fm, ModelKind::Fan] {
        let structure = ModelStructure::new(kind, schema.clone(), 1).unwrap();
        let (model, fit) = fit_em(&ds, &structure, &EmConfig::default()).unwrap();
        assert_eq!(fit.iterations, 1, "{kind}");
        assert!(fit.converged);
        assert_eq!(fit.restarts.len(), 1);
        let direct = maximize(
            &structure,
            &cem_stats(&ds, &model).unwrap(),
            &variance_rules(&ds, &structure),
        )
        .unwrap();
        assert_eq!(model, direct);
        assert_eq!(fit.loglik_trace[0], fit.loglik_trace[1]);
    }
}

#[test]
fn recovers_two_well_separated_gaussians() {
    let schema = Schema::new(vec![VariableDecl::discrete("c", ["a", "b"]), VariableDecl::continuous("x")], 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut cases = Vec::new();
    let mut sums = [0.0; 2];
    for (comp, mu) in [0.0, 10.0].into_iter().enumerate() {
        let normal = Normal::new(mu, 1.0).unwrap();
        for _ in 0..500 {
            let x = normal.sample(&mut rng);
            sums[comp] += x;
            cases.push(Case(vec![Cell::Discrete(rng.random_range(0..2)), Cell::Continuous(x)]));
        }
    }
    let truth = [sums[0] / 500.0, sums[1] / 500.0];
    let ds = Dataset::new(schema.clone(), cases).unwrap();
    let structure = ModelStructure::new(ModelKind::Fm, schema, 2).unwrap();
    let (model, fit) = fit_em(&ds, &structure, &EmConfig::default().with_seed(7)).unwrap();
    let FeatureCpd::Continuous(g) = &model.features()[0] else { panic!() };
    let mut means = g.mean().to_vec();
    means.sort_by(f64::total_cmp);
    for (m, t) in means.iter().zip(truth) {
        assert!((m - t).abs() < 0.3, "{means:?} vs {truth:?} {:?} {:?}", fit.stop, fit.restarts);
    }
    assert!(max_drop(&fit.loglik_trace) <= 1e-9);
}

#[test]
fn traces_never_decrease() {
    for seed in 0..30u64 {
        let kind = if seed % 2 == 0 { ModelKind::Fm } else { ModelKind::Fan };
        let r = 2 + seed as usize % 3;
        let schema = mixed_schema(3, 2);
        let ds = random_model(kind, &schema, r, seed).sample(250, seed).unwrap();
        let structure = ModelStructure::new(kind, schema, r).unwrap();
        let (_, fit) = fit_em(&ds, &structure, &quick_em(seed)).unwrap();
        assert!(max_drop(&fit.loglik_trace) <= 1e-9, "seed {seed}");
        if fit.stop == StopReason::LikelihoodDecrease {
            assert!(fit.rejected_loglik.unwrap() < fit.final_loglik());
        }
    }
}

#[test]
fn near_maximum_likelihood_em_needs_no_safeguard() {
    // With vanishing smoothing on discrete data each step is a plain EM
    // step, which cannot lower the likelihood.
    for seed in 0..30u64 {
        let kind = if seed % 2 == 0 { ModelKind::Fm } else { ModelKind::Fan };
        let r = 2 + seed as usize % 3;
        let schema = binary_schema(5);
        let ds = random_model(kind, &schema, r, seed).sample(300, seed).unwrap();
        let structure = ModelStructure::new(kind, schema, r).unwrap().with_alpha(1e-6).unwrap();
        let (_, fit) = fit_em(&ds, &structure, &quick_em(seed)).unwrap();
        assert_ne!(fit.stop, StopReason::LikelihoodDecrease, "seed {seed}");
        for run in &fit.restarts {
            assert_ne!(run.stop, Some(StopReason::LikelihoodDecrease), "seed {seed}");
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let schema = mixed_schema(2, 2);
    let ds = random_model(ModelKind::Fan, &schema, 3, 6).sample(200, 6).unwrap();
    let structure = ModelStructure::new(ModelKind::Fan, schema, 3).unwrap();
    for mode in [EmMode::Em, EmMode::Cem] {
        let cfg = quick_em(11).with_mode(mode);
        let a = fit_em(&ds, &structure, &cfg).unwrap();
        let b = fit_em(&ds, &structure, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.mode, mode);
        assert_eq!(a.1.restarts.len(), 2);
    }
}

#[test]
fn best_restart_has_highest_final_loglik() {
    let schema = binary_schema(4);
    let ds = random_model(ModelKind::Fm, &schema, 3, 1).sample(300, 1).unwrap();
    let structure = ModelStructure::new(ModelKind::Fm, schema, 3).unwrap();
    let cfg = EmConfig { restarts: 6, ..quick_em(2) };
    let (model, fit) = fit_em(&ds, &structure, &cfg).unwrap();
    let best = fit.restarts.iter().filter_map(|r| r.final_loglik).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(fit.final_loglik(), best);
    assert_eq!(fit.restarts[fit.best_restart].final_loglik, Some(best));
    assert!((model.loglik(&ds).unwrap() - best).abs() < 1e-9 * best.abs());
}

#[test]
fn cem_stops_when_assignments_settle() {
    let schema = binary_schema(4);
    let ds = random_model(ModelKind::Fan, &schema, 2, 9).sample(300, 9).unwrap();
    let structure = ModelStructure::new(ModelKind::Fan, schema, 2).unwrap();
    let (_, fit) = fit_em(&ds, &structure, &quick_em(3).with_mode(EmMode::Cem)).unwrap();
    assert!(fit.converged);
    assert!(matches!(fit.stop, StopReason::AssignmentsStable | StopReason::Tolerance));
}

#[test]
fn oversized_hidden_variable_still_fits() {
    let schema = mixed_schema(1, 1);
    let ds = random_model(ModelKind::Fm, &schema, 2, 2).sample(8, 2).unwrap();
    let structure = ModelStructure::new(ModelKind::Fm, schema, 6).unwrap();
    for mode in [EmMode::Em, EmMode::Cem] {
        let (model, fit) = fit_em(&ds, &structure, &quick_em(4).with_mode(mode)).unwrap();
        assert_eq!(model.hidden_arity(), 6);
        assert!(fit.final_loglik().is_finite());
    }
}

#[test]
fn config_validation() {
    assert!(EmConfig { tolerance: 0.0, ..EmConfig::default() }.validate().is_err());
    assert!(EmConfig { restarts: 0, ..EmConfig::default() }.validate().is_err());
    assert!(EmConfig { max_iterations: 0, ..EmConfig::default() }.validate().is_err());
    let d = EmConfig::default();
    assert_eq!((d.max_iterations, d.tolerance, d.restarts, d.mode), (500, 1e-6, 5, EmMode::Em));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expected_counts_marginalize(seed in 0u64..10_000, kind in 0usize..2, r in 1usize..4) {
        let kind = [ModelKind::Fm, ModelKind::Fan][kind];
        let schema = mixed_schema(2, 1);
        let m = random_model(kind, &schema, r, seed);
        let ds = m.sample(40, seed ^ 1).unwrap();
        let n = ds.len() as f64;
        for stats in [expected_stats(&ds, &m).unwrap(), cem_stats(&ds, &m).unwrap()] {
            prop_assert!((stats.class.total() - n).abs() < 1e-9);
            prop_assert!((stats.mixing.as_ref().unwrap().total() - n).abs() < 1e-9);
            for f in &stats.features {
                prop_assert!((f.total() - n).abs() < 1e-9);
                if let Some(d) = f.as_discrete() {
                    for j in 0..d.configs() {
                        prop_assert!((d.row(j).iter().sum::<f64>() - d.config_total(j)).abs() < 1e-9);
                    }
                }
            }
        }
        // Hard statistics are whole numbers.
        let hard = cem_stats(&ds, &m).unwrap();
        prop_assert!(hard.mixing.unwrap().row(0).iter().all(|v| v.fract() == 0.0));
    }
}
