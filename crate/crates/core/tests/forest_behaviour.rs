use irf_core::forest::bootstrap_rows;
use irf_core::{
    fit, generate_classification, generate_regression, grow, select_hyperparams, ClassGenConfig,
    ForestConfig, ForestModel, Protocol, RegGenConfig, Scenario, Task, TreeConfig,
};

fn class_data(seed: u64) -> irf_core::Dataset {
    generate_classification(&ClassGenConfig::new(2, vec![0.1, 0.4], 200, seed))
        .unwrap()
        .0
}

#[test]
fn same_seed_same_forest() {
    let data = class_data(1);
    let cfg = ForestConfig::invariant(Task::Classification, 8, 5, 1.0, 9);
    assert_eq!(fit(&data, &cfg).unwrap(), fit(&data, &cfg).unwrap());
    let rf = ForestConfig::random_forest(Task::Classification, 8, 5, 9);
    assert_eq!(fit(&data, &rf).unwrap(), fit(&data, &rf).unwrap());
    let other = ForestConfig { seed: 10, ..cfg.clone() };
    assert_ne!(fit(&data, &cfg).unwrap(), fit(&data, &other).unwrap());
}

#[test]
fn each_tree_is_grown_on_its_own_bootstrap() {
    let data = class_data(2);
    let cfg = ForestConfig::invariant(Task::Classification, 5, 4, 5.0, 3);
    let model = fit(&data, &cfg).unwrap();
    assert_eq!(model.trees().len(), 5);
    for (t, tree) in model.trees().iter().enumerate() {
        let rows = bootstrap_rows(&data, 3, t);
        assert_eq!(rows.len(), data.n_rows());
        let expected = grow(&data, &rows, &cfg.tree).unwrap();
        assert_eq!(tree, &expected, "tree {t}");
    }
}

#[test]
fn prediction_ignores_tree_order() {
    let data = class_data(3);
    for task in [Task::Classification, Task::Regression] {
        let data = match task {
            Task::Classification => data.clone(),
            Task::Regression => generate_regression(&RegGenConfig::new(2, vec![0.1, 2.0], 200, 3))
                .unwrap()
                .0,
        };
        let cfg = ForestConfig::invariant(task, 7, 4, 1.0, 4);
        let model = fit(&data, &cfg).unwrap();
        let mut trees = model.trees().to_vec();
        trees.reverse();
        trees.swap(1, 4);
        let shuffled = ForestModel::new(trees, task, data.n_features(), cfg).unwrap();
        assert_eq!(model.predict_mean(&data).unwrap(), shuffled.predict_mean(&data).unwrap());
        assert_eq!(model.predict(&data).unwrap(), shuffled.predict(&data).unwrap());
    }
}

#[test]
fn depth_one_invariant_tree_prefers_stable_feature() {
    // noise-free process: column 0 agrees with the label 70% of the time in
    // both environments, column 1 90% / 60%
    for seed in 0..5 {
        let mut cfg = ClassGenConfig::new(1, vec![0.1, 0.4], 2000, seed);
        cfg.noise_std = 0.0;
        let (data, _) = generate_classification(&cfg).unwrap();
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        let root = |lambda| match grow(&data, &rows, &TreeConfig::new(Task::Classification, 1, lambda)).unwrap() {
            irf_core::TreeNode::Internal { split, .. } => split.feature,
            leaf => panic!("unexpected leaf {leaf:?}"),
        };
        assert_eq!(root(0.0), 1, "seed {seed}");
        assert_eq!(root(10.0), 0, "seed {seed}");
    }
}

#[test]
fn selection_prefers_a_penalty_on_shifted_regression() {
    let mut positive = 0;
    for seed in 0..5 {
        let (data, _) =
            generate_regression(&RegGenConfig::new(5, vec![0.1, 2.0, 5.0], 500, seed)).unwrap();
        let train = data.select_envs(&[0, 1]).unwrap();
        let valid = data.select_envs(&[2]).unwrap();
        let proto = Protocol::new(Task::Regression, Scenario::S3);
        let sel = select_hyperparams(&train, &valid, &proto, seed).unwrap();
        if sel.lambda > 0.0 {
            positive += 1;
        }
    }
    assert!(positive >= 4, "lambda > 0 chosen in {positive}/5 seeds");
}
