use std::f64::consts::PI;

use actuator_core::maxmin::{pgda, PgdaConfig};
use actuator_core::model::{assemble_system, HeatModelConfig};
use actuator_core::neural::Activation;
use actuator_core::riccati::{feedback_gain, worst_case_value};
use actuator_core::simulate::{simulate_closed_loop, SimConfig};
use actuator_core::surrogate::dataset::{build_riccati_dataset, interior_axis, read_riccati_csv, solve_at, tensor_grid, write_riccati_csv};
use actuator_core::surrogate::{StructuredSurrogate, Surrogate, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn system() -> actuator_core::model::LtiSystem {
    assemble_system(&HeatModelConfig::new(3, 1, 0.005)).unwrap()
}

#[test]
fn dataset_train_bundle_optimize() {
    let sys = system();
    let grid = tensor_grid(&interior_axis(23, 24.0), 1);
    let data = build_riccati_dataset(&sys, &grid).unwrap();
    assert_eq!(data.len(), 23);

    let mut csv = Vec::new();
    write_riccati_csv(&data, &mut csv).unwrap();
    let data = read_riccati_csv(csv.as_slice()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = StructuredSurrogate::init(3, 1, 16, Activation::Softplus, &mut rng);
    let cfg = TrainConfig {
        iterations: 1500,
        learning_rate: 1e-2,
        record_every: 100,
        ..TrainConfig::default()
    };
    let history = net.train(&data, &cfg).unwrap();
    assert!(history.last() < 1e-2 * history.first());

    let bundle = Surrogate::Structured(net.clone());
    let back = Surrogate::from_json(&bundle.to_json().unwrap()).unwrap();
    assert_eq!(back, bundle);

    for r in [0.4, 1.5, 2.7] {
        let exact = worst_case_value(&solve_at(&sys, &[r]).unwrap()).unwrap().0;
        let approx = net.worst_case_value(&[r]).unwrap();
        assert!((approx - exact).abs() < 0.05 * exact, "r = {r}: {approx} vs {exact}");
    }

    let sol = pgda(&back, &PgdaConfig { iterations: 200, ..PgdaConfig::reference(3, 1) }).unwrap();
    assert_eq!(sol.history.len(), 201);
    assert!(sol.z0.norm() <= 1.0 + 1e-12);
    assert!((0.0..=PI).contains(&sol.r[0]));
    assert!(back.value(&sol.z0, &sol.r).unwrap().is_finite());
}

#[test]
fn feedback_never_slows_the_decay() {
    let sys = system();
    let r = [PI / 2.0];
    let b = sys.input_matrix(&r).unwrap();
    let gain = feedback_gain(&solve_at(&sys, &r).unwrap(), &b, &sys.r).unwrap();
    let zero = actuator_core::numkit::DenseMatrix::zeros(1, 3);
    let cfg = SimConfig { t_final: 0.7, ..SimConfig::default() };
    let z0 = [0.6, -0.5, 0.3];
    let closed = simulate_closed_loop(&sys.a, &b, &gain, &z0, &cfg).unwrap();
    let open = simulate_closed_loop(&sys.a, &b, &zero, &z0, &cfg).unwrap();
    let last = |t: &actuator_core::simulate::Trajectory| t.states.last().unwrap().norm();
    assert!(last(&closed) <= last(&open));
    assert!((last(&open) - (0.36f64 * (-1.4f64).exp() + 0.25 * (-5.6f64).exp() + 0.09 * (-12.6f64).exp()).sqrt()).abs() < 1e-9);
}
