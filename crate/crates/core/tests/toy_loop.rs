//! Input optimization and the outer loop on the toy flare simulator.

use surropt_core::driver::{collect_initial, run, DriverConfig, StoppingSpec};
use surropt_core::inputopt::{optimize_inputs, MultiStartConfig};
use surropt_core::simbench::ToyFlareSim;
use surropt_core::surrogate::train;
use surropt_core::{BoundsSpec, Dataset, ObjectiveSpec, Simulator, SobolSequence, Standardizer, TrainConfig};

/// Best point of a one-off 1e6-point Sobol sweep (stream index 849002),
/// scored with the standardizer of the first 400 Sobol points.
const REACHABLE_INDEX: u64 = 849_002;
const REACHABLE_U: [f64; 13] = [
    0.9782915115356445,
    0.4274778366088867,
    0.9695634841918945,
    0.09343624114990234,
    0.5109872817993164,
    0.9010534286499023,
    0.9353647232055664,
    0.2824983596801758,
    0.814183235168457,
    0.30396556854248047,
    0.48169612884521484,
    0.986851692199707,
    0.49213123321533203,
];
const REACHABLE_LOSS: f64 = 0.008350428109479339;

fn toy_initial(n: usize) -> Dataset {
    collect_initial(&ToyFlareSim::new(), n, &mut SobolSequence::new(13).unwrap())
        .unwrap()
        .0
}

fn spec() -> ObjectiveSpec {
    ObjectiveSpec::flare(BoundsSpec::unit(13))
}

#[test]
fn flare_targets_are_reachable() {
    let mut seq = SobolSequence::new(13).unwrap();
    seq.seek(REACHABLE_INDEX).unwrap();
    assert_eq!(seq.next_point().unwrap(), REACHABLE_U.to_vec());
    let sim = ToyFlareSim::new();
    let scoring = Standardizer::fit(&toy_initial(400)).unwrap();
    let loss = spec()
        .loss_physical(&scoring, &sim.evaluate(&REACHABLE_U).unwrap(), &REACHABLE_U)
        .unwrap();
    assert!((loss - REACHABLE_LOSS).abs() < 1e-12, "{loss}");
    assert!(loss < 0.05);
}

#[test]
fn multistart_beats_training_incumbent_and_respects_bounds() {
    let data = toy_initial(300);
    let (model, _) = train(&data, &TrainConfig::default()).unwrap();
    let spec = spec();
    let t = spec.standardized_targets(model.standardizer());
    let st = model.standardizer();
    let incumbent = data
        .inputs()
        .iter()
        .map(|x| {
            spec.loss(&t, &model.forward_std(&st.standardize_input(x)).unwrap(), x)
                .unwrap()
        })
        .fold(f64::INFINITY, f64::min);

    let config = MultiStartConfig::default();
    let result = optimize_inputs(
        &model,
        &spec,
        &config,
        &mut SobolSequence::with_offset(13, 977).unwrap(),
    )
    .unwrap();
    assert!(
        result.best_loss <= incumbent,
        "{} vs incumbent {incumbent}",
        result.best_loss
    );
    assert!(spec.bounds.max_violation(&result.best_x) <= 1e-2);
    for o in &result.all_finals {
        assert!(spec.bounds.contains(&o.x));
    }
    let min_final = result.all_finals.iter().map(|o| o.loss).fold(f64::INFINITY, f64::min);
    assert_eq!(result.best_loss, min_final);

    let single = optimize_inputs(
        &model,
        &spec,
        &MultiStartConfig {
            num_starts: 1,
            ..config.clone()
        },
        &mut SobolSequence::with_offset(13, 977).unwrap(),
    )
    .unwrap();
    assert!(result.best_loss <= single.best_loss);

    let again = optimize_inputs(
        &model,
        &spec,
        &config,
        &mut SobolSequence::with_offset(13, 977).unwrap(),
    )
    .unwrap();
    assert_eq!(again, result);
}

#[test]
fn loop_bookkeeping_on_the_toy() {
    let sim = ToyFlareSim::new();
    let spec = spec();
    let config = DriverConfig {
        initial_samples: 120,
        train: TrainConfig {
            max_epochs: 60,
            ..TrainConfig::default()
        },
        multistart: MultiStartConfig {
            num_starts: 20,
            num_steps: 200,
            ..MultiStartConfig::default()
        },
        stopping: StoppingSpec {
            max_iterations: 6,
            convergence_epsilon: 0.0,
            ..StoppingSpec::default()
        },
        seed: 5,
    };
    let out = run(&sim, &spec, &config).unwrap();
    assert_eq!(out.iterations(), 6);
    assert_eq!(sim.query_count(), 120 + 6);
    assert_eq!(out.dataset.len(), 126);
    assert_eq!(out.total_queries(), 126);

    let seeds: Vec<u64> = out.log.records.iter().map(|r| r.train.seed).collect();
    for w in seeds.windows(2) {
        assert_ne!(w[0], w[1]);
    }

    let losses: Vec<f64> = (0..out.dataset.len())
        .map(|i| {
            let (x, y, _) = out.dataset.record(i);
            spec.loss_physical(&out.scoring, y, x).unwrap()
        })
        .collect();
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(out.best_loss, min);
    assert_eq!(losses[out.best_index], min);
    assert_eq!(out.x_best, out.dataset.inputs()[out.best_index]);

    let mut envelope = f64::INFINITY;
    for r in &out.log.records {
        envelope = envelope.min(r.true_loss.unwrap());
        assert!(r.best_so_far <= out.log.best_initial_loss);
        assert!(r.best_so_far <= envelope);
    }
}
