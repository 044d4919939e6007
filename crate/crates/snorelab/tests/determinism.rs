use snorelab::config::ExperimentConfig;
use snorelab::ensemble::run_ensemble;
use snorelab::io::{trace_csv, Provenance};
use snorelab::build_problem;
use snorelab_core::{FidelityKind, Method};

fn csvs(cfg: &ExperimentConfig, threads: usize) -> Vec<String> {
    let problem = build_problem(&cfg.problem, cfg.ensemble.base_seed).unwrap();
    let seeds = cfg.seeds(8);
    let solver = cfg.solver_config(cfg.ensemble.base_seed).unwrap();
    run_ensemble(&problem, &solver, &seeds, threads)
        .unwrap()
        .iter()
        .map(|t| trace_csv(t, "constant", &Provenance::new(cfg.hash(), t.metadata.seed)))
        .collect()
}

#[test]
fn ensembles_do_not_depend_on_the_worker_count() {
    for method in [Method::SnoreProx, Method::Snore, Method::Red, Method::RedProx, Method::Pnp] {
        for kind in [FidelityKind::DenoiseQuadratic, FidelityKind::DeblurCirculant] {
            let mut cfg = ExperimentConfig::minimal(method, kind);
            cfg.solver.iters = 50;
            cfg.ensemble.base_seed = 2;
            assert_eq!(csvs(&cfg, 1), csvs(&cfg, 4), "{method} on {kind}");
        }
    }
}

#[test]
fn members_are_ordered_by_seed() {
    let cfg = ExperimentConfig::default();
    let problem = build_problem(&cfg.problem, 0).unwrap();
    let seeds: Vec<u64> = (10..20).collect();
    let traces = run_ensemble(&problem, &cfg.solver_config(0).unwrap(), &seeds, 3).unwrap();
    let got: Vec<u64> = traces.iter().map(|t| t.metadata.seed).collect();
    assert_eq!(got, seeds);
}
