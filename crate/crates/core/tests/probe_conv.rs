use tdnns_core::harness::{run_convergence, run_stability, run_interp_rates, StudyConfig, StudyKind};

#[test]
fn probe_everything() {
    let mut cfg = StudyConfig::default();
    cfg.case = "TRIG".into();
    cfg.k = 1;
    cfg.levels = vec![1, 2, 4];
    cfg.kind = StudyKind::Solve;
    let t = run_convergence(&cfg).unwrap();
    println!("=== convergence TRIG k=1 ===\n{}", t.to_csv());

    cfg.kind = StudyKind::Interp;
    let t = run_interp_rates(&cfg).unwrap();
    println!("=== interp TRIG k=1 ===\n{}", t.to_csv());

    cfg.kind = StudyKind::Stability;
    cfg.levels = vec![1, 2];
    let t = run_stability(&cfg).unwrap();
    println!("=== stability TRIG k=1 ===\n{}", t.to_csv());

    let mut cfg2 = StudyConfig::default();
    cfg2.case = "TRIG-MIXED".into();
    cfg2.k = 2;
    cfg2.levels = vec![1, 2];
    cfg2.kind = StudyKind::Solve;
    let t = run_convergence(&cfg2).unwrap();
    println!("=== convergence TRIG-MIXED k=2 ===\n{}", t.to_csv());
}
