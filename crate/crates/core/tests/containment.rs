//! Exact-tail containment on a larger random sample than the acceptance run.

mod common;

#[test]
fn random_lattice_models_stay_inside_every_bound() {
    let mut rng = common::rng(2000);
    let mut failures = Vec::new();
    let mut checks = 0;
    for k in 0..200 {
        let m = if k % 2 == 0 {
            common::random_unit_model(&mut rng, (50, 2000))
        } else {
            common::random_model(&mut rng, (50, 2000))
        };
        checks += common::containment(&m, &format!("model#{k}"), &mut failures);
    }
    assert!(failures.is_empty(), "{} of {checks}: {:#?}", failures.len(), &failures[..failures.len().min(10)]);
}

#[test]
fn eta_models_stay_inside_every_bound() {
    let mut failures = Vec::new();
    for v in [0.1, 0.25, 1.0, 4.0] {
        for n in [50u64, 400, 2000] {
            let m = sharp_tails::SumModel::eta(v, n).unwrap();
            common::containment(&m, &format!("eta({v}, {n})"), &mut failures);
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
