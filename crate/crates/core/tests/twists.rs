use frobkit_core::arith::{kronecker, primes_up_to};
use frobkit_core::frobenius::{trace_naive, TraceEngine};
use frobkit_core::stats;
use frobkit_core::store::Catalog;

#[test]
fn twist_multiplies_traces_by_the_character() {
    let engine = TraceEngine::default();
    for entry in Catalog::bundled().entries() {
        let e = entry.curve();
        for d in [-1i64, 2, -3, 5, -7, 13] {
            let t = e.quadratic_twist(d).unwrap();
            for p in primes_up_to(1000) {
                if p < 5 || (d % p as i64) == 0 {
                    continue;
                }
                let (Some(r), Some(rt)) = (e.reduce_mod_p(p), t.reduce_mod_p(p)) else {
                    continue;
                };
                let chi = kronecker(d, p as i64).unwrap() as i64;
                assert_eq!(
                    engine.trace(&rt),
                    chi * trace_naive(&r),
                    "{} twisted by {d} at p={p}",
                    entry.label
                );
            }
        }
    }
}

#[test]
fn twist_pairs_share_every_frobenius_field() {
    let e = Catalog::bundled().resolve("37a1").unwrap();
    let t = e.quadratic_twist(-3).unwrap();
    let report = stats::coincidence_density(&e, &t, 10_000).unwrap();
    assert_eq!(report.estimate.final_ratio(), 1.0);
    assert!(report.eligible > 1000);
}
