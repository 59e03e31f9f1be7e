use frobkit_core::arith::primes_up_to;
use frobkit_core::curve::WeierstrassCurve;
use frobkit_core::frobenius::{trace_bsgs, trace_naive};
use std::time::Instant;
fn main() {
    let e = WeierstrassCurve::new([0, 0, 1, -1, 0]).unwrap();
    let all = primes_up_to(1 << 21);
    for k in 10..=21 {
        let ps: Vec<u64> = all
            .iter()
            .copied()
            .filter(|&p| p >= 1 << (k - 1) && p < 1 << k)
            .take(200)
            .collect();
        let rs: Vec<_> = ps.iter().filter_map(|&p| e.reduce_mod_p(p)).collect();
        let s = Instant::now();
        let mut a = 0;
        for r in &rs {
            a += trace_naive(r);
        }
        let tn = s.elapsed() / rs.len() as u32;
        let s = Instant::now();
        let mut b = 0;
        for r in &rs {
            b += trace_bsgs(r);
        }
        let tb = s.elapsed() / rs.len() as u32;
        assert_eq!(a, b);
        println!("2^{k}: naive {tn:?} bsgs {tb:?}");
    }
}
