use dgldpc::*;
use std::time::Instant;
fn main() {
    for s in [reproduce::gldpc_search().unwrap(), reproduce::dgldpc_search().unwrap()] {
        let t = Instant::now();
        let o = evolve::optimize(&s, Exec::Parallel).unwrap();
        let rej = o.candidates.iter().filter(|c| c.threshold.is_none()).count();
        println!(
            "{} best {:.6} bound {:.6} rate {:.6} rejected {}/{} {:?}",
            s.name,
            o.report.q_star,
            o.report.q_bound,
            o.best.design_rate(),
            rej,
            o.candidates.len(),
            t.elapsed()
        );
        for g in o.history.iter().step_by(25) {
            println!("  {:?}", g);
        }
    }
}
