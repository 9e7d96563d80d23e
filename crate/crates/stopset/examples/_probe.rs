use std::time::Instant;
use stopset::exhaust::{ktse, sse_bit, sse_frame, KtseOptions, SearchLimits};
use stopset::simulate::{brute_force_patterns, PatternQuery};
use stopset::tanner::{builtin_code, BuiltinCode};

fn main() {
    let h = builtin_code(&BuiltinCode::Regular { dv: 3, dc: 6, n: 30 }, 0).unwrap();
    let lim6 = SearchLimits { t: 6, ..Default::default() };

    for bit in [0usize, 2] {
        let t0 = Instant::now();
        let rep = sse_bit(&h, bit, &lim6).unwrap();
        eprintln!("bit {bit}: w={} sets={} exh={} nodes={} in {:?}", rep.w_min, rep.x_min.len(), rep.exhaustive, rep.stats.nodes, t0.elapsed());
        let (w, sets) = brute_force_patterns(&h, 6, PatternQuery::Stopping, Some(bit)).unwrap();
        eprintln!("  oracle: w={w} count={}", sets.len());
    }
    let t0 = Instant::now();
    let rep = sse_frame(&h, &lim6).unwrap();
    eprintln!("frame t6: w={} sets={} exh={} in {:?}", rep.w_min, rep.x_min.len(), rep.exhaustive, t0.elapsed());
    let (w, sets) = brute_force_patterns(&h, 6, PatternQuery::Stopping, None).unwrap();
    eprintln!("  oracle: w={w} count={}", sets.len());

    let t0 = Instant::now();
    let rep1 = ktse(&h, 1, &lim6, &KtseOptions::default()).unwrap();
    eprintln!("ktse1 t6: w={} sets={} exh={} in {:?}", rep1.w_min, rep1.x_min.len(), rep1.exhaustive, t0.elapsed());
    let (w, sets) = brute_force_patterns(&h, 6, PatternQuery::KOut(1), None).unwrap();
    eprintln!("  oracle: w={w} count={}", sets.len());

    let t0 = Instant::now();
    let rep2 = ktse(&h, 2, &lim6, &KtseOptions::default()).unwrap();
    eprintln!("ktse2 t6: w={} sets={} exh={} in {:?}", rep2.w_min, rep2.x_min.len(), rep2.exhaustive, t0.elapsed());
    let (w, sets) = brute_force_patterns(&h, 6, PatternQuery::KOut(2), None).unwrap();
    eprintln!("  oracle: w={w} count={}", sets.len());

    let g = builtin_code(&BuiltinCode::Golay23, 0).unwrap();
    let t0 = Instant::now();
    let rep = sse_frame(&g, &SearchLimits { t: 4, ..Default::default() }).unwrap();
    eprintln!("golay frame t4: w={} sets={} exh={} in {:?}", rep.w_min, rep.x_min.len(), rep.exhaustive, t0.elapsed());
}
