// Face-tracing completeness check for single-switch tracks + search.
use rauzy_core::*;
use rauzy_core::weights::WeightVector;
use rauzy_core::rng::stream_rng;
use std::collections::BTreeSet;
use rand::Rng;

// edge-point encoding: end = (side, index); points: 2*end_id + {0=L,1=R}
fn face_profile(top: &[usize], bottom: &[usize]) -> Vec<usize> {
    let p = top.len();
    let q = bottom.len();
    let end_id = |is_top: bool, i: usize| -> usize { if is_top { i } else { p + i } };
    let pt = |e: usize, right: bool| -> usize { 2 * e + right as usize };
    let total = 2 * (p + q);
    // switch pairing with cusp marks
    let mut sw = vec![usize::MAX; total];
    let mut cusp = vec![false; total];
    let mut pair_sw = |a: usize, b: usize, is_cusp: bool, cusp_arr: &mut Vec<bool>, sw_arr: &mut Vec<usize>| {
        sw_arr[a] = b; sw_arr[b] = a;
        if is_cusp { cusp_arr[a] = true; cusp_arr[b] = true; }
    };
    for i in 0..p.saturating_sub(1) {
        pair_sw(pt(end_id(true, i), true), pt(end_id(true, i + 1), false), true, &mut cusp, &mut sw);
    }
    for j in 0..q.saturating_sub(1) {
        pair_sw(pt(end_id(false, j), true), pt(end_id(false, j + 1), false), true, &mut cusp, &mut sw);
    }
    pair_sw(pt(end_id(true, 0), false), pt(end_id(false, 0), false), false, &mut cusp, &mut sw);
    pair_sw(pt(end_id(true, p - 1), true), pt(end_id(false, q - 1), true), false, &mut cusp, &mut sw);
    // band pairing: for each label, its two ends
    let n_labels = top.iter().chain(bottom.iter()).max().unwrap() + 1;
    let mut ends: Vec<Vec<(bool, usize)>> = vec![Vec::new(); n_labels];
    for (i, &l) in top.iter().enumerate() { ends[l].push((true, i)); }
    for (j, &l) in bottom.iter().enumerate() { ends[l].push((false, j)); }
    let mut band = vec![usize::MAX; total];
    for l in 0..n_labels {
        let [(s1, i1), (s2, i2)] = ends[l][..] else { panic!("label twice") };
        let (e1, e2) = (end_id(s1, i1), end_id(s2, i2));
        if s1 == s2 {
            // same side: flip (orientation-reversing identification)
            band[pt(e1, false)] = pt(e2, true);
            band[pt(e2, true)] = pt(e1, false);
            band[pt(e1, true)] = pt(e2, false);
            band[pt(e2, false)] = pt(e1, true);
        } else {
            // opposite sides: straight
            band[pt(e1, false)] = pt(e2, false);
            band[pt(e2, false)] = pt(e1, false);
            band[pt(e1, true)] = pt(e2, true);
            band[pt(e2, true)] = pt(e1, true);
        }
    }
    // faces: cycles of band∘switch; cusp count per face
    let mut seen = vec![false; total];
    let mut profile = Vec::new();
    for start in 0..total {
        if seen[start] { continue; }
        let mut cusps = 0;
        let mut x = start;
        loop {
            seen[x] = true;
            let y = sw[x];
            seen[y] = true;
            if cusp[x] { cusps += 1; }
            x = band[y];
            if x == start { break; }
        }
        profile.push(cusps);
    }
    profile.sort();
    profile
}

fn labels(row: &[usize]) -> Vec<String> {
    row.iter().map(|&i| ((b'a' + i as u8) as char).to_string()).collect()
}

fn main() {
    // sanity: classical 2-IET -> one face, 2 cusps (torus bigon)
    assert_eq!(face_profile(&[0, 1], &[1, 0]), vec![2]);
    // aa|bb -> annulus + two monogons
    assert_eq!(face_profile(&[0, 0], &[1, 1]), vec![0, 1, 1]);
    println!("sanity ok");

    // search n=7 for complete genus-2 shapes: profile [3,3,3,3]
    let n = 7usize;
    let mut rng = stream_rng(424242, 0);
    let mut complete: BTreeSet<String> = BTreeSet::new();
    let mut tried = 0u64;
    for _ in 0..2_000_000u64 {
        let mut seq: Vec<usize> = (0..n).flat_map(|i| [i, i]).collect();
        for i in (1..seq.len()).rev() {
            let j = rng.gen_range(0..=i);
            seq.swap(i, j);
        }
        let split = rng.gen_range(1..seq.len());
        let (t, b) = (seq[..split].to_vec(), seq[split..].to_vec());
        tried += 1;
        if face_profile(&t, &b) != vec![3, 3, 3, 3] { continue; }
        let (tl, bl) = (labels(&t), labels(&b));
        let Ok(ex) = NonclassicalExchange::new(&tl, &bl) else { continue };
        if ex.is_classical() { continue; }
        complete.insert(ex.key());
        if complete.len() >= 12 { break; }
    }
    println!("tried {tried}, complete found {}", complete.len());
    for key in complete.iter().take(12) {
        // quick dynamical screen
        let ex = NonclassicalExchange::parse(key).unwrap();
        let poly = CarriedPolytope::of(&ex).unwrap();
        let mut deaths = 0;
        let mut min_active = 99;
        let mut stages_tot = 0usize;
        for trial in 0..10u64 {
            let mut r = stream_rng(777, trial);
            let w: WeightVector<f64> = poly.sample(&mut r);
            let trace = expand(&ex, &w, 2000);
            if trace.termination() != TraceEnd::MaxSteps { deaths += 1; continue; }
            let mut late: BTreeSet<usize> = BTreeSet::new();
            for rec in &trace.steps()[1500..] { late.insert(rec.winner.index()); }
            min_active = min_active.min(late.len());
            stages_tot += stopping_decomposition(&trace, 100.0).stages();
        }
        println!("dim={} deaths={deaths}/10 min_late_active={min_active} stages/trial={:.1}  {key}",
                 poly.dimension(), stages_tot as f64 / 10.0);
    }
}
