// Is the face profile invariant along induction orbits? (Splitting must
// preserve complementary regions.)
use rauzy_core::*;
use rauzy_core::weights::WeightVector;
use rauzy_core::rng::stream_rng;
use std::collections::BTreeSet;

fn face_profile(top: &[usize], bottom: &[usize]) -> Vec<usize> {
    let p = top.len();
    let q = bottom.len();
    let end_id = |is_top: bool, i: usize| -> usize { if is_top { i } else { p + i } };
    let pt = |e: usize, right: bool| -> usize { 2 * e + right as usize };
    let total = 2 * (p + q);
    let mut sw = vec![usize::MAX; total];
    let mut cusp = vec![false; total];
    {
        let mut pair = |a: usize, b: usize, c: bool| {
            sw[a] = b; sw[b] = a;
            if c { cusp[a] = true; cusp[b] = true; }
        };
        for i in 0..p.saturating_sub(1) {
            pair(pt(end_id(true, i), true), pt(end_id(true, i + 1), false), true);
        }
        for j in 0..q.saturating_sub(1) {
            pair(pt(end_id(false, j), true), pt(end_id(false, j + 1), false), true);
        }
        pair(pt(end_id(true, 0), false), pt(end_id(false, 0), false), false);
        pair(pt(end_id(true, p - 1), true), pt(end_id(false, q - 1), true), false);
    }
    let n_labels = top.iter().chain(bottom.iter()).max().unwrap() + 1;
    let mut ends: Vec<Vec<(bool, usize)>> = vec![Vec::new(); n_labels];
    for (i, &l) in top.iter().enumerate() { ends[l].push((true, i)); }
    for (j, &l) in bottom.iter().enumerate() { ends[l].push((false, j)); }
    let mut band = vec![usize::MAX; total];
    for l in 0..n_labels {
        let [(s1, i1), (s2, i2)] = ends[l][..] else { panic!() };
        let (e1, e2) = (end_id(s1, i1), end_id(s2, i2));
        if s1 == s2 {
            band[pt(e1, false)] = pt(e2, true);
            band[pt(e2, true)] = pt(e1, false);
            band[pt(e1, true)] = pt(e2, false);
            band[pt(e2, false)] = pt(e1, true);
        } else {
            band[pt(e1, false)] = pt(e2, false);
            band[pt(e2, false)] = pt(e1, false);
            band[pt(e1, true)] = pt(e2, true);
            band[pt(e2, true)] = pt(e1, true);
        }
    }
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

fn rows(ex: &NonclassicalExchange) -> (Vec<usize>, Vec<usize>) {
    (
        ex.top().iter().map(|b| b.index()).collect(),
        ex.bottom().iter().map(|b| b.index()).collect(),
    )
}

fn main() {
    for text in [
        "f b c b a | g d e g d e f a c",          // complete candidate
        "a b | b a",                                // classical torus
        "a b c | c b a",
        "a b a c | c d b d",                        // mortal n=4
    ] {
        let ex = NonclassicalExchange::parse(text).unwrap();
        let (t, b) = rows(&ex);
        let base = face_profile(&t, &b);
        let poly = CarriedPolytope::of(&ex).unwrap();
        let mut drift = 0;
        let mut profiles: BTreeSet<Vec<usize>> = BTreeSet::new();
        profiles.insert(base.clone());
        for trial in 0..6u64 {
            let w: WeightVector<f64> = poly.sample(&mut stream_rng(50, trial));
            let trace = expand(&ex, &w, 1200);
            for k in 1..=trace.len() {
                let (t, b) = rows(trace.exchange_at(k));
                let prof = face_profile(&t, &b);
                if prof != base { drift += 1; }
                profiles.insert(prof);
            }
        }
        println!("{text}\n  base {base:?}; drifting steps: {drift}; profiles seen: {profiles:?}");
    }
}
