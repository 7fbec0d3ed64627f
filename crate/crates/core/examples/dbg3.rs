// Corrected move: insert BEFORE the twin when the winner's copies share a
// row (orientation-reversing band), AFTER otherwise. Check face-profile
// invariance along orbits.
use rauzy_core::rng::stream_rng;
use rand::Rng;
use std::collections::BTreeSet;

#[derive(Clone)]
struct St { top: Vec<usize>, bottom: Vec<usize>, w: Vec<f64> }

fn step(st: &St) -> Option<St> {
    let t = *st.top.last().unwrap();
    let b = *st.bottom.last().unwrap();
    if t == b { return None; }
    let (wt, wb) = (st.w[t], st.w[b]);
    if wt == 0.0 || wb == 0.0 || wt == wb { return None; }
    let (winner, loser, loser_in_top) = if wt > wb { (t, b, false) } else { (b, t, true) };
    let mut top = st.top.clone();
    let mut bottom = st.bottom.clone();
    if (if loser_in_top { top.len() } else { bottom.len() }) == 1 { return None; }
    if loser_in_top { top.pop(); } else { bottom.pop(); }
    let winner_in_top = !loser_in_top;
    let comp_idx = if winner_in_top { top.len() - 1 } else { bottom.len() - 1 };
    let mut twin: Option<(bool, usize)> = None;
    'outer: for (is_top, row) in [(true, &top), (false, &bottom)] {
        for (i, &x) in row.iter().enumerate() {
            if x == winner && !(is_top == winner_in_top && i == comp_idx) {
                twin = Some((is_top, i));
                break 'outer;
            }
        }
    }
    let (twin_top, twin_idx) = twin.unwrap();
    let same_side = twin_top == winner_in_top;
    let pos = if same_side { twin_idx } else { twin_idx + 1 };
    if twin_top { top.insert(pos, loser); } else { bottom.insert(pos, loser); }
    let mut w = st.w.clone();
    w[winner] = wt.max(wb) - wt.min(wb);
    let total: f64 = w.iter().sum();
    for v in &mut w { *v /= total; }
    // defect repair
    let mut d = vec![0i64; w.len()];
    for &x in &top { d[x] += 1; }
    for &x in &bottom { d[x] -= 1; }
    if d.iter().any(|&x| x != 0) {
        let defect: f64 = (0..w.len()).map(|i| d[i] as f64 * w[i]).sum();
        if defect != 0.0 {
            let j = (0..w.len()).filter(|&i| d[i] != 0).max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap()).unwrap();
            let corr = defect / d[j] as f64;
            if w[j] - corr >= 0.0 { w[j] -= corr; }
        }
    }
    Some(St { top, bottom, w })
}

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
        for i in 0..p.saturating_sub(1) { pair(pt(end_id(true, i), true), pt(end_id(true, i + 1), false), true); }
        for j in 0..q.saturating_sub(1) { pair(pt(end_id(false, j), true), pt(end_id(false, j + 1), false), true); }
        pair(pt(end_id(true, 0), false), pt(end_id(false, 0), false), false);
        pair(pt(end_id(true, p - 1), true), pt(end_id(false, q - 1), true), false);
    }
    let nl = top.iter().chain(bottom.iter()).max().unwrap() + 1;
    let mut ends: Vec<Vec<(bool, usize)>> = vec![Vec::new(); nl];
    for (i, &l) in top.iter().enumerate() { ends[l].push((true, i)); }
    for (j, &l) in bottom.iter().enumerate() { ends[l].push((false, j)); }
    let mut band = vec![usize::MAX; total];
    for l in 0..nl {
        let [(s1, i1), (s2, i2)] = ends[l][..] else { panic!() };
        let (e1, e2) = (end_id(s1, i1), end_id(s2, i2));
        if s1 == s2 {
            band[pt(e1, false)] = pt(e2, true); band[pt(e2, true)] = pt(e1, false);
            band[pt(e1, true)] = pt(e2, false); band[pt(e2, false)] = pt(e1, true);
        } else {
            band[pt(e1, false)] = pt(e2, false); band[pt(e2, false)] = pt(e1, false);
            band[pt(e1, true)] = pt(e2, true); band[pt(e2, true)] = pt(e1, true);
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

fn main() {
    let shapes: Vec<(Vec<usize>, Vec<usize>)> = vec![
        (vec![5,1,2,1,0], vec![6,3,4,6,3,4,5,0,2]),   // f b c b a | g d e g d e f a c
        (vec![0,1,0,2], vec![2,3,1,3]),
        (vec![0,0,1], vec![1,2,2]),
        (vec![2,0,3,5,6,3,5,6], vec![4,2,1,4,1,0]),
    ];
    for (top, bottom) in &shapes {
        let base = face_profile(top, bottom);
        let mut drift = 0;
        let mut deaths = 0;
        let mut profiles: BTreeSet<Vec<usize>> = BTreeSet::new();
        profiles.insert(base.clone());
        let n = top.iter().chain(bottom.iter()).max().unwrap() + 1;
        for trial in 0..8u64 {
            let mut rng = stream_rng(90, trial);
            // random positive weights projected onto the switch constraint
            let mut st = St { top: top.clone(), bottom: bottom.clone(), w: vec![0.0; n] };
            let mut d = vec![0i64; n];
            for &x in top { d[x] += 1; }
            for &x in bottom { d[x] -= 1; }
            loop {
                let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let ts: f64 = (0..n).filter(|&i| d[i] > 0).map(|i| w[i]).sum();
                let bs: f64 = (0..n).filter(|&i| d[i] < 0).map(|i| w[i]).sum();
                if ts > 0.0 && bs > 0.0 {
                    let s = ts / bs;
                    for i in 0..n { if d[i] < 0 { w[i] *= s; } }
                } else if ts + bs > 0.0 { continue; }
                let total: f64 = w.iter().sum();
                for v in &mut w { *v /= total; }
                st.w = w;
                break;
            }
            for _ in 0..1500 {
                match step(&st) {
                    Some(next) => {
                        st = next;
                        let prof = face_profile(&st.top, &st.bottom);
                        if prof != base { drift += 1; }
                        profiles.insert(prof);
                    }
                    None => { deaths += 1; break; }
                }
            }
        }
        println!("{top:?} | {bottom:?}\n  base {base:?} drift {drift} deaths {deaths}/8 profiles {:?}", profiles);
    }
}
