/// Pointwise-smallest log-concave sequence dominating `tail`.
///
/// This is the upper concave majorant of `ln tail[k]` over the indices, found
/// by one monotone-chain pass. Zero entries count as `-inf`: zeros between
/// positive entries are lifted onto the chord, leading and trailing zeros stay.
pub fn log_concave_hull(tail: &[f64]) -> Vec<f64> {
    let points: Vec<(usize, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (k, v.ln()))
        .collect();
    let mut out = vec![0.0; tail.len()];
    if points.is_empty() {
        return out;
    }

    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(points.len());
    for &p in &points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or below the chord from a to p
            let cross = (b.0 - a.0) as f64 * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) as f64;
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    for w in hull.windows(2) {
        let ((i, yi), (j, yj)) = (w[0], w[1]);
        let slope = (yj - yi) / (j - i) as f64;
        for (k, slot) in out.iter_mut().enumerate().take(j).skip(i + 1) {
            *slot = (yi + slope * (k - i) as f64).exp().max(tail[k]);
        }
    }
    for &(k, _) in &hull {
        out[k] = tail[k];
    }
    out
}
