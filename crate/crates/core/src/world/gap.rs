//! Target-gap choice among vehicles of the lane the ego is moving into.

use crate::scalar::Real;

/// Picks `(leader, lagger)` among `(id, Δx)` pairs, Δx measured from the ego.
///
/// The gap bracketing the ego is accepted when its leader is at least `gap_min`
/// ahead and its lagger at least `gap_min` behind. Otherwise the bracketing gap and
/// its two neighbours are compared by half-width (the clearance the ego would have
/// at the gap midpoint) and the widest wins, the bracketing gap on ties. Vehicles
/// beyond `range` are ignored and open gap ends are bounded at `±range`.
pub fn choose_gap<T: Real>(others: &[(u32, T)], gap_min: T, range: T) -> (Option<u32>, Option<u32>) {
    let mut sorted: Vec<(u32, T)> = others
        .iter()
        .copied()
        .filter(|&(_, dx)| dx.abs() <= range)
        .collect();
    // descending Δx, id breaks ties so the result never depends on input order
    sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    let n = sorted.len();
    // boundary k of gap k is the leader, boundary k+1 the lagger
    let bound = |k: usize| -> (Option<u32>, T) {
        if k == 0 {
            (None, range)
        } else if k == n + 1 {
            (None, -range)
        } else {
            (Some(sorted[k - 1].0), sorted[k - 1].1)
        }
    };
    let gap = |k: usize| (bound(k).0, bound(k + 1).0);
    let half_width = |k: usize| (bound(k).1 - bound(k + 1).1) / T::c(2.0);

    let bracketing = sorted.iter().filter(|&&(_, dx)| dx >= T::zero()).count();
    let lead_clearance = bound(bracketing).1;
    let lag_clearance = -bound(bracketing + 1).1;
    if lead_clearance >= gap_min && lag_clearance >= gap_min {
        return gap(bracketing);
    }

    let mut best = bracketing;
    let mut candidates = vec![];
    if bracketing > 0 {
        candidates.push(bracketing - 1);
    }
    if bracketing < n {
        candidates.push(bracketing + 1);
    }
    for k in candidates {
        if half_width(k) > half_width(best) {
            best = k;
        }
    }
    gap(best)
}

/// Whether the gap around the ego already has `gap_min` clearance on both sides.
pub fn bracketing_gap_acceptable<T: Real>(others: &[(u32, T)], gap_min: T, range: T) -> bool {
    let lead = others
        .iter()
        .map(|&(_, dx)| dx)
        .filter(|&dx| dx >= T::zero())
        .fold(range, |a, b| a.min(b));
    let lag = others
        .iter()
        .map(|&(_, dx)| -dx)
        .filter(|&d| d > T::zero())
        .fold(range, |a, b| a.min(b));
    lead >= gap_min && lag >= gap_min
}
