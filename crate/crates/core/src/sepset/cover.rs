//! Exact minimum set cover by branch and bound.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;

pub(crate) enum Cover {
    /// Nothing left to cover.
    Empty,
    Infeasible,
    /// Sorted column indices.
    Selected(Vec<usize>),
}

/// Minimum-cardinality set of `allowed` columns hitting every row not
/// already hit by `forced`. Among minimum covers the lexicographically
/// smallest sorted index vector is returned.
pub(crate) fn min_cover(rows: &[FixedBitSet], allowed: &FixedBitSet, forced: &FixedBitSet) -> Cover {
    let mut seen = HashSet::new();
    let mut reduced: Vec<FixedBitSet> = Vec::new();
    for row in rows {
        if !row.is_disjoint(forced) {
            continue;
        }
        let mut r = row.clone();
        r.intersect_with(allowed);
        if r.is_clear() {
            return Cover::Infeasible;
        }
        if seen.insert(r.clone()) {
            reduced.push(r);
        }
    }
    if reduced.is_empty() {
        return Cover::Empty;
    }
    // A row containing another row is hit whenever the smaller one is.
    reduced.sort_by_key(|r| r.count_ones(..));
    let mut kept: Vec<FixedBitSet> = Vec::new();
    for r in reduced {
        if !kept.iter().any(|k| k.is_subset(&r)) {
            kept.push(r);
        }
    }
    let rows = kept;
    let all: Vec<usize> = (0..rows.len()).collect();

    let mut best = greedy(&rows, allowed).len();
    while best > 1 && cover_within(&rows, &all, allowed, best - 1).is_some() {
        best -= 1;
    }

    let mut chosen: Vec<usize> = Vec::with_capacity(best);
    let mut uncovered = all;
    while !uncovered.is_empty() {
        let start = chosen.last().map_or(0, |&c| c + 1);
        let budget = best - chosen.len() - 1;
        let next = allowed.ones().filter(|&c| c >= start).find(|&c| {
            let rest: Vec<usize> = uncovered.iter().copied().filter(|&r| !rows[r].contains(c)).collect();
            let mut later = allowed.clone();
            later.set_range(..c + 1, false);
            cover_within(&rows, &rest, &later, budget).is_some()
        });
        let c = next.expect("a cover of the minimum size exists");
        chosen.push(c);
        uncovered.retain(|&r| !rows[r].contains(c));
    }
    Cover::Selected(chosen)
}

fn greedy(rows: &[FixedBitSet], allowed: &FixedBitSet) -> Vec<usize> {
    let mut uncovered: Vec<usize> = (0..rows.len()).collect();
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let c = allowed
            .ones()
            .max_by_key(|&c| {
                let hits = uncovered.iter().filter(|&&r| rows[r].contains(c)).count();
                (hits, std::cmp::Reverse(c))
            })
            .expect("every row has an allowed column");
        chosen.push(c);
        uncovered.retain(|&r| !rows[r].contains(c));
    }
    chosen
}

/// Number of pairwise disjoint rows found greedily; any cover needs at least
/// this many columns.
fn packing_bound(rows: &[FixedBitSet], uncovered: &[usize], allowed: &FixedBitSet) -> usize {
    let mut used = FixedBitSet::with_capacity(allowed.len());
    let mut count = 0;
    for &r in uncovered {
        let mut live = rows[r].clone();
        live.intersect_with(allowed);
        if live.is_disjoint(&used) {
            used.union_with(&live);
            count += 1;
        }
    }
    count
}

/// Some cover of `uncovered` rows using at most `budget` allowed columns.
fn cover_within(
    rows: &[FixedBitSet],
    uncovered: &[usize],
    allowed: &FixedBitSet,
    budget: usize,
) -> Option<Vec<usize>> {
    if uncovered.is_empty() {
        return Some(Vec::new());
    }
    if budget == 0 || packing_bound(rows, uncovered, allowed) > budget {
        return None;
    }
    let pivot = uncovered
        .iter()
        .copied()
        .min_by_key(|&r| rows[r].intersection(allowed).count())?;
    let mut allowed = allowed.clone();
    let options: Vec<usize> = rows[pivot].intersection(&allowed).collect();
    for c in options {
        let rest: Vec<usize> = uncovered.iter().copied().filter(|&r| !rows[r].contains(c)).collect();
        if let Some(mut sub) = cover_within(rows, &rest, &allowed, budget - 1) {
            sub.push(c);
            return Some(sub);
        }
        // Covers using `c` have been ruled out for this subtree.
        allowed.set(c, false);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(q: usize, ones: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(q);
        for &i in ones {
            b.insert(i);
        }
        b
    }

    fn full(q: usize) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(q);
        b.insert_range(..);
        b
    }

    fn solve(q: usize, rows: &[&[usize]]) -> Vec<usize> {
        let rows: Vec<_> = rows.iter().map(|r| bits(q, r)).collect();
        match min_cover(&rows, &full(q), &FixedBitSet::with_capacity(q)) {
            Cover::Selected(s) => s,
            _ => panic!("expected a cover"),
        }
    }

    #[test]
    fn lexicographic_tie_break() {
        assert_eq!(solve(4, &[&[0, 1, 2, 3]]), vec![0]);
        // {1,2} and {0,3} both cover; {0,3} is smaller lexicographically.
        assert_eq!(solve(4, &[&[0, 1], &[0, 2], &[3, 1], &[3, 2]]), vec![0, 3]);
    }
}
