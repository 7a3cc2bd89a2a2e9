//! Breaker arrangements: simple connected graphs whose nodes are DC busbars
//! and whose edges are DC circuit breakers, up to isomorphism.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Default upper bound on the breaker count of an enumeration.
pub const DEFAULT_MAX_BREAKERS: usize = 6;

/// Busbar graphs above this many nodes are rejected; canonical labelling is
/// brute force over node permutations.
const MAX_BUSBARS: usize = 9;

/// A breaker arrangement in canonical labelling, with its automorphism group.
#[derive(Clone, PartialEq, Eq)]
pub struct BreakerArrangement {
    busbars: usize,
    breakers: Vec<(u8, u8)>,
    automorphisms: Vec<Vec<u8>>,
}

impl BreakerArrangement {
    /// Builds the canonical form of an arbitrary labelled graph. Returns the
    /// arrangement and the relabelling `map` with `map[old] = new`.
    pub fn from_edges(busbars: usize, edges: &[(usize, usize)]) -> Result<(Self, Vec<u8>)> {
        if busbars == 0 || busbars > MAX_BUSBARS {
            return Err(Error::ConfigMismatch(format!("unsupported busbar count {busbars}")));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= busbars || b >= busbars || a == b {
                return Err(Error::ConfigMismatch(format!("bad breaker edge {a}-{b}")));
            }
            if !set.insert((a.min(b) as u8, a.max(b) as u8)) {
                return Err(Error::ConfigMismatch(format!("parallel breakers between {a} and {b}")));
            }
        }
        let edges: Vec<(u8, u8)> = set.into_iter().collect();
        if !connected(busbars, &edges) {
            return Err(Error::ConfigMismatch("breaker arrangement is not connected".into()));
        }
        let (canon, map) = canonical_form(busbars, &edges);
        Ok((Self::with_automorphisms(busbars, canon), map))
    }

    fn with_automorphisms(busbars: usize, breakers: Vec<(u8, u8)>) -> Self {
        let automorphisms = permutations(busbars)
            .into_iter()
            .filter(|p| relabel(&breakers, p) == breakers)
            .collect();
        BreakerArrangement {
            busbars,
            breakers,
            automorphisms,
        }
    }

    /// Star with `leaves` leaves around busbar 0.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges).expect("star is a valid arrangement").0
    }

    pub fn busbar_count(&self) -> usize {
        self.busbars
    }

    pub fn breaker_count(&self) -> usize {
        self.breakers.len()
    }

    pub fn breakers(&self) -> &[(u8, u8)] {
        &self.breakers
    }

    /// Node permutations (`perm[i]` is the image of busbar `i`) preserving the
    /// breaker set, identity first.
    pub fn automorphisms(&self) -> &[Vec<u8>] {
        &self.automorphisms
    }

    pub fn degree(&self, busbar: usize) -> usize {
        self.breakers
            .iter()
            .filter(|&&(a, b)| a as usize == busbar || b as usize == busbar)
            .count()
    }

    /// Stable textual code, e.g. `4n-01.02.03` for the three-breaker star.
    pub fn code(&self) -> String {
        let edges: Vec<String> = self.breakers.iter().map(|(a, b)| format!("{a}{b}")).collect();
        format!("{}n-{}", self.busbars, edges.join("."))
    }

    /// Parses [`BreakerArrangement::code`] output (any labelling).
    pub fn parse_code(code: &str) -> Result<(Self, Vec<u8>)> {
        let bad = || Error::ParseConfiguration(code.to_string());
        let (n, rest) = code.split_once("n-").ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        let mut edges = Vec::new();
        for pair in rest.split('.').filter(|p| !p.is_empty()) {
            let digits: Vec<usize> = pair
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect::<Option<_>>()
                .ok_or_else(bad)?;
            if digits.len() != 2 {
                return Err(bad());
            }
            edges.push((digits[0], digits[1]));
        }
        Self::from_edges(n, &edges)
    }
}

impl fmt::Debug for BreakerArrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

fn connected(n: usize, edges: &[(u8, u8)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            let (a, b) = (a as usize, b as usize);
            let v = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn relabel(edges: &[(u8, u8)], perm: &[u8]) -> Vec<(u8, u8)> {
    let mut out: Vec<(u8, u8)> = edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (perm[a as usize], perm[b as usize]);
            (x.min(y), x.max(y))
        })
        .collect();
    out.sort_unstable();
    out
}

/// Lexicographically smallest sorted edge list over all relabellings.
fn canonical_form(n: usize, edges: &[(u8, u8)]) -> (Vec<(u8, u8)>, Vec<u8>) {
    permutations(n)
        .into_iter()
        .map(|p| (relabel(edges, &p), p))
        .min()
        .expect("at least the identity permutation")
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<u8>> {
    fn extend(prefix: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v as u8);
                extend(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// All non-isomorphic simple connected graphs with exactly `n_cb` edges,
/// ordered by busbar count and then by canonical edge list. `n_cb = 0`
/// yields the single-busbar arrangement.
pub fn breaker_arrangements(n_cb: usize) -> Result<Vec<BreakerArrangement>> {
    breaker_arrangements_with_limit(n_cb, DEFAULT_MAX_BREAKERS)
}

pub fn breaker_arrangements_with_limit(n_cb: usize, limit: usize) -> Result<Vec<BreakerArrangement>> {
    if n_cb > limit || n_cb + 1 > MAX_BUSBARS {
        return Err(Error::BreakerLimit {
            requested: n_cb,
            limit: limit.min(MAX_BUSBARS - 1),
        });
    }
    // Grow edge by edge: every connected graph with m + 1 edges arises from
    // one with m edges by adding a chord or a pendant busbar.
    let mut layer: BTreeSet<(usize, Vec<(u8, u8)>)> = BTreeSet::from([(1, Vec::new())]);
    for _ in 0..n_cb {
        let mut next = BTreeSet::new();
        for (n, edges) in &layer {
            for a in 0..*n {
                for b in a + 1..*n {
                    if !edges.contains(&(a as u8, b as u8)) {
                        let mut grown = edges.clone();
                        grown.push((a as u8, b as u8));
                        next.insert((*n, canonical_form(*n, &grown).0));
                    }
                }
                let mut grown = edges.clone();
                grown.push((a as u8, *n as u8));
                next.insert((n + 1, canonical_form(n + 1, &grown).0));
            }
        }
        layer = next;
    }
    Ok(layer
        .into_iter()
        .map(|(n, edges)| BreakerArrangement::with_automorphisms(n, edges))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force: every labelled simple graph with `m` edges on up to
    /// `m + 1` nodes, connectivity-filtered and deduplicated by trying every
    /// relabelling against the already-found representatives.
    fn brute_force_count(m: usize) -> usize {
        let mut reps: Vec<(usize, Vec<(u8, u8)>)> = Vec::new();
        for n in 1..=m + 1 {
            let pairs: Vec<(u8, u8)> = (0..n as u8)
                .flat_map(|a| (a + 1..n as u8).map(move |b| (a, b)))
                .collect();
            let perms = permutations(n);
            for mask in 0u32..(1 << pairs.len()) {
                if mask.count_ones() as usize != m {
                    continue;
                }
                let edges: Vec<(u8, u8)> = (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
                if !connected(n, &edges) {
                    continue;
                }
                let iso = reps
                    .iter()
                    .any(|(rn, re)| *rn == n && perms.iter().any(|p| &relabel(&edges, p) == re));
                if !iso {
                    reps.push((n, edges));
                }
            }
        }
        reps.len()
    }

    #[test]
    fn three_breakers_give_star_line_delta() {
        let arr = breaker_arrangements(3).unwrap();
        assert_eq!(arr.len(), 3);
        let mut degrees: Vec<Vec<usize>> = arr
            .iter()
            .map(|a| {
                let mut d: Vec<usize> = (0..a.busbar_count()).map(|b| a.degree(b)).collect();
                d.sort_unstable();
                d
            })
            .collect();
        degrees.sort();
        assert_eq!(degrees, vec![vec![1, 1, 1, 3], vec![1, 1, 2, 2], vec![2, 2, 2]]);
    }

    #[test]
    fn zero_breakers_single_busbar() {
        let arr = breaker_arrangements(0).unwrap();
        assert_eq!(arr.len(), 1);
        assert_eq!(arr[0].busbar_count(), 1);
        assert_eq!(arr[0].automorphisms().len(), 1);
    }

    #[test]
    fn counts_match_brute_force() {
        for m in 0..=5 {
            assert_eq!(breaker_arrangements(m).unwrap().len(), brute_force_count(m), "m = {m}");
        }
        // Connected graphs by edge count: 1, 1, 1, 3, 5, 12, 30.
        assert_eq!(breaker_arrangements(4).unwrap().len(), 5);
        assert_eq!(breaker_arrangements(6).unwrap().len(), 30);
    }

    #[test]
    fn node_bound_and_limit() {
        for m in 0..=5 {
            for a in breaker_arrangements(m).unwrap() {
                assert!(a.busbar_count() <= m + 1);
                assert_eq!(a.breaker_count(), m);
            }
        }
        assert!(matches!(breaker_arrangements(7), Err(Error::BreakerLimit { .. })));
        assert!(breaker_arrangements_with_limit(9, 12).is_err());
    }

    #[test]
    fn automorphism_group_sizes() {
        assert_eq!(BreakerArrangement::star(3).automorphisms().len(), 6);
        assert_eq!(BreakerArrangement::star(5).automorphisms().len(), 120);
        let (tri, _) = BreakerArrangement::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(tri.automorphisms().len(), 6);
        let (path, _) = BreakerArrangement::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(path.automorphisms().len(), 2);
    }

    #[test]
    fn code_round_trip_and_relabel() {
        let (path, map) = BreakerArrangement::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        // The middle busbar becomes busbar 0 in canonical form.
        assert_eq!(map[1], 0);
        assert_eq!(path.code(), "3n-01.02");
        let (back, ident) = BreakerArrangement::parse_code(&path.code()).unwrap();
        assert_eq!(back, path);
        assert_eq!(ident, vec![0, 1, 2]);
        assert!(BreakerArrangement::from_edges(3, &[(0, 1)]).is_err());
        assert!(BreakerArrangement::from_edges(2, &[(0, 1), (1, 0)]).is_err());
    }
}
