//! Candidate configurations: a breaker arrangement plus an assignment of every
//! hub cable and converter to one of its busbars.
//!
//! Without pruning every arrangement contributes `N_DC^(N_cab + N_conv)`
//! assignments. With pruning, configurations that leave a busbar dead (no
//! element and fewer than three breakers) are dropped, and a single
//! representative is emitted per symmetry class. The symmetry group is
//! generated by arrangement automorphisms and by permutations of
//! interchangeable elements (same kind, rating, length and destination zone).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::arrangement::{breaker_arrangements_with_limit, BreakerArrangement, DEFAULT_MAX_BREAKERS};
use crate::error::{Error, Result};
use crate::model::{EdgeId, EdgeKind, NetworkSpec};
use crate::power::Power;

/// Environment variable overriding [`DEFAULT_MAX_RAW`].
pub const MAX_RAW_ENV: &str = "GRIDSHORT_MAX_RAW";

/// Ceiling on the unpruned configuration count of a single enumeration.
pub const DEFAULT_MAX_RAW: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_breakers: usize,
    pub max_raw: u128,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits {
            max_breakers: DEFAULT_MAX_BREAKERS,
            max_raw: DEFAULT_MAX_RAW,
        }
    }
}

impl EnumerationLimits {
    /// Defaults, with the raw ceiling taken from `GRIDSHORT_MAX_RAW` if set.
    pub fn from_env() -> Self {
        let mut limits = Self::default();
        if let Some(v) = std::env::var(MAX_RAW_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            limits.max_raw = v;
        }
        limits
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PruneRules {
    /// Drop configurations with a busbar that has no element and fewer than
    /// three breaker endpoints.
    pub dead_busbars: bool,
    /// Emit one representative per symmetry class.
    pub symmetry: bool,
}

impl PruneRules {
    pub const ALL: PruneRules = PruneRules {
        dead_busbars: true,
        symmetry: true,
    };
    pub const NONE: PruneRules = PruneRules {
        dead_busbars: false,
        symmetry: false,
    };

    pub fn is_off(&self) -> bool {
        !self.dead_busbars && !self.symmetry
    }
}

impl Default for PruneRules {
    fn default() -> Self {
        PruneRules::ALL
    }
}

/// The hub's assignable elements, in the order of the spec's edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HubElements {
    pub ids: Vec<EdgeId>,
    pub kinds: Vec<EdgeKind>,
    /// AC zone each element leads to (`None` for hub-internal AC terminals).
    pub zones: Vec<Option<String>>,
    pub lengths: Vec<Option<Power>>,
    /// Interchangeable groups of element indices, each sorted ascending.
    pub classes: Vec<Vec<usize>>,
}

impl HubElements {
    pub fn from_spec(spec: &NetworkSpec) -> Self {
        let elements = spec.assignable_elements();
        let mut by_key: BTreeMap<(EdgeKind, Option<String>, Option<Power>, Option<Power>), Vec<usize>> =
            BTreeMap::new();
        let mut out = HubElements {
            ids: Vec::new(),
            kinds: Vec::new(),
            zones: Vec::new(),
            lengths: Vec::new(),
            classes: Vec::new(),
        };
        for (i, e) in elements.iter().enumerate() {
            let zone = spec.element_zone(e);
            // A converter's identity also includes which AC node it feeds.
            let anchor = match e.kind {
                EdgeKind::Converter => {
                    let hub = spec.hub_endpoint(e).expect("assignable element");
                    Some(e.other(hub).0.clone())
                }
                _ => zone.clone(),
            };
            by_key.entry((e.kind, anchor, e.capacity, e.length)).or_default().push(i);
            out.ids.push(e.id.clone());
            out.kinds.push(e.kind);
            out.zones.push(zone);
            out.lengths.push(e.length);
        }
        let mut classes: Vec<Vec<usize>> = by_key.into_values().collect();
        classes.sort();
        out.classes = classes;
        out
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|e| e.0 == id)
    }

    pub fn cables(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == EdgeKind::Cable)
    }

    pub fn converters(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == EdgeKind::Converter)
    }
}

/// One candidate design. `assignment[i]` is the busbar hosting the `i`-th
/// element of [`HubElements`].
#[derive(Clone, PartialEq, Eq)]
pub struct Configuration {
    pub arrangement: Arc<BreakerArrangement>,
    pub assignment: Vec<u8>,
}

impl Configuration {
    pub fn new(arrangement: Arc<BreakerArrangement>, assignment: Vec<u8>) -> Result<Self> {
        if let Some(&b) = assignment.iter().find(|&&b| b as usize >= arrangement.busbar_count()) {
            return Err(Error::ConfigMismatch(format!(
                "busbar {b} does not exist in arrangement {}",
                arrangement.code()
            )));
        }
        Ok(Configuration {
            arrangement,
            assignment,
        })
    }

    /// Every element on one busbar, no breakers.
    pub fn single_busbar(elements: &HubElements) -> Self {
        let arr = breaker_arrangements_with_limit(0, 0).expect("zero breakers").remove(0);
        Configuration {
            arrangement: Arc::new(arr),
            assignment: vec![0; elements.len()],
        }
    }

    /// One breaker per cable: converters share busbar 0 and every cable sits
    /// on its own leaf busbar behind a breaker.
    pub fn fully_selective(elements: &HubElements) -> Self {
        let cables: Vec<usize> = elements.cables().collect();
        let arrangement = Arc::new(BreakerArrangement::star(cables.len()));
        let mut assignment = vec![0u8; elements.len()];
        for (leaf, &c) in cables.iter().enumerate() {
            assignment[c] = (leaf + 1) as u8;
        }
        Configuration {
            arrangement,
            assignment,
        }
    }

    pub fn breaker_count(&self) -> usize {
        self.arrangement.breaker_count()
    }

    pub fn busbar_count(&self) -> usize {
        self.arrangement.busbar_count()
    }

    pub fn assignment_map(&self, elements: &HubElements) -> BTreeMap<EdgeId, usize> {
        elements
            .ids
            .iter()
            .cloned()
            .zip(self.assignment.iter().map(|&b| b as usize))
            .collect()
    }

    /// Elements hosted by each busbar.
    pub fn busbar_contents(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.busbar_count()];
        for (e, &b) in self.assignment.iter().enumerate() {
            out[b as usize].push(e);
        }
        out
    }

    pub fn has_dead_busbar(&self) -> bool {
        has_dead_busbar(&self.arrangement, &self.assignment)
    }

    /// Canonical text form `<arrangement>/<busbar>:<elements>;...`, e.g.
    /// `2n-01/0:C1,L1,L3;1:C2,L2,L4`.
    pub fn canonical_string(&self, elements: &HubElements) -> String {
        let busbars: Vec<String> = self
            .busbar_contents()
            .iter()
            .enumerate()
            .map(|(b, members)| {
                let names: Vec<&str> = members.iter().map(|&e| elements.ids[e].as_str()).collect();
                format!("{b}:{}", names.join(","))
            })
            .collect();
        format!("{}/{}", self.arrangement.code(), busbars.join(";"))
    }

    /// Inverse of [`Configuration::canonical_string`]. Non-canonical busbar
    /// labellings are accepted and relabelled.
    pub fn parse(text: &str, elements: &HubElements) -> Result<Self> {
        let bad = || Error::ParseConfiguration(text.to_string());
        let (code, rest) = text.split_once('/').ok_or_else(bad)?;
        let (arrangement, relabel) = BreakerArrangement::parse_code(code)?;
        let mut assignment: Vec<Option<u8>> = vec![None; elements.len()];
        for part in rest.split(';').filter(|p| !p.is_empty()) {
            let (bus, names) = part.split_once(':').ok_or_else(bad)?;
            let bus: usize = bus.trim().parse().map_err(|_| bad())?;
            if bus >= arrangement.busbar_count() {
                return Err(bad());
            }
            for name in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                let e = elements.index_of(name).ok_or_else(|| Error::DanglingElement(name.to_string()))?;
                if assignment[e].replace(relabel[bus]).is_some() {
                    return Err(bad());
                }
            }
        }
        let assignment = assignment
            .into_iter()
            .enumerate()
            .map(|(e, b)| b.ok_or_else(|| Error::ConfigMismatch(format!("element {} is unassigned", elements.ids[e]))))
            .collect::<Result<Vec<u8>>>()?;
        Configuration::new(Arc::new(arrangement), assignment)
    }

    /// Image under a symmetry: `automorphism` relabels busbars and
    /// `element_perm` (which must permute within classes) moves elements,
    /// the element at `i` going to position `element_perm[i]`.
    pub fn transformed(&self, automorphism: &[u8], element_perm: &[usize]) -> Self {
        let mut assignment = vec![0u8; self.assignment.len()];
        for (i, &b) in self.assignment.iter().enumerate() {
            assignment[element_perm[i]] = automorphism[b as usize];
        }
        Configuration {
            arrangement: self.arrangement.clone(),
            assignment,
        }
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{:?}", self.arrangement.code(), self.assignment)
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(&format_args!("{self:?}"))
    }
}

fn has_dead_busbar(arrangement: &BreakerArrangement, assignment: &[u8]) -> bool {
    let mut used = vec![false; arrangement.busbar_count()];
    for &b in assignment {
        used[b as usize] = true;
    }
    (0..used.len()).any(|b| !used[b] && arrangement.degree(b) < 3)
}

/// Eq.-style closed form: sum over arrangements of `N_DC^(N_elements)`.
pub fn count_closed_form(spec: &NetworkSpec, n_cb: usize) -> Result<u128> {
    closed_form_for(HubElements::from_spec(spec).len(), n_cb, DEFAULT_MAX_BREAKERS)
}

fn closed_form_for(elements: usize, n_cb: usize, limit: usize) -> Result<u128> {
    breaker_arrangements_with_limit(n_cb, limit)?
        .iter()
        .try_fold(0u128, |acc, a| {
            (a.busbar_count() as u128)
                .checked_pow(elements as u32)
                .and_then(|n| acc.checked_add(n))
                .ok_or_else(|| Error::Overflow("configuration count".into()))
        })
}

/// Streams every configuration with `n_cb` breakers in a stable order.
pub fn enumerate_configurations(spec: &NetworkSpec, n_cb: usize, prune: PruneRules) -> Result<ConfigStream> {
    enumerate_with_limits(spec, n_cb, prune, EnumerationLimits::default())
}

pub fn enumerate_with_limits(
    spec: &NetworkSpec,
    n_cb: usize,
    prune: PruneRules,
    limits: EnumerationLimits,
) -> Result<ConfigStream> {
    let elements = HubElements::from_spec(spec);
    if !prune.symmetry {
        let count = closed_form_for(elements.len(), n_cb, limits.max_breakers)?;
        if count > limits.max_raw {
            return Err(Error::RawCountCeiling {
                count,
                ceiling: limits.max_raw,
            });
        }
    }
    let arrangements = breaker_arrangements_with_limit(n_cb, limits.max_breakers)?
        .into_iter()
        .map(Arc::new)
        .collect();
    Ok(ConfigStream::new(arrangements, elements, prune))
}

/// Deterministic, restartable configuration stream.
#[derive(Clone, Debug)]
pub struct ConfigStream {
    arrangements: Vec<Arc<BreakerArrangement>>,
    elements: HubElements,
    prune: PruneRules,
    current: usize,
    cursor: Option<Cursor>,
}

#[derive(Clone, Debug)]
enum Cursor {
    /// Mixed-radix odometer over raw assignments.
    Raw(Vec<u8>),
    /// Per-class nondecreasing busbar sequences, classes concatenated.
    Multiset(Vec<u8>),
}

impl ConfigStream {
    fn new(arrangements: Vec<Arc<BreakerArrangement>>, elements: HubElements, prune: PruneRules) -> Self {
        let mut stream = ConfigStream {
            arrangements,
            elements,
            prune,
            current: 0,
            cursor: None,
        };
        stream.cursor = stream.start_cursor();
        stream
    }

    pub fn elements(&self) -> &HubElements {
        &self.elements
    }

    pub fn arrangements(&self) -> &[Arc<BreakerArrangement>] {
        &self.arrangements
    }

    /// Rewinds to the first configuration.
    pub fn restart(&mut self) {
        self.current = 0;
        self.cursor = self.start_cursor();
    }

    fn start_cursor(&self) -> Option<Cursor> {
        self.arrangements.get(self.current)?;
        let zeros = vec![0u8; self.elements.len()];
        Some(if self.prune.symmetry {
            Cursor::Multiset(zeros)
        } else {
            Cursor::Raw(zeros)
        })
    }

    /// Element order used by the multiset cursor: classes concatenated.
    fn class_order(&self) -> impl Iterator<Item = &[usize]> {
        self.elements.classes.iter().map(Vec::as_slice)
    }

    fn assignment_from_multiset(&self, digits: &[u8]) -> Vec<u8> {
        let mut assignment = vec![0u8; self.elements.len()];
        let mut pos = 0;
        for class in self.class_order() {
            for &e in class {
                assignment[e] = digits[pos];
                pos += 1;
            }
        }
        assignment
    }

    /// True if no automorphism maps the multiset assignment to a
    /// lexicographically smaller one.
    fn is_canonical(&self, arrangement: &BreakerArrangement, digits: &[u8]) -> bool {
        let mut image = vec![0u8; digits.len()];
        for aut in arrangement.automorphisms().iter().skip(1) {
            let mut pos = 0;
            for class in self.class_order() {
                let slice = &mut image[pos..pos + class.len()];
                for (dst, &src) in slice.iter_mut().zip(&digits[pos..pos + class.len()]) {
                    *dst = aut[src as usize];
                }
                slice.sort_unstable();
                pos += class.len();
            }
            if image.as_slice() < digits {
                return false;
            }
        }
        true
    }

    /// Advances the cursor; returns false once the arrangement is exhausted.
    fn step(&mut self) -> bool {
        let radix = self.arrangements[self.current].busbar_count() as u8;
        let class_bounds: Vec<(usize, usize)> = {
            let mut start = 0;
            self.class_order()
                .map(|c| {
                    let b = (start, start + c.len());
                    start += c.len();
                    b
                })
                .collect()
        };
        match self.cursor.as_mut() {
            None => false,
            Some(Cursor::Raw(digits)) => {
                for d in digits.iter_mut().rev() {
                    *d += 1;
                    if *d < radix {
                        return true;
                    }
                    *d = 0;
                }
                false
            }
            Some(Cursor::Multiset(digits)) => {
                for &(lo, hi) in class_bounds.iter().rev() {
                    let class = &mut digits[lo..hi];
                    if let Some(i) = (0..class.len()).rev().find(|&i| class[i] + 1 < radix) {
                        let v = class[i] + 1;
                        class[i..].iter_mut().for_each(|d| *d = v);
                        return true;
                    }
                    class.iter_mut().for_each(|d| *d = 0);
                }
                false
            }
        }
    }

    fn current_candidate(&self) -> Option<Configuration> {
        let arrangement = &self.arrangements[self.current];
        let assignment = match self.cursor.as_ref()? {
            Cursor::Raw(digits) => digits.clone(),
            Cursor::Multiset(digits) => {
                if !self.is_canonical(arrangement, digits) {
                    return None;
                }
                self.assignment_from_multiset(digits)
            }
        };
        if self.prune.dead_busbars && has_dead_busbar(arrangement, &assignment) {
            return None;
        }
        Some(Configuration {
            arrangement: arrangement.clone(),
            assignment,
        })
    }
}

impl Iterator for ConfigStream {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        loop {
            self.cursor.as_ref()?;
            let candidate = self.current_candidate();
            if !self.step() {
                self.current += 1;
                self.cursor = self.start_cursor();
            }
            if candidate.is_some() {
                return candidate;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::arrangement::breaker_arrangements;
    use crate::cases::{build_test_case, TestCase};

    fn small() -> NetworkSpec {
        build_test_case(TestCase::Small).0
    }

    #[test]
    fn element_classes_of_small_case() {
        let el = HubElements::from_spec(&small());
        let names: Vec<Vec<&str>> = el
            .classes
            .iter()
            .map(|c| c.iter().map(|&i| el.ids[i].as_str()).collect())
            .collect();
        assert_eq!(names, vec![vec!["C1", "C2"], vec!["L1", "L2"], vec!["L3"], vec!["L4"]]);
    }

    #[test]
    fn unpruned_count_is_closed_form() {
        let spec = small();
        assert_eq!(count_closed_form(&spec, 1).unwrap(), 64);
        assert_eq!(count_closed_form(&spec, 0).unwrap(), 1);
        assert_eq!(count_closed_form(&spec, 3).unwrap(), 2 * 4096 + 729);
        for n_cb in 0..=3 {
            let n = enumerate_configurations(&spec, n_cb, PruneRules::NONE).unwrap().count() as u128;
            assert_eq!(n, count_closed_form(&spec, n_cb).unwrap());
        }
        assert_eq!(enumerate_configurations(&spec, 0, PruneRules::ALL).unwrap().count(), 1);
    }

    #[test]
    fn raw_ceiling_refuses() {
        let limits = EnumerationLimits {
            max_breakers: 6,
            max_raw: 100,
        };
        let err = enumerate_with_limits(&small(), 2, PruneRules::NONE, limits).unwrap_err();
        assert!(matches!(err, Error::RawCountCeiling { count: 729, .. }));
        assert!(enumerate_with_limits(&small(), 2, PruneRules::ALL, limits).is_ok());
        assert!(matches!(
            enumerate_configurations(&small(), 7, PruneRules::ALL),
            Err(Error::BreakerLimit { .. })
        ));
    }

    #[test]
    fn stream_restarts_identically() {
        let mut s = enumerate_configurations(&small(), 2, PruneRules::ALL).unwrap();
        let first: Vec<Configuration> = s.by_ref().collect();
        s.restart();
        let second: Vec<Configuration> = s.collect();
        assert_eq!(first, second);
        assert!(!first.is_empty());
    }

    /// Orbit oracle: closes each raw assignment under generator moves
    /// (busbar automorphisms and transpositions inside element classes) and
    /// counts orbits free of dead busbars.
    fn orbit_count(spec: &NetworkSpec, n_cb: usize) -> usize {
        let el = HubElements::from_spec(spec);
        let mut total = 0;
        for arr in breaker_arrangements(n_cb).unwrap() {
            let n = arr.busbar_count() as u32;
            let mut seen = BTreeSet::new();
            let size = (n as usize).pow(el.len() as u32);
            for code in 0..size {
                let mut x = code;
                let raw: Vec<u8> = (0..el.len())
                    .map(|_| {
                        let d = (x % n as usize) as u8;
                        x /= n as usize;
                        d
                    })
                    .collect();
                if seen.contains(&raw) {
                    continue;
                }
                let mut stack = vec![raw.clone()];
                seen.insert(raw.clone());
                while let Some(a) = stack.pop() {
                    let mut moves = Vec::new();
                    for aut in arr.automorphisms() {
                        moves.push(a.iter().map(|&b| aut[b as usize]).collect::<Vec<u8>>());
                    }
                    for class in &el.classes {
                        for w in class.windows(2) {
                            let mut b = a.clone();
                            b.swap(w[0], w[1]);
                            moves.push(b);
                        }
                    }
                    for m in moves {
                        if seen.insert(m.clone()) {
                            stack.push(m);
                        }
                    }
                }
                if !has_dead_busbar(&arr, &raw) {
                    total += 1;
                }
            }
        }
        total
    }

    #[test]
    fn pruned_stream_is_a_system_of_representatives() {
        let spec = small();
        for n_cb in 0..=3 {
            let pruned: Vec<Configuration> = enumerate_configurations(&spec, n_cb, PruneRules::ALL).unwrap().collect();
            assert_eq!(pruned.len(), orbit_count(&spec, n_cb), "n_cb = {n_cb}");
            assert!(pruned.iter().all(|c| !c.has_dead_busbar()));
        }
    }

    #[test]
    fn dead_busbar_rule_keeps_pass_through_hubs() {
        let spec = small();
        let el = HubElements::from_spec(&spec);
        // Three-breaker star with an empty centre is kept.
        let star = Arc::new(BreakerArrangement::star(3));
        let cfg = Configuration::new(star.clone(), vec![1, 2, 1, 2, 3, 3]).unwrap();
        assert!(!cfg.has_dead_busbar());
        // An empty leaf is dead.
        let cfg = Configuration::new(star, vec![0, 2, 0, 2, 3, 3]).unwrap();
        assert!(cfg.has_dead_busbar());
        let only_dead = enumerate_with_limits(
            &spec,
            1,
            PruneRules {
                dead_busbars: true,
                symmetry: false,
            },
            EnumerationLimits::default(),
        )
        .unwrap()
        .count();
        assert_eq!(only_dead, 64 - 2);
        assert_eq!(el.len(), 6);
    }

    #[test]
    fn canonical_string_round_trip() {
        let spec = small();
        let el = HubElements::from_spec(&spec);
        for cfg in enumerate_configurations(&spec, 3, PruneRules::ALL).unwrap() {
            let text = cfg.canonical_string(&el);
            assert_eq!(Configuration::parse(&text, &el).unwrap(), cfg, "{text}");
        }
        let fs = Configuration::fully_selective(&el);
        assert_eq!(fs.canonical_string(&el), "5n-01.02.03.04/0:C1,C2;1:L1;2:L2;3:L3;4:L4");
        assert!(Configuration::parse("2n-01/0:C1,X9;1:C2", &el).is_err());
        assert!(Configuration::parse("2n-01/0:C1", &el).is_err());
    }
}
