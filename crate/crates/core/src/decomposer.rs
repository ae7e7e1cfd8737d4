//! XOR-of-subcubes decomposition of a binary vector, i.e. an MCX product for the
//! shift operator `W_b`.
//!
//! The control-string tree is searched layer by layer (layer `l` = strings with
//! `l` controlled positions). From the first layer holding a valid node, the
//! search returns its full nodes, else its semi-full nodes (fullness ≥ 3/4),
//! else the `0` halves of its complementary cuts. A greedy independent set of
//! those candidates is XORed out of `b` and the search repeats until `b = 0`.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bitcore::{complementary_halves, BinaryVector, Control, ControlString};
use crate::error::{Error, Result};

/// Largest qubit count the layer search handles (`3^16` subcube counters).
pub const MAX_DECOMPOSE_QUBITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CandidateKind {
    Full,
    SemiFull,
    Complementary,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub control: ControlString,
    /// Fullness of `control` with respect to the vector that produced the set.
    pub fullness: Ratio<u64>,
    /// The `1` half of the cut, for complementary candidates.
    pub partner: Option<ControlString>,
}

/// Candidates from a single tree layer, sorted by descending fullness and then
/// lexicographically (`'0' < '1' < 'I'`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub layer: u32,
    pub kind: CandidateKind,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    /// Wraps explicit control strings, scoring them against `b`.
    pub fn from_controls(b: &BinaryVector, kind: CandidateKind, controls: &[ControlString]) -> Result<Self> {
        let layer = controls.first().map_or(0, |c| c.layer());
        if controls.iter().any(|c| c.layer() != layer || c.n() != b.n()) {
            return Err(Error::ControlString("candidates must share one layer and n".into()));
        }
        let mut candidates: Vec<_> = controls
            .iter()
            .map(|c| Candidate {
                control: *c,
                fullness: crate::bitcore::fullness(b, c),
                partner: None,
            })
            .collect();
        sort_candidates(&mut candidates);
        Ok(Self { layer, kind, candidates })
    }

    pub fn controls(&self) -> impl Iterator<Item = &ControlString> {
        self.candidates.iter().map(|c| &c.control)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| b.fullness.cmp(&a.fullness).then_with(|| a.control.cmp(&b.control)));
}

/// Per-gate weight for decomposition costs. Only [`UnitCost`] is used by the pipeline.
pub trait GateCost: Sync {
    fn gate_cost(&self, control: &ControlString) -> u64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UnitCost;

impl GateCost for UnitCost {
    fn gate_cost(&self, _: &ControlString) -> u64 {
        1
    }
}

/// Control strings whose expansions XOR to the decomposed vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    n: u32,
    controls: Vec<ControlString>,
    /// Number of strings chosen in each selection round, in order.
    rounds: Vec<usize>,
}

impl Decomposition {
    pub fn empty(n: u32) -> Self {
        Self {
            n,
            controls: Vec::new(),
            rounds: Vec::new(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn controls(&self) -> &[ControlString] {
        &self.controls
    }

    /// `M`, the number of MCX gates.
    pub fn gate_count(&self) -> usize {
        self.controls.len()
    }

    pub fn weighted_cost(&self, weights: &dyn GateCost) -> u64 {
        self.controls.iter().map(|c| weights.gate_cost(c)).sum()
    }

    /// The strings grouped by selection round.
    pub fn rounds(&self) -> impl Iterator<Item = &[ControlString]> {
        let mut start = 0;
        self.rounds.iter().map(move |&len| {
            let r = &self.controls[start..start + len];
            start += len;
            r
        })
    }

    /// XOR of all expansions; equals the input vector.
    pub fn xor_of_expansions(&self) -> BinaryVector {
        let mut acc = BinaryVector::zeros(self.n).expect("valid n");
        for c in &self.controls {
            acc.toggle_cube(c);
        }
        acc
    }
}

/// Reusable buffers for the layer search over all `3^n` control strings.
///
/// Strings are addressed by their ternary index (see
/// [`ControlString::ternary_index`]); `counts[t]` is the number of ones of the
/// current vector inside subcube `t` and `layers[t]` its number of controls.
struct LayerSearch {
    n: u32,
    counts: Vec<u32>,
    layers: Vec<u8>,
    /// `3^k` for the digit of bit `k` (position `n-1-k`).
    pow3: Vec<usize>,
}

impl LayerSearch {
    fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_DECOMPOSE_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let total = 3usize.pow(n);
        let pow3 = (0..=n).map(|k| 3usize.pow(k)).collect();
        // layer[d·3^{k} + rest] for the leading digit d: controls add one
        let mut layers = vec![0u8; total];
        let mut len = 1;
        for _ in 0..n {
            for i in 0..len {
                let l = layers[i];
                layers[i] = l + 1;
                layers[len + i] = l + 1;
                layers[2 * len + i] = l;
            }
            len *= 3;
        }
        Ok(Self {
            n,
            counts: vec![0; total],
            layers,
            pow3,
        })
    }

    fn fill_counts(&mut self, b: &BinaryVector) {
        fn fill(counts: &mut [u32], b: &BinaryVector, base: usize, width: u32) {
            if width <= 6 {
                // whole subtree inside one word
                fill_word(counts, b.words()[base >> 6] >> (base & 63), width);
                return;
            }
            let third = counts.len() / 3;
            let (lo, rest) = counts.split_at_mut(third);
            let (hi, both) = rest.split_at_mut(third);
            fill(lo, b, base, width - 1);
            fill(hi, b, base + (1 << (width - 1)), width - 1);
            for ((s, x), y) in both.iter_mut().zip(lo.iter()).zip(hi.iter()) {
                *s = x + y;
            }
        }
        // `bits` holds the 2^width cells starting at bit 0.
        fn fill_word(counts: &mut [u32], bits: u64, width: u32) {
            if width == 0 {
                counts[0] = (bits & 1) as u32;
                return;
            }
            let third = counts.len() / 3;
            let (lo, rest) = counts.split_at_mut(third);
            let (hi, both) = rest.split_at_mut(third);
            fill_word(lo, bits, width - 1);
            fill_word(hi, bits >> (1 << (width - 1)), width - 1);
            for ((s, x), y) in both.iter_mut().zip(lo.iter()).zip(hi.iter()) {
                *s = x + y;
            }
        }
        assert_eq!(b.n(), self.n);
        fill(&mut self.counts, b, 0, self.n);
    }

    /// Complementary cuts whose `0` half has a ternary index in `spent` are not
    /// admissible.
    fn find(&mut self, b: &BinaryVector, spent: &HashSet<u64>) -> Result<CandidateSet> {
        if b.is_zero() {
            return Err(Error::NothingToDecompose);
        }
        self.fill_counts(b);
        let n = self.n;
        let counts = &self.counts;
        let layers = &self.layers;
        let size = |layer: u8| 1u32 << (n - layer as u32);

        let mut min_full = u8::MAX;
        let mut min_semi = u8::MAX;
        for (&cnt, &layer) in counts.iter().zip(layers) {
            if layer < min_full {
                let s = size(layer);
                if cnt == s {
                    min_full = layer;
                } else if layer < min_semi && 4 * cnt >= 3 * s {
                    min_semi = layer;
                }
            }
        }
        // any nonzero vector has a full node at layer n
        debug_assert!(min_full as u32 <= n);
        let target = min_full.min(min_semi);

        // Complementary cuts on layers above `target`. A cut (c0, c1) of parent
        // P needs count(P) = |c0|, i.e. P exactly half full.
        let mut compl_layer = target;
        let mut found: Vec<(u64, Ratio<u64>, Option<ControlString>, ControlString)> = Vec::new();
        for (idx, (&cnt, &layer)) in counts.iter().zip(layers).enumerate() {
            if layer + 1 >= target || layer + 1 > compl_layer || 2 * cnt != size(layer) {
                continue;
            }
            let parent = ControlString::from_ternary(n, idx as u64).expect("index in range");
            let mut free = parent.free_mask();
            while free != 0 {
                let bit = free & free.wrapping_neg();
                free &= free - 1;
                let k = bit.trailing_zeros() as usize;
                let q = n as usize - 1 - k;
                let c0 = parent.with(q, Control::Zero);
                let idx0 = idx - 2 * self.pow3[k];
                if spent.contains(&(idx0 as u64)) || !complementary_halves(b, &c0, bit as usize) {
                    continue;
                }
                if layer + 1 < compl_layer {
                    compl_layer = layer + 1;
                    found.clear();
                }
                let s0 = size(layer + 1);
                found.push((
                    idx0 as u64,
                    Ratio::new(counts[idx0] as u64, s0 as u64),
                    Some(parent.with(q, Control::One)),
                    c0,
                ));
            }
        }

        let kind = if compl_layer < target {
            CandidateKind::Complementary
        } else {
            let full = min_full == target;
            let s = size(target);
            for (idx, (&cnt, &layer)) in counts.iter().zip(layers).enumerate() {
                let hit = layer == target && if full { cnt == s } else { cnt < s && 4 * cnt >= 3 * s };
                if hit {
                    let c = ControlString::from_ternary(n, idx as u64).expect("index in range");
                    found.push((idx as u64, Ratio::new(cnt as u64, s as u64), None, c));
                }
            }
            if full {
                CandidateKind::Full
            } else {
                CandidateKind::SemiFull
            }
        };
        // one entry per c0; several cut positions may share it
        found.sort_by_key(|f| f.0);
        found.dedup_by_key(|f| f.0);
        let mut candidates: Vec<_> = found
            .into_iter()
            .map(|(_, fullness, partner, control)| Candidate {
                control,
                fullness,
                partner,
            })
            .collect();
        sort_candidates(&mut candidates);
        Ok(CandidateSet {
            layer: compl_layer as u32,
            kind,
            candidates,
        })
    }
}

thread_local! {
    static SEARCH: RefCell<Option<LayerSearch>> = const { RefCell::new(None) };
}

/// Runs `f` with this thread's cached search buffers for `n` qubits.
fn with_search<R>(n: u32, f: impl FnOnce(&mut LayerSearch) -> Result<R>) -> Result<R> {
    SEARCH.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().map_or(true, |s| s.n != n) {
            *slot = Some(LayerSearch::new(n)?);
        }
        f(slot.as_mut().expect("just filled"))
    })
}

/// Candidate control strings from the first tree layer that holds a valid node.
pub fn find_next_control_strings(b: &BinaryVector) -> Result<CandidateSet> {
    with_search(b.n(), |s| s.find(b, &HashSet::new()))
}

/// Greedy independent set: scan candidates in their sorted order and keep each
/// one whose subcube is disjoint from everything kept so far.
pub fn max_independent_set(cands: &CandidateSet) -> Vec<ControlString> {
    let mut kept: Vec<ControlString> = Vec::new();
    for c in cands.controls() {
        if kept.iter().all(|k| k.is_disjoint(c)) {
            kept.push(*c);
        }
    }
    kept
}

/// Decomposes `b` into control strings whose expansions XOR to `b`.
pub fn decompose(b: &BinaryVector) -> Result<Decomposition> {
    if b.is_zero() {
        return Ok(Decomposition::empty(b.n()));
    }
    with_search(b.n(), |search| {
        let mut residue = b.clone();
        let mut out = Decomposition::empty(b.n());
        // Toggling a cut half can make it complementary to another sibling;
        // reusing it would cancel the earlier gate and cycle forever.
        let mut spent = HashSet::new();
        let cap = 4 * b.popcount() as usize + 4;
        while !residue.is_zero() {
            if out.rounds.len() >= cap {
                return Err(Error::NoProgress(cap));
            }
            let cands = search.find(&residue, &spent)?;
            let selected = max_independent_set(&cands);
            if cands.kind == CandidateKind::Complementary {
                spent.extend(selected.iter().map(ControlString::ternary_index));
            }
            for c in &selected {
                residue.toggle_cube(c);
            }
            out.rounds.push(selected.len());
            out.controls.extend(selected);
        }
        // complementary rounds can overshoot; never do worse than one gate per one
        if out.gate_count() as u64 > b.popcount() {
            out = naive(b);
        }
        Ok(out)
    })
}

/// One fully controlled string per set bit, in a single round.
fn naive(b: &BinaryVector) -> Decomposition {
    let controls: Vec<_> = b
        .ones_iter()
        .map(|i| ControlString::point(b.n(), i).expect("index below 2^n"))
        .collect();
    Decomposition {
        n: b.n(),
        rounds: vec![controls.len()],
        controls,
    }
}

/// `|W_b|`: number of MCX gates in the decomposition of `b`.
pub fn cost(b: &BinaryVector) -> Result<usize> {
    Ok(decompose(b)?.gate_count())
}

/// Memoizing front end for [`decompose`], shareable across threads.
#[derive(Default)]
pub struct Decomposer {
    cache: Mutex<HashMap<BinaryVector, Arc<Decomposition>>>,
}

impl Decomposer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn decompose(&self, b: &BinaryVector) -> Result<Arc<Decomposition>> {
        if let Some(d) = self.cache.lock().unwrap().get(b) {
            return Ok(d.clone());
        }
        let d = Arc::new(decompose(b)?);
        self.cache.lock().unwrap().entry(b.clone()).or_insert_with(|| d.clone());
        Ok(d)
    }

    pub fn cost(&self, b: &BinaryVector) -> Result<usize> {
        Ok(self.decompose(b)?.gate_count())
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::{fullness, is_complementary_cut};

    fn bv(s: &str) -> BinaryVector {
        s.parse().unwrap()
    }

    fn strings(d: &[ControlString]) -> Vec<String> {
        d.iter().map(|c| c.to_string()).collect()
    }

    /// Direct layer-by-layer scan with the bitcore primitives.
    fn naive_find(b: &BinaryVector) -> (u32, CandidateKind, Vec<String>) {
        let n = b.n();
        let all: Vec<_> = ControlString::all(n).collect();
        for layer in 0..=n {
            let here: Vec<_> = all.iter().filter(|c| c.layer() == layer).collect();
            let full: Vec<_> = here.iter().filter(|c| fullness(b, c) == Ratio::from_integer(1)).collect();
            if !full.is_empty() {
                return (layer, CandidateKind::Full, sorted(b, full.into_iter().map(|c| **c)));
            }
            let semi: Vec<_> = here.iter().filter(|c| fullness(b, c) >= Ratio::new(3, 4)).collect();
            if !semi.is_empty() {
                return (layer, CandidateKind::SemiFull, sorted(b, semi.into_iter().map(|c| **c)));
            }
            let mut compl = Vec::new();
            for c in &here {
                for q in 0..n as usize {
                    if c.symbol(q) == Control::Zero {
                        let c1 = c.with(q, Control::One);
                        if is_complementary_cut(b, c, &c1).unwrap() {
                            compl.push(**c);
                            break;
                        }
                    }
                }
            }
            if !compl.is_empty() {
                return (layer, CandidateKind::Complementary, sorted(b, compl.into_iter()));
            }
        }
        unreachable!("layer n always has full nodes");
    }

    fn sorted(b: &BinaryVector, cs: impl Iterator<Item = ControlString>) -> Vec<String> {
        let mut v: Vec<_> = cs.map(|c| (fullness(b, &c), c)).collect();
        v.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        v.into_iter().map(|(_, c)| c.to_string()).collect()
    }

    #[test]
    fn find_examples() {
        let s = find_next_control_strings(&bv("11001100")).unwrap();
        assert_eq!((s.layer, s.kind), (1, CandidateKind::Full));
        assert_eq!(strings(&s.controls().copied().collect::<Vec<_>>()), ["I0I"]);

        let s = find_next_control_strings(&bv("11001000")).unwrap();
        assert_eq!((s.layer, s.kind), (1, CandidateKind::SemiFull));
        assert_eq!(s.candidates.len(), 1);
        assert_eq!(s.candidates[0].control.to_string(), "I0I");
        assert_eq!(s.candidates[0].fullness, Ratio::new(3, 4));

        let s = find_next_control_strings(&bv("10010110")).unwrap();
        assert_eq!((s.layer, s.kind), (1, CandidateKind::Complementary));
        assert_eq!(s.candidates[0].control.to_string(), "0II");
        assert_eq!(s.candidates[0].partner.unwrap().to_string(), "1II");

        assert!(matches!(
            find_next_control_strings(&BinaryVector::zeros(3).unwrap()),
            Err(Error::NothingToDecompose)
        ));
    }

    #[test]
    fn find_matches_naive_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=7u32 {
            for _ in 0..150 {
                let density: f64 = rng.gen_range(0.05..0.95);
                let bits: Vec<bool> = (0..1 << n).map(|_| rng.gen_bool(density)).collect();
                let b = BinaryVector::from_bools(&bits).unwrap();
                if b.is_zero() {
                    continue;
                }
                let fast = find_next_control_strings(&b).unwrap();
                let (layer, kind, names) = naive_find(&b);
                assert_eq!((fast.layer, fast.kind), (layer, kind), "{b}");
                assert_eq!(strings(&fast.controls().copied().collect::<Vec<_>>()), names, "{b}");
            }
        }
    }

    #[test]
    fn all_ones_is_root() {
        for n in 1..=6 {
            let d = decompose(&BinaryVector::ones(n).unwrap()).unwrap();
            assert_eq!(strings(d.controls()), ["I".repeat(n as usize)]);
        }
    }

    #[test]
    fn never_worse_than_naive() {
        // a layer-2 complementary round on this vector leads to 4 gates
        let b = bv("00101001");
        let d = decompose(&b).unwrap();
        assert_eq!(d.xor_of_expansions(), b);
        assert_eq!(strings(d.controls()), ["010", "100", "111"]);
    }

    #[test]
    fn cut_halves_are_not_reused() {
        // residue reaches a state where toggling "10000II" flips it between two
        // complementary siblings
        let b = bv("01111111100000011111000000000000001110011000010010010110101101011101011010110100\
                    100100001100111000000000000001111100000011111111");
        let d = decompose(&b).unwrap();
        assert_eq!(d.xor_of_expansions(), b);
        let distinct: std::collections::HashSet<_> = d.controls().iter().collect();
        assert_eq!(distinct.len(), d.gate_count());
        assert!(d.gate_count() as u64 <= b.popcount());
    }

    #[test]
    fn independent_set_examples() {
        let b = bv("11111111");
        let cs = |v: &[&str]| v.iter().map(|s| s.parse().unwrap()).collect::<Vec<ControlString>>();
        let set = CandidateSet::from_controls(&b, CandidateKind::Full, &cs(&["0II", "1II"])).unwrap();
        assert_eq!(strings(&max_independent_set(&set)), ["0II", "1II"]);

        let set = CandidateSet::from_controls(&b, CandidateKind::Full, &cs(&["I0I", "0II"])).unwrap();
        assert_eq!(strings(&max_independent_set(&set)), ["0II"]);

        // fullness outranks lexicographic order
        let b = bv("00111110");
        let set = CandidateSet::from_controls(&b, CandidateKind::SemiFull, &cs(&["0II", "I1I"])).unwrap();
        assert_eq!(strings(&max_independent_set(&set)), ["I1I"]);

        let set = CandidateSet::from_controls(&b, CandidateKind::Full, &cs(&["01I"])).unwrap();
        assert_eq!(strings(&max_independent_set(&set)), ["01I"]);
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&BinaryVector::zeros(4).unwrap()).unwrap();
        assert_eq!(d.gate_count(), 0);

        let d = decompose(&bv("11001100")).unwrap();
        assert_eq!(strings(d.controls()), ["I0I"]);

        let d = decompose(&bv("1111101000000101")).unwrap();
        assert_eq!(strings(d.controls()), ["0III", "I1I1"]);
        let rounds: Vec<_> = d.rounds().map(strings).collect();
        assert_eq!(rounds, vec![vec!["0III"], vec!["I1I1"]]);

        let d = decompose(&bv("11001000")).unwrap();
        assert_eq!(strings(d.controls()), ["I0I", "101"]);
    }

    #[test]
    fn cost_examples_and_memo() {
        assert_eq!(cost(&BinaryVector::zeros(3).unwrap()).unwrap(), 0);
        assert_eq!(cost(&bv("11001100")).unwrap(), 1);
        let memo = Decomposer::new();
        assert_eq!(memo.cost(&bv("1111101000000101")).unwrap(), 2);
        assert_eq!(memo.cost(&bv("1111101000000101")).unwrap(), 2);
        assert_eq!(memo.cached(), 1);
    }

    #[test]
    fn weighted_cost_hook() {
        struct ControlsPlusOne;
        impl GateCost for ControlsPlusOne {
            fn gate_cost(&self, c: &ControlString) -> u64 {
                c.layer() as u64 + 1
            }
        }
        let d = decompose(&bv("1111101000000101")).unwrap();
        assert_eq!(d.weighted_cost(&UnitCost), 2);
        assert_eq!(d.weighted_cost(&ControlsPlusOne), 2 + 3);
    }

    #[test]
    fn rejects_oversized_search() {
        let b = BinaryVector::ones(MAX_DECOMPOSE_QUBITS + 1).unwrap();
        assert!(matches!(decompose(&b), Err(Error::QubitCount(_))));
    }
}
