//! Ordered hit sequences between a driving sequence and a target pattern.
//!
//! Hits are enumerated best-first: score descending, then by the pair list
//! compared lexicographically. The search is an A* over partial sequences whose
//! bound comes from a dynamic program over the hit grid. On a plain driving
//! sequence the bound is exact; when the driving side is only partially ordered
//! (the columns of an alignment) the bound relaxes the order constraint to
//! consecutive pairs, which keeps it admissible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::knowledge::Pattern;
use crate::scoring::CostTable;

/// Scale used to turn bit costs into integers so that score ties are exact.
const WEIGHT_SCALE: f64 = (1u64 << 24) as f64;

/// Hard cap on heap pops per enumeration.
const MAX_POPS: usize = 400_000;

pub const DEFAULT_MAX_HITS: usize = 8;

/// Matched pairs `(driving index, target index)`, both strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct HitSequence {
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the costs of the matched names, in bits.
    pub score: f64,
}

impl HitSequence {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub(crate) fn quantize(bits: f64) -> i64 {
    (bits * WEIGHT_SCALE).round() as i64
}

/// A single admissible pairing.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub driving: usize,
    pub target: usize,
    pub weight: i64,
    pub bits: f64,
}

/// A heap entry. An open entry stands for `path`; it also carries the position of
/// its last element among the parent's sorted children, so that the next sibling is
/// pushed only once this one is popped.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Item {
    bound: i64,
    score: i64,
    path: Vec<u32>,
    closed: bool,
    /// (index into `families`, rank of this entry within it)
    sibling: Option<(usize, usize)>,
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: larger bound first, then smaller path, closed before open
        self.bound
            .cmp(&other.bound)
            .then_with(|| other.path.cmp(&self.path))
            .then_with(|| self.closed.cmp(&other.closed))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The extensions of one expanded path, best bound first.
struct Family {
    prefix: Vec<u32>,
    score: i64,
    children: Vec<(i64, u32)>,
}

impl Family {
    fn item(&self, id: usize, rank: usize, candidates: &[Candidate]) -> Item {
        let (bound, g) = self.children[rank];
        let mut path = Vec::with_capacity(self.prefix.len() + 1);
        path.extend_from_slice(&self.prefix);
        path.push(g);
        Item {
            bound,
            score: self.score + candidates[g as usize].weight,
            path,
            closed: false,
            sibling: Some((id, rank)),
        }
    }
}

/// Enumerates up to `max_hits` hit sequences over `candidates` in (score desc, key asc)
/// order. `follows(prev, next)` says whether driving position `next` may come after
/// `prev`; every pair in a returned sequence satisfies it.
pub(crate) fn k_best<F>(mut candidates: Vec<Candidate>, follows: F, max_hits: usize) -> Vec<HitSequence>
where
    F: Fn(usize, usize) -> bool,
{
    if candidates.is_empty() || max_hits == 0 {
        return Vec::new();
    }
    candidates.sort_by_key(|c| (c.driving, c.target));
    let n = candidates.len();
    // best[h]: max weight of a chain starting at h when only consecutive pairs are checked
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&h| std::cmp::Reverse(candidates[h].target));
    let mut best = vec![0i64; n];
    for &h in &order {
        let ch = candidates[h];
        let mut tail = 0i64;
        for (g, cg) in candidates.iter().enumerate() {
            if cg.target > ch.target && follows(ch.driving, cg.driving) {
                tail = tail.max(best[g]);
            }
        }
        best[h] = ch.weight + tail;
    }

    let mut families: Vec<Family> = Vec::new();
    let mut heap = BinaryHeap::new();
    let push_family = |family: Family, families: &mut Vec<Family>, heap: &mut BinaryHeap<Item>| {
        if !family.children.is_empty() {
            let id = families.len();
            heap.push(family.item(id, 0, &candidates));
            families.push(family);
        }
    };
    let mut roots: Vec<(i64, u32)> = (0..n).map(|h| (best[h], h as u32)).collect();
    roots.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    push_family(
        Family {
            prefix: Vec::new(),
            score: 0,
            children: roots,
        },
        &mut families,
        &mut heap,
    );

    let mut out = Vec::new();
    let mut pops = 0usize;
    while let Some(item) = heap.pop() {
        pops += 1;
        if item.closed {
            let pairs: Vec<(usize, usize)> = item
                .path
                .iter()
                .map(|&h| (candidates[h as usize].driving, candidates[h as usize].target))
                .collect();
            let score = item.path.iter().map(|&h| candidates[h as usize].bits).sum();
            out.push(HitSequence { pairs, score });
            if out.len() >= max_hits {
                break;
            }
            continue;
        }
        if pops > MAX_POPS {
            break;
        }
        if let Some((id, rank)) = item.sibling {
            if rank + 1 < families[id].children.len() {
                heap.push(families[id].item(id, rank + 1, &candidates));
            }
        }
        let last = candidates[*item.path.last().unwrap() as usize];
        let mut children: Vec<(i64, u32)> = Vec::new();
        for (g, cg) in candidates.iter().enumerate() {
            if cg.target <= last.target {
                continue;
            }
            let ok = item.path.iter().all(|&h| {
                let d = candidates[h as usize].driving;
                d != cg.driving && follows(d, cg.driving)
            });
            if ok {
                children.push((item.score + best[g], g as u32));
            }
        }
        children.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let family = Family {
            prefix: item.path.clone(),
            score: item.score,
            children,
        };
        heap.push(Item {
            bound: item.score,
            score: item.score,
            path: item.path,
            closed: true,
            sibling: None,
        });
        push_family(family, &mut families, &mut heap);
    }
    out
}

/// Finds up to `max_hits` ordered hit sequences between `driving` and `target`.
///
/// Matching is by name only; symbol classes are ignored. The first sequence returned
/// always has the maximum achievable score.
pub fn find_hit_sequences<S: AsRef<str>>(
    driving: &[S],
    target: &Pattern,
    costs: &CostTable,
    max_hits: usize,
) -> Vec<HitSequence> {
    let mut candidates = Vec::new();
    for (d, name) in driving.iter().enumerate() {
        let name = name.as_ref();
        for (t, tname) in target.names().enumerate() {
            if name == tname {
                let bits = costs.cost(name);
                candidates.push(Candidate {
                    driving: d,
                    target: t,
                    weight: quantize(bits),
                    bits,
                });
            }
        }
    }
    k_best(candidates, |a, b| a < b, max_hits)
}
