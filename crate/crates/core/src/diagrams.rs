//! Signed arc diagrams connecting circle data to box data.
//!
//! A diagram of shape `(n, r, k)` joins a top row of `n` slots — white
//! circles `c_1, ..., c_{n-2r}` followed by black circle pairs
//! `l_1, lbar_1, ..., l_r, lbar_r` — to a bottom row of `n` slots — white
//! boxes `1, ..., n-2k` followed by black box pairs
//! `z_1, -zbar_1, ..., z_k, -zbar_k` — by three kinds of arcs:
//!
//! * type 1: one arc from each white circle to a white box;
//! * type 2: a black circle pair `(l_q, lbar_q)` joined to two white boxes
//!   `alpha < beta`, with `l_q` on the smaller box;
//! * type 3: a black circle pair joined in parallel to a black box pair
//!   (`l_q` to `z_gamma`, `lbar_q` to `-zbar_gamma`).
//!
//! The arcs form a bijection between the rows; the diagram's sign is the
//! sign of that slot permutation. Because the two arcs of a type-3 pair
//! occupy adjacent slots in the same order on both rows, dropping all
//! type-3 arcs never changes the sign — the tests pin this down against a
//! crossing-count oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::permutation_sign;

/// Errors from diagram construction and operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    /// The arc data does not describe a valid diagram of shape `(n, r, k)`.
    #[error("invalid diagram of shape ({n}, {r}, {k}): {detail}")]
    InvalidStructure {
        n: usize,
        r: usize,
        k: usize,
        detail: String,
    },
    /// The operation needs a circle diagram (type-1 arcs order-preserving).
    #[error("operation requires a circle diagram (order-preserving type-1 arcs)")]
    NotCircular,
}

/// An arc diagram of shape `(n, r, k)`, `2r <= n`, `k <= r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagram {
    n: usize,
    r: usize,
    k: usize,
    /// `(circle p, box alpha)`, sorted by `p`; one entry per white circle.
    type1: Vec<(usize, usize)>,
    /// `(pair index q, (alpha, beta))` with `alpha < beta`, sorted by `q`.
    type2: Vec<(usize, (usize, usize))>,
    /// `(pair index q, box pair index gamma)`, sorted by `q`.
    type3: Vec<(usize, usize)>,
}

impl Diagram {
    /// Builds a diagram from raw arc data, validating shape and coverage.
    pub fn new(
        n: usize,
        r: usize,
        k: usize,
        mut type1: Vec<(usize, usize)>,
        mut type2: Vec<(usize, (usize, usize))>,
        mut type3: Vec<(usize, usize)>,
    ) -> Result<Self, DiagramError> {
        let fail = |detail: String| DiagramError::InvalidStructure { n, r, k, detail };
        if 2 * r > n {
            return Err(fail(format!("2r = {} exceeds n = {n}", 2 * r)));
        }
        if k > r {
            return Err(fail(format!("k = {k} exceeds r = {r}")));
        }
        if type1.len() != n - 2 * r {
            return Err(fail(format!(
                "expected {} type-1 arcs, got {}",
                n - 2 * r,
                type1.len()
            )));
        }
        if type2.len() != r - k {
            return Err(fail(format!(
                "expected {} type-2 joins, got {}",
                r - k,
                type2.len()
            )));
        }
        if type3.len() != k {
            return Err(fail(format!(
                "expected {k} type-3 joins, got {}",
                type3.len()
            )));
        }
        let mut circles_seen = vec![false; n - 2 * r + 1];
        let mut boxes_seen = vec![false; n - 2 * k + 1];
        let mut pairs_seen = vec![false; r + 1];
        let mut z_seen = vec![false; k + 1];
        let mut use_box = |alpha: usize| -> Result<(), DiagramError> {
            if alpha == 0 || alpha > n - 2 * k {
                return Err(DiagramError::InvalidStructure {
                    n,
                    r,
                    k,
                    detail: format!("box {alpha} out of range"),
                });
            }
            if boxes_seen[alpha] {
                return Err(DiagramError::InvalidStructure {
                    n,
                    r,
                    k,
                    detail: format!("box {alpha} used twice"),
                });
            }
            boxes_seen[alpha] = true;
            Ok(())
        };
        for &(p, alpha) in &type1 {
            if p == 0 || p > n - 2 * r {
                return Err(fail(format!("circle {p} out of range")));
            }
            if circles_seen[p] {
                return Err(fail(format!("circle {p} used twice")));
            }
            circles_seen[p] = true;
            use_box(alpha)?;
        }
        for &(q, (alpha, beta)) in &type2 {
            if q == 0 || q > r {
                return Err(fail(format!("pair index {q} out of range")));
            }
            if pairs_seen[q] {
                return Err(fail(format!("pair index {q} used twice")));
            }
            pairs_seen[q] = true;
            if alpha >= beta {
                return Err(fail(format!(
                    "type-2 boxes must satisfy alpha < beta, got ({alpha}, {beta})"
                )));
            }
            use_box(alpha)?;
            use_box(beta)?;
        }
        for &(q, gamma) in &type3 {
            if q == 0 || q > r {
                return Err(fail(format!("pair index {q} out of range")));
            }
            if pairs_seen[q] {
                return Err(fail(format!("pair index {q} used twice")));
            }
            pairs_seen[q] = true;
            if gamma == 0 || gamma > k {
                return Err(fail(format!("box pair index {gamma} out of range")));
            }
            if z_seen[gamma] {
                return Err(fail(format!("box pair index {gamma} used twice")));
            }
            z_seen[gamma] = true;
        }
        // Counting arguments make full coverage automatic once nothing is
        // reused, but check explicitly for clear errors.
        if let Some(p) = (1..=n - 2 * r).find(|&p| !circles_seen[p]) {
            return Err(fail(format!("circle {p} not covered")));
        }
        if let Some(alpha) = (1..=n - 2 * k).find(|&a| !boxes_seen[a]) {
            return Err(fail(format!("box {alpha} not covered")));
        }
        type1.sort_unstable();
        type2.sort_unstable();
        type3.sort_unstable();
        Ok(Diagram {
            n,
            r,
            k,
            type1,
            type2,
            type3,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(circle p, box alpha)` arcs, sorted by circle.
    pub fn type1(&self) -> &[(usize, usize)] {
        &self.type1
    }

    /// `(pair q, (alpha, beta))` joins with `alpha < beta`, sorted by `q`.
    pub fn type2(&self) -> &[(usize, (usize, usize))] {
        &self.type2
    }

    /// `(pair q, box pair gamma)` joins, sorted by `q`.
    pub fn type3(&self) -> &[(usize, usize)] {
        &self.type3
    }

    /// All `n` arcs as `(top slot, bottom slot)` pairs.
    ///
    /// Top slots: white circle `p` at slot `p`; `l_q` at `n-2r+2q-1`,
    /// `lbar_q` at `n-2r+2q`. Bottom slots: white box `alpha` at slot
    /// `alpha`; `z_gamma` at `n-2k+2gamma-1`, `-zbar_gamma` at `n-2k+2gamma`.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut arcs = Vec::with_capacity(self.n);
        for &(p, alpha) in &self.type1 {
            arcs.push((p, alpha));
        }
        let top_l = |q: usize| self.n - 2 * self.r + 2 * q - 1;
        let bot_z = |gamma: usize| self.n - 2 * self.k + 2 * gamma - 1;
        for &(q, (alpha, beta)) in &self.type2 {
            arcs.push((top_l(q), alpha));
            arcs.push((top_l(q) + 1, beta));
        }
        for &(q, gamma) in &self.type3 {
            arcs.push((top_l(q), bot_z(gamma)));
            arcs.push((top_l(q) + 1, bot_z(gamma) + 1));
        }
        arcs
    }

    /// Sign of the slot permutation induced by the arcs.
    pub fn sign(&self) -> i32 {
        let mut one_line = vec![0usize; self.n];
        for (top, bottom) in self.arcs() {
            one_line[top - 1] = bottom;
        }
        permutation_sign(&one_line)
    }

    /// Whether the type-1 arcs are order-preserving (the circle-diagram
    /// normal form).
    pub fn is_circular(&self) -> bool {
        self.type1.windows(2).all(|w| w[0].1 < w[1].1)
    }
}

/// Replaces the type-1 arcs by the unique order-preserving assignment onto
/// the same set of boxes. Idempotent; fixes exactly the circle diagrams.
pub fn to_circ(diagram: &Diagram) -> Diagram {
    let mut boxes: Vec<usize> = diagram.type1.iter().map(|&(_, alpha)| alpha).collect();
    boxes.sort_unstable();
    let type1 = boxes
        .into_iter()
        .enumerate()
        .map(|(i, alpha)| (i + 1, alpha))
        .collect();
    Diagram::new(
        diagram.n,
        diagram.r,
        diagram.k,
        type1,
        diagram.type2.clone(),
        diagram.type3.clone(),
    )
    .expect("reordering type-1 arcs preserves validity")
}

/// The chord picture left after forgetting all black data: `n - 2k` boxes,
/// the type-2 joins as chords, and the boxes fed by type-1 arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SquareDiagram {
    /// Number of white boxes (`n - 2k`).
    pub boxes: usize,
    /// Chords `(alpha, beta)` with `alpha < beta`, sorted.
    pub chords: Vec<(usize, usize)>,
    /// Sorted boxes fed by type-1 arcs.
    pub u: Vec<usize>,
}

impl SquareDiagram {
    /// The smaller endpoint of each chord — the coordinate that carries the
    /// half-angle cotangent factor in the assembled distribution.
    pub fn cot_coordinates(&self) -> Vec<usize> {
        self.chords.iter().map(|&(alpha, _)| alpha).collect()
    }
}

/// Forgets black circles and boxes: type-2 joins become chords, type-1
/// boxes become the `u`-sequence. Factors through [`to_circ`].
pub fn to_square(diagram: &Diagram) -> SquareDiagram {
    let mut chords: Vec<(usize, usize)> = diagram.type2.iter().map(|&(_, pair)| pair).collect();
    chords.sort_unstable();
    let mut u: Vec<usize> = diagram.type1.iter().map(|&(_, alpha)| alpha).collect();
    u.sort_unstable();
    SquareDiagram {
        boxes: diagram.n - 2 * diagram.k,
        chords,
        u,
    }
}

/// The two crossing parities of a circle diagram: `eps1` counts crossings
/// between type-1 and type-2 arcs, `eps2` crossings among type-2 arcs.
/// Their product is the diagram sign (type-1 arcs of a circle diagram never
/// cross each other and type-3 arcs never change the sign).
pub fn epsilon_parities(diagram: &Diagram) -> Result<(i32, i32), DiagramError> {
    if !diagram.is_circular() {
        return Err(DiagramError::NotCircular);
    }
    let crosses = |x: (usize, usize), y: (usize, usize)| -> bool {
        (x.0 as i64 - y.0 as i64) * (x.1 as i64 - y.1 as i64) < 0
    };
    let t1: Vec<(usize, usize)> = diagram.type1.iter().map(|&(p, alpha)| (p, alpha)).collect();
    let top_l = |q: usize| diagram.n - 2 * diagram.r + 2 * q - 1;
    let mut t2: Vec<(usize, usize)> = Vec::with_capacity(2 * diagram.type2.len());
    for &(q, (alpha, beta)) in &diagram.type2 {
        t2.push((top_l(q), alpha));
        t2.push((top_l(q) + 1, beta));
    }
    let mut c12 = 0usize;
    for &a in &t1 {
        for &b in &t2 {
            if crosses(a, b) {
                c12 += 1;
            }
        }
    }
    let mut c22 = 0usize;
    for i in 0..t2.len() {
        for j in i + 1..t2.len() {
            if crosses(t2[i], t2[j]) {
                c22 += 1;
            }
        }
    }
    let eps = |c: usize| if c.is_multiple_of(2) { 1 } else { -1 };
    Ok((eps(c12), eps(c22)))
}

/// All diagrams of shape `(n, r, k)` in a deterministic order. Empty when
/// `k > r` or `2r > n`.
pub fn enumerate_diagrams(n: usize, r: usize, k: usize) -> Vec<Diagram> {
    if 2 * r > n || k > r {
        return Vec::new();
    }
    let mut out = Vec::new();
    // Choose which pair indices are joined to black boxes, and how.
    let l_indices: Vec<usize> = (1..=r).collect();
    for chosen in combinations(&l_indices, k) {
        for assignment in permutations(&chosen) {
            // assignment[gamma - 1] is the pair index joined to box pair gamma.
            let type3: Vec<(usize, usize)> = assignment
                .iter()
                .enumerate()
                .map(|(i, &q)| (q, i + 1))
                .collect();
            let remaining_l: Vec<usize> = l_indices
                .iter()
                .copied()
                .filter(|q| !chosen.contains(q))
                .collect();
            let boxes: Vec<usize> = (1..=n - 2 * k).collect();
            assign_type2(
                n,
                r,
                k,
                &remaining_l,
                &boxes,
                &type3,
                &mut Vec::new(),
                &mut out,
            );
        }
    }
    out.sort();
    out
}

#[allow(clippy::too_many_arguments)]
fn assign_type2(
    n: usize,
    r: usize,
    k: usize,
    remaining_l: &[usize],
    free_boxes: &[usize],
    type3: &[(usize, usize)],
    type2: &mut Vec<(usize, (usize, usize))>,
    out: &mut Vec<Diagram>,
) {
    match remaining_l.split_first() {
        None => {
            for perm in permutations(free_boxes) {
                let type1: Vec<(usize, usize)> = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &alpha)| (i + 1, alpha))
                    .collect();
                out.push(
                    Diagram::new(n, r, k, type1, type2.clone(), type3.to_vec())
                        .expect("enumeration builds valid diagrams"),
                );
            }
        }
        Some((&q, rest)) => {
            for pair in combinations(free_boxes, 2) {
                let (alpha, beta) = (pair[0], pair[1]);
                let smaller: Vec<usize> = free_boxes
                    .iter()
                    .copied()
                    .filter(|&b| b != alpha && b != beta)
                    .collect();
                type2.push((q, (alpha, beta)));
                assign_type2(n, r, k, rest, &smaller, type3, type2, out);
                type2.pop();
            }
        }
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    items.iter().copied().combinations(k).collect()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    if items.is_empty() {
        return vec![vec![]];
    }
    items.iter().copied().permutations(items.len()).collect()
}

/// Closed count formula for `|Omega(n, r, k)|`: choose and order the
/// type-3 pairs, deal box pairs to the remaining black circles one at a
/// time, then distribute white circles over the leftover boxes.
pub fn diagram_count(n: usize, r: usize, k: usize) -> u128 {
    if 2 * r > n || k > r {
        return 0;
    }
    let choose2 = |m: usize| (m * (m - 1) / 2) as u128;
    let mut acc: u128 = 1;
    // C(r, k) * k!
    let mut numer: u128 = 1;
    let mut denom: u128 = 1;
    for i in 0..k {
        numer *= (r - i) as u128;
        denom *= (i + 1) as u128;
    }
    acc *= numer / denom;
    for i in 1..=k {
        acc *= i as u128;
    }
    let mut free = n - 2 * k;
    for _ in 0..r - k {
        acc *= choose2(free);
        free -= 2;
    }
    for i in 1..=free {
        acc *= i as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    /// Sign oracle: count crossings among the type-1 and type-2 arcs only,
    /// checking that dropping the type-3 arcs never changes the parity.
    fn oracle_sign_without_type3(d: &Diagram) -> i32 {
        let keep = d.type1().len() + 2 * d.type2().len();
        let arcs: Vec<(usize, usize)> = d.arcs().into_iter().take(keep).collect();
        let mut crossings = 0usize;
        for i in 0..arcs.len() {
            for j in i + 1..arcs.len() {
                let (t1, b1) = (arcs[i].0 as i64, arcs[i].1 as i64);
                let (t2, b2) = (arcs[j].0 as i64, arcs[j].1 as i64);
                if (t1 - t2) * (b1 - b2) < 0 {
                    crossings += 1;
                }
            }
        }
        if crossings.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    const SHAPES: [(usize, usize, usize); 12] = [
        (1, 0, 0),
        (2, 0, 0),
        (2, 1, 0),
        (2, 1, 1),
        (3, 1, 0),
        (3, 1, 1),
        (4, 1, 0),
        (4, 1, 1),
        (4, 2, 0),
        (4, 2, 1),
        (4, 2, 2),
        (5, 2, 1),
    ];

    #[test]
    fn frozen_counts() {
        assert_eq!(enumerate_diagrams(2, 1, 0).len(), 1);
        assert_eq!(enumerate_diagrams(4, 1, 0).len(), 12);
        assert_eq!(enumerate_diagrams(4, 1, 1).len(), 2);
    }

    #[test]
    fn enumeration_matches_closed_count() {
        for &(n, r, k) in &SHAPES {
            let listed = enumerate_diagrams(n, r, k);
            assert_eq!(
                listed.len() as u128,
                diagram_count(n, r, k),
                "({n},{r},{k})"
            );
            // No duplicates: enumeration output is sorted.
            for w in listed.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
        assert_eq!(diagram_count(6, 3, 2), 6);
        assert_eq!(enumerate_diagrams(6, 3, 2).len(), 6);
        assert!(enumerate_diagrams(3, 1, 2).is_empty());
        assert!(enumerate_diagrams(3, 2, 0).is_empty());
    }

    #[test]
    fn frozen_sign_examples() {
        // Shape (3, 1, 0): the black pair takes two of the three boxes.
        let d12 = Diagram::new(3, 1, 0, vec![(1, 3)], vec![(1, (1, 2))], vec![]).unwrap();
        let d13 = Diagram::new(3, 1, 0, vec![(1, 2)], vec![(1, (1, 3))], vec![]).unwrap();
        let d23 = Diagram::new(3, 1, 0, vec![(1, 1)], vec![(1, (2, 3))], vec![]).unwrap();
        assert_eq!(d12.sign(), 1);
        assert_eq!(d13.sign(), -1);
        assert_eq!(d23.sign(), 1);
    }

    #[test]
    fn sign_matches_type3_free_crossing_oracle() {
        for &(n, r, k) in &SHAPES {
            for d in enumerate_diagrams(n, r, k) {
                assert_eq!(d.sign(), oracle_sign_without_type3(&d), "{d:?}");
            }
        }
    }

    #[test]
    fn to_circ_is_idempotent_and_fixes_circle_diagrams() {
        for &(n, r, k) in &SHAPES {
            for d in enumerate_diagrams(n, r, k) {
                let c = to_circ(&d);
                assert!(c.is_circular());
                assert_eq!(to_circ(&c), c);
                assert_eq!(d.is_circular(), d == c);
            }
        }
    }

    #[test]
    fn to_circ_preimage_classes_have_factorial_size() {
        for &(n, r, k) in &SHAPES {
            let mut classes: BTreeMap<Diagram, usize> = BTreeMap::new();
            for d in enumerate_diagrams(n, r, k) {
                *classes.entry(to_circ(&d)).or_default() += 1;
            }
            let expected = (1..=n - 2 * r).product::<usize>().max(1);
            for (circ, count) in classes {
                assert_eq!(count, expected, "({n},{r},{k}) class of {circ:?}");
            }
        }
    }

    #[test]
    fn to_square_classes_on_circle_diagrams_have_size_r_factorial() {
        // The black-data-forgetting map is r!-to-1 on circle diagrams:
        // r! ways to distribute pair indices over chords and box pairs.
        for &(n, r, k) in &SHAPES {
            let mut classes: BTreeMap<SquareDiagram, usize> = BTreeMap::new();
            for d in enumerate_diagrams(n, r, k) {
                if d.is_circular() {
                    *classes.entry(to_square(&d)).or_default() += 1;
                }
            }
            let r_factorial: usize = (1..=r).product::<usize>().max(1);
            for (sq, count) in classes {
                assert_eq!(count, r_factorial, "({n},{r},{k}) class of {sq:?}");
            }
        }
    }

    #[test]
    fn epsilon_parities_multiply_to_the_sign() {
        for &(n, r, k) in &SHAPES {
            for d in enumerate_diagrams(n, r, k) {
                if d.is_circular() {
                    let (e1, e2) = epsilon_parities(&d).unwrap();
                    assert_eq!(e1 * e2, d.sign(), "{d:?}");
                } else {
                    assert_eq!(epsilon_parities(&d), Err(DiagramError::NotCircular));
                }
            }
        }
    }

    #[test]
    fn square_diagram_records_lower_endpoints() {
        let d = Diagram::new(
            5,
            2,
            0,
            vec![(1, 3)],
            vec![(1, (1, 4)), (2, (2, 5))],
            vec![],
        )
        .unwrap();
        let sq = to_square(&d);
        assert_eq!(sq.boxes, 5);
        assert_eq!(sq.chords, vec![(1, 4), (2, 5)]);
        assert_eq!(sq.u, vec![3]);
        assert_eq!(sq.cot_coordinates(), vec![1, 2]);
    }

    #[test]
    fn construction_validates_structure() {
        assert!(matches!(
            Diagram::new(3, 2, 0, vec![], vec![], vec![]),
            Err(DiagramError::InvalidStructure { .. })
        ));
        assert!(matches!(
            Diagram::new(2, 1, 0, vec![], vec![(1, (2, 1))], vec![]),
            Err(DiagramError::InvalidStructure { .. })
        ));
        assert!(matches!(
            Diagram::new(4, 1, 0, vec![(1, 1), (2, 1)], vec![(1, (2, 3))], vec![]),
            Err(DiagramError::InvalidStructure { .. })
        ));
        assert!(matches!(
            Diagram::new(4, 1, 1, vec![(1, 1), (2, 2)], vec![], vec![(1, 2)]),
            Err(DiagramError::InvalidStructure { .. })
        ));
        assert!(matches!(
            Diagram::new(4, 2, 1, vec![], vec![(1, (1, 2))], vec![(1, 1)]),
            Err(DiagramError::InvalidStructure { .. })
        ));
    }
}
