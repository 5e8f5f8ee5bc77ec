use latticefourier::index_sets::{read_set, write_set};
use latticefourier::{FrequencySet, MultiIndex, SetKind};
use proptest::prelude::*;
use std::collections::BTreeSet;

// Defining inequalities, re-evaluated from scratch: every coordinate lies in
// [-floor(N/2), ceil(N/2) - 1] and prod max(1, l^alpha |k_l|) <= floor(N/2).
fn in_cross(k: &[i64], n: u64, alpha: f64) -> bool {
    let half = (n / 2) as i64;
    let upper = n.div_ceil(2) as i64 - 1;
    let mut prod = 1.0;
    for (l, &c) in k.iter().enumerate() {
        if c < -half || c > upper {
            return false;
        }
        prod *= (((l + 1) as f64).powf(alpha) * c.abs() as f64).max(1.0);
    }
    prod <= half.max(1) as f64
}

fn brute_cross(d: usize, n: u64, alpha: f64) -> BTreeSet<Vec<i64>> {
    let r = n as i64;
    let mut out = BTreeSet::new();
    let mut k = vec![-r; d];
    loop {
        if in_cross(&k, n, alpha) {
            out.insert(k.clone());
        }
        let mut l = d;
        loop {
            if l == 0 {
                return out;
            }
            l -= 1;
            if k[l] < r {
                k[l] += 1;
                break;
            }
            k[l] = -r;
        }
    }
}

// Counts H_N^d by recursion over dimensions on the remaining product budget.
fn count_recursive(d: usize, budget: i64, half: i64, upper: i64) -> u64 {
    if d == 0 {
        return 1;
    }
    let mut total = count_recursive(d - 1, budget, half, upper);
    for c in 1..=half {
        if c > budget {
            break;
        }
        let sub = count_recursive(d - 1, budget / c, half, upper);
        total += sub * (u64::from(c <= upper) + 1);
    }
    total
}

fn elements(set: &FrequencySet) -> BTreeSet<Vec<i64>> {
    set.iter().map(MultiIndex::into_vec).collect()
}

#[test]
fn published_cardinalities() {
    assert_eq!(FrequencySet::hyperbolic_cross(10, 33).unwrap().cardinality(), 45_548_649);
    assert_eq!(FrequencySet::weighted_hyperbolic_cross(10, 33, 1.7).unwrap().cardinality(), 101);
    assert_eq!(count_recursive(10, 16, 16, 16), 45_548_649);
}

#[test]
fn documented_examples() {
    let h = FrequencySet::hyperbolic_cross(1, 5).unwrap();
    assert_eq!(elements(&h), (-2..=2).map(|c| vec![c]).collect());
    let h = FrequencySet::hyperbolic_cross(2, 2).unwrap();
    let want: BTreeSet<Vec<i64>> = [[0, 0], [-1, 0], [0, -1], [-1, -1]].iter().map(|v| v.to_vec()).collect();
    assert_eq!(elements(&h), want);
    let w = FrequencySet::weighted_hyperbolic_cross(2, 9, 10.0).unwrap();
    assert_eq!(elements(&w), (-4..=4).map(|c| vec![c, 0]).collect());
    let c = FrequencySet::cuboid(&[2, 2]).unwrap();
    let want: BTreeSet<Vec<i64>> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|v| v.to_vec()).collect();
    assert_eq!(elements(&c), want);
    let mut sides = vec![16u64; 9];
    sides.push(15);
    assert_eq!(FrequencySet::cuboid(&sides).unwrap().cardinality(), 16u64.pow(9) * 15);
    let big = FrequencySet::hyperbolic_cross(10, 33).unwrap();
    let mut k = vec![0i64; 10];
    k[0] = 16;
    assert!(big.contains(&k).unwrap());
    k[0] = 17;
    assert!(!big.contains(&k).unwrap());
    assert!(big.contains(&[0; 3]).is_err());
}

#[test]
fn enumeration_is_lexicographic() {
    let set = FrequencySet::hyperbolic_cross(3, 9).unwrap();
    let v: Vec<Vec<i64>> = set.iter().map(MultiIndex::into_vec).collect();
    assert!(v.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(v.len() as u64, set.cardinality());
}

#[test]
fn projection_example() {
    let set =
        FrequencySet::explicit(2, vec![MultiIndex::new(vec![1, 2]), MultiIndex::new(vec![3, 2])], None).unwrap();
    let p = set.projection_without(0).unwrap();
    assert_eq!(p.kind(), SetKind::Explicit);
    assert_eq!(elements(&p), [vec![0, 2]].into_iter().collect());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cross_matches_defining_inequality(d in 1usize..=3, n in 1u64..=14, alpha in prop_oneof![Just(0.0), 0.0f64..3.0]) {
        let set = FrequencySet::weighted_hyperbolic_cross(d, n, alpha).unwrap();
        let got = elements(&set);
        prop_assert_eq!(&got, &brute_cross(d, n, alpha));
        prop_assert_eq!(got.len() as u64, set.cardinality());
        for k in &got {
            prop_assert!(in_cross(k, n, alpha));
        }
    }

    #[test]
    fn cross_lies_in_cuboid(d in 1usize..=4, n in 1u64..=12) {
        let h = FrequencySet::hyperbolic_cross(d, n).unwrap();
        let c = FrequencySet::cuboid(&vec![n; d]).unwrap();
        // even N: the cross window [-N/2, N/2) is the mirror image of B_N
        for k in h.iter() {
            let m: Vec<i64> = k.iter().map(|c| -c).collect();
            let inside = if n % 2 == 1 { c.contains(&k).unwrap() } else { c.contains(&m).unwrap() };
            prop_assert!(inside, "{:?}", k);
        }
    }

    #[test]
    fn zero_weight_is_unweighted(d in 1usize..=4, n in 1u64..=16) {
        let a = FrequencySet::hyperbolic_cross(d, n).unwrap();
        let b = FrequencySet::weighted_hyperbolic_cross(d, n, 0.0).unwrap();
        prop_assert_eq!(elements(&a), elements(&b));
    }

    #[test]
    fn cardinality_matches_recursive_count(d in 1usize..=6, n in 2u64..=40) {
        let set = FrequencySet::hyperbolic_cross(d, n).unwrap();
        let half = (n / 2) as i64;
        let upper = n.div_ceil(2) as i64 - 1;
        prop_assert_eq!(set.cardinality(), count_recursive(d, half, half, upper));
    }

    #[test]
    fn contains_agrees_with_scan(
        kind in 0usize..3,
        d in 1usize..=3,
        n in 2u64..=10,
        probes in proptest::collection::vec(proptest::collection::vec(-12i64..=12, 3), 1000),
    ) {
        let set = match kind {
            0 => FrequencySet::cuboid(&vec![n; d]).unwrap(),
            1 => FrequencySet::weighted_hyperbolic_cross(d, n, 1.3).unwrap(),
            _ => {
                let h = FrequencySet::hyperbolic_cross(d, n).unwrap();
                FrequencySet::explicit(d, h.to_vec().unwrap(), Some(n)).unwrap()
            }
        };
        let all = elements(&set);
        for p in &probes {
            let k = &p[..d];
            prop_assert_eq!(set.contains(k).unwrap(), all.contains(k));
        }
    }

    #[test]
    fn nth_matches_iteration(d in 1usize..=3, n in 2u64..=12) {
        let set = FrequencySet::hyperbolic_cross(d, n).unwrap();
        for (i, k) in set.iter().enumerate() {
            prop_assert_eq!(set.nth(i as u64), Some(k));
        }
        prop_assert_eq!(set.nth(set.cardinality()), None);
    }

    #[test]
    fn file_roundtrip(d in 1usize..=3, n in 2u64..=9) {
        let set = FrequencySet::hyperbolic_cross(d, n).unwrap();
        let mut buf = Vec::new();
        write_set(&set, &mut buf).unwrap();
        let back = read_set(buf.as_slice()).unwrap();
        prop_assert_eq!(back.expansion(), n);
        prop_assert_eq!(elements(&back), elements(&set));
    }
}
