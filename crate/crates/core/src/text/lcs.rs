/// Length of the longest common subsequence, O(|a|·|b|) time and O(min) memory.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Longest subsequence of `a` (by exhaustive mask enumeration) that is also a subsequence of `b`.
    fn brute_force(a: &[u8], b: &[u8]) -> usize {
        let is_subseq = |s: &[u8]| {
            let mut it = b.iter();
            s.iter().all(|x| it.any(|y| y == x))
        };
        (0u32..(1 << a.len()))
            .filter_map(|mask| {
                let sub: Vec<u8> = (0..a.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| a[i])
                    .collect();
                is_subseq(&sub).then_some(sub.len())
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn identical() {
        let a = ["a", "b", "c", "d", "e"];
        assert_eq!(lcs_length(&a, &a), 5);
    }

    #[test]
    fn disjoint() {
        assert_eq!(lcs_length(&["a", "b"], &["c", "d"]), 0);
        assert_eq!(lcs_length::<&str>(&[], &["c"]), 0);
    }

    #[test]
    fn skip_one() {
        let a = ["a", "b", "c", "d"];
        let b = ["a", "c", "d"];
        assert_eq!(brute_force(b"abcd", b"acd"), 3);
        assert_eq!(lcs_length(&a, &b), 3);
    }

    proptest! {
        #[test]
        fn matches_oracle(a in prop::collection::vec(0u8..3, 0..9), b in prop::collection::vec(0u8..3, 0..9)) {
            let l = lcs_length(&a, &b);
            prop_assert_eq!(l, brute_force(&a, &b));
            prop_assert_eq!(l, lcs_length(&b, &a));
            prop_assert!(l <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length(&a, &a), a.len());
        }
    }
}
