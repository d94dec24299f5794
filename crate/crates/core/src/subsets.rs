/// Calls `visit` once per strictly increasing index set of size `k` drawn
/// from `0..n`, in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // rightmost position that can still advance
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

#[cfg(test)]
fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }

    #[test]
    fn empty_and_full_sets() {
        let mut count = 0;
        for_each_subset(5, 0, |s| {
            assert!(s.is_empty());
            count += 1;
        });
        assert_eq!(count, 1);
        for_each_subset(3, 3, |s| assert_eq!(s, &[0, 1, 2]));
    }

    #[test]
    fn counts_match_binomial() {
        for n in 0..9 {
            for k in 0..=n {
                let mut count = 0;
                for_each_subset(n, k, |_| count += 1);
                assert_eq!(count, binomial(n, k));
            }
        }
        assert_eq!(binomial(20, 10), 184_756);
    }
}
