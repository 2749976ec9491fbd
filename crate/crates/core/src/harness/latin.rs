//! Williams-design balanced Latin squares.

use crate::error::{Error, Result};

/// Condition orders (1-based condition ids) balanced for first-order carryover.
///
/// Even `n` gives `n` rows; odd `n` gives `2n` rows, the base square
/// followed by its row-wise mirror.
pub fn balanced_latin_square(n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::Argument(format!(
            "a balanced Latin square needs at least 2 conditions, got {n}"
        )));
    }
    // 0, 1, n-1, 2, n-2, ...
    let mut first = Vec::with_capacity(n);
    let (mut lo, mut hi) = (1, n - 1);
    first.push(0);
    for k in 1..n {
        if k % 2 == 1 {
            first.push(lo);
            lo += 1;
        } else {
            first.push(hi);
            hi -= 1;
        }
    }
    let mut rows: Vec<Vec<usize>> = (0..n)
        .map(|r| first.iter().map(|c| (c + r) % n + 1).collect())
        .collect();
    if n % 2 == 1 {
        let mirrored: Vec<Vec<usize>> = rows
            .iter()
            .map(|row| row.iter().rev().copied().collect())
            .collect();
        rows.extend(mirrored);
    }
    Ok(rows)
}

/// Order for the `participant`-th subject (0-based), cycling through the rows.
pub fn order_for_participant(square: &[Vec<usize>], participant: usize) -> &[usize] {
    &square[participant % square.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carryover_counts(rows: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; n + 1]; n + 1];
        for row in rows {
            for w in row.windows(2) {
                counts[w[0]][w[1]] += 1;
            }
        }
        counts
    }

    #[test]
    fn smallest_case() {
        assert_eq!(balanced_latin_square(2).unwrap(), vec![vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn nine_conditions_give_eighteen_orders() {
        let sq = balanced_latin_square(9).unwrap();
        assert_eq!(sq.len(), 18);
        assert_eq!(order_for_participant(&sq, 17), sq[17].as_slice());
        assert_eq!(order_for_participant(&sq, 18), sq[0].as_slice());
    }

    #[test]
    fn four_conditions_each_pair_once() {
        let sq = balanced_latin_square(4).unwrap();
        assert_eq!(sq.len(), 4);
        let counts = carryover_counts(&sq, 4);
        for (i, row) in counts.iter().enumerate().skip(1) {
            for (j, &c) in row.iter().enumerate().skip(1) {
                assert_eq!(c, usize::from(i != j), "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn latin_and_carryover_balanced_up_to_ten() {
        for n in 2..=10 {
            let sq = balanced_latin_square(n).unwrap();
            let expected_rows = if n % 2 == 0 { n } else { 2 * n };
            assert_eq!(sq.len(), expected_rows);
            for row in &sq {
                let mut sorted = row.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
            }
            for col in 0..n {
                let mut seen: Vec<usize> = sq[..n].iter().map(|r| r[col]).collect();
                seen.sort_unstable();
                assert_eq!(seen, (1..=n).collect::<Vec<_>>(), "n={n} column {col}");
            }
            let counts = carryover_counts(&sq, n);
            let per_pair = if n % 2 == 0 { 1 } else { 2 };
            for (i, row) in counts.iter().enumerate().skip(1) {
                for (j, &c) in row.iter().enumerate().skip(1) {
                    let want = if i == j { 0 } else { per_pair };
                    assert_eq!(c, want, "n={n} pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(balanced_latin_square(0).is_err());
        assert!(balanced_latin_square(1).is_err());
    }
}
