//! Reference answers for the built-in exercises, used to generate and verify test cases.

/// Number of maximal runs of two or more equal adjacent values.
pub fn clump_oracle<T: PartialEq>(values: &[T]) -> usize {
    let mut clumps = 0;
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        if j - i >= 2 {
            clumps += 1;
        }
        i = j;
    }
    clumps
}

/// Nests brackets from the outside in: `example` → `e(x(a(m)p)l)e`, `card` → `c(ar)d`.
/// Even-length inputs keep their middle two characters together in the innermost pair.
pub fn bracket_reference(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let pairs = n.saturating_sub(1) / 2;
    let mut out = String::with_capacity(n + 2 * pairs);
    for c in &chars[..pairs] {
        out.push(*c);
        out.push('(');
    }
    out.extend(&chars[pairs..n - pairs]);
    for c in &chars[n - pairs..] {
        out.push(')');
        out.push(*c);
    }
    out
}

/// Cost of `pies` pies at `dollars`.`cents` each, as (dollars, cents).
pub fn pies_reference(dollars: u64, cents: u64, pies: u64) -> (u64, u64) {
    let total = (100 * dollars + cents) * pies;
    (total / 100, total % 100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clump_examples() {
        assert_eq!(clump_oracle(&[2, 2, 3, 5, 6, 6, 2]), 2);
        assert_eq!(clump_oracle::<i32>(&[]), 0);
        assert_eq!(clump_oracle(&[1, 1, 1]), 1);
        assert_eq!(clump_oracle(&[1, 2, 1, 2]), 0);
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket_reference("example"), "e(x(a(m)p)l)e");
        assert_eq!(bracket_reference("card"), "c(ar)d");
        assert_ne!(bracket_reference("card"), "c(a()r)d");
        assert_eq!(bracket_reference(""), "");
        assert_eq!(bracket_reference("a"), "a");
        assert_eq!(bracket_reference("ab"), "ab");
        assert_eq!(bracket_reference("abc"), "a(b)c");
        assert_eq!(bracket_reference("abcdef"), "a(b(cd)e)f");
    }

    #[test]
    fn pies_example() {
        assert_eq!(pies_reference(3, 50, 2), (7, 0));
        assert_eq!(pies_reference(2, 99, 3), (8, 97));
    }

    proptest! {
        #[test]
        fn clumps_bounded_by_half_length(xs in proptest::collection::vec(0u8..4, 0..40)) {
            prop_assert!(clump_oracle(&xs) <= xs.len() / 2);
        }

        #[test]
        fn brackets_balanced_and_preserve_letters(word in "[a-zA-Z]{0,30}") {
            let out = bracket_reference(&word);
            let letters: String = out.chars().filter(|c| *c != '(' && *c != ')').collect();
            prop_assert_eq!(&letters, &word);
            let mut depth = 0i32;
            for c in out.chars() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
                prop_assert!(depth >= 0);
            }
            prop_assert_eq!(depth, 0);
            prop_assert!(!out.contains("()"));
        }
    }
}
