//! Problem and demo sets compiled into the library.

use crate::problem::{parse_problem, ProblemError, ProblemSet};

const PROBLEMS: &[&str] = &[
    include_str!("../data/problems/add.json"),
    include_str!("../data/problems/below_zero.json"),
    include_str!("../data/problems/count_words.json"),
    include_str!("../data/problems/filter_by_substring.json"),
    include_str!("../data/problems/group_by_parity.json"),
    include_str!("../data/problems/has_close_elements.json"),
    include_str!("../data/problems/join_lines.json"),
    include_str!("../data/problems/longest.json"),
    include_str!("../data/problems/lookup_all.json"),
    include_str!("../data/problems/mean_absolute_deviation.json"),
    include_str!("../data/problems/rolling_max.json"),
    include_str!("../data/problems/safe_divide.json"),
    include_str!("../data/problems/sum_product.json"),
];

const DEMOS: &[&str] = &[
    include_str!("../data/demos/count_evens.json"),
    include_str!("../data/demos/reverse_words.json"),
];

fn load(docs: &[&str]) -> Result<ProblemSet, ProblemError> {
    ProblemSet::new(docs.iter().map(|d| parse_problem(d)).collect::<Result<Vec<_>, _>>()?)
}

/// The shipped evaluation problems, in file-name order.
pub fn problems() -> ProblemSet {
    load(PROBLEMS).expect("shipped problems are valid")
}

/// The shipped few-shot demonstration pool.
pub fn demos() -> ProblemSet {
    load(DEMOS).expect("shipped demos are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn embedded_sets_match_the_data_dirs() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        assert_eq!(problems(), ProblemSet::load_dir(&root.join("problems")).unwrap());
        assert_eq!(demos(), ProblemSet::load_dir(&root.join("demos")).unwrap());
    }
}
