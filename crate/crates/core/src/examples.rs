//! Built-in example data.

use crate::substitution::Substitution;

/// The nine-letter substitution coding the self-similar Arnoux–Yoccoz map.
pub fn ay_substitution() -> Substitution {
    Substitution::from_strings(
        &["1", "2", "3", "4", "5", "6", "7", "8", "9"],
        &["35", "45", "46", "17", "18", "19", "29", "2", "3"],
    )
    .expect("built-in substitution is valid")
}

/// Index of the eigenvector entry fixed to `-1` for the Arnoux–Yoccoz data (letter "8").
pub const AY_GAMMA_ANCHOR: usize = 7;

/// Fibonacci substitution; both eigenvalues are real.
pub fn fibonacci_substitution() -> Substitution {
    Substitution::from_strings(&["a", "b"], &["ab", "a"]).expect("built-in substitution is valid")
}
