//! Krippendorff's alpha for Likert ratings, at three measurement levels.

use practiq::bench::{krippendorff_alpha, Level};

fn main() {
    let ratings = vec![
        vec![Some(5.0), Some(5.0), Some(4.0)],
        vec![Some(4.0), Some(4.0), None],
        vec![Some(2.0), Some(3.0), Some(2.0)],
        vec![Some(1.0), Some(1.0), Some(1.0)],
        vec![Some(3.0), None, Some(3.0)],
        vec![None, Some(5.0), None],
    ];
    for level in [Level::Nominal, Level::Ordinal, Level::Interval] {
        match krippendorff_alpha(&ratings, level) {
            Ok(a) => println!("{level:?}: {a:.4}"),
            Err(e) => println!("{level:?}: {e}"),
        }
    }
}
