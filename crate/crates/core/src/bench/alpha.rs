use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    Nominal,
    #[default]
    Ordinal,
    Interval,
}

#[derive(Debug, thiserror::Error)]
pub enum AlphaError {
    #[error("no unit has ratings from two raters")]
    NoPairableValues,
    #[error("bad ratings file: {0}")]
    Input(String),
}

/// Krippendorff's alpha over a unit × rater matrix; `None` is a missing rating.
pub fn krippendorff_alpha(ratings: &[Vec<Option<f64>>], level: Level) -> Result<f64, AlphaError> {
    let mut values: Vec<f64> = ratings.iter().flatten().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let idx = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value indexed");
    let k = values.len();
    let mut o = vec![vec![0.0; k]; k];
    for unit in ratings {
        let vals: Vec<usize> = unit.iter().flatten().map(|v| idx(*v)).collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        for (i, &a) in vals.iter().enumerate() {
            for (j, &b) in vals.iter().enumerate() {
                if i != j {
                    o[a][b] += 1.0 / (m - 1) as f64;
                }
            }
        }
    }
    let nc: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = nc.iter().sum();
    if n == 0.0 {
        return Err(AlphaError::NoPairableValues);
    }
    let delta = |c: usize, d: usize| -> f64 {
        match level {
            Level::Nominal => f64::from(u8::from(c != d)),
            Level::Interval => (values[c] - values[d]).powi(2),
            Level::Ordinal => {
                let (lo, hi) = (c.min(d), c.max(d));
                let s: f64 = nc[lo..=hi].iter().sum::<f64>() - (nc[lo] + nc[hi]) / 2.0;
                s * s
            }
        }
    };
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            let dd = delta(c, d);
            observed += o[c][d] * dd;
            expected += nc[c] * nc[d] * dd;
        }
    }
    if expected == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

#[derive(Deserialize)]
struct Row {
    unit_id: String,
    rater_id: String,
    score: f64,
}

/// Reads `unit_id,rater_id,score` rows into a unit × rater matrix.
pub fn read_ratings_csv(path: &Path) -> Result<Vec<Vec<Option<f64>>>, AlphaError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AlphaError::Input(e.to_string()))?;
    let mut cells: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut raters: Vec<String> = Vec::new();
    for row in reader.deserialize() {
        let row: Row = row.map_err(|e| AlphaError::Input(e.to_string()))?;
        if !raters.contains(&row.rater_id) {
            raters.push(row.rater_id.clone());
        }
        cells.entry(row.unit_id).or_default().insert(row.rater_id, row.score);
    }
    Ok(cells
        .values()
        .map(|by_rater| raters.iter().map(|r| by_rater.get(r).copied()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement() {
        let r = vec![vec![Some(1.0), Some(1.0)], vec![Some(4.0), Some(4.0)], vec![Some(2.0), None]];
        assert_eq!(krippendorff_alpha(&r, Level::Ordinal).unwrap(), 1.0);
    }

    #[test]
    fn nominal_textbook_value() {
        // Krippendorff's reliability data example, nominal alpha 0.743
        let v = |x: &[i32]| x.iter().map(|&y| (y > 0).then_some(y as f64)).collect::<Vec<_>>();
        let raters = [
            v(&[1, 2, 3, 3, 2, 1, 4, 1, 2, 0, 0, 0]),
            v(&[1, 2, 3, 3, 2, 2, 4, 1, 2, 5, 0, 3]),
            v(&[0, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, 0]),
            v(&[1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, 0]),
        ];
        let units: Vec<Vec<Option<f64>>> = (0..12).map(|u| raters.iter().map(|r| r[u]).collect()).collect();
        let a = krippendorff_alpha(&units, Level::Nominal).unwrap();
        assert!((a - 0.743).abs() < 1e-3, "{a}");
    }

    #[test]
    fn no_pairs() {
        let r = vec![vec![Some(1.0), None]];
        assert!(matches!(krippendorff_alpha(&r, Level::Ordinal), Err(AlphaError::NoPairableValues)));
    }
}
