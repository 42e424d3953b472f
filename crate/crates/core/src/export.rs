//! Plain-text number formatting shared by the CSV writers.

use std::fmt::Write as _;

/// Formats `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV line per row, comma-separated, 17 significant digits.
pub fn rows_to_csv<'a, I>(rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| sig17(x)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 0.37291528, 1e-300, 0.0, -2.5e17] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(sig17(0.5), "5.0000000000000000e-1");
    }
}
