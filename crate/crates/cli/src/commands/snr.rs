use anyhow::Result;
use optispin::fitting::{required_readouts, ReadoutLevels};

/// `v` rounded to four significant figures, without exponent notation.
pub fn four_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let e = v.abs().log10().floor() as i32;
    if e >= 3 {
        let scale = 10f64.powi(e - 3);
        format!("{:.0}", (v / scale).round() * scale)
    } else {
        format!("{:.*}", (3 - e) as usize, v)
    }
}

pub fn run(i_bright: f64, i_dark: f64, n: f64) -> Result<String> {
    let levels = ReadoutLevels { i_bright, i_dark, n };
    anyhow::ensure!(i_bright > i_dark, "I_bright ({i_bright}) must exceed I_dark ({i_dark})");
    Ok(four_significant(required_readouts(&levels)?))
}
