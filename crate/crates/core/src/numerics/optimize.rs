use crate::error::Result;

/// Best point found by a maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
    /// Set when no sampled value was positive; `arg` is then the least-negative
    /// point.
    pub all_negative: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`, narrowing until the
/// bracket is shorter than `tol`.
pub fn golden_section_maximize(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a) > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Samples `points` equally spaced values on `[lo, hi]`, then refines the best
/// one by golden-section search on the bracket formed by its neighbours.
///
/// The result is never worse than the best grid sample.
pub fn grid_then_golden(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<Maximum> {
    assert!(points >= 2);
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let mut best = 0;
    let mut values = Vec::with_capacity(points);
    for &x in &grid {
        values.push(f(x)?);
    }
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let all_negative = values.iter().all(|v| *v <= 0.0);
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(points - 1)];
    let (x, v) = golden_section_maximize(&mut f, left, right, tol)?;
    let (arg, value) = if v >= values[best] {
        (x, v)
    } else {
        (grid[best], values[best])
    };
    Ok(Maximum {
        arg,
        value,
        all_negative: all_negative && value <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_section_maximize(|t| Ok(t * (1.0 - t)), 0.0, 1.0, 1e-8).unwrap();
        assert!((x - 0.5).abs() < 1e-8);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_flags_all_negative_objectives() {
        let m = grid_then_golden(|t| Ok(-1.0 - t), 0.1, 0.9, 9, 1e-6).unwrap();
        assert!(m.all_negative);
        assert!((m.arg - 0.1).abs() < 1e-6);
    }
}
