//! Paired statistical comparison across shared-seed repetitions.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Result of a paired t-test on per-seed differences.
#[derive(Debug, Clone, Copy)]
pub struct PairedTTest {
    pub mean_diff: f64,
    pub t: f64,
    pub degrees_of_freedom: f64,
    pub p_two_sided: f64,
}

/// Paired t-test over equal-length samples that share seeds index-wise.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<PairedTTest> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(
            "paired samples must have equal length".into(),
        ));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "paired test needs at least 2 pairs".into(),
        ));
    }
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let df = (n - 1) as f64;

    if sd == 0.0 {
        // all differences identical: either exactly no effect or an exact one
        return Ok(PairedTTest {
            mean_diff: mean,
            t: if mean == 0.0 { 0.0 } else { f64::INFINITY * mean.signum() },
            degrees_of_freedom: df,
            p_two_sided: if mean == 0.0 { 1.0 } else { 0.0 },
        });
    }

    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidParameter(format!("t-distribution: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(PairedTTest {
        mean_diff: mean,
        t,
        degrees_of_freedom: df,
        p_two_sided: p,
    })
}
