//! Least-squares slopes on log-log scale.

use crate::error::{input, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub x_label: String,
    pub y_label: String,
    pub n: usize,
}

/// Fits `log y = slope · log x + intercept`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return input(format!(
            "fit needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        ));
    }
    if xs.len() < 3 {
        return input(format!("fit needs at least 3 points, got {}", xs.len()));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return input(format!("log-log fit needs positive finite inputs, got {v}"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return input("log-log fit needs at least two distinct x values");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        x_label: "log x".into(),
        y_label: "log y".into(),
        n: xs.len(),
    })
}

impl FitResult {
    pub fn with_labels(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let f = fit_loglog(&xs, &xs).unwrap();
        assert_relative_eq!(f.slope, 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0);
        let ys: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
        assert_relative_eq!(
            fit_loglog(&xs, &ys).unwrap().slope,
            0.5,
            max_relative = 1e-12
        );
        assert!(fit_loglog(&xs[..2], &ys[..2]).is_err());
        assert!(fit_loglog(&[1.0, 2.0, 0.0], &[1.0, 1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_power_laws(a in -3.0f64..3.0, c in 0.1f64..10.0) {
            let xs: Vec<f64> = (1..=20).map(|i| i as f64 * 1.7).collect();
            let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(a)).collect();
            let f = fit_loglog(&xs, &ys).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-9);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }
    }
}
