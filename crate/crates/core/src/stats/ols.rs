use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// A column counts as dependent when its component orthogonal to the
/// preceding columns is shorter than this fraction of its norm.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub terms: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub r_squared: f64,
    pub rss: f64,
    pub n: usize,
    pub dof: usize,
}

/// CDF of Student's t with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * beta_reg(dof / 2.0, 0.5, dof / (dof + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// P(|T| >= |t|).
pub fn two_sided_p(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(dof / 2.0, 0.5, dof / (dof + t * t)).clamp(0.0, 1.0)
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Least squares through a Householder QR of `x`. The first column is
/// assumed to be the intercept when computing R².
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>, terms: &[String]) -> Result<RegressionResult> {
    let (n, k) = x.shape();
    if terms.len() != k || y.len() != n {
        return Err(Error::Contract(format!(
            "design is {n}x{k} with {} terms and {} responses",
            terms.len(),
            y.len()
        )));
    }
    if n <= k {
        return Err(Error::Contract(format!(
            "{n} observations for {k} terms leaves no residual degrees of freedom"
        )));
    }

    let qr = x.clone().qr();
    let r = qr.r();
    let dependent: Vec<String> = (0..k)
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm
        })
        .map(|j| terms[j].clone())
        .collect();
    if !dependent.is_empty() {
        return Err(Error::Singular { columns: dependent });
    }

    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).ok_or_else(|| Error::Singular {
        columns: terms.to_vec(),
    })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular {
            columns: terms.to_vec(),
        })?;

    let residual = y - x * &beta;
    let rss = residual.norm_squared();
    let dof = n - k;
    let sigma2 = rss / dof as f64;

    let mean_y = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let mut se = Vec::with_capacity(k);
    let mut t = Vec::with_capacity(k);
    let mut p = Vec::with_capacity(k);
    for j in 0..k {
        // diag of (XᵀX)⁻¹ = R⁻¹R⁻ᵀ is the squared norm of row j of R⁻¹
        let s = (sigma2 * r_inv.row(j).norm_squared()).sqrt();
        let tj = if s > 0.0 {
            beta[j] / s
        } else if beta[j] == 0.0 {
            0.0
        } else {
            beta[j].signum() * f64::INFINITY
        };
        se.push(s);
        t.push(tj);
        p.push(two_sided_p(tj, dof as f64));
    }

    Ok(RegressionResult {
        terms: terms.to_vec(),
        beta: beta.iter().copied().collect(),
        se,
        t,
        p,
        r_squared,
        rss,
        n,
        dof,
    })
}

impl RegressionResult {
    pub fn coefficient(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Writes `term,beta,se,t,p,stars`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "beta", "se", "t", "p", "stars"])?;
        for j in 0..self.terms.len() {
            w.write_record([
                self.terms[j].clone(),
                format!("{:.6}", self.beta[j]),
                format!("{:.6}", self.se[j]),
                format!("{:.4}", self.t[j]),
                format!("{:.4e}", self.p[j]),
                significance_stars(self.p[j]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
