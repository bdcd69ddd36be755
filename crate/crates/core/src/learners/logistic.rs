//! Full-batch gradient-descent logistic regression.
//!
//! Features are standardized with statistics fitted on the training rows; the
//! descent itself runs a fixed step size on the mean log-loss. The fit
//! returns the per-epoch loss trace so callers can assert convergence
//! behavior without retraining.

use super::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Column means fitted on the training rows.
    pub means: Vec<f64>,
    /// Column standard deviations; constant columns fall back to 1.
    pub stds: Vec<f64>,
}

impl LogisticModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut z = self.bias;
        for ((&x, &w), (&m, &s)) in row
            .iter()
            .zip(&self.weights)
            .zip(self.means.iter().zip(&self.stds))
        {
            z += w * (x - m) / s;
        }
        sigmoid(z)
    }

    pub(crate) fn scalar_digest_input(&self) -> Vec<f64> {
        let mut out = self.weights.clone();
        out.push(self.bias);
        out.extend_from_slice(&self.means);
        out.extend_from_slice(&self.stds);
        out
    }
}

/// A fitted model plus the loss measured at the start of every epoch and once
/// after the final update (`trace.len() == epochs + 1`).
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub loss_trace: Vec<f64>,
}

pub fn fit_logistic(rows: &[Vec<f64>], labels: &[u8], learning_rate: f64, epochs: usize) -> LogisticFit {
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);

    let mut means = vec![0.0; width];
    for row in rows {
        for (m, &x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut stds = vec![0.0; width];
    for row in rows {
        for ((s, &x), &m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut stds {
        *s = (*s / n as f64).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }

    let standardized: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(means.iter().zip(&stds))
                .map(|(&x, (&m, &s))| (x - m) / s)
                .collect()
        })
        .collect();

    let mut weights = vec![0.0; width];
    let mut bias = 0.0;
    let mut trace = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let mut grad_w = vec![0.0; width];
        let mut grad_b = 0.0;
        let mut loss = 0.0;
        for (row, &y) in standardized.iter().zip(labels) {
            let z = bias + row.iter().zip(&weights).map(|(&x, &w)| x * w).sum::<f64>();
            let p = sigmoid(z);
            let err = p - f64::from(y);
            for (g, &x) in grad_w.iter_mut().zip(row) {
                *g += err * x;
            }
            grad_b += err;
            let pc = p.clamp(super::PROB_CLAMP, 1.0 - super::PROB_CLAMP);
            loss -= if y == 1 { pc.ln() } else { (1.0 - pc).ln() };
        }
        trace.push(loss / n as f64);
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * g / n as f64;
        }
        bias -= learning_rate * grad_b / n as f64;
    }

    // Loss at the final parameters.
    let final_loss = {
        let mut loss = 0.0;
        for (row, &y) in standardized.iter().zip(labels) {
            let z = bias + row.iter().zip(&weights).map(|(&x, &w)| x * w).sum::<f64>();
            let p = sigmoid(z).clamp(super::PROB_CLAMP, 1.0 - super::PROB_CLAMP);
            loss -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
        }
        loss / n as f64
    };
    trace.push(final_loss);

    LogisticFit {
        model: LogisticModel {
            weights,
            bias,
            means,
            stds,
        },
        loss_trace: trace,
    }
}

/// Mean log-loss and its analytic gradient at `(weights, bias)` on raw
/// (unstandardized) rows. Exposed so the gradient can be checked against
/// finite differences.
pub fn logistic_loss_gradient(
    weights: &[f64],
    bias: f64,
    rows: &[Vec<f64>],
    labels: &[u8],
) -> (f64, Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &y) in rows.iter().zip(labels) {
        let z = bias + row.iter().zip(weights).map(|(&x, &w)| x * w).sum::<f64>();
        let p = sigmoid(z);
        let err = p - f64::from(y);
        for (g, &x) in grad_w.iter_mut().zip(row) {
            *g += err * x / n;
        }
        grad_b += err / n;
        let pc = p.clamp(super::PROB_CLAMP, 1.0 - super::PROB_CLAMP);
        loss -= (if y == 1 { pc.ln() } else { (1.0 - pc).ln() }) / n;
    }
    (loss, grad_w, grad_b)
}
