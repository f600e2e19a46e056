/// Clamp applied to probabilities before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

/// Binary cross-entropy of one prediction.
pub fn bce(probability: f64, label: u8) -> f64 {
    let p = probability.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn mean_bce(probabilities: &[f64], labels: &[u8]) -> f64 {
    let n = probabilities.len().max(1) as f64;
    probabilities.iter().zip(labels).map(|(&p, &y)| bce(p, y)).sum::<f64>() / n
}
