use nalgebra::DMatrix;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_cutoff * sigma_max`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_cutoff: f64) -> usize {
    rank_from_singular_values(&singular_values(m), rel_cutoff)
}

pub fn rank_from_singular_values(sv: &[f64], rel_cutoff: f64) -> usize {
    match sv.first() {
        Some(&max) if max > 0.0 => sv.iter().filter(|&&s| s > rel_cutoff * max).count(),
        _ => 0,
    }
}
