/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-based: find the largest `rho` with `u_rho > (sum_{j<=rho} u_j - 1) / rho`
/// over the descending sort `u`, then shift and clamp.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_coordinate_closed_form() {
        assert_eq!(project_to_simplex(&[0.8, 0.8]), vec![0.5, 0.5]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_to_simplex(&[0.3, 0.7]), vec![0.3, 0.7]);
    }

    #[test]
    fn output_is_on_simplex() {
        let p = project_to_simplex(&[-3.0, 0.2, 5.0, 1.1]);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn dist2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn matches_grid_search() {
        let step = 1e-3;
        let grid = (1.0 / step) as usize;
        let points: [&[f64]; 4] = [
            &[0.9, -0.2],
            &[0.35, 1.4],
            &[0.2, 0.5, 0.9],
            &[-0.4, 0.1, 0.05],
        ];
        for v in points {
            let p = project_to_simplex(v);
            let best = if v.len() == 2 {
                (0..=grid)
                    .map(|i| {
                        let x = i as f64 * step;
                        dist2(&[x, 1.0 - x], v)
                    })
                    .fold(f64::INFINITY, f64::min)
            } else {
                let mut best = f64::INFINITY;
                for i in 0..=grid {
                    for j in 0..=grid - i {
                        let x = i as f64 * step;
                        let y = j as f64 * step;
                        best = best.min(dist2(&[x, y, 1.0 - x - y], v));
                    }
                }
                best
            };
            assert!(dist2(&p, v) <= best + 1e-6, "{v:?}");
        }
    }
}
