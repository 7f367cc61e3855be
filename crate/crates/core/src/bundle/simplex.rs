//! Euclidean projection onto the probability simplex.

/// Projects `v` onto `{w >= 0, sum w = 1}` in place (sort-based, O(k log k)).
pub fn project_onto_simplex(v: &mut [f64]) {
    let k = v.len();
    if k == 0 {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_on_simplex_is_fixed() {
        let mut v = vec![0.2, 0.3, 0.5];
        project_onto_simplex(&mut v);
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn known_projection() {
        let mut v = vec![1.0, 1.0, -3.0];
        project_onto_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5, 0.0]);
        let mut v = vec![3.0, 0.0];
        project_onto_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_optimal(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
            let mut w = v.clone();
            project_onto_simplex(&mut w);
            let s: f64 = w.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            // Variational inequality <v - w, u - w> <= 0 at the vertices u = e_i.
            let vw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - b).collect();
            let base: f64 = vw.iter().zip(&w).map(|(a, b)| a * b).sum();
            for i in 0..v.len() {
                prop_assert!(vw[i] - base <= 1e-10);
            }
        }
    }
}
