use crate::game::torus_diff;

use super::DynamicsError;

/// Permutations are searched exhaustively up to this many particles.
const EXACT_LIMIT: usize = 6;

/// Distance between particle states `(a, x, b, y)` minimised over relabellings
/// of each player's particles; positions use the torus metric.
pub fn match_particles(n: usize, m: usize, z: &[f64], z_star: &[f64]) -> Result<f64, DynamicsError> {
    let d = 2 * n + 2 * m;
    if z.len() != d || z_star.len() != d {
        return Err(DynamicsError::CountMismatch(format!(
            "expected {d} coordinates for ({n}, {m}) particles, got {} and {}",
            z.len(),
            z_star.len()
        )));
    }
    let side = |w: &[f64], p: &[f64], ws: &[f64], ps: &[f64]| {
        let k = w.len();
        let cost: Vec<f64> = (0..k * k)
            .map(|c| {
                let (i, j) = (c / k, c % k);
                (w[i] - ws[j]).powi(2) + torus_diff(p[i], ps[j]).powi(2)
            })
            .collect();
        if k <= EXACT_LIMIT {
            exact_assignment(&cost, k)
        } else {
            greedy_assignment(&cost, k)
        }
    };
    let a = side(&z[..n], &z[n..2 * n], &z_star[..n], &z_star[n..2 * n]);
    let b = side(
        &z[2 * n..2 * n + m],
        &z[2 * n + m..],
        &z_star[2 * n..2 * n + m],
        &z_star[2 * n + m..],
    );
    Ok((a + b).sqrt())
}

/// Minimum of `sum_i cost[i, pi(i)]` by branch and bound.
fn exact_assignment(cost: &[f64], k: usize) -> f64 {
    fn go(cost: &[f64], k: usize, i: usize, used: u32, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == k {
            *best = acc;
            return;
        }
        for j in 0..k {
            if used & (1 << j) == 0 {
                go(cost, k, i + 1, used | (1 << j), acc + cost[i * k + j], best);
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, k, 0, 0, 0.0, &mut best);
    best
}

/// Repeatedly matches the globally cheapest remaining pair.
fn greedy_assignment(cost: &[f64], k: usize) -> f64 {
    let mut row_used = vec![false; k];
    let mut col_used = vec![false; k];
    let mut total = 0.0;
    for _ in 0..k {
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..k).filter(|&i| !row_used[i]) {
            for j in (0..k).filter(|&j| !col_used[j]) {
                if cost[i * k + j] < best.0 {
                    best = (cost[i * k + j], i, j);
                }
            }
        }
        row_used[best.1] = true;
        col_used[best.2] = true;
        total += best.0;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relabelling_and_torus() {
        let zs = [0.5, 0.5, 0.375, 0.875, 0.5, 0.5, 0.125, 0.625];
        assert_eq!(match_particles(2, 2, &zs, &zs).unwrap(), 0.0);
        let swapped = [0.5, 0.5, 0.875, 0.375, 0.5, 0.5, 0.125, 0.625];
        assert_eq!(match_particles(2, 2, &swapped, &zs).unwrap(), 0.0);
        let mut moved = zs;
        moved[2] += 0.01;
        assert!((match_particles(2, 2, &moved, &zs).unwrap() - 0.01).abs() < 1e-12);
        let wrap = [1.0, 0.995, 1.0, 0.005];
        assert!((match_particles(1, 1, &wrap, &[1.0, 0.005, 1.0, 0.995]).unwrap() - 0.01 * 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(match_particles(2, 2, &zs[..6], &zs), Err(DynamicsError::CountMismatch(_))));
    }

    #[test]
    fn greedy_matches_exact_on_separated_points() {
        let k = 8;
        let w = vec![0.125; k];
        let p: Vec<f64> = (0..k).map(|i| i as f64 / k as f64).collect();
        let mut q = p.clone();
        q.reverse();
        let mut z = w.clone();
        z.extend(&q);
        z.extend([1.0]);
        z.extend([0.0]);
        let mut zs = w;
        zs.extend(&p);
        zs.extend([1.0]);
        zs.extend([0.0]);
        assert!(match_particles(k, 1, &z, &zs).unwrap() < 1e-15);
    }
}
