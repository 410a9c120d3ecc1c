//! Box-constrained Nelder–Mead minimizer used for likelihood fitting.

/// Result of one minimization.
#[derive(Clone, Debug)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub evals: usize,
}

/// Minimizes `f` starting at `start`, projecting every vertex onto the box.
///
/// `step` is the initial simplex edge per coordinate. Non-finite values are
/// treated as `+inf`.
pub(crate) fn minimize<F>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    bounds: &[(f64, f64)],
    max_evals: usize,
    ftol: f64,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for (v, &(l, u)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(l, u);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0);
    let f0 = eval(&x0, &mut evals);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += step[i];
        // step inward when the vertex would sit on the bound
        if x[i] > bounds[i].1 {
            x[i] = x0[i] - step[i];
        }
        clamp(&mut x);
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if worst.is_finite() && (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut p);
            p
        };
        let reflected = along(1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 { along(0.5) } else { along(-0.5) };
            let fc = eval(&contracted, &mut evals);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    clamp(&mut p);
                    let fp = eval(&p, &mut evals);
                    *vertex = (p, fp);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evals }
}
