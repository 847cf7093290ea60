//! Nelder–Mead simplex minimisation (direct search), with the classical
//! reflection/expansion/contraction/shrink coefficients of Lagarias et al.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when every vertex is within this sup-norm distance of the best one...
    pub x_tolerance: f64,
    /// ...and every vertex value is within this of the best value.
    pub f_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Initial simplex edge along coordinate `i` is `initial_step * max(|x0_i|, 1)`.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            x_tolerance: 1e-4,
            f_tolerance: 1e-4,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimise `f` starting from `x0`. NaN values are treated as `+inf`, so the
/// objective may signal infeasible points that way.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if dim == 0 {
        let v = eval(x0);
        return Minimum { x: Vec::new(), f: v, iterations: 0, evaluations: 1, converged: true };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step * x0[i].abs().max(1.0);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];

    loop {
        sort_simplex(&mut simplex, &mut values);
        if has_converged(&simplex, &values, opts) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = dim;

        // reflection
        for j in 0..dim {
            trial[j] = centroid[j] + opts.reflection * (centroid[j] - simplex[worst][j]);
        }
        let fr = eval(&trial);

        if fr < values[0] {
            for j in 0..dim {
                trial2[j] = centroid[j] + opts.expansion * (trial[j] - centroid[j]);
            }
            let fe = eval(&trial2);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }

        // contraction
        let accepted = if fr < values[worst] {
            for j in 0..dim {
                trial2[j] = centroid[j] + opts.contraction * (trial[j] - centroid[j]);
            }
            let fc = eval(&trial2);
            if fc <= fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fc;
                true
            } else {
                false
            }
        } else {
            for j in 0..dim {
                trial2[j] = centroid[j] + opts.contraction * (simplex[worst][j] - centroid[j]);
            }
            let fcc = eval(&trial2);
            if fcc < values[worst] {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fcc;
                true
            } else {
                false
            }
        };
        if accepted {
            continue;
        }

        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=dim {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + opts.shrink * (*x - b);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    Minimum {
        x: simplex.swap_remove(0),
        f: values[0],
        iterations,
        evaluations,
        converged,
    }
}

fn sort_simplex(simplex: &mut [Vec<f64>], values: &mut [f64]) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable, so ties keep the older vertex first
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let s: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
    let v: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    simplex.clone_from_slice(&s);
    values.copy_from_slice(&v);
}

fn has_converged(simplex: &[Vec<f64>], values: &[f64], opts: &NelderMeadOptions) -> bool {
    let best = &simplex[0];
    let fbest = values[0];
    if !fbest.is_finite() {
        return false;
    }
    // the floor keeps termination reachable when f is large and rounding dominates
    let ftol = opts.f_tolerance.max(8.0 * f64::EPSILON * fbest.abs());
    let xspread = simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let fspread = values[1..].iter().map(|v| (v - fbest).abs()).fold(0.0, f64::max);
    xspread <= opts.x_tolerance && fspread <= ftol
}
