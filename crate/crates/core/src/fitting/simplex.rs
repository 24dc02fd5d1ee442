//! Box-bounded Nelder-Mead.
//!
//! Trial points are projected back into the box before evaluation, so the
//! objective is never called outside the bounds.

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub max_iter: usize,
    /// Stop once the best value improved by less than `stall_rel` (relative)
    /// over the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rel: f64,
    /// Initial edge length as a fraction of each bound interval.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            stall_window: 20,
            stall_rel: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub stalled: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn blend(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
}

pub(crate) fn minimize<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, lo, hi);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.clone(), eval(&start)));
    for i in 0..n {
        let mut x = start.clone();
        let step = opts.initial_step * (hi[i] - lo[i]);
        x[i] = if x[i] + step <= hi[i] { x[i] + step } else { x[i] - step };
        project(&mut x, lo, hi);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut history = Vec::with_capacity(opts.max_iter + 1);
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        history.push(best);
        if best == 0.0 {
            stalled = true;
            break;
        }
        if history.len() > opts.stall_window {
            let then = history[history.len() - 1 - opts.stall_window];
            if then.is_finite() && then - best <= opts.stall_rel * then.abs() {
                stalled = true;
                break;
            }
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let mut xr = blend(&centroid, &worst.0, -1.0);
        project(&mut xr, lo, hi);
        let fr = eval(&xr);

        if fr < simplex[0].1 {
            let mut xe = blend(&centroid, &worst.0, -2.0);
            project(&mut xe, lo, hi);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = blend(&centroid, &xr, 0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = blend(&centroid, &worst.0, 0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = blend(&x_best, &vertex.0, 0.5);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult {
        x,
        f,
        iterations,
        stalled,
    }
}
