//! Nelder-Mead simplex minimization with an evaluation budget.

/// Outcome of one local run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Edge length of the initial axis-aligned simplex.
    pub step: f64,
    pub max_evaluations: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            step: 0.3,
            max_evaluations: 1000,
            f_tol: 1e-12,
        }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    /// Minimizes `f` from `x0`. Non-finite values are treated as `+inf`.
    /// Never calls `f` more than `max_evaluations` times.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = x0.len();
        let mut evals = 0usize;
        let budget = self.max_evaluations;
        let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        if budget == 0 {
            return Minimum {
                x: x0.to_vec(),
                value: f64::INFINITY,
                evaluations: 0,
            };
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(x0, &mut evals);
        simplex.push((x0.to_vec(), v0));
        for i in 0..dim {
            if evals >= budget {
                break;
            }
            let mut x = x0.to_vec();
            x[i] += self.step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        if simplex.len() < dim + 1 || dim == 0 {
            return best_of(simplex, evals);
        }

        while evals < budget {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[dim].1);
            if worst.is_finite() && (worst - best).abs() <= self.f_tol {
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|p| p.0[j]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[dim].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(REFLECT);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                if evals >= budget {
                    simplex[dim] = (xr, fr);
                    break;
                }
                let xe = along(EXPAND);
                let fe = eval(&xe, &mut evals);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
                continue;
            }
            if evals >= budget {
                break;
            }
            // outside contraction if the reflection helped at all, else inside
            let xc = along(if fr < simplex[dim].1 { CONTRACT } else { -CONTRACT });
            let fc = eval(&xc, &mut evals);
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let x_best = simplex[0].0.clone();
            for p in simplex.iter_mut().skip(1) {
                if evals >= budget {
                    break;
                }
                let x: Vec<f64> = x_best.iter().zip(&p.0).map(|(b, v)| b + SHRINK * (v - b)).collect();
                let v = eval(&x, &mut evals);
                *p = (x, v);
            }
        }
        best_of(simplex, evals)
    }
}

fn best_of(simplex: Vec<(Vec<f64>, f64)>, evaluations: usize) -> Minimum {
    let (x, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex holds at least the start point");
    Minimum { x, value, evaluations }
}
