//! Nelder-Mead maximization in two dimensions, with points clamped to a box.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { max_evals: 4000, xtol: 1e-11, ftol: 1e-15, restarts: 3 }
    }
}

type P = [f64; 2];

fn clamp(p: P, lo: P, hi: P) -> P {
    [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])]
}

fn lerp(a: P, b: P, t: f64) -> P {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Maps NaN to -inf so that comparisons stay total.
fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

impl NelderMead {
    /// Maximizes `f` over the box `[lo, hi]` starting at `start` with initial
    /// simplex edge lengths `step`. Returns the best point and value seen.
    pub fn maximize(&self, f: impl Fn(P) -> f64, start: P, step: P, lo: P, hi: P) -> (P, f64) {
        let evals = std::cell::Cell::new(0usize);
        let eval = |p: P| {
            evals.set(evals.get() + 1);
            score(f(p))
        };
        let mut best = clamp(start, lo, hi);
        let mut best_val = eval(best);
        let mut scale = step;
        for _ in 0..=self.restarts {
            let x0 = best;
            let edge = |k: usize| {
                let mut p = x0;
                p[k] = if x0[k] + scale[k] <= hi[k] { x0[k] + scale[k] } else { x0[k] - scale[k] };
                clamp(p, lo, hi)
            };
            let mut s = [(x0, best_val), (edge(0), 0.0), (edge(1), 0.0)];
            s[1].1 = eval(s[1].0);
            s[2].1 = eval(s[2].0);
            let budget = self.max_evals;
            loop {
                s.sort_by(|a, b| b.1.total_cmp(&a.1));
                let spread = (s[0].1 - s[2].1).abs();
                let diam = s[1..].iter().map(|v| (v.0[0] - s[0].0[0]).abs().max((v.0[1] - s[0].0[1]).abs())).fold(0.0, f64::max);
                if diam <= self.xtol || (s[0].1.is_finite() && spread <= self.ftol && diam <= 1e3 * self.xtol) || evals.get() >= budget {
                    break;
                }
                let centroid = lerp(s[0].0, s[1].0, 0.5);
                let refl = clamp(lerp(centroid, s[2].0, -1.0), lo, hi);
                let fr = eval(refl);
                if fr > s[0].1 {
                    let exp = clamp(lerp(centroid, s[2].0, -2.0), lo, hi);
                    let fe = eval(exp);
                    s[2] = if fe > fr { (exp, fe) } else { (refl, fr) };
                } else if fr > s[1].1 {
                    s[2] = (refl, fr);
                } else {
                    let outside = fr > s[2].1;
                    let target = if outside { refl } else { s[2].0 };
                    let c = clamp(lerp(centroid, target, 0.5), lo, hi);
                    let fc = eval(c);
                    let accept = if outside { fc >= fr } else { fc > s[2].1 };
                    if accept {
                        s[2] = (c, fc);
                    } else {
                        for k in 1..3 {
                            let p = lerp(s[0].0, s[k].0, 0.5);
                            s[k] = (p, eval(p));
                        }
                    }
                }
            }
            s.sort_by(|a, b| b.1.total_cmp(&a.1));
            let improved = s[0].1 > best_val + self.ftol;
            if s[0].1 > best_val {
                best = s[0].0;
                best_val = s[0].1;
            }
            if !improved || evals.get() >= self.max_evals {
                break;
            }
            scale = [scale[0] * 0.1, scale[1] * 0.1];
        }
        (best, best_val)
    }
}
