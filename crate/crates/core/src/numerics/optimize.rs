//! Derivative-free maximization on a bounded interval.

const GRID_POINTS: usize = 64;
const MAX_GOLDEN_STEPS: usize = 300;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes `f` on `[lo, hi]`, returning `(argmax, max)`.
///
/// A coarse grid of 64 points (log-spaced when `lo > 0`) picks the best sample;
/// golden-section search then refines inside its two neighbours until the
/// bracket is narrower than `2 * tolerance`. Whichever of the grid point and
/// the refined point is larger is returned, so a degenerate refinement can
/// never make the answer worse than the grid.
pub fn maximize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tolerance: f64) -> (f64, f64) {
    assert!(lo < hi, "maximize_scalar requires lo < hi (got {lo}, {hi})");
    let grid = sample_grid(lo, hi);
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best });

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID_POINTS - 1)];

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_GOLDEN_STEPS {
        if b - a <= 2.0 * tolerance {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let f_mid = f(mid);

    [(grid[best], values[best]), (c, fc), (d, fd), (mid, f_mid)]
        .into_iter()
        .fold((grid[best], values[best]), |acc, cand| if cand.1 > acc.1 { cand } else { acc })
}

fn sample_grid(lo: f64, hi: f64) -> Vec<f64> {
    let last = (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS)
        .map(|i| {
            let t = i as f64 / last;
            if lo > 0.0 {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .map(|x| x.clamp(lo, hi))
        .collect()
}
