//! Time averages over `[0, T]`: the closed-form phase average and a composite
//! Simpson driver for integrands without one.

use crate::error::{Error, Result};
use crate::numerics::C64;
use rayon::prelude::*;

/// `<exp(i w t)>_T = (exp(i w T) - 1) / (i w T)`, or exactly 1 for a degenerate
/// frequency.
pub fn phase_average(w: f64, t: f64, degenerate: bool) -> C64 {
    if degenerate || w == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let x = w * t;
    // (e^{ix} - 1)/(ix) = (sin x)/x + i (1 - cos x)/x, written with half angles
    // so small x keeps full precision.
    let h = 0.5 * x;
    let sinc = if h.abs() < 1e-8 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    C64::new(sinc * h.cos(), sinc * h.sin())
}

/// Upper limit on the Simpson step for an integrand whose fastest angular
/// frequency is `max_freq`: `min(T, pi / (5 max_freq))`.
pub fn pitch_limit(t: f64, max_freq: f64) -> f64 {
    if max_freq > 0.0 {
        t.min(std::f64::consts::PI / (5.0 * max_freq))
    } else {
        t
    }
}

pub fn check_pitch(t: f64, pitch: f64, max_freq: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveT(t));
    }
    let limit = pitch_limit(t, max_freq);
    if !(pitch > 0.0) || pitch > limit {
        return Err(Error::PitchTooCoarse { pitch, limit });
    }
    Ok(())
}

/// Composite Simpson integral of `f` over `[a, b]` with an even number of steps
/// no longer than `pitch`. `f` writes `width` values per node into its buffer.
fn simpson_segment<F>(a: f64, b: f64, pitch: f64, width: usize, f: &F) -> Vec<f64>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let mut acc = vec![0.0; width];
    if b <= a {
        return acc;
    }
    let mut n = ((b - a) / pitch).ceil() as usize;
    n = n.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    let mut buf = vec![0.0; width];
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let t = if k == n { b } else { a + k as f64 * h };
        f(t, &mut buf);
        for (s, v) in acc.iter_mut().zip(&buf) {
            *s += w * v;
        }
    }
    acc.iter_mut().for_each(|s| *s *= h / 3.0);
    acc
}

/// Time averages `<f>_T` at every `T` of an ascending grid, from one composite
/// Simpson pass: each segment `[T_{k-1}, T_k]` is integrated on its own and the
/// integrals are accumulated in grid order, so the result does not depend on
/// how the segments are scheduled across threads.
///
/// Returns `averages[k][c]` for grid point `k` and output channel `c`.
pub fn time_averages<F>(t_grid: &[f64], pitch: f64, width: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    if let Some(&t) = t_grid.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::NonPositiveT(t));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::BadParameters("T grid must be ascending".into()));
    }
    let bounds: Vec<(f64, f64)> =
        t_grid.iter().enumerate().map(|(k, &t)| (if k == 0 { 0.0 } else { t_grid[k - 1] }, t)).collect();
    // Split long segments into fixed chunks so one large T does not serialize
    // the whole pass; chunking depends only on the grid.
    let chunk = pitch * 4096.0;
    let pieces: Vec<(usize, f64, f64)> = bounds
        .iter()
        .enumerate()
        .flat_map(|(k, &(a, b))| {
            let m = (((b - a) / chunk).ceil() as usize).max(1);
            (0..m).map(move |i| {
                let lo = a + (b - a) * i as f64 / m as f64;
                let hi = if i + 1 == m { b } else { a + (b - a) * (i + 1) as f64 / m as f64 };
                (k, lo, hi)
            })
        })
        .collect();
    let integrals: Vec<Vec<f64>> =
        pieces.par_iter().map(|&(_, a, b)| simpson_segment(a, b, pitch, width, &f)).collect();
    let mut running = vec![0.0; width];
    let mut out = vec![Vec::new(); t_grid.len()];
    let mut idx = 0;
    for (k, &t) in t_grid.iter().enumerate() {
        while idx < pieces.len() && pieces[idx].0 == k {
            for (r, v) in running.iter_mut().zip(&integrals[idx]) {
                *r += v;
            }
            idx += 1;
        }
        out[k] = running.iter().map(|r| r / t).collect();
    }
    Ok(out)
}

/// `<f>_T` for a single scalar integrand.
pub fn time_average<F>(t: f64, pitch: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let v = time_averages(&[t], pitch, 1, |s, out| out[0] = f(s))?;
    Ok(v[0][0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phase_average_closed_form() {
        assert_eq!(phase_average(0.0, 3.0, false), C64::new(1.0, 0.0));
        assert_eq!(phase_average(5.0, 3.0, true), C64::new(1.0, 0.0));
        assert!(phase_average(1.0, 2.0 * PI, false).norm() < 1e-15);
        assert!((phase_average(1.0, PI, false).norm() - 2.0 / PI).abs() < 1e-15);
        let (w, t) = (0.7, 3.3);
        let direct = (C64::new(0.0, w * t).exp() - 1.0) / C64::new(0.0, w * t);
        assert!((phase_average(w, t, false) - direct).norm() < 1e-15);
        let tiny = phase_average(1e-12, 1.0, false);
        assert!((tiny - C64::new(1.0, 0.5e-12)).norm() < 1e-20);
    }

    #[test]
    fn simpson_averages_cos_squared() {
        for &t in &[1.0, 10.0, 2.0 * PI] {
            let avg = time_average(t, 1e-3, |s| s.cos().powi(2)).unwrap();
            let exact = 0.5 + (2.0 * t).sin() / (4.0 * t);
            assert!((avg - exact).abs() < 1e-12, "T={t}");
        }
    }

    #[test]
    fn grid_pass_matches_independent_runs() {
        let grid = [0.5, 2.0, 7.5, 40.0];
        let all = time_averages(&grid, 0.01, 2, |s, out| {
            out[0] = s.sin().abs();
            out[1] = (3.0 * s).cos();
        })
        .unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let single = time_average(t, 0.01, |s| (3.0 * s).cos()).unwrap();
            assert!((all[k][1] - single).abs() < 1e-10);
        }
    }

    #[test]
    fn pitch_rule() {
        assert!(check_pitch(10.0, 0.1, 1.0).is_ok());
        assert!(matches!(check_pitch(10.0, 1.0, 1.0), Err(Error::PitchTooCoarse { .. })));
        assert!(matches!(check_pitch(0.0, 0.1, 1.0), Err(Error::NonPositiveT(_))));
        assert!(check_pitch(0.5, 0.5, 0.0).is_ok());
    }
}
