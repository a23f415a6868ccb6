//! Adaptive composite Simpson quadrature for complex integrands on [lo, hi],
//! with a densely pre-partitioned core window around a localized feature.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Target error relative to the sum of |panel integrals|.
    pub rel_tol: f64,
    /// Maximum bisection depth below an initial panel.
    pub max_depth: u32,
    /// Initial panels inside the core window (rounded up to even).
    pub core_panels: usize,
    /// Initial panels on each side outside the core window.
    pub outer_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_depth: 20,
            core_panels: 512,
            outer_panels: 64,
        }
    }
}

/// Window [center - half_width, center + half_width] that gets dense panels.
/// The centre itself is always a panel boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Core {
    pub center: f64,
    pub half_width: f64,
}

/// Sorted initial panel boundaries on [lo, hi].
pub fn initial_partition(lo: f64, hi: f64, core: Option<Core>, opts: &QuadratureOptions) -> Vec<f64> {
    fn push_uniform(points: &mut Vec<f64>, a: f64, b: f64, n: usize) {
        if b <= a {
            return;
        }
        let n = n.max(1);
        for i in 0..n {
            points.push(a + (b - a) * i as f64 / n as f64);
        }
    }
    let mut points = Vec::new();
    match core {
        Some(Core { center, half_width }) if half_width > 0.0 => {
            let half = opts.core_panels.div_ceil(2).max(1);
            let step = half_width / half as f64;
            let core_lo = center - half_width;
            let core_hi = center + half_width;
            push_uniform(&mut points, lo, core_lo.min(hi), opts.outer_panels);
            for i in -(half as i64)..(half as i64) {
                let z = center + step * i as f64;
                if z >= lo && z < hi {
                    points.push(z);
                }
            }
            push_uniform(&mut points, core_hi.max(lo), hi, opts.outer_panels);
        }
        Some(Core { center, .. }) => {
            push_uniform(&mut points, lo, center.clamp(lo, hi), opts.outer_panels);
            push_uniform(&mut points, center.clamp(lo, hi), hi, opts.outer_panels);
        }
        None => push_uniform(&mut points, lo, hi, 2 * opts.outer_panels),
    }
    points.push(hi);
    points.retain(|z| *z >= lo && *z <= hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

struct Panel {
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
}

fn simpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (fa + 4.0 * fm + fb) * ((b - a) / 6.0)
}

fn refine<F>(f: &F, p: &Panel, tol: f64, depth: u32, opts: &QuadratureOptions) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let split = left + right;
    let diff = (split - p.whole).norm();
    if diff <= 15.0 * tol || !(m > p.a && m < p.b) {
        return Ok(split + (split - p.whole) / 15.0);
    }
    if depth >= opts.max_depth {
        return Err(Error::Quadrature {
            lo: p.a,
            hi: p.b,
            estimate: split,
            change: diff / split.norm().max(f64::MIN_POSITIVE),
        });
    }
    let l = Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left };
    let r = Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right };
    Ok(refine(f, &l, tol / 2.0, depth + 1, opts)? + refine(f, &r, tol / 2.0, depth + 1, opts)?)
}

fn panel_integrals<F>(f: &F, bounds: &[f64], opts: &QuadratureOptions) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if bounds.len() < 2 {
        return Ok(Vec::new());
    }
    let values: Vec<Complex64> = bounds.iter().map(|&z| f(z)).collect::<Result<_>>()?;
    let mut panels = Vec::with_capacity(bounds.len() - 1);
    for i in 0..bounds.len() - 1 {
        let (a, b) = (bounds[i], bounds[i + 1]);
        let fm = f(0.5 * (a + b))?;
        let whole = simpson(a, b, values[i], fm, values[i + 1]);
        panels.push(Panel { a, b, fa: values[i], fm, fb: values[i + 1], whole });
    }
    let scale: f64 = panels.iter().map(|p| p.whole.norm()).sum();
    let total = bounds[bounds.len() - 1] - bounds[0];
    let abs_tol = opts.rel_tol * scale;
    panels
        .iter()
        .map(|p| refine(f, p, abs_tol * (p.b - p.a) / total, 0, opts))
        .collect()
}

/// ∫ f over [lo, hi]. A degenerate interval gives zero.
pub fn integrate<F>(f: F, lo: f64, hi: f64, core: Option<Core>, opts: &QuadratureOptions) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if hi == lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let bounds = initial_partition(lo, hi, core, opts);
    // Fixed-order summation keeps results reproducible.
    Ok(panel_integrals(&f, &bounds, opts)?.into_iter().sum())
}

/// Cumulative integrals ∫_{lo}^{z} f for every z in `outputs` (sorted, within
/// [lo, hi]). The output points are merged into the panel boundaries so each
/// value is an exact partial sum.
pub fn integrate_cumulative<F>(
    f: F,
    lo: f64,
    hi: f64,
    outputs: &[f64],
    core: Option<Core>,
    opts: &QuadratureOptions,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.iter().any(|&z| z < lo || z > hi) {
        return Err(Error::param("z_grid", "output positions must be sorted and inside the medium"));
    }
    if hi == lo {
        return Ok(vec![Complex64::new(0.0, 0.0); outputs.len()]);
    }
    let mut bounds = initial_partition(lo, hi, core, opts);
    bounds.extend_from_slice(outputs);
    bounds.sort_by(f64::total_cmp);
    bounds.dedup();
    let panels = panel_integrals(&f, &bounds, opts)?;

    let mut result = Vec::with_capacity(outputs.len());
    let mut acc = Complex64::new(0.0, 0.0);
    let mut next = 0;
    for &z in outputs {
        while bounds[next] < z {
            acc += panels[next];
            next += 1;
        }
        result.push(acc);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    #[test]
    fn polynomial_and_oscillatory() {
        let v = integrate(|x| Ok(Complex64::new(x * x, -x)), 0.0, 3.0, None, &opts()).unwrap();
        assert!((v - Complex64::new(9.0, -4.5)).norm() < 1e-12);
        let v = integrate(|x| Ok(Complex64::new(0.0, x).exp()), 0.0, 10.0, None, &opts()).unwrap();
        let exact = (Complex64::new(0.0, 10.0).exp() - 1.0) / Complex64::new(0.0, 1.0);
        assert!((v - exact).norm() < 1e-9);
    }

    #[test]
    fn narrow_lorentzian_in_core() {
        let w = 1e-3;
        let f = |x: f64| Ok(Complex64::new(1.0, 0.0) / Complex64::new(x - 5.0, w));
        let core = Core { center: 5.0, half_width: 0.5 };
        let v = integrate(f, 0.0, 10.0, Some(core), &opts()).unwrap();
        // ∫ (x - i w) / (x² + w²) over symmetric range
        let exact_im = -2.0 * (5.0 / w).atan();
        assert!(v.re.abs() < 1e-8);
        assert!((v.im - exact_im).abs() < 1e-7 * exact_im.abs());
    }

    #[test]
    fn cumulative_matches_direct() {
        let f = |x: f64| Ok(Complex64::new(x.cos(), x.sin()));
        let outs = [0.0, 0.7, 2.0, 2.0, 5.0];
        let c = integrate_cumulative(f, 0.0, 5.0, &outs, None, &opts()).unwrap();
        assert_eq!(c[0], Complex64::new(0.0, 0.0));
        for (z, v) in outs.iter().zip(&c) {
            let exact = Complex64::new(z.sin(), 1.0 - z.cos());
            assert!((v - exact).norm() < 1e-9);
        }
        assert_eq!(c[2], c[3]);
    }

    #[test]
    fn partition_contains_center() {
        let core = Core { center: 50.0, half_width: 18.0 };
        let p = initial_partition(0.0, 100.0, Some(core), &opts());
        assert!(p.contains(&50.0));
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 100.0);
        // core clipped by the boundary
        let core = Core { center: 1.0, half_width: 18.0 };
        let p = initial_partition(0.0, 100.0, Some(core), &opts());
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn non_convergence_is_reported() {
        let o = QuadratureOptions { max_depth: 2, rel_tol: 1e-14, core_panels: 2, outer_panels: 1 };
        let r = integrate(|x| Ok(Complex64::new((1.0 / (x + 1e-3)).sin(), 0.0)), 0.0, 1.0, None, &o);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
