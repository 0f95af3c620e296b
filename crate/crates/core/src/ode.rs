//! Adaptive embedded Runge-Kutta integration (Cash-Karp 4(5) pair) for the
//! scalar storage-node decay equation.

/// Tolerances for the adaptive stepper.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-6,
            abs_tol: 1e-12,
            max_steps: 4_000_000,
        }
    }
}

// Cash-Karp tableau.
const A: [[f64; 5]; 5] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
    [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
    [
        1631.0 / 55296.0,
        175.0 / 512.0,
        575.0 / 13824.0,
        44275.0 / 110592.0,
        253.0 / 4096.0,
    ],
];
const C5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
const C4: [f64; 6] = [
    2825.0 / 27648.0,
    0.0,
    18575.0 / 48384.0,
    13525.0 / 55296.0,
    277.0 / 14336.0,
    1.0 / 4.0,
];

const NODES: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0];

/// One Cash-Karp step; returns (5th-order value, local error estimate).
fn ck_step(f: &dyn Fn(f64, f64) -> f64, t: f64, v: f64, h: f64) -> (f64, f64) {
    let mut k = [0.0f64; 6];
    k[0] = f(t, v);
    for stage in 1..6 {
        let mut dv = 0.0;
        for (j, kj) in k.iter().enumerate().take(stage) {
            dv += A[stage - 1][j] * kj;
        }
        k[stage] = f(t + h * NODES[stage - 1], v + h * dv);
    }
    let mut v5 = v;
    let mut v4 = v;
    for i in 0..6 {
        v5 += h * C5[i] * k[i];
        v4 += h * C4[i] * k[i];
    }
    (v5, (v5 - v4).abs())
}

/// Integrate dv/dt = f(t, v) from (t0, v0) to t_end, returning the accepted
/// trajectory including both endpoints.
pub fn integrate(
    f: &dyn Fn(f64, f64) -> f64,
    t0: f64,
    v0: f64,
    t_end: f64,
    opts: OdeOptions,
) -> Vec<(f64, f64)> {
    assert!(t_end > t0, "integration span must be positive");
    let mut t = t0;
    let mut v = v0;
    let mut out = vec![(t, v)];
    let mut h = (t_end - t0) / 100.0;
    for _ in 0..opts.max_steps {
        if t >= t_end {
            break;
        }
        h = h.min(t_end - t);
        let (v_next, err) = ck_step(f, t, v, h);
        let scale = opts.abs_tol + opts.rel_tol * v.abs().max(v_next.abs());
        if err <= scale || h <= (t_end - t0) * 1e-14 {
            t += h;
            v = v_next;
            out.push((t, v));
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * (scale / err).powf(0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * (scale / err).powf(0.25)).clamp(0.1, 1.0);
        }
    }
    if out.last().map(|&(t, _)| t) != Some(t_end) {
        // Step budget exhausted short of t_end; record where we stopped.
        out.push((t, v));
    }
    out
}

/// Final value only.
pub fn integrate_to(f: &dyn Fn(f64, f64) -> f64, t0: f64, v0: f64, t_end: f64, opts: OdeOptions) -> f64 {
    integrate(f, t0, v0, t_end, opts).last().expect("nonempty").1
}
