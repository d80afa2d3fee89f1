//! The two differential-equation applications: a delta-forced second-order
//! ODE solved through regularization, and a semilinear wave equation in
//! three space dimensions solved by Picard iteration on the retarded
//! integral form (plus a cheap one-dimensional analog for regression
//! tests).

use crate::algebra::{Formalism, Provenance, Representative};
use crate::asymptotics::{classify, EpsLadder, Mode, SweepOptions, Verdict};
use crate::error::{Error, Result};
use crate::formalism::DomainSpec;
use crate::numerics::{BoundingBox, SampledFunction};
use crate::testobjects::TestObjectFamily;
use rayon::prelude::*;
use std::sync::Arc;

/// Solution samples of the regularized ODE on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub eps: f64,
    pub mollifier_id: String,
}

impl Trajectory {
    /// CSV with columns t, x, xdot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,xdot\n");
        for i in 0..self.t.len() {
            out.push_str(&format!("{},{},{}\n", self.t[i], self.x[i], self.xdot[i]));
        }
        out
    }

    /// State at an arbitrary time by cubic Hermite interpolation.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let n = self.t.len();
        if t <= self.t[0] {
            return (self.x[0], self.xdot[0]);
        }
        if t >= self.t[n - 1] {
            return (self.x[n - 1], self.xdot[n - 1]);
        }
        let h = self.t[1] - self.t[0];
        let i = (((t - self.t[0]) / h).floor() as usize).min(n - 2);
        let s = (t - self.t[i]) / h;
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let (v0, v1) = (self.xdot[i], self.xdot[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let x = h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1;
        // derivative of the Hermite interpolant
        let d00 = 6.0 * s * (s - 1.0);
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d01 = -d00;
        let d11 = s * (3.0 * s - 2.0);
        let v = d00 * x0 / h + d10 * v0 + d01 * x1 / h + d11 * v1;
        (x, v)
    }

    pub fn velocity_jump(&self) -> f64 {
        self.xdot[self.xdot.len() - 1] - self.xdot[0]
    }
}

/// Classical RK4 integration of x'' = f(x) g(t) from t0 to t1 (either
/// direction), recording every step.
fn integrate_second_order(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    x0: f64,
    v0: f64,
    t0: f64,
    t1: f64,
    max_step: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let span = t1 - t0;
    let steps = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut t = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    let (mut x, mut v) = (x0, v0);
    t.push(t0);
    xs.push(x);
    vs.push(v);
    for i in 0..steps {
        let ti = t0 + i as f64 * h;
        let acc = |tt: f64, xx: f64| f(xx) * g(tt);
        let k1 = (v, acc(ti, x));
        let k2 = (v + 0.5 * h * k1.1, acc(ti + 0.5 * h, x + 0.5 * h * k1.0));
        let k3 = (v + 0.5 * h * k2.1, acc(ti + 0.5 * h, x + 0.5 * h * k2.0));
        let k4 = (v + h * k3.1, acc(ti + h, x + h * k3.0));
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        t.push(t0 + (i + 1) as f64 * h);
        xs.push(x);
        vs.push(v);
    }
    (t, xs, vs)
}

/// Solve x''(t) = f(x(t)) * (S_eps phi)(-t) on [-1, t_end] with initial
/// state (x0, xdot0) at t = -1, by RK4 with step at most eps/64.
pub fn solve_delta_ode(
    f: impl Fn(f64) -> f64 + Send + Sync,
    x0: f64,
    xdot0: f64,
    phi: &SampledFunction,
    eps: f64,
    t_end: f64,
    mollifier_id: impl Into<String>,
) -> Result<Trajectory> {
    if phi.dim() != 1 {
        return Err(Error::usage("solve_delta_ode expects a 1D mollifier"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::usage("solve_delta_ode requires 0 < eps <= 1"));
    }
    let scaled = phi.scale(eps)?;
    // support of t -> (S_eps phi)(-t) is the reflected support
    let sup = scaled.support();
    let (flo, fhi) = (-sup.hi()[0], -sup.lo()[0]);
    if flo <= -1.0 || fhi >= t_end {
        return Err(Error::usage(format!(
            "scaled forcing support [{flo}, {fhi}] must sit strictly inside (-1, {t_end})"
        )));
    }
    let g = move |t: f64| scaled.eval(&[-t]).re;
    let (t, x, v) = integrate_second_order(&f, &g, x0, xdot0, -1.0, t_end, eps / 64.0);
    if x.iter().chain(&v).any(|q| !q.is_finite()) {
        return Err(Error::evaluation(
            "trajectory left the finite range (blow-up under the regularized forcing)",
        ));
    }
    Ok(Trajectory {
        t,
        x,
        xdot: v,
        eps,
        mollifier_id: mollifier_id.into(),
    })
}

/// The solution-as-representative: R(phi, t) is the value at time t of the
/// trajectory driven by the forcing phi(-.). Each distinct test function
/// triggers one solve over the working time interval.
pub fn ode_solution_representative(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    x0: f64,
    xdot0: f64,
    t_end: f64,
    domain: DomainSpec,
) -> Representative {
    let f = Arc::new(f);
    Representative::new(
        Formalism::C,
        domain,
        Provenance::Solver("delta-ode".into()),
        move |phi, t| {
            let sup = phi.support();
            let (flo, fhi) = (-sup.hi()[0], -sup.lo()[0]);
            if flo <= -1.0 || fhi >= t_end {
                return Err(Error::domain(format!(
                    "forcing support [{flo}, {fhi}] leaves (-1, {t_end})"
                )));
            }
            let g = |tt: f64| phi.eval(&[-tt]).re;
            let step = (sup.side(0) / 128.0).min(1e-2);
            let (ts, xs, vs) =
                integrate_second_order(f.as_ref(), &g, x0, xdot0, -1.0, t_end, step);
            let traj = Trajectory {
                t: ts,
                x: xs,
                xdot: vs,
                eps: 1.0,
                mollifier_id: String::new(),
            };
            Ok(num_complex::Complex64::new(traj.state_at(t[0]).0, 0.0))
        },
    )
}

/// Probe the growth order of the ODE solution under scaled insertions: the
/// solution map is wrapped as a representative and handed to the
/// moderateness classifier.
pub fn ode_moderateness_probe(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    x0: f64,
    xdot0: f64,
    battery: &[TestObjectFamily],
    k_time: &BoundingBox,
    ladder: &EpsLadder,
) -> Result<Verdict> {
    let t_end = k_time.hi()[0] + 0.5;
    let domain = DomainSpec::new(BoundingBox::interval(-2.0, t_end + 0.5).unwrap());
    let rep = ode_solution_representative(f, x0, xdot0, t_end, domain);
    let alphas = vec![crate::numerics::MultiIndex(vec![0])];
    classify(
        &rep,
        battery,
        std::slice::from_ref(k_time),
        &alphas,
        Mode::Moderate,
        ladder,
        &SweepOptions::default(),
    )
}

/// Space-time field of the regularized wave problem on a coarse grid.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub space: BoundingBox,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    /// Row-major [t][x][y][z].
    pub values: Vec<f64>,
    pub eps: f64,
    pub iteration_residuals: Vec<f64>,
}

impl WaveField {
    fn idx(&self, it: usize, ix: usize, iy: usize, iz: usize) -> usize {
        ((it * self.nx + ix) * self.nx + iy) * self.nx + iz
    }

    /// Field value with trilinear interpolation in space; identically zero
    /// for t <= t0 (the quiescent past is never stored) and outside the
    /// spatial box.
    pub fn value(&self, p: &[f64], t: f64) -> f64 {
        if t <= self.t0 {
            return 0.0;
        }
        if !self.space.contains(p) {
            return 0.0;
        }
        let it_f = (t - self.t0) / self.dt;
        let it = (it_f.floor() as usize).min(self.nt - 2);
        let wt = it_f - it as f64;
        let mut cell = [0usize; 3];
        let mut w = [0.0f64; 3];
        for a in 0..3 {
            let h = self.space.side(a) / (self.nx - 1) as f64;
            let u = (p[a] - self.space.lo()[a]) / h;
            let i = (u.floor() as usize).min(self.nx - 2);
            cell[a] = i;
            w[a] = u - i as f64;
        }
        let mut out = 0.0;
        for (dt_layer, wt_layer) in [(0usize, 1.0 - wt), (1usize, wt)] {
            if wt_layer == 0.0 {
                continue;
            }
            let it_cur = (it + dt_layer).min(self.nt - 1);
            for corner in 0..8usize {
                let mut weight = wt_layer;
                let mut ijk = [0usize; 3];
                for a in 0..3 {
                    if corner >> a & 1 == 1 {
                        weight *= w[a];
                        ijk[a] = cell[a] + 1;
                    } else {
                        weight *= 1.0 - w[a];
                        ijk[a] = cell[a];
                    }
                }
                out += weight * self.values[self.idx(it_cur, ijk[0], ijk[1], ijk[2])];
            }
        }
        out
    }

    /// CSV rows t,x,y,z,u for every grid node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,u\n");
        for it in 0..self.nt {
            let t = self.t0 + it as f64 * self.dt;
            for ix in 0..self.nx {
                for iy in 0..self.nx {
                    for iz in 0..self.nx {
                        let p: Vec<f64> = (0..3)
                            .map(|a| {
                                self.space.lo()[a]
                                    + [ix, iy, iz][a] as f64 * self.space.side(a)
                                        / (self.nx - 1) as f64
                            })
                            .collect();
                        out.push_str(&format!(
                            "{t},{},{},{},{}\n",
                            p[0],
                            p[1],
                            p[2],
                            self.values[self.idx(it, ix, iy, iz)]
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Fixed spherical quadrature: a 16-node Gauss-Legendre rule in the polar
/// cosine crossed with 32 uniform azimuthal nodes (512 directions, weights
/// summing to 4 pi). The rule is dense enough to resolve the spherical
/// caps cut out of compactly supported sources.
pub fn sphere_quadrature() -> Vec<([f64; 3], f64)> {
    let polar = gauss_legendre(16);
    let m = 32usize;
    let mut nodes = Vec::with_capacity(polar.len() * m);
    for (ct, w) in polar {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..m {
            let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
            let dir = [st * phi.cos(), st * phi.sin(), ct];
            nodes.push((dir, w * 2.0 * std::f64::consts::PI / m as f64));
        }
    }
    nodes
}

/// Configuration of the retarded-integral solver.
#[derive(Clone)]
pub struct WaveConfig {
    pub space: BoundingBox,
    /// Source onset: the field vanishes for t <= -eta.
    pub eta: f64,
    pub t_end: f64,
    /// Space nodes per axis.
    pub nx: usize,
    /// Time nodes from -eta to t_end.
    pub nt: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Metadata: regularization scale of the source.
    pub eps: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            space: BoundingBox::centered(2.0, 3).expect("static box"),
            eta: 0.1,
            t_end: 1.2,
            nx: 12,
            nt: 24,
            max_iter: 12,
            tol: 1e-8,
            eps: 1.0,
        }
    }
}

/// Picard iteration on the retarded integral form of
/// (d_tt - Laplace) u = F(u) + H with u = 0 for t <= -eta:
///   u(x,t) = 1/(4 pi) int_{-eta}^t (t-s) int_{S^2} (F(u) + H)(x + (t-s) w, s) dw ds.
/// The sphere integral uses the fixed 64-direction rule, the s-integral a
/// trapezoid on the time grid. Stops when the sup-difference between
/// sweeps drops below tol.
pub fn solve_wave_kirchhoff(
    f_nl: impl Fn(f64) -> f64 + Send + Sync,
    source: impl Fn(&[f64], f64) -> f64 + Send + Sync,
    config: &WaveConfig,
) -> Result<WaveField> {
    if f_nl(0.0).abs() > 1e-14 {
        return Err(Error::usage("wave nonlinearity must satisfy F(0) = 0"));
    }
    if config.nx < 4 || config.nt < 4 {
        return Err(Error::resolution("wave grid needs nx, nt >= 4"));
    }
    // the source must be quiescent before the onset
    for p in crate::diffeo::point_battery(&config.space, 8) {
        if source(&p, -config.eta - 1e-6).abs() > 0.0 {
            return Err(Error::usage(
                "wave source must vanish for t <= -eta (onset violated)",
            ));
        }
    }
    let nt = config.nt;
    let nx = config.nx;
    let dt = (config.t_end + config.eta) / (nt - 1) as f64;
    let sphere = sphere_quadrature();
    let mut field = WaveField {
        space: config.space.clone(),
        nx,
        t0: -config.eta,
        dt,
        nt,
        values: vec![0.0; nt * nx * nx * nx],
        eps: config.eps,
        iteration_residuals: Vec::new(),
    };
    let node = |i: usize, a: usize| {
        config.space.lo()[a] + i as f64 * config.space.side(a) / (nx - 1) as f64
    };
    for iter in 0..config.max_iter {
        let prev = field.clone();
        let values: Vec<f64> = (0..nt * nx * nx * nx)
            .into_par_iter()
            .map(|flat| {
                let it = flat / (nx * nx * nx);
                let rest = flat % (nx * nx * nx);
                let (ix, iy, iz) = (rest / (nx * nx), (rest / nx) % nx, rest % nx);
                let t = -config.eta + it as f64 * dt;
                let x = [node(ix, 0), node(iy, 1), node(iz, 2)];
                if it == 0 {
                    return 0.0;
                }
                // trapezoid in s over the grid rungs up to t; the s = t
                // endpoint vanishes through the (t - s) factor
                let mut acc = 0.0;
                for js in 0..=it {
                    let s = -config.eta + js as f64 * dt;
                    let radius = t - s;
                    if radius <= 0.0 {
                        continue;
                    }
                    let mut shell = 0.0;
                    for (dir, w) in &sphere {
                        let y = [
                            x[0] + radius * dir[0],
                            x[1] + radius * dir[1],
                            x[2] + radius * dir[2],
                        ];
                        let u_prev = prev.value(&y, s);
                        shell += w * (f_nl(u_prev) + source(&y, s));
                    }
                    let trap = if js == 0 || js == it { 0.5 } else { 1.0 };
                    acc += trap * dt * radius * shell;
                }
                acc / (4.0 * std::f64::consts::PI)
            })
            .collect();
        let residual = values
            .iter()
            .zip(&prev.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        field.values = values;
        field.iteration_residuals.push(residual);
        if residual <= config.tol {
            return Ok(field);
        }
        if iter == config.max_iter - 1 {
            return Err(Error::iteration(format!(
                "wave iteration did not reach tol {} in {} sweeps; residuals: {:?}",
                config.tol, config.max_iter, field.iteration_residuals
            )));
        }
    }
    unreachable!("loop either returns or errors")
}

/// One-dimensional field for the cheap regression analog.
#[derive(Debug, Clone)]
pub struct WaveField1D {
    pub space: BoundingBox,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub values: Vec<f64>,
    pub iteration_residuals: Vec<f64>,
}

impl WaveField1D {
    fn idx(&self, it: usize, ix: usize) -> usize {
        it * self.nx + ix
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        if t <= self.t0 || !self.space.contains(&[x]) {
            return 0.0;
        }
        let it_f = (t - self.t0) / self.dt;
        let it = (it_f.floor() as usize).min(self.nt - 2);
        let wt = it_f - it as f64;
        let h = self.space.side(0) / (self.nx - 1) as f64;
        let u = (x - self.space.lo()[0]) / h;
        let i = (u.floor() as usize).min(self.nx - 2);
        let wx = u - i as f64;
        let sample = |tt: usize, xx: usize| self.values[self.idx(tt, xx)];
        let layer = |tt: usize| (1.0 - wx) * sample(tt, i) + wx * sample(tt, i + 1);
        (1.0 - wt) * layer(it) + wt * layer(it + 1)
    }
}

/// The same fixed-point scheme for u_tt - u_xx = F(u) + H in one space
/// dimension, through the integral form
///   u(x,t) = 1/2 int_{-eta}^t int_{x-(t-s)}^{x+(t-s)} (F(u)+H)(y,s) dy ds.
pub fn solve_wave_dalembert_1d(
    f_nl: impl Fn(f64) -> f64 + Send + Sync,
    source: impl Fn(f64, f64) -> f64 + Send + Sync,
    space: BoundingBox,
    eta: f64,
    t_end: f64,
    nx: usize,
    nt: usize,
    max_iter: usize,
    tol: f64,
) -> Result<WaveField1D> {
    if space.dim() != 1 {
        return Err(Error::usage("solve_wave_dalembert_1d expects a 1D box"));
    }
    if f_nl(0.0).abs() > 1e-14 {
        return Err(Error::usage("wave nonlinearity must satisfy F(0) = 0"));
    }
    let dt = (t_end + eta) / (nt - 1) as f64;
    let hx = space.side(0) / (nx - 1) as f64;
    let mut field = WaveField1D {
        space: space.clone(),
        nx,
        t0: -eta,
        dt,
        nt,
        values: vec![0.0; nt * nx],
        iteration_residuals: Vec::new(),
    };
    for _ in 0..max_iter {
        let prev = field.clone();
        let mut values = vec![0.0; nt * nx];
        for it in 1..nt {
            let t = -eta + it as f64 * dt;
            for ix in 0..nx {
                let x = space.lo()[0] + ix as f64 * hx;
                let mut acc = 0.0;
                for js in 0..=it {
                    let s = -eta + js as f64 * dt;
                    let radius = t - s;
                    if radius <= 0.0 {
                        continue;
                    }
                    // trapezoid in y over the dependence segment
                    let ny = ((2.0 * radius / hx).ceil() as usize).max(2) + 1;
                    let hy = 2.0 * radius / (ny - 1) as f64;
                    let mut seg = 0.0;
                    for iy in 0..ny {
                        let y = x - radius + iy as f64 * hy;
                        let w = if iy == 0 || iy == ny - 1 { 0.5 } else { 1.0 };
                        seg += w * hy * (f_nl(prev.value(y, s)) + source(y, s));
                    }
                    let trap = if js == 0 || js == it { 0.5 } else { 1.0 };
                    acc += trap * dt * seg;
                }
                values[it * nx + ix] = 0.5 * acc;
            }
        }
        let residual = values
            .iter()
            .zip(&prev.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        field.values = values;
        field.iteration_residuals.push(residual);
        if residual <= tol {
            return Ok(field);
        }
    }
    Err(Error::iteration(format!(
        "1D wave iteration did not converge; residuals: {:?}",
        field.iteration_residuals
    )))
}
