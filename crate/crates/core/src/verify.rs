//! Identity, lemma and convergence checks, grouped into suites for the `verify`
//! subcommand. Each measurement is also exposed on its own.

use crate::cli_io::config::SimConfig;
use crate::cli_io::snapshot::Snapshot;
use crate::diagnostics::lemmas::{self, families};
use crate::diagnostics::stack::TimeDerivativeStack;
use crate::diagnostics::vorticity;
use crate::eos::{p_zero_index, Eos};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, VectorField4};
use crate::integrator::{self, max_abs, Model};
use crate::kinematics::{compute_matrices, piola_residual, test_maps, FlowMapState};
use crate::mat4::{g_dot, max_abs_diff};
use crate::operators::h_eigen_bounds;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Lemmas,
    Convergence,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn sup(f: &VectorField4) -> f64 {
    f.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
}

/// Free streaming with constant `v` over `steps` RK4 steps of size `dt`:
/// `(max |eta - tau v|, max |g(v, v) + 1|)`.
pub fn free_streaming(grid: GridSpec, v_spatial: [f64; 3], steps: usize, dt: f64) -> Result<(f64, f64)> {
    let model = Model::new(grid, Eos::new(2.0)?, grid.zeros())?;
    let v0 = (1.0 + v_spatial.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let vc = [v0, v_spatial[0], v_spatial[1], v_spatial[2]];
    let mut flow = FlowMapState::initial(&grid, std::array::from_fn(|mu| vec![vc[mu]; grid.len()]));
    for _ in 0..steps {
        flow = model.step_rk4(&flow, dt, None)?;
    }
    let err = (0..4)
        .flat_map(|mu| flow.eta[mu].iter().map(move |x| (x - flow.tau * vc[mu]).abs()))
        .fold(0.0, f64::max);
    Ok((err, flow.constraint_drift()))
}

/// Column residual of the Piola identity on the smooth test map at each size
/// `(n, n, n + 1)`.
pub fn piola_residuals(sizes: &[usize]) -> Result<Vec<f64>> {
    sizes
        .iter()
        .map(|&n| {
            let g = GridSpec::new(n, n, n + 1)?;
            let s = test_maps::nonlinear(&g, 0.3);
            Ok(piola_residual(&compute_matrices(&s, &g)?, &s, &g))
        })
        .collect()
}

/// Smallest eigenvalue of `h` over `count` random normalized velocities with
/// spatial speed at most `max_speed`, and the eigenvalues for the `(5/4, 3/4)` boost.
pub fn metric_positivity(seed: u64, count: usize, max_speed: f64) -> (f64, (f64, f64)) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    for _ in 0..count {
        let dir: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let speed = rng.gen_range(0.0..=max_speed);
        let s: [f64; 3] = dir.map(|x| x / len * speed);
        let v = [(1.0 + speed * speed).sqrt(), s[0], s[1], s[2]];
        lo = lo.min(h_eigen_bounds(&v).0);
    }
    (lo, h_eigen_bounds(&[1.25, 0.75, 0.0, 0.0]))
}

/// Worst relative errors of `s = (rho + p)/n` and `s = d rho/dn` (centred
/// difference) over interior densities, and `p0`.
pub fn eos_consistency(gamma: f64) -> Result<(f64, f64, usize)> {
    let e = Eos::new(gamma)?;
    let (mut ident, mut deriv) = (0.0f64, 0.0f64);
    for i in 1..20 {
        let n = e.n_max() * i as f64 / 20.0;
        let s = e.enthalpy_s(n)?;
        let rho = e.rho_of_n(n)?;
        ident = ident.max(((rho + e.pressure_of_rho(rho)) / n / s - 1.0).abs());
        let h = 1e-6 * n;
        let d = (e.rho_of_n(n + h)? - e.rho_of_n(n - h)?) / (2.0 * h);
        deriv = deriv.max((d / s - 1.0).abs());
    }
    Ok((ident, deriv, p_zero_index(gamma)?))
}

/// Default run advanced to `tau` with the configured CFL control.
pub fn advance(config: &SimConfig, tau: f64) -> Result<(Model, FlowMapState)> {
    let (model, _, mut flow) = integrator::setup(config)?;
    let mut eval = model.evaluate(&flow)?;
    while flow.tau < tau * (1.0 - 1e-14) {
        let dt = model.cfl_dt(&eval, config.run.cfl_safety, config.run.dt_min).min(tau - flow.tau);
        flow = model.step_rk4(&flow, dt, Some(&eval))?;
        eval = model.evaluate(&flow)?;
    }
    Ok((model, flow))
}

/// Sup norms of both momentum-form residuals and the `L2` norm of
/// `vort(d_tau(S v))` at `tau`. The acceleration in the residuals is the pure
/// finite difference of the displacement history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceResiduals {
    pub form_146: f64,
    pub form_149b: f64,
    pub vort_sv: f64,
}

pub fn slice_residuals(config: &SimConfig, tau: f64) -> Result<SliceResiduals> {
    let (model, flow) = advance(config, tau)?;
    let eval = model.evaluate(&flow)?;
    let dt = TimeDerivativeStack::default_dt(&model, &eval, config.run.cfl_safety);
    let stack = TimeDerivativeStack::evolve(&model, &flow, TimeDerivativeStack::half_width(config.diagnostics.p_max), dt)?;
    let accel = stack.time_derivatives(2)?;
    let e = stack.center_eval();
    let f = stack.center_flow();
    Ok(SliceResiduals {
        form_146: sup(&model.residual_form_146(f, e, &accel)?),
        form_149b: sup(&model.residual_form_149b(f, e, &accel)?),
        vort_sv: vorticity::vorticity_diagnostics(&model, &stack)?.vort_sv_norm,
    })
}

/// Normalization drift per unit time after integrating to `t_end` with fixed
/// steps `dt0 / 2^i`, `i = 0..levels`.
pub fn drift_per_time(config: &SimConfig, dt0: f64, levels: usize) -> Result<Vec<f64>> {
    let (model, _, start) = integrator::setup(config)?;
    let t_end = config.run.t_end;
    (0..levels)
        .map(|i| {
            let steps = ((t_end / dt0).round() as usize).max(1) << i;
            let dt = t_end / steps as f64;
            let mut flow = start.clone();
            for _ in 0..steps {
                flow = model.step_rk4(&flow, dt, None)?;
            }
            Ok(flow.constraint_drift() / t_end)
        })
        .collect()
}

/// Ratios on the shipped families at one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaRatios {
    /// Hardy `(s1, s2)` for the distance profile and for `sin(pi y3)`.
    pub hardy_distance: (f64, f64),
    pub hardy_sine: (f64, f64),
    /// Hodge ratio for the gradient family and the curl family.
    pub hodge: (f64, f64),
    /// Trace ratio for the horizontal shear and the curl family.
    pub trace: (f64, f64),
}

impl LemmaRatios {
    pub fn hardy_max(&self) -> f64 {
        [self.hardy_distance.0, self.hardy_distance.1, self.hardy_sine.0, self.hardy_sine.1]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn hodge_max(&self) -> f64 {
        self.hodge.0.max(self.hodge.1)
    }

    pub fn trace_max(&self) -> f64 {
        self.trace.0.max(self.trace.1)
    }
}

pub fn lemma_ratios(grid: &GridSpec) -> Result<LemmaRatios> {
    let hd = lemmas::hardy_check(grid, &families::distance(grid))?;
    let hs = lemmas::hardy_check(grid, &families::sine_profile(grid))?;
    Ok(LemmaRatios {
        hardy_distance: (hd.s1, hd.s2),
        hardy_sine: (hs.s1, hs.s2),
        hodge: (
            lemmas::hodge_check(grid, &families::hodge_gradient(grid)).ratio(),
            lemmas::hodge_check(grid, &families::curl_field(grid)).ratio(),
        ),
        trace: (
            lemmas::trace_check(grid, &families::horizontal_shear(grid)).ratio(),
            lemmas::trace_check(grid, &families::curl_field(grid)).ratio(),
        ),
    })
}

/// Hypothesis-violating inputs: a field not vanishing on the faces must be
/// refused by the Hardy check.
pub fn hardy_negative_control(grid: &GridSpec) -> bool {
    matches!(
        lemmas::hardy_check(grid, &grid.sample(|y| 1.0 + y[2])),
        Err(Error::Hypothesis(_))
    )
}

/// Base step of the drift check. At `dt0 / 4` the drift after `t_end = 0.1` is
/// still about 30 times the rounding floor; smaller bases reach that floor.
pub const DRIFT_DT0: f64 = 0.05;

pub const HARDY_BOUND: f64 = 0.95;
pub const HODGE_BOUND: f64 = 3.0;
pub const TRACE_BOUND: f64 = 2.0;
pub const STABILITY: f64 = 0.2;

fn stable(a: f64, b: f64) -> bool {
    (a - b).abs() <= STABILITY * a.abs().max(b.abs())
}

fn identities() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let g = GridSpec::new(16, 16, 17)?;
    let (eta_err, norm_err) = free_streaming(g, [0.3, -0.2, 0.1], 200, 0.01)?;
    out.push(Check::new(
        "free_streaming",
        eta_err <= 1e-10 && norm_err <= 1e-12,
        format!("max|eta - tau v| = {eta_err:.3e}, max|g(v,v)+1| = {norm_err:.3e}"),
    ));

    let r = piola_residuals(&[16, 32, 64])?;
    let (a, b) = (r[0] / r[1], r[1] / r[2]);
    out.push(Check::new(
        "piola_convergence",
        a >= 8.0 && b >= 8.0,
        format!("residuals {:.3e} {:.3e} {:.3e}, ratios {a:.2} {b:.2}", r[0], r[1], r[2]),
    ));

    let (lo, (b0, b1)) = metric_positivity(7, 10_000, 10.0);
    out.push(Check::new(
        "metric_positivity",
        lo > 0.0 && (b0 - 0.25).abs() <= 1e-12 && (b1 - 4.0).abs() <= 1e-12,
        format!("min eigenvalue {lo:.3e}, boost eigenvalues {b0} {b1}"),
    ));

    for (gamma, p0) in [(1.5, 1), (2.0, 0), (3.0, 0)] {
        let (i, d, p) = eos_consistency(gamma)?;
        out.push(Check::new(
            &format!("eos_gamma_{gamma}"),
            i <= 1e-6 && d <= 1e-6 && p == p0,
            format!("enthalpy identity {i:.2e}, derivative {d:.2e}, p0 = {p}"),
        ));
    }

    let mut worst = 0.0f64;
    for (x0, amp) in [([0.0, 0.1, 0.2, 0.3], 0.3), ([0.4, -0.3, 0.7, 0.5], 0.4)] {
        let (inp, lhs, vort_w) = vorticity::potential_flow_sample(x0, amp);
        worst = worst.max(max_abs_diff(&lhs, &vorticity::identity44_rhs(&inp)));
        worst = worst.max(vort_w.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())));
        worst = worst.max((g_dot(&inp.v, &inp.v) + 1.0).abs());
    }
    out.push(Check::new("vorticity_transport", worst < 1e-11, format!("max residual {worst:.3e}")));

    let mut cfg = SimConfig::default();
    cfg.run.t_end = 0.02;
    let mut snaps = Vec::new();
    let run = integrator::run(&cfg, |f| {
        snaps.push(f.clone());
        Ok(())
    })?;
    let mass = run.monitor.iter().map(|r| r.mass_residual).fold(0.0, f64::max);
    out.push(Check::new("mass_constraint", mass <= 1e-13, format!("max|f J - F| = {mass:.3e}")));
    let s = Snapshot::from_state(&run.model.grid, &run.final_state, &run.data);
    let back = Snapshot::from_bytes(&s.to_bytes()).map(|b| b.to_bytes() == s.to_bytes());
    out.push(Check::new(
        "snapshot_round_trip",
        back == Ok(true),
        format!("{} slices emitted", snaps.len()),
    ));
    Ok(out)
}

fn lemma_suite() -> Result<Vec<Check>> {
    let coarse = lemma_ratios(&GridSpec::new(16, 16, 17)?)?;
    let fine = lemma_ratios(&GridSpec::new(32, 32, 33)?)?;
    let mut out = Vec::new();
    let rows = [
        ("hardy", coarse.hardy_max(), fine.hardy_max(), HARDY_BOUND),
        ("hodge", coarse.hodge_max(), fine.hodge_max(), HODGE_BOUND),
        ("trace", coarse.trace_max(), fine.trace_max(), TRACE_BOUND),
    ];
    for (name, a, b, bound) in rows {
        out.push(Check::new(
            &format!("{name}_bound"),
            a <= bound && b <= bound && stable(a, b),
            format!("ratio {a:.4} (coarse) {b:.4} (fine), bound {bound}"),
        ));
    }
    out[0].detail += &format!(
        "; distance profile ({:.4}, {:.4}), sine profile ({:.4}, {:.4})",
        fine.hardy_distance.0, fine.hardy_distance.1, fine.hardy_sine.0, fine.hardy_sine.1
    );
    out.push(Check::new(
        "hardy_negative_control",
        hardy_negative_control(&GridSpec::new(16, 16, 17)?),
        "non-vanishing face values are refused".into(),
    ));
    Ok(out)
}

fn convergence() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let coarse = SimConfig::default();
    let mut fine = coarse.clone();
    fine.grid.n1 *= 2;
    fine.grid.n2 *= 2;
    fine.grid.n3 = 2 * fine.grid.n3 - 1;
    let a = slice_residuals(&coarse, 0.05)?;
    let b = slice_residuals(&fine, 0.05)?;
    for (name, x, y) in [
        ("momentum_form_146", a.form_146, b.form_146),
        ("momentum_form_149b", a.form_149b, b.form_149b),
        ("vorticity_annihilation", a.vort_sv, b.vort_sv),
    ] {
        out.push(Check::new(name, x >= 3.5 * y, format!("{x:.3e} -> {y:.3e}, factor {:.2}", x / y)));
    }
    let d = drift_per_time(&coarse, DRIFT_DT0, 3)?;
    let ratios = [d[0] / d[1], d[1] / d[2]];
    out.push(Check::new(
        "constraint_drift_order",
        ratios.iter().all(|r| (8.0..=32.0).contains(r)),
        format!("drift/time {:.3e} {:.3e} {:.3e}, ratios {:.2} {:.2}", d[0], d[1], d[2], ratios[0], ratios[1]),
    ));
    Ok(out)
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Identities => identities()?,
        Suite::Lemmas => lemma_suite()?,
        Suite::Convergence => convergence()?,
        Suite::All => {
            let mut v = identities()?;
            v.extend(lemma_suite()?);
            v.extend(convergence()?);
            v
        }
    })
}
