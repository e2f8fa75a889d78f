//! Material-point simulation: loading programs, fixed-step time marching,
//! convergence studies against a fine-step reference, and a stretch-driven
//! uniaxial test with traction-free lateral faces.

use crate::error::{Error, Result};
use crate::genvisc::{self, GenViscParams, GenViscState};
use crate::integrators::{Integrator, StepInput};
use crate::maxwell::{free_energy_from_c, overstress_pk2_from_c, Kinematics, MaxwellParams};
use crate::tensor::Tensor2;

/// Tolerance used when deciding whether a time is an integer multiple of a step.
const GRID_TOL: f64 = 1e-9;

/// Lateral Cauchy stress tolerance of [`uniaxial_drive`] [MPa].
pub const LATERAL_TOL: f64 = 1e-10;
pub const LATERAL_MAX_ITERATIONS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub enum Material {
    Maxwell(MaxwellParams),
    GenVisc(GenViscParams),
}

impl Material {
    pub fn n_branches(&self) -> usize {
        match self {
            Material::Maxwell(_) => 1,
            Material::GenVisc(p) => p.branches.len(),
        }
    }

    pub fn fresh_state(&self) -> Vec<Tensor2> {
        vec![Tensor2::IDENTITY; self.n_branches()]
    }

    /// Total 2nd Piola–Kirchhoff stress for the given branch states.
    pub fn stress_pk2(&self, kin: &Kinematics, c_i: &[Tensor2]) -> Result<Tensor2> {
        match self {
            Material::Maxwell(p) => overstress_pk2_from_c(&kin.c, &c_i[0], p.mu),
            Material::GenVisc(p) => {
                genvisc::total_stress(kin, &GenViscState { c_i: c_i.to_vec() }, p)
            }
        }
    }

    pub fn free_energy(&self, kin: &Kinematics, c_i: &[Tensor2]) -> Result<f64> {
        match self {
            Material::Maxwell(p) => free_energy_from_c(&kin.c, &c_i[0], p.mu),
            Material::GenVisc(p) => {
                genvisc::total_free_energy(kin, &GenViscState { c_i: c_i.to_vec() }, p)
            }
        }
    }

    /// Advances all branch states to `ⁿ⁺¹C`.
    pub fn step(
        &self,
        c_i: &[Tensor2],
        c_np1: &Tensor2,
        dt: f64,
        integrator: Integrator,
    ) -> Result<Vec<Tensor2>> {
        match self {
            Material::Maxwell(p) => {
                let input = StepInput::new(c_i[0], *c_np1, dt, *p)?;
                Ok(vec![integrator.step(&input)?.0])
            }
            Material::GenVisc(p) => Ok(genvisc::step_with(
                &GenViscState { c_i: c_i.to_vec() },
                c_np1,
                dt,
                p,
                integrator,
            )?
            .c_i),
        }
    }
}

/// Piecewise-linear deformation history `F′(t)`, optionally projected
/// onto its unimodular part.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadingProgram {
    keyframes: Vec<(f64, Tensor2)>,
    isochoric: bool,
}

impl LoadingProgram {
    /// Samples per segment used to check `det F′ > 0` along the path.
    const DET_SAMPLES: usize = 64;

    pub fn new(keyframes: Vec<(f64, Tensor2)>, isochoric: bool) -> Result<Self> {
        if keyframes.is_empty() {
            return Err(Error::InvalidProgram("no keyframes".into()));
        }
        for (t, f) in &keyframes {
            if !t.is_finite() || !f.is_finite() {
                return Err(Error::InvalidProgram(format!(
                    "non-finite keyframe at t = {t}"
                )));
            }
        }
        if keyframes[0].0 != 0.0 {
            return Err(Error::InvalidProgram(
                "first keyframe must be at t = 0".into(),
            ));
        }
        for w in keyframes.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidProgram(format!(
                    "keyframe times must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        let program = Self {
            keyframes,
            isochoric,
        };
        let check = |t: f64| -> Result<()> {
            let d = program.raw(t).det();
            if !(d > 0.0) {
                return Err(Error::InvalidProgram(format!("det F = {d:e} at t = {t}")));
            }
            Ok(())
        };
        check(0.0)?;
        for w in program.keyframes.windows(2) {
            for s in 1..=Self::DET_SAMPLES {
                check(w[0].0 + (w[1].0 - w[0].0) * s as f64 / Self::DET_SAMPLES as f64)?;
            }
        }
        Ok(program)
    }

    /// Four-keyframe program: tension along e₁, shear, then tension along e₂,
    /// at t = 0, 100, 200, 300 s, projected to be isochoric.
    pub fn tension_shear_tension() -> Self {
        let s = 0.5_f64.sqrt();
        let mut shear = Tensor2::IDENTITY;
        shear[(0, 1)] = 1.0;
        Self::new(
            vec![
                (0.0, Tensor2::IDENTITY),
                (100.0, Tensor2::diag(2.0, s, s)),
                (200.0, shear),
                (300.0, Tensor2::diag(s, 2.0, s)),
            ],
            true,
        )
        .expect("preset program is valid")
    }

    /// Constant deformation `f` switched on at t = 0 and held until `t_end`.
    pub fn hold(f: Tensor2, t_end: f64, isochoric: bool) -> Result<Self> {
        Self::new(vec![(0.0, f), (t_end, f)], isochoric)
    }

    pub fn keyframes(&self) -> &[(f64, Tensor2)] {
        &self.keyframes
    }

    pub fn is_isochoric(&self) -> bool {
        self.isochoric
    }

    pub fn end_time(&self) -> f64 {
        self.keyframes.last().map(|k| k.0).unwrap_or(0.0)
    }

    fn raw(&self, t: f64) -> Tensor2 {
        let k = &self.keyframes;
        if t <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|(tk, _)| *tk <= t);
        if i >= k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, f0) = k[i - 1];
        let (t1, f1) = k[i];
        let s = (t - t0) / (t1 - t0);
        f0 * (1.0 - s) + f1 * s
    }

    /// `F(t)`; clamped to the first/last keyframe outside the program.
    pub fn deformation(&self, t: f64) -> Result<Tensor2> {
        let f = self.raw(t);
        if self.isochoric {
            f.unimodular()
        } else {
            Ok(f)
        }
    }
}

/// One output sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub t: f64,
    pub f: Tensor2,
    pub cauchy: Tensor2,
    pub det_ci: Vec<f64>,
    pub psi: f64,
    pub err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TimeSeries {
    pub n_branches: usize,
    pub rows: Vec<Row>,
    /// Branch states per row. Empty for series read back from CSV.
    pub c_i: Vec<Vec<Tensor2>>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_error_column(&self) -> bool {
        self.rows.iter().any(|r| r.err.is_some())
    }

    /// Largest `|det Cᵢ - 1|` over all rows and branches.
    pub fn max_det_drift(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.det_ci.iter())
            .map(|d| (d - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be > 0, got {dt}"
        )));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "end time must be >= 0, got {t_end}"
        )));
    }
    Ok((t_end / dt + GRID_TOL).floor() as usize)
}

fn wrap(step: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::StepFailed {
        step,
        source: Box::new(e),
    }
}

/// Marches from t = 0 to `t_end` with `t = n·Δt`, calling `observe` with
/// the row index, time, kinematics and branch states at every grid point
/// (including t = 0).
pub fn march<O>(
    program: &LoadingProgram,
    material: &Material,
    integrator: Integrator,
    dt: f64,
    t_end: f64,
    mut observe: O,
) -> Result<()>
where
    O: FnMut(usize, f64, &Kinematics, &[Tensor2]) -> Result<()>,
{
    let n_steps = step_count(dt, t_end)?;
    let mut state = material.fresh_state();
    let kin = Kinematics::from_deformation_gradient(program.deformation(0.0)?).map_err(wrap(0))?;
    observe(0, 0.0, &kin, &state)?;
    for n in 1..=n_steps {
        let t = n as f64 * dt;
        let kin = program
            .deformation(t)
            .and_then(Kinematics::from_deformation_gradient)
            .map_err(wrap(n))?;
        state = material
            .step(&state, &kin.c, dt, integrator)
            .map_err(wrap(n))?;
        observe(n, t, &kin, &state)?;
    }
    Ok(())
}

fn make_row(material: &Material, t: f64, kin: &Kinematics, c_i: &[Tensor2]) -> Result<Row> {
    let pk2 = material.stress_pk2(kin, c_i)?;
    Ok(Row {
        t,
        f: kin.f,
        cauchy: kin.stresses_from_pk2(pk2).cauchy,
        det_ci: c_i.iter().map(Tensor2::det).collect(),
        psi: material.free_energy(kin, c_i)?,
        err: None,
    })
}

/// Fixed-step simulation of `program` up to `t_end`.
pub fn run(
    program: &LoadingProgram,
    material: &Material,
    integrator: Integrator,
    dt: f64,
    t_end: f64,
) -> Result<TimeSeries> {
    let mut series = TimeSeries {
        n_branches: material.n_branches(),
        rows: Vec::with_capacity(step_count(dt, t_end)? + 1),
        c_i: Vec::new(),
    };
    march(
        program,
        material,
        integrator,
        dt,
        t_end,
        |n, t, kin, c_i| {
            series
                .rows
                .push(make_row(material, t, kin, c_i).map_err(wrap(n))?);
            series.c_i.push(c_i.to_vec());
            Ok(())
        },
    )?;
    Ok(series)
}

/// `k` with `x ≈ k·unit`, or a grid-mismatch error.
fn integer_ratio(x: f64, unit: f64, what: &str) -> Result<usize> {
    let r = x / unit;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > GRID_TOL * r.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "{what} {x} is not an integer multiple of {unit}"
        )));
    }
    Ok(k as usize)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Fine-step solution sampled on a coarse grid, used as the "exact" `Cᵢ`.
#[derive(Clone, Debug)]
pub struct Reference {
    pub dt: f64,
    /// Spacing of the stored samples; an integer multiple of `dt`.
    pub sample_dt: f64,
    pub integrator: Integrator,
    samples: Vec<Vec<Tensor2>>,
}

impl Reference {
    pub fn compute(
        program: &LoadingProgram,
        material: &Material,
        integrator: Integrator,
        dt: f64,
        t_end: f64,
        sample_dt: f64,
    ) -> Result<Self> {
        let stride = integer_ratio(sample_dt, dt, "sample interval")?;
        let mut samples = Vec::new();
        march(program, material, integrator, dt, t_end, |n, _, _, c_i| {
            if n % stride == 0 {
                samples.push(c_i.to_vec());
            }
            Ok(())
        })?;
        Ok(Self {
            dt,
            sample_dt: stride as f64 * dt,
            integrator,
            samples,
        })
    }

    /// Reference states at `t = index·sample_dt`.
    pub fn sample(&self, index: usize) -> Option<&[Tensor2]> {
        self.samples.get(index).map(Vec::as_slice)
    }

    /// Largest Frobenius distance over branches between `c_i` and the
    /// reference sample `index`.
    pub fn distance(&self, index: usize, c_i: &[Tensor2]) -> Result<f64> {
        let r = self.sample(index).ok_or_else(|| {
            Error::GridMismatch(format!(
                "no reference sample at t = {}",
                index as f64 * self.sample_dt
            ))
        })?;
        Ok(r.iter()
            .zip(c_i)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Error `‖Cᵢ − Cᵢ^ref‖` at every grid point of a run with step `dt`.
    pub fn error_history(
        &self,
        program: &LoadingProgram,
        material: &Material,
        integrator: Integrator,
        dt: f64,
        t_end: f64,
    ) -> Result<Vec<(f64, f64)>> {
        let k = integer_ratio(dt, self.sample_dt, "time step")?;
        let mut out = Vec::new();
        march(program, material, integrator, dt, t_end, |n, t, _, c_i| {
            out.push((t, self.distance(n * k, c_i)?));
            Ok(())
        })?;
        Ok(out)
    }

    /// Fills the `err` column of a series produced with step `dt`.
    pub fn annotate(&self, series: &mut TimeSeries, dt: f64) -> Result<()> {
        let k = integer_ratio(dt, self.sample_dt, "time step")?;
        for (n, (row, c_i)) in series.rows.iter_mut().zip(&series.c_i).enumerate() {
            row.err = Some(self.distance(n * k, c_i)?);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub integrators: Vec<Integrator>,
    /// `(dt, max-over-time error per integrator)`.
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl ConvergenceTable {
    pub fn error(&self, dt_index: usize, integrator: Integrator) -> Option<f64> {
        let j = self.integrators.iter().position(|i| *i == integrator)?;
        self.rows.get(dt_index).map(|r| r.1[j])
    }
}

/// Sample spacing that every step in `dts` is an integer multiple of.
pub fn common_sample_dt(dts: &[f64], reference_dt: f64) -> Result<f64> {
    let mut g = 0;
    for &dt in dts {
        g = gcd(g, integer_ratio(dt, reference_dt, "time step")?);
    }
    Ok(g.max(1) as f64 * reference_dt)
}

/// Max-over-time error of each integrator at each `dt` against a single
/// EBMSC run at `reference_dt`.
pub fn convergence_study(
    program: &LoadingProgram,
    material: &Material,
    dts: &[f64],
    reference_dt: f64,
    t_end: f64,
    integrators: &[Integrator],
) -> Result<ConvergenceTable> {
    let sample_dt = common_sample_dt(dts, reference_dt)?;
    let reference = Reference::compute(
        program,
        material,
        Integrator::Ebmsc,
        reference_dt,
        t_end,
        sample_dt,
    )?;
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in dts {
        let errs = integrators
            .iter()
            .map(|&i| {
                let h = reference.error_history(program, material, i, dt, t_end)?;
                Ok(h.iter().map(|e| e.1).fold(0.0, f64::max))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((dt, errs));
    }
    Ok(ConvergenceTable {
        integrators: integrators.to_vec(),
        rows,
    })
}

/// The same program run for several viscosities at a fixed step.
pub fn viscosity_sweep(
    program: &LoadingProgram,
    mu: f64,
    etas: &[f64],
    integrator: Integrator,
    dt: f64,
    t_end: f64,
) -> Result<Vec<(f64, TimeSeries)>> {
    etas.iter()
        .map(|&eta| {
            let m = Material::Maxwell(MaxwellParams::new(mu, eta)?);
            Ok((eta, run(program, &m, integrator, dt, t_end)?))
        })
        .collect()
}

/// Piecewise-linear axial stretch history `F_xx(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StretchHistory {
    keyframes: Vec<(f64, f64)>,
}

impl StretchHistory {
    pub fn new(keyframes: Vec<(f64, f64)>) -> Result<Self> {
        if keyframes.is_empty() || keyframes[0].0 != 0.0 {
            return Err(Error::InvalidProgram(
                "stretch history must start at t = 0".into(),
            ));
        }
        for w in keyframes.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidProgram(
                    "stretch keyframe times must increase".into(),
                ));
            }
        }
        if let Some(bad) = keyframes.iter().find(|k| !(k.1 > 0.0) || !k.1.is_finite()) {
            return Err(Error::InvalidProgram(format!(
                "stretch {} at t = {}",
                bad.1, bad.0
            )));
        }
        Ok(Self { keyframes })
    }

    /// `cycles` triangles between `lo` and `hi` at constant `|Ḟ_xx| = rate`,
    /// starting from `lo`.
    pub fn cyclic(rate: f64, lo: f64, hi: f64, cycles: usize) -> Result<Self> {
        if !(rate > 0.0) || !(hi > lo) {
            return Err(Error::InvalidProgram(
                "cyclic history needs rate > 0 and hi > lo".into(),
            ));
        }
        let half = (hi - lo) / rate;
        let mut k = vec![(0.0, lo)];
        for c in 0..cycles {
            k.push(((2 * c + 1) as f64 * half, hi));
            k.push(((2 * c + 2) as f64 * half, lo));
        }
        Self::new(k)
    }

    /// Slow load to `peak`, hold, fast unload to `dip`, hold.
    pub fn relaxation(
        slow_rate: f64,
        fast_rate: f64,
        peak: f64,
        dip: f64,
        hold: f64,
    ) -> Result<Self> {
        let t1 = (peak - 1.0).abs() / slow_rate;
        let t2 = t1 + hold;
        let t3 = t2 + (peak - dip).abs() / fast_rate;
        Self::new(vec![
            (0.0, 1.0),
            (t1, peak),
            (t2, peak),
            (t3, dip),
            (t3 + hold, dip),
        ])
    }

    pub fn keyframes(&self) -> &[(f64, f64)] {
        &self.keyframes
    }

    pub fn end_time(&self) -> f64 {
        self.keyframes.last().map(|k| k.0).unwrap_or(0.0)
    }

    pub fn stretch(&self, t: f64) -> f64 {
        let k = &self.keyframes;
        if t <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|(tk, _)| *tk <= t);
        if i >= k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, a) = k[i - 1];
        let (t1, b) = k[i];
        a + (b - a) * (t - t0) / (t1 - t0)
    }
}

fn lateral_trial(
    p: &GenViscParams,
    committed: &GenViscState,
    fxx: f64,
    lam: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<(Kinematics, GenViscState, Tensor2)> {
    let kin = Kinematics::from_deformation_gradient(Tensor2::diag(fxx, lam, lam))?;
    let state = if dt > 0.0 {
        genvisc::step_with(committed, &kin.c, dt, p, integrator)?
    } else {
        committed.clone()
    };
    let cauchy = kin
        .stresses_from_pk2(genvisc::total_stress(&kin, &state, p)?)
        .cauchy;
    Ok((kin, state, cauchy))
}

/// Lateral stretch giving zero lateral Cauchy stress, by Newton's method
/// with a central-difference slope, step limiting and backtracking.
pub fn solve_lateral(
    p: &GenViscParams,
    committed: &GenViscState,
    fxx: f64,
    guess: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<(f64, Kinematics, GenViscState, Tensor2)> {
    let res = |lam: f64| lateral_trial(p, committed, fxx, lam, dt, integrator);
    let mut lam = guess;
    let mut cur = res(lam)?;
    for _ in 0..LATERAL_MAX_ITERATIONS {
        let r = cur.2[(1, 1)];
        if r.abs() <= LATERAL_TOL {
            return Ok((lam, cur.0, cur.1, cur.2));
        }
        let h = 1e-7 * lam;
        let slope = (res(lam + h)?.2[(1, 1)] - res(lam - h)?.2[(1, 1)]) / (2.0 * h);
        if !(slope.is_finite() && slope != 0.0) {
            break;
        }
        let mut step = (-r / slope).clamp(-0.2 * lam, 0.2 * lam);
        let mut accepted = false;
        for _ in 0..40 {
            if let Ok(next) = res(lam + step) {
                if next.2[(1, 1)].abs() < r.abs() {
                    lam += step;
                    cur = next;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::LateralSolveFailure {
        iterations: LATERAL_MAX_ITERATIONS,
        residual: cur.2[(1, 1)].abs(),
    })
}

/// Stretch-controlled uniaxial test: `F = diag(F_xx, λ, λ)` with `λ` chosen
/// at every step so that the lateral Cauchy stress vanishes.
pub fn uniaxial_drive(
    history: &StretchHistory,
    p: &GenViscParams,
    integrator: Integrator,
    dt: f64,
    t_end: f64,
) -> Result<TimeSeries> {
    let n_steps = step_count(dt, t_end)?;
    let material = Material::GenVisc(p.clone());
    let mut state = GenViscState::fresh(p.branches.len());
    let mut lam = history.stretch(0.0).sqrt().recip();
    let mut series = TimeSeries {
        n_branches: p.branches.len(),
        rows: Vec::with_capacity(n_steps + 1),
        c_i: Vec::with_capacity(n_steps + 1),
    };
    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let step_dt = if n == 0 { 0.0 } else { dt };
        let (l, kin, next, _) =
            solve_lateral(p, &state, history.stretch(t), lam, step_dt, integrator)
                .map_err(wrap(n))?;
        lam = l;
        state = next;
        series
            .rows
            .push(make_row(&material, t, &kin, &state.c_i).map_err(wrap(n))?);
        series.c_i.push(state.c_i.clone());
    }
    Ok(series)
}
