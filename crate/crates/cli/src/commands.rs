use crate::io::{self, float, opt_float, Csv};
use crate::{CliError, DistinguishArgs, GenerateArgs, RunArgs, SpectrumArgs};
use equilib_core::averaging::pitch_limit;
use equilib_core::bounds::{
    certify_instance, default_eps_grid, default_t_grid, equilibration_timescale_order, optimal_eps, summarize,
    theorem2_bound, theorem3_bound, CertificationGrids, CertificationInstance, InstanceStats,
};
use equilib_core::distinguish::{
    helstrom_povm, measurement_averages, povm_distinguishability, set_distinguishability, subsystem_averages,
    success_probability, theorem2_chain_grid, trace_distance, MeasurementSet,
};
use equilib_core::dynamics::deviation_exact_grid;
use equilib_core::models::{self, Family, Purpose, StateKind};
use equilib_core::numerics::{eig_hermitian, operator_norm};
use equilib_core::quantum_state::{dephase, window_average_state};
use equilib_core::spectral::build_gaps;
use equilib_core::{ComplexMatrix, DensityMatrix, Hamiltonian, State};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct SpectrumReport {
    d: usize,
    #[serde(rename = "d_E")]
    d_e: usize,
    #[serde(rename = "D_G")]
    d_g: Option<usize>,
    eps_min: Option<f64>,
    spectral_range: f64,
    gaps: usize,
}

pub fn analyze_spectrum(a: &SpectrumArgs, out: &Path) -> Result<(), CliError> {
    let h = io::load_hamiltonian(&a.hamiltonian)?;
    let g = build_gaps(h.spectrum());
    let mut gaps = Csv::new(&["alpha_i", "alpha_j", "gap"]);
    for (&(i, j), &v) in g.labels().iter().zip(g.values()) {
        gaps.row(&[(i + 1).to_string(), (j + 1).to_string(), float(v)]);
    }
    gaps.write(out, "gaps.csv")?;
    let mut density = Csv::new(&["eps", "N_eps"]);
    if !g.is_empty() {
        let grid = match &a.eps_grid {
            Some(spec) => spec.points(),
            None => default_eps_grid(&g)?,
        };
        for eps in grid {
            density.row(&[float(eps), g.gap_density(eps)?.to_string()]);
        }
    }
    density.write(out, "gap_density.csv")?;
    let report = SpectrumReport {
        d: h.dim(),
        d_e: h.spectrum().d_e(),
        d_g: g.max_gap_degeneracy().ok(),
        eps_min: g.epsilon_min().ok(),
        spectral_range: h.spectrum().range(),
        gaps: g.len(),
    };
    io::write_json(out, "spectrum_report.json", &report)?;
    println!("{}", serde_json::to_string(&report).expect("serializable"));
    Ok(())
}

/// Inputs shared by `verify-bounds` and `sweep-T`.
struct Run {
    name: String,
    h: Hamiltonian,
    state: State,
    observable: ComplexMatrix,
    measurements: Option<MeasurementSet>,
    subsystem: Option<(usize, usize)>,
    stats: InstanceStats,
    t_grid: Vec<f64>,
    eps_grid: Vec<f64>,
    pitch: f64,
}

impl Run {
    fn load(a: &RunArgs) -> Result<Self, CliError> {
        let h = io::load_hamiltonian(&a.hamiltonian)?;
        let state = io::load_state(&a.state)?;
        let d = h.dim();
        if state.dim() != d {
            return Err(CliError::Input(
                a.state.clone(),
                equilib_core::Error::DimensionMismatch { expected: d, got: state.dim() },
            ));
        }
        let observable = match &a.observable {
            Some(p) => io::load_matrix(p)?,
            None => models::random_observable(d, &mut models::stream(a.seed, Purpose::Observable)),
        };
        if observable.rows() != d || observable.cols() != d {
            return Err(CliError::Usage(format!("observable must be {d}x{d}")));
        }
        let measurements = a.measurements.as_deref().map(io::load_measurements).transpose()?;
        if let Some(ms) = &measurements {
            if ms.dim().is_some_and(|m| m != d) {
                return Err(CliError::Usage(format!("measurements must act on dimension {d}")));
            }
        }
        if let Some((da, db)) = a.subsystem_dims {
            if da * db != d {
                return Err(CliError::Usage(format!("subsystem dims {da}x{db} do not multiply to {d}")));
            }
        }
        let stats = InstanceStats::new(&state, &h)?;
        let eps_min = stats.gaps.epsilon_min().ok();
        let t_grid = match &a.t_grid {
            Some(s) => s.points(),
            None => default_t_grid(eps_min.unwrap_or(1.0)),
        };
        if t_grid.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::Usage("T grid must be positive".into()));
        }
        let eps_grid = match (&a.eps_grid, eps_min) {
            (Some(s), _) => s.points(),
            (None, Some(_)) => default_eps_grid(&stats.gaps)?,
            (None, None) => vec![1.0],
        };
        if eps_grid.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::Usage("eps grid must be positive".into()));
        }
        let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
        let pitch = a.pitch.unwrap_or_else(|| 0.25 * pitch_limit(t_min, stats.gaps.max_frequency()));
        let name =
            a.hamiltonian.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into());
        Ok(Self {
            name,
            h,
            state,
            observable,
            measurements,
            subsystem: a.subsystem_dims,
            stats,
            t_grid,
            eps_grid,
            pitch,
        })
    }
}

const CERT_COMPONENTS: [&str; 7] = ["N_eps", "d_eff", "d_E", "D_G", "norm_A", "S_M", "d_S"];

pub fn verify_bounds(a: &RunArgs, out: &Path) -> Result<(), CliError> {
    let run = Run::load(a)?;
    let inst = CertificationInstance {
        name: run.name.clone(),
        hamiltonian: run.h.clone(),
        state: run.state.clone(),
        observable: Some(run.observable.clone()),
        measurements: run.measurements.clone(),
        subsystem: run.subsystem,
    };
    let grids = CertificationGrids {
        t_grid: run.t_grid.clone(),
        eps_grid: run.eps_grid.clone(),
        pitch: Some(run.pitch),
        bound_scale: a.bound_scale,
    };
    let rows = certify_instance(&inst, &grids)?;
    let mut header =
        vec!["instance", "bound", "T", "eps", "bound_value", "measured_value", "satisfied", "slack", "vacuous"];
    header.extend(CERT_COMPONENTS);
    let mut csv = Csv::new(&header);
    for r in &rows {
        let rep = &r.report;
        let mut cells = vec![
            r.instance.clone(),
            r.kind.name().to_string(),
            float(r.t),
            float(r.eps),
            float(rep.bound_value),
            opt_float(rep.measured_value),
            rep.satisfied.to_string(),
            float(rep.slack),
            rep.vacuous.to_string(),
        ];
        cells.extend(CERT_COMPONENTS.iter().map(|k| opt_float(rep.components.get(*k).copied())));
        csv.row(&cells);
    }
    csv.write(out, "certification.csv")?;

    #[derive(Serialize)]
    struct Summary {
        instance: String,
        rows: usize,
        violations: usize,
        vacuous: usize,
        min_slack: f64,
        d: usize,
        #[serde(rename = "d_E")]
        d_e: usize,
        d_eff: f64,
        #[serde(rename = "D_G")]
        d_g: Option<usize>,
        eps_min: Option<f64>,
        pitch: f64,
    }
    let s = summarize(&rows);
    let summary = Summary {
        instance: run.name,
        rows: s.rows,
        violations: s.violations,
        vacuous: s.vacuous,
        min_slack: s.min_slack,
        d: run.h.dim(),
        d_e: run.stats.d_e,
        d_eff: run.stats.d_eff,
        d_g: run.stats.gaps.max_gap_degeneracy().ok(),
        eps_min: run.stats.gaps.epsilon_min().ok(),
        pitch: run.pitch,
    };
    io::write_json(out, "summary.json", &summary)?;
    println!("{}", serde_json::to_string(&summary).expect("serializable"));
    if s.violations > 0 {
        return Err(CliError::Violations(s.violations));
    }
    Ok(())
}

fn best_bound(run: &Run, f: impl Fn(usize, f64) -> equilib_core::Result<f64>) -> Result<(f64, f64), CliError> {
    let mut best: Option<(f64, f64)> = None;
    for &eps in &run.eps_grid {
        let b = f(run.stats.n_eps(eps)?, eps)?;
        if best.is_none_or(|(_, v)| b < v) {
            best = Some((eps, b));
        }
    }
    Ok(best.expect("non-empty eps grid"))
}

pub fn sweep_t(a: &RunArgs, out: &Path) -> Result<(), CliError> {
    let run = Run::load(a)?;
    let norm_a = operator_norm(&run.observable)?;
    let deviation = deviation_exact_grid(&run.state, &run.h, &run.observable, &run.t_grid)?;
    let set_avg = match &run.measurements {
        Some(ms) => Some(measurement_averages(ms, &run.state, &run.h, None, &run.t_grid, run.pitch)?),
        None => None,
    };
    let sub_avg = match run.subsystem {
        Some(dims) => Some(subsystem_averages(&run.state, &run.h, dims, &run.t_grid, run.pitch)?),
        None => None,
    };
    let omega = dephase(&run.state, &run.h)?;
    let marker = run.stats.gaps.epsilon_min().ok().and_then(|e| equilibration_timescale_order(run.stats.d_e, e).ok());

    let mut header = vec!["T", "deviation", "deviation_bound", "deviation_best_eps"];
    if set_avg.is_some() {
        header.extend(["set_distinguishability", "set_bound", "set_best_eps"]);
    }
    if sub_avg.is_some() {
        header.extend(["subsystem_distance", "subsystem_bound", "subsystem_best_eps"]);
    }
    header.extend(["omega_T_drift", "timescale", "past_timescale"]);
    let mut csv = Csv::new(&header);
    let (d_eff, d_e) = (run.stats.d_eff, run.stats.d_e);
    for (k, &t) in run.t_grid.iter().enumerate() {
        let (eps1, b1) = optimal_eps(&run.stats, norm_a, &run.eps_grid, t)?;
        let mut cells = vec![float(t), float(deviation[k]), float(b1), float(eps1)];
        if let (Some(avg), Some(ms)) = (&set_avg, &run.measurements) {
            let s_m = ms.total_outcomes();
            let (e, b) = best_bound(&run, |n, eps| theorem2_bound(s_m, d_eff, n, d_e, eps, t))?;
            cells.extend([float(avg[k].set_average), float(b), float(e)]);
        }
        if let (Some(avg), Some((ds, _))) = (&sub_avg, run.subsystem) {
            let (e, b) = best_bound(&run, |n, eps| theorem3_bound(ds, d_eff, n, d_e, eps, t))?;
            cells.extend([float(avg[k][0]), float(b), float(e)]);
        }
        let omega_t = window_average_state(&run.state, &run.h, t)?;
        let drift = eig_hermitian(&omega_t.matrix().sub(omega.matrix()).hermitian_part())?
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, l| m.max(l.abs()));
        cells.push(float(drift));
        cells.push(opt_float(marker));
        cells.push(marker.is_some_and(|m| t >= m).to_string());
        csv.row(&cells);
    }
    csv.write(out, "sweep.csv")?;
    Ok(())
}

pub fn distinguishability(a: &DistinguishArgs, out: &Path) -> Result<(), CliError> {
    let h = io::load_hamiltonian(&a.hamiltonian)?;
    let state = io::load_state(&a.state)?;
    let rho = state.density();
    let sigma: DensityMatrix = match &a.sigma {
        Some(p) => io::load_state(p)?.density(),
        None => dephase(&state, &h)?,
    };
    let measurements = a.measurements.as_deref().map(io::load_measurements).transpose()?;

    #[derive(Serialize)]
    struct Report {
        trace_distance: f64,
        helstrom_success_probability: f64,
        set_distinguishability: Option<f64>,
        povm_distinguishability: Vec<f64>,
        povm_success_probability: Vec<f64>,
    }
    let hel = helstrom_povm(&rho, &sigma)?;
    let (set, per, succ) = match &measurements {
        Some(ms) => (
            Some(set_distinguishability(ms, &rho, &sigma)?),
            ms.povms.iter().map(|m| povm_distinguishability(m, &rho, &sigma)).collect::<Result<Vec<_>, _>>()?,
            ms.povms.iter().map(|m| success_probability(m, &rho, &sigma)).collect::<Result<Vec<_>, _>>()?,
        ),
        None => (None, vec![], vec![]),
    };
    let report = Report {
        trace_distance: trace_distance(&rho, &sigma)?,
        helstrom_success_probability: success_probability(&hel, &rho, &sigma)?,
        set_distinguishability: set,
        povm_distinguishability: per,
        povm_success_probability: succ,
    };
    io::write_json(out, "distinguishability.json", &report)?;
    println!("{}", serde_json::to_string(&report).expect("serializable"));

    if let (Some(ms), Some(grid)) = (&measurements, &a.t_grid) {
        let g = build_gaps(h.spectrum());
        let eps = match a.eps {
            Some(e) => e,
            None => g.epsilon_min()?,
        };
        let t_grid = grid.points();
        let t_min = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
        let pitch = a.pitch.unwrap_or_else(|| 0.25 * pitch_limit(t_min, g.max_frequency()));
        let chain = theorem2_chain_grid(ms, &state, &h, &t_grid, eps, pitch)?;
        let mut csv = Csv::new(&[
            "T",
            "eps",
            "set_average",
            "sum_of_povm_averages",
            "cauchy_schwarz",
            "theorem1_line",
            "final_bound",
            "monotone",
        ]);
        for c in &chain {
            let mut cells = vec![float(c.window), float(c.eps)];
            cells.extend(c.lines().iter().map(|&x| float(x)));
            cells.push(c.is_monotone().to_string());
            csv.row(&cells);
        }
        csv.write(out, "chain.csv")?;
    }
    Ok(())
}

fn parse_state_kind(s: &str) -> Result<StateKind, CliError> {
    let bad = || CliError::Usage(format!("unknown state kind '{s}'"));
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<usize>().map_err(|_| bad())?)),
        None => (s, None),
    };
    match (name, arg) {
        ("haar_pure", None) => Ok(StateKind::HaarPure),
        ("rank_r_mixed", Some(rank)) => Ok(StateKind::RankRMixed { rank }),
        ("energy_uniform", Some(levels)) => Ok(StateKind::EnergyUniform { levels }),
        _ => Err(bad()),
    }
}

pub fn generate_model(a: &GenerateArgs, out: &Path) -> Result<(), CliError> {
    let mut spec = io::load_model(&a.model)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let kind = parse_state_kind(&a.state_kind)?;
    let model = models::generate(&spec).map_err(|e| CliError::Input(a.model.clone(), e))?;
    let h = &model.hamiltonian;
    let d = h.dim();
    let diagonal = matches!(spec.family, Family::EquallySpaced { .. } | Family::Custom { energies: Some(_), .. });
    if diagonal {
        io::write_json(out, "hamiltonian.json", h.spectrum())?;
    } else {
        #[derive(Serialize)]
        struct MatrixFile {
            matrix: ComplexMatrix,
        }
        io::write_json(out, "hamiltonian.json", &MatrixFile { matrix: h.matrix() })?;
    }
    let state = models::random_state(h, kind, spec.seed)?;
    io::write_json(out, "state.json", &state)?;
    let obs = models::random_observable(d, &mut models::stream(spec.seed, Purpose::Observable));
    io::write_json(out, "observable.json", &obs)?;
    if a.povms > 0 {
        let mut rng = models::stream(spec.seed, Purpose::Measurement);
        let ms = models::random_measurement_set(d, a.povms, a.max_outcomes, &mut rng)?;
        io::write_json(out, "measurements.json", &ms)?;
    }

    #[derive(Serialize)]
    struct Info<'a> {
        model: &'a models::ModelSpec,
        d: usize,
        #[serde(rename = "d_E")]
        d_e: usize,
        #[serde(rename = "D_G")]
        d_g: Option<usize>,
        eps_min: Option<f64>,
        factorization: Option<(usize, usize)>,
    }
    let g = build_gaps(h.spectrum());
    let info = Info {
        model: &spec,
        d,
        d_e: h.spectrum().d_e(),
        d_g: g.max_gap_degeneracy().ok(),
        eps_min: g.epsilon_min().ok(),
        factorization: model.factorization,
    };
    io::write_json(out, "model.json", &info)?;
    println!("{}", serde_json::to_string(&info).expect("serializable"));
    Ok(())
}
