use crate::config::{KernelSource, ScenarioConfig};
use crate::error::CliError;
use ftl_core::experiments::{amplitude_study, converge_study, m1_slice_study, weakstar_study, BandCheck, ConvergenceReport};
use ftl_core::io::{sig17, write_atomic};
use ftl_core::lattice::CompactWindow;
use ftl_core::propagators::{
    eigensolver_reference, mehler_kernel, metaplectic_kernel, trotter_with, write_kernel_dump, KernelSidecar,
    MehlerKernel, SampledKernel,
};
use ftl_core::symplectic::{exceptional_times, flow_at, QuadraticHamiltonian};
use ftl_core::timefreq::{
    almost_diag_gram, kernel_as_function, mod_norm_with, GramLattice, NormRecord, NormSpec, SampledSymbol, Window,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Resolved run context shared by every subcommand.
pub struct Run {
    pub config: ScenarioConfig,
    pub out: PathBuf,
}

impl Run {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        write_atomic(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serialises");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Records the resolved scenario next to the outputs.
    pub fn write_scenario(&self) -> Result<(), CliError> {
        self.write("scenario.toml", self.config.emit().as_bytes()).map(|_| ())
    }

    /// File stem for the i-th time of the scenario.
    fn stem(&self, command: &str, i: usize) -> String {
        if self.config.time.t.len() == 1 {
            command.to_string()
        } else {
            format!("{command}_t{i}")
        }
    }
}

fn bands_error(checks: &[&BandCheck]) -> CliError {
    CliError::Bands(
        checks.iter().map(|c| format!("{} = {} (bound {})", c.name, sig17(c.value), sig17(c.bound))).collect::<Vec<_>>().join(", "),
    )
}

#[derive(Serialize)]
struct FlowRecord {
    t: f64,
    a_t: Vec<Vec<f64>>,
    b_t: Vec<Vec<f64>>,
    c_t: Vec<Vec<f64>>,
    d_t: Vec<Vec<f64>>,
    det_b: f64,
    symplectic_residual: f64,
    exceptional: bool,
}

pub fn flow(run: &Run) -> Result<(), CliError> {
    let h = run.config.hamiltonian()?.quadratic_part();
    println!("{:>24} {:>24} {:>24} {}", "t", "det_B_t", "symplectic_residual", "exceptional");
    let mut records = Vec::new();
    for &t in &run.config.time.t {
        let flow = flow_at(&h, t);
        let r = FlowRecord {
            t,
            a_t: flow.a_t().to_rows(),
            b_t: flow.b_t().to_rows(),
            c_t: flow.c_t().to_rows(),
            d_t: flow.d_t().to_rows(),
            det_b: flow.det_b(),
            symplectic_residual: flow.symplectic_residual(),
            exceptional: flow.is_near_exceptional(),
        };
        println!("{:>24} {:>24} {:>24} {}", sig17(t), sig17(r.det_b), sig17(r.symplectic_residual), r.exceptional);
        for (name, block) in [("A_t", &r.a_t), ("B_t", &r.b_t), ("C_t", &r.c_t), ("D_t", &r.d_t)] {
            let rows: Vec<String> = block.iter().map(|row| row.iter().map(|v| sig17(*v)).collect::<Vec<_>>().join(" ")).collect();
            println!("    {name} = [{}]", rows.join("; "));
        }
        records.push(r);
    }
    run.write_json("flow.json", &records)?;
    Ok(())
}

pub fn exceptional(run: &Run) -> Result<(), CliError> {
    let h = run.config.hamiltonian()?.quadratic_part();
    let [lo, hi] = run.config.time.scan;
    let set = exceptional_times(&h, lo, hi, run.config.time.scan_step)?;
    #[derive(Serialize)]
    struct Report<'a> {
        status: &'static str,
        #[serde(flatten)]
        set: &'a ftl_core::symplectic::ExceptionalTimeSet,
    }
    let status = if set.whole_line {
        "degenerate"
    } else if set.is_resolved() {
        "resolved"
    } else {
        "unresolved"
    };
    run.write_json("exceptional.json", &Report { status, set: &set })?;
    if set.whole_line {
        println!("degenerate: det B_t vanishes on all of [{lo}, {hi}]");
    }
    for r in &set.roots {
        println!("{:>24} {:?}", sig17(r.t), r.kind);
    }
    if set.is_resolved() {
        Ok(())
    } else {
        Err(CliError::Clusters(set.clusters.clone()))
    }
}

pub fn kernel(run: &Run, source: KernelSource, n: usize) -> Result<(), CliError> {
    let cfg = &run.config;
    let h = cfg.hamiltonian()?;
    let grid = cfg.grid()?;
    let t = cfg.time.t[0];
    let (k, described): (SampledKernel, QuadraticHamiltonian) = match source {
        KernelSource::Trotter => (trotter_with(&h, t, n, &grid, cfg.study.trotter)?, h),
        KernelSource::Eigensolver => (eigensolver_reference(&h, t, &grid)?, h),
        KernelSource::Metaplectic => {
            let h0 = h.quadratic_part();
            (metaplectic_kernel(&h0, t, &grid)?, h0)
        }
        KernelSource::Mehler => {
            if h != QuadraticHamiltonian::harmonic(grid.dim()) {
                return Err(CliError::Config("mehler provenance needs the harmonic preset without potential".into()));
            }
            match mehler_kernel(t, &grid)? {
                MehlerKernel::Kernel(k) => (k, h),
                MehlerKernel::Reflection(desc) => {
                    let sidecar = KernelSidecar::for_descriptor(&desc, &grid, &h);
                    let path = run.write_json("kernel_mehler.json", &sidecar)?;
                    println!("descriptor {}", path.display());
                    return Err(CliError::Descriptor { t, det_b: flow_at(&h, t).det_b().abs() });
                }
            }
        }
    };
    let name = match source {
        KernelSource::Trotter => format!("kernel_trotter_n{n}"),
        KernelSource::Eigensolver => "kernel_eigensolver".into(),
        KernelSource::Metaplectic => "kernel_metaplectic".into(),
        KernelSource::Mehler => "kernel_mehler".into(),
    };
    let stem = run.out.join(&name);
    let bytes = write_kernel_dump(&k, &described, &stem)?;
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let bin = format!("{name}.bin");
    run.write(&format!("{name}.sha256"), format!("{digest}  {bin}\n").as_bytes())?;
    println!("{digest}  {}", stem.with_extension("bin").display());
    println!("boundary_mass {}", sig17(k.boundary_mass()));
    Ok(())
}

#[derive(Clone, Copy)]
pub enum Study {
    Converge,
    Weakstar,
    M1Slice,
}

impl Study {
    fn name(self) -> &'static str {
        match self {
            Self::Converge => "converge",
            Self::Weakstar => "weakstar",
            Self::M1Slice => "m1slice",
        }
    }
}

pub fn study(run: &Run, which: Study) -> Result<(), CliError> {
    let cfg = &run.config;
    let h = cfg.hamiltonian()?;
    let grid = cfg.grid()?;
    let opts = cfg.study_options();
    let mut violations = Vec::new();
    for (i, &t) in cfg.time.t.iter().enumerate() {
        let schedule = &cfg.study.schedule;
        let report: ConvergenceReport = match which {
            Study::Converge => converge_study(&h, t, schedule, &grid, &opts)?,
            Study::Weakstar => weakstar_study(&h, t, schedule, &grid, &opts)?,
            Study::M1Slice => m1_slice_study(&h, t, schedule, &grid, &opts)?,
        };
        let stem = run.stem(which.name(), i);
        let csv = report.to_csv();
        run.write(&format!("{stem}.csv"), csv.as_bytes())?;
        run.write(&format!("{stem}.jsonl"), report.to_json_lines().as_bytes())?;
        println!("# {} t = {} det_B_t = {}", which.name(), sig17(t), sig17(report.det_b));
        print!("{csv}");
        for c in &report.checks {
            println!("# {:<32} {} value {} bound {}", c.name, if c.passed { "ok" } else { "VIOLATED" }, sig17(c.value), sig17(c.bound));
        }
        violations.extend(report.failed_checks().into_iter().cloned());
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(bands_error(&violations.iter().collect::<Vec<_>>()))
    }
}

pub fn amplitude(run: &Run) -> Result<(), CliError> {
    let cfg = &run.config;
    let h = cfg.hamiltonian()?;
    let grid = cfg.grid()?;
    let a = &cfg.amplitude;
    let radii = a.radii.clone().unwrap_or_else(|| a.radii_cells.iter().map(|m| (m + 0.5) * grid.spacing()).collect());
    let mut violations = Vec::new();
    for (i, &t) in cfg.time.t.iter().enumerate() {
        let study = amplitude_study(&h, t, &a.x0, &a.y0, &radii, &grid, &cfg.study.bands)?;
        run.write_json(&format!("{}.json", run.stem("amplitude", i)), &study)?;
        println!("# amplitude t = {}", sig17(t));
        println!("{:>24} {:>24} {:>24}", "a", "|I|", "|I|/(ab)^(d/2)");
        for r in &study.rows {
            println!("{:>24} {:>24} {:>24}", sig17(r.a), sig17(r.modulus), sig17(r.rescaled));
        }
        println!(
            "# extrapolated {} target {} relative_error {} ({})",
            sig17(study.extrapolated),
            sig17(study.ball_volume * study.reference_modulus),
            sig17(study.relative_error),
            study.reference_source
        );
        violations.extend(study.checks.iter().filter(|c| !c.passed).cloned());
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(bands_error(&violations.iter().collect::<Vec<_>>()))
    }
}

/// Norm records of the Trotter kernels on the schedule and of the oracle, plus the
/// almost-diagonalisation fit of the potential's Weyl symbol.
pub fn stft_report(run: &Run) -> Result<(), CliError> {
    let cfg = &run.config;
    let h = cfg.hamiltonian()?;
    let grid = cfg.grid()?;
    if grid.dim() != 1 {
        return Err(CliError::Config("stft-report supports grid.d = 1".into()));
    }
    let product = grid.product()?;
    let window = Window::with_width(product, cfg.study.window_width)?;
    let compact = CompactWindow::with_fraction(product, cfg.study.compact_fraction)?;
    let stride = cfg.study.minfty1_stride.unwrap_or((grid.n() / 32).max(1));
    let specs = [
        NormSpec::modulation(2.0, 2.0, 0.0),
        NormSpec::modulation(f64::INFINITY, 1.0, 0.0),
        NormSpec::modulation(f64::INFINITY, f64::INFINITY, 0.0),
        NormSpec::fourier_lebesgue(0.0),
        NormSpec::localized(0.0),
    ];
    let mut lines = String::new();
    let mut record = |id: String, k: &SampledKernel| -> Result<(), CliError> {
        let f = kernel_as_function(k)?;
        for spec in specs {
            let value = mod_norm_with(&f, spec, &window, Some(&compact), stride)?;
            let rec = NormRecord::new(id.clone(), spec, value, &f, stride);
            lines.push_str(&serde_json::to_string(&rec).expect("record serialises"));
            lines.push('\n');
        }
        Ok(())
    };
    for (i, &t) in cfg.time.t.iter().enumerate() {
        for &n in &cfg.study.schedule {
            let k = trotter_with(&h, t, n, &grid, cfg.study.trotter)?;
            record(format!("t{i}:trotter:n{n}"), &k)?;
        }
        record(format!("t{i}:oracle"), &eigensolver_reference(&h, t, &grid)?)?;
    }
    // the decay fit is meaningless for σ ≡ 0
    let potential = h.potential().clone();
    if potential.sup_bound() > 0.0 {
        let symbol = SampledSymbol::from_fn(grid, |x, _| potential.eval(&[x]))?;
        let gram = almost_diag_gram(&symbol, &Window::with_width(grid, cfg.study.window_width)?, &GramLattice::default())?;
        #[derive(Serialize)]
        struct GramLine<'a> {
            object_id: &'static str,
            #[serde(flatten)]
            report: &'a ftl_core::timefreq::AlmostDiagReport,
        }
        lines.push_str(&serde_json::to_string(&GramLine { object_id: "potential:gram", report: &gram }).expect("gram serialises"));
        lines.push('\n');
    }
    let path = run.write("stft_report.jsonl", lines.as_bytes())?;
    print!("{lines}");
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn resolve_out(config: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| config.out.clone())
}
