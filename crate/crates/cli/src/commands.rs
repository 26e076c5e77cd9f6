use std::fmt::Write as _;
use std::io::Write as _;

use clap::Args;
use serde::{Deserialize, Serialize};

use qmi::densities::{export_density_grid, GridSpec, ReducedDensity};
use qmi::format::g12;
use qmi::information::{uncertainty_bound, EntropySum, InformationReport, System, TwoParticleReport};
use qmi::orbitals::{Model, Space};
use qmi::superposition::{default_grid, parse_grid, scan_coefficient};
use qmi::tables::{reproduce, TableId, TableReproduction, QUANTITIES};
use qmi::wavefunction::{Configuration, SymmetryClass, WaveFunction};

use crate::settings::{parse_range, Format, Options};
use crate::CliError;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Also evaluate the direct-integral forms of I and I^3 and the third-order cumulant
    #[arg(long)]
    checks: bool,
}

#[derive(Debug, Args)]
pub struct ScanN3Args {
    /// n3 values: a:b or a comma list (default: the reference-table range)
    #[arg(long, value_name = "RANGE")]
    n3: Option<String>,
    /// Only s1, s2 and I (skips the three-particle integrals)
    #[arg(long)]
    pair_only: bool,
}

#[derive(Debug, Args)]
pub struct ScanSuperpositionArgs {
    /// Quantum numbers of the second configuration (default 4,5,6 for the box, 3,4,5 for ho)
    #[arg(long = "n-b", value_name = "A,B,C")]
    n_b: Option<String>,
    /// c1^2 samples: start:step:end or a comma list (default 0:0.05:1)
    #[arg(long = "c1sq-grid", value_name = "LIST")]
    c1sq_grid: Option<String>,
    /// Drop the c1 c2 cross terms from the density
    #[arg(long)]
    no_interference: bool,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// 1, 2 or all
    #[arg(default_value = "all")]
    which: String,
}

#[derive(Debug, Args)]
pub struct DensityGridArgs {
    /// First axis as lo:hi:points (default: the density's natural extent, 101 points)
    #[arg(long, value_name = "LO:HI:N")]
    x1: Option<String>,
    /// Second axis, same form
    #[arg(long, value_name = "LO:HI:N")]
    x2: Option<String>,
}

fn emit(options: &Options, text: &str) -> Result<(), CliError> {
    match options.out() {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn default_numbers(model: &Model) -> Vec<u32> {
    match model {
        Model::Box { .. } => vec![1, 2, 3],
        Model::Oscillator { .. } => vec![0, 1, 2],
    }
}

fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(g12).collect::<Vec<_>>().join(",")
}

/// A report for either particle count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyReport {
    Three(InformationReport),
    Two(TwoParticleReport),
}

impl AnyReport {
    fn space(&self) -> Space {
        match self {
            AnyReport::Three(r) => r.system.space,
            AnyReport::Two(r) => r.system.space,
        }
    }

    fn s1(&self) -> f64 {
        match self {
            AnyReport::Three(r) => r.entropies.s1,
            AnyReport::Two(r) => r.s1,
        }
    }

    fn converged(&self) -> bool {
        match self {
            AnyReport::Three(r) => r.converged,
            AnyReport::Two(r) => r.converged,
        }
    }

    /// `(label, value)` in display order, values then error estimates.
    fn rows(&self) -> Vec<(String, f64)> {
        match self {
            AnyReport::Three(r) => {
                let mut rows: Vec<(String, f64)> =
                    QUANTITIES.iter().zip(r.table_values()).map(|(q, v)| (q.to_string(), v)).collect();
                for (i, e) in r.entropies.errors.iter().enumerate() {
                    rows.push((format!("err(s{})", i + 1), *e));
                }
                rows
            }
            AnyReport::Two(r) => vec![
                ("s1".into(), r.s1),
                ("s2".into(), r.s2),
                ("I".into(), r.i_pair),
                ("err(s1)".into(), r.errors[0]),
                ("err(s2)".into(), r.errors[1]),
            ],
        }
    }
}

/// Direct-integral cross-checks for one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossChecks {
    pub space: Space,
    pub i_pair_direct: f64,
    pub i_higher_direct: Option<f64>,
    pub cumulant3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOutput {
    pub reports: Vec<AnyReport>,
    pub entropy_sum: Option<EntropySum>,
    pub checks: Vec<CrossChecks>,
}

fn describe(config: &Configuration) -> String {
    let ns: Vec<String> = config.ns.iter().map(u32::to_string).collect();
    let model = match config.model {
        Model::Box { length } => format!("box L={length}"),
        Model::Oscillator { omega } => format!("ho omega={omega}"),
    };
    format!("{model} {} ({})", config.symmetry, ns.join(","))
}

fn not_converged(what: &str) -> CliError {
    CliError::Numerical(format!(
        "{what}: entropy error estimates exceed the tolerance; refine with --panels or relax --tol"
    ))
}

pub fn report(mut options: Options, args: ReportArgs) -> Result<(), CliError> {
    if args.checks {
        options.set("checks", "true".into());
    }
    let model = options.model()?;
    let ns = options.quantum_numbers("n")?.unwrap_or_else(|| default_numbers(&model));
    let symmetry = options.symmetry()?.unwrap_or(SymmetryClass::Antisymmetric);
    let spaces = options.spaces()?;
    let checks = options.flag("checks")?;
    let format = options.format(Format::Table)?;
    // Validate everything before computing anything.
    let base = Configuration::new(model, ns, symmetry, spaces[0])?;
    let schemes = spaces
        .iter()
        .map(|&space| options.scheme(&model, space))
        .collect::<Result<Vec<_>, _>>()?;

    let mut output = ReportOutput { reports: Vec::new(), entropy_sum: None, checks: Vec::new() };
    for (&space, scheme) in spaces.iter().zip(&schemes) {
        let system = System::from_configuration(&base.in_space(space), *scheme)?;
        let report = if base.n_particles() == 3 {
            AnyReport::Three(system.report()?)
        } else {
            AnyReport::Two(system.two_particle_report()?)
        };
        output.reports.push(report);
        if checks {
            let three = base.n_particles() == 3;
            output.checks.push(CrossChecks {
                space,
                i_pair_direct: system.direct_pair_information()?,
                i_higher_direct: if three { Some(system.direct_higher_information()?) } else { None },
                cumulant3: if three { Some(system.cumulant3()?) } else { None },
            });
        }
    }
    if let [x, p] = output.reports.as_slice() {
        let sum = x.s1() + p.s1();
        let bound = uncertainty_bound();
        output.entropy_sum = Some(EntropySum { s_x: x.s1(), s_p: p.s1(), sum, bound, satisfied: sum >= bound });
    }

    let text = match format {
        Format::Json => to_json(&output),
        Format::Csv => report_csv(&output),
        Format::Table => report_table(&base, &output),
    };
    emit(&options, &text)?;
    if output.reports.iter().all(AnyReport::converged) {
        Ok(())
    } else {
        Err(not_converged(&describe(&base)))
    }
}

fn report_csv(output: &ReportOutput) -> String {
    let mut s = String::new();
    let labels: Vec<String> = output.reports[0].rows().into_iter().map(|(l, _)| l).collect();
    let _ = writeln!(s, "space,{},converged", labels.join(","));
    for r in &output.reports {
        let _ = writeln!(s, "{},{},{}", r.space(), csv_row(r.rows().into_iter().map(|(_, v)| v)), r.converged());
    }
    s
}

fn report_table(config: &Configuration, output: &ReportOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", describe(config));
    let _ = write!(s, "{:<15}", "quantity");
    for r in &output.reports {
        let _ = write!(s, " {:>12}", r.space().label());
    }
    s.push('\n');
    let rows: Vec<Vec<(String, f64)>> = output.reports.iter().map(AnyReport::rows).collect();
    for i in 0..rows[0].len() {
        let _ = write!(s, "{:<15}", rows[0][i].0);
        for r in &rows {
            let v = r[i].1;
            if r[i].0.starts_with("err") {
                let _ = write!(s, " {v:>12.1e}");
            } else {
                let _ = write!(s, " {v:>12.6}");
            }
        }
        s.push('\n');
    }
    for c in &output.checks {
        let _ = writeln!(s, "{} direct I = {:.6}", c.space, c.i_pair_direct);
        if let Some(v) = c.i_higher_direct {
            let _ = writeln!(s, "{} direct I^3 = {v:.6}", c.space);
        }
        if let Some(v) = c.cumulant3 {
            let _ = writeln!(s, "{} cumulant C = {v:.3e}", c.space);
        }
    }
    if let Some(e) = &output.entropy_sum {
        let verdict = if e.satisfied { "satisfied" } else { "VIOLATED" };
        let _ = writeln!(s, "s_x + s_p = {:.6} (bound {:.6}, {verdict})", e.sum, e.bound);
    }
    s
}

/// One `scan-n3` row; three-particle fields are absent with `--pair-only`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanN3Row {
    pub space: Space,
    pub symmetry: SymmetryClass,
    pub n3: u32,
    pub s1: f64,
    pub s2: f64,
    pub i_pair: f64,
    pub report: Option<InformationReport>,
    pub converged: bool,
}

pub fn scan_n3(mut options: Options, args: ScanN3Args) -> Result<(), CliError> {
    options.set_opt("n3", args.n3);
    if args.pair_only {
        options.set("pair-only", "true".into());
    }
    let model = options.model()?;
    let head = options.quantum_numbers("n")?.unwrap_or_else(|| default_numbers(&model));
    if head.len() < 2 {
        return Err(CliError::Usage("--n needs n1,n2".into()));
    }
    let n3_values = match options.get("n3") {
        Some(v) => parse_range("n3", v)?,
        None => match model {
            Model::Box { .. } => (3..=6).collect(),
            Model::Oscillator { .. } => (2..=5).collect(),
        },
    };
    let symmetries = match options.symmetry()? {
        Some(s) => vec![s],
        None => vec![SymmetryClass::Antisymmetric, SymmetryClass::Symmetric],
    };
    let spaces = options.spaces()?;
    let pair_only = options.flag("pair-only")?;
    let format = options.format(Format::Table)?;

    let mut jobs = Vec::new();
    for &space in &spaces {
        let scheme = options.scheme(&model, space)?;
        for &symmetry in &symmetries {
            for &n3 in &n3_values {
                let config = Configuration::new(model, vec![head[0], head[1], n3], symmetry, space)?;
                jobs.push((config, scheme));
            }
        }
    }
    let mut rows = Vec::new();
    for (config, scheme) in jobs {
        let system = System::from_configuration(&config, scheme)?;
        let row = if pair_only {
            let s1 = system.entropy(&[0])?;
            let s2 = system.entropy(&[0, 1])?;
            let tol = scheme.target_abs_tol;
            ScanN3Row {
                space: config.space,
                symmetry: config.symmetry,
                n3: config.ns[2],
                s1: s1.value,
                s2: s2.value,
                i_pair: 2.0 * s1.value - s2.value,
                report: None,
                converged: s1.error <= tol && s2.error <= tol,
            }
        } else {
            let r = system.report()?;
            ScanN3Row {
                space: config.space,
                symmetry: config.symmetry,
                n3: config.ns[2],
                s1: r.entropies.s1,
                s2: r.entropies.s2,
                i_pair: r.i_pair,
                converged: r.converged,
                report: Some(r),
            }
        };
        rows.push(row);
    }

    let text = match format {
        Format::Json => to_json(&rows),
        Format::Csv | Format::Table => scan_n3_text(&rows, format == Format::Csv),
    };
    emit(&options, &text)?;
    if rows.iter().all(|r| r.converged) {
        Ok(())
    } else {
        Err(not_converged("scan-n3"))
    }
}

fn scan_n3_text(rows: &[ScanN3Row], csv: bool) -> String {
    let mut s = String::new();
    let header = ["space", "sym", "n3", "s1", "s2", "s3", "I_pair", "I3", "I_rho_gamma", "I_gamma_gamma", "I_higher"];
    if csv {
        let _ = writeln!(s, "{}", header.join(","));
    } else {
        let _ = writeln!(s, "{:<9} {:>3} {:>3}{}", header[0], header[1], header[2], header[3..].iter().map(|h| format!(" {h:>13}")).collect::<String>());
    }
    for r in rows {
        let values: Vec<Option<f64>> = match &r.report {
            Some(rep) => rep.table_values().map(Some).to_vec(),
            None => vec![Some(r.s1), Some(r.s2), None, Some(r.i_pair), None, None, None, None],
        };
        if csv {
            let cells: Vec<String> = values.iter().map(|v| v.map(g12).unwrap_or_default()).collect();
            let _ = writeln!(s, "{},{},{},{}", r.space, r.symmetry.short(), r.n3, cells.join(","));
        } else {
            let cells: String = values
                .iter()
                .map(|v| match v {
                    Some(v) => format!(" {v:>13.6}"),
                    None => format!(" {:>13}", "-"),
                })
                .collect();
            let _ = writeln!(s, "{:<9} {:>3} {:>3}{cells}", r.space.label(), r.symmetry.short(), r.n3);
        }
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSampleOutput {
    pub c1sq: f64,
    pub report: Option<InformationReport>,
    pub error: Option<String>,
}

pub fn scan_superposition(mut options: Options, args: ScanSuperpositionArgs) -> Result<(), CliError> {
    options.set_opt("n-b", args.n_b);
    options.set_opt("c1sq-grid", args.c1sq_grid);
    if args.no_interference {
        options.set("no-interference", "true".into());
    }
    let model = options.model()?;
    let (a_default, b_default) = match model {
        Model::Box { .. } => (vec![1, 2, 3], vec![4, 5, 6]),
        Model::Oscillator { .. } => (vec![0, 1, 2], vec![3, 4, 5]),
    };
    let ns_a = options.quantum_numbers("n")?.unwrap_or(a_default);
    let ns_b = options.quantum_numbers("n-b")?.unwrap_or(b_default);
    let symmetry = options.symmetry()?.unwrap_or(SymmetryClass::Antisymmetric);
    let space = options.space()?;
    let grid = match options.get("c1sq-grid") {
        Some(text) => parse_grid(text)?,
        None => default_grid(),
    };
    let interference = !options.flag("no-interference")?;
    let format = options.format(Format::Csv)?;
    let scheme = options.scheme(&model, space)?;
    let a = Configuration::new(model, ns_a, symmetry, space)?;
    let b = Configuration::new(model, ns_b, symmetry, space)?;
    if a.n_particles() != 3 || b.n_particles() != 3 {
        return Err(CliError::Usage("superposition scans need three-particle configurations".into()));
    }
    // Surface mismatches as usage errors before the scan starts.
    WaveFunction::superposition(&a, &b, 1.0, 0.0, interference)?;
    if space == Space::Momentum {
        log::info!("momentum-space superposition scans carry no reference trend");
    }

    let scan = scan_coefficient(&a, &b, &grid, interference, &scheme)?;
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            scan.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => {
            let samples: Vec<ScanSampleOutput> = scan
                .samples
                .iter()
                .map(|s| ScanSampleOutput {
                    c1sq: s.c1sq,
                    report: s.report.as_ref().ok().cloned(),
                    error: s.report.as_ref().err().map(ToString::to_string),
                })
                .collect();
            to_json(&samples)
        }
        Format::Table => {
            let mut s = String::new();
            let _ = writeln!(s, "{:>6}{}", "c1sq", QUANTITIES.iter().map(|q| format!(" {q:>13}")).collect::<String>());
            for sample in &scan.samples {
                match &sample.report {
                    Ok(r) => {
                        let cells: String = r.table_values().iter().map(|v| format!(" {v:>13.6}")).collect();
                        let _ = writeln!(s, "{:>6.3}{cells}", sample.c1sq);
                    }
                    Err(e) => {
                        let _ = writeln!(s, "{:>6.3} failed: {e}", sample.c1sq);
                    }
                }
            }
            s
        }
    };
    emit(&options, &text)?;
    let failures: Vec<String> = scan.failures().map(|(c, e)| format!("c1^2 = {c}: {e}")).collect();
    if !failures.is_empty() {
        return Err(CliError::Numerical(format!("{} scan samples failed:\n{}", failures.len(), failures.join("\n"))));
    }
    if scan.ok().all(|(_, r)| r.converged) {
        Ok(())
    } else {
        Err(not_converged("scan-superposition"))
    }
}

pub fn tables(options: Options, args: TablesArgs) -> Result<(), CliError> {
    let which = match args.which.as_str() {
        "all" => vec![TableId::Box, TableId::Oscillator],
        other => vec![other.parse::<TableId>()?],
    };
    let format = options.format(Format::Table)?;
    let mut results: Vec<TableReproduction> = Vec::new();
    for table in which {
        let scheme = options.scheme(&table.model(), Space::Position)?;
        results.push(reproduce(table, Some(scheme))?);
    }
    let text = match format {
        Format::Table => results.iter().map(TableReproduction::render).collect::<Vec<_>>().join("\n"),
        Format::Csv => {
            let mut s = String::from("table,column,quantity,reference,computed,delta,pass\n");
            for r in &results {
                for c in &r.cells {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        r.table.number(),
                        c.column,
                        c.quantity,
                        g12(c.reference),
                        g12(c.computed),
                        g12(c.delta),
                        c.pass
                    );
                }
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct TableOutput<'a> {
                table: u8,
                passed: bool,
                cells: &'a [qmi::tables::CellComparison],
            }
            let out: Vec<TableOutput> = results
                .iter()
                .map(|r| TableOutput { table: r.table.number(), passed: r.passed(), cells: &r.cells })
                .collect();
            to_json(&out)
        }
    };
    emit(&options, &text)?;
    let offenders: Vec<String> = results
        .iter()
        .flat_map(|r| {
            r.offenders().into_iter().map(move |c| {
                format!("table {} {} {}: computed {:.6}, reference {:.4}, delta {:+.2e}", r.table.number(), c.column, c.quantity, c.computed, c.reference, c.delta)
            })
        })
        .collect();
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("{} cells outside tolerance:\n{}", offenders.len(), offenders.join("\n"))))
    }
}

fn parse_axis(key: &str, text: &str) -> Result<GridSpec, CliError> {
    let bad = || CliError::Usage(format!("--{key}: expected lo:hi:points, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(hi > lo) || points < 2 {
        return Err(bad());
    }
    Ok(GridSpec { lo, hi, points })
}

pub fn density_grid(mut options: Options, args: DensityGridArgs) -> Result<(), CliError> {
    options.set_opt("x1", args.x1);
    options.set_opt("x2", args.x2);
    let model = options.model()?;
    let ns = options.quantum_numbers("n")?.unwrap_or_else(|| default_numbers(&model));
    let symmetry = options.symmetry()?.unwrap_or(SymmetryClass::Antisymmetric);
    let space = options.space()?;
    let format = options.format(Format::Csv)?;
    let scheme = options.scheme(&model, space)?;
    let config = Configuration::new(model, ns, symmetry, space)?;
    let wf = WaveFunction::build(&config)?;
    let density = ReducedDensity::new(&wf, &[0, 1], &scheme)?;
    let (lo, hi) = density.default_extent();
    let default_axis = GridSpec { lo, hi, points: 101 };
    let x1 = options.get("x1").map(|t| parse_axis("x1", t)).transpose()?.unwrap_or(default_axis);
    let x2 = options.get("x2").map(|t| parse_axis("x2", t)).transpose()?.unwrap_or(default_axis);
    let grid = export_density_grid(&density, x1, x2)?;
    let text = match format {
        Format::Json => to_json(&grid),
        Format::Csv | Format::Table => {
            let mut buf = Vec::new();
            grid.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(&options, &text)
}
