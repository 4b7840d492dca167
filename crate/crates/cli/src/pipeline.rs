//! Runs the configured tasks and collects the report.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use trace_bounds::geometry::{build_domain, Domain};
use trace_bounds::io::{tensor_entry_names, write_boundary_tensor_csv, write_equivalence_csv, write_ld_csv, GridDump, LdCsvRow, NodeTable};
use trace_bounds::laplace::{ScalarField, VectorField};
use trace_bounds::ld::{harmonic_ek_tensors, ld_battery, ld_bounds_from, verify_ld_trace_inequality, virtual_work_residual};
use trace_bounds::matnorm::{ratio, relations, verify_equivalence_constants, witnesses, NormKind, Side};
use trace_bounds::optimal_bc::{ek_boundary_tensor, theta_sweep, worst_case_d, SweepRow};
use trace_bounds::sobolev::{battery, divergence_identity_check, harmonic_normal_field, motron_lower_bound, verify_trace_inequality, NormalField, Refinement};
use trace_bounds::Error;

use crate::config::{RunConfig, Task};
use crate::report::*;

/// Relative band for `B >= |∂Ω|/|Ω|`: the discrete surface measure is only
/// second-order accurate, and the two agree exactly on disks and balls.
pub const MOTRON_REL_TOL: f64 = 0.02;
/// Allowed relative change of a computed `B` between consecutive levels.
pub const REFINEMENT_REL_TOL: f64 = 0.10;
/// Entrywise agreement of closed-form and brute-force optimal stresses.
pub const SWEEP_ABS_TOL: f64 = 1e-3;
/// Witness ratios against the bounds they attain.
pub const WITNESS_REL_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Solver(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

enum Outcome<T> {
    Done(T),
    /// The computation detected a violated invariant and stopped.
    Violated(String),
}

fn classify<T>(r: trace_bounds::Result<T>) -> Result<Outcome<T>, RunError> {
    match r {
        Ok(v) => Ok(Outcome::Done(v)),
        Err(
            e @ (Error::NormalFieldViolation { .. } | Error::MaxPrincipleViolated { .. } | Error::EquivalenceViolated { .. }),
        ) => Ok(Outcome::Violated(e.to_string())),
        Err(
            e @ (Error::InvalidSpec(_)
            | Error::GridTooCoarse
            | Error::Unbounded
            | Error::GridTooLarge { .. }
            | Error::Expression(_)
            | Error::Unsupported(_)),
        ) => Err(RunError::Config(e.to_string())),
        Err(e) => Err(RunError::Solver(e.to_string())),
    }
}

fn solver<T>(r: trace_bounds::Result<T>) -> Result<T, RunError> {
    match classify(r)? {
        Outcome::Done(v) => Ok(v),
        Outcome::Violated(m) => Err(RunError::Solver(m)),
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> RunError {
    RunError::Solver(format!("{}: {e}", path.display()))
}

struct Out {
    dir: PathBuf,
    files: Vec<String>,
}

impl Out {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, RunError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn with<F>(&mut self, name: &str, write: F) -> Result<(), RunError>
    where
        F: FnOnce(BufWriter<File>) -> trace_bounds::Result<()>,
    {
        let w = self.create(name)?;
        write(w).map_err(|e| io_err(&self.dir.join(name), e))
    }
}

fn level_name(task: &str, h: f64) -> String {
    format!("{task}/h={h}")
}

fn axes(dim: usize) -> &'static [&'static str] {
    &["x", "y", "z"][..dim]
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    report: Report,
    out: Out,
    domains: Vec<Domain<f64>>,
}

impl Ctx<'_> {
    fn check(&mut self, c: Check) {
        self.report.checks.push(c);
    }

    fn finest(&self) -> &Domain<f64> {
        self.domains.last().expect("at least one level")
    }
}

/// Executes every task of `cfg`, writing into `cfg.output`.
pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    std::fs::create_dir_all(&cfg.output).map_err(|e| io_err(&cfg.output, e))?;
    let needs_domain = cfg.has(Task::Sobolev) || cfg.has(Task::Battery) || cfg.has(Task::Ld);
    let domains = if needs_domain {
        cfg.h
            .iter()
            .map(|&h| classify(build_domain(&cfg.spec(h))).and_then(|o| match o {
                Outcome::Done(d) => Ok(d),
                Outcome::Violated(m) => Err(RunError::Solver(m)),
            }))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let mut ctx = Ctx {
        cfg,
        report: Report::new(cfg.clone()),
        out: Out {
            dir: cfg.output.clone(),
            files: Vec::new(),
        },
        domains,
    };

    let mut finest_normal = None;
    if cfg.has(Task::Sobolev) || cfg.has(Task::Battery) {
        finest_normal = sobolev(&mut ctx)?;
    }
    if cfg.has(Task::Battery) {
        if let Some(n) = &finest_normal {
            trace_battery(&mut ctx, n)?;
        }
    }
    if cfg.has(Task::Ld) {
        ld(&mut ctx)?;
    }
    if cfg.has(Task::MatnormVerify) {
        matnorm(&mut ctx)?;
    }
    if cfg.has(Task::OptimalBcSweep) {
        sweep(&mut ctx)?;
    }

    let mut report = ctx.report;
    report.files = ctx.out.files.clone();
    report.files.push("report.json".into());
    report.files.sort();
    report.finish();
    let mut out = ctx.out;
    let w = out.create("report.json")?;
    serde_json::to_writer_pretty(w, &report).map_err(|e| io_err(&cfg.output.join("report.json"), e))?;
    Ok(report)
}

/// Harmonic normal field and `B` on every level; returns the finest field.
fn sobolev(ctx: &mut Ctx) -> Result<Option<NormalField<f64>>, RunError> {
    let report_levels = ctx.cfg.has(Task::Sobolev);
    let mut section = SobolevSection::default();
    let mut finest = None;
    let levels: Vec<usize> = if report_levels { (0..ctx.domains.len()).collect() } else { vec![ctx.domains.len() - 1] };
    for i in levels {
        let d = &ctx.domains[i];
        let h = d.h();
        let name = level_name("sobolev", h);
        let n = match classify(harmonic_normal_field(d))? {
            Outcome::Done(n) => n,
            Outcome::Violated(m) => {
                ctx.check(Check::violated(name, m, Some(h)));
                continue;
            }
        };
        let b = n.sup_div_boundary;
        let motron = motron_lower_bound(d);
        let level = SobolevLevel {
            h,
            interior_nodes: d.interior_len(),
            boundary_nodes: d.boundary_len(),
            volume: d.volume(),
            area: d.area(),
            b,
            motron,
            sup_div_closure: n.sup_div_closure,
            max_normal_norm: n.max_norm,
            argmax_div: n.argmax_div[..d.dim()].to_vec(),
        };
        let checks = [
            Check::at_least(format!("{name}: B >= |∂Ω|/|Ω|"), b, motron * (1.0 - MOTRON_REL_TOL), MOTRON_REL_TOL, ToleranceKind::Relative, Some(h)),
            Check::at_most(format!("{name}: max |n0| <= 1"), n.max_norm, 1.0 + 5.0 * h, 5.0 * h, ToleranceKind::Absolute, Some(h)),
            Check::at_most(
                format!("{name}: sup_closure |div n0| <= sup_boundary |div n0|"),
                n.sup_div_closure,
                b * (1.0 + 10.0 * h),
                10.0 * h,
                ToleranceKind::Relative,
                Some(h),
            ),
        ];
        if report_levels {
            section.levels.push(level);
            for c in checks {
                ctx.check(c);
            }
        }
        finest = Some((i, n));
    }
    if report_levels {
        for w in section.levels.windows(2) {
            let pair = Refinement::from_pair(w[0].h, w[0].b, w[1].h, w[1].b);
            let change = pair.relative_change();
            ctx.check(Check::at_most(
                format!("sobolev/h={}->{}: relative change of B", w[0].h, w[1].h),
                change,
                REFINEMENT_REL_TOL,
                REFINEMENT_REL_TOL,
                ToleranceKind::Relative,
                Some(w[1].h),
            ));
            section.refinement.push(RefinementRow { pair, relative_change: change });
        }
        ctx.report.sobolev = Some(section);
    }
    let Some((i, n)) = finest else { return Ok(None) };
    if report_levels && ctx.cfg.dump_fields && i + 1 == ctx.domains.len() {
        let d = &ctx.domains[i];
        let dim = d.dim();
        let mut names: Vec<String> = axes(dim).iter().map(|a| format!("n_{a}")).collect();
        names.push("div_n".into());
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut fields: Vec<&ScalarField<f64>> = n.field.components.iter().collect();
        fields.push(&n.divergence);
        let table = solver(NodeTable::from_fields(d, &names, &fields))?;
        ctx.out.with("normal_field.csv", |w| table.write_csv(w))?;
        let dump = solver(GridDump::from_fields(d, &fields))?;
        ctx.out.with("normal_field.bin", |w| dump.write(w))?;
    }
    Ok(Some(n))
}

fn trace_battery(ctx: &mut Ctx, n: &NormalField<f64>) -> Result<(), RunError> {
    let d = ctx.finest();
    let h = d.h();
    let b = n.sup_div_boundary;
    let mut section = BatterySection {
        h,
        b,
        trace: Vec::new(),
        divergence_identity: Vec::new(),
    };
    let mut checks = Vec::new();
    for f in battery(d) {
        let phi = ScalarField::from_fn(d, |p| (f.f)(p));
        let r = solver(verify_trace_inequality(d, &phi, b))?;
        checks.push(Check::at_least(
            format!("battery/h={h}/{}: trace slack", f.name),
            r.slack,
            -r.eps_disc,
            r.eps_disc,
            ToleranceKind::EpsDisc,
            Some(h),
        ));
        section.trace.push(TraceRow {
            field: f.name.into(),
            report: r,
        });
        let c = solver(divergence_identity_check(d, &n.field, &phi))?;
        checks.push(Check::at_most(
            format!("battery/h={h}/{}: divergence identity residual", f.name),
            c.residual,
            c.eps_disc,
            c.eps_disc,
            ToleranceKind::EpsDisc,
            Some(h),
        ));
        section.divergence_identity.push(IdentityRow {
            field: f.name.into(),
            k: None,
            check: c,
        });
    }
    for c in checks {
        ctx.check(c);
    }
    let rows: Vec<(String, f64, f64, f64, f64, f64)> = section
        .trace
        .iter()
        .map(|r| (r.field.clone(), r.report.lhs, r.report.grad_term, r.report.mass_term, r.report.slack, r.report.eps_disc))
        .collect();
    ctx.out.with("battery.csv", |w| {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        w.write_record(["field", "lhs", "grad_term", "mass_term", "slack", "eps_disc"])?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    ctx.report.battery = Some(section);
    Ok(())
}

fn ld(ctx: &mut Ctx) -> Result<(), RunError> {
    let norm = ctx.cfg.norm;
    let mut section = LdSection::default();
    let mut finest = None;
    for i in 0..ctx.domains.len() {
        let d = &ctx.domains[i];
        let h = d.h();
        let name = level_name("ld", h);
        let tensors = match classify(harmonic_ek_tensors(d))? {
            Outcome::Done(t) => t,
            Outcome::Violated(m) => {
                ctx.check(Check::violated(name, m, Some(h)));
                continue;
            }
        };
        let rep = solver(ld_bounds_from(d, norm, &tensors))?;
        for t in &tensors {
            ctx.check(Check::at_most(
                format!("{name}/k={}: |sigma(nu) - e_k|", t.k + 1),
                t.compatibility_residual,
                1e-10,
                1e-10,
                ToleranceKind::Absolute,
                Some(h),
            ));
        }
        section.levels.push(rep);
        if i + 1 == ctx.domains.len() {
            finest = Some(tensors);
        }
    }
    for w in section.levels.windows(2) {
        let pair = Refinement::from_pair(w[0].h, w[0].b, w[1].h, w[1].b);
        let change = pair.relative_change();
        ctx.check(Check::at_most(
            format!("ld/h={}->{}: relative change of B", w[0].h, w[1].h),
            change,
            REFINEMENT_REL_TOL,
            REFINEMENT_REL_TOL,
            ToleranceKind::Relative,
            Some(w[1].h),
        ));
        section.refinement.push(RefinementRow { pair, relative_change: change });
    }
    let label = domain_label(ctx.cfg);
    let rows: Vec<LdCsvRow> = section.levels.iter().map(|r| LdCsvRow::new(&label, r)).collect();
    ctx.out.with("ld_bounds.csv", |w| write_ld_csv(&rows, w))?;

    if let (Some(tensors), Some(rep)) = (finest, section.levels.last().cloned()) {
        let d = ctx.finest();
        let h = d.h();
        let dim = d.dim();
        let mut checks = Vec::new();
        for f in ld_battery::<f64>(dim) {
            let w = VectorField::from_fn(d, |p| (f.f)(p));
            let r = solver(verify_ld_trace_inequality(d, &w, &rep))?;
            checks.push(Check::at_least(
                format!("ld/h={h}/{}: LD trace slack", f.name),
                r.slack,
                -r.eps_disc,
                r.eps_disc,
                ToleranceKind::EpsDisc,
                Some(h),
            ));
            section.battery.push(TraceRow {
                field: f.name.into(),
                report: r,
            });
            for t in &tensors {
                let c = solver(virtual_work_residual(d, &t.sigma, &w))?;
                checks.push(Check::at_most(
                    format!("ld/h={h}/k={}/{}: virtual work residual", t.k + 1, f.name),
                    c.residual,
                    c.eps_disc,
                    c.eps_disc,
                    ToleranceKind::EpsDisc,
                    Some(h),
                ));
                section.virtual_work.push(IdentityRow {
                    field: f.name.into(),
                    k: Some(t.k + 1),
                    check: c,
                });
            }
        }
        for c in checks {
            ctx.check(c);
        }
        if ctx.cfg.dump_fields {
            let d = ctx.domains.last().expect("at least one level");
            for t in &tensors {
                let bt = solver(ek_boundary_tensor(d, t.k))?;
                ctx.out.with(&format!("ek_boundary_k{}.csv", t.k + 1), |w| write_boundary_tensor_csv(d, &bt, w))?;
                let mut fields: Vec<&ScalarField<f64>> = t.sigma.components.iter().collect();
                fields.extend(t.divergence.components.iter());
                let mut names = tensor_entry_names(dim);
                names.extend(axes(dim).iter().map(|a| format!("div_{a}")));
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                let table = solver(NodeTable::from_fields(d, &names, &fields))?;
                ctx.out.with(&format!("ek_sigma_k{}.csv", t.k + 1), |w| table.write_csv(w))?;
                let dump = solver(GridDump::from_fields(d, &fields))?;
                ctx.out.with(&format!("ek_sigma_k{}.bin", t.k + 1), |w| dump.write(w))?;
            }
        }
    }
    ctx.report.ld = Some(section);
    Ok(())
}

fn domain_label(cfg: &RunConfig) -> String {
    serde_json::to_value(&cfg.domain)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(String::from))
        .unwrap_or_else(|| "domain".into())
}

/// Relation table and witnesses for one dimension.
pub fn matnorm_dim(n: usize, samples: usize, seed: u64) -> Result<(MatnormDim, Vec<Check>), RunError> {
    let mut checks = Vec::new();
    let rows = match classify(verify_equivalence_constants(n, samples, seed))? {
        Outcome::Done(rows) => rows,
        Outcome::Violated(m) => {
            checks.push(Check::violated(format!("matnorm/n={n}"), m, None));
            Vec::new()
        }
    };
    let rels = relations(n);
    let ws: Vec<WitnessRow> = witnesses(n)
        .into_iter()
        .map(|w| {
            let rel = &rels[w.relation];
            let bound = if w.side == Side::Lower { rel.lower } else { rel.upper };
            WitnessRow {
                pair: rel.label(),
                side: w.side,
                witness: w.name.into(),
                ratio: ratio(&w.matrix, rel),
                bound,
            }
        })
        .collect();
    for w in &ws {
        checks.push(Check::at_most(
            format!("matnorm/n={n}/{} {:?} bound: witness {}", w.pair, w.side, w.witness).to_lowercase(),
            (w.ratio - w.bound).abs() / w.bound,
            WITNESS_REL_TOL,
            WITNESS_REL_TOL,
            ToleranceKind::Relative,
            None,
        ));
    }
    Ok((
        MatnormDim {
            n,
            samples,
            seed,
            relations: rows,
            witnesses: ws,
        },
        checks,
    ))
}

fn matnorm(ctx: &mut Ctx) -> Result<(), RunError> {
    for n in [2, 3] {
        let (sec, checks) = matnorm_dim(n, ctx.cfg.samples, ctx.cfg.seed)?;
        ctx.out.with(&format!("equivalence_n{n}.csv"), |w| write_equivalence_csv(&sec.relations, w))?;
        for c in checks {
            ctx.check(c);
        }
        ctx.report.matnorm.push(sec);
    }
    Ok(())
}

/// Dimension the sweep runs in: the 2D spectral case, else 3D.
pub fn sweep_dim(norm: NormKind) -> usize {
    if norm == NormKind::Op2 {
        2
    } else {
        3
    }
}

/// Sweep rows and their checks.
pub fn sweep_rows(norm: NormKind, steps: usize, resolution: usize) -> Result<(Vec<SweepRow>, SweepSection, Vec<Check>), RunError> {
    let dim = sweep_dim(norm);
    let rows = solver(theta_sweep(norm, dim, steps, resolution))?;
    let max_entry_diff = rows.iter().map(|r| r.max_entry_diff).fold(0.0, f64::max);
    let mut checks = vec![Check::at_most(
        format!("sweep/{norm}: closed form vs brute force, max entry difference"),
        max_entry_diff,
        SWEEP_ABS_TOL,
        SWEEP_ABS_TOL,
        ToleranceKind::Absolute,
        None,
    )];
    let max_brute = rows.iter().map(|r| r.brute_value).fold(0.0, f64::max);
    let worst = match norm {
        NormKind::Vec2 | NormKind::VecInf => {
            let d = solver(worst_case_d::<f64>(norm, dim))?;
            checks.push(Check::at_most(
                format!("sweep/{norm}: |brute-force sweep maximum - D|"),
                (max_brute - d).abs(),
                SWEEP_ABS_TOL,
                SWEEP_ABS_TOL,
                ToleranceKind::Absolute,
                None,
            ));
            Some(d)
        }
        _ => None,
    };
    let section = SweepSection {
        norm,
        dim,
        steps,
        resolution,
        max_entry_diff,
        max_closed_value: rows.iter().map(|r| r.closed_value).fold(0.0, f64::max),
        max_brute_value: max_brute,
        worst_case_d: worst,
    };
    Ok((rows, section, checks))
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> trace_bounds::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["theta", "closed_value", "brute_value", "max_entry_diff"])?;
    for r in rows {
        w.serialize((r.theta, r.closed_value, r.brute_value, r.max_entry_diff))?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(ctx: &mut Ctx) -> Result<(), RunError> {
    let (rows, section, checks) = sweep_rows(ctx.cfg.norm, ctx.cfg.sweep_steps, ctx.cfg.sweep_resolution)?;
    ctx.out.with("theta_sweep.csv", |w| write_sweep_csv(&rows, w))?;
    for c in checks {
        ctx.check(c);
    }
    ctx.report.sweep = Some(section);
    Ok(())
}
