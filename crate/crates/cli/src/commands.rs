use crate::args::*;
use crate::load;
use crate::{emit, Ctx, Failure, Outcome, Table};
use ellgraph_core::heat::{self, CompletenessReport, DataFn, Growth, InitialData};
use ellgraph_core::isoperimetry::{beta_estimate, IsoperimetricReport, SubsetFamily};
use ellgraph_core::oracle::dense_eigh;
use ellgraph_core::spectral::{lambda0_dirichlet, lambda0_infinite, positivity_certificate, ExhaustionOptions, PositivityReport};
use ellgraph_core::verify::{self, CheckOptions, TimeSamples, ViolationReport};
use ellgraph_core::{io, random, EllipticOperator, Error, Region, SolverOptions, VertexFunction, VertexId};
use serde::Serialize;
use std::sync::Arc;

#[derive(Serialize)]
struct Entry {
    vertex: VertexId,
    value: f64,
}

fn entries(f: &VertexFunction) -> Vec<Entry> {
    f.iter().map(|(vertex, &value)| Entry { vertex, value }).collect()
}

fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("serializing a float")
}

fn vertex_table(f: &VertexFunction) -> Table {
    Table {
        header: vec!["vertex", "value"],
        rows: f.iter().map(|(v, &x)| vec![v.to_string(), num(x)]).collect(),
    }
}

#[derive(Serialize)]
struct SpectrumReport {
    region_size: usize,
    interior_size: usize,
    lambda0: f64,
    residual: f64,
    iterations: usize,
    positivity: PositivityReport,
    eigenfunction: Vec<Entry>,
}

pub fn spectrum(ctx: &Ctx, a: &SpectrumArgs) -> Outcome {
    let mut op = load::graph(ctx, &a.graph)?;
    let region = load::region(&mut op, &a.region)?;
    let opts = SolverOptions { tol: a.tol, max_iterations: a.max_iterations };
    let pair = lambda0_dirichlet(&op, &region, &opts)?;
    let positivity = positivity_certificate(&pair)?;
    if let Some(p) = &a.matrix_out {
        let file = std::fs::File::create(ctx.path(p)).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        pair.matrix.matrix.write_coordinate(std::io::BufWriter::new(file)).map_err(|e| Failure::Compute(e.to_string()))?;
    }
    let report = SpectrumReport {
        region_size: region.len(),
        interior_size: region.interior().len(),
        lambda0: pair.lambda0,
        residual: pair.residual,
        iterations: pair.iterations,
        positivity,
        eigenfunction: entries(&pair.eigenfunction),
    };
    emit(ctx, &a.out, "spectrum", &report, Some(vertex_table(&pair.eigenfunction)))
}

pub fn ground_state(ctx: &Ctx, a: &GroundStateArgs) -> Outcome {
    let mut op = load::graph(ctx, &a.graph)?;
    let origin = load::vertex(&op, a.origin, "origin")?;
    let levels = load::levels(&a.levels)?;
    let opts = ExhaustionOptions {
        solver: SolverOptions { tol: a.tol, ..Default::default() },
        stabilization_tol: a.stabilization_tol,
        richardson: a.richardson,
    };
    let gs = lambda0_infinite(&mut op, origin, &levels, &opts)?;
    let report = gs.report();
    let table = Table {
        header: vec!["n", "lambda", "residual", "interior_size"],
        rows: report
            .levels
            .iter()
            .map(|l| vec![l.n.to_string(), num(l.lambda), num(l.residual), l.interior_size.to_string()])
            .collect(),
    };
    emit(ctx, &a.out, "ground-state", &report, Some(table))
}

#[derive(Serialize)]
struct CheegerReport {
    #[serde(flatten)]
    estimate: IsoperimetricReport,
    lambda0_reference: Option<f64>,
}

pub fn cheeger(ctx: &Ctx, a: &CheegerArgs) -> Outcome {
    let mut op = load::graph(ctx, &a.graph)?;
    let region = a.region.as_deref().map(|r| load::region(&mut op, r)).transpose()?;
    let (kind, rest) = a.strategy.split_once(':').unwrap_or((&a.strategy, ""));
    let pair = |s: &str| -> Result<(usize, usize), Failure> {
        let (x, y) = s.split_once(':').ok_or_else(|| Failure::Config(format!("--strategy {kind}:<a>:<b>")))?;
        let p = |t: &str| t.parse::<usize>().map_err(|_| Failure::Config(format!("--strategy: invalid number `{t}`")));
        Ok((p(x)?, p(y)?))
    };
    let family = match kind {
        "exhaustive" => {
            let universe = match &region {
                Some(r) => r.interior().to_vec(),
                None if op.graph().is_finite() => op.graph().vertices().collect(),
                None => return Err(Failure::Config("exhaustive search needs a finite graph or --region".into())),
            };
            SubsetFamily::Exhaustive { universe }
        }
        "balls" => {
            let (o, r) = pair(rest)?;
            SubsetFamily::Balls { origin: load::vertex(&op, o, "strategy")?, max_radius: r }
        }
        "greedy" => {
            let (count, steps) = pair(rest)?;
            ellgraph_core::isoperimetry::default_greedy(&op, count, steps)
        }
        _ => return Err(Failure::Config(format!("--strategy: unknown `{}`", a.strategy))),
    };
    let estimate = beta_estimate(&mut op, &family)?;
    let lambda0_reference = match &region {
        Some(r) => Some(lambda0_dirichlet(&op, r, &SolverOptions::default())?.lambda0),
        None => None,
    };
    emit(ctx, &a.out, "cheeger", &CheegerReport { estimate, lambda0_reference }, None)
}

pub fn heat_kernel(ctx: &Ctx, a: &HeatKernelArgs) -> Outcome {
    let mut op = load::graph(ctx, &a.graph)?;
    let source = load::vertex(&op, a.source, "source")?;
    let slice = heat::heat_kernel(&mut op, source, a.t, a.radius, a.err)?;
    let report = slice.report();
    let table = Table {
        header: vec!["vertex", "distance", "value"],
        rows: report.entries.iter().map(|e| vec![e.vertex.to_string(), e.distance.to_string(), num(e.value)]).collect(),
    };
    emit(ctx, &a.out, "heat-kernel", &report, Some(table))
}

#[derive(Serialize)]
struct IvpReport {
    t: f64,
    entries: Vec<Entry>,
    certificate: heat::Certificate,
    error_bound: f64,
    domain_size: usize,
    data_radius: Option<usize>,
    growth: Option<Growth>,
    method: &'static str,
}

pub fn ivp(ctx: &Ctx, a: &IvpArgs) -> Outcome {
    let mut op = load::graph(ctx, &a.graph)?;
    let origin = load::vertex(&op, a.origin, "origin")?;
    let (kind, rest) = a.data.split_once(':').unwrap_or((&a.data, ""));
    let (data, growth) = match kind {
        "values" => (InitialData::Values(load::function(ctx, std::path::Path::new(rest))?), None),
        "growth" => {
            let cs = load::reals(&rest.replace(':', ","), "growth constant")?;
            let [c1, c2] = cs[..] else {
                return Err(Failure::Config("--data growth:<c1>:<c2>".into()));
            };
            let f: DataFn = Arc::new(move |_, d| c1 * (c2 * d as f64).exp());
            let g = Growth { c1, c2 };
            (InitialData::Function { origin, f, growth: Some(g) }, Some(g))
        }
        _ => return Err(Failure::Config(format!("--data: expected values:<path> or growth:<c1>:<c2>, got `{}`", a.data))),
    };
    let window = op.graph_mut().ball(origin, a.window_radius)?.vertices().to_vec();
    let sol = heat::solve_ivp(&mut op, &data, a.t, &window, a.err)?;
    let report = IvpReport {
        t: a.t,
        entries: entries(&sol.values),
        error_bound: sol.certificate.total(),
        certificate: sol.certificate,
        domain_size: sol.domain_size,
        data_radius: sol.data_radius,
        growth,
        method: "uniformization",
    };
    emit(ctx, &a.out, "ivp", &report, Some(vertex_table(&sol.values)))
}

#[derive(Serialize)]
struct TransformChecks {
    support_size: usize,
    /// `max |Ã1|`.
    constants_defect: f64,
    /// Relative `max |c(x,y)φ(x)² − c(y,x)φ(y)²|`.
    detailed_balance_defect: f64,
    /// Relative `max |Ãu − φ⁻¹(L − λ₀)(φu)|` over random `u`.
    conjugation_defect: f64,
}

#[derive(Serialize)]
struct HtransformReport {
    lambda0: f64,
    interior_size: usize,
    residual: f64,
    transform: TransformChecks,
    completeness: CompletenessReport,
}

fn transform_checks(op: &EllipticOperator, gs: &heat::GroundState, tr: &heat::GroundStateTransform, samples: usize, seed: u64) -> Result<TransformChecks, Failure> {
    let ones = VertexFunction::constant(tr.phi.domain(), 1.0);
    let constants_defect = tr.apply(&ones)?.sup_norm();
    let mut detailed_balance_defect: f64 = 0.0;
    for (&(x, y), &c) in &tr.coefficients {
        if let Some(r) = tr.coefficient(y, x) {
            let (px, py) = (gs.phi.value_or_zero(x), gs.phi.value_or_zero(y));
            let (l, rr) = (c * px * px, r * py * py);
            detailed_balance_defect = detailed_balance_defect.max((l - rr).abs() / l.abs().max(rr.abs()));
        }
    }
    let mut rng = random::rng(seed);
    let mut conjugation_defect: f64 = 0.0;
    for _ in 0..samples {
        let u = random::function(&mut rng, tr.phi.domain(), -1.0, 1.0);
        let tu = tr.apply(&u)?;
        let phiu = VertexFunction::from_fn(tr.phi.domain(), |v| gs.phi.value_or_zero(v) * u.value_or_zero(v));
        for (x, &lhs) in tu.iter() {
            let px = gs.phi.value_or_zero(x);
            let rhs = (op.apply_at(&phiu, x)? - gs.lambda0 * px * u.value_or_zero(x)) / px;
            let mut scale = (op.potential().get(x) + gs.lambda0).abs() * u.value_or_zero(x).abs();
            for &(y, w) in op.graph().neighbors(x)? {
                scale += w * (gs.phi.value_or_zero(y) / px) * (u.value_or_zero(x).abs() + u.value_or_zero(y).abs());
            }
            conjugation_defect = conjugation_defect.max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));
        }
    }
    Ok(TransformChecks { support_size: tr.support.len(), constants_defect, detailed_balance_defect, conjugation_defect })
}

pub fn htransform(ctx: &Ctx, a: &HtransformArgs) -> Outcome {
    let mut op = load::graph(ctx, &a.graph)?;
    let origin = load::vertex(&op, a.origin, "origin")?;
    let times = load::reals(&a.times, "time")?;
    let gs = if op.graph().is_finite() {
        let region = load::region(&mut op, "all")?;
        let pair = lambda0_dirichlet(&op, &region, &SolverOptions::default())?;
        heat::GroundState::from_eigenpair(&op, &pair)?
    } else {
        let levels = load::levels(&a.levels)?;
        let approx = lambda0_infinite(&mut op, origin, &levels, &ExhaustionOptions::default())?;
        heat::GroundState::from_exhaustion(&op, &approx)?
    };
    let tr = heat::htransform_generator(&op, &gs)?;
    let transform = transform_checks(&op, &gs, &tr, a.samples, a.seed)?;
    let window = op.graph_mut().ball(origin, a.window_radius)?.vertices().to_vec();
    let completeness = heat::completeness_check(&mut op, &gs, &times, &window, a.tol)?;
    let report = HtransformReport { lambda0: gs.lambda0, interior_size: gs.interior.len(), residual: gs.residual, transform, completeness };
    emit(ctx, &a.out, "htransform", &report, None)
}

#[derive(Serialize)]
struct CheckResult {
    check: &'static str,
    report: ViolationReport,
}

#[derive(Serialize)]
struct InstanceReport {
    name: String,
    region_size: usize,
    interior_size: usize,
    checks: Vec<CheckResult>,
}

#[derive(Serialize)]
struct VerifyReport {
    instances: Vec<InstanceReport>,
    passed: bool,
}

struct Instance {
    name: String,
    op: EllipticOperator,
    region: Region,
    function: Option<VertexFunction>,
}

const BATTERY: &[(&str, &str, Option<&str>, &str)] = &[
    ("path5", include_str!("../fixtures/path5.txt"), None, "ball:2:1"),
    ("cycle6-weighted", include_str!("../fixtures/cycle6.txt"), Some(include_str!("../fixtures/cycle6.potential")), "ball:0:2"),
    ("small10", include_str!("../fixtures/small10.txt"), Some(include_str!("../fixtures/small10.potential")), "ball:0:2"),
    ("small10-free", include_str!("../fixtures/small10.txt"), None, "ball:3:2"),
];

fn battery() -> Result<Vec<Instance>, Failure> {
    let mut out = Vec::new();
    for &(name, edges, potential, region) in BATTERY {
        let g = io::parse_edge_list(edges)?;
        let p = match potential {
            Some(text) => io::parse_potential(text)?,
            None => ellgraph_core::Potential::zero(),
        };
        let mut op = EllipticOperator::new(g, p)?;
        let region = load::region(&mut op, region)?;
        out.push(Instance { name: name.into(), op, region, function: None });
    }
    for (name, desc, radius) in [("lattice-1", "lattice:1", 20usize), ("lattice-2", "lattice:2", 6), ("tree-3", "tree:3", 5)] {
        let args = GraphArgs { graph: desc.into(), weights: None, potential: None };
        let mut op = load::graph(&Ctx { base: ".".into() }, &args)?;
        let o = op.graph().origin();
        let region = op.graph_mut().ball(o, radius)?;
        out.push(Instance { name: name.into(), op, region, function: None });
    }
    Ok(out)
}

fn run_checks(inst: &mut Instance, kind: CheckKind, opts: &CheckOptions) -> Result<InstanceReport, Failure> {
    let op = &inst.op;
    let f = match &inst.function {
        Some(f) => f.clone(),
        None => lambda0_dirichlet(op, &inst.region, &SolverOptions::default())?.eigenfunction,
    };
    let wanted = |k: CheckKind| kind == CheckKind::All || kind == k;
    let mut checks = Vec::new();
    if wanted(CheckKind::MaxPrinciple) {
        checks.push(CheckResult { check: "max-principle", report: verify::check_max_principle(op, &inst.region, &f, opts)? });
    }
    if wanted(CheckKind::Harnack) {
        checks.push(CheckResult { check: "harnack", report: verify::check_harnack_all(op, &inst.region, &f, opts)? });
    }
    let potential_free = inst.region.vertices().iter().all(|&v| op.potential().get(v) == 0.0);
    if wanted(CheckKind::Envelope) && (potential_free || kind == CheckKind::Envelope) {
        let pos: Vec<VertexId> = f.iter().filter(|(_, &x)| x > 0.0).map(|(v, _)| v).collect();
        let g = VertexFunction::from_fn(&pos, |v| f.value_or_zero(v));
        let top = pos.iter().copied().max_by(|&x, &y| g.value_or_zero(x).total_cmp(&g.value_or_zero(y)));
        let pairs: Vec<_> = match top {
            Some(t) => pos.iter().map(|&v| (t, v)).collect(),
            None => Vec::new(),
        };
        let mut report = verify::check_growth_envelope(op, &g, &pairs, opts)?;
        let checkable = pos.iter().filter(|&&v| op.graph().neighbors(v).map(|n| n.iter().all(|(y, _)| g.contains(*y))).unwrap_or(false)).count();
        report.notes.push(format!("hypothesis Af >= 0 verified at {checkable} of {} vertices", pos.len()));
        checks.push(CheckResult { check: "envelope", report });
    }
    if wanted(CheckKind::Parabolic) && op.graph().is_finite() {
        checks.push(CheckResult { check: "parabolic", report: parabolic(&mut inst.op, &inst.region, &f, opts)? });
    }
    Ok(InstanceReport {
        name: inst.name.clone(),
        region_size: inst.region.len(),
        interior_size: inst.region.interior().len(),
        checks,
    })
}

// u(t) = P_t u0 − δt has Lu + ∂u/∂t = −δ(1 + tW) < 0; the grid is fine
// enough that the difference quotients certify it
fn parabolic(op: &mut EllipticOperator, region: &Region, u0: &VertexFunction, opts: &CheckOptions) -> Result<ViolationReport, Failure> {
    let all: Vec<VertexId> = op.graph().vertices().collect();
    let norm = op.compressed_matrix(&all)?.max_abs_row_sum().max(1.0);
    let scale = u0.sup_norm().max(f64::MIN_POSITIVE);
    let delta = scale;
    let h = 0.1 / (norm * norm);
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * h).collect();
    let full = VertexFunction::from_fn(&all, |v| u0.value_or_zero(v));
    let mut values = Vec::with_capacity(times.len());
    for &t in &times {
        let u = heat::semigroup_apply(op, &full, t, 1e-15 * scale)?.values;
        values.push(u.map(|_, x| x - delta * t));
    }
    let (report, _) = verify::check_parabolic_max(op, region, &TimeSamples { times, values }, opts)?;
    Ok(report)
}

pub fn verify(ctx: &Ctx, a: &VerifyArgs) -> Outcome {
    let opts = CheckOptions { tol: a.tol, shift_potential: a.shift_potential };
    let mut instances = match &a.graph {
        None => battery()?,
        Some(g) => {
            let args = GraphArgs { graph: g.clone(), weights: a.weights.clone(), potential: a.potential.clone() };
            let mut op = load::graph(ctx, &args)?;
            let region = load::region(&mut op, &a.region)?;
            let function = a.function.as_deref().map(|p| load::function(ctx, p)).transpose()?;
            vec![Instance { name: g.clone(), op, region, function }]
        }
    };
    let mut reports = Vec::new();
    for inst in &mut instances {
        reports.push(run_checks(inst, a.check, &opts)?);
    }
    let passed = reports.iter().all(|r| r.checks.iter().all(|c| c.report.passed));
    emit(ctx, &a.out, "verify", &VerifyReport { instances: reports, passed }, None)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Violation("a checked inequality is violated".into()))
    }
}

#[derive(Serialize)]
struct EighReport {
    dimension: usize,
    eigenvalues: Vec<f64>,
}

pub fn eigh(ctx: &Ctx, a: &EighArgs) -> Outcome {
    let text = std::fs::read_to_string(ctx.path(&a.matrix)).map_err(|e| Failure::Config(format!("{}: {e}", a.matrix.display())))?;
    let m = io::parse_coordinate(&text).map_err(|e| Failure::Config(format!("{}: {e}", a.matrix.display())))?;
    let e = dense_eigh(&m).map_err(|e| match e {
        Error::NotSymmetric { .. } | Error::TooLarge { .. } => Failure::Config(e.to_string()),
        other => Failure::from(other),
    })?;
    let table = Table {
        header: vec!["index", "eigenvalue"],
        rows: e.values.iter().enumerate().map(|(i, &v)| vec![i.to_string(), num(v)]).collect(),
    };
    emit(ctx, &a.out, "eigh", &EighReport { dimension: m.dim(), eigenvalues: e.values }, Some(table))
}
