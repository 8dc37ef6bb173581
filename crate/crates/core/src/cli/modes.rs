use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use super::{
    CliError, EntourageSpec, Exit, LambdaSpec, ModeOutput, MultipleSection, ProbeSection, Settings,
};
use super::{FredholmSection, RhsSpec, SolveSection, VariantSpec, VerifySection};
use crate::engine::{
    multiple_fixpoint_solve, p_order, real_order, sigma_lift, solve as engine_solve,
    uniqueness_check, ContractionOperator, EngineError, FixpointProblem, MultipleProblem,
    PointOrder, SolveOptions, SolveResult, StopRule, TupleMap,
};
use crate::fredholm::{
    fredholm_solve, fredholm_uniqueness, random_starts, FredholmProblem, GridSpace, Quadrature,
    DEFAULT_SERIES_TERMS,
};
use crate::instances::{
    verify_entourage_metric, Dyadic, EntourageBase, EntourageFamily, EntourageMonoid,
    EntourageSpace, GridFamily, GridFunctionMonoid, PowerFamily, PowerMonoid, RealDistance,
    RealLine, Reals,
};
use crate::monoid::{
    monoid_axiom_suite, null_family_axiom_suite, Horizon, NullFamily, OrderedMonoid,
    SequenceSampler,
};
use crate::report::AxiomReport;
use crate::sci;
use crate::space::{
    random_paths, sample_points, strong_fw_probe, subdivision_paths, verify_space_axioms,
    DistanceSpace, FwProbe, SpaceClass, VectorProduct,
};

fn stop_rule(st: &Settings, default_level: usize) -> StopRule {
    let d = StopRule::default();
    StopRule {
        eps_level: st.eps_level.unwrap_or(default_level),
        max_iter: st.max_iter.unwrap_or(d.max_iter),
    }
}

fn options(st: &Settings) -> SolveOptions {
    let d = Horizon::default();
    SolveOptions {
        horizon: Horizon::new(d.levels, st.horizon.unwrap_or(d.terms)),
        override_certificate: st.override_certificate,
        seed: st.seed,
        ..SolveOptions::default()
    }
}

/// Levels between the stop level and the multi-start comparison. The error
/// of an iterate is its residual amplified by up to `Σ λⁿ`; eight levels
/// allow a factor of 256.
pub(crate) const AGREEMENT_SLACK: usize = 8;

fn agreement_level(stop: &StopRule) -> usize {
    stop.eps_level.saturating_sub(AGREEMENT_SLACK).max(1)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn engine_status(e: &EngineError) -> &'static str {
    match e {
        EngineError::CertificateRefused { .. } => "certificate-refused",
        EngineError::NonMonotone { .. } => "lambda-not-monotone",
        EngineError::DivergenceDetected { .. } => "divergence-detected",
        EngineError::OrbitContractionViolated { .. } => "orbit-contraction-violated",
        EngineError::NotMonotoneStart => "not-monotone-start",
        EngineError::OrderViolated { .. } => "order-violated",
        _ => "input-error",
    }
}

fn invalid(e: EngineError) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Summary fields and `trace.json` for an engine run.
fn engine_output<S>(
    space: &S,
    result: &SolveResult<S::Point, <S::Monoid as OrderedMonoid>::Elem>,
) -> ModeOutput
where
    S: DistanceSpace,
    <S::Monoid as OrderedMonoid>::Elem: Clone,
{
    let (trace, error) = match result {
        Ok(t) => (t, None),
        Err(f) => (&*f.trace, Some(&f.error)),
    };
    let tj = trace.to_json(space);
    let mut m = Map::new();
    for key in [
        "variant",
        "termination",
        "certificate",
        "checks",
        "uniqueness",
        "notes",
    ] {
        m.insert(key.into(), tj[key].clone());
    }
    m.insert("iterations".into(), json!(trace.iterations()));
    let (exit, status) = match error {
        Some(e) => {
            m.insert("error".into(), json!(e.to_string()));
            (Exit::for_engine(e), engine_status(e).to_string())
        }
        None if trace.converged() => (Exit::Success, "converged".to_string()),
        None => (Exit::Failed, trace.termination.label().to_string()),
    };
    ModeOutput {
        exit,
        status,
        summary: m,
        files: vec![("trace.json", pretty(&tj))],
    }
}

fn record_multi_start(out: &mut ModeOutput, count: usize, agree: bool, first: Option<String>) {
    out.summary.insert(
        "multi_start".into(),
        json!({ "starts": count, "agree": agree, "first_disagreement": first }),
    );
    if !agree && out.exit == Exit::Success {
        out.exit = Exit::Failed;
        out.status = "multi-start-disagreement".into();
    }
}

fn run_fixpoint<S>(
    space: &S,
    problem: &FixpointProblem<S>,
    extra_starts: Vec<S::Point>,
    opts: &SolveOptions,
    csv: impl Fn(&S::Point) -> String,
) -> ModeOutput
where
    S: DistanceSpace,
    <S::Monoid as OrderedMonoid>::Elem: Clone,
{
    let result = engine_solve(problem, opts);
    let mut out = engine_output(space, &result);
    if let Some(x) = result.as_ref().ok().and_then(|t| t.fixpoint()) {
        out.summary
            .insert("fixpoint".into(), json!(space.render_point(x)));
        out.files.push(("solution.csv", csv(x)));
    }
    if !extra_starts.is_empty() && out.exit == Exit::Success {
        let mut starts = vec![problem.x0.clone()];
        starts.extend(extra_starts);
        let r = uniqueness_check(problem, &starts, agreement_level(&problem.stop), opts);
        record_multi_start(&mut out, starts.len(), r.agree, r.first_disagreement);
    }
    out
}

fn vector_csv(x: &[f64]) -> String {
    let mut s = String::from("index,value\n");
    for (i, v) in x.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", sci(*v)));
    }
    s
}

fn check_finite(name: &str, xs: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
    if xs.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{name} has non-finite entries")))
    }
}

fn square_matrix(name: &str, rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Invalid(format!("{name} must be {d}×{d}")));
    }
    check_finite(name, rows.iter().flatten().copied())?;
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

pub(super) fn solve(
    s: &SolveSection,
    monotone: bool,
    st: &Settings,
) -> Result<ModeOutput, CliError> {
    let d = s.b.len();
    if d == 0 {
        return Err(CliError::Invalid("b is empty".into()));
    }
    let a = square_matrix("a", &s.a, d)?;
    if s.x0.len() != d {
        return Err(CliError::Invalid(format!(
            "x0 has {} entries, expected {d}",
            s.x0.len()
        )));
    }
    check_finite("b", s.b.iter().copied())?;
    check_finite("x0", s.x0.iter().copied())?;
    if monotone && s.variant == VariantSpec::Orbital {
        return Err(CliError::Invalid(
            "solve-monotone has no orbital variant".into(),
        ));
    }
    if !(s.start_span > 0.0 && s.start_span.is_finite()) {
        return Err(CliError::Invalid("start_span must be positive".into()));
    }
    let stop = stop_rule(st, StopRule::default().eps_level);
    let opts = options(st);

    if d == 1 {
        let (a, b) = (a[(0, 0)], s.b[0]);
        let space = RealLine::new(s.distance).with_span(s.start_span);
        let q = match &s.lambda {
            None => a.abs(),
            Some(LambdaSpec::Scalar { q }) => *q,
            Some(LambdaSpec::Matrix { values }) => square_matrix("lambda", values, 1)?[(0, 0)],
        };
        let lambda = ContractionOperator::scalar(space.monoid(), q).map_err(invalid)?;
        let mut p =
            FixpointProblem::new(&space, move |x: &f64| a * x + b, lambda, s.x0[0]).with_stop(stop);
        if s.variant == VariantSpec::Orbital {
            p = p.orbital();
        }
        if monotone {
            p = p.monotone(real_order(), true);
        }
        let mut starts = sample_points(&space, s.starts, st.seed);
        if monotone {
            starts.retain(|&x| x <= a * x + b);
        }
        return Ok(run_fixpoint(&space, &p, starts, &opts, |x| {
            vector_csv(&[*x])
        }));
    }

    if s.distance != RealDistance::Absolute {
        return Err(CliError::Invalid(
            "vector problems use the absolute distance per coordinate".into(),
        ));
    }
    let space = VectorProduct::new(
        RealLine::new(RealDistance::Absolute).with_span(s.start_span),
        d,
    )
    .map_err(|e| CliError::Invalid(e.to_string()))?;
    let lambda = match &s.lambda {
        None => ContractionOperator::matrix(space.monoid(), a.abs()),
        Some(LambdaSpec::Scalar { q }) => ContractionOperator::scalar(space.monoid(), *q),
        Some(LambdaSpec::Matrix { values }) => {
            ContractionOperator::matrix(space.monoid(), square_matrix("lambda", values, d)?)
        }
    }
    .map_err(invalid)?;
    let b = DVector::from_vec(s.b.clone());
    let am = a.clone();
    let map = move |x: &Vec<f64>| {
        let y = &am * DVector::from_column_slice(x) + &b;
        y.iter().copied().collect::<Vec<f64>>()
    };
    let mut p = FixpointProblem::new(&space, map.clone(), lambda, s.x0.clone()).with_stop(stop);
    if s.variant == VariantSpec::Orbital {
        p = p.orbital();
    }
    let order: PointOrder<Vec<f64>> =
        Arc::new(|x: &Vec<f64>, y: &Vec<f64>| x.iter().zip(y).all(|(a, b)| a <= b));
    let mut starts = sample_points(&space, s.starts, st.seed);
    if monotone {
        starts.retain(|x| order(x, &map(x)));
        p = p.monotone(order, true);
    }
    Ok(run_fixpoint(&space, &p, starts, &opts, |x| vector_csv(x)))
}

pub(super) fn multiple(s: &MultipleSection, st: &Settings) -> Result<ModeOutput, CliError> {
    let m = s.sigma.len();
    if m == 0 {
        return Err(CliError::Invalid("sigma is empty".into()));
    }
    if s.coefficients.len() != m || s.x0.len() != m {
        return Err(CliError::Invalid(format!(
            "coefficients and x0 need {m} entries, found {} and {}",
            s.coefficients.len(),
            s.x0.len()
        )));
    }
    check_finite(
        "coefficients",
        s.coefficients.iter().copied().chain([s.constant]),
    )?;
    check_finite("x0", s.x0.iter().copied())?;
    let c = s.coefficients.clone();
    let k = s.constant;
    let f: TupleMap<f64> =
        Arc::new(move |xs: &[f64]| xs.iter().zip(&c).map(|(x, c)| c * x).sum::<f64>() + k);
    // fail on bad index maps before building the default λ
    let lift = sigma_lift(Arc::clone(&f), s.sigma.clone()).map_err(invalid)?;
    let order = p_order(real_order(), &s.p, m).map_err(invalid)?;
    let lmat = match &s.lambda {
        Some(rows) => square_matrix("lambda", rows, m)?,
        None => {
            let mut l = DMatrix::zeros(m, m);
            for (i, row) in s.sigma.iter().enumerate() {
                for (j, &col) in row.iter().enumerate() {
                    l[(i, col)] += s.coefficients[j].abs();
                }
            }
            l
        }
    };
    let lambda = ContractionOperator::matrix(&PowerMonoid::reals(m), lmat).map_err(invalid)?;
    let stop = stop_rule(st, StopRule::default().eps_level);
    let problem = MultipleProblem {
        f,
        sigma: s.sigma.clone(),
        p: s.p.clone(),
        order: real_order(),
        upper_riesz: true,
        lambda,
        x0: s.x0.clone(),
        stop,
        samples: None,
    };
    let opts = options(st);
    let line = RealLine::new(RealDistance::Absolute).with_span(s.start_span);
    let product = VectorProduct::new(line, m).map_err(|e| CliError::Invalid(e.to_string()))?;
    let result = multiple_fixpoint_solve(&line, &problem, &opts);
    let mut out = engine_output(&product, &result);
    if let Some(x) = result.as_ref().ok().and_then(|t| t.fixpoint()) {
        out.summary
            .insert("fixpoint".into(), json!(product.render_point(x)));
        out.files.push(("solution.csv", vector_csv(x)));
    }
    if s.starts > 0 && out.exit == Exit::Success {
        // starts must satisfy x ≼_P lift(x)
        let mut starts = vec![s.x0.clone()];
        let pool = sample_points(&product, s.starts * 1000, st.seed);
        starts.extend(
            pool.into_iter()
                .filter(|x| order(x, &lift(x)))
                .take(s.starts),
        );
        let lifted = problem.lifted(&product).map_err(invalid)?;
        let r = uniqueness_check(&lifted, &starts, agreement_level(&stop), &opts);
        record_multi_start(&mut out, starts.len(), r.agree, r.first_disagreement);
    }
    Ok(out)
}

fn rhs_values(rhs: &RhsSpec, quad: &Quadrature) -> Result<DMatrix<f64>, CliError> {
    let f = match rhs {
        RhsSpec::Constant { value } => FredholmProblem::scalar_rhs(quad, |_| *value),
        RhsSpec::Polynomial { coefficients } => FredholmProblem::scalar_rhs(quad, |t| {
            coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
        }),
        RhsSpec::Table { values } => {
            if values.len() != quad.len() {
                return Err(CliError::Invalid(format!(
                    "rhs table has {} values for {} nodes",
                    values.len(),
                    quad.len()
                )));
            }
            DMatrix::from_column_slice(values.len(), 1, values)
        }
    };
    check_finite("rhs", f.iter().copied())?;
    Ok(f)
}

pub(super) fn fredholm(s: &FredholmSection, st: &Settings) -> Result<ModeOutput, CliError> {
    let quad = match &s.quadrature {
        Some(t) => Quadrature::from_table(t.nodes.clone(), t.weights.clone(), t.measure)?,
        None => Quadrature::midpoint(s.interval[0], s.interval[1], s.nodes)?,
    };
    let f = rhs_values(&s.rhs, &quad)?;
    let mut problem = s.kernel.linear_problem(quad.clone(), f)?;
    problem.stop = stop_rule(st, 40);
    problem.series_terms = s
        .series_terms
        .or(st.horizon.map(|h| h as usize))
        .unwrap_or(DEFAULT_SERIES_TERMS);
    let opts = options(st);
    let run = fredholm_solve(&problem, &opts)?;
    let space = GridSpace::new(quad.nodes().to_vec(), 1)?;
    let mut out = engine_output(&space, &run.result);
    out.summary.insert(
        "certificate_routes".into(),
        serde_json::to_value(&run.certificate).expect("certificate serializes"),
    );
    if let Some(csv) = run.to_csv() {
        out.files.push(("solution.csv", csv));
    }
    if s.starts > 0 && out.exit == Exit::Success {
        let mut starts = vec![problem.f.clone()];
        starts.extend(random_starts(&problem, s.starts, st.seed));
        let r = fredholm_uniqueness(&problem, &starts, agreement_level(&problem.stop), &opts)?;
        record_multi_start(&mut out, starts.len(), r.agree, r.first_disagreement);
    }
    Ok(out)
}

/// Null-family suites derive several sequences per sample and test each;
/// a short window keeps 10³ samples per instance fast.
pub(crate) const SUITE_HORIZON: Horizon = Horizon {
    levels: 24,
    terms: 64,
};

fn suites<M, F, S>(
    monoid: &M,
    fam: &F,
    space: &S,
    samples: usize,
    horizon: Horizon,
    seed: u64,
) -> Vec<AxiomReport>
where
    M: OrderedMonoid + SequenceSampler + Clone + 'static,
    M::Elem: 'static,
    F: NullFamily<M>,
    S: DistanceSpace,
{
    let sequences = monoid.sample_sequences(samples, seed);
    // every pair and triple of √samples points: at least `samples` pairs
    let points = sample_points(space, (samples as f64).sqrt().ceil() as usize, seed);
    vec![
        monoid_axiom_suite(monoid, samples, seed),
        null_family_axiom_suite(monoid, fam, &sequences, horizon, seed),
        verify_space_axioms(space, &points),
    ]
}

fn entourage_base(v: &VerifySection, base_dir: &Path) -> Result<EntourageBase, CliError> {
    match (&v.entourage, &v.entourage_file) {
        (Some(EntourageSpec { size, partitions }), None) => {
            Ok(EntourageBase::partition_chain(*size, partitions)?)
        }
        (None, Some(path)) => Ok(EntourageBase::load(&base_dir.join(path))?),
        (Some(_), Some(_)) => Err(CliError::Invalid(
            "give either entourage or entourage_file, not both".into(),
        )),
        (None, None) => Err(CliError::Invalid(
            "instance `entourage` needs entourage or entourage_file".into(),
        )),
    }
}

pub(super) fn verify(
    v: &VerifySection,
    base_dir: &Path,
    st: &Settings,
) -> Result<ModeOutput, CliError> {
    if v.instances.is_empty() {
        return Err(CliError::Invalid("no instances listed".into()));
    }
    if v.samples == 0 {
        return Err(CliError::Invalid("samples must be positive".into()));
    }
    let horizon = Horizon::new(
        SUITE_HORIZON.levels,
        st.horizon.unwrap_or(SUITE_HORIZON.terms),
    );
    let (n, seed) = (v.samples, st.seed);
    let mut blocks = Vec::new();
    for name in &v.instances {
        let reports = match name.as_str() {
            "reals" => suites(
                &Reals::default(),
                &Dyadic,
                &RealLine::new(v.distance),
                n,
                horizon,
                seed,
            ),
            "vector" => {
                let space = VectorProduct::new(RealLine::new(RealDistance::Absolute), v.dim)
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
                suites(
                    &PowerMonoid::reals(v.dim),
                    &PowerFamily::dyadic(v.dim),
                    &space,
                    n,
                    horizon,
                    seed,
                )
            }
            "grid" => {
                let quad = Quadrature::midpoint(0.0, 1.0, v.grid_nodes)?;
                let monoid = GridFunctionMonoid::new(quad.nodes().to_vec())?;
                let space =
                    GridSpace::new(quad.nodes().to_vec(), 1)?.with_node_distance(v.distance);
                suites(
                    &monoid,
                    &GridFamily { nodes: quad.len() },
                    &space,
                    n,
                    horizon,
                    seed,
                )
            }
            "entourage" => {
                let base = entourage_base(v, base_dir)?;
                let monoid =
                    EntourageMonoid::with_generators(base.size(), base.relations().to_vec())?;
                let fam = EntourageFamily::from_base(&base);
                let space = EntourageSpace::new(base.clone())?;
                let mut r = suites(&monoid, &fam, &space, n, horizon, seed);
                r.push(verify_entourage_metric(&base));
                r
            }
            other => return Err(CliError::UnknownInstance(other.to_string())),
        };
        blocks.push((name.clone(), reports));
    }

    let all_pass = blocks
        .iter()
        .all(|(_, rs)| rs.iter().all(AxiomReport::all_pass));
    let mut per_instance = Map::new();
    let mut failures = Vec::new();
    for (name, rs) in &blocks {
        per_instance.insert(name.clone(), json!(rs.iter().all(AxiomReport::all_pass)));
        for r in rs {
            for p in r.failures() {
                failures.push(json!({
                    "instance": name,
                    "suite": r.suite,
                    "property": p.property,
                    "counterexample": p.counterexample,
                }));
            }
        }
    }
    let report = json!({
        "samples": n,
        "all_pass": all_pass,
        "instances": blocks.iter().map(|(name, rs)| json!({ "instance": name, "reports": rs })).collect::<Vec<_>>(),
    });
    let mut summary = Map::new();
    summary.insert("all_pass".into(), json!(all_pass));
    summary.insert("instances".into(), Value::Object(per_instance));
    summary.insert("failures".into(), json!(failures));
    Ok(ModeOutput {
        exit: if all_pass {
            Exit::Success
        } else {
            Exit::Failed
        },
        status: if all_pass {
            "verified"
        } else {
            "verification-failed"
        }
        .into(),
        summary,
        files: vec![("report.json", pretty(&report))],
    })
}

pub(super) fn probe(p: &ProbeSection, st: &Settings) -> Result<ModeOutput, CliError> {
    if !(p.span > 0.0 && p.span.is_finite()) {
        return Err(CliError::Invalid("span must be positive".into()));
    }
    if p.chain_level == 0 || p.endpoint_level == 0 {
        return Err(CliError::Invalid("levels start at 1".into()));
    }
    let space = RealLine::new(p.distance).with_span(p.span);
    let budget = p.subdivisions.iter().filter(|&&n| n > 0).count() + p.random_paths;
    let paths = subdivision_paths(0.0, p.span, p.subdivisions.clone())
        .chain(random_paths(p.span, p.max_steps, st.seed).take(p.random_paths));
    let result = strong_fw_probe(&space, paths, budget, p.chain_level, p.endpoint_level);
    let class = space.class();
    let body = match &result {
        FwProbe::NoWitnessFound { paths_checked } => json!({
            "witness": Value::Null,
            "paths_checked": paths_checked,
        }),
        FwProbe::Witness(w) => json!({
            "witness": {
                "steps": w.path.len() - 1,
                "path": w.path.iter().map(|x| sci(*x)).collect::<Vec<_>>(),
                "chain_sum": sci(w.chain_sum),
                "endpoint": sci(w.endpoint),
            },
        }),
    };
    let mut report = json!({
        "distance": p.distance,
        "class": class,
        "chain_level": p.chain_level,
        "endpoint_level": p.endpoint_level,
        "budget": budget,
    });
    if let (Value::Object(r), Value::Object(b)) = (&mut report, body) {
        r.extend(b);
    }
    let found = result.witness().is_some();
    let mut summary = Map::new();
    summary.insert("witness_found".into(), json!(found));
    summary.insert("class".into(), json!(class));
    if let Some(w) = result.witness() {
        summary.insert("chain_sum".into(), json!(sci(w.chain_sum)));
        summary.insert("endpoint".into(), json!(sci(w.endpoint)));
    }
    // a metric space cannot carry a witness
    let failed = found && class == SpaceClass::Metric;
    Ok(ModeOutput {
        exit: if failed { Exit::Failed } else { Exit::Success },
        status: match (found, failed) {
            (_, true) => "verification-failed",
            (true, false) => "witness-found",
            (false, _) => "no-witness-found",
        }
        .into(),
        summary,
        files: vec![("probe.json", pretty(&report))],
    })
}
