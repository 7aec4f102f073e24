use num_complex::Complex64 as C64;
use reduction_core::complex::checks::{check_chain_conditions, ChainCase};
use reduction_core::complex::connection::{
    connection_functional, reduce_to_zero_point, ConnectionTruncation, FOp, InsertionTuple, ZeroPointInput,
};
use reduction_core::complex::genus0::{genus0_npoint, reduce_genus0, Insertion};
use reduction_core::complex::genus1::{genus1_npoint_trace, prefactor_label, reduce_genus1, relative_deviation};
use reduction_core::complex::genusg::genus_g_reduction_check;
use reduction_core::complex::probe::Probe;
use reduction_core::complex::total::{cohomology_ranks, TotalDescriptor};
use reduction_core::elliptic::{
    eisenstein, f0_iota, f0_kernel, iota_tail_bound, pm_genus1, pm_qseries, resum_iota, weierstrass_p,
    weierstrass_p_series, ModularPoint,
};
use reduction_core::scalar::GaussQ;
use reduction_core::schottky::{genus_g_npoint, genus_g_partition, rho_sew, SewingData};
use reduction_core::voa::FockVector;
use serde_json::{json, Value};

use crate::config::{
    insertions_c64, insertions_exact, CaseSpec, Config, DescriptorSpec, InsertionSpec, Point, ProbeSpec, SlotsSpec,
};

/// A validation failure, reported as JSON with exit code 2.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: "config".into(), message: message.into() }
    }
}

impl From<reduction_core::Error> for CliError {
    fn from(e: reduction_core::Error) -> Self {
        use reduction_core::Error as E;
        let kind = match &e {
            E::VariableMismatch(..) => "variable_mismatch",
            E::Singular(_) => "singular",
            E::Truncation(_) => "truncation",
            E::InvalidArgument(_) => "invalid_argument",
            E::Pole(_) => "pole",
            E::Convergence(_) => "convergence",
            E::Unsupported(_) => "unsupported",
            E::Parse(_) => "parse",
        };
        CliError { kind: kind.into(), message: e.to_string() }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        CliError::config(message)
    }
}

/// The result block of a report and whether the run met its tolerances.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, passed: true }
    }
}

type Run = Result<Outcome, CliError>;

fn need<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block.as_ref().ok_or_else(|| CliError::config(format!("missing [{name}] block")))
}

fn cjson(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn gjson(z: &GaussQ) -> Value {
    json!({"re": format!("{}/{}", z.re.numer(), z.re.denom()), "im": format!("{}/{}", z.im.numer(), z.im.denom())})
}

pub fn eval_eisenstein(cfg: &Config) -> Run {
    let e = need(&cfg.eisenstein, "eisenstein")?;
    Ok(Outcome::ok(json!({"series": eisenstein(e.k, e.order)?.to_json()})))
}

pub fn eval_weierstrass(cfg: &Config) -> Run {
    let w = need(&cfg.weierstrass, "weierstrass")?;
    let mp = ModularPoint::new(w.tau.c64()?, cfg.truncation.q_order)?;
    let ev = weierstrass_p(w.k, w.z.c64()?, &mp, w.z_terms)?;
    Ok(Outcome::ok(json!({
        "value": cjson(ev.value),
        "error_estimate": ev.error_estimate,
        "series": weierstrass_p_series(w.k, &mp, w.z_terms)?.to_json(),
    })))
}

pub fn eval_pm(cfg: &Config) -> Run {
    let p = need(&cfg.pm, "pm")?;
    let z = p.z.c64()?;
    let mut out = json!({"series": pm_qseries(p.m, z, cfg.truncation.q_order)?.to_json()});
    if let Some(tau) = &p.tau {
        let mp = ModularPoint::new(tau.c64()?, cfg.truncation.q_order)?;
        let ev = pm_genus1(p.m, z, &mp, cfg.tolerance.float_tol)?;
        out["value"] = cjson(ev.value);
        out["error_estimate"] = json!(ev.error_estimate);
    }
    Ok(Outcome::ok(out))
}

pub fn eval_f0(cfg: &Config) -> Run {
    let f = need(&cfg.f0, "f0")?;
    let table = f0_iota(f.n, f.m, f.order)?;
    let coeffs: Vec<Value> =
        table.iter().map(|((i, j), c)| json!([i, j, format!("{}/{}", c.numer(), c.denom())])).collect();
    let mut out = json!({"series": {"variables": ["z", "w"], "truncation": f.order, "coeffs": coeffs}});
    if let (Some(z), Some(w)) = (&f.z, &f.w) {
        let (z, w) = (z.c64()?, w.c64()?);
        out["value"] = cjson(f0_kernel(f.n, f.m)?.eval(&z, &w)?);
        out["resummed"] = cjson(resum_iota(&table, z, w));
        out["tail_bound"] = json!(iota_tail_bound(f.n, f.m, f.order, z.norm(), w.norm()));
    }
    Ok(Outcome::ok(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Oracle,
    Reduction,
}

pub fn npoint(cfg: &Config, method: Method) -> Run {
    let n = need(&cfg.npoint, "npoint")?;
    let t = &cfg.truncation;
    let method_name = if method == Method::Oracle { "oracle" } else { "reduction" };
    match n.genus {
        0 => {
            let (o, i) = (n.out_state.resolve()?, n.in_state.resolve()?);
            let value = if cfg.tolerance.exact_mode {
                let ins = insertions_exact(&n.insertions)?;
                let v = match method {
                    Method::Oracle => genus0_npoint(&o, &ins, &i)?,
                    Method::Reduction => reduce_genus0(&o, &ins, &i)?,
                };
                gjson(&v)
            } else {
                let ins = insertions_c64(&n.insertions)?;
                let v = match method {
                    Method::Oracle => genus0_npoint(&o, &ins, &i)?,
                    Method::Reduction => reduce_genus0(&o, &ins, &i)?,
                };
                cjson(v)
            };
            Ok(Outcome::ok(json!({"genus": 0, "method": method_name, "value": value})))
        }
        1 => {
            let ins = insertions_c64(&n.insertions)?;
            let s = match method {
                Method::Oracle => genus1_npoint_trace(&ins, t.q_order, t.weight_cutoff)?,
                Method::Reduction => reduce_genus1(&ins, t.q_order)?,
            };
            Ok(Outcome::ok(json!({"genus": 1, "method": method_name, "prefactor": prefactor_label(), "series": s.to_json()})))
        }
        g => {
            if method == Method::Reduction {
                return Err(CliError::config("genus >= 2 reduction needs a quasiprimary state; use the reduce subcommand"));
            }
            let sc = need(&cfg.schottky, "schottky")?;
            if sc.genus != g {
                return Err(CliError::config(format!("[npoint] genus {g} but [schottky] genus {}", sc.genus)));
            }
            let data = sc.data(t)?;
            let s = genus_g_npoint(&data, &insertions_c64(&n.insertions)?, &sc.orders(t))?;
            Ok(Outcome::ok(json!({"genus": g, "method": "sewing", "series": s.to_json(), "value_at_rho": cjson(s.eval(&data.rho))})))
        }
    }
}

fn sphere(o: &FockVector, x: &[Insertion<C64>], i: &FockVector) -> reduction_core::Result<C64> {
    genus0_npoint(o, x, i)
}

pub fn sew(cfg: &Config) -> Run {
    let s = need(&cfg.sew, "sew")?;
    let t = &cfg.truncation;
    let rho = s.rho.c64()?;
    let mut sd = match &s.slots {
        SlotsSpec::Named(n) if n == "boundary" => SewingData::boundary(rho),
        SlotsSpec::Named(n) => return Err(CliError::config(format!("unknown slots `{n}` (use \"boundary\" or two points)"))),
        SlotsSpec::Points([a, b]) => {
            let radii = s.disk_radii.unwrap_or([1.0, 1.0]);
            SewingData::points(rho, a.c64()?, b.c64()?, (radii[0], radii[1]))?
        }
    };
    sd.fock_cutoff = t.weight_cutoff;
    let vac = FockVector::vacuum(i64::MAX);
    let series = rho_sew(&sphere, &vac, &insertions_c64(&s.insertions)?, &vac, &sd, t.rho_order)?;
    let value: C64 = series.terms().map(|(k, c)| c * rho.powi(k as i32)).sum();
    Ok(Outcome::ok(json!({"series": series.to_json(), "value_at_rho": cjson(value)})))
}

pub fn partition(cfg: &Config) -> Run {
    let sc = need(&cfg.schottky, "schottky")?;
    let data = sc.data(&cfg.truncation)?;
    let s = genus_g_partition(&data, &sc.orders(&cfg.truncation))?;
    Ok(Outcome::ok(json!({"genus": data.genus, "series": s.to_json(), "value_at_rho": cjson(s.eval(&data.rho))})))
}

pub fn reduce(cfg: &Config) -> Run {
    let r = need(&cfg.reduce, "reduce")?;
    let t = &cfg.truncation;
    let tol = cfg.tolerance.float_tol;
    let vac = FockVector::vacuum(i64::MAX);
    match r.genus {
        0 => {
            if cfg.tolerance.exact_mode {
                let ins = insertions_exact(&r.insertions)?;
                let red = reduce_genus0(&vac, &ins, &vac)?;
                let direct = genus0_npoint(&vac, &ins, &vac)?;
                let equal = red == direct;
                return Ok(Outcome {
                    result: json!({"genus": 0, "reduction": gjson(&red), "oracle": gjson(&direct), "exact_match": equal}),
                    passed: equal,
                });
            }
            let ins = insertions_c64(&r.insertions)?;
            let red = reduce_genus0(&vac, &ins, &vac)?;
            let direct = genus0_npoint(&vac, &ins, &vac)?;
            let dev = (red - direct).norm() / direct.norm().max(1.0);
            let zp = reduce_to_zero_point(&ZeroPointInput::Genus0 { ins })?;
            Ok(Outcome {
                result: json!({"genus": 0, "reduction": cjson(red), "oracle": cjson(direct), "deviation": dev, "zero_point": zp.to_json()}),
                passed: dev <= tol,
            })
        }
        1 => {
            let ins = insertions_c64(&r.insertions)?;
            let red = reduce_genus1(&ins, t.q_order)?;
            let trace = genus1_npoint_trace(&ins, t.q_order, t.weight_cutoff)?;
            let dev = relative_deviation(&red, &trace)?;
            let zp = reduce_to_zero_point(&ZeroPointInput::Genus1 { ins, q_order: t.q_order })?;
            Ok(Outcome {
                result: json!({
                    "genus": 1,
                    "prefactor": prefactor_label(),
                    "reduction": red.to_json(),
                    "oracle": trace.to_json(),
                    "deviation": dev,
                    "zero_point": zp.to_json(),
                }),
                passed: dev <= tol && zp.residual <= tol,
            })
        }
        g => {
            let sc = need(&cfg.schottky, "schottky")?;
            if sc.genus != g {
                return Err(CliError::config(format!("[reduce] genus {g} but [schottky] genus {}", sc.genus)));
            }
            let u = r.u.as_ref().ok_or_else(|| CliError::config("[reduce] at genus >= 2 needs u = { state, point }"))?;
            let data = sc.data(t)?;
            let ins = insertions_c64(&r.insertions)?;
            let orders = sc.orders(t);
            let check = genus_g_reduction_check(&data, &u.state.resolve()?, u.point.c64()?, &ins, &orders)?;
            let residual = check.residual() / check.direct.norm().max(1.0);
            let mut all = vec![Insertion::new(u.state.resolve()?, u.point.c64()?)];
            all.extend(ins);
            let zp = reduce_to_zero_point(&ZeroPointInput::GenusG { data, ins: all, orders })?;
            Ok(Outcome {
                result: json!({
                    "genus": g,
                    "zero_mode_part": cjson(check.d1),
                    "kernel_part": cjson(check.d2),
                    "reduction": cjson(check.d1 + check.d2),
                    "oracle": cjson(check.direct),
                    "deviation": residual,
                    "neumann_error_proxy": check.neumann_error,
                    "zero_point": zp.to_json(),
                }),
                passed: residual <= tol,
            })
        }
    }
}

fn probe_of(spec: &ProbeSpec, weight_cutoff: i64) -> Result<Probe, CliError> {
    let pool = spec.pool.iter().map(|s| s.resolve()).collect::<Result<Vec<_>, _>>()?;
    let points = spec.points.iter().map(Point::c64).collect::<Result<Vec<_>, _>>()?;
    Ok(Probe::new(pool, points, weight_cutoff)?)
}

fn descriptor(d: &DescriptorSpec, m_max: usize) -> Result<TotalDescriptor, CliError> {
    let mut out = TotalDescriptor::uniform(d.uniform.unwrap_or(0), m_max, d.max_genus);
    if d.uniform.is_none() {
        out.insert.clear();
    }
    for [g, n, u] in &d.blocks {
        out.insert.insert((*g, *n), *u);
    }
    out.sewing = d.sewing;
    out.reduction = d.reduction;
    Ok(out)
}

fn insertion(spec: &InsertionSpec) -> Result<Insertion<C64>, CliError> {
    Ok(Insertion::new(spec.state.resolve()?, spec.point.c64()?))
}

fn pair(p: &[Point; 2]) -> Result<(C64, C64), CliError> {
    Ok((p[0].c64()?, p[1].c64()?))
}

pub fn check_complex(cfg: &Config) -> Run {
    let c = need(&cfg.check, "check")?;
    let t = &cfg.truncation;
    let probe = c.probe.as_ref().map(|p| probe_of(p, t.weight_cutoff)).transpose()?;
    let mut cases = Vec::new();
    for case in &c.cases {
        cases.push(match case {
            CaseSpec::N { genus, base, x, x_prime } => ChainCase::N {
                genus: *genus,
                base: insertions_c64(base)?,
                x: insertion(x)?,
                x_prime: insertion(x_prime)?,
                q_order: t.q_order,
            },
            CaseSpec::G { base, first, second, orders } => {
                ChainCase::G { base: insertions_c64(base)?, first: pair(first)?, second: pair(second)?, orders: *orders }
            }
            CaseSpec::GN { base, x } => ChainCase::GN { base: insertions_c64(base)?, x: insertion(x)?, q_order: t.q_order },
            CaseSpec::Total { m, a, b } => {
                let probe = probe.clone().ok_or_else(|| CliError::config("Total cases need [check.probe]"))?;
                ChainCase::Total { probe: Box::new(probe), m: *m, a: descriptor(a, m + 2)?, b: descriptor(b, m + 2)? }
            }
        });
    }
    let report = check_chain_conditions(&cases, cfg.tolerance.float_tol);
    let passed = report.residuals.iter().all(|r| r.satisfied && r.error.is_none());
    Ok(Outcome { result: serde_json::to_value(&report).map_err(|e| CliError::config(e.to_string()))?, passed })
}

fn op_of(cfg: &crate::config::OpSpec) -> Result<FOp, CliError> {
    match cfg.kind.as_str() {
        "zero" => Ok(FOp::Zero),
        "identified" => {
            let zeta = cfg.zeta.as_ref().ok_or_else(|| CliError::config("identified operator needs zeta = [p1, p2]"))?;
            Ok(FOp::Identified { zeta: pair(zeta)?, include_k0: cfg.include_k0 })
        }
        other => Err(CliError::config(format!("unknown operator kind `{other}` (use zero or identified)"))),
    }
}

pub fn connection(cfg: &Config) -> Run {
    let c = need(&cfg.connection, "connection")?;
    let t = &cfg.truncation;
    let op = match c.op.as_slice() {
        [] => return Err(CliError::config("[connection] op needs at least one entry")),
        [single] if single.coefficient.c64()? == C64::new(1.0, 0.0) => op_of(single)?,
        many => FOp::Combination(many.iter().map(|o| Ok((o.coefficient.c64()?, op_of(o)?))).collect::<Result<_, CliError>>()?),
    };
    let psi = InsertionTuple { genus: c.psi_genus.unwrap_or(c.genus), insertions: vec![insertion(&c.psi)?] };
    let phi = InsertionTuple { genus: c.genus, insertions: insertions_c64(&c.phi)? };
    let trunc = ConnectionTruncation { rho_order: t.rho_order, q_order: t.q_order };
    let report = connection_functional(&op, &psi, &phi, &trunc, cfg.tolerance.float_tol)?;
    Ok(Outcome::ok(report.to_json()))
}

pub fn cohomology(cfg: &Config) -> Run {
    let c = need(&cfg.cohomology, "cohomology")?;
    let probe = probe_of(&c.probe, cfg.truncation.weight_cutoff)?;
    let m_max = c.degrees.iter().copied().max().unwrap_or(0);
    let desc = descriptor(&c.descriptor, m_max + 1)?;
    let mut reports = Vec::new();
    let mut passed = true;
    for &m in &c.degrees {
        let r = cohomology_ranks(&probe, m, &desc, c.rank_tol)?;
        passed &= !r.indeterminate;
        reports.push(serde_json::to_value(&r).map_err(|e| CliError::config(e.to_string()))?);
    }
    let dims: Vec<Value> = (0..=m_max + 1)
        .flat_map(|m| (0..=desc.max_genus.min(m)).map(move |g| (g, m - g)))
        .map(|(g, n)| json!({"genus": g, "n": n, "dim": probe.dim(g, n)}))
        .collect();
    Ok(Outcome { result: json!({"degrees": reports, "block_dimensions": dims}), passed })
}
