use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use num_traits::{One, Zero};
use reduction_core::complex::checks::{check_chain_conditions, ChainCase};
use reduction_core::complex::connection::{reduce_to_zero_point, Factor, ZeroPointInput};
use reduction_core::complex::genus0::{genus0_npoint, reduce_genus0, Insertion};
use reduction_core::complex::genus1::{genus1_npoint_trace, reduce_genus1, relative_deviation};
use reduction_core::complex::probe::{Genus0Space, Probe};
use reduction_core::complex::total::{exact_rank, numeric_rank, total_differential, TotalDescriptor};
use reduction_core::elliptic::{eisenstein, p1_global, p1_laurent, ModularPoint};
use reduction_core::scalar::{q, qi, Q};
use reduction_core::schottky::{genus_g_partition, SchottkyData};
use reduction_core::voa::{
    adjoint_mode, bilinear_form, fock_basis, vertex_mode, virasoro_mode, FockState, FockVector,
};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sigma(k: u32, n: i64) -> num_bigint::BigInt {
    (1..=n).filter(|d| n % d == 0).map(|d| num_bigint::BigInt::from(d).pow(k)).sum()
}

fn factorial(n: i64) -> Q {
    (1..=n).fold(Q::one(), |acc, k| acc * qi(k))
}

fn criterion_1() -> Outcome {
    let bernoulli = [(2, q(1, 6)), (4, q(-1, 30)), (6, q(1, 42)), (8, q(-1, 30))];
    for (k, bk) in bernoulli {
        let s = eisenstein(k, 20).map_err(err)?;
        ensure(s.coeff(0) == -bk / factorial(k), format!("E_{k} constant term"))?;
        for n in 1..20 {
            let expect = qi(2) * Q::from_integer(sigma(k as u32 - 1, n)) / factorial(k - 1);
            ensure(s.coeff(n) == expect, format!("E_{k} coefficient of q^{n}"))?;
        }
    }
    Ok("E_2, E_4, E_6, E_8 agree exactly through q^19".into())
}

fn criterion_2() -> Outcome {
    let mp = ModularPoint::new(c(0.0, 2.0), 40).map_err(err)?;
    let series = p1_laurent(&mp, 40).map_err(err)?;
    let laurent = |z: C64| series.terms().fold(C64::zero(), |acc, (e, k)| acc + k * z.powi(e as i32));
    let mut worst: f64 = 0.0;
    for j in 0..10 {
        let t = 2.0 * std::f64::consts::PI * j as f64 / 10.0 + 0.3;
        let z = C64::from_polar(0.4 + 0.08 * j as f64, t);
        let shifted = p1_global(z + mp.period(), &mp).map_err(err)?;
        worst = worst.max((shifted - (laurent(z) - 1.0)).norm());
        worst = worst.max((shifted - (p1_global(z, &mp).map_err(err)? - 1.0)).norm());
    }
    ensure(worst < 1e-9, format!("residual {worst:.3e}"))?;
    Ok(format!("max residual {worst:.3e} over 10 points"))
}

fn criterion_3() -> Outcome {
    let cutoff = 8;
    let states = [
        FockVector::vacuum(cutoff),
        FockVector::a(cutoff),
        FockVector::basis(FockState::new(vec![1, 1]).map_err(err)?, cutoff),
    ];
    let points = [q(2, 1), q(-1, 3), q(5, 7)];
    let vac = FockVector::vacuum(cutoff);
    let mut count = 0;
    let mut tuples: Vec<Vec<usize>> = vec![vec![]];
    for n in 0..=3 {
        for t in &tuples {
            let ins: Vec<Insertion<Q>> = t.iter().zip(&points).map(|(&s, p)| Insertion::new(states[s].clone(), p.clone())).collect();
            let red = reduce_genus0(&vac, &ins, &vac).map_err(err)?;
            let direct = genus0_npoint(&vac, &ins, &vac).map_err(err)?;
            ensure(red == direct, format!("mismatch at {t:?}: {red} vs {direct}"))?;
            count += 1;
        }
        if n < 3 {
            tuples = tuples.iter().flat_map(|t| (0..3).map(move |s| [t.clone(), vec![s]].concat())).collect();
        }
    }
    Ok(format!("{count} insertion tuples agree exactly"))
}

fn criterion_4() -> Outcome {
    let vac = FockVector::vacuum(i64::MAX);
    let a = FockVector::a(i64::MAX);
    let (z1, z2) = (c(1.5, 0.4), c(-1.5, -0.3));
    let mut cases: Vec<Vec<Insertion<C64>>> = vec![];
    for u in [&vac, &a] {
        cases.push(vec![Insertion::new(u.clone(), z1)]);
        for v in [&vac, &a] {
            cases.push(vec![Insertion::new(u.clone(), z1), Insertion::new(v.clone(), z2)]);
        }
    }
    let mut worst: f64 = 0.0;
    for ins in &cases {
        let t = genus1_npoint_trace(ins, 8, 12).map_err(err)?;
        let r = reduce_genus1(ins, 8).map_err(err)?;
        worst = worst.max(relative_deviation(&r, &t).map_err(err)?);
    }
    ensure(worst < 1e-9, format!("deviation {worst:.3e}"))?;
    Ok(format!("{} functions, max deviation {worst:.3e}", cases.len()))
}

fn criterion_5() -> Outcome {
    let probe = Probe::new(vec![FockVector::vacuum(i64::MAX)], vec![c(0.0, 0.0)], 6).map_err(err)?;
    let z = probe.correlation(0, 0).map_err(err)?;
    let sewn = probe.apply_dg(&z).map_err(err)?;
    let trace = genus1_npoint_trace(&[], 6, 6).map_err(err)?;
    let expect = [1.0, 1.0, 2.0, 3.0, 5.0, 7.0];
    for (k, e) in expect.iter().enumerate() {
        ensure((sewn.values[k] - e).norm() < 1e-12, format!("rho^{k}: {}", sewn.values[k]))?;
        ensure((trace.coeff(k as i64) - e).norm() < 1e-12, format!("trace q^{k}"))?;
    }
    Ok("1, 1, 2, 3, 5, 7 reproduced".into())
}

fn criterion_6() -> Outcome {
    let pts = [(c(1.0, 0.2), c(-1.0, 0.1)), (c(0.3, 2.0), c(-0.2, -1.8))];
    let data = |genus: usize| SchottkyData {
        genus,
        rho: vec![c(0.1, 0.0); genus],
        points: pts[..genus].to_vec(),
        p: 1,
        f_coeffs: vec![],
        mode_cutoff: 2,
        neumann_order: 4,
    };
    let g2 = genus_g_partition(&data(2), &[5, 5]).map_err(err)?.at_zero(1);
    let g1 = genus_g_partition(&data(1), &[5]).map_err(err)?;
    let d = g2.max_abs_diff(&g1);
    ensure(d < 1e-12, format!("difference {d:.3e}"))?;
    let counts = [1.0, 1.0, 2.0, 3.0, 5.0];
    for (k, e) in counts.iter().enumerate() {
        ensure((g2.coeff(&[k as i64]) - e).norm() < 1e-12, format!("rho1^{k}"))?;
    }
    Ok(format!("coefficients through rho^4 agree, max difference {d:.3e}"))
}

fn criterion_7() -> Outcome {
    let vac = FockVector::vacuum(i64::MAX);
    let a = FockVector::a(i64::MAX);
    let probe = Probe::new(vec![vac.clone(), a.clone()], vec![c(-1.5, -0.3), c(1.5, 0.4), c(0.2, 1.1)], 3).map_err(err)?;
    let ins = |v: &FockVector, re: f64, im: f64| Insertion::new(v.clone(), c(re, im));
    let suite = |x: &FockVector, base: Vec<Insertion<C64>>, odd: Vec<Insertion<C64>>, desc: TotalDescriptor| {
        vec![
            ChainCase::N { genus: 0, base: base.clone(), x: ins(x, 2.0, 0.0), x_prime: ins(x, -1.0, 1.0), q_order: 4 },
            ChainCase::N { genus: 1, base: vec![], x: ins(x, 0.3, 0.0), x_prime: ins(x, -0.2, 0.1), q_order: 5 },
            ChainCase::G { base: base.clone(), first: (c(2.0, 0.5), c(-2.0, 0.5)), second: (c(0.25, 3.0), c(-0.5, -3.0)), orders: [3, 3] },
            ChainCase::GN { base: odd, x: ins(x, -0.3, 0.1), q_order: 5 },
            ChainCase::Total { probe: Box::new(probe.clone()), m: 0, a: desc.clone(), b: desc.clone() },
            ChainCase::Total { probe: Box::new(probe.clone()), m: 1, a: desc.clone(), b: desc },
        ]
    };
    let vacuum = check_chain_conditions(&suite(&vac, vec![ins(&vac, 0.5, 0.25)], vec![ins(&vac, 0.1, 0.2)], TotalDescriptor::uniform(0, 2, 1)), 1e-9);
    for r in &vacuum.residuals {
        ensure(r.error.is_none() && r.exact_zero, format!("vacuum case not exactly zero: {}", r.label))?;
    }
    let mut nontrivial = suite(&a, vec![ins(&a, 0.5, 0.25), ins(&a, -0.75, 0.5)], vec![ins(&a, 0.1, 0.2)], TotalDescriptor::uniform(1, 2, 1));
    nontrivial.push(ChainCase::Total {
        probe: Box::new(probe),
        m: 1,
        a: TotalDescriptor::uniform(1, 2, 1),
        b: TotalDescriptor::uniform(0, 2, 1),
    });
    let report = check_chain_conditions(&nontrivial, 1e-9);
    for r in &report.residuals {
        ensure(r.error.is_none(), format!("{}: {:?}", r.label, r.error))?;
    }
    let lines: Vec<String> = report
        .residuals
        .iter()
        .map(|r| format!("{:?} lit={:.2e} anti={:.2e}", r.condition, r.literal.unwrap_or(f64::NAN), r.antisymmetrized.unwrap_or(f64::NAN)))
        .collect();
    Ok(format!("{} vacuum residuals exactly 0; nontrivial: {}", vacuum.residuals.len(), lines.join("; ")))
}

fn same(x: &FockVector, y: &FockVector) -> bool {
    let k = x.cutoff().min(y.cutoff());
    x.with_cutoff(k) == y.with_cutoff(k)
}

fn criterion_8() -> Outcome {
    let cutoff = 10;
    let mut checked = 0usize;
    for s in fock_basis(2) {
        let u = FockVector::basis(s, cutoff);
        for m in -4i64..=4 {
            for n in -4i64..=4 {
                let lhs = virasoro_mode(m, &virasoro_mode(n, &u)).sub(&virasoro_mode(n, &virasoro_mode(m, &u)));
                let mut rhs = virasoro_mode(m + n, &u).scale(&qi(m - n));
                if m + n == 0 {
                    rhs = rhs.add(&u.scale(&q(m * m * m - m, 12)));
                }
                ensure(same(&lhs, &rhs), format!("Virasoro m={m} n={n}"))?;
                checked += 1;
            }
        }
    }
    let gens = [("a", FockVector::a(cutoff), 1i64), ("omega", FockVector::omega(cutoff), 2)];
    for (un, u, wu) in &gens {
        for (vn, v, wv) in &gens {
            for k in -2i64..=2 {
                for n in -2i64..=2 {
                    for w in fock_basis(3) {
                        let wv_ = FockVector::basis(w.clone(), cutoff);
                        let lhs = vertex_mode(u, k, &vertex_mode(v, n, &wv_)).sub(&vertex_mode(v, n, &vertex_mode(u, k, &wv_)));
                        let mut rhs = FockVector::zero(cutoff);
                        for j in 0..=(wu + wv) {
                            let ujv = vertex_mode(u, j, v);
                            if !ujv.is_zero() {
                                rhs = rhs.add(&vertex_mode(&ujv, n + k - j, &wv_).scale(&reduction_core::scalar::binom_i(k, j)));
                            }
                        }
                        ensure(same(&lhs, &rhs), format!("commutator u={un} v={vn} k={k} n={n} w={w:?}"))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    let basis = fock_basis(4);
    for alpha in [qi(1), q(2, 3)] {
        for (un, u, _) in &gens {
            for n in -3i64..=3 {
                let adj = adjoint_mode(u, n, &alpha).map_err(err)?;
                for x in &basis {
                    let xv = FockVector::basis(x.clone(), cutoff);
                    let ux = vertex_mode(u, n, &xv);
                    for y in &basis {
                        let yv = FockVector::basis(y.clone(), cutoff);
                        let lhs = bilinear_form(&ux, &yv, &alpha);
                        let rhs = bilinear_form(&xv, &adj.apply(&yv).map_err(err)?, &alpha);
                        ensure(lhs == rhs, format!("adjoint u={un} alpha={alpha} n={n} x={x:?} y={y:?}"))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} exact identities"))
}

fn criterion_9() -> Outcome {
    let vac = FockVector::vacuum(i64::MAX);
    let a = FockVector::a(i64::MAX);
    let mut worst: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    let mut cases = 0;
    for (z1, z2) in [(c(1.5, 0.4), c(-1.5, -0.3)), (c(1.2, -0.1), c(-1.8, 0.5))] {
        for (u, v) in [(&a, &a), (&a, &vac), (&vac, &a), (&vac, &vac)] {
            let ins = vec![Insertion::new(u.clone(), z1), Insertion::new(v.clone(), z2)];
            let f = reduce_to_zero_point(&ZeroPointInput::Genus1 { ins: ins.clone(), q_order: 8 }).map_err(err)?;
            worst = worst.max(f.residual);
            if let (Factor::Series(p), Factor::Series(z)) = (&f.p, &f.zero_point) {
                let trace = genus1_npoint_trace(&ins, 8, 12).map_err(err)?;
                oracle = oracle.max(relative_deviation(&p.try_mul(z).map_err(err)?, &trace).map_err(err)?);
            }
            cases += 1;
        }
    }
    ensure(worst < 1e-10, format!("round-trip residual {worst:.3e}"))?;
    Ok(format!("{cases} functions, round trip {worst:.3e}, against trace {oracle:.3e}"))
}

fn criterion_10() -> Outcome {
    let mut compared = 0;
    for pool in [vec![FockVector::a(i64::MAX)], vec![FockVector::vacuum(i64::MAX)]] {
        let probe = Probe::new(pool.clone(), vec![c(0.7, 0.0), c(-0.4, 0.0), c(0.15, 0.0)], 4).map_err(err)?;
        let pts_q: Vec<Q> = probe.sphere_points().iter().map(|z| Q::from_float(z.re).expect("finite")).collect();
        let g0 = Genus0Space::new(pool, 4).map_err(err)?;
        let mut desc = TotalDescriptor::uniform(0, 3, 0);
        desc.sewing = false;
        for m in 0..=2 {
            let d = total_differential(&probe, m, &desc).map_err(err)?;
            let r = numeric_rank(&d, 1e-9);
            let exact = g0.matrix::<Q>(m, 0, &pts_q, (true, true)).map_err(err)?;
            let er = exact_rank(&exact);
            ensure(!r.indeterminate, format!("m={m}: rank gap {:.2e}", r.gap))?;
            ensure(r.rank == er, format!("m={m}: numeric rank {} vs exact {er}", r.rank))?;
            let kernel = d.ncols() - r.rank;
            ensure(r.rank + kernel == d.ncols() && er <= d.ncols(), "rank-nullity")?;
            compared += 1;
        }
    }
    Ok(format!("{compared} differentials match the exact ranks"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("Eisenstein divisor-sum oracle", criterion_1, Duration::from_secs(1)),
        ("P_1 quasi-periodicity", criterion_2, Duration::from_secs(1)),
        ("genus-0 reduction vs direct", criterion_3, Duration::from_secs(10)),
        ("genus-1 reduction vs trace", criterion_4, Duration::from_secs(60)),
        ("sewing gives partition counts", criterion_5, Duration::from_secs(10)),
        ("genus-2 degeneration", criterion_6, Duration::from_secs(60)),
        ("chain-condition suite", criterion_7, Duration::from_secs(30)),
        ("algebraic identities", criterion_8, Duration::from_secs(30)),
        ("zero-point round trip", criterion_9, Duration::from_secs(60)),
        ("cohomology ranks vs exact", criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {limit:?}")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {name} ({:.3} s): {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
