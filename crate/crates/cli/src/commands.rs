use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use spaceswitch::bgv::{read_ciphertext, write_ciphertext, write_secret_key, ToyBgv, MAX_LEVEL};
use spaceswitch::compare::{compare as compare_values, CompareOp, CompareOptions};
use spaceswitch::eval::{Backend, ClearEval, Evaluator};
use spaceswitch::interp::{cached, check_f_eq, check_f_lift, check_f_lt, check_g, Counterexample, PolyKind};
use spaceswitch::params::{BackendKind, ParamSet, DEFAULT_RING_DEGREE};
use spaceswitch::query::bench::{render_text, to_csv, CLEAR_DEPTH_BUDGET};
use spaceswitch::query::select::{DEFAULT_QUERY_DEPTH, MIN_BITWIDTH};
use spaceswitch::query::{
    bench as run_bench, decrypt_table, encrypt_table, lineitem_query, plan_params, rank_candidates, reference_answer,
    run_query, select_params_with, synthetic_lineitems, verify as run_verify, BenchConfig, ColumnHandles, CostReport,
    Headroom, QueryPlan, ReportParams, SelectOptions, Table, VerifyMode,
};
use spaceswitch::ring::{base_p_digits, Residue};
use spaceswitch::switch::{estimate_depth, reduce_to_digits, ExtractionStrategy};
use spaceswitch::Error;

use crate::{Failure, Format, Global};

/// Parameters when neither `--p/--r` nor a bit-width is given.
const DEFAULT_PAIR: (u64, u32) = (5, 3);
/// Poly certificates are checked exhaustively up to this modulus.
const DUMP_CHECK_LIMIT: u64 = 1 << 22;

type Outcome = Result<(), Failure>;

/// Runs `$body` with `$ev` bound to an evaluator for `$params`.
macro_rules! with_evaluator {
    ($params:expr, |$ev:ident| $body:expr) => {{
        let params: &ParamSet = $params;
        match params.backend {
            BackendKind::Clear => {
                let $ev = Evaluator::new(ClearEval::new(params.seed), params.p, params.r, params.levels())?;
                $body
            }
            BackendKind::ToyBgv => {
                let $ev = Evaluator::new(ToyBgv::new(params.clone())?, params.p, params.r, params.levels())?;
                $body
            }
        }
    }};
}

fn explicit(g: &Global) -> Result<Option<(u64, u32)>, Failure> {
    match (g.p, g.r) {
        (Some(p), Some(r)) => Ok(Some((p, r))),
        (None, None) => Ok(None),
        _ => Err(Error::InvalidParameter("--p and --r go together".into()).into()),
    }
}

fn budget(g: &Global, given: Option<usize>) -> usize {
    given.unwrap_or(match g.backend {
        BackendKind::Clear => CLEAR_DEPTH_BUDGET,
        BackendKind::ToyBgv => MAX_LEVEL,
    })
}

fn param_set(g: &Global, p: u64, r: u32, levels: usize) -> Result<ParamSet, Failure> {
    Ok(ParamSet::new(p, r, DEFAULT_RING_DEGREE, levels, g.seed, g.backend)?)
}

fn select_opts(g: &Global, query_depth: usize) -> SelectOptions {
    SelectOptions {
        headroom: Headroom::Difference,
        query_depth,
        backend: g.backend,
        seed: g.seed,
        ..SelectOptions::default()
    }
}

fn bit_length(x: i64) -> u32 {
    64 - x.unsigned_abs().leading_zeros()
}

/// Explicit `(p, r)`, else the cheapest pair for `bits`, else for the
/// smallest width holding `values`.
fn resolve(g: &Global, bits: Option<u32>, values: &[i64], query_depth: usize) -> Result<ParamSet, Failure> {
    if let Some((p, r)) = explicit(g)? {
        return param_set(g, p, r, estimate_depth(p, r) + query_depth);
    }
    let bits = bits.unwrap_or_else(|| values.iter().map(|&v| bit_length(v)).max().unwrap_or(0).max(MIN_BITWIDTH));
    Ok(select_params_with(bits, budget(g, None), &select_opts(g, query_depth))?)
}

fn report_params<B: Backend>(ev: &Evaluator<B>, params: &ParamSet) -> ReportParams {
    let mut rp = ReportParams::of(ev);
    if params.backend == BackendKind::ToyBgv {
        rp.ring_degree = Some(params.n);
        rp.log_q = Some(params.log_q());
    }
    rp
}

/// Writes to stdout; a closed pipe is not an error.
fn print_out(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|()| out.flush());
}

fn emit(g: &Global, value: Value, text: impl FnOnce() -> String) {
    if g.json {
        print_out(&(serde_json::to_string_pretty(&value).expect("json value") + "\n"));
    } else {
        print_out(&text());
    }
}

pub fn params(
    g: &Global,
    bits: u32,
    depth_budget: Option<usize>,
    width_only: bool,
    query_depth: usize,
    top: usize,
) -> Outcome {
    if explicit(g)?.is_some() {
        return Err(Error::InvalidParameter("params selects p and r itself; drop --p/--r".into()).into());
    }
    let budget = budget(g, depth_budget);
    let opts = SelectOptions {
        headroom: if width_only { Headroom::Width } else { Headroom::Difference },
        ..select_opts(g, query_depth)
    };
    let selected = select_params_with(bits, budget, &opts)?;
    let candidates = rank_candidates(bits, budget, &opts)?;
    let best = &candidates[0];
    let shown = &candidates[..top.min(candidates.len())];
    let value = json!({
        "schema": spaceswitch::query::REPORT_SCHEMA,
        "bits": bits,
        "headroom": opts.headroom,
        "depth_budget": budget,
        "selected": best,
        "params": selected,
        "candidates": shown,
    });
    emit(g, value, || {
        let mut s = format!(
            "{bits}-bit inputs, depth budget {budget}\nselected p = {}, r = {} (p^r = {}), {} levels, {} non-scalar multiplications per less-than\n\n",
            best.p, best.r, best.modulus, best.levels, best.nonscalar
        );
        s.push_str(&format!("{:>5} {:>3} {:>12} {:>10} {:>8} {:>7}\n", "p", "r", "p^r", "nonscalar", "depth", "levels"));
        for c in shown {
            s.push_str(&format!(
                "{:>5} {:>3} {:>12} {:>10} {:>8} {:>7}\n",
                c.p, c.r, c.modulus, c.nonscalar, c.compare_depth, c.levels
            ));
        }
        s
    });
    Ok(())
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path)
        .map_err(|e| Failure::Lib(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn ct_name(column: &str, row: usize) -> String {
    format!("{column}.{row}.ct")
}

/// Writes every ciphertext and the key, then reads the ciphertexts back and
/// decrypts them. Returns the number of files written and whether every value
/// survived.
fn write_bgv(ev: &Evaluator<ToyBgv>, enc: &spaceswitch::query::EncryptedTable<<ToyBgv as Backend>::Value>, table: &Table, dir: &Path) -> Result<(usize, bool), Failure> {
    let bgv = ev.backend();
    let params = bgv.params();
    let mut files = 0;
    let mut sk = BufWriter::new(File::create(dir.join("secret.key"))?);
    write_secret_key(&mut sk, bgv.secret_key(), params)?;
    sk.flush()?;
    files += 1;
    for (spec, col) in enc.spec.columns.iter().zip(&enc.columns) {
        let ColumnHandles::PerRow(hs) = col else {
            return Err(Error::InvalidParameter("toy BGV columns are stored per row".into()).into());
        };
        for (i, h) in hs.iter().enumerate() {
            let mut w = BufWriter::new(File::create(dir.join(ct_name(&spec.name, i)))?);
            write_ciphertext(&mut w, h.value(), params)?;
            w.flush()?;
            files += 1;
        }
    }
    let mut intact = true;
    for (j, spec) in enc.spec.columns.iter().enumerate() {
        for (i, row) in table.rows.iter().enumerate() {
            let mut rd = BufReader::new(File::open(dir.join(ct_name(&spec.name, i)))?);
            let ct = read_ciphertext(&mut rd, params)?;
            intact &= bgv.context().decrypt_balanced(&ct, bgv.secret_key())? == row[j];
        }
    }
    Ok((files, intact))
}

pub fn ingest(g: &Global, csv: &Path, bits: u32, out: Option<&Path>, depth_budget: Option<usize>) -> Outcome {
    let table = Table::read_csv_uniform(open(csv)?, bits)?;
    let params = match explicit(g)? {
        Some((p, r)) => param_set(g, p, r, estimate_depth(p, r) + DEFAULT_QUERY_DEPTH)?,
        None => select_params_with(bits, budget(g, depth_budget), &select_opts(g, DEFAULT_QUERY_DEPTH))?,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("params.json"), serde_json::to_string_pretty(&params).map_err(Error::from)?)?;
    }
    let start = Instant::now();
    let (round_trip, handles, files) = match params.backend {
        BackendKind::Clear => {
            let ev = Evaluator::new(ClearEval::new(params.seed), params.p, params.r, params.levels())?;
            let enc = encrypt_table(&ev, &table)?;
            let back = decrypt_table(&ev, &enc)?;
            let mut files = 0;
            if let Some(dir) = out {
                back.write_csv(File::create(dir.join("table.csv"))?)?;
                files = 1;
            }
            (back.rows == table.rows, enc.columns.iter().map(|c| c.handle_count()).sum::<usize>(), files)
        }
        BackendKind::ToyBgv => {
            let ev = Evaluator::new(ToyBgv::new(params.clone())?, params.p, params.r, params.levels())?;
            let enc = encrypt_table(&ev, &table)?;
            let back = decrypt_table(&ev, &enc)?;
            let mut ok = back.rows == table.rows;
            let mut files = 0;
            if let Some(dir) = out {
                let (n, intact) = write_bgv(&ev, &enc, &table, dir)?;
                files = n;
                ok &= intact;
            }
            (ok, enc.columns.iter().map(|c| c.handle_count()).sum::<usize>(), files)
        }
    };
    let columns: Vec<&str> = table.spec.columns.iter().map(|c| c.name.as_str()).collect();
    let value = json!({
        "schema": spaceswitch::query::REPORT_SCHEMA,
        "backend": params.backend,
        "p": params.p,
        "r": params.r,
        "levels": params.levels(),
        "rows": table.rows.len(),
        "columns": columns,
        "handles": handles,
        "files_written": files,
        "round_trip": round_trip,
        "wall_ms": start.elapsed().as_secs_f64() * 1e3,
    });
    emit(g, value, || {
        format!(
            "{} rows x {} columns on {} (p = {}, r = {}, {} levels): {} handles, round trip {}\n{}",
            table.rows.len(),
            columns.len(),
            params.backend,
            params.p,
            params.r,
            params.levels(),
            handles,
            if round_trip { "ok" } else { "FAILED" },
            if files > 0 { format!("{files} files written\n") } else { String::new() }
        )
    });
    if !round_trip {
        return Err(Failure::Mismatch("decrypted table differs from the input".into()));
    }
    Ok(())
}

pub fn query(
    g: &Global,
    csv: Option<&Path>,
    synthetic: Option<usize>,
    predicates: &[String],
    sum: Option<&str>,
    bits: u32,
    depth_budget: Option<usize>,
) -> Outcome {
    let table = match (csv, synthetic) {
        (Some(path), _) => Table::read_csv_uniform(open(path)?, bits)?,
        (None, Some(rows)) => synthetic_lineitems(rows, bits, g.seed)?,
        (None, None) => return Err(Error::InvalidParameter("give --csv or --synthetic".into()).into()),
    };
    let plan = match sum {
        None if predicates.is_empty() && synthetic.is_some() => lineitem_query(bits),
        None => return Err(Error::InvalidParameter("--sum is required".into()).into()),
        Some(s) => QueryPlan::parse(&predicates.iter().map(String::as_str).collect::<Vec<_>>(), s)?,
    };
    plan.validate(&table.spec)?;
    let params = match explicit(g)? {
        Some((p, r)) => param_set(g, p, r, estimate_depth(p, r) + plan.query_depth())?,
        None => plan_params(&plan, &table.spec, g.backend, budget(g, depth_budget), g.seed)?,
    };
    let expected = reference_answer(&plan, &table)?;
    let (result, report) = with_evaluator!(&params, |ev| {
        let enc = encrypt_table(&ev, &table)?;
        let mut out = run_query(&ev, &plan, &enc)?;
        out.report.params = report_params(&ev, &params);
        (out.result, out.report)
    });
    let matches = result == expected;
    let value = json!({
        "schema": spaceswitch::query::REPORT_SCHEMA,
        "rows": table.rows.len(),
        "predicates": plan.predicates.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "sum_of": plan.sum_of,
        "result": result,
        "expected": expected,
        "matches": matches,
        "report": report,
    });
    emit(g, value, || {
        let preds: Vec<String> = plan.predicates.iter().map(ToString::to_string).collect();
        format!(
            "SUM({}) WHERE {} over {} rows = {result} (reference {expected})\n\n{}",
            plan.sum_of.join("*"),
            if preds.is_empty() { "true".to_string() } else { preds.join(" AND ") },
            table.rows.len(),
            report.render_text()
        )
    });
    if !matches {
        return Err(Failure::Mismatch(format!("query returned {result}, reference {expected}")));
    }
    Ok(())
}

pub fn compare(
    g: &Global,
    a: i64,
    b: i64,
    op: CompareOp,
    strategy: ExtractionStrategy,
    raise: bool,
    bits: Option<u32>,
) -> Outcome {
    let diff = a.checked_sub(b).ok_or(Error::OutOfRange { value: a, modulus: 0 })?;
    let params = resolve(g, bits, &[a, b, diff], 0)?;
    let m = params.modulus();
    let half = ((m - 1) / 2) as i64;
    if diff.abs() > half {
        return Err(Error::OutOfRange { value: diff, modulus: m }.into());
    }
    let opts = CompareOptions {
        raise,
        strategy,
        ..CompareOptions::default()
    };
    let start = Instant::now();
    let (result, report) = with_evaluator!(&params, |ev| {
        let ha = ev.encode(&[a])?;
        let hb = ev.encode(&[b])?;
        let before = ev.ledger().snapshot();
        let out = compare_values(&ev, op, &ha, &hb, &opts)?;
        let snap = ev.ledger().snapshot().since(&before);
        let result = ev.decode(&out.handle)?[0];
        let report = CostReport::new(report_params(&ev, &params), &snap, start.elapsed().as_secs_f64() * 1e3);
        (result, report)
    });
    let expected = op.holds(a, b) as i64;
    let value = json!({
        "schema": spaceswitch::query::REPORT_SCHEMA,
        "op": op,
        "a": a,
        "b": b,
        "strategy": strategy,
        "raised": raise,
        "result": result,
        "expected": expected,
        "report": report,
    });
    emit(g, value, || format!("{a} {op} {b} = {result}\n\n{}", report.render_text()));
    if result != expected {
        return Err(Failure::Mismatch(format!("{a} {op} {b} gave {result}, expected {expected}")));
    }
    Ok(())
}

pub fn extract(g: &Global, x: i64, strategy: &str) -> Outcome {
    let strategies = if strategy == "all" {
        ExtractionStrategy::ALL.to_vec()
    } else {
        vec![strategy.parse()?]
    };
    let params = resolve(g, None, &[x], 0)?;
    let m = params.modulus();
    if x.unsigned_abs() > (m - 1) / 2 {
        return Err(Error::OutOfRange { value: x, modulus: m }.into());
    }
    let want = base_p_digits(Residue::from_signed(x, m), params.p, params.r)?;
    let runs = with_evaluator!(&params, |ev| {
        let h = ev.encode(&[x])?;
        let mut runs = Vec::new();
        for s in &strategies {
            let start = Instant::now();
            let before = ev.ledger().snapshot();
            let bundle = reduce_to_digits(&ev, &h, *s)?;
            let snap = ev.ledger().snapshot().since(&before);
            let digits = bundle
                .digits
                .iter()
                .map(|d| Ok(ev.decode(d)?[0]))
                .collect::<Result<Vec<i64>, Error>>()?;
            let report = CostReport::new(report_params(&ev, &params), &snap, start.elapsed().as_secs_f64() * 1e3);
            runs.push((*s, digits, report));
        }
        runs
    });
    let value = json!({
        "schema": spaceswitch::query::REPORT_SCHEMA,
        "x": x,
        "p": params.p,
        "r": params.r,
        "expected": want,
        "runs": runs.iter().map(|(s, d, rep)| json!({
            "strategy": s,
            "digits": d,
            "poly_evals": rep.totals.poly_evals,
            "report": rep,
        })).collect::<Vec<_>>(),
    });
    emit(g, value, || {
        let mut s = format!("x = {x}, p = {}, r = {}, digits (lowest first) {want:?}\n", params.p, params.r);
        for (strategy, digits, rep) in &runs {
            let evals: Vec<String> = rep.totals.poly_evals.iter().map(|(k, v)| format!("{v}x{k}")).collect();
            s.push_str(&format!(
                "{strategy:>13}: {digits:?}, {} non-scalar, evaluations {}\n",
                rep.totals.nonscalar,
                evals.join(" ")
            ));
        }
        s
    });
    if let Some((s, d, _)) = runs.iter().find(|(_, d, _)| *d != want) {
        return Err(Failure::Mismatch(format!("{s} produced {d:?}, expected {want:?}")));
    }
    Ok(())
}

pub fn verify(g: &Global, modes: &[VerifyMode], seeds: u64) -> Outcome {
    if g.backend != BackendKind::Clear {
        return Err(Error::Unsupported("verify runs on the cleartext backend".into()).into());
    }
    let (p, r) = explicit(g)?.unwrap_or(DEFAULT_PAIR);
    let reports = modes
        .iter()
        .map(|&mode| match mode {
            VerifyMode::Roundtrip => spaceswitch::query::verify::roundtrip(p, r, seeds),
            mode => run_verify(mode, p, r, g.seed),
        })
        .collect::<Result<Vec<_>, Error>>()?;
    emit(g, json!(reports), || {
        let mut s = String::new();
        for rep in &reports {
            s.push_str(&format!(
                "{:<9} p = {p}, r = {r}: {} checked{}, {}\n",
                rep.mode.as_str(),
                rep.checked,
                if rep.exhaustive { " (exhaustive)" } else { "" },
                if rep.passed() { "PASS".to_string() } else { format!("FAIL ({} failures)", rep.failure_count) }
            ));
            for f in &rep.failures {
                s.push_str(&format!("  {f}\n"));
            }
        }
        s
    });
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.mode.as_str()).collect();
    if !failed.is_empty() {
        return Err(Failure::Mismatch(format!("{} failed", failed.join(", "))));
    }
    Ok(())
}

pub fn bench(
    g: &Global,
    bits: Vec<u32>,
    strategies: Vec<ExtractionStrategy>,
    pairs: usize,
    format: Format,
    out: Option<&Path>,
) -> Outcome {
    let cfg = BenchConfig {
        bitwidths: bits,
        strategies: if strategies.is_empty() {
            ExtractionStrategy::ALL.to_vec()
        } else {
            strategies
        },
        backend: g.backend,
        seed: g.seed,
        pairs,
        fixed: explicit(g)?,
    };
    let outcome = run_bench(&cfg)?;
    let format = if g.json { Format::Json } else { format };
    let rendered = match format {
        Format::Text => render_text(&outcome),
        Format::Csv => to_csv(&outcome.rows),
        Format::Json => serde_json::to_string_pretty(&outcome).map_err(Error::from)? + "\n",
    };
    match out {
        Some(path) => fs::write(path, rendered)?,
        None => print_out(&rendered),
    }
    Ok(())
}

pub fn dump_poly(g: &Global, kind: PolyKind, e: u32) -> Outcome {
    let p = g.p.ok_or_else(|| Error::InvalidParameter("--p is required".into()))?;
    let f = cached(kind, p)?;
    let checked_modulus = match kind {
        PolyKind::Lowest(e) | PolyKind::Lift(e) => p.checked_pow(e).unwrap_or(u64::MAX),
        PolyKind::Eq | PolyKind::Lt => p,
    };
    let check: Option<Option<Counterexample>> = (checked_modulus <= DUMP_CHECK_LIMIT).then(|| match kind {
        PolyKind::Lowest(e) => check_g(p, e, &f),
        PolyKind::Lift(e) => check_f_lift(p, e, &f),
        PolyKind::Eq => check_f_eq(p, &f),
        PolyKind::Lt => check_f_lt(p, &f),
    });
    let coeffs = f.signed_coeffs();
    let value = json!({
        "name": f.name,
        "p": p,
        "e": matches!(kind, PolyKind::Lowest(_) | PolyKind::Lift(_)).then_some(e),
        "modulus": f.modulus,
        "degree": f.degree(),
        "coeffs": coeffs,
        "verified": check.as_ref().map(Option::is_none),
        "counterexample": check.clone().flatten(),
    });
    emit(g, value, || {
        let status = match &check {
            None => "not checked (domain too large)".to_string(),
            Some(None) => "verified on its whole domain".to_string(),
            Some(Some(c)) => format!("FAILS at {}: got {}, expected {}", c.input, c.got, c.expected),
        };
        let terms: Vec<String> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, c)| format!("{c}*x^{i}"))
            .collect();
        format!(
            "{} mod {}, degree {}, {status}\n{}\n",
            f.name,
            f.modulus,
            f.degree(),
            if terms.is_empty() { "0".to_string() } else { terms.join(" + ") }
        )
    });
    if let Some(Some(c)) = check {
        return Err(Failure::Mismatch(format!("{} fails at {}", f.name, c.input)));
    }
    Ok(())
}
