use std::fs;
use std::path::{Path, PathBuf};

use narrowlab_core::aplab::{ap_count_report, l_k, lambda_d, narrowness_report, prime_indicator_weight};
use narrowlab_core::cache::{cache_dir, load_majorant, load_sieve, save_majorant, save_sieve, CACHE_DIR_VAR};
use narrowlab_core::conditions::{lfc_average_exact, lfc_average_mc, width_threshold_fit, DeviationOptions, RandomModel};
use narrowlab_core::cutoff::{make_cutoff_with, sieve_factor, SieveFactorConfig};
use narrowlab_core::linforms::{first_family, lindex_bruteforce, lindex_with, second_family, third_family, LindexOptions};
use narrowlab_core::majorant::{build_majorant, check_minorization, majorant_pair_correlation, proof_r_exponent};
use narrowlab_core::numtheory::primorial_context;
use narrowlab_core::singular::{
    delta, error_factor, gallagher_average, singular_series, AverageMode, GallagherConfig, GallagherWeight,
};
use narrowlab_core::{
    BoxRegion, CutoffKind, ExponentPattern, FactorSieve, LinearSystem, MajorantTable, WTrickContext, WeightModel,
};
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::report::Report;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn system(a: &SystemArgs) -> CliResult<LinearSystem> {
    if let Some(path) = &a.file {
        let text = fs::read_to_string(path)?;
        return Ok(LinearSystem::parse(&text)?);
    }
    let family = a.family.ok_or_else(|| usage("give --family or --file"))?;
    let k = a.k.ok_or_else(|| usage("--k is required with --family"))?;
    Ok(match family {
        Family::First => first_family(k)?,
        Family::Second => second_family(k)?,
        Family::Third => third_family(k, a.j.ok_or_else(|| usage("--j is required for the third family"))?)?,
    })
}

fn cached_sieve_path(limit: u64) -> Option<PathBuf> {
    cache_dir().map(|d| d.join(format!("sieve-{limit}.bin")))
}

/// A factor sieve reaching at least `limit`: `--sieve`, then the cache
/// directory, then a fresh sieve (saved to the cache directory when set).
fn sieve_covering(limit: u64, common: &Common) -> CliResult<FactorSieve> {
    let limit = limit.max(2);
    if let Some(path) = &common.sieve {
        let s = load_sieve(path)?;
        if s.limit() < limit {
            return Err(usage(format!(
                "--sieve {} reaches {}, but {limit} is needed",
                path.display(),
                s.limit()
            )));
        }
        return Ok(s);
    }
    let cached = cached_sieve_path(limit);
    if let Some(path) = cached.as_deref().filter(|p| p.exists()) {
        return Ok(load_sieve(path)?);
    }
    let s = FactorSieve::new(limit)?;
    if let Some(path) = cached {
        fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
        save_sieve(&s, &path)?;
    }
    Ok(s)
}

fn context(p: &TableParams) -> CliResult<WTrickContext> {
    let n = p.modulus.ok_or_else(|| usage("--N is required"))?;
    Ok(primorial_context(p.w, p.b, n)?)
}

fn r_of(p: &TableParams, ctx: &WTrickContext) -> (f64, f64) {
    let exponent = p.r_exp.unwrap_or_else(|| proof_r_exponent(p.k_forms));
    let range = ctx.big_w as f64 * ctx.modulus as f64 + ctx.b as f64;
    (range.powf(exponent), exponent)
}

fn build_table(p: &TableParams, common: &Common) -> CliResult<MajorantTable> {
    let ctx = context(p)?;
    let (r, _) = r_of(p, &ctx);
    let chi = make_cutoff_with(p.chi, p.normalization)?;
    let sieve = sieve_covering(r.ceil() as u64, common)?;
    Ok(build_majorant(&ctx, r, &chi, &sieve)?)
}

fn table_or_build(path: Option<&Path>, p: &TableParams, common: &Common) -> CliResult<MajorantTable> {
    match path {
        Some(path) => Ok(load_majorant(path)?),
        None => build_table(p, common),
    }
}

fn describe_table(report: &mut Report, t: &MajorantTable) -> CliResult<()> {
    let ctx = t.context();
    report.set("N", ctx.modulus)?;
    report.set("W", ctx.big_w)?;
    report.set("b", ctx.b)?;
    report.set("R", t.r())?;
    report.set("mean", t.mean())?;
    report.set("floor", t.floor())
}

pub fn sieve_build(a: &SieveBuildArgs) -> CliResult<Report> {
    let path = a
        .out
        .clone()
        .or_else(|| cached_sieve_path(a.limit))
        .ok_or_else(|| usage(format!("give --out or set {CACHE_DIR_VAR}")))?;
    let sieve = FactorSieve::new(a.limit)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_sieve(&sieve, &path)?;
    let verified = load_sieve(&path)? == sieve;
    let mut r = Report::new();
    r.set("limit", a.limit)?;
    r.set("primes", sieve.prime_count())?;
    r.set("path", path.display().to_string())?;
    r.set("bytes", fs::metadata(&path)?.len())?;
    r.set("verified", verified)?;
    if !verified {
        return Err(CliError::Report(format!("{} did not reload identically", path.display())));
    }
    Ok(r)
}

pub fn lindex(a: &LindexArgs) -> CliResult<Report> {
    let sys = system(&a.system)?;
    let opts = LindexOptions {
        max_subspaces: a.max_subspaces,
        ..Default::default()
    };
    let res = lindex_with(&sys, &opts)?;
    let mut r = Report::new();
    r.set("L", res.value.to_string())?;
    r.set("witness_atoms", res.witness.as_ref().map(|w| w.atoms().to_vec()))?;
    r.set("codim", res.codim)?;
    r.set("subspaces_explored", res.subspaces_explored)?;
    r.set("forms", sys.t())?;
    r.set("variables", sys.d())?;
    if let Some(sub) = &res.witness_subspace {
        r.set("witness_equations", sub.render(sys.names()))?;
    }
    if a.bruteforce {
        let bf = lindex_bruteforce(&sys)?;
        r.set("L_bruteforce", bf.value.to_string())?;
        r.set("agree", bf.value == res.value)?;
    }
    Ok(r)
}

pub fn forms_dump(a: &FormsDumpArgs) -> CliResult<Report> {
    let sys = system(&a.system)?;
    let mut r = Report::new();
    r.text = Some(sys.to_text());
    r.set("variables", sys.d())?;
    r.set("forms", sys.t())?;
    for (i, f) in sys.forms().iter().enumerate() {
        r.push_row(json!({
            "index": i,
            "form": f.render(sys.names()),
            "constant": f.constant,
            "coefficients": f.coeffs.iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
        }))?;
    }
    Ok(r)
}

pub fn singular(a: &SingularArgs) -> CliResult<Report> {
    let v = singular_series(&a.h, a.pmax, a.big_w)?;
    let mut r = Report::new();
    r.set("h", a.h.entries())?;
    r.extend(v)?;
    r.set("delta", delta(&a.h).to_string())?;
    if let Some(c) = a.error_c {
        r.set("error_factor", error_factor(&a.h, c).value)?;
    }
    Ok(r)
}

pub fn gallagher(a: &GallagherArgs) -> CliResult<Report> {
    let region = BoxRegion::cube(a.dim, a.lo, a.hi)?;
    let weight = match a.weight {
        WeightChoice::Singular => GallagherWeight::SingularW,
        WeightChoice::ErrorFactor => GallagherWeight::ErrorFactor { c: a.error_c },
    };
    let mode = match a.samples {
        Some(samples) => AverageMode::Sampled {
            samples,
            seed: a.common.seed,
        },
        None => AverageMode::Exact,
    };
    let mut r = Report::new();
    r.set("weight", weight)?;
    r.set("box", format!("[{}, {}]^{}", a.lo, a.hi, a.dim))?;
    let mut prev: Option<(f64, f64)> = None;
    let mut trend = true;
    for &w in &a.w.0 {
        let cfg = GallagherConfig {
            w,
            pmax: a.pmax,
            mode,
            ..Default::default()
        };
        let g = gallagher_average(weight, &region, &cfg)?;
        if let Some((dev, se)) = prev {
            trend &= g.deviation <= dev + 2.0 * (se + g.std_error);
        }
        prev = Some((g.deviation, g.std_error));
        r.push_row(json!({
            "w": w,
            "W": g.big_w,
            "mean": g.mean,
            "deviation": g.deviation,
            "std_error": g.std_error,
            "points": g.points,
            "exact": g.exact,
        }))?;
    }
    r.set("deviation_non_increasing", trend)?;
    Ok(r)
}

pub fn cutoff_check(a: &CutoffCheckArgs) -> CliResult<Report> {
    let kinds: &[CutoffKind] = match a.chi {
        ChiChoice::Cosine => &[CutoffKind::Cosine],
        ChiChoice::Bump => &[CutoffKind::Bump],
        ChiChoice::Both => &[CutoffKind::Cosine, CutoffKind::Bump],
    };
    let mut r = Report::new();
    r.set("normalization", a.normalization)?;
    for &kind in kinds {
        let spec = make_cutoff_with(kind, a.normalization)?;
        let half = spec.half_line_residual()?;
        let full = spec.full_line_residual()?;
        for &m in &a.m.0 {
            let m = m as usize;
            let sf = sieve_factor(&spec, m, &SieveFactorConfig::default_for(kind, m))?;
            r.push_row(json!({
                "chi": kind,
                "norm_constant": spec.norm_constant,
                "chi_0": spec.chi(0.0),
                "half_line_residual": half,
                "full_line_residual": full,
                "m": m,
                "sieve_factor": sf.value,
                "tail_estimate": sf.tail_estimate,
                "imag_residual": sf.imag_residual,
            }))?;
        }
    }
    Ok(r)
}

pub fn majorant(a: &MajorantArgs) -> CliResult<Report> {
    let ctx = context(&a.table)?;
    let (r_val, exponent) = r_of(&a.table, &ctx);
    let table = build_table(&a.table, &a.common)?;
    let mut r = Report::new();
    describe_table(&mut r, &table)?;
    r.set("R_exp", exponent)?;
    r.set("chi", a.table.chi)?;
    r.set("normalization", a.table.normalization)?;
    if let Some(path) = &a.out {
        save_majorant(&table, path)?;
        r.set("table", path.display().to_string())?;
    }
    if a.check_floor {
        let sieve = sieve_covering(r_val.ceil() as u64, &a.common)?;
        r.set("minorization", check_minorization(&table, &sieve))?;
    }
    Ok(r)
}

pub fn correlate(a: &CorrelateArgs) -> CliResult<Report> {
    let table = table_or_build(a.table.as_deref(), &a.params, &a.common)?;
    let mut r = Report::new();
    describe_table(&mut r, &table)?;
    for &h in &a.h.0 {
        r.push_row(majorant_pair_correlation(&table, h, a.pmax)?)?;
    }
    Ok(r)
}

pub fn lfc(a: &LfcArgs) -> CliResult<Report> {
    let sys = system(&a.system)?;
    let width = i64::try_from(a.width).map_err(|_| usage("--S is too large"))?;
    let region = BoxRegion::centered(sys.d(), width)?;
    let e = a.e.clone().unwrap_or_else(|| ExponentPattern::ones(sys.t()));
    let table;
    let model = match a.model {
        ModelChoice::Majorant => {
            table = table_or_build(a.table.as_deref(), &a.params, &a.common)?;
            WeightModel::Table(&table)
        }
        ModelChoice::Random => {
            let n = a.params.modulus.ok_or_else(|| usage("--N is required for the random model"))?;
            WeightModel::Random(RandomModel::new(a.alpha, a.common.seed, n)?)
        }
        ModelChoice::One => WeightModel::ConstantOne {
            modulus: a.params.modulus.ok_or_else(|| usage("--N is required"))?,
        },
    };
    let mut r = Report::new();
    r.set("N", model.modulus())?;
    r.set("S", a.width)?;
    r.set("e", e.bits().iter().map(|&b| u8::from(b)).collect::<Vec<_>>())?;
    r.extend(lfc_average_mc(&model, &sys, &e, &region, a.samples, a.common.seed)?)?;
    if a.exact {
        r.set("exact", lfc_average_exact(&model, &sys, &e, &region, a.exact_cap as u128)?)?;
    }
    Ok(r)
}

pub fn threshold(a: &ThresholdArgs) -> CliResult<Report> {
    let sys = system(&a.system)?;
    let opts = DeviationOptions {
        max_codim: a.max_codim,
        max_flats: a.max_flats,
    };
    let fit = width_threshold_fit(&sys, &a.alphas.0, &opts)?;
    let mut r = Report::new();
    r.set("slope", fit.slope)?;
    r.set("intercept", fit.intercept)?;
    for p in &fit.points {
        r.push_row(json!({
            "alpha": p.alpha,
            "S_star": p.s_star,
            "dominant_codim": p.dominant_codim,
            "dominant_ratio": p.dominant_ratio,
            "deviation": p.deviation,
        }))?;
    }
    Ok(r)
}

pub fn lambda_d_cmd(a: &LambdaDArgs) -> CliResult<Report> {
    if a.k < 2 {
        return Err(usage(format!("--k {} must be at least 2", a.k)));
    }
    let n = a.modulus;
    let d_max = match a.d_max {
        Some(d) => d,
        None => (n as f64).ln().powi(l_k(a.k) as i32).ceil() as u64,
    };
    if d_max == 0 || d_max >= n {
        return Err(usage(format!("--D {d_max} must lie in [1, N')")));
    }
    let f = match a.weight {
        LambdaWeight::Primes => prime_indicator_weight(n, &sieve_covering(n, &a.common)?)?,
        LambdaWeight::Ones => vec![1.0; n as usize],
    };
    let fs = vec![f.as_slice(); a.k];
    let mut r = Report::new();
    r.set("N", n)?;
    r.set("k", a.k)?;
    r.set("D", d_max)?;
    r.set("weight", format!("{:?}", a.weight).to_lowercase())?;
    r.set("value", lambda_d(&fs, d_max)?)?;
    Ok(r)
}

pub fn apsearch(a: &ApsearchArgs) -> CliResult<Report> {
    let mut r = Report::new();
    match a.mode {
        ApMode::Narrowness => {
            let ladder = match (&a.ladder, a.n) {
                (Some(l), _) => l.0.clone(),
                (None, Some(n)) => vec![n],
                (None, None) => return Err(usage("give --ladder or --N")),
            };
            let top = ladder.iter().copied().max().unwrap_or(0);
            let sieve = sieve_covering(top, &a.common)?;
            r.set("subset", &a.subset)?;
            for row in narrowness_report(&ladder, a.k, &a.subset, a.d_cap, &sieve)? {
                r.push_row(row)?;
            }
        }
        ApMode::Count => {
            let n = a.n.ok_or_else(|| usage("--N is required in count mode"))?;
            let d = a.d.ok_or_else(|| usage("--d is required in count mode"))?;
            let top = (a.k as u64)
                .checked_sub(1)
                .and_then(|j| j.checked_mul(d))
                .and_then(|x| x.checked_add(n))
                .ok_or_else(|| usage("--N + (k−1)·d overflows"))?;
            let sieve = sieve_covering(top, &a.common)?;
            r.extend(ap_count_report(n, a.k, d, a.pmax, &sieve)?)?;
        }
    }
    Ok(r)
}
