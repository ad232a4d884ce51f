//! Run configuration and the command layer the `gradflow` binary fronts.
//!
//! Each command reads a closed-schema config file, computes everything
//! first, and only then touches the output directory, so a failed run
//! leaves no partial files. Report files are deterministic byte for byte
//! at a fixed seed; wall-clock timing appears on stdout only.

pub mod config;
pub mod dataset;

use crate::bayes::{compare_models, laplace_evidence, quadrature_evidence, LaplaceReport};
use crate::error::{Error, Result};
use crate::losses::{Batch, BatchLoss, LossFn, LossKind, PolyLoss, RegularizerConfig};
use crate::metric::{LayerMetric, LayerStiffness};
use crate::network::{finite_difference_gradient, Activation, Layer, NetworkSpec};
use crate::objective::{
    carrier_network, ConstantObjective, DoubleWell, LogisticObjective, Objective, PolyObjective,
};
use crate::optim::{run_trajectory, OptimizerHyper, OptimizerKind, TrajectoryRecord};
use crate::oracles::{saddle_census, CensusModel, OracleSpec};
use crate::scalar::TapeScalar;
use config::ConfigMap;
use dataset::{
    design_with_bias, gaussian_classes, linear_regression, logistic_batch, logistic_data,
    stream_rng, STREAM_DATA, STREAM_INIT,
};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Outcome of a command that completed without an error. Verification
/// commands distinguish "ran and agreed" from "ran and found a mismatch".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmdStatus {
    Ok,
    CheckFailed,
}

/// Process exit code for an error: 1 for configuration and usage problems,
/// 2 for divergence, 3 when an analysis refuses or fails to converge.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => 2,
        Error::Saddle(_)
        | Error::SingularHessian(_)
        | Error::Convergence { .. }
        | Error::Numerical(_) => 3,
        _ => 1,
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn ensure_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn resolve_seed(cfg: &mut ConfigMap, flag: Option<u64>) -> Result<u64> {
    let file_seed = cfg.u64_opt("seed")?;
    Ok(flag.or(file_seed).unwrap_or(0))
}

// ---------------------------------------------------------------------------
// shared settings parsing
// ---------------------------------------------------------------------------

struct ModelSettings {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    complex: bool,
    bias: bool,
    init_scale: f64,
}

fn parse_model(cfg: &mut ConfigMap) -> Result<ModelSettings> {
    let sizes = cfg.usize_list_req("model.sizes")?;
    if sizes.len() < 2 {
        return Err(Error::Config(
            "model.sizes needs at least an input and an output size".into(),
        ));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Config("model.sizes entries must be positive".into()));
    }
    let layer_count = sizes.len() - 1;
    let complex = match cfg.str_or("model.mode", "real").as_str() {
        "real" => false,
        "complex" => true,
        other => {
            return Err(Error::Config(format!(
                "model.mode must be real or complex, got '{other}'"
            )))
        }
    };
    let activations = match cfg.str_opt("model.activations") {
        Some(text) => text
            .split(',')
            .map(|s| Activation::parse(s.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => vec![Activation::Sigmoid; layer_count],
    };
    if activations.len() != layer_count {
        return Err(Error::Config(format!(
            "model.activations lists {} entries, the model has {layer_count} layers",
            activations.len()
        )));
    }
    Ok(ModelSettings {
        sizes,
        activations,
        complex,
        bias: cfg.bool_or("model.bias", true)?,
        init_scale: cfg.f64_or("model.init_scale", 0.01)?,
    })
}

fn build_network<T: TapeScalar, R: Rng>(m: &ModelSettings, rng: &mut R) -> Result<NetworkSpec<T>> {
    let mut layers = Vec::with_capacity(m.sizes.len() - 1);
    for i in 0..m.sizes.len() - 1 {
        layers.push(Layer::random(
            m.sizes[i + 1],
            m.sizes[i],
            m.activations[i],
            m.bias,
            m.init_scale,
            rng,
        )?);
    }
    NetworkSpec::new(layers)
}

enum DataSettings {
    GaussianClasses {
        n: usize,
        classes: usize,
        dim: usize,
        spread: f64,
        noise: f64,
    },
    LinearRegression {
        n: usize,
        dim: usize,
        noise: f64,
    },
    Logistic {
        n: usize,
        dim: usize,
        signal: f64,
        intercept: f64,
        noise_scale: f64,
    },
}

impl DataSettings {
    fn kind_name(&self) -> &'static str {
        match self {
            DataSettings::GaussianClasses { .. } => "gaussian_classes",
            DataSettings::LinearRegression { .. } => "linear_regression",
            DataSettings::Logistic { .. } => "logistic",
        }
    }
}

fn parse_data(cfg: &mut ConfigMap, default_dim: usize) -> Result<DataSettings> {
    match cfg.str_req("data.kind")?.as_str() {
        "gaussian_classes" => Ok(DataSettings::GaussianClasses {
            n: cfg.usize_req("data.n")?,
            classes: cfg.usize_or("data.classes", 2)?,
            dim: cfg.usize_or("data.dim", default_dim)?,
            spread: cfg.f64_or("data.spread", 1.0)?,
            noise: cfg.f64_or("data.noise", 0.25)?,
        }),
        "linear_regression" => Ok(DataSettings::LinearRegression {
            n: cfg.usize_req("data.n")?,
            dim: cfg.usize_or("data.dim", default_dim)?,
            noise: cfg.f64_or("data.noise", 0.1)?,
        }),
        "logistic" => Ok(DataSettings::Logistic {
            n: cfg.usize_req("data.n")?,
            dim: cfg.usize_or("data.dim", default_dim)?,
            signal: cfg.f64_or("data.signal", 1.2)?,
            intercept: cfg.f64_or("data.intercept", -0.4)?,
            noise_scale: cfg.f64_or("data.noise_scale", 3.0)?,
        }),
        other => Err(Error::Config(format!("unknown data.kind '{other}'"))),
    }
}

fn generate_batch(data: &DataSettings, rng: &mut ChaCha8Rng) -> Result<Batch> {
    match *data {
        DataSettings::GaussianClasses {
            n,
            classes,
            dim,
            spread,
            noise,
        } => gaussian_classes(n, classes, dim, spread, noise, rng),
        DataSettings::LinearRegression { n, dim, noise } => linear_regression(n, dim, noise, rng),
        DataSettings::Logistic {
            n,
            dim,
            signal,
            intercept,
            noise_scale,
        } => {
            let data = logistic_data(n, dim, signal, intercept, noise_scale, rng)?;
            logistic_batch(&data)
        }
    }
}

fn parse_opt(cfg: &mut ConfigMap) -> Result<(OptimizerKind, OptimizerHyper, usize)> {
    let kind = OptimizerKind::parse(&cfg.str_or("opt", "aristotle"))?;
    let d = OptimizerHyper::default();
    let hyper = OptimizerHyper {
        eta: cfg.f64_or("opt.eta", d.eta)?,
        dt: cfg.f64_or("opt.dt", d.dt)?,
        mass: cfg.f64_or("opt.mass", d.mass)?,
        friction: cfg.f64_or("opt.friction", d.friction)?,
        beta: cfg.f64_or("opt.beta", d.beta)?,
        epsilon: cfg.f64_or("opt.epsilon", d.epsilon)?,
    };
    let steps = cfg.usize_or("opt.steps", 1000)?;
    Ok((kind, hyper, steps))
}

fn parse_metric(cfg: &mut ConfigMap, layer_count: usize) -> Result<LayerMetric> {
    let mut blocks = Vec::with_capacity(layer_count);
    for i in 0..layer_count {
        let key = format!("metric.layer{i}");
        blocks.push(match cfg.str_opt(&key) {
            Some(text) => LayerStiffness::parse(&text)?,
            None => LayerStiffness::scaled(1.0)?,
        });
    }
    LayerMetric::new(blocks)
}

fn layer_bits<T: TapeScalar>(layer: &Layer<T>) -> Vec<(u64, u64)> {
    layer
        .weights
        .iter()
        .chain(layer.bias.iter())
        .map(|w| (w.re().to_bits(), w.im().to_bits()))
        .collect()
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn cmd_train(config: &Path, seed: Option<u64>, out: &Path, quiet: bool) -> Result<CmdStatus> {
    let mut cfg = ConfigMap::from_path(config)?;
    let seed = resolve_seed(&mut cfg, seed)?;
    let model = parse_model(&mut cfg)?;
    let data = parse_data(&mut cfg, model.sizes[0])?;
    let loss_kind = LossKind::parse(&cfg.str_or("loss", "euclidean"))?;
    let lambda_sq = cfg.f64_opt("reg.lambda_sq")?;
    let (kind, hyper, steps) = parse_opt(&mut cfg)?;
    let metric = parse_metric(&mut cfg, model.sizes.len() - 1)?;
    cfg.finish()?;
    if model.complex {
        train_generic::<Complex64>(
            &model, &data, loss_kind, lambda_sq, metric, kind, hyper, steps, seed, out, quiet,
        )
    } else {
        train_generic::<f64>(
            &model, &data, loss_kind, lambda_sq, metric, kind, hyper, steps, seed, out, quiet,
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn train_generic<T: TapeScalar>(
    model: &ModelSettings,
    data: &DataSettings,
    loss_kind: LossKind,
    lambda_sq: Option<f64>,
    metric: LayerMetric,
    kind: OptimizerKind,
    hyper: OptimizerHyper,
    steps: usize,
    seed: u64,
    out: &Path,
    quiet: bool,
) -> Result<CmdStatus> {
    let mut data_rng = stream_rng(seed, STREAM_DATA);
    let batch = generate_batch(data, &mut data_rng)?;
    let example_count = batch.len();
    let mut init_rng = stream_rng(seed, STREAM_INIT);
    let mut net: NetworkSpec<T> = build_network(model, &mut init_rng)?;
    let reg = lambda_sq
        .map(|l| RegularizerConfig::new(l, example_count))
        .transpose()?;
    let loss = BatchLoss {
        batch,
        kind: loss_kind,
        reg,
    };
    let frozen: Vec<usize> = (0..net.layer_count())
        .filter(|&i| metric.is_frozen(i))
        .collect();
    let before: Vec<Vec<(u64, u64)>> = frozen
        .iter()
        .map(|&i| layer_bits(&net.layers()[i]))
        .collect();

    let start = Instant::now();
    let record = run_trajectory(&mut net, &loss, &metric, kind, &hyper, steps)?;
    let wall = start.elapsed().as_secs_f64();

    ensure_out(out)?;
    let csv_path = out.join("trajectory.csv");
    std::fs::write(&csv_path, trajectory_csv(&record))?;

    if !quiet {
        let last = record.final_row();
        println!(
            "train: {} network {:?}, activations {}",
            net.mode(),
            model.sizes,
            net.activation_names()
        );
        println!("data: {}, {} examples", data.kind_name(), example_count);
        println!(
            "optimizer: {} (eta {}, dt {}), {} steps",
            kind.name(),
            hyper.eta,
            hyper.dt,
            steps
        );
        println!(
            "final: t {:.6e}, loss {:.6e}, param norm {:.6e}, grad norm {:.6e}, path length {:.6e}",
            last.t, last.loss, last.param_norm, last.grad_norm, last.path_length
        );
        for (&i, bits) in frozen.iter().zip(&before) {
            let same = layer_bits(&net.layers()[i]) == *bits;
            println!(
                "frozen layer {i}: parameters {}",
                if same {
                    "unchanged (bit-identical)"
                } else {
                    "MOVED"
                }
            );
        }
        if record.indefinite_steps > 0 {
            println!("indefinite co-gradient steps: {}", record.indefinite_steps);
        }
        println!("wall time: {wall:.3} s");
        println!("wrote: {}", csv_path.display());
    }
    Ok(CmdStatus::Ok)
}

fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut s = String::from("t,loss,param_norm,grad_norm,path_length\n");
    for row in &record.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt(row.t),
            fmt(row.loss),
            fmt(row.param_norm),
            fmt(row.grad_norm),
            fmt(row.path_length)
        );
    }
    s
}

// ---------------------------------------------------------------------------
// evidence and compare
// ---------------------------------------------------------------------------

struct EvidenceSettings {
    name: String,
    objective: Box<dyn Objective>,
    n: usize,
    lambda_sq: f64,
    quadrature: bool,
    init: Vec<f64>,
}

fn parse_evidence(cfg: &mut ConfigMap, seed_flag: Option<u64>) -> Result<EvidenceSettings> {
    let seed = resolve_seed(cfg, seed_flag)?;
    let n = cfg.usize_req("evidence.n")?;
    let lambda_sq = cfg.f64_or("evidence.lambda_sq", 1.0)?;
    let quadrature = cfg.bool_or("evidence.quadrature", false)?;
    let name = cfg.str_req("objective")?;
    let objective: Box<dyn Objective> = match name.as_str() {
        "quadratic" => Box::new(PolyObjective::new(
            cfg.f64_or("objective.curvature", 1.0)?,
            0.0,
            cfg.usize_or("objective.dim", 1)?,
        )?),
        "quartic" => Box::new(PolyObjective::new(
            cfg.f64_or("objective.curvature", 1.0)?,
            cfg.f64_or("objective.quartic", 1.0)?,
            cfg.usize_or("objective.dim", 1)?,
        )?),
        "double_well" => Box::new(DoubleWell::new(
            cfg.f64_or("objective.radius", 1.0)?,
            cfg.usize_or("objective.dim", 1)?,
        )?),
        "constant" => Box::new(ConstantObjective {
            value: cfg.f64_or("objective.value", 0.0)?,
            dim: cfg.usize_or("objective.dim", 0)?,
        }),
        "logistic" => {
            let features = cfg.usize_req("objective.features")?;
            let dim = cfg.usize_or("data.dim", 4)?;
            let signal = cfg.f64_or("data.signal", 1.2)?;
            let intercept = cfg.f64_or("data.intercept", -0.4)?;
            let noise_scale = cfg.f64_or("data.noise_scale", 3.0)?;
            let mut rng = stream_rng(seed, STREAM_DATA);
            let data = logistic_data(n, dim, signal, intercept, noise_scale, &mut rng)?;
            let (design, k) = design_with_bias(&data, features)?;
            Box::new(LogisticObjective::new(design, data.labels, k)?)
        }
        other => return Err(Error::Config(format!("unknown objective '{other}'"))),
    };
    let init = match cfg.f64_list_opt("objective.init")? {
        Some(v) => v,
        None => vec![0.0; objective.dim()],
    };
    Ok(EvidenceSettings {
        name,
        objective,
        n,
        lambda_sq,
        quadrature,
        init,
    })
}

fn evidence_txt(name: &str, r: &LaplaceReport, quad: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "objective = {name}");
    let _ = writeln!(s, "k = {}", r.k);
    let _ = writeln!(s, "n = {}", r.n);
    let _ = writeln!(s, "lambda_sq = {}", fmt(r.lambda_sq));
    if !r.w1.is_empty() {
        let w1: Vec<String> = r.w1.iter().map(|w| fmt(*w)).collect();
        let _ = writeln!(s, "w1 = {}", w1.join(" "));
    }
    let _ = writeln!(s, "l0 = {}", fmt(r.l0));
    let _ = writeln!(s, "l1 = {}", fmt(r.l1));
    let _ = writeln!(s, "log_sqrt_h = {}", fmt(r.log_sqrt_h));
    let _ = writeln!(s, "log_sqrt_g = {}", fmt(r.log_sqrt_g));
    let _ = writeln!(s, "l2 = {}", fmt(r.l2));
    if let Some(q) = quad {
        let laplace = -(r.n as f64) * r.l2;
        let _ = writeln!(s, "laplace_log_gamma = {}", fmt(laplace));
        let _ = writeln!(s, "quadrature_log_gamma = {}", fmt(q));
        let _ = writeln!(s, "gap = {}", fmt(q - laplace));
    }
    s
}

fn evidence_csv(name: &str, r: &LaplaceReport) -> String {
    format!(
        "objective,k,n,lambda_sq,l0,l1,log_sqrt_h,log_sqrt_g,l2\n{name},{},{},{},{},{},{},{},{}\n",
        r.k,
        r.n,
        fmt(r.lambda_sq),
        fmt(r.l0),
        fmt(r.l1),
        fmt(r.log_sqrt_h),
        fmt(r.log_sqrt_g),
        fmt(r.l2)
    )
}

pub fn cmd_evidence(config: &Path, seed: Option<u64>, out: &Path, quiet: bool) -> Result<CmdStatus> {
    let mut cfg = ConfigMap::from_path(config)?;
    let settings = parse_evidence(&mut cfg, seed)?;
    cfg.finish()?;

    let report = laplace_evidence(
        settings.objective.as_ref(),
        settings.n,
        settings.lambda_sq,
        &settings.init,
    )?;
    let quad = if settings.quadrature {
        Some(quadrature_evidence(
            settings.objective.as_ref(),
            settings.n,
            settings.lambda_sq,
        )?)
    } else {
        None
    };

    ensure_out(out)?;
    let txt_path = out.join("evidence.txt");
    let csv_path = out.join("evidence.csv");
    std::fs::write(&txt_path, evidence_txt(&settings.name, &report, quad))?;
    std::fs::write(&csv_path, evidence_csv(&settings.name, &report))?;

    if !quiet {
        println!(
            "evidence: objective {}, k {}, n {}, lambda_sq {}",
            settings.name, report.k, report.n, report.lambda_sq
        );
        println!(
            "l2 = {:.10e} (log gamma {:.10e})",
            report.l2,
            -(report.n as f64) * report.l2
        );
        if let Some(q) = quad {
            println!(
                "quadrature log gamma = {:.10e} (gap {:.3e})",
                q,
                q + report.n as f64 * report.l2
            );
        }
        println!("wrote: {}, {}", txt_path.display(), csv_path.display());
    }
    Ok(CmdStatus::Ok)
}

pub fn cmd_compare(
    config1: &Path,
    config2: &Path,
    seed: Option<u64>,
    out: &Path,
    quiet: bool,
) -> Result<CmdStatus> {
    let mut cfg1 = ConfigMap::from_path(config1)?;
    let s1 = parse_evidence(&mut cfg1, seed)?;
    cfg1.finish()?;
    let mut cfg2 = ConfigMap::from_path(config2)?;
    let s2 = parse_evidence(&mut cfg2, seed)?;
    cfg2.finish()?;

    let r1 = laplace_evidence(s1.objective.as_ref(), s1.n, s1.lambda_sq, &s1.init)?;
    let r2 = laplace_evidence(s2.objective.as_ref(), s2.n, s2.lambda_sq, &s2.init)?;
    let cmp = compare_models(&r1, &r2)?;

    let mut txt = String::new();
    let _ = writeln!(txt, "n = {}", cmp.n);
    let _ = writeln!(txt, "lambda_sq = {}", fmt(cmp.lambda_sq));
    let _ = writeln!(
        txt,
        "model 1 = {}: k {}, l0 {}, l2 {}",
        s1.name,
        r1.k,
        fmt(r1.l0),
        fmt(r1.l2)
    );
    let _ = writeln!(
        txt,
        "model 2 = {}: k {}, l0 {}, l2 {}",
        s2.name,
        r2.k,
        fmt(r2.l0),
        fmt(r2.l2)
    );
    let _ = writeln!(txt, "delta_l0 = {}", fmt(cmp.delta_l0));
    let _ = writeln!(txt, "delta_log_sqrt_h = {}", fmt(cmp.delta_log_sqrt_h));
    let _ = writeln!(txt, "delta_l2 = {}", fmt(cmp.delta_l2));
    let _ = writeln!(txt, "bic = {}", fmt(cmp.bic));
    let _ = writeln!(txt, "excluded_measure = {}", fmt(cmp.excluded_measure));
    let _ = writeln!(txt, "preferred = model {}", cmp.preferred);

    let csv = format!(
        "n,lambda_sq,k1,k2,delta_l0,delta_log_sqrt_h,delta_l2,bic,excluded_measure,preferred\n\
         {},{},{},{},{},{},{},{},{},{}\n",
        cmp.n,
        fmt(cmp.lambda_sq),
        cmp.k1,
        cmp.k2,
        fmt(cmp.delta_l0),
        fmt(cmp.delta_log_sqrt_h),
        fmt(cmp.delta_l2),
        fmt(cmp.bic),
        fmt(cmp.excluded_measure),
        cmp.preferred
    );

    ensure_out(out)?;
    let txt_path = out.join("compare.txt");
    let csv_path = out.join("compare.csv");
    std::fs::write(&txt_path, txt)?;
    std::fs::write(&csv_path, csv)?;

    if !quiet {
        println!(
            "compare: model 1 {} (k {}) vs model 2 {} (k {}), n {}",
            s1.name, r1.k, s2.name, r2.k, cmp.n
        );
        println!(
            "delta_l2 = {:.6e}, bic = {:.6e}",
            cmp.delta_l2, cmp.bic
        );
        println!("wrote: {}, {}", txt_path.display(), csv_path.display());
        println!("preferred = model {}", cmp.preferred);
    }
    Ok(CmdStatus::Ok)
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

pub fn cmd_gradcheck(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    quiet: bool,
) -> Result<CmdStatus> {
    let mut cfg = ConfigMap::from_path(config)?;
    let seed = resolve_seed(&mut cfg, seed)?;
    let model = parse_model(&mut cfg)?;
    let data = parse_data(&mut cfg, model.sizes[0])?;
    let loss_kind = LossKind::parse(&cfg.str_or("loss", "euclidean"))?;
    let lambda_sq = cfg.f64_opt("reg.lambda_sq")?;
    let h = cfg.f64_or("gradcheck.h", 1e-6)?;
    let tol = cfg.f64_or("gradcheck.tol", 1e-6)?;
    cfg.finish()?;

    let (mode, params, max_rel) = if model.complex {
        gradcheck_generic::<Complex64>(&model, &data, loss_kind, lambda_sq, h, seed)?
    } else {
        gradcheck_generic::<f64>(&model, &data, loss_kind, lambda_sq, h, seed)?
    };
    let pass = max_rel <= tol;

    ensure_out(out)?;
    let txt_path = out.join("gradcheck.txt");
    let txt = format!(
        "mode = {mode}\nparams = {params}\nh = {}\ntol = {}\nmax_rel_err = {}\nstatus = {}\n",
        fmt(h),
        fmt(tol),
        fmt(max_rel),
        if pass { "pass" } else { "fail" }
    );
    std::fs::write(&txt_path, txt)?;

    if !quiet {
        println!("gradcheck: {mode} network, {params} parameters");
        println!("max relative error {max_rel:.3e} against tolerance {tol:.3e}");
        println!("wrote: {}", txt_path.display());
        println!("status = {}", if pass { "pass" } else { "fail" });
    }
    Ok(if pass { CmdStatus::Ok } else { CmdStatus::CheckFailed })
}

fn gradcheck_generic<T: TapeScalar>(
    model: &ModelSettings,
    data: &DataSettings,
    loss_kind: LossKind,
    lambda_sq: Option<f64>,
    h: f64,
    seed: u64,
) -> Result<(&'static str, usize, f64)> {
    let mut data_rng = stream_rng(seed, STREAM_DATA);
    let batch = generate_batch(data, &mut data_rng)?;
    let reg = lambda_sq
        .map(|l| RegularizerConfig::new(l, batch.len()))
        .transpose()?;
    let mut init_rng = stream_rng(seed, STREAM_INIT);
    let net: NetworkSpec<T> = build_network(model, &mut init_rng)?;
    let loss = BatchLoss {
        batch,
        kind: loss_kind,
        reg,
    };
    let (_, ad) = loss.evaluate(&net)?;
    let fd = finite_difference_gradient(&net, |probe| loss.value(probe), h)?;
    let max_rel = max_relative_gradient_error(&ad.to_flat(), &fd.to_flat());
    Ok((net.mode(), net.param_count(), max_rel))
}

/// Largest coordinate-wise deviation `|a − f| / max(1, |a|, |f|)`.
pub fn max_relative_gradient_error<T: TapeScalar>(a: &[T], f: &[T]) -> f64 {
    a.iter()
        .zip(f)
        .map(|(&x, &y)| {
            let num = (x - y).modulus();
            num / 1.0f64.max(x.modulus()).max(y.modulus())
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

pub fn cmd_oracle_check(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    quiet: bool,
) -> Result<CmdStatus> {
    let mut cfg = ConfigMap::from_path(config)?;
    let _ = resolve_seed(&mut cfg, seed)?;
    let kind = cfg.str_req("oracle.kind")?;
    let w0 = cfg.f64_or("oracle.w0", 1.0)?;
    let eta = cfg.f64_or("oracle.eta", 1.0)?;
    let oracle = match kind.as_str() {
        "quadratic" => OracleSpec::quadratic(w0, eta)?,
        "quartic" => OracleSpec::quartic(w0, eta, cfg.f64_or("oracle.alpha", 1.0)?)?,
        other => return Err(Error::Config(format!("unknown oracle.kind '{other}'"))),
    };
    let dt = cfg.f64_or("oracle.dt", 1e-4)?;
    let t_max = cfg.f64_or("oracle.t_max", 5.0)?;
    let tol = cfg.f64_or("oracle.tol", 1e-3)?;
    cfg.finish()?;
    if !(dt > 0.0) || !(t_max > dt) {
        return Err(Error::Config(format!(
            "oracle needs 0 < dt < t_max, got dt {dt}, t_max {t_max}"
        )));
    }
    let steps = (t_max / dt).round() as usize;

    let loss = match oracle {
        OracleSpec::Quadratic { .. } => PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        },
        OracleSpec::Quartic { alpha, .. } => PolyLoss {
            quadratic: 0.0,
            quartic: alpha,
        },
    };
    let mut net = carrier_network(&[w0])?;
    let metric = LayerMetric::euclidean(1)?;
    let hyper = OptimizerHyper {
        eta,
        dt,
        ..OptimizerHyper::default()
    };
    let record = run_trajectory(
        &mut net,
        &loss,
        &metric,
        OptimizerKind::Aristotle,
        &hyper,
        steps,
    )?;

    let mut max_rel = 0.0f64;
    let mut csv = String::from("t,w_measured,w_expected,loss_measured,loss_expected\n");
    for row in &record.rows {
        let (w_exact, loss_exact) = oracle.exact(row.t);
        let rel_w = (row.param_norm - w_exact.abs()).abs() / w_exact.abs().max(1e-300);
        let rel_l = (row.loss - loss_exact).abs() / loss_exact.abs().max(1e-300);
        max_rel = max_rel.max(rel_w).max(rel_l);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt(row.t),
            fmt(row.param_norm),
            fmt(w_exact.abs()),
            fmt(row.loss),
            fmt(loss_exact)
        );
    }
    let pass = max_rel <= tol;

    ensure_out(out)?;
    let csv_path = out.join("oracle.csv");
    std::fs::write(&csv_path, csv)?;

    if !quiet {
        println!(
            "oracle-check: {} flow, w0 {}, eta {}, dt {}, {} steps",
            oracle.kind_name(),
            w0,
            eta,
            dt,
            steps
        );
        println!("max relative deviation {max_rel:.3e} against tolerance {tol:.3e}");
        println!("wrote: {}", csv_path.display());
        println!("status = {}", if pass { "pass" } else { "fail" });
    }
    Ok(if pass { CmdStatus::Ok } else { CmdStatus::CheckFailed })
}

// ---------------------------------------------------------------------------
// saddle-census
// ---------------------------------------------------------------------------

pub fn cmd_saddle_census(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    quiet: bool,
) -> Result<CmdStatus> {
    let mut cfg = ConfigMap::from_path(config)?;
    let seed = resolve_seed(&mut cfg, seed)?;
    let d = cfg.usize_req("census.d")?;
    let trials = cfg.u64_opt("census.trials")?.unwrap_or(1_000_000);
    let model = CensusModel::parse(&cfg.str_or("census.model", "independent-signs"))?;
    cfg.finish()?;

    let result = saddle_census(d, trials, model, seed)?;

    ensure_out(out)?;
    let csv_path = out.join("census.csv");
    let csv = format!(
        "model,d,trials,minima,fraction,std_err\n{},{d},{},{},{},{}\n",
        model.name(),
        result.trials,
        result.minima,
        fmt(result.fraction),
        fmt(result.std_err)
    );
    std::fs::write(&csv_path, csv)?;

    if !quiet {
        println!(
            "census: model {}, d {d}, trials {}",
            model.name(),
            result.trials
        );
        println!(
            "minima {} of {}, fraction {:.6e}, std err {:.3e}",
            result.minima, result.trials, result.fraction, result.std_err
        );
        if model == CensusModel::IndependentSigns {
            println!("expected for independent signs: {:.6e}", 0.5f64.powi(d as i32));
        }
        println!("wrote: {}", csv_path.display());
    }
    Ok(CmdStatus::Ok)
}

// ---------------------------------------------------------------------------
// model selection study
// ---------------------------------------------------------------------------

/// Parameters of the nested-logistic selection study: data follow a rule
/// using the first covariate and a bias; the rival model is offered
/// `alt_features` covariates of which all but the first are noise.
#[derive(Clone, Debug)]
pub struct StudySettings {
    pub n_values: Vec<usize>,
    pub seeds: usize,
    pub true_features: usize,
    pub alt_features: usize,
    pub dim: usize,
    pub signal: f64,
    pub intercept: f64,
    pub noise_scale: f64,
    pub lambda_sq: f64,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            n_values: vec![200, 500, 1000, 5000],
            seeds: 100,
            true_features: 1,
            alt_features: 4,
            dim: 4,
            signal: 1.2,
            intercept: -0.4,
            noise_scale: 3.0,
            lambda_sq: 1.0,
        }
    }
}

/// One dataset-size point of the study.
#[derive(Clone, Copy, Debug)]
pub struct StudyPoint {
    pub n: usize,
    pub true_wins: usize,
    pub seeds: usize,
}

impl StudyPoint {
    pub fn win_fraction(&self) -> f64 {
        self.true_wins as f64 / self.seeds as f64
    }
}

/// Repeats the two-model comparison over fresh datasets and counts how
/// often the evidence prefers the correctly specified model. Each (size,
/// trial) pair draws from its own generator stream, so points are
/// independent and the whole study is reproducible.
pub fn model_selection_study(s: &StudySettings, master_seed: u64) -> Result<Vec<StudyPoint>> {
    if s.seeds == 0 {
        return Err(Error::Argument("study needs seeds >= 1".into()));
    }
    let mut points = Vec::with_capacity(s.n_values.len());
    for &n in &s.n_values {
        let mut true_wins = 0;
        for trial in 0..s.seeds {
            let mut rng = stream_rng(master_seed.wrapping_add(trial as u64), n as u64);
            let data = logistic_data(n, s.dim, s.signal, s.intercept, s.noise_scale, &mut rng)?;
            let (d1, k1) = design_with_bias(&data, s.true_features)?;
            let (d2, k2) = design_with_bias(&data, s.alt_features)?;
            let o1 = LogisticObjective::new(d1, data.labels.clone(), k1)?;
            let o2 = LogisticObjective::new(d2, data.labels.clone(), k2)?;
            let r1 = laplace_evidence(&o1, n, s.lambda_sq, &vec![0.0; k1])?;
            let r2 = laplace_evidence(&o2, n, s.lambda_sq, &vec![0.0; k2])?;
            if compare_models(&r1, &r2)?.preferred == 1 {
                true_wins += 1;
            }
        }
        points.push(StudyPoint {
            n,
            true_wins,
            seeds: s.seeds,
        });
    }
    Ok(points)
}
