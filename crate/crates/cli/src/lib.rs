//! The `linsym` command line: operator arithmetic, symmetry tests, the
//! even/odd derivations for `D^2 + G D + H`, and numeric transport checks.
//!
//! [`run`] is the whole program; `main` only wires it to the process.
//! Exit codes: 0 success, 1 domain failure (e.g. not a symmetry), 2 usage or
//! parse error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use linsym::jet::{self, JetContextJson};
use linsym::numeric::{self, Grid, NumericOperator};
use linsym::symmetry::algebra::{combine, format_combination};
use linsym::symmetry::{self, Grading, Parity};
use linsym::{Expr, GenFunc, JetContext, LinDiffOp};

#[derive(Parser, Debug)]
#[command(name = "linsym", version, about = "Linear ODE operators and their linear symmetries")]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Formal adjoint of an operator.
    Adjoint {
        #[arg(long, allow_hyphen_values = true)]
        op: String,
    },
    /// Composition A∘B.
    Compose {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Commutator A∘B − B∘A.
    Commutator {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Division with remainder by a monic operator.
    Divide {
        #[arg(long, allow_hyphen_values = true)]
        num: String,
        #[arg(long, allow_hyphen_values = true)]
        den: String,
    },
    /// Symmetry test: prints ∇ with L∘Δ = ∇∘L, or the remainder.
    Check {
        #[arg(long = "L", allow_hyphen_values = true)]
        l: String,
        #[arg(long, allow_hyphen_values = true)]
        delta: String,
    },
    /// Even/odd parity of a symmetry of a self- or skew-adjoint L.
    Grade {
        #[arg(long = "L", allow_hyphen_values = true)]
        l: String,
        #[arg(long, allow_hyphen_values = true)]
        delta: String,
    },
    /// Conditions for first-order even symmetries of D^2 + G D + H.
    EvenOde {
        #[arg(long = "G", default_value = "G", allow_hyphen_values = true)]
        g: String,
        #[arg(long = "H", default_value = "H", allow_hyphen_values = true)]
        h: String,
        #[arg(long, value_enum, default_value_t = VariantArg::Both)]
        variant: VariantArg,
    },
    /// Conditions for first-order odd symmetries of D^2 + G D + H.
    OddCheck {
        #[arg(long = "G", default_value = "G", allow_hyphen_values = true)]
        g: String,
        #[arg(long = "H", default_value = "H", allow_hyphen_values = true)]
        h: String,
    },
    /// The even symmetry w D + (G w − w')/2 built from w.
    EvenSym {
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long = "G", default_value = "0", allow_hyphen_values = true)]
        g: String,
        /// Also report the w-equation residual and the exact symmetry test.
        #[arg(long = "H", allow_hyphen_values = true)]
        h: Option<String>,
    },
    /// Lie-equation residual, shuffle field or bracket of generating functions.
    Jet {
        #[arg(long)]
        k: usize,
        #[arg(long = "F", allow_hyphen_values = true)]
        rhs: String,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
    },
    /// Even symmetry algebra of D^2 + H for constant H, with an sl(2) witness.
    Sl2 {
        #[arg(long = "H", default_value = "0", allow_hyphen_values = true)]
        h: String,
    },
    /// Numeric transport check of the even symmetry built from w.
    Verify {
        #[arg(long = "G", default_value = "0", allow_hyphen_values = true)]
        g: String,
        #[arg(long = "H", allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write per-sample residuals as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Transport residuals of both candidate w-equations for constant H.
    CompareLtilde {
        #[arg(long = "H", default_value = "1", allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Paper,
    Derived,
    Both,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// Text and JSON renderings of one result, plus its exit code.
struct Report {
    text: String,
    json: Value,
    code: i32,
}

impl Report {
    fn ok(text: String, json: Value) -> Report {
        Report { text, json, code: 0 }
    }
}

fn op_json(op: &LinDiffOp) -> Value {
    serde_json::to_value(op).expect("operator serializes")
}

fn parse_op(flag: &str, text: &str) -> Result<LinDiffOp, CliError> {
    LinDiffOp::parse(text).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn parse_expr(flag: &str, text: &str) -> Result<Expr, CliError> {
    Expr::parse(text)
        .map(|e| e.normalize())
        .map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn parse_constant(flag: &str, text: &str) -> Result<linsym::Rational, CliError> {
    parse_expr(flag, text)?
        .as_constant()
        .ok_or_else(|| CliError::Domain(format!("--{flag} must be a rational constant")))
}

/// Runs the command line `argv` (including the program name).
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{rendered}");
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            let written = if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.json).unwrap())
            } else {
                write!(out, "{}", report.text)
            };
            if written.is_err() {
                return 1;
            }
            report.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn execute(cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::Adjoint { op } => {
            let r = parse_op("op", op)?.adjoint();
            Ok(Report::ok(format!("{r}\n"), op_json(&r)))
        }
        Command::Compose { a, b } => {
            let r = parse_op("a", a)?.compose(&parse_op("b", b)?);
            Ok(Report::ok(format!("{r}\n"), op_json(&r)))
        }
        Command::Commutator { a, b } => {
            let r = parse_op("a", a)?.commutator(&parse_op("b", b)?);
            Ok(Report::ok(format!("{r}\n"), op_json(&r)))
        }
        Command::Divide { num, den } => {
            let d = parse_op("num", num)?
                .divide(&parse_op("den", den)?)
                .map_err(domain)?;
            Ok(Report::ok(
                format!("quotient: {}\nremainder: {}\n", d.quotient, d.remainder),
                json!({"quotient": op_json(&d.quotient), "remainder": op_json(&d.remainder)}),
            ))
        }
        Command::Check { l, delta } => check(&parse_op("L", l)?, &parse_op("delta", delta)?),
        Command::Grade { l, delta } => grade(&parse_op("L", l)?, &parse_op("delta", delta)?),
        Command::EvenOde { g, h, variant } => {
            even_ode(&parse_expr("G", g)?, &parse_expr("H", h)?, *variant)
        }
        Command::OddCheck { g, h } => odd_check(&parse_expr("G", g)?, &parse_expr("H", h)?),
        Command::EvenSym { w, g, h } => {
            let h = h.as_deref().map(|h| parse_expr("H", h)).transpose()?;
            even_sym(&parse_expr("w", w)?, &parse_expr("G", g)?, h.as_ref())
        }
        Command::Jet { k, rhs, f, g } => jet_cmd(*k, rhs, f, g.as_deref()),
        Command::Sl2 { h } => sl2(&parse_constant("H", h)?),
        Command::Verify {
            g,
            h,
            w,
            x0,
            x1,
            step,
            tol,
            csv,
        } => verify(
            &parse_expr("G", g)?,
            &parse_expr("H", h)?,
            &parse_expr("w", w)?,
            &Grid::new(*x0, *x1, *step).map_err(|e| CliError::Usage(e.to_string()))?,
            *tol,
            csv.as_ref(),
        ),
        Command::CompareLtilde { h, x0, x1, step } => {
            let h = parse_constant("H", h)?;
            let grid = Grid::new(*x0, *x1, *step).map_err(|e| CliError::Usage(e.to_string()))?;
            let c = numeric::compare_ltilde_variants(&h, &grid).map_err(domain)?;
            let json = serde_json::to_value(&c).expect("comparison serializes");
            Ok(Report::ok(c.to_string(), json))
        }
    }
}

fn check(l: &LinDiffOp, delta: &LinDiffOp) -> Result<Report, CliError> {
    let c = symmetry::symmetry_test(l, delta).map_err(domain)?;
    let json = json!({
        "symmetry": c.is_symmetry(),
        "quotient": c.certificate().map(op_json),
        "remainder": op_json(&c.remainder),
    });
    Ok(match c.certificate() {
        Some(nabla) => Report::ok(
            format!("symmetry: yes\nquotient: {nabla}\nremainder: 0\n"),
            json,
        ),
        None => Report {
            text: format!("symmetry: no\nremainder: {}\n", c.remainder),
            json,
            code: 1,
        },
    })
}

fn graded_json(g: &symmetry::GradedSymmetry) -> Value {
    json!({
        "op": op_json(&g.op),
        "parity": g.parity.as_u8(),
        "quotient": op_json(&g.quotient),
        "remainder": op_json(&LinDiffOp::zero()),
    })
}

fn grade(l: &LinDiffOp, delta: &LinDiffOp) -> Result<Report, CliError> {
    Ok(match symmetry::grade(l, delta).map_err(domain)? {
        Grading::Zero => Report::ok(
            "parity: 0 and 1 (zero operator)\n".into(),
            json!({"parity": null, "components": []}),
        ),
        Grading::Pure(g) => {
            let mut json = graded_json(&g);
            json["components"] = json!([graded_json(&g)]);
            Report::ok(
                format!("parity: {}\nquotient: {}\n", g.parity, g.quotient),
                json,
            )
        }
        Grading::Mixed { even, odd } => Report::ok(
            format!(
                "mixed\neven: {}\nodd: {}\n",
                even.op, odd.op
            ),
            json!({"parity": null, "components": [graded_json(&even), graded_json(&odd)]}),
        ),
    })
}

fn even_ode(g: &Expr, h: &Expr, variant: VariantArg) -> Result<Report, CliError> {
    let mut text = String::new();
    let mut json = json!({});
    let paper = symmetry::ltilde_paper(g, h).map_err(domain)?;
    let derived = if variant != VariantArg::Paper {
        let r = symmetry::derive_even_conditions(g, h).map_err(domain)?;
        let op = r.constraint_operator().map_err(domain)?;
        writeln!(text, "relation: {}", r.relation_string()).unwrap();
        for c in &r.constraints {
            writeln!(text, "constraint: {c} = 0").unwrap();
        }
        writeln!(text, "derived: {op}").unwrap();
        json["relation"] = json!(r.relation_string());
        json["constraints"] = json!(r.constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>());
        json["parity"] = json!(0);
        json["derived"] = op_json(&op);
        if r.constraints.len() > 1 {
            let gauge = symmetry::ltilde_gauge(g, h).map_err(domain)?;
            let potential = symmetry::normal_form_potential(g, h).map_err(domain)?;
            writeln!(
                text,
                "note: {} conditions must hold together; in normal form (I = {potential}) use {gauge}",
                r.constraints.len()
            )
            .unwrap();
            json["gauge"] = op_json(&gauge);
            json["potential"] = json!(potential.to_string());
        }
        Some(op)
    } else {
        None
    };
    if variant != VariantArg::Derived {
        writeln!(text, "paper: {paper}").unwrap();
        json["paper"] = op_json(&paper);
    }
    if let (VariantArg::Both, Some(d)) = (variant, &derived) {
        let diff = d.sub(&paper);
        if diff.is_zero() {
            writeln!(text, "note: variants agree").unwrap();
        } else {
            writeln!(text, "note: variants differ by {diff}").unwrap();
        }
        json["difference"] = op_json(&diff);
    }
    Ok(Report::ok(text, json))
}

fn odd_check(g: &Expr, h: &Expr) -> Result<Report, CliError> {
    let r = symmetry::derive_odd_conditions(g, h).map_err(domain)?;
    let mut text = String::new();
    for c in &r.constraints {
        writeln!(text, "constraint: {c} = 0").unwrap();
    }
    let constants =
        r.constraints == [Expr::func(&r.a1, 0), Expr::func(&r.a0, 1)];
    if constants {
        writeln!(text, "odd symmetries: constants").unwrap();
    }
    Ok(Report::ok(
        text,
        json!({
            "constraints": r.constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "parity": 1,
            "constants_only": constants,
        }),
    ))
}

fn even_sym(w: &Expr, g: &Expr, h: Option<&Expr>) -> Result<Report, CliError> {
    let op = symmetry::even_symmetry_from_w(w, g).map_err(domain)?;
    let mut text = format!("operator: {op}\n");
    let mut json = json!({"operator": op_json(&op)});
    if let Some(h) = h {
        let residual = symmetry::even_symmetry_residual(w, g, h).map_err(domain)?;
        let l = LinDiffOp::second_order(g, h).map_err(domain)?;
        let c = symmetry::symmetry_test(&l, &op).map_err(domain)?;
        writeln!(text, "residual: {residual}").unwrap();
        writeln!(text, "remainder: {}", c.remainder).unwrap();
        writeln!(text, "symmetry: {}", if c.is_symmetry() { "yes" } else { "no" }).unwrap();
        json["residual"] = json!(residual.to_string());
        json["remainder"] = op_json(&c.remainder);
        json["quotient"] = c.certificate().map(op_json).unwrap_or(Value::Null);
        json["symmetry"] = json!(c.is_symmetry());
    }
    Ok(Report::ok(text, json))
}

fn jet_cmd(k: usize, rhs: &str, f: &str, g: Option<&str>) -> Result<Report, CliError> {
    let usage = |flag: &str, e: jet::JetError| CliError::Usage(format!("--{flag}: {e}"));
    let ctx = JetContext::new(k, parse_expr("F", rhs)?).map_err(|e| usage("F", e))?;
    let f = GenFunc::from(parse_expr("f", f)?);
    let mut json = serde_json::to_value(JetContextJson::from(&ctx)).unwrap();
    let mut text = String::new();
    match g {
        Some(g) => {
            let g = GenFunc::from(parse_expr("g", g)?);
            let b = ctx.poisson_lie_bracket(&f, &g).map_err(domain)?;
            writeln!(text, "bracket: {}", b.expr()).unwrap();
            json["bracket"] = json!(b.expr().to_string());
        }
        None => {
            let residual = ctx.lie_equation_residual(&f).map_err(domain)?;
            let field = ctx.shuffle_field(&f).map_err(domain)?;
            writeln!(text, "residual: {residual}").unwrap();
            for (i, c) in field.components.iter().enumerate() {
                writeln!(text, "field p{i}: {c}").unwrap();
            }
            json["residual"] = json!(residual.to_string());
            json["field"] = json!(field.components.iter().map(|c| c.to_string()).collect::<Vec<_>>());
            if let Ok((dp0, dx)) = jet::affine_genfunc_to_point_field(&f) {
                writeln!(text, "point field: ({dp0}) d/dp0 + ({dx}) d/dx").unwrap();
                json["point_field"] = json!({"p0": dp0.to_string(), "x": dx.to_string()});
            }
        }
    }
    Ok(Report::ok(text, json))
}

fn sl2(h: &linsym::Rational) -> Result<Report, CliError> {
    let he = Expr::constant(h.clone());
    let l = LinDiffOp::second_order(&Expr::zero(), &he).map_err(domain)?;
    let kernel = symmetry::constant_potential_kernel(h).map_err(domain)?;
    let basis: Vec<LinDiffOp> = kernel
        .iter()
        .map(|w| symmetry::even_symmetry_from_w(w, &Expr::zero()))
        .collect::<Result<_, _>>()
        .map_err(domain)?;
    let names: Vec<String> = (1..=basis.len()).map(|i| format!("Δ{i}")).collect();
    let sc = symmetry::structure_constants(&l, &basis).map_err(domain)?;
    let kind = sc.classify();
    let bridge = symmetry::bracket_bridge(&l, &basis).map_err(domain)?;
    let odd = match symmetry::grade(&l, &LinDiffOp::identity()).map_err(domain)? {
        Grading::Pure(g) => Some(g.parity),
        _ => None,
    };

    let mut text = String::new();
    let shown: Vec<String> = kernel.iter().map(|w| w.to_string()).collect();
    writeln!(text, "L: {l}").unwrap();
    writeln!(text, "w-basis: {}", shown.join(", ")).unwrap();
    for (n, b) in names.iter().zip(&basis) {
        writeln!(text, "{n} = {b}").unwrap();
    }
    for line in sc.table_lines(&names) {
        writeln!(text, "{line}").unwrap();
    }
    let triple = sc.find_sl2_triple();
    let mut json = json!({
        "L": op_json(&l),
        "w_basis": shown,
        "basis": basis.iter().map(op_json).collect::<Vec<_>>(),
        "brackets": sc.table_lines(&names),
        "killing_signature": sc.killing_signature(),
        "verdict": kind.to_string(),
        "sigma": bridge.sign,
        "odd_constant_parity": odd.map(Parity::as_u8),
    });
    if let Some(t) = &triple {
        let (hh, e, f) = (combine(&basis, &t.h), combine(&basis, &t.e), combine(&basis, &t.f));
        let verified = symmetry::verify_sl2_triple(&l, &hh, &e, &f).map_err(domain)?;
        let fmt = |c: &[linsym::Rational]| format_combination(c, &names);
        writeln!(
            text,
            "witness: h = {}, e = {}, f = {}",
            fmt(&t.h),
            fmt(&t.e),
            fmt(&t.f)
        )
        .unwrap();
        writeln!(text, "h = {hh}\ne = {e}\nf = {f}").unwrap();
        writeln!(
            text,
            "relations [h,e]=2e, [h,f]=-2f, [e,f]=h: {}",
            if verified { "ok" } else { "FAILED" }
        )
        .unwrap();
        json["witness"] = json!({
            "h": fmt(&t.h), "e": fmt(&t.e), "f": fmt(&t.f),
            "operators": [op_json(&hh), op_json(&e), op_json(&f)],
            "verified": verified,
        });
    }
    let (p, n, z) = sc.killing_signature();
    writeln!(text, "killing signature: ({p}, {n}, {z})").unwrap();
    if let Some(s) = bridge.sign {
        writeln!(text, "bridge sign: {s}").unwrap();
    }
    if let Some(par) = odd {
        writeln!(text, "odd part: constants, parity {par}").unwrap();
    }
    writeln!(text, "verdict: {kind}").unwrap();
    Ok(Report::ok(text, json))
}

fn verify(
    g: &Expr,
    h: &Expr,
    w: &Expr,
    grid: &Grid,
    tol: f64,
    csv: Option<&PathBuf>,
) -> Result<Report, CliError> {
    let l = LinDiffOp::second_order(g, h).map_err(domain)?;
    let delta = symmetry::even_symmetry_from_w(w, g).map_err(domain)?;
    let symbolic = symmetry::even_symmetry_residual(w, g, h).map_err(domain)?;
    let rep = numeric::kernel_map_residual_basis(
        &NumericOperator::closed_form(l),
        &NumericOperator::closed_form(delta.clone()),
        grid,
    )
    .map_err(domain)?;
    if let Some(path) = csv {
        let file = std::fs::File::create(path).map_err(domain)?;
        rep.write_csv(file).map_err(domain)?;
    }
    let passed = rep.max_residual < tol;
    let mut text = format!("operator: {delta}\nsymbolic residual: {symbolic}\n");
    for r in &rep.per_init {
        writeln!(text, "init {:?}: {:.3e}", r.init, r.max_residual).unwrap();
    }
    writeln!(text, "max_residual: {:.3e}", rep.max_residual).unwrap();
    writeln!(text, "transport: {}", if passed { "ok" } else { "FAILED" }).unwrap();
    let mut json = serde_json::to_value(&rep).expect("report serializes");
    json["symbolic_residual"] = json!(symbolic.to_string());
    json["tolerance"] = json!(tol);
    json["passed"] = json!(passed);
    Ok(Report {
        text,
        json,
        code: if passed { 0 } else { 1 },
    })
}
