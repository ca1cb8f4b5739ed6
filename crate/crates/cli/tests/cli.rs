use std::process::Command;

use linsym::LinDiffOp;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["linsym"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = linsym_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut a = vec!["--json"];
    a.extend_from_slice(args);
    let (code, out, err) = run(&a);
    assert!(code == 0 || code == 1, "{err}");
    serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}"))
}

#[test]
fn adjoint_golden() {
    let (code, out, _) = run(&["adjoint", "--op", "D^2 + G*D + H"]);
    assert_eq!(code, 0);
    assert_eq!(out, "D^2 - G*D + (H - G')\n");
}

#[test]
fn printed_operators_reparse() {
    for args in [
        ["adjoint", "--op", "x^2*D^3 + sin(x)*D + G"].as_slice(),
        &["compose", "--a", "D + x", "--b", "G*D^2 - 1/3"],
        &["commutator", "--a", "x*D", "--b", "exp(2*x)*D^2"],
    ] {
        let (code, out, _) = run(args);
        assert_eq!(code, 0);
        let op = LinDiffOp::parse(out.trim()).unwrap();
        assert_eq!(op.to_string(), out.trim());
    }
}

#[test]
fn json_operator_round_trip() {
    let v = json(&["compose", "--a", "D", "--b", "x*D"]);
    let op: LinDiffOp = serde_json::from_value(v).unwrap();
    assert_eq!(op, LinDiffOp::parse("x*D^2 + D").unwrap());
}

#[test]
fn divide_golden() {
    let (code, out, _) = run(&["divide", "--num", "D^3", "--den", "D^2 + H"]);
    assert_eq!(code, 0);
    assert_eq!(out, "quotient: D\nremainder: -H*D - H'\n");
    let (code, _, err) = run(&["divide", "--num", "D^3", "--den", "2*D"]);
    assert_eq!(code, 1);
    assert!(err.contains("monic"));
}

#[test]
fn check_exit_codes() {
    let (code, out, _) = run(&["check", "--L", "D^2", "--delta", "x*D - 1/2"]);
    assert_eq!(code, 0);
    assert_eq!(out, "symmetry: yes\nquotient: x*D + 3/2\nremainder: 0\n");
    let (code, out, _) = run(&["check", "--L", "D^2 + H", "--delta", "D"]);
    assert_eq!(code, 1);
    assert_eq!(out, "symmetry: no\nremainder: -H'\n");
    let v = json(&["check", "--L", "D^2 + H", "--delta", "D"]);
    assert_eq!(v["symmetry"], false);
    assert_eq!(v["remainder"]["coeffs"][0], "-H'");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["check", "--L", "D^2 +", "--delta", "D"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["adjoint"]).0, 2);
    assert_eq!(run(&["verify", "--H", "1", "--w", "1", "--step", "0"]).0, 2);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sl2"));
}

#[test]
fn grade_outputs() {
    let (code, out, _) = run(&["grade", "--L", "D^2", "--delta", "5"]);
    assert_eq!((code, out.as_str()), (0, "parity: 1\nquotient: 5\n"));
    let (_, out, _) = run(&["grade", "--L", "D^2", "--delta", "D"]);
    assert_eq!(out, "parity: 0\nquotient: D\n");
    let (_, out, _) = run(&["grade", "--L", "D^2", "--delta", "D + 1"]);
    assert_eq!(out, "mixed\neven: D\nodd: 1\n");
    assert_eq!(run(&["grade", "--L", "D^2 + x*D", "--delta", "1"]).0, 1);
    assert_eq!(run(&["grade", "--L", "D^2 + H", "--delta", "D"]).0, 1);
}

#[test]
fn even_ode_golden() {
    let (code, out, _) = run(&["even-ode", "--G", "0"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "relation: A0 = -1/2*A1'\n\
         constraint: w''' + 4*H*w' + 2*H'*w = 0\n\
         derived: D^3 + 4*H*D + 2*H'\n\
         paper: D^3 + 2*H*D + H'\n\
         note: variants differ by 2*H*D + H'\n"
    );
    let (_, out, _) = run(&["even-ode", "--variant", "paper"]);
    assert_eq!(out, "paper: D^3 + (2*H - 2*G' - G^2)*D + (H' - G'' - G*G')\n");
    let v = json(&["even-ode"]);
    assert_eq!(v["constraints"].as_array().unwrap().len(), 2);
    assert!(v["gauge"].is_object());
}

#[test]
fn odd_check_golden() {
    let (code, out, _) = run(&["odd-check"]);
    assert_eq!(code, 0);
    assert_eq!(out, "constraint: A1 = 0\nconstraint: A0' = 0\nodd symmetries: constants\n");
}

#[test]
fn even_sym_reports_symmetry() {
    let (code, out, _) = run(&["even-sym", "--w", "cos(2*x)", "--H", "1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("operator: cos(2*x)*D + sin(2*x)\n"), "{out}");
    assert!(out.ends_with("symmetry: yes\n"));
    let v = json(&["even-sym", "--w", "cos(x)", "--H", "1"]);
    assert_eq!(v["symmetry"], false);
}

#[test]
fn jet_commands() {
    let (code, out, _) = run(&["jet", "--k", "1", "--F", "-H*p0", "--f", "p1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("residual: -p0*H'\n"), "{out}");
    let (_, out, _) = run(&["jet", "--k", "1", "--F", "0", "--f", "p1", "--g", "x*p1 - 1/2*p0"]);
    assert_eq!(out, "bracket: -p1\n");
    assert_eq!(run(&["jet", "--k", "1", "--F", "p3", "--f", "p1"]).0, 2);
}

#[test]
fn sl2_golden() {
    let (code, out, _) = run(&["sl2"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "L: D^2\n\
         w-basis: 1, x, x^2\n\
         Δ1 = D\n\
         Δ2 = x*D - 1/2\n\
         Δ3 = x^2*D - x\n\
         [Δ1, Δ2] = Δ1\n\
         [Δ1, Δ3] = 2*Δ2\n\
         [Δ2, Δ3] = Δ3\n\
         witness: h = -2*Δ2, e = Δ1, f = -Δ3\n\
         h = -2*x*D + 1\n\
         e = D\n\
         f = -x^2*D + x\n\
         relations [h,e]=2e, [h,f]=-2f, [e,f]=h: ok\n\
         killing signature: (2, 1, 0)\n\
         bridge sign: -1\n\
         odd part: constants, parity 1\n\
         verdict: sl(2)\n"
    );
    let v = json(&["sl2", "--H", "1"]);
    assert_eq!(v["verdict"], "sl(2)");
    assert_eq!(v["witness"]["verified"], true);
    assert_eq!(run(&["sl2", "--H", "2"]).0, 1);
}

#[test]
fn verify_and_csv() {
    let dir = std::env::temp_dir().join(format!("linsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("res.csv");
    let p = path.to_str().unwrap();
    let (code, out, _) = run(&["verify", "--H", "1", "--w", "sin(2*x)", "--step", "1e-2", "--csv", p]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("transport: ok\n"));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 101);
    let (code, out, _) = run(&["verify", "--H", "1", "--w", "sin(x)", "--step", "1e-2"]);
    assert_eq!(code, 1);
    assert!(out.ends_with("transport: FAILED\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn compare_ltilde_table() {
    let (code, out, _) = run(&["compare-ltilde", "--H", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("derived  sin(2*x)"), "{out}");
    let v = json(&["compare-ltilde", "--H", "1", "--step", "1e-2"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_linsym");
    let ok = Command::new(bin).args(["adjoint", "--op", "D"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "-D\n");
    let no = Command::new(bin).args(["check", "--L", "D^2+H", "--delta", "D"]).output().unwrap();
    assert_eq!(no.status.code(), Some(1));
    let bad = Command::new(bin).args(["adjoint", "--op", "D^"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
}
