// Bodies of the fuzz targets. Also `include!`d by the corpus replay test in
// crates/core/tests, so every checked-in seed runs under `cargo test`.

use jetflow::expr::Coords;
use jetflow::scalar::Dual;

/// Inputs past this size only slow the fuzzer down.
pub const MAX_INPUT: usize = 16 * 1024;

/// Printing a parsed tree and parsing it again gives the same tree.
pub fn parse_expr(data: &[u8]) {
    if data.len() > MAX_INPUT {
        return;
    }
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = jetflow::parse(src) {
        let printed = e.to_string();
        let again = jetflow::parse(&printed).unwrap_or_else(|err| panic!("{printed:?} does not reparse: {err}"));
        assert_eq!(again, e, "{printed:?}");
    }
}

/// First 24 bytes are the point `(t1, x1, x2)`, the rest an expression.
/// Plain and dual evaluation agree on success, value and failure.
pub fn eval_expr(data: &[u8]) {
    if data.len() < 24 || data.len() > MAX_INPUT {
        return;
    }
    let (head, tail) = data.split_at(24);
    let num = |k: usize| f64::from_le_bytes(head[8 * k..8 * k + 8].try_into().unwrap());
    let Ok(src) = std::str::from_utf8(tail) else {
        return;
    };
    let Ok(e) = jetflow::parse(src) else {
        return;
    };
    let (t, x) = ([num(0)], [num(1), num(2)]);
    let plain = e.eval_at(&Coords::new(&t, &x, &[]));
    let dt = [Dual::constant(t[0])];
    let dx = [Dual::variable(x[0]), Dual::constant(x[1])];
    let dual = e.eval_at(&Coords::new(&dt, &dx, &[]));
    match (plain, dual) {
        (Ok(a), Ok(b)) => assert!(a == b.re || (a.is_nan() && b.re.is_nan()), "{src:?}: {a} vs {}", b.re),
        (Err(_), Err(_)) => {}
        (a, b) => panic!("{src:?}: plain {a:?} but dual {b:?}"),
    }
}

/// Problem files either fail cleanly or survive a JSON round trip.
pub fn problem_file(data: &[u8]) {
    if data.len() > MAX_INPUT {
        return;
    }
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = jetflow::ProblemFile::from_json(src) else {
        return;
    };
    let back = jetflow::ProblemFile::from_json(&file.to_json()).expect("re-serialized problem file parses");
    assert_eq!(back, file);
    if let Ok(pr) = file.compile() {
        let _ = pr.initial_jet();
        let _ = pr.grid();
    }
}

/// Exported CSV and JSON solutions decode or fail without panicking.
pub fn solution_decode(data: &[u8]) {
    if data.len() > MAX_INPUT {
        return;
    }
    let _ = jetflow::export::read_csv(data);
    let _ = jetflow::export::read_trajectory_csv(data, "fuzz");
    if let Ok(src) = std::str::from_utf8(data) {
        if let Ok(sol) = jetflow::export::from_json(src) {
            let again = jetflow::export::from_json(&jetflow::export::to_json(&sol)).expect("re-encoded solution decodes");
            assert_eq!(again, sol);
        }
    }
}
