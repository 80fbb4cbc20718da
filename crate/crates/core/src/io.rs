//! Text emitters shared by the CLI: CSV with 12 significant digits.

use std::fmt::Write as _;

use crate::operator::TruncatedOperator;
use crate::phase_space::GridFunction;

/// Scientific notation with 12 significant digits.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// Multi-index as `a;b;c`.
pub fn index_label(a: &[usize]) -> String {
    a.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";")
}

/// Columns q, p, re, im.
pub fn grid_csv(f: &GridFunction) -> String {
    let mut s = String::from("q,p,re,im\n");
    for (a, &q) in f.grid.q.nodes.iter().enumerate() {
        for (b, &p) in f.grid.p.nodes.iter().enumerate() {
            let z = f.at(a, b);
            let _ = writeln!(s, "{},{},{},{}", num(q), num(p), num(z.re), num(z.im));
        }
    }
    s
}

/// Columns row, col, re, im for every entry, rows given as multi-indices.
pub fn operator_csv(t: &TruncatedOperator) -> String {
    let mut s = String::from("row,col,re,im\n");
    for r in 0..t.dim() {
        let rl = index_label(&t.cfg.unflatten(r));
        for c in 0..t.dim() {
            let z = t.mat[(r, c)];
            let _ = writeln!(
                s,
                "{},{},{},{}",
                rl,
                index_label(&t.cfg.unflatten(c)),
                num(z.re),
                num(z.im)
            );
        }
    }
    s
}

/// Arbitrary table: header plus rows of preformatted cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
