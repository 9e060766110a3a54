//! Number formatting and file emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Nine significant digits, in the style of C's `%.9g`.
pub fn fmt_g(v: f64) -> String {
    const P: i32 = 9;
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    write_text(dir, name, &(to_json(value)? + "\n"))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(format!("serialization: {e}")))
}

/// Header line followed by one comma-separated row per entry.
pub fn csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_g).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Scatter of measured speeds over the theoretical curve.
pub fn sweep_svg(c_het: &[f64], theory: &[Option<f64>], measured: &[Option<f64>]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let finite = |v: &[Option<f64>]| v.iter().flatten().copied().filter(|y| y.is_finite()).collect::<Vec<_>>();
    let ys: Vec<f64> = finite(theory).into_iter().chain(finite(measured)).collect();
    let (x0, x1) = bounds(c_het);
    let (mut y0, y1) = bounds(&ys);
    y0 = y0.min(0.0);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        t = m,
        b = h - m,
        r = w - m
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{b5}" stroke="black"/><text x="{px:.2}" y="{bt}" text-anchor="middle">{}</text>"#,
            tick(xv),
            b = h - m,
            b5 = h - m + 5.0,
            bt = h - m + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{l5}" y1="{py:.2}" x2="{m}" y2="{py:.2}" stroke="black"/><text x="{lt}" y="{py:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            tick(yv),
            l5 = m - 5.0,
            lt = m - 8.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">c_het</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">spreading speed</text>"#,
        h / 2.0,
        h / 2.0
    );
    // Break the theory curve wherever it is undefined.
    let mut segment = Vec::new();
    let flush = |seg: &mut Vec<String>, s: &mut String| {
        if seg.len() > 1 {
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#6a3d9a" stroke-width="2"/>"##,
                seg.join(" ")
            );
        }
        seg.clear();
    };
    for (x, y) in c_het.iter().zip(theory) {
        match y {
            Some(y) if y.is_finite() => segment.push(format!("{:.2},{:.2}", sx(*x), sy(*y))),
            _ => flush(&mut segment, &mut s),
        }
    }
    flush(&mut segment, &mut s);
    for (x, y) in c_het.iter().zip(measured) {
        if let Some(y) = y.filter(|y| y.is_finite()) {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="#e7298a" stroke-width="1.5"/>"##,
                sx(*x),
                sy(y)
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<text x="{lx}" y="{ly}" fill="#6a3d9a">theory</text><text x="{lx}" y="{ly2}" fill="#e7298a">simulation</text>"##,
        lx = w - m - 80.0,
        ly = m,
        ly2 = m + 16.0
    );
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    trim_zeros(&s).to_string()
}
