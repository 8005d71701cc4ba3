use selfaffine_core::dimension::DimensionEstimate;
use selfaffine_core::Result;
use std::fmt::Write;
use std::path::Path;

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Scatter of `log₂ count` against level with each estimate's fitted line.
/// Assouad scans plot only the rows of the reported coarse level.
pub fn write_svg(path: &Path, est: &[DimensionEstimate]) -> Result<()> {
    let series: Vec<Vec<(f64, f64)>> = est
        .iter()
        .map(|e| {
            e.table
                .iter()
                .filter(|r| e.table.iter().all(|x| x.k == r.k) || Some(r.k) == e.k)
                .map(|r| (r.n as f64, r.log2count))
                .collect()
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flatten().copied().collect();
    let (x0, x1) = bounds(all.iter().map(|p| p.0));
    let (y0, y1) = bounds(all.iter().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">level n</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">log2 count</text>"#, H / 2.0, H / 2.0);
    for (i, (e, pts)) in est.iter().zip(&series).enumerate() {
        let c = COLORS[i % COLORS.len()];
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#, sx(x), sy(y));
        }
        if !pts.is_empty() {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let (a, b) = (bounds(pts.iter().map(|p| p.0)).0, bounds(pts.iter().map(|p| p.0)).1);
            let line = |x: f64| my + e.value * (x - mx);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}"/>"#,
                sx(a),
                sy(line(a)),
                sx(b),
                sy(line(b))
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{c}">{} = {:.4}</text>"#,
            PAD + 8.0,
            PAD + 14.0 * (i as f64 + 1.0),
            e.method,
            e.value
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
