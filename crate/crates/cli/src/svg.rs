//! Minimal SVG rendering of a basin heatmap.

use std::fmt::Write;

use dcomp_core::basin::Heatmap;

const CELL: f64 = 12.0;
const MARGIN: f64 = 48.0;

/// Red for a Blue fraction of 0, blue for 1, white at one half.
fn colour(v: f64) -> String {
    if !v.is_finite() {
        return "#808080".into();
    }
    let v = v.clamp(0.0, 1.0);
    let (r, g, b) = if v < 0.5 {
        let s = v / 0.5;
        (255.0, 255.0 * s, 255.0 * s)
    } else {
        let s = (1.0 - v) / 0.5;
        (255.0 * s, 255.0 * s, 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

pub fn heatmap(map: &Heatmap) -> String {
    let (nx, ny) = (map.x.len(), map.y.len());
    let w = nx as f64 * CELL + 2.0 * MARGIN;
    let h = ny as f64 * CELL + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    for (iy, row) in map.values.iter().enumerate() {
        // First y value at the bottom.
        let y = MARGIN + (ny - 1 - iy) as f64 * CELL;
        for (ix, v) in row.iter().enumerate() {
            let x = MARGIN + ix as f64 * CELL;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>{}={:.4}, {}={:.4}: {:.3}</title></rect>"#,
                colour(*v),
                map.x_param,
                map.x[ix],
                map.y_param,
                map.y[iy],
                v
            );
        }
    }
    let bottom = MARGIN + ny as f64 * CELL;
    let right = MARGIN + nx as f64 * CELL;
    let fmt = |v: Option<&f64>| v.map(|v| format!("{v:.3}")).unwrap_or_default();
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}">{}</text>"#,
        bottom + 16.0,
        fmt(map.x.first())
    );
    let _ = writeln!(
        s,
        r#"<text x="{right}" y="{}" text-anchor="end">{}</text>"#,
        bottom + 16.0,
        fmt(map.x.last())
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        bottom + 34.0,
        map.x_param
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{bottom}" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        fmt(map.y.first())
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        MARGIN + 10.0,
        fmt(map.y.last())
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        h / 2.0,
        h / 2.0,
        map.y_param
    );
    s.push_str("</svg>\n");
    s
}
