//! SVG drawing of a canonical optimal set over the nested cell triangles.

use std::fmt::Write as _;
use std::io::Write;

use rquant_core::{canonical_spec, optimal_set, SelfSimilarMeasure};

use crate::{Failure, RenderArgs};

pub const MAX_RENDER_DEPTH: u32 = 8;
pub const MIN_RENDER_WIDTH: u32 = 64;

/// Maps measure coordinates to pixels with the y-axis pointing up.
struct Frame {
    margin: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(width: u32, extent: [f64; 2]) -> Self {
        let margin = 0.05 * width as f64;
        let scale = (width as f64 - 2.0 * margin) / extent[0];
        let height = (2.0 * margin + scale * extent[1]).ceil();
        Frame { margin, scale, height }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.margin + p[0] * self.scale,
            self.height - self.margin - p[1] * self.scale,
        )
    }
}

pub fn svg(n: u64, depth: u32, width: u32, radius: u32, labels: bool) -> Result<String, Failure> {
    if depth > MAX_RENDER_DEPTH {
        return Err(Failure::Usage(format!("depth must be at most {MAX_RENDER_DEPTH}")));
    }
    if width < MIN_RENDER_WIDTH {
        return Err(Failure::Usage(format!("width must be at least {MIN_RENDER_WIDTH}")));
    }
    if n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let measure = SelfSimilarMeasure::standard();
    let set = optimal_set(&canonical_spec(n))?;
    let root = measure.root().vertices.map(|v| v.to_f64());
    let extent = [
        root.iter().map(|v| v[0]).fold(f64::MIN, f64::max),
        root.iter().map(|v| v[1]).fold(f64::MIN, f64::max),
    ];
    let frame = Frame::new(width, extent);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{h}" viewBox="0 0 {width} {h}">"#,
        h = frame.height
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let mut level = vec![measure.root()];
    for k in 0..=depth {
        let stroke = (1.5 / (1.0 + k as f64)).max(0.25);
        writeln!(s, r##"<g fill="none" stroke="#555" stroke-width="{stroke:.3}">"##).unwrap();
        for cell in &level {
            let pts: Vec<String> = cell
                .vertices
                .iter()
                .map(|v| {
                    let (x, y) = frame.px(v.to_f64());
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            writeln!(s, r#"<polygon points="{}"/>"#, pts.join(" ")).unwrap();
        }
        writeln!(s, "</g>").unwrap();
        if k < depth {
            level = level.iter().flat_map(|c| measure.children(c)).collect();
        }
    }
    writeln!(s, r##"<g fill="#c0392b">"##).unwrap();
    for p in set.to_f64() {
        let (x, y) = frame.px(p);
        writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius}"/>"#).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    if labels {
        writeln!(s, r#"<g font-family="sans-serif" font-size="10" fill="black">"#).unwrap();
        for (i, p) in set.to_f64().into_iter().enumerate() {
            let (x, y) = frame.px(p);
            writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}">{}</text>"#,
                x + radius as f64 + 1.0,
                y - radius as f64 - 1.0,
                i + 1
            )
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}

pub fn run(a: &RenderArgs, out: &mut impl Write) -> Result<(), Failure> {
    let doc = svg(a.n, a.depth, a.width, a.radius, a.labels)?;
    std::fs::write(&a.out, doc).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", a.out.display())))?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circles_match_point_count() {
        for n in 1..=9 {
            let doc = svg(n, 2, 256, 3, false).unwrap();
            assert_eq!(doc.matches("<circle").count(), n as usize);
        }
    }

    #[test]
    fn triangle_count_per_depth() {
        let doc = svg(1, 3, 128, 3, false).unwrap();
        assert_eq!(doc.matches("<polygon").count(), 1 + 3 + 9 + 27);
    }

    #[test]
    fn y_axis_points_up() {
        // The apex (1/2, √3/2) must be drawn above the base.
        let f = Frame::new(200, [1.0, 3f64.sqrt() / 2.0]);
        assert!(f.px([0.5, 3f64.sqrt() / 2.0]).1 < f.px([0.5, 0.0]).1);
    }

    #[test]
    fn limits_enforced() {
        assert!(svg(3, 9, 256, 3, false).is_err());
        assert!(svg(3, 2, 63, 3, false).is_err());
        assert!(svg(0, 2, 256, 3, false).is_err());
    }
}
