//! Minimal static SVG writer for Shmoo grids and sweep charts. Output is
//! plain SVG 1.1 text with deterministic formatting.

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn num(x: f64) -> String {
    // Two decimals is plenty for plot coordinates and keeps bytes stable.
    format!("{:.2}", x)
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Svg {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n",
            num(x),
            num(y),
            num(w),
            num(h),
            fill,
            stroke
        ));
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, stroke: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n",
            num(cx),
            num(cy),
            num(r),
            fill,
            stroke
        ));
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            stroke,
            num(width)
        ));
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let escaped = content
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"monospace\" text-anchor=\"{}\">{}</text>\n",
            num(x),
            num(y),
            num(size),
            anchor,
            escaped
        ));
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
             width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n{}</svg>\n",
            num(self.width),
            num(self.height),
            num(self.width),
            num(self.height),
            num(self.width),
            num(self.height),
            self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_output_is_deterministic_and_well_formed() {
        let build = || {
            let mut s = Svg::new(100.0, 50.0);
            s.rect(1.0, 2.0, 3.0, 4.0, "black", "none");
            s.circle(10.0, 10.0, 2.5, "none", "red");
            s.text(5.0, 5.0, 8.0, "middle", "a<b");
            s.finish()
        };
        let a = build();
        assert_eq!(a, build());
        assert!(a.starts_with("<?xml"));
        assert!(a.ends_with("</svg>\n"));
        assert!(a.contains("&lt;"));
    }
}
