//! Scanline design-rule checking over flattened rectangle geometry.
//!
//! Checked rule kinds:
//! * MIN_WIDTH  — per-rect minimum dimension; rects wholly covered by other
//!   same-layer shapes are exempt (they cannot narrow the merged region).
//! * MIN_SPACING — same-layer pair search; touching shapes merge and are
//!   exempt; the gap metric is Chebyshev (both axis gaps under the rule).
//! * MIN_AREA   — merged area per connected component.
//! * ENCLOSURE  — layer_b shapes overlapping layer_a must sit inside the
//!   layer_a union with the stated margin (conditional-on-overlap).
//! * EXTENSION  — where layer_a crosses layer_b and pokes past its edge,
//!   the poke must reach the stated length (gate endcap style).

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::cmp::Reverse;

use crate::tech::{DesignRule, RuleKind, Technology};

use super::{flatten_shapes, LayoutCell, Rect};

#[derive(Debug, Clone)]
pub struct DrcViolation {
    pub rule: DesignRule,
    pub location: Rect,
    pub message: String,
}

impl DrcViolation {
    fn sort_key(&self) -> (u8, &str, Option<&str>, (i64, i64, i64, i64), &str) {
        let kind = match self.rule.kind {
            RuleKind::MinWidth => 0,
            RuleKind::MinSpacing => 1,
            RuleKind::MinArea => 2,
            RuleKind::Enclosure => 3,
            RuleKind::Extension => 4,
        };
        (
            kind,
            &self.rule.layer_a,
            self.rule.layer_b.as_deref(),
            (self.location.x0, self.location.y0, self.location.x1, self.location.y1),
            &self.message,
        )
    }
}

/// Uniform-grid spatial index over a rect slice.
struct RectIndex {
    bucket: i64,
    map: HashMap<(i64, i64), Vec<u32>>,
}

impl RectIndex {
    fn build(rects: &[Rect]) -> RectIndex {
        let bucket = 2000;
        let mut map: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, r) in rects.iter().enumerate() {
            for bx in r.x0.div_euclid(bucket)..=r.x1.div_euclid(bucket) {
                for by in r.y0.div_euclid(bucket)..=r.y1.div_euclid(bucket) {
                    map.entry((bx, by)).or_default().push(i as u32);
                }
            }
        }
        RectIndex { bucket, map }
    }

    fn query(&self, r: Rect) -> Vec<u32> {
        let mut out = Vec::new();
        for bx in r.x0.div_euclid(self.bucket)..=r.x1.div_euclid(self.bucket) {
            for by in r.y0.div_euclid(self.bucket)..=r.y1.div_euclid(self.bucket) {
                if let Some(v) = self.map.get(&(bx, by)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Exact union area of a rect set (coordinate-compressed slab sweep).
fn union_area(rects: &[Rect]) -> i128 {
    if rects.is_empty() {
        return 0;
    }
    let mut xs: Vec<i64> = rects.iter().flat_map(|r| [r.x0, r.x1]).collect();
    xs.sort_unstable();
    xs.dedup();
    let mut area: i128 = 0;
    for w in xs.windows(2) {
        let (xa, xb) = (w[0], w[1]);
        let mut ys: Vec<(i64, i64)> = rects
            .iter()
            .filter(|r| r.x0 <= xa && r.x1 >= xb)
            .map(|r| (r.y0, r.y1))
            .collect();
        ys.sort_unstable();
        let mut covered: i64 = 0;
        let mut cur: Option<(i64, i64)> = None;
        for (y0, y1) in ys {
            match cur {
                None => cur = Some((y0, y1)),
                Some((c0, c1)) => {
                    if y0 > c1 {
                        covered += c1 - c0;
                        cur = Some((y0, y1));
                    } else {
                        cur = Some((c0, c1.max(y1)));
                    }
                }
            }
        }
        if let Some((c0, c1)) = cur {
            covered += c1 - c0;
        }
        area += covered as i128 * (xb - xa) as i128;
    }
    area
}

/// Does the union of `rects` fully cover `target`?
fn covers(target: Rect, rects: &[Rect]) -> bool {
    let clipped: Vec<Rect> = rects
        .iter()
        .filter_map(|r| r.intersection(&target))
        .collect();
    union_area(&clipped) == target.area()
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, i: u32) -> u32 {
        let mut i = i;
        while self.parent[i as usize] != i {
            self.parent[i as usize] = self.parent[self.parent[i as usize] as usize];
            i = self.parent[i as usize];
        }
        i
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

/// Sweep over a layer, invoking `on_pair` for every pair of rects whose
/// Chebyshev separation is below `reach` (including touching pairs).
fn sweep_pairs(rects: &[Rect], reach: i64, mut on_pair: impl FnMut(usize, usize)) {
    if rects.is_empty() {
        return;
    }
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_unstable_by_key(|&i| (rects[i].x0, rects[i].y0, i));
    let max_h = rects.iter().map(|r| r.h()).max().unwrap_or(0);
    // Active set keyed by (y0, idx); eviction heap keyed by x1.
    let mut active: BTreeMap<(i64, usize), ()> = BTreeMap::new();
    let mut evict: BinaryHeap<Reverse<(i64, i64, usize)>> = BinaryHeap::new();
    for &i in &order {
        let r = rects[i];
        while let Some(&Reverse((x1, y0, j))) = evict.peek() {
            if x1 + reach < r.x0 {
                active.remove(&(y0, j));
                evict.pop();
            } else {
                break;
            }
        }
        let lo = (r.y0 - reach - max_h, 0usize);
        let hi = (r.y1 + reach, usize::MAX);
        for (&(_, j), _) in active.range(lo..=hi) {
            on_pair(j, i);
        }
        active.insert((r.y0, i), ());
        evict.push(Reverse((r.x1, r.y0, i)));
    }
}

fn gap_box(a: Rect, b: Rect) -> Rect {
    let gx0 = a.x1.min(b.x1).min(a.x0.max(b.x0));
    let gx1 = a.x0.max(b.x0).max(a.x1.min(b.x1));
    let gy0 = a.y1.min(b.y1).min(a.y0.max(b.y0));
    let gy1 = a.y0.max(b.y0).max(a.y1.min(b.y1));
    // Clamp to at least 1 dbu so the marker is drawable.
    Rect {
        x0: gx0,
        y0: gy0,
        x1: gx1.max(gx0 + 1),
        y1: gy1.max(gy0 + 1),
    }
}

/// Run all technology rules against a cell. Violations are data, sorted
/// deterministically; an empty list is a clean layout.
pub fn drc_check(
    cell: &LayoutCell,
    cells: &BTreeMap<&str, &LayoutCell>,
    tech: &Technology,
) -> Vec<DrcViolation> {
    // Bucket flattened shapes by layer name.
    let mut by_layer: BTreeMap<&str, Vec<Rect>> = BTreeMap::new();
    let key_to_name: HashMap<(u8, u8), &str> = tech
        .layers
        .iter()
        .map(|l| ((l.gds_layer, l.gds_datatype), l.name.as_str()))
        .collect();
    for s in flatten_shapes(cell, cells) {
        if let Some(name) = key_to_name.get(&(s.layer.layer, s.layer.datatype)) {
            by_layer.entry(name).or_default().push(s.rect);
        }
    }
    let empty: Vec<Rect> = Vec::new();
    let indices: BTreeMap<&str, RectIndex> = by_layer
        .iter()
        .map(|(k, v)| (*k, RectIndex::build(v)))
        .collect();

    let dbu = |um: f64| -> i64 { (um * tech.dbu_per_um as f64).round() as i64 };
    let mut violations: Vec<DrcViolation> = Vec::new();

    for rule in &tech.rules {
        let rects = by_layer.get(rule.layer_a.as_str()).unwrap_or(&empty);
        match rule.kind {
            RuleKind::MinWidth => {
                let w = dbu(rule.value);
                let Some(index) = indices.get(rule.layer_a.as_str()) else {
                    continue;
                };
                for (i, r) in rects.iter().enumerate() {
                    if r.min_dim() >= w {
                        continue;
                    }
                    let others: Vec<Rect> = index
                        .query(*r)
                        .into_iter()
                        .filter(|&j| j as usize != i)
                        .map(|j| rects[j as usize])
                        .collect();
                    if covers(*r, &others) {
                        continue; // fully redundant rect cannot narrow the region
                    }
                    violations.push(DrcViolation {
                        rule: rule.clone(),
                        location: *r,
                        message: format!(
                            "{}: width {:.3} um below minimum {} um",
                            rule.layer_a,
                            tech.to_um(r.min_dim()),
                            rule.value
                        ),
                    });
                }
            }
            RuleKind::MinSpacing => {
                // Spacing applies between distinct merged polygons; rects
                // linked through touching chains are one polygon.
                let s = dbu(rule.value);
                let mut uf = UnionFind::new(rects.len());
                let mut candidates: Vec<(usize, usize)> = Vec::new();
                sweep_pairs(rects, s, |i, j| {
                    if rects[i].touches(&rects[j]) {
                        uf.union(i as u32, j as u32);
                    } else {
                        candidates.push((i, j));
                    }
                });
                for (i, j) in candidates {
                    if uf.find(i as u32) == uf.find(j as u32) {
                        continue;
                    }
                    let (a, b) = (rects[i], rects[j]);
                    let gx = (a.x0.max(b.x0) - a.x1.min(b.x1)).max(0);
                    let gy = (a.y0.max(b.y0) - a.y1.min(b.y1)).max(0);
                    if gx < s && gy < s {
                        violations.push(DrcViolation {
                            rule: rule.clone(),
                            location: gap_box(a, b),
                            message: format!(
                                "{}: spacing {:.3} um below minimum {} um",
                                rule.layer_a,
                                tech.to_um(gx.max(gy)),
                                rule.value
                            ),
                        });
                    }
                }
            }
            RuleKind::MinArea => {
                let min_area =
                    (rule.value * tech.dbu_per_um as f64 * tech.dbu_per_um as f64).round() as i128;
                let mut uf = UnionFind::new(rects.len());
                sweep_pairs(rects, 0, |i, j| {
                    if rects[i].touches(&rects[j]) {
                        uf.union(i as u32, j as u32);
                    }
                });
                let mut groups: BTreeMap<u32, Vec<Rect>> = BTreeMap::new();
                for (i, r) in rects.iter().enumerate() {
                    groups.entry(uf.find(i as u32)).or_default().push(*r);
                }
                for group in groups.values() {
                    let area = union_area(group);
                    if area < min_area {
                        let bbox = group[1..]
                            .iter()
                            .fold(group[0], |acc, r| acc.union_bbox(r));
                        violations.push(DrcViolation {
                            rule: rule.clone(),
                            location: bbox,
                            message: format!(
                                "{}: merged area {:.4} um^2 below minimum {} um^2",
                                rule.layer_a,
                                area as f64 / (tech.dbu_per_um as f64).powi(2),
                                rule.value
                            ),
                        });
                    }
                }
            }
            RuleKind::Enclosure => {
                let v = dbu(rule.value);
                let layer_b = rule.layer_b.as_deref().unwrap_or("");
                let inner = by_layer.get(layer_b).unwrap_or(&empty);
                let outer_index = match indices.get(rule.layer_a.as_str()) {
                    Some(ix) => ix,
                    None => continue,
                };
                let outer = rects;
                for rb in inner {
                    let cand: Vec<Rect> = outer_index
                        .query(rb.expand(v))
                        .into_iter()
                        .map(|j| outer[j as usize])
                        .collect();
                    if !cand.iter().any(|ra| ra.overlaps(rb)) {
                        continue; // rule is conditional on overlap
                    }
                    if !covers(rb.expand(v), &cand) {
                        violations.push(DrcViolation {
                            rule: rule.clone(),
                            location: *rb,
                            message: format!(
                                "{} must enclose {} by {} um",
                                rule.layer_a, layer_b, rule.value
                            ),
                        });
                    }
                }
            }
            RuleKind::Extension => {
                let v = dbu(rule.value);
                let layer_b = rule.layer_b.as_deref().unwrap_or("");
                let inner = by_layer.get(layer_b).unwrap_or(&empty);
                let inner_index = match indices.get(layer_b) {
                    Some(ix) => ix,
                    None => continue,
                };
                for ra in rects.iter() {
                    for j in inner_index.query(*ra) {
                        let rb = inner[j as usize];
                        if !ra.overlaps(&rb) {
                            continue;
                        }
                        // Per-side poke length; 0 < poke < v is a violation
                        // unless the poked strip still lies on layer_b.
                        let oy0 = ra.y0.max(rb.y0);
                        let oy1 = ra.y1.min(rb.y1);
                        let ox0 = ra.x0.max(rb.x0);
                        let ox1 = ra.x1.min(rb.x1);
                        let sides: [(i64, Rect); 4] = [
                            (ra.x1 - rb.x1, Rect { x0: rb.x1, y0: oy0, x1: rb.x1 + v, y1: oy1 }),
                            (rb.x0 - ra.x0, Rect { x0: rb.x0 - v, y0: oy0, x1: rb.x0, y1: oy1 }),
                            (ra.y1 - rb.y1, Rect { x0: ox0, y0: rb.y1, x1: ox1, y1: rb.y1 + v }),
                            (rb.y0 - ra.y0, Rect { x0: ox0, y0: rb.y0 - v, x1: ox1, y1: rb.y0 }),
                        ];
                        for (poke, band) in sides {
                            if poke <= 0 || poke >= v {
                                continue;
                            }
                            // Exempt when the adjacent band is still covered
                            // by layer_b (e.g. abutted diff rects).
                            let others: Vec<Rect> = inner_index
                                .query(band)
                                .into_iter()
                                .map(|k| inner[k as usize])
                                .collect();
                            if covers(band, &others) {
                                continue;
                            }
                            violations.push(DrcViolation {
                                rule: rule.clone(),
                                location: band,
                                message: format!(
                                    "{} extends only {:.3} um past {} (minimum {} um)",
                                    rule.layer_a,
                                    tech.to_um(poke),
                                    layer_b,
                                    rule.value
                                ),
                            });
                        }
                    }
                }
            }
        }
    }

    violations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    violations.dedup_by(|a, b| a.sort_key() == b.sort_key());
    violations
}

/// Render violations as a stable text report (one line each).
pub fn format_violations(violations: &[DrcViolation], tech: &Technology) -> String {
    let mut out = String::new();
    for v in violations {
        out.push_str(&format!(
            "{} {} ({:.3},{:.3})-({:.3},{:.3}): {}\n",
            v.rule.kind.keyword(),
            v.rule.layer_a,
            tech.to_um(v.location.x0),
            tech.to_um(v.location.y0),
            tech.to_um(v.location.x1),
            tech.to_um(v.location.y1),
            v.message
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{layer_key, LayoutCell};
    use crate::tech::Technology;

    fn checked(cell: &LayoutCell, tech: &Technology) -> Vec<DrcViolation> {
        drc_check(cell, &BTreeMap::new(), tech)
    }

    #[test]
    fn spacing_one_dbu_short_is_exactly_one_violation() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        // metal1 min spacing is 0.08 um = 80 dbu; separate by 79.
        let mut cell = LayoutCell::new("t");
        cell.add_rect(m1, Rect::new(0, 0, 200, 200));
        cell.add_rect(m1, Rect::new(279, 0, 479, 200));
        cell.boundary = Rect::new(0, 0, 479, 200);
        let v = checked(&cell, &tech);
        assert_eq!(v.len(), 1, "{}", format_violations(&v, &tech));
        assert_eq!(v[0].rule.kind, RuleKind::MinSpacing);

        // At exactly the rule distance there is no violation.
        let mut cell = LayoutCell::new("t2");
        cell.add_rect(m1, Rect::new(0, 0, 200, 200));
        cell.add_rect(m1, Rect::new(280, 0, 480, 200));
        cell.boundary = Rect::new(0, 0, 480, 200);
        assert!(checked(&cell, &tech).is_empty());
    }

    #[test]
    fn touching_rects_do_not_trip_spacing() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        let mut cell = LayoutCell::new("t");
        cell.add_rect(m1, Rect::new(0, 0, 200, 200));
        cell.add_rect(m1, Rect::new(200, 0, 400, 200));
        cell.boundary = Rect::new(0, 0, 400, 200);
        assert!(checked(&cell, &tech).is_empty());
    }

    #[test]
    fn narrow_rect_is_one_width_violation() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        let mut cell = LayoutCell::new("t");
        // 0.05 x 0.3 um strip; min width 0.07, min area satisfied.
        cell.add_rect(m1, Rect::new(0, 0, 50, 300));
        cell.boundary = Rect::new(0, 0, 50, 300);
        let v = checked(&cell, &tech);
        assert_eq!(v.len(), 1, "{}", format_violations(&v, &tech));
        assert_eq!(v[0].rule.kind, RuleKind::MinWidth);
    }

    #[test]
    fn covered_sliver_is_exempt_from_width() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        let mut cell = LayoutCell::new("t");
        cell.add_rect(m1, Rect::new(0, 0, 400, 400));
        cell.add_rect(m1, Rect::new(100, 100, 150, 300)); // redundant sliver
        cell.boundary = Rect::new(0, 0, 400, 400);
        assert!(checked(&cell, &tech).is_empty());
    }

    #[test]
    fn small_island_trips_min_area() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        let mut cell = LayoutCell::new("t");
        // 0.07 x 0.07 = 0.0049 um^2 < 0.008 um^2.
        cell.add_rect(m1, Rect::new(0, 0, 70, 70));
        cell.boundary = Rect::new(0, 0, 70, 70);
        let v = checked(&cell, &tech);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule.kind, RuleKind::MinArea);

        // Two touching rects that together clear the threshold are fine.
        let mut cell = LayoutCell::new("t2");
        cell.add_rect(m1, Rect::new(0, 0, 70, 70));
        cell.add_rect(m1, Rect::new(70, 0, 200, 70));
        cell.boundary = Rect::new(0, 0, 200, 70);
        assert!(checked(&cell, &tech).is_empty());
    }

    #[test]
    fn enclosure_margin_enforced_conditionally() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        let ct = layer_key(&tech, "contact");
        // Contact with full 0.02 margin: clean.
        let mut cell = LayoutCell::new("t");
        cell.add_rect(ct, Rect::new(100, 100, 160, 160));
        cell.add_rect(m1, Rect::new(80, 80, 180, 180));
        cell.boundary = Rect::new(0, 0, 300, 300);
        assert!(checked(&cell, &tech).is_empty());

        // Short margin on one side: one enclosure violation.
        let mut cell = LayoutCell::new("t2");
        cell.add_rect(ct, Rect::new(100, 100, 160, 160));
        cell.add_rect(m1, Rect::new(90, 80, 180, 180));
        cell.boundary = Rect::new(0, 0, 300, 300);
        let v = checked(&cell, &tech);
        assert_eq!(v.len(), 1, "{}", format_violations(&v, &tech));
        assert_eq!(v[0].rule.kind, RuleKind::Enclosure);

        // A contact nowhere near metal1 triggers nothing (conditional).
        let mut cell = LayoutCell::new("t3");
        cell.add_rect(ct, Rect::new(100, 100, 160, 160));
        cell.boundary = Rect::new(0, 0, 300, 300);
        assert!(checked(&cell, &tech).is_empty());
    }

    #[test]
    fn gate_endcap_extension() {
        let tech = Technology::generic45();
        let poly = layer_key(&tech, "poly");
        let diff = layer_key(&tech, "diff");
        // Poly crossing diff with 0.05 endcaps both sides: clean.
        let mut cell = LayoutCell::new("t");
        cell.add_rect(diff, Rect::new(0, 100, 300, 200));
        cell.add_rect(poly, Rect::new(120, 50, 170, 250));
        cell.boundary = Rect::new(0, 0, 300, 300);
        assert!(checked(&cell, &tech).is_empty());

        // 0.03 endcap on top: violation.
        let mut cell = LayoutCell::new("t2");
        cell.add_rect(diff, Rect::new(0, 100, 300, 200));
        cell.add_rect(poly, Rect::new(120, 50, 170, 230));
        cell.boundary = Rect::new(0, 0, 300, 300);
        let v = checked(&cell, &tech);
        assert_eq!(v.len(), 1, "{}", format_violations(&v, &tech));
        assert_eq!(v[0].rule.kind, RuleKind::Extension);
    }

    #[test]
    fn invariant_under_translation_and_order() {
        let tech = Technology::generic45();
        let m1 = layer_key(&tech, "metal1");
        let rects = [
            Rect::new(0, 0, 200, 200),
            Rect::new(250, 0, 450, 200),
            Rect::new(0, 300, 50, 600),
        ];
        let mut base = LayoutCell::new("a");
        for r in rects {
            base.add_rect(m1, r);
        }
        base.boundary = Rect::new(0, 0, 600, 600);
        let v_base = checked(&base, &tech);

        let mut shifted = LayoutCell::new("b");
        for r in rects.iter().rev() {
            shifted.add_rect(m1, r.translate(12345, -9876));
        }
        shifted.boundary = Rect::new(0, 0, 600, 600).translate(12345, -9876);
        let v_shift = checked(&shifted, &tech);
        assert_eq!(v_base.len(), v_shift.len());
        for (a, b) in v_base.iter().zip(&v_shift) {
            assert_eq!(a.rule.kind, b.rule.kind);
            assert_eq!(a.location.translate(12345, -9876), b.location);
        }
    }
}
