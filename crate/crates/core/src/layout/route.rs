//! Greedy left-edge channel router: horizontal tracks on metal3, vertical
//! drops on metal2, via stacks at bends. Each net occupies one track;
//! non-overlapping nets may share a track. Congestion is an error, not a
//! retry loop.

use std::collections::BTreeMap;
use std::fmt;

use crate::tech::Technology;

use super::{layer_key, Rect, Shape};

#[derive(Debug, Clone)]
pub struct ChannelPin {
    pub net: String,
    /// metal1 landing pad the drop connects to (at least via + enclosure).
    pub pad: Rect,
}

#[derive(Debug)]
pub struct RouteError {
    pub channel: String,
    pub tracks_needed: usize,
    pub capacity: usize,
}

impl fmt::Display for RouteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "channel `{}` congested: needs {} tracks, capacity {}",
            self.channel, self.tracks_needed, self.capacity
        )
    }
}

impl std::error::Error for RouteError {}

#[derive(Debug)]
pub struct ChannelResult {
    pub shapes: Vec<Shape>,
    pub tracks_used: usize,
}

const TRACK_W: i64 = 100; // metal3 track width, dbu
const TRACK_PITCH: i64 = 200;
const DROP_W: i64 = 70; // metal2 drop width
const VIA: i64 = 60;
const VIA_ENC: i64 = 20;

/// Route one horizontal channel occupying the y band [y0, y1).
pub fn route_channel(
    name: &str,
    tech: &Technology,
    y0: i64,
    y1: i64,
    pins: &[ChannelPin],
) -> Result<ChannelResult, RouteError> {
    let m2 = layer_key(tech, "metal2");
    let m3 = layer_key(tech, "metal3");
    let via1 = layer_key(tech, "via1");
    let via2 = layer_key(tech, "via2");

    // Net -> pad centers, deterministic order.
    let mut nets: BTreeMap<&str, Vec<&ChannelPin>> = BTreeMap::new();
    for p in pins {
        nets.entry(&p.net).or_default().push(p);
    }
    let mut intervals: Vec<(&str, i64, i64)> = nets
        .iter()
        .map(|(net, pads)| {
            let xs: Vec<i64> = pads.iter().map(|p| (p.pad.x0 + p.pad.x1) / 2).collect();
            (
                *net,
                *xs.iter().min().expect("net has pins"),
                *xs.iter().max().expect("net has pins"),
            )
        })
        .collect();
    intervals.sort_by_key(|(net, left, _)| (*left, *net));

    let capacity = (((y1 - y0 - TRACK_W).max(0)) / TRACK_PITCH + 1) as usize;
    let mut track_last_end: Vec<i64> = Vec::new();
    let mut assignment: BTreeMap<&str, usize> = BTreeMap::new();
    for (net, left, right) in &intervals {
        let slot = track_last_end
            .iter()
            .position(|&end| end + 2 * TRACK_PITCH <= *left);
        match slot {
            Some(t) => {
                track_last_end[t] = *right;
                assignment.insert(net, t);
            }
            None => {
                track_last_end.push(*right);
                assignment.insert(net, track_last_end.len() - 1);
            }
        }
    }
    if track_last_end.len() > capacity {
        return Err(RouteError {
            channel: name.to_string(),
            tracks_needed: track_last_end.len(),
            capacity,
        });
    }

    let mut shapes = Vec::new();
    for (net, left, right) in &intervals {
        let t = assignment[net];
        let ty = y0 + t as i64 * TRACK_PITCH;
        // Track segment with via landing slack at both ends.
        shapes.push(Shape {
            layer: m3,
            rect: Rect::new(left - TRACK_W / 2, ty, right + TRACK_W / 2, ty + TRACK_W),
        });
        for pin in &nets[net] {
            let cx = (pin.pad.x0 + pin.pad.x1) / 2;
            let cy = (pin.pad.y0 + pin.pad.y1) / 2;
            let track_mid = ty + TRACK_W / 2;
            // Vertical metal2 drop from pad to track.
            let (dy0, dy1) = if cy < track_mid { (cy, track_mid) } else { (track_mid, cy) };
            shapes.push(Shape {
                layer: m2,
                rect: Rect::new(cx - DROP_W / 2, dy0 - DROP_W / 2, cx + DROP_W / 2, dy1 + DROP_W / 2),
            });
            // via1 pad + cut at the pin.
            let pad_half = VIA / 2 + VIA_ENC;
            shapes.push(Shape {
                layer: m2,
                rect: Rect::new(cx - pad_half, cy - pad_half, cx + pad_half, cy + pad_half),
            });
            shapes.push(Shape {
                layer: via1,
                rect: Rect::new(cx - VIA / 2, cy - VIA / 2, cx + VIA / 2, cy + VIA / 2),
            });
            // via2 pad + cut at the track.
            shapes.push(Shape {
                layer: m2,
                rect: Rect::new(
                    cx - pad_half,
                    track_mid - pad_half,
                    cx + pad_half,
                    track_mid + pad_half,
                ),
            });
            shapes.push(Shape {
                layer: via2,
                rect: Rect::new(
                    cx - VIA / 2,
                    track_mid - VIA / 2,
                    cx + VIA / 2,
                    track_mid + VIA / 2,
                ),
            });
        }
    }
    Ok(ChannelResult {
        shapes,
        tracks_used: track_last_end.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tech::Technology;

    fn pin(net: &str, x: i64, y: i64) -> ChannelPin {
        ChannelPin {
            net: net.to_string(),
            pad: Rect::new(x - 55, y - 55, x + 55, y + 55),
        }
    }

    #[test]
    fn disjoint_nets_share_a_track() {
        let tech = Technology::generic45();
        let pins = vec![
            pin("a", 1000, 0),
            pin("a", 3000, 0),
            pin("b", 9000, 0),
            pin("b", 12000, 0),
        ];
        let r = route_channel("test", &tech, 1000, 2000, &pins).unwrap();
        assert_eq!(r.tracks_used, 1);
        assert!(!r.shapes.is_empty());
    }

    #[test]
    fn overlapping_nets_use_separate_tracks() {
        let tech = Technology::generic45();
        let pins = vec![
            pin("a", 1000, 0),
            pin("a", 9000, 0),
            pin("b", 2000, 0),
            pin("b", 8000, 0),
        ];
        let r = route_channel("test", &tech, 1000, 2000, &pins).unwrap();
        assert_eq!(r.tracks_used, 2);
    }

    #[test]
    fn congestion_is_reported() {
        let tech = Technology::generic45();
        // Band fits 1 track; three mutually overlapping nets need 3.
        let mut pins = Vec::new();
        for (i, net) in ["a", "b", "c"].iter().enumerate() {
            pins.push(pin(net, 1000 + i as i64 * 100, 0));
            pins.push(pin(net, 9000 + i as i64 * 100, 0));
        }
        let e = route_channel("ctl", &tech, 1000, 1150, &pins).unwrap_err();
        assert_eq!(e.channel, "ctl");
        assert_eq!(e.tracks_needed, 3);
        assert_eq!(e.capacity, 1);
    }

    #[test]
    fn routing_is_deterministic() {
        let tech = Technology::generic45();
        let pins = vec![
            pin("x", 1000, 0),
            pin("x", 5000, 0),
            pin("y", 2000, 0),
            pin("y", 7000, 0),
        ];
        let a = route_channel("c", &tech, 0, 1000, &pins).unwrap();
        let b = route_channel("c", &tech, 0, 1000, &pins).unwrap();
        assert_eq!(a.shapes.len(), b.shapes.len());
        for (p, q) in a.shapes.iter().zip(&b.shapes) {
            assert_eq!(p, q);
        }
    }
}
