//! Property tests: structural invariants checked over generated inputs.

use std::collections::BTreeMap;

use proptest::prelude::*;

use gcram::config::{resolve_geometry, words_per_row_candidates, CellVariant, MemoryConfig};
use gcram::layout::{drc_check, layer_key, read_gds, write_gds, GdsLibrary, LayoutCell, Orient, Rect};
use gcram::netlist::{flatten, Device, Library, Subckt};
use gcram::tech::{device_current, Technology};

fn tech() -> Technology {
    Technology::generic45()
}

proptest! {
    // AUTO words_per_row equals the exhaustive argmin over candidates.
    #[test]
    fn auto_words_per_row_is_argmin(
        ws_exp in 0u32..7,
        nw_exp in 1u32..9,
        cell_w in 0.2f64..2.0,
        cell_h in 0.2f64..2.0,
    ) {
        let word_size = 1u32 << ws_exp;
        let num_words = 1u32 << nw_exp;
        let cfg = MemoryConfig::new(word_size, num_words, CellVariant::SiSiNn);
        let g = resolve_geometry(&cfg, cell_w, cell_h).unwrap();
        let mut best = None;
        let mut best_gap = f64::INFINITY;
        for wpr in words_per_row_candidates(num_words) {
            let gap = ((word_size * wpr) as f64 * cell_w
                - (num_words / wpr) as f64 * cell_h).abs();
            if gap < best_gap {
                best_gap = gap;
                best = Some(wpr);
            }
        }
        prop_assert_eq!(g.words_per_row, best.unwrap());
        prop_assert_eq!(g.rows * g.cols, word_size * num_words);
    }

    // Flattening preserves the terminal-to-net incidence multiset: every
    // leaf device appears exactly once and its arity is unchanged.
    #[test]
    fn flatten_preserves_device_incidence(
        n_leaf_devices in 1usize..6,
        n_instances in 1usize..5,
        n_levels in 1usize..3,
    ) {
        let mut lib = Library::new();
        let mut leaf = Subckt::new("leaf", &["a", "b", "vdd", "gnd"]);
        for i in 0..n_leaf_devices {
            leaf.add_device(Device::mos(
                &format!("m{i}"),
                "a",
                &format!("net{i}"),
                "b",
                "gnd",
                "nmos_si",
                0.1,
                0.05,
            ));
        }
        lib.add(leaf);
        let mut prev = "leaf".to_string();
        for level in 0..n_levels {
            let name = format!("mid{level}");
            let mut mid = Subckt::new(&name, &["a", "b", "vdd", "gnd"]);
            for i in 0..n_instances {
                let inner = format!("w{i}");
                mid.add_instance(&format!("x{i}"), &prev, &["a", &inner, "vdd", "gnd"]);
            }
            lib.add(mid);
            prev = name;
        }
        let top = lib.get(&prev).unwrap().clone();
        let flat = flatten(&top, &lib).unwrap();
        let expected = n_leaf_devices * n_instances.pow(n_levels as u32);
        prop_assert_eq!(flat.devices.len(), expected);
        for d in &flat.devices {
            prop_assert_eq!(d.terminals.len(), 4);
        }
    }

    // GDS write -> read -> write is byte-identical for arbitrary rect sets
    // and placements in the supported orientation set.
    #[test]
    fn gds_round_trip_arbitrary(
        rects in prop::collection::vec((0i64..100_000, 0i64..100_000, 1i64..5_000, 1i64..5_000), 1..30),
        orient_idx in prop::collection::vec(0usize..6, 0..8),
    ) {
        let t = tech();
        let m1 = layer_key(&t, "metal1");
        let mut lib = GdsLibrary::new("prop", 1000);
        let mut leaf = LayoutCell::new("leaf");
        leaf.add_rect(m1, Rect::new(0, 0, 100, 200));
        leaf.boundary = Rect::new(0, 0, 100, 200);
        lib.add(leaf);
        let mut cell = LayoutCell::new("c");
        for &(x, y, w, h) in &rects {
            cell.add_rect(m1, Rect::new(x, y, x + w, y + h));
        }
        let orients = [Orient::R0, Orient::R90, Orient::R180, Orient::R270, Orient::Mx, Orient::My];
        for (i, &oi) in orient_idx.iter().enumerate() {
            cell.place("leaf", i as i64 * 1000, 0, orients[oi]);
        }
        cell.boundary = Rect::new(0, 0, 200_000, 200_000);
        lib.add(cell);
        let first = write_gds(&lib).unwrap();
        let back = read_gds(&first).unwrap();
        let second = write_gds(&back).unwrap();
        prop_assert_eq!(first, second);
    }

    // DRC results are invariant under global translation and under the
    // order rectangles are listed in.
    #[test]
    fn drc_translation_and_order_invariance(
        rects in prop::collection::vec((0i64..4_000, 0i64..4_000, 40i64..400, 40i64..400), 1..12),
        dx in -100_000i64..100_000,
        dy in -100_000i64..100_000,
        seed in 0u64..1000,
    ) {
        let t = tech();
        let m1 = layer_key(&t, "metal1");
        let empty = BTreeMap::new();
        let mut base = LayoutCell::new("a");
        for &(x, y, w, h) in &rects {
            base.add_rect(m1, Rect::new(x, y, x + w, y + h));
        }
        base.boundary = Rect::new(0, 0, 10_000, 10_000);
        let v_base = drc_check(&base, &empty, &t);

        // Shuffle deterministically from the seed, then translate.
        let mut order: Vec<usize> = (0..rects.len()).collect();
        let mut state = seed.wrapping_add(1);
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let mut moved = LayoutCell::new("b");
        for &i in &order {
            let (x, y, w, h) = rects[i];
            moved.add_rect(m1, Rect::new(x + dx, y + dy, x + w + dx, y + h + dy));
        }
        moved.boundary = Rect::new(dx, dy, 10_000 + dx, 10_000 + dy);
        let v_moved = drc_check(&moved, &empty, &t);

        prop_assert_eq!(v_base.len(), v_moved.len());
        let mut base_locs: Vec<Rect> = v_base.iter().map(|v| v.location.translate(dx, dy)).collect();
        let mut moved_locs: Vec<Rect> = v_moved.iter().map(|v| v.location).collect();
        base_locs.sort();
        moved_locs.sort();
        prop_assert_eq!(base_locs, moved_locs);
    }

    // The device model stays monotone in vgs and vds over random bias
    // points, for every bundled model.
    #[test]
    fn device_current_monotone(
        vgs in -0.5f64..1.5,
        dv in 0.001f64..0.5,
        vds in 0.05f64..1.5,
        w in 0.1f64..5.0,
    ) {
        let t = tech();
        for m in t.devices.values() {
            let i1 = device_current(m, vgs, vds, w, 300.0);
            let i2 = device_current(m, vgs + dv, vds, w, 300.0);
            prop_assert!(i2 >= i1, "{}: vgs monotonicity", m.name);
            let i3 = device_current(m, vgs, vds + dv, w, 300.0);
            prop_assert!(i3 >= i1, "{}: vds monotonicity", m.name);
        }
    }

    // Config parse -> serialize -> parse is semantically the identity.
    #[test]
    fn config_round_trip(
        ws_exp in 0u32..8,
        nw_exp in 1u32..10,
        vdd in 0.8f64..1.4,
        vt_off in 0.0f64..0.2,
        ls in any::<bool>(),
    ) {
        let mut cfg = MemoryConfig::new(1 << ws_exp, 1 << nw_exp, CellVariant::SiSiNn);
        cfg.vdd = vdd;
        cfg.vwwl_boost = vdd + 0.4;
        cfg.write_vt_offset = vt_off;
        cfg.wwl_level_shifter = ls;
        let again = gcram::config::parse_config(&cfg.to_text()).unwrap();
        prop_assert_eq!(cfg.word_size, again.word_size);
        prop_assert_eq!(cfg.num_words, again.num_words);
        prop_assert_eq!(cfg.vdd, again.vdd);
        prop_assert_eq!(cfg.write_vt_offset, again.write_vt_offset);
        prop_assert_eq!(cfg.wwl_level_shifter, again.wwl_level_shifter);
    }
}
