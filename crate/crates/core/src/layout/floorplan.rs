//! Bank floorplan per the two-port architecture: bitcell array at the
//! center (row/column abutment), write-port address block on the left,
//! read-port address block on the right (mirrored tiles), write data
//! below, read data above, control blocks in the corners. Signals
//! distribute over vertical metal2 lines and horizontal metal3 channel
//! tracks; power rings (metal3) close the core, with a second vwwl ring
//! when the level shifter is enabled.

use crate::bankgen::{BankDesign, PinRole};
use crate::cellgen::{TileSide, CELL_H, PAD_BAND};
use crate::config::CellVariant;
use crate::tech::Technology;

use super::route::{route_channel, ChannelPin, RouteError};
use super::{layer_key, LayerKey, LayoutCell, Orient, Pin, Rect};

const T: i64 = 620; // tile width
const BUS_PITCH: i64 = 620;
const RING_W: i64 = 300;
const RING_GAP: i64 = 300;
/// Clearance between the array edge and the data strips (keeps cell wells
/// clear of tile wells).
const STRIP_GAP: i64 = 400;

struct Plan<'t> {
    #[allow(dead_code)]
    tech: &'t Technology,
    bank: LayoutCell,
    m1: LayerKey,
    m2: LayerKey,
    m3: LayerKey,
    via1: LayerKey,
    via2: LayerKey,
}

impl<'t> Plan<'t> {
    fn new(tech: &'t Technology) -> Plan<'t> {
        Plan {
            tech,
            bank: LayoutCell::new("bank"),
            m1: layer_key(tech, "metal1"),
            m2: layer_key(tech, "metal2"),
            m3: layer_key(tech, "metal3"),
            via1: layer_key(tech, "via1"),
            via2: layer_key(tech, "via2"),
        }
    }

    /// Free-standing metal1 landing pad (channel source terminals).
    fn source_pad(&mut self, x: i64, y: i64) -> Rect {
        let r = Rect::new(x, y, x + 100, y + 100);
        self.bank.add_rect(self.m1, r);
        r
    }

    /// via1 cut plus enclosing metal2 patch over an m1 pad.
    fn via1_on_pad(&mut self, pad: Rect) {
        let cx = (pad.x0 + pad.x1) / 2;
        let cy = (pad.y0 + pad.y1) / 2;
        self.bank
            .add_rect(self.via1, Rect::new(cx - 30, cy - 30, cx + 30, cy + 30));
        self.bank
            .add_rect(self.m2, Rect::new(cx - 50, cy - 50, cx + 50, cy + 50));
    }

    /// Vertical metal2 line.
    fn m2_v(&mut self, x: i64, y0: i64, y1: i64) {
        self.bank.add_rect(self.m2, Rect::new(x - 35, y0, x + 35, y1));
    }

    /// Absolute pad rect of a placed tile pin.
    fn placed_pin(tile: &LayoutCell, pin: &str, dx: i64, dy: i64, orient: Orient) -> Rect {
        let p = tile
            .pin(pin)
            .unwrap_or_else(|| panic!("tile `{}` lacks pin `{pin}`", tile.name))
            .rect;
        orient.apply_rect(p).translate(dx, dy)
    }
}

/// Compute the floorplanned bank layout for a built design.
pub fn floorplan_bank(design: &BankDesign, tech: &Technology) -> Result<LayoutCell, RouteError> {
    let mut plan = Plan::new(tech);
    let g = design.geometry;
    let cw = design.spec.cell_w();
    let rows = g.rows as i64;
    let cols = g.cols as i64;
    let sram = design.config.cell_variant == CellVariant::Sram6t;
    let os = design.config.cell_variant == CellVariant::OsOs;
    let array_w = cols * cw;
    let array_h = rows * CELL_H;

    let tile = |name: &str| -> &LayoutCell {
        design
            .layouts
            .get(name)
            .unwrap_or_else(|| panic!("missing layout for `{name}`"))
    };

    // ------------------------------------------------------------- array
    let cell_name = design.spec.cell_name();
    for r in 0..rows {
        for c in 0..cols {
            plan.bank.place(&cell_name, c * cw, r * CELL_H, Orient::R0);
        }
    }

    // ------------------------------------- address strips (left / right)
    let side = if sram { TileSide::SramPort } else { TileSide::WritePort };
    let band = side.band();
    let dec_name = format!("decoder{}", g.addr_bits_row);
    let and_name = gate_tile_name(design, "and2");
    let w_chain = design
        .sizing_report
        .iter()
        .find(|(n, _)| n == "wwl_driver" || n == "wl_driver")
        .map(|(_, c)| c.stages)
        .unwrap_or(2) as i64;
    let ls_tiles = if design.config.wwl_level_shifter && !sram { 1 } else { 0 };
    let left_tiles = 2 + w_chain + ls_tiles; // decoder, enable AND, chain, shifter
    let left_w = left_tiles * T;

    let mut train: Vec<String> = vec![dec_name.clone(), and_name.clone()];
    for (name, chain) in &design.sizing_report {
        if name == "wwl_driver" || name == "wl_driver" {
            for w in &chain.widths {
                train.push(crate::cellgen::gate_name(crate::cellgen::GateKind::Inv, *w));
            }
        }
    }
    if ls_tiles == 1 {
        train.push("wwl_level_shifter".to_string());
    }
    for r in 0..rows {
        let y = r * CELL_H;
        for (i, name) in train.iter().enumerate() {
            let x = -left_w + i as i64 * T;
            plan.bank.place(name, x, y, Orient::R0);
        }
        if os {
            // Bridge the m1 driver stub onto the cell's metal2 rail.
            let pad = Rect::new(-160, y + band.0 - 15, -20, y + band.1 + 15);
            plan.bank.add_rect(plan.m1, pad);
            plan.via1_on_pad(pad);
            plan.bank
                .add_rect(plan.m2, Rect::new(-140, y + band.0, 20, y + band.1));
        }
    }
    // Write-enable line down the AND column.
    let en_x = -left_w + T + 110;
    let and_tile = tile(&and_name).clone();
    for r in 0..rows {
        let pad = Plan::placed_pin(&and_tile, "pad0", -left_w + T, r * CELL_H, Orient::R0);
        plan.via1_on_pad(pad);
    }

    // Read-port strip mirrors on the right (gain-cell banks only).
    let mut read_train: Vec<String> = Vec::new();
    if !sram {
        read_train.push(dec_name.clone());
        read_train.push(and_name.clone());
        for (name, chain) in &design.sizing_report {
            if name == "rwl_driver" {
                for w in &chain.widths {
                    read_train.push(crate::cellgen::gate_name(crate::cellgen::GateKind::Inv, *w));
                }
            }
        }
        for r in 0..rows {
            let y = r * CELL_H;
            for (i, name) in read_train.iter().enumerate() {
                // MY mirror: tile [0, T] maps to [dx - T, dx].
                let dx = array_w + (i + 1) as i64 * T;
                plan.bank.place(name, dx, y, Orient::My);
            }
            if os {
                let rb = TileSide::ReadPort.band();
                let pad = Rect::new(array_w + 20, y + rb.0 - 15, array_w + 160, y + rb.1 + 15);
                plan.bank.add_rect(plan.m1, pad);
                plan.via1_on_pad(pad);
                plan.bank
                    .add_rect(plan.m2, Rect::new(array_w - 20, y + rb.0, array_w + 140, y + rb.1));
            }
        }
    }
    let right_w = read_train.len() as i64 * T;
    let ren_x = array_w + 2 * T - 110;
    if !sram {
        let and_tile_r = tile(&and_name).clone();
        for r in 0..rows {
            let pad = Plan::placed_pin(&and_tile_r, "pad0", array_w + 2 * T, r * CELL_H, Orient::My);
            plan.via1_on_pad(pad);
        }
    }

    // --------------------------------------------- data strips and control
    // Write-side rows below the array; read-side rows above (GCRAM).
    let wpr = g.words_per_row as i64;
    let word = design.config.word_size as i64;
    let has_mux = wpr > 1;

    let mut pins_out: Vec<(String, Rect, LayerKey)> = Vec::new();

    // Row y positions (negative going down).
    let mux_y = -CELL_H - STRIP_GAP;
    let wd_y = if has_mux { -2 * CELL_H } else { -CELL_H } - STRIP_GAP;
    let dff_y = wd_y - CELL_H;
    let wch_tracks = (wpr + 4) as usize;
    let wch_h = (wch_tracks as i64 + 3) * 200 + 200;
    let wch_y0 = dff_y - wch_h;
    let wctl_y = wch_y0 - CELL_H;

    let dff_tile = tile("dff").clone();
    let wd_tile = tile("write_driver").clone();

    let mut wch_pins: Vec<ChannelPin> = Vec::new();
    if sram {
        let prech_tile = tile("sram_precharge").clone();
        let sa_tile = tile("sense_amp_diff").clone();
        // Rows: precharge | (mux) | sense | write driver | dff.
        let pch_y = -CELL_H - STRIP_GAP;
        let smux_y = -2 * CELL_H - STRIP_GAP;
        let sa_y = if has_mux { -3 * CELL_H } else { -2 * CELL_H } - STRIP_GAP;
        let swd_y = sa_y - CELL_H;
        let sdff_y = swd_y - CELL_H;
        let sch_y0 = sdff_y - wch_h;
        let sctl_y = sch_y0 - CELL_H;
        for c in 0..cols {
            plan.bank.place("sram_precharge", c * cw, pch_y, Orient::R0);
            let pad = Plan::placed_pin(&prech_tile, "pad1", c * cw, pch_y, Orient::R0);
            wch_pins.push(ChannelPin { net: "pch_en_b".into(), pad });
            if has_mux {
                plan.bank.place("mux_passgate", c * cw, smux_y, Orient::R0);
                let mpad = Plan::placed_pin(tile("mux_passgate"), "pad1", c * cw, smux_y, Orient::R0);
                wch_pins.push(ChannelPin { net: format!("sel{}", c % wpr), pad: mpad });
            }
            // Bitline extensions from the array edge down into the strip.
            plan.m2_v(c * cw + 105, pch_y + PAD_BAND.0, 0);
            plan.m2_v(c * cw + 795, pch_y + PAD_BAND.0, 0);
        }
        for b in 0..word {
            let x = b * wpr * cw;
            plan.bank.place("sense_amp_diff", x, sa_y, Orient::R0);
            plan.bank.place("write_driver", x, swd_y, Orient::R0);
            plan.bank.place("dff", x, sdff_y, Orient::R0);
            let sa_en = Plan::placed_pin(&sa_tile, "pad0", x, sa_y, Orient::R0);
            wch_pins.push(ChannelPin { net: "sa_en".into(), pad: sa_en });
            let wd_en = Plan::placed_pin(&wd_tile, "pad0", x, swd_y, Orient::R0);
            wch_pins.push(ChannelPin { net: "wd_en".into(), pad: wd_en });
            let clk = Plan::placed_pin(&dff_tile, "pad0", x, sdff_y, Orient::R0);
            wch_pins.push(ChannelPin { net: "clk".into(), pad: clk });
            // din pin drop and dout riser.
            let din_pad = Plan::placed_pin(&dff_tile, "pad1", x, sdff_y, Orient::R0);
            plan.via1_on_pad(din_pad);
            plan.m2_v(x + 290, sctl_y - 400, din_pad.y0 + 50);
            pins_out.push((
                format!("din[{b}]"),
                Rect::new(x + 255, sctl_y - 400, x + 325, sctl_y - 200),
                plan.m2,
            ));
            let dout_pad = Plan::placed_pin(&sa_tile, "pad2", x, sa_y, Orient::R0);
            plan.via1_on_pad(dout_pad);
            plan.m2_v(x + 470, sctl_y - 400, dout_pad.y0 + 50);
            pins_out.push((
                format!("dout[{b}]"),
                Rect::new(x + 435, sctl_y - 400, x + 505, sctl_y - 200),
                plan.m2,
            ));
        }
        // Control tile plus channel sources.
        plan.bank.place("sram_ctl", -left_w + T, sctl_y, Orient::R0);
        {
            let ctl_tile = tile("sram_ctl").clone();
            let pad = Plan::placed_pin(&ctl_tile, "pad0", -left_w + T, sctl_y, Orient::R0);
            plan.via1_on_pad(pad);
        }
        for (i, net) in ["pch_en_b", "sa_en", "wd_en", "clk"].iter().enumerate() {
            let pad = plan.source_pad(-left_w + i as i64 * 200 - 900, sch_y0 + 40);
            wch_pins.push(ChannelPin { net: net.to_string(), pad });
        }
        if has_mux {
            plan.bank
                .place(&format!("decoder{}", g.addr_bits_col), -left_w + 2 * T, sctl_y, Orient::R0);
            for m in 0..wpr {
                let pad = plan.source_pad(-left_w + 900 + m * 200 + T, sch_y0 + 40);
                wch_pins.push(ChannelPin { net: format!("sel{m}"), pad });
            }
        }
        let routed = route_channel("sram_data", tech, sch_y0 + 200, sdff_y - 200, &wch_pins)?;
        for s in routed.shapes {
            plan.bank.shapes.push(s);
        }
        // Clock / enable pins.
        for (i, name) in ["clk", "web"].iter().enumerate() {
            let x = -left_w + 2 * T + 800 + i as i64 * 200;
            pins_out.push((name.to_string(), Rect::new(x, sctl_y - 400, x + 70, sctl_y - 200), plan.m2));
            plan.m2_v(x + 35, sctl_y - 400, sch_y0 + 100);
        }
        // Address bus lines, DFF tiles and pins.
        let abits = (g.addr_bits_row + g.addr_bits_col) as i64;
        for i in 0..abits {
            let x = -left_w - 900 - i * BUS_PITCH;
            plan.bank.place("dff", x - 290, sctl_y, Orient::R0);
            let pad = Plan::placed_pin(&dff_tile, "pad1", x - 290, sctl_y, Orient::R0);
            plan.via1_on_pad(pad);
            plan.m2_v(x, sctl_y - 400, array_h);
            pins_out.push((
                format!("addr[{i}]"),
                Rect::new(x - 35, sctl_y - 400, x + 35, sctl_y - 200),
                plan.m2,
            ));
        }
        // Enable line through the AND column (SRAM pads sit low).
        plan.m2_v(en_x, sctl_y + 250, array_h);

        finish(
            &mut plan,
            design,
            pins_out,
            sctl_y - 400,
            array_h,
            -left_w - 900 - abits * BUS_PITCH - 290,
            array_w,
        )?;
        return Ok(plan.bank);
    }

    // GCRAM write data strip.
    let cond_name = match design.spec.read_conditioning {
        crate::cellgen::Conditioning::Precharge => "bl_precharge",
        crate::cellgen::Conditioning::Predischarge => "bl_predischarge",
    };
    for c in 0..cols {
        if has_mux {
            plan.bank.place("mux_passgate", c * cw, mux_y, Orient::R0);
            let pad = Plan::placed_pin(tile("mux_passgate"), "pad1", c * cw, mux_y, Orient::R0);
            wch_pins.push(ChannelPin { net: format!("wsel{}", c % wpr), pad });
        }
        // WBL extension into the strip (metal3 bitlines drop through via2).
        let bl_top_y = if has_mux { mux_y } else { wd_y };
        if os {
            plan.bank
                .add_rect(plan.m3, Rect::new(c * cw + 40, bl_top_y + PAD_BAND.0, c * cw + 110, 0));
        } else {
            plan.m2_v(c * cw + 85, bl_top_y + PAD_BAND.0, 0);
        }
    }
    for b in 0..word {
        let x = b * wpr * cw;
        plan.bank.place("write_driver", x, wd_y, Orient::R0);
        plan.bank.place("dff", x, dff_y, Orient::R0);
        let wd_en = Plan::placed_pin(&wd_tile, "pad0", x, wd_y, Orient::R0);
        wch_pins.push(ChannelPin { net: "wd_en".into(), pad: wd_en });
        let clk = Plan::placed_pin(&dff_tile, "pad0", x, dff_y, Orient::R0);
        wch_pins.push(ChannelPin { net: "clk_w".into(), pad: clk });
        let din_pad = Plan::placed_pin(&dff_tile, "pad1", x, dff_y, Orient::R0);
        plan.via1_on_pad(din_pad);
        plan.m2_v(x + 290, wctl_y - 400, din_pad.y0 + 50);
        pins_out.push((
            format!("din[{b}]"),
            Rect::new(x + 255, wctl_y - 400, x + 325, wctl_y - 200),
            plan.m2,
        ));
    }
    // Write control, column decoder and channel sources. The controller
    // sits under the enable column so its pad feeds the vertical EN line.
    plan.bank.place("write_ctl", -left_w + T, wctl_y, Orient::R0);
    {
        let wctl_tile = tile("write_ctl").clone();
        let pad = Plan::placed_pin(&wctl_tile, "pad0", -left_w + T, wctl_y, Orient::R0);
        plan.via1_on_pad(pad);
    }
    for (i, net) in ["wd_en", "clk_w"].iter().enumerate() {
        let pad = plan.source_pad(-left_w + i as i64 * 200, wch_y0 + 40);
        wch_pins.push(ChannelPin { net: net.to_string(), pad });
    }
    if has_mux {
        plan.bank
            .place(&format!("decoder{}", g.addr_bits_col), -left_w + 2 * T, wctl_y, Orient::R0);
        for m in 0..wpr {
            let pad = plan.source_pad(-left_w + 900 + m * 200, wch_y0 + 40);
            wch_pins.push(ChannelPin { net: format!("wsel{m}"), pad });
        }
    }
    let routed = route_channel("write_data", tech, wch_y0 + 200, dff_y - 200, &wch_pins)?;
    for s in routed.shapes {
        plan.bank.shapes.push(s);
    }
    for (i, name) in ["clk_w", "web"].iter().enumerate() {
        let x = -left_w + 2 * T + 800 + i as i64 * 200;
        pins_out.push((name.to_string(), Rect::new(x, wctl_y - 400, x + 70, wctl_y - 200), plan.m2));
        plan.m2_v(x + 35, wctl_y - 400, wch_y0 + 100);
    }
    // Write enable line up the AND column.
    plan.m2_v(en_x, wctl_y + 400, array_h);

    // GCRAM read data strip (above the array).
    let cond_y = array_h + STRIP_GAP;
    let rmux_y = cond_y + CELL_H;
    let sa_y = if has_mux { cond_y + 2 * CELL_H } else { cond_y + CELL_H };
    let rch_y0 = sa_y + CELL_H;
    let rch_tracks = (wpr + 5) as usize;
    let rch_h = (rch_tracks as i64 + 3) * 200 + 200;
    let rctl_y = rch_y0 + rch_h;
    let sa_tile = tile("sense_amp").clone();
    let cond_tile = tile(cond_name).clone();
    let mut rch_pins: Vec<ChannelPin> = Vec::new();
    for c in 0..cols {
        plan.bank.place(cond_name, c * cw, cond_y, Orient::R0);
        let en_pad = Plan::placed_pin(&cond_tile, "pad1", c * cw, cond_y, Orient::R0);
        rch_pins.push(ChannelPin {
            net: "cond_en".into(),
            pad: en_pad,
        });
        if has_mux {
            plan.bank.place("mux_passgate", c * cw, rmux_y, Orient::R0);
            let pad = Plan::placed_pin(tile("mux_passgate"), "pad1", c * cw, rmux_y, Orient::R0);
            rch_pins.push(ChannelPin { net: format!("rsel{}", c % wpr), pad });
        }
        // RBL riser: metal3 jog from the bitline x onto the conditioner pad.
        let pad = Plan::placed_pin(&cond_tile, "pad0", c * cw, cond_y, Orient::R0);
        plan.via1_on_pad(pad);
        let cx = (pad.x0 + pad.x1) / 2;
        let cy = (pad.y0 + pad.y1) / 2;
        let blx = c * cw + 545;
        plan.bank
            .add_rect(plan.m3, Rect::new(pad.x0, cy - 50, blx + 50, cy + 50));
        plan.bank
            .add_rect(plan.via2, Rect::new(cx - 30, cy - 30, cx + 30, cy + 30));
        if os {
            // Bitline is already metal3: the jog merges the riser directly.
            plan.bank
                .add_rect(plan.m3, Rect::new(c * cw + 510, array_h, c * cw + 580, cy + 50));
        } else {
            plan.m2_v(blx, array_h, cy + 50);
            plan.bank
                .add_rect(plan.m2, Rect::new(blx - 50, cy - 50, blx + 50, cy + 50));
            plan.bank
                .add_rect(plan.via2, Rect::new(blx - 30, cy - 30, blx + 30, cy + 30));
        }
    }
    for b in 0..word {
        let x = b * wpr * cw;
        plan.bank.place("sense_amp", x, sa_y, Orient::R0);
        let en = Plan::placed_pin(&sa_tile, "pad0", x, sa_y, Orient::R0);
        rch_pins.push(ChannelPin { net: "sa_en".into(), pad: en });
        let vref = Plan::placed_pin(&sa_tile, "pad1", x, sa_y, Orient::R0);
        rch_pins.push(ChannelPin { net: "vref".into(), pad: vref });
        let dout_pad = Plan::placed_pin(&sa_tile, "pad2", x, sa_y, Orient::R0);
        plan.via1_on_pad(dout_pad);
        plan.m2_v(x + 470, dout_pad.y1 - 50, rctl_y + CELL_H + 400);
        pins_out.push((
            format!("dout[{b}]"),
            Rect::new(x + 435, rctl_y + CELL_H + 200, x + 505, rctl_y + CELL_H + 400),
            plan.m2,
        ));
    }
    // Read control, reference stub, column decoder, channel sources. The
    // controller aligns with the read enable column on the right.
    let rctl_x = array_w + T;
    plan.bank.place(&design_rctl_name(design), rctl_x, rctl_y, Orient::R0);
    plan.bank.place("vref_stub", rctl_x + T, rctl_y, Orient::R0);
    {
        let rctl_tile = tile(&design_rctl_name(design)).clone();
        let pad = Plan::placed_pin(&rctl_tile, "pad0", rctl_x, rctl_y, Orient::R0);
        plan.via1_on_pad(pad);
    }
    for (i, net) in ["cond_en", "sa_en", "vref"].iter().enumerate() {
        let pad = plan.source_pad(rctl_x + 2 * T + 200 + i as i64 * 200, rch_y0 + 40);
        rch_pins.push(ChannelPin { net: net.to_string(), pad });
    }
    if has_mux {
        plan.bank
            .place(&format!("decoder{}", g.addr_bits_col), rctl_x + 3 * T, rctl_y, Orient::R0);
        for m in 0..wpr {
            let pad = plan.source_pad(rctl_x + 4 * T + m * 200, rch_y0 + 40);
            rch_pins.push(ChannelPin { net: format!("rsel{m}"), pad });
        }
    }
    let routed = route_channel("read_data", tech, rch_y0 + 200, rctl_y - 200, &rch_pins)?;
    for s in routed.shapes {
        plan.bank.shapes.push(s);
    }
    for (i, name) in ["clk_r", "reb"].iter().enumerate() {
        let x = rctl_x + 2 * T + 800 + i as i64 * 200;
        pins_out.push((
            name.to_string(),
            Rect::new(x, rctl_y + CELL_H + 200, x + 70, rctl_y + CELL_H + 400),
            plan.m2,
        ));
        plan.m2_v(x + 35, rctl_y - 100, rctl_y + CELL_H + 400);
    }
    // Read enable line down the read AND column.
    plan.m2_v(ren_x, 0, rctl_y + 600);

    // Address buses: write side beyond the left strip, read side beyond
    // the right strip; both run to the pin edges.
    let abits = (g.addr_bits_row + g.addr_bits_col) as i64;
    let mut min_x = -left_w - 900 - abits * BUS_PITCH;
    for i in 0..abits {
        let x = -left_w - 900 - i * BUS_PITCH;
        plan.bank.place("dff", x - 290, wctl_y, Orient::R0);
        let pad = Plan::placed_pin(&dff_tile, "pad1", x - 290, wctl_y, Orient::R0);
        plan.via1_on_pad(pad);
        plan.m2_v(x, wctl_y - 400, array_h);
        pins_out.push((
            format!("addr_w[{i}]"),
            Rect::new(x - 35, wctl_y - 400, x + 35, wctl_y - 200),
            plan.m2,
        ));
    }
    min_x -= 290;
    let bus_r0 = array_w + right_w.max(4 * T) + 1200;
    let mut max_x = bus_r0 + abits * BUS_PITCH;
    for i in 0..abits {
        let x = bus_r0 + i * BUS_PITCH;
        plan.bank.place("dff", x - 290, rctl_y, Orient::R0);
        let pad = Plan::placed_pin(&dff_tile, "pad1", x - 290, rctl_y, Orient::R0);
        plan.via1_on_pad(pad);
        plan.m2_v(x, 0, rctl_y + CELL_H + 400);
        pins_out.push((
            format!("addr_r[{i}]"),
            Rect::new(x - 35, rctl_y + CELL_H + 200, x + 35, rctl_y + CELL_H + 400),
            plan.m2,
        ));
    }
    max_x += 330;

    finish(
        &mut plan,
        design,
        pins_out,
        wctl_y - 400,
        rctl_y + CELL_H + 400,
        min_x,
        max_x,
    )?;
    Ok(plan.bank)
}

fn design_rctl_name(design: &BankDesign) -> String {
    match design.spec.read_conditioning {
        crate::cellgen::Conditioning::Precharge => "read_ctl_pc".to_string(),
        crate::cellgen::Conditioning::Predischarge => "read_ctl_pd".to_string(),
    }
}

fn gate_tile_name(design: &BankDesign, prefix: &str) -> String {
    design
        .layouts
        .keys()
        .find(|k| k.starts_with(prefix))
        .cloned()
        .unwrap_or_else(|| panic!("no `{prefix}` tile registered"))
}

/// Close the floorplan: power ring(s), pin shapes, boundary.
fn finish(
    plan: &mut Plan,
    design: &BankDesign,
    pins_out: Vec<(String, Rect, LayerKey)>,
    core_y0: i64,
    core_y1: i64,
    core_x0: i64,
    core_x1: i64,
) -> Result<(), RouteError> {
    let mut x0 = core_x0;
    let mut y0 = core_y0;
    let mut x1 = core_x1;
    let mut y1 = core_y1;
    // Ensure pin shapes sit inside the ring opening.
    for (_, r, _) in &pins_out {
        x0 = x0.min(r.x0 - 100);
        x1 = x1.max(r.x1 + 100);
        y0 = y0.min(r.y0 - 100);
        y1 = y1.max(r.y1 + 100);
    }

    let mut rings: Vec<(&str, PinRole)> = vec![("gnd", PinRole::Ground), ("vdd", PinRole::Supply)];
    if design.pin_map.contains_key("vwwl") {
        rings.push(("vwwl", PinRole::BoostSupply));
    }
    let m3 = plan.m3;
    let mut off = RING_GAP;
    let mut pin_ring: Vec<Pin> = Vec::new();
    for (name, _) in &rings {
        let rx0 = x0 - off - RING_W;
        let ry0 = y0 - off - RING_W;
        let rx1 = x1 + off + RING_W;
        let ry1 = y1 + off + RING_W;
        // Four ring segments.
        let bottom = Rect::new(rx0, ry0, rx1, ry0 + RING_W);
        plan.bank.add_rect(m3, bottom);
        plan.bank.add_rect(m3, Rect::new(rx0, ry1 - RING_W, rx1, ry1));
        plan.bank.add_rect(m3, Rect::new(rx0, ry0, rx0 + RING_W, ry1));
        plan.bank.add_rect(m3, Rect::new(rx1 - RING_W, ry0, rx1, ry1));
        pin_ring.push(Pin {
            name: name.to_string(),
            layer: m3,
            rect: bottom,
        });
        off += RING_GAP + RING_W;
    }
    for p in pin_ring {
        plan.bank.pins.push(p);
    }
    for (name, rect, layer) in pins_out {
        plan.bank.pins.push(Pin { name, layer, rect });
    }

    let margin = off + 100;
    plan.bank.boundary = Rect::new(x0 - margin, y0 - margin, x1 + margin, y1 + margin);
    Ok(())
}
