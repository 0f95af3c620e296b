//! GDSII stream reader/writer for the subset the generator emits:
//! BOUNDARY rectangles and SREF placements, big-endian records, zero
//! timestamps for byte-reproducible output.
//!
//! UNITS carries (user units per dbu, meters per dbu) as 8-byte excess-64
//! base-16 reals. The user unit is one micrometer.

use std::fmt;

use super::{GdsLibrary, LayoutCell, LayerKey, Orient, Placement, Rect, Shape};

const REC_HEADER: u16 = 0x0002;
const REC_BGNLIB: u16 = 0x0102;
const REC_LIBNAME: u16 = 0x0206;
const REC_UNITS: u16 = 0x0305;
const REC_ENDLIB: u16 = 0x0400;
const REC_BGNSTR: u16 = 0x0502;
const REC_STRNAME: u16 = 0x0606;
const REC_ENDSTR: u16 = 0x0700;
const REC_BOUNDARY: u16 = 0x0800;
const REC_SREF: u16 = 0x0A00;
const REC_LAYER: u16 = 0x0D02;
const REC_DATATYPE: u16 = 0x0E02;
const REC_XY: u16 = 0x1003;
const REC_ENDEL: u16 = 0x1100;
const REC_SNAME: u16 = 0x1206;
const REC_STRANS: u16 = 0x1A01;
const REC_ANGLE: u16 = 0x1C05;

const GDS_VERSION: i16 = 600;

#[derive(Debug)]
pub enum GdsError {
    CoordinateOverflow { cell: String, value: i64 },
    Truncated { offset: usize },
    UnexpectedRecord { offset: usize, record: u16, context: &'static str },
    BadFormat { offset: usize, message: String },
}

impl fmt::Display for GdsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GdsError::CoordinateOverflow { cell, value } => {
                write!(f, "cell `{cell}`: coordinate {value} exceeds 32-bit database units")
            }
            GdsError::Truncated { offset } => write!(f, "truncated GDS record at byte {offset}"),
            GdsError::UnexpectedRecord { offset, record, context } => write!(
                f,
                "unexpected record 0x{record:04X} at byte {offset} while reading {context}"
            ),
            GdsError::BadFormat { offset, message } => {
                write!(f, "malformed GDS at byte {offset}: {message}")
            }
        }
    }
}

impl std::error::Error for GdsError {}

/// Encode an 8-byte excess-64 base-16 real.
pub fn encode_real8(x: f64) -> u64 {
    if x == 0.0 {
        return 0;
    }
    let sign = if x < 0.0 { 1u64 << 63 } else { 0 };
    let mut m = x.abs();
    let mut exp: i32 = 64;
    while m >= 1.0 {
        m /= 16.0;
        exp += 1;
    }
    while m < 1.0 / 16.0 {
        m *= 16.0;
        exp -= 1;
    }
    let mut mant = (m * 2f64.powi(56)).round() as u64;
    if mant >= 1u64 << 56 {
        mant >>= 4;
        exp += 1;
    }
    assert!((0..=127).contains(&exp), "real8 exponent out of range");
    sign | ((exp as u64) << 56) | mant
}

/// Decode an 8-byte excess-64 base-16 real.
pub fn decode_real8(bits: u64) -> f64 {
    if bits & !(1 << 63) == 0 {
        return 0.0;
    }
    let sign = if bits >> 63 != 0 { -1.0 } else { 1.0 };
    let exp = ((bits >> 56) & 0x7F) as i32 - 64;
    let mant = (bits & ((1u64 << 56) - 1)) as f64 / 2f64.powi(56);
    sign * mant * 16f64.powi(exp)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn rec(&mut self, rectype: u16, data: &[u8]) {
        let len = (4 + data.len()) as u16;
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(&rectype.to_be_bytes());
        self.buf.extend_from_slice(data);
    }

    fn rec_i16(&mut self, rectype: u16, vals: &[i16]) {
        let mut data = Vec::with_capacity(vals.len() * 2);
        for v in vals {
            data.extend_from_slice(&v.to_be_bytes());
        }
        self.rec(rectype, &data);
    }

    fn rec_i32(&mut self, rectype: u16, vals: &[i32]) {
        let mut data = Vec::with_capacity(vals.len() * 4);
        for v in vals {
            data.extend_from_slice(&v.to_be_bytes());
        }
        self.rec(rectype, &data);
    }

    fn rec_str(&mut self, rectype: u16, s: &str) {
        let mut data = s.as_bytes().to_vec();
        if data.len() % 2 == 1 {
            data.push(0);
        }
        self.rec(rectype, &data);
    }

    fn rec_real8(&mut self, rectype: u16, vals: &[f64]) {
        let mut data = Vec::with_capacity(vals.len() * 8);
        for v in vals {
            data.extend_from_slice(&encode_real8(*v).to_be_bytes());
        }
        self.rec(rectype, &data);
    }
}

fn coord32(cell: &str, v: i64) -> Result<i32, GdsError> {
    i32::try_from(v).map_err(|_| GdsError::CoordinateOverflow {
        cell: cell.to_string(),
        value: v,
    })
}

/// Serialize a library to GDSII bytes. Timestamps are zero, so equal inputs
/// produce byte-identical streams.
pub fn write_gds(lib: &GdsLibrary) -> Result<Vec<u8>, GdsError> {
    let mut w = Writer { buf: Vec::new() };
    w.rec_i16(REC_HEADER, &[GDS_VERSION]);
    w.rec_i16(REC_BGNLIB, &[0; 12]);
    w.rec_str(REC_LIBNAME, &lib.name);
    let dbu = lib.dbu_per_um as f64;
    w.rec_real8(REC_UNITS, &[1.0 / dbu, 1e-6 / dbu]);
    for cell in &lib.cells {
        w.rec_i16(REC_BGNSTR, &[0; 12]);
        w.rec_str(REC_STRNAME, &cell.name);
        for Shape { layer, rect } in &cell.shapes {
            w.rec(REC_BOUNDARY, &[]);
            w.rec_i16(REC_LAYER, &[layer.layer as i16]);
            w.rec_i16(REC_DATATYPE, &[layer.datatype as i16]);
            let x0 = coord32(&cell.name, rect.x0)?;
            let y0 = coord32(&cell.name, rect.y0)?;
            let x1 = coord32(&cell.name, rect.x1)?;
            let y1 = coord32(&cell.name, rect.y1)?;
            w.rec_i32(REC_XY, &[x0, y0, x1, y0, x1, y1, x0, y1, x0, y0]);
            w.rec(REC_ENDEL, &[]);
        }
        for p in &cell.placements {
            w.rec(REC_SREF, &[]);
            w.rec_str(REC_SNAME, &p.cell);
            let (reflect, angle) = match p.orient {
                Orient::R0 => (false, 0.0),
                Orient::R90 => (false, 90.0),
                Orient::R180 => (false, 180.0),
                Orient::R270 => (false, 270.0),
                Orient::Mx => (true, 0.0),
                Orient::My => (true, 180.0),
            };
            if reflect || angle != 0.0 {
                w.rec_i16(REC_STRANS, &[if reflect { i16::MIN } else { 0 }]);
            }
            if angle != 0.0 {
                w.rec_real8(REC_ANGLE, &[angle]);
            }
            let dx = coord32(&cell.name, p.dx)?;
            let dy = coord32(&cell.name, p.dy)?;
            w.rec_i32(REC_XY, &[dx, dy]);
            w.rec(REC_ENDEL, &[]);
        }
        w.rec(REC_ENDSTR, &[]);
    }
    w.rec(REC_ENDLIB, &[]);
    Ok(w.buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

struct Record<'a> {
    rectype: u16,
    data: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<Record<'a>, GdsError> {
        let offset = self.pos;
        if self.pos + 4 > self.bytes.len() {
            return Err(GdsError::Truncated { offset });
        }
        let len = u16::from_be_bytes([self.bytes[self.pos], self.bytes[self.pos + 1]]) as usize;
        let rectype = u16::from_be_bytes([self.bytes[self.pos + 2], self.bytes[self.pos + 3]]);
        if len < 4 || self.pos + len > self.bytes.len() {
            return Err(GdsError::Truncated { offset });
        }
        let data = &self.bytes[self.pos + 4..self.pos + len];
        self.pos += len;
        Ok(Record { rectype, data, offset })
    }
}

fn data_i16(r: &Record) -> Result<Vec<i16>, GdsError> {
    if r.data.len() % 2 != 0 {
        return Err(GdsError::BadFormat {
            offset: r.offset,
            message: "odd i16 payload".to_string(),
        });
    }
    Ok(r.data
        .chunks_exact(2)
        .map(|c| i16::from_be_bytes([c[0], c[1]]))
        .collect())
}

fn data_i32(r: &Record) -> Result<Vec<i32>, GdsError> {
    if r.data.len() % 4 != 0 {
        return Err(GdsError::BadFormat {
            offset: r.offset,
            message: "payload not a multiple of 4 bytes".to_string(),
        });
    }
    Ok(r.data
        .chunks_exact(4)
        .map(|c| i32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn data_str(r: &Record) -> String {
    let mut s = r.data.to_vec();
    while s.last() == Some(&0) {
        s.pop();
    }
    String::from_utf8_lossy(&s).into_owned()
}

fn data_real8(r: &Record) -> Result<Vec<f64>, GdsError> {
    if r.data.len() % 8 != 0 {
        return Err(GdsError::BadFormat {
            offset: r.offset,
            message: "payload not a multiple of 8 bytes".to_string(),
        });
    }
    Ok(r.data
        .chunks_exact(8)
        .map(|c| {
            let mut b = [0u8; 8];
            b.copy_from_slice(c);
            decode_real8(u64::from_be_bytes(b))
        })
        .collect())
}

/// Parse a GDSII stream produced by [`write_gds`] (or any stream restricted
/// to the same record subset). Inverse of the writer on its output domain.
pub fn read_gds(bytes: &[u8]) -> Result<GdsLibrary, GdsError> {
    let mut r = Reader { bytes, pos: 0 };

    let header = r.next()?;
    if header.rectype != REC_HEADER {
        return Err(GdsError::UnexpectedRecord {
            offset: header.offset,
            record: header.rectype,
            context: "stream header",
        });
    }
    let bgnlib = r.next()?;
    if bgnlib.rectype != REC_BGNLIB {
        return Err(GdsError::UnexpectedRecord {
            offset: bgnlib.offset,
            record: bgnlib.rectype,
            context: "library begin",
        });
    }
    let libname = r.next()?;
    if libname.rectype != REC_LIBNAME {
        return Err(GdsError::UnexpectedRecord {
            offset: libname.offset,
            record: libname.rectype,
            context: "library name",
        });
    }
    let name = data_str(&libname);
    let units = r.next()?;
    if units.rectype != REC_UNITS {
        return Err(GdsError::UnexpectedRecord {
            offset: units.offset,
            record: units.rectype,
            context: "units",
        });
    }
    let u = data_real8(&units)?;
    if u.len() != 2 || u[1] <= 0.0 {
        return Err(GdsError::BadFormat {
            offset: units.offset,
            message: "UNITS must carry two positive reals".to_string(),
        });
    }
    let dbu_per_um = (1e-6 / u[1]).round() as u32;
    let mut lib = GdsLibrary::new(&name, dbu_per_um);

    loop {
        let rec = r.next()?;
        match rec.rectype {
            REC_ENDLIB => break,
            REC_BGNSTR => {
                let strname = r.next()?;
                if strname.rectype != REC_STRNAME {
                    return Err(GdsError::UnexpectedRecord {
                        offset: strname.offset,
                        record: strname.rectype,
                        context: "structure name",
                    });
                }
                let mut cell = LayoutCell::new(&data_str(&strname));
                loop {
                    let el = r.next()?;
                    match el.rectype {
                        REC_ENDSTR => break,
                        REC_BOUNDARY => {
                            let mut layer = 0i16;
                            let mut datatype = 0i16;
                            let mut xy: Vec<i32> = Vec::new();
                            loop {
                                let sub = r.next()?;
                                match sub.rectype {
                                    REC_LAYER => layer = data_i16(&sub)?[0],
                                    REC_DATATYPE => datatype = data_i16(&sub)?[0],
                                    REC_XY => xy = data_i32(&sub)?,
                                    REC_ENDEL => break,
                                    other => {
                                        return Err(GdsError::UnexpectedRecord {
                                            offset: sub.offset,
                                            record: other,
                                            context: "boundary element",
                                        })
                                    }
                                }
                            }
                            if xy.len() != 10 {
                                return Err(GdsError::BadFormat {
                                    offset: el.offset,
                                    message: format!(
                                        "boundary expects a closed 5-point ring, got {} coords",
                                        xy.len()
                                    ),
                                });
                            }
                            let xs = [xy[0], xy[2], xy[4], xy[6]];
                            let ys = [xy[1], xy[3], xy[5], xy[7]];
                            let rect = Rect::new(
                                *xs.iter().min().unwrap() as i64,
                                *ys.iter().min().unwrap() as i64,
                                *xs.iter().max().unwrap() as i64,
                                *ys.iter().max().unwrap() as i64,
                            );
                            cell.add_rect(
                                LayerKey {
                                    layer: layer as u8,
                                    datatype: datatype as u8,
                                },
                                rect,
                            );
                        }
                        REC_SREF => {
                            let mut sname = String::new();
                            let mut reflect = false;
                            let mut angle = 0.0f64;
                            let mut xy: Vec<i32> = Vec::new();
                            loop {
                                let sub = r.next()?;
                                match sub.rectype {
                                    REC_SNAME => sname = data_str(&sub),
                                    REC_STRANS => reflect = data_i16(&sub)?[0] as u16 & 0x8000 != 0,
                                    REC_ANGLE => angle = data_real8(&sub)?[0],
                                    REC_XY => xy = data_i32(&sub)?,
                                    REC_ENDEL => break,
                                    other => {
                                        return Err(GdsError::UnexpectedRecord {
                                            offset: sub.offset,
                                            record: other,
                                            context: "sref element",
                                        })
                                    }
                                }
                            }
                            if xy.len() != 2 {
                                return Err(GdsError::BadFormat {
                                    offset: el.offset,
                                    message: "sref expects one XY point".to_string(),
                                });
                            }
                            let orient = match (reflect, angle as i64) {
                                (false, 0) => Orient::R0,
                                (false, 90) => Orient::R90,
                                (false, 180) => Orient::R180,
                                (false, 270) => Orient::R270,
                                (true, 0) => Orient::Mx,
                                (true, 180) => Orient::My,
                                _ => {
                                    return Err(GdsError::BadFormat {
                                        offset: el.offset,
                                        message: format!(
                                            "unsupported orientation reflect={reflect} angle={angle}"
                                        ),
                                    })
                                }
                            };
                            cell.placements.push(Placement {
                                cell: sname,
                                dx: xy[0] as i64,
                                dy: xy[1] as i64,
                                orient,
                            });
                        }
                        other => {
                            return Err(GdsError::UnexpectedRecord {
                                offset: el.offset,
                                record: other,
                                context: "structure body",
                            })
                        }
                    }
                }
                if let Some(b) = cell.shapes_bbox() {
                    cell.boundary = b;
                }
                lib.add(cell);
            }
            other => {
                return Err(GdsError::UnexpectedRecord {
                    offset: rec.offset,
                    record: other,
                    context: "library body",
                })
            }
        }
    }
    Ok(lib)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real8_round_trips_unit_values() {
        for &v in &[1e-3, 1e-9, 0.25, 1.0, 90.0, 180.0, 270.0, 2e-4, 1e-6] {
            let bits = encode_real8(v);
            let back = decode_real8(bits);
            let rel = ((back - v) / v).abs();
            assert!(rel < 1e-15, "{v}: {back} rel {rel}");
            // Re-encoding the decoded value must be byte-stable.
            assert_eq!(encode_real8(back), bits, "{v}");
        }
        assert_eq!(encode_real8(0.0), 0);
        assert_eq!(decode_real8(0), 0.0);
    }

    #[test]
    fn empty_library_bytes_and_parse_back() {
        let lib = GdsLibrary::new("LIB", 1000);
        let bytes = write_gds(&lib).unwrap();
        // HEADER(6) + BGNLIB(28) + LIBNAME(8) + UNITS(20) + ENDLIB(4)
        assert_eq!(bytes.len(), 66);
        let back = read_gds(&bytes).unwrap();
        assert_eq!(back.cells.len(), 0);
        assert_eq!(back.name, "LIB");
        assert_eq!(back.dbu_per_um, 1000);
    }

    #[test]
    fn unit_square_round_trip() {
        let mut lib = GdsLibrary::new("t", 1000);
        let mut c = LayoutCell::new("sq");
        c.add_rect(LayerKey { layer: 5, datatype: 0 }, Rect::new(0, 0, 1000, 1000));
        c.boundary = Rect::new(0, 0, 1000, 1000);
        lib.add(c);
        let bytes = write_gds(&lib).unwrap();
        let back = read_gds(&bytes).unwrap();
        assert_eq!(back.cells.len(), 1);
        assert_eq!(back.cells[0].shapes[0].rect, Rect::new(0, 0, 1000, 1000));
        assert_eq!(back.cells[0].shapes[0].layer, LayerKey { layer: 5, datatype: 0 });
        let again = write_gds(&back).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn sref_orientations_round_trip() {
        let mut lib = GdsLibrary::new("t", 1000);
        let mut leaf = LayoutCell::new("leaf");
        leaf.add_rect(LayerKey { layer: 1, datatype: 0 }, Rect::new(0, 0, 10, 20));
        leaf.boundary = Rect::new(0, 0, 10, 20);
        lib.add(leaf);
        let mut top = LayoutCell::new("top");
        for (i, o) in [Orient::R0, Orient::R90, Orient::R180, Orient::R270, Orient::Mx, Orient::My]
            .iter()
            .enumerate()
        {
            top.place("leaf", i as i64 * 100, 0, *o);
        }
        top.boundary = Rect::new(0, 0, 600, 20);
        lib.add(top);
        let bytes = write_gds(&lib).unwrap();
        let back = read_gds(&bytes).unwrap();
        let placements = &back.cells[1].placements;
        assert_eq!(placements.len(), 6);
        assert_eq!(placements[1].orient, Orient::R90);
        assert_eq!(placements[4].orient, Orient::Mx);
        assert_eq!(placements[5].orient, Orient::My);
        assert_eq!(write_gds(&back).unwrap(), bytes);
    }

    #[test]
    fn truncated_stream_is_an_error() {
        let lib = GdsLibrary::new("LIB", 1000);
        let bytes = write_gds(&lib).unwrap();
        assert!(matches!(
            read_gds(&bytes[..bytes.len() - 2]),
            Err(GdsError::Truncated { .. })
        ));
    }

    #[test]
    fn coordinate_overflow_is_an_error() {
        let mut lib = GdsLibrary::new("t", 1000);
        let mut c = LayoutCell::new("big");
        c.add_rect(
            LayerKey { layer: 1, datatype: 0 },
            Rect::new(0, 0, i64::from(i32::MAX) + 1, 10),
        );
        lib.add(c);
        assert!(matches!(
            write_gds(&lib),
            Err(GdsError::CoordinateOverflow { .. })
        ));
    }
}
