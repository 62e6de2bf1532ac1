//! File formats: binary fields (`BFLD`), binary DN maps (`DNMP`), norm CSV,
//! SVG heatmaps and line plots, and atomic writes.

use crate::error::{Error, Result};
use crate::forward::DNMap;
use crate::grid::{make_grid, Domain, Field, Grid2D, Support, C64};
use nalgebra::DMatrix;
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

pub const FIELD_MAGIC: &[u8; 4] = b"BFLD";
pub const DN_MAGIC: &[u8; 4] = b"DNMP";
pub const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.buf.len() {
            return Err(Error::Format(format!("truncated input at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn c64(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn push_c64(out: &mut Vec<u8>, v: C64) {
    out.extend_from_slice(&v.re.to_le_bytes());
    out.extend_from_slice(&v.im.to_le_bytes());
}

fn support_tag(s: Support) -> u8 {
    match s {
        Support::WholeGrid => 0,
        Support::X => 1,
    }
}

/// `BFLD` encoding: `{magic, version u32, N u32, L f64, support u8}` then `N^2`
/// little-endian `(re, im)` pairs, row-major.
pub fn encode_field(f: &Field) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(21 + 16 * g.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.half_width().to_le_bytes());
    out.push(support_tag(f.support()));
    for &v in f.values() {
        push_c64(&mut out, v);
    }
    out
}

/// Decodes a `BFLD` buffer onto `grid`, which must match its `N` and `L`.
pub fn decode_field(bytes: &[u8], grid: &Arc<Grid2D>) -> Result<Field> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != FIELD_MAGIC {
        return Err(Error::Format("not a BFLD file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported BFLD version {version}")));
    }
    let n = r.u32()? as usize;
    let l = r.f64()?;
    if n != grid.n() || l != grid.half_width() {
        return Err(Error::GridMismatch(format!(
            "file grid N={n}, L={l}; expected N={}, L={}",
            grid.n(),
            grid.half_width()
        )));
    }
    let support = match r.u8()? {
        0 => Support::WholeGrid,
        1 => Support::X,
        t => return Err(Error::Format(format!("unknown support tag {t}"))),
    };
    let values = (0..n * n).map(|_| r.c64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Field::from_values(grid, values, support)
}

pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    write_atomic(path, &encode_field(f))
}

pub fn read_field(path: &Path, grid: &Arc<Grid2D>) -> Result<Field> {
    decode_field(&read_bytes(path)?, grid)
}

fn domain_tag(d: Domain) -> (u8, f64) {
    match d {
        Domain::Disk { radius } => (0, radius),
        Domain::Square { half_side } => (1, half_side),
    }
}

/// `DNMP` encoding: `{magic, version u32, boundary count u32}` followed by the
/// grid description `{N u32, L f64, R f64, domain tag u8, domain size f64}`, the
/// noise level `f64`, a 16-byte potential fingerprint, then the matrix row-major.
pub fn encode_dn(dn: &DNMap) -> Vec<u8> {
    let g = dn.grid();
    let nb = dn.size();
    let mut out = Vec::with_capacity(64 + 16 * nb * nb);
    out.extend_from_slice(DN_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(nb as u32).to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.half_width().to_le_bytes());
    out.extend_from_slice(&g.enclosing_radius().to_le_bytes());
    let (tag, size) = domain_tag(g.domain());
    out.push(tag);
    out.extend_from_slice(&size.to_le_bytes());
    out.extend_from_slice(&dn.noise_level().to_le_bytes());
    let mut fp = [b' '; 16];
    for (d, s) in fp.iter_mut().zip(dn.q_fingerprint().bytes()) {
        *d = s;
    }
    out.extend_from_slice(&fp);
    let m = dn.matrix();
    for r in 0..nb {
        for c in 0..nb {
            push_c64(&mut out, m[(r, c)]);
        }
    }
    out
}

/// Decodes a `DNMP` buffer, rebuilding the grid it was assembled on.
pub fn decode_dn(bytes: &[u8]) -> Result<DNMap> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != DN_MAGIC {
        return Err(Error::Format("not a DNMP file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported DNMP version {version}")));
    }
    let nb = r.u32()? as usize;
    let n = r.u32()? as usize;
    let l = r.f64()?;
    let radius = r.f64()?;
    let domain = match (r.u8()?, r.f64()?) {
        (0, radius) => Domain::Disk { radius },
        (1, half_side) => Domain::Square { half_side },
        (t, _) => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let noise = r.f64()?;
    let fp = String::from_utf8_lossy(r.take(16)?).trim_end().to_string();
    let grid = make_grid(l, n, domain, radius)?;
    if grid.boundary_nodes().len() != nb {
        return Err(Error::Format(format!(
            "boundary count {nb} does not match the rebuilt grid ({})",
            grid.boundary_nodes().len()
        )));
    }
    let mut m = DMatrix::<C64>::zeros(nb, nb);
    for row in 0..nb {
        for col in 0..nb {
            m[(row, col)] = r.c64()?;
        }
    }
    r.finish()?;
    DNMap::from_matrix(&grid, m, fp, noise)
}

pub fn write_dn(path: &Path, dn: &DNMap) -> Result<()> {
    write_atomic(path, &encode_dn(dn))
}

pub fn read_dn(path: &Path) -> Result<DNMap> {
    decode_dn(&read_bytes(path)?)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// One row of the norm export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRow {
    pub name: String,
    pub p_or_s: f64,
    pub value: f64,
}

/// CSV with columns `name, p_or_s, value`.
pub fn norms_csv(rows: &[NormRow]) -> Result<Vec<u8>> {
    to_csv(rows)
}

/// Serializes rows with a header line; floats use Rust's shortest round-trip form.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn color(t: f64) -> String {
    // Blue (low) to white to red (high).
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (s, s, 1.0)
    } else {
        let s = (1.0 - t) / 0.5;
        (1.0, s, s)
    };
    format!("#{:02x}{:02x}{:02x}", (255.0 * r) as u8, (255.0 * g) as u8, (255.0 * b) as u8)
}

/// Heatmap of the real part of `f` on `[lo, hi]` (linear color map, one rect per node),
/// with `meta` embedded as an XML comment.
pub fn heatmap_svg(f: &Field, lo: f64, hi: f64, meta: &str) -> String {
    let g = f.grid();
    let n = g.n();
    let px = (512 / n).max(1);
    let size = px * n;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(s, "<!-- {} -->", meta.replace("--", "- -"));
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="gray"/>"#);
    let span = if hi > lo { hi - lo } else { 1.0 };
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            if f.support() == Support::X && !g.in_x(idx) {
                continue;
            }
            let v = f.at(idx).re;
            // x1 to the right, x2 upward.
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{px}" height="{px}" fill="{}"/>"#,
                i * px,
                (n - 1 - j) * px,
                color((v - lo) / span)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log line plot of one or more series over a shared abscissa.
pub fn loglog_svg(title: &str, xs: &[f64], series: &[(&str, Vec<f64>)], meta: &str) -> String {
    let (w, h, m) = (640.0, 420.0, 50.0);
    let pos = |v: &f64| *v > 0.0 && v.is_finite();
    let lx: Vec<f64> = xs.iter().filter(|v| pos(v)).map(|v| v.log10()).collect();
    let ly: Vec<f64> = series.iter().flat_map(|(_, ys)| ys.iter().filter(|v| pos(v)).map(|v| v.log10())).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
        }
    };
    let (x0, x1) = range(&lx);
    let (y0, y1) = range(&ly);
    let mx = |v: f64| m + (v.log10() - x0) / (x1 - x0) * (w - 2.0 * m);
    let my = |v: f64| h - m - (v.log10() - y0) / (y1 - y0) * (h - 2.0 * m);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#);
    let _ = writeln!(s, "<!-- {} -->", meta.replace("--", "- -"));
    let _ = writeln!(s, r#"<text x="{m}" y="20" font-family="sans-serif" font-size="14">{title}</text>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    for (k, (name, ys)) in series.iter().enumerate() {
        let c = palette[k % palette.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| pos(x) && pos(y))
            .map(|(x, y)| format!("{:.2},{:.2}", mx(*x), my(*y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{c}">{name}</text>"#,
            w - m - 120.0,
            m + 16.0 * (k + 1) as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
