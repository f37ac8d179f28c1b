//! CSV and PNG readers/writers for maps and masks.
//!
//! Scalar CSV: a header line `cols,rows,kind` followed by `rows` lines of
//! `cols` comma-separated floats, north row first; the literal `NaN` marks an
//! unobserved pixel. Mask CSV uses the same header with integer codes
//! 0=background, 1=positive hole, 2=negative hole, 3=no observation.
//! Masks may also be stored as 8-bit grayscale PNG holding the same codes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{Dims, Field};
use crate::geometry::GridSpec;
use crate::scalar::Scalar;

use super::{Label, SegmentationMask, SynopticMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Euv,
    Magnetic,
    Mask,
    Model,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Euv => "euv",
            MapKind::Magnetic => "magnetic",
            MapKind::Mask => "mask",
            MapKind::Model => "model",
        }
    }

    pub fn is_mask(self) -> bool {
        matches!(self, MapKind::Mask | MapKind::Model)
    }
}

impl FromStr for MapKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "euv" => Ok(MapKind::Euv),
            "magnetic" => Ok(MapKind::Magnetic),
            "mask" => Ok(MapKind::Mask),
            "model" => Ok(MapKind::Model),
            other => Err(format!("unknown map kind '{other}'")),
        }
    }
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedMap<T: Scalar> {
    Scalar(SynopticMap<T>),
    Mask(SegmentationMask),
}

impl<T: Scalar> LoadedMap<T> {
    pub fn into_scalar(self) -> Result<SynopticMap<T>> {
        match self {
            LoadedMap::Scalar(m) => Ok(m),
            LoadedMap::Mask(_) => Err(Error::Contract("expected a scalar map, found a mask".into())),
        }
    }

    pub fn into_mask(self) -> Result<SegmentationMask> {
        match self {
            LoadedMap::Mask(m) => Ok(m),
            LoadedMap::Scalar(_) => Err(Error::Contract("expected a mask, found a scalar map".into())),
        }
    }
}

/// Loads a map of the requested kind. Masks are returned at their native
/// size; resizing is a separate step.
pub fn load_map<T: Scalar>(path: &Path, kind: MapKind) -> Result<LoadedMap<T>> {
    let is_png = path.extension().map(|e| e.eq_ignore_ascii_case("png")).unwrap_or(false);
    if is_png {
        if !kind.is_mask() {
            return Err(parse_err(path, 0, format!("PNG input only supported for masks, not {kind}")));
        }
        return load_mask_png(path).map(LoadedMap::Mask);
    }
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file".into()))?;
    let (dims, file_kind) = parse_header(path, header)?;
    if file_kind != kind && !(kind.is_mask() && file_kind.is_mask()) {
        return Err(parse_err(path, 1, format!("file holds a {file_kind} map but {kind} was requested")));
    }

    let mut rows = 0usize;
    if kind.is_mask() {
        let mut data = Vec::with_capacity(dims.len());
        for (ln, line) in lines {
            let before = data.len();
            for tok in line.split(',') {
                let code: u8 = tok
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, ln + 1, format!("bad label code '{}'", tok.trim())))?;
                let label = Label::from_code(code)
                    .ok_or_else(|| parse_err(path, ln + 1, format!("label code {code} out of range")))?;
                data.push(label);
            }
            check_row(path, ln + 1, data.len() - before, dims.cols)?;
            rows += 1;
        }
        check_rows(path, rows, dims)?;
        Ok(LoadedMap::Mask(SegmentationMask::new(Field::from_vec(dims, data)?)))
    } else {
        let mut data = Vec::with_capacity(dims.len());
        for (ln, line) in lines {
            let before = data.len();
            for tok in line.split(',') {
                let tok = tok.trim();
                let v = if tok.eq_ignore_ascii_case("nan") {
                    T::nan()
                } else {
                    T::from_str_radix(tok, 10).map_err(|_| parse_err(path, ln + 1, format!("bad number '{tok}'")))?
                };
                data.push(v);
            }
            check_row(path, ln + 1, data.len() - before, dims.cols)?;
            rows += 1;
        }
        check_rows(path, rows, dims)?;
        let grid = GridSpec::new(dims.cols, dims.rows)?;
        let map = SynopticMap::from_values(grid, kind, Field::from_vec(dims, data)?)?;
        Ok(LoadedMap::Scalar(map))
    }
}

fn parse_header(path: &Path, header: &str) -> Result<(Dims, MapKind)> {
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(parse_err(path, 1, format!("header must be 'cols,rows,kind', got '{header}'")));
    }
    let cols: usize = parts[0].parse().map_err(|_| parse_err(path, 1, format!("bad column count '{}'", parts[0])))?;
    let rows: usize = parts[1].parse().map_err(|_| parse_err(path, 1, format!("bad row count '{}'", parts[1])))?;
    let kind = MapKind::from_str(parts[2]).map_err(|m| parse_err(path, 1, m))?;
    if cols < 2 || rows < 2 {
        return Err(parse_err(path, 1, format!("grid {cols}x{rows} smaller than 2x2")));
    }
    Ok((Dims::new(rows, cols), kind))
}

fn check_row(path: &Path, line: usize, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch {
            expected: format!("{want} columns"),
            actual: format!("{got} columns on line {line} of {}", path.display()),
        });
    }
    Ok(())
}

fn check_rows(path: &Path, rows: usize, dims: Dims) -> Result<()> {
    if rows != dims.rows {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", dims.rows),
            actual: format!("{rows} rows in {}", path.display()),
        });
    }
    Ok(())
}

fn parse_err(path: &Path, line: usize, msg: String) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg }
}

pub fn scalar_map_to_csv<T: Scalar>(map: &SynopticMap<T>) -> String {
    let d = map.dims();
    let mut out = String::with_capacity(d.len() * 8);
    let _ = writeln!(out, "{},{},{}", d.cols, d.rows, map.kind);
    for r in 0..d.rows {
        for c in 0..d.cols {
            if c > 0 {
                out.push(',');
            }
            if *map.observed().at(r, c) {
                let _ = write!(out, "{}", map.values().at(r, c));
            } else {
                out.push_str("NaN");
            }
        }
        out.push('\n');
    }
    out
}

pub fn mask_to_csv(mask: &SegmentationMask, kind: MapKind) -> String {
    let d = mask.dims();
    let mut out = String::with_capacity(d.len() * 2 + 32);
    let _ = writeln!(out, "{},{},{}", d.cols, d.rows, kind);
    for r in 0..d.rows {
        for c in 0..d.cols {
            if c > 0 {
                out.push(',');
            }
            out.push((b'0' + mask.labels().at(r, c).code()) as char);
        }
        out.push('\n');
    }
    out
}

pub fn save_scalar_map<T: Scalar>(map: &SynopticMap<T>, path: &Path) -> Result<()> {
    write_atomic(path, scalar_map_to_csv(map).as_bytes())
}

/// Writes a mask as CSV, or as grayscale PNG when the path ends in `.png`.
pub fn save_mask(mask: &SegmentationMask, kind: MapKind, path: &Path) -> Result<()> {
    let is_png = path.extension().map(|e| e.eq_ignore_ascii_case("png")).unwrap_or(false);
    if is_png {
        let d = mask.dims();
        let buf: Vec<u8> = mask.labels().as_slice().iter().map(|l| l.code()).collect();
        let img = image::GrayImage::from_raw(d.cols as u32, d.rows as u32, buf).expect("buffer sized from dims");
        let mut bytes = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .map_err(|e| Error::Image { path: path.to_path_buf(), msg: e.to_string() })?;
        write_atomic(path, &bytes)
    } else {
        write_atomic(path, mask_to_csv(mask, kind).as_bytes())
    }
}

fn load_mask_png(path: &Path) -> Result<SegmentationMask> {
    let img =
        image::open(path).map_err(|e| Error::Image { path: path.to_path_buf(), msg: e.to_string() })?.into_luma8();
    let dims = Dims::new(img.height() as usize, img.width() as usize);
    let labels = img
        .as_raw()
        .iter()
        .map(|&v| Label::from_code(v).ok_or_else(|| parse_err(path, 0, format!("label code {v} out of range"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentationMask::new(Field::from_vec(dims, labels)?))
}

/// Write to a sibling temp file then rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}
