//! ASCII point-cloud files.
//!
//! XYZ: one point per line, `x y z [label [class]]`, fields separated by
//! spaces or tabs, `#` starts a comment line. The label column holds a
//! dataset class id that [`LabelMapping`] turns into Ground/NonGround; the
//! optional class column preserves the original id.
//!
//! PLY: `format ascii 1.0` with a `vertex` element carrying `x`, `y`, `z`
//! and optionally a class property (`label`, `class`, `classification`,
//! `scalar_class` or `scalar_label`) and a `class_id` property.
//!
//! Writers emit the binary label (Ground = 1) and, when the cloud carries
//! them, the original class ids.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::{Label, Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CloudFileFormat {
    Xyz,
    PlyAscii,
}

impl CloudFileFormat {
    /// Guesses the format from the file extension; anything but `.ply` is
    /// read as XYZ.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => Self::PlyAscii,
            _ => Self::Xyz,
        }
    }
}

impl FromStr for CloudFileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" | "txt" => Ok(Self::Xyz),
            "ply" => Ok(Self::PlyAscii),
            other => Err(Error::InvalidParameter(format!("unknown cloud format {other:?}"))),
        }
    }
}

/// Dataset class id to binary label. Ids that are not listed become
/// NonGround, with one warning per id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    classes: BTreeMap<i64, Label>,
}

/// Binary labels as written by [`write_cloud`]: 1 is Ground, 0 NonGround.
impl Default for LabelMapping {
    fn default() -> Self {
        Self::new(BTreeMap::from([(0, Label::NonGround), (1, Label::Ground)]))
    }
}

impl LabelMapping {
    pub fn new(classes: BTreeMap<i64, Label>) -> Self {
        Self { classes }
    }

    /// The given ids are Ground, everything else NonGround.
    pub fn ground_classes(ids: &[i64]) -> Self {
        Self {
            classes: ids.iter().map(|&i| (i, Label::Ground)).collect(),
        }
    }

    /// Parses `id=ground|nonground` pairs separated by commas, e.g.
    /// `1=ground,2=nonground`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut classes = BTreeMap::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (id, label) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("bad label mapping entry {item:?}")))?;
            let id: i64 = id
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad class id in {item:?}")))?;
            let label = match label.trim().to_ascii_lowercase().as_str() {
                "ground" | "1" => Label::Ground,
                "nonground" | "non-ground" | "0" => Label::NonGround,
                other => {
                    return Err(Error::InvalidParameter(format!("bad label {other:?} in mapping")))
                }
            };
            classes.insert(id, label);
        }
        Ok(Self { classes })
    }

    pub fn get(&self, class: i64) -> Option<Label> {
        self.classes.get(&class).copied()
    }
}

struct Mapper<'a> {
    mapping: &'a LabelMapping,
    warned: BTreeSet<i64>,
}

impl Mapper<'_> {
    fn map(&mut self, class: i64) -> Label {
        self.mapping.get(class).unwrap_or_else(|| {
            if self.warned.insert(class) {
                log::warn!("class id {class} is not in the label mapping; treating it as non-ground");
            }
            Label::NonGround
        })
    }
}

struct Columns {
    points: Vec<Point3>,
    labels: Vec<Label>,
    classes: Vec<i64>,
}

impl Columns {
    fn into_cloud(self) -> Result<PointCloud> {
        let n = self.points.len();
        let mut cloud = PointCloud::new(self.points)?;
        if n > 0 && self.labels.len() == n {
            cloud.labels = Some(self.labels);
            cloud.class_ids = Some(self.classes);
        }
        Ok(cloud)
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_coord(tok: &str) -> std::result::Result<f64, String> {
    let v: f64 = tok.parse().map_err(|_| format!("bad coordinate {tok:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite coordinate {tok:?}"))
    }
}

/// Class ids are integers; integral decimals such as `2.0` are accepted.
fn parse_class(tok: &str) -> std::result::Result<i64, String> {
    if let Ok(v) = tok.parse::<i64>() {
        return Ok(v);
    }
    match tok.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(format!("bad class id {tok:?}")),
    }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|t| !t.is_empty())
}

fn read_xyz(path: &Path, reader: impl BufRead, mapper: &mut Mapper<'_>) -> Result<Columns> {
    let mut cols = Columns {
        points: Vec::new(),
        labels: Vec::new(),
        classes: Vec::new(),
    };
    let mut labelled: Option<bool> = None;
    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim_start().starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = fields(line).collect();
        if !(3..=5).contains(&toks.len()) {
            return Err(parse_err(path, no, format!("expected 3 to 5 fields, found {}", toks.len())));
        }
        let c = |i: usize| parse_coord(toks[i]).map_err(|m| parse_err(path, no, m));
        cols.points.push(Point3::new(c(0)?, c(1)?, c(2)?));
        let has_label = toks.len() >= 4;
        if *labelled.get_or_insert(has_label) != has_label {
            return Err(parse_err(path, no, "label column present on some lines only"));
        }
        if has_label {
            let class = parse_class(toks[3]).map_err(|m| parse_err(path, no, m))?;
            cols.labels.push(mapper.map(class));
            let original = match toks.get(4) {
                Some(t) => parse_class(t).map_err(|m| parse_err(path, no, m))?,
                None => class,
            };
            cols.classes.push(original);
        }
    }
    Ok(cols)
}

const PLY_LABEL_NAMES: [&str; 5] = ["label", "class", "classification", "scalar_class", "scalar_label"];

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn next_line(lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>) -> Result<Option<(usize, String)>> {
    match lines.next() {
        None => Ok(None),
        Some((no, l)) => {
            let mut l = l?;
            if l.ends_with('\r') {
                l.pop();
            }
            Ok(Some((no, l)))
        }
    }
}

fn read_ply(path: &Path, reader: impl BufRead, mapper: &mut Mapper<'_>) -> Result<Columns> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    match next_line(&mut lines)? {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(path, 1, "missing ply magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ascii = false;
    loop {
        let (no, line) = next_line(&mut lines)?.ok_or_else(|| parse_err(path, 0, "header not terminated"))?;
        let toks: Vec<&str> = fields(&line).collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => ascii = true,
            ["format", other, ..] => {
                return Err(parse_err(path, no, format!("unsupported PLY format {other}")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(path, no, "bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", ..] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(path, no, "property before element"))?;
                if el.name == "vertex" {
                    return Err(parse_err(path, no, "list properties on vertices are not supported"));
                }
                el.properties.push(String::new());
            }
            ["property", _ty, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(path, no, "property before element"))?
                .properties
                .push(name.to_string()),
            _ => return Err(parse_err(path, no, format!("unexpected header line {line:?}"))),
        }
    }
    if !ascii {
        return Err(parse_err(path, 1, "missing 'format ascii 1.0'"));
    }
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(path, 0, "no vertex element"))?;
    let vertex = &elements[vi];
    let find = |n: &str| vertex.properties.iter().position(|p| p == n);
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(path, 0, "vertex element lacks x, y or z")),
    };
    let label_col = PLY_LABEL_NAMES.iter().find_map(|n| find(n));
    let class_col = find("class_id");

    // Skip the bodies of elements that precede the vertices.
    let mut skip: usize = elements[..vi].iter().map(|e| e.count).sum();
    let mut cols = Columns {
        points: Vec::with_capacity(vertex.count),
        labels: Vec::new(),
        classes: Vec::new(),
    };
    while cols.points.len() < vertex.count {
        let (no, line) = next_line(&mut lines)?
            .ok_or_else(|| parse_err(path, 0, format!("expected {} vertices", vertex.count)))?;
        if skip > 0 {
            skip -= 1;
            continue;
        }
        let toks: Vec<&str> = fields(&line).collect();
        if toks.len() != vertex.properties.len() {
            return Err(parse_err(
                path,
                no,
                format!("expected {} values, found {}", vertex.properties.len(), toks.len()),
            ));
        }
        let c = |i: usize| parse_coord(toks[i]).map_err(|m| parse_err(path, no, m));
        cols.points.push(Point3::new(c(ix)?, c(iy)?, c(iz)?));
        if let Some(lc) = label_col {
            let class = parse_class(toks[lc]).map_err(|m| parse_err(path, no, m))?;
            cols.labels.push(mapper.map(class));
            let original = match class_col {
                Some(cc) => parse_class(toks[cc]).map_err(|m| parse_err(path, no, m))?,
                None => class,
            };
            cols.classes.push(original);
        }
    }
    Ok(cols)
}

/// Reads a cloud. `mapping` defaults to [`LabelMapping::default`].
pub fn read_cloud(
    path: impl AsRef<Path>,
    format: CloudFileFormat,
    mapping: Option<&LabelMapping>,
) -> Result<PointCloud> {
    let path = path.as_ref();
    let default = LabelMapping::default();
    let mut mapper = Mapper {
        mapping: mapping.unwrap_or(&default),
        warned: BTreeSet::new(),
    };
    let reader = BufReader::new(File::open(path)?);
    let cols = match format {
        CloudFileFormat::Xyz => read_xyz(path, reader, &mut mapper)?,
        CloudFileFormat::PlyAscii => read_ply(path, reader, &mut mapper)?,
    };
    cols.into_cloud().map_err(|e| match e {
        Error::InvalidInput(msg) => parse_err(path, 0, msg),
        other => other,
    })
}

/// Writes a cloud. Coordinates use the shortest representation that reads
/// back to the same `f64`.
pub fn write_cloud(cloud: &PointCloud, path: impl AsRef<Path>, format: CloudFileFormat) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut w = BufWriter::new(File::create(&path)?);
    let labels = cloud.labels.as_deref();
    let classes = labels.and(cloud.class_ids.as_deref());
    if format == CloudFileFormat::PlyAscii {
        writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
        writeln!(w, "property double x\nproperty double y\nproperty double z")?;
        if labels.is_some() {
            writeln!(w, "property uchar label")?;
        }
        if classes.is_some() {
            writeln!(w, "property int class_id")?;
        }
        writeln!(w, "end_header")?;
    }
    for (i, p) in cloud.points.iter().enumerate() {
        write!(w, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(l) = labels {
            write!(w, " {}", l[i].code())?;
        }
        if let Some(c) = classes {
            write!(w, " {}", c[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
