//! Verdict maps. With a geometry file each unit is drawn as its polygon;
//! without one, units are laid out as a labeled tile grid.
//!
//! Geometry files hold one polygon per line: the unit key followed by
//! whitespace-separated `x,y` vertices. Blank lines and lines starting with
//! `#` are skipped.
//!
//! ```text
//! OH 10,10 60,10 60,50 10,50
//! NEW ZEALAND 300,400 340,400 320,450
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::divergence::Verdict;
use crate::error::{Error, Result};
use crate::io::svg::xml_escape;

pub const NO_DATA_FILL: &str = "#bbbbbb";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Geometry {
    pub polygons: BTreeMap<String, Vec<(f64, f64)>>,
}

impl Geometry {
    pub fn parse(text: &str) -> Result<Self> {
        let mut polygons = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let mut split = tokens.len();
            while split > 0 && parse_point(tokens[split - 1]).is_some() {
                split -= 1;
            }
            if split == 0 {
                return Err(Error::parse(line_no, "polygon line needs a unit key"));
            }
            let points: Vec<(f64, f64)> = tokens[split..].iter().filter_map(|t| parse_point(t)).collect();
            if points.len() < 3 {
                return Err(Error::parse(line_no, "polygon needs at least three vertices"));
            }
            let unit = tokens[..split].join(" ");
            if polygons.insert(unit.clone(), points).is_some() {
                return Err(Error::parse(line_no, format!("duplicate polygon for `{unit}`")));
            }
        }
        Ok(Self { polygons })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

fn parse_point(tok: &str) -> Option<(f64, f64)> {
    let (x, y) = tok.split_once(',')?;
    let x: f64 = x.parse().ok()?;
    let y: f64 = y.parse().ok()?;
    (x.is_finite() && y.is_finite()).then_some((x, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoroplethSvg {
    pub svg: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fill {
    Verdict(Verdict),
    Ineligible,
    NoData,
}

impl Fill {
    fn attr(self) -> &'static str {
        match self {
            Fill::Verdict(Verdict::International) => "#ffffff",
            Fill::Verdict(Verdict::Domestic) => "#3b6fb6",
            Fill::Ineligible => "url(#hatch)",
            Fill::NoData => NO_DATA_FILL,
        }
    }
}

const TILE: f64 = 60.0;
const COLUMNS: usize = 10;

fn tile_origin(k: usize) -> (f64, f64) {
    let col = (k % COLUMNS) as f64;
    let row = (k / COLUMNS) as f64;
    (20.0 + col * (TILE + 4.0), 60.0 + row * (TILE + 4.0))
}

fn write_tile(svg: &mut String, k: usize, unit: &str, fill: Fill) {
    let (x, y) = tile_origin(k);
    let _ = writeln!(
        svg,
        r##"<g class="unit"><rect x="{x:.1}" y="{y:.1}" width="{TILE:.1}" height="{TILE:.1}" fill="{}" stroke="#333333"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text></g>"##,
        fill.attr(),
        x + TILE / 2.0,
        y + TILE / 2.0 + 4.0,
        xml_escape(unit)
    );
}

fn write_legend(svg: &mut String) {
    let entries = [
        (Fill::Verdict(Verdict::International), "international predicts better"),
        (Fill::Verdict(Verdict::Domestic), "domestic predicts better"),
        (Fill::Ineligible, "ineligible"),
        (Fill::NoData, "no geometry"),
    ];
    let _ = writeln!(svg, r#"<g id="legend">"#);
    for (i, (fill, label)) in entries.iter().enumerate() {
        let x = 20.0 + i as f64 * 200.0;
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.1}" y="20" width="16" height="16" fill="{}" stroke="#333333"/><text x="{:.1}" y="33">{label}</text>"##,
            fill.attr(),
            x + 22.0
        );
    }
    let _ = writeln!(svg, "</g>");
}

/// Renders verdicts and ineligible units. A unit missing from `geometry`
/// is drawn as a grey tile below the map and listed in `warnings`.
pub fn render_choropleth_svg(
    verdicts: &BTreeMap<String, Verdict>,
    ineligible: &[String],
    geometry: Option<&Geometry>,
) -> ChoroplethSvg {
    let mut units: BTreeMap<&str, Fill> = BTreeMap::new();
    for unit in ineligible {
        units.insert(unit, Fill::Ineligible);
    }
    for (unit, v) in verdicts {
        units.insert(unit, Fill::Verdict(*v));
    }

    let mut warnings = Vec::new();
    let mut body = String::new();
    let mut tiles: Vec<(&str, Fill)> = Vec::new();
    let mut map_bottom: f64 = 60.0;
    match geometry {
        Some(geo) => {
            for (&unit, &fill) in &units {
                match geo.polygons.get(unit) {
                    Some(points) => {
                        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                        let _ = writeln!(
                            body,
                            r##"<polygon class="unit" data-unit="{}" points="{}" fill="{}" stroke="#333333"/>"##,
                            xml_escape(unit),
                            pts.join(" "),
                            fill.attr()
                        );
                        for &(_, y) in points {
                            map_bottom = map_bottom.max(y);
                        }
                    }
                    None => {
                        warnings.push(format!("no geometry for unit `{unit}`"));
                        tiles.push((unit, Fill::NoData));
                    }
                }
            }
        }
        None => tiles.extend(units.iter().map(|(&u, &f)| (u, f))),
    }

    let tile_shift = if geometry.is_some() { map_bottom + 20.0 - 60.0 } else { 0.0 };
    let mut tile_svg = String::new();
    for (k, (unit, fill)) in tiles.iter().enumerate() {
        write_tile(&mut tile_svg, k, unit, *fill);
    }
    let rows = tiles.len().div_ceil(COLUMNS);
    let height = (60.0 + tile_shift + rows as f64 * (TILE + 4.0) + 20.0).max(map_bottom + 20.0);
    let width = (40.0 + COLUMNS as f64 * (TILE + 4.0)).max(820.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="6" height="6" fill="#dddddd"/><line x1="0" y1="0" x2="0" y2="6" stroke="#888888" stroke-width="2"/></pattern></defs>"##
    );
    write_legend(&mut svg);
    svg.push_str(&body);
    if !tile_svg.is_empty() {
        let _ = writeln!(svg, r#"<g id="tiles" transform="translate(0 {tile_shift:.1})">"#);
        svg.push_str(&tile_svg);
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    ChoroplethSvg { svg, warnings }
}
