//! File formats: Pajek networks and partitions, SVG plots and maps, and a
//! minimal SVG well-formedness check.

pub mod choropleth;
pub mod pajek;
pub mod svg;

pub use choropleth::{render_choropleth_svg, ChoroplethSvg, Geometry};
pub use pajek::{read_net, read_net_file, read_partition, write_net, write_net_file, write_partition};
pub use svg::{render_network_svg, EdgeDisplay, LabelRule, LayoutConfig, NodeSizeRule};

/// True when `svg` has exactly one root element and every element is
/// closed in order. Attribute values must not contain `<` or `>`.
pub fn is_well_formed_svg(svg: &str) -> bool {
    let mut stack: Vec<&str> = Vec::new();
    let mut roots = 0;
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        if stack.is_empty() && !rest[..start].trim().is_empty() {
            return false;
        }
        let Some(len) = rest[start..].find('>') else {
            return false;
        };
        let tag = &rest[start + 1..start + len];
        rest = &rest[start + len + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            if stack.pop() != Some(name.trim()) {
                return false;
            }
            continue;
        }
        let name = tag.split_whitespace().next().unwrap_or("").trim_end_matches('/');
        if name.is_empty() {
            return false;
        }
        if stack.is_empty() {
            roots += 1;
        }
        if !tag.ends_with('/') {
            stack.push(name);
        }
    }
    stack.is_empty() && roots == 1 && rest.trim().is_empty()
}
