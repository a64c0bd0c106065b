//! SVG and CSV emitters for flow views and IIET graphs.

use std::fmt::Write;

use crate::address::address_to_word;
use crate::error::{Error, Result};
use crate::iet::FiniteIet;
use crate::numfmt::g17;
use crate::partition::{PhiConfig, DEFAULT_ADDRESS_CAP};
use crate::subst::{Letter, DEFAULT_WORD_CAP};

/// Default letter colours, assigned cyclically in alphabet order.
pub const DEFAULT_PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileLengths {
    Unit,
    /// Widths from the left Perron vector, normalised by `l · r = 1`.
    Natural,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub level: usize,
    /// Half-width of the flow view in tile units.
    pub window: f64,
    pub width: u32,
    pub height: u32,
    pub palette: Vec<String>,
    pub lengths: TileLengths,
    /// Draw vertical connectors at jumps of an IET graph.
    pub connectors: bool,
    pub address_cap: usize,
    pub word_cap: usize,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            level: 0,
            window: 8.0,
            width: 800,
            height: 800,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            lengths: TileLengths::Unit,
            connectors: false,
            address_cap: DEFAULT_ADDRESS_CAP,
            word_cap: DEFAULT_WORD_CAP,
        }
    }
}

impl RenderSpec {
    fn validate(&self) -> Result<()> {
        if !self.window.is_finite() || self.window < 1.0 {
            return Err(Error::Config(format!(
                "window must be >= 1, got {}",
                self.window
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        if self.palette.is_empty() {
            return Err(Error::Config("palette is empty".into()));
        }
        Ok(())
    }

    fn color(&self, letter: Letter) -> &str {
        &self.palette[letter % self.palette.len()]
    }
}

/// One clipped tile of a flow-view band.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub letter: Letter,
    pub x0: f64,
    pub x1: f64,
}

/// A horizontal band of the flow view: one address (or one letter at level 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub label: String,
    pub y0: f64,
    pub y1: f64,
    pub tiles: Vec<Tile>,
}

fn tile_widths(config: &PhiConfig, lengths: TileLengths) -> Vec<f64> {
    match lengths {
        TileLengths::Unit => vec![1.0; config.rule().size()],
        TileLengths::Natural => config.perron().left.clone(),
    }
}

/// Lays out `letters` around the origin cell `[0, w)` and clips to `[-w, w]`.
fn layout(letters: &[Letter], origin: usize, widths: &[f64], window: f64) -> Vec<Tile> {
    let mut right = Vec::new();
    let mut x = 0.0;
    for &a in &letters[origin..] {
        if x >= window {
            break;
        }
        right.push(Tile {
            letter: a,
            x0: x,
            x1: (x + widths[a]).min(window),
        });
        x += widths[a];
    }
    let mut left = Vec::new();
    let mut x = 0.0;
    for &a in letters[..origin].iter().rev() {
        if x <= -window {
            break;
        }
        left.push(Tile {
            letter: a,
            x0: (x - widths[a]).max(-window),
            x1: x,
        });
        x -= widths[a];
    }
    left.reverse();
    left.extend(right);
    left.retain(|t| t.x1 > t.x0);
    left
}

/// Band geometry of the level-`spec.level` flow view.
pub fn flow_view_bands(config: &PhiConfig, spec: &RenderSpec) -> Result<Vec<Band>> {
    spec.validate()?;
    let rule = config.rule();
    let widths = tile_widths(config, spec.lengths);
    if spec.level == 0 {
        return Ok(config
            .initial_order()
            .iter()
            .map(|&a| {
                let y0 = config.phi0(a);
                Band {
                    label: rule.letter_char(a).to_string(),
                    y0,
                    y1: y0 + config.perron().measure(a),
                    tiles: layout(&[a], 0, &widths, spec.window),
                }
            })
            .collect());
    }
    let mut bands = Vec::new();
    for iv in config.intervals(spec.level, spec.address_cap)? {
        let word = address_to_word(rule, &iv.address, spec.word_cap)?;
        let origin = word.origin_index.expect("origin set") - 1;
        bands.push(Band {
            label: iv.address.display(rule),
            y0: iv.left,
            y1: iv.right(),
            tiles: layout(&word.letters, origin, &widths, spec.window),
        });
    }
    bands.sort_by(|a, b| a.y0.total_cmp(&b.y0));
    Ok(bands)
}

fn px(v: f64) -> String {
    format!("{v:.4}")
}

fn svg_header(out: &mut String, width: u32, height: u32) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    );
}

/// Flow view: each band is drawn as the supertile word around the origin.
pub fn flow_view_svg(config: &PhiConfig, spec: &RenderSpec) -> Result<String> {
    let bands = flow_view_bands(config, spec)?;
    let rule = config.rule();
    let (w, h) = (spec.width as f64, spec.height as f64);
    let sx = |x: f64| (x + spec.window) / (2.0 * spec.window) * w;
    let sy = |y: f64| (1.0 - y) * h;
    let mut out = String::new();
    svg_header(&mut out, spec.width, spec.height);
    for band in &bands {
        let _ = writeln!(
            out,
            r#"<g class="band" data-address="{}" data-y0="{}" data-y1="{}">"#,
            band.label,
            g17(band.y0),
            g17(band.y1)
        );
        let top = sy(band.y1);
        let height = sy(band.y0) - top;
        for t in &band.tiles {
            let _ = writeln!(
                out,
                r#"<rect class="tile" data-letter="{}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                rule.letter_char(t.letter),
                px(sx(t.x0)),
                px(top),
                px(sx(t.x1) - sx(t.x0)),
                px(height),
                spec.color(t.letter)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#000000" stroke-width="1"/>"##,
        px(sy(0.0)),
        px(sy(1.0)),
        x = px(sx(0.0)),
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Flow-view geometry, one row per clipped tile.
pub fn flow_view_csv(config: &PhiConfig, spec: &RenderSpec) -> Result<String> {
    let bands = flow_view_bands(config, spec)?;
    let rule = config.rule();
    let mut out = String::from("address,y0,y1,letter,x0,x1\n");
    for band in &bands {
        for t in &band.tiles {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                band.label,
                g17(band.y0),
                g17(band.y1),
                rule.letter_char(t.letter),
                g17(t.x0),
                g17(t.x1)
            );
        }
    }
    Ok(out)
}

/// Endpoints of the jump connector after piece `i`, if the graph jumps there.
fn jumps(iet: &FiniteIet) -> Vec<(f64, f64, f64)> {
    iet.pieces()
        .windows(2)
        .filter_map(|w| {
            let x = w[1].left;
            let (a, b) = (x + w[0].translation, x + w[1].translation);
            ((a - b).abs() > 1e-12).then_some((x, a, b))
        })
        .collect()
}

/// Graph of an exchange in the unit square.
pub fn iet_graph_svg(iet: &FiniteIet, spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let sx = |x: f64| x * w;
    let sy = |y: f64| (1.0 - y) * h;
    let mut out = String::new();
    svg_header(&mut out, spec.width, spec.height);
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="0" y="0" width="{}" height="{}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        spec.width, spec.height
    );
    let color = &spec.palette[0];
    for p in iet.pieces() {
        let _ = writeln!(
            out,
            r#"<line class="piece" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1"/>"#,
            px(sx(p.left)),
            px(sy(p.left + p.translation)),
            px(sx(p.right())),
            px(sy(p.right() + p.translation)),
        );
    }
    if spec.connectors {
        for (x, a, b) in jumps(iet) {
            let _ = writeln!(
                out,
                r##"<line class="jump" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#bbbbbb" stroke-width="0.5"/>"##,
                px(sy(a)),
                px(sy(b)),
                x = px(sx(x)),
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Graph segments as data, one row per piece.
pub fn iet_graph_csv(iet: &FiniteIet) -> String {
    let mut out = String::from("x0,y0,x1,y1\n");
    for p in iet.pieces() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            g17(p.left),
            g17(p.left + p.translation),
            g17(p.right()),
            g17(p.right() + p.translation)
        );
    }
    out
}
