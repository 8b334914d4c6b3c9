//! Grid-domain encoding of locations and range queries.
//!
//! The geographic domain is an `L x L` grid (`L` a power of two). A full
//! binary tree is built over each axis; a node is identified by the bit
//! string of branch labels on the path from the root (left = 0, right = 1),
//! the root itself by the empty string, rendered `"∅"`. Locations map to the
//! node ids on the leaf-to-root path of each coordinate, range queries map
//! to minimal dyadic covers, and square node-aligned queries additionally
//! map to a single per-level scalar for predicate-encryption matching.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid domain parameters: {0}")]
    InvalidParams(String),
    #[error("coordinate ({lat}, {lon}) outside configured bounding box")]
    OutOfBounds { lat: f64, lon: f64 },
    #[error("position {pos} outside domain [0, {l})")]
    PositionOutOfDomain { pos: u32, l: u32 },
    #[error("invalid range [{lo}, {hi}] for domain [0, {l})")]
    InvalidRange { lo: u32, hi: u32, l: u32 },
    #[error("range span {span} exceeds size limit {max} (h_max = {h_max})")]
    SpanExceedsLimit { span: u32, max: u32, h_max: u8 },
    #[error("{axis} range is not aligned with a single tree node")]
    NotNodeAligned { axis: Axis },
    #[error("range is not square: x span {x_span}, y span {y_span}")]
    NotSquare { x_span: u32, y_span: u32 },
}

/// Geographic bounding box, degrees. Latitude maps to the y axis,
/// longitude to the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.min_lat && lat <= self.max_lat && lon >= self.min_lon && lon <= self.max_lon
    }

    /// Approximate metric extent (width, height) in meters using an
    /// equirectangular projection at the box's mid latitude. Adequate at
    /// city scale.
    pub fn extent_meters(&self) -> (f64, f64) {
        const METERS_PER_DEG_LAT: f64 = 110_574.0;
        const METERS_PER_DEG_LON_EQ: f64 = 111_320.0;
        let mid_lat = 0.5 * (self.min_lat + self.max_lat);
        let width = (self.max_lon - self.min_lon) * METERS_PER_DEG_LON_EQ * mid_lat.to_radians().cos();
        let height = (self.max_lat - self.min_lat) * METERS_PER_DEG_LAT;
        (width.abs(), height.abs())
    }
}

/// Default bounding box: the Los Angeles area used by the bundled dataset
/// tooling.
pub const LA_BBOX: BoundingBox = BoundingBox {
    min_lat: 33.6996,
    max_lat: 34.3423,
    min_lon: -118.6846,
    max_lon: -118.1444,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainParamsRepr", into = "DomainParamsRepr")]
pub struct DomainParams {
    log_l: u8,
    h_max: u8,
    bbox: BoundingBox,
}

/// Wire form of [`DomainParams`]: the grid side `l` is stored explicitly and
/// revalidated on load.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct DomainParamsRepr {
    l: u32,
    h_max: u8,
    bbox: BoundingBox,
}

impl TryFrom<DomainParamsRepr> for DomainParams {
    type Error = GeoError;
    fn try_from(r: DomainParamsRepr) -> Result<Self, GeoError> {
        if !r.l.is_power_of_two() {
            return Err(GeoError::InvalidParams(format!(
                "grid side {} is not a power of two",
                r.l
            )));
        }
        DomainParams::new(r.l.trailing_zeros() as u8, r.h_max, r.bbox)
    }
}

impl From<DomainParams> for DomainParamsRepr {
    fn from(p: DomainParams) -> Self {
        DomainParamsRepr {
            l: p.l(),
            h_max: p.h_max,
            bbox: p.bbox,
        }
    }
}

impl DomainParams {
    pub fn new(log_l: u8, h_max: u8, bbox: BoundingBox) -> Result<Self, GeoError> {
        if log_l == 0 || log_l > 26 {
            return Err(GeoError::InvalidParams(format!(
                "log_l must be in [1, 26], got {log_l}"
            )));
        }
        if h_max > log_l {
            return Err(GeoError::InvalidParams(format!(
                "h_max {h_max} exceeds log_l {log_l}"
            )));
        }
        if !(bbox.min_lat < bbox.max_lat && bbox.min_lon < bbox.max_lon) {
            return Err(GeoError::InvalidParams("degenerate bounding box".into()));
        }
        Ok(DomainParams { log_l, h_max, bbox })
    }

    /// Grid side length `L = 2^log_l`.
    pub fn l(&self) -> u32 {
        1 << self.log_l
    }

    pub fn log_l(&self) -> u8 {
        self.log_l
    }

    pub fn h_max(&self) -> u8 {
        self.h_max
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Largest permitted query span per axis: `L / 2^h_max`.
    pub fn max_query_span(&self) -> u32 {
        self.l() >> self.h_max
    }

    /// Attribute-space bound for level-value scalars; every scalar produced
    /// by [`hve_level_values`] is strictly below this.
    pub fn scalar_bound(&self) -> u64 {
        let l = self.l() as u64;
        2 * l * (2 * l - 1) + 2 * l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn prefix(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// A node of a dimension tree: the bit path from the root plus an optional
/// axis tag. `level` equals the path length; level 0 is the root, whose path
/// renders as `"∅"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub axis: Option<Axis>,
    bits: u32,
    level: u8,
}

impl NodeId {
    pub fn root() -> Self {
        NodeId {
            axis: None,
            bits: 0,
            level: 0,
        }
    }

    /// Node whose path is the top `level` bits of `value` in a `log_l`-bit
    /// domain.
    pub fn from_prefix(value: u32, level: u8, log_l: u8) -> Self {
        debug_assert!(level <= log_l);
        let bits = if level == 0 {
            0
        } else {
            value >> (log_l - level)
        };
        NodeId {
            axis: None,
            bits,
            level,
        }
    }

    /// Parse a rendered path such as `"011"` or `"∅"`.
    pub fn parse(path: &str) -> Option<Self> {
        if path == "∅" || path.is_empty() {
            return Some(NodeId::root());
        }
        if path.len() > 26 {
            return None;
        }
        let mut bits = 0u32;
        for c in path.chars() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return None,
                };
        }
        Some(NodeId {
            axis: None,
            bits,
            level: path.len() as u8,
        })
    }

    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.axis = Some(axis);
        self
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }

    pub fn left_child(&self) -> Self {
        NodeId {
            axis: self.axis,
            bits: self.bits << 1,
            level: self.level + 1,
        }
    }

    pub fn right_child(&self) -> Self {
        NodeId {
            axis: self.axis,
            bits: (self.bits << 1) | 1,
            level: self.level + 1,
        }
    }

    /// Inclusive leaf span `[lo, hi]` covered by this node in a `log_l`-bit
    /// domain.
    pub fn span(&self, log_l: u8) -> (u32, u32) {
        let width = 1u32 << (log_l - self.level);
        let lo = self.bits << (log_l - self.level);
        (lo, lo + width - 1)
    }

    /// Path string: branch labels from the root, `"∅"` for the root itself.
    pub fn path_string(&self) -> String {
        if self.level == 0 {
            return "∅".to_string();
        }
        (0..self.level)
            .rev()
            .map(|i| if (self.bits >> i) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Keyword form: axis prefix + path string, e.g. `"x011"`.
    pub fn keyword(&self, axis: Axis) -> String {
        format!("{}{}", axis.prefix(), self.path_string())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(axis) = self.axis {
            write!(f, "{}{}", axis.prefix(), self.path_string())
        } else {
            f.write_str(&self.path_string())
        }
    }
}

/// A cell of the `L x L` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridLocation {
    pub x: u32,
    pub y: u32,
}

impl GridLocation {
    pub fn new(x: u32, y: u32) -> Self {
        GridLocation { x, y }
    }
}

/// Minimal set of pairwise-disjoint nodes covering a 1D range exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeCover {
    pub nodes: Vec<NodeId>,
}

/// Inclusive 2D range in grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpatialRange {
    pub x_lo: u32,
    pub x_hi: u32,
    pub y_lo: u32,
    pub y_hi: u32,
}

impl SpatialRange {
    pub fn new(x_lo: u32, x_hi: u32, y_lo: u32, y_hi: u32) -> Self {
        SpatialRange {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    pub fn contains(&self, loc: GridLocation) -> bool {
        loc.x >= self.x_lo && loc.x <= self.x_hi && loc.y >= self.y_lo && loc.y <= self.y_hi
    }

    pub fn validate(&self, params: &DomainParams) -> Result<(), GeoError> {
        let l = params.l();
        if self.x_lo > self.x_hi || self.x_hi >= l {
            return Err(GeoError::InvalidRange {
                lo: self.x_lo,
                hi: self.x_hi,
                l,
            });
        }
        if self.y_lo > self.y_hi || self.y_hi >= l {
            return Err(GeoError::InvalidRange {
                lo: self.y_lo,
                hi: self.y_hi,
                l,
            });
        }
        Ok(())
    }

    pub fn x_span(&self) -> u32 {
        self.x_hi - self.x_lo + 1
    }

    pub fn y_span(&self) -> u32 {
        self.y_hi - self.y_lo + 1
    }
}

/// Scalar attribute for one tree level: `N_x * 2L + N_y` over pre-order node
/// ids, unique per (node, node) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HveLevelValue {
    pub level: u8,
    pub value: u64,
}

/// Snap a geographic coordinate to its grid cell by linear interpolation
/// inside the bounding box.
pub fn snap_to_grid(lat: f64, lon: f64, params: &DomainParams) -> Result<GridLocation, GeoError> {
    let bbox = params.bbox();
    if !bbox.contains(lat, lon) {
        return Err(GeoError::OutOfBounds { lat, lon });
    }
    let l = params.l();
    let fx = (lon - bbox.min_lon) / (bbox.max_lon - bbox.min_lon) * l as f64;
    let fy = (lat - bbox.min_lat) / (bbox.max_lat - bbox.min_lat) * l as f64;
    let clamp = |v: f64| -> u32 { (v.floor() as i64).clamp(0, (l - 1) as i64) as u32 };
    Ok(GridLocation::new(clamp(fx), clamp(fy)))
}

/// Node ids on the upward path from leaf `pos` to the root, leaf first,
/// root (empty id) last.
pub fn covering_nodes_1d(pos: u32, params: &DomainParams) -> Result<Vec<NodeId>, GeoError> {
    let l = params.l();
    if pos >= l {
        return Err(GeoError::PositionOutOfDomain { pos, l });
    }
    let log_l = params.log_l();
    Ok((0..=log_l)
        .rev()
        .map(|level| NodeId::from_prefix(pos, level, log_l))
        .collect())
}

/// Keyword set of an object at `loc`: covering node ids of both coordinates,
/// axis-prefixed. The root is omitted (it appears in every object), as are
/// nodes above the query-size limit (level < h_max).
pub fn object_keywords(
    loc: GridLocation,
    params: &DomainParams,
) -> Result<BTreeSet<String>, GeoError> {
    let mut keywords = BTreeSet::new();
    let min_level = params.h_max().max(1);
    for (axis, pos) in [(Axis::X, loc.x), (Axis::Y, loc.y)] {
        for node in covering_nodes_1d(pos, params)? {
            if node.level() >= min_level {
                keywords.insert(node.keyword(axis));
            }
        }
    }
    Ok(keywords)
}

/// Minimal dyadic cover of `[lo, hi]`: greedily take the largest aligned
/// node starting at the left end.
pub fn brc_cover_1d(lo: u32, hi: u32, params: &DomainParams) -> Result<RangeCover, GeoError> {
    let l = params.l();
    if lo > hi || hi >= l {
        return Err(GeoError::InvalidRange { lo, hi, l });
    }
    let span = hi - lo + 1;
    if params.h_max() > 0 && span > params.max_query_span() {
        return Err(GeoError::SpanExceedsLimit {
            span,
            max: params.max_query_span(),
            h_max: params.h_max(),
        });
    }
    let log_l = params.log_l();
    let mut nodes = Vec::new();
    let mut cursor = lo;
    loop {
        let align = if cursor == 0 {
            log_l as u32
        } else {
            cursor.trailing_zeros().min(log_l as u32)
        };
        let remaining = hi - cursor + 1;
        let fit = 31 - remaining.leading_zeros(); // floor(log2(remaining))
        let k = align.min(fit);
        nodes.push(NodeId::from_prefix(cursor, log_l - k as u8, log_l));
        let width = 1u32 << k;
        if hi - cursor < width {
            break;
        }
        cursor += width;
    }
    Ok(RangeCover { nodes })
}

fn keyword_depth(kw: &str) -> usize {
    if kw.ends_with('∅') {
        0
    } else {
        kw.len() - 1
    }
}

/// Decompose an arbitrary rectangle into conjunctive keyword pairs: the
/// cross join of the per-axis covers. Within each pair the keyword whose
/// node is closest to the leaf level comes first (smaller span, cheaper
/// first-keyword cost); ties and list order are lexicographic.
///
/// An axis covered by the root alone (the full domain, possible only with
/// h_max = 0) is replaced by the root's two children, because the root id
/// is never indexed.
pub fn decompose_range_query(
    r: &SpatialRange,
    params: &DomainParams,
) -> Result<Vec<(String, String)>, GeoError> {
    r.validate(params)?;
    let expand = |cover: RangeCover| -> Vec<NodeId> {
        if cover.nodes.len() == 1 && cover.nodes[0].is_root() {
            let root = cover.nodes[0];
            vec![root.left_child(), root.right_child()]
        } else {
            cover.nodes
        }
    };
    let x_nodes = expand(brc_cover_1d(r.x_lo, r.x_hi, params)?);
    let y_nodes = expand(brc_cover_1d(r.y_lo, r.y_hi, params)?);

    let mut pairs = Vec::with_capacity(x_nodes.len() * y_nodes.len());
    for xn in &x_nodes {
        for yn in &y_nodes {
            let kx = xn.keyword(Axis::X);
            let ky = yn.keyword(Axis::Y);
            let pair = match yn.level().cmp(&xn.level()) {
                std::cmp::Ordering::Greater => (ky, kx),
                std::cmp::Ordering::Less => (kx, ky),
                std::cmp::Ordering::Equal => {
                    if kx <= ky {
                        (kx, ky)
                    } else {
                        (ky, kx)
                    }
                }
            };
            pairs.push(pair);
        }
    }
    pairs.sort_by(|a, b| {
        keyword_depth(&b.0)
            .cmp(&keyword_depth(&a.0))
            .then_with(|| a.cmp(b))
    });
    Ok(pairs)
}

/// The single conjunctive pair for a range that aligns with one tree node
/// per axis. Errors name the first offending axis.
pub fn aligned_query_keywords(
    r: &SpatialRange,
    params: &DomainParams,
) -> Result<(String, String), GeoError> {
    r.validate(params)?;
    let xn = axis_aligned_node(r.x_lo, r.x_hi, Axis::X, params)?;
    let yn = axis_aligned_node(r.y_lo, r.y_hi, Axis::Y, params)?;
    let kx = xn.keyword(Axis::X);
    let ky = yn.keyword(Axis::Y);
    Ok(match yn.level().cmp(&xn.level()) {
        std::cmp::Ordering::Greater => (ky, kx),
        std::cmp::Ordering::Less => (kx, ky),
        std::cmp::Ordering::Equal => {
            if kx <= ky {
                (kx, ky)
            } else {
                (ky, kx)
            }
        }
    })
}

fn axis_aligned_node(lo: u32, hi: u32, axis: Axis, params: &DomainParams) -> Result<NodeId, GeoError> {
    let span = hi - lo + 1;
    if !span.is_power_of_two() || !lo.is_multiple_of(span) {
        return Err(GeoError::NotNodeAligned { axis });
    }
    if params.h_max() > 0 && span > params.max_query_span() {
        return Err(GeoError::SpanExceedsLimit {
            span,
            max: params.max_query_span(),
            h_max: params.h_max(),
        });
    }
    let level = params.log_l() - span.trailing_zeros() as u8;
    Ok(NodeId::from_prefix(lo, level, params.log_l()))
}

/// 0-based pre-order index of a node in the full binary tree of `2L - 1`
/// nodes (root = 0, left subtree before right).
pub fn preorder_id(node: &NodeId, params: &DomainParams) -> u64 {
    let log_l = params.log_l();
    debug_assert!(node.level() <= log_l);
    let mut idx = 0u64;
    for depth in 0..node.level() {
        let bit = (node.bits >> (node.level() - 1 - depth)) & 1;
        if bit == 0 {
            idx += 1;
        } else {
            idx += 1u64 << (log_l - depth);
        }
    }
    idx
}

/// Per-level scalars of a location: for each level from h_max up to the leaf
/// level, the pre-order ids of the two same-level ancestors combined as
/// `N_x * 2L + N_y`.
pub fn hve_level_values(loc: GridLocation, params: &DomainParams) -> Vec<HveLevelValue> {
    let log_l = params.log_l();
    let two_l = 2 * params.l() as u64;
    (params.h_max()..=log_l)
        .map(|level| {
            let xn = NodeId::from_prefix(loc.x, level, log_l);
            let yn = NodeId::from_prefix(loc.y, level, log_l);
            HveLevelValue {
                level,
                value: preorder_id(&xn, params) * two_l + preorder_id(&yn, params),
            }
        })
        .collect()
}

/// Scalar for a square, node-aligned query range at a common tree level.
pub fn hve_query_value(
    r: &SpatialRange,
    params: &DomainParams,
) -> Result<HveLevelValue, GeoError> {
    r.validate(params)?;
    if r.x_span() != r.y_span() {
        return Err(GeoError::NotSquare {
            x_span: r.x_span(),
            y_span: r.y_span(),
        });
    }
    let xn = axis_aligned_node(r.x_lo, r.x_hi, Axis::X, params)?;
    let yn = axis_aligned_node(r.y_lo, r.y_hi, Axis::Y, params)?;
    debug_assert_eq!(xn.level(), yn.level());
    let two_l = 2 * params.l() as u64;
    Ok(HveLevelValue {
        level: xn.level(),
        value: preorder_id(&xn, params) * two_l + preorder_id(&yn, params),
    })
}
