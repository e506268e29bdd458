//! Multiblock Cartesian meshes with a non-matching interface grid.
//!
//! The domain is split into a grid of rectangular subdomains (blocks), each with
//! its own uniform Cartesian partition. Where two blocks meet, their edge traces
//! generally do not match; the interface grid is the common refinement of the two
//! traces, and each of its sub-edges carries one shared flux unknown. A cell
//! touching the interface is sub-partitioned into strips, one per sub-edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CellId = usize;
pub type EdgeId = usize;
pub type SubEdgeId = usize;

/// Axis of an edge normal: `X` for vertical edges, `Y` for horizontal ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// One of the four faces of a rectangular cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceSide {
    West = 0,
    East = 1,
    South = 2,
    North = 3,
}

pub const FACE_SIDES: [FaceSide; 4] = [
    FaceSide::West,
    FaceSide::East,
    FaceSide::South,
    FaceSide::North,
];

impl FaceSide {
    /// Sign of the globally oriented normal (+x/+y) relative to the outward
    /// normal of the cell on this face.
    pub fn orientation(self) -> f64 {
        match self {
            FaceSide::East | FaceSide::North => 1.0,
            FaceSide::West | FaceSide::South => -1.0,
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            FaceSide::West | FaceSide::East => Axis::X,
            FaceSide::South | FaceSide::North => Axis::Y,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Tag describing how per-block cell counts were chosen. Metadata only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefinementPattern {
    Uniform,
    /// Blocks with even `bx + by` are coarse; the rest use `ratio` times the
    /// coarse cell count per side.
    Checkerboard { coarse_n: usize, ratio: usize },
    Custom,
}

/// Multiblock domain description: block partition lines plus per-block cell counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub origin: (f64, f64),
    pub extent: (f64, f64),
    pub nbx: usize,
    pub nby: usize,
    /// Block partition lines, length `nbx + 1`, first/last equal to the domain bounds.
    pub xlines: Vec<f64>,
    /// Length `nby + 1`.
    pub ylines: Vec<f64>,
    /// Cell counts `(nx, ny)` per block, indexed `bx + nbx * by`.
    pub cells_per_block: Vec<(usize, usize)>,
    pub pattern: RefinementPattern,
}

impl DomainSpec {
    /// Uniform block grid over `origin + extent` with explicit per-block counts.
    pub fn uniform_blocks(
        origin: (f64, f64),
        extent: (f64, f64),
        nbx: usize,
        nby: usize,
        cells_per_block: Vec<(usize, usize)>,
        pattern: RefinementPattern,
    ) -> Self {
        let xlines = (0..=nbx)
            .map(|i| origin.0 + extent.0 * (i as f64 / nbx as f64))
            .collect();
        let ylines = (0..=nby)
            .map(|j| origin.1 + extent.1 * (j as f64 / nby as f64))
            .collect();
        DomainSpec {
            origin,
            extent,
            nbx,
            nby,
            xlines,
            ylines,
            cells_per_block,
            pattern,
        }
    }

    /// Unit-square checkerboard: blocks with even `bx + by` get `coarse_n` cells
    /// per side, the others `ratio * coarse_n`.
    pub fn checkerboard(nbx: usize, nby: usize, coarse_n: usize, ratio: usize) -> Self {
        let mut counts = Vec::with_capacity(nbx * nby);
        for by in 0..nby {
            for bx in 0..nbx {
                let n = if (bx + by) % 2 == 0 {
                    coarse_n
                } else {
                    coarse_n * ratio
                };
                counts.push((n, n));
            }
        }
        DomainSpec::uniform_blocks(
            (0.0, 0.0),
            (1.0, 1.0),
            nbx,
            nby,
            counts,
            RefinementPattern::Checkerboard { coarse_n, ratio },
        )
    }

    /// Single uniform block on the unit square.
    pub fn single_block(nx: usize, ny: usize) -> Self {
        DomainSpec::uniform_blocks(
            (0.0, 0.0),
            (1.0, 1.0),
            1,
            1,
            vec![(nx, ny)],
            RefinementPattern::Uniform,
        )
    }

    /// Same block layout with every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let mut out = self.clone();
        out.cells_per_block = self
            .cells_per_block
            .iter()
            .map(|&(nx, ny)| (nx * factor, ny * factor))
            .collect();
        out.pattern = match self.pattern {
            RefinementPattern::Checkerboard { coarse_n, ratio } => RefinementPattern::Checkerboard {
                coarse_n: coarse_n * factor,
                ratio,
            },
            ref p => p.clone(),
        };
        out
    }

    pub fn block_index(&self, bx: usize, by: usize) -> usize {
        bx + self.nbx * by
    }

    pub fn block_rect(&self, bx: usize, by: usize) -> Rect {
        Rect::new(
            self.xlines[bx],
            self.ylines[by],
            self.xlines[bx + 1],
            self.ylines[by + 1],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.extent.0 <= 0.0 || self.extent.1 <= 0.0 {
            return Err(Error::config("domain extent must be strictly positive"));
        }
        if self.nbx == 0 || self.nby == 0 {
            return Err(Error::config("block counts must be at least 1"));
        }
        if self.xlines.len() != self.nbx + 1 || self.ylines.len() != self.nby + 1 {
            return Err(Error::config("block partition lines do not match block counts"));
        }
        let x_end = self.origin.0 + self.extent.0;
        let y_end = self.origin.1 + self.extent.1;
        let tol_x = 1e-12 * self.extent.0;
        let tol_y = 1e-12 * self.extent.1;
        if (self.xlines[0] - self.origin.0).abs() > tol_x
            || (self.xlines[self.nbx] - x_end).abs() > tol_x
            || (self.ylines[0] - self.origin.1).abs() > tol_y
            || (self.ylines[self.nby] - y_end).abs() > tol_y
        {
            return Err(Error::config(
                "blocks do not tile the domain: partition lines must span origin..origin+extent",
            ));
        }
        if self.xlines.windows(2).any(|w| w[1] <= w[0])
            || self.ylines.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config(
                "blocks do not tile the domain: partition lines must be strictly increasing",
            ));
        }
        if self.cells_per_block.len() != self.nbx * self.nby {
            return Err(Error::config("cells_per_block length must equal nbx*nby"));
        }
        if self.cells_per_block.iter().any(|&(nx, ny)| nx == 0 || ny == 0) {
            return Err(Error::config("per-block cell counts must be at least 1"));
        }
        Ok(())
    }
}

/// Uniform Cartesian grid of one subdomain.
#[derive(Clone, Debug)]
pub struct SubdomainGrid {
    pub id: usize,
    pub block_ix: usize,
    pub block_iy: usize,
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Grid lines, including both ends; the single source for cell bounds and traces.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Global id of local cell 0.
    pub cell_offset: usize,
}

impl SubdomainGrid {
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn local_cell(&self, ix: usize, iy: usize) -> usize {
        ix + self.nx * iy
    }

    pub fn global_cell(&self, ix: usize, iy: usize) -> CellId {
        self.cell_offset + self.local_cell(ix, iy)
    }

    pub fn cell_rect(&self, ix: usize, iy: usize) -> Rect {
        Rect::new(self.xs[ix], self.ys[iy], self.xs[ix + 1], self.ys[iy + 1])
    }

    /// Cell indices containing the point, clamped to the grid.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        let ix = (((x - self.rect.x0) / self.hx).floor() as isize)
            .clamp(0, self.nx as isize - 1) as usize;
        let iy = (((y - self.rect.y0) / self.hy).floor() as isize)
            .clamp(0, self.ny as isize - 1) as usize;
        (ix, iy)
    }
}

/// Flux carriers of one cell face: a single edge away from the interface, or the
/// ordered sub-edges of the interface grid covering the face.
#[derive(Clone, Debug)]
pub enum FaceDofs {
    Edge(EdgeId),
    Interface(Vec<SubEdgeId>),
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub id: CellId,
    pub subdomain: usize,
    pub rect: Rect,
    /// h_T = sqrt(hx² + hy²).
    pub diameter: f64,
    /// Indexed by `FaceSide as usize`.
    pub faces: [FaceDofs; 4],
}

impl Cell {
    pub fn is_enhanced(&self) -> bool {
        self.faces.iter().any(|f| matches!(f, FaceDofs::Interface(_)))
    }
}

/// Edge away from the interface (interior to a subdomain or on the outer boundary).
#[derive(Clone, Debug)]
pub struct Edge {
    pub axis: Axis,
    /// Coordinate of the line the edge lies on (x for `Axis::X`).
    pub line: f64,
    /// Extent along the edge.
    pub span: (f64, f64),
    /// Cell on the negative-normal side (west/south); `None` on the boundary.
    pub neg_cell: Option<CellId>,
    pub pos_cell: Option<CellId>,
}

impl Edge {
    pub fn length(&self) -> f64 {
        self.span.1 - self.span.0
    }

    pub fn is_boundary(&self) -> bool {
        self.neg_cell.is_none() || self.pos_cell.is_none()
    }
}

/// One element of the interface grid: a sub-interval of a block interface shared
/// by exactly one cell on each side.
#[derive(Clone, Debug)]
pub struct SubEdge {
    pub segment: usize,
    pub axis: Axis,
    pub line: f64,
    pub span: (f64, f64),
    pub neg_cell: CellId,
    pub pos_cell: CellId,
    /// Index of this sub-edge within the face sub-partition of each adjacent cell.
    pub neg_sub_index: usize,
    pub pos_sub_index: usize,
}

impl SubEdge {
    pub fn length(&self) -> f64 {
        self.span.1 - self.span.0
    }
}

/// A maximal straight interface piece between two adjacent blocks.
#[derive(Clone, Debug)]
pub struct InterfaceSegment {
    pub axis: Axis,
    pub line: f64,
    pub span: (f64, f64),
    pub neg_block: usize,
    pub pos_block: usize,
    /// Common refinement of the two traces, including both endpoints.
    pub breakpoints: Vec<f64>,
    pub subedge_offset: usize,
    pub n_subedges: usize,
}

#[derive(Clone, Debug, Default)]
pub struct InterfaceGrid {
    pub segments: Vec<InterfaceSegment>,
    pub subedges: Vec<SubEdge>,
}

/// Tensor sub-partition of a cell: the common refinement of the strips induced by
/// all interface faces. Non-enhanced cells have a single sub-rectangle.
#[derive(Clone, Debug)]
pub struct CellPartition {
    pub x_breaks: Vec<f64>,
    pub y_breaks: Vec<f64>,
}

impl CellPartition {
    pub fn n_sub(&self) -> usize {
        (self.x_breaks.len() - 1) * (self.y_breaks.len() - 1)
    }

    pub fn sub_rects(&self) -> impl Iterator<Item = Rect> + '_ {
        let nx = self.x_breaks.len() - 1;
        let ny = self.y_breaks.len() - 1;
        (0..ny).flat_map(move |j| {
            (0..nx).map(move |i| {
                Rect::new(
                    self.x_breaks[i],
                    self.y_breaks[j],
                    self.x_breaks[i + 1],
                    self.y_breaks[j + 1],
                )
            })
        })
    }
}

#[derive(Clone, Debug)]
pub struct MultiblockMesh {
    pub spec: DomainSpec,
    pub domain: Rect,
    pub subdomains: Vec<SubdomainGrid>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub interface: InterfaceGrid,
}

/// Sorted union of two trace breakpoint lists over the same segment.
///
/// Both lists must start and end at the same endpoints within `1e-12 *
/// segment_length`; interior points closer than that tolerance are merged.
pub fn intersect_traces(left: &[f64], right: &[f64]) -> Result<Vec<f64>> {
    if left.len() < 2 || right.len() < 2 {
        return Err(Error::geometry("trace needs at least two breakpoints"));
    }
    for (name, list) in [("left", left), ("right", right)] {
        if list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::geometry(format!(
                "{name} trace breakpoints must be strictly increasing"
            )));
        }
    }
    let lo = left[0];
    let hi = left[left.len() - 1];
    let tol = 1e-12 * (hi - lo);
    if (right[0] - lo).abs() > tol || (right[right.len() - 1] - hi).abs() > tol {
        return Err(Error::geometry(format!(
            "trace endpoints do not match: [{lo}, {hi}] vs [{}, {}]",
            right[0],
            right[right.len() - 1]
        )));
    }

    let mut all: Vec<f64> = left.iter().chain(right.iter()).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged = Vec::with_capacity(all.len());
    for v in all {
        match merged.last() {
            Some(&last) if v - last <= tol => {}
            _ => merged.push(v),
        }
    }
    // canonical endpoints from the left trace
    let n = merged.len();
    merged[0] = lo;
    merged[n - 1] = hi;
    Ok(merged)
}

/// Strips tiling `cell` induced by the sub-edges of one of its faces (Fig.-2 style
/// extension of the face partition into the element). A face carried by a single
/// edge induces the whole cell.
pub fn induced_subpartition(mesh: &MultiblockMesh, cell: CellId, face: FaceSide) -> Vec<Rect> {
    let c = &mesh.cells[cell];
    match &c.faces[face.index()] {
        FaceDofs::Edge(_) => vec![c.rect],
        FaceDofs::Interface(subs) => subs
            .iter()
            .map(|&se| {
                let s = &mesh.interface.subedges[se];
                match face.axis() {
                    Axis::X => Rect::new(c.rect.x0, s.span.0, c.rect.x1, s.span.1),
                    Axis::Y => Rect::new(s.span.0, c.rect.y0, s.span.1, c.rect.y1),
                }
            })
            .collect(),
    }
}

impl MultiblockMesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_subedges(&self) -> usize {
        self.interface.subedges.len()
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// Cell containing the point (clamped to the domain).
    pub fn locate_cell(&self, x: f64, y: f64) -> CellId {
        let bx = locate_interval(&self.spec.xlines, x);
        let by = locate_interval(&self.spec.ylines, y);
        let sub = &self.subdomains[self.spec.block_index(bx, by)];
        let (ix, iy) = sub.locate(x, y);
        sub.global_cell(ix, iy)
    }

    /// Common refinement of all interface-induced strips of the cell.
    pub fn cell_partition(&self, cell: CellId) -> CellPartition {
        let c = &self.cells[cell];
        let mut x_breaks = vec![c.rect.x0, c.rect.x1];
        let mut y_breaks = vec![c.rect.y0, c.rect.y1];
        for side in FACE_SIDES {
            if let FaceDofs::Interface(subs) = &c.faces[side.index()] {
                for &se in subs {
                    let s = &self.interface.subedges[se];
                    let breaks = match side.axis() {
                        Axis::X => &mut y_breaks,
                        Axis::Y => &mut x_breaks,
                    };
                    breaks.push(s.span.0);
                    breaks.push(s.span.1);
                }
            }
        }
        let tol_x = 1e-12 * c.rect.width();
        let tol_y = 1e-12 * c.rect.height();
        dedup_sorted(&mut x_breaks, tol_x);
        dedup_sorted(&mut y_breaks, tol_y);
        CellPartition { x_breaks, y_breaks }
    }
}

fn dedup_sorted(v: &mut Vec<f64>, tol: f64) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(v.len());
    for &x in v.iter() {
        match out.last() {
            Some(&last) if x - last <= tol => {}
            _ => out.push(x),
        }
    }
    *v = out;
}

fn locate_interval(lines: &[f64], x: f64) -> usize {
    let n = lines.len() - 1;
    for i in 0..n {
        if x <= lines[i + 1] {
            return i;
        }
    }
    n - 1
}

/// Builds subdomain grids, global cell/edge numbering and the interface grid.
///
/// Numbering is deterministic: subdomains row-major in the block grid, cells
/// row-major within each subdomain, then x- then y-edges per subdomain, then
/// interface sub-edges segment by segment (vertical segments first).
pub fn build_mesh(spec: &DomainSpec) -> Result<MultiblockMesh> {
    spec.validate()?;

    let domain = Rect::new(
        spec.origin.0,
        spec.origin.1,
        spec.origin.0 + spec.extent.0,
        spec.origin.1 + spec.extent.1,
    );

    // subdomain grids
    let mut subdomains = Vec::with_capacity(spec.nbx * spec.nby);
    let mut cell_offset = 0usize;
    for by in 0..spec.nby {
        for bx in 0..spec.nbx {
            let id = spec.block_index(bx, by);
            let rect = spec.block_rect(bx, by);
            let (nx, ny) = spec.cells_per_block[id];
            let xs: Vec<f64> = (0..=nx)
                .map(|i| rect.x0 + rect.width() * (i as f64 / nx as f64))
                .collect();
            let ys: Vec<f64> = (0..=ny)
                .map(|j| rect.y0 + rect.height() * (j as f64 / ny as f64))
                .collect();
            subdomains.push(SubdomainGrid {
                id,
                block_ix: bx,
                block_iy: by,
                rect,
                nx,
                ny,
                hx: rect.width() / nx as f64,
                hy: rect.height() / ny as f64,
                xs,
                ys,
                cell_offset,
            });
            cell_offset += nx * ny;
        }
    }
    let n_cells = cell_offset;

    // face slots, filled by edge and sub-edge construction
    let mut faces: Vec<[Option<FaceDofs>; 4]> = (0..n_cells)
        .map(|_| [const { None }; 4])
        .collect();

    let has_neighbor = |bx: usize, by: usize, side: FaceSide| -> bool {
        match side {
            FaceSide::West => bx > 0,
            FaceSide::East => bx + 1 < spec.nbx,
            FaceSide::South => by > 0,
            FaceSide::North => by + 1 < spec.nby,
        }
    };

    // edges away from the interface
    let mut edges: Vec<Edge> = Vec::new();
    for sub in &subdomains {
        let (bx, by) = (sub.block_ix, sub.block_iy);
        // vertical edges, normal +x
        for iy in 0..sub.ny {
            for ix in 0..=sub.nx {
                if ix == 0 && has_neighbor(bx, by, FaceSide::West) {
                    continue;
                }
                if ix == sub.nx && has_neighbor(bx, by, FaceSide::East) {
                    continue;
                }
                let id = edges.len();
                let neg = (ix > 0).then(|| sub.global_cell(ix - 1, iy));
                let pos = (ix < sub.nx).then(|| sub.global_cell(ix, iy));
                edges.push(Edge {
                    axis: Axis::X,
                    line: sub.xs[ix],
                    span: (sub.ys[iy], sub.ys[iy + 1]),
                    neg_cell: neg,
                    pos_cell: pos,
                });
                if let Some(c) = neg {
                    faces[c][FaceSide::East.index()] = Some(FaceDofs::Edge(id));
                }
                if let Some(c) = pos {
                    faces[c][FaceSide::West.index()] = Some(FaceDofs::Edge(id));
                }
            }
        }
        // horizontal edges, normal +y
        for iy in 0..=sub.ny {
            for ix in 0..sub.nx {
                if iy == 0 && has_neighbor(bx, by, FaceSide::South) {
                    continue;
                }
                if iy == sub.ny && has_neighbor(bx, by, FaceSide::North) {
                    continue;
                }
                let id = edges.len();
                let neg = (iy > 0).then(|| sub.global_cell(ix, iy - 1));
                let pos = (iy < sub.ny).then(|| sub.global_cell(ix, iy));
                edges.push(Edge {
                    axis: Axis::Y,
                    line: sub.ys[iy],
                    span: (sub.xs[ix], sub.xs[ix + 1]),
                    neg_cell: neg,
                    pos_cell: pos,
                });
                if let Some(c) = neg {
                    faces[c][FaceSide::North.index()] = Some(FaceDofs::Edge(id));
                }
                if let Some(c) = pos {
                    faces[c][FaceSide::South.index()] = Some(FaceDofs::Edge(id));
                }
            }
        }
    }

    // interface grid: vertical segments (between horizontally adjacent blocks),
    // then horizontal segments
    let mut interface = InterfaceGrid::default();
    let mut seg_inputs: Vec<(Axis, usize, usize)> = Vec::new();
    for bx in 0..spec.nbx.saturating_sub(1) {
        for by in 0..spec.nby {
            seg_inputs.push((
                Axis::X,
                spec.block_index(bx, by),
                spec.block_index(bx + 1, by),
            ));
        }
    }
    for by in 0..spec.nby.saturating_sub(1) {
        for bx in 0..spec.nbx {
            seg_inputs.push((
                Axis::Y,
                spec.block_index(bx, by),
                spec.block_index(bx, by + 1),
            ));
        }
    }

    for (axis, neg_block, pos_block) in seg_inputs {
        let neg = &subdomains[neg_block];
        let pos = &subdomains[pos_block];
        let (line, span, neg_trace, pos_trace) = match axis {
            Axis::X => (
                neg.rect.x1,
                (neg.rect.y0, neg.rect.y1),
                neg.ys.clone(),
                pos.ys.clone(),
            ),
            Axis::Y => (
                neg.rect.y1,
                (neg.rect.x0, neg.rect.x1),
                neg.xs.clone(),
                pos.xs.clone(),
            ),
        };
        let breakpoints = intersect_traces(&neg_trace, &pos_trace)?;
        let seg_id = interface.segments.len();
        let subedge_offset = interface.subedges.len();

        // per-cell running index of sub-intervals within a face
        let mut neg_counts: Vec<usize> = vec![0; neg.n_cells()];
        let mut pos_counts: Vec<usize> = vec![0; pos.n_cells()];

        for w in breakpoints.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let (neg_cell, pos_cell) = match axis {
                Axis::X => {
                    let iy_n = clamp_index((mid - neg.rect.y0) / neg.hy, neg.ny);
                    let iy_p = clamp_index((mid - pos.rect.y0) / pos.hy, pos.ny);
                    (
                        neg.global_cell(neg.nx - 1, iy_n),
                        pos.global_cell(0, iy_p),
                    )
                }
                Axis::Y => {
                    let ix_n = clamp_index((mid - neg.rect.x0) / neg.hx, neg.nx);
                    let ix_p = clamp_index((mid - pos.rect.x0) / pos.hx, pos.nx);
                    (
                        neg.global_cell(ix_n, neg.ny - 1),
                        pos.global_cell(ix_p, 0),
                    )
                }
            };
            let id = interface.subedges.len();
            let neg_local = neg_cell - neg.cell_offset;
            let pos_local = pos_cell - pos.cell_offset;
            let neg_sub_index = neg_counts[neg_local];
            let pos_sub_index = pos_counts[pos_local];
            neg_counts[neg_local] += 1;
            pos_counts[pos_local] += 1;
            interface.subedges.push(SubEdge {
                segment: seg_id,
                axis,
                line,
                span: (lo, hi),
                neg_cell,
                pos_cell,
                neg_sub_index,
                pos_sub_index,
            });
            let (neg_face, pos_face) = match axis {
                Axis::X => (FaceSide::East, FaceSide::West),
                Axis::Y => (FaceSide::North, FaceSide::South),
            };
            for (cell, face) in [(neg_cell, neg_face), (pos_cell, pos_face)] {
                match &mut faces[cell][face.index()] {
                    slot @ None => *slot = Some(FaceDofs::Interface(vec![id])),
                    Some(FaceDofs::Interface(v)) => v.push(id),
                    Some(FaceDofs::Edge(_)) => {
                        return Err(Error::internal("face assigned both edge and sub-edge"))
                    }
                }
            }
        }

        interface.segments.push(InterfaceSegment {
            axis,
            line,
            span,
            neg_block,
            pos_block,
            breakpoints,
            subedge_offset,
            n_subedges: interface.subedges.len() - subedge_offset,
        });
    }

    // assemble cells, checking every face got exactly one carrier
    let mut cells = Vec::with_capacity(n_cells);
    for sub in &subdomains {
        for iy in 0..sub.ny {
            for ix in 0..sub.nx {
                let id = sub.global_cell(ix, iy);
                let rect = sub.cell_rect(ix, iy);
                let mut cell_faces: [Option<FaceDofs>; 4] = [const { None }; 4];
                for (slot, src) in cell_faces.iter_mut().zip(faces[id].iter_mut()) {
                    *slot = src.take();
                }
                let face_arr: [FaceDofs; 4] = match cell_faces {
                    [Some(w), Some(e), Some(s), Some(n)] => [w, e, s, n],
                    _ => return Err(Error::internal(format!("cell {id} has an unassigned face"))),
                };
                let n_interface = face_arr
                    .iter()
                    .filter(|f| matches!(f, FaceDofs::Interface(_)))
                    .count();
                if n_interface > 2 {
                    return Err(Error::geometry(format!(
                        "cell {id} touches the interface on {n_interface} faces; \
                         blocks need at least 2 cells per side"
                    )));
                }
                cells.push(Cell {
                    id,
                    subdomain: sub.id,
                    rect,
                    diameter: rect.diameter(),
                    faces: face_arr,
                });
            }
        }
    }

    Ok(MultiblockMesh {
        spec: spec.clone(),
        domain,
        subdomains,
        cells,
        edges,
        interface,
    })
}

fn clamp_index(t: f64, n: usize) -> usize {
    (t.floor() as isize).clamp(0, n as isize - 1) as usize
}
