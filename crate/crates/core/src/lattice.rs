//! Lattice geometries hosting the circuit.
//!
//! Target spins live on the sites of a bipartite graph and ancillas on its
//! bonds. Every planar geometry also carries a [`RowLayout`]: a partition of
//! sites and bonds into rows on a common column grid, which is what the
//! boundary-MPS engine walks over.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Largest number of spins (sites + bonds, or bonds + plaquettes for the 3D
/// gauge protocol) for which the cubic lattice may be built.
pub const CUBIC_SPIN_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Chain,
    LiebSquare,
    HeavyHexagon,
    Cubic3d,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Chain => "chain",
            LatticeKind::LiebSquare => "lieb_square",
            LatticeKind::HeavyHexagon => "heavy_hexagon",
            LatticeKind::Cubic3d => "cubic3d",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "chain" => Some(LatticeKind::Chain),
            "lieb_square" | "lieb" => Some(LatticeKind::LiebSquare),
            "heavy_hexagon" | "heavy_hex" => Some(LatticeKind::HeavyHexagon),
            "cubic3d" | "cubic" => Some(LatticeKind::Cubic3d),
            _ => None,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Linear extents, counted in bonds (cells) along each axis.
///
/// * chain: `lx` bonds.
/// * lieb_square: `lx` x `ly` cells, `(lx+1)(ly+1)` sites.
/// * heavy_hexagon: `ly` brick rows of `2 lx` columns; requires `lx = 2 ly - 1`.
/// * cubic3d: `lx` x `ly` x `lz` sites, so `2 x 2 x 2` is a single cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Extents {
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
}

impl Extents {
    pub fn line(l: usize) -> Self {
        Extents {
            lx: l,
            ly: 1,
            lz: 1,
        }
    }

    pub fn square(l: usize) -> Self {
        Extents {
            lx: l,
            ly: l,
            lz: 1,
        }
    }

    /// Heavy-hexagon extents from the number of brick rows.
    pub fn heavy_hexagon(ly: usize) -> Self {
        Extents {
            lx: (2 * ly).saturating_sub(1),
            ly,
            lz: 1,
        }
    }

    pub fn cube(l: usize) -> Self {
        Extents {
            lx: l,
            ly: l,
            lz: l,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub coord: [i32; 3],
    pub sublattice: Sublattice,
}

/// An ancilla bond. `a` is always the A-sublattice endpoint (evolved for
/// time `t_A`), `b` the B-sublattice one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub axis: Axis,
}

impl Bond {
    pub fn other(&self, site: usize) -> usize {
        if site == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, site: usize) -> bool {
        self.a == site || self.b == site
    }
}

/// An elementary face, bonds listed in cyclic order.
///
/// Square faces are stored as `[bottom, right, top, left]` in the face's own
/// plane; the 3D gauge protocol pairs `(left, top)` and `(right, bottom)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plaquette {
    pub bonds: Vec<usize>,
}

/// The sites and bonds owned by one contraction row, laid out on the shared
/// column grid. Missing slots are `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSlots {
    pub sites: Vec<Option<usize>>,
    /// Bond between columns `x` and `x + 1` of this row (length `width - 1`).
    pub horizontal: Vec<Option<usize>>,
    /// Bond from column `x` of this row to column `x` of the next row
    /// (length `width`; all `None` on the top row).
    pub vertical: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowLayout {
    pub width: usize,
    pub rows: Vec<RowSlots>,
}

/// Where a bond sits in the row layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BondSlot {
    Horizontal { row: usize, gap: usize },
    Vertical { row: usize, col: usize },
}

impl RowLayout {
    pub fn height(&self) -> usize {
        self.rows.len()
    }

    /// Slot of every bond, indexed by bond.
    pub fn bond_slots(&self, n_bonds: usize) -> Vec<BondSlot> {
        let mut slots = vec![BondSlot::Horizontal { row: 0, gap: 0 }; n_bonds];
        for (y, row) in self.rows.iter().enumerate() {
            for (gap, b) in row.horizontal.iter().enumerate() {
                if let Some(b) = *b {
                    slots[b] = BondSlot::Horizontal { row: y, gap };
                }
            }
            for (col, b) in row.vertical.iter().enumerate() {
                if let Some(b) = *b {
                    slots[b] = BondSlot::Vertical { row: y, col };
                }
            }
        }
        slots
    }

    /// `(row, column)` of every site.
    pub fn site_slots(&self, n_sites: usize) -> Vec<(usize, usize)> {
        let mut slots = vec![(0, 0); n_sites];
        for (y, row) in self.rows.iter().enumerate() {
            for (x, s) in row.sites.iter().enumerate() {
                if let Some(s) = *s {
                    slots[s] = (y, x);
                }
            }
        }
        slots
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeError {
    ZeroExtent,
    HeavyHexagonShape { lx: usize, ly: usize },
    CubicTooLarge { spins: usize },
    UnknownSite(usize),
    Disconnected { from: usize, to: usize },
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::ZeroExtent => f.write_str("lattice extents must be positive"),
            LatticeError::HeavyHexagonShape { lx, ly } => write!(
                f,
                "heavy_hexagon needs ly >= 2 and lx = 2 ly - 1 (got lx = {lx}, ly = {ly})"
            ),
            LatticeError::CubicTooLarge { spins } => write!(
                f,
                "cubic3d is limited to {CUBIC_SPIN_LIMIT} spins for exact enumeration (requested {spins})"
            ),
            LatticeError::UnknownSite(s) => write!(f, "site {s} does not exist"),
            LatticeError::Disconnected { from, to } => {
                write!(f, "sites {from} and {to} are not connected")
            }
        }
    }
}

impl core::error::Error for LatticeError {}

/// Bipartite lattice with sites, ancilla bonds, plaquettes and (for planar
/// geometries) a row decomposition. Immutable after construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeGraph {
    pub kind: LatticeKind,
    pub extents: Extents,
    pub sites: Vec<Site>,
    pub bonds: Vec<Bond>,
    pub plaquettes: Vec<Plaquette>,
    /// `None` for the cubic lattice, which is only enumerated exactly.
    pub rows: Option<RowLayout>,
    pub pinned_corner: usize,
    pub central_site: usize,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl LatticeGraph {
    pub fn build(kind: LatticeKind, extents: Extents) -> Result<Self, LatticeError> {
        match kind {
            LatticeKind::Chain => {
                if extents.lx == 0 {
                    return Err(LatticeError::ZeroExtent);
                }
                Ok(square_grid(kind, extents, extents.lx, 0))
            }
            LatticeKind::LiebSquare => {
                if extents.lx == 0 || extents.ly == 0 {
                    return Err(LatticeError::ZeroExtent);
                }
                Ok(square_grid(kind, extents, extents.lx, extents.ly))
            }
            LatticeKind::HeavyHexagon => {
                let Extents { lx, ly, .. } = extents;
                if lx == 0 || ly == 0 {
                    return Err(LatticeError::ZeroExtent);
                }
                if ly < 2 || lx != 2 * ly - 1 {
                    return Err(LatticeError::HeavyHexagonShape { lx, ly });
                }
                Ok(heavy_hexagon(extents))
            }
            LatticeKind::Cubic3d => {
                let Extents { lx, ly, lz } = extents;
                if lx == 0 || ly == 0 || lz == 0 {
                    return Err(LatticeError::ZeroExtent);
                }
                let (cx, cy, cz) = (lx - 1, ly - 1, lz - 1);
                let n_sites = lx * ly * lz;
                let n_bonds = cx * ly * lz + lx * cy * lz + lx * ly * cz;
                let n_faces = cx * cy * lz + cx * ly * cz + lx * cy * cz;
                let spins = (n_sites + n_bonds).max(n_bonds + n_faces);
                if spins > CUBIC_SPIN_LIMIT {
                    return Err(LatticeError::CubicTooLarge { spins });
                }
                Ok(cubic(extents))
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Sites plus ancilla bonds.
    pub fn n_spins(&self) -> usize {
        self.sites.len() + self.bonds.len()
    }

    /// `(bond, neighbor)` pairs incident to `site`, ascending by bond.
    pub fn neighbors(&self, site: usize) -> &[(usize, usize)] {
        &self.adjacency[site]
    }

    /// Bonds incident to `site`.
    pub fn incident_bonds(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[site].iter().map(|&(b, _)| b)
    }

    /// Shortest bond path from `from` to `to`, smallest bond index first at
    /// every step among the shortest continuations.
    pub fn wilson_path(&self, from: usize, to: usize) -> Result<Vec<usize>, LatticeError> {
        let n = self.sites.len();
        if from >= n {
            return Err(LatticeError::UnknownSite(from));
        }
        if to >= n {
            return Err(LatticeError::UnknownSite(to));
        }
        let dist = self.distances_from(to);
        if dist[from] == usize::MAX {
            return Err(LatticeError::Disconnected { from, to });
        }
        let mut path = Vec::with_capacity(dist[from]);
        let mut here = from;
        while here != to {
            let &(bond, next) = self.adjacency[here]
                .iter()
                .find(|&&(_, nb)| dist[nb] + 1 == dist[here])
                .expect("a shortest continuation exists");
            path.push(bond);
            here = next;
        }
        Ok(path)
    }

    /// Breadth-first graph distances from `root` (`usize::MAX` if unreachable).
    pub fn distances_from(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.sites.len()];
        let mut queue = VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &(_, w) in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Checks every structural invariant; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, bond) in self.bonds.iter().enumerate() {
            if bond.a >= self.sites.len() || bond.b >= self.sites.len() {
                return Err(format!("bond {i} references a missing site"));
            }
            if self.sites[bond.a].sublattice != Sublattice::A
                || self.sites[bond.b].sublattice != Sublattice::B
            {
                return Err(format!("bond {i} does not join an A site to a B site"));
            }
        }
        let mut usage = vec![0u8; self.bonds.len()];
        for (p, plaq) in self.plaquettes.iter().enumerate() {
            let mut degree = alloc::collections::BTreeMap::<usize, usize>::new();
            for &b in &plaq.bonds {
                usage[b] += 1;
                *degree.entry(self.bonds[b].a).or_default() += 1;
                *degree.entry(self.bonds[b].b).or_default() += 1;
            }
            if degree.values().any(|&d| d != 2) {
                return Err(format!("plaquette {p} is not a closed face"));
            }
            for w in 0..plaq.bonds.len() {
                let (b0, b1) = (
                    &self.bonds[plaq.bonds[w]],
                    &self.bonds[plaq.bonds[(w + 1) % plaq.bonds.len()]],
                );
                if !(b1.touches(b0.a) || b1.touches(b0.b)) {
                    return Err(format!("plaquette {p} is not listed in cyclic order"));
                }
            }
        }
        if usage.iter().any(|&u| u > 2) {
            return Err("a bond lies on more than two plaquettes".into());
        }
        if let Some(layout) = &self.rows {
            let mut seen_sites = vec![0u8; self.sites.len()];
            let mut seen_bonds = vec![0u8; self.bonds.len()];
            for (y, row) in layout.rows.iter().enumerate() {
                if row.sites.len() != layout.width
                    || row.horizontal.len() + 1 != layout.width
                    || row.vertical.len() != layout.width
                {
                    return Err(format!("row {y} has inconsistent slot counts"));
                }
                for (x, s) in row.sites.iter().enumerate() {
                    if let Some(s) = *s {
                        seen_sites[s] += 1;
                        let c = self.sites[s].coord;
                        if c[0] != x as i32 || c[1] != y as i32 {
                            return Err(format!("site {s} sits in the wrong row slot"));
                        }
                    }
                }
                for (x, b) in row.horizontal.iter().enumerate() {
                    if let Some(b) = *b {
                        seen_bonds[b] += 1;
                        let (l, r) = (row.sites[x], row.sites[x + 1]);
                        let bond = &self.bonds[b];
                        if l.is_none()
                            || r.is_none()
                            || !bond.touches(l.unwrap())
                            || !bond.touches(r.unwrap())
                        {
                            return Err(format!(
                                "horizontal bond {b} does not join its row neighbours"
                            ));
                        }
                    }
                }
                for (x, b) in row.vertical.iter().enumerate() {
                    if let Some(b) = *b {
                        seen_bonds[b] += 1;
                        let up = layout.rows.get(y + 1).and_then(|r| r.sites[x]);
                        let bond = &self.bonds[b];
                        if row.sites[x].is_none()
                            || up.is_none()
                            || !bond.touches(row.sites[x].unwrap())
                            || !bond.touches(up.unwrap())
                        {
                            return Err(format!("vertical bond {b} does not join adjacent rows"));
                        }
                    }
                }
            }
            if seen_sites.iter().any(|&c| c != 1) || seen_bonds.iter().any(|&c| c != 1) {
                return Err("rows do not cover every site and bond exactly once".into());
            }
        }
        Ok(())
    }

    fn finish(
        kind: LatticeKind,
        extents: Extents,
        sites: Vec<Site>,
        bonds: Vec<Bond>,
        plaquettes: Vec<Plaquette>,
        rows: Option<RowLayout>,
        pinned_corner: usize,
        central_site: usize,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); sites.len()];
        for (i, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((i, bond.b));
            adjacency[bond.b].push((i, bond.a));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        LatticeGraph {
            kind,
            extents,
            sites,
            bonds,
            plaquettes,
            rows,
            pinned_corner,
            central_site,
            adjacency,
        }
    }
}

fn sublattice(parity: i32) -> Sublattice {
    if parity.rem_euclid(2) == 0 {
        Sublattice::A
    } else {
        Sublattice::B
    }
}

fn oriented_bond(sites: &[Site], i: usize, j: usize, axis: Axis) -> Bond {
    if sites[i].sublattice == Sublattice::A {
        Bond { a: i, b: j, axis }
    } else {
        Bond { a: j, b: i, axis }
    }
}

/// Chain (`ly == 0`) or open Lieb square lattice. Bonds are numbered in raster
/// order: the horizontal bonds of row `y`, then the vertical bonds from row
/// `y` to `y + 1`.
fn square_grid(kind: LatticeKind, extents: Extents, lx: usize, ly: usize) -> LatticeGraph {
    let width = lx + 1;
    let height = ly + 1;
    let site = |x: usize, y: usize| y * width + x;
    let mut sites = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            sites.push(Site {
                coord: [x as i32, y as i32, 0],
                sublattice: sublattice((x + y) as i32),
            });
        }
    }
    let mut bonds = Vec::new();
    let mut rows = Vec::with_capacity(height);
    let mut hbond = vec![vec![0usize; lx]; height];
    let mut vbond = vec![vec![0usize; width]; ly];
    for y in 0..height {
        let mut horizontal = Vec::with_capacity(lx);
        for x in 0..lx {
            hbond[y][x] = bonds.len();
            horizontal.push(Some(bonds.len()));
            bonds.push(oriented_bond(&sites, site(x, y), site(x + 1, y), Axis::X));
        }
        let mut vertical = vec![None; width];
        if y + 1 < height {
            for (x, slot) in vertical.iter_mut().enumerate() {
                vbond[y][x] = bonds.len();
                *slot = Some(bonds.len());
                bonds.push(oriented_bond(&sites, site(x, y), site(x, y + 1), Axis::Y));
            }
        }
        rows.push(RowSlots {
            sites: (0..width).map(|x| Some(site(x, y))).collect(),
            horizontal,
            vertical,
        });
    }
    let mut plaquettes = Vec::with_capacity(lx * ly);
    for y in 0..ly {
        for x in 0..lx {
            plaquettes.push(Plaquette {
                bonds: vec![hbond[y][x], vbond[y][x + 1], hbond[y + 1][x], vbond[y][x]],
            });
        }
    }
    let center = site(lx.div_ceil(2), ly.div_ceil(2));
    LatticeGraph::finish(
        kind,
        extents,
        sites,
        bonds,
        plaquettes,
        Some(RowLayout { width, rows }),
        0,
        center,
    )
}

/// Heavy-hexagon lattice as a brick wall of `ly` rows and `2 lx` columns.
/// Vertical bonds between rows `g` and `g + 1` sit on columns with parity
/// `g mod 2`; the two degree-one end sites this leaves on the outer rows are
/// dropped, reproducing the device qubit counts.
fn heavy_hexagon(extents: Extents) -> LatticeGraph {
    let Extents { lx, ly, .. } = extents;
    let width = 2 * lx;
    let has_vertical = |g: usize, x: usize| x % 2 == g % 2;
    let degree = |x: usize, y: usize| {
        let mut d = 0;
        if x > 0 {
            d += 1;
        }
        if x + 1 < width {
            d += 1;
        }
        if y > 0 && has_vertical(y - 1, x) {
            d += 1;
        }
        if y + 1 < ly && has_vertical(y, x) {
            d += 1;
        }
        d
    };
    let mut index = vec![vec![None; width]; ly];
    let mut sites = Vec::new();
    for (y, row) in index.iter_mut().enumerate() {
        for (x, slot) in row.iter_mut().enumerate() {
            if degree(x, y) > 1 {
                *slot = Some(sites.len());
                sites.push(Site {
                    coord: [x as i32, y as i32, 0],
                    sublattice: sublattice((x + y) as i32),
                });
            }
        }
    }
    let mut bonds = Vec::new();
    let mut rows = Vec::with_capacity(ly);
    let mut hbond = vec![vec![None; width - 1]; ly];
    let mut vbond = vec![vec![None; width]; ly];
    for y in 0..ly {
        for x in 0..width - 1 {
            if let (Some(i), Some(j)) = (index[y][x], index[y][x + 1]) {
                hbond[y][x] = Some(bonds.len());
                bonds.push(oriented_bond(&sites, i, j, Axis::X));
            }
        }
        if y + 1 < ly {
            for x in 0..width {
                if has_vertical(y, x) {
                    if let (Some(i), Some(j)) = (index[y][x], index[y + 1][x]) {
                        vbond[y][x] = Some(bonds.len());
                        bonds.push(oriented_bond(&sites, i, j, Axis::Y));
                    }
                }
            }
        }
        rows.push(RowSlots {
            sites: index[y].clone(),
            horizontal: hbond[y].clone(),
            vertical: vbond[y].clone(),
        });
    }
    let mut plaquettes = Vec::new();
    for g in 0..ly.saturating_sub(1) {
        let mut x = g % 2;
        while x + 2 < width {
            let cycle = [
                hbond[g][x],
                hbond[g][x + 1],
                vbond[g][x + 2],
                hbond[g + 1][x + 1],
                hbond[g + 1][x],
                vbond[g][x],
            ];
            if cycle.iter().all(Option::is_some) {
                plaquettes.push(Plaquette {
                    bonds: cycle.iter().map(|b| b.unwrap()).collect(),
                });
            }
            x += 2;
        }
    }
    let pinned = index[0][0].expect("bottom-left site is kept");
    let center = (lx..width)
        .chain((0..lx).rev())
        .find_map(|x| index[ly / 2][x])
        .expect("central row is populated");
    LatticeGraph::finish(
        LatticeKind::HeavyHexagon,
        extents,
        sites,
        bonds,
        plaquettes,
        Some(RowLayout { width, rows }),
        pinned,
        center,
    )
}

fn cubic(extents: Extents) -> LatticeGraph {
    let Extents { lx, ly, lz } = extents;
    let (nx, ny, nz) = (lx, ly, lz);
    let site = |x: usize, y: usize, z: usize| (z * ny + y) * nx + x;
    let mut sites = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                sites.push(Site {
                    coord: [x as i32, y as i32, z as i32],
                    sublattice: sublattice((x + y + z) as i32),
                });
            }
        }
    }
    let mut bonds = Vec::new();
    let mut lookup = alloc::collections::BTreeMap::new();
    let axes = [
        (Axis::X, [1, 0, 0]),
        (Axis::Y, [0, 1, 0]),
        (Axis::Z, [0, 0, 1]),
    ];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                for (axis, d) in axes {
                    let (x2, y2, z2) = (x + d[0], y + d[1], z + d[2]);
                    if x2 < nx && y2 < ny && z2 < nz {
                        let (i, j) = (site(x, y, z), site(x2, y2, z2));
                        lookup.insert((i, j), bonds.len());
                        bonds.push(oriented_bond(&sites, i, j, axis));
                    }
                }
            }
        }
    }
    let edge = |i: usize, j: usize| lookup[&(i.min(j), i.max(j))];
    let mut plaquettes = Vec::new();
    // Faces spanned by axis pairs (p, q): bottom, right, top, left.
    for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let base = [x, y, z];
                    let lim = [nx, ny, nz];
                    if base[p] + 1 >= lim[p] || base[q] + 1 >= lim[q] {
                        continue;
                    }
                    let at = |dp: usize, dq: usize| {
                        let mut c = base;
                        c[p] += dp;
                        c[q] += dq;
                        site(c[0], c[1], c[2])
                    };
                    plaquettes.push(Plaquette {
                        bonds: vec![
                            edge(at(0, 0), at(1, 0)),
                            edge(at(1, 0), at(1, 1)),
                            edge(at(0, 1), at(1, 1)),
                            edge(at(0, 0), at(0, 1)),
                        ],
                    });
                }
            }
        }
    }
    let center = site(lx / 2, ly / 2, lz / 2);
    LatticeGraph::finish(
        LatticeKind::Cubic3d,
        extents,
        sites,
        bonds,
        plaquettes,
        None,
        0,
        center,
    )
}
