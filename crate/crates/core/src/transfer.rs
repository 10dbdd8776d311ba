//! Exact contraction with dense boundary vectors over all `2^W` spin patterns
//! of a row.
//!
//! Every quantity is a sum of non-negative products, so environments keep
//! full relative accuracy however lopsided the two halves of the network
//! are. Boundary MPS loses that accuracy when hard constraints let one half
//! amplify a sector the other half carries far below round-off; samplers use
//! this engine as the fallback there. The cost restricts it to narrow rows.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::contraction::{BondEnvironment, ContractionError, Network};
use crate::lattice::BondSlot;
use crate::model::BondMatrix;

type Result<T> = core::result::Result<T, ContractionError>;

/// Widest row the dense engine accepts (`2^16` entries per vector).
pub const MAX_DENSE_WIDTH: usize = 16;

/// A dense row vector with its scale kept apart: value `v · exp(log_scale)`.
#[derive(Clone, Debug)]
struct Dense {
    v: Vec<f64>,
    log_scale: f64,
}

impl Dense {
    fn ones(width: usize) -> Self {
        Dense {
            v: vec![1.0; 1 << width],
            log_scale: 0.0,
        }
    }

    fn normalize(&mut self, row: usize) -> Result<()> {
        let top = self.v.iter().fold(0.0f64, |m, &x| m.max(x));
        if !(top > 0.0) || !top.is_finite() {
            return Err(ContractionError::ZeroWeight { row });
        }
        self.v.iter_mut().for_each(|x| *x /= top);
        self.log_scale += top.ln();
        Ok(())
    }
}

fn bit(p: usize, x: usize) -> usize {
    (p >> x) & 1
}

fn entry(b: &BondMatrix, a: usize, c: usize) -> f64 {
    if a == c {
        b.aligned
    } else {
        b.anti
    }
}

/// Applies `b` between bit `x` of the index (lower row) and the same bit of
/// the result (upper row). Bond matrices are symmetric, so the same call
/// serves both directions.
fn apply_vertical(v: &mut [f64], x: usize, b: &BondMatrix) {
    if *b == BondMatrix::IDENTITY {
        return;
    }
    let m = 1 << x;
    for p in 0..v.len() {
        if p & m == 0 {
            let (a, c) = (v[p], v[p | m]);
            v[p] = b.aligned * a + b.anti * c;
            v[p | m] = b.anti * a + b.aligned * c;
        }
    }
}

/// Dense-vector view of a [`Network`].
pub struct DenseNetwork<'a> {
    net: &'a Network,
    width: usize,
}

impl<'a> DenseNetwork<'a> {
    /// `None` if the rows are wider than [`MAX_DENSE_WIDTH`].
    pub fn new(net: &'a Network) -> Option<Self> {
        let width = net.width();
        (width <= MAX_DENSE_WIDTH).then_some(DenseNetwork { net, width })
    }

    fn height(&self) -> usize {
        self.net.height()
    }

    fn horizontals(&self, y: usize, s: &[i8]) -> Vec<BondMatrix> {
        self.net.layout().rows[y]
            .horizontal
            .iter()
            .map(|&b| self.net.bond_matrix(b, s))
            .collect()
    }

    fn verticals(&self, y: usize, s: &[i8]) -> Vec<BondMatrix> {
        self.net.layout().rows[y]
            .vertical
            .iter()
            .map(|&b| self.net.bond_matrix(b, s))
            .collect()
    }

    /// Row factor `R_y(σ)`, optionally leaving out one horizontal gap.
    fn row_factor(&self, y: usize, s: &[i8], skip_gap: Option<usize>) -> Vec<f64> {
        let w = self.net.site_weights(y);
        let hs = self.horizontals(y, s);
        (0..1usize << self.width)
            .map(|p| {
                let mut f = 1.0;
                for (x, wx) in w.iter().enumerate() {
                    f *= wx[bit(p, x)];
                }
                for (g, b) in hs.iter().enumerate() {
                    if Some(g) != skip_gap {
                        f *= entry(b, bit(p, g), bit(p, g + 1));
                    }
                }
                f
            })
            .collect()
    }

    /// `R_y ⊙ state`.
    fn apply_row(&self, state: &Dense, y: usize, s: &[i8]) -> Result<Dense> {
        let f = self.row_factor(y, s, None);
        let mut next = Dense {
            v: state.v.iter().zip(&f).map(|(a, b)| a * b).collect(),
            log_scale: state.log_scale,
        };
        next.normalize(y)?;
        Ok(next)
    }

    /// The vertical step between rows `y` and `y + 1`.
    fn apply_verticals(&self, state: &Dense, y: usize, s: &[i8]) -> Result<Dense> {
        let mut next = state.clone();
        for (x, b) in self.verticals(y, s).iter().enumerate() {
            apply_vertical(&mut next.v, x, b);
        }
        next.normalize(y)?;
        Ok(next)
    }

    /// `Top_y` for every row: everything above row `y`, including the
    /// vertical bonds from row `y`.
    fn top_stack(&self, s: &[i8], down_to: usize) -> Result<Vec<Dense>> {
        let h = self.height();
        let mut tops = vec![Dense::ones(self.width); h];
        for y in (down_to + 1..h).rev() {
            let r = self.apply_row(&tops[y], y, s)?;
            tops[y - 1] = self.apply_verticals(&r, y - 1, s)?;
        }
        Ok(tops)
    }

    /// `BotR_y`: rows `0..=y` with their horizontals.
    fn bottom_through(&self, s: &[i8], y: usize) -> Result<Dense> {
        let mut bot = Dense::ones(self.width);
        for r in 0..y {
            let br = self.apply_row(&bot, r, s)?;
            bot = self.apply_verticals(&br, r, s)?;
        }
        self.apply_row(&bot, y, s)
    }

    /// Same normalization as [`Network::log_weight`].
    pub fn log_weight(&self, s: &[i8]) -> Result<f64> {
        self.net.check(s)?;
        let h = self.height();
        let bot = self.bottom_through(s, h - 1)?;
        let z: f64 = bot.v.iter().sum();
        Ok(z.ln() + bot.log_scale + LN_2 - self.net.n_sites() as f64 * LN_2)
    }

    /// `⟨σ_c⟩` with the corner pinned up.
    pub fn pinned_central_magnetization(&self, s: &[i8]) -> Result<f64> {
        self.net.check(s)?;
        let (yc, xc) = self.net.center();
        let bot = self.bottom_through(s, yc)?;
        let tops = self.top_stack(s, yc)?;
        Self::magnetization(&bot, &tops[yc], xc, yc)
    }

    fn magnetization(bot_r: &Dense, top: &Dense, xc: usize, yc: usize) -> Result<f64> {
        let (mut up, mut down) = (0.0, 0.0);
        for (p, (a, b)) in bot_r.v.iter().zip(&top.v).enumerate() {
            if bit(p, xc) == 0 {
                up += a * b;
            } else {
                down += a * b;
            }
        }
        let z = up + down;
        if !(z > 0.0) {
            return Err(ContractionError::ZeroWeight { row: yc });
        }
        Ok(((up - down) / z).clamp(-1.0, 1.0))
    }

    fn horizontal_env(
        &self,
        bot: &Dense,
        top: &Dense,
        y: usize,
        gap: usize,
        s: &[i8],
    ) -> BondEnvironment {
        let f = self.row_factor(y, s, Some(gap));
        let mut w = [[0.0; 2]; 2];
        for p in 0..f.len() {
            w[bit(p, gap)][bit(p, gap + 1)] += bot.v[p] * f[p] * top.v[p];
        }
        BondEnvironment {
            w,
            log_scale: bot.log_scale + top.log_scale,
        }
    }

    /// Environment of the vertical bond at column `x` between `bot_r`
    /// (row `y` and below) and `top_r` (row `y + 1` and above).
    fn vertical_env(
        &self,
        bot_r: &Dense,
        top_r: &Dense,
        y: usize,
        x: usize,
        s: &[i8],
    ) -> BondEnvironment {
        let mut u = bot_r.v.clone();
        for (x2, b) in self.verticals(y, s).iter().enumerate() {
            if x2 != x {
                apply_vertical(&mut u, x2, b);
            }
        }
        let m = 1 << x;
        let mut w = [[0.0; 2]; 2];
        for p in 0..u.len() {
            if p & m == 0 {
                for a in 0..2 {
                    for c in 0..2 {
                        w[a][c] += u[p | (a << x)] * top_r.v[p | (c << x)];
                    }
                }
            }
        }
        BondEnvironment {
            w,
            log_scale: bot_r.log_scale + top_r.log_scale,
        }
    }

    /// Environment of one bond, contracted from scratch.
    pub fn bond_environment(&self, s: &[i8], bond: usize) -> Result<BondEnvironment> {
        self.net.check(s)?;
        match self.net.slot(bond).ok_or(ContractionError::BadBond(bond))? {
            BondSlot::Horizontal { row: y, gap } => {
                let mut bot = Dense::ones(self.width);
                for r in 0..y {
                    let br = self.apply_row(&bot, r, s)?;
                    bot = self.apply_verticals(&br, r, s)?;
                }
                let tops = self.top_stack(s, y)?;
                Ok(self.horizontal_env(&bot, &tops[y], y, gap, s))
            }
            BondSlot::Vertical { row: y, col } => {
                let bot_r = self.bottom_through(s, y)?;
                let tops = self.top_stack(s, y + 1)?;
                let top_r = self.apply_row(&tops[y + 1], y + 1, s)?;
                Ok(self.vertical_env(&bot_r, &top_r, y, col, s))
            }
        }
    }

    /// One upward pass proposing a flip of every bond, row by row: the
    /// horizontals of row `y`, then the verticals to row `y + 1`.
    /// `propose(bond, s_bond, env)` decides each flip. Returns the central
    /// magnetization of the final configuration.
    pub fn sweep<E, F>(&self, s: &mut [i8], mut propose: F) -> core::result::Result<f64, E>
    where
        E: From<ContractionError>,
        F: FnMut(usize, i8, &BondEnvironment) -> core::result::Result<bool, E>,
    {
        self.net.check(s)?;
        let h = self.height();
        let tops = self.top_stack(s, 0)?;
        let mut bot = Dense::ones(self.width);
        for y in 0..h {
            let row = &self.net.layout().rows[y];
            for gap in 0..self.width - 1 {
                if let Some(b) = row.horizontal[gap] {
                    let env = self.horizontal_env(&bot, &tops[y], y, gap, s);
                    if propose(b, s[b], &env)? {
                        s[b] = -s[b];
                    }
                }
            }
            let bot_r = self.apply_row(&bot, y, s)?;
            if y + 1 < h {
                let top_r = self.apply_row(&tops[y + 1], y + 1, s)?;
                for x in 0..self.width {
                    if let Some(b) = row.vertical[x] {
                        let env = self.vertical_env(&bot_r, &top_r, y, x, s);
                        if propose(b, s[b], &env)? {
                            s[b] = -s[b];
                        }
                    }
                }
                bot = self.apply_verticals(&bot_r, y, s)?;
            }
        }
        Ok(self.pinned_central_magnetization(s)?)
    }
}
