use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::walkers::site_count;
use super::{CrossingRow, Measure, RowSource, MAX_STREAM_HORIZON};
use crate::error::{Error, Result};
use crate::rng::{domain, stream, Coins};

/// Which parity classes of cells to generate.
///
/// Walkers started on odd sites never share a cell with the origin's class,
/// so the mass field and the quenched walk only ever read `Origin` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeClasses {
    /// Sites `y ≡ t (mod 2)` only, stored with stride 2.
    Origin,
    /// Every site of `|y| <= t`.
    All,
}

/// One parity class of the cone. At time `t` the class occupies `len` sites
/// `y = y0(t) + 2j`, and `len` grows by one per step; site `j` of the new row
/// is fed by `e+` of old site `j - 1` and `e-` of old site `j`, and the two
/// edge sites also receive the walkers entering from outside.
struct Class {
    coins: Coins<ChaCha8Rng>,
    plus: Vec<u32>,
    minus: Vec<u32>,
    spare_plus: Vec<u32>,
    spare_minus: Vec<u32>,
}

impl Class {
    fn new(rng: ChaCha8Rng) -> Self {
        Self {
            coins: Coins::new(rng),
            plus: Vec::new(),
            minus: Vec::new(),
            spare_plus: Vec::new(),
            spare_minus: Vec::new(),
        }
    }

    fn seed(&mut self, v: u32) {
        self.plus.clear();
        self.minus.clear();
        let up = self.coins.heads(v);
        self.plus.push(up);
        self.minus.push(v - up);
    }

    fn arrivals(&mut self, inflow: &Poisson<f64>) -> u32 {
        inflow.sample(self.coins.rng_mut()) as u32
    }

    fn advance(&mut self, inflow: &Poisson<f64>, t: usize) -> Result<()> {
        let (left, right) = (self.arrivals(inflow), self.arrivals(inflow));
        std::mem::swap(&mut self.plus, &mut self.spare_plus);
        std::mem::swap(&mut self.minus, &mut self.spare_minus);
        let old = self.spare_plus.len();
        let edge = |v: u32, n: u32| {
            v.checked_add(n).filter(|&v| v <= i32::MAX as u32).ok_or(Error::CountOverflow { t, y: -(t as i64) })
        };
        self.plus.resize(old + 1, 0);
        self.minus.resize(old + 1, 0);
        let coins = &mut self.coins;
        if old == 0 {
            split(coins, edge(left, right)?, &mut self.plus[0], &mut self.minus[0]);
            return Ok(());
        }
        let (op, om) = (&self.spare_plus, &self.spare_minus);
        split(coins, edge(om[0], left)?, &mut self.plus[0], &mut self.minus[0]);
        let inner = op[..old - 1].iter().zip(&om[1..old]);
        for ((p, m), (a, b)) in self.plus[1..old].iter_mut().zip(&mut self.minus[1..old]).zip(inner) {
            split(coins, a + b, p, m);
        }
        split(coins, edge(op[old - 1], right)?, &mut self.plus[old], &mut self.minus[old]);
        Ok(())
    }
}

#[inline]
fn split(coins: &mut Coins<ChaCha8Rng>, v: u32, plus: &mut u32, minus: &mut u32) {
    let up = coins.heads(v);
    *plus = up;
    *minus = v - up;
}

/// Streams crossing rows restricted to the light cone `|y| <= t`.
///
/// Row `t + 1` is built from row `t` by moving crossings along their edges;
/// walkers arriving from outside the cone are injected on the edge cells
/// `±(t+1)` (origin class) and `±t` (odd class) as independent Poisson(1/2)
/// counts. Each walker then splits by fair coin flips, so
/// `e+ | v ~ Bin(v, 1/2)`. The two parity classes use separate streams, so
/// the origin-class cells do not depend on `classes`.
pub struct ConeSampler {
    horizon: usize,
    classes: ConeClasses,
    t: usize,
    origin_count: u32,
    inflow: Poisson<f64>,
    origin: Class,
    odd: Class,
    row: CrossingRow,
}

impl ConeSampler {
    pub fn new(key: u64, horizon: usize, measure: Measure, classes: ConeClasses) -> Result<Self> {
        if horizon > MAX_STREAM_HORIZON {
            return Err(Error::HorizonOverflow { horizon, max: MAX_STREAM_HORIZON });
        }
        let stride = match classes {
            ConeClasses::Origin => 2,
            ConeClasses::All => 1,
        };
        Ok(Self {
            horizon,
            classes,
            t: 0,
            origin_count: site_count(key, 0, measure),
            inflow: Poisson::new(0.5).expect("positive rate"),
            origin: Class::new(stream(key, &[domain::CONE_ROW, 0])),
            odd: Class::new(stream(key, &[domain::CONE_ROW, 1])),
            row: CrossingRow::empty(0, 0, stride, 0),
        })
    }

    pub fn classes(&self) -> ConeClasses {
        self.classes
    }
}

impl RowSource for ConeSampler {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn next_row(&mut self) -> Result<Option<&CrossingRow>> {
        if self.t >= self.horizon {
            return Ok(None);
        }
        let t = self.t;
        if self.classes == ConeClasses::Origin {
            // the previous origin-class row was lent to `self.row`
            let (plus, minus) = self.row.counts_mut();
            std::mem::swap(plus, &mut self.origin.plus);
            std::mem::swap(minus, &mut self.origin.minus);
        }
        if t == 0 {
            self.origin.seed(self.origin_count);
        } else {
            self.origin.advance(&self.inflow, t)?;
        }
        self.row.t = t;
        self.row.lo = -(t as i64);
        match self.classes {
            ConeClasses::Origin => {
                let (plus, minus) = self.row.counts_mut();
                std::mem::swap(plus, &mut self.origin.plus);
                std::mem::swap(minus, &mut self.origin.minus);
            }
            ConeClasses::All => {
                if t > 0 {
                    self.odd.advance(&self.inflow, t)?;
                }
                let (plus, minus) = self.row.counts_mut();
                plus.clear();
                minus.clear();
                for i in 0..=2 * t {
                    let class = if i % 2 == 0 { &self.origin } else { &self.odd };
                    plus.push(class.plus[i / 2]);
                    minus.push(class.minus[i / 2]);
                }
            }
        }
        self.t += 1;
        Ok(Some(&self.row))
    }
}
