//! Single-pass moment accumulators with pairwise merge.
//!
//! Update and merge rules follow Pébay (2008) for central moments up to order
//! four, and the matching co-moment rule for pairs. Merging in a fixed order
//! gives results that do not depend on how the data were partitioned in time,
//! only on the partition itself.

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub const fn new() -> Self {
        Moments { count: 0, mean: 0.0, m2: 0.0, m3: 0.0, m4: 0.0 }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Moments::new();
        for &x in xs {
            m.push(x);
        }
        m
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 =
            self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n) + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Moments { count: self.count + other.count, mean, m2, m3, m4 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `k`-th central moment with divisor `count` (`k` in 2..=4).
    pub fn central(&self, k: usize) -> f64 {
        let n = self.count as f64;
        match k {
            2 => self.m2 / n,
            3 => self.m3 / n,
            4 => self.m4 / n,
            _ => panic!("central moment order must be 2, 3 or 4"),
        }
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }

    pub fn skewness(&self) -> f64 {
        let m2 = self.central(2);
        self.central(3) / (m2 * libm::sqrt(m2))
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let m2 = self.central(2);
        self.central(4) / (m2 * m2) - 3.0
    }

    /// Raw moments `E[(x - c)^k]`, `k = 1..=4`, rebuilt from the central ones.
    pub fn raw_about(&self, c: f64) -> [f64; 4] {
        let d = self.mean - c;
        let (m2, m3, m4) = (self.central(2), self.central(3), self.central(4));
        [d, m2 + d * d, m3 + 3.0 * d * m2 + d * d * d, m4 + 4.0 * d * m3 + 6.0 * d * d * m2 + d * d * d * d]
    }
}

/// Running co-moment of a pair `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoMoment {
    count: u64,
    mean_x: f64,
    mean_y: f64,
    c_xy: f64,
}

impl CoMoment {
    pub const fn new() -> Self {
        CoMoment { count: 0, mean_x: 0.0, mean_y: 0.0, c_xy: 0.0 }
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        self.mean_y += (y - self.mean_y) / n;
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, other: &CoMoment) -> CoMoment {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        CoMoment {
            count: self.count + other.count,
            mean_x: self.mean_x + dx * nb / n,
            mean_y: self.mean_y + dy * nb / n,
            c_xy: self.c_xy + other.c_xy + dx * dy * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn means(&self) -> (f64, f64) {
        (self.mean_x, self.mean_y)
    }

    /// Covariance with divisor `count`.
    pub fn covariance(&self) -> f64 {
        self.c_xy / self.count as f64
    }

    /// `E[(x - cx)(y - cy)]`.
    pub fn cross_about(&self, cx: f64, cy: f64) -> f64 {
        self.covariance() + (self.mean_x - cx) * (self.mean_y - cy)
    }
}
