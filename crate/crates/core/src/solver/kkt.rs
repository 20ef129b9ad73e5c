//! Symmetric quasi-definite systems in envelope (skyline) storage.
//!
//! Row `i` stores columns `first[i]..=i` contiguously; the LDLᵀ factor has
//! the same envelope, so there is no fill outside it. Quasi-definite
//! matrices admit an LDLᵀ factorization for any symmetric permutation, which
//! is what allows a bandwidth-driven ordering without pivoting.

#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl Envelope {
    /// `first[i] <= i` is the leftmost stored column of row `i`.
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(total);
            total += i - f + 1;
        }
        start.push(total);
        Self {
            first,
            start,
            vals: vec![0.0; total],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Storage slot of `(i, j)`; the pair is reordered into the lower
    /// triangle.
    #[inline]
    pub fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(j >= self.first[i], "({i}, {j}) outside the envelope");
        self.start[i] + (j - self.first[i])
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn add_at(&mut self, slot: usize, v: f64) {
        self.vals[slot] += v;
    }

    #[cfg(test)]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.vals[s] += v;
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.vals[self.start[i + 1] - 1]
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        let s = self.start[i + 1] - 1;
        self.vals[s] += v;
    }

    /// `A <- diag(s) A diag(s)`.
    pub fn scale(&mut self, s: &[f64]) {
        for i in 0..self.dim() {
            let f = self.first[i];
            let si = s[i];
            let (a, b) = (self.start[i], self.start[i + 1]);
            for (k, v) in self.vals[a..b].iter_mut().enumerate() {
                *v *= si * s[f + k];
            }
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vals[self.start[i]..self.start[i + 1]]
    }

    /// `out = A x` for the symmetric matrix.
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim() {
            let f = self.first[i];
            let row = self.row(i);
            let (off, d) = row.split_at(row.len() - 1);
            let mut acc = d[0] * x[i];
            for (k, &a) in off.iter().enumerate() {
                acc += a * x[f + k];
                out[f + k] += a * x[i];
            }
            out[i] += acc;
        }
    }
}

/// LDLᵀ factor in envelope storage: strictly lower part of `L` plus `D` on
/// the diagonal.
#[derive(Debug, Clone)]
pub(crate) struct LdlFactor {
    env: Envelope,
    pub n_regularized: usize,
}

impl LdlFactor {
    /// Factor `a` in place of a copy. `signs[i]` is the expected pivot sign;
    /// pivots whose signed value is at most `eps` are replaced by
    /// `signs[i] * delta`.
    pub fn factor(a: &Envelope, signs: &[f64], eps: f64, delta: f64) -> Self {
        Self::factor_impl(a, signs, eps, delta, None).0
    }

    /// Factorization that decouples negative-sign rows whose pivot magnitude
    /// is at most `tol[i]`: such a row is linearly dependent on the rows
    /// before it. Returns the factor of the matrix with those rows and
    /// columns replaced by `-e_i` together with their indices.
    pub fn factor_dropping(a: &Envelope, signs: &[f64], tol: &[f64]) -> (Self, Vec<usize>) {
        Self::factor_impl(a, signs, 0.0, 0.0, Some(tol))
    }

    fn factor_impl(
        a: &Envelope,
        signs: &[f64],
        eps: f64,
        delta: f64,
        drop_tol: Option<&[f64]>,
    ) -> (Self, Vec<usize>) {
        let mut env = a.clone();
        let n = env.dim();
        let mut n_regularized = 0;
        let mut dropped = Vec::new();
        let mut is_dropped = vec![false; if drop_tol.is_some() { n } else { 0 }];
        let mut g: Vec<f64> = Vec::new();
        for i in 0..n {
            let fi = env.first[i];
            let len = i - fi;
            g.clear();
            g.extend_from_slice(&env.vals[env.start[i]..env.start[i] + len]);
            if !dropped.is_empty() {
                for (jj, v) in g.iter_mut().enumerate() {
                    if is_dropped[fi + jj] {
                        *v = 0.0;
                    }
                }
            }
            // g_j = a_ij - Σ_k g_k L_jk over the overlap of rows i and j.
            for jj in 0..len {
                let j = fi + jj;
                let fj = env.first[j];
                let lo = fi.max(fj);
                if lo < j {
                    let lj = &env.vals[env.start[j] + (lo - fj)..env.start[j] + (j - fj)];
                    let gi = &g[lo - fi..jj];
                    let s: f64 = gi.iter().zip(lj).map(|(a, b)| a * b).sum();
                    g[jj] -= s;
                }
            }
            let mut d = env.vals[env.start[i] + len];
            for jj in 0..len {
                let j = fi + jj;
                let dj = env.vals[env.start[j + 1] - 1];
                let l = g[jj] / dj;
                d -= g[jj] * l;
                env.vals[env.start[i] + jj] = l;
            }
            match drop_tol {
                Some(tol) if signs[i] < 0.0 && d.abs() <= tol[i] => {
                    env.vals[env.start[i]..env.start[i] + len]
                        .iter_mut()
                        .for_each(|v| *v = 0.0);
                    d = -1.0;
                    is_dropped[i] = true;
                    dropped.push(i);
                }
                _ => {
                    if d * signs[i] <= eps {
                        d = signs[i] * delta;
                        n_regularized += 1;
                    }
                }
            }
            env.vals[env.start[i] + len] = d;
        }
        (Self { env, n_regularized }, dropped)
    }

    /// Solve `L D Lᵀ x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let env = &self.env;
        let n = env.dim();
        for i in 0..n {
            let fi = env.first[i];
            let row = env.row(i);
            let s: f64 = row[..row.len() - 1]
                .iter()
                .zip(&x[fi..i])
                .map(|(l, v)| l * v)
                .sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= env.diag(i);
        }
        for i in (0..n).rev() {
            let fi = env.first[i];
            let xi = x[i];
            let row = env.row(i);
            for (k, l) in row[..row.len() - 1].iter().enumerate() {
                x[fi + k] -= l * xi;
            }
        }
    }
}
