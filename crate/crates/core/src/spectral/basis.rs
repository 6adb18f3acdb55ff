use std::f64::consts::{PI, SQRT_2};

/// Sine basis sampled on a uniform interior grid with `m >= n` points per axis.
///
/// `synthesize` maps coefficients to point values and `analyze` applies the
/// trapezoid-weighted transpose. `analyze` inverts `synthesize` exactly for
/// any `m >= n` by discrete orthogonality of the sine vectors.
#[derive(Debug, Clone)]
pub struct Collocation {
    dim: usize,
    n: usize,
    m: usize,
    weight: f64,
    // table[j * n + k] = sqrt(2) sin((k+1) pi (j+1) / (m+1))
    table: Vec<f64>,
}

impl Collocation {
    pub(crate) fn new(dim: usize, n: usize, m: usize) -> Self {
        let h = 1.0 / (m + 1) as f64;
        let mut table = vec![0.0; m * n];
        for j in 0..m {
            for k in 0..n {
                // Reduce the angle mod 2(m+1) first so the sine argument stays small.
                let idx = ((k + 1) * (j + 1)) % (2 * (m + 1));
                table[j * n + k] = SQRT_2 * (PI * idx as f64 * h).sin();
            }
        }
        Self {
            dim,
            n,
            m,
            weight: h.powi(dim as i32),
            table,
        }
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn num_points(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    /// Quadrature weight of each point, `(1/(m+1))^dim`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Coordinates of a flat point index.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let h = 1.0 / (self.m + 1) as f64;
        if self.dim == 1 {
            vec![(index + 1) as f64 * h]
        } else {
            vec![
                (index / self.m + 1) as f64 * h,
                (index % self.m + 1) as f64 * h,
            ]
        }
    }

    fn at(&self, j: usize, k: usize) -> f64 {
        self.table[j * self.n + k]
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        debug_assert_eq!(coeffs.len(), n.pow(self.dim as u32));
        if self.dim == 1 {
            (0..m)
                .map(|j| (0..n).map(|k| self.at(j, k) * coeffs[k]).sum())
                .collect()
        } else {
            // Along x first: tmp[i][l] = sum_k T[i,k] c[k][l].
            let mut tmp = vec![0.0; m * n];
            for i in 0..m {
                for k in 0..n {
                    let t = self.at(i, k);
                    if t == 0.0 {
                        continue;
                    }
                    let row = &coeffs[k * n..(k + 1) * n];
                    for (acc, &c) in tmp[i * n..(i + 1) * n].iter_mut().zip(row) {
                        *acc += t * c;
                    }
                }
            }
            let mut out = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    out[i * m + j] = (0..n).map(|l| self.at(j, l) * tmp[i * n + l]).sum();
                }
            }
            out
        }
    }

    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        debug_assert_eq!(values.len(), self.num_points());
        if self.dim == 1 {
            (0..n)
                .map(|k| self.weight * (0..m).map(|j| self.at(j, k) * values[j]).sum::<f64>())
                .collect()
        } else {
            // tmp[k][j] = sum_i T[i,k] v[i][j]
            let mut tmp = vec![0.0; n * m];
            for i in 0..m {
                let row = &values[i * m..(i + 1) * m];
                for k in 0..n {
                    let t = self.at(i, k);
                    if t == 0.0 {
                        continue;
                    }
                    for (acc, &v) in tmp[k * m..(k + 1) * m].iter_mut().zip(row) {
                        *acc += t * v;
                    }
                }
            }
            let mut out = vec![0.0; n * n];
            for k in 0..n {
                for l in 0..n {
                    let s: f64 = (0..m).map(|j| self.at(j, l) * tmp[k * m + j]).sum();
                    out[k * n + l] = self.weight * s;
                }
            }
            out
        }
    }

    /// Values of every basis function at one point, in coefficient order.
    pub fn basis_at(&self, point: usize, out: &mut Vec<f64>) {
        out.clear();
        if self.dim == 1 {
            out.extend_from_slice(&self.table[point * self.n..(point + 1) * self.n]);
        } else {
            let (i, j) = (point / self.m, point % self.m);
            for k in 0..self.n {
                let a = self.at(i, k);
                out.extend((0..self.n).map(|l| a * self.at(j, l)));
            }
        }
    }
}
