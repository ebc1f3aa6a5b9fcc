use super::{pow_ring, AlgebraError, Ring};

/// Largest dimension `perm_alpha` accepts unless told otherwise. Cost is
/// `k! * k` ring operations.
pub const DEFAULT_PERM_LIMIT: usize = 10;

/// Dense square matrix over a ring, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Ring> SquareMatrix<T> {
    pub fn new(dim: usize, entries: Vec<T>) -> Result<Self, AlgebraError> {
        if entries.len() != dim * dim {
            return Err(AlgebraError::NotSquare { dim, len: entries.len() });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }
}

impl<T: Ring + PartialEq> SquareMatrix<T> {
    /// Construction for use as a permanental kernel: must be symmetric.
    pub fn kernel(dim: usize, entries: Vec<T>) -> Result<Self, AlgebraError> {
        let m = Self::new(dim, entries)?;
        for i in 0..dim {
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(AlgebraError::NotSymmetric);
                }
            }
        }
        Ok(m)
    }
}

/// `Perm_alpha(M) = sum_sigma alpha^{cycles(sigma)} prod_i M[i][sigma(i)]`.
pub fn perm_alpha<T: Ring>(m: &SquareMatrix<T>, alpha: &T) -> Result<T, AlgebraError> {
    perm_alpha_with_limit(m, alpha, DEFAULT_PERM_LIMIT)
}

pub fn perm_alpha_with_limit<T: Ring>(
    m: &SquareMatrix<T>,
    alpha: &T,
    limit: usize,
) -> Result<T, AlgebraError> {
    let k = m.dim();
    if k > limit {
        return Err(AlgebraError::SizeLimit { dim: k, limit });
    }
    if k == 0 {
        return Ok(T::one_value());
    }
    // by_cycles[c] accumulates the products of permutations with c cycles.
    let mut by_cycles: Vec<Option<T>> = vec![None; k + 1];
    let mut sigma: Vec<usize> = (0..k).collect();
    let mut visit = |sigma: &[usize]| {
        let mut prod = m.get(0, sigma[0]).clone();
        for (i, &s) in sigma.iter().enumerate().skip(1) {
            if prod.is_zero_value() {
                return;
            }
            prod = prod.times(m.get(i, s));
        }
        if prod.is_zero_value() {
            return;
        }
        let c = cycle_count(sigma);
        let slot = &mut by_cycles[c];
        *slot = Some(match slot.take() {
            Some(acc) => acc.plus(&prod),
            None => prod,
        });
    };

    // Heap's algorithm, iterative form.
    let mut counters = vec![0usize; k];
    visit(&sigma);
    let mut i = 1;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                sigma.swap(0, i);
            } else {
                sigma.swap(counters[i], i);
            }
            visit(&sigma);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }

    let mut out = T::zero_value();
    for (c, s) in by_cycles.into_iter().enumerate() {
        if let Some(s) = s {
            out = out.plus(&s.times(&pow_ring(alpha, c as u32)));
        }
    }
    Ok(out)
}

fn cycle_count(sigma: &[usize]) -> usize {
    let mut seen = 0u64;
    let mut cycles = 0;
    for start in 0..sigma.len() {
        if seen & (1 << start) != 0 {
            continue;
        }
        cycles += 1;
        let mut j = start;
        while seen & (1 << j) == 0 {
            seen |= 1 << j;
            j = sigma[j];
        }
    }
    cycles
}

/// Number of perfect matchings of `m` points: `(m-1)!!`, zero for odd `m`.
pub fn pair_partition_count(m: usize) -> u64 {
    if m % 2 == 1 {
        return 0;
    }
    (1..m as u64).step_by(2).product()
}

/// Calls `f` once per perfect matching of `points`, each pair ordered by
/// position in `points`.
pub fn for_each_pair_partition<P: Copy>(points: &[P], mut f: impl FnMut(&[(P, P)])) {
    if points.len() % 2 == 1 {
        return;
    }
    let mut pairs = Vec::with_capacity(points.len() / 2);
    let mut remaining: Vec<P> = points.to_vec();
    recurse(&mut remaining, &mut pairs, &mut f);
}

fn recurse<P: Copy>(rest: &mut Vec<P>, pairs: &mut Vec<(P, P)>, f: &mut impl FnMut(&[(P, P)])) {
    if rest.is_empty() {
        f(pairs);
        return;
    }
    let first = rest.remove(0);
    for j in 0..rest.len() {
        let partner = rest.remove(j);
        pairs.push((first, partner));
        recurse(rest, pairs, f);
        pairs.pop();
        rest.insert(j, partner);
    }
    rest.insert(0, first);
}

#[cfg(test)]
mod tests {
    use super::super::{int, rat, Rational};
    use super::*;

    #[test]
    fn small_dimensions() {
        let a = rat(3, 2);
        let m = SquareMatrix::new(1, vec![int(5)]).unwrap();
        assert_eq!(perm_alpha(&m, &a).unwrap(), rat(15, 2));
        let (p, q, r) = (int(2), int(3), int(7));
        let m = SquareMatrix::kernel(2, vec![p.clone(), q.clone(), q.clone(), r.clone()]).unwrap();
        let want = &a * &a * &p * &r + &a * &q * &q;
        assert_eq!(perm_alpha(&m, &a).unwrap(), want);
        let id = SquareMatrix::from_fn(3, |i, j| if i == j { int(1) } else { int(0) });
        assert_eq!(perm_alpha(&id, &a).unwrap(), &a * &a * &a);
    }

    #[test]
    fn size_limit_is_explicit() {
        let m = SquareMatrix::from_fn(11, |_, _| 1.0f64);
        assert!(matches!(
            perm_alpha(&m, &1.0),
            Err(AlgebraError::SizeLimit { dim: 11, limit: 10 })
        ));
        let m = SquareMatrix::from_fn(4, |_, _| 1.0f64);
        assert!(perm_alpha_with_limit(&m, &1.0, 3).is_err());
    }

    #[test]
    fn shape_checks() {
        assert!(matches!(
            SquareMatrix::new(2, vec![int(1); 3]),
            Err(AlgebraError::NotSquare { .. })
        ));
        assert_eq!(
            SquareMatrix::kernel(2, vec![int(1), int(2), int(3), int(4)]),
            Err(AlgebraError::NotSymmetric)
        );
    }

    #[test]
    fn all_ones_counts_permutations_by_cycles() {
        // sum_sigma alpha^cycles = alpha (alpha+1) ... (alpha+k-1)
        let m = SquareMatrix::from_fn(5, |_, _| int(1));
        let a = rat(1, 3);
        let want: Rational = (0..5).map(|i| &a + int(i)).product();
        assert_eq!(perm_alpha(&m, &a).unwrap(), want);
    }

    #[test]
    fn pair_partitions() {
        for m in 0..9 {
            let mut count = 0;
            for_each_pair_partition(&(0..m).collect::<Vec<_>>(), |pairs| {
                assert_eq!(pairs.len(), m / 2);
                count += 1;
            });
            let want = if m % 2 == 0 { pair_partition_count(m) } else { 0 };
            assert_eq!(count, want, "m = {m}");
        }
        assert_eq!(pair_partition_count(6), 15);
    }
}
