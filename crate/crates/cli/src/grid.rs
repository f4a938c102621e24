use circlesum::expsum::AlphaVector;
use circlesum::Error;
use num_bigint::BigInt;
use num_rational::BigRational;

/// The uniform grid `{k/resolution : 0 ≤ k < resolution}` in every
/// coordinate of the block shape, row-major with the last coordinate
/// varying fastest.
pub fn alpha_grid(resolution: u64, shape: &[usize], budget: u64) -> Result<Vec<AlphaVector>, Error> {
    if resolution == 0 {
        return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
    }
    let dims: usize = shape.iter().sum();
    let total = u128::from(resolution).checked_pow(dims as u32).unwrap_or(u128::MAX);
    if total > u128::from(budget) {
        return Err(Error::Budget { what: "alpha grid points", required: total, budget: budget.into() });
    }
    let den = BigInt::from(resolution);
    let mut digits = vec![0u64; dims];
    let mut out = Vec::with_capacity(total as usize);
    for idx in 0..total as u64 {
        let mut rest = idx;
        for d in digits.iter_mut().rev() {
            *d = rest % resolution;
            rest /= resolution;
        }
        let mut it = digits.iter();
        let blocks = shape
            .iter()
            .map(|&r| {
                it.by_ref()
                    .take(r)
                    .map(|&k| BigRational::new(BigInt::from(k), den.clone()))
                    .collect()
            })
            .collect();
        out.push(AlphaVector::new(blocks));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn one_coordinate() {
        let g = alpha_grid(4, &[1], 100).unwrap();
        let xs: Vec<BigRational> = g.iter().map(|a| a.block(1)[0].clone()).collect();
        assert_eq!(xs, vec![q(0, 1), q(1, 4), q(1, 2), q(3, 4)]);
    }

    #[test]
    fn row_major_over_blocks() {
        let g = alpha_grid(2, &[1, 1], 100).unwrap();
        let pts: Vec<(BigRational, BigRational)> =
            g.iter().map(|a| (a.block(1)[0].clone(), a.block(2)[0].clone())).collect();
        assert_eq!(
            pts,
            vec![(q(0, 1), q(0, 1)), (q(0, 1), q(1, 2)), (q(1, 2), q(0, 1)), (q(1, 2), q(1, 2))]
        );
    }

    #[test]
    fn rejects_zero_resolution_and_oversized_grids() {
        assert!(matches!(alpha_grid(0, &[1], 100), Err(Error::InvalidInput(_))));
        assert!(matches!(alpha_grid(11, &[0, 2], 100), Err(Error::Budget { .. })));
        assert_eq!(alpha_grid(10, &[0, 2], 100).unwrap().len(), 100);
    }
}
