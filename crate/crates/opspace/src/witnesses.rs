//! The explicit matrices behind every bound in this crate: matrix units,
//! the two block-matrix families whose flattened Schatten norms have
//! closed forms, the compression pair that certifies the row lower
//! bounds, and the column-of-basis-vectors witness whose entry transpose
//! inflates the operator norm by `√n`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::matcore::{ComplexMatrix, PExponent};
use crate::opmatrix::BlockMatrix;
use crate::{Error, Result};

/// Matrix unit `E_ij` in `M_m`: 1 at position `(i, j)`, zero elsewhere.
/// Indices are 1-based, matching the usual `E_ij` notation.
pub fn matrix_unit(i: usize, j: usize, m: usize) -> Result<ComplexMatrix> {
    if i == 0 || i > m || j == 0 || j > m {
        return Err(Error::IndexOutOfRange(format!(
            "matrix unit ({i}, {j}) outside 1..={m}"
        )));
    }
    Ok(ComplexMatrix::from_fn(m, m, |r, c| {
        Complex64::new(if (r, c) == (i - 1, j - 1) { 1.0 } else { 0.0 }, 0.0)
    }))
}

/// Row family: outer `n × n` over `M_n`, first row blocks `E_11, …, E_1n`,
/// all other blocks zero. Its flattening has the single nonzero row
/// `(1, 1), (1, n+2), …` and Schatten norm `√n` at every exponent.
pub fn make_a(n: usize) -> BlockMatrix {
    let mut x = BlockMatrix::zeros(n, n, n, n);
    for j in 0..n {
        x.set_block(0, j, matrix_unit(1, j + 1, n).expect("in range"))
            .expect("shape preserved");
    }
    x
}

/// Row family: outer `n × n` over `M_n`, first row blocks `E_11, E_21, …,
/// E_n1`. Its flattening has `n` singular values equal to 1, hence
/// Schatten norm `n^(1/p)`.
pub fn make_b(n: usize) -> BlockMatrix {
    let mut x = BlockMatrix::zeros(n, n, n, n);
    for j in 0..n {
        x.set_block(0, j, matrix_unit(j + 1, 1, n).expect("in range"))
            .expect("shape preserved");
    }
    x
}

/// The compression pair `a = E_11`, `b = n^(-1/(2p)) · I_n`. Both sides
/// have Schatten-2p norm at most 1 (exactly 1 for `b`), so the pair is a
/// feasible witness for the supremum formula at exponent `p`.
pub fn paper_witness_ab(n: usize, p: PExponent) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let p = match p {
        PExponent::Infinity => {
            return Err(Error::UnsupportedExponent(
                "the compression witness is defined for finite p".into(),
            ))
        }
        PExponent::Finite(v) => v,
    };
    let a = matrix_unit(1, 1, n)?;
    let scale = (n as f64).powf(-1.0 / (2.0 * p));
    let b = ComplexMatrix::identity(n).scale_re(scale);
    Ok((a, b))
}

/// Named witness families exposed through the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    CbTranspose,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::A => write!(f, "A"),
            Family::B => write!(f, "B"),
            Family::CbTranspose => write!(f, "cbt"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            "cbt" | "CBT" => Ok(Family::CbTranspose),
            other => Err(Error::InvalidConfig(format!(
                "unknown witness family '{other}' (expected A, B, or cbt)"
            ))),
        }
    }
}

/// A named witness instance.
#[derive(Debug, Clone)]
pub struct WitnessFamily {
    pub name: Family,
    pub n: usize,
    pub payload: BlockMatrix,
}

impl WitnessFamily {
    pub fn build(name: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("family size must be positive".into()));
        }
        let payload = match name {
            Family::A => make_a(n),
            Family::B => make_b(n),
            Family::CbTranspose => cb_transpose_witness(n)?.column,
        };
        Ok(Self { name, n, payload })
    }
}

/// Witness for the `√n` lower bound on the completely bounded norm of the
/// column-to-row transpose.
#[derive(Debug, Clone)]
pub struct CbTransposeWitness {
    /// Element of `M_n(M_{n,1})`: block `(1, i)` is the i-th standard
    /// basis column, all other blocks zero. Its flattening contains an
    /// identity block, so it has operator norm 1.
    pub column: BlockMatrix,
    /// `‖flatten(entry-transpose)‖ / ‖flatten‖`; equals `√n` because the
    /// entry transpose collapses the witness onto a single row of `n`
    /// ones.
    pub ratio: f64,
}

pub fn cb_transpose_witness(n: usize) -> Result<CbTransposeWitness> {
    if n == 0 {
        return Err(Error::InvalidConfig("witness size must be positive".into()));
    }
    let mut v = BlockMatrix::zeros(n, n, n, 1);
    for i in 0..n {
        let basis = ComplexMatrix::from_fn(n, 1, |r, _| {
            Complex64::new(if r == i { 1.0 } else { 0.0 }, 0.0)
        });
        v.set_block(0, i, basis)?;
    }
    let denom = v.flatten().operator_norm()?;
    let numer = v.entry_transpose().flatten().operator_norm()?;
    Ok(CbTransposeWitness {
        column: v,
        ratio: numer / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{hs_inner, schatten_from_singular_values};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matrix_unit_examples() {
        assert_eq!(
            matrix_unit(1, 1, 2).unwrap(),
            ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap()
        );
        assert_eq!(
            matrix_unit(1, 2, 2).unwrap(),
            ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
        );
        assert!(matrix_unit(0, 1, 2).is_err());
        assert!(matrix_unit(3, 1, 2).is_err());
    }

    #[test]
    fn first_row_units_are_orthonormal() {
        for n in 1..=4usize {
            for i in 1..=n {
                for j in 1..=n {
                    let got = hs_inner(
                        &matrix_unit(1, i, n).unwrap(),
                        &matrix_unit(1, j, n).unwrap(),
                    )
                    .unwrap();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(got, Complex64::new(want, 0.0));
                }
            }
        }
    }

    #[test]
    fn families_coincide_at_n_equals_one() {
        let a = make_a(1);
        let b = make_b(1);
        assert_eq!(a, b);
        assert_eq!(*a.block(0, 0), matrix_unit(1, 1, 1).unwrap());
    }

    #[test]
    fn family_norms_have_closed_forms() {
        for n in 1..=6usize {
            let sa = make_a(n).flatten().svd_values().unwrap();
            let sb = make_b(n).flatten().svd_values().unwrap();
            for p in [
                PExponent::Finite(1.0),
                PExponent::Finite(1.5),
                PExponent::Finite(2.0),
                PExponent::Finite(3.0),
                PExponent::Finite(4.0),
            ] {
                let na = schatten_from_singular_values(&sa, p);
                assert!(close(na, (n as f64).sqrt(), 1e-12), "A_{n} at {p}");
                let nb = schatten_from_singular_values(&sb, p);
                assert!(close(nb, (n as f64).powf(1.0 / p.value()), 1e-12), "B_{n} at {p}");
            }
            let nb_inf = schatten_from_singular_values(&sb, PExponent::Infinity);
            assert!(close(nb_inf, 1.0, 1e-12));
        }
    }

    #[test]
    fn family_spectra_are_exactly_as_expected() {
        for n in 1..=6usize {
            let sa = make_a(n).flatten().svd_values().unwrap();
            assert!(close(sa[0], (n as f64).sqrt(), 1e-12));
            for s in &sa[1..] {
                assert!(s.abs() < 1e-12);
            }
            let sb = make_b(n).flatten().svd_values().unwrap();
            for s in &sb[..n] {
                assert!(close(*s, 1.0, 1e-12));
            }
            for s in &sb[n..] {
                assert!(s.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn witness_pair_is_feasible_with_saturated_right_factor() {
        for n in 1..=5usize {
            for p in [1.0, 1.5, 3.0, 4.0] {
                let two_p = PExponent::Finite(2.0 * p);
                let (a, b) = paper_witness_ab(n, PExponent::Finite(p)).unwrap();
                assert!(a.schatten_norm(two_p).unwrap() <= 1.0 + 1e-12);
                assert!(close(b.schatten_norm(two_p).unwrap(), 1.0, 1e-12));
            }
        }
        assert!(paper_witness_ab(2, PExponent::Infinity).is_err());
    }

    #[test]
    fn witness_objective_values_on_both_families() {
        use crate::pnorm::compression_objective;
        for n in 2..=8usize {
            for p in [3.0, 4.0] {
                let (a, b) = paper_witness_ab(n, PExponent::Finite(p)).unwrap();
                let val = compression_objective(&make_a(n), &a, &b, PExponent::Finite(p)).unwrap();
                let want = (n as f64).powf(0.5 - 1.0 / (2.0 * p));
                assert!(close(val, want, 1e-12), "A_{n} p={p}: {val} vs {want}");
            }
            for p in [1.0, 1.5] {
                let (a, b) = paper_witness_ab(n, PExponent::Finite(p)).unwrap();
                let val = compression_objective(&make_b(n), &a, &b, PExponent::Finite(p)).unwrap();
                let want = (n as f64).powf(1.0 / (2.0 * p));
                assert!(close(val, want, 1e-12), "B_{n} p={p}: {val} vs {want}");
            }
        }
    }

    #[test]
    fn cb_transpose_ratio_is_sqrt_n() {
        assert!(close(cb_transpose_witness(1).unwrap().ratio, 1.0, 1e-12));

        let w = cb_transpose_witness(2).unwrap();
        assert!(close(w.column.flatten().operator_norm().unwrap(), 1.0, 1e-12));
        let amplified = w.column.entry_transpose().flatten();
        assert_eq!(amplified.shape(), (2, 4));
        assert!(close(amplified.operator_norm().unwrap(), 2.0_f64.sqrt(), 1e-12));
        assert!(close(w.ratio, 2.0_f64.sqrt(), 1e-12));

        assert!(close(cb_transpose_witness(8).unwrap().ratio, 8.0_f64.sqrt(), 1e-9));
    }

    #[test]
    fn family_builder_exposes_all_names() {
        for (name, text) in [
            (Family::A, "A"),
            (Family::B, "B"),
            (Family::CbTranspose, "cbt"),
        ] {
            assert_eq!(text.parse::<Family>().unwrap(), name);
            let w = WitnessFamily::build(name, 3).unwrap();
            assert_eq!(w.n, 3);
        }
        assert!("zzz".parse::<Family>().is_err());
        assert!(WitnessFamily::build(Family::A, 0).is_err());
    }
}
