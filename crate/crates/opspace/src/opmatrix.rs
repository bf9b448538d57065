//! Block matrices: elements of `M_{n,q}(E)` where the entry space `E`
//! sits inside `m × m'` matrices.
//!
//! Columns are the case `q = 1`, rows the case `n = 1`. The structural
//! maps are flattening into an ordinary `(n·m) × (q·m')` matrix, the
//! block transpose (outer indices only), the entry transpose (inner
//! indices only), and the two-sided scalar compression `a·x·b`.
//!
//! Storage is dense: every block is materialized even when zero, which
//! keeps `flatten` and `compress` branch-free at desk scale.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::matcore::ComplexMatrix;
use crate::{Error, Result};

/// Element of `M_{n,q}(E)`, `E ⊆ M_{m,m'}`: an outer `n × q` grid of
/// equal-shaped complex blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    outer_rows: usize,
    outer_cols: usize,
    inner_rows: usize,
    inner_cols: usize,
    /// Row-major over the outer grid; length `outer_rows * outer_cols`.
    blocks: Vec<ComplexMatrix>,
}

impl BlockMatrix {
    pub fn zeros(outer_rows: usize, outer_cols: usize, inner_rows: usize, inner_cols: usize) -> Self {
        assert!(
            outer_rows > 0 && outer_cols > 0 && inner_rows > 0 && inner_cols > 0,
            "block matrix dimensions must be positive"
        );
        Self {
            outer_rows,
            outer_cols,
            inner_rows,
            inner_cols,
            blocks: vec![ComplexMatrix::zeros(inner_rows, inner_cols); outer_rows * outer_cols],
        }
    }

    /// Builds from a row-major list of blocks, all of one shape.
    pub fn from_blocks(outer_rows: usize, outer_cols: usize, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != outer_rows * outer_cols || blocks.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                outer_rows * outer_cols,
                blocks.len()
            )));
        }
        let (m, mp) = blocks[0].shape();
        if let Some(bad) = blocks.iter().find(|b| b.shape() != (m, mp)) {
            return Err(Error::ShapeMismatch(format!(
                "all blocks must share one inner shape {m}x{mp}, found {}x{}",
                bad.rows(),
                bad.cols()
            )));
        }
        Ok(Self {
            outer_rows,
            outer_cols,
            inner_rows: m,
            inner_cols: mp,
            blocks,
        })
    }

    pub fn outer_rows(&self) -> usize {
        self.outer_rows
    }

    pub fn outer_cols(&self) -> usize {
        self.outer_cols
    }

    pub fn inner_rows(&self) -> usize {
        self.inner_rows
    }

    pub fn inner_cols(&self) -> usize {
        self.inner_cols
    }

    /// Block at outer position `(i, j)`, 0-based.
    pub fn block(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.blocks[i * self.outer_cols + j]
    }

    /// Replaces the block at `(i, j)`, 0-based; the shape must match.
    pub fn set_block(&mut self, i: usize, j: usize, block: ComplexMatrix) -> Result<()> {
        if i >= self.outer_rows || j >= self.outer_cols {
            return Err(Error::IndexOutOfRange(format!(
                "block ({i}, {j}) outside {}x{} grid",
                self.outer_rows, self.outer_cols
            )));
        }
        if block.shape() != (self.inner_rows, self.inner_cols) {
            return Err(Error::ShapeMismatch(format!(
                "block must be {}x{}, got {}x{}",
                self.inner_rows,
                self.inner_cols,
                block.rows(),
                block.cols()
            )));
        }
        self.blocks[i * self.outer_cols + j] = block;
        Ok(())
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, &ComplexMatrix)> {
        let q = self.outer_cols;
        self.blocks.iter().enumerate().map(move |(k, b)| (k / q, k % q, b))
    }

    /// The `(n·m) × (q·m')` matrix with block `(i, j)` occupying rows
    /// `i·m .. (i+1)·m` and columns `j·m' .. (j+1)·m'`.
    pub fn flatten(&self) -> ComplexMatrix {
        let m = self.inner_rows;
        let mp = self.inner_cols;
        ComplexMatrix::from_fn(self.outer_rows * m, self.outer_cols * mp, |r, c| {
            self.block(r / m, c / mp)[(r % m, c % mp)]
        })
    }

    /// Inverse of [`flatten`](Self::flatten) for the given shape.
    pub fn from_flat(
        flat: &ComplexMatrix,
        outer_rows: usize,
        outer_cols: usize,
        inner_rows: usize,
        inner_cols: usize,
    ) -> Result<Self> {
        if flat.shape() != (outer_rows * inner_rows, outer_cols * inner_cols) {
            return Err(Error::ShapeMismatch(format!(
                "flat matrix is {}x{}, expected {}x{}",
                flat.rows(),
                flat.cols(),
                outer_rows * inner_rows,
                outer_cols * inner_cols
            )));
        }
        let mut out = Self::zeros(outer_rows, outer_cols, inner_rows, inner_cols);
        for i in 0..outer_rows {
            for j in 0..outer_cols {
                let b = ComplexMatrix::from_fn(inner_rows, inner_cols, |r, c| {
                    flat[(i * inner_rows + r, j * inner_cols + c)]
                });
                out.set_block(i, j, b)?;
            }
        }
        Ok(out)
    }

    /// Swaps outer indices only: output block `(j, i)` is input block
    /// `(i, j)`; inner entries untouched.
    pub fn block_transpose(&self) -> Self {
        let mut out = Self::zeros(self.outer_cols, self.outer_rows, self.inner_rows, self.inner_cols);
        for (i, j, b) in self.blocks() {
            out.set_block(j, i, b.clone()).expect("shape preserved");
        }
        out
    }

    /// Transposes every block in place of itself: outer indices untouched,
    /// inner shape becomes `(m', m)`.
    pub fn entry_transpose(&self) -> Self {
        let mut out = Self::zeros(self.outer_rows, self.outer_cols, self.inner_cols, self.inner_rows);
        for (i, j, b) in self.blocks() {
            out.set_block(i, j, b.transpose()).expect("shape preserved");
        }
        out
    }

    /// Entrywise complex conjugate of every block.
    pub fn entry_conj(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.blocks {
            *b = b.conj();
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for b in &mut out.blocks {
            *b = b.scale(c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.outer_rows, self.outer_cols, self.inner_rows, self.inner_cols)
            != (
                other.outer_rows,
                other.outer_cols,
                other.inner_rows,
                other.inner_cols,
            )
        {
            return Err(Error::ShapeMismatch("block matrix addition shape mismatch".into()));
        }
        let mut out = self.clone();
        for (b, o) in out.blocks.iter_mut().zip(&other.blocks) {
            *b = b.add(o);
        }
        Ok(out)
    }

    /// Zero-pads the outer grid to `N × N`, `N = max(n, q)`. The inner
    /// shape is unchanged. Padding by zero blocks does not change any of
    /// the norms computed in this crate.
    pub fn pad_outer_square(&self) -> Self {
        if self.outer_rows == self.outer_cols {
            return self.clone();
        }
        let n = self.outer_rows.max(self.outer_cols);
        let mut out = Self::zeros(n, n, self.inner_rows, self.inner_cols);
        for (i, j, b) in self.blocks() {
            out.set_block(i, j, b.clone()).expect("shape preserved");
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.is_finite())
    }
}

/// Two-sided scalar compression `a·x·b`: output block
/// `(i, j) = Σ_{k,l} a[i,k] · x[k,l] · b[l,j]`, with `a` an `n × n` and
/// `b` a `q × q` scalar matrix.
pub fn compress(a: &ComplexMatrix, x: &BlockMatrix, b: &ComplexMatrix) -> Result<BlockMatrix> {
    if a.shape() != (x.outer_rows(), x.outer_rows()) {
        return Err(Error::ShapeMismatch(format!(
            "left factor must be {0}x{0}, got {1}x{2}",
            x.outer_rows(),
            a.rows(),
            a.cols()
        )));
    }
    if b.shape() != (x.outer_cols(), x.outer_cols()) {
        return Err(Error::ShapeMismatch(format!(
            "right factor must be {0}x{0}, got {1}x{2}",
            x.outer_cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = x.outer_rows();
    let q = x.outer_cols();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = BlockMatrix::zeros(n, q, x.inner_rows(), x.inner_cols());
    for i in 0..n {
        for j in 0..q {
            let mut acc = ComplexMatrix::zeros(x.inner_rows(), x.inner_cols());
            for k in 0..n {
                let aik = a[(i, k)];
                if aik == zero {
                    continue;
                }
                for l in 0..q {
                    let c = aik * b[(l, j)];
                    if c == zero {
                        continue;
                    }
                    acc = acc.add(&x.block(k, l).scale(c));
                }
            }
            out.set_block(i, j, acc)?;
        }
    }
    Ok(out)
}

// ── Serialization: {n, q, m, m', blocks: [{i, j, re, im}]} ──────────
//
// Block positions are 1-based in the JSON form; blocks that are omitted
// are zero. Emission is row-major over the nonzero blocks, which keeps
// output bytes reproducible.

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    i: usize,
    j: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BlockMatrixRepr {
    n: usize,
    q: usize,
    m: usize,
    #[serde(rename = "m'")]
    m_prime: usize,
    blocks: Vec<BlockRepr>,
}

impl Serialize for BlockMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .blocks()
            .filter(|(_, _, b)| b.entries().iter().any(|z| *z != Complex64::new(0.0, 0.0)))
            .map(|(i, j, b)| BlockRepr {
                i: i + 1,
                j: j + 1,
                re: b.entries().iter().map(|z| z.re).collect(),
                im: b.entries().iter().map(|z| z.im).collect(),
            })
            .collect();
        BlockMatrixRepr {
            n: self.outer_rows,
            q: self.outer_cols,
            m: self.inner_rows,
            m_prime: self.inner_cols,
            blocks,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BlockMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BlockMatrixRepr::deserialize(deserializer)?;
        if repr.n == 0 || repr.q == 0 || repr.m == 0 || repr.m_prime == 0 {
            return Err(D::Error::custom("block matrix dimensions must be positive"));
        }
        let mut out = BlockMatrix::zeros(repr.n, repr.q, repr.m, repr.m_prime);
        let mut seen = vec![false; repr.n * repr.q];
        for b in &repr.blocks {
            if b.i == 0 || b.i > repr.n || b.j == 0 || b.j > repr.q {
                return Err(D::Error::custom(format!(
                    "block position ({}, {}) outside 1..={} x 1..={}",
                    b.i, b.j, repr.n, repr.q
                )));
            }
            let idx = (b.i - 1) * repr.q + (b.j - 1);
            if seen[idx] {
                return Err(D::Error::custom(format!("duplicate block ({}, {})", b.i, b.j)));
            }
            seen[idx] = true;
            if b.re.len() != repr.m * repr.m_prime || b.im.len() != b.re.len() {
                return Err(D::Error::custom(format!(
                    "block ({}, {}) must carry {} entries",
                    b.i,
                    b.j,
                    repr.m * repr.m_prime
                )));
            }
            let entries = b
                .re
                .iter()
                .zip(&b.im)
                .map(|(&re, &im)| Complex64::new(re, im))
                .collect();
            let block = ComplexMatrix::new(repr.m, repr.m_prime, entries).map_err(D::Error::custom)?;
            out.set_block(b.i - 1, b.j - 1, block).map_err(D::Error::custom)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::PExponent;
    use crate::witnesses::{make_a, make_b, matrix_unit};
    use proptest::prelude::*;

    #[test]
    fn flatten_of_single_block_is_the_block() {
        let e11 = matrix_unit(1, 1, 2).unwrap();
        let x = BlockMatrix::from_blocks(1, 1, vec![e11.clone()]).unwrap();
        assert_eq!(x.flatten(), e11);
    }

    #[test]
    fn flatten_positions_of_row_witnesses() {
        // First family, n = 2: ones at (1,1) and (1,4) in 1-based terms.
        let a2 = make_a(2).flatten();
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (0, 0) || (r, c) == (0, 3) { 1.0 } else { 0.0 };
                assert_eq!(a2[(r, c)], Complex64::new(want, 0.0), "at ({r},{c})");
            }
        }
        // Second family, n = 2: ones at (1,1) and (2,3).
        let b2 = make_b(2).flatten();
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (0, 0) || (r, c) == (1, 2) { 1.0 } else { 0.0 };
                assert_eq!(b2[(r, c)], Complex64::new(want, 0.0), "at ({r},{c})");
            }
        }
    }

    #[test]
    fn block_transpose_of_row_witness_is_column_of_units() {
        for n in 1..=4usize {
            let t = make_a(n).block_transpose();
            for i in 0..n {
                for j in 0..n {
                    let want = if j == 0 {
                        matrix_unit(1, i + 1, n).unwrap()
                    } else {
                        ComplexMatrix::zeros(n, n)
                    };
                    assert_eq!(*t.block(i, j), want);
                }
            }
        }
    }

    #[test]
    fn block_transpose_involution_and_single_block() {
        let x = BlockMatrix::from_blocks(1, 1, vec![matrix_unit(1, 2, 3).unwrap()]).unwrap();
        assert_eq!(x.block_transpose(), x);

        let mut y = BlockMatrix::zeros(2, 3, 2, 2);
        y.set_block(0, 2, matrix_unit(2, 1, 2).unwrap()).unwrap();
        y.set_block(1, 0, matrix_unit(1, 2, 2).unwrap()).unwrap();
        assert_eq!(y.block_transpose().block_transpose(), y);
    }

    #[test]
    fn block_transpose_defining_index_identity() {
        let mut rng = crate::stream::substream(21, 0);
        let x = random_block(&mut rng, 3, 2, 2, 3);
        let t = x.block_transpose();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(t.block(j, i), x.block(i, j));
            }
        }
    }

    #[test]
    fn compress_with_identities_is_identity() {
        let mut rng = crate::stream::substream(22, 0);
        let x = random_block(&mut rng, 3, 2, 2, 2);
        let a = ComplexMatrix::identity(3);
        let b = ComplexMatrix::identity(2);
        assert_eq!(compress(&a, &x, &b).unwrap(), x);
    }

    #[test]
    fn compress_by_unit_and_scaled_identity_rescales_row_witness() {
        for n in 2..=4usize {
            for p in [1.0, 1.5, 3.0, 4.0] {
                let x = make_a(n);
                let (a, b) = crate::witnesses::paper_witness_ab(n, PExponent::Finite(p)).unwrap();
                let got = compress(&a, &x, &b).unwrap();
                let scale = (n as f64).powf(-1.0 / (2.0 * p));
                let want = x.scale(Complex64::new(scale, 0.0));
                let diff = got.flatten().sub(&want.flatten()).max_abs();
                assert!(diff < 1e-14, "n={n} p={p} diff={diff:e}");
            }
        }
    }

    #[test]
    fn compress_flatten_matches_kron_route() {
        let mut rng = crate::stream::substream(23, 0);
        for trial in 0..10 {
            let n = 1 + (trial % 3);
            let q = 1 + (trial % 2);
            let x = random_block(&mut rng, n, q, 2, 3);
            let a = random_matrix(&mut rng, n, n);
            let b = random_matrix(&mut rng, q, q);
            let via_blocks = compress(&a, &x, &b).unwrap().flatten();
            let via_kron = &(&a.kron(&ComplexMatrix::identity(2)) * &x.flatten())
                * &b.kron(&ComplexMatrix::identity(3));
            let diff = via_blocks.sub(&via_kron).max_abs();
            assert!(diff < 1e-12, "trial {trial}: diff {diff:e}");
        }
    }

    #[test]
    fn compress_is_bilinear_in_scalar_factors() {
        let mut rng = crate::stream::substream(24, 0);
        let x = random_block(&mut rng, 2, 2, 2, 2);
        let a1 = random_matrix(&mut rng, 2, 2);
        let a2 = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 2, 2);
        let lhs = compress(&a1.add(&a2), &x, &b).unwrap();
        let rhs = compress(&a1, &x, &b)
            .unwrap()
            .add(&compress(&a2, &x, &b).unwrap())
            .unwrap();
        assert!(lhs.flatten().sub(&rhs.flatten()).max_abs() < 1e-12);

        let b1 = random_matrix(&mut rng, 2, 2);
        let b2 = random_matrix(&mut rng, 2, 2);
        let lhs = compress(&a1, &x, &b1.add(&b2)).unwrap();
        let rhs = compress(&a1, &x, &b1)
            .unwrap()
            .add(&compress(&a1, &x, &b2).unwrap())
            .unwrap();
        assert!(lhs.flatten().sub(&rhs.flatten()).max_abs() < 1e-12);
    }

    #[test]
    fn compress_shape_mismatch_is_rejected() {
        let x = BlockMatrix::zeros(2, 3, 2, 2);
        let bad = ComplexMatrix::identity(3);
        let ok = ComplexMatrix::identity(3);
        assert!(compress(&bad, &x, &ok).is_err());
    }

    #[test]
    fn entry_transpose_transposes_inner_only() {
        let mut x = BlockMatrix::zeros(2, 2, 2, 1);
        x.set_block(0, 1, ComplexMatrix::from_real(2, 1, &[0.0, 1.0]).unwrap())
            .unwrap();
        let t = x.entry_transpose();
        assert_eq!((t.inner_rows(), t.inner_cols()), (1, 2));
        assert_eq!(*t.block(0, 1), ComplexMatrix::from_real(1, 2, &[0.0, 1.0]).unwrap());
        assert_eq!(*t.block(1, 0), ComplexMatrix::zeros(1, 2));
    }

    #[test]
    fn pad_outer_square_embeds_column() {
        let col = make_a(3).block_transpose();
        let mut narrow = BlockMatrix::zeros(3, 1, 3, 3);
        for i in 0..3 {
            narrow.set_block(i, 0, col.block(i, 0).clone()).unwrap();
        }
        let padded = narrow.pad_outer_square();
        assert_eq!((padded.outer_rows(), padded.outer_cols()), (3, 3));
        assert_eq!(padded.flatten().svd_values().unwrap(), col.flatten().svd_values().unwrap());
    }

    #[test]
    fn from_flat_inverts_flatten() {
        let mut rng = crate::stream::substream(25, 0);
        let x = random_block(&mut rng, 2, 3, 3, 2);
        let back = BlockMatrix::from_flat(&x.flatten(), 2, 3, 3, 2).unwrap();
        assert_eq!(x, back);
        assert!(BlockMatrix::from_flat(&x.flatten(), 3, 2, 3, 2).is_err());
    }

    #[test]
    fn block_json_rejects_bad_positions_and_duplicates() {
        let bad = r#"{"n":2,"q":2,"m":1,"m'":1,"blocks":[{"i":3,"j":1,"re":[1.0],"im":[0.0]}]}"#;
        assert!(serde_json::from_str::<BlockMatrix>(bad).is_err());
        let dup = r#"{"n":2,"q":2,"m":1,"m'":1,"blocks":[
            {"i":1,"j":1,"re":[1.0],"im":[0.0]},
            {"i":1,"j":1,"re":[2.0],"im":[0.0]}]}"#;
        assert!(serde_json::from_str::<BlockMatrix>(dup).is_err());
    }

    fn random_matrix(rng: &mut rand_chacha::ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| crate::stream::complex_gaussian(rng))
    }

    fn random_block(
        rng: &mut rand_chacha::ChaCha8Rng,
        n: usize,
        q: usize,
        m: usize,
        mp: usize,
    ) -> BlockMatrix {
        let blocks = (0..n * q).map(|_| random_matrix(rng, m, mp)).collect();
        BlockMatrix::from_blocks(n, q, blocks).unwrap()
    }

    fn block_strategy() -> impl Strategy<Value = BlockMatrix> {
        (1..=3usize, 1..=3usize, 1..=2usize, 1..=2usize, 0u64..5000).prop_map(|(n, q, m, mp, seed)| {
            let mut rng = crate::stream::substream(seed, 9);
            random_block(&mut rng, n, q, m, mp)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn json_round_trip(x in block_strategy()) {
            let text = serde_json::to_string(&x).unwrap();
            let back: BlockMatrix = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(x, back);
        }

        #[test]
        fn flatten_respects_index_formula(x in block_strategy()) {
            let f = x.flatten();
            let (m, mp) = (x.inner_rows(), x.inner_cols());
            for (i, j, b) in x.blocks() {
                for r in 0..m {
                    for c in 0..mp {
                        prop_assert_eq!(f[(i * m + r, j * mp + c)], b[(r, c)]);
                    }
                }
            }
        }
    }
}
