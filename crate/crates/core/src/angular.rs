//! Angular momentum algebra for dipole transitions between two hyperfine
//! manifolds with total angular momenta `Fg` (ground) and `Fe` (excited).
//!
//! Conventions fixed here and used everywhere else in the crate:
//!
//! * Clebsch-Gordan coefficients follow the Condon-Shortley phase convention
//!   and are evaluated from the Racah closed-form sum with exact integer
//!   factorial arithmetic (rationals), rounding only at the final square root.
//! * The spherical basis is `e_{+1} = -(x + iy)/sqrt(2)`, `e_0 = z`,
//!   `e_{-1} = (x - iy)/sqrt(2)`, with `z` the quantization axis.
//! * The lowering operator for polarization index `q` has matrix elements
//!   `<Fg mg| Q^q |Fe me> = <Fg mg; 1 q | Fe me>`, nonzero only for
//!   `me = mg + q`. With this normalization the sum rule
//!   `sum_q Q^q_eg Q^q_ge = P_e` holds exactly (the reduced dipole element is
//!   one), so the repopulation term of the master equation conserves trace
//!   without any extra prefactor.

use nalgebra::DMatrix;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use num_complex::Complex64;
use thiserror::Error;

/// Errors from angular momentum constructors and coefficient evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AngularError {
    #[error("{name} = {value} is not a non-negative half-integer")]
    NotHalfInteger { name: &'static str, value: f64 },
    #[error("{name}: projection m = {m} lies outside |m| <= {j}")]
    ProjectionOutOfRange { name: &'static str, j: f64, m: f64 },
    #[error("{name}: j = {j} and m = {m} differ by a non-integer")]
    MixedParity { name: &'static str, j: f64, m: f64 },
    #[error("coupling F1 = {f1}, F2 = {f2}, F = {f} mixes integer and half-integer momenta")]
    InconsistentCoupling { f1: f64, f2: f64, f: f64 },
    #[error("transition Fg = {fg} -> Fe = {fe} is not dipole-allowed")]
    NotDipoleAllowed { fg: f64, fe: f64 },
    #[error("gamma must be > 0 (got {0})")]
    NonPositiveGamma(f64),
    #[error("polarization vector has zero norm")]
    ZeroPolarization,
}

const HALF_INT_TOL: f64 = 1e-9;

/// Doubled half-integer value: `2j` stored as an exact integer.
fn doubled(name: &'static str, value: f64) -> Result<i64, AngularError> {
    let twice = 2.0 * value;
    let rounded = twice.round();
    if !twice.is_finite() || (twice - rounded).abs() > HALF_INT_TOL {
        return Err(AngularError::NotHalfInteger { name, value });
    }
    Ok(rounded as i64)
}

fn doubled_pair(
    jname: &'static str,
    j: f64,
    m: f64,
) -> Result<(i64, i64), AngularError> {
    let j2 = doubled(jname, j)?;
    let m2 = doubled(jname, m)?;
    if j2 < 0 {
        return Err(AngularError::NotHalfInteger { name: jname, value: j });
    }
    if (j2 + m2) % 2 != 0 {
        return Err(AngularError::MixedParity { name: jname, j, m });
    }
    if m2.abs() > j2 {
        return Err(AngularError::ProjectionOutOfRange { name: jname, j, m });
    }
    Ok((j2, m2))
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Clebsch-Gordan coefficient `<j1 m1; j2 m2 | j m>` in the Condon-Shortley
/// convention, evaluated from the Racah algebraic sum with exact integer
/// factorials.
///
/// Selection-rule failures (projection mismatch or triangle violation) return
/// `Ok(0.0)`; malformed inputs (non-half-integers, `|m| > j`, `j + m` not an
/// integer, or a coupling whose perimeter `j1 + j2 + j` is not an integer)
/// return an error.
pub fn clebsch_gordan(
    j1: f64,
    m1: f64,
    j2: f64,
    m2: f64,
    j: f64,
    m: f64,
) -> Result<f64, AngularError> {
    let (j1x, m1x) = doubled_pair("j1", j1, m1)?;
    let (j2x, m2x) = doubled_pair("j2", j2, m2)?;
    let (jx, mx) = doubled_pair("j", j, m)?;
    if (j1x + j2x + jx) % 2 != 0 {
        return Err(AngularError::InconsistentCoupling { f1: j1, f2: j2, f: j });
    }
    if m1x + m2x != mx || jx > j1x + j2x || jx < (j1x - j2x).abs() {
        return Ok(0.0);
    }

    // All the combinations below are guaranteed even, so the halved values
    // are exact integers.
    let half = |v: i64| -> i64 {
        debug_assert!(v % 2 == 0);
        v / 2
    };
    let t1 = half(j1x + j2x - jx);
    let t2 = half(j1x - j2x + jx);
    let t3 = half(-j1x + j2x + jx);
    let jp = half(jx + mx);
    let jm = half(jx - mx);
    let a1 = half(j1x - m1x);
    let a2 = half(j1x + m1x);
    let b1 = half(j2x - m2x);
    let b2 = half(j2x + m2x);

    // Prefactor under the square root, kept as an exact rational.
    let mut r = BigRational::from_integer(BigInt::from(jx + 1));
    for f in [jp, jm, a1, a2, b1, b2, t1, t2, t3] {
        r *= BigRational::from_integer(factorial(f));
    }
    r /= BigRational::from_integer(factorial(half(j1x + j2x + jx) + 1));

    // Racah sum over all k with non-negative factorial arguments.
    let c1 = half(jx - j2x + m1x);
    let c2 = half(jx - j1x - m2x);
    let kmin = 0.max(-c1).max(-c2);
    let kmax = t1.min(a1).min(b2);
    let mut s = BigRational::zero();
    for k in kmin..=kmax {
        let mut term = BigRational::one();
        for f in [k, t1 - k, a1 - k, b2 - k, c1 + k, c2 + k] {
            term /= BigRational::from_integer(factorial(f));
        }
        if k % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
    }

    if s.is_zero() {
        return Ok(0.0);
    }
    let sign = if s.is_negative() { -1.0 } else { 1.0 };
    let value = (&r * &s * &s)
        .to_f64()
        .expect("rational magnitude representable as f64");
    Ok(sign * value.sqrt())
}

/// A closed dipole transition between a ground manifold `Fg` and an excited
/// manifold `Fe` with decay rate `gamma` and Lande factors `g_g`, `g_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicTransition {
    fg2: i64,
    fe2: i64,
    /// Excited-state decay rate (sets the unit of time when equal to one).
    pub gamma: f64,
    /// Ground-state Lande factor (descriptive; dynamics use Larmor products).
    pub g_g: f64,
    /// Excited-state Lande factor.
    pub g_e: f64,
}

impl AtomicTransition {
    pub fn new(
        fg: f64,
        fe: f64,
        gamma: f64,
        g_g: f64,
        g_e: f64,
    ) -> Result<Self, AngularError> {
        let fg2 = doubled("Fg", fg)?;
        let fe2 = doubled("Fe", fe)?;
        if fg2 < 0 {
            return Err(AngularError::NotHalfInteger { name: "Fg", value: fg });
        }
        if fe2 < 0 {
            return Err(AngularError::NotHalfInteger { name: "Fe", value: fe });
        }
        // Dipole selection: |Fe - Fg| <= 1 and not Fg = Fe = 0. Integer and
        // half-integer manifolds cannot be dipole-coupled.
        if (fe2 - fg2).abs() > 2 || (fg2 == 0 && fe2 == 0) || (fe2 - fg2) % 2 != 0 {
            return Err(AngularError::NotDipoleAllowed { fg, fe });
        }
        if !(gamma > 0.0) {
            return Err(AngularError::NonPositiveGamma(gamma));
        }
        Ok(Self { fg2, fe2, gamma, g_g, g_e })
    }

    /// Transition with unit decay rate and unit Lande factors.
    pub fn bare(fg: f64, fe: f64) -> Result<Self, AngularError> {
        Self::new(fg, fe, 1.0, 1.0, 1.0)
    }

    pub fn fg(&self) -> f64 {
        self.fg2 as f64 / 2.0
    }

    pub fn fe(&self) -> f64 {
        self.fe2 as f64 / 2.0
    }

    /// Ground manifold dimension `2 Fg + 1`.
    pub fn dg(&self) -> usize {
        (self.fg2 + 1) as usize
    }

    /// Excited manifold dimension `2 Fe + 1`.
    pub fn de(&self) -> usize {
        (self.fe2 + 1) as usize
    }

    /// Ground projection quantum number of basis index `i` (ascending order
    /// `-Fg ... +Fg`).
    pub fn mg(&self, i: usize) -> f64 {
        i as f64 - self.fg()
    }

    /// Excited projection quantum number of basis index `i`.
    pub fn me(&self, i: usize) -> f64 {
        i as f64 - self.fe()
    }
}

/// Which manifold an operator block acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    Ground,
    Excited,
}

/// Dense complex operator block carrying its row/column manifold labels, so
/// that mixed ground/excited products are dimension-checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub rows: Manifold,
    pub cols: Manifold,
    pub matrix: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(
        transition: &AtomicTransition,
        rows: Manifold,
        cols: Manifold,
        matrix: DMatrix<Complex64>,
    ) -> Self {
        let dim = |m: Manifold| match m {
            Manifold::Ground => transition.dg(),
            Manifold::Excited => transition.de(),
        };
        assert_eq!(matrix.nrows(), dim(rows), "row dimension/manifold mismatch");
        assert_eq!(matrix.ncols(), dim(cols), "column dimension/manifold mismatch");
        Self { rows, cols, matrix }
    }

    /// Conjugate transpose with swapped manifold labels.
    pub fn dagger(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            matrix: self.matrix.adjoint(),
        }
    }
}

/// Unit polarization in the spherical basis, stored as the expansion
/// coefficients `(c_{-1}, c_0, c_{+1})` of `e = sum_q c_q e_q`, normalized to
/// `sum_q |c_q|^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polarization {
    c: [Complex64; 3],
}

impl Polarization {
    /// Builds from spherical components `(c_{-1}, c_0, c_{+1})`, normalizing.
    pub fn new(
        c_minus: Complex64,
        c_zero: Complex64,
        c_plus: Complex64,
    ) -> Result<Self, AngularError> {
        let norm2 = c_minus.norm_sqr() + c_zero.norm_sqr() + c_plus.norm_sqr();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(AngularError::ZeroPolarization);
        }
        let n = norm2.sqrt();
        Ok(Self { c: [c_minus / n, c_zero / n, c_plus / n] })
    }

    pub fn sigma_plus() -> Self {
        Self { c: [Complex64::ZERO, Complex64::ZERO, Complex64::ONE] }
    }

    pub fn sigma_minus() -> Self {
        Self { c: [Complex64::ONE, Complex64::ZERO, Complex64::ZERO] }
    }

    /// Linear polarization along the quantization axis.
    pub fn pi() -> Self {
        Self { c: [Complex64::ZERO, Complex64::ONE, Complex64::ZERO] }
    }

    pub fn linear_x() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { c: [s, Complex64::ZERO, -s] }
    }

    pub fn linear_y() -> Self {
        let s = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Self { c: [s, Complex64::ZERO, s] }
    }

    /// Spherical components in `q = -1, 0, +1` order.
    pub fn components(&self) -> [Complex64; 3] {
        self.c
    }

    pub fn component(&self, q: i32) -> Complex64 {
        self.c[(q + 1) as usize]
    }

    /// Cartesian components `(vx, vy, vz)` of the unit vector.
    pub fn to_cartesian(&self) -> [Complex64; 3] {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let [cm, c0, cp] = self.c;
        [
            (cm - cp) * inv,
            -(cm + cp) * Complex64::i() * inv,
            c0,
        ]
    }

    /// Same polarization with a global phase `exp(i phi)` applied.
    pub fn phase_rotated(&self, phi: f64) -> Self {
        let ph = Complex64::from_polar(1.0, phi);
        Self { c: [self.c[0] * ph, self.c[1] * ph, self.c[2] * ph] }
    }
}

/// Expands a (possibly complex) Cartesian vector over the spherical basis and
/// normalizes: `c_q = e_q^* . v`. Rejects the zero vector.
pub fn cartesian_to_spherical(v: [Complex64; 3]) -> Result<Polarization, AngularError> {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let [vx, vy, vz] = v;
    let c_minus = (vx + Complex64::i() * vy) * inv;
    let c_plus = -(vx - Complex64::i() * vy) * inv;
    Polarization::new(c_minus, vz, c_plus)
}

/// The three normalized lowering operators `Q^q_ge` (`q = -1, 0, +1` order).
///
/// `Q^q_ge[mg, me] = <Fg mg; 1 q | Fe me>`, nonzero only for `me = mg + q`,
/// so `q` labels the spherical polarization that drives `mg -> me = mg + q`.
/// The raising partners are the conjugate transposes, and
/// `sum_q Q^q_eg Q^q_ge = P_e` exactly.
pub fn lowering_operators(transition: &AtomicTransition) -> [OperatorMatrix; 3] {
    let (dg, de) = (transition.dg(), transition.de());
    let (fg, fe) = (transition.fg(), transition.fe());
    std::array::from_fn(|iq| {
        let q = iq as f64 - 1.0;
        let mut m = DMatrix::<Complex64>::zeros(dg, de);
        for ig in 0..dg {
            let mg = transition.mg(ig);
            let me = mg + q;
            if me.abs() <= fe {
                let ie = (me + fe).round() as usize;
                let cg = clebsch_gordan(fg, mg, 1.0, q, fe, me)
                    .expect("validated transition momenta");
                m[(ig, ie)] = Complex64::new(cg, 0.0);
            }
        }
        OperatorMatrix::new(transition, Manifold::Ground, Manifold::Excited, m)
    })
}

/// Dimensionless coupling matrix `V_ge = sum_q c_q Q^q_ge` for light of the
/// given polarization (reduced dipole element absorbed into the Rabi
/// amplitude).
pub fn dipole_coupling(
    transition: &AtomicTransition,
    polarization: &Polarization,
) -> OperatorMatrix {
    let q_ops = lowering_operators(transition);
    let mut m = DMatrix::<Complex64>::zeros(transition.dg(), transition.de());
    for (iq, op) in q_ops.iter().enumerate() {
        let c = polarization.components()[iq];
        if c != Complex64::ZERO {
            m += &op.matrix * c;
        }
    }
    OperatorMatrix::new(transition, Manifold::Ground, Manifold::Excited, m)
}
