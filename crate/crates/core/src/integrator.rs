//! Explicit Dormand-Prince 8(5,3) integrator for autonomous linear systems
//! `dy/dt = f(y)` on complex vectors.
//!
//! Step control follows Hairer's DOP853: the error estimate blends the embedded
//! fifth- and third-order solutions, and step sizes stay within `[h/3, 6h]` of
//! the previous step. Output is produced by stepping exactly onto requested
//! times rather than by dense interpolation.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{pow, sqrt};
use crate::superop::SuperOp;

/// Autonomous right-hand side.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]);
}

impl OdeSystem for SuperOp {
    fn dim(&self) -> usize {
        SuperOp::dim(self)
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        self.apply(y, dy)
    }
}

impl<T: OdeSystem + ?Sized> OdeSystem for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        (**self).rhs(y, dy)
    }
}

impl<T: OdeSystem + ?Sized> OdeSystem for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        (**self).rhs(y, dy)
    }
}

/// Tolerances and step-control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub safety: f64,
    /// Lower bound on `h_new / h`.
    pub min_factor: f64,
    /// Upper bound on `h_new / h`.
    pub max_factor: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-10,
            initial_step: None,
            max_step: None,
            safety: 0.9,
            min_factor: 0.333,
            max_factor: 6.0,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegratorConfig { rtol, atol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.rtol.is_finite()
            && self.atol.is_finite()
            && self.safety > 0.0
            && self.safety < 1.0
            && self.min_factor > 0.0
            && self.min_factor < 1.0
            && self.max_factor > 1.0;
        if !ok {
            return Err(Error::InvalidParameter(alloc::format!("integrator config {self:?}")));
        }
        Ok(())
    }
}

/// Adaptive DOP853 stepper owning its state.
pub struct Dop853<S: OdeSystem> {
    sys: S,
    cfg: IntegratorConfig,
    t: f64,
    y: Vec<Complex64>,
    h: f64,
    k: [Vec<Complex64>; 12],
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
    accepted: usize,
    rejected: usize,
}

impl<S: OdeSystem> Dop853<S> {
    pub fn new(sys: S, t0: f64, y0: Vec<Complex64>, cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let n = sys.dim();
        assert_eq!(y0.len(), n, "initial state has wrong dimension");
        let k: [Vec<Complex64>; 12] = core::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
        let mut stepper = Dop853 {
            sys,
            cfg,
            t: t0,
            y: y0,
            h: 0.0,
            k,
            stage: vec![Complex64::new(0.0, 0.0); n],
            y_new: vec![Complex64::new(0.0, 0.0); n],
            accepted: 0,
            rejected: 0,
        };
        stepper.sys.rhs(&stepper.y, &mut stepper.k[0]);
        stepper.h = match cfg.initial_step {
            Some(h) => h,
            None => stepper.initial_step(),
        };
        if let Some(hmax) = cfg.max_step {
            stepper.h = stepper.h.min(hmax);
        }
        Ok(stepper)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Step size the next attempt will use (unless clipped to an output time).
    pub fn step_size(&self) -> f64 {
        self.h
    }

    fn scale(&self, a: Complex64, b: Complex64) -> f64 {
        self.cfg.atol + self.cfg.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let sk = self.cfg.atol + self.cfg.rtol * y.norm();
            d0 += y.norm_sqr() / (sk * sk);
            d1 += f.norm_sqr() / (sk * sk);
        }
        let (d0, d1) = (sqrt(d0 / n), sqrt(d1 / n));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for ((s, y), f) in self.stage.iter_mut().zip(&self.y).zip(&self.k[0]) {
            *s = y + f * h0;
        }
        let (head, tail) = self.k.split_at_mut(1);
        self.sys.rhs(&self.stage, &mut tail[0]);
        let mut d2 = 0.0;
        for ((y, f0), f1) in self.y.iter().zip(&head[0]).zip(&tail[0]) {
            let sk = self.cfg.atol + self.cfg.rtol * y.norm();
            d2 += (f1 - f0).norm_sqr() / (sk * sk);
        }
        let d2 = sqrt(d2 / n) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            pow(0.01 / d1.max(d2), 1.0 / 8.0)
        };
        (100.0 * h0).min(h1)
    }

    /// Integrates up to exactly `t_end` (no-op if already there).
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if !t_end.is_finite() || t_end < self.t {
            return Err(Error::InvalidParameter(alloc::format!(
                "cannot integrate backwards from {} to {t_end}",
                self.t
            )));
        }
        while self.t < t_end {
            if self.accepted + self.rejected >= self.cfg.max_steps {
                return Err(Error::MaxSteps { t: self.t });
            }
            let remaining = t_end - self.t;
            if remaining <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                // rounding leftover from repeated additions
                self.t = t_end;
                break;
            }
            let clipped = self.h * 1.01 >= remaining;
            let h = if clipped { remaining } else { self.h };
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            let (err, h_next) = self.try_step(h);
            if !err.is_finite() {
                return Err(Error::NonFinite(alloc::format!("error estimate at t = {}", self.t)));
            }
            if err <= 1.0 {
                self.accepted += 1;
                core::mem::swap(&mut self.y, &mut self.y_new);
                self.t = if clipped { t_end } else { self.t + h };
                // FSAL: derivative at the new point becomes k1
                self.sys.rhs(&self.y, &mut self.k[0]);
                // a step shortened to hit the output time says little about the natural step
                self.h = if clipped { h_next.max(self.h) } else { h_next };
            } else {
                self.rejected += 1;
                self.h = h_next;
            }
            if let Some(hmax) = self.cfg.max_step {
                self.h = self.h.min(hmax);
            }
        }
        Ok(())
    }

    /// Attempts one step of size `h`; fills `y_new` and returns the scaled
    /// error together with the proposed next step size.
    fn try_step(&mut self, h: f64) -> (f64, f64) {
        use tableau::*;
        let n = self.y.len();
        let rows: [&[f64]; 11] = [
            &[A21],
            &[A31, A32],
            &[A41, 0.0, A43],
            &[A51, 0.0, A53, A54],
            &[A61, 0.0, 0.0, A64, A65],
            &[A71, 0.0, 0.0, A74, A75, A76],
            &[A81, 0.0, 0.0, A84, A85, A86, A87],
            &[A91, 0.0, 0.0, A94, A95, A96, A97, A98],
            &[A101, 0.0, 0.0, A104, A105, A106, A107, A108, A109],
            &[A111, 0.0, 0.0, A114, A115, A116, A117, A118, A119, A1110],
            &[A121, 0.0, 0.0, A124, A125, A126, A127, A128, A129, A1210, A1211],
        ];
        for (s, coeffs) in rows.iter().enumerate() {
            combine(&mut self.stage, &self.y, h, coeffs, &self.k);
            let (_, tail) = self.k.split_at_mut(s + 1);
            self.sys.rhs(&self.stage, &mut tail[0]);
        }
        let b = [B1, 0.0, 0.0, 0.0, 0.0, B6, B7, B8, B9, B10, B11, B12];
        combine(&mut self.y_new, &self.y, h, &b, &self.k);

        let er = [ER1, 0.0, 0.0, 0.0, 0.0, ER6, ER7, ER8, ER9, ER10, ER11, ER12];
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y_new[i]);
            let mut e5 = Complex64::new(0.0, 0.0);
            let mut bsum = Complex64::new(0.0, 0.0);
            for j in 0..12 {
                let kj = self.k[j][i];
                if er[j] != 0.0 {
                    e5 += kj * er[j];
                }
                if b[j] != 0.0 {
                    bsum += kj * b[j];
                }
            }
            let e3 = bsum - self.k[0][i] * BHH1 - self.k[8][i] * BHH2 - self.k[11][i] * BHH3;
            err5 += e5.norm_sqr() / (sk * sk);
            err3 += e3.norm_sqr() / (sk * sk);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 * sqrt(1.0 / (deno * n.max(1) as f64));

        let fac11 = pow(err, 1.0 / 8.0);
        let inv_min = 1.0 / self.cfg.min_factor;
        let inv_max = 1.0 / self.cfg.max_factor;
        let h_next = if err <= 1.0 {
            let fac = (fac11 / self.cfg.safety).clamp(inv_max, inv_min);
            h / fac
        } else {
            h / inv_min.min(fac11 / self.cfg.safety)
        };
        (err, h_next)
    }
}

/// `out = y + h * sum_j coeffs[j] * k[j]`.
fn combine(out: &mut [Complex64], y: &[Complex64], h: f64, coeffs: &[f64], k: &[Vec<Complex64>]) {
    let terms: Vec<(f64, &[Complex64])> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (h * c, k[j].as_slice()))
        .collect();
    out.copy_from_slice(y);
    for (c, kj) in terms {
        for (o, v) in out.iter_mut().zip(kj) {
            *o += v * c;
        }
    }
}

#[rustfmt::skip]
mod tableau {
    pub const A21: f64 = 5.26001519587677318785587544488E-2;
    pub const A31: f64 = 1.97250569845378994544595329183E-2;
    pub const A32: f64 = 5.91751709536136983633785987549E-2;
    pub const A41: f64 = 2.95875854768068491816892993775E-2;
    pub const A43: f64 = 8.87627564304205475450678981324E-2;
    pub const A51: f64 = 2.41365134159266685502369798665E-1;
    pub const A53: f64 = -8.84549479328286085344864962717E-1;
    pub const A54: f64 = 9.24834003261792003115737966543E-1;
    pub const A61: f64 = 3.7037037037037037037037037037E-2;
    pub const A64: f64 = 1.70828608729473871279604482173E-1;
    pub const A65: f64 = 1.25467687566822425016691814123E-1;
    pub const A71: f64 = 3.7109375E-2;
    pub const A74: f64 = 1.70252211019544039314978060272E-1;
    pub const A75: f64 = 6.02165389804559606850219397283E-2;
    pub const A76: f64 = -1.7578125E-2;
    pub const A81: f64 = 3.70920001185047927108779319836E-2;
    pub const A84: f64 = 1.70383925712239993810214054705E-1;
    pub const A85: f64 = 1.07262030446373284651809199168E-1;
    pub const A86: f64 = -1.53194377486244017527936158236E-2;
    pub const A87: f64 = 8.27378916381402288758473766002E-3;
    pub const A91: f64 = 6.24110958716075717114429577812E-1;
    pub const A94: f64 = -3.36089262944694129406857109825E0;
    pub const A95: f64 = -8.68219346841726006818189891453E-1;
    pub const A96: f64 = 2.75920996994467083049415600797E1;
    pub const A97: f64 = 2.01540675504778934086186788979E1;
    pub const A98: f64 = -4.34898841810699588477366255144E1;
    pub const A101: f64 = 4.77662536438264365890433908527E-1;
    pub const A104: f64 = -2.48811461997166764192642586468E0;
    pub const A105: f64 = -5.90290826836842996371446475743E-1;
    pub const A106: f64 = 2.12300514481811942347288949897E1;
    pub const A107: f64 = 1.52792336328824235832596922938E1;
    pub const A108: f64 = -3.32882109689848629194453265587E1;
    pub const A109: f64 = -2.03312017085086261358222928593E-2;
    pub const A111: f64 = -9.3714243008598732571704021658E-1;
    pub const A114: f64 = 5.18637242884406370830023853209E0;
    pub const A115: f64 = 1.09143734899672957818500254654E0;
    pub const A116: f64 = -8.14978701074692612513997267357E0;
    pub const A117: f64 = -1.85200656599969598641566180701E1;
    pub const A118: f64 = 2.27394870993505042818970056734E1;
    pub const A119: f64 = 2.49360555267965238987089396762E0;
    pub const A1110: f64 = -3.0467644718982195003823669022E0;
    pub const A121: f64 = 2.27331014751653820792359768449E0;
    pub const A124: f64 = -1.05344954667372501984066689879E1;
    pub const A125: f64 = -2.00087205822486249909675718444E0;
    pub const A126: f64 = -1.79589318631187989172765950534E1;
    pub const A127: f64 = 2.79488845294199600508499808837E1;
    pub const A128: f64 = -2.85899827713502369474065508674E0;
    pub const A129: f64 = -8.87285693353062954433549289258E0;
    pub const A1210: f64 = 1.23605671757943030647266201528E1;
    pub const A1211: f64 = 6.43392746015763530355970484046E-1;

    pub const B1: f64 = 5.42937341165687622380535766363E-2;
    pub const B6: f64 = 4.45031289275240888144113950566E0;
    pub const B7: f64 = 1.89151789931450038304281599044E0;
    pub const B8: f64 = -5.8012039600105847814672114227E0;
    pub const B9: f64 = 3.1116436695781989440891606237E-1;
    pub const B10: f64 = -1.52160949662516078556178806805E-1;
    pub const B11: f64 = 2.01365400804030348374776537501E-1;
    pub const B12: f64 = 4.47106157277725905176885569043E-2;

    pub const BHH1: f64 = 0.244094488188976377952755905512E+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547E+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412E-01;

    pub const ER1: f64 = 0.1312004499419488073250102996E-01;
    pub const ER6: f64 = -0.1225156446376204440720569753E+01;
    pub const ER7: f64 = -0.4957589496572501915214079952E+00;
    pub const ER8: f64 = 0.1664377182454986536961530415E+01;
    pub const ER9: f64 = -0.3503288487499736816886487290E+00;
    pub const ER10: f64 = 0.3341791187130174790297318841E+00;
    pub const ER11: f64 = 0.8192320648511571246570742613E-01;
    pub const ER12: f64 = -0.2235530786388629525884427845E-01;
}
