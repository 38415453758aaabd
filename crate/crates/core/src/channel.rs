//! BS→RIS and RIS→user channels.
//!
//! The BS→RIS hop uses the probabilistic air-to-ground path loss with
//! Rayleigh small-scale fading; the RIS→user hop uses a power-law path loss
//! with Rician fading. Estimated channels are the true ones plus independent
//! `CN(0, ζ²)` error per entry.

use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{elevation_angle, Layout, Position3D};
use crate::math::{db_to_linear, CMatrix, Complex};
use crate::rng::complex_normal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossParams {
    /// BS–RIS exponent.
    pub alpha: f64,
    /// RIS–user exponent.
    pub nu: f64,
    /// Reference loss at 1 m on the RIS–user hop.
    pub upsilon_db: f64,
    /// Excess NLoS attenuation on the BS–RIS hop.
    pub phi_nlos_db: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub k_rician: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            nu: 2.5,
            upsilon_db: -30.0,
            phi_nlos_db: 20.0,
            c_x: 9.61,
            c_y: 0.16,
            k_rician: 10.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::config("pathloss.alpha", "must be > 0"));
        }
        if !(self.nu >= 0.0) {
            return Err(Error::config("pathloss.nu", "must be >= 0"));
        }
        if !(self.k_rician >= 0.0) {
            return Err(Error::config("pathloss.k_rician", "must be >= 0"));
        }
        Ok(())
    }
}

/// Probability of a line-of-sight BS–element link at elevation `theta_deg`.
pub fn los_probability(theta_deg: f64, params: &PathLossParams) -> f64 {
    1.0 / (1.0 + params.c_x * libm::exp(-params.c_y * (theta_deg - params.c_x)))
}

/// Linear BS→element power gain, LoS/NLoS-averaged.
pub fn bs_ris_pathloss(
    bs: &Position3D,
    element: &Position3D,
    params: &PathLossParams,
) -> Result<f64> {
    let d = bs.distance(element);
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let p_los = los_probability(elevation_angle(bs, element)?, params);
    let nlos = db_to_linear(-params.phi_nlos_db);
    Ok((p_los + (1.0 - p_los) * nlos) * libm::pow(d, -params.alpha))
}

/// Linear element→user power gain with a 1 m reference distance.
pub fn ris_user_pathloss(
    element: &Position3D,
    user: &Position3D,
    params: &PathLossParams,
) -> Result<f64> {
    let d = element.distance(user);
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(db_to_linear(params.upsilon_db) * libm::pow(d, -params.nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub pathloss: PathLossParams,
    /// Carrier wavelength used for the deterministic LoS phase.
    pub wavelength: f64,
    /// `ζ`
    pub csi_error_std: f64,
    pub csi_error_bs_ris: bool,
    pub csi_error_ris_user: bool,
    /// `ψ`
    pub hi_level: f64,
    /// `σ²` in watts.
    pub noise_power: f64,
}

/// Channel realisation for one slot.
///
/// `g1_*` is `A × L` (column `l` is the BS-antenna vector of element `l`);
/// `g_ru_*` is `K × L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub g1_true: CMatrix,
    pub g1_est: CMatrix,
    pub g_ru_true: CMatrix,
    pub g_ru_est: CMatrix,
    pub csi_error_std: f64,
    pub hi_level: f64,
    pub noise_power: f64,
}

impl ChannelState {
    pub fn antennas(&self) -> usize {
        self.g1_true.rows()
    }

    pub fn elements(&self) -> usize {
        self.g1_true.cols()
    }

    pub fn users(&self) -> usize {
        self.g_ru_true.rows()
    }

    pub fn g1(&self, estimated: bool) -> &CMatrix {
        if estimated {
            &self.g1_est
        } else {
            &self.g1_true
        }
    }

    pub fn g_ru(&self, estimated: bool) -> &CMatrix {
        if estimated {
            &self.g_ru_est
        } else {
            &self.g_ru_true
        }
    }
}

/// Draws a channel realisation for `layout`.
///
/// Fading comes from `fading`, estimation error from `estimation`, so a
/// change of `ζ` leaves the true channels untouched for a fixed seed.
pub fn sample_channels<R: Rng + ?Sized>(
    layout: &Layout,
    params: &ChannelParams,
    antennas: usize,
    fading: &mut R,
    estimation: &mut R,
) -> Result<ChannelState> {
    params.pathloss.validate()?;
    let l_count = layout.ris_elements.len();
    let k_count = layout.users.len();

    let mut g1 = CMatrix::zeros(antennas, l_count);
    for (l, element) in layout.ris_elements.iter().enumerate() {
        let pl = bs_ris_pathloss(&layout.bs, element, &params.pathloss)?;
        for a in 0..antennas {
            g1.set(a, l, complex_normal(fading, pl));
        }
    }

    let k = params.pathloss.k_rician;
    let (w_los, w_nlos) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        (libm::sqrt(k / (1.0 + k)), libm::sqrt(1.0 / (1.0 + k)))
    };
    let mut g_ru = CMatrix::zeros(k_count, l_count);
    for (u, user) in layout.users.iter().enumerate() {
        for (l, element) in layout.ris_elements.iter().enumerate() {
            let pl = ris_user_pathloss(element, user, &params.pathloss)?;
            let d = element.distance(user);
            let los = Complex::from_polar(1.0, -2.0 * PI * d / params.wavelength);
            let nlos = complex_normal(fading, 1.0);
            g_ru.set(u, l, (los * w_los + nlos * w_nlos) * libm::sqrt(pl));
        }
    }

    let zeta2 = params.csi_error_std * params.csi_error_std;
    let perturb = |m: &CMatrix, on: bool, rng: &mut R| {
        let mut est = m.clone();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                // always draw so the stream position does not depend on the flags
                let e = complex_normal(rng, zeta2);
                if on {
                    est.set(r, c, m.get(r, c) + e);
                }
            }
        }
        est
    };
    let g1_est = perturb(&g1, params.csi_error_bs_ris && zeta2 > 0.0, estimation);
    let g_ru_est = perturb(&g_ru, params.csi_error_ris_user && zeta2 > 0.0, estimation);

    Ok(ChannelState {
        g1_true: g1,
        g1_est,
        g_ru_true: g_ru,
        g_ru_est,
        csi_error_std: params.csi_error_std,
        hi_level: params.hi_level,
        noise_power: params.noise_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;

    fn table_params() -> PathLossParams {
        PathLossParams::default()
    }

    fn channel_params(zeta: f64) -> ChannelParams {
        ChannelParams {
            pathloss: table_params(),
            wavelength: 0.1,
            csi_error_std: zeta,
            csi_error_bs_ris: true,
            csi_error_ris_user: true,
            hi_level: 0.0,
            noise_power: 1e-13,
        }
    }

    fn layout() -> Layout {
        let grid = GridSpec {
            rows: 1,
            cols: 2,
            element_spacing: 0.05,
            uav_altitude: 20.0,
            user_height: 1.5,
        };
        Layout::new(Position3D::origin(), [10.0, 5.0], &[[12.0, 3.0]], grid).unwrap()
    }

    #[test]
    fn los_probability_examples() {
        let p = table_params();
        let direct = 1.0 / (1.0 + 9.61 * libm::exp(-0.16 * (90.0 - 9.61)));
        assert!((los_probability(90.0, &p) - direct).abs() < 1e-15);
        assert!((los_probability(90.0, &p) - 0.999975).abs() < 5e-7);
        assert!((los_probability(9.61, &p) - 1.0 / 10.61).abs() < 1e-15);
        assert!((los_probability(9.61, &p) - 0.09425).abs() < 1e-5);
        let degenerate = PathLossParams { c_x: 0.0, ..p };
        assert_eq!(los_probability(3.0, &degenerate), 1.0);
    }

    #[test]
    fn bs_ris_pathloss_limits() {
        let bs = Position3D::origin();
        let el = Position3D::new(0.0, 0.0, 10.0).unwrap();
        let p = table_params();
        let g = bs_ris_pathloss(&bs, &el, &p).unwrap();
        let plos = los_probability(90.0, &p);
        assert!((g - (plos + (1.0 - plos) * 0.01) * 1e-3).abs() < 1e-18);
        assert!((g - 1.0e-3).abs() < 1e-7);
        let pure_los = PathLossParams { c_x: 0.0, ..p };
        assert!((bs_ris_pathloss(&bs, &el, &pure_los).unwrap() - 1e-3).abs() < 1e-18);
        // c_y = 0 and huge c_x push the LoS probability to ~0
        let pure_nlos = PathLossParams {
            c_x: 1e12,
            c_y: 0.0,
            ..p
        };
        let g = bs_ris_pathloss(&bs, &el, &pure_nlos).unwrap();
        assert!((g - 0.01 * 1e-3).abs() < 1e-12);
        assert_eq!(bs_ris_pathloss(&bs, &bs, &p), Err(Error::CoincidentPoints));
    }

    #[test]
    fn ris_user_pathloss_examples() {
        let p = table_params();
        let o = Position3D::origin();
        let one = Position3D::new(1.0, 0.0, 0.0).unwrap();
        let ten = Position3D::new(0.0, 10.0, 0.0).unwrap();
        assert!((ris_user_pathloss(&o, &one, &p).unwrap() - 1e-3).abs() < 1e-15);
        assert!((ris_user_pathloss(&o, &ten, &p).unwrap() - 3.16227766e-6).abs() < 1e-13);
        let flat = PathLossParams { nu: 0.0, ..p };
        assert_eq!(
            ris_user_pathloss(&o, &one, &flat).unwrap(),
            ris_user_pathloss(&o, &ten, &flat).unwrap()
        );
        assert_eq!(ris_user_pathloss(&o, &o, &p), Err(Error::CoincidentPoints));
    }

    #[test]
    fn zero_zeta_gives_exact_estimates() {
        let mut f = stream(3, Stream::Fading);
        let mut e = stream(3, Stream::CsiError);
        let ch = sample_channels(&layout(), &channel_params(0.0), 4, &mut f, &mut e).unwrap();
        assert_eq!(ch.g1_est, ch.g1_true);
        assert_eq!(ch.g_ru_est, ch.g_ru_true);
        assert_eq!((ch.g1_true.rows(), ch.g1_true.cols()), (4, 2));
        assert_eq!((ch.g_ru_true.rows(), ch.g_ru_true.cols()), (1, 2));
    }

    #[test]
    fn infinite_rician_factor_is_deterministic_magnitude() {
        let mut params = channel_params(0.0);
        params.pathloss.k_rician = f64::INFINITY;
        let lay = layout();
        let mut f = stream(5, Stream::Fading);
        let mut e = stream(5, Stream::CsiError);
        let ch = sample_channels(&lay, &params, 1, &mut f, &mut e).unwrap();
        for l in 0..2 {
            let pl =
                ris_user_pathloss(&lay.ris_elements[l], &lay.users[0], &params.pathloss).unwrap();
            assert!((ch.g_ru_true.get(0, l).norm() - libm::sqrt(pl)).abs() < 1e-15);
        }
    }

    #[test]
    fn true_channels_unaffected_by_zeta() {
        let a = sample_channels(
            &layout(),
            &channel_params(0.0),
            2,
            &mut stream(8, Stream::Fading),
            &mut stream(8, Stream::CsiError),
        )
        .unwrap();
        let b = sample_channels(
            &layout(),
            &channel_params(0.01),
            2,
            &mut stream(8, Stream::Fading),
            &mut stream(8, Stream::CsiError),
        )
        .unwrap();
        assert_eq!(a.g1_true, b.g1_true);
        assert_eq!(a.g_ru_true, b.g_ru_true);
        assert_ne!(a.g1_est, b.g1_est);
    }

    #[test]
    fn sampling_is_reproducible() {
        let draw = || {
            sample_channels(
                &layout(),
                &channel_params(0.01),
                2,
                &mut stream(1, Stream::Fading),
                &mut stream(1, Stream::CsiError),
            )
            .unwrap()
        };
        assert_eq!(draw(), draw());
    }

    proptest! {
        #[test]
        fn los_probability_monotone(a in 0.01f64..90.0, b in 0.01f64..90.0) {
            let p = table_params();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (plo, phi) = (los_probability(lo, &p), los_probability(hi, &p));
            prop_assert!(plo <= phi);
            prop_assert!(plo > 0.0 && phi < 1.0 + 1e-15);
        }
    }
}
