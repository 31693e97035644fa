//! Physical model: wind process, boat polar, tacks, and the reduced
//! `(r, theta)` dynamics relative to a circular target at the origin.

use std::f64::consts::{PI, TAU};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift and diffusion of the absolute upwind angle `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindParams {
    /// Drift of the upwind angle, radians per unit time.
    pub drift: f64,
    /// Diffusion coefficient, radians per square-root time.
    pub sigma: f64,
}

impl WindParams {
    pub fn new(drift: f64, sigma: f64) -> Result<Self> {
        let wind = WindParams { drift, sigma };
        wind.validate()?;
        Ok(wind)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::Config(format!(
                "wind drift must be finite, got {}",
                self.drift
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!(
                "wind diffusion must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Normalized speed at every 5 degrees from 0 to 180 for the bundled polar.
const DEFAULT_POLAR: [f64; 37] = [
    0.0, 0.02, 0.05, 0.09, 0.15, 0.25, 0.40, 0.60, 0.76, 0.85, 0.90, 0.93, 0.955, 0.97, 0.98,
    0.988, 0.993, 0.996, 0.998, 0.999, 0.9995, 1.0, 0.995, 0.985, 0.97, 0.955, 0.935, 0.91, 0.885,
    0.86, 0.835, 0.81, 0.79, 0.77, 0.755, 0.74, 0.73,
];

/// Boat speed as a function of the steering angle measured from upwind.
///
/// The table stores normalized speeds; the curve between samples is the
/// Fritsch-Carlson monotone cubic, so it never leaves the range of the data
/// and `f(u) <= f_max` holds everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolarTable", into = "PolarTable")]
pub struct PolarCurve {
    angles: Vec<f64>,
    speeds: Vec<f64>,
    slopes: Vec<f64>,
    f_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolarTable {
    /// `(angle in radians, normalized speed)` pairs.
    samples: Vec<(f64, f64)>,
    f_max: f64,
}

impl TryFrom<PolarTable> for PolarCurve {
    type Error = Error;

    fn try_from(table: PolarTable) -> Result<Self> {
        PolarCurve::from_samples(&table.samples, table.f_max)
    }
}

impl From<PolarCurve> for PolarTable {
    fn from(polar: PolarCurve) -> Self {
        PolarTable {
            samples: polar.samples().collect(),
            f_max: polar.f_max,
        }
    }
}

impl PolarCurve {
    /// Builds a polar from `(angle_rad, normalized_speed)` samples.
    pub fn from_samples(samples: &[(f64, f64)], f_max: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Data("a polar needs at least two samples".into()));
        }
        if !(f_max > 0.0) || !f_max.is_finite() {
            return Err(Error::Config(format!(
                "f_max must be positive, got {f_max}"
            )));
        }
        let (first_angle, first_speed) = samples[0];
        if first_angle != 0.0 || first_speed != 0.0 {
            return Err(Error::Data(format!(
                "polar must start at (0, 0), got ({first_angle}, {first_speed})"
            )));
        }
        let mut angles: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let speeds: Vec<f64> = samples.iter().map(|s| s.1).collect();
        if angles.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Data(
                "polar angles must be strictly increasing".into(),
            ));
        }
        let last = angles.len() - 1;
        if (angles[last] - PI).abs() > 1e-9 {
            return Err(Error::Data(format!(
                "polar must cover [0, pi]; last angle is {}",
                angles[last]
            )));
        }
        angles[last] = PI;
        if speeds.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
            return Err(Error::Data(
                "normalized polar speeds must lie in [0, 1]".into(),
            ));
        }
        let peak = speeds.iter().copied().fold(0.0, f64::max);
        if (peak - 1.0).abs() > 1e-12 {
            return Err(Error::Data(format!(
                "normalized polar must peak at exactly 1, peak is {peak}"
            )));
        }
        let slopes = monotone_slopes(&angles, &speeds);
        Ok(PolarCurve {
            angles,
            speeds,
            slopes,
            f_max,
        })
    }

    /// The bundled racing-style polar: zero dead upwind, a no-go zone up to
    /// about 40 degrees, a peak at 105 degrees and a mild decline downwind.
    pub fn racing_default(f_max: f64) -> Result<Self> {
        let samples: Vec<(f64, f64)> = DEFAULT_POLAR
            .iter()
            .enumerate()
            .map(|(n, &s)| ((5.0 * n as f64).to_radians(), s))
            .collect();
        Self::from_samples(&samples, f_max)
    }

    /// Reads an `angle_deg,speed` CSV table.
    pub fn from_csv_reader<R: BufRead>(reader: R, f_max: f64) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::Data("empty polar file".into())),
        };
        if header.trim() != "angle_deg,speed" {
            return Err(Error::Data(format!(
                "polar header must be `angle_deg,speed`, found `{}`",
                header.trim()
            )));
        }
        let mut samples = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Data(format!("polar line {}: `{line}`", lineno + 2)))
            };
            let deg = parse(fields.next())?;
            let speed = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Data(format!(
                    "polar line {}: too many columns",
                    lineno + 2
                )));
            }
            samples.push((deg.to_radians(), speed));
        }
        Self::from_samples(&samples, f_max)
    }

    pub fn from_csv_path(path: &Path, f_max: f64) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file), f_max)
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    /// `(angle_rad, normalized_speed)` pairs of the underlying table.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.angles.iter().copied().zip(self.speeds.iter().copied())
    }

    /// Speed `f(u)` for a steering angle in `[0, pi]`.
    pub fn speed(&self, u: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&u) {
            return Err(Error::Domain {
                what: "steering angle",
                value: u,
                domain: "[0, pi]",
            });
        }
        Ok(self.speed_unchecked(u))
    }

    /// Same as [`speed`](Self::speed) with `u` clamped into `[0, pi]`.
    pub(crate) fn speed_unchecked(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, PI);
        let k = self
            .angles
            .partition_point(|&a| a <= u)
            .clamp(1, self.angles.len() - 1)
            - 1;
        let h = self.angles[k + 1] - self.angles[k];
        let t = (u - self.angles[k]) / h;
        let (y0, y1) = (self.speeds[k], self.speeds[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        self.f_max * v.clamp(0.0, 1.0)
    }
}

/// Fritsch-Carlson derivative estimates (the PCHIP rule).
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Everything the dynamics need besides the discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub wind: WindParams,
    pub polar: PolarCurve,
    /// Duration `C` of a tack switch.
    pub switch_time: f64,
    /// Radius of the target disk centred at the origin.
    pub target_radius: f64,
    /// Outer radius of the computational domain.
    pub outer_radius: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.wind.validate()?;
        if !(self.switch_time > 0.0) || !self.switch_time.is_finite() {
            return Err(Error::Config(format!(
                "switch time C must be positive, got {}",
                self.switch_time
            )));
        }
        if !(self.target_radius > 0.0 && self.target_radius < self.outer_radius)
            || !self.outer_radius.is_finite()
        {
            return Err(Error::Config(format!(
                "need 0 < target radius ({}) < outer radius ({})",
                self.target_radius, self.outer_radius
            )));
        }
        Ok(())
    }

    pub fn f_max(&self) -> f64 {
        self.polar.f_max()
    }
}

/// Which side of the boat the wind comes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Tack {
    /// `q = 1`: steering angles measured counterclockwise from upwind.
    Starboard,
    /// `q = 2`: steering angles measured clockwise from upwind.
    Port,
}

impl Tack {
    pub const BOTH: [Tack; 2] = [Tack::Starboard, Tack::Port];

    pub fn from_q(q: u8) -> Result<Self> {
        match q {
            1 => Ok(Tack::Starboard),
            2 => Ok(Tack::Port),
            _ => Err(Error::Data(format!("tack must be 1 or 2, got {q}"))),
        }
    }

    pub fn q(self) -> u8 {
        match self {
            Tack::Starboard => 1,
            Tack::Port => 2,
        }
    }

    /// Zero-based storage index.
    pub fn index(self) -> usize {
        self.q() as usize - 1
    }

    pub fn opposite(self) -> Tack {
        match self {
            Tack::Starboard => Tack::Port,
            Tack::Port => Tack::Starboard,
        }
    }

    /// `(-1)^q`, the orientation of the steering angle.
    pub fn sign(self) -> f64 {
        match self {
            Tack::Starboard => -1.0,
            Tack::Port => 1.0,
        }
    }
}

impl TryFrom<u8> for Tack {
    type Error = Error;

    fn try_from(q: u8) -> Result<Self> {
        Tack::from_q(q)
    }
}

impl From<Tack> for u8 {
    fn from(t: Tack) -> u8 {
        t.q()
    }
}

/// Steering angle or the tack-switch manoeuvre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Steer(f64),
    Switch,
}

impl Action {
    /// Encoding used in policy grids: `Switch` is `-1.0`, `Steer(u)` is `u`.
    pub const SWITCH_SENTINEL: f64 = -1.0;

    pub fn encode(self) -> f64 {
        match self {
            Action::Steer(u) => u,
            Action::Switch => Self::SWITCH_SENTINEL,
        }
    }

    pub fn decode(x: f64) -> Action {
        if x < 0.0 {
            Action::Switch
        } else {
            Action::Steer(x)
        }
    }
}

/// Continuous state of a simulated boat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub r: f64,
    /// Upwind direction relative to the boat-to-target line, in `[0, 2pi)`.
    pub theta: f64,
    pub tack: Tack,
    /// Remaining time budget.
    pub budget: f64,
    /// Absolute upwind direction, counterclockwise from the y axis.
    pub phi: f64,
}

impl SimState {
    pub fn new(r: f64, theta: f64, tack: Tack, budget: f64, phi: f64) -> Self {
        SimState {
            r,
            theta: wrap_angle(theta),
            tack,
            budget,
            phi,
        }
    }
}

/// Maps an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Boat speed `f(u)`.
pub fn polar_speed(polar: &PolarCurve, u: f64) -> Result<f64> {
    polar.speed(u)
}

/// Deterministic drift `(r_d, theta_d)` of the reduced dynamics.
pub fn reduced_drift(
    params: &ModelParams,
    r: f64,
    theta: f64,
    tack: Tack,
    u: f64,
) -> Result<(f64, f64)> {
    if r == 0.0 {
        return Err(Error::Singular);
    }
    if !(r > 0.0) {
        return Err(Error::Domain {
            what: "r",
            value: r,
            domain: "(0, inf)",
        });
    }
    let speed = params.polar.speed(u)?;
    Ok(drift_with_speed(
        speed,
        r,
        theta,
        tack.sign() * u,
        params.wind.drift,
    ))
}

/// `heading` is the signed angle `(-1)^q u`.
#[inline]
pub(crate) fn drift_with_speed(speed: f64, r: f64, theta: f64, heading: f64, a: f64) -> (f64, f64) {
    let (sin, cos) = (theta - heading).sin_cos();
    (-speed * cos, speed / r * sin + a)
}

/// Absolute position of the boat with the target at the origin.
pub fn to_xy(state: &SimState) -> (f64, f64) {
    let (sin, cos) = (state.theta - state.phi).sin_cos();
    (-state.r * sin, -state.r * cos)
}

/// Inverse of [`to_xy`]: `(r, theta)` from a position and the upwind angle.
pub fn from_xy(x: f64, y: f64, phi: f64) -> (f64, f64) {
    (x.hypot(y), wrap_angle(phi + (-x).atan2(-y)))
}
