//! Average-grayscale -> volumetric moisture calibration.
//!
//! Models are low-degree polynomials fitted by least squares over
//! (gray, moisture) samples. The coefficients published with the reference
//! soil calibration ship as [`published_model`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Gray levels a prediction may stray outside the model domain before it
/// is rejected as an extrapolation.
pub const DOMAIN_GRACE: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("RankDeficient: degree {degree} needs at least {needed} distinct gray values, got {distinct}")]
    RankDeficient { degree: usize, needed: usize, distinct: usize },
    #[error("OutOfDomain: gray {gray:.3} is outside [{lo:.3}, {hi:.3}] plus grace")]
    OutOfDomain { gray: f64, lo: f64, hi: f64 },
    #[error("NoRootInDomain: moisture {moisture:.3} is not reached on [{lo:.3}, {hi:.3}]")]
    NoRootInDomain { moisture: f64, lo: f64, hi: f64 },
    #[error("NotMonotonic: model has a turning point inside its domain")]
    NotMonotonic,
    #[error("InvalidModel: {0}")]
    InvalidModel(String),
    #[error("ParseError: line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    /// Average grayscale of the soil image.
    pub gray: f64,
    /// Volumetric moisture, percent.
    pub moisture: f64,
}

impl CalibrationSample {
    pub const fn new(gray: f64, moisture: f64) -> Self {
        Self { gray, moisture }
    }
}

const TABLE: [CalibrationSample; 9] = [
    CalibrationSample::new(98.0, 51.0),
    CalibrationSample::new(105.78, 20.67),
    CalibrationSample::new(104.8466, 23.23),
    CalibrationSample::new(104.4055, 25.25),
    CalibrationSample::new(103.6988, 30.43),
    CalibrationSample::new(102.4501, 31.38),
    CalibrationSample::new(102.13877, 33.78),
    CalibrationSample::new(100.2818, 41.6),
    CalibrationSample::new(109.0, 10.0),
];

/// The nine reference soil measurements, in table order.
pub fn builtin_samples() -> Vec<CalibrationSample> {
    TABLE.to_vec()
}

/// `moisture = c0 + c1*gray [+ c2*gray^2]`, valid on `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    coeffs: Vec<f64>,
    domain: (f64, f64),
}

/// Quadratic fitted to the reference soil, gray in `[98, 109]`.
pub fn published_model() -> PolynomialModel {
    PolynomialModel {
        coeffs: vec![996.78, -14.984, 0.0544],
        domain: (98.0, 109.0),
    }
}

/// Outcome of [`predict_moisture`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Percent, clamped to `[0, 100]`.
    pub moisture: f64,
    pub clamped: bool,
}

impl PolynomialModel {
    /// `coeffs` in ascending order of power; degree 1 or 2.
    pub fn new(coeffs: Vec<f64>, domain: (f64, f64)) -> Result<Self, CalibrationError> {
        if !(2..=3).contains(&coeffs.len()) {
            return Err(CalibrationError::InvalidModel(format!(
                "degree must be 1 or 2, got {} coefficients",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CalibrationError::InvalidModel("non-finite coefficient".into()));
        }
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 <= domain.1) {
            return Err(CalibrationError::InvalidModel(format!("bad domain [{}, {}]", domain.0, domain.1)));
        }
        Ok(Self { coeffs, domain })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Raw polynomial value, no domain check or clamping.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self.coeffs[..] {
            [_, c1] => c1,
            [_, c1, c2] => c1 + 2.0 * c2 * x,
            _ => unreachable!("degree is 1 or 2"),
        }
    }

    /// Abscissa of the turning point of a quadratic.
    pub fn vertex(&self) -> Option<f64> {
        match self.coeffs[..] {
            [_, c1, c2] if c2 != 0.0 => Some(-c1 / (2.0 * c2)),
            _ => None,
        }
    }

    /// Strictly monotonic on the domain (vertex outside `[lo, hi]`).
    pub fn is_monotonic(&self) -> bool {
        let (lo, hi) = self.domain;
        match self.vertex() {
            Some(v) => !(lo..=hi).contains(&v),
            None => self.coeffs[1] != 0.0,
        }
    }

    /// Moisture values reached over the domain, `(min, max)`.
    pub fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.domain;
        let mut ends = [self.eval(lo), self.eval(hi)];
        if let Some(v) = self.vertex().filter(|v| (lo..=hi).contains(v)) {
            let at = self.eval(v);
            return (ends[0].min(ends[1]).min(at), ends[0].max(ends[1]).max(at));
        }
        ends.sort_by(f64::total_cmp);
        (ends[0], ends[1])
    }
}

/// Model file: `degree=<d>`, `coeffs=<c0>,<c1>[,<c2>]`, `domain=<lo>,<hi>`.
/// Coefficients are written at full precision so files round-trip exactly.
impl fmt::Display for PolynomialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs: Vec<String> = self.coeffs.iter().map(|c| format!("{c:?}")).collect();
        writeln!(f, "degree={}", self.degree())?;
        writeln!(f, "coeffs={}", coeffs.join(","))?;
        writeln!(f, "domain={:?},{:?}", self.domain.0, self.domain.1)
    }
}

fn parse_floats(line: usize, s: &str) -> Result<Vec<f64>, CalibrationError> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| CalibrationError::Parse {
                line,
                msg: format!("bad number {t:?}"),
            })
        })
        .collect()
}

impl FromStr for PolynomialModel {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut degree = None;
        let mut coeffs = None;
        let mut domain = None;
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let n = i + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| CalibrationError::Parse {
                line: n,
                msg: "expected key=value".into(),
            })?;
            match key.trim() {
                "degree" => {
                    degree = Some(value.trim().parse::<usize>().map_err(|_| CalibrationError::Parse {
                        line: n,
                        msg: format!("bad degree {value:?}"),
                    })?)
                }
                "coeffs" => coeffs = Some(parse_floats(n, value)?),
                "domain" => match parse_floats(n, value)?[..] {
                    [lo, hi] => domain = Some((lo, hi)),
                    _ => return Err(CalibrationError::Parse { line: n, msg: "domain needs two values".into() }),
                },
                other => return Err(CalibrationError::Parse { line: n, msg: format!("unknown key {other:?}") }),
            }
        }
        let missing = |k: &str| CalibrationError::Parse { line: 0, msg: format!("missing {k}") };
        let degree = degree.ok_or_else(|| missing("degree"))?;
        let coeffs = coeffs.ok_or_else(|| missing("coeffs"))?;
        let domain = domain.ok_or_else(|| missing("domain"))?;
        if coeffs.len() != degree + 1 {
            return Err(CalibrationError::InvalidModel(format!(
                "degree {degree} needs {} coefficients, got {}",
                degree + 1,
                coeffs.len()
            )));
        }
        PolynomialModel::new(coeffs, domain)
    }
}

/// Sample file: one `gray,moisture` pair per line, `#` starts a comment.
pub fn parse_samples(text: &str) -> Result<Vec<CalibrationSample>, CalibrationError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match parse_floats(i + 1, line)?[..] {
            [gray, moisture] => out.push(CalibrationSample { gray, moisture }),
            _ => {
                return Err(CalibrationError::Parse {
                    line: i + 1,
                    msg: "expected gray,moisture".into(),
                })
            }
        }
    }
    Ok(out)
}

pub fn format_samples(samples: &[CalibrationSample]) -> String {
    let mut s = String::from("# gray,moisture\n");
    for x in samples {
        s.push_str(&format!("{:?},{:?}\n", x.gray, x.moisture));
    }
    s
}

/// Least-squares polynomial of degree 1 or 2.
///
/// The abscissa is centered on its mean and scaled by its largest deviation
/// before the normal equations are formed; the solution is then expanded
/// back to plain powers of gray.
pub fn fit_polynomial(samples: &[CalibrationSample], degree: usize) -> Result<PolynomialModel, CalibrationError> {
    if !(1..=2).contains(&degree) {
        return Err(CalibrationError::InvalidModel(format!("degree must be 1 or 2, got {degree}")));
    }
    let needed = degree + 1;
    let mut grays: Vec<f64> = samples.iter().map(|s| s.gray).collect();
    grays.sort_by(f64::total_cmp);
    grays.dedup();
    if grays.len() < needed {
        return Err(CalibrationError::RankDeficient { degree, needed, distinct: grays.len() });
    }

    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.gray).sum::<f64>() / n;
    let scale = samples
        .iter()
        .map(|s| (s.gray - mean).abs())
        .fold(0.0, f64::max);

    // normal equations in t = (x - mean) / scale
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for s in samples {
        let t = (s.gray - mean) / scale;
        let powers = [1.0, t, t * t];
        for i in 0..needed {
            aty[i] += powers[i] * s.moisture;
            for j in 0..needed {
                ata[i][j] += powers[i] * powers[j];
            }
        }
    }
    let b = solve(ata, aty, needed).ok_or(CalibrationError::RankDeficient {
        degree,
        needed,
        distinct: grays.len(),
    })?;

    // p(x) = sum_k b_k ((x - m) / s)^k, expanded by the binomial theorem
    let mut coeffs = vec![0.0; needed];
    for (k, &bk) in b.iter().enumerate().take(needed) {
        let sk = scale.powi(k as i32);
        for (j, c) in coeffs.iter_mut().enumerate().take(k + 1) {
            *c += bk / sk * binomial(k, j) * (-mean).powi((k - j) as i32);
        }
    }
    PolynomialModel::new(coeffs, (grays[0], *grays.last().unwrap()))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> Option<[f64; 3]> {
    let norm = a.iter().take(n).flat_map(|r| r[..n].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= norm * 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Evaluates the model at `gray`, clamping to the physical `[0, 100]` range.
pub fn predict_moisture(model: &PolynomialModel, gray: f64) -> Result<Prediction, CalibrationError> {
    let (lo, hi) = model.domain;
    if !(gray >= lo - DOMAIN_GRACE && gray <= hi + DOMAIN_GRACE) {
        return Err(CalibrationError::OutOfDomain { gray, lo, hi });
    }
    let raw = model.eval(gray);
    let moisture = raw.clamp(0.0, 100.0);
    Ok(Prediction { moisture, clamped: moisture != raw })
}

/// Mean squared residual, unclamped.
pub fn mse(model: &PolynomialModel, samples: &[CalibrationSample]) -> f64 {
    assert!(!samples.is_empty(), "mse of an empty sample set");
    samples
        .iter()
        .map(|s| (model.eval(s.gray) - s.moisture).powi(2))
        .sum::<f64>()
        / samples.len() as f64
}

/// Domain widened by [`DOMAIN_GRACE`] on both sides; the interval on which
/// predictions are accepted and inversions are searched.
pub fn extended_domain(model: &PolynomialModel) -> (f64, f64) {
    (model.domain.0 - DOMAIN_GRACE, model.domain.1 + DOMAIN_GRACE)
}

/// Gray value that predicts `moisture`, searched on the grace-extended
/// domain. Quadratics must be monotonic there so the root is unique.
pub fn invert_calibration(model: &PolynomialModel, moisture: f64) -> Result<f64, CalibrationError> {
    let (lo, hi) = extended_domain(model);
    let none = || CalibrationError::NoRootInDomain { moisture, lo, hi };
    if !moisture.is_finite() {
        return Err(none());
    }
    // tolerate round-off at the edges
    let eps = 1e-9 * (1.0 + hi.abs());
    let inside = |x: f64| x >= lo - eps && x <= hi + eps;
    let root = match model.coeffs[..] {
        [c0, c1] => {
            if c1 == 0.0 {
                return Err(none());
            }
            (moisture - c0) / c1
        }
        [c0, c1, c2] => {
            if let Some(v) = model.vertex() {
                if (lo..=hi).contains(&v) {
                    return Err(CalibrationError::NotMonotonic);
                }
            }
            if c2 == 0.0 {
                (moisture - c0) / c1
            } else {
                let c = c0 - moisture;
                let disc = c1 * c1 - 4.0 * c2 * c;
                if disc < 0.0 {
                    return Err(none());
                }
                // numerically stable pair of roots
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                let r1 = q / c2;
                let r2 = if q != 0.0 { c / q } else { r1 };
                [r1, r2].into_iter().find(|&r| inside(r)).ok_or_else(none)?
            }
        }
        _ => unreachable!("degree is 1 or 2"),
    };
    if inside(root) {
        Ok(root.clamp(lo, hi))
    } else {
        Err(none())
    }
}

/// Moisture interval [`invert_calibration`] accepts, `(min, max)`.
pub fn invertible_range(model: &PolynomialModel) -> (f64, f64) {
    let (lo, hi) = extended_domain(model);
    let (a, b) = (model.eval(lo), model.eval(hi));
    (a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_rows() {
        let s = builtin_samples();
        assert_eq!(s.len(), 9);
        assert_eq!(s[0], CalibrationSample::new(98.0, 51.0));
        assert_eq!(s[8], CalibrationSample::new(109.0, 10.0));
        assert_eq!(s[4], CalibrationSample::new(103.6988, 30.43));
    }

    #[test]
    fn published_predictions() {
        let m = published_model();
        let at = |x| predict_moisture(&m, x).unwrap().moisture;
        assert!((at(98.0) - 50.8056).abs() < 1e-9);
        assert!((at(109.0) - 9.8504).abs() < 1e-9);
        // 0.0544 * 105.78^2 - 14.984 * 105.78 + 996.78
        assert!((at(105.78) - 20.47629696).abs() < 1e-9);
        assert_eq!(format!("{:.3}", at(105.78)), "20.476");
    }

    #[test]
    fn published_is_decreasing_on_domain() {
        let m = published_model();
        assert!(m.is_monotonic());
        assert!((m.vertex().unwrap() - 137.720588).abs() < 1e-5);
        let mut x = 98.0;
        while x <= 109.0 {
            assert!(m.derivative(x) < 0.0);
            x += 0.01;
        }
    }

    #[test]
    fn exact_fits() {
        let line = fit_polynomial(&[CalibrationSample::new(0.0, 0.0), CalibrationSample::new(1.0, 1.0)], 1).unwrap();
        assert!(line.coeffs()[0].abs() < 1e-12 && (line.coeffs()[1] - 1.0).abs() < 1e-12);
        let pts = [
            CalibrationSample::new(1.0, 3.0),
            CalibrationSample::new(2.0, 1.0),
            CalibrationSample::new(4.0, 9.0),
        ];
        let quad = fit_polynomial(&pts, 2).unwrap();
        assert!(mse(&quad, &pts) < 1e-20);
        assert_eq!(quad.domain(), (1.0, 4.0));
    }

    #[test]
    fn rank_deficient() {
        let pts = [CalibrationSample::new(5.0, 1.0), CalibrationSample::new(5.0, 2.0), CalibrationSample::new(6.0, 2.0)];
        assert!(matches!(fit_polynomial(&pts, 2), Err(CalibrationError::RankDeficient { distinct: 2, .. })));
        assert!(fit_polynomial(&pts, 1).is_ok());
        assert!(matches!(fit_polynomial(&pts[..1], 1), Err(CalibrationError::RankDeficient { .. })));
    }

    #[test]
    fn out_of_domain_and_clamping() {
        let m = published_model();
        assert!(predict_moisture(&m, 93.0).is_ok());
        assert!(matches!(predict_moisture(&m, 92.9), Err(CalibrationError::OutOfDomain { .. })));
        assert!(matches!(predict_moisture(&m, f64::NAN), Err(CalibrationError::OutOfDomain { .. })));
        let steep = PolynomialModel::new(vec![-50.0, 1.0], (0.0, 200.0)).unwrap();
        let p = predict_moisture(&steep, 10.0).unwrap();
        assert_eq!((p.moisture, p.clamped), (0.0, true));
        let p = predict_moisture(&steep, 180.0).unwrap();
        assert_eq!((p.moisture, p.clamped), (100.0, true));
    }

    #[test]
    fn inversion() {
        let m = published_model();
        let x = invert_calibration(&m, 51.0).unwrap();
        assert!((x - 97.955042).abs() < 1e-5, "{x}");
        let (lo, hi) = invertible_range(&m);
        assert!(lo < 10.0 && hi > 51.0);
        assert!(matches!(invert_calibration(&m, 200.0), Err(CalibrationError::NoRootInDomain { .. })));
        let linear = PolynomialModel::new(vec![10.0, 2.0], (0.0, 10.0)).unwrap();
        assert_eq!(invert_calibration(&linear, 20.0).unwrap(), 5.0);
        let hump = PolynomialModel::new(vec![0.0, 2.0, -1.0], (0.0, 2.0)).unwrap();
        assert_eq!(invert_calibration(&hump, 0.5), Err(CalibrationError::NotMonotonic));
    }

    #[test]
    fn model_file_round_trip() {
        let m = fit_polynomial(&builtin_samples(), 2).unwrap();
        let text = m.to_string();
        assert!(text.starts_with("degree=2\ncoeffs="));
        assert_eq!(text.parse::<PolynomialModel>().unwrap(), m);
        assert!("degree=2\ncoeffs=1,2\ndomain=0,1".parse::<PolynomialModel>().is_err());
        assert!("degree=1\ncoeffs=1,2".parse::<PolynomialModel>().is_err());
    }

    #[test]
    fn sample_file_parsing() {
        let s = parse_samples("# header\n98,51\n  109 , 10 # dry\n\n").unwrap();
        assert_eq!(s, vec![CalibrationSample::new(98.0, 51.0), CalibrationSample::new(109.0, 10.0)]);
        assert!(parse_samples("1,2,3").is_err());
        assert_eq!(parse_samples(&format_samples(&builtin_samples())).unwrap(), builtin_samples());
    }

    fn sample_set() -> impl Strategy<Value = Vec<CalibrationSample>> {
        proptest::collection::vec((90.0f64..120.0, 0.0f64..100.0), 3..15).prop_map(|v| {
            v.into_iter().map(|(g, m)| CalibrationSample::new(g, m)).collect()
        })
    }

    proptest! {
        #[test]
        fn residual_is_orthogonal_to_design(samples in sample_set(), degree in 1usize..=2) {
            let mut grays: Vec<f64> = samples.iter().map(|s| s.gray).collect();
            grays.sort_by(f64::total_cmp);
            grays.dedup_by(|a, b| (*a - *b).abs() < 0.5);
            prop_assume!(grays.len() > degree);
            let m = fit_polynomial(&samples, degree).unwrap();
            let mean = samples.iter().map(|s| s.gray).sum::<f64>() / samples.len() as f64;
            for k in 0..=degree {
                let (mut dot, mut scale) = (0.0, 0.0);
                for s in &samples {
                    let col = (s.gray - mean).powi(k as i32);
                    dot += (m.eval(s.gray) - s.moisture) * col;
                    scale += (s.moisture * col).abs();
                }
                prop_assert!(dot.abs() <= 1e-8 * scale.max(1.0), "k={} dot={} scale={}", k, dot, scale);
            }
        }

        #[test]
        fn quadratic_never_worse_than_line(samples in sample_set()) {
            let mut grays: Vec<f64> = samples.iter().map(|s| s.gray).collect();
            grays.sort_by(f64::total_cmp);
            grays.dedup_by(|a, b| (*a - *b).abs() < 0.5);
            prop_assume!(grays.len() >= 3);
            let q = fit_polynomial(&samples, 2).unwrap();
            let l = fit_polynomial(&samples, 1).unwrap();
            prop_assert!(mse(&q, &samples) <= mse(&l, &samples) * (1.0 + 1e-9) + 1e-9);
        }

        #[test]
        fn invert_round_trip(x in 98.0f64..=109.0) {
            let m = published_model();
            let y = m.eval(x);
            let back = invert_calibration(&m, y).unwrap();
            prop_assert!((back - x).abs() < 1e-6);
        }
    }
}
