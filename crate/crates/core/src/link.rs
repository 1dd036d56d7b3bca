//! Simulated sensor-to-coordinator link.
//!
//! sensor volts -> unity buffer -> divider -> N-bit ADC -> 7-byte frame,
//! and back again on the receiving side.
//!
//! Frame layout (big-endian):
//!
//! | byte | content              |
//! |------|----------------------|
//! | 0    | magic `0xA5`         |
//! | 1    | sensor id, 0..=254   |
//! | 2..4 | sequence number      |
//! | 4..6 | ADC code             |
//! | 6    | XOR of bytes 0..6    |

use std::fmt;

use thiserror::Error;

pub const FRAME_MAGIC: u8 = 0xA5;
pub const FRAME_LEN: usize = 7;
pub const MAX_SENSOR_ID: u8 = 254;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("VoltageRange: {voltage} V is outside [0, {max}] V")]
    VoltageRange { voltage: f64, max: f64 },
    #[error("FrameError: {0}")]
    Frame(String),
    #[error("ChecksumError: expected {expected:02X}, found {found:02X}")]
    Checksum { expected: u8, found: u8 },
    #[error("RangeError: ADC code {code} exceeds {max}")]
    Range { code: u16, max: u16 },
    #[error("BadMap: dry and wet voltages are both {0} V")]
    BadMap(f64),
    #[error("InvalidAdc: {0}")]
    InvalidAdc(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcModel {
    pub v_ref: f64,
    pub bits: u32,
    pub v_sensor_max: f64,
    pub divider_ratio: f64,
}

impl Default for AdcModel {
    fn default() -> Self {
        Self { v_ref: 3.3, bits: 10, v_sensor_max: 5.0, divider_ratio: 0.66 }
    }
}

impl AdcModel {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(1..=16).contains(&self.bits) {
            return Err(LinkError::InvalidAdc(format!("bits must be in 1..=16, got {}", self.bits)));
        }
        if !(self.v_ref > 0.0 && self.v_sensor_max > 0.0 && self.divider_ratio > 0.0) {
            return Err(LinkError::InvalidAdc("voltages and divider ratio must be positive".into()));
        }
        // 0.66 * 5.0 lands one ulp above 3.3
        if self.divider_ratio * self.v_sensor_max > self.v_ref * (1.0 + 1e-9) {
            return Err(LinkError::InvalidAdc(format!(
                "divided full scale {:.4} V exceeds the {} V reference",
                self.divider_ratio * self.v_sensor_max,
                self.v_ref
            )));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u16 {
        ((1u32 << self.bits) - 1) as u16
    }

    /// Sensor-side voltage represented by one code step.
    pub fn lsb_volts(&self) -> f64 {
        self.v_ref / self.divider_ratio / self.max_code() as f64
    }

    pub fn quantize(&self, voltage: f64) -> Result<u16, LinkError> {
        if !(0.0..=self.v_sensor_max).contains(&voltage) {
            return Err(LinkError::VoltageRange { voltage, max: self.v_sensor_max });
        }
        let divided = voltage * self.divider_ratio;
        let max = self.max_code();
        // the epsilon keeps exact code boundaries from flooring one step low
        let code = (divided / self.v_ref * max as f64 + 1e-9).floor();
        Ok(code.min(max as f64) as u16)
    }

    pub fn reconstruct(&self, code: u16) -> f64 {
        code as f64 / self.max_code() as f64 * self.v_ref / self.divider_ratio
    }
}

/// Linear voltage-to-moisture stand-in: `v_dry` maps to 0 %, `v_wet` to 100 %.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistureMap {
    pub v_dry: f64,
    pub v_wet: f64,
}

impl Default for MoistureMap {
    fn default() -> Self {
        Self { v_dry: 5.0, v_wet: 0.0 }
    }
}

impl MoistureMap {
    pub fn validate(&self) -> Result<(), LinkError> {
        if self.v_dry == self.v_wet {
            return Err(LinkError::BadMap(self.v_dry));
        }
        Ok(())
    }

    /// |d moisture / d volt|.
    pub fn slope(&self) -> f64 {
        100.0 / (self.v_dry - self.v_wet).abs()
    }

    /// Inverse of [`voltage_to_moisture`] on the unclamped line.
    pub fn moisture_to_voltage(&self, moisture: f64) -> f64 {
        self.v_dry + (self.v_wet - self.v_dry) * moisture / 100.0
    }
}

pub fn voltage_to_moisture(voltage: f64, map: &MoistureMap) -> Result<f64, LinkError> {
    map.validate()?;
    Ok((100.0 * (voltage - map.v_dry) / (map.v_wet - map.v_dry)).clamp(0.0, 100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorFrame([u8; FRAME_LEN]);

impl SensorFrame {
    pub fn bytes(&self) -> &[u8; FRAME_LEN] {
        &self.0
    }

    pub fn sensor_id(&self) -> u8 {
        self.0[1]
    }

    pub fn sequence(&self) -> u16 {
        u16::from_be_bytes([self.0[2], self.0[3]])
    }

    pub fn code(&self) -> u16 {
        u16::from_be_bytes([self.0[4], self.0[5]])
    }

    pub fn to_hex(&self) -> String {
        hex_dump(&self.0)
    }
}

impl fmt::Display for SensorFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

pub fn hex_dump(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}

/// Parses the uppercase or lowercase space-separated dump.
pub fn parse_hex(s: &str) -> Result<Vec<u8>, LinkError> {
    s.split_whitespace()
        .map(|t| u8::from_str_radix(t, 16).map_err(|_| LinkError::Frame(format!("bad hex byte {t:?}"))))
        .collect()
}

pub fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    pub sensor_id: u8,
    pub sequence: u16,
    pub code: u16,
    pub voltage: f64,
    pub moisture: f64,
}

pub fn encode_frame(adc: &AdcModel, sensor_id: u8, sequence: u16, voltage: f64) -> Result<SensorFrame, LinkError> {
    adc.validate()?;
    if sensor_id > MAX_SENSOR_ID {
        return Err(LinkError::Frame(format!("sensor id {sensor_id} is reserved")));
    }
    let code = adc.quantize(voltage)?;
    let [s_hi, s_lo] = sequence.to_be_bytes();
    let [c_hi, c_lo] = code.to_be_bytes();
    let mut b = [FRAME_MAGIC, sensor_id, s_hi, s_lo, c_hi, c_lo, 0];
    b[6] = checksum(&b[..6]);
    Ok(SensorFrame(b))
}

/// Validates a received frame: length and magic, then checksum, then code
/// range and id.
pub fn decode_frame(adc: &AdcModel, map: &MoistureMap, bytes: &[u8]) -> Result<SensorReading, LinkError> {
    adc.validate()?;
    if bytes.len() != FRAME_LEN {
        return Err(LinkError::Frame(format!("expected {FRAME_LEN} bytes, got {}", bytes.len())));
    }
    if bytes[0] != FRAME_MAGIC {
        return Err(LinkError::Frame(format!("bad magic {:02X}", bytes[0])));
    }
    let expected = checksum(&bytes[..6]);
    if expected != bytes[6] {
        return Err(LinkError::Checksum { expected, found: bytes[6] });
    }
    let frame = SensorFrame(bytes.try_into().expect("length checked"));
    if frame.code() > adc.max_code() {
        return Err(LinkError::Range { code: frame.code(), max: adc.max_code() });
    }
    if frame.sensor_id() > MAX_SENSOR_ID {
        return Err(LinkError::Frame(format!("sensor id {} is reserved", frame.sensor_id())));
    }
    let voltage = adc.reconstruct(frame.code());
    Ok(SensorReading {
        sensor_id: frame.sensor_id(),
        sequence: frame.sequence(),
        code: frame.code(),
        voltage,
        moisture: voltage_to_moisture(voltage, map)?,
    })
}
