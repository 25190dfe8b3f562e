use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A directed link with a triangular fundamental diagram.
///
/// Units: km, km/h, veh/km, veh/h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
    pub free_flow_speed: f64,
    pub backward_wave_speed: f64,
    pub jam_density: f64,
    pub flow_capacity: f64,
}

impl Link {
    /// Peak flow of the triangular diagram spanned by the two wave speeds and the jam density.
    pub fn triangular_capacity(&self) -> f64 {
        self.jam_density * self.free_flow_speed * self.backward_wave_speed
            / (self.free_flow_speed + self.backward_wave_speed)
    }

    pub fn free_flow_time(&self) -> f64 {
        self.length / self.free_flow_speed
    }

    pub(crate) fn validate(&self, field: &str) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("free_flow_speed", self.free_flow_speed),
            ("backward_wave_speed", self.backward_wave_speed),
            ("jam_density", self.jam_density),
            ("flow_capacity", self.flow_capacity),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::scenario(
                    format!("{field}.{name}"),
                    format!("must be finite and strictly positive, got {value}"),
                ));
            }
        }
        if self.backward_wave_speed > self.free_flow_speed {
            return Err(Error::scenario(
                format!("{field}.backward_wave_speed"),
                format!(
                    "backward wave speed {} exceeds free-flow speed {}",
                    self.backward_wave_speed, self.free_flow_speed
                ),
            ));
        }
        let peak = self.triangular_capacity();
        if self.flow_capacity > peak * (1.0 + 1e-9) {
            return Err(Error::scenario(
                format!("{field}.flow_capacity"),
                format!(
                    "capacity {} exceeds the triangular diagram peak {peak}",
                    self.flow_capacity
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdPair {
    pub id: String,
    pub origin: String,
    pub destination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub id: String,
    pub od: String,
    pub links: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link() -> Link {
        Link {
            id: "a".into(),
            from: "1".into(),
            to: "2".into(),
            length: 1.0,
            free_flow_speed: 60.0,
            backward_wave_speed: 20.0,
            jam_density: 160.0,
            flow_capacity: 2400.0,
        }
    }

    #[test]
    fn triangular_peak() {
        assert!((link().triangular_capacity() - 2400.0).abs() < 1e-9);
        assert!(link().validate("links[0]").is_ok());
    }

    #[test]
    fn rejects_inconsistent_diagram() {
        let mut l = link();
        l.flow_capacity = 2500.0;
        let err = l.validate("links[0]").unwrap_err().to_string();
        assert!(err.contains("links[0].flow_capacity"), "{err}");

        let mut l = link();
        l.backward_wave_speed = 70.0;
        assert!(l.validate("x").is_err());

        let mut l = link();
        l.flow_capacity = f64::INFINITY;
        assert!(l.validate("x").is_err());
    }
}
