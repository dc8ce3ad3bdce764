//! Column schemas and the number format shared by every data file.

use serde::Serialize;

/// A named, versioned column set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl Schema {
    pub fn id(&self) -> String {
        format!("{}/v{}", self.name, self.version)
    }
}

pub const FI_SERIES: Schema = Schema { name: "fi_series", version: 1, columns: &["t", "value", "flagged"] };
pub const PHASE_DIAGRAM: Schema = Schema {
    name: "phase_diagram",
    version: 1,
    columns: &["theta1_over_pi", "theta2_over_pi", "winding", "min_gap", "status"],
};
pub const SPECTRUM: Schema =
    Schema { name: "spectrum", version: 1, columns: &["index", "quasi_energy", "ipr", "is_localized"] };
pub const POSTERIOR: Schema = Schema { name: "posterior", version: 1, columns: &["t", "theta02_over_pi", "weight"] };
pub const ESTIMATION: Schema = Schema { name: "estimation", version: 1, columns: &["t", "M", "m", "msre"] };
pub const ENSEMBLE: Schema = Schema { name: "ensemble", version: 1, columns: &["t", "mean", "std", "n_realizations"] };
pub const SURFACE_THETA1: Schema =
    Schema { name: "fi_surface", version: 1, columns: &["theta1_over_pi", "t", "value", "flagged"] };
pub const SURFACE_THETA02: Schema =
    Schema { name: "fi_surface", version: 1, columns: &["theta02_over_pi", "t", "value", "flagged"] };

/// Shortest decimal string that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Integral times print without a fractional part.
pub fn time(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 9.0e15 {
        format!("{}", t as i64)
    } else {
        float(t)
    }
}

pub fn write_csv(schema: &Schema, rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(schema.columns).expect("in-memory write");
    for r in rows {
        debug_assert_eq!(r.len(), schema.columns.len());
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable record");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.0] {
            assert_eq!(float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(time(40.0), "40");
        assert_eq!(time(12.5), "12.5");
    }

    #[test]
    fn header_is_exact() {
        let bytes = write_csv(&ESTIMATION, &[vec!["20".into(), "1000".into(), "7".into(), float(0.5)]]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "t,M,m,msre\n20,1000,7,0.5\n");
    }
}
