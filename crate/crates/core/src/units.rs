//! dB / linear conversions. Powers use factor 10, field magnitudes factor 20.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(15.0) - 0.031623).abs() < 1e-6);
        assert_eq!(dbm_to_watts(f64::NEG_INFINITY), 0.0);
        assert!((watts_to_dbm(dbm_to_watts(-7.5)) + 7.5).abs() < 1e-12);
        assert!((db_to_linear(1.7) - 1.4791).abs() < 1e-4);
        assert_eq!(linear_to_db(100.0), 20.0);
    }
}
