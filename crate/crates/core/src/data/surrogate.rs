//! Seeded surrogate booking records with planted dependencies.
//!
//! Law per row (`B` = business trip, probability 0.30):
//!
//! | column | business | leisure |
//! |---|---|---|
//! | PurchaseAnticipation | round(Exp(mean 7)) ∧ [0,364] | round(Exp(mean 45)) ∧ [0,364] |
//! | StayDuration | Poisson(2) ∧ [0,90] | Poisson(10) ∧ [0,90] |
//! | StaySaturday | Bernoulli(0.2) | Bernoulli(0.8) |
//! | Age | Normal(45, 10²) ∧ [0,99] | Normal(38, 16²) ∧ [0,99] |
//!
//! Independent of `B`: origin and destination uniform over [`COUNTRIES`]; office
//! country equals origin with probability 0.8, nationality equals origin with
//! probability 0.7 (otherwise uniform); passengers `1 + Binomial(8, 0.15)`;
//! children Bernoulli(0.15); gender Bernoulli(0.5). Age is missing with
//! probability 0.2 and gender with probability 0.1, independently.
//!
//! Ages are rounded to two decimals so that the values have a fixed decimal
//! resolution.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Exp, Normal, Poisson};

use super::dataset::{Cell, Dataset};
use super::schema::{ColumnSpec, Schema};
use crate::rng;

pub const COUNTRIES: [&str; 20] = [
    "FR", "DE", "ES", "IT", "GB", "US", "CA", "BR", "MX", "JP", "CN", "IN", "AU", "NL", "BE", "CH", "PT", "SE", "MA", "AE",
];

/// Column indices of [`pnr_schema`].
pub mod col {
    pub const ORIGIN: usize = 0;
    pub const DESTINATION: usize = 1;
    pub const OFFICE: usize = 2;
    pub const STAY_SATURDAY: usize = 3;
    pub const ANTICIPATION: usize = 4;
    pub const PASSENGERS: usize = 5;
    pub const STAY_DURATION: usize = 6;
    pub const GENDER: usize = 7;
    pub const CHILDREN: usize = 8;
    pub const AGE: usize = 9;
    pub const NATIONALITY: usize = 10;
    pub const BUSINESS: usize = 11;
}

/// The twelve booking features with their types and ranges, each mapped to a
/// message segment for the segment parser.
pub fn pnr_schema() -> Arc<Schema> {
    let columns = vec![
        ColumnSpec::categorical("CountryOrigin", &COUNTRIES, false).with_segment("ORG", 1),
        ColumnSpec::categorical("CountryDestination", &COUNTRIES, false).with_segment("DST", 1),
        ColumnSpec::categorical("CountryOfficeId", &COUNTRIES, false).with_segment("OFF", 1),
        ColumnSpec::binary("StaySaturday", ["0", "1"], false).with_segment("SAT", 1),
        ColumnSpec::numerical("PurchaseAnticipation", 0.0, 364.0, false).with_segment("ANT", 1),
        ColumnSpec::numerical("NumberPassengers", 1.0, 9.0, false).with_segment("PAX", 1),
        ColumnSpec::numerical("StayDuration", 0.0, 90.0, false).with_segment("STY", 1),
        ColumnSpec::binary("Gender", ["F", "M"], true).with_segment("GEN", 1),
        ColumnSpec::binary("PNRWithChildren", ["0", "1"], false).with_segment("CHD", 1),
        ColumnSpec::numerical("Age", 0.0, 99.0, true).with_segment("AGE", 1),
        ColumnSpec::categorical("Nationality", &COUNTRIES, false).with_segment("NAT", 1),
        ColumnSpec::binary("BusinessLeisure", ["0", "1"], false).with_segment("SEG", 1),
    ];
    Arc::new(Schema::new(columns).expect("built-in schema is valid"))
}

struct Segment {
    anticipation: Exp<f64>,
    stay: Poisson<f64>,
    saturday: f64,
    age: Normal<f64>,
}

impl Segment {
    fn new(anticipation_mean: f64, stay_mean: f64, saturday: f64, age_mean: f64, age_sd: f64) -> Self {
        Segment {
            anticipation: Exp::new(1.0 / anticipation_mean).unwrap(),
            stay: Poisson::new(stay_mean).unwrap(),
            saturday,
            age: Normal::new(age_mean, age_sd).unwrap(),
        }
    }
}

/// `n` surrogate rows under [`pnr_schema`]; identical output for identical `(n, seed)`.
pub fn make_surrogate(n: usize, seed: u64) -> Dataset {
    let schema = pnr_schema();
    let business = Segment::new(7.0, 2.0, 0.2, 45.0, 10.0);
    let leisure = Segment::new(45.0, 10.0, 0.8, 38.0, 16.0);
    let passengers = Binomial::new(8, 0.15).unwrap();
    let k = COUNTRIES.len() as u32;

    let mut r = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let is_business = r.random_bool(0.30);
        let seg = if is_business { &business } else { &leisure };
        let anticipation = libm::round(seg.anticipation.sample(&mut r)).clamp(0.0, 364.0);
        let stay = seg.stay.sample(&mut r).clamp(0.0, 90.0);
        let saturday = r.random_bool(seg.saturday);
        let age = libm::round(seg.age.sample(&mut r).clamp(0.0, 99.0) * 100.0) / 100.0;
        let origin = r.random_range(0..k);
        let destination = r.random_range(0..k);
        let office_draw = r.random_range(0..k);
        let office = if r.random_bool(0.8) { origin } else { office_draw };
        let nationality_draw = r.random_range(0..k);
        let nationality = if r.random_bool(0.7) { origin } else { nationality_draw };
        let pax = 1.0 + passengers.sample(&mut r) as f64;
        let children = r.random_bool(0.15);
        let gender = r.random_bool(0.5);
        let age_missing = r.random_bool(0.2);
        let gender_missing = r.random_bool(0.1);

        rows.push(vec![
            Cell::Categorical(origin),
            Cell::Categorical(destination),
            Cell::Categorical(office),
            Cell::Categorical(saturday as u32),
            Cell::Numeric(anticipation),
            Cell::Numeric(pax),
            Cell::Numeric(stay),
            if gender_missing { Cell::Missing } else { Cell::Categorical(gender as u32) },
            Cell::Categorical(children as u32),
            if age_missing { Cell::Missing } else { Cell::Numeric(age) },
            Cell::Categorical(nationality),
            Cell::Categorical(is_business as u32),
        ]);
    }
    Dataset::from_rows(schema, rows).expect("surrogate rows satisfy the schema")
}

#[cfg(test)]
mod tests {
    use super::col::*;
    use super::*;

    #[test]
    fn empty_and_deterministic() {
        assert_eq!(make_surrogate(0, 3).n_rows(), 0);
        assert_eq!(make_surrogate(200, 11), make_surrogate(200, 11));
        assert_ne!(make_surrogate(200, 11), make_surrogate(200, 12));
    }

    /// Empirical rates of the planted Bernoulli parameters stay within 3 sigma.
    #[test]
    fn planted_rates_within_three_sigma() {
        let n = 100_000;
        let d = make_surrogate(n, 2024);
        let within = |count: usize, total: usize, p: f64| {
            let rate = count as f64 / total as f64;
            let sigma = libm::sqrt(p * (1.0 - p) / total as f64);
            assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate} vs {p} (n={total})");
        };
        let business: Vec<bool> = d.column(BUSINESS).map(|c| c.as_level() == Some(1)).collect();
        let nb = business.iter().filter(|b| **b).count();
        within(nb, n, 0.30);
        within(d.column(AGE).filter(|c| c.is_missing()).count(), n, 0.2);
        within(d.column(GENDER).filter(|c| c.is_missing()).count(), n, 0.1);
        within(d.column(CHILDREN).filter(|c| c.as_level() == Some(1)).count(), n, 0.15);

        let sat_business = d.rows().zip(&business).filter(|(r, b)| **b && r[STAY_SATURDAY].as_level() == Some(1)).count();
        within(sat_business, nb, 0.2);
        let sat_leisure = d.rows().zip(&business).filter(|(r, b)| !**b && r[STAY_SATURDAY].as_level() == Some(1)).count();
        within(sat_leisure, n - nb, 0.8);

        // nationality == origin: 0.7 + 0.3/20
        let same = d.rows().filter(|r| r[NATIONALITY] == r[ORIGIN]).count();
        within(same, n, 0.7 + 0.3 / 20.0);
        let office = d.rows().filter(|r| r[OFFICE] == r[ORIGIN]).count();
        within(office, n, 0.8 + 0.2 / 20.0);

        // mean stay duration per segment: Poisson standard error sqrt(mean / n)
        let mean_stay = |want_business: bool| {
            let v: Vec<f64> = d
                .rows()
                .zip(&business)
                .filter(|(_, b)| **b == want_business)
                .map(|(r, _)| r[STAY_DURATION].as_f64().unwrap())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((mean_stay(true) - 2.0).abs() <= 3.0 * libm::sqrt(2.0 / nb as f64));
        assert!((mean_stay(false) - 10.0).abs() <= 3.0 * libm::sqrt(10.0 / (n - nb) as f64));
    }

    #[test]
    fn values_respect_table_ranges() {
        let d = make_surrogate(5000, 5);
        for r in d.rows() {
            let pax = r[PASSENGERS].as_f64().unwrap();
            assert!((1.0..=9.0).contains(&pax) && pax.fract() == 0.0);
            assert!(r[ANTICIPATION].as_f64().unwrap().fract() == 0.0);
        }
    }
}
